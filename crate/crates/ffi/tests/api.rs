use std::ffi::{CStr, CString};
use std::ptr;

use ghz_repeater_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(gr_last_error_message()) }.to_string_lossy().into_owned()
}

fn paper_channel() -> *mut GrChannel {
    let name = CString::new("paper-2022").unwrap();
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { gr_channel_new_preset(name.as_ptr(), &mut ch) }, GrStatus::Ok);
    assert!(!ch.is_null());
    ch
}

#[test]
fn scalar_functions() {
    let mut t = 0.0;
    assert_eq!(unsafe { gr_fiber_transmittance(27.14, 27.14, &mut t) }, GrStatus::Ok);
    assert!((t - (-1.0f64).exp()).abs() <= 1e-15);

    let mut groups = 0.0;
    assert_eq!(unsafe { gr_expected_groups_exact(3, 2, 0.5, &mut groups) }, GrStatus::Ok);
    assert!((groups - 0.4375).abs() < 1e-12);

    assert_eq!(unsafe { gr_fiber_transmittance(-1.0, 27.14, &mut t) }, GrStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { gr_fiber_transmittance(1.0, 27.14, ptr::null_mut()) }, GrStatus::NullPointer);
    assert!(last_error().contains("out"));
}

#[test]
fn click_classification() {
    // H at every port of a 3-port analyzer: no V clicks, n odd
    let all_h = [0u32, 2, 4];
    let one_v = [1u32, 2, 4];
    let bunched = [0u32, 0, 2];
    let mut sign = 7;
    unsafe {
        assert_eq!(gr_classify_clicks(3, all_h.as_ptr(), 3, &mut sign), GrStatus::Ok);
        assert_eq!(sign, 1);
        assert_eq!(gr_classify_clicks(3, one_v.as_ptr(), 3, &mut sign), GrStatus::Ok);
        assert_eq!(sign, -1);
        assert_eq!(gr_classify_clicks(3, bunched.as_ptr(), 3, &mut sign), GrStatus::Ok);
        assert_eq!(sign, 0);
        assert_eq!(gr_classify_clicks(3, ptr::null(), 3, &mut sign), GrStatus::NullPointer);
    }
}

#[test]
fn channel_handle_round_trip() {
    let ch = paper_channel();
    unsafe {
        assert_eq!(gr_channel_set_distance(ch, 50.0), GrStatus::Ok);
        let mut gain = 0.0;
        assert_eq!(gr_total_gain(ch, 0.25, &mut gain), GrStatus::Ok);
        assert!(gain > 0.0 && gain < 0.25);

        let mut p = GrYieldPoint::default();
        assert_eq!(gr_yield_analytic(ch, 6, &mut p), GrStatus::Ok);
        assert_eq!(p.l_km, 50.0);
        assert_eq!(p.n_users, 6);
        assert!(p.yield_ > 0.0 && p.yield_ <= p.q);

        let mut cutoff = 0.0;
        assert_eq!(gr_cutoff_distance(ch, 6, 0.5, &mut cutoff), GrStatus::Ok);
        assert!(cutoff.is_finite() && cutoff > 100.0);

        assert_eq!(gr_channel_set_detector(ch, 0.93, 0.0), GrStatus::Ok);
        assert_eq!(gr_cutoff_distance(ch, 6, 0.5, &mut cutoff), GrStatus::Ok);
        assert!(cutoff.is_infinite());

        assert_eq!(gr_channel_set_detector(ch, 1.5, 0.0), GrStatus::InvalidArgument);
        assert_eq!(gr_channel_set_distance(ch, f64::NAN), GrStatus::InvalidArgument);
        gr_channel_free(ch);
        gr_channel_free(ptr::null_mut());
    }
}

#[test]
fn unknown_preset_is_rejected() {
    let name = CString::new("nope").unwrap();
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { gr_channel_new_preset(name.as_ptr(), &mut ch) }, GrStatus::InvalidArgument);
    assert!(ch.is_null());
    assert!(last_error().contains("nope"));
}

#[test]
fn sweep_matches_library_and_writes_csv() {
    let ch = paper_channel();
    let ns = [6usize, 12];
    let ls = [0.0, 100.0, 200.0];
    let mut sweep = ptr::null_mut();
    unsafe {
        assert_eq!(gr_sweep_analytic(ch, ns.as_ptr(), 2, ls.as_ptr(), 3, &mut sweep), GrStatus::Ok);
        let mut len = 0;
        assert_eq!(gr_sweep_len(sweep, &mut len), GrStatus::Ok);
        assert_eq!(len, 6);

        let lib = ghz_repeater::yields::sweep(
            &ghz_repeater::channel::ChannelParams::paper_2022(),
            &ns,
            &ls,
            ghz_repeater::yields::YieldMode::Analytic,
        )
        .unwrap();
        for (i, want) in lib.iter().enumerate() {
            let mut p = GrYieldPoint::default();
            assert_eq!(gr_sweep_get(sweep, i, &mut p), GrStatus::Ok);
            assert_eq!((p.l_km, p.n_users, p.q, p.e_p, p.yield_), (want.l_km, want.n_users, want.q, want.e_p, want.d));
        }
        let mut p = GrYieldPoint::default();
        assert_eq!(gr_sweep_get(sweep, 6, &mut p), GrStatus::InvalidArgument);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(gr_sweep_write_csv(sweep, c_path.as_ptr()), GrStatus::Ok);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 7);

        let bad = CString::new("/nonexistent/dir/x.csv").unwrap();
        assert_eq!(gr_sweep_write_csv(sweep, bad.as_ptr()), GrStatus::Io);

        let descending = [10.0, 0.0];
        let mut other = ptr::null_mut();
        assert_eq!(
            gr_sweep_analytic(ch, ns.as_ptr(), 2, descending.as_ptr(), 2, &mut other),
            GrStatus::InvalidArgument
        );
        gr_sweep_free(sweep);
        gr_channel_free(ch);
    }
}
