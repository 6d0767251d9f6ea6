use ghz_repeater::analyzer::{
    analyzer_response, classify_clicks, estimate_error_rates, exact_error_rates,
    exact_projection_success, ghz_projection_success, GhzOutcome,
};
use ghz_repeater::optics::{make_ghz, DetectorModel, ModeLabel, Occupation, PhotonicState};

#[test]
fn ideal_projection_matches_enumeration() {
    for n in 2..=6 {
        let dist = analyzer_response(&make_ghz(n, 1).unwrap(), n).unwrap();
        let success: f64 = dist
            .iter()
            .filter(|(p, _)| classify_clicks(p, n).is_success())
            .map(|(_, p)| p)
            .sum();
        assert!((success - 1.0).abs() < 1e-12);
        let q = exact_projection_success(n, &DetectorModel::ideal(), 1.0).unwrap();
        assert_eq!(q, 2f64.powi(1 - n as i32));
        let mc = ghz_projection_success(n, &DetectorModel::ideal(), 1.0, 100_000, n as u64).unwrap();
        assert!(mc.agrees_with(q, 3.0), "n={n}: {mc:?} vs {q}");
    }
}

/// Success probability of an n-photon product input, averaged over all 2^n
/// polarization strings, by direct enumeration of the analyzer response.
fn enumerated_success(n: usize) -> f64 {
    let mut total = 0.0;
    for bits in 0u32..(1 << n) {
        let modes: Vec<(ModeLabel, u8)> = (0..n)
            .map(|j| {
                let label = if bits >> j & 1 == 0 { ModeLabel::h(j) } else { ModeLabel::v(j) };
                (label, 1)
            })
            .collect();
        let input = PhotonicState::basis(Occupation::from_modes(n, &modes).unwrap());
        let dist = analyzer_response(&input, n).unwrap();
        total += dist
            .iter()
            .filter(|(p, _)| classify_clicks(p, n).is_success())
            .map(|(_, p)| p)
            .sum::<f64>();
    }
    total / (1 << n) as f64
}

#[test]
fn ring_model_matches_state_vector_enumeration() {
    for n in 2..=5 {
        let exact = exact_projection_success(n, &DetectorModel::ideal(), 1.0).unwrap();
        assert!((exact - enumerated_success(n)).abs() < 1e-12);
    }
}

#[test]
fn noisy_projection_matches_monte_carlo() {
    let det = DetectorModel::new(0.8, 0.05).unwrap();
    for (n, t) in [(3, 0.7), (4, 0.4), (5, 1.0)] {
        let exact = exact_projection_success(n, &det, t).unwrap();
        let mc = ghz_projection_success(n, &det, t, 200_000, 40 + n as u64).unwrap();
        assert!(mc.agrees_with(exact, 3.5), "n={n} t={t}: {mc:?} vs {exact}");
    }
}

#[test]
fn noisy_error_rates_match_monte_carlo() {
    let det = DetectorModel::new(0.9, 0.02).unwrap();
    for (n, t) in [(3, 0.5), (4, 0.8)] {
        let exact = exact_error_rates(n, &det, t).unwrap();
        let est = estimate_error_rates(n, &det, t, 400_000, 7 + n as u64).unwrap();
        for (k, (&e, &se)) in est.rates.e_b.iter().zip(&est.e_b_std_err).enumerate() {
            assert!((e - exact.e_b[k]).abs() <= 3.5 * se, "n={n} e_b[{k}]: {e} ± {se} vs {}", exact.e_b[k]);
        }
        assert!(
            (est.rates.e_p - exact.e_p).abs() <= 3.5 * est.e_p_std_err,
            "n={n} e_p: {} ± {} vs {}",
            est.rates.e_p,
            est.e_p_std_err,
            exact.e_p
        );
        let q = exact_projection_success(n, &det, t).unwrap();
        assert!(est.success_prob.agrees_with(q, 3.5), "{:?} vs {q}", est.success_prob);
    }
}

#[test]
fn realistic_dark_counts_are_resolved_by_stratification() {
    // at p_d = 1e-6 plain sampling would almost never see a dark count
    let det = DetectorModel::new(0.93, 1e-6).unwrap();
    let t = 1e-3;
    let exact = exact_error_rates(3, &det, t).unwrap();
    let est = estimate_error_rates(3, &det, t, 600_000, 3).unwrap();
    assert!(exact.e_p > 1e-3);
    assert!(
        (est.rates.e_p - exact.e_p).abs() <= 3.5 * est.e_p_std_err,
        "{} ± {} vs {}",
        est.rates.e_p,
        est.e_p_std_err,
        exact.e_p
    );
    assert_eq!(est.strata[0].weight, 1.0);
    assert!(est.strata.iter().all(|s| s.arrivals + s.dark_counts >= 3));
    let q = exact_projection_success(3, &det, t).unwrap();
    assert!(est.success_prob.agrees_with(q, 3.5), "{:?} vs {q}", est.success_prob);
}

#[test]
fn product_inputs_are_never_misread_as_ghz_signs() {
    // HHV-type inputs fail; HHH is heralded with either sign
    let hhh = Occupation::from_modes(
        3,
        &[(ModeLabel::h(0), 1), (ModeLabel::h(1), 1), (ModeLabel::h(2), 1)],
    )
    .unwrap();
    let dist = analyzer_response(&PhotonicState::basis(hhh), 3).unwrap();
    let mut by_class = [0.0; 3];
    for (p, prob) in dist {
        let idx = match classify_clicks(&p, 3) {
            GhzOutcome::PhiPlus => 0,
            GhzOutcome::PhiMinus => 1,
            GhzOutcome::Failure => 2,
        };
        by_class[idx] += prob;
    }
    assert!((by_class[0] - 0.5).abs() < 1e-12);
    assert!((by_class[1] - 0.5).abs() < 1e-12);
    assert!(by_class[2].abs() < 1e-12);
}
