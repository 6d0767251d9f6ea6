//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so every criterion reports even when an earlier one fails.

// negated comparisons are deliberate: a NaN must fail a check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use ghz_repeater::analyzer::{
    analyzer_response, check_click_table, classify_clicks, estimate_error_rates,
    exact_projection_success, ghz_projection_success,
};
use ghz_repeater::channel::{fiber_transmittance, total_gain, ChannelParams};
use ghz_repeater::multiplexing::{asymptotic_gap, expected_groups_exact, grouping_efficiency, MultiplexConfig};
use ghz_repeater::optics::{DetectorModel, ModeLabel, Occupation, PhotonicState};
use ghz_repeater::yields::{cutoff_distance, sweep, Cutoff, YieldMode};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn table_reproduction() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in 2..=6 {
        let check = check_click_table(n).map_err(|e| e.to_string())?;
        for c in [&check.plus, &check.minus] {
            worst = worst.max(c.wrong_prob);
            ensure!(c.wrong_prob <= 1e-12, "n={n} sign {}: wrong-class probability {}", c.sign, c.wrong_prob);
            ensure!((c.correct_prob - 1.0).abs() <= 1e-12, "n={n} sign {}: own-class probability {}", c.sign, c.correct_prob);
        }
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("n = 2..6, max wrong-class probability {worst:.1e}"))
}

/// Average success over all 2^n polarization strings of a product input,
/// which equals the ideal Bell-half success, by state-vector enumeration.
fn enumerated_success(n: usize) -> f64 {
    let mut total = 0.0;
    for bits in 0u32..(1 << n) {
        let modes: Vec<(ModeLabel, u8)> = (0..n)
            .map(|j| (if bits >> j & 1 == 0 { ModeLabel::h(j) } else { ModeLabel::v(j) }, 1))
            .collect();
        let input = PhotonicState::basis(Occupation::from_modes(n, &modes).unwrap());
        total += analyzer_response(&input, n)
            .unwrap()
            .iter()
            .filter(|(p, _)| classify_clicks(p, n).is_success())
            .map(|(_, p)| p)
            .sum::<f64>();
    }
    total / (1u32 << n) as f64
}

fn ideal_projection() -> Outcome {
    let start = Instant::now();
    let det = DetectorModel::ideal();
    let mut worst_sigma = 0.0f64;
    for n in 2..=6 {
        let target = 2f64.powi(1 - n as i32);
        let enumerated = enumerated_success(n);
        // the enumeration sums 1/sqrt(2) amplitudes, so it is only exact up to rounding
        ensure!((enumerated - target).abs() <= 1e-14, "n={n}: enumeration gives {enumerated}, expected {target}");
        let exact = exact_projection_success(n, &det, 1.0).map_err(|e| e.to_string())?;
        ensure!(exact == target, "n={n}: closed form gives {exact}, expected {target}");
        let mc = ghz_projection_success(n, &det, 1.0, 100_000, 0xacce + n as u64).map_err(|e| e.to_string())?;
        let sigma = (mc.value - target).abs() / mc.std_err;
        worst_sigma = worst_sigma.max(sigma);
        ensure!(sigma <= 3.0, "n={n}: Monte Carlo {} ± {} is {sigma:.2} sigma from {target}", mc.value, mc.std_err);
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!("exact 2^(1-n) for n = 2..6, Monte Carlo within {worst_sigma:.2} sigma"))
}

fn asymptotic_multiplexing() -> Outcome {
    let start = Instant::now();
    let eta = 0.1;
    let gaps = asymptotic_gap(3, eta, &[1, 10, 100, 1000, 10_000]).map_err(|e| e.to_string())?;
    let q = eta - gaps.last().unwrap().1;
    let rel = (q - eta).abs() / eta;
    ensure!(rel <= 0.03, "|Q(1e4) - eta| / eta = {rel}");
    ensure!(gaps.windows(2).all(|w| w[1].1 < w[0].1), "gaps not strictly decreasing: {gaps:?}");
    within(Duration::from_secs(5), start)?;
    Ok(format!("Q(1e4) = {q:.6}, relative gap {:.2}%", rel * 100.0))
}

fn brute_force_groups(n: usize, m: usize, eta: f64) -> f64 {
    let photons = n * m;
    (0u64..(1 << photons))
        .map(|pattern| {
            let k = pattern.count_ones() as i32;
            let p = eta.powi(k) * (1.0 - eta).powi(photons as i32 - k);
            let groups = (0..n)
                .map(|u| ((pattern >> (u * m)) & ((1 << m) - 1)).count_ones())
                .min()
                .unwrap();
            p * groups as f64
        })
        .sum()
}

fn brute_force_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for m in 1..=4 {
        for eta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let cfg = MultiplexConfig::new(3, m as u64, eta).map_err(|e| e.to_string())?;
            let exact = expected_groups_exact(&cfg).map_err(|e| e.to_string())?;
            let diff = (exact - brute_force_groups(3, m, eta)).abs();
            worst = worst.max(diff);
            ensure!(diff <= 1e-12, "m={m} eta={eta}: difference {diff}");
        }
    }
    let q = grouping_efficiency(&MultiplexConfig::new(3, 2, 0.5).unwrap()).unwrap();
    ensure!((q - 0.21875).abs() <= 1e-12, "Q(n=3, eta=0.5, M=2) = {q}");
    Ok(format!("max difference {worst:.1e}, Q(3, 0.5, 2) = {q}"))
}

fn channel_formulas() -> Outcome {
    let e = fiber_transmittance(27.14, 27.14).map_err(|e| e.to_string())?;
    ensure!((e - (-1.0f64).exp()).abs() <= 1e-15, "fiber transmittance at one attenuation length: {e}");
    let params = ChannelParams::paper_2022();
    let eta_a = params.feedforward_transmittance().map_err(|e| e.to_string())?;
    ensure!((eta_a - 0.999506).abs() <= 1e-6, "eta_a = {eta_a}");
    let q_ghz = exact_projection_success(3, &params.detector, 1.0).map_err(|e| e.to_string())?;
    let log_gain = |l: f64| total_gain(&params.at_distance(l), q_ghz).map(f64::ln);
    let expected = -1.0 / 27.14;
    let mut worst = 0.0f64;
    let ls = [0.0, 10.0, 50.0, 123.0, 250.0, 400.0];
    let g0 = log_gain(0.0).map_err(|e| e.to_string())?;
    for &l in &ls[1..] {
        let s = (log_gain(l).map_err(|e| e.to_string())? - g0) / l;
        worst = worst.max((s - expected).abs());
    }
    ensure!(worst <= 1e-12, "slope deviation {worst}");
    Ok(format!("eta_a = {eta_a:.9}, max slope deviation {worst:.1e} per km"))
}

fn fit_decay(ls: &[f64], ds: &[f64]) -> f64 {
    let n = ls.len() as f64;
    let ys: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let mx = ls.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ls.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = ls.iter().map(|x| (x - mx).powi(2)).sum();
    -sxy / sxx
}

fn yield_curves() -> Outcome {
    let start = Instant::now();
    let params = ChannelParams::paper_2022();
    let users = [6, 12, 20];
    let err = |e: ghz_repeater::Error| e.to_string();

    // (a) slope invariance
    let fit_grid: Vec<f64> = (0..=28).map(|i| 10.0 + 5.0 * i as f64).collect();
    let mut decays = Vec::new();
    for &n in &users {
        let pts = sweep(&params, &[n], &fit_grid, YieldMode::Analytic).map_err(err)?;
        let ds: Vec<f64> = pts.iter().map(|p| p.d).collect();
        decays.push(fit_decay(&fit_grid, &ds));
    }
    let inv = 1.0 / params.l_att_km;
    let slope_ok = decays.iter().all(|d| (d - inv).abs() / inv <= 0.02);

    // (b) cutoff band
    let mut cutoffs = Vec::new();
    for &n in &users {
        cutoffs.push(cutoff_distance(&params, n, 0.5).map_err(err)?);
    }
    let in_band = cutoffs
        .iter()
        .all(|c| matches!(c, Cutoff::Distance(l) if (200.0..=300.0).contains(l)));

    // (c) vertical offsets
    let grid: Vec<f64> = (0..=30).map(|i| 10.0 * i as f64).collect();
    let pts = sweep(&params, &users, &grid, YieldMode::Analytic).map_err(err)?;
    let mut ordered = true;
    for i in 0..grid.len() {
        let col: Vec<f64> = (0..users.len()).map(|c| pts[c * grid.len() + i].d).collect();
        ordered &= col.windows(2).all(|w| w[1] < w[0]);
    }
    within(Duration::from_secs(120), start)?;

    let fmt_cutoffs: Vec<String> = users
        .iter()
        .zip(&cutoffs)
        .map(|(n, c)| match c {
            Cutoff::Distance(l) => format!("n={n}: {l:.1} km"),
            Cutoff::Unbounded => format!("n={n}: unbounded"),
        })
        .collect();
    let detail = format!(
        "(a) decay constants {:?} vs {inv:.6} {}; (b) cutoffs {} {}; (c) ordering {}",
        decays.iter().map(|d| format!("{d:.6}")).collect::<Vec<_>>(),
        if slope_ok { "ok" } else { "FAIL" },
        fmt_cutoffs.join(", "),
        if in_band { "ok" } else { "outside [200, 300] km: FAIL" },
        if ordered { "ok" } else { "FAIL" },
    );
    if slope_ok && in_band && ordered {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn error_model_sanity() -> Outcome {
    let err = |e: ghz_repeater::Error| e.to_string();
    let clean = DetectorModel::new(0.93, 0.0).unwrap();
    let est = estimate_error_rates(3, &clean, 1.0, 600_000, 71).map_err(err)?;
    ensure!(est.successes >= 100_000, "only {} successful swaps", est.successes);
    ensure!(
        est.rates.e_b.iter().all(|&e| e == 0.0) && est.rates.e_p == 0.0,
        "noiseless rates {:?}",
        est.rates
    );
    let blind = DetectorModel::new(0.0, 0.5).unwrap();
    let noisy = estimate_error_rates(3, &blind, 0.5, 400_000, 72).map_err(err)?;
    for (k, (&e, &se)) in noisy.rates.e_b.iter().zip(&noisy.e_b_std_err).enumerate() {
        ensure!((e - 0.5).abs() <= 3.0 * se, "e_b[{k}] = {e} ± {se}");
    }
    ensure!(
        (noisy.rates.e_p - 0.5).abs() <= 3.0 * noisy.e_p_std_err,
        "e_p = {} ± {}",
        noisy.rates.e_p,
        noisy.e_p_std_err
    );
    Ok(format!(
        "{} clean swaps with zero errors; pure noise e_p = {:.4} ± {:.4}",
        est.successes, noisy.rates.e_p, noisy.e_p_std_err
    ))
}

fn sweep_bytes(extra: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ghz-repeater"))
        .env_remove(ghz_repeater::cli::PRESET_DIR_ENV)
        .arg("sweep")
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "sweep failed: {}", String::from_utf8_lossy(&out.stderr));
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let analytic = ["--n-users", "6,12,20", "--distance", "0:300:10", "--seed", "5"];
    let mc = [
        "--n-users", "3,4", "--distance", "0:60:30", "--mode", "monte-carlo", "--trials", "20000",
        "--m", "16", "--seed", "5",
    ];
    for args in [&analytic[..], &mc[..]] {
        let with = |threads: &str| {
            let mut a = args.to_vec();
            a.extend(["--threads", threads]);
            sweep_bytes(&a)
        };
        let first = with("8")?;
        ensure!(first == with("8")?, "repeated run differs for {args:?}");
        ensure!(first == with("1")?, "1-thread run differs for {args:?}");
    }
    Ok("analytic and monte-carlo sweeps byte-identical across runs and 1 vs 8 threads".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 click-table reproduction", table_reproduction),
        ("2 ideal projection probability", ideal_projection),
        ("3 asymptotic multiplexing", asymptotic_multiplexing),
        ("4 brute-force grouping oracle", brute_force_equivalence),
        ("5 channel formulas", channel_formulas),
        ("6 yield curves", yield_curves),
        ("7 error-model sanity", error_model_sanity),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({took:.2?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({took:.2?}): {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
