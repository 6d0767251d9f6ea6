use rand::Rng;
use rayon::prelude::*;

use super::swap::SwapEngine;
use crate::error::check_probability;
use crate::mc::{stream_rng, Estimate};
use crate::optics::{measure_qubits, DetectorId, DetectorModel, Polarization, QubitBasis};
use crate::{Error, Result};

/// Minimum number of claimed successes for an error-rate estimate.
pub const MIN_SUCCESSES: u64 = 100;

/// Strata are dropped, lightest first, while their combined weight stays
/// below this fraction of the total eligible weight.
const STRATUM_TAIL_CUTOFF: f64 = 1e-12;

/// Retained-qubit error rates after a heralded GHZ projection.
///
/// `e_b[i]` is the probability that user `i + 1` disagrees with user 0 in Z;
/// `e_p` is the probability that the product of X outcomes is -1 after the
/// Phi- correction.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRates {
    pub e_b: Vec<f64>,
    pub e_p: f64,
}

impl ErrorRates {
    pub fn e_b_max(&self) -> f64 {
        self.e_b.iter().copied().fold(0.0, f64::max)
    }

    pub fn zero(n: usize) -> Self {
        ErrorRates {
            e_b: vec![0.0; n.saturating_sub(1)],
            e_p: 0.0,
        }
    }
}

/// One stratum: exactly `arrivals` travel photons reach the analyzer and
/// exactly `dark_counts` detectors fire spuriously.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub arrivals: usize,
    pub dark_counts: usize,
    /// Probability of the stratum relative to the heaviest sampled one.
    pub weight: f64,
    pub trials: u64,
    pub successes: u64,
}

#[derive(Clone, Debug)]
pub struct ErrorRateEstimate {
    pub rates: ErrorRates,
    pub e_b_std_err: Vec<f64>,
    pub e_p_std_err: f64,
    /// Claimed-success probability per attempt.
    pub success_prob: Estimate,
    /// Raw number of claimed successes across all strata.
    pub successes: u64,
    pub strata: Vec<Stratum>,
}

#[derive(Default)]
struct Tally {
    trials: u64,
    successes: u64,
    bit_errors: Vec<u64>,
    phase_errors: u64,
}

impl Tally {
    fn new(n: usize) -> Self {
        Tally {
            bit_errors: vec![0; n - 1],
            ..Default::default()
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.successes += other.successes;
        self.phase_errors += other.phase_errors;
        for (a, b) in self.bit_errors.iter_mut().zip(other.bit_errors) {
            *a += b;
        }
        self
    }
}

fn ln_binomial_pmf(trials: usize, k: usize, p: f64) -> f64 {
    if (p == 0.0 && k > 0) || (p == 1.0 && k < trials) {
        return f64::NEG_INFINITY;
    }
    let ln_choose: f64 = (0..k)
        .map(|j| ((trials - j) as f64).ln() - ((j + 1) as f64).ln())
        .sum();
    let ln_p = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let ln_q = if k == trials { 0.0 } else { (trials - k) as f64 * (-p).ln_1p() };
    ln_choose + ln_p + ln_q
}

/// Strata worth sampling, as `(arrivals, dark_counts, ln_weight)`, heaviest
/// first. Every output needs a click, so strata with fewer than n photons
/// plus dark counts can never herald and are skipped exactly.
fn select_strata(n: usize, transmittance: f64, dark_count_prob: f64) -> Vec<(usize, usize, f64)> {
    let mut eligible: Vec<(usize, usize, f64)> = (0..=n)
        .flat_map(|a| (0..=2 * n).map(move |k| (a, k)))
        .filter(|&(a, k)| a + k >= n)
        .map(|(a, k)| {
            let ln_w = ln_binomial_pmf(n, a, transmittance) + ln_binomial_pmf(2 * n, k, dark_count_prob);
            (a, k, ln_w)
        })
        .filter(|s| s.2 > f64::NEG_INFINITY)
        .collect();
    eligible.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    let Some(&(_, _, ln_max)) = eligible.first() else {
        return eligible;
    };
    let relative: Vec<f64> = eligible.iter().map(|s| (s.2 - ln_max).exp()).collect();
    let total: f64 = relative.iter().sum();
    let mut dropped = 0.0;
    let mut keep = eligible.len();
    while keep > 1 && dropped + relative[keep - 1] <= STRATUM_TAIL_CUTOFF * total {
        dropped += relative[keep - 1];
        keep -= 1;
    }
    eligible.truncate(keep);
    eligible
}

/// Fate index with `arrivals` photons arrived at uniformly chosen inputs and
/// the rest lost with a uniformly random polarization.
fn choose_fates<R: Rng + ?Sized>(n: usize, arrivals: usize, rng: &mut R) -> usize {
    let arrived = choose_subset(n, arrivals, rng);
    let mut index = 0;
    let mut place = 1;
    for j in 0..n {
        let digit = if arrived.contains(&j) {
            0
        } else if rng.random::<bool>() {
            1
        } else {
            2
        };
        index += digit * place;
        place *= 3;
    }
    index
}

fn choose_subset<R: Rng + ?Sized>(size: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..size).collect();
    for i in 0..k {
        let j = rng.random_range(i..ids.len());
        ids.swap(i, j);
    }
    ids.truncate(k);
    ids
}

fn choose_dark_set<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<DetectorId> {
    choose_subset(2 * n, k, rng)
        .into_iter()
        .map(|d| DetectorId {
            port: d / 2,
            polarization: if d % 2 == 0 { Polarization::H } else { Polarization::V },
        })
        .collect()
}

/// Estimates retained-qubit error rates conditioned on a claimed GHZ
/// projection, for n travel halves of ideal Bell pairs each surviving with
/// `per_photon_transmittance`.
///
/// Heralds are rare at long range and dark counts are rarer still, so trials
/// are stratified on the number of arrived photons `a` and the number of dark
/// counts `k` among the 2n detectors. Each stratum gets an equal share of
/// `trials`, places its arrivals and dark counts uniformly, and is reweighted
/// by `Binomial(n, t) * Binomial(2n, p_d)`. Strata with `a + k < n` cannot
/// herald and are skipped; the lightest remaining strata are dropped while
/// their combined weight is below 1e-12 of the total.
pub fn estimate_error_rates(
    n: usize,
    det: &DetectorModel,
    per_photon_transmittance: f64,
    trials: u64,
    seed: u64,
) -> Result<ErrorRateEstimate> {
    det.validate()?;
    check_probability("transmittance", per_photon_transmittance)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let engine = SwapEngine::new(n, per_photon_transmittance)?;
    let strata = select_strata(n, per_photon_transmittance, det.dark_count_prob);
    if strata.is_empty() {
        return Err(Error::InsufficientStatistics {
            successes: 0,
            required: MIN_SUCCESSES,
        });
    }
    let per_stratum = (trials / strata.len() as u64).max(1);

    let mut tallies = Vec::with_capacity(strata.len());
    for (s, &(arrivals, dark_counts, _)) in strata.iter().enumerate() {
        let base = s as u64 * per_stratum;
        let tally = (0..per_stratum)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, base + i);
                let fates = choose_fates(n, arrivals, &mut rng);
                let dark = choose_dark_set(n, dark_counts, &mut rng);
                let result = engine.swap_in_sector(fates, det.efficiency, &dark, &mut rng)?;
                let mut t = Tally::new(n);
                t.trials = 1;
                if let Some(state) = result.retained_state {
                    t.successes = 1;
                    let z = measure_qubits(&state, QubitBasis::Z, &mut rng)?;
                    for (slot, &b) in t.bit_errors.iter_mut().zip(&z[1..]) {
                        *slot = (b != z[0]) as u64;
                    }
                    let x = measure_qubits(&state, QubitBasis::X, &mut rng)?;
                    let parity: i32 = x.iter().map(|&b| b as i32).product();
                    t.phase_errors = (parity < 0) as u64;
                }
                Ok(t)
            })
            .try_reduce(|| Tally::new(n), |a, b| Ok(a.merge(b)))?;
        tallies.push(tally);
    }

    let successes: u64 = tallies.iter().map(|t| t.successes).sum();
    if successes < MIN_SUCCESSES {
        return Err(Error::InsufficientStatistics {
            successes,
            required: MIN_SUCCESSES,
        });
    }

    // weights relative to the heaviest stratum; the absolute scale only
    // enters the success probability
    let ln_max = strata[0].2;
    let weights: Vec<f64> = strata.iter().map(|s| (s.2 - ln_max).exp()).collect();
    let freq = |t: &Tally, hits: u64| hits as f64 / t.trials as f64;
    let success: f64 = tallies
        .iter()
        .zip(&weights)
        .map(|(t, w)| w * freq(t, t.successes))
        .sum();
    let success_var: f64 = tallies
        .iter()
        .zip(&weights)
        .map(|(t, w)| {
            let s = freq(t, t.successes);
            w * w * s * (1.0 - s) / t.trials as f64
        })
        .sum();

    // ratio estimator E/S with a delta-method standard error
    let ratio = |hits: &dyn Fn(&Tally) -> u64| -> (f64, f64) {
        let joint: f64 = tallies
            .iter()
            .zip(&weights)
            .map(|(t, w)| w * freq(t, hits(t)))
            .sum();
        let r = joint / success;
        let var: f64 = tallies
            .iter()
            .zip(&weights)
            .map(|(t, w)| {
                let e = freq(t, hits(t));
                let s = freq(t, t.successes);
                let v = e * (1.0 - e) + r * r * s * (1.0 - s) - 2.0 * r * e * (1.0 - s);
                w * w * v.max(0.0) / t.trials as f64
            })
            .sum();
        (r, var.sqrt() / success)
    };

    let mut e_b = Vec::with_capacity(n - 1);
    let mut e_b_std_err = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let (r, se) = ratio(&|t: &Tally| t.bit_errors[i]);
        e_b.push(r);
        e_b_std_err.push(se);
    }
    let (e_p, e_p_std_err) = ratio(&|t: &Tally| t.phase_errors);

    let scale = ln_max.exp();
    Ok(ErrorRateEstimate {
        rates: ErrorRates { e_b, e_p },
        e_b_std_err,
        e_p_std_err,
        success_prob: Estimate {
            value: success * scale,
            std_err: success_var.sqrt() * scale,
        },
        successes,
        strata: strata
            .iter()
            .zip(&weights)
            .zip(&tallies)
            .map(|((&(arrivals, dark_counts, _), &weight), t)| Stratum {
                arrivals,
                dark_counts,
                weight,
                trials: t.trials,
                successes: t.successes,
            })
            .collect(),
    })
}
