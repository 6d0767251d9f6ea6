//! Distillable yield per channel use, distance sweeps and cutoff search.
//!
//! The yield of a heralded n-user GHZ source with gain Q under multiparty
//! hashing is `D = Q * max(0, 1 - max_i h(e_b_i) - h(e_p))`.
//!
//! In the analytic model the heralding probability is taken for photons whose
//! arrival has been confirmed, while error rates are evaluated for photons
//! surviving with the full per-photon arrival probability. A dark count on an
//! empty output then looks exactly like a lost photon that was never
//! filtered, which is what sets the range of the scheme.

use rayon::prelude::*;

use crate::analyzer::{estimate_error_rates, exact_error_rates, exact_projection_success, Swapper};
use crate::channel::{total_gain, ChannelParams};
use crate::error::check_probability;
use crate::mc::{derive_seed, stream_rng, Estimate};
use crate::multiplexing::{grouping_efficiency, simulate_trial, MultiplexConfig};
use crate::{Error, Result};

/// Distances beyond this are treated as "no cutoff" by [`cutoff_distance`].
pub const MAX_SEARCH_KM: f64 = 10_000.0;

/// Trials per RNG stream when simulating slots.
const SLOTS_PER_STREAM: u64 = 1 << 10;

/// `-x log2 x - (1-x) log2 (1-x)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_probability("entropy argument", x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-(x * x.log2()) - (1.0 - x) * (-x).ln_1p() / std::f64::consts::LN_2)
}

/// Hashing yield per heralded state, clamped at zero.
pub fn hashing_yield(e_b: &[f64], e_p: f64) -> Result<f64> {
    if e_b.is_empty() {
        return Err(Error::invalid("at least one bit error rate is needed"));
    }
    let mut worst = 0.0f64;
    for &e in e_b {
        worst = worst.max(binary_entropy(e)?);
    }
    Ok((1.0 - worst - binary_entropy(e_p)?).max(0.0))
}

/// Monte Carlo uncertainty attached to a [`YieldPoint`].
#[derive(Clone, Debug, PartialEq)]
pub struct McStats {
    pub q_std_err: f64,
    pub e_b_std_err: Vec<f64>,
    pub e_p_std_err: f64,
    /// Heralded swaps used for the error rates.
    pub successes: u64,
    /// Multiplexing number of the simulated slots.
    pub m: u64,
    /// `Q(M) / eta`: ratio of the finite-M gain to the asymptotic one.
    pub finite_m_factor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct YieldPoint {
    pub l_km: f64,
    pub n_users: usize,
    pub q: f64,
    pub e_b: Vec<f64>,
    pub e_p: f64,
    pub d: f64,
    pub mc: Option<McStats>,
}

impl YieldPoint {
    pub fn e_b_max(&self) -> f64 {
        self.e_b.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McBudget {
    /// Simulated slots for the gain and swaps for the error rates.
    pub trials: u64,
    /// Photons sent per user per slot.
    pub m: u64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YieldMode {
    Analytic,
    MonteCarlo(McBudget),
}

/// Yield at `params.distance_km` for `n_users` users.
pub fn yield_at(params: &ChannelParams, n_users: usize, mode: YieldMode) -> Result<YieldPoint> {
    params.validate()?;
    let det = params.detector;
    let arrival = params.arrival_probability()?;
    match mode {
        YieldMode::Analytic => {
            let q = total_gain(params, exact_projection_success(n_users, &det, 1.0)?)?;
            let rates = exact_error_rates(n_users, &det, arrival)?;
            let d = q * hashing_yield(&rates.e_b, rates.e_p)?;
            Ok(YieldPoint {
                l_km: params.distance_km,
                n_users,
                q,
                e_b: rates.e_b,
                e_p: rates.e_p,
                d,
                mc: None,
            })
        }
        YieldMode::MonteCarlo(budget) => monte_carlo_point(params, n_users, arrival, budget),
    }
}

fn monte_carlo_point(
    params: &ChannelParams,
    n_users: usize,
    arrival: f64,
    budget: McBudget,
) -> Result<YieldPoint> {
    if budget.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let det = params.detector;
    let cfg = MultiplexConfig::new(n_users, budget.m, arrival)?;
    let swapper = Swapper::new(n_users)?;
    let slot_seed = derive_seed(budget.seed, &[0]);
    let streams = budget.trials.div_ceil(SLOTS_PER_STREAM);
    let (sum, sum_sq) = (0..streams)
        .into_par_iter()
        .map(|s| -> Result<(u128, u128)> {
            let mut rng = stream_rng(slot_seed, s);
            let count = SLOTS_PER_STREAM.min(budget.trials - s * SLOTS_PER_STREAM);
            let mut acc = (0u128, 0u128);
            for _ in 0..count {
                let k = simulate_trial(&cfg, &swapper, &det, &mut rng)?.successes() as u128;
                acc.0 += k;
                acc.1 += k * k;
            }
            Ok(acc)
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;

    let t = budget.trials as f64;
    let mean = sum as f64 / t;
    let var = if budget.trials > 1 {
        ((sum_sq as f64 - t * mean * mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    let m = budget.m as f64;
    let q = Estimate {
        value: mean / m,
        std_err: (var / t).sqrt() / m,
    };

    let rates = estimate_error_rates(
        n_users,
        &det,
        arrival,
        budget.trials,
        derive_seed(budget.seed, &[1]),
    )?;
    let finite_m_factor = if arrival > 0.0 {
        grouping_efficiency(&cfg)? / arrival
    } else {
        0.0
    };
    let d = q.value * hashing_yield(&rates.rates.e_b, rates.rates.e_p)?;
    Ok(YieldPoint {
        l_km: params.distance_km,
        n_users,
        q: q.value,
        e_b: rates.rates.e_b,
        e_p: rates.rates.e_p,
        d,
        mc: Some(McStats {
            q_std_err: q.std_err,
            e_b_std_err: rates.e_b_std_err,
            e_p_std_err: rates.e_p_std_err,
            successes: rates.successes,
            m: budget.m,
            finite_m_factor,
        }),
    })
}

/// Yields for every `n` in `n_users` and every distance in `distances_km`,
/// ordered by `n` then distance. Monte Carlo points get independent seeds
/// derived from the budget seed and the point's position in the grid.
pub fn sweep(
    params: &ChannelParams,
    n_users: &[usize],
    distances_km: &[f64],
    mode: YieldMode,
) -> Result<Vec<YieldPoint>> {
    if distances_km.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("distance grid must be strictly ascending"));
    }
    let jobs: Vec<(usize, usize, f64)> = n_users
        .iter()
        .flat_map(|&n| distances_km.iter().enumerate().map(move |(i, &l)| (n, i, l)))
        .collect();
    jobs.into_par_iter()
        .map(|(n, i, l)| {
            let point_mode = match mode {
                YieldMode::Analytic => YieldMode::Analytic,
                YieldMode::MonteCarlo(b) => YieldMode::MonteCarlo(McBudget {
                    seed: derive_seed(b.seed, &[n as u64, i as u64]),
                    ..b
                }),
            };
            yield_at(&params.at_distance(l), n, point_mode)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cutoff {
    /// Largest distance with positive yield, within the requested tolerance.
    Distance(f64),
    /// The yield stays positive out to [`MAX_SEARCH_KM`].
    Unbounded,
}

/// Bisects the analytic yield for the largest distance with `d > 0`.
pub fn cutoff_distance(params: &ChannelParams, n_users: usize, tol_km: f64) -> Result<Cutoff> {
    if !(tol_km.is_finite() && tol_km > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol_km}")));
    }
    let positive = |l: f64| -> Result<bool> {
        Ok(yield_at(&params.at_distance(l), n_users, YieldMode::Analytic)?.d > 0.0)
    };
    if !positive(0.0)? {
        return Err(Error::NoPositiveYield);
    }
    if params.detector.dark_count_prob == 0.0 {
        return Ok(Cutoff::Unbounded);
    }
    let (mut lo, mut hi) = (0.0, 100.0);
    while positive(hi)? {
        if hi >= MAX_SEARCH_KM {
            return Ok(Cutoff::Unbounded);
        }
        lo = hi;
        hi = (hi * 2.0).min(MAX_SEARCH_KM);
    }
    while hi - lo > tol_km {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Cutoff::Distance(lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::DetectorModel;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // mpmath, 40 digits
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-15);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.01).is_err());
    }

    #[test]
    fn hashing_values() {
        assert_eq!(hashing_yield(&[0.0, 0.0], 0.0).unwrap(), 1.0);
        assert_eq!(hashing_yield(&[0.5, 0.0], 0.0).unwrap(), 0.0);
        assert_eq!(hashing_yield(&[0.0], 0.5).unwrap(), 0.0);
        let y = hashing_yield(&[0.01, 0.02], 0.03).unwrap();
        assert!((y - 0.664_167_599_626_603_2).abs() < 1e-14);
        assert!(hashing_yield(&[], 0.1).is_err());
    }

    #[test]
    fn ideal_yield_at_the_source() {
        let params = ChannelParams::preset("ideal").unwrap();
        let p = yield_at(&params, 3, YieldMode::Analytic).unwrap();
        assert!((p.d - 0.12493829821061192).abs() < 1e-15);
        assert_eq!(p.d, p.q);
    }

    #[test]
    fn ideal_detectors_have_no_cutoff() {
        let params = ChannelParams::preset("ideal").unwrap();
        assert_eq!(cutoff_distance(&params, 6, 1.0).unwrap(), Cutoff::Unbounded);
    }

    #[test]
    fn hopeless_detectors_have_no_positive_yield() {
        let params = ChannelParams {
            detector: DetectorModel::new(0.93, 0.2).unwrap(),
            ..ChannelParams::paper_2022()
        };
        assert!(matches!(cutoff_distance(&params, 6, 1.0), Err(Error::NoPositiveYield)));
        assert!(cutoff_distance(&ChannelParams::paper_2022(), 6, 0.0).is_err());
    }

    #[test]
    fn sweep_shape() {
        let params = ChannelParams::paper_2022();
        let pts = sweep(&params, &[3, 6], &[0.0, 50.0, 100.0], YieldMode::Analytic).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0].n_users, 3);
        assert_eq!(pts[3].n_users, 6);
        assert!(pts.iter().all(|p| p.d >= 0.0 && p.d <= p.q));
        assert!(sweep(&params, &[3], &[10.0, 5.0], YieldMode::Analytic).is_err());
    }
}
