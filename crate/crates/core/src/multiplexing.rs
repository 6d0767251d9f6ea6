//! Spatial multiplexing and grouping of surviving photons.
//!
//! Each of `n_users` users sends `m` photons per slot; each survives
//! independently with probability `eta`. The i-th surviving photon of every
//! user joins group i, so a slot forms `min_i K_i` groups where the `K_i` are
//! independent `Binomial(m, eta)`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::analyzer::{GhzOutcome, Swapper};
use crate::channel::ChannelParams;
use crate::error::check_probability;
use crate::mc::{stream_rng, Estimate};
use crate::optics::{measure_qubits, DetectorModel, QubitBasis};
use crate::{Error, Result};

/// Trials per RNG stream in the parallel estimators.
const CHUNK: u64 = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplexConfig {
    pub n_users: usize,
    /// Photons sent per user per slot.
    pub m: u64,
    /// Per-photon survival probability up to and including the arrival check.
    pub eta: f64,
}

impl MultiplexConfig {
    pub fn new(n_users: usize, m: u64, eta: f64) -> Result<Self> {
        let cfg = MultiplexConfig { n_users, m, eta };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Survival probability taken from the channel: fiber, feedforward and
    /// arrival check.
    pub fn from_channel(n_users: usize, m: u64, channel: &ChannelParams) -> Result<Self> {
        Self::new(n_users, m, channel.arrival_probability()?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 {
            return Err(Error::invalid(format!(
                "at least 2 users are needed, got {}",
                self.n_users
            )));
        }
        if self.m == 0 {
            return Err(Error::invalid("multiplexing number must be at least 1"));
        }
        check_probability("eta", self.eta)
    }

    /// Whether `m < ceil(1/eta)`, i.e. too few photons to expect one survivor.
    pub fn is_undersized(&self) -> bool {
        if self.eta <= 0.0 {
            return true;
        }
        (self.m as f64) < (1.0 / self.eta).ceil()
    }
}

/// Survivor counts of one slot and the number of groups they form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupingOutcome {
    pub survivors: Vec<u64>,
    pub n_groups: u64,
}

impl GroupingOutcome {
    pub fn from_survivors(survivors: Vec<u64>) -> Self {
        let n_groups = survivors.iter().copied().min().unwrap_or(0);
        GroupingOutcome {
            survivors,
            n_groups,
        }
    }

    pub fn failed(&self) -> bool {
        self.n_groups == 0
    }
}

/// `P(K >= k)` for `k = 0..=m`, plus a trailing zero for `k = m + 1`.
///
/// The pmf comes from a log-space recursion; each tail is accumulated from
/// whichever side is small so that neither side loses precision to
/// cancellation.
fn survival_tails(m: u64, eta: f64) -> Vec<f64> {
    let len = m as usize + 1;
    let mut tails = vec![0.0; len + 1];
    if eta <= 0.0 {
        tails[0] = 1.0;
        return tails;
    }
    if eta >= 1.0 {
        tails[..len].iter_mut().for_each(|t| *t = 1.0);
        return tails;
    }
    let log_odds = eta.ln() - (-eta).ln_1p();
    let mut ln_pmf = Vec::with_capacity(len);
    let mut cur = m as f64 * (-eta).ln_1p();
    ln_pmf.push(cur);
    for k in 0..m {
        cur += ((m - k) as f64).ln() - ((k + 1) as f64).ln() + log_odds;
        ln_pmf.push(cur);
    }
    let pmf: Vec<f64> = ln_pmf.iter().map(|l| l.exp()).collect();

    let mut upper = vec![0.0; len + 1];
    for k in (0..len).rev() {
        upper[k] = upper[k + 1] + pmf[k];
    }
    // lower[k] = P(K <= k - 1)
    let mut lower = vec![0.0; len + 1];
    for k in 1..=len {
        lower[k] = lower[k - 1] + pmf[k - 1];
    }
    for k in 0..len {
        tails[k] = if upper[k] <= 0.5 {
            upper[k]
        } else {
            1.0 - lower[k]
        };
    }
    tails
}

/// Exact `E[min_i K_i] = sum_{k=1..m} P(K >= k)^n`.
pub fn expected_groups_exact(cfg: &MultiplexConfig) -> Result<f64> {
    cfg.validate()?;
    let tails = survival_tails(cfg.m, cfg.eta);
    Ok(tails[1..=cfg.m as usize]
        .iter()
        .map(|t| t.powi(cfg.n_users as i32))
        .sum())
}

/// Grouping efficiency `Q(M) = N / M`.
pub fn grouping_efficiency(cfg: &MultiplexConfig) -> Result<f64> {
    Ok(expected_groups_exact(cfg)? / cfg.m as f64)
}

/// Exact law of the group count: entry k is `P(min_i K_i = k)`.
pub fn group_count_distribution(cfg: &MultiplexConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let tails = survival_tails(cfg.m, cfg.eta);
    let n = cfg.n_users as i32;
    Ok((0..=cfg.m as usize)
        .map(|k| (tails[k].powi(n) - tails[k + 1].powi(n)).max(0.0))
        .collect())
}

fn sample_survivors<R: Rng + ?Sized>(cfg: &MultiplexConfig, rng: &mut R) -> Result<Vec<u64>> {
    let binomial = Binomial::new(cfg.m, cfg.eta).map_err(|e| Error::invalid(e.to_string()))?;
    Ok((0..cfg.n_users).map(|_| binomial.sample(rng)).collect())
}

/// Monte Carlo estimate of the mean group count.
pub fn expected_groups_mc(cfg: &MultiplexConfig, trials: u64, seed: u64) -> Result<Estimate> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let chunks = trials.div_ceil(CHUNK);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(u128, u128)> {
            let mut rng = stream_rng(seed, c);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut acc = (0u128, 0u128);
            for _ in 0..count {
                let g = sample_survivors(cfg, &mut rng)?.into_iter().min().unwrap_or(0) as u128;
                acc.0 += g;
                acc.1 += g * g;
            }
            Ok(acc)
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let t = trials as f64;
    let mean = sum as f64 / t;
    let var = if trials > 1 {
        ((sum_sq as f64 - t * mean * mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        value: mean,
        std_err: (var / t).sqrt(),
    })
}

/// `eta - Q(M)` for each M in `m_list`, which must be ascending.
pub fn asymptotic_gap(n_users: usize, eta: f64, m_list: &[u64]) -> Result<Vec<(u64, f64)>> {
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("multiplexing numbers must be strictly ascending"));
    }
    m_list
        .iter()
        .map(|&m| {
            let q = grouping_efficiency(&MultiplexConfig::new(n_users, m, eta)?)?;
            Ok((m, eta - q))
        })
        .collect()
}

/// Announced result and retained-qubit readout of one group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupRecord {
    pub outcome: GhzOutcome,
    pub phase_flip_applied: bool,
    /// Basis and per-qubit outcomes (+1/-1) of the retained qubits after a
    /// heralded success.
    pub readout: Option<(QubitBasis, Vec<i8>)>,
}

/// One slot of the full protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub grouping: GroupingOutcome,
    pub groups: Vec<GroupRecord>,
}

impl TrialRecord {
    /// A slot fails when some user has no surviving photon.
    pub fn failed(&self) -> bool {
        self.grouping.failed()
    }

    pub fn successes(&self) -> usize {
        self.groups.iter().filter(|g| g.outcome.is_success()).count()
    }
}

/// Runs one slot: samples survivors, forms groups by rank and swaps each group.
/// Every retained GHZ state is read out in a basis chosen uniformly at random.
///
/// `swapper` handles the analyzer stage for groups whose arrival was confirmed,
/// so it must be built for `cfg.n_users`.
pub fn simulate_trial<R: Rng + ?Sized>(
    cfg: &MultiplexConfig,
    swapper: &Swapper,
    det: &DetectorModel,
    rng: &mut R,
) -> Result<TrialRecord> {
    cfg.validate()?;
    if swapper.n() != cfg.n_users {
        return Err(Error::invalid(format!(
            "swapper is built for {} users but the slot has {}",
            swapper.n(),
            cfg.n_users
        )));
    }
    let grouping = GroupingOutcome::from_survivors(sample_survivors(cfg, rng)?);
    let mut groups = Vec::with_capacity(grouping.n_groups as usize);
    for _ in 0..grouping.n_groups {
        let r = swapper.swap(det, rng)?;
        let readout = match &r.retained_state {
            Some(state) => {
                let basis = if rng.random::<bool>() {
                    QubitBasis::Z
                } else {
                    QubitBasis::X
                };
                Some((basis, measure_qubits(state, basis, rng)?))
            }
            None => None,
        };
        groups.push(GroupRecord {
            outcome: r.outcome,
            phase_flip_applied: r.phase_flip_applied,
            readout,
        });
    }
    Ok(TrialRecord { grouping, groups })
}
