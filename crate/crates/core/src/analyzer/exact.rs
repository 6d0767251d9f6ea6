//! Closed-form analyzer statistics for any n.
//!
//! The PBS chain sends an H photon from input `j` to output `j` and a V photon
//! from input `j` to output `j - 1` (input 0 wraps to output `n - 1`). Output
//! `j` therefore depends only on inputs `j` and `j + 1`, and the n outputs form
//! a ring. Each travel photon is lost (`L`), or arrives as `H` or `V` with equal
//! weight, so the success probability is the trace of the n-th power of a 3x3
//! transfer matrix.
//!
//! Retained-qubit statistics follow from the same ring:
//!
//! * Z outcomes equal the travel polarizations of surviving photons; partners
//!   of lost photons are uniformly random.
//! * Only the lossless all-H / all-V branch with one photon per output is
//!   coherent. There the heralded sign is wrong exactly when an odd number of
//!   outputs registered on the wrong detector. Every other branch leaves a
//!   product state, whose X-parity is uniformly random.

use super::ErrorRates;
use crate::error::check_probability;
use crate::optics::DetectorModel;
use crate::{Error, Result};

type Mat3 = [[f64; 3]; 3];

const LOST: usize = 0;
const H: usize = 1;
const V: usize = 2;

/// Matrix times `2^exp2`, rescaled by powers of two after every product so
/// that long rings neither underflow nor pick up rounding from the scaling.
#[derive(Clone, Copy)]
struct Scaled {
    m: Mat3,
    exp2: i64,
}

impl Scaled {
    fn identity() -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Scaled { m, exp2: 0 }
    }

    fn normalized(m: Mat3, exp2: i64) -> Self {
        let max = m.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()));
        if max == 0.0 {
            return Scaled { m, exp2: i64::MIN / 2 };
        }
        let shift = max.log2().floor() as i32;
        let factor = 2f64.powi(-shift);
        let mut out = m;
        out.iter_mut().flatten().for_each(|x| *x *= factor);
        Scaled {
            m: out,
            exp2: exp2 + shift as i64,
        }
    }

    fn mul(&self, other: &Scaled) -> Scaled {
        Scaled::normalized(matmul(&self.m, &other.m), self.exp2 + other.exp2)
    }
}

/// `x * 2^e` without intermediate overflow or underflow of the factor.
fn scale_by_pow2(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return 0.0;
        }
    }
    x * 2f64.powi(e as i32)
}

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn diag_mul(d: &[f64; 3], m: &Mat3) -> Mat3 {
    let mut out = *m;
    for (i, row) in out.iter_mut().enumerate() {
        row.iter_mut().for_each(|x| *x *= d[i]);
    }
    out
}

fn ln_trace(m: &Mat3, exp2: i64) -> f64 {
    let tr = m[0][0] + m[1][1] + m[2][2];
    if tr <= 0.0 {
        f64::NEG_INFINITY
    } else {
        tr.ln() + exp2 as f64 * std::f64::consts::LN_2
    }
}

/// Probability that an output holding `photons` photons, all bunched on one
/// detector, shows exactly one click on that detector or the other.
fn single_click_prob(det: &DetectorModel, photons: u8) -> f64 {
    let p = det.dark_count_prob;
    if photons == 0 {
        return 2.0 * p * (1.0 - p);
    }
    let c = 1.0 - (1.0 - det.efficiency).powi(photons as i32) * (1.0 - p);
    c * (1.0 - p) + (1.0 - c) * p
}

struct Ring {
    n: usize,
    step: Mat3,
    powers: Vec<Scaled>,
    success: f64,
    ln_success: f64,
}

impl Ring {
    fn new(n: usize, det: &DetectorModel, transmittance: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("GHZ analyzer needs n >= 2 inputs, got {n}")));
        }
        det.validate()?;
        check_probability("transmittance", transmittance)?;
        let mut weight = [0.0; 3];
        weight[LOST] = 1.0 - transmittance;
        weight[H] = transmittance / 2.0;
        weight[V] = transmittance / 2.0;
        let mut t = [[0.0; 3]; 3];
        for (a, row) in t.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                let photons = (a == H) as u8 + (b == V) as u8;
                *entry = weight[a] * single_click_prob(det, photons);
            }
        }
        let step = Scaled::normalized(t, 0);
        let mut powers = vec![Scaled::identity()];
        for j in 1..=n {
            let next = powers[j - 1].mul(&step);
            powers.push(next);
        }
        let top = &powers[n];
        let success = scale_by_pow2(top.m[0][0] + top.m[1][1] + top.m[2][2], top.exp2);
        let ln_success = ln_trace(&top.m, top.exp2);
        Ok(Ring {
            n,
            step: t,
            powers,
            success,
            ln_success,
        })
    }

    /// Log-weight of closed walks that are not constant H or constant V.
    ///
    /// Summed as first departures from the starting state, so every term is
    /// non-negative and nothing cancels.
    fn ln_incoherent(&self) -> f64 {
        let n = self.n;
        let mut terms = Vec::new();
        let ln = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
        if self.step[LOST][LOST] > 0.0 {
            terms.push(n as f64 * ln(self.step[LOST][LOST]));
        }
        for s0 in 0..3 {
            let stay = ln(self.step[s0][s0]);
            for b in (0..3).filter(|&b| b != s0) {
                let leave = ln(self.step[s0][b]);
                if leave == f64::NEG_INFINITY {
                    continue;
                }
                for k in 0..n {
                    if k > 0 && stay == f64::NEG_INFINITY {
                        break;
                    }
                    let back = &self.powers[n - k - 1];
                    let entry = back.m[b][s0];
                    if entry <= 0.0 {
                        continue;
                    }
                    let head = if k == 0 { 0.0 } else { k as f64 * stay };
                    terms.push(
                        head + leave + entry.ln() + back.exp2 as f64 * std::f64::consts::LN_2,
                    );
                }
            }
        }
        log_sum_exp(&terms)
    }

    /// `ln Tr(A T^(k-1) B T^(n-k+1))` with diagonal insertions at inputs 0 and k-1.
    fn ln_two_point(&self, a: &[f64; 3], b: &[f64; 3], k: usize) -> f64 {
        let left = &self.powers[k - 1];
        let right = &self.powers[self.n - k + 1];
        let m = matmul(&diag_mul(a, &left.m), &diag_mul(b, &right.m));
        ln_trace(&m, left.exp2 + right.exp2)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Probability that the analyzer claims a GHZ projection when every travel
/// photon is one half of an ideal Bell pair and reaches the analyzer with
/// probability `transmittance`.
pub fn exact_projection_success(n: usize, det: &DetectorModel, transmittance: f64) -> Result<f64> {
    Ok(Ring::new(n, det, transmittance)?.success)
}

/// Error rates of the retained qubits, conditioned on a claimed success.
///
/// When no success is possible at all, every rate is reported as 1/2.
pub fn exact_error_rates(n: usize, det: &DetectorModel, transmittance: f64) -> Result<ErrorRates> {
    let ring = Ring::new(n, det, transmittance)?;
    if ring.ln_success == f64::NEG_INFINITY {
        return Ok(ErrorRates {
            e_b: vec![0.5; n - 1],
            e_p: 0.5,
        });
    }

    // Pr[Z = +1] given the input's state
    let z_plus = [0.5, 1.0, 0.0];
    let z_minus = [0.5, 0.0, 1.0];
    let e_b = (2..=n)
        .map(|k| {
            let w = ring.ln_two_point(&z_plus, &z_minus, k).exp()
                + ring.ln_two_point(&z_minus, &z_plus, k).exp();
            (w / ring.ln_success.exp()).clamp(0.0, 1.0)
        })
        .collect();

    let p = det.dark_count_prob;
    let right = (1.0 - (1.0 - det.efficiency) * (1.0 - p)) * (1.0 - p);
    let wrong = (1.0 - det.efficiency) * (1.0 - p) * p;
    // heralds from the lossless all-H and all-V branches versus everything else
    let ln_coh = if transmittance == 0.0 || right + wrong == 0.0 {
        f64::NEG_INFINITY
    } else {
        std::f64::consts::LN_2 + n as f64 * ((transmittance / 2.0).ln() + (right + wrong).ln())
    };
    let ln_incoh = ring.ln_incoherent();
    // 1 / (1 + exp(x)), exact at the infinite ends
    let logistic = |x: f64| if x == f64::INFINITY { 0.0 } else { 1.0 / (1.0 + x.exp()) };
    let coherent_fraction = logistic(ln_incoh - ln_coh);
    let incoherent_fraction = logistic(ln_coh - ln_incoh);
    let odd_flip = if coherent_fraction > 0.0 {
        0.5 * (1.0 - ((right - wrong) / (right + wrong)).powi(n as i32))
    } else {
        0.0
    };
    let e_p = 0.5 * incoherent_fraction + coherent_fraction * odd_flip;

    Ok(ErrorRates { e_b, e_p })
}
