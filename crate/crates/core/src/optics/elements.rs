use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use super::state::{ModeLabel, Occupation, PhotonicState, Polarization};
use crate::error::check_probability;
use crate::{Error, Result};

/// Phase picked up by a V photon reflected at a polarizing beam splitter.
///
/// [`ReflectionPhase::I`] is the symmetric lossless convention; it is the one
/// under which the GHZ analyzer's click parities follow the standard
/// odd/even table for both parities of n. [`ReflectionPhase::Real`] makes the
/// PBS an involution but flips the Phi+/Phi- assignment for even n.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReflectionPhase {
    #[default]
    I,
    Real,
}

impl ReflectionPhase {
    fn value(self) -> Complex64 {
        match self {
            ReflectionPhase::I => Complex64::i(),
            ReflectionPhase::Real => Complex64::new(1.0, 0.0),
        }
    }
}

/// Polarizing beam splitter between paths `a` and `b`: H transmits, V swaps
/// paths with the default reflection phase.
pub fn apply_pbs(state: &PhotonicState, a: usize, b: usize) -> Result<PhotonicState> {
    apply_pbs_with(state, a, b, ReflectionPhase::default())
}

pub fn apply_pbs_with(
    state: &PhotonicState,
    a: usize,
    b: usize,
    phase: ReflectionPhase,
) -> Result<PhotonicState> {
    state.check_mode(a)?;
    state.check_mode(b)?;
    if a == b {
        return Err(Error::invalid("a beam splitter needs two distinct paths"));
    }
    let r = phase.value();
    let (va, vb) = (ModeLabel::v(a), ModeLabel::v(b));
    let terms = state
        .terms()
        .map(|(occ, amp)| {
            let (na, nb) = (occ.get(va), occ.get(vb));
            let mut out = occ.clone();
            out.set(va, nb);
            out.set(vb, na);
            (out, amp * r.powu((na + nb) as u32))
        })
        .collect();
    Ok(PhotonicState::from_map_unchecked(
        state.n_spatial(),
        state.total_photons(),
        terms,
    ))
}

/// Half-wave plate at 22.5 degrees (a 45 degree polarization rotation):
/// `a_H -> (a_H + a_V)/sqrt(2)`, `a_V -> (a_H - a_V)/sqrt(2)`.
pub fn apply_hwp(state: &PhotonicState, mode: usize) -> Result<PhotonicState> {
    state.check_mode(mode)?;
    let (mh, mv) = (ModeLabel::h(mode), ModeLabel::v(mode));
    let mut terms: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let (h, v) = (occ.get(mh), occ.get(mv));
        for (p, coeff) in hwp_expansion(h, v) {
            let mut out = occ.clone();
            out.set(mh, p);
            out.set(mv, h + v - p);
            *terms.entry(out).or_default() += amp * coeff;
        }
    }
    Ok(PhotonicState::from_map_unchecked(
        state.n_spatial(),
        state.total_photons(),
        terms,
    ))
}

/// Amplitudes `<p, h+v-p | U_hwp | h, v>` for every `p`.
///
/// Expands `(a_H + a_V)^h (a_H - a_V)^v / sqrt(2^(h+v) h! v!)` and converts
/// monomials back to normalized Fock states.
fn hwp_expansion(h: u8, v: u8) -> Vec<(u8, f64)> {
    let total = (h + v) as usize;
    let mut coeffs = vec![0.0; total + 1];
    for j in 0..=h as usize {
        for k in 0..=v as usize {
            let sign = if (v as usize - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            coeffs[j + k] += sign * binomial(h as usize, j) * binomial(v as usize, k);
        }
    }
    let scale = (2f64.powi(total as i32) * factorial(h as usize) * factorial(v as usize)).sqrt();
    coeffs
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c != 0.0)
        .map(|(p, c)| {
            let norm = (factorial(p) * factorial(total - p)).sqrt();
            (p as u8, c * norm / scale)
        })
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Pauli-Z on the polarization of one path (`V -> -V`), the local correction
/// that turns Phi- into Phi+.
pub fn apply_phase_flip(state: &PhotonicState, mode: usize) -> Result<PhotonicState> {
    state.check_mode(mode)?;
    let mv = ModeLabel::v(mode);
    let terms = state
        .terms()
        .map(|(occ, amp)| {
            let sign = if occ.get(mv) % 2 == 0 { 1.0 } else { -1.0 };
            (occ.clone(), amp * sign)
        })
        .collect();
    Ok(PhotonicState::from_map_unchecked(
        state.n_spatial(),
        state.total_photons(),
        terms,
    ))
}

/// Number of photons removed from each polarization of a path by loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LossSector {
    pub lost_h: u8,
    pub lost_v: u8,
}

impl LossSector {
    pub const NONE: LossSector = LossSector { lost_h: 0, lost_v: 0 };
}

/// One branch of the loss channel: its probability and the renormalized state.
#[derive(Clone, Debug)]
pub struct LossBranch {
    pub sector: LossSector,
    pub probability: f64,
    pub state: PhotonicState,
}

/// Applies the beam-splitter loss Kraus operator for `sector` on path `mode`.
/// Returns the unnormalized branch state, or `None` when the branch is empty.
pub fn loss_branch(
    state: &PhotonicState,
    mode: usize,
    transmittance: f64,
    sector: LossSector,
) -> Result<Option<PhotonicState>> {
    state.check_mode(mode)?;
    check_probability("transmittance", transmittance)?;
    let lost = (sector.lost_h + sector.lost_v) as usize;
    if lost > state.total_photons() {
        return Ok(None);
    }
    let (mh, mv) = (ModeLabel::h(mode), ModeLabel::v(mode));
    let kraus = |k: u8, l: u8| -> f64 {
        binomial(k as usize, l as usize)
            * transmittance.powi((k - l) as i32)
            * (1.0 - transmittance).powi(l as i32)
    };
    let mut terms = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let (h, v) = (occ.get(mh), occ.get(mv));
        if h < sector.lost_h || v < sector.lost_v {
            continue;
        }
        let weight = kraus(h, sector.lost_h) * kraus(v, sector.lost_v);
        if weight == 0.0 {
            continue;
        }
        let mut out = occ.clone();
        out.set(mh, h - sector.lost_h);
        out.set(mv, v - sector.lost_v);
        terms.insert(out, amp * weight.sqrt());
    }
    if terms.is_empty() {
        return Ok(None);
    }
    Ok(Some(PhotonicState::from_map_unchecked(
        state.n_spatial(),
        state.total_photons() - lost,
        terms,
    )))
}

/// Every nonempty loss branch on path `mode`, normalized, with probabilities.
pub fn loss_branches(
    state: &PhotonicState,
    mode: usize,
    transmittance: f64,
) -> Result<Vec<LossBranch>> {
    state.check_mode(mode)?;
    check_probability("transmittance", transmittance)?;
    let (mh, mv) = (ModeLabel::h(mode), ModeLabel::v(mode));
    let (max_h, max_v) = state
        .terms()
        .fold((0, 0), |(a, b), (o, _)| (a.max(o.get(mh)), b.max(o.get(mv))));
    let mut branches = Vec::new();
    for lost_h in 0..=max_h {
        for lost_v in 0..=max_v {
            let sector = LossSector { lost_h, lost_v };
            if let Some(branch) = loss_branch(state, mode, transmittance, sector)? {
                let probability = branch.norm_sqr();
                if probability > 0.0 {
                    branches.push(LossBranch {
                        sector,
                        probability,
                        state: branch.normalized(),
                    });
                }
            }
        }
    }
    Ok(branches)
}

/// Samples one loss branch: each photon on path `mode` survives independently
/// with probability `transmittance`, and the state is post-selected on the
/// surviving sector.
pub fn apply_loss<R: Rng + ?Sized>(
    state: &PhotonicState,
    mode: usize,
    transmittance: f64,
    rng: &mut R,
) -> Result<PhotonicState> {
    let branches = loss_branches(state, mode, transmittance)?;
    let mut u: f64 = rng.random();
    for branch in &branches {
        if u < branch.probability {
            return Ok(branch.state.clone());
        }
        u -= branch.probability;
    }
    Ok(branches
        .last()
        .expect("a normalized state has at least one branch")
        .state
        .clone())
}

/// Occupation-level helper used by the analyzer: polarization of the single
/// photon on path `mode`, if there is exactly one.
pub fn single_photon_polarization(occ: &Occupation, mode: usize) -> Option<Polarization> {
    match (occ.get(ModeLabel::h(mode)), occ.get(ModeLabel::v(mode))) {
        (1, 0) => Some(Polarization::H),
        (0, 1) => Some(Polarization::V),
        _ => None,
    }
}
