use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;

use super::elements::apply_hwp;
use super::state::{ModeLabel, Occupation, PhotonicState, Polarization};
use crate::error::check_probability;
use crate::{Error, Result};

/// Threshold single-photon detector: each photon registers with probability
/// `efficiency`, and each detector fires spuriously with `dark_count_prob`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_count_prob: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_count_prob: f64) -> Result<Self> {
        check_probability("detector efficiency", efficiency)?;
        check_probability("dark count probability", dark_count_prob)?;
        Ok(DetectorModel {
            efficiency,
            dark_count_prob,
        })
    }

    pub const fn ideal() -> Self {
        DetectorModel {
            efficiency: 1.0,
            dark_count_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("detector efficiency", self.efficiency)?;
        check_probability("dark count probability", self.dark_count_prob)
    }

    /// Probability that at least one of `photons` photons registers.
    pub fn photon_click_prob(&self, photons: u8) -> f64 {
        1.0 - (1.0 - self.efficiency).powi(photons as i32)
    }
}

/// Detector `D_{port,pol}` behind the polarizing split of output `port`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectorId {
    pub port: usize,
    pub polarization: Polarization,
}

impl DetectorId {
    pub fn h(port: usize) -> Self {
        DetectorId {
            port,
            polarization: Polarization::H,
        }
    }

    pub fn v(port: usize) -> Self {
        DetectorId {
            port,
            polarization: Polarization::V,
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}{}", self.port + 1, self.polarization)
    }
}

/// The set of detectors that fired in one trial.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClickPattern {
    clicks: BTreeSet<DetectorId>,
}

impl ClickPattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: DetectorId) {
        self.clicks.insert(id);
    }

    pub fn contains(&self, id: DetectorId) -> bool {
        self.clicks.contains(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DetectorId> {
        self.clicks.iter()
    }

    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    /// Detectors that registered a photon in an ideal readout of `occ`.
    pub fn from_occupation(occ: &Occupation, ports: std::ops::Range<usize>) -> Self {
        let start = ports.start;
        let mut pattern = ClickPattern::new();
        for spatial in ports {
            for pol in Polarization::BOTH {
                if occ.get(ModeLabel::new(spatial, pol)) > 0 {
                    pattern.insert(DetectorId {
                        port: spatial - start,
                        polarization: pol,
                    });
                }
            }
        }
        pattern
    }
}

impl FromIterator<DetectorId> for ClickPattern {
    fn from_iter<I: IntoIterator<Item = DetectorId>>(iter: I) -> Self {
        ClickPattern {
            clicks: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, id) in self.clicks.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{id}")?;
        }
        f.write_str("}")
    }
}

/// Draws an occupation with probability `|amplitude|^2`.
pub fn sample_occupation<R: Rng + ?Sized>(state: &PhotonicState, rng: &mut R) -> Occupation {
    let norm = state.norm_sqr();
    let mut u = rng.random::<f64>() * norm;
    let mut last = None;
    for (occ, amp) in state.terms() {
        let p = amp.norm_sqr();
        if u < p {
            return occ.clone();
        }
        u -= p;
        last = Some(occ);
    }
    last.expect("states are never empty").clone()
}

/// Threshold readout of the paths in `ports` for a fixed occupation, with
/// detector inefficiency and dark counts.
pub fn register_clicks<R: Rng + ?Sized>(
    occ: &Occupation,
    ports: std::ops::Range<usize>,
    det: &DetectorModel,
    rng: &mut R,
) -> ClickPattern {
    let start = ports.start;
    let mut pattern = ClickPattern::new();
    for spatial in ports {
        for pol in Polarization::BOTH {
            let photons = occ.get(ModeLabel::new(spatial, pol));
            let detected = photons > 0 && rng.random::<f64>() < det.photon_click_prob(photons);
            let dark = det.dark_count_prob > 0.0 && rng.random::<f64>() < det.dark_count_prob;
            if detected || dark {
                pattern.insert(DetectorId {
                    port: spatial - start,
                    polarization: pol,
                });
            }
        }
    }
    pattern
}

/// Measures every mode of `state` with threshold detectors.
pub fn measure_all<R: Rng + ?Sized>(
    state: &PhotonicState,
    det: &DetectorModel,
    rng: &mut R,
) -> ClickPattern {
    let occ = sample_occupation(state, rng);
    register_clicks(&occ, 0..state.n_spatial(), det, rng)
}

/// Groups the state by the occupation of the paths in `measured`, giving each
/// outcome's probability and the normalized state of the remaining paths.
///
/// The remaining paths keep their relative order and are re-indexed from zero.
pub fn condition_on_paths(
    state: &PhotonicState,
    measured: std::ops::Range<usize>,
) -> Result<Vec<(Occupation, f64, PhotonicState)>> {
    if measured.end > state.n_spatial() || measured.start > measured.end {
        return Err(Error::invalid("measured paths out of range"));
    }
    let n_rest = state.n_spatial() - measured.len();
    let mut groups: BTreeMap<Occupation, Vec<(Occupation, num_complex::Complex64)>> =
        BTreeMap::new();
    for (occ, amp) in state.terms() {
        let outcome = occ.slice_spatial(measured.clone());
        let mut rest = occ.counts()[..2 * measured.start].to_vec();
        rest.extend_from_slice(&occ.counts()[2 * measured.end..]);
        groups
            .entry(outcome)
            .or_default()
            .push((Occupation::from_counts(rest)?, *amp));
    }
    let mut out = Vec::with_capacity(groups.len());
    for (outcome, terms) in groups {
        let p: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        if p <= 0.0 {
            continue;
        }
        let rest = PhotonicState::from_terms(n_rest, terms)?.normalized();
        out.push((outcome, p, rest));
    }
    Ok(out)
}

/// Measurement basis for dual-rail polarization qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitBasis {
    Z,
    X,
}

/// Measures every path as a polarization qubit. In Z the result is `+1` for H
/// and `-1` for V; in X a half-wave plate first maps `|+>` to H.
///
/// Each path must hold exactly one photon.
pub fn measure_qubits<R: Rng + ?Sized>(
    state: &PhotonicState,
    basis: QubitBasis,
    rng: &mut R,
) -> Result<Vec<i8>> {
    let rotated;
    let target = match basis {
        QubitBasis::Z => state,
        QubitBasis::X => {
            let mut s = state.clone();
            for mode in 0..state.n_spatial() {
                s = apply_hwp(&s, mode)?;
            }
            rotated = s;
            &rotated
        }
    };
    let occ = sample_occupation(target, rng);
    (0..state.n_spatial())
        .map(|mode| match super::elements::single_photon_polarization(&occ, mode) {
            Some(Polarization::H) => Ok(1),
            Some(Polarization::V) => Ok(-1),
            None => Err(Error::invalid(format!(
                "path {mode} does not hold a single photon"
            ))),
        })
        .collect()
}
