use std::sync::OnceLock;

use rand::Rng;

use super::circuit::{build_analyzer, AnalyzerCircuit};
use super::classify::{classify_clicks, GhzOutcome};
use crate::optics::{
    apply_phase_flip, condition_on_paths, loss_branch, loss_branches, make_bell_group,
    make_bell_pair, register_clicks, ClickPattern, DetectorId, DetectorModel, LossSector,
    Occupation, PhotonicState,
};
use crate::{Error, Result};

/// Largest group handled by full state-vector propagation.
pub const MAX_STATEVECTOR_USERS: usize = 8;

/// Outcome of one entanglement-swapping attempt.
#[derive(Clone, Debug)]
pub struct SwapResult {
    pub outcome: GhzOutcome,
    pub clicks: ClickPattern,
    /// Kept qubits after a heralded success, sign-corrected to Phi+.
    pub retained_state: Option<PhotonicState>,
    /// Whether the Phi- correction (a phase flip on user 0) was applied.
    pub phase_flip_applied: bool,
}

/// Fate of one travel photon before the analyzer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum PhotonFate {
    Arrived,
    LostH,
    LostV,
}

impl PhotonFate {
    fn digit(self) -> usize {
        match self {
            PhotonFate::Arrived => 0,
            PhotonFate::LostH => 1,
            PhotonFate::LostV => 2,
        }
    }

    fn sector(self) -> LossSector {
        match self {
            PhotonFate::Arrived => LossSector::NONE,
            PhotonFate::LostH => LossSector { lost_h: 1, lost_v: 0 },
            PhotonFate::LostV => LossSector { lost_h: 0, lost_v: 1 },
        }
    }
}

/// Travel-photon readouts of one loss sector, each with the conditional state
/// of the kept qubits.
struct SectorTable {
    travel: Vec<Occupation>,
    cumulative: Vec<f64>,
    kept: Vec<PhotonicState>,
}

impl SectorTable {
    fn build(joint: &PhotonicState, circuit: &AnalyzerCircuit) -> Result<Self> {
        let n = circuit.n();
        let propagated = circuit.apply(joint, n)?;
        let outcomes = condition_on_paths(&propagated, n..2 * n)?;
        let mut travel = Vec::with_capacity(outcomes.len());
        let mut cumulative = Vec::with_capacity(outcomes.len());
        let mut kept = Vec::with_capacity(outcomes.len());
        let mut acc = 0.0;
        for (occ, p, state) in outcomes {
            acc += p;
            travel.push(occ);
            cumulative.push(acc);
            kept.push(state);
        }
        Ok(SectorTable {
            travel,
            cumulative,
            kept,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("tables are never empty");
        let u = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// Samples analyzer readouts of n Bell-pair halves with the kept halves
/// tracked coherently. Propagation is cached per loss sector.
pub(crate) struct SwapEngine {
    n: usize,
    circuit: AnalyzerCircuit,
    group: PhotonicState,
    fate_probs: [f64; 3],
    tables: Vec<OnceLock<SectorTable>>,
}

impl SwapEngine {
    /// Engine for groups whose travel photons each survive with `transmittance`.
    pub(crate) fn new(n: usize, transmittance: f64) -> Result<Self> {
        if n > MAX_STATEVECTOR_USERS {
            return Err(Error::Unsupported(format!(
                "state-vector simulation supports at most {MAX_STATEVECTOR_USERS} users, got {n}"
            )));
        }
        let circuit = build_analyzer(n)?;
        let group = make_bell_group(n)?;
        // fate probabilities of one Bell half under the loss channel
        let mut fate_probs = [0.0; 3];
        for branch in loss_branches(&make_bell_pair(), 1, transmittance)? {
            let fate = match (branch.sector.lost_h, branch.sector.lost_v) {
                (0, 0) => PhotonFate::Arrived,
                (1, 0) => PhotonFate::LostH,
                _ => PhotonFate::LostV,
            };
            fate_probs[fate.digit()] = branch.probability;
        }
        let tables = (0..3usize.pow(n as u32)).map(|_| OnceLock::new()).collect();
        Ok(SwapEngine {
            n,
            circuit,
            group,
            fate_probs,
            tables,
        })
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    fn sample_fates<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.fate_probs[0] >= 1.0 {
            return 0;
        }
        let mut index = 0;
        let mut place = 1;
        for _ in 0..self.n {
            let u: f64 = rng.random();
            let digit = if u < self.fate_probs[0] {
                0
            } else if u < self.fate_probs[0] + self.fate_probs[1] {
                1
            } else {
                2
            };
            index += digit * place;
            place *= 3;
        }
        index
    }

    fn table(&self, index: usize) -> Result<&SectorTable> {
        if let Some(t) = self.tables[index].get() {
            return Ok(t);
        }
        let mut state = self.group.clone();
        let mut rest = index;
        for j in 0..self.n {
            let fate = match rest % 3 {
                0 => PhotonFate::Arrived,
                1 => PhotonFate::LostH,
                _ => PhotonFate::LostV,
            };
            rest /= 3;
            if fate != PhotonFate::Arrived {
                // projection onto the lost sector; renormalized below
                state = loss_branch(&state, self.n + j, 0.0, fate.sector())?
                    .ok_or_else(|| Error::invalid("empty loss sector"))?
                    .normalized();
            }
        }
        let table = SectorTable::build(&state, &self.circuit)?;
        Ok(self.tables[index].get_or_init(|| table))
    }

    /// One readout: the travel photon numbers seen by the detectors and the
    /// kept qubits' conditional state.
    pub(crate) fn sample_readout<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(&Occupation, &PhotonicState)> {
        let table = self.table(self.sample_fates(rng))?;
        let k = table.sample(rng);
        Ok((&table.travel[k], &table.kept[k]))
    }

    pub(crate) fn resolve(&self, clicks: ClickPattern, kept: &PhotonicState) -> Result<SwapResult> {
        resolve(self.n, clicks, kept)
    }

    pub(crate) fn swap<R: Rng + ?Sized>(&self, det: &DetectorModel, rng: &mut R) -> Result<SwapResult> {
        let (travel, kept) = self.sample_readout(rng)?;
        let clicks = register_clicks(travel, 0..self.n, det, rng);
        self.resolve(clicks, kept)
    }

    /// Readout of one loss sector, given as a base-3 fate index (digit j is 0
    /// for an arrived photon, 1 for a lost H, 2 for a lost V), with a fixed
    /// set of dark-count detectors and noiseless detectors otherwise.
    pub(crate) fn swap_in_sector<R: Rng + ?Sized>(
        &self,
        fate_index: usize,
        efficiency: f64,
        dark: &[DetectorId],
        rng: &mut R,
    ) -> Result<SwapResult> {
        let table = self.table(fate_index)?;
        let k = table.sample(rng);
        let det = DetectorModel {
            efficiency,
            dark_count_prob: 0.0,
        };
        let mut clicks = register_clicks(&table.travel[k], 0..self.n, &det, rng);
        for &d in dark {
            clicks.insert(d);
        }
        self.resolve(clicks, &table.kept[k])
    }
}

/// Entanglement swapping on groups of n Bell pairs whose travel photons have
/// all reached the analyzer (arrival already confirmed).
pub struct Swapper {
    engine: SwapEngine,
}

impl Swapper {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Swapper {
            engine: SwapEngine::new(n, 1.0)?,
        })
    }

    pub fn n(&self) -> usize {
        self.engine.n()
    }

    pub fn swap<R: Rng + ?Sized>(&self, det: &DetectorModel, rng: &mut R) -> Result<SwapResult> {
        self.engine.swap(det, rng)
    }
}

/// Runs the analyzer on travel paths `n..2n` of `group` (kept qubits on
/// `0..n`, e.g. from [`make_bell_group`]) and returns the heralded result.
pub fn swap<R: Rng + ?Sized>(
    group: &PhotonicState,
    n: usize,
    det: &DetectorModel,
    rng: &mut R,
) -> Result<SwapResult> {
    if group.n_spatial() != 2 * n {
        return Err(Error::invalid(format!(
            "a group of {n} pairs needs {} paths, got {}",
            2 * n,
            group.n_spatial()
        )));
    }
    det.validate()?;
    let circuit = build_analyzer(n)?;
    let table = SectorTable::build(group, &circuit)?;
    let k = table.sample(rng);
    let clicks = register_clicks(&table.travel[k], 0..n, det, rng);
    resolve(n, clicks, &table.kept[k])
}

/// Classifies `clicks` and builds the retained state.
fn resolve(n: usize, clicks: ClickPattern, kept: &PhotonicState) -> Result<SwapResult> {
    let outcome = classify_clicks(&clicks, n);
    let (retained_state, phase_flip_applied) = match outcome {
        GhzOutcome::Failure => (None, false),
        GhzOutcome::PhiPlus => (Some(kept.clone()), false),
        GhzOutcome::PhiMinus => (Some(apply_phase_flip(kept, 0)?), true),
    };
    Ok(SwapResult {
        outcome,
        clicks,
        retained_state,
        phase_flip_applied,
    })
}
