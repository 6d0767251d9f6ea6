use std::fmt;

use crate::optics::{ClickPattern, DetectorId, Polarization};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GhzOutcome {
    PhiPlus,
    PhiMinus,
    Failure,
}

impl GhzOutcome {
    pub fn is_success(self) -> bool {
        self != GhzOutcome::Failure
    }

    /// Relative sign of the heralded GHZ state, if any.
    pub fn sign(self) -> Option<i8> {
        match self {
            GhzOutcome::PhiPlus => Some(1),
            GhzOutcome::PhiMinus => Some(-1),
            GhzOutcome::Failure => None,
        }
    }
}

impl fmt::Display for GhzOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GhzOutcome::PhiPlus => "Phi+",
            GhzOutcome::PhiMinus => "Phi-",
            GhzOutcome::Failure => "failure",
        })
    }
}

/// Classifies an n-port click pattern.
///
/// Success needs exactly one click on every output. With `v` V-detector
/// clicks, Phi+ is heralded by even `v` when n is odd and by odd `v` when n is
/// even; the opposite parity heralds Phi-.
pub fn classify_clicks(pattern: &ClickPattern, n: usize) -> GhzOutcome {
    if pattern.len() != n || pattern.iter().any(|d| d.port >= n) {
        return GhzOutcome::Failure;
    }
    let mut v_clicks = 0;
    for port in 0..n {
        let h = pattern.contains(DetectorId::h(port));
        let v = pattern.contains(DetectorId {
            port,
            polarization: Polarization::V,
        });
        match (h, v) {
            (true, false) => {}
            (false, true) => v_clicks += 1,
            _ => return GhzOutcome::Failure,
        }
    }
    // Phi+ iff v and n have opposite parity
    if (v_clicks + n) % 2 == 1 {
        GhzOutcome::PhiPlus
    } else {
        GhzOutcome::PhiMinus
    }
}
