use std::collections::BTreeMap;

use super::circuit::build_analyzer;
use super::classify::{classify_clicks, GhzOutcome};
use crate::optics::{make_ghz, ClickPattern, PhotonicState};
use crate::{Error, Result};

/// Exact click-pattern probabilities of an analyzer readout.
pub type ClickDistribution = BTreeMap<ClickPattern, f64>;

/// Propagates `input` (one path per analyzer port) through the n-port
/// analyzer and returns exact click probabilities for ideal threshold
/// detectors.
pub fn analyzer_response(input: &PhotonicState, n: usize) -> Result<ClickDistribution> {
    if input.n_spatial() != n {
        return Err(Error::invalid(format!(
            "analyzer has {n} ports but the input state has {} paths",
            input.n_spatial()
        )));
    }
    let circuit = build_analyzer(n)?;
    let out = circuit.apply(input, 0)?;
    let norm = out.norm_sqr();
    let mut dist = ClickDistribution::new();
    for (occ, amp) in out.terms() {
        *dist.entry(ClickPattern::from_occupation(occ, 0..n)).or_default() +=
            amp.norm_sqr() / norm;
    }
    Ok(dist)
}

/// Per-input summary of how the analyzer classifies one GHZ input.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassCheck {
    pub sign: i8,
    /// Total probability of patterns classified to the input's own class.
    pub correct_prob: f64,
    /// Total probability of patterns classified to the other class.
    pub wrong_prob: f64,
    /// Number of distinct nonzero-probability patterns in the input's class.
    pub correct_patterns: usize,
    pub wrong_patterns: usize,
}

impl ClassCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.wrong_prob <= tol && (self.correct_prob - 1.0).abs() <= tol
    }
}

/// Exhaustive check of the odd/even click table for one n.
#[derive(Clone, Debug, PartialEq)]
pub struct TableCheck {
    pub n: usize,
    pub plus: ClassCheck,
    pub minus: ClassCheck,
}

impl TableCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.plus.passes(tol) && self.minus.passes(tol)
    }
}

/// Propagates both GHZ states of size `n` and tallies their classification.
pub fn check_click_table(n: usize) -> Result<TableCheck> {
    let check = |sign: i8| -> Result<ClassCheck> {
        let own = if sign > 0 {
            GhzOutcome::PhiPlus
        } else {
            GhzOutcome::PhiMinus
        };
        let dist = analyzer_response(&make_ghz(n, sign)?, n)?;
        let mut c = ClassCheck {
            sign,
            correct_prob: 0.0,
            wrong_prob: 0.0,
            correct_patterns: 0,
            wrong_patterns: 0,
        };
        for (pattern, p) in dist {
            match classify_clicks(&pattern, n) {
                GhzOutcome::Failure => {}
                o if o == own => {
                    c.correct_prob += p;
                    c.correct_patterns += 1;
                }
                _ => {
                    c.wrong_prob += p;
                    c.wrong_patterns += 1;
                }
            }
        }
        Ok(c)
    };
    Ok(TableCheck {
        n,
        plus: check(1)?,
        minus: check(-1)?,
    })
}
