use crate::optics::{apply_hwp, apply_pbs, DetectorId, PhotonicState};
use crate::{Error, Result};

/// One element of the analyzer, acting on analyzer ports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitElement {
    /// PBS joining ports `a` and `b` (H transmitted, V exchanged).
    Pbs { a: usize, b: usize },
    /// 45 degree polarization rotation on one output port.
    Hwp { port: usize },
    /// Final PBS routing H to `D_{port,H}` and V to `D_{port,V}`. The mode
    /// registry already separates polarizations, so it acts as the identity
    /// on amplitudes and only marks where detection happens.
    OutputPbs { port: usize },
}

/// The linear-optical GHZ analyzer for `n` inputs: a PBS chain over
/// neighbouring ports, then a HWP and a polarizing split before two
/// detectors on every output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalyzerCircuit {
    n: usize,
    elements: Vec<CircuitElement>,
}

impl AnalyzerCircuit {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    pub fn chain_pbs_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, CircuitElement::Pbs { .. }))
            .count()
    }

    pub fn hwp_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, CircuitElement::Hwp { .. }))
            .count()
    }

    pub fn output_pbs_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, CircuitElement::OutputPbs { .. }))
            .count()
    }

    pub fn detectors(&self) -> Vec<DetectorId> {
        (0..self.n)
            .flat_map(|p| [DetectorId::h(p), DetectorId::v(p)])
            .collect()
    }

    /// Propagates `state` with analyzer port `p` mapped to path `offset + p`.
    pub fn apply(&self, state: &PhotonicState, offset: usize) -> Result<PhotonicState> {
        if offset + self.n > state.n_spatial() {
            return Err(Error::invalid(format!(
                "analyzer with {} ports at offset {offset} does not fit a {}-path state",
                self.n,
                state.n_spatial()
            )));
        }
        let mut out = state.clone();
        for element in &self.elements {
            out = match *element {
                CircuitElement::Pbs { a, b } => apply_pbs(&out, offset + a, offset + b)?,
                CircuitElement::Hwp { port } => apply_hwp(&out, offset + port)?,
                CircuitElement::OutputPbs { .. } => out,
            };
        }
        Ok(out)
    }
}

pub fn build_analyzer(n: usize) -> Result<AnalyzerCircuit> {
    if n < 2 {
        return Err(Error::invalid(format!("GHZ analyzer needs n >= 2 inputs, got {n}")));
    }
    let mut elements: Vec<_> = (0..n - 1)
        .map(|k| CircuitElement::Pbs { a: k, b: k + 1 })
        .collect();
    for port in 0..n {
        elements.push(CircuitElement::Hwp { port });
        elements.push(CircuitElement::OutputPbs { port });
    }
    Ok(AnalyzerCircuit { n, elements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_counts() {
        for (n, chain) in [(2, 1), (3, 2), (20, 19)] {
            let c = build_analyzer(n).unwrap();
            assert_eq!(c.chain_pbs_count(), chain);
            assert_eq!(c.hwp_count(), n);
            assert_eq!(c.output_pbs_count(), n);
            assert_eq!(c.detectors().len(), 2 * n);
        }
        assert!(build_analyzer(1).is_err());
    }

    #[test]
    fn chain_precedes_outputs() {
        let c = build_analyzer(5).unwrap();
        let last_chain = c
            .elements()
            .iter()
            .rposition(|e| matches!(e, CircuitElement::Pbs { .. }))
            .unwrap();
        let first_out = c
            .elements()
            .iter()
            .position(|e| !matches!(e, CircuitElement::Pbs { .. }))
            .unwrap();
        assert!(last_chain < first_out);
    }
}
