use rayon::prelude::*;

use super::swap::SwapEngine;
use crate::error::check_probability;
use crate::mc::{stream_rng, Estimate};
use crate::optics::DetectorModel;
use crate::{Error, Result};

/// Monte Carlo estimate of the probability that the analyzer heralds Phi+ or
/// Phi- when fed n travel halves of ideal Bell pairs, each surviving with
/// `per_photon_transmittance`, read out by detectors `det`.
///
/// Trial `i` uses stream `i` of `seed`, so the estimate does not depend on the
/// thread count.
pub fn ghz_projection_success(
    n: usize,
    det: &DetectorModel,
    per_photon_transmittance: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    det.validate()?;
    check_probability("transmittance", per_photon_transmittance)?;
    let engine = SwapEngine::new(n, per_photon_transmittance)?;
    let hits = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            engine
                .swap(det, &mut rng)
                .map(|r| r.outcome.is_success() as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(Estimate::from_bernoulli(hits, trials))
}
