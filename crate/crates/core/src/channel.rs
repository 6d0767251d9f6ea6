//! Per-photon transmittances and the analytic gain.
//!
//! Distances are in km, times in seconds and speeds in m/s. The QND arrival
//! check is a Bernoulli coin with success `p_qnd`; optical switches are
//! lossless apart from the feedforward delay they impose. Detector efficiency
//! is not a factor here: it enters only through the analyzer's projection
//! probability, so the gain never counts it twice.

use serde::{Deserialize, Serialize};

use crate::error::check_probability;
use crate::optics::DetectorModel;
use crate::{Error, Result};

pub const PAPER_PRESET: &str = "paper-2022";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Fiber length from each user to the analyzer, km.
    pub distance_km: f64,
    /// Attenuation length, km.
    pub l_att_km: f64,
    /// Feedforward (switching) delay, s.
    pub tau_a_s: f64,
    /// Speed of light in fiber, m/s.
    pub c_m_per_s: f64,
    pub p_qnd: f64,
    pub detector: DetectorModel,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::paper_2022()
    }
}

impl ChannelParams {
    /// 27.14 km attenuation length, 67 ns feedforward, c = 2e8 m/s,
    /// p_QND = 1/2, eta_d = 0.93, p_d = 1e-9.
    pub fn paper_2022() -> Self {
        ChannelParams {
            distance_km: 0.0,
            l_att_km: 27.14,
            tau_a_s: 67e-9,
            c_m_per_s: 2.0e8,
            p_qnd: 0.5,
            detector: DetectorModel {
                efficiency: 0.93,
                dark_count_prob: 1e-9,
            },
        }
    }

    /// Built-in presets by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            PAPER_PRESET => Some(Self::paper_2022()),
            "ideal" => Some(ChannelParams {
                detector: DetectorModel::ideal(),
                ..Self::paper_2022()
            }),
            _ => None,
        }
    }

    pub fn at_distance(&self, distance_km: f64) -> Self {
        ChannelParams {
            distance_km,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("distance_km", self.distance_km),
            ("tau_a_s", self.tau_a_s),
            ("c_m_per_s", self.c_m_per_s),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.l_att_km.is_finite() && self.l_att_km > 0.0) {
            return Err(Error::invalid(format!(
                "l_att_km must be positive, got {}",
                self.l_att_km
            )));
        }
        check_probability("p_qnd", self.p_qnd)?;
        self.detector.validate()
    }

    pub fn fiber_transmittance(&self) -> Result<f64> {
        fiber_transmittance(self.distance_km, self.l_att_km)
    }

    pub fn feedforward_transmittance(&self) -> Result<f64> {
        feedforward_transmittance(self.tau_a_s, self.c_m_per_s, self.l_att_km)
    }

    /// Probability that one multiplexed photon reaches the analyzer with its
    /// arrival confirmed: fiber, feedforward and QND factors.
    pub fn arrival_probability(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.fiber_transmittance()? * self.feedforward_transmittance()? * self.p_qnd)
    }
}

/// `exp(-l / l_att)`.
pub fn fiber_transmittance(distance_km: f64, l_att_km: f64) -> Result<f64> {
    if !(distance_km.is_finite() && distance_km >= 0.0) {
        return Err(Error::invalid(format!(
            "fiber length must be non-negative, got {distance_km}"
        )));
    }
    if !(l_att_km.is_finite() && l_att_km > 0.0) {
        return Err(Error::invalid(format!(
            "attenuation length must be positive, got {l_att_km}"
        )));
    }
    Ok((-distance_km / l_att_km).exp())
}

/// Loss equivalent of holding a photon in fiber for the feedforward delay:
/// `exp(-tau_a c / l_att)` with `l_att` converted to metres.
pub fn feedforward_transmittance(tau_a_s: f64, c_m_per_s: f64, l_att_km: f64) -> Result<f64> {
    if !(tau_a_s >= 0.0 && c_m_per_s >= 0.0) || !tau_a_s.is_finite() || !c_m_per_s.is_finite() {
        return Err(Error::invalid("feedforward delay and speed must be non-negative"));
    }
    if !(l_att_km.is_finite() && l_att_km > 0.0) {
        return Err(Error::invalid(format!(
            "attenuation length must be positive, got {l_att_km}"
        )));
    }
    Ok((-(tau_a_s * c_m_per_s) / (l_att_km * 1e3)).exp())
}

/// Gain per channel use: `q_ghz * p_qnd * eta_channel * eta_a`.
pub fn total_gain(params: &ChannelParams, q_ghz: f64) -> Result<f64> {
    params.validate()?;
    check_probability("q_ghz", q_ghz)?;
    Ok(q_ghz * params.p_qnd * params.fiber_transmittance()? * params.feedforward_transmittance()?)
}
