use serde::{Deserialize, Serialize};

use super::fieldmap::FieldMap;
use crate::relaxmodel::RateProfile;
use crate::{Error, Result};

/// Spread of the transfer time reported in the main text, s.
pub const JITTER_MAIN_TEXT_S: f64 = 4e-3;
/// Spread of the transfer time reported in the supplement, s.
pub const JITTER_SUPPLEMENT_S: f64 = 0.6e-3;
const SIMPSON_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuttleProfile {
    pub travel_distance_mm: f64,
    /// Time for the full travel distance, s.
    pub transfer_time_s: f64,
    /// Gaussian sd of the transfer time, s.
    #[serde(default = "default_jitter")]
    pub time_jitter_s: f64,
}

fn default_jitter() -> f64 {
    JITTER_MAIN_TEXT_S
}

impl Default for ShuttleProfile {
    fn default() -> Self {
        Self {
            travel_distance_mm: 928.0,
            transfer_time_s: 0.648,
            time_jitter_s: JITTER_MAIN_TEXT_S,
        }
    }
}

impl ShuttleProfile {
    pub fn with_jitter(mut self, jitter_s: f64) -> Self {
        self.time_jitter_s = jitter_s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.transfer_time_s > 0.0 && self.travel_distance_mm > 0.0 && self.time_jitter_s >= 0.0) {
            return Err(Error::validation(format!("invalid shuttle profile {self:?}")));
        }
        Ok(())
    }

    pub fn speed_mm_per_s(&self) -> f64 {
        self.travel_distance_mm / self.transfer_time_s
    }
}

/// exp(-int R1(B(x(t))) dt) for constant-speed motion from `x0` to `x1`
/// taking `duration_s`.
pub fn survival_between(
    map: &FieldMap,
    x0: f64,
    x1: f64,
    duration_s: f64,
    rate: &dyn RateProfile,
) -> Result<f64> {
    if !(duration_s >= 0.0) {
        return Err(Error::domain("transit duration must be >= 0"));
    }
    if duration_s == 0.0 || x0 == x1 {
        let b = map.field_at(x0)?;
        return Ok((-rate.rate(b) * duration_s).exp());
    }
    let n = SIMPSON_INTERVALS;
    let h = duration_s / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let x = x0 + (x1 - x0) * i as f64 / n as f64;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * rate.rate(map.field_at(x)?);
    }
    Ok((-s * h / 3.0).exp())
}

/// Surviving fraction over the full shuttle stroke.
pub fn simulate_shuttle_loss(
    map: &FieldMap,
    shuttle: &ShuttleProfile,
    rate: &dyn RateProfile,
) -> Result<f64> {
    shuttle.validate()?;
    let (lo, _) = map.range_mm();
    survival_between(map, lo, lo + shuttle.travel_distance_mm, shuttle.transfer_time_s, rate)
}
