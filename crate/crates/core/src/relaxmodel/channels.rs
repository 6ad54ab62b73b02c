use serde::{Deserialize, Serialize};

use super::spectral::KHZ2_TO_HZ2;
use crate::{Error, Result};

fn default_gamma_n() -> f64 {
    crate::PhysicalConstants::default().gamma_n
}

/// One relaxation mechanism. Widths are linear frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateChannel {
    /// Lorentzian from the flip-flopping P1 bath.
    P1Bath { a2_khz2: f64, d_ee_hz: f64 },
    /// Lorentzian of width 1/T1e from isolated electrons.
    SingleElectron { a2_khz2: f64, t1e_s: f64 },
    /// Gaussian of width d_CC with zero-field rate A2/d_CC.
    NuclearDipolar { a2_khz2: f64, d_cc_hz: f64 },
    /// Field-independent rate.
    PhononOffset { rate: f64 },
}

/// Lorentzian h w^2/(w^2 + x^2) and its first two x-derivatives.
fn lorentz(h: f64, w: f64, x: f64, order: u8) -> f64 {
    let w2 = w * w;
    let den = x * x + w2;
    match order {
        0 => h * w2 / den,
        1 => -2.0 * h * w2 * x / (den * den),
        _ => h * w2 * (6.0 * x * x - 2.0 * w2) / (den * den * den),
    }
}

/// Gaussian h exp(-x^2 / 2w^2) and its first two x-derivatives.
fn gauss(h: f64, w: f64, x: f64, order: u8) -> f64 {
    let w2 = w * w;
    let e = h * (-0.5 * x * x / w2).exp();
    match order {
        0 => e,
        1 => -x / w2 * e,
        _ => (x * x / (w2 * w2) - 1.0 / w2) * e,
    }
}

impl RateChannel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RateChannel::P1Bath { a2_khz2, d_ee_hz } => a2_khz2 >= 0.0 && d_ee_hz > 0.0,
            RateChannel::SingleElectron { a2_khz2, t1e_s } => a2_khz2 >= 0.0 && t1e_s > 0.0,
            RateChannel::NuclearDipolar { a2_khz2, d_cc_hz } => a2_khz2 >= 0.0 && d_cc_hz > 0.0,
            RateChannel::PhononOffset { rate } => rate >= 0.0,
        };
        if ok && self.is_finite() {
            Ok(())
        } else {
            Err(Error::validation(format!("invalid rate channel {self:?}")))
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            RateChannel::P1Bath { a2_khz2: a, d_ee_hz: b }
            | RateChannel::SingleElectron { a2_khz2: a, t1e_s: b }
            | RateChannel::NuclearDipolar { a2_khz2: a, d_cc_hz: b } => a.is_finite() && b.is_finite(),
            RateChannel::PhononOffset { rate } => rate.is_finite(),
        }
    }

    /// Rate (order 0) or its d^n/d omega^n at Larmor frequency `omega` (Hz).
    pub fn eval_omega(&self, omega: f64, order: u8) -> f64 {
        match *self {
            RateChannel::P1Bath { a2_khz2, d_ee_hz } => {
                lorentz(a2_khz2 * KHZ2_TO_HZ2 / d_ee_hz, d_ee_hz, omega, order)
            }
            RateChannel::SingleElectron { a2_khz2, t1e_s } => {
                lorentz(a2_khz2 * KHZ2_TO_HZ2 * t1e_s, 1.0 / t1e_s, omega, order)
            }
            RateChannel::NuclearDipolar { a2_khz2, d_cc_hz } => {
                gauss(a2_khz2 * KHZ2_TO_HZ2 / d_cc_hz, d_cc_hz, omega, order)
            }
            RateChannel::PhononOffset { rate } => {
                if order == 0 {
                    rate
                } else {
                    0.0
                }
            }
        }
    }

    pub fn zero_field_rate(&self) -> f64 {
        self.eval_omega(0.0, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateModel {
    pub channels: Vec<RateChannel>,
    /// Hz/T
    #[serde(default = "default_gamma_n")]
    pub gamma_n: f64,
}

impl RateModel {
    pub fn new(channels: Vec<RateChannel>) -> Self {
        Self {
            channels,
            gamma_n: default_gamma_n(),
        }
    }

    pub fn with_gamma_n(mut self, gamma_n: f64) -> Self {
        self.gamma_n = gamma_n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::validation("rate model needs at least one channel"));
        }
        if !(self.gamma_n > 0.0 && self.gamma_n.is_finite()) {
            return Err(Error::validation("gamma_n must be positive"));
        }
        for c in &self.channels {
            c.validate()?;
        }
        // every Lorentzian/Gaussian channel decays to zero, so a positive
        // rate at all fields needs either an offset or no zero-amplitude model
        let has_offset = self
            .channels
            .iter()
            .any(|c| matches!(c, RateChannel::PhononOffset { rate } if *rate > 0.0));
        let any_amp = self.channels.iter().any(|c| c.zero_field_rate() > 0.0);
        if !any_amp && !has_offset {
            return Err(Error::validation("rate model is identically zero"));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let m: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn total_rate(&self, b: f64) -> f64 {
        self.derivative(b, 0)
    }

    /// d^n R / dB^n at field `b` (T) for n in {0, 1, 2}.
    pub fn derivative(&self, b: f64, order: u8) -> f64 {
        let w = self.gamma_n * b;
        let scale = self.gamma_n.powi(order as i32);
        self.channels.iter().map(|c| c.eval_omega(w, order)).sum::<f64>() * scale
    }

    /// Width of the first P1-bath channel, if any.
    pub fn p1_width_hz(&self) -> Option<f64> {
        self.channels.iter().find_map(|c| match c {
            RateChannel::P1Bath { d_ee_hz, .. } => Some(*d_ee_hz),
            _ => None,
        })
    }

    /// Analytic twice-width knee d_ee / (2 gamma_n) for the first P1 channel.
    pub fn analytic_bk1(&self) -> Option<f64> {
        self.p1_width_hz().map(|d| d / (2.0 * self.gamma_n))
    }

    /// Zero-field P1 rates under both width conventions.
    pub fn zero_field_p1(&self) -> Option<ZeroFieldRate> {
        self.channels.iter().find_map(|c| match c {
            RateChannel::P1Bath { a2_khz2, d_ee_hz } => {
                Some(ZeroFieldRate::from_p1(*a2_khz2, *d_ee_hz))
            }
            _ => None,
        })
    }
}

/// R1(0) = A2 / d_ee evaluated once with the width as given (Hz) and once
/// with the width's numeric value read in kHz units, as the main text's
/// quoted d_ee does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroFieldRate {
    pub consistent_hz: f64,
    pub literal_khz_width: f64,
    pub unit_ambiguous: bool,
}

impl ZeroFieldRate {
    pub fn from_p1(a2_khz2: f64, d_ee_hz: f64) -> Self {
        let consistent = a2_khz2 * KHZ2_TO_HZ2 / d_ee_hz;
        Self {
            consistent_hz: consistent,
            literal_khz_width: consistent * 1e3,
            unit_ambiguous: true,
        }
    }
}
