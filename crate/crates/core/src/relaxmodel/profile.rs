use serde::{Deserialize, Serialize};

use super::channels::RateModel;
use super::tsallian::{QMode, TsallianComponent};
use crate::{Error, Result};

/// Anything that gives R1 and its field derivatives.
pub trait RateProfile {
    fn rate(&self, b: f64) -> f64;
    /// d^n R / dB^n, n in {1, 2}.
    fn rate_derivative(&self, b: f64, order: u8) -> f64;
    /// Analytic d_ee / (2 gamma_n) when the model carries a P1 bath.
    fn analytic_bk1(&self) -> Option<f64> {
        None
    }
}

/// Two Tsallian components plus a shared constant offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoTsallian {
    pub narrow: TsallianComponent,
    pub broad: TsallianComponent,
    /// 1/s
    pub offset: f64,
}

impl TwoTsallian {
    pub fn new(a: TsallianComponent, b: TsallianComponent, offset: f64) -> Self {
        Self {
            narrow: a,
            broad: b,
            offset,
        }
        .canonical()
    }

    /// Narrow component first.
    pub fn canonical(mut self) -> Self {
        if self.narrow.c2 > self.broad.c2 {
            std::mem::swap(&mut self.narrow, &mut self.broad);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.narrow.validate(QMode::AllowGaussianLimit)?;
        self.broad.validate(QMode::AllowGaussianLimit)?;
        if !(self.offset >= 0.0 && self.offset.is_finite()) {
            return Err(Error::domain(format!("offset must be >= 0, got {}", self.offset)));
        }
        Ok(())
    }
}

impl RateProfile for TwoTsallian {
    fn rate(&self, b: f64) -> f64 {
        self.narrow.eval_unchecked(b, 0) + self.broad.eval_unchecked(b, 0) + self.offset
    }

    fn rate_derivative(&self, b: f64, order: u8) -> f64 {
        self.narrow.eval_unchecked(b, order) + self.broad.eval_unchecked(b, order)
    }
}

impl RateProfile for RateModel {
    fn rate(&self, b: f64) -> f64 {
        self.total_rate(b)
    }

    fn rate_derivative(&self, b: f64, order: u8) -> f64 {
        self.derivative(b, order)
    }

    fn analytic_bk1(&self) -> Option<f64> {
        RateModel::analytic_bk1(self)
    }
}

/// Serializable choice between the physical and phenomenological models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ProfileModel {
    Physical(RateModel),
    TwoTsallian(TwoTsallian),
}

impl ProfileModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProfileModel::Physical(m) => m.validate(),
            ProfileModel::TwoTsallian(t) => t.validate(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let m: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

impl RateProfile for ProfileModel {
    fn rate(&self, b: f64) -> f64 {
        match self {
            ProfileModel::Physical(m) => m.rate(b),
            ProfileModel::TwoTsallian(t) => t.rate(b),
        }
    }

    fn rate_derivative(&self, b: f64, order: u8) -> f64 {
        match self {
            ProfileModel::Physical(m) => m.rate_derivative(b, order),
            ProfileModel::TwoTsallian(t) => t.rate_derivative(b, order),
        }
    }

    fn analytic_bk1(&self) -> Option<f64> {
        match self {
            ProfileModel::Physical(m) => m.analytic_bk1(),
            ProfileModel::TwoTsallian(_) => None,
        }
    }
}
