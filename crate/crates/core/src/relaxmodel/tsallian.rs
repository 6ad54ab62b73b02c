//! Tsallis (q-Gaussian) lineshape
//!   f(B) = C1 [1 + (2^(q-1) - 1)(B/C2)^2]^(-1/(q-1))
//! with half maximum at B = C2 for every q. q = 2 is a Lorentzian and q -> 1
//! the Gaussian C1 exp(-ln2 (B/C2)^2).

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How q = 1 is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QMode {
    /// q must lie in (1, 2].
    #[default]
    Strict,
    /// q = 1 evaluates the Gaussian limit.
    AllowGaussianLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsallianComponent {
    /// 1/s
    pub c1: f64,
    /// T
    pub c2: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsallianParams {
    pub c1: f64,
    pub c2: f64,
    /// 1/s
    pub c3: f64,
    pub q: f64,
}

impl TsallianParams {
    pub fn component(&self) -> TsallianComponent {
        TsallianComponent {
            c1: self.c1,
            c2: self.c2,
            q: self.q,
        }
    }
}

/// Below this, q - 1 is treated as the Gaussian limit in derivative
/// formulas that would otherwise cancel.
const Q_SERIES: f64 = 1e-3;

impl TsallianComponent {
    pub fn new(c1: f64, c2: f64, q: f64) -> Self {
        Self { c1, c2, q }
    }

    pub fn validate(&self, mode: QMode) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::domain(format!(
                "Tsallian needs C1, C2 > 0 (got {}, {})",
                self.c1, self.c2
            )));
        }
        let q_ok = match mode {
            QMode::Strict => self.q > 1.0 && self.q <= 2.0,
            QMode::AllowGaussianLimit => self.q >= 1.0 && self.q <= 2.0,
        };
        if !q_ok {
            return Err(Error::domain(format!("q = {} outside (1, 2]", self.q)));
        }
        Ok(())
    }

    /// Full width at half maximum, T.
    pub fn fwhm(&self) -> f64 {
        2.0 * self.c2
    }

    fn is_gaussian(&self) -> bool {
        self.q == 1.0
    }

    /// k = 2^(q-1) - 1 and m = 1/(q-1).
    fn km(&self) -> (f64, f64) {
        let e = self.q - 1.0;
        ((e * LN_2).exp_m1(), 1.0 / e)
    }

    /// Value or B-derivative of order 0..=2, without validation.
    pub fn eval_unchecked(&self, b: f64, order: u8) -> f64 {
        let x = b / self.c2;
        let x2 = x * x;
        let c22 = self.c2 * self.c2;
        if self.is_gaussian() {
            let g = self.c1 * (-LN_2 * x2).exp();
            return match order {
                0 => g,
                1 => -2.0 * LN_2 * b / c22 * g,
                _ => -2.0 * LN_2 / c22 * (1.0 - 2.0 * LN_2 * x2) * g,
            };
        }
        let (k, m) = self.km();
        let lu = (k * x2).ln_1p();
        match order {
            0 => self.c1 * (-m * lu).exp(),
            1 => -2.0 * m * k * self.c1 * b / c22 * (-(m + 1.0) * lu).exp(),
            _ => {
                let u = 1.0 + k * x2;
                -2.0 * m * k * self.c1 / c22
                    * (-(m + 2.0) * lu).exp()
                    * (u - 2.0 * (m + 1.0) * k * x2)
            }
        }
    }

    pub fn eval(&self, b: f64, order: u8, mode: QMode) -> Result<f64> {
        self.validate(mode)?;
        if order > 2 {
            return Err(Error::domain(format!("derivative order {order} not supported")));
        }
        Ok(self.eval_unchecked(b, order))
    }

    /// Value and gradient with respect to (C1, C2, q).
    pub fn value_and_gradient(&self, b: f64) -> (f64, [f64; 3]) {
        let x = b / self.c2;
        let x2 = x * x;
        if self.is_gaussian() {
            let shape = (-LN_2 * x2).exp();
            let f = self.c1 * shape;
            let dq = -LN_2 * LN_2 * (x2 - x2 * x2) / 2.0;
            return (f, [shape, 2.0 * LN_2 * x2 * f / self.c2, f * dq]);
        }
        let e = self.q - 1.0;
        let (k, m) = self.km();
        let lu = (k * x2).ln_1p();
        let shape = (-m * lu).exp();
        let f = self.c1 * shape;
        let u = 1.0 + k * x2;
        // df/dC2 = 2 m k C1 x^2 / C2 * u^(-m-1)
        let d_c2 = 2.0 * m * k * f * x2 / (self.c2 * u);
        let kp = (e * LN_2).exp() * LN_2;
        let s = k * x2;
        let dlnf_dq = if e < Q_SERIES && s.abs() < 1e-3 {
            // d/de[-ln(1 + k x^2)/e] expanded for small e and small k x^2
            let a = LN_2;
            -(a * a * (x2 - x2 * x2) / 2.0
                + 2.0 * e * a.powi(3) * (x2 / 6.0 - x2 * x2 / 2.0 + x2 * x2 * x2 / 3.0))
        } else {
            lu / (e * e) - m * kp * x2 / u
        };
        (f, [shape, d_c2, f * dlnf_dq])
    }
}

/// C1 [1 + (2^(q-1) - 1)(B/C2)^2]^(-1/(q-1)) + C3, or its B-derivative.
pub fn tsallian_eval(params: &TsallianParams, b: f64, order: u8, mode: QMode) -> Result<f64> {
    if !(params.c3 >= 0.0) {
        return Err(Error::domain(format!("C3 must be >= 0, got {}", params.c3)));
    }
    let v = params.component().eval(b, order, mode)?;
    Ok(if order == 0 { v + params.c3 } else { v })
}
