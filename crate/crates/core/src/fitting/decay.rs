//! Stretched-exponential decays eps(t) = eps0 exp(-(t/T1)^p).

use serde::{Deserialize, Serialize};

use super::lm::{nlls_fit, Bound, FitParameter, FitResult, Residuals};
use crate::{Error, Result};

pub const P_MIN: f64 = 0.05;
pub const P_MAX: f64 = 1.05;
/// Upper bound on T1 relative to the last sample time.
pub const T1_MAX_FACTOR: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    /// T
    pub field_b: f64,
    /// s
    pub times: Vec<f64>,
    pub signals: Vec<f64>,
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
}

impl DecayCurve {
    pub fn new(field_b: f64, times: Vec<f64>, signals: Vec<f64>) -> Self {
        Self {
            field_b,
            times,
            signals,
            sigma: None,
        }
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.signals.len() {
            return Err(Error::validation(format!(
                "{} times but {} signals",
                self.times.len(),
                self.signals.len()
            )));
        }
        if self.times.iter().chain(&self.signals).any(|v| !v.is_finite()) {
            return Err(Error::validation("decay data must be finite"));
        }
        if self.times.first().is_some_and(|t| *t < 0.0) {
            return Err(Error::validation("decay times must be >= 0"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("decay times must be strictly increasing"));
        }
        if let Some(s) = &self.sigma {
            if s.len() != self.times.len() {
                return Err(Error::validation("sigma length differs from data length"));
            }
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::validation("sigma must be positive"));
            }
        }
        Ok(())
    }

    fn weight(&self, i: usize) -> f64 {
        self.sigma.as_ref().map_or(1.0, |s| 1.0 / s[i])
    }
}

struct Stretched<'a> {
    c: &'a DecayCurve,
    fixed_p: Option<f64>,
}

impl Stretched<'_> {
    fn unpack(&self, x: &[f64]) -> (f64, f64, f64) {
        (x[0], x[1], self.fixed_p.unwrap_or_else(|| x[2]))
    }
}

impl Residuals for Stretched<'_> {
    fn n_residuals(&self) -> usize {
        self.c.times.len()
    }

    fn n_params(&self) -> usize {
        if self.fixed_p.is_some() { 2 } else { 3 }
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        let (e0, t1, p) = self.unpack(x);
        for (i, o) in out.iter_mut().enumerate() {
            let m = e0 * (-(self.c.times[i] / t1).powf(p)).exp();
            *o = (m - self.c.signals[i]) * self.c.weight(i);
        }
    }

    fn jacobian(&self, x: &[f64], j: &mut nalgebra::DMatrix<f64>) {
        let (e0, t1, p) = self.unpack(x);
        for i in 0..self.c.times.len() {
            let w = self.c.weight(i);
            let u = self.c.times[i] / t1;
            let up = if u > 0.0 { u.powf(p) } else { 0.0 };
            let e = (-up).exp();
            j[(i, 0)] = e * w;
            j[(i, 1)] = e0 * e * up * p / t1 * w;
            if self.fixed_p.is_none() {
                j[(i, 2)] = if u > 0.0 { -e0 * e * up * u.ln() * w } else { 0.0 };
            }
        }
    }
}

/// Log-linear initial guess (eps0, T1) from the positive samples.
fn initial_guess(c: &DecayCurve) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = c
        .times
        .iter()
        .zip(&c.signals)
        .filter(|(_, y)| **y > 0.0)
        .map(|(t, y)| (*t, y.ln()))
        .collect();
    let t_max = *c.times.last().unwrap();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let t1 = if slope < 0.0 {
        (-1.0 / slope).min(0.5 * T1_MAX_FACTOR * t_max)
    } else {
        0.1 * T1_MAX_FACTOR * t_max
    };
    (((my - slope * mt).exp()), t1)
}

/// Fits eps0, T1 and (unless fixed) the stretch p in [0.05, 1.05].
pub fn fit_stretched_exponential(curve: &DecayCurve, fix_p: Option<f64>) -> Result<FitResult> {
    curve.validate()?;
    let n = curve.times.len();
    if n < 4 {
        return Err(Error::validation(format!("decay fit needs >= 4 points, got {n}")));
    }
    let positive = curve.signals.iter().filter(|s| **s > 0.0).count();
    if positive < 3 {
        return Err(Error::validation("decay fit needs at least 3 positive signals"));
    }
    if let Some(p) = fix_p {
        if !(P_MIN..=P_MAX).contains(&p) {
            return Err(Error::validation(format!("fixed p = {p} outside [{P_MIN}, {P_MAX}]")));
        }
    }
    let t_max = *curve.times.last().unwrap();
    let t_pos = curve.times.iter().copied().find(|t| *t > 0.0).unwrap_or(t_max);
    let y_max = curve.signals.iter().copied().fold(0.0, f64::max);
    let (e0, t1) = initial_guess(curve);
    let t1_bounds = Bound::new(1e-6 * t_pos, T1_MAX_FACTOR * t_max);
    let e0_bounds = Bound::new(1e-9 * y_max, 1e3 * y_max);
    let e0 = e0.clamp(e0_bounds.lower, e0_bounds.upper);
    let t1 = t1.clamp(t1_bounds.lower, t1_bounds.upper);
    let problem = Stretched { c: curve, fixed_p: fix_p };
    let mut fit = match fix_p {
        Some(_) => nlls_fit(&problem, &[e0, t1], &[e0_bounds, t1_bounds], &["eps0", "T1"])?,
        None => nlls_fit(
            &problem,
            &[e0, t1, 1.0],
            &[e0_bounds, t1_bounds, Bound::new(P_MIN, P_MAX)],
            &["eps0", "T1", "p"],
        )?,
    };
    if let Some(p) = fix_p {
        fit.parameters.push(FitParameter {
            name: "p".into(),
            value: p,
            stderr: None,
            ci: None,
            fixed: true,
            at_bound: false,
        });
        fit.flag("p_fixed");
    }
    if fit.value("T1") >= 0.999 * t1_bounds.upper {
        fit.converged = false;
        fit.flag("non_decaying");
    }
    Ok(fit)
}
