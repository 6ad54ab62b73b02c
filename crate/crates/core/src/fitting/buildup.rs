//! Polarization buildup: mono- or bi-exponential saturation curves.

use serde::{Deserialize, Serialize};

use super::decay::DecayCurve;
use super::lm::{nlls_fit, Bound, FitResult, Residuals};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildupModel {
    Mono,
    Bi,
    Auto,
}

/// Relative CI half-width above which a parameter is flagged.
pub const WIDE_CI_FRACTION: f64 = 0.5;
/// Time constants closer than this (relative) count as equal.
pub const DEGENERATE_TAU_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildupFit {
    pub model: BuildupModel,
    pub fit: FitResult,
    pub aicc: f64,
    /// AICc of the model not selected, when both were fitted.
    pub alternative_aicc: Option<f64>,
}

struct Buildup<'a> {
    c: &'a DecayCurve,
    terms: usize,
}

impl Residuals for Buildup<'_> {
    fn n_residuals(&self) -> usize {
        self.c.times.len()
    }

    fn n_params(&self) -> usize {
        2 * self.terms
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let t = self.c.times[i];
            let m: f64 = (0..self.terms)
                .map(|k| x[2 * k] * -(-t / x[2 * k + 1]).exp_m1())
                .sum();
            *o = (m - self.c.signals[i]) * self.c.sigma.as_ref().map_or(1.0, |s| 1.0 / s[i]);
        }
    }

    fn jacobian(&self, x: &[f64], j: &mut nalgebra::DMatrix<f64>) {
        for i in 0..self.c.times.len() {
            let t = self.c.times[i];
            let w = self.c.sigma.as_ref().map_or(1.0, |s| 1.0 / s[i]);
            for k in 0..self.terms {
                let (a, tau) = (x[2 * k], x[2 * k + 1]);
                let e = (-t / tau).exp();
                j[(i, 2 * k)] = (1.0 - e) * w;
                j[(i, 2 * k + 1)] = -a * e * t / (tau * tau) * w;
            }
        }
    }
}

/// Corrected Akaike criterion from the weighted residual sum of squares.
pub fn aicc(rss: f64, n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    let base = n * (rss.max(f64::MIN_POSITIVE) / n).ln() + 2.0 * k;
    if n - k - 1.0 > 0.0 {
        base + 2.0 * k * (k + 1.0) / (n - k - 1.0)
    } else {
        f64::INFINITY
    }
}

fn flag_wide(fit: &mut FitResult) {
    let wide = fit.parameters.iter().any(|p| match p.stderr {
        Some(s) => s > WIDE_CI_FRACTION * p.value.abs(),
        None => true,
    });
    if wide {
        fit.flag("wide_ci");
    }
}

fn fit_mono(c: &DecayCurve) -> Result<FitResult> {
    let t_max = *c.times.last().unwrap();
    let t_min = c.times.iter().copied().find(|t| *t > 0.0).unwrap_or(t_max);
    let y_max = c.signals.iter().copied().fold(f64::MIN, f64::max).abs().max(f64::MIN_POSITIVE);
    // time to reach (1 - 1/e) of the last value
    let target = (1.0 - (-1.0f64).exp()) * c.signals.last().unwrap();
    let tau0 = c
        .times
        .iter()
        .zip(&c.signals)
        .find(|(_, y)| **y >= target)
        .map(|(t, _)| *t)
        .unwrap_or(t_max)
        .max(t_min);
    let bounds = [Bound::new(0.0, 1e3 * y_max), Bound::new(1e-3 * t_min, 1e3 * t_max)];
    let init = [y_max, tau0.clamp(bounds[1].lower, bounds[1].upper)];
    let mut f = nlls_fit(&Buildup { c, terms: 1 }, &init, &bounds, &["A", "tau"])?;
    flag_wide(&mut f);
    Ok(f)
}

fn fit_bi(c: &DecayCurve, mono: &FitResult) -> Result<FitResult> {
    let t_max = *c.times.last().unwrap();
    let t_min = c.times.iter().copied().find(|t| *t > 0.0).unwrap_or(t_max);
    let y_max = c.signals.iter().copied().fold(f64::MIN, f64::max).abs().max(f64::MIN_POSITIVE);
    let (a, tau) = (mono.value("A"), mono.value("tau"));
    let tb = Bound::new(1e-3 * t_min, 1e3 * t_max);
    let ab = Bound::new(0.0, 1e3 * y_max);
    let init = [
        0.5 * a,
        (tau / 3.0).clamp(tb.lower, tb.upper),
        0.5 * a,
        (tau * 3.0).clamp(tb.lower, tb.upper),
    ];
    let mut f = nlls_fit(
        &Buildup { c, terms: 2 },
        &init,
        &[ab, tb, ab, tb],
        &["A1", "tau1", "A2", "tau2"],
    )?;
    // fast component first
    if f.value("tau1") > f.value("tau2") {
        f.parameters.swap(0, 2);
        f.parameters.swap(1, 3);
        for (i, n) in ["A1", "tau1", "A2", "tau2"].iter().enumerate() {
            f.parameters[i].name = n.to_string();
        }
        if let Some(cov) = &mut f.covariance {
            let perm = [2, 3, 0, 1];
            let old = cov.clone();
            for i in 0..4 {
                for k in 0..4 {
                    cov[i][k] = old[perm[i]][perm[k]];
                }
            }
        }
    }
    flag_wide(&mut f);
    Ok(f)
}

fn bi_degenerate(f: &FitResult) -> bool {
    let (t1, t2) = (f.value("tau1"), f.value("tau2"));
    let a_small = f.value("A1") <= 0.0 || f.value("A2") <= 0.0;
    a_small || (t2 - t1).abs() <= DEGENERATE_TAU_FRACTION * t2.max(t1)
}

pub fn fit_buildup(curve: &DecayCurve, model: BuildupModel) -> Result<BuildupFit> {
    curve.validate()?;
    let n = curve.times.len();
    let need = if model == BuildupModel::Mono { 5 } else { 7 };
    if n < need {
        return Err(Error::validation(format!(
            "{model:?} buildup fit needs >= {need} points, got {n}"
        )));
    }
    let mono = fit_mono(curve)?;
    let mono_aicc = aicc(mono.residual_norm.powi(2), n, 2);
    if model == BuildupModel::Mono {
        return Ok(BuildupFit {
            model: BuildupModel::Mono,
            fit: mono,
            aicc: mono_aicc,
            alternative_aicc: None,
        });
    }
    let bi = fit_bi(curve, &mono)?;
    let bi_aicc = aicc(bi.residual_norm.powi(2), n, 4);
    if bi_degenerate(&bi) {
        let mut fit = mono;
        fit.flag("bi_degenerate_collapsed_to_mono");
        return Ok(BuildupFit {
            model: BuildupModel::Mono,
            fit,
            aicc: mono_aicc,
            alternative_aicc: Some(bi_aicc),
        });
    }
    let pick_bi = model == BuildupModel::Bi || bi_aicc < mono_aicc;
    Ok(if pick_bi {
        BuildupFit {
            model: BuildupModel::Bi,
            fit: bi,
            aicc: bi_aicc,
            alternative_aicc: Some(mono_aicc),
        }
    } else {
        BuildupFit {
            model: BuildupModel::Mono,
            fit: mono,
            aicc: mono_aicc,
            alternative_aicc: Some(bi_aicc),
        }
    })
}
