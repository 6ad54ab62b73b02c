//! Two-Tsallian + offset fits to relaxometry profiles, in log10(R1).

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use super::lm::{nlls_fit, Bound, FitParameter, FitResult, Residuals};
use crate::relaxmodel::{knee_fields, KneeFields, TsallianComponent, TwoTsallian};
use crate::{Error, Result};

pub const Q_LOWER: f64 = 1.0 + 1e-6;
pub const Q_UPPER: f64 = 2.0;
pub const Q_INIT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FullCurve,
    Accelerated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxometryProfile {
    /// T
    pub fields: Vec<f64>,
    /// 1/s
    pub rates: Vec<f64>,
    /// 1/s
    pub errors: Vec<f64>,
    pub provenance: Vec<Provenance>,
}

impl RelaxometryProfile {
    pub fn new(fields: Vec<f64>, rates: Vec<f64>, errors: Vec<f64>) -> Self {
        let n = fields.len();
        Self {
            fields,
            rates,
            errors,
            provenance: vec![Provenance::FullCurve; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.fields.len();
        if self.rates.len() != n || self.errors.len() != n || self.provenance.len() != n {
            return Err(Error::validation("profile columns have different lengths"));
        }
        if self.fields.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::validation("profile fields must be positive"));
        }
        if self.fields.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("profile fields must be strictly increasing"));
        }
        if self.rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::validation("profile rates must be positive"));
        }
        if self.errors.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Error::validation("profile errors must be >= 0"));
        }
        Ok(())
    }

    /// Decades spanned by the field axis.
    pub fn decades(&self) -> f64 {
        (self.fields[self.fields.len() - 1] / self.fields[0]).log10()
    }

    pub fn log_residuals(&self) -> LogProfile<'_> {
        LogProfile::new(self).0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFit {
    pub model: TwoTsallian,
    /// Natural-space parameters: narrow.c1, narrow.c2, narrow.q, broad.*, offset.
    pub fit: FitResult,
    pub knees: KneeFields,
}

pub const PARAM_NAMES: [&str; 7] = [
    "narrow.c1",
    "narrow.c2",
    "narrow.q",
    "broad.c1",
    "broad.c2",
    "broad.q",
    "offset",
];

/// Internal vector: ln C1, ln C2, q for each component, then ln C3.
fn unpack(x: &[f64]) -> (TsallianComponent, TsallianComponent, f64) {
    (
        TsallianComponent::new(x[0].exp(), x[1].exp(), x[2]),
        TsallianComponent::new(x[3].exp(), x[4].exp(), x[5]),
        x[6].exp(),
    )
}

/// log10(R1) residuals over the internal vector (ln C1, ln C2, q for each
/// component, then ln C3), weighted by the point errors when all are positive.
pub struct LogProfile<'a> {
    p: &'a RelaxometryProfile,
    /// Standard deviation of log10(R1) per point.
    sd: Vec<f64>,
}

impl<'a> LogProfile<'a> {
    fn new(p: &'a RelaxometryProfile) -> (Self, bool) {
        let weighted = p.errors.iter().all(|e| *e > 0.0);
        let sd = if weighted {
            p.errors
                .iter()
                .zip(&p.rates)
                .map(|(e, r)| e / (r * LN_10))
                .collect()
        } else {
            vec![1.0; p.fields.len()]
        };
        (Self { p, sd }, weighted)
    }
}

impl Residuals for LogProfile<'_> {
    fn n_residuals(&self) -> usize {
        self.p.fields.len()
    }

    fn n_params(&self) -> usize {
        7
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        let (a, b, c3) = unpack(x);
        for (i, o) in out.iter_mut().enumerate() {
            let bf = self.p.fields[i];
            let m = a.eval_unchecked(bf, 0) + b.eval_unchecked(bf, 0) + c3;
            *o = (m.log10() - self.p.rates[i].log10()) / self.sd[i];
        }
    }

    fn jacobian(&self, x: &[f64], j: &mut nalgebra::DMatrix<f64>) {
        let (a, b, c3) = unpack(x);
        for i in 0..self.p.fields.len() {
            let bf = self.p.fields[i];
            let (fa, ga) = a.value_and_gradient(bf);
            let (fb, gb) = b.value_and_gradient(bf);
            let m = fa + fb + c3;
            let s = 1.0 / (m * LN_10 * self.sd[i]);
            j[(i, 0)] = fa * s;
            j[(i, 1)] = a.c2 * ga[1] * s;
            j[(i, 2)] = ga[2] * s;
            j[(i, 3)] = fb * s;
            j[(i, 4)] = b.c2 * gb[1] * s;
            j[(i, 5)] = gb[2] * s;
            j[(i, 6)] = c3 * s;
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Field where the rate first falls to `level`, interpolated in log-log.
fn crossing_field(p: &RelaxometryProfile, level: f64) -> Option<f64> {
    for i in 0..p.fields.len() - 1 {
        let (r0, r1) = (p.rates[i], p.rates[i + 1]);
        if r0 >= level && r1 < level {
            let t = (level.ln() - r0.ln()) / (r1.ln() - r0.ln());
            let lb = p.fields[i].ln() + t * (p.fields[i + 1].ln() - p.fields[i].ln());
            return Some(lb.exp());
        }
    }
    None
}

fn heuristic_init(p: &RelaxometryProfile, problem: &LogProfile, bounds: &[Bound]) -> Vec<f64> {
    let b_max = *p.fields.last().unwrap();
    let b_min = p.fields[0];
    let top: Vec<f64> = p
        .fields
        .iter()
        .zip(&p.rates)
        .filter(|(b, _)| **b >= b_max / 10f64.sqrt())
        .map(|(_, r)| *r)
        .collect();
    let offset = median(top).max(1e-12);
    let r_low = median(p.rates.iter().take(3).copied().collect());
    let amp = (r_low - offset).max(0.1 * r_low);
    let b_half = crossing_field(p, offset + 0.5 * amp)
        .unwrap_or((b_min * b_max).sqrt())
        .clamp(b_min, b_max);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut r = vec![0.0; p.fields.len()];
    let broad_lo = (3.0 * b_half).min(b_max);
    for iw in 0..12 {
        let w = broad_lo * (b_max / broad_lo).powf(iw as f64 / 11.0);
        for frac in [0.3, 0.1, 0.03, 0.01, 0.003] {
            let x = [(amp * (1.0 - frac)).ln(),
                b_half.ln(),
                Q_INIT,
                (amp * frac).ln(),
                w.ln(),
                Q_INIT,
                offset.ln()];
            let x: Vec<f64> = x
                .iter()
                .zip(bounds)
                .map(|(v, b)| v.clamp(b.lower, b.upper))
                .collect();
            problem.residuals(&x, &mut r);
            let c: f64 = r.iter().map(|v| v * v).sum();
            if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                best = Some((c, x));
            }
        }
    }
    best.unwrap().1
}

fn bounds_for(p: &RelaxometryProfile) -> Vec<Bound> {
    let r_max = p.rates.iter().copied().fold(0.0, f64::max);
    let r_min = p.rates.iter().copied().fold(f64::INFINITY, f64::min);
    let (b_min, b_max) = (p.fields[0], *p.fields.last().unwrap());
    let amp = Bound::new((1e-8 * r_min).ln(), (1e3 * r_max).ln());
    let width = Bound::new((1e-3 * b_min).ln(), (1e3 * b_max).ln());
    let q = Bound::new(Q_LOWER, Q_UPPER);
    let off = Bound::new((1e-8 * r_min).ln(), (10.0 * r_max).ln());
    vec![amp, width, q, amp, width, q, off]
}

/// Maps the internal fit to natural parameters with delta-method errors,
/// narrow component first.
fn to_natural(internal: &FitResult) -> (TwoTsallian, FitResult) {
    let x = internal.values();
    let (a, b, c3) = unpack(&x);
    let swap = a.c2 > b.c2;
    let order: [usize; 7] = if swap { [3, 4, 5, 0, 1, 2, 6] } else { [0, 1, 2, 3, 4, 5, 6] };
    let natural = |i: usize| match i {
        0 | 1 | 3 | 4 | 6 => x[i].exp(),
        _ => x[i],
    };
    // d natural / d internal
    let gain = |i: usize| match i {
        2 | 5 => 1.0,
        _ => x[i].exp(),
    };
    let cov = internal.covariance.as_ref().map(|c| {
        (0..7)
            .map(|i| {
                (0..7)
                    .map(|k| c[order[i]][order[k]] * gain(order[i]) * gain(order[k]))
                    .collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>()
    });
    let parameters = (0..7)
        .map(|i| {
            let src = &internal.parameters[order[i]];
            let v = natural(order[i]);
            let se = cov.as_ref().map(|c| c[i][i].max(0.0).sqrt());
            FitParameter {
                name: PARAM_NAMES[i].to_string(),
                value: v,
                stderr: se,
                ci: se.map(|s| (v - s, v + s)),
                fixed: false,
                at_bound: src.at_bound,
            }
        })
        .collect();
    let mut fit = internal.clone();
    fit.parameters = parameters;
    fit.covariance = cov;
    let model = if swap {
        TwoTsallian { narrow: b, broad: a, offset: c3 }
    } else {
        TwoTsallian { narrow: a, broad: b, offset: c3 }
    };
    (model, fit)
}

/// Weighted log10-space fit of two Tsallians and a shared offset.
pub fn fit_relaxation_profile(profile: &RelaxometryProfile) -> Result<ProfileFit> {
    profile.validate()?;
    if profile.fields.len() < 9 {
        return Err(Error::validation(format!(
            "profile fit needs >= 9 points, got {}",
            profile.fields.len()
        )));
    }
    if profile.decades() < 2.0 {
        return Err(Error::validation(format!(
            "profile spans {:.2} decades of field; at least 2 required",
            profile.decades()
        )));
    }
    let (problem, weighted) = LogProfile::new(profile);
    let bounds = bounds_for(profile);
    let init = heuristic_init(profile, &problem, &bounds);
    let internal = nlls_fit(&problem, &init, &bounds, &PARAM_NAMES)?;
    let (model, mut fit) = to_natural(&internal);
    if !weighted {
        fit.flag("unweighted");
    }
    let knees = knee_fields(&model)?;
    Ok(ProfileFit { model, fit, knees })
}
