//! Bounded Levenberg-Marquardt with Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 500;
pub const COST_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-10;
/// Gradient level accepted as converged when damping blows up.
pub const STALL_GRADIENT_TOL: f64 = 1e-6;
pub const MAX_CONDITION: f64 = 1e12;
/// Cost ratio to the starting cost below which residuals count as zero.
pub const ZERO_RESIDUAL_RATIO: f64 = 1e-20;
const LAMBDA_MAX: f64 = 1e16;

/// A least-squares problem: minimize 0.5 |r(x)|^2.
pub trait Residuals {
    fn n_residuals(&self) -> usize;
    fn n_params(&self) -> usize;
    fn residuals(&self, x: &[f64], out: &mut [f64]);
    /// Row-major m x n Jacobian. Defaults to central differences.
    fn jacobian(&self, x: &[f64], out: &mut DMatrix<f64>) {
        *out = finite_difference_jacobian(self, x);
    }
}

pub fn finite_difference_jacobian<P: Residuals + ?Sized>(p: &P, x: &[f64]) -> DMatrix<f64> {
    let (m, n) = (p.n_residuals(), p.n_params());
    let mut j = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    for k in 0..n {
        let h = 1e-6 * x[k].abs().max(1e-6);
        xp[k] = x[k] + h;
        p.residuals(&xp, &mut rp);
        xp[k] = x[k] - h;
        p.residuals(&xp, &mut rm);
        xp[k] = x[k];
        for i in 0..m {
            j[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    j
}

/// Five-point stencil Jacobian with step `rel * max(|x|, 1)`; used to
/// check analytic Jacobians.
pub fn five_point_jacobian<P: Residuals + ?Sized>(p: &P, x: &[f64], rel: f64) -> DMatrix<f64> {
    let (m, n) = (p.n_residuals(), p.n_params());
    let mut j = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut r = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    for k in 0..n {
        let h = rel * x[k].abs().max(1.0);
        for (s, off) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
            xp[k] = x[k] + off * h;
            p.residuals(&xp, &mut r[s]);
        }
        xp[k] = x[k];
        for i in 0..m {
            j[(i, k)] = (r[0][i] - 8.0 * r[1][i] + 8.0 * r[2][i] - r[3][i]) / (12.0 * h);
        }
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub const FREE: Bound = Bound {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    fn clamp(&self, v: f64) -> f64 {
        v.max(self.lower).min(self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    CostConverged,
    GradientConverged,
    ZeroResidual,
    MaxIterations,
    DampingOverflow,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
    /// 68% linearized interval.
    pub ci: Option<(f64, f64)>,
    #[serde(default)]
    pub fixed: bool,
    #[serde(default)]
    pub at_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    pub covariance: Option<Vec<Vec<f64>>>,
    pub residual_norm: f64,
    pub cost: f64,
    pub n_data: usize,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    pub flags: Vec<String>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Value of a named parameter; panics on unknown names.
    pub fn value(&self, name: &str) -> f64 {
        self.param(name)
            .unwrap_or_else(|| panic!("no fit parameter '{name}'"))
            .value
    }

    pub fn values(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.value).collect()
    }

    pub fn flag(&mut self, f: &str) {
        if !self.has_flag(f) {
            self.flags.push(f.to_string());
        }
    }

    pub fn has_flag(&self, f: &str) -> bool {
        self.flags.iter().any(|x| x == f)
    }

    /// Reduced chi-square (cost scaled to degrees of freedom).
    pub fn reduced_chi2(&self) -> f64 {
        let dof = self.n_data as f64 - self.parameters.iter().filter(|p| !p.fixed).count() as f64;
        self.residual_norm.powi(2) / dof
    }
}

fn eval(p: &dyn Residuals, x: &[f64], r: &mut DVector<f64>) -> f64 {
    p.residuals(x, r.as_mut_slice());
    let c = 0.5 * r.norm_squared();
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}

/// Gradient with components that push against an active bound removed.
fn projected_gradient(g: &DVector<f64>, x: &[f64], bounds: &[Bound]) -> DVector<f64> {
    let mut out = g.clone();
    for i in 0..x.len() {
        let at_lo = x[i] <= bounds[i].lower && g[i] > 0.0;
        let at_hi = x[i] >= bounds[i].upper && g[i] < 0.0;
        if at_lo || at_hi {
            out[i] = 0.0;
        }
    }
    out
}

fn scaled_gradient(g: &DVector<f64>, d: &DVector<f64>, rnorm: f64) -> f64 {
    if rnorm == 0.0 {
        return 0.0;
    }
    g.iter()
        .zip(d.iter())
        .map(|(gi, di)| if *di > 0.0 { gi.abs() / (di.sqrt() * rnorm) } else { 0.0 })
        .fold(0.0, f64::max)
}

/// Minimizes 0.5 |r(x)|^2 from `init` within `bounds`.
pub fn nlls_fit(
    problem: &dyn Residuals,
    init: &[f64],
    bounds: &[Bound],
    names: &[&str],
) -> Result<FitResult> {
    let (m, n) = (problem.n_residuals(), problem.n_params());
    if init.len() != n || bounds.len() != n || names.len() != n {
        return Err(Error::validation(format!(
            "parameter vector lengths disagree ({} init, {} bounds, {} names, {n} params)",
            init.len(),
            bounds.len(),
            names.len()
        )));
    }
    if m < n {
        return Err(Error::validation(format!(
            "{m} data points cannot determine {n} parameters"
        )));
    }
    for (i, (x, b)) in init.iter().zip(bounds).enumerate() {
        if !(b.lower <= *x && *x <= b.upper) || !x.is_finite() {
            return Err(Error::validation(format!(
                "initial value {x} of '{}' lies outside [{}, {}]",
                names[i], b.lower, b.upper
            )));
        }
    }

    let mut x = init.to_vec();
    let mut r = DVector::zeros(m);
    let mut cost = eval(problem, &x, &mut r);
    if !cost.is_finite() {
        return Err(Error::Numerical("residuals are not finite at the initial guess".into()));
    }
    let cost0 = cost;
    let mut j = DMatrix::zeros(m, n);
    problem.jacobian(&x, &mut j);
    let mut d = DVector::<f64>::zeros(n);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    let mut r_new = DVector::zeros(m);

    'outer: while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        for i in 0..n {
            d[i] = d[i].max(jtj[(i, i)]);
        }
        let dmax = d.max();
        let floor = if dmax > 0.0 { dmax * 1e-30 } else { 1.0 };
        let dd = d.map(|v| v.max(floor));
        let pg = projected_gradient(&g, &x, bounds);
        if cost <= ZERO_RESIDUAL_RATIO * cost0 {
            termination = Termination::ZeroResidual;
            break;
        }
        if scaled_gradient(&pg, &dd, r.norm()) < GRADIENT_TOL {
            termination = Termination::GradientConverged;
            break;
        }
        loop {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * dd[i];
            }
            let step = a.cholesky().map(|c| c.solve(&(-&g)));
            if let Some(step) = step {
                let x_new: Vec<f64> = (0..n).map(|i| bounds[i].clamp(x[i] + step[i])).collect();
                let c_new = eval(problem, &x_new, &mut r_new);
                if c_new < cost {
                    let rel = (cost - c_new) / cost;
                    x = x_new;
                    std::mem::swap(&mut r, &mut r_new);
                    cost = c_new;
                    lambda = (lambda / 3.0).max(1e-12);
                    problem.jacobian(&x, &mut j);
                    if j.iter().any(|v| !v.is_finite()) {
                        termination = Termination::NonFinite;
                        break 'outer;
                    }
                    if cost <= ZERO_RESIDUAL_RATIO * cost0 {
                        termination = Termination::ZeroResidual;
                        break 'outer;
                    }
                    if rel < COST_TOL {
                        termination = Termination::CostConverged;
                        break 'outer;
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                termination = Termination::DampingOverflow;
                break 'outer;
            }
        }
    }

    let jtj = j.transpose() * &j;
    let g = j.transpose() * &r;
    let dd = d.map(|v| v.max(jtj.diagonal().max() * 1e-30));
    let sg = scaled_gradient(&projected_gradient(&g, &x, bounds), &dd, r.norm());
    let converged = match termination {
        Termination::CostConverged | Termination::GradientConverged | Termination::ZeroResidual => true,
        Termination::DampingOverflow => {
            sg < STALL_GRADIENT_TOL || cost <= ZERO_RESIDUAL_RATIO * cost0
        }
        _ => false,
    };

    let mut flags = Vec::new();
    let dof = m as f64 - n as f64;
    let s2 = if dof > 0.0 { 2.0 * cost / dof } else { f64::NAN };
    let covariance = covariance(&jtj, s2);
    if covariance.is_none() {
        flags.push("covariance_unavailable".to_string());
    }
    let at_bound: Vec<bool> = (0..n)
        .map(|i| x[i] <= bounds[i].lower || x[i] >= bounds[i].upper)
        .collect();
    let parameters = (0..n)
        .map(|i| {
            let se = covariance.as_ref().map(|c| c[(i, i)].max(0.0).sqrt());
            FitParameter {
                name: names[i].to_string(),
                value: x[i],
                stderr: se,
                ci: se.map(|s| (x[i] - s, x[i] + s)),
                fixed: false,
                at_bound: at_bound[i],
            }
        })
        .collect();
    Ok(FitResult {
        parameters,
        covariance: covariance.map(|c| {
            (0..n).map(|i| (0..n).map(|k| c[(i, k)]).collect()).collect()
        }),
        residual_norm: r.norm(),
        cost,
        n_data: m,
        converged,
        iterations,
        termination,
        flags,
    })
}

/// s^2 (J^T J)^-1 via SVD; `None` when ill-conditioned or s^2 undefined.
fn covariance(jtj: &DMatrix<f64>, s2: f64) -> Option<DMatrix<f64>> {
    if !s2.is_finite() {
        return None;
    }
    let n = jtj.nrows();
    // symmetric scaling keeps the condition test independent of units
    let sc: Vec<f64> = (0..n)
        .map(|i| {
            let v = jtj[(i, i)];
            if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 }
        })
        .collect();
    if sc.contains(&0.0) {
        return None;
    }
    let scaled = DMatrix::from_fn(n, n, |i, k| jtj[(i, k)] * sc[i] * sc[k]);
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > MAX_CONDITION {
        return None;
    }
    let inv = svd.pseudo_inverse(0.0).ok()?;
    Some(DMatrix::from_fn(n, n, |i, k| s2 * inv[(i, k)] * sc[i] * sc[k]))
}
