use serde::{Deserialize, Serialize};

use super::profile::RateProfile;
use crate::{Error, Result};

/// Field at which the high-field (saturation) rate is read, T.
pub const SATURATION_FIELD_T: f64 = 7.0;
pub const INFLECTION_GRID_MIN_T: f64 = 1e-4;
pub const INFLECTION_GRID_MAX_T: f64 = 7.0;
pub const INFLECTION_GRID_POINTS: usize = 2000;
/// Below this |d ln R / d ln B| at 7 T the profile counts as saturated.
pub const SATURATION_SLOPE_LIMIT: f64 = 0.5;
const BISECT_TOL_T: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneeFields {
    pub saturation_rate: f64,
    /// Field where R1 = 2 R1(7 T); `None` when there is no such crossing or
    /// the profile has not saturated by 7 T.
    pub twice_saturation: Option<f64>,
    /// Zeros of d^2 R1 / dB^2, ascending.
    pub inflections: Vec<f64>,
    /// d_ee / (2 gamma_n) for physical models with a P1 bath.
    pub analytic_bk1: Option<f64>,
}

impl KneeFields {
    pub fn bk1(&self) -> Option<f64> {
        self.twice_saturation
    }

    /// Lowest-field inflection.
    pub fn bk2(&self) -> Option<f64> {
        self.inflections.first().copied()
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Root of `f` in [lo, hi] given a sign change.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo <= tol * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Field where R1 falls to twice its 7 T value.
pub fn twice_saturation_knee(profile: &dyn RateProfile) -> Result<f64> {
    let r_sat = profile.rate(SATURATION_FIELD_T);
    if !r_sat.is_finite() || r_sat < 0.0 {
        return Err(Error::Numerical(format!("saturation rate {r_sat} is not usable")));
    }
    let slope = SATURATION_FIELD_T * profile.rate_derivative(SATURATION_FIELD_T, 1) / r_sat;
    if r_sat == 0.0 || !(slope.abs() <= SATURATION_SLOPE_LIMIT) {
        return Err(Error::NotFound(format!(
            "rate has not saturated by {SATURATION_FIELD_T} T (log slope {slope:.3})"
        )));
    }
    let g = |b: f64| profile.rate(b) - 2.0 * r_sat;
    if g(0.0) < 0.0 {
        return Err(Error::NotFound("zero-field rate is below twice saturation".into()));
    }
    let mut grid = vec![0.0];
    grid.extend(log_grid(1e-9, SATURATION_FIELD_T, 4000));
    for w in grid.windows(2).rev() {
        if g(w[0]) >= 0.0 && g(w[1]) < 0.0 {
            return Ok(bisect(g, w[0], w[1], BISECT_TOL_T));
        }
    }
    Err(Error::NotFound("no twice-saturation crossing below 7 T".into()))
}

fn inflections(profile: &dyn RateProfile) -> Vec<f64> {
    let grid = log_grid(INFLECTION_GRID_MIN_T, INFLECTION_GRID_MAX_T, INFLECTION_GRID_POINTS);
    let d2 = |b: f64| profile.rate_derivative(b, 2);
    let vals: Vec<f64> = grid.iter().map(|&b| d2(b)).collect();
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 {
            out.push(grid[i]);
        } else if a * b < 0.0 {
            out.push(bisect(d2, grid[i], grid[i + 1], BISECT_TOL_T));
        }
    }
    out
}

pub fn knee_fields(profile: &dyn RateProfile) -> Result<KneeFields> {
    let twice = match twice_saturation_knee(profile) {
        Ok(b) => Some(b),
        Err(Error::NotFound(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(KneeFields {
        saturation_rate: profile.rate(SATURATION_FIELD_T),
        twice_saturation: twice,
        inflections: inflections(profile),
        analytic_bk1: profile.analytic_bk1(),
    })
}

/// S_p = 10 log10(R1(B0) / R1(B)) in dB.
pub fn phase_noise(profile: &dyn RateProfile, b0: f64, b: f64) -> Result<f64> {
    let r0 = profile.rate(b0);
    let r = profile.rate(b);
    if !(r0 > 0.0 && r > 0.0) {
        return Err(Error::domain(format!(
            "phase noise needs positive rates (R({b0}) = {r0}, R({b}) = {r})"
        )));
    }
    Ok(10.0 * (r0 / r).log10())
}

/// All fields in [lo, hi] where the two profiles cross, ascending.
pub fn crossover_fields(
    a: &dyn RateProfile,
    b: &dyn RateProfile,
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::domain("crossover search needs 0 < lo < hi"));
    }
    let d = |x: f64| a.rate(x).ln() - b.rate(x).ln();
    let grid = log_grid(lo, hi, 2000);
    let mut out = Vec::new();
    for w in grid.windows(2) {
        if d(w[0]) == 0.0 {
            out.push(w[0]);
        } else if d(w[0]) * d(w[1]) < 0.0 {
            out.push(bisect(d, w[0], w[1], BISECT_TOL_T));
        }
    }
    Ok(out)
}

/// The unique crossing field in [lo, hi].
pub fn crossover_field(a: &dyn RateProfile, b: &dyn RateProfile, lo: f64, hi: f64) -> Result<f64> {
    let xs = crossover_fields(a, b, lo, hi)?;
    match xs.as_slice() {
        [x] => Ok(*x),
        [] => Err(Error::NotFound(format!("profiles do not cross in [{lo}, {hi}] T"))),
        _ => Err(Error::NotFound(format!(
            "profiles cross {} times in [{lo}, {hi}] T",
            xs.len()
        ))),
    }
}
