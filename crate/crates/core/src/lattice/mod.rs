//! Dilute spin lattices and spin-bath statistics.
//!
//! Closed-form electron-bath quantities live in [`electron`]; Monte-Carlo
//! estimators over generated lattices live in [`carbon`] and [`hyperfine`].
//! All lattice estimators use open boundaries and average over independent
//! realizations derived from `(seed, realization index)`.

pub mod carbon;
pub mod convergence;
pub mod electron;
pub mod geometry;
pub mod hyperfine;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use carbon::{
    carbon_second_moment, carbon_second_moment_stats, nearest_neighbor_distance,
    nearest_neighbor_stats, spin_diffusion, DiffusionEstimate, NearestNeighbor,
    NearestNeighborStats,
};
pub use convergence::{convergence_sweep, residuals, ConvergencePoint};
pub use electron::{
    detection_barrier_radius, electron_bath_statistics, electron_linewidth_hz,
    electron_second_moment_from_distance_mg2, electron_second_moment_mg2,
    p1_hyperfine_second_moment_analytic, poisson_interspin_distance, BathStatistics,
};
pub use geometry::{build_lattice, build_realization, enumerate_sites, Site, SpinLattice};
pub use hyperfine::{
    nv_default_axis, nv_full_coupling_khz, nv_hyperfine_and_direct_fraction, nv_hyperfine_stats,
    p1_hyperfine_second_moment_numeric, pseudo_secular_khz,
    NvHyperfine, NvHyperfineStats, P1NumericConfig, P1NumericEstimate,
};

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn check_unit(v: &Vec3, what: &str) -> Result<()> {
    if (norm(v) - 1.0).abs() > 1e-12 {
        return Err(Error::validation(format!(
            "{what} must have unit norm (got {:.15})",
            norm(v)
        )));
    }
    Ok(())
}

/// Normalizes a direction given in any length.
pub fn unit(v: Vec3) -> Vec3 {
    let n = norm(&v);
    [v[0] / n, v[1] / n, v[2] / n]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Fractional 13C enrichment in (0, 1]. The percent convention used
    /// for spin densities is `eta_percent = 100 * enrichment_eta`.
    pub enrichment_eta: f64,
    #[serde(default)]
    pub electron_concentration_ppm: f64,
    /// Edge of the cubic box centred on the origin, nm.
    pub lattice_size_nm: f64,
    #[serde(default = "default_field_direction")]
    pub field_direction: Vec3,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Force an electron onto the origin site.
    #[serde(default)]
    pub central_electron: bool,
}

pub fn default_field_direction() -> Vec3 {
    [0.0, 0.0, 1.0]
}

pub fn default_realizations() -> usize {
    20
}

impl LatticeConfig {
    pub fn new(enrichment_eta: f64, lattice_size_nm: f64) -> Self {
        Self {
            enrichment_eta,
            electron_concentration_ppm: 0.0,
            lattice_size_nm,
            field_direction: default_field_direction(),
            seed: 0,
            realizations: default_realizations(),
            central_electron: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_realizations(mut self, n: usize) -> Self {
        self.realizations = n;
        self
    }

    pub fn with_electrons(mut self, ppm: f64) -> Self {
        self.electron_concentration_ppm = ppm;
        self
    }

    pub fn with_central_electron(mut self) -> Self {
        self.central_electron = true;
        self
    }

    pub fn with_field_direction(mut self, dir: Vec3) -> Self {
        self.field_direction = dir;
        self
    }

    pub fn validate(&self, consts: &crate::PhysicalConstants) -> Result<()> {
        if !(self.enrichment_eta > 0.0 && self.enrichment_eta <= 1.0) {
            return Err(Error::validation(format!(
                "enrichment_eta must lie in (0, 1], got {}",
                self.enrichment_eta
            )));
        }
        if !(self.electron_concentration_ppm >= 0.0) || self.electron_concentration_ppm > 1e6 {
            return Err(Error::validation(format!(
                "electron_concentration_ppm must lie in [0, 1e6], got {}",
                self.electron_concentration_ppm
            )));
        }
        if !(self.lattice_size_nm > 2.0 * consts.a_lattice) {
            return Err(Error::validation(format!(
                "lattice_size_nm must exceed 2 a = {} nm, got {}",
                2.0 * consts.a_lattice,
                self.lattice_size_nm
            )));
        }
        if self.realizations == 0 {
            return Err(Error::validation("realizations must be >= 1"));
        }
        check_unit(&self.field_direction, "field_direction")
    }
}

/// Monte-Carlo estimate with its spread over realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sd: f64,
    pub n_realizations: usize,
    pub seed: u64,
    pub lattice_size_nm: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64], seed: u64, lattice_size_nm: f64) -> Self {
        let (value, sd) = mean_sd(samples);
        Self {
            value,
            sd,
            n_realizations: samples.len(),
            seed,
            lattice_size_nm,
        }
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.n_realizations == 0 {
            f64::NAN
        } else {
            self.sd / (self.n_realizations as f64).sqrt()
        }
    }
}

/// Sample mean and (n-1) standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
