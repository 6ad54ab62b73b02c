//! Electron-13C hyperfine statistics around a central electron.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::electron::poisson_interspin_distance;
use super::geometry::{build_realization, enumerate_sites, SpinLattice, CHANNEL_CARBON};
use super::{check_unit, default_field_direction, dot, norm, unit, Estimate, LatticeConfig, Vec3};
use crate::rng::counter_uniform;
use crate::{Error, PhysicalConstants, Result};

/// Pseudo-secular coupling |A_zx| (kHz) of a nucleus at `r` from the electron.
#[inline]
pub fn pseudo_secular_khz(k_khz_nm3: f64, r: &Vec3, field: &Vec3) -> f64 {
    let d = norm(r);
    let c = dot(r, field) / d;
    let s = (1.0 - c * c).max(0.0).sqrt();
    k_khz_nm3 * 3.0 * (s * c).abs() / d.powi(3)
}

/// Full NV hyperfine magnitude (kHz) in the NV frame:
/// sqrt[(3 r_z^2 - 1)^2 + (3 r_x r_z)^2 + (3 r_y r_z)^2] / r^3.
#[inline]
pub fn nv_full_coupling_khz(k_khz_nm3: f64, r: &Vec3, nv_axis: &Vec3) -> f64 {
    let d = norm(r);
    let rz = dot(r, nv_axis) / d;
    // any orthonormal completion of the NV axis gives the same r_x^2 + r_y^2
    let perp2 = (1.0 - rz * rz).max(0.0);
    let ang = (3.0 * rz * rz - 1.0).powi(2) + 9.0 * rz * rz * perp2;
    k_khz_nm3 * ang.sqrt() / d.powi(3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct P1NumericConfig {
    pub concentration_ppm: f64,
    pub enrichment_eta: f64,
    #[serde(default = "default_detection")]
    pub detection_linewidth_hz: f64,
    #[serde(default = "default_p1_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_field_direction")]
    pub field_direction: Vec3,
    /// Box half-width in nm; defaults to the Poisson inter-electron distance.
    #[serde(default)]
    pub half_width_nm: Option<f64>,
}

fn default_detection() -> f64 {
    2000.0
}

fn default_p1_realizations() -> usize {
    100
}

impl P1NumericConfig {
    pub fn new(concentration_ppm: f64, enrichment_eta: f64) -> Self {
        Self {
            concentration_ppm,
            enrichment_eta,
            detection_linewidth_hz: default_detection(),
            realizations: default_p1_realizations(),
            seed: 0,
            field_direction: default_field_direction(),
            half_width_nm: None,
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
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1NumericEstimate {
    /// <A_zx^2> over observed nuclei, kHz^2.
    pub a2: Estimate,
    /// <A_zx^obs> = sqrt(<A_zx^2>) per realization, kHz.
    pub a_obs: Estimate,
    pub n_observed_mean: f64,
    pub half_width_nm: f64,
}

/// Numerical <A_zx^2> for nuclei whose |A_zx| lies below the detection
/// linewidth, with one electron at the origin of a cube of half-width
/// `half_width_nm` (default <r_e>).
pub fn p1_hyperfine_second_moment_numeric(
    cfg: &P1NumericConfig,
    consts: &PhysicalConstants,
) -> Result<P1NumericEstimate> {
    consts.validate()?;
    if !(cfg.enrichment_eta > 0.0 && cfg.enrichment_eta <= 1.0) {
        return Err(Error::validation(format!(
            "enrichment_eta must lie in (0, 1], got {}",
            cfg.enrichment_eta
        )));
    }
    if !(cfg.detection_linewidth_hz > 0.0) {
        return Err(Error::domain("detection linewidth must be positive"));
    }
    if cfg.realizations == 0 {
        return Err(Error::validation("realizations must be >= 1"));
    }
    check_unit(&cfg.field_direction, "field_direction")?;
    let half = match cfg.half_width_nm {
        Some(h) => h,
        None => poisson_interspin_distance(cfg.concentration_ppm, consts)?,
    };
    if !(half > consts.a_lattice) {
        return Err(Error::validation(format!(
            "half width {half} nm must exceed the lattice constant"
        )));
    }
    let k = consts.hbar_dipolar_prefactor;
    let limit = cfg.detection_linewidth_hz * 1e-3;
    let observed: Vec<(u64, f64)> = enumerate_sites(consts, half)
        .into_iter()
        .filter(|s| !s.is_origin())
        .map(|s| (s.key, pseudo_secular_khz(k, &s.position, &cfg.field_direction)))
        .filter(|(_, a)| *a < limit)
        .map(|(key, a)| (key, a * a))
        .collect();

    let per: Vec<Option<(f64, usize)>> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let (mut sum, mut n) = (0.0, 0usize);
            for &(key, a2) in &observed {
                if counter_uniform(cfg.seed, r, key, CHANNEL_CARBON) < cfg.enrichment_eta {
                    sum += a2;
                    n += 1;
                }
            }
            (n > 0).then(|| (sum / n as f64, n))
        })
        .collect();
    let hits: Vec<(f64, usize)> = per.into_iter().flatten().collect();
    if hits.is_empty() {
        return Err(Error::degenerate(
            "no observable 13C nuclei in any realization",
        ));
    }
    let a2: Vec<f64> = hits.iter().map(|h| h.0).collect();
    let a: Vec<f64> = a2.iter().map(|x| x.sqrt()).collect();
    let n_obs = hits.iter().map(|h| h.1 as f64).sum::<f64>() / hits.len() as f64;
    Ok(P1NumericEstimate {
        a2: Estimate::from_samples(&a2, cfg.seed, 2.0 * half),
        a_obs: Estimate::from_samples(&a, cfg.seed, 2.0 * half),
        n_observed_mean: n_obs,
        half_width_nm: half,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvHyperfine {
    /// RMS full hyperfine coupling over all carbons, kHz.
    pub rms_khz: f64,
    /// Carbons with full coupling above the threshold.
    pub n_direct: usize,
    pub n_carbons: usize,
    /// n_direct / n_carbons.
    pub fraction: f64,
}

pub fn nv_default_axis() -> Vec3 {
    unit([1.0, 1.0, 1.0])
}

/// Full hyperfine statistics for an NV at the origin of `lattice`.
pub fn nv_hyperfine_and_direct_fraction(
    lattice: &SpinLattice,
    nv_axis: &Vec3,
    threshold_khz: f64,
    consts: &PhysicalConstants,
) -> Result<NvHyperfine> {
    if !(threshold_khz > 0.0) {
        return Err(Error::domain("threshold must be positive"));
    }
    check_unit(nv_axis, "nv_axis")?;
    if !lattice.electron_positions.iter().any(|p| norm(p) < 1e-12) {
        return Err(Error::validation("lattice has no central NV electron"));
    }
    let k = consts.hbar_dipolar_prefactor;
    let n = lattice.carbon_positions.len();
    if n == 0 {
        return Ok(NvHyperfine {
            rms_khz: 0.0,
            n_direct: 0,
            n_carbons: 0,
            fraction: 0.0,
        });
    }
    let (sum2, direct) = lattice
        .carbon_positions
        .iter()
        .map(|p| nv_full_coupling_khz(k, p, nv_axis))
        .fold((0.0, 0usize), |(s, d), a| {
            (s + a * a, d + usize::from(a > threshold_khz))
        });
    Ok(NvHyperfine {
        rms_khz: (sum2 / n as f64).sqrt(),
        n_direct: direct,
        n_carbons: n,
        fraction: direct as f64 / n as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvHyperfineStats {
    pub rms_khz: Estimate,
    pub n_direct: Estimate,
    pub fraction: Estimate,
}

pub fn nv_hyperfine_stats(
    config: &LatticeConfig,
    nv_axis: &Vec3,
    threshold_khz: f64,
    consts: &PhysicalConstants,
) -> Result<NvHyperfineStats> {
    let mut cfg = config.clone();
    cfg.central_electron = true;
    let v: Vec<NvHyperfine> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            build_realization(&cfg, consts, r)
                .and_then(|l| nv_hyperfine_and_direct_fraction(&l, nv_axis, threshold_khz, consts))
        })
        .collect::<Result<_>>()?;
    let pick = |f: fn(&NvHyperfine) -> f64| {
        let xs: Vec<f64> = v.iter().map(f).collect();
        Estimate::from_samples(&xs, cfg.seed, cfg.lattice_size_nm)
    };
    Ok(NvHyperfineStats {
        rms_khz: pick(|h| h.rms_khz),
        n_direct: pick(|h| h.n_direct as f64),
        fraction: pick(|h| h.fraction),
    })
}
