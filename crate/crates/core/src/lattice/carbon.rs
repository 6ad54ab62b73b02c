//! 13C-13C dipolar statistics over generated lattices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{build_realization, SpinLattice};
use super::{check_unit, dot, norm, sub, Estimate, LatticeConfig, Vec3};
use crate::{Error, PhysicalConstants, Result};

/// Secular dipolar coupling (Hz) between two nuclei separated by `r`.
#[inline]
pub fn secular_coupling(k_hz_nm3: f64, r: &Vec3, field: &Vec3) -> f64 {
    let r2 = dot(r, r);
    let cos2 = dot(r, field).powi(2) / r2;
    k_hz_nm3 * (3.0 * cos2 - 1.0) / (r2 * r2.sqrt())
}

fn require_pairs(lattice: &SpinLattice) -> Result<()> {
    if lattice.carbon_positions.len() < 2 {
        return Err(Error::degenerate(format!(
            "{} carbon(s) in lattice; at least 2 required",
            lattice.carbon_positions.len()
        )));
    }
    check_unit(&lattice.config.field_direction, "field_direction")
}

/// Mean over spins of the root-sum-square secular coupling to all other
/// spins, <d_CC> in Hz. Self terms are excluded.
pub fn carbon_second_moment(lattice: &SpinLattice, consts: &PhysicalConstants) -> Result<f64> {
    require_pairs(lattice)?;
    let k = consts.nuclear_dipolar_hz_nm3();
    let b = lattice.config.field_direction;
    let pos = &lattice.carbon_positions;
    let per_spin: Vec<f64> = pos
        .par_iter()
        .enumerate()
        .map(|(j, pj)| {
            let s: f64 = pos
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != j)
                .map(|(_, pk)| secular_coupling(k, &sub(pk, pj), &b).powi(2))
                .sum();
            s.sqrt()
        })
        .collect();
    let total: f64 = per_spin.iter().sum();
    Ok(total / pos.len() as f64)
}

fn realizations<T, F>(config: &LatticeConfig, consts: &PhysicalConstants, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SpinLattice) -> Result<T> + Sync,
{
    (0..config.realizations as u64)
        .into_par_iter()
        .map(|r| build_realization(config, consts, r).and_then(|l| f(&l)))
        .collect()
}

pub fn carbon_second_moment_stats(
    config: &LatticeConfig,
    consts: &PhysicalConstants,
) -> Result<Estimate> {
    let v = realizations(config, consts, |l| carbon_second_moment(l, consts))?;
    Ok(Estimate::from_samples(&v, config.seed, config.lattice_size_nm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighbor {
    /// Mean distance to the partner of maximal |d_jk|, nm.
    pub lattice_mean_nm: f64,
    /// [2 <d_CC> / ((mu0/4pi) gamma_n^2 hbar)]^(-1/3), nm.
    pub coupling_derived_nm: f64,
    pub d_cc_hz: f64,
}

/// Distance implied by an RMS coupling.
pub fn coupling_derived_distance(d_cc_hz: f64, consts: &PhysicalConstants) -> f64 {
    (2.0 * d_cc_hz / consts.nuclear_dipolar_hz_nm3()).powf(-1.0 / 3.0)
}

pub fn nearest_neighbor_distance(
    lattice: &SpinLattice,
    consts: &PhysicalConstants,
) -> Result<NearestNeighbor> {
    require_pairs(lattice)?;
    let k = consts.nuclear_dipolar_hz_nm3();
    let b = lattice.config.field_direction;
    let pos = &lattice.carbon_positions;
    let per_spin: Vec<f64> = pos
        .par_iter()
        .enumerate()
        .map(|(j, pj)| {
            // maximal |coupling|; ties go to the shorter distance
            let mut best = (f64::NEG_INFINITY, f64::INFINITY);
            for (m, pk) in pos.iter().enumerate() {
                if m == j {
                    continue;
                }
                let r = sub(pk, pj);
                let c = secular_coupling(k, &r, &b).abs();
                let d = norm(&r);
                if c > best.0 || (c == best.0 && d < best.1) {
                    best = (c, d);
                }
            }
            best.1
        })
        .collect();
    let sum: f64 = per_spin.iter().sum();
    let d_cc = carbon_second_moment(lattice, consts)?;
    Ok(NearestNeighbor {
        lattice_mean_nm: sum / pos.len() as f64,
        coupling_derived_nm: coupling_derived_distance(d_cc, consts),
        d_cc_hz: d_cc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighborStats {
    pub lattice: Estimate,
    pub coupling_derived: Estimate,
    pub d_cc: Estimate,
}

pub fn nearest_neighbor_stats(
    config: &LatticeConfig,
    consts: &PhysicalConstants,
) -> Result<NearestNeighborStats> {
    let v = realizations(config, consts, |l| nearest_neighbor_distance(l, consts))?;
    let pick = |f: fn(&NearestNeighbor) -> f64| {
        let xs: Vec<f64> = v.iter().map(f).collect();
        Estimate::from_samples(&xs, config.seed, config.lattice_size_nm)
    };
    Ok(NearestNeighborStats {
        lattice: pick(|n| n.lattice_mean_nm),
        coupling_derived: pick(|n| n.coupling_derived_nm),
        d_cc: pick(|n| n.d_cc_hz),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionEstimate {
    /// nm^2/s
    pub diffusion_constant_d: f64,
    /// nm
    pub diffusion_length_sigma: f64,
    /// s
    pub t2n_used: f64,
    /// nm
    pub r_n_used: f64,
    /// s
    pub t1_used: f64,
}

/// D = r_n^2 / (30 T2n) with T2n = 1/d_CC, and sigma = sqrt(2 D T1).
pub fn spin_diffusion(r_n_nm: f64, d_cc_hz: f64, t1_s: f64) -> Result<DiffusionEstimate> {
    if !(r_n_nm > 0.0 && d_cc_hz > 0.0 && t1_s >= 0.0) {
        return Err(Error::domain(format!(
            "spin diffusion needs r_n > 0, d_CC > 0, T1 >= 0 (got {r_n_nm}, {d_cc_hz}, {t1_s})"
        )));
    }
    let t2n = 1.0 / d_cc_hz;
    let d = r_n_nm * r_n_nm / (30.0 * t2n);
    Ok(DiffusionEstimate {
        diffusion_constant_d: d,
        diffusion_length_sigma: (2.0 * d * t1_s).sqrt(),
        t2n_used: t2n,
        r_n_used: r_n_nm,
        t1_used: t1_s,
    })
}
