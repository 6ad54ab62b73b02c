//! Closed-form statistics of a randomly placed electron bath.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::constants::{lorentzian_width_factor, M2E_COEFF_MG2_PER_PPM2};
use crate::{Error, PhysicalConstants, Result};

/// Bohr magneton in erg/G.
const BOHR_MAGNETON_CGS: f64 = 9.27e-21;
const ELECTRON_G: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathStatistics {
    pub concentration_ppm: f64,
    /// Median nearest-electron distance, nm.
    pub mean_interspin_distance_r_e: f64,
    /// mG^2
    pub second_moment_m2e: f64,
    /// Hz
    pub linewidth_d_ee: f64,
    /// kHz^2
    pub hyperfine_second_moment_azx2: f64,
    /// nm
    pub barrier_radius_r0: f64,
}

fn check_ppm(ppm: f64) -> Result<()> {
    if ppm > 0.0 && ppm.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "electron concentration must be positive, got {ppm} ppm"
        )))
    }
}

/// Electrons per nm^3 at `ppm` of lattice sites.
pub fn electron_density(ppm: f64, consts: &PhysicalConstants) -> f64 {
    consts.atoms_per_cell as f64 * 1e-6 * ppm / consts.a_lattice.powi(3)
}

/// Distance at which a Poisson bath of density N_e has probability 1/2 of
/// holding no electron: r = (3 ln2 / (4 pi N_e))^(1/3).
pub fn poisson_interspin_distance(ppm: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_ppm(ppm)?;
    let n_e = electron_density(ppm, consts);
    Ok((3.0 * LN_2 / (4.0 * PI * n_e)).cbrt())
}

/// M2e = 43.65 P_e^2 in mG^2.
pub fn electron_second_moment_mg2(ppm: f64) -> Result<f64> {
    check_ppm(ppm)?;
    Ok(M2E_COEFF_MG2_PER_PPM2 * ppm * ppm)
}

/// Van Vleck second moment 9/20 (g muB)^2 / r^6 in mG^2 for a given
/// inter-electron distance (nm).
pub fn electron_second_moment_from_distance_mg2(r_e_nm: f64) -> f64 {
    let r_cm = r_e_nm * 1e-7;
    let g2 = 0.45 * (ELECTRON_G * BOHR_MAGNETON_CGS).powi(2) / r_cm.powi(6);
    g2 * 1e6
}

/// Electron linewidth gamma_e sqrt(8/pi) sqrt(M2e), in Hz.
pub fn electron_linewidth_hz(ppm: f64, consts: &PhysicalConstants) -> Result<f64> {
    let m2 = electron_second_moment_mg2(ppm)?;
    let width_mg = lorentzian_width_factor() * m2.sqrt();
    Ok(consts.gamma_e_hz_per_gauss() * width_mg * 1e-3)
}

/// Radius inside which the electron-nuclear coupling exceeds the detected
/// NMR linewidth, nm.
pub fn detection_barrier_radius(detection_linewidth_hz: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(detection_linewidth_hz > 0.0) {
        return Err(Error::domain("detection linewidth must be positive"));
    }
    Ok((consts.hbar_dipolar_prefactor / (detection_linewidth_hz * 1e-3)).cbrt())
}

/// Continuum estimate of <A_zx^2> (kHz^2) for nuclei between the detection
/// barrier `r0` and the electron sphere of influence `r_e`, with the
/// (3 sin cos)^2 angular average evaluating to 6/5.
pub fn p1_hyperfine_second_moment_analytic(
    r_e_nm: f64,
    r0_nm: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if !(r0_nm > 0.0 && r_e_nm > 0.0) {
        return Err(Error::domain("radii must be positive"));
    }
    if r0_nm >= r_e_nm {
        return Err(Error::degenerate(format!(
            "barrier radius {r0_nm} nm does not lie inside the sphere of influence {r_e_nm} nm"
        )));
    }
    let k = consts.hbar_dipolar_prefactor;
    let inv_re3 = r_e_nm.powi(-3);
    Ok(k * k * 1.2 * inv_re3 * (r0_nm.powi(-3) - inv_re3))
}

pub fn electron_bath_statistics(
    ppm: f64,
    detection_linewidth_hz: f64,
    consts: &PhysicalConstants,
) -> Result<BathStatistics> {
    let r_e = poisson_interspin_distance(ppm, consts)?;
    let r0 = detection_barrier_radius(detection_linewidth_hz, consts)?;
    Ok(BathStatistics {
        concentration_ppm: ppm,
        mean_interspin_distance_r_e: r_e,
        second_moment_m2e: electron_second_moment_mg2(ppm)?,
        linewidth_d_ee: electron_linewidth_hz(ppm, consts)?,
        hyperfine_second_moment_azx2: p1_hyperfine_second_moment_analytic(r_e, r0, consts)?,
        barrier_radius_r0: r0,
    })
}
