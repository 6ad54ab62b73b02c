//! Physical constants and unit conventions.
//!
//! Frequencies are linear (Hz), fields in tesla, lengths in nm unless a name
//! says otherwise. Electron fields used in EPR-style second moments are in
//! gauss / milligauss.

use serde::{Deserialize, Serialize};

/// Tesla per gauss.
pub const TESLA_PER_GAUSS: f64 = 1e-4;

/// NV zero-field splitting (Hz).
pub const NV_ZERO_FIELD_SPLITTING_HZ: f64 = 2.87e9;
/// P1 parallel hyperfine to the host 14N (Hz).
pub const P1_A_PARALLEL_HZ: f64 = 114e6;
/// P1 perpendicular hyperfine to the host 14N (Hz).
pub const P1_A_PERPENDICULAR_HZ: f64 = 86e6;

/// Electron second-moment coefficient: M2e = 43.65 * P_e^2 mG^2 with P_e in ppm.
pub const M2E_COEFF_MG2_PER_PPM2: f64 = 43.65;

/// Spectral-width prefactor sqrt(8/pi) relating a Lorentzian derivative
/// linewidth to the square root of the second moment.
pub fn lorentzian_width_factor() -> f64 {
    (8.0 / std::f64::consts::PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    /// 13C gyromagnetic ratio, Hz/T.
    pub gamma_n: f64,
    /// Electron gyromagnetic ratio, Hz/T.
    pub gamma_e: f64,
    /// (mu0/4pi) gamma_e gamma_n hbar expressed as kHz nm^3.
    pub hbar_dipolar_prefactor: f64,
    /// Cubic cell edge, nm.
    pub a_lattice: f64,
    /// Atoms per cubic cell. 4 places atoms on the fcc sublattice of
    /// diamond (one site per primitive cell); 8 uses the full diamond basis.
    pub atoms_per_cell: u32,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            gamma_n: 10.705e6,
            gamma_e: 28.02e9,
            hbar_dipolar_prefactor: 19.79,
            a_lattice: 0.35,
            atoms_per_cell: 4,
        }
    }
}

impl PhysicalConstants {
    /// Electron gyromagnetic ratio in Hz/G.
    pub fn gamma_e_hz_per_gauss(&self) -> f64 {
        self.gamma_e * TESLA_PER_GAUSS
    }

    /// Electron-nuclear dipolar prefactor in Hz nm^3.
    pub fn electron_nuclear_hz_nm3(&self) -> f64 {
        self.hbar_dipolar_prefactor * 1e3
    }

    /// (mu0/4pi) hbar gamma_n^2 in Hz nm^3, scaled from the electron-nuclear
    /// prefactor so both couplings share one convention.
    pub fn nuclear_dipolar_hz_nm3(&self) -> f64 {
        self.electron_nuclear_hz_nm3() * self.gamma_n / self.gamma_e
    }

    /// Lattice sites per nm^3.
    pub fn site_density(&self) -> f64 {
        self.atoms_per_cell as f64 / self.a_lattice.powi(3)
    }

    /// 13C spins per nm^3 for fractional enrichment `eta`.
    pub fn carbon_density(&self, eta: f64) -> f64 {
        eta * self.site_density()
    }

    /// Larmor frequency (Hz) at field `b` (T).
    pub fn larmor(&self, b: f64) -> f64 {
        self.gamma_n * b
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.gamma_n > 0.0
            && self.gamma_e > 0.0
            && self.hbar_dipolar_prefactor > 0.0
            && self.a_lattice > 0.0
            && matches!(self.atoms_per_cell, 4 | 8);
        if ok {
            Ok(())
        } else {
            Err(crate::Error::validation(format!(
                "invalid physical constants {self:?} (atoms_per_cell must be 4 or 8)"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_values() {
        let c = PhysicalConstants::default();
        assert!((c.gamma_n / 10.705e6 - 1.0).abs() < 1e-3);
        assert!((c.hbar_dipolar_prefactor / 19.79 - 1.0).abs() < 1e-3);
        assert_eq!(c.atoms_per_cell, 4);
        assert_eq!(c.a_lattice, 0.35);
        // 2.8 MHz/G
        assert!((c.gamma_e_hz_per_gauss() / 2.802e6 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn carbon_density_per_percent() {
        let c = PhysicalConstants::default();
        // 0.92-0.93 spins/nm^3 per percent enrichment
        let per_percent = c.carbon_density(0.01);
        assert!((per_percent - 0.933).abs() < 0.01, "{per_percent}");
    }

    #[test]
    fn nuclear_prefactor_is_physical() {
        // (mu0/4pi) hbar gamma_n^2 / (2 pi) = 7.59 Hz nm^3 from CODATA values
        let c = PhysicalConstants::default();
        assert!((c.nuclear_dipolar_hz_nm3() - 7.59).abs() < 0.06);
    }
}
