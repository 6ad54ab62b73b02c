use crate::{Error, Result};

pub const KHZ2_TO_HZ2: f64 = 1e6;

/// S(omega) = 2 tau_c / (1 + omega^2 tau_c^2).
pub fn lorentzian_spectral_density(omega: f64, tau_c: f64) -> Result<f64> {
    if !(tau_c > 0.0) {
        return Err(Error::domain(format!("tau_c must be positive, got {tau_c}")));
    }
    Ok(2.0 * tau_c / (1.0 + (omega * tau_c).powi(2)))
}

/// BPP rate from the P1 bath: A2 d_ee / (omega_L^2 + d_ee^2).
pub fn p1_bath_rate(omega_l: f64, a2_khz2: f64, d_ee_hz: f64) -> Result<f64> {
    if !(d_ee_hz > 0.0) {
        return Err(Error::domain(format!("d_ee must be positive, got {d_ee_hz}")));
    }
    Ok(a2_khz2 * KHZ2_TO_HZ2 * d_ee_hz / (omega_l * omega_l + d_ee_hz * d_ee_hz))
}

/// Rate from a single electron with lifetime T1e: A2 T1e / (1 + omega_L^2 T1e^2).
pub fn single_electron_rate(omega_l: f64, a2_khz2: f64, t1e_s: f64) -> Result<f64> {
    if !(t1e_s > 0.0) {
        return Err(Error::domain(format!("T1e must be positive, got {t1e_s}")));
    }
    Ok(a2_khz2 * KHZ2_TO_HZ2 * t1e_s / (1.0 + (omega_l * t1e_s).powi(2)))
}

/// Low-field turning point d_CC / (2 gamma_n), T.
pub fn nuclear_dipolar_knee(d_cc_hz: f64, gamma_n: f64) -> Result<f64> {
    if !(d_cc_hz > 0.0 && gamma_n > 0.0) {
        return Err(Error::domain("d_CC and gamma_n must be positive"));
    }
    Ok(d_cc_hz / (2.0 * gamma_n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_points() {
        let t = 3e-3;
        assert_eq!(lorentzian_spectral_density(0.0, t).unwrap(), 2.0 * t);
        assert!((lorentzian_spectral_density(1.0 / t, t).unwrap() - t).abs() < 1e-18);
        assert!(lorentzian_spectral_density(1.0, 0.0).is_err());
    }

    #[test]
    fn lorentzian_normalized() {
        // substitute omega = tan(u) / tau to map the real line onto (-pi/2, pi/2)
        let tau = 0.7;
        let n = 200_000;
        let h = std::f64::consts::PI / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let u = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h;
            let w = u.tan() / tau;
            let jac = 1.0 / (tau * u.cos().powi(2));
            s += lorentzian_spectral_density(w, tau).unwrap() * jac * h;
        }
        let integral = s / (2.0 * std::f64::consts::PI);
        assert!((integral - 1.0).abs() < 1e-6, "{integral}");
    }

    #[test]
    fn bpp_half_point_and_width() {
        let d = 5e5;
        let r0 = p1_bath_rate(0.0, 0.39, d).unwrap();
        assert!((p1_bath_rate(d, 0.39, d).unwrap() / r0 - 0.5).abs() < 1e-15);
        // 17 ppm chain: 10.5 mG/ppm x 2.8 MHz/G
        let d17 = 10.5 * 17.0 * 1e-3 * 2.8e6;
        let width_mt: f64 = d17 / 10.705e6 * 1e3;
        assert!((width_mt - 46.7).abs() / 46.7 < 0.02);
    }

    #[test]
    fn single_electron_limits() {
        assert!((single_electron_rate(0.0, 0.4, 1e-3).unwrap() - 400.0).abs() < 1e-9);
        assert!(single_electron_rate(1e12, 0.4, 1e-3).unwrap() < 1e-12);
        // width 1/T1e = 1 kHz sits near 0.1 mT in field
        let width_t: f64 = (1.0 / 1e-3) / 10.705e6;
        assert!((width_t - 0.1e-3).abs() < 0.01e-3);
        let r0 = single_electron_rate(0.0, 0.4, 1e-3).unwrap();
        let half = single_electron_rate(10.705e6 * width_t, 0.4, 1e-3).unwrap();
        assert!((half / r0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dipolar_knee_values() {
        let k = nuclear_dipolar_knee(850.0, 10.705e6).unwrap();
        assert!((k / 39.7e-6 - 1.0).abs() < 0.01);
        assert_eq!(nuclear_dipolar_knee(1700.0, 10.705e6).unwrap(), 2.0 * k);
    }
}
