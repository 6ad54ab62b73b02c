//! The accelerated single-point R1 estimate and its error budget.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Wait-time uncertainty attributed to every shuttled or coil-driven point, s.
pub const WAIT_TIME_UNCERTAINTY_S: f64 = 2.0;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.05 {
        Ok(())
    } else {
        Err(Error::domain(format!("stretch p = {p} outside (0, 1.05]")))
    }
}

/// R1 = ln(eps0 / eps_tw)^(1/p) / t_w.
pub fn reconstruct_r1(eps_tw: f64, eps0: f64, p: f64, t_w: f64) -> Result<f64> {
    check_p(p)?;
    if !(t_w > 0.0) {
        return Err(Error::domain(format!("wait time must be positive, got {t_w}")));
    }
    if !(eps_tw > 0.0) {
        return Err(Error::domain(format!("signal after wait must be positive, got {eps_tw}")));
    }
    if !(eps_tw < eps0) {
        return Err(Error::domain(format!(
            "no decay contrast: eps(t_w) = {eps_tw} >= eps0 = {eps0}"
        )));
    }
    Ok((eps0 / eps_tw).ln().powf(1.0 / p) / t_w)
}

/// Wait at which eps falls to eps0 / 2: T1 (ln 2)^(1/p).
pub fn dynamic_wait_time(t1_est: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(t1_est > 0.0) {
        return Err(Error::domain(format!("T1 estimate must be positive, got {t1_est}")));
    }
    Ok(t1_est * LN_2.powf(1.0 / p))
}

/// t_2D / t_1D = N dt n(n+1) / (2 N t_w + N_d dt n(n+1)).
pub fn time_gain(n_fields: u64, n_samples: u64, dt: f64, t_w: f64, n_cal: u64) -> Result<f64> {
    if n_fields == 0 || n_samples == 0 || n_cal == 0 || !(dt > 0.0) || !(t_w >= 0.0) {
        return Err(Error::domain("time gain needs positive counts and durations"));
    }
    let (nf, n, nd) = (n_fields as f64, n_samples as f64, n_cal as f64);
    let tri = n * (n + 1.0);
    Ok(nf * dt * tri / (2.0 * nf * t_w + nd * dt * tri))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionInputs {
    pub eps_tw: f64,
    pub d_eps_tw: f64,
    pub eps0: f64,
    pub d_eps0: f64,
    pub p: f64,
    pub d_p: f64,
    pub t_w: f64,
    pub d_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatedRate {
    pub r1: f64,
    pub d_r1: f64,
    pub relative: f64,
    /// Relative error above 100%.
    pub unreliable: bool,
}

/// First-order propagation through the reconstruction formula.
pub fn propagate_errors(x: &ReconstructionInputs) -> Result<PropagatedRate> {
    let r = reconstruct_r1(x.eps_tw, x.eps0, x.p, x.t_w)?;
    if [x.d_eps_tw, x.d_eps0, x.d_p, x.d_t].iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::domain("input uncertainties must be >= 0"));
    }
    let l = (x.eps0 / x.eps_tw).ln();
    // dR/dL = R / (p L)
    let dr_dl = r / (x.p * l);
    let terms = [
        dr_dl / x.eps_tw * x.d_eps_tw,
        dr_dl / x.eps0 * x.d_eps0,
        r * l.ln() / (x.p * x.p) * x.d_p,
        r / x.t_w * x.d_t,
    ];
    let d = terms.iter().map(|t| t * t).sum::<f64>().sqrt();
    let rel = d / r;
    Ok(PropagatedRate {
        r1: r,
        d_r1: d,
        relative: rel,
        unreliable: rel > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    #[test]
    fn inversion_examples() {
        let e = std::f64::consts::E;
        assert!((reconstruct_r1(10.0 / e, 10.0, 1.0, 30.0).unwrap() - 1.0 / 30.0).abs() < 1e-15);
        assert!(matches!(reconstruct_r1(10.0, 10.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(reconstruct_r1(1.0, 10.0, 1.2, 1.0).is_err());
    }

    #[test]
    fn round_trip_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..55 {
            let t1 = 10f64.powf(rng.random_range(-1.0..2000f64.log10()));
            let p = rng.random_range(0.5..1.0);
            let tw = dynamic_wait_time(t1, p).unwrap();
            let eps = 300.0 * (-(tw / t1).powf(p)).exp();
            let r = reconstruct_r1(eps, 300.0, p, tw).unwrap();
            assert!((r * t1 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dynamic_wait_values() {
        assert!((dynamic_wait_time(10.0, 1.0).unwrap() - 10.0 * LN_2).abs() < 1e-14);
        assert!((dynamic_wait_time(10.0, 0.5).unwrap() - 10.0 * LN_2 * LN_2).abs() < 1e-14);
        let tw = dynamic_wait_time(7.0, 0.8).unwrap();
        assert!(((-(tw / 7.0f64).powf(0.8)).exp() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn time_gain_values() {
        let g = time_gain(100, 40, 10.0, 30.0, 4).unwrap();
        assert!((g - 1_640_000.0 / 71_600.0).abs() < 1e-9);
        assert!((time_gain(50, 10, 3.0, 0.0, 50).unwrap() - 1.0).abs() < 1e-15);
        let mut prev = 0.0;
        for n in 1..200 {
            let g = time_gain(100, n, 10.0, 30.0, 4).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }

    fn base() -> ReconstructionInputs {
        ReconstructionInputs {
            eps_tw: 150.0,
            d_eps_tw: 0.0,
            eps0: 300.0,
            d_eps0: 0.0,
            p: 1.0,
            d_p: 0.0,
            t_w: 20.0,
            d_t: 0.0,
        }
    }

    #[test]
    fn zero_errors_give_zero() {
        assert_eq!(propagate_errors(&base()).unwrap().d_r1, 0.0);
    }

    #[test]
    fn wait_time_only() {
        let x = ReconstructionInputs { d_t: 2.0, ..base() };
        let r = propagate_errors(&x).unwrap();
        assert!((r.relative - 2.0 / 20.0).abs() < 1e-14);
        let y = ReconstructionInputs { d_t: 30.0, ..base() };
        assert!(propagate_errors(&y).unwrap().unreliable);
    }

    #[test]
    fn propagation_matches_monte_carlo() {
        let x = ReconstructionInputs {
            eps_tw: 140.0,
            d_eps_tw: 1.5,
            eps0: 310.0,
            d_eps0: 3.0,
            p: 0.8,
            d_p: 0.01,
            t_w: 25.0,
            d_t: 2.0,
        };
        let lin = propagate_errors(&x).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = Normal::new(0.0, 1.0).unwrap();
        let rs: Vec<f64> = (0..1000)
            .map(|_| {
                reconstruct_r1(
                    x.eps_tw + x.d_eps_tw * n.sample(&mut rng),
                    x.eps0 + x.d_eps0 * n.sample(&mut rng),
                    x.p + x.d_p * n.sample(&mut rng),
                    x.t_w + x.d_t * n.sample(&mut rng),
                )
                .unwrap()
            })
            .collect();
        let (_, sd) = crate::lattice::mean_sd(&rs);
        let ratio = lin.d_r1 / sd;
        assert!(ratio > 0.5 && ratio < 2.0, "{ratio}");
    }
}
