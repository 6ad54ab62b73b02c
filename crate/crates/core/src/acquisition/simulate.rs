use rand_distr::{Distribution, Normal};

use crate::fitting::DecayCurve;
use crate::rng::stream_rng;
use crate::{Error, Result};

/// eps0 exp(-(t/T1)^p).
pub fn stretched_exponential(t: f64, t1: f64, p: f64, eps0: f64) -> f64 {
    eps0 * (-(t / t1).powf(p)).exp()
}

/// Stretched-exponential decay sampled on `t_grid` with Gaussian noise of
/// sd `noise_sd`, drawn from stream 0 of `seed`.
pub fn simulate_decay(
    t1: f64,
    p: f64,
    eps0: f64,
    t_grid: &[f64],
    noise_sd: f64,
    seed: u64,
) -> Result<DecayCurve> {
    simulate_decay_stream(t1, p, eps0, t_grid, noise_sd, seed, 0)
}

pub(crate) fn simulate_decay_stream(
    t1: f64,
    p: f64,
    eps0: f64,
    t_grid: &[f64],
    noise_sd: f64,
    seed: u64,
    stream: u64,
) -> Result<DecayCurve> {
    if !(t1 > 0.0 && p > 0.0 && eps0.is_finite() && noise_sd >= 0.0) {
        return Err(Error::domain(format!(
            "invalid decay parameters T1 = {t1}, p = {p}, eps0 = {eps0}, sd = {noise_sd}"
        )));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::domain("decay times must be finite and >= 0"));
    }
    let mut rng = stream_rng(seed, stream);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let signals = t_grid
        .iter()
        .map(|&t| stretched_exponential(t, t1, p, eps0) + noise_sd * normal.sample(&mut rng))
        .collect();
    Ok(DecayCurve::new(f64::NAN, t_grid.to_vec(), signals))
}
