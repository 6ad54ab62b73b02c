//! End-to-end simulated experiments under either acquisition strategy.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::fieldmap::FieldMap;
use super::reconstruct::{
    dynamic_wait_time, propagate_errors, ReconstructionInputs, WAIT_TIME_UNCERTAINTY_S,
};
use super::record::{Accounting, CalibrationRecord, DecayKind, DecayRecord, ExperimentRecord, ProfilePoint};
use super::shuttle::{survival_between, ShuttleProfile};
use super::simulate::stretched_exponential;
use crate::fitting::{fit_stretched_exponential, DecayCurve, FitResult, Provenance};
use crate::relaxmodel::{ProfileModel, RateProfile};
use crate::rng::stream_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "full_2D")]
    Full2d,
    #[serde(rename = "accelerated_1D")]
    Accelerated1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaitTime {
    Fixed { t_w_s: f64 },
    /// Half-contrast wait from calibrated T1 and p.
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionPlan {
    pub strategy: Strategy,
    /// Nominal relaxation fields, T.
    pub fields_t: Vec<f64>,
    /// Samples per full decay curve, taken at k * time_step_s for k = 1..=n.
    pub decay_samples: u32,
    pub time_step_s: f64,
    pub wait: WaitTime,
    /// Fields that get a full calibration curve in the accelerated strategy.
    pub calibration_fields: u32,
    #[serde(default = "one")]
    pub shots_per_point: u32,
    /// Added to every shuttled field, T.
    #[serde(default)]
    pub shuttle_offset_t: f64,
    /// Polarization, transfer and readout time charged per shot, s.
    #[serde(default)]
    pub overhead_per_shot_s: f64,
    /// Upper limit on total wall clock, s.
    #[serde(default)]
    pub budget_s: Option<f64>,
    /// Absolute signal noise sd per shot; defaults to eps0 / 400.
    #[serde(default)]
    pub noise_sd: Option<f64>,
    /// Below this field the relaxation field comes from a coil at the
    /// polarization position instead of shuttling, T.
    #[serde(default = "coil_threshold")]
    pub coil_threshold_t: f64,
    #[serde(default = "wait_uncertainty")]
    pub wait_uncertainty_s: f64,
}

fn one() -> u32 {
    1
}
fn coil_threshold() -> f64 {
    0.0208
}
fn wait_uncertainty() -> f64 {
    WAIT_TIME_UNCERTAINTY_S
}

impl AcquisitionPlan {
    pub fn new(strategy: Strategy, fields_t: Vec<f64>, decay_samples: u32, time_step_s: f64, wait: WaitTime, calibration_fields: u32) -> Self {
        Self {
            strategy,
            fields_t,
            decay_samples,
            time_step_s,
            wait,
            calibration_fields,
            shots_per_point: 1,
            shuttle_offset_t: 0.0,
            overhead_per_shot_s: 0.0,
            budget_s: None,
            noise_sd: None,
            coil_threshold_t: coil_threshold(),
            wait_uncertainty_s: WAIT_TIME_UNCERTAINTY_S,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::validation(format!("acquisition plan: {m}")));
        if self.fields_t.is_empty() {
            return bad("field grid is empty");
        }
        if self.fields_t.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return bad("fields must be positive and finite");
        }
        if self.decay_samples == 0 || self.calibration_fields == 0 || self.shots_per_point == 0 {
            return bad("sample, calibration and shot counts must be >= 1");
        }
        if self.strategy == Strategy::Accelerated1d && self.calibration_fields as usize > self.fields_t.len() {
            return bad("more calibration fields than field points");
        }
        if !(self.time_step_s > 0.0 && self.time_step_s.is_finite()) {
            return bad("time step must be positive");
        }
        if let WaitTime::Fixed { t_w_s } = self.wait {
            if !(t_w_s > 0.0 && t_w_s.is_finite()) {
                return bad("wait time must be positive");
            }
        }
        if !(self.overhead_per_shot_s >= 0.0 && self.wait_uncertainty_s >= 0.0 && self.coil_threshold_t >= 0.0) {
            return bad("overhead, wait uncertainty and coil threshold must be >= 0");
        }
        if !self.shuttle_offset_t.is_finite() {
            return bad("shuttle offset must be finite");
        }
        if matches!(self.budget_s, Some(b) if !(b > 0.0)) {
            return bad("budget must be positive");
        }
        if matches!(self.noise_sd, Some(s) if !(s >= 0.0)) {
            return bad("noise sd must be >= 0");
        }
        Ok(())
    }

    fn curve_times(&self) -> Vec<f64> {
        (1..=self.decay_samples).map(|k| k as f64 * self.time_step_s).collect()
    }

    /// Sum of sample times of one full curve: dt n(n+1)/2.
    fn curve_cost(&self) -> f64 {
        let n = self.decay_samples as f64;
        self.time_step_s * n * (n + 1.0) / 2.0
    }

    /// Indices into `fields_t` that get calibration curves, spread evenly
    /// over the field-sorted grid.
    pub fn calibration_indices(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.fields_t.len()).collect();
        order.sort_by(|&a, &b| self.fields_t[a].total_cmp(&self.fields_t[b]));
        let nd = (self.calibration_fields as usize).min(order.len());
        let n = order.len();
        if nd == 1 {
            return vec![order[(n - 1) / 2]];
        }
        let mut idx: Vec<usize> = (0..nd)
            .map(|j| order[((j * (n - 1)) as f64 / (nd - 1) as f64).round() as usize])
            .collect();
        idx.dedup();
        idx
    }
}

/// Stretch factor as a function of field: `p_low` below `threshold_t`,
/// `p_high` at and above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StretchRule {
    pub threshold_t: f64,
    pub p_low: f64,
    pub p_high: f64,
}

impl Default for StretchRule {
    fn default() -> Self {
        Self {
            threshold_t: 0.1,
            p_low: 0.75,
            p_high: 1.0,
        }
    }
}

impl StretchRule {
    pub fn p_at(&self, b: f64) -> f64 {
        if b < self.threshold_t {
            self.p_low
        } else {
            self.p_high
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub model: ProfileModel,
    /// Signal right after polarization, before transfer losses.
    pub eps0: f64,
    #[serde(default)]
    pub stretch: StretchRule,
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let s = &self.stretch;
        if !(self.eps0 > 0.0 && s.p_low > 0.0 && s.p_low <= 1.05 && s.p_high > 0.0 && s.p_high <= 1.05) {
            return Err(Error::validation("ground truth needs eps0 > 0 and p in (0, 1.05]"));
        }
        Ok(())
    }
}

struct FieldPath {
    nominal: f64,
    actual: f64,
    /// ln of the survival over the nominal transfer.
    ln_survival: f64,
}

struct Simulator<'a> {
    plan: &'a AcquisitionPlan,
    truth: &'a GroundTruth,
    shuttle: &'a ShuttleProfile,
    noise_sd: f64,
    seed: u64,
    normal: Normal<f64>,
}

impl Simulator<'_> {
    fn path(&self, map: &FieldMap, b: f64) -> Result<FieldPath> {
        let (x_pol, x_det) = map.range_mm();
        let speed = self.shuttle.speed_mm_per_s();
        let rate = &self.truth.model as &dyn RateProfile;
        if b < self.plan.coil_threshold_t {
            let t = (x_det - x_pol) / speed;
            let s = survival_between(map, x_pol, x_det, t, rate)?;
            return Ok(FieldPath { nominal: b, actual: b, ln_survival: s.ln() });
        }
        let actual = b + self.plan.shuttle_offset_t;
        let x = map.position_for_field(actual).map_err(|_| {
            let (b0, b1) = (map.fields_t[0], *map.fields_t.last().unwrap());
            Error::Planning(format!(
                "field {actual} T is neither coil-reachable (< {} T) nor within the shuttle range [{b0}, {b1}] T",
                self.plan.coil_threshold_t
            ))
        })?;
        let s1 = survival_between(map, x_pol, x, (x - x_pol) / speed, rate)?;
        let s2 = survival_between(map, x, x_det, (x_det - x) / speed, rate)?;
        Ok(FieldPath { nominal: b, actual, ln_survival: s1.ln() + s2.ln() })
    }

    /// Shot-averaged signal after waiting `t` at the path's field.
    fn measure(&self, path: &FieldPath, t: f64, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        let rate = self.truth.model.rate(path.actual);
        let p = self.truth.stretch.p_at(path.actual);
        let shots = self.plan.shots_per_point;
        let t_nom = self.shuttle.transfer_time_s;
        let mut acc = 0.0;
        for _ in 0..shots {
            let tt = (t_nom + self.shuttle.time_jitter_s * self.normal.sample(rng)).max(0.0);
            let surv = (path.ln_survival * tt / t_nom).exp();
            let clean = stretched_exponential(t, 1.0 / rate, p, self.truth.eps0 * surv);
            acc += clean + self.noise_sd * self.normal.sample(rng);
        }
        acc / shots as f64
    }

    fn full_curve(&self, path: &FieldPath, stream: u64) -> (DecayCurve, Result<FitResult>) {
        let mut rng = stream_rng(self.seed, stream);
        let times = self.plan.curve_times();
        let signals: Vec<f64> = times.iter().map(|&t| self.measure(path, t, &mut rng)).collect();
        let curve = DecayCurve::new(path.nominal, times, signals);
        let fit = fit_stretched_exponential(&curve, None);
        (curve, fit)
    }
}

fn stream_id(index: usize, phase: u64) -> u64 {
    ((index as u64) << 4) | phase
}

fn interp_loglog(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.len() == 1 || x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|v| *v <= x) - 1;
    let u = (x.ln() - xs[i].ln()) / (xs[i + 1].ln() - xs[i].ln());
    (ys[i].ln() + u * (ys[i + 1].ln() - ys[i].ln())).exp()
}

/// Simulates `plan` against `truth` and reconstructs the rate profile.
pub fn run_plan(
    plan: &AcquisitionPlan,
    truth: &GroundTruth,
    map: &FieldMap,
    shuttle: &ShuttleProfile,
    seed: u64,
) -> Result<ExperimentRecord> {
    plan.validate()?;
    truth.validate()?;
    shuttle.validate()?;
    let sim = Simulator {
        plan,
        truth,
        shuttle,
        noise_sd: plan.noise_sd.unwrap_or(truth.eps0 / 400.0),
        seed,
        normal: Normal::new(0.0, 1.0).expect("unit normal"),
    };
    let paths = plan
        .fields_t
        .iter()
        .map(|&b| sim.path(map, b))
        .collect::<Result<Vec<_>>>()?;
    let shots = plan.shots_per_point as f64;
    let curve_shots = plan.decay_samples as f64 * shots;
    let check_budget = |planned: f64| match plan.budget_s {
        Some(budget) if planned > budget => Err(Error::Planning(format!(
            "planned wall clock {planned:.1} s exceeds budget {budget:.1} s"
        ))),
        _ => Ok(()),
    };

    let mut decays = Vec::new();
    let mut profile = Vec::new();
    let mut calibrations = Vec::new();
    let mut failed_calibrations = Vec::new();
    let mut accounting = Accounting::default();
    let charge = |acc: &mut Accounting, relax: f64, n_shots: f64| {
        acc.relaxation_s += relax * shots;
        acc.n_shots += n_shots as u64;
        acc.overhead_s += n_shots * plan.overhead_per_shot_s;
    };

    match plan.strategy {
        Strategy::Full2d => {
            let n = plan.fields_t.len() as f64;
            check_budget(n * (plan.curve_cost() * shots + curve_shots * plan.overhead_per_shot_s))?;
            accounting.closed_form_s = Some(n * plan.curve_cost() * shots);
            for (i, path) in paths.iter().enumerate() {
                let (curve, fit) = sim.full_curve(path, stream_id(i, 0));
                charge(&mut accounting, plan.curve_cost(), curve_shots);
                profile.push(match fit {
                    Ok(fit) => point_from_fit(path.nominal, &fit, Provenance::FullCurve),
                    Err(e) => failed_point(path.nominal, Provenance::FullCurve, &e),
                });
                decays.push(DecayRecord::from_curve(DecayKind::Full, &curve));
            }
        }
        Strategy::Accelerated1d => {
            let cal_idx = plan.calibration_indices();
            let nd = cal_idx.len() as f64;
            let cal_cost = nd * (plan.curve_cost() * shots + curve_shots * plan.overhead_per_shot_s);
            if let WaitTime::Fixed { t_w_s } = plan.wait {
                let n = plan.fields_t.len() as f64;
                check_budget(cal_cost + n * shots * (t_w_s + plan.overhead_per_shot_s))?;
                accounting.closed_form_s = Some((n * t_w_s + nd * plan.curve_cost()) * shots);
            } else {
                check_budget(cal_cost)?;
            }
            for &i in &cal_idx {
                let (curve, fit) = sim.full_curve(&paths[i], stream_id(i, 1));
                charge(&mut accounting, plan.curve_cost(), curve_shots);
                match fit {
                    Ok(fit) if fit.converged => calibrations.push(CalibrationRecord::from_fit(paths[i].nominal, &fit)),
                    _ => failed_calibrations.push(paths[i].nominal),
                }
                decays.push(DecayRecord::from_curve(DecayKind::Calibration, &curve));
            }
            if calibrations.is_empty() {
                return Err(Error::Numerical("no calibration curve could be fitted".into()));
            }
            calibrations.sort_by(|a, b| a.field_t.total_cmp(&b.field_t));
            let cal_b: Vec<f64> = calibrations.iter().map(|c| c.field_t).collect();
            let cal_t1: Vec<f64> = calibrations.iter().map(|c| c.t1).collect();
            let nearest = |b: f64| {
                calibrations
                    .iter()
                    .min_by(|x, y| (x.field_t / b).ln().abs().total_cmp(&(y.field_t / b).ln().abs()))
                    .expect("at least one calibration")
            };
            let waits = paths
                .iter()
                .map(|path| {
                    let cal = nearest(path.nominal);
                    match plan.wait {
                        WaitTime::Fixed { t_w_s } => Ok(t_w_s),
                        WaitTime::Dynamic => dynamic_wait_time(interp_loglog(&cal_b, &cal_t1, path.nominal), cal.p),
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            let n_single = plan.fields_t.len() as f64;
            check_budget(
                cal_cost + shots * waits.iter().sum::<f64>() + n_single * shots * plan.overhead_per_shot_s,
            )?;
            for (i, (path, &t_w)) in paths.iter().zip(&waits).enumerate() {
                let cal = nearest(path.nominal);
                let mut rng = stream_rng(seed, stream_id(i, 2));
                let eps = sim.measure(path, t_w, &mut rng);
                charge(&mut accounting, t_w, shots);
                decays.push(DecayRecord {
                    field_t: path.nominal,
                    kind: DecayKind::Single,
                    times_s: vec![t_w],
                    signals: vec![eps],
                });
                let inputs = ReconstructionInputs {
                    eps_tw: eps,
                    d_eps_tw: sim.noise_sd / shots.sqrt(),
                    eps0: cal.eps0,
                    d_eps0: cal.d_eps0,
                    p: cal.p,
                    d_p: cal.d_p,
                    t_w,
                    d_t: plan.wait_uncertainty_s,
                };
                profile.push(match propagate_errors(&inputs) {
                    Ok(r) => ProfilePoint {
                        field_t: path.nominal,
                        r1_per_s: r.r1,
                        err_per_s: r.d_r1,
                        provenance: Provenance::Accelerated,
                        flags: if r.unreliable { vec!["unreliable".into()] } else { vec![] },
                    },
                    Err(e @ Error::Domain(_)) => failed_point(path.nominal, Provenance::Accelerated, &e),
                    Err(e) => return Err(e),
                });
            }
        }
    }
    accounting.total_s = accounting.relaxation_s + accounting.overhead_s;
    Ok(ExperimentRecord {
        plan: plan.clone(),
        seed,
        noise_sd: sim.noise_sd,
        decays,
        calibrations,
        failed_calibrations,
        profile,
        accounting,
    })
}

fn failed_point(b: f64, provenance: Provenance, e: &Error) -> ProfilePoint {
    let flag = match (provenance, e) {
        (Provenance::Accelerated, Error::Domain(_)) => "no_contrast",
        _ => "fit_failed",
    };
    ProfilePoint {
        field_t: b,
        r1_per_s: f64::NAN,
        err_per_s: f64::NAN,
        provenance,
        flags: vec![flag.into()],
    }
}

fn point_from_fit(b: f64, fit: &FitResult, provenance: Provenance) -> ProfilePoint {
    let t1 = fit.param("T1").expect("T1 parameter");
    let r = 1.0 / t1.value;
    let mut flags = Vec::new();
    if !fit.converged {
        flags.push("fit_not_converged".to_string());
    }
    flags.extend(fit.flags.iter().cloned());
    ProfilePoint {
        field_t: b,
        r1_per_s: r,
        err_per_s: t1.stderr.map_or(f64::NAN, |s| s * r * r),
        provenance,
        flags,
    }
}
