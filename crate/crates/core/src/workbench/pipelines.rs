//! Named pipelines. Each builds an in-memory output set that is committed
//! with its manifest only when every stage succeeded.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ModelBlock, RunConfig};
use super::format::sci;
use super::ingest::{read_decays, read_fieldmap, read_profile, read_spectrum};
use super::output::{file_digest, FileDigest, OutputSet, RunManifest};
use crate::acquisition::{run_plan, time_gain, FieldMap, GroundTruth, WaitTime};
use crate::epr::{analyze_spectrum, segment_peaks_with, EprSpectrum};
use crate::fitting::{fit_relaxation_profile, fit_stretched_exponential, FitResult};
use crate::lattice::{
    detection_barrier_radius, electron_bath_statistics, electron_linewidth_hz, nearest_neighbor_stats,
    nv_default_axis, nv_hyperfine_stats, p1_hyperfine_second_moment_analytic,
    p1_hyperfine_second_moment_numeric, poisson_interspin_distance, LatticeConfig, P1NumericConfig,
};
use crate::relaxmodel::{
    crossover_field, knee_fields, phase_noise, twice_saturation_knee, ProfileModel, RateChannel, RateModel,
    RateProfile,
};
use crate::{Error, PhysicalConstants, Result};

pub const OUTPUT_ROOT_ENV: &str = "RELAXO_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Pipeline {
    LatticeStats,
    ModelEval,
    ProfileFit,
    DecayFit,
    AcqSim,
    Epr,
    PaperRepro,
}

impl Pipeline {
    pub const ALL: [Pipeline; 7] = [
        Pipeline::LatticeStats,
        Pipeline::ModelEval,
        Pipeline::ProfileFit,
        Pipeline::DecayFit,
        Pipeline::AcqSim,
        Pipeline::Epr,
        Pipeline::PaperRepro,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::LatticeStats => "lattice-stats",
            Pipeline::ModelEval => "model-eval",
            Pipeline::ProfileFit => "profile-fit",
            Pipeline::DecayFit => "decay-fit",
            Pipeline::AcqSim => "acq-sim",
            Pipeline::Epr => "epr",
            Pipeline::PaperRepro => "paper-repro",
        }
    }
}

/// Config value, then `$RELAXO_OUTPUT_ROOT/<pipeline>`, then
/// `relaxo-out/<pipeline>`.
pub fn output_dir(p: Pipeline, cfg: &RunConfig) -> PathBuf {
    if let Some(d) = &cfg.output_dir {
        return d.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("relaxo-out"), PathBuf::from);
    root.join(p.name())
}

struct Run {
    out: OutputSet,
    inputs: Vec<FileDigest>,
    seeds: Vec<u64>,
}

impl Run {
    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(file_digest(path)?);
        Ok(())
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s += &r.join(",");
        s.push('\n');
    }
    s
}

/// Runs `p` without touching the filesystem beyond reading inputs.
pub fn run_pipeline(p: Pipeline, cfg: &RunConfig) -> Result<(OutputSet, RunManifest)> {
    let mut run = Run {
        out: OutputSet::new(),
        inputs: Vec::new(),
        seeds: Vec::new(),
    };
    let consts = cfg.constants();
    consts.validate()?;
    let stage = |e: Error| e.in_stage(p.name());
    match p {
        Pipeline::LatticeStats => lattice_stats(&mut run, cfg, &consts),
        Pipeline::ModelEval => model_eval(&mut run, cfg),
        Pipeline::ProfileFit => profile_fit(&mut run, cfg),
        Pipeline::DecayFit => decay_fit(&mut run, cfg),
        Pipeline::AcqSim => acq_sim(&mut run, cfg),
        Pipeline::Epr => epr(&mut run, cfg),
        Pipeline::PaperRepro => paper_repro(&mut run, cfg, &consts),
    }
    .map_err(stage)?;
    if cfg.units_report == Some(true) {
        let body = units_report(&run.out);
        run.out.add("units.csv", body);
    }
    let recorded = RunConfig {
        output_dir: None,
        ..cfg.clone()
    };
    let config = serde_json::to_value(&recorded).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut m = RunManifest::new(p.name(), config, run.seeds);
    m.inputs = run.inputs;
    Ok((run.out, m))
}

/// Runs `p` and commits its outputs to `dir`.
pub fn execute(p: Pipeline, cfg: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let (out, mut m) = run_pipeline(p, cfg)?;
    m.elapsed_s = start.elapsed().as_secs_f64();
    out.commit(dir, m).map_err(|e| e.in_stage(format!("{} output", p.name())))
}

fn unit_of(col: &str) -> &'static str {
    const SUFFIXES: [(&str, &str); 14] = [
        ("_per_s_T2", "1/(s T^2)"),
        ("_per_s_T", "1/(s T)"),
        ("_per_s", "1/s"),
        ("_kHz2", "kHz^2"),
        ("_mG2", "mG^2"),
        ("_kHz", "kHz"),
        ("_Hz", "Hz"),
        ("_nm", "nm"),
        ("_mm", "mm"),
        ("_dB", "dB"),
        ("_G", "G"),
        ("_T", "T"),
        ("_s", "s"),
        ("_ppm", "ppm"),
    ];
    SUFFIXES
        .iter()
        .find(|(s, _)| col.ends_with(s))
        .map_or("1", |(_, u)| u)
}

fn units_report(out: &OutputSet) -> String {
    let mut rows = Vec::new();
    for name in out.names().filter(|n| n.ends_with(".csv")) {
        let body = out.get(name).unwrap_or_default();
        let header = std::str::from_utf8(body).unwrap_or("").lines().next().unwrap_or("");
        for col in header.split(',').filter(|c| !c.is_empty()) {
            rows.push(vec![name.clone(), col.to_string(), unit_of(col).to_string()]);
        }
    }
    csv("file,column,unit", rows)
}

fn lattice_stats(run: &mut Run, cfg: &RunConfig, consts: &PhysicalConstants) -> Result<()> {
    let b = cfg.lattice.clone().unwrap_or_default();
    let seed = cfg.seed();
    run.seeds.push(seed);
    if b.enrichments.is_empty() && b.concentrations_ppm.is_empty() {
        return Err(Error::validation("lattice-stats needs enrichments or concentrations"));
    }
    let mut carbon_rows = Vec::new();
    let mut json_carbon = Vec::new();
    for &eta in &b.enrichments {
        let lc = LatticeConfig::new(eta, b.lattice_size_nm)
            .with_seed(seed)
            .with_realizations(b.realizations)
            .with_field_direction(b.field_direction);
        lc.validate(consts)?;
        let nn = nearest_neighbor_stats(&lc, consts)?;
        let nvc = LatticeConfig::new(eta, b.nv_lattice_size_nm)
            .with_seed(seed)
            .with_realizations(b.realizations)
            .with_field_direction(b.field_direction);
        let nv = nv_hyperfine_stats(&nvc, &nv_default_axis(), b.nv_threshold_khz, consts)?;
        carbon_rows.push(vec![
            sci(eta),
            sci(nn.d_cc.value),
            sci(nn.d_cc.sd),
            sci(nn.lattice.value),
            sci(nn.lattice.sd),
            sci(nn.coupling_derived.value),
            sci(nv.rms_khz.value),
            sci(nv.n_direct.value),
            sci(nv.fraction.value),
            sci(nv.fraction.sd),
            b.realizations.to_string(),
        ]);
        json_carbon.push(serde_json::json!({"enrichment": eta, "nearest_neighbor": nn, "nv": nv}));
    }
    run.out.add(
        "carbon_stats.csv",
        csv(
            "eta,d_cc_Hz,d_cc_sd_Hz,nn_lattice_nm,nn_lattice_sd_nm,nn_coupling_nm,nv_rms_kHz,nv_n_direct,nv_direct_fraction,nv_direct_fraction_sd,realizations",
            carbon_rows,
        ),
    );
    let mut bath_rows = Vec::new();
    let mut json_bath = Vec::new();
    for &ppm in &b.concentrations_ppm {
        let s = electron_bath_statistics(ppm, b.detection_linewidth_hz, consts)?;
        let numeric = if b.numeric_hyperfine {
            let mut c = P1NumericConfig::new(ppm, b.hyperfine_enrichment)
                .with_seed(seed)
                .with_realizations(b.hyperfine_realizations);
            c.detection_linewidth_hz = b.detection_linewidth_hz;
            c.field_direction = b.field_direction;
            Some(p1_hyperfine_second_moment_numeric(&c, consts)?)
        } else {
            None
        };
        let num = |f: fn(&crate::lattice::P1NumericEstimate) -> f64| numeric.as_ref().map_or(f64::NAN, f);
        bath_rows.push(vec![
            sci(ppm),
            sci(s.mean_interspin_distance_r_e),
            sci(s.second_moment_m2e),
            sci(s.linewidth_d_ee),
            sci(s.hyperfine_second_moment_azx2),
            sci(s.barrier_radius_r0),
            sci(num(|n| n.a2.value)),
            sci(num(|n| n.a2.sd)),
            sci(num(|n| n.a_obs.value)),
            sci(num(|n| n.a_obs.sd)),
        ]);
        json_bath.push(serde_json::json!({"statistics": s, "numeric_hyperfine": numeric}));
    }
    run.out.add(
        "bath_stats.csv",
        csv(
            "concentration_ppm,r_e_nm,M2e_mG2,d_ee_Hz,A_zx2_analytic_kHz2,r0_nm,A_zx2_numeric_kHz2,A_zx2_numeric_sd_kHz2,A_obs_kHz,A_obs_sd_kHz",
            bath_rows,
        ),
    );
    run.out.add_json(
        "results.json",
        &serde_json::json!({"carbon": json_carbon, "electron_bath": json_bath}),
    )
}

fn load_model(path: Option<&PathBuf>, inline: Option<&ProfileModel>, run: &mut Run) -> Result<ProfileModel> {
    match (path, inline) {
        (_, Some(m)) => {
            m.validate()?;
            Ok(m.clone())
        }
        (Some(p), None) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            run.input(p)?;
            ProfileModel::from_toml_str(&text).map_err(|e| e.in_stage(format!("model {}", p.display())))
        }
        (None, None) => Err(Error::validation("no model given (path or inline definition)")),
    }
}

fn model_eval(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let b: &ModelBlock = cfg
        .model
        .as_ref()
        .ok_or_else(|| Error::validation("model-eval needs a [model] block or --model"))?;
    let model = load_model(b.path.as_ref(), b.definition.as_ref(), run)?;
    let fields = b.grid.fields()?;
    let b0 = b.phase_noise_reference_t;
    let rows = fields.iter().map(|&x| {
        vec![
            sci(x),
            sci(model.rate(x)),
            sci(model.rate_derivative(x, 1)),
            sci(model.rate_derivative(x, 2)),
            sci(phase_noise(&model, b0, x).unwrap_or(f64::NAN)),
        ]
    });
    run.out.add(
        "model_curve.csv",
        csv("B_T,R1_per_s,dR_dB_per_s_T,d2R_dB2_per_s_T2,phase_noise_dB", rows),
    );
    let knees = knee_fields(&model).ok();
    run.out.add_json("knees.json", &serde_json::json!({"model": model, "knees": knees}))
}

fn parameter_table(fit: &FitResult) -> String {
    csv(
        "name,value,stderr,ci_low,ci_high,fixed,at_bound",
        fit.parameters.iter().map(|p| {
            let (lo, hi) = p.ci.unwrap_or((f64::NAN, f64::NAN));
            vec![
                p.name.clone(),
                sci(p.value),
                sci(p.stderr.unwrap_or(f64::NAN)),
                sci(lo),
                sci(hi),
                p.fixed.to_string(),
                p.at_bound.to_string(),
            ]
        }),
    )
}

fn profile_fit(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let b = cfg
        .profile_fit
        .as_ref()
        .ok_or_else(|| Error::validation("profile-fit needs a [profile_fit] block or --input"))?;
    run.input(&b.input)?;
    let profile = read_profile(&b.input)?;
    let fit = fit_relaxation_profile(&profile)?;
    let fields = b.grid.fields()?;
    run.out.add(
        "fitted_curve.csv",
        csv("B_T,R1_per_s", fields.iter().map(|&x| vec![sci(x), sci(fit.model.rate(x))])),
    );
    run.out.add("parameters.csv", parameter_table(&fit.fit));
    run.out.add_json("fit.json", &fit)
}

fn decay_fit(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let b = cfg
        .decay_fit
        .as_ref()
        .ok_or_else(|| Error::validation("decay-fit needs a [decay_fit] block or --input"))?;
    run.input(&b.input)?;
    let curves = read_decays(&b.input)?;
    let mut rows = Vec::new();
    let mut profile: Vec<(f64, f64, f64)> = Vec::new();
    for c in &curves {
        let get = |f: &FitResult, n: &str| {
            f.param(n).map_or((f64::NAN, f64::NAN), |p| (p.value, p.stderr.unwrap_or(f64::NAN)))
        };
        let (row, conv, flags) = match fit_stretched_exponential(c, b.fix_p) {
            Ok(f) => {
                let (t1, dt1) = get(&f, "T1");
                let (p, dp) = get(&f, "p");
                let (e0, de0) = get(&f, "eps0");
                if f.converged {
                    profile.push((c.field_b, 1.0 / t1, dt1 / (t1 * t1)));
                }
                ([t1, dt1, p, dp, e0, de0], f.converged, f.flags.join(";"))
            }
            Err(e) => ([f64::NAN; 6], false, format!("fit_failed: {e}").replace(',', ";")),
        };
        let mut r = vec![sci(c.field_b)];
        r.extend(row.iter().map(|v| sci(*v)));
        r.push(c.times.len().to_string());
        r.push(conv.to_string());
        r.push(flags);
        rows.push(r);
    }
    run.out.add(
        "decay_fits.csv",
        csv("B_T,T1_s,T1_err_s,p,p_err,eps0,eps0_err,n_points,converged,flags", rows),
    );
    profile.sort_by(|a, b| a.0.total_cmp(&b.0));
    run.out.add(
        "profile.csv",
        csv(
            "B_T,R1_per_s,err,provenance",
            profile.iter().map(|(x, r, e)| vec![sci(*x), sci(*r), sci(*e), "full_curve".into()]),
        ),
    );
    Ok(())
}

fn acq_sim(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let b = cfg.acquisition.clone().unwrap_or_default();
    let seed = cfg.seed();
    run.seeds.push(seed);
    let model = match (&b.truth.model_path, &b.truth.definition) {
        (None, None) => demo_truth(),
        (p, d) => load_model(p.as_ref(), d.as_ref(), run)?,
    };
    let truth = GroundTruth {
        model,
        eps0: b.truth.eps0,
        stretch: b.truth.stretch,
    };
    let map = match &b.fieldmap {
        Some(p) => {
            run.input(p)?;
            read_fieldmap(p)?
        }
        None => FieldMap::demo(),
    };
    let rec = run_plan(&b.plan, &truth, &map, &b.shuttle, seed)?;
    for (name, body) in rec.files()? {
        run.out.add(name, body);
    }
    run.out.add(
        "truth.csv",
        csv(
            "B_T,R1_per_s,p",
            b.plan.fields_t.iter().map(|&x| {
                let actual = if x < b.plan.coil_threshold_t { x } else { x + b.plan.shuttle_offset_t };
                vec![sci(x), sci(truth.model.rate(actual)), sci(truth.stretch.p_at(actual))]
            }),
        ),
    );
    if let WaitTime::Fixed { t_w_s } = b.plan.wait {
        let g = time_gain(
            b.plan.fields_t.len() as u64,
            b.plan.decay_samples as u64,
            b.plan.time_step_s,
            t_w_s,
            b.plan.calibration_indices().len() as u64,
        )?;
        run.out.add("time_gain.csv", csv("quantity,value", [vec!["time_gain".into(), sci(g)]]));
    }
    Ok(())
}

/// Two-Tsallian truth used when no model is configured.
pub fn demo_truth() -> ProfileModel {
    use crate::relaxmodel::{TsallianComponent, TwoTsallian};
    ProfileModel::TwoTsallian(TwoTsallian::new(
        TsallianComponent::new(0.08, 0.01, 1.5),
        TsallianComponent::new(0.02, 0.3, 1.8),
        2e-3,
    ))
}

fn epr(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let b = cfg
        .epr
        .as_ref()
        .ok_or_else(|| Error::validation("epr needs an [epr] block or --input"))?;
    if b.inputs.is_empty() {
        return Err(Error::validation("epr needs at least one spectrum"));
    }
    if !(b.spin_scale > 0.0) {
        return Err(Error::validation("spin_scale must be positive"));
    }
    let mut peak_rows = Vec::new();
    let mut summary = Vec::new();
    let mut integral_rows = Vec::new();
    let mut first_width = None;
    for (si, path) in b.inputs.iter().enumerate() {
        run.input(path)?;
        let spec: EprSpectrum = read_spectrum(path)?;
        let n_ranges = segment_peaks_with(&spec, &b.segment)?.len();
        let mut baselines = vec![None; n_ranges];
        for o in b.baseline_overrides.iter().filter(|o| o.spectrum == si) {
            if o.peak >= n_ranges {
                return Err(Error::validation(format!(
                    "baseline override for peak {} but spectrum {si} has {n_ranges} peaks",
                    o.peak
                )));
            }
            baselines[o.peak] = Some(o.offset);
        }
        let a = analyze_spectrum(&spec, &baselines)?;
        for (pi, p) in a.peaks.iter().enumerate() {
            peak_rows.push(vec![
                si.to_string(),
                pi.to_string(),
                p.range.start.to_string(),
                p.range.end.to_string(),
                sci(p.center),
                sci(p.fwhm.unwrap_or(f64::NAN)),
                sci(p.q),
                sci(p.height),
                sci(p.baseline_offset),
                p.converged.to_string(),
            ]);
        }
        let total: f64 = a.integral.step_heights.iter().sum();
        let w = a.weighted_fwhm_g.unwrap_or(f64::NAN);
        let ratio = match first_width {
            None => {
                first_width = Some(w);
                1.0
            }
            Some(w0) => w / w0,
        };
        summary.push(vec![
            si.to_string(),
            path.file_name().map_or(String::new(), |n| n.to_string_lossy().replace(',', "_")),
            a.peaks.len().to_string(),
            sci(w),
            sci(ratio),
            sci(total),
            sci(total * b.spin_scale),
        ]);
        for (i, x) in spec.field_g.iter().enumerate() {
            integral_rows.push(vec![
                si.to_string(),
                sci(*x),
                sci(a.integral.first_integral[i]),
                sci(a.integral.second_integral[i]),
            ]);
        }
    }
    run.out.add(
        "peaks.csv",
        csv("spectrum,peak,start,end,center_G,fwhm_G,q,height,baseline,converged", peak_rows),
    );
    run.out.add(
        "summary.csv",
        csv("spectrum,file,n_peaks,weighted_fwhm_G,width_ratio_to_first,double_integral,spin_count", summary),
    );
    run.out.add(
        "integrals.csv",
        csv("spectrum,field_G,first_integral,second_integral", integral_rows),
    );
    Ok(())
}

/// P1 concentrations and bath hyperfine second moments behind the
/// calculated 17 ppm and 48 ppm curves.
pub const PAPER_P1_MODELS: [(f64, f64); 2] = [(17.0, 0.39), (48.0, 0.45)];

/// P1-bath-only rate model for `ppm` with linewidth from the concentration.
pub fn paper_p1_model(ppm: f64, a2_khz2: f64, consts: &PhysicalConstants) -> Result<RateModel> {
    let m = RateModel::new(vec![RateChannel::P1Bath {
        a2_khz2,
        d_ee_hz: electron_linewidth_hz(ppm, consts)?,
    }])
    .with_gamma_n(consts.gamma_n);
    m.validate()?;
    Ok(m)
}

fn paper_repro(run: &mut Run, cfg: &RunConfig, consts: &PhysicalConstants) -> Result<()> {
    let grid = cfg.paper_repro.clone().unwrap_or_default().grid.fields()?;
    let models = PAPER_P1_MODELS
        .iter()
        .map(|&(ppm, a2)| paper_p1_model(ppm, a2, consts))
        .collect::<Result<Vec<_>>>()?;
    let b0 = 1e-3;
    run.out.add(
        "model_curves.csv",
        csv(
            "B_T,R1_17ppm_per_s,R1_48ppm_per_s,phase_noise_17ppm_dB,phase_noise_48ppm_dB",
            grid.iter().map(|&x| {
                vec![
                    sci(x),
                    sci(models[0].rate(x)),
                    sci(models[1].rate(x)),
                    sci(phase_noise(&models[0], b0, x).unwrap_or(f64::NAN)),
                    sci(phase_noise(&models[1], b0, x).unwrap_or(f64::NAN)),
                ]
            }),
        ),
    );
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut put = |k: String, v: f64, unit: &str| rows.push(vec![k, sci(v), unit.to_string()]);
    for ppm in [1.0, 17.0, 48.0, 100.0] {
        put(format!("r_e_{ppm}ppm"), poisson_interspin_distance(ppm, consts)?, "nm");
        put(format!("d_ee_{ppm}ppm"), electron_linewidth_hz(ppm, consts)?, "Hz");
    }
    let r0 = detection_barrier_radius(2000.0, consts)?;
    put("r0_2kHz".into(), r0, "nm");
    for (m, &(ppm, _)) in models.iter().zip(&PAPER_P1_MODELS) {
        let d = m.p1_width_hz().unwrap_or(f64::NAN);
        put(format!("profile_width_{ppm}ppm"), d / consts.gamma_n, "T");
        put(format!("bk1_analytic_{ppm}ppm"), m.analytic_bk1().unwrap_or(f64::NAN), "T");
        put(
            format!("bk1_twice_saturation_{ppm}ppm"),
            twice_saturation_knee(m).unwrap_or(f64::NAN),
            "T",
        );
        let r_e = poisson_interspin_distance(ppm, consts)?;
        put(
            format!("A_zx2_analytic_r0_2.15nm_{ppm}ppm"),
            p1_hyperfine_second_moment_analytic(r_e, 2.15, consts).unwrap_or(f64::NAN),
            "kHz^2",
        );
        if let Some(z) = m.zero_field_p1() {
            put(format!("zero_field_rate_{ppm}ppm"), z.consistent_hz, "1/s");
        }
    }
    put(
        "crossover_17_48ppm".into(),
        crossover_field(&models[0], &models[1], 1e-3, 7.0).unwrap_or(f64::NAN),
        "T",
    );
    put("time_gain_100_40_10s_30s_4".into(), time_gain(100, 40, 10.0, 30.0, 4)?, "1");
    run.out.add("derived.csv", csv("quantity,value,unit", rows));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_repro_is_deterministic() {
        let cfg = RunConfig::default();
        let (a, _) = run_pipeline(Pipeline::PaperRepro, &cfg).unwrap();
        let (b, _) = run_pipeline(Pipeline::PaperRepro, &cfg).unwrap();
        for n in a.names() {
            assert_eq!(a.get(n), b.get(n));
        }
        let d = String::from_utf8(a.get("derived.csv").unwrap().to_vec()).unwrap();
        assert!(d.contains("crossover_17_48ppm"));
    }

    #[test]
    fn missing_blocks_are_validation_errors() {
        for p in [Pipeline::ModelEval, Pipeline::ProfileFit, Pipeline::DecayFit, Pipeline::Epr] {
            let e = run_pipeline(p, &RunConfig::default()).unwrap_err();
            assert_eq!(e.class(), crate::ErrorClass::Validation, "{p:?}");
        }
    }

    #[test]
    fn units_follow_suffixes() {
        assert_eq!(unit_of("R1_per_s"), "1/s");
        assert_eq!(unit_of("B_T"), "T");
        assert_eq!(unit_of("d2R_dB2_per_s_T2"), "1/(s T^2)");
        assert_eq!(unit_of("signal"), "1");
    }
}
