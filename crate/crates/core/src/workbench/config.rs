//! TOML run configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionPlan, ShuttleProfile, Strategy, StretchRule, WaitTime};
use crate::epr::SegmentOptions;
use crate::lattice::{default_field_direction, Vec3};
use crate::relaxmodel::ProfileModel;
use crate::{Error, PhysicalConstants, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Also write units.csv describing every exported column.
    pub units_report: Option<bool>,
    pub constants: Option<PhysicalConstants>,
    pub lattice: Option<LatticeBlock>,
    pub model: Option<ModelBlock>,
    pub profile_fit: Option<ProfileFitBlock>,
    pub decay_fit: Option<DecayFitBlock>,
    pub acquisition: Option<AcquisitionBlock>,
    pub epr: Option<EprBlock>,
    pub paper_repro: Option<PaperReproBlock>,
}

pub const DEFAULT_SEED: u64 = 20_160_101;

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads `path`; relative paths inside are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| e.in_stage(format!("config {}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = self.output_dir.as_mut() {
            fix(d);
        }
        if let Some(m) = self.model.as_mut() {
            m.path.as_mut().map(fix);
        }
        if let Some(f) = self.profile_fit.as_mut() {
            fix(&mut f.input);
        }
        if let Some(f) = self.decay_fit.as_mut() {
            fix(&mut f.input);
        }
        if let Some(a) = self.acquisition.as_mut() {
            a.fieldmap.as_mut().map(fix);
            a.truth.model_path.as_mut().map(fix);
        }
        if let Some(e) = self.epr.as_mut() {
            e.inputs.iter_mut().for_each(fix);
        }
    }

    /// Fields set here win over `flags`; blocks are taken whole.
    pub fn overlay(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            seed: self.seed.or(flags.seed),
            output_dir: self.output_dir.or(flags.output_dir),
            units_report: self.units_report.or(flags.units_report),
            constants: self.constants.or(flags.constants),
            lattice: self.lattice.or(flags.lattice),
            model: self.model.or(flags.model),
            profile_fit: self.profile_fit.or(flags.profile_fit),
            decay_fit: self.decay_fit.or(flags.decay_fit),
            acquisition: self.acquisition.or(flags.acquisition),
            epr: self.epr.or(flags.epr),
            paper_repro: self.paper_repro.or(flags.paper_repro),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants.unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeBlock {
    pub enrichments: Vec<f64>,
    pub concentrations_ppm: Vec<f64>,
    /// Box edge for carbon statistics, nm.
    pub lattice_size_nm: f64,
    pub realizations: usize,
    pub field_direction: Vec3,
    /// Direct-polarization threshold for the NV hyperfine coupling, kHz.
    pub nv_threshold_khz: f64,
    /// Box edge for the NV statistics, nm.
    pub nv_lattice_size_nm: f64,
    pub detection_linewidth_hz: f64,
    /// Also run the Monte-Carlo P1 hyperfine estimate per concentration.
    pub numeric_hyperfine: bool,
    pub hyperfine_realizations: usize,
    pub hyperfine_enrichment: f64,
}

impl Default for LatticeBlock {
    fn default() -> Self {
        Self {
            enrichments: vec![0.011],
            concentrations_ppm: vec![17.0, 48.0],
            lattice_size_nm: 3.0,
            realizations: 20,
            field_direction: default_field_direction(),
            nv_threshold_khz: 200.0,
            nv_lattice_size_nm: 3.0,
            detection_linewidth_hz: 2000.0,
            numeric_hyperfine: false,
            hyperfine_realizations: 100,
            hyperfine_enrichment: 0.011,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGrid {
    #[serde(default = "b_min")]
    pub b_min_t: f64,
    #[serde(default = "b_max")]
    pub b_max_t: f64,
    #[serde(default = "grid_points")]
    pub points: usize,
}

fn b_min() -> f64 {
    1e-4
}
fn b_max() -> f64 {
    7.0
}
fn grid_points() -> usize {
    400
}

impl Default for FieldGrid {
    fn default() -> Self {
        Self {
            b_min_t: b_min(),
            b_max_t: b_max(),
            points: grid_points(),
        }
    }
}

impl FieldGrid {
    /// Log-spaced fields.
    pub fn fields(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(Error::validation("field grid is empty"));
        }
        if !(self.b_min_t > 0.0 && self.b_max_t >= self.b_min_t && self.b_max_t.is_finite()) {
            return Err(Error::validation(format!(
                "field grid needs 0 < b_min <= b_max (got {}, {})",
                self.b_min_t, self.b_max_t
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.b_min_t]);
        }
        let (l0, l1) = (self.b_min_t.ln(), self.b_max_t.ln());
        Ok((0..self.points)
            .map(|i| (l0 + (l1 - l0) * i as f64 / (self.points - 1) as f64).exp())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    /// TOML file holding a model definition.
    pub path: Option<PathBuf>,
    /// Inline model definition.
    pub definition: Option<ProfileModel>,
    #[serde(default)]
    pub grid: FieldGrid,
    /// Reference field for the phase-noise column, T.
    #[serde(default = "phase_ref")]
    pub phase_noise_reference_t: f64,
}

fn phase_ref() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFitBlock {
    pub input: PathBuf,
    #[serde(default)]
    pub grid: FieldGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayFitBlock {
    pub input: PathBuf,
    pub fix_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthBlock {
    pub model_path: Option<PathBuf>,
    pub definition: Option<ProfileModel>,
    #[serde(default = "eps0")]
    pub eps0: f64,
    #[serde(default)]
    pub stretch: StretchRule,
}

fn eps0() -> f64 {
    372.0
}

impl Default for TruthBlock {
    fn default() -> Self {
        Self {
            model_path: None,
            definition: None,
            eps0: eps0(),
            stretch: StretchRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionBlock {
    #[serde(default = "default_plan")]
    pub plan: AcquisitionPlan,
    #[serde(default)]
    pub truth: TruthBlock,
    /// Field-map CSV; the built-in demo map when absent.
    pub fieldmap: Option<PathBuf>,
    #[serde(default)]
    pub shuttle: ShuttleProfile,
}

impl Default for AcquisitionBlock {
    fn default() -> Self {
        Self {
            plan: default_plan(),
            truth: TruthBlock::default(),
            fieldmap: None,
            shuttle: ShuttleProfile::default(),
        }
    }
}

/// Ten coil fields from 1 mT to 20 mT and thirty shuttled fields from
/// 35 mT to 6.5 T.
pub fn default_acquisition_fields() -> Vec<f64> {
    let span = |lo: f64, hi: f64, n: usize| {
        (0..n).map(move |i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
    };
    span(1e-3, 0.02, 10).chain(span(0.035, 6.5, 30)).collect()
}

pub fn default_plan() -> AcquisitionPlan {
    AcquisitionPlan::new(
        Strategy::Accelerated1d,
        default_acquisition_fields(),
        40,
        5.0,
        WaitTime::Dynamic,
        4,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineOverride {
    /// Index into `inputs`.
    pub spectrum: usize,
    /// Peak index within that spectrum.
    pub peak: usize,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EprBlock {
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub baseline_overrides: Vec<BaselineOverride>,
    /// Spins per unit double integral, from a reference sample.
    #[serde(default = "unit_scale")]
    pub spin_scale: f64,
    #[serde(default)]
    pub segment: SegmentOptions,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperReproBlock {
    #[serde(default)]
    pub grid: FieldGrid,
}
