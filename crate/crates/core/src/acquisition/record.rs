use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::plan::AcquisitionPlan;
use crate::fitting::{DecayCurve, FitResult, Provenance, RelaxometryProfile};
use crate::workbench::format::sci;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    Full,
    Calibration,
    Single,
}

impl DecayKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecayKind::Full => "full",
            DecayKind::Calibration => "calibration",
            DecayKind::Single => "single",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub field_t: f64,
    pub kind: DecayKind,
    pub times_s: Vec<f64>,
    pub signals: Vec<f64>,
}

impl DecayRecord {
    pub fn from_curve(kind: DecayKind, c: &DecayCurve) -> Self {
        Self {
            field_t: c.field_b,
            kind,
            times_s: c.times.clone(),
            signals: c.signals.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub field_t: f64,
    pub eps0: f64,
    pub d_eps0: f64,
    pub p: f64,
    pub d_p: f64,
    pub t1: f64,
    pub d_t1: f64,
    pub converged: bool,
}

impl CalibrationRecord {
    pub fn from_fit(field_t: f64, fit: &FitResult) -> Self {
        let get = |n: &str| {
            let p = fit.param(n).expect("stretched-exponential parameter");
            (p.value, p.stderr.unwrap_or(0.0))
        };
        let (eps0, d_eps0) = get("eps0");
        let (p, d_p) = get("p");
        let (t1, d_t1) = get("T1");
        Self {
            field_t,
            eps0,
            d_eps0,
            p,
            d_p,
            t1,
            d_t1,
            converged: fit.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub field_t: f64,
    pub r1_per_s: f64,
    pub err_per_s: f64,
    pub provenance: Provenance,
    pub flags: Vec<String>,
}

/// Wall-clock bookkeeping, s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Accounting {
    pub relaxation_s: f64,
    pub overhead_s: f64,
    pub total_s: f64,
    pub n_shots: u64,
    /// Minimum cost for fixed waits and zero overhead.
    pub closed_form_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub plan: AcquisitionPlan,
    pub seed: u64,
    pub noise_sd: f64,
    pub decays: Vec<DecayRecord>,
    pub calibrations: Vec<CalibrationRecord>,
    /// Calibration fields whose curve could not be fitted, T.
    pub failed_calibrations: Vec<f64>,
    pub profile: Vec<ProfilePoint>,
    pub accounting: Accounting,
}

impl ExperimentRecord {
    /// Points with a finite rate, as a fit-ready profile.
    pub fn relaxometry_profile(&self) -> RelaxometryProfile {
        let ok: Vec<&ProfilePoint> = self.profile.iter().filter(|p| p.r1_per_s.is_finite() && p.r1_per_s > 0.0).collect();
        RelaxometryProfile {
            fields: ok.iter().map(|p| p.field_t).collect(),
            rates: ok.iter().map(|p| p.r1_per_s).collect(),
            errors: ok.iter().map(|p| if p.err_per_s.is_finite() { p.err_per_s } else { 0.0 }).collect(),
            provenance: ok.iter().map(|p| p.provenance).collect(),
        }
    }

    pub fn profile_csv(&self) -> String {
        let mut s = String::from("B_T,R1_per_s,err,provenance\n");
        for p in &self.profile {
            let prov = match p.provenance {
                Provenance::FullCurve => "full_curve",
                Provenance::Accelerated => "accelerated",
            };
            s += &format!("{},{},{},{}\n", sci(p.field_t), sci(p.r1_per_s), sci(p.err_per_s), prov);
        }
        s
    }

    pub fn decays_csv(&self) -> String {
        let mut s = String::from("B_T,kind,t_s,signal\n");
        for d in &self.decays {
            for (t, y) in d.times_s.iter().zip(&d.signals) {
                s += &format!("{},{},{},{}\n", sci(d.field_t), d.kind.as_str(), sci(*t), sci(*y));
            }
        }
        s
    }

    pub fn accounting_csv(&self) -> String {
        let a = &self.accounting;
        format!(
            "quantity,value\nrelaxation_s,{}\noverhead_s,{}\ntotal_s,{}\nn_shots,{}\nclosed_form_s,{}\n",
            sci(a.relaxation_s),
            sci(a.overhead_s),
            sci(a.total_s),
            a.n_shots,
            sci(a.closed_form_s.unwrap_or(f64::NAN))
        )
    }

    /// (file name, contents) for decays.csv, profile.csv, accounting.csv
    /// and metadata.json.
    pub fn files(&self) -> Result<Vec<(&'static str, String)>> {
        let meta = serde_json::json!({
            "plan": self.plan,
            "seed": self.seed,
            "noise_sd": self.noise_sd,
            "calibrations": self.calibrations,
            "failed_calibrations": self.failed_calibrations,
            "flags": self.profile.iter().map(|p| &p.flags).collect::<Vec<_>>(),
        });
        let body = serde_json::to_string_pretty(&meta).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(vec![
            ("decays.csv", self.decays_csv()),
            ("profile.csv", self.profile_csv()),
            ("accounting.csv", self.accounting_csv()),
            ("metadata.json", body + "\n"),
        ])
    }

    pub fn export(&self, dir: &Path) -> Result<()> {
        for (name, body) in self.files()? {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
