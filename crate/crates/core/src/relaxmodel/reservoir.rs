use serde::{Deserialize, Serialize};

use crate::constants::{NV_ZERO_FIELD_SPLITTING_HZ, P1_A_PARALLEL_HZ, P1_A_PERPENDICULAR_HZ};
use crate::{Error, PhysicalConstants, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirInputs {
    /// T
    pub b: f64,
    /// rad
    pub theta_nv: f64,
    /// rad
    pub theta_p1: f64,
    pub m_i: i8,
    /// Hz
    pub delta: f64,
    pub a_parallel: f64,
    pub a_perpendicular: f64,
}

impl ReservoirInputs {
    pub fn new(b: f64, theta_nv: f64, theta_p1: f64, m_i: i8) -> Self {
        Self {
            b,
            theta_nv,
            theta_p1,
            m_i,
            delta: NV_ZERO_FIELD_SPLITTING_HZ,
            a_parallel: P1_A_PARALLEL_HZ,
            a_perpendicular: P1_A_PERPENDICULAR_HZ,
        }
    }
}

/// Reservoir centre frequencies, Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirFrequencies {
    pub omega_nv_plus: f64,
    pub omega_nv_minus: f64,
    pub omega_e: f64,
    pub omega_l: f64,
    pub inputs: ReservoirInputs,
}

pub fn reservoir_frequencies(
    inputs: &ReservoirInputs,
    consts: &PhysicalConstants,
) -> Result<ReservoirFrequencies> {
    if !(inputs.b >= 0.0) {
        return Err(Error::domain(format!("field must be >= 0, got {}", inputs.b)));
    }
    if !(-1..=1).contains(&inputs.m_i) {
        return Err(Error::domain(format!("m_I must be -1, 0 or 1, got {}", inputs.m_i)));
    }
    let ge = consts.gamma_e * inputs.b;
    let (snv, cnv) = inputs.theta_nv.sin_cos();
    let (sp1, cp1) = inputs.theta_p1.sin_cos();
    let nv = |sign: f64| (inputs.delta + sign * ge * cnv).hypot(ge * snv);
    let m = inputs.m_i as f64;
    Ok(ReservoirFrequencies {
        omega_nv_plus: nv(1.0),
        omega_nv_minus: nv(-1.0),
        omega_e: (ge + m * inputs.a_parallel * cp1).hypot(m * inputs.a_perpendicular * sp1),
        omega_l: consts.gamma_n * inputs.b,
        inputs: *inputs,
    })
}
