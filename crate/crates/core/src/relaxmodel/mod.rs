//! Field-dependent 13C relaxation rates.
//!
//! Frequencies are linear (Hz) throughout: omega_L = gamma_n * B with gamma_n
//! in Hz/T. Couplings A2 are given in kHz^2 and converted to Hz^2 inside the
//! rate formulas, so rates come out in 1/s.

pub mod channels;
pub mod knees;
pub mod profile;
pub mod reservoir;
pub mod spectral;
pub mod tsallian;

pub use channels::{RateChannel, RateModel, ZeroFieldRate};
pub use knees::{
    crossover_field, crossover_fields, knee_fields, phase_noise, twice_saturation_knee, KneeFields,
    INFLECTION_GRID_MAX_T, INFLECTION_GRID_MIN_T, INFLECTION_GRID_POINTS, SATURATION_FIELD_T,
};
pub use profile::{ProfileModel, RateProfile, TwoTsallian};
pub use reservoir::{reservoir_frequencies, ReservoirFrequencies, ReservoirInputs};
pub use spectral::{
    lorentzian_spectral_density, nuclear_dipolar_knee, p1_bath_rate, single_electron_rate,
    KHZ2_TO_HZ2,
};
pub use tsallian::{tsallian_eval, QMode, TsallianComponent, TsallianParams};
