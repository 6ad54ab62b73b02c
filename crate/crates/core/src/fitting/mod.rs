//! Nonlinear least squares and the decay, buildup and profile models.

pub mod buildup;
pub mod decay;
pub mod lm;
pub mod profile;

pub use buildup::{aicc, fit_buildup, BuildupFit, BuildupModel};
pub use decay::{fit_stretched_exponential, DecayCurve};
pub use lm::{finite_difference_jacobian, five_point_jacobian, nlls_fit, Bound, FitParameter, FitResult, Residuals, Termination};
pub use profile::{fit_relaxation_profile, LogProfile, ProfileFit, Provenance, RelaxometryProfile};
