//! Closed-form mean-field updates of the direct tracker.
//!
//! Every potential object `k` carries a Gaussian state belief, a Bernoulli
//! existence mean, a complex reflectivity (jointly Gaussian across objects)
//! and four gamma-distributed process-noise precisions. The functions here
//! are the individual coordinate updates; [`crate::tracker`] schedules them.

mod context;
mod existence;
mod gaussian;
mod process_noise;
mod projection;
mod reflectivity;

pub use context::MeasurementContext;
pub use existence::{binary_entropy, logit, sigmoid, ExistenceBelief, ExistencePrior};
pub use gaussian::{
    fuse_gaussian_messages, kinematic_message, Direction, GaussianBelief, GaussianMessage,
    MotionModel,
};
pub use process_noise::{transition_moment, update_process_noise, ProcessNoiseBelief, ProcessNoisePrior};
pub use projection::{
    minimize_kl, project_data_message, DataLikelihood, LikelihoodEval, Projection,
    ProjectionOptions, QuadraticLikelihood, RadarLikelihood,
};
pub use reflectivity::{
    compute_elbo, update_alpha, update_xi, ReflectivityBelief, ReflectivityModel, XiObjective,
};
