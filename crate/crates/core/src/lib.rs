//! Home-health routing and appointment scheduling under uncertain service and
//! travel times: recourse evaluation, the sample-average, mean-support and
//! Wasserstein models, scenario generation and out-of-sample evaluation.

pub mod domain;
pub mod evaluation;
pub mod formulation;
pub mod moment;
pub mod pipeline;
pub mod recourse;
pub mod saa;
pub mod scenario;
pub mod wasserstein;
