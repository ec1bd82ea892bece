//! Embedding training: the plain objective and its concept-anchored variant.

mod config;
mod objective;
mod params;
mod train;

pub use config::{Mode, TrainerConfig, DEFAULT_CONCEPT_WEIGHT};
pub use objective::{
    concept_penalty, concept_penalty_grad, discount, record_cost, record_grad, Objective, RecordGrad,
    PENALTY_SEAM,
};
pub use params::ModelParameters;
pub use train::{train, TrainOutcome, UpdateAccounting};
