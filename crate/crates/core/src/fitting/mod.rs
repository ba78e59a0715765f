//! Weighted bulk + superlattice cost and the genetic algorithm that
//! minimizes it over the free parameters.
//!
//! A genome is the concatenation of every fitted material's genes in
//! [`FreeParams::GENE_NAMES`](crate::constraints::FreeParams::GENE_NAMES)
//! order (nine per material when `E_pa` is derived, ten otherwise).
//!
//! Randomness is drawn from one ChaCha8 stream per individual and generation,
//! so results do not depend on how evaluation is spread over threads.

mod cost;
mod evaluate;
mod ga;

pub use cost::{cost_terms, gene_labels, weighted_cost, CostModel, CostSpec, CostTerm, Evaluation, MaterialTargets, SlTarget, PENALTY, SL_WEIGHT};
pub use evaluate::{evaluate_fit, Holdout, HoldoutReport, HoldoutRow};
pub use ga::{ga_fit, time_evaluation, FitConfig, FitResult, FittedMaterial, GeneBound, GeneticAlgorithm};
