//! Partial-order MCMC for posterior arc probabilities of Bayesian networks.
//!
//! The sampler walks over reorderings of a parallel bucket order `P`; for
//! each state an exact dynamic program over the ideals of `P` gives both
//! the unnormalized `p(P, D)` and the conditional arc probabilities
//! `p(u → v | D, P)`, which are averaged over the retained states.
//!
//! The numeric core is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the scalar type.

pub mod data;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod mcmc;
pub mod poset;
pub mod scalar;

pub use error::{Error, Result};

pub type ScoreTable64 = data::ScoreTable<f64>;
pub type ScoreTable32 = data::ScoreTable<f32>;
pub type AlphaTables64 = engine::AlphaTables<f64>;
pub type AlphaTables32 = engine::AlphaTables<f32>;
pub type ForwardBackward64 = engine::ForwardBackward<f64>;
pub type ForwardBackward32 = engine::ForwardBackward<f32>;
pub type Evaluator64<'a> = engine::Evaluator<'a, f64>;
pub type Evaluator32<'a> = engine::Evaluator<'a, f32>;

// lets shared test oracles name the crate the same way from unit tests
#[cfg(test)]
extern crate self as poset_mcmc;
