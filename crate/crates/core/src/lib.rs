//! Random graph generation with a certified total-variation bound.
//!
//! All sampling probabilities are exact rationals and every random choice is
//! driven by a seeded bit source, so the distance between the sampler's output
//! law and the target model is a single, quantified truncation term.

pub mod arith;
pub mod binomial;
pub mod cli;
pub mod generators;
pub mod randomness;
pub mod subset;
pub mod verify;
