//! Exact Cayley–Menger machinery and forced-distance witness sets.
//!
//! A map `f: R^n -> C^n` preserves unit distance when `phi(x, y) = 1` implies
//! `phi(f(x), f(y)) = 1`, where `phi` is the complex squared-distance form.
//! This crate builds finite point sets in `R^n` on which every such map is
//! forced to preserve a chosen distance `sqrt(2 + 2/n)^k * (2/n)^l`, and
//! produces replayable derivations of that fact.

pub mod cm;
pub mod exact;
pub mod geometry;
pub mod graph;
pub mod witness;
pub mod deduction;
pub mod ladder;
pub mod cli;
