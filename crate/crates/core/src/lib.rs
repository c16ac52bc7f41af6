//! Subgame-perfect equilibrium of Bachet's game with lottery moves.
//!
//! Players alternately pick a lottery over how many objects (`1..=m`) to
//! remove from a single pile; whoever removes the last object, or would have
//! to remove more than remain, loses. This crate solves the game by backward
//! induction, checks the chain of inequalities that drives the first
//! player's win probability to ½, and validates the solver against
//! simulation and exhaustive strategy enumeration.

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod lottery;
pub mod oracles;

pub use analysis::{BoundReport, DeviationSeries, DropConstants, LemmaId};
pub use engine::{solve, TieRule, ValueTable};
pub use lottery::{ConditionReport, GameSpec, Lottery, LotterySet};
