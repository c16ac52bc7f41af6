//! JSON experiment configuration.

use std::path::PathBuf;

use serde::Deserialize;

use super::CliError;
use crate::engine::TieRule;
use crate::lottery::{GameSpec, LotteryError, LotterySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Verify,
    Simulate,
    Sweep,
    ExploreNuZero,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Verify => "verify",
            Self::Simulate => "simulate",
            Self::Sweep => "sweep",
            Self::ExploreNuZero => "explore-nu-zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When present, must agree with the command given on the command line.
    pub command: Option<Command>,
    pub game: GameConfig,
    pub tau: Option<f64>,
    pub kappa_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub tie_rule: TieRuleName,
    #[serde(default)]
    pub tie_seed: u64,
    pub sim: Option<SimSection>,
    pub sweep: Option<SweepSection>,
    /// Directory receiving the output artifacts.
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "K")]
    pub lotteries: LotterySetConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LotterySetConfig {
    Finite { lotteries: Vec<Vec<f64>> },
    PolytopeVertices { lotteries: Vec<Vec<f64>> },
    TruncatedSimplex { epsilon: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRuleName {
    #[default]
    LowestIndex,
    HighestIndex,
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub replications: u64,
    pub seed: u64,
    /// Pile sizes to simulate; defaults to `game.n`.
    pub n_values: Option<Vec<usize>>,
}

/// Sweep points are the product of `epsilon_values` (uniform truncated
/// simplex replacing `game.K`) and `n_values` (defaulting to `game.n`).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_values: Option<Vec<usize>>,
    pub epsilon_values: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config {
                path: if path == "." { String::new() } else { path },
                message: e.into_inner().to_string(),
            }
        })
    }

    pub fn tie_rule(&self) -> TieRule {
        match self.tie_rule {
            TieRuleName::LowestIndex => TieRule::LowestIndex,
            TieRuleName::HighestIndex => TieRule::HighestIndex,
            TieRuleName::SeededRandom => TieRule::SeededRandom {
                seed: self.tie_seed,
            },
        }
    }

    pub fn game_spec(&self) -> Result<GameSpec, CliError> {
        let set = self.game.lotteries.build()?;
        GameSpec::new(self.game.n, self.game.m, set).map_err(|e| match e {
            LotteryError::WrongLength { .. } => config_error("game.K", e),
            LotteryError::InvalidGame(_) => config_error("game", e),
            e => config_error("game.K", e),
        })
    }

    pub fn kappa_grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.kappa_grid {
            None => Ok(crate::analysis::default_kappa_grid()),
            Some(grid) => {
                if let Some(i) = grid.iter().position(|k| !(*k > 0.0 && *k < 1.0)) {
                    return Err(CliError::Config {
                        path: format!("kappa_grid[{i}]"),
                        message: format!("{} is outside (0, 1)", grid[i]),
                    });
                }
                Ok(grid.clone())
            }
        }
    }

    pub fn sim(&self) -> Result<&SimSection, CliError> {
        let sim = self.sim.as_ref().ok_or_else(|| missing("sim"))?;
        if sim.replications == 0 {
            return Err(CliError::Config {
                path: "sim.replications".into(),
                message: "must be at least 1".into(),
            });
        }
        if let Some(i) = sim.n_values.iter().flatten().position(|&n| n == 0) {
            return Err(CliError::Config {
                path: format!("sim.n_values[{i}]"),
                message: "pile sizes must be at least 1".into(),
            });
        }
        Ok(sim)
    }

    pub fn sweep(&self) -> Result<&SweepSection, CliError> {
        let sweep = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
        if sweep.n_values.is_none() && sweep.epsilon_values.is_none() {
            return Err(CliError::Config {
                path: "sweep".into(),
                message: "needs n_values and/or epsilon_values".into(),
            });
        }
        if let Some(i) = sweep.n_values.iter().flatten().position(|&n| n == 0) {
            return Err(CliError::Config {
                path: format!("sweep.n_values[{i}]"),
                message: "pile sizes must be at least 1".into(),
            });
        }
        Ok(sweep)
    }
}

impl LotterySetConfig {
    pub fn build(&self) -> Result<LotterySet, CliError> {
        let member_path = |index: usize| format!("game.K.lotteries[{index}]");
        let wrap = |e: LotteryError| match e {
            LotteryError::Member { index, source } => config_error(&member_path(index), *source),
            LotteryError::EmptySet => config_error("game.K.lotteries", e),
            LotteryError::DegenerateSet(_) => config_error("game.K.epsilon", e),
            e => config_error("game.K", e),
        };
        let set = match self {
            Self::Finite { lotteries } => LotterySet::finite(lotteries.clone()),
            Self::PolytopeVertices { lotteries } => {
                LotterySet::polytope_vertices(lotteries.clone())
            }
            Self::TruncatedSimplex { epsilon } => LotterySet::truncated_simplex(epsilon.clone()),
        }
        .map_err(wrap)?;
        set.validate().map_err(wrap)?;
        Ok(set)
    }
}

fn config_error(path: &str, e: LotteryError) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: e.to_string(),
    }
}

fn missing(path: &str) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: "section required by this command".into(),
    }
}
