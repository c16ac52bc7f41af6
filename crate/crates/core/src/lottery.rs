//! Lotteries over take-counts and the admissible lottery set.
//!
//! A lottery is a probability vector `(π₁, …, π_m)` where `πᵢ` is the chance
//! of removing `i` objects. The admissible set is kept as a finite list of
//! candidates: a plain finite set, the vertices of a polytope, or the
//! truncated simplex `{π : πᵢ ≥ εᵢ, Σπᵢ = 1}` whose vertices are generated on
//! demand. Because a mover's win probability is affine in `π`, maximizing over
//! the convex hull of the candidates is the same as maximizing over the
//! candidates themselves.

use serde::Serialize;
use thiserror::Error;

/// Allowed deviation of `Σπᵢ` from one.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LotteryError {
    #[error("wrong length: expected {expected}, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("entries sum to {sum}, not 1 (tolerance {SUM_TOLERANCE:e})")]
    SumNotOne { sum: f64 },
    #[error("lottery set is empty")]
    EmptySet,
    #[error("lottery {index} in set: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<LotteryError>,
    },
    #[error("degenerate lottery set: {0}")]
    DegenerateSet(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
}

/// A probability vector over take-counts `1..=m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Lottery {
    probs: Vec<f64>,
}

impl Lottery {
    /// Validates `probs` as a lottery with `m = probs.len() ≥ 2`.
    pub fn new(probs: Vec<f64>) -> Result<Self, LotteryError> {
        if probs.len() < 2 {
            return Err(LotteryError::WrongLength {
                expected: 2,
                found: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() {
                return Err(LotteryError::NonFinite { index });
            }
            if value < 0.0 {
                return Err(LotteryError::NegativeEntry { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(LotteryError::SumNotOne { sum });
        }
        Ok(Self { probs })
    }

    /// Like [`Lottery::new`] but additionally requires exactly `m` entries.
    pub fn with_len(probs: Vec<f64>, m: usize) -> Result<Self, LotteryError> {
        if probs.len() != m {
            return Err(LotteryError::WrongLength {
                expected: m,
                found: probs.len(),
            });
        }
        Self::new(probs)
    }

    /// The pure lottery that always takes `take` objects.
    pub fn pure(m: usize, take: usize) -> Result<Self, LotteryError> {
        if take == 0 || take > m {
            return Err(LotteryError::InvalidGame(format!(
                "pure move {take} outside 1..={m}"
            )));
        }
        let mut probs = vec![0.0; m];
        probs[take - 1] = 1.0;
        Self::new(probs)
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    /// `probs()[i - 1]` is the probability of taking `i` objects.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of taking exactly `take` objects (`1..=m`).
    pub fn prob(&self, take: usize) -> f64 {
        self.probs[take - 1]
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }
}

/// Validates a raw probability vector.
pub fn validate_lottery(probs: &[f64]) -> Result<Lottery, LotteryError> {
    Lottery::new(probs.to_vec())
}

/// The admissible set of lotteries, reduced to a finite description.
#[derive(Debug, Clone, PartialEq)]
pub enum LotterySet {
    Finite(Vec<Lottery>),
    PolytopeVertices(Vec<Lottery>),
    /// `{π : πᵢ ≥ εᵢ, Σπᵢ = 1}`.
    TruncatedSimplex {
        epsilon: Vec<f64>,
    },
}

impl LotterySet {
    pub fn finite(rows: Vec<Vec<f64>>) -> Result<Self, LotteryError> {
        Ok(Self::Finite(collect_members(rows)?))
    }

    pub fn polytope_vertices(rows: Vec<Vec<f64>>) -> Result<Self, LotteryError> {
        Ok(Self::PolytopeVertices(collect_members(rows)?))
    }

    pub fn truncated_simplex(epsilon: Vec<f64>) -> Result<Self, LotteryError> {
        let set = Self::TruncatedSimplex { epsilon };
        set.validate()?;
        Ok(set)
    }

    /// All `m` pure moves: the classical game.
    pub fn pure_moves(m: usize) -> Result<Self, LotteryError> {
        let members = (1..=m)
            .map(|take| Lottery::pure(m, take))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::Finite(members))
    }

    /// Number of possible take-counts.
    pub fn m(&self) -> usize {
        match self {
            Self::Finite(l) | Self::PolytopeVertices(l) => l.first().map_or(0, Lottery::m),
            Self::TruncatedSimplex { epsilon } => epsilon.len(),
        }
    }

    pub fn validate(&self) -> Result<(), LotteryError> {
        match self {
            Self::Finite(members) | Self::PolytopeVertices(members) => {
                let first = members.first().ok_or(LotteryError::EmptySet)?;
                for (index, l) in members.iter().enumerate() {
                    if l.m() != first.m() {
                        return Err(LotteryError::Member {
                            index,
                            source: Box::new(LotteryError::WrongLength {
                                expected: first.m(),
                                found: l.m(),
                            }),
                        });
                    }
                }
                Ok(())
            }
            Self::TruncatedSimplex { epsilon } => {
                if epsilon.len() < 2 {
                    return Err(LotteryError::DegenerateSet(format!(
                        "truncated simplex needs m >= 2, got {}",
                        epsilon.len()
                    )));
                }
                if let Some(i) = epsilon.iter().position(|e| !(e.is_finite() && *e > 0.0)) {
                    return Err(LotteryError::DegenerateSet(format!(
                        "epsilon[{i}] = {} must be positive",
                        epsilon[i]
                    )));
                }
                let total: f64 = epsilon.iter().sum();
                if total >= 1.0 {
                    return Err(LotteryError::DegenerateSet(format!(
                        "epsilon sums to {total}, must be below 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Finite candidate list on which every affine objective attains its
    /// maximum over the set.
    pub fn candidate_set(&self) -> Result<Vec<Lottery>, LotteryError> {
        self.validate()?;
        match self {
            Self::Finite(members) | Self::PolytopeVertices(members) => Ok(members.clone()),
            Self::TruncatedSimplex { epsilon } => {
                let total: f64 = epsilon.iter().sum();
                (0..epsilon.len())
                    .map(|j| {
                        let probs = epsilon
                            .iter()
                            .enumerate()
                            .map(|(i, &e)| if i == j { 1.0 - (total - e) } else { e })
                            .collect();
                        Lottery::new(probs)
                    })
                    .collect()
            }
        }
    }

    pub fn conditions(&self) -> Result<ConditionReport, LotteryError> {
        Ok(ConditionReport::from_candidates(&self.candidate_set()?))
    }
}

fn collect_members(rows: Vec<Vec<f64>>) -> Result<Vec<Lottery>, LotteryError> {
    if rows.is_empty() {
        return Err(LotteryError::EmptySet);
    }
    rows.into_iter()
        .enumerate()
        .map(|(index, row)| {
            Lottery::new(row).map_err(|e| LotteryError::Member {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Computes the structural constants of a lottery set.
pub fn compute_conditions(set: &LotterySet) -> Result<ConditionReport, LotteryError> {
    set.conditions()
}

/// Structural constants of a lottery set.
///
/// `eta` is the largest single coordinate over all lotteries; `eta < 1` means
/// no pure move is available. `nu` is the smallest, over take-counts, of the
/// largest weight any lottery puts on that take-count; `nu > 0` means every
/// take-count can be played with positive probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub eta: f64,
    pub nu: f64,
    pub eta_ok: bool,
    pub nu_ok: bool,
}

impl ConditionReport {
    pub fn from_candidates(candidates: &[Lottery]) -> Self {
        let eta = candidates.iter().map(Lottery::max_prob).fold(0.0, f64::max);
        let m = candidates.first().map_or(0, Lottery::m);
        let nu = (1..=m)
            .map(|take| candidates.iter().map(|l| l.prob(take)).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        Self {
            eta,
            nu,
            eta_ok: eta < 1.0,
            nu_ok: nu > 0.0,
        }
    }

    /// Both hypotheses of the convergence theorem hold.
    pub fn hypotheses_hold(&self) -> bool {
        self.eta_ok && self.nu_ok
    }
}

/// A single-pile game instance: `n` objects, takes of `1..=m`, lottery set.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub n: usize,
    pub m: usize,
    pub lotteries: LotterySet,
}

impl GameSpec {
    pub fn new(n: usize, m: usize, lotteries: LotterySet) -> Result<Self, LotteryError> {
        if n < 1 {
            return Err(LotteryError::InvalidGame("n must be at least 1".into()));
        }
        if m < 2 {
            return Err(LotteryError::InvalidGame(format!(
                "m must be at least 2, got {m}"
            )));
        }
        lotteries.validate()?;
        if lotteries.m() != m {
            return Err(LotteryError::WrongLength {
                expected: m,
                found: lotteries.m(),
            });
        }
        Ok(Self { n, m, lotteries })
    }

    pub fn with_n(&self, n: usize) -> Result<Self, LotteryError> {
        Self::new(n, self.m, self.lotteries.clone())
    }
}
