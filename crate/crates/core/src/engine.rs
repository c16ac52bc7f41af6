//! Backward induction over pile sizes.
//!
//! With `p_k` the mover's equilibrium win probability at pile size `k`, the
//! win probability of lottery `π` is `1 − Σᵢ πᵢ p_{k−i}` and the mover picks
//! the best available lottery. Pile sizes `s ≤ 0` carry `p_s = 1`: taking at
//! least as many objects as remain loses, so the opponent "wins" there.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lottery::{GameSpec, Lottery, LotteryError};

/// Candidates within this distance of the best value count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error(transparent)]
    Lottery(#[from] LotteryError),
}

/// How the recorded strategy is picked among tied candidates. Values never
/// depend on this choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    #[default]
    LowestIndex,
    HighestIndex,
    SeededRandom {
        seed: u64,
    },
}

/// Stateful selector implementing a [`TieRule`].
#[derive(Debug, Clone)]
pub struct TieBreaker {
    rule: TieRule,
    rng: Option<ChaCha8Rng>,
}

impl TieBreaker {
    pub fn new(rule: TieRule) -> Self {
        let rng = match rule {
            TieRule::SeededRandom { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Self { rule, rng }
    }

    /// `ties` is non-empty and sorted ascending.
    pub fn pick(&mut self, ties: &[usize]) -> usize {
        match (self.rule, self.rng.as_mut()) {
            (TieRule::HighestIndex, _) => ties[ties.len() - 1],
            (TieRule::SeededRandom { .. }, Some(rng)) if ties.len() > 1 => {
                ties[rng.random_range(0..ties.len())]
            }
            _ => ties[0],
        }
    }
}

/// Win probability of playing `lottery` when `tail = (p_{k−1}, …, p_{k−m})`.
pub fn expected_win_prob(lottery: &Lottery, tail: &[f64]) -> f64 {
    debug_assert_eq!(lottery.m(), tail.len());
    // 1 − Σπᵢp_{k−i} written as Σπᵢ(1 − p_{k−i}): exact zero when the tail is all ones.
    let win: f64 = lottery
        .probs()
        .iter()
        .zip(tail)
        .map(|(pi, p)| pi * (1.0 - p))
        .sum();
    win.clamp(0.0, 1.0)
}

/// Same as [`expected_win_prob`] with the window in ascending pile order,
/// `window = (p_{k−m}, …, p_{k−1})`.
fn win_prob_ascending(lottery: &Lottery, window: &[f64]) -> f64 {
    let win: f64 = lottery
        .probs()
        .iter()
        .zip(window.iter().rev())
        .map(|(pi, p)| pi * (1.0 - p))
        .sum();
    win.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub value: f64,
    pub argmax: usize,
    /// Ascending indices whose value is within [`TIE_TOLERANCE`] of `value`.
    pub ties: Vec<usize>,
}

/// Best lottery among `candidates` against `tail = (p_{k−1}, …, p_{k−m})`.
pub fn best_response(
    candidates: &[Lottery],
    tail: &[f64],
    tie_breaker: &mut TieBreaker,
) -> Result<BestResponse, EngineError> {
    let scores: Vec<f64> = candidates
        .iter()
        .map(|c| expected_win_prob(c, tail))
        .collect();
    select(&scores, tie_breaker).ok_or(EngineError::EmptyCandidateSet)
}

fn select(scores: &[f64], tie_breaker: &mut TieBreaker) -> Option<BestResponse> {
    let value = scores.iter().copied().reduce(f64::max)?;
    let ties: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= value - TIE_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    let argmax = tie_breaker.pick(&ties);
    Some(BestResponse {
        value,
        argmax,
        ties,
    })
}

/// Equilibrium win probabilities for pile sizes `1−m..=n` and the lottery
/// chosen at each positive pile size.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    m: usize,
    n: usize,
    candidates: Vec<Lottery>,
    /// `values[k + m − 1] = p_k` for `k` in `1−m..=n`.
    values: Vec<f64>,
    argmax: Vec<usize>,
    ties: Vec<Vec<usize>>,
}

impl ValueTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn candidates(&self) -> &[Lottery] {
        &self.candidates
    }

    /// `p_k`; any `k ≤ 0` yields 1.
    pub fn p(&self, k: i64) -> f64 {
        if k <= 0 {
            1.0
        } else {
            self.values[k as usize + self.m - 1]
        }
    }

    /// `p_1..=p_n`.
    pub fn values(&self) -> &[f64] {
        &self.values[self.m..]
    }

    /// `p_{1−m}..=p_n`, boundary entries included.
    pub fn values_with_boundary(&self) -> &[f64] {
        &self.values
    }

    /// Index of the candidate recorded at pile size `k ≥ 1`.
    pub fn argmax(&self, k: usize) -> usize {
        self.argmax[k - 1]
    }

    pub fn ties(&self, k: usize) -> &[usize] {
        &self.ties[k - 1]
    }

    pub fn chosen(&self, k: usize) -> &Lottery {
        &self.candidates[self.argmax(k)]
    }

    /// `(p_{k−1}, …, p_{k−m})`.
    pub fn tail(&self, k: usize) -> Vec<f64> {
        (1..=self.m).map(|i| self.p(k as i64 - i as i64)).collect()
    }
}

/// Solves the game by backward induction over `k = 1..=n`.
pub fn solve(spec: &GameSpec, tie_rule: TieRule) -> Result<ValueTable, EngineError> {
    let candidates = spec.lotteries.candidate_set()?;
    solve_candidates(spec.n, spec.m, candidates, tie_rule)
}

/// Backward induction over an explicit candidate list of lotteries of length `m`.
pub fn solve_candidates(
    n: usize,
    m: usize,
    candidates: Vec<Lottery>,
    tie_rule: TieRule,
) -> Result<ValueTable, EngineError> {
    if candidates.is_empty() {
        return Err(EngineError::EmptyCandidateSet);
    }
    if let Some(bad) = candidates.iter().find(|c| c.m() != m) {
        return Err(LotteryError::WrongLength {
            expected: m,
            found: bad.m(),
        }
        .into());
    }

    let mut tie_breaker = TieBreaker::new(tie_rule);
    let mut values = Vec::with_capacity(n + m);
    values.resize(m, 1.0);
    let mut argmax = Vec::with_capacity(n);
    let mut ties = Vec::with_capacity(n);
    let mut scores = vec![0.0; candidates.len()];

    for _ in 1..=n {
        let window = &values[values.len() - m..];
        for (score, c) in scores.iter_mut().zip(&candidates) {
            *score = win_prob_ascending(c, window);
        }
        let best = select(&scores, &mut tie_breaker).expect("non-empty candidates");
        values.push(best.value);
        argmax.push(best.argmax);
        ties.push(best.ties);
    }

    Ok(ValueTable {
        m,
        n,
        candidates,
        values,
        argmax,
        ties,
    })
}
