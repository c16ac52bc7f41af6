//! Independent checks of the engine: Monte-Carlo play of the game under the
//! equilibrium policy, and exhaustive enumeration of stationary strategy
//! profiles on small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{ValueTable, TIE_TOLERANCE};
use crate::lottery::{GameSpec, Lottery, LotteryError};

/// Size limits for [`brute_force_values`].
pub const MAX_BRUTE_FORCE_LOTTERIES: usize = 4;
pub const MAX_BRUTE_FORCE_PILE: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {lotteries} lotteries, n = {n} (limits {MAX_BRUTE_FORCE_LOTTERIES}, {MAX_BRUTE_FORCE_PILE})")]
    InstanceTooLarge { lotteries: usize, n: usize },
    #[error("policy covers pile sizes up to {covered}, game needs {n}")]
    PolicyTooShort { covered: usize, n: usize },
    #[error("replications must be at least 1")]
    NoReplications,
    #[error(transparent)]
    Lottery(#[from] LotteryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    First,
    Second,
}

/// Inverse-CDF sampler for one lottery.
#[derive(Debug, Clone)]
struct Sampler {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl Sampler {
    fn new(lottery: &Lottery) -> Self {
        let cdf = lottery
            .probs()
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let last_positive = lottery.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Self { cdf, last_positive }
    }

    /// Number of objects taken, `1..=m`.
    fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        // u beyond the rounded total falls back to the last reachable take
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.last_positive)
            + 1
    }
}

/// Lottery played at each pile size `1..=n`, shared by both players.
#[derive(Debug, Clone)]
pub struct Policy {
    samplers: Vec<Sampler>,
}

impl Policy {
    /// `lotteries[k − 1]` is played at pile size `k`.
    pub fn new(lotteries: &[Lottery]) -> Self {
        Self {
            samplers: lotteries.iter().map(Sampler::new).collect(),
        }
    }

    /// The recorded equilibrium choice of a solved table.
    pub fn from_table(vt: &ValueTable) -> Self {
        let chosen: Vec<Lottery> = (1..=vt.n()).map(|k| vt.chosen(k).clone()).collect();
        Self::new(&chosen)
    }

    /// Largest pile size covered.
    pub fn len(&self) -> usize {
        self.samplers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samplers.is_empty()
    }
}

/// Plays one game from pile size `n`; a player who takes the last object, or
/// is forced to take more than remain, loses.
pub fn simulate_game(n: usize, policy: &Policy, rng: &mut impl Rng) -> Player {
    let mut pile = n;
    let mut mover = Player::First;
    loop {
        let take = policy.samplers[pile - 1].sample(rng);
        if take >= pile {
            return match mover {
                Player::First => Player::Second,
                Player::Second => Player::First,
            };
        }
        pile -= take;
        mover = match mover {
            Player::First => Player::Second,
            Player::Second => Player::First,
        };
    }
}

/// Random stream for replication `replication` of a run seeded with `seed`.
///
/// ChaCha8 keyed by the seed with the replication index as stream id, so each
/// replication's draws are fixed regardless of scheduling.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub n: usize,
    pub replications: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub wins_first_player: u64,
    pub replications: u64,
    pub p_hat: f64,
    pub std_err: f64,
}

impl SimResult {
    /// `|p̂ − p| / std_err`; zero for an exact match with zero spread.
    pub fn z_score(&self, p_engine: f64) -> f64 {
        let diff = (self.p_hat - p_engine).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_err
        }
    }
}

pub fn estimate_win_prob(policy: &Policy, cfg: &SimConfig) -> Result<SimResult, OracleError> {
    if cfg.replications == 0 {
        return Err(OracleError::NoReplications);
    }
    if cfg.n == 0 || cfg.n > policy.len() {
        return Err(OracleError::PolicyTooShort {
            covered: policy.len(),
            n: cfg.n,
        });
    }
    let wins: u64 = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(cfg.seed, r);
            u64::from(simulate_game(cfg.n, policy, &mut rng) == Player::First)
        })
        .sum();
    let reps = cfg.replications as f64;
    let p_hat = wins as f64 / reps;
    Ok(SimResult {
        wins_first_player: wins,
        replications: cfg.replications,
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / reps).sqrt(),
    })
}

/// Result of exhaustive profile enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    /// `p_1..=p_n` under the equilibrium profiles.
    pub values: Vec<f64>,
    pub profiles_enumerated: u64,
    pub equilibrium_profiles: u64,
    /// Largest disagreement between equilibrium profiles at any pile size.
    pub spread: f64,
}

/// Enumerates every stationary profile `σ : {1..n} → candidate index`,
/// computes the first mover's win probabilities it induces, and keeps the
/// profiles from which no single-state switch to another candidate helps
/// the mover. Returns, per pile size, the maximum over kept profiles.
pub fn brute_force_values(spec: &GameSpec) -> Result<BruteForce, OracleError> {
    let candidates = spec.lotteries.candidate_set()?;
    if candidates.len() > MAX_BRUTE_FORCE_LOTTERIES || spec.n > MAX_BRUTE_FORCE_PILE {
        return Err(OracleError::InstanceTooLarge {
            lotteries: candidates.len(),
            n: spec.n,
        });
    }
    let mut search = ProfileSearch {
        m: spec.m,
        n: spec.n,
        candidates: &candidates,
        values: vec![1.0; spec.m],
        best: vec![f64::NEG_INFINITY; spec.n],
        worst: vec![f64::INFINITY; spec.n],
        enumerated: 0,
        equilibria: 0,
    };
    search.descend(true);
    let spread = search
        .best
        .iter()
        .zip(&search.worst)
        .map(|(b, w)| b - w)
        .fold(0.0, f64::max);
    Ok(BruteForce {
        values: search.best,
        profiles_enumerated: search.enumerated,
        equilibrium_profiles: search.equilibria,
        spread,
    })
}

struct ProfileSearch<'a> {
    m: usize,
    n: usize,
    candidates: &'a [Lottery],
    /// Values induced by the profile prefix, boundary entries first.
    values: Vec<f64>,
    best: Vec<f64>,
    worst: Vec<f64>,
    enumerated: u64,
    equilibria: u64,
}

impl ProfileSearch<'_> {
    fn payoff(&self, lottery: &Lottery) -> f64 {
        let len = self.values.len();
        (1..=self.m)
            .map(|i| lottery.prob(i) * (1.0 - self.values[len - i]))
            .sum()
    }

    /// Extends the prefix by one pile size; every branch is visited.
    fn descend(&mut self, stable_so_far: bool) {
        let k = self.values.len() - self.m;
        if k == self.n {
            self.enumerated += 1;
            if stable_so_far {
                self.equilibria += 1;
                for (j, &v) in self.values[self.m..].iter().enumerate() {
                    self.best[j] = self.best[j].max(v);
                    self.worst[j] = self.worst[j].min(v);
                }
            }
            return;
        }
        let payoffs: Vec<f64> = self.candidates.iter().map(|c| self.payoff(c)).collect();
        for &own in &payoffs {
            let no_gain = payoffs.iter().all(|&other| other <= own + TIE_TOLERANCE);
            self.values.push(own);
            self.descend(stable_so_far && no_gain);
            self.values.pop();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationGain {
    pub k: usize,
    pub candidate: usize,
    pub gain: f64,
}

/// Checks the table's recorded policy directly: recomputes the values the
/// policy induces by its own linear recursion, confirms they match the
/// table, and reports every single-state switch that would raise the mover's
/// win probability by more than `tolerance`.
pub fn one_shot_deviations(vt: &ValueTable, tolerance: f64) -> Vec<DeviationGain> {
    let m = vt.m();
    let mut induced = vec![1.0; m];
    let mut gains = Vec::new();
    for k in 1..=vt.n() {
        let eval = |l: &Lottery, induced: &[f64]| -> f64 {
            let len = induced.len();
            (1..=m).map(|i| l.prob(i) * (1.0 - induced[len - i])).sum()
        };
        let own = eval(vt.chosen(k), &induced);
        if (own - vt.p(k as i64)).abs() > tolerance {
            gains.push(DeviationGain {
                k,
                candidate: vt.argmax(k),
                gain: own - vt.p(k as i64),
            });
        }
        for (candidate, l) in vt.candidates().iter().enumerate() {
            let gain = eval(l, &induced) - own;
            if gain > tolerance {
                gains.push(DeviationGain { k, candidate, gain });
            }
        }
        induced.push(own);
    }
    gains
}
