//! Deviation series of a solved table and the inequality checks that together
//! force `p_n → ½`.
//!
//! Notation used throughout:
//!
//! * `D_k = p_k − ½`, `Δ_k = |D_k|`, `Δ⁺_k = max(0, D_k)`, `Δ⁻_k = max(0, −D_k)`;
//! * `W_k = {k, k−1, …, k−m+1}` and a bar denotes the maximum over `W_k`.
//!
//! Pile sizes `s ≤ 0` follow the table's boundary convention `p_s = 1`, so
//! `Δ_s = Δ⁺_s = ½`, `Δ⁻_s = 0`, and in particular `Δ̄₁ = ½`.
//!
//! Every check records `lhs ≤ rhs` style inequalities with a slack tolerance
//! of [`SLACK_TOLERANCE`]. The checked statements are theorems whenever the
//! lottery set has `η < 1` and `ν > 0`; a violation means a defect upstream.

use serde::Serialize;
use thiserror::Error;

use crate::engine::ValueTable;
use crate::lottery::ConditionReport;

pub const SLACK_TOLERANCE: f64 = 1e-9;

/// Tolerance on `τ` for the golden-section search minimizing `δ(τ)`.
pub const TAU_SEARCH_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("drop constants need 0 < eta < 1 and 0 < nu < 1, got eta = {eta}, nu = {nu}")]
    InvalidEtaNu { eta: f64, nu: f64 },
    #[error("tau = {tau} outside the open interval (0, {upper})")]
    TauOutOfRange { tau: f64, upper: f64 },
}

/// `D`, `Δ`, `Δ⁺`, `Δ⁻` and their window maxima for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSeries {
    m: usize,
    n: usize,
    d: Vec<f64>,
    delta: Vec<f64>,
    delta_plus: Vec<f64>,
    delta_minus: Vec<f64>,
    delta_bar: Vec<f64>,
    delta_bar_plus: Vec<f64>,
    delta_bar_minus: Vec<f64>,
}

macro_rules! series_accessor {
    ($name:ident, $boundary:expr) => {
        pub fn $name(&self, k: i64) -> f64 {
            if k <= 0 {
                $boundary
            } else {
                self.$name[k as usize - 1]
            }
        }
    };
}

impl DeviationSeries {
    pub fn from_table(vt: &ValueTable) -> Self {
        let m = vt.m();
        let d: Vec<f64> = vt.values().iter().map(|p| p - 0.5).collect();
        let delta: Vec<f64> = d.iter().map(|x| x.abs()).collect();
        let delta_plus: Vec<f64> = d.iter().map(|x| x.max(0.0)).collect();
        let delta_minus: Vec<f64> = d.iter().map(|x| (-x).max(0.0)).collect();

        let window_max = |series: &[f64], boundary: f64| -> Vec<f64> {
            (1..=series.len())
                .map(|k| {
                    (k as i64 - m as i64 + 1..=k as i64)
                        .map(|j| {
                            if j <= 0 {
                                boundary
                            } else {
                                series[j as usize - 1]
                            }
                        })
                        .fold(0.0, f64::max)
                })
                .collect()
        };
        let delta_bar = window_max(&delta, 0.5);
        let delta_bar_plus = window_max(&delta_plus, 0.5);
        let delta_bar_minus = window_max(&delta_minus, 0.0);

        Self {
            m,
            n: vt.n(),
            d,
            delta,
            delta_plus,
            delta_minus,
            delta_bar,
            delta_bar_plus,
            delta_bar_minus,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    series_accessor!(d, 0.5);
    series_accessor!(delta, 0.5);
    series_accessor!(delta_plus, 0.5);
    series_accessor!(delta_minus, 0.0);
    series_accessor!(delta_bar, 0.5);
    series_accessor!(delta_bar_plus, 0.5);
    series_accessor!(delta_bar_minus, 0.0);

    /// `Δ̄_1..=Δ̄_n`.
    pub fn delta_bar_slice(&self) -> &[f64] {
        &self.delta_bar
    }

    /// Counts steps `k = 2..=n` where `Δ̄` strictly decreases. Only per-block
    /// decrease is guaranteed; this is an observation, not a check.
    pub fn strict_decrease(&self) -> StrictDecrease {
        let steps = self.n.saturating_sub(1);
        let strict = self.delta_bar.windows(2).filter(|w| w[1] < w[0]).count();
        StrictDecrease { steps, strict }
    }
}

pub fn deviation_series(vt: &ValueTable) -> DeviationSeries {
    DeviationSeries::from_table(vt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StrictDecrease {
    pub steps: usize,
    pub strict: usize,
}

/// Contraction constants: `τ` from the admissible interval and the resulting
/// per-block factor `δ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DropConstants {
    pub eta: f64,
    pub nu: f64,
    pub tau: f64,
    pub delta: f64,
}

impl DropConstants {
    /// Supremum of admissible `τ`: `(ν/(1−ν))·(2−2η)/(2−η)`.
    pub fn tau_upper(eta: f64, nu: f64) -> f64 {
        nu / (1.0 - nu) * (2.0 - 2.0 * eta) / (2.0 - eta)
    }

    /// `δ(τ) = max{ (η/(2−η))·(ν/(ν−τ+ντ)), 1/(1+τ) }`.
    pub fn delta_at(eta: f64, nu: f64, tau: f64) -> f64 {
        let worst_case = eta / (2.0 - eta) * (nu / (nu - tau + nu * tau));
        let strong_lead = 1.0 / (1.0 + tau);
        worst_case.max(strong_lead)
    }

    /// With `tau = None`, picks the `τ` minimizing `δ` by golden-section search.
    pub fn new(eta: f64, nu: f64, tau: Option<f64>) -> Result<Self, AnalysisError> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !(in_unit(eta) && in_unit(nu)) {
            return Err(AnalysisError::InvalidEtaNu { eta, nu });
        }
        let upper = Self::tau_upper(eta, nu);
        let tau = match tau {
            Some(tau) if tau > 0.0 && tau < upper => tau,
            Some(tau) => return Err(AnalysisError::TauOutOfRange { tau, upper }),
            None => golden_section_min(
                |t| Self::delta_at(eta, nu, t),
                0.0,
                upper,
                TAU_SEARCH_TOLERANCE,
            ),
        };
        let delta = Self::delta_at(eta, nu, tau);
        debug_assert!(delta > 0.0 && delta < 1.0, "delta = {delta}");
        Ok(Self {
            eta,
            nu,
            tau,
            delta,
        })
    }

    pub fn from_conditions(c: &ConditionReport, tau: Option<f64>) -> Result<Self, AnalysisError> {
        Self::new(c.eta, c.nu, tau)
    }

    /// Envelope `½·δ^⌊(k−1)/(3m)⌋` bounding `Δ̄_k`.
    pub fn envelope(&self, k: usize, m: usize) -> f64 {
        let blocks = (k.saturating_sub(1) / (3 * m)) as i32;
        0.5 * self.delta.powi(blocks)
    }

    /// Smallest `1 + 3m·N` with `½δᴺ < target`, past which every `Δ_k < target`.
    pub fn convergence_horizon(&self, m: usize, target: f64) -> usize {
        let blocks = ((2.0 * target).ln() / self.delta.ln()).ceil().max(0.0) as usize;
        1 + 3 * m * blocks
    }
}

pub fn drop_constants(eta: f64, nu: f64, tau: Option<f64>) -> Result<DropConstants, AnalysisError> {
    DropConstants::new(eta, nu, tau)
}

/// Minimizer of a unimodal `f` on the open interval `(lo, hi)`.
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    /// `Δ_k ≤ Δ̄_{k−1}` for `k ≥ 2`.
    Monotonicity,
    /// `Δ̄_k ≤ Δ̄_{k−1}` for `k ≥ 2`.
    MonotonicityWindow,
    /// All of `W_k` winning (`k > m`) ⇒ `p_{k+1} < ½`.
    NoLongWinningAfter,
    /// All of `W_k` winning (`k > m`) ⇒ `p_{k−m} ≤ ½`.
    NoLongWinningBefore,
    /// `p_j ≥ ½ + (1−ϰ)Δ_{k+1}` on `W_k` ⇒ `Δ_{k+1} ≤ η/((2−η)(1−ϰ))·Δ_{k−m}`.
    KmBound,
    /// `p_{k+1} < ½` ⇒ upward and downward window deviations from `½ + Δ_{k+1}`
    /// are related by the factor `ν/(1−ν)`.
    Corridor,
    /// `p_{k+1} < ½` ⇒ `Δ_{k+1} ≤ δ·Δ̄_{k−m}`.
    DropDown,
    /// `k > 2m` ⇒ `Δ_{k+1} ≤ δ·Δ̄_{k−2m}`.
    DropTwoM,
    /// `k > 3m` ⇒ `Δ̄_k ≤ δ·Δ̄_{k−3m}`.
    DropThreeM,
    /// `Δ⁺_{k+1} ≤ Δ̄⁻_k`.
    PlusMinus,
    /// `Δ̄_{1+3mN} ≤ ½·δᴺ`.
    EnvelopeBlocks,
    /// `Δ̄_k ≤ ½·δ^⌊(k−1)/(3m)⌋`.
    EnvelopeInterpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub k: i64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of one inequality scanned over every pile size where its
/// hypothesis applies. Inequalities are stored as `lhs ≤ rhs` (or `<`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub lemma_id: LemmaId,
    /// Free parameter of the statement, e.g. `ϰ` for [`LemmaId::KmBound`].
    pub parameter: Option<f64>,
    pub checked_k: Vec<i64>,
    pub violations: Vec<Violation>,
    /// Smallest `rhs − lhs` observed; `None` when nothing was checked.
    pub min_slack: Option<f64>,
}

impl BoundReport {
    fn new(lemma_id: LemmaId) -> Self {
        Self {
            lemma_id,
            parameter: None,
            checked_k: Vec::new(),
            violations: Vec::new(),
            min_slack: None,
        }
    }

    fn with_parameter(lemma_id: LemmaId, parameter: f64) -> Self {
        Self {
            parameter: Some(parameter),
            ..Self::new(lemma_id)
        }
    }

    fn record(&mut self, k: i64, lhs: f64, rhs: f64, holds: bool) {
        let slack = rhs - lhs;
        self.checked_k.push(k);
        self.min_slack = Some(self.min_slack.map_or(slack, |s| s.min(slack)));
        if !holds {
            self.violations.push(Violation { k, lhs, rhs });
        }
    }

    fn le(&mut self, k: i64, lhs: f64, rhs: f64) {
        self.record(k, lhs, rhs, lhs <= rhs + SLACK_TOLERANCE);
    }

    fn lt(&mut self, k: i64, lhs: f64, rhs: f64) {
        self.record(k, lhs, rhs, lhs < rhs + SLACK_TOLERANCE);
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn window(k: i64, m: usize) -> impl Iterator<Item = i64> {
    (k - m as i64 + 1..=k).rev()
}

pub fn check_monotonicity(ds: &DeviationSeries) -> Vec<BoundReport> {
    let mut single = BoundReport::new(LemmaId::Monotonicity);
    let mut windowed = BoundReport::new(LemmaId::MonotonicityWindow);
    for k in 2..=ds.n() as i64 {
        single.le(k, ds.delta(k), ds.delta_bar(k - 1));
        windowed.le(k, ds.delta_bar(k), ds.delta_bar(k - 1));
    }
    vec![single, windowed]
}

pub fn check_no_long_winning(vt: &ValueTable) -> Vec<BoundReport> {
    let m = vt.m();
    let n = vt.n() as i64;
    let mut after = BoundReport::new(LemmaId::NoLongWinningAfter);
    let mut before = BoundReport::new(LemmaId::NoLongWinningBefore);
    for k in m as i64 + 1..=n {
        if !window(k, m).all(|j| vt.p(j) > 0.5) {
            continue;
        }
        if k < n {
            after.lt(k, vt.p(k + 1), 0.5);
        }
        before.le(k, vt.p(k - m as i64), 0.5);
    }
    vec![after, before]
}

pub fn default_kappa_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

pub fn check_km_bound(
    vt: &ValueTable,
    ds: &DeviationSeries,
    eta: f64,
    kappa_grid: &[f64],
) -> Vec<BoundReport> {
    let m = vt.m();
    let n = vt.n() as i64;
    kappa_grid
        .iter()
        .map(|&kappa| {
            let mut report = BoundReport::with_parameter(LemmaId::KmBound, kappa);
            let factor = eta / ((2.0 - eta) * (1.0 - kappa));
            for k in m as i64 + 1..n {
                let next = ds.delta(k + 1);
                let floor = 0.5 + (1.0 - kappa) * next;
                if window(k, m).all(|j| vt.p(j) >= floor) {
                    report.le(k, next, factor * ds.delta(k - m as i64));
                }
            }
            report
        })
        .collect()
}

/// Stored as `(ν/(1−ν))·max(½+Δ_{k+1} − p_i) ≤ max(p_i − (½+Δ_{k+1}))` over `W_k`.
pub fn check_corridor(vt: &ValueTable, ds: &DeviationSeries, nu: f64) -> BoundReport {
    let m = vt.m();
    let ratio = nu / (1.0 - nu);
    let mut report = BoundReport::new(LemmaId::Corridor);
    for k in 0..vt.n() as i64 {
        if vt.p(k + 1) >= 0.5 {
            continue;
        }
        let level = 0.5 + ds.delta(k + 1);
        let (up, down) = window(k, m).fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(u, d), i| {
            (u.max(vt.p(i) - level), d.max(level - vt.p(i)))
        });
        report.le(k, ratio * down, up);
    }
    report
}

pub fn check_drop_down(
    vt: &ValueTable,
    ds: &DeviationSeries,
    dc: &DropConstants,
) -> Vec<BoundReport> {
    let m = vt.m() as i64;
    let n = vt.n() as i64;
    let delta = dc.delta;

    let mut losing = BoundReport::new(LemmaId::DropDown);
    for k in 1..n {
        if vt.p(k + 1) < 0.5 {
            losing.le(k, ds.delta(k + 1), delta * ds.delta_bar(k - m));
        }
    }
    let mut any = BoundReport::new(LemmaId::DropTwoM);
    for k in 2 * m + 1..n {
        any.le(k, ds.delta(k + 1), delta * ds.delta_bar(k - 2 * m));
    }
    let mut block = BoundReport::new(LemmaId::DropThreeM);
    for k in 3 * m + 1..=n {
        block.le(k, ds.delta_bar(k), delta * ds.delta_bar(k - 3 * m));
    }
    vec![losing, any, block]
}

pub fn check_plus_minus(ds: &DeviationSeries) -> BoundReport {
    let mut report = BoundReport::new(LemmaId::PlusMinus);
    for k in 1..ds.n() as i64 {
        report.le(k, ds.delta_plus(k + 1), ds.delta_bar_minus(k));
    }
    report
}

pub fn check_envelope(ds: &DeviationSeries, dc: &DropConstants, m: usize) -> Vec<BoundReport> {
    let n = ds.n();
    let block = 3 * m;
    let mut blocks = BoundReport::new(LemmaId::EnvelopeBlocks);
    for k in (1..=n).step_by(block) {
        blocks.le(k as i64, ds.delta_bar(k as i64), dc.envelope(k, m));
    }
    let mut interpolated = BoundReport::new(LemmaId::EnvelopeInterpolated);
    for k in 1..=n {
        interpolated.le(k as i64, ds.delta_bar(k as i64), dc.envelope(k, m));
    }
    vec![blocks, interpolated]
}

/// All checks for one solved table.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub reports: Vec<BoundReport>,
    pub strict_decrease: StrictDecrease,
}

impl Verification {
    pub fn violation_count(&self) -> usize {
        self.reports.iter().map(|r| r.violations.len()).sum()
    }

    pub fn passed(&self) -> bool {
        self.reports.iter().all(BoundReport::passed)
    }
}

pub fn verify_all(
    vt: &ValueTable,
    conditions: &ConditionReport,
    dc: &DropConstants,
    kappa_grid: &[f64],
) -> Verification {
    let ds = DeviationSeries::from_table(vt);
    let mut reports = check_monotonicity(&ds);
    reports.extend(check_no_long_winning(vt));
    reports.extend(check_km_bound(vt, &ds, conditions.eta, kappa_grid));
    reports.push(check_corridor(vt, &ds, conditions.nu));
    reports.extend(check_drop_down(vt, &ds, dc));
    reports.push(check_plus_minus(&ds));
    reports.extend(check_envelope(&ds, dc, vt.m()));
    Verification {
        reports,
        strict_decrease: ds.strict_decrease(),
    }
}
