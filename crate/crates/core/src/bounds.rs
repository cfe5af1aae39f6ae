//! Closed-form bounds, criteria and asymptotic formulas for the median and
//! mode, their checkers, and a grid scanner that runs the checkers over
//! `(k, λ)` and `(k, n)` domains.
//!
//! Each checker returns a [`BoundReport`]. A failed check is report content,
//! not an `Err`: `Err` is reserved for invalid input or numerical failure.
//! Claims are tagged [`ClaimKind::Proved`] or [`ClaimKind::Conjecture`];
//! a violated proved claim points at an implementation bug, a violated
//! conjecture is a finding.

use std::collections::BTreeSet;
use std::f64::consts::LN_2;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::critical::{first_double_mode, FirstDoubleMode};
use crate::distribution::{
    median, mode_set, mode_window_end, ScaledPmfTable, DEFAULT_TIE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::params::{kappa, OrderKParams};
use crate::structure::analyze_shape;

/// Relative tolerance for counting indices tied at the global maximum.
pub const TRIPLE_MODE_TOLERANCE: f64 = 1e-10;

fn floor_div(num: u64, den: u64) -> u64 {
    num / den
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// `floor(κλ)` as a signed integer.
fn floor_mean(k: u32, lambda: f64) -> i64 {
    (kappa(k) as f64 * lambda).floor() as i64
}

/// `⌊(k+4)/8⌋`, the offset of the median below the mean for `λ >= 1`.
pub fn median_offset(k: u32) -> u64 {
    floor_div(k as u64 + 4, 8)
}

/// `⌊(3k+5)/8⌋`, the offset of the mode below the mean for `λ >= 2`.
pub fn mode_offset(k: u32) -> u64 {
    floor_div(3 * k as u64 + 5, 8)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MedianBounds {
    pub lower: f64,
    pub upper: i64,
    pub c0: i64,
}

impl MedianBounds {
    /// `max{0, ⌊κλ⌋ − (k+1) ln2 / 2} <= ν <= ⌊κλ⌋ + c0`, `c0 = 1` iff `k <= 3`.
    pub fn new(k: u32, lambda: f64) -> Self {
        let fm = floor_mean(k, lambda);
        let c0 = if k <= 3 { 1 } else { 0 };
        Self {
            lower: (fm as f64 - 0.5 * (k as f64 + 1.0) * LN_2).max(0.0),
            upper: fm + c0,
            c0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeBounds {
    /// `⌊κλ⌋ − κ + 1 − δ_{k,1}`.
    pub lower_paper: i64,
    /// `⌊κλ⌋ − k`.
    pub lower_conjectured: i64,
    /// `⌊κλ⌋`.
    pub upper: i64,
    pub delta_k1: i64,
}

impl ModeBounds {
    pub fn new(k: u32, lambda: f64) -> Self {
        let fm = floor_mean(k, lambda);
        let delta_k1 = i64::from(k == 1);
        Self {
            lower_paper: fm - kappa(k) as i64 + 1 - delta_k1,
            lower_conjectured: fm - k as i64,
            upper: fm,
            delta_k1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MedianAsymptotic {
    pub k: u32,
    pub n: u64,
    pub nu: i64,
    pub alpha_kn: f64,
    pub a_kn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeAsymptotic {
    pub k: u32,
    pub n: u64,
    pub m: i64,
    pub beta_kn: f64,
    pub b_kn: f64,
}

fn median_a_terms(k: u32, n: u64) -> (f64, f64) {
    let kap = kappa(k) as f64;
    let n = n as f64;
    let first = (3.0 * kap / 349.0 + 13.0 / 1000.0) / n;
    let second = 13.0 / 1500.0 * (median_offset(k) as f64 - 3.0) * kap / (n * n);
    (first, second)
}

fn mode_b_terms(k: u32, n: u64) -> (f64, f64) {
    let kap = kappa(k) as f64;
    let n = n as f64;
    let first = (kap / (16.0 + 8.0 / 9.0) - 1.0 / (13.0 + 2.0 / 3.0)) / n;
    let second = mode_offset(k) as f64 * 3.0 * kap / (50.0 * n * n);
    (first, second)
}

fn alpha(k: u32, n: u64) -> f64 {
    let (a1, a2) = median_a_terms(k, n);
    n as f64 + frac((k as f64 + 4.0) / 8.0) + k as f64 / (8.0 * (2.0 * k as f64 + 1.0)) + a1 + a2
}

fn beta(k: u32, n: u64) -> f64 {
    let (b1, b2) = mode_b_terms(k, n);
    n as f64
        + frac((3.0 * k as f64 + 5.0) / 8.0)
        + (k as f64 - 1.0) / (8.0 * (2.0 * k as f64 + 1.0))
        + b1
        + b2
}

/// Median formula for `λ = n/κ`, `n >= κ`.
pub fn median_asymptotic_eval(k: u32, n: u64) -> Result<MedianAsymptotic> {
    if k == 0 || n < kappa(k) {
        return Err(Error::invalid(format!(
            "median asymptotics need k >= 1 and n >= κ = {}, got k = {k}, n = {n}",
            kappa(k)
        )));
    }
    let (a1, a2) = median_a_terms(k, n);
    Ok(MedianAsymptotic {
        k,
        n,
        nu: n as i64 - median_offset(k) as i64,
        alpha_kn: alpha(k, n),
        a_kn: a1 + a2,
    })
}

/// Mode formula for `λ = n/κ`, `n >= 2κ`.
pub fn mode_asymptotic_eval(k: u32, n: u64) -> Result<ModeAsymptotic> {
    if k == 0 || n < 2 * kappa(k) {
        return Err(Error::invalid(format!(
            "mode asymptotics need k >= 1 and n >= 2κ = {}, got k = {k}, n = {n}",
            2 * kappa(k)
        )));
    }
    let (b1, b2) = mode_b_terms(k, n);
    Ok(ModeAsymptotic {
        k,
        n,
        m: n as i64 - mode_offset(k) as i64,
        beta_kn: beta(k, n),
        b_kn: b1 + b2,
    })
}

/// Half-width of the band around `α_{k,n}` where the approximate correction
/// term is not trusted: twice the last printed term, and at least `1/n²`.
fn median_guard(k: u32, n: u64) -> f64 {
    let (_, a2) = median_a_terms(k, n);
    (2.0 * a2.abs()).max(1.0 / (n as f64 * n as f64))
}

fn mode_guard(k: u32, n: u64) -> f64 {
    let (_, b2) = mode_b_terms(k, n);
    (2.0 * b2.abs()).max(1.0 / (n as f64 * n as f64))
}

/// `(σ_k/κ, (1/4)(5/k − 2/(k+1)))`: scaled peak width and the bound on the
/// scaled mean–mode gap for `λ >= 2`.
pub fn scaled_shape_formulas(k: u32, lambda: f64) -> Result<(f64, f64)> {
    if k == 0 || !(lambda > 0.0) {
        return Err(Error::invalid("need k >= 1 and λ > 0"));
    }
    let kf = k as f64;
    let width = (2.0 * lambda / 3.0).sqrt() * (1.0 / kf + 1.0 / (kf + 1.0)).sqrt();
    let gap = 0.25 * (5.0 / kf - 2.0 / (kf + 1.0));
    Ok((width, gap))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimId {
    MedianZeroCriterion,
    ModeZeroSufficient,
    MedianZeroImpliesModeZero,
    ModeTheoremBounds,
    FirstDoubleModeChain,
    Ln2Inequality,
    MedianBounds,
    ModeBounds,
    MedianAsymptotic,
    ModeAsymptotic,
    ScaledMeanModeGap,
    NoTripleMode,
    PeakCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimKind {
    Proved,
    Conjecture,
    /// Numerical observation without a proof or a formal conjecture.
    Observation,
}

impl ClaimId {
    pub const ALL: [ClaimId; 13] = [
        ClaimId::MedianZeroCriterion,
        ClaimId::ModeZeroSufficient,
        ClaimId::MedianZeroImpliesModeZero,
        ClaimId::ModeTheoremBounds,
        ClaimId::FirstDoubleModeChain,
        ClaimId::Ln2Inequality,
        ClaimId::MedianBounds,
        ClaimId::ModeBounds,
        ClaimId::MedianAsymptotic,
        ClaimId::ModeAsymptotic,
        ClaimId::ScaledMeanModeGap,
        ClaimId::NoTripleMode,
        ClaimId::PeakCount,
    ];

    pub fn kind(self) -> ClaimKind {
        use ClaimId::*;
        match self {
            MedianZeroCriterion
            | ModeZeroSufficient
            | MedianZeroImpliesModeZero
            | ModeTheoremBounds
            | FirstDoubleModeChain
            | Ln2Inequality => ClaimKind::Proved,
            MedianBounds | ModeBounds | MedianAsymptotic | ModeAsymptotic | ScaledMeanModeGap => {
                ClaimKind::Conjecture
            }
            NoTripleMode | PeakCount => ClaimKind::Observation,
        }
    }

    pub fn name(self) -> &'static str {
        use ClaimId::*;
        match self {
            MedianZeroCriterion => "median-zero-criterion",
            ModeZeroSufficient => "mode-zero-sufficient",
            MedianZeroImpliesModeZero => "median-zero-implies-mode-zero",
            ModeTheoremBounds => "mode-theorem-bounds",
            FirstDoubleModeChain => "first-double-mode-chain",
            Ln2Inequality => "ln2-inequality",
            MedianBounds => "median-bounds",
            ModeBounds => "mode-bounds",
            MedianAsymptotic => "median-asymptotic",
            ModeAsymptotic => "mode-asymptotic",
            ScaledMeanModeGap => "scaled-mean-mode-gap",
            NoTripleMode => "no-triple-mode",
            PeakCount => "peak-count",
        }
    }

    pub fn parse(s: &str) -> Option<ClaimId> {
        ClaimId::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub claim: ClaimId,
    pub kind: ClaimKind,
    pub k: u32,
    pub lambda: Option<f64>,
    pub n: Option<u64>,
    pub holds: bool,
    /// Non-negative exactly when the claim holds; zero marks a sharp case.
    pub slack: f64,
    /// Set when a mismatch falls inside the band where an approximate
    /// correction term is not trusted; such mismatches do not count as
    /// violations.
    pub approximate: bool,
    pub witness: Option<Value>,
}

impl BoundReport {
    fn new(claim: ClaimId, k: u32, holds: bool, slack: f64) -> Self {
        let slack = if holds {
            slack.abs()
        } else {
            -slack.abs().max(f64::MIN_POSITIVE)
        };
        Self {
            claim,
            kind: claim.kind(),
            k,
            lambda: None,
            n: None,
            holds,
            slack,
            approximate: false,
            witness: None,
        }
    }

    fn at_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    fn at_n(mut self, n: u64) -> Self {
        self.n = Some(n);
        self
    }

    fn with_witness(mut self, witness: Value) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn is_sharp(&self) -> bool {
        self.holds && self.slack == 0.0
    }

    pub fn is_violation(&self) -> bool {
        !self.holds
    }
}

fn params(k: u32, lambda: f64) -> Result<OrderKParams> {
    OrderKParams::new(k, lambda)
}

/// `λ <= ln2 / k`.
pub fn median_zero_criterion(k: u32, lambda: f64) -> bool {
    lambda <= LN_2 / k as f64
}

/// `λ < 2/(k+1)`; sufficient, not necessary, for the mode to be `{0}`.
pub fn mode_zero_sufficient(k: u32, lambda: f64) -> bool {
    lambda < 2.0 / (k as f64 + 1.0)
}

pub fn check_median_zero_criterion(k: u32, lambda: f64) -> Result<BoundReport> {
    let nu = median(&params(k, lambda)?)?;
    let predicted = median_zero_criterion(k, lambda);
    let holds = predicted == (nu == 0);
    Ok(BoundReport::new(
        ClaimId::MedianZeroCriterion,
        k,
        holds,
        lambda - LN_2 / k as f64,
    )
    .at_lambda(lambda)
    .with_witness(json!({ "median": nu, "criterion": predicted })))
}

pub fn check_mode_zero_sufficient(k: u32, lambda: f64) -> Result<BoundReport> {
    let modes = mode_set(&params(k, lambda)?, DEFAULT_TIE_TOLERANCE)?.modes;
    let criterion = mode_zero_sufficient(k, lambda);
    let holds = !criterion || modes == [0];
    Ok(BoundReport::new(
        ClaimId::ModeZeroSufficient,
        k,
        holds,
        2.0 / (k as f64 + 1.0) - lambda,
    )
    .at_lambda(lambda)
    .with_witness(json!({ "modes": modes, "criterion": criterion })))
}

pub fn median_zero_implies_mode_zero_check(k: u32, lambda: f64) -> Result<BoundReport> {
    if !median_zero_criterion(k, lambda) {
        return Err(Error::invalid(format!(
            "need λ <= ln2/k = {}, got {lambda}",
            LN_2 / k as f64
        )));
    }
    let modes = mode_set(&params(k, lambda)?, DEFAULT_TIE_TOLERANCE)?.modes;
    let holds = modes == [0];
    Ok(BoundReport::new(
        ClaimId::MedianZeroImpliesModeZero,
        k,
        holds,
        LN_2 / k as f64 - lambda,
    )
    .at_lambda(lambda)
    .with_witness(json!({ "modes": modes })))
}

pub fn check_median_bounds(k: u32, lambda: f64) -> Result<BoundReport> {
    if k < 2 || !(lambda > LN_2 / k as f64 && lambda < 1.0) {
        return Err(Error::invalid(format!(
            "median bounds need k >= 2 and λ in (ln2/k, 1), got k = {k}, λ = {lambda}"
        )));
    }
    let nu = median(&params(k, lambda)?)? as i64;
    let b = MedianBounds::new(k, lambda);
    let slack = (nu as f64 - b.lower).min((b.upper - nu) as f64);
    let tempting = floor_mean(k, lambda) - median_offset(k) as i64;
    Ok(
        BoundReport::new(ClaimId::MedianBounds, k, slack >= 0.0, slack)
            .at_lambda(lambda)
            .with_witness(json!({
                "median": nu,
                "lower": b.lower,
                "upper": b.upper,
                "kappa_lambda": kappa(k) as f64 * lambda,
                "offset_bound": tempting,
                "offset_bound_fails": nu > tempting,
            })),
    )
}

/// Conjectured `⌊κλ⌋ − k <= m <= ⌊κλ⌋` for `λ ∈ (λ̂_k, 2)`.
pub fn check_mode_bounds(k: u32, lambda: f64) -> Result<BoundReport> {
    if k < 2 || !(lambda > 0.0 && lambda < 2.0) {
        return Err(Error::invalid(format!(
            "mode bounds need k >= 2 and λ in (0, 2), got k = {k}, λ = {lambda}"
        )));
    }
    let m = mode_set(&params(k, lambda)?, 0.0)?.principal() as i64;
    if m == 0 {
        return Err(Error::invalid(format!(
            "mode bounds apply where the mode is nonzero; mode is 0 at k = {k}, λ = {lambda}"
        )));
    }
    let b = ModeBounds::new(k, lambda);
    let slack = (m - b.lower_conjectured).min(b.upper - m) as f64;
    let tempting = floor_mean(k, lambda) - mode_offset(k) as i64;
    Ok(
        BoundReport::new(ClaimId::ModeBounds, k, slack >= 0.0, slack)
            .at_lambda(lambda)
            .with_witness(json!({
                "mode": m,
                "lower": b.lower_conjectured,
                "upper": b.upper,
                "kappa_lambda": kappa(k) as f64 * lambda,
                "lower_is_sharp": m == b.lower_conjectured,
                "offset_bound": tempting,
                "offset_bound_fails": m > tempting,
            })),
    )
}

/// Published bounds `⌊κλ⌋ − κ + 1 − δ_{k,1} <= m <= ⌊κλ⌋`, every mode.
pub fn check_mode_theorem_bounds(k: u32, lambda: f64) -> Result<BoundReport> {
    let modes = mode_set(&params(k, lambda)?, DEFAULT_TIE_TOLERANCE)?.modes;
    let b = ModeBounds::new(k, lambda);
    let slack = modes
        .iter()
        .map(|&m| (m as i64 - b.lower_paper).min(b.upper - m as i64))
        .min()
        .unwrap_or(0) as f64;
    Ok(
        BoundReport::new(ClaimId::ModeTheoremBounds, k, slack >= 0.0, slack)
            .at_lambda(lambda)
            .with_witness(json!({ "modes": modes, "lower": b.lower_paper, "upper": b.upper })),
    )
}

/// `2/(k+1) <= λ̂_k <= r_k < 1`, `k <= m̂_k < κ` and `m̂_k <= κ λ̂_k`.
pub fn check_first_double_mode_chain(k: u32) -> Result<BoundReport> {
    let f = first_double_mode(k)?;
    Ok(chain_report(&f))
}

fn chain_report(f: &FirstDoubleMode) -> BoundReport {
    let k = f.k;
    let kap = kappa(k) as f64;
    let slacks = [
        f.lambda_hat - 2.0 / (k as f64 + 1.0),
        f.r_k - f.lambda_hat,
        1.0 - f.r_k,
        f.m_hat as f64 - k as f64,
        kap - f.m_hat as f64,
        kap * f.lambda_hat - f.m_hat as f64,
    ];
    // λ̂ <= r_k is an equality for k <= 14 up to solver precision
    let tol = 1e-10;
    let holds = slacks[0] >= -tol
        && slacks[1] >= -tol
        && slacks[2] > 0.0
        && slacks[3] >= 0.0
        && slacks[4] > 0.0
        && slacks[5] >= -tol;
    let slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    BoundReport::new(ClaimId::FirstDoubleModeChain, k, holds, slack)
        .at_lambda(f.lambda_hat)
        .with_witness(json!({
            "lambda_hat": f.lambda_hat,
            "m_hat": f.m_hat,
            "r_k": f.r_k,
            "lower": 2.0 / (k as f64 + 1.0),
            "kappa": kappa(k),
        }))
}

/// Rational upper bound on `ln 2`: `ln 2 = 0.69314718055994530942… < 0.6931471805599454`.
const LN2_UPPER_NUM: i128 = 6_931_471_805_599_454;
const LN2_UPPER_DEN: i128 = 10_000_000_000_000_000;

/// Exact check of `ln2 / k < 2 / (k+1)` via `(k+1) · ln2 < 2k` with a rational
/// upper bound for `ln 2`.
pub fn ln2_inequality_exact(k: u64) -> bool {
    let k = k as i128;
    k >= 1 && (k + 1) * LN2_UPPER_NUM < 2 * k * LN2_UPPER_DEN
}

pub fn check_ln2_inequality(k: u32) -> BoundReport {
    let holds = ln2_inequality_exact(k as u64);
    let kf = k as f64;
    BoundReport::new(
        ClaimId::Ln2Inequality,
        k,
        holds,
        2.0 / (kf + 1.0) - LN_2 / kf,
    )
}

/// Median formula at `λ = n/κ`, plus the interval rule at `samples` interior
/// points of `(α_{k,n-1}, α_{k,n}]`.
pub fn check_median_asymptotic(k: u32, n: u64, samples: usize) -> Result<Vec<BoundReport>> {
    let f = median_asymptotic_eval(k, n)?;
    let kap = kappa(k) as f64;
    let mut out = Vec::with_capacity(samples + 1);
    let nu = median(&params(k, n as f64 / kap)?)? as i64;
    out.push(
        BoundReport::new(ClaimId::MedianAsymptotic, k, nu == f.nu, (nu - f.nu) as f64)
            .at_lambda(n as f64 / kap)
            .at_n(n)
            .with_witness(json!({ "median": nu, "formula": f.nu, "alpha": f.alpha_kn })),
    );
    if samples > 0 && n > kappa(k) {
        let lo = alpha(k, n - 1);
        let hi = f.alpha_kn;
        let guard = median_guard(k, n - 1).max(median_guard(k, n));
        for x in interval_samples(lo, hi, samples) {
            let observed = median(&params(k, x / kap)?)? as i64;
            out.push(interval_report(
                ClaimId::MedianAsymptotic,
                k,
                n,
                x,
                kap,
                observed,
                f.nu,
                lo,
                hi,
                guard,
            ));
        }
    }
    Ok(out)
}

/// Mode formula at `λ = n/κ`, plus the interval rule on `(β_{k,n-1}, β_{k,n}]`.
///
/// At `λ = n/κ` the formula value must be one of the modes; for `k = 1` and
/// integer `λ` the two tied modes are `n − 1` and `n`.
pub fn check_mode_asymptotic(k: u32, n: u64, samples: usize) -> Result<Vec<BoundReport>> {
    let f = mode_asymptotic_eval(k, n)?;
    let kap = kappa(k) as f64;
    let mut out = Vec::with_capacity(samples + 1);
    let modes = mode_set(&params(k, n as f64 / kap)?, DEFAULT_TIE_TOLERANCE)?.modes;
    let hit = modes.contains(&(f.m as usize));
    let nearest = modes
        .iter()
        .map(|&m| m as i64 - f.m)
        .min_by_key(|d| d.abs())
        .unwrap_or(0);
    out.push(
        BoundReport::new(ClaimId::ModeAsymptotic, k, hit, nearest as f64)
            .at_lambda(n as f64 / kap)
            .at_n(n)
            .with_witness(json!({ "modes": modes, "formula": f.m, "beta": f.beta_kn })),
    );
    if samples > 0 && n > 2 * kappa(k) {
        let lo = beta(k, n - 1);
        let hi = f.beta_kn;
        let guard = mode_guard(k, n - 1).max(mode_guard(k, n));
        for x in interval_samples(lo, hi, samples) {
            let observed = mode_set(&params(k, x / kap)?, 0.0)?.principal() as i64;
            out.push(interval_report(
                ClaimId::ModeAsymptotic,
                k,
                n,
                x,
                kap,
                observed,
                f.m,
                lo,
                hi,
                guard,
            ));
        }
    }
    Ok(out)
}

fn interval_samples(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    // include the closed right end; the left end is open
    (1..=samples)
        .map(|i| lo + (hi - lo) * i as f64 / samples as f64)
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn interval_report(
    claim: ClaimId,
    k: u32,
    n: u64,
    kappa_lambda: f64,
    kap: f64,
    observed: i64,
    expected: i64,
    lo: f64,
    hi: f64,
    guard: f64,
) -> BoundReport {
    let near_edge = kappa_lambda - lo <= guard || hi - kappa_lambda <= guard;
    let matches = observed == expected;
    let mut r = BoundReport::new(claim, k, matches || near_edge, (observed - expected) as f64)
        .at_lambda(kappa_lambda / kap)
        .at_n(n)
        .with_witness(json!({
            "kappa_lambda": kappa_lambda,
            "observed": observed,
            "formula": expected,
            "interval": [lo, hi],
            "guard": guard,
        }));
    r.approximate = !matches && near_edge;
    r
}

/// `(μ − m)/κ <= (1/4)(5/k − 2/(k+1))` at `λ = 2`.
pub fn check_scaled_mean_mode_gap(k: u32) -> Result<BoundReport> {
    let lambda = 2.0;
    let m = mode_set(&params(k, lambda)?, 0.0)?.principal();
    let kap = kappa(k) as f64;
    let gap = (kap * lambda - m as f64) / kap;
    let (width, bound) = scaled_shape_formulas(k, lambda)?;
    Ok(
        BoundReport::new(ClaimId::ScaledMeanModeGap, k, gap <= bound, bound - gap)
            .at_lambda(lambda)
            .with_witness(
                json!({ "mode": m, "scaled_gap": gap, "bound": bound, "scaled_width": width }),
            ),
    )
}

/// Counts indices tied with the global maximum to `TRIPLE_MODE_TOLERANCE`.
pub fn check_no_triple_mode(k: u32, lambda: f64) -> Result<BoundReport> {
    let modes = mode_set(&params(k, lambda)?, TRIPLE_MODE_TOLERANCE)?.modes;
    let holds = modes.len() < 3;
    Ok(BoundReport::new(
        ClaimId::NoTripleMode,
        k,
        holds,
        3.0 - modes.len() as f64 - 1.0,
    )
    .at_lambda(lambda)
    .with_witness(json!({ "modes": modes })))
}

pub fn check_peak_count(k: u32, lambda: f64) -> Result<BoundReport> {
    let p = params(k, lambda)?;
    let table = ScaledPmfTable::new(p, mode_window_end(&p))?;
    let shape = analyze_shape(&table)?;
    let locations: Vec<usize> = shape.mountain.peaks.iter().map(|p| p.location).collect();
    let holds = locations.len() <= 2 && shape.anomalies.is_empty();
    Ok(
        BoundReport::new(ClaimId::PeakCount, k, holds, 2.0 - locations.len() as f64)
            .at_lambda(lambda)
            .with_witness(json!({ "peaks": locations, "anomalies": shape.anomalies })),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Sampling {
    /// Midpoints of equal sub-intervals.
    Stratified,
    /// Seeded uniform draws, sorted.
    Uniform { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub claims: BTreeSet<ClaimId>,
    pub lambda_points: usize,
    pub sampling: Sampling,
    /// Optional clamp applied to every claim's `λ` domain.
    pub lambda_range: Option<(f64, f64)>,
    /// Asymptotic claims run only for `k <= asymptotic_k_max`.
    pub asymptotic_k_max: u32,
    /// Interval-rule samples per `n` for the asymptotic claims.
    pub interval_samples: usize,
    /// Include the two pinned counterexamples to the offset bounds.
    pub include_pinned: bool,
    /// Upper limit on checker invocations.
    pub max_evaluations: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            claims: ClaimId::ALL.into_iter().collect(),
            lambda_points: 200,
            sampling: Sampling::Stratified,
            lambda_range: None,
            asymptotic_k_max: 12,
            interval_samples: 2,
            include_pinned: true,
            max_evaluations: 5_000_000,
        }
    }
}

/// `(k, λ)` points pinned as regressions: the offset bounds fail here.
pub const PINNED_MEDIAN_POINT: (u32, f64) = (514, 0.0031619);
pub const PINNED_MODE_POINT: (u32, f64) = (44, 0.114198);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimTally {
    pub claim: ClaimId,
    pub kind: ClaimKind,
    pub evaluated: usize,
    pub violations: usize,
    pub approximate: usize,
    pub sharp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    pub reports: Vec<BoundReport>,
    pub tallies: Vec<ClaimTally>,
}

impl ScanSummary {
    pub fn proved_violations(&self) -> usize {
        self.count(|r| r.kind == ClaimKind::Proved && r.is_violation())
    }

    pub fn conjecture_violations(&self) -> usize {
        self.count(|r| r.kind != ClaimKind::Proved && r.is_violation())
    }

    fn count(&self, pred: impl Fn(&BoundReport) -> bool) -> usize {
        self.reports.iter().filter(|r| pred(r)).count()
    }

    /// 2 if a proved statement failed, otherwise 0.
    pub fn exit_code(&self) -> i32 {
        if self.proved_violations() > 0 {
            2
        } else {
            0
        }
    }
}

fn lambda_samples(lo: f64, hi: f64, points: usize, sampling: Sampling, salt: u64) -> Vec<f64> {
    if !(hi > lo) || points == 0 {
        return Vec::new();
    }
    match sampling {
        Sampling::Stratified => (0..points)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / points as f64)
            .collect(),
        Sampling::Uniform { seed } => {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut v: Vec<f64> = (0..points)
                .map(|_| {
                    let x = rng.gen_range(lo..hi);
                    if x == lo {
                        0.5 * (lo + hi)
                    } else {
                        x
                    }
                })
                .collect();
            v.sort_by(f64::total_cmp);
            v
        }
    }
}

struct ScanContext<'a> {
    config: &'a ScanConfig,
    evaluations: AtomicU64,
}

impl ScanContext<'_> {
    fn domain(&self, lo: f64, hi: f64) -> (f64, f64) {
        match self.config.lambda_range {
            Some((a, b)) => (lo.max(a), hi.min(b)),
            None => (lo, hi),
        }
    }

    fn grid(&self, claim: ClaimId, k: u32, lo: f64, hi: f64) -> Vec<f64> {
        let (lo, hi) = self.domain(lo, hi);
        let salt = ((claim as u64) << 32) | k as u64;
        lambda_samples(
            lo,
            hi,
            self.config.lambda_points,
            self.config.sampling,
            salt,
        )
    }

    fn tick(&self, n: u64) -> Result<()> {
        let used = self.evaluations.fetch_add(n, AtomicOrdering::Relaxed) + n;
        if used > self.config.max_evaluations {
            return Err(Error::ResourceLimit(format!(
                "scan exceeded {} checker evaluations",
                self.config.max_evaluations
            )));
        }
        Ok(())
    }

    fn wants(&self, claim: ClaimId) -> bool {
        self.config.claims.contains(&claim)
    }

    fn scan_k(&self, k: u32) -> Result<Vec<BoundReport>> {
        use ClaimId::*;
        let mut out = Vec::new();
        let kf = k as f64;
        let ln2k = LN_2 / kf;

        if self.wants(Ln2Inequality) {
            out.push(check_ln2_inequality(k));
        }
        if self.wants(MedianZeroCriterion) {
            let mut grid = self.grid(MedianZeroCriterion, k, 0.0, 2.0 * ln2k);
            grid.push(ln2k);
            self.tick(grid.len() as u64)?;
            for l in grid {
                out.push(check_median_zero_criterion(k, l)?);
            }
        }
        if self.wants(MedianZeroImpliesModeZero) {
            let mut grid = self.grid(MedianZeroImpliesModeZero, k, 0.0, ln2k);
            grid.push(ln2k);
            self.tick(grid.len() as u64)?;
            for l in grid {
                out.push(median_zero_implies_mode_zero_check(k, l)?);
            }
        }
        if self.wants(ModeZeroSufficient) {
            let grid = self.grid(ModeZeroSufficient, k, 0.0, 2.0 / (kf + 1.0));
            self.tick(grid.len() as u64)?;
            for l in grid {
                out.push(check_mode_zero_sufficient(k, l)?);
            }
        }
        if k >= 2 && self.wants(MedianBounds) {
            let grid = self.grid(MedianBounds, k, ln2k, 1.0);
            self.tick(grid.len() as u64)?;
            for l in grid {
                if l > ln2k && l < 1.0 {
                    out.push(check_median_bounds(k, l)?);
                }
            }
        }
        let nonzero_mode_claims = [ModeBounds, ModeTheoremBounds, NoTripleMode, PeakCount];
        if k >= 2
            && (self.wants(FirstDoubleModeChain)
                || nonzero_mode_claims.iter().any(|&c| self.wants(c)))
        {
            self.tick(1)?;
            let fdm = first_double_mode(k)?;
            if self.wants(FirstDoubleModeChain) {
                out.push(chain_report(&fdm));
            }
            let grid = self.grid(ModeBounds, k, fdm.lambda_hat, 2.0);
            for l in grid {
                if !(l > fdm.lambda_hat && l < 2.0) {
                    continue;
                }
                self.tick(1)?;
                if self.wants(ModeBounds) {
                    out.push(check_mode_bounds(k, l)?);
                }
                if self.wants(ModeTheoremBounds) {
                    out.push(check_mode_theorem_bounds(k, l)?);
                }
                if self.wants(NoTripleMode) {
                    out.push(check_no_triple_mode(k, l)?);
                }
                if self.wants(PeakCount) {
                    out.push(check_peak_count(k, l)?);
                }
            }
        }
        if k <= self.config.asymptotic_k_max {
            let kap = kappa(k);
            if self.wants(MedianAsymptotic) {
                self.tick(5 * kap + 1)?;
                for n in kap..=6 * kap {
                    out.extend(check_median_asymptotic(k, n, self.config.interval_samples)?);
                }
            }
            if self.wants(ModeAsymptotic) {
                self.tick(4 * kap + 1)?;
                for n in 2 * kap..=6 * kap {
                    out.extend(check_mode_asymptotic(k, n, self.config.interval_samples)?);
                }
            }
        }
        if self.wants(ScaledMeanModeGap) {
            self.tick(1)?;
            out.push(check_scaled_mean_mode_gap(k)?);
        }
        Ok(out)
    }
}

/// Runs every selected checker for every `k` in `k_set`.
///
/// Output is sorted by claim, `k`, `λ` and `n`, so results do not depend on
/// the number of worker threads.
pub fn conjecture_scan(k_set: &[u32], config: &ScanConfig) -> Result<ScanSummary> {
    if k_set.contains(&0) {
        return Err(Error::invalid("k must be at least 1"));
    }
    let ctx = ScanContext {
        config,
        evaluations: AtomicU64::new(0),
    };
    let mut reports: Vec<BoundReport> = k_set
        .par_iter()
        .map(|&k| ctx.scan_k(k))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if config.include_pinned {
        let (k, l) = PINNED_MEDIAN_POINT;
        if ctx.wants(ClaimId::MedianBounds) {
            reports.push(check_median_bounds(k, l)?);
        }
        let (k, l) = PINNED_MODE_POINT;
        if ctx.wants(ClaimId::ModeBounds) {
            reports.push(check_mode_bounds(k, l)?);
        }
    }
    reports.sort_by(|a, b| {
        a.claim
            .cmp(&b.claim)
            .then(a.k.cmp(&b.k))
            .then(
                a.lambda
                    .unwrap_or(-1.0)
                    .total_cmp(&b.lambda.unwrap_or(-1.0)),
            )
            .then(a.n.cmp(&b.n))
    });
    reports.dedup();
    let tallies = config
        .claims
        .iter()
        .map(|&claim| {
            let of: Vec<&BoundReport> = reports.iter().filter(|r| r.claim == claim).collect();
            ClaimTally {
                claim,
                kind: claim.kind(),
                evaluated: of.len(),
                violations: of.iter().filter(|r| r.is_violation()).count(),
                approximate: of.iter().filter(|r| r.approximate).count(),
                sharp: of.iter().filter(|r| r.is_sharp()).count(),
            }
        })
        .collect();
    Ok(ScanSummary { reports, tallies })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_zero_examples() {
        assert!(median_zero_criterion(7, 0.09));
        assert!(!median_zero_criterion(7, 0.10));
        assert!(median_zero_criterion(1, LN_2));
        assert!(check_median_zero_criterion(7, 0.09).unwrap().holds);
        assert!(check_median_zero_criterion(7, 0.10).unwrap().holds);
        assert!(check_median_zero_criterion(1, LN_2).unwrap().holds);
    }

    #[test]
    fn mode_zero_examples() {
        assert!(mode_zero_sufficient(3, 0.49));
        assert!(!mode_zero_sufficient(3, 0.55));
        assert!(check_mode_zero_sufficient(3, 0.49).unwrap().holds);
        // criterion fails above 2/3 yet the mode stays zero up to λ̂_2 = √3 − 1
        assert!(!mode_zero_sufficient(2, 0.70));
        assert_eq!(
            mode_set(&OrderKParams::new(2, 0.70).unwrap(), 0.0)
                .unwrap()
                .modes,
            vec![0]
        );
    }

    #[test]
    fn median_zero_implies_mode_zero_on_boundary() {
        for k in [2, 10, 50] {
            let r = median_zero_implies_mode_zero_check(k, LN_2 / k as f64).unwrap();
            assert!(r.holds);
        }
        assert!(median_zero_implies_mode_zero_check(2, 1.0).is_err());
    }

    #[test]
    fn median_bounds_c0_branch() {
        assert_eq!(MedianBounds::new(3, 0.5).c0, 1);
        assert_eq!(MedianBounds::new(4, 0.5).c0, 0);
        assert!(check_median_bounds(4, 0.5).unwrap().holds);
        assert!(check_median_bounds(4, 0.1).is_err());
    }

    #[test]
    fn mode_bounds_delta() {
        let b = ModeBounds::new(1, 4.5);
        assert_eq!(b.delta_k1, 1);
        assert_eq!(b.lower_paper, 4 - 1 + 1 - 1);
        let b = ModeBounds::new(3, 2.0);
        assert_eq!(
            (b.lower_paper, b.lower_conjectured, b.upper),
            (12 - 6 + 1, 9, 12)
        );
    }

    #[test]
    fn asymptotic_formulas() {
        let m = median_asymptotic_eval(10, 110).unwrap();
        assert_eq!(m.nu, 109);
        let m = mode_asymptotic_eval(10, 110).unwrap();
        assert_eq!(m.m, 106);
        assert_eq!(median_asymptotic_eval(1, 5).unwrap().nu, 5);
        assert_eq!(mode_asymptotic_eval(1, 5).unwrap().m, 4);
        assert_eq!(mode_asymptotic_eval(3, 12).unwrap().m, 11);
        assert!(median_asymptotic_eval(10, 54).is_err());
        assert!(mode_asymptotic_eval(10, 109).is_err());
    }

    #[test]
    fn boundaries_increase_in_n() {
        for k in 1..=30 {
            let kap = kappa(k);
            for n in kap + 1..=6 * kap {
                assert!(alpha(k, n - 1) < alpha(k, n));
            }
            for n in 2 * kap + 1..=6 * kap {
                assert!(beta(k, n - 1) < beta(k, n));
            }
        }
    }

    #[test]
    fn shape_formulas() {
        let (w, _) = scaled_shape_formulas(1, 2.0).unwrap();
        assert!((w - 2f64.sqrt()).abs() < 1e-15);
        let (_, bound) = scaled_shape_formulas(10, 2.0).unwrap();
        assert!(4.0 / 55.0 <= bound);
        assert!(scaled_shape_formulas(0, 2.0).is_err());
    }

    #[test]
    fn ln2_inequality_small_cases() {
        for k in 1..=1000u64 {
            assert!(ln2_inequality_exact(k));
            assert!(LN_2 / (k as f64) < 2.0 / (k as f64 + 1.0));
        }
        assert!(!ln2_inequality_exact(0));
    }

    #[test]
    fn claim_names_round_trip() {
        for c in ClaimId::ALL {
            assert_eq!(ClaimId::parse(c.name()), Some(c));
        }
    }

    #[test]
    fn violated_report_has_negative_slack() {
        let r = BoundReport::new(ClaimId::ModeBounds, 2, false, 0.0);
        assert!(r.slack < 0.0);
        let r = BoundReport::new(ClaimId::ModeBounds, 2, true, -3.0);
        assert!(r.slack >= 0.0);
    }

    #[test]
    fn small_scan_is_clean_and_deterministic() {
        let cfg = ScanConfig {
            lambda_points: 12,
            asymptotic_k_max: 4,
            include_pinned: false,
            ..ScanConfig::default()
        };
        let a = conjecture_scan(&[2, 3, 5], &cfg).unwrap();
        let b = conjecture_scan(&[5, 3, 2], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.proved_violations(), 0);
        assert_eq!(
            a.conjecture_violations(),
            0,
            "{:?}",
            a.reports.iter().filter(|r| !r.holds).collect::<Vec<_>>()
        );
        assert_eq!(a.exit_code(), 0);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let s = Sampling::Uniform { seed: 7 };
        let a = lambda_samples(0.1, 0.9, 20, s, 3);
        assert_eq!(a, lambda_samples(0.1, 0.9, 20, s, 3));
        assert_ne!(
            a,
            lambda_samples(0.1, 0.9, 20, Sampling::Uniform { seed: 8 }, 3)
        );
        assert!(a.iter().all(|&x| x > 0.1 && x < 0.9));
    }

    #[test]
    fn budget_limit() {
        let cfg = ScanConfig {
            max_evaluations: 10,
            ..ScanConfig::default()
        };
        assert!(matches!(
            conjecture_scan(&[2], &cfg),
            Err(Error::ResourceLimit(_))
        ));
    }
}
