//! Critical rate parameters: `r_k`, the first double mode `(λ̂_k, m̂_k)`,
//! pairwise ties between pmf values and the full list of mode-jump
//! boundaries in `λ ∈ (0, 2]`.
//!
//! Every solver is a bisection on a function that is monotone or at least
//! sign-changing on its bracket; tolerances live in [`SolverConfig`].

use serde::Serialize;

use crate::distribution::{mode_set, mode_window_end, ScaledPmfTable, DEFAULT_TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::params::OrderKParams;
use crate::structure::{
    analyze_shape, classify_regime, default_lambda_grid, mode_trajectory, Trajectory,
    DEFAULT_GRID_POINTS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub lambda_tol: f64,
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda_tol: 1e-11,
            residual_tol: 1e-12,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo_sign: i8,
    pub f_hi_sign: i8,
}

impl RootBracket {
    /// Evaluates `f` at both ends and checks for a sign change.
    pub fn new(lo: f64, hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid(format!(
                "bracket needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        let (a, b) = (sign(f(lo)?), sign(f(hi)?));
        // a root on the boundary still counts as bracketed
        if a != 0 && a == b {
            return Err(Error::NoSignChange { lo, hi });
        }
        Ok(Self {
            lo,
            hi,
            f_lo_sign: a,
            f_hi_sign: b,
        })
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bisection {
    pub root: f64,
    pub residual: f64,
    #[allow(dead_code)]
    pub lo: f64,
    pub hi: f64,
}

/// Bisection that keeps going past `lambda_tol` until the residual is below
/// `residual_tol` or the bracket can no longer shrink in `f64`.
pub(crate) fn bisect(
    mut f: impl FnMut(f64) -> Result<f64>,
    bracket: RootBracket,
    cfg: &SolverConfig,
) -> Result<Bisection> {
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Bisection {
            root: lo,
            residual: 0.0,
            lo,
            hi: lo,
        });
    }
    if f_hi == 0.0 {
        return Ok(Bisection {
            root: hi,
            residual: 0.0,
            lo: hi,
            hi,
        });
    }
    let lo_sign = sign(f_lo);
    for _ in 0..cfg.max_iter {
        let best = if f_lo.abs() <= f_hi.abs() {
            (lo, f_lo)
        } else {
            (hi, f_hi)
        };
        let mid = 0.5 * (lo + hi);
        let narrow = hi - lo <= cfg.lambda_tol;
        if (narrow && best.1.abs() <= cfg.residual_tol) || mid <= lo || mid >= hi {
            return Ok(Bisection {
                root: best.0,
                residual: best.1,
                lo,
                hi,
            });
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Bisection {
                root: mid,
                residual: 0.0,
                lo: mid,
                hi: mid,
            });
        }
        if sign(fm) == lo_sign {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    if hi - lo <= cfg.lambda_tol {
        let best = if f_lo.abs() <= f_hi.abs() {
            (lo, f_lo)
        } else {
            (hi, f_hi)
        };
        return Ok(Bisection {
            root: best.0,
            residual: best.1,
            lo,
            hi,
        });
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalR {
    pub k: u32,
    pub r_k: f64,
    /// `h_k(k; r_k) - 1`.
    pub residual: f64,
    /// Set for `k = 1`, where the root `λ = 1` lies on the boundary of `(0, 1)`.
    pub boundary: bool,
}

fn h_at(k: u32, lambda: f64, n: usize) -> Result<f64> {
    Ok(ScaledPmfTable::new(OrderKParams::new(k, lambda)?, n)?.value(n))
}

/// Positive root of `h_k(k; λ) = 1`.
pub fn solve_r_k(k: u32) -> Result<CriticalR> {
    solve_r_k_with(k, &SolverConfig::default())
}

pub fn solve_r_k_with(k: u32, cfg: &SolverConfig) -> Result<CriticalR> {
    if k == 0 {
        return Err(Error::invalid("order k must be at least 1"));
    }
    if k == 1 {
        return Ok(CriticalR {
            k,
            r_k: 1.0,
            residual: 0.0,
            boundary: true,
        });
    }
    let g = |lambda: f64| Ok(h_at(k, lambda, k as usize)? - 1.0);
    let (g0, g1) = (g(0.0)?, g(1.0)?);
    if g0 != -1.0 || g1 <= 0.0 {
        return Err(Error::BracketViolation(format!(
            "h_k(k; λ) - 1 should be -1 at 0 and positive at 1; got {g0} and {g1} (k = {k})"
        )));
    }
    let bracket = RootBracket {
        lo: 0.0,
        hi: 1.0,
        f_lo_sign: -1,
        f_hi_sign: 1,
    };
    let b = bisect(g, bracket, cfg)?;
    Ok(CriticalR {
        k,
        r_k: b.root,
        residual: b.residual,
        boundary: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstDoubleMode {
    pub k: u32,
    pub lambda_hat: f64,
    pub m_hat: usize,
    pub r_k: f64,
    /// `ln max_{n>=1} h_k(n; λ̂)`.
    pub log_residual: f64,
}

/// `ln max_{n>=1} h_k(n; λ)` and its smallest argmax.
///
/// When the maximum reaches 1 it is a global maximum and lies below
/// `floor(κλ)`, so scanning the mode window gives the sign exactly.
fn max_nonzero(k: u32, lambda: f64) -> Result<(f64, usize)> {
    let params = OrderKParams::new(k, lambda)?;
    let end = mode_window_end(&params);
    let table = ScaledPmfTable::new(params, end)?;
    let best = table.argmax_in(1..=end);
    Ok((table.ln_value(best), best))
}

/// Smallest `λ` at which a nonzero index ties with `n = 0` for the maximum.
pub fn first_double_mode(k: u32) -> Result<FirstDoubleMode> {
    first_double_mode_with(k, &SolverConfig::default())
}

pub fn first_double_mode_with(k: u32, cfg: &SolverConfig) -> Result<FirstDoubleMode> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "first double mode needs k >= 2, got {k}"
        )));
    }
    let r = solve_r_k_with(k, cfg)?;
    let lower = 2.0 / (k as f64 + 1.0);
    let f = |lambda: f64| Ok(max_nonzero(k, lambda)?.0);
    let (f_lo, f_hi) = (f(lower)?, f(r.r_k)?);
    if f_lo > 0.0 {
        return Err(Error::BracketViolation(format!(
            "k = {k}: max_(n>=1) h exceeds 1 at λ = 2/(k+1) = {lower}"
        )));
    }
    if f_hi < -cfg.residual_tol {
        return Err(Error::BracketViolation(format!(
            "k = {k}: max_(n>=1) h below 1 at λ = r_k = {}",
            r.r_k
        )));
    }
    let bracket = RootBracket {
        lo: lower,
        hi: r.r_k,
        f_lo_sign: sign(f_lo),
        f_hi_sign: 1,
    };
    let b = bisect(f, bracket, cfg)?;
    // the upper end has max >= 1, i.e. it is already past the tie with 0
    let (_, m_hat) = max_nonzero(k, b.hi)?;
    Ok(FirstDoubleMode {
        k,
        lambda_hat: b.root,
        m_hat,
        r_k: r.r_k,
        log_residual: b.residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieKind {
    /// Both indices are global maxima.
    Modal,
    /// The heights agree but something else is higher.
    NonModal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleModeEvent {
    pub k: u32,
    pub lambda_star: f64,
    pub m1: usize,
    pub m2: usize,
    /// `h_k(m1; λ*)`.
    pub heights_equal_to: f64,
    /// `(h(m1) - h(m2)) / max` at `λ*`.
    pub rel_residual: f64,
    pub kind: TieKind,
}

fn tie_gap(k: u32, lambda: f64, m1: usize, m2: usize) -> Result<f64> {
    let params = OrderKParams::new(k, lambda)?;
    let table = ScaledPmfTable::new(params, m2)?;
    Ok(table.rel_gap(m1, m2))
}

/// Solves `h_k(m1; λ) = h_k(m2; λ)` on `[lo, hi]` and classifies the tie.
pub fn double_mode_between(
    k: u32,
    m1: usize,
    m2: usize,
    lo: f64,
    hi: f64,
) -> Result<DoubleModeEvent> {
    double_mode_between_with(k, m1, m2, lo, hi, &SolverConfig::default())
}

pub fn double_mode_between_with(
    k: u32,
    m1: usize,
    m2: usize,
    lo: f64,
    hi: f64,
    cfg: &SolverConfig,
) -> Result<DoubleModeEvent> {
    if m1 >= m2 {
        return Err(Error::invalid(format!("need m1 < m2, got {m1} and {m2}")));
    }
    if !(lo > 0.0) {
        return Err(Error::invalid("bracket must lie in λ > 0"));
    }
    let f = |lambda: f64| tie_gap(k, lambda, m1, m2);
    let bracket = RootBracket::new(lo, hi, f)?;
    let b = bisect(f, bracket, cfg)?;
    let params = OrderKParams::new(k, b.root)?;
    let modes = mode_set(&params, DEFAULT_TIE_TOLERANCE)?;
    let kind = if modes.modes.contains(&m1) && modes.modes.contains(&m2) {
        TieKind::Modal
    } else {
        TieKind::NonModal
    };
    Ok(DoubleModeEvent {
        k,
        lambda_star: b.root,
        m1,
        m2,
        heights_equal_to: ScaledPmfTable::new(params, m2)?.value(m1),
        rel_residual: b.residual,
        kind,
    })
}

/// Tie between `m` and `m + 1` within `half_width` of `lambda_guess`.
pub fn consecutive_double_mode_near(
    k: u32,
    m: usize,
    lambda_guess: f64,
    half_width: f64,
) -> Result<DoubleModeEvent> {
    double_mode_between(
        k,
        m,
        m + 1,
        lambda_guess - half_width,
        lambda_guess + half_width,
    )
}

/// Mode-jump boundaries in `λ ∈ (0, 2]`, each solved as a double mode.
pub fn jump_boundaries(k: u32) -> Result<Vec<DoubleModeEvent>> {
    let regime = classify_regime(k)?;
    let trajectory = mode_trajectory(k, &default_lambda_grid(k, DEFAULT_GRID_POINTS))?;
    let events = jump_events(k, &trajectory)?;
    if events.len() != regime.expected_mode_jumps() {
        return Err(Error::StructuralAnomaly(format!(
            "k = {k} ({}): expected {} mode jumps, found {} at {:?}",
            regime.label(),
            regime.expected_mode_jumps(),
            events.len(),
            events
                .iter()
                .map(|e| (e.lambda_star, e.m1, e.m2))
                .collect::<Vec<_>>()
        )));
    }
    Ok(events)
}

/// Solves every jump of a trajectory to full precision.
pub fn jump_events(k: u32, trajectory: &Trajectory) -> Result<Vec<DoubleModeEvent>> {
    trajectory
        .jumps
        .iter()
        .map(|j| double_mode_between(k, j.mode_before, j.mode_after, j.lambda_lo, j.lambda_hi))
        .collect()
}

/// Which two candidate heights [`peak_height_tie`] equates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PeakTie {
    /// First mountain peak against `h[k]`.
    LeftPeakVsK,
    /// Second mountain peak against the first.
    RightPeakVsLeft,
}

fn peak_gap(k: u32, lambda: f64, tie: PeakTie) -> Result<Option<(f64, usize, usize)>> {
    let params = OrderKParams::new(k, lambda)?;
    let table = ScaledPmfTable::new(params, mode_window_end(&params))?;
    let shape = analyze_shape(&table)?;
    let peaks = &shape.mountain.peaks;
    let pair = match tie {
        PeakTie::LeftPeakVsK => peaks.first().map(|p| (k as usize, p.location)),
        PeakTie::RightPeakVsLeft if peaks.len() >= 2 => {
            Some((peaks[0].location, peaks[peaks.len() - 1].location))
        }
        PeakTie::RightPeakVsLeft => None,
    };
    Ok(pair.map(|(a, b)| (table.rel_gap(b, a), a, b)))
}

/// First `λ` in `[lo, hi]` where two candidate peak heights cross.
///
/// Peak locations move with `λ`, so the crossing is located by scanning
/// `samples` points and then bisecting the sign of the height difference.
pub fn peak_height_tie(
    k: u32,
    tie: PeakTie,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<DoubleModeEvent> {
    let cfg = SolverConfig::default();
    let samples = samples.max(2);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..samples {
        let lambda = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let Some((gap, _, _)) = peak_gap(k, lambda, tie)? else {
            prev = None;
            continue;
        };
        if let Some((plambda, pgap)) = prev {
            if pgap < 0.0 && gap >= 0.0 {
                let f = |l: f64| {
                    peak_gap(k, l, tie)?.map(|g| g.0).ok_or_else(|| {
                        Error::StructuralAnomaly(format!("k = {k}: peak vanished at λ = {l}"))
                    })
                };
                let bracket = RootBracket {
                    lo: plambda,
                    hi: lambda,
                    f_lo_sign: -1,
                    f_hi_sign: sign(gap),
                };
                let b = bisect(f, bracket, &cfg)?;
                let (_, a, bidx) = peak_gap(k, b.root, tie)?.expect("peak present at root");
                let params = OrderKParams::new(k, b.root)?;
                let modes = mode_set(&params, DEFAULT_TIE_TOLERANCE)?;
                let table = ScaledPmfTable::new(params, bidx)?;
                let kind = if modes.modes.contains(&a) && modes.modes.contains(&bidx) {
                    TieKind::Modal
                } else {
                    TieKind::NonModal
                };
                return Ok(DoubleModeEvent {
                    k,
                    lambda_star: b.root,
                    m1: a,
                    m2: bidx,
                    heights_equal_to: table.value(a),
                    rel_residual: b.residual,
                    kind,
                });
            }
        }
        prev = Some((lambda, gap));
    }
    Err(Error::NoSignChange { lo, hi })
}
