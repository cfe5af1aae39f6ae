//! Shape of the scaled pmf and the evolution of the mode with `λ`.
//!
//! For `k >= 2` the histogram splits into the point `n = 0` (height 1), the
//! strictly increasing run `1..=k`, and the "mountain range" `n > k`, which
//! carries at most two peaks. The mode is decided by four candidates: `0`,
//! `k`, the left peak and the right peak. When control passes from one
//! candidate to another the mode jumps by more than one unit and the
//! integers in between can never be modes.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{mode_window_end, principal_mode, ScaledPmfTable};
use crate::error::{Error, Result};
use crate::params::OrderKParams;

/// Heights within this relative distance form a flat top.
pub const FLAT_TOLERANCE: f64 = 1e-12;

/// Width in `λ` below which a mode jump is considered located.
pub const JUMP_LAMBDA_TOLERANCE: f64 = 1e-9;

/// Cap on principal-mode evaluations spent refining one trajectory.
pub const REFINEMENT_BUDGET: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakKind {
    Single,
    Left,
    Right,
    /// A third or later peak; its presence is itself an anomaly.
    Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Peak {
    pub location: usize,
    pub height: f64,
    pub kind: PeakKind,
    /// Peak sits at `k + 1`, directly after the increasing run.
    pub adjacent_to_k: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MountainRange {
    pub start: usize,
    pub peaks: Vec<Peak>,
    pub monotone_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfShape {
    pub k: u32,
    pub lambda: f64,
    pub zero_height: f64,
    pub increasing_run_ok: bool,
    pub local_max_at_k: bool,
    pub mountain: MountainRange,
    /// Observations that contradict the expected structure.
    pub anomalies: Vec<String>,
}

impl PmfShape {
    pub fn left_peak(&self) -> Option<&Peak> {
        match self.mountain.peaks.as_slice() {
            [] => None,
            [only] => Some(only),
            [first, ..] => Some(first),
        }
    }

    pub fn right_peak(&self) -> Option<&Peak> {
        match self.mountain.peaks.as_slice() {
            [_, .., last] => Some(last),
            _ => None,
        }
    }
}

pub fn analyze_shape(table: &ScaledPmfTable) -> Result<PmfShape> {
    let params = *table.params();
    let k = params.k() as usize;
    let required = mode_window_end(&params);
    if table.n_max() < required {
        return Err(Error::WindowTooSmall {
            required,
            actual: table.n_max(),
        });
    }
    let n_max = table.n_max();
    let mut anomalies = Vec::new();

    let increasing_run_ok = params.lambda() == 0.0
        || (2..=k).all(|n| table.compare(n - 1, n) == std::cmp::Ordering::Less);
    if !increasing_run_ok {
        anomalies.push(format!("scaled pmf not strictly increasing on [1, {k}]"));
    }
    let local_max_at_k = table.compare(k, k + 1).is_gt() && table.compare(k, k - 1).is_gt();

    let start = k + 1;
    let mut locations = Vec::new();
    let mut n = start;
    while n < n_max {
        if table.rel_gap(n, n - 1) > FLAT_TOLERANCE {
            let mut end = n;
            while end < n_max && table.rel_gap(end + 1, n).abs() <= FLAT_TOLERANCE {
                end += 1;
            }
            if end < n_max && table.compare(end + 1, end).is_lt() {
                locations.push(n);
            }
            n = end + 1;
        } else {
            n += 1;
        }
    }
    let monotone_decreasing = (start..n_max).all(|n| table.compare(n + 1, n).is_lt());

    if locations.len() > 2 {
        anomalies.push(format!(
            "mountain range has {} peaks at {:?}",
            locations.len(),
            locations
        ));
    }
    let count = locations.len();
    let peaks = locations
        .iter()
        .enumerate()
        .map(|(i, &location)| Peak {
            location,
            height: table.value(location),
            kind: match (count, i) {
                (1, _) => PeakKind::Single,
                (_, 0) => PeakKind::Left,
                (c, i) if i == c - 1 => PeakKind::Right,
                _ => PeakKind::Extra,
            },
            adjacent_to_k: location == k + 1,
        })
        .collect();

    Ok(PmfShape {
        k: params.k(),
        lambda: params.lambda(),
        zero_height: table.value(0),
        increasing_run_ok,
        local_max_at_k,
        mountain: MountainRange {
            start,
            peaks,
            monotone_decreasing,
        },
        anomalies,
    })
}

/// Convenience wrapper building a table of the required length.
pub fn analyze_params(params: &OrderKParams) -> Result<PmfShape> {
    let table = ScaledPmfTable::new(*params, mode_window_end(params))?;
    analyze_shape(&table)
}

/// Ranges of `k` with distinct mode-jump sequences for `λ ∈ (0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeClass {
    /// `0 → k → k+2`.
    K2To3,
    /// `0 → k → m_left → m_right`.
    K4To14,
    /// `0 → m_left → m_right`.
    K15To41,
    /// `0 → m_right`.
    K42Plus,
}

impl RegimeClass {
    pub fn expected_mode_jumps(self) -> usize {
        match self {
            RegimeClass::K2To3 => 2,
            RegimeClass::K4To14 => 3,
            RegimeClass::K15To41 => 2,
            RegimeClass::K42Plus => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RegimeClass::K2To3 => "k in [2,3]",
            RegimeClass::K4To14 => "k in [4,14]",
            RegimeClass::K15To41 => "k in [15,41]",
            RegimeClass::K42Plus => "k >= 42",
        }
    }
}

pub fn classify_regime(k: u32) -> Result<RegimeClass> {
    match k {
        0 | 1 => Err(Error::invalid(format!(
            "regime classification needs k >= 2, got {k}"
        ))),
        2..=3 => Ok(RegimeClass::K2To3),
        4..=14 => Ok(RegimeClass::K4To14),
        15..=41 => Ok(RegimeClass::K15To41),
        _ => Ok(RegimeClass::K42Plus),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeJumpEvent {
    /// Midpoint of the final bracket.
    pub lambda_at_jump: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub mode_before: usize,
    pub mode_after: usize,
    pub skipped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub k: u32,
    /// Principal (smallest) mode at each grid point.
    pub points: Vec<(f64, usize)>,
    pub jumps: Vec<ModeJumpEvent>,
}

/// `points` values from just below `2/(k+1)/2` to 2, where the first is
/// guaranteed to have mode zero.
pub fn default_lambda_grid(k: u32, points: usize) -> Vec<f64> {
    let start = 1.0 / (k as f64 + 1.0);
    let points = points.max(2);
    (0..points)
        .map(|i| start + (2.0 - start) * i as f64 / (points - 1) as f64)
        .collect()
}

pub const DEFAULT_GRID_POINTS: usize = 400;

pub fn mode_trajectory(k: u32, lambda_grid: &[f64]) -> Result<Trajectory> {
    if lambda_grid.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    if lambda_grid.iter().any(|&l| !(l > 0.0 && l.is_finite()))
        || lambda_grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::invalid(
            "lambda grid must be positive and strictly increasing",
        ));
    }
    let modes = lambda_grid
        .par_iter()
        .map(|&lambda| principal_mode(&OrderKParams::new(k, lambda)?))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, usize)> = lambda_grid.iter().copied().zip(modes).collect();

    let mut refiner = Refiner {
        k,
        evaluations: 0,
        jumps: Vec::new(),
    };
    for w in points.windows(2) {
        let ((lo, mlo), (hi, mhi)) = (w[0], w[1]);
        if mhi < mlo {
            return Err(mode_decrease(k, lo, mlo, hi, mhi));
        }
        if mhi - mlo >= 2 {
            refiner.refine(lo, mlo, hi, mhi)?;
        }
    }
    Ok(Trajectory {
        k,
        points,
        jumps: refiner.jumps,
    })
}

fn mode_decrease(k: u32, lo: f64, mlo: usize, hi: f64, mhi: usize) -> Error {
    Error::StructuralAnomaly(format!(
        "k = {k}: mode decreased from {mlo} at lambda = {lo} to {mhi} at lambda = {hi}"
    ))
}

struct Refiner {
    k: u32,
    evaluations: usize,
    jumps: Vec<ModeJumpEvent>,
}

impl Refiner {
    fn refine(&mut self, lo: f64, mlo: usize, hi: f64, mhi: usize) -> Result<()> {
        if hi - lo < JUMP_LAMBDA_TOLERANCE {
            self.jumps.push(ModeJumpEvent {
                lambda_at_jump: 0.5 * (lo + hi),
                lambda_lo: lo,
                lambda_hi: hi,
                mode_before: mlo,
                mode_after: mhi,
                skipped: (mlo + 1..mhi).collect(),
            });
            return Ok(());
        }
        self.evaluations += 1;
        if self.evaluations > REFINEMENT_BUDGET {
            return Err(Error::ResourceLimit(format!(
                "mode-jump refinement for k = {} exceeded {REFINEMENT_BUDGET} evaluations",
                self.k
            )));
        }
        let mid = 0.5 * (lo + hi);
        let mmid = principal_mode(&OrderKParams::new(self.k, mid)?)?;
        if mmid < mlo || mmid > mhi {
            return Err(mode_decrease(self.k, lo, mlo, hi, mhi));
        }
        if mmid - mlo >= 2 {
            self.refine(lo, mlo, mid, mmid)?;
        }
        if mhi - mmid >= 2 {
            self.refine(mid, mmid, hi, mhi)?;
        }
        Ok(())
    }
}

/// Integers that are never modes for `λ ∈ (0, 2]`: `1..k`, `k+1`, and
/// everything skipped by a mode jump.
pub fn excluded_values(k: u32) -> Result<BTreeSet<usize>> {
    classify_regime(k)?;
    let trajectory = mode_trajectory(k, &default_lambda_grid(k, DEFAULT_GRID_POINTS))?;
    Ok(excluded_from(k, &trajectory))
}

pub fn excluded_from(k: u32, trajectory: &Trajectory) -> BTreeSet<usize> {
    let k = k as usize;
    let mut out: BTreeSet<usize> = (1..k).collect();
    out.insert(k + 1);
    for jump in &trajectory.jumps {
        out.extend(jump.skipped.iter().copied());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(k: u32, lambda: f64) -> PmfShape {
        analyze_params(&OrderKParams::new(k, lambda).unwrap()).unwrap()
    }

    #[test]
    fn small_rate_mountain_is_decreasing() {
        let s = shape(3, 0.4);
        assert!(s.mountain.monotone_decreasing);
        assert!(s.mountain.peaks.is_empty());
        assert!(s.local_max_at_k);
        assert!(s.increasing_run_ok);
        assert_eq!(s.zero_height, 1.0);
        assert!(s.anomalies.is_empty());
    }

    #[test]
    fn standard_poisson_single_peak() {
        let s = shape(1, 4.2);
        assert_eq!(s.mountain.peaks.len(), 1);
        assert_eq!(s.mountain.peaks[0].location, 4);
        assert_eq!(s.mountain.peaks[0].kind, PeakKind::Single);
    }

    #[test]
    fn flat_top_is_one_peak_at_left_index() {
        // k = 1, λ = 4: h[3] = h[4] exactly in exact arithmetic
        let s = shape(1, 4.0);
        assert_eq!(s.mountain.peaks.len(), 1);
        assert_eq!(s.mountain.peaks[0].location, 3);
    }

    #[test]
    fn regimes() {
        assert!(classify_regime(1).is_err());
        assert_eq!(classify_regime(2).unwrap(), RegimeClass::K2To3);
        assert_eq!(classify_regime(14).unwrap(), RegimeClass::K4To14);
        assert_eq!(classify_regime(15).unwrap(), RegimeClass::K15To41);
        assert_eq!(classify_regime(41).unwrap(), RegimeClass::K15To41);
        assert_eq!(classify_regime(42).unwrap(), RegimeClass::K42Plus);
        assert_eq!(classify_regime(14).unwrap().expected_mode_jumps(), 3);
        assert_eq!(classify_regime(15).unwrap().expected_mode_jumps(), 2);
        assert_eq!(classify_regime(42).unwrap().expected_mode_jumps(), 1);
    }

    #[test]
    fn trajectory_order_three() {
        let t = mode_trajectory(3, &default_lambda_grid(3, 200)).unwrap();
        let pairs: Vec<_> = t
            .jumps
            .iter()
            .map(|j| (j.mode_before, j.mode_after))
            .collect();
        assert_eq!(pairs, vec![(0, 3), (3, 5)]);
        assert_eq!(t.jumps[0].skipped, vec![1, 2]);
        assert_eq!(t.jumps[1].skipped, vec![4]);
    }

    #[test]
    fn excluded_order_two() {
        let ex = excluded_values(2).unwrap();
        assert!(ex.contains(&1) && ex.contains(&3));
        assert!(!ex.contains(&0) && !ex.contains(&2) && !ex.contains(&4));
    }

    #[test]
    fn bad_grids() {
        assert!(mode_trajectory(3, &[]).is_err());
        assert!(mode_trajectory(3, &[0.5, 0.4]).is_err());
        assert!(mode_trajectory(3, &[0.0, 0.4]).is_err());
    }
}
