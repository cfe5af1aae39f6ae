//! Floating-point evaluation of the scaled pmf and the quantities derived
//! from it: pmf, median and mode set.
//!
//! The scaled pmf `h[n] = e^{kλ} f_k(n; λ)` satisfies the compound Poisson
//! recurrence
//!
//! ```text
//! h[0] = 1,    h[n] = (λ / n) · Σ_{j=1}^{min(n,k)} j · h[n − j]
//! ```
//!
//! which costs `O(n k)` and involves only non-negative terms. Values grow like
//! `e^{kλ}`, so tables switch to log space once `kλ` exceeds
//! [`LOG_SPACE_THRESHOLD`].

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::OrderKParams;

/// Relative tolerance used by [`mode_set`] when reporting near-ties.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

/// Above this value of `kλ` tables are accumulated in log space.
pub const LOG_SPACE_THRESHOLD: f64 = 600.0;

/// Absolute guard band on the `P(Y <= ν) >= 1/2` comparison.
pub const MEDIAN_GUARD: f64 = 1e-12;

/// Prefix `h[0..=n_max]` of the scaled pmf.
#[derive(Debug, Clone, Serialize)]
pub struct ScaledPmfTable {
    params: OrderKParams,
    values: Vec<f64>,
    log_space: bool,
    #[serde(skip)]
    weights: Vec<f64>,
}

impl ScaledPmfTable {
    /// Builds a table, choosing log space when `kλ > LOG_SPACE_THRESHOLD`.
    pub fn new(params: OrderKParams, n_max: usize) -> Result<Self> {
        if params.k_lambda() > LOG_SPACE_THRESHOLD {
            Ok(Self::log_space(params, n_max))
        } else {
            Self::linear(params, n_max)
        }
    }

    /// Builds a linear-space table; fails with [`Error::Overflow`] if a value
    /// is not representable.
    pub fn linear(params: OrderKParams, n_max: usize) -> Result<Self> {
        let mut table = Self::empty(params, false);
        table.extend_to(n_max)?;
        Ok(table)
    }

    pub fn log_space(params: OrderKParams, n_max: usize) -> Self {
        let mut table = Self::empty(params, true);
        table
            .extend_to(n_max)
            .expect("log-space accumulation cannot overflow");
        table
    }

    fn empty(params: OrderKParams, log_space: bool) -> Self {
        let k = params.k() as usize;
        // weights[i] = k - i, so a window h[n-m..n] pairs with weights[k-m..].
        let weights = (0..k).map(|i| (k - i) as f64).collect();
        let first = if log_space { 0.0 } else { 1.0 };
        Self {
            params,
            values: vec![first],
            log_space,
            weights,
        }
    }

    /// Appends values until the table covers `n_max`.
    pub fn extend_to(&mut self, n_max: usize) -> Result<()> {
        let k = self.params.k() as usize;
        let lambda = self.params.lambda();
        self.values
            .reserve((n_max + 1).saturating_sub(self.values.len()));
        while self.values.len() <= n_max {
            let n = self.values.len();
            let m = n.min(k);
            let window = &self.values[n - m..n];
            let weights = &self.weights[k - m..];
            let next = if lambda == 0.0 {
                if self.log_space {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            } else if self.log_space {
                (lambda / n as f64).ln() + log_dot(weights, window)
            } else {
                lambda / n as f64 * dot(weights, window)
            };
            if !self.log_space && !next.is_finite() {
                return Err(Error::Overflow {
                    k: self.params.k(),
                    lambda,
                    n,
                });
            }
            self.values.push(next);
        }
        Ok(())
    }

    pub fn params(&self) -> &OrderKParams {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_log_space(&self) -> bool {
        self.log_space
    }

    /// Stored values: `h[n]`, or `ln h[n]` for log-space tables.
    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    /// `h[n]` in linear space (may be `inf` for log-space tables).
    pub fn value(&self, n: usize) -> f64 {
        if self.log_space {
            self.values[n].exp()
        } else {
            self.values[n]
        }
    }

    pub fn ln_value(&self, n: usize) -> f64 {
        if self.log_space {
            self.values[n]
        } else {
            self.values[n].ln()
        }
    }

    /// `f_k(n; λ) = e^{-kλ} h[n]`.
    pub fn pmf(&self, n: usize) -> f64 {
        if self.log_space {
            (self.values[n] - self.params.k_lambda()).exp()
        } else {
            self.values[n] * (-self.params.k_lambda()).exp()
        }
    }

    pub fn compare(&self, a: usize, b: usize) -> Ordering {
        self.values[a].total_cmp(&self.values[b])
    }

    /// Signed relative gap `(h[a] - h[b]) / max(h[a], h[b])`.
    pub fn rel_gap(&self, a: usize, b: usize) -> f64 {
        let (x, y) = (self.values[a], self.values[b]);
        if x == y {
            return 0.0;
        }
        if self.log_space {
            if x > y {
                -(y - x).exp_m1()
            } else {
                (x - y).exp_m1()
            }
        } else {
            (x - y) / x.max(y)
        }
    }

    /// Smallest index attaining the maximum over `range`.
    pub fn argmax_in(&self, range: std::ops::RangeInclusive<usize>) -> usize {
        let mut best = *range.start();
        for n in range {
            if self.values[n] > self.values[best] {
                best = n;
            }
        }
        best
    }

    /// `e^{-kλ} Σ_{n <= n_max} h[n]`.
    pub fn partial_mass(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for n in 0..self.values.len() {
            acc.add(self.pmf(n));
        }
        acc.total()
    }
}

fn dot(weights: &[f64], window: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let w = weights.chunks_exact(4);
    let h = window.chunks_exact(4);
    let (wr, hr) = (w.remainder(), h.remainder());
    for (wc, hc) in w.zip(h) {
        acc[0] += wc[0] * hc[0];
        acc[1] += wc[1] * hc[1];
        acc[2] += wc[2] * hc[2];
        acc[3] += wc[3] * hc[3];
    }
    let mut tail = 0.0;
    for (a, b) in wr.iter().zip(hr) {
        tail += a * b;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn log_dot(weights: &[f64], log_window: &[f64]) -> f64 {
    let peak = weights
        .iter()
        .zip(log_window)
        .map(|(w, l)| w.ln() + l)
        .fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    let sum: f64 = weights
        .iter()
        .zip(log_window)
        .map(|(w, l)| (w.ln() + l - peak).exp())
        .sum();
    peak + sum.ln()
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn scaled_pmf_table(params: OrderKParams, n_max: usize) -> Result<ScaledPmfTable> {
    ScaledPmfTable::new(params, n_max)
}

pub fn pmf(params: &OrderKParams, n: usize) -> Result<f64> {
    Ok(ScaledPmfTable::new(*params, n)?.pmf(n))
}

/// Smallest `ν` with `P(Y <= ν) >= 1/2`.
pub fn median(params: &OrderKParams) -> Result<usize> {
    let mut table = ScaledPmfTable::new(*params, params.floor_mean() + params.k() as usize)?;
    let mut acc = NeumaierSum::default();
    let mut n = 0;
    loop {
        if n > table.n_max() {
            table.extend_to(2 * table.n_max() + 16)?;
        }
        acc.add(table.pmf(n));
        if acc.total() >= 0.5 - MEDIAN_GUARD {
            return Ok(n);
        }
        n += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeResult {
    /// Sorted indices whose scaled pmf lies within `tie_tolerance` of the maximum.
    pub modes: Vec<usize>,
    /// Scaled pmf at the principal mode (`inf` if it overflows linear space).
    pub peak_height: f64,
    pub ln_peak_height: f64,
    pub tie_tolerance: f64,
}

impl ModeResult {
    /// Smallest mode.
    pub fn principal(&self) -> usize {
        self.modes[0]
    }
}

/// Last index examined by [`mode_set`].
///
/// The mode never exceeds `floor(κλ)`; the window extends `k` cells past
/// `max(floor(κλ), k)` so that the edge lies beyond the increasing run.
pub fn mode_window_end(params: &OrderKParams) -> usize {
    let k = params.k() as usize;
    params.floor_mean().max(k) + k
}

pub fn mode_set(params: &OrderKParams, tie_tolerance: f64) -> Result<ModeResult> {
    if !(0.0..1.0).contains(&tie_tolerance) {
        return Err(Error::invalid(format!(
            "tie tolerance must lie in [0, 1), got {tie_tolerance}"
        )));
    }
    if params.lambda() == 0.0 {
        return Ok(ModeResult {
            modes: vec![0],
            peak_height: 1.0,
            ln_peak_height: 0.0,
            tie_tolerance,
        });
    }
    let end = mode_window_end(params);
    let table = ScaledPmfTable::new(*params, end)?;
    mode_set_in_table(&table, tie_tolerance)
}

/// Mode set over a table that already covers [`mode_window_end`].
pub fn mode_set_in_table(table: &ScaledPmfTable, tie_tolerance: f64) -> Result<ModeResult> {
    let params = table.params();
    let end = mode_window_end(params);
    if table.n_max() < end {
        return Err(Error::WindowTooSmall {
            required: end,
            actual: table.n_max(),
        });
    }
    let best = table.argmax_in(0..=end);
    if table.compare(end, end - 1) != Ordering::Less || best == end {
        return Err(Error::TailDomination {
            k: params.k(),
            lambda: params.lambda(),
            edge: end,
        });
    }
    let modes = (0..=end)
        .filter(|&n| n == best || table.rel_gap(best, n) <= tie_tolerance)
        .collect();
    Ok(ModeResult {
        modes,
        peak_height: table.value(best),
        ln_peak_height: table.ln_value(best),
        tie_tolerance,
    })
}

/// Smallest index attaining the global maximum, without tie tolerance.
pub fn principal_mode(params: &OrderKParams) -> Result<usize> {
    Ok(mode_set(params, 0.0)?.principal())
}
