//! Poisson distribution of order `k`.
//!
//! The distribution is the compound Poisson law with probability generating
//! function `exp(λ(t + t² + … + t^k − k))`; at `k = 1` it is the standard
//! Poisson distribution. This crate evaluates the pmf through its scaled form
//! `h_k(n; λ) = e^{kλ} f_k(n; λ)`, analyses the shape of the histogram
//! (increasing run, mountain range, peaks), solves for the critical rate
//! parameters where the mode jumps, and checks closed-form median/mode bounds
//! and asymptotic formulas over parameter grids.
//!
//! ```
//! use poisson_k::critical::consecutive_double_mode_near;
//! use poisson_k::{mode_set, OrderKParams, DEFAULT_TIE_TOLERANCE};
//!
//! // flat top of the k = 10 histogram near λ = 0.5119
//! let tie = consecutive_double_mode_near(10, 24, 0.5119, 0.01).unwrap();
//! let params = OrderKParams::new(10, tie.lambda_star).unwrap();
//! let modes = mode_set(&params, DEFAULT_TIE_TOLERANCE).unwrap();
//! assert_eq!(modes.modes, vec![24, 25]);
//! ```

// `!(x > y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod commands;
pub mod critical;
pub mod distribution;
pub mod error;
pub mod exact;
pub mod figures;
pub mod output;
pub mod params;
pub mod structure;

pub use bounds::{
    check_median_bounds, check_mode_bounds, conjecture_scan, median_asymptotic_eval,
    median_zero_criterion, median_zero_implies_mode_zero_check, mode_asymptotic_eval,
    mode_zero_sufficient, scaled_shape_formulas, BoundReport, ClaimId, ClaimKind, MedianAsymptotic,
    MedianBounds, ModeAsymptotic, ModeBounds, ScanConfig, ScanSummary,
};
pub use critical::{
    double_mode_between, first_double_mode, jump_boundaries, solve_r_k, CriticalR, DoubleModeEvent,
    FirstDoubleMode, RootBracket, SolverConfig, TieKind,
};
pub use distribution::{
    median, mode_set, pmf, scaled_pmf_table, ModeResult, ScaledPmfTable, DEFAULT_TIE_TOLERANCE,
};
pub use error::{Error, Result};
pub use exact::{exact_pmf_polynomial, ExactPmfPolynomial};
pub use params::{DerivedParams, OrderKParams};
pub use structure::{
    analyze_shape, classify_regime, excluded_values, mode_trajectory, ModeJumpEvent, MountainRange,
    Peak, PeakKind, PmfShape, RegimeClass, Trajectory,
};
