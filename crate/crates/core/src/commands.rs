//! Command implementations behind the `poisson-k` binary.
//!
//! Each command validates its inputs, runs the library call and returns an
//! [`OutputRecord`] whose `params` echo the inputs.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    conjecture_scan, median_zero_criterion, mode_zero_sufficient, ClaimId, Sampling, ScanConfig,
    ScanSummary,
};
use crate::critical::{first_double_mode, jump_boundaries, solve_r_k};
use crate::distribution::{median, mode_set_in_table, mode_window_end, ScaledPmfTable};
use crate::error::{Error, Result};
use crate::figures::figure;
use crate::output::{float, int_list, ColumnKind, OutputRecord, Table};
use crate::params::OrderKParams;
use crate::structure::{analyze_shape, classify_regime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PmfRequest {
    pub k: u32,
    pub lambda: f64,
    pub n_max: usize,
    /// Emit `h = e^{kλ} f` instead of `f`.
    pub scaled: bool,
    /// Emit natural logarithms.
    pub log_space: bool,
}

pub fn cmd_pmf(req: &PmfRequest) -> Result<OutputRecord> {
    let params = OrderKParams::new(req.k, req.lambda)?;
    let table = ScaledPmfTable::new(params, req.n_max)?;
    let base = if req.scaled { "h" } else { "f" };
    let name = if req.log_space {
        format!("ln_{base}")
    } else {
        base.to_string()
    };
    let mut t = Table::new(&[
        ("k", ColumnKind::Integer),
        ("lambda", ColumnKind::Float),
        ("n", ColumnKind::Integer),
        (&name, ColumnKind::Float),
    ]);
    let shift = if req.scaled { 0.0 } else { params.k_lambda() };
    for n in 0..=req.n_max {
        let v = match (req.log_space, req.scaled) {
            (true, _) => table.ln_value(n) - shift,
            (false, true) => table.value(n),
            (false, false) => table.pmf(n),
        };
        t.push(vec![json!(req.k), float(req.lambda), json!(n), float(v)]);
    }
    Ok(OutputRecord::new(
        "pmf",
        serde_json::to_value(req).expect("plain struct"),
        t,
    ))
}

/// `tie_tolerance` is the relative gap below the peak within which an index
/// still counts as a mode.
pub fn cmd_summary(k: u32, lambda: f64, tie_tolerance: f64) -> Result<OutputRecord> {
    let params = OrderKParams::new(k, lambda)?;
    let derived = params.derived();
    let table = ScaledPmfTable::new(params, mode_window_end(&params))?;
    let modes = mode_set_in_table(&table, tie_tolerance)?;
    let shape = analyze_shape(&table)?;
    let regime = if k >= 2 {
        classify_regime(k)?.label()
    } else {
        "k=1"
    };
    let mut t = Table::new(&[
        ("k", ColumnKind::Integer),
        ("lambda", ColumnKind::Float),
        ("kappa", ColumnKind::Integer),
        ("mean", ColumnKind::Float),
        ("variance", ColumnKind::Float),
        ("median", ColumnKind::Integer),
        ("modes", ColumnKind::IntegerList),
        ("peak_height", ColumnKind::Float),
        ("peaks", ColumnKind::IntegerList),
        ("mountain_decreasing", ColumnKind::Bool),
        ("increasing_run_ok", ColumnKind::Bool),
        ("median_zero_criterion", ColumnKind::Bool),
        ("mode_zero_sufficient", ColumnKind::Bool),
        ("regime", ColumnKind::Text),
        ("anomalies", ColumnKind::Text),
    ]);
    t.push(vec![
        json!(k),
        float(lambda),
        json!(derived.kappa),
        float(derived.mean),
        float(derived.variance),
        json!(median(&params)?),
        int_list(modes.modes.iter().map(|&m| m as i64)),
        float(modes.peak_height),
        int_list(shape.mountain.peaks.iter().map(|p| p.location as i64)),
        json!(shape.mountain.monotone_decreasing),
        json!(shape.increasing_run_ok),
        json!(median_zero_criterion(k, lambda)),
        json!(mode_zero_sufficient(k, lambda)),
        json!(regime),
        json!(shape.anomalies.join("; ")),
    ]);
    Ok(OutputRecord::new(
        "summary",
        json!({ "k": k, "lambda": lambda, "tie_tolerance": tie_tolerance }),
        t,
    ))
}

/// `r_k`, the first double mode and every mode jump in `λ ∈ (0, 2]`.
pub fn cmd_critical(k: u32) -> Result<OutputRecord> {
    if k < 2 {
        return Err(Error::invalid("critical points need k >= 2"));
    }
    let r = solve_r_k(k)?;
    let fdm = first_double_mode(k)?;
    let events = jump_boundaries(k)?;
    let mut t = Table::new(&[
        ("k", ColumnKind::Integer),
        ("event", ColumnKind::Text),
        ("lambda", ColumnKind::Float),
        ("modes", ColumnKind::IntegerList),
        ("residual", ColumnKind::Float),
    ]);
    t.push(vec![
        json!(k),
        json!("r_k"),
        float(r.r_k),
        int_list(Vec::<i64>::new()),
        float(r.residual),
    ]);
    t.push(vec![
        json!(k),
        json!("first_double_mode"),
        float(fdm.lambda_hat),
        int_list([0, fdm.m_hat as i64]),
        float(fdm.log_residual),
    ]);
    for e in &events {
        t.push(vec![
            json!(k),
            json!("mode_jump"),
            float(e.lambda_star),
            int_list([e.m1 as i64, e.m2 as i64]),
            float(e.rel_residual),
        ]);
    }
    Ok(OutputRecord::new("critical", json!({ "k": k }), t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRequest {
    pub k_min: u32,
    pub k_max: u32,
    pub lambda_range: Option<(f64, f64)>,
    /// Empty means every claim.
    pub claims: Vec<String>,
    pub grid: usize,
    pub seed: Option<u64>,
    pub asymptotic_k_max: u32,
    pub max_evaluations: u64,
    /// Emit every report instead of per-claim tallies.
    pub reports: bool,
}

impl Default for ScanRequest {
    fn default() -> Self {
        let cfg = ScanConfig::default();
        Self {
            k_min: 2,
            k_max: 20,
            lambda_range: None,
            claims: Vec::new(),
            grid: cfg.lambda_points,
            seed: None,
            asymptotic_k_max: cfg.asymptotic_k_max,
            max_evaluations: cfg.max_evaluations,
            reports: false,
        }
    }
}

impl ScanRequest {
    pub fn config(&self) -> Result<ScanConfig> {
        let claims: BTreeSet<ClaimId> = if self.claims.is_empty() {
            ClaimId::ALL.into_iter().collect()
        } else {
            self.claims
                .iter()
                .map(|c| {
                    ClaimId::parse(c).ok_or_else(|| {
                        let known: Vec<&str> = ClaimId::ALL.iter().map(|c| c.name()).collect();
                        Error::invalid(format!("unknown claim {c:?}; known: {}", known.join(", ")))
                    })
                })
                .collect::<Result<_>>()?
        };
        if let Some((lo, hi)) = self.lambda_range {
            if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::invalid(format!("bad lambda range [{lo}, {hi}]")));
            }
        }
        Ok(ScanConfig {
            claims,
            lambda_points: self.grid,
            sampling: self
                .seed
                .map_or(Sampling::Stratified, |seed| Sampling::Uniform { seed }),
            lambda_range: self.lambda_range,
            asymptotic_k_max: self.asymptotic_k_max,
            max_evaluations: self.max_evaluations,
            ..ScanConfig::default()
        })
    }

    fn params(&self) -> Value {
        json!({
            "k_min": self.k_min,
            "k_max": self.k_max,
            "lambda_range": self.lambda_range,
            "claims": self.claims,
            "grid": self.grid,
            "seed": self.seed,
            "asymptotic_k_max": self.asymptotic_k_max,
            "max_evaluations": self.max_evaluations,
        })
    }
}

/// Runs the scan; the caller maps [`ScanSummary::exit_code`] to the process.
pub fn cmd_scan(req: &ScanRequest) -> Result<(OutputRecord, ScanSummary)> {
    if req.k_min < 1 || req.k_min > req.k_max {
        return Err(Error::invalid(format!(
            "bad k range {}..={}",
            req.k_min, req.k_max
        )));
    }
    let cfg = req.config()?;
    let ks: Vec<u32> = (req.k_min..=req.k_max).collect();
    let summary = conjecture_scan(&ks, &cfg)?;
    let payload = if req.reports {
        reports_table(&summary)
    } else {
        tallies_table(&summary)
    };
    Ok((OutputRecord::new("scan", req.params(), payload), summary))
}

fn reports_table(summary: &ScanSummary) -> Table {
    let mut t = Table::new(&[
        ("claim", ColumnKind::Text),
        ("kind", ColumnKind::Text),
        ("k", ColumnKind::Integer),
        ("lambda", ColumnKind::Float),
        ("n", ColumnKind::Integer),
        ("holds", ColumnKind::Bool),
        ("slack", ColumnKind::Float),
        ("approximate", ColumnKind::Bool),
        ("witness", ColumnKind::Text),
    ]);
    for r in &summary.reports {
        t.push(vec![
            json!(r.claim.name()),
            json!(kind_name(r.kind)),
            json!(r.k),
            r.lambda.map(float).unwrap_or(Value::Null),
            r.n.map(Value::from).unwrap_or(Value::Null),
            json!(r.holds),
            float(r.slack),
            json!(r.approximate),
            json!(r
                .witness
                .as_ref()
                .map(|w| w.to_string())
                .unwrap_or_default()),
        ]);
    }
    t
}

fn tallies_table(summary: &ScanSummary) -> Table {
    let mut t = Table::new(&[
        ("claim", ColumnKind::Text),
        ("kind", ColumnKind::Text),
        ("evaluated", ColumnKind::Integer),
        ("violations", ColumnKind::Integer),
        ("approximate", ColumnKind::Integer),
        ("sharp", ColumnKind::Integer),
    ]);
    for c in &summary.tallies {
        t.push(vec![
            json!(c.claim.name()),
            json!(kind_name(c.kind)),
            json!(c.evaluated),
            json!(c.violations),
            json!(c.approximate),
            json!(c.sharp),
        ]);
    }
    t
}

fn kind_name(kind: crate::bounds::ClaimKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| format!("{kind:?}").to_lowercase())
}

pub fn cmd_figure(id: u8) -> Result<crate::figures::Figure> {
    figure(id)
}

/// Process exit status for an error: 3 for resource limits, 1 otherwise.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ResourceLimit(_) => 3,
        _ => 1,
    }
}
