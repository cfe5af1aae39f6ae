//! Data series behind the standard plots of the distribution.
//!
//! Each figure is one long-form table with a `series` column; it can be
//! split into one CSV per series plus a manifest. Panel rate parameters that
//! sit on a tie (mode jumps, peak crossings, flat tops) are solved for rather
//! than fixed.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::bounds::{MedianBounds, ModeBounds};
use crate::critical::{consecutive_double_mode_near, jump_boundaries, peak_height_tie, PeakTie};
use crate::distribution::{median, principal_mode, ScaledPmfTable};
use crate::error::{Error, Result};
use crate::output::{float, ColumnKind, OutputRecord, Table};
use crate::params::{kappa, OrderKParams};

pub const FIGURE_IDS: std::ops::RangeInclusive<u8> = 1..=10;

/// Step in `κλ` for the median and mode staircases.
const STAIRCASE_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesInfo {
    pub name: String,
    pub description: String,
    pub k: u32,
    pub lambda: Option<f64>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub id: u8,
    pub title: String,
    pub table: Table,
    pub series: Vec<SeriesInfo>,
}

impl Figure {
    pub fn to_record(&self) -> OutputRecord {
        OutputRecord::new(
            "figure",
            json!({ "figure": self.id, "title": self.title }),
            self.table.clone(),
        )
    }

    pub fn series_table(&self, name: &str) -> Table {
        let mut out = Table {
            columns: self.table.columns.clone(),
            rows: Vec::new(),
        };
        out.rows = self
            .table
            .rows
            .iter()
            .filter(|r| r[0].as_str() == Some(name))
            .cloned()
            .collect();
        out
    }

    pub fn file_name(&self, series: &str) -> String {
        format!("fig{:02}_{series}.csv", self.id)
    }

    pub fn manifest(&self) -> Table {
        let mut t = Table::new(&[
            ("figure", ColumnKind::Integer),
            ("series", ColumnKind::Text),
            ("file", ColumnKind::Text),
            ("k", ColumnKind::Integer),
            ("lambda", ColumnKind::Float),
            ("rows", ColumnKind::Integer),
            ("description", ColumnKind::Text),
        ]);
        for s in &self.series {
            t.push(vec![
                json!(self.id),
                json!(s.name),
                json!(self.file_name(&s.name)),
                json!(s.k),
                s.lambda.map(float).unwrap_or(Value::Null),
                json!(s.rows),
                json!(s.description),
            ]);
        }
        t
    }

    /// Writes one CSV per series and `figNN_manifest.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for s in &self.series {
            let path = dir.join(self.file_name(&s.name));
            fs::write(&path, self.series_table(&s.name).to_csv())?;
            written.push(path);
        }
        let path = dir.join(format!("fig{:02}_manifest.csv", self.id));
        fs::write(&path, self.manifest().to_csv())?;
        written.push(path);
        Ok(written)
    }
}

pub fn figure(id: u8) -> Result<Figure> {
    match id {
        1 => pmf_family_k1(),
        2 => pmf_k50_first_double_mode(),
        3 => panels_k3(),
        4 => panels_k10(),
        5 => panels_k20(),
        6 => panels_k50(),
        7 => median_staircase(10, 40.0),
        8 => mode_staircase(8, 10, 40.0),
        9 => mode_staircase(9, 2, 8.0),
        10 => unit_peak_curves(),
        _ => Err(Error::invalid(format!(
            "unknown figure id {id}, expected 1..=10"
        ))),
    }
}

struct Builder {
    table: Table,
    series: Vec<SeriesInfo>,
}

impl Builder {
    fn new(columns: &[(&str, ColumnKind)]) -> Self {
        let mut cols = vec![("series", ColumnKind::Text)];
        cols.extend_from_slice(columns);
        Builder {
            table: Table::new(&cols),
            series: Vec::new(),
        }
    }

    fn begin(&mut self, name: &str, description: String, k: u32, lambda: Option<f64>) {
        self.series.push(SeriesInfo {
            name: name.to_string(),
            description,
            k,
            lambda,
            rows: 0,
        });
    }

    fn push(&mut self, cells: Vec<Value>) {
        let s = self.series.last_mut().expect("series started");
        let mut row = vec![json!(s.name)];
        row.extend(cells);
        s.rows += 1;
        self.table.push(row);
    }

    fn finish(self, id: u8, title: &str) -> Figure {
        Figure {
            id,
            title: title.to_string(),
            table: self.table,
            series: self.series,
        }
    }
}

fn pmf_builder() -> Builder {
    Builder::new(&[
        ("k", ColumnKind::Integer),
        ("lambda", ColumnKind::Float),
        ("n", ColumnKind::Integer),
        ("h", ColumnKind::Float),
    ])
}

fn push_pmf(
    b: &mut Builder,
    name: &str,
    description: String,
    k: u32,
    lambda: f64,
    n_max: usize,
) -> Result<()> {
    let table = ScaledPmfTable::new(OrderKParams::new(k, lambda)?, n_max)?;
    b.begin(name, description, k, Some(lambda));
    for n in 0..=n_max {
        b.push(vec![
            json!(k),
            float(lambda),
            json!(n),
            float(table.value(n)),
        ]);
    }
    Ok(())
}

fn pmf_family_k1() -> Result<Figure> {
    let mut b = pmf_builder();
    for (i, lambda) in [0.8, 1.0, 4.0, 4.2].into_iter().enumerate() {
        push_pmf(
            &mut b,
            &format!("lambda{}", i + 1),
            format!("k = 1, λ = {lambda}"),
            1,
            lambda,
            12,
        )?;
    }
    Ok(b.finish(1, "scaled pmf, k = 1"))
}

fn pmf_k50_first_double_mode() -> Result<Figure> {
    let mut b = pmf_builder();
    push_pmf(
        &mut b,
        "pmf",
        "k = 50, λ = 0.10194".into(),
        50,
        0.10194,
        140,
    )?;
    Ok(b.finish(2, "scaled pmf, k = 50, λ = 0.10194"))
}

struct Panel {
    lambda: f64,
    description: String,
}

fn fixed(lambda: f64, what: &str) -> Panel {
    Panel {
        lambda,
        description: format!("λ = {lambda}: {what}"),
    }
}

fn jumps(k: u32) -> Result<Vec<Panel>> {
    Ok(jump_boundaries(k)?
        .into_iter()
        .map(|e| Panel {
            lambda: e.lambda_star,
            description: format!("λ = {:.6}: mode jump {} -> {}", e.lambda_star, e.m1, e.m2),
        })
        .collect())
}

fn flat_top(k: u32, m: usize, guess: f64) -> Result<Panel> {
    let e = consecutive_double_mode_near(k, m, guess, 0.01)?;
    Ok(Panel {
        lambda: e.lambda_star,
        description: format!(
            "λ = {:.6}: double mode {{{}, {}}}",
            e.lambda_star, e.m1, e.m2
        ),
    })
}

fn peak_crossing(k: u32, tie: PeakTie, lo: f64, hi: f64) -> Result<Panel> {
    let e = peak_height_tie(k, tie, lo, hi, 200)?;
    Ok(Panel {
        lambda: e.lambda_star,
        description: format!(
            "λ = {:.6}: h[{}] = h[{}] below 1, not modes",
            e.lambda_star, e.m1, e.m2
        ),
    })
}

fn panels(id: u8, k: u32, n_max: usize, panels: Vec<Panel>) -> Result<Figure> {
    let mut b = pmf_builder();
    for (i, p) in panels.into_iter().enumerate() {
        push_pmf(
            &mut b,
            &format!("panel{}", i + 1),
            p.description,
            k,
            p.lambda,
            n_max,
        )?;
    }
    Ok(b.finish(id, &format!("scaled pmf panels, k = {k}")))
}

fn panels_k3() -> Result<Figure> {
    let mut p = vec![fixed(0.4, "mountain range decreasing")];
    p.extend(jumps(3)?);
    p.push(fixed(1.02, "single peak"));
    p.push(flat_top(3, 7, 1.4293)?);
    panels(3, 3, 20, p)
}

fn panels_k10() -> Result<Figure> {
    let mut p = vec![fixed(0.2, "mountain range decreasing")];
    p.extend(jumps(10)?);
    p.push(flat_top(10, 24, 0.5119)?);
    panels(4, 10, 50, p)
}

fn panels_k20() -> Result<Figure> {
    let mut p = vec![fixed(0.1, "mountain range decreasing")];
    let j = jumps(20)?;
    p.push(peak_crossing(20, PeakTie::LeftPeakVsK, 0.1, j[0].lambda)?);
    p.extend(j);
    p.push(flat_top(20, 55, 0.3039)?);
    panels(5, 20, 90, p)
}

fn panels_k50() -> Result<Figure> {
    let mut p = vec![fixed(0.04, "mountain range decreasing")];
    let j = jumps(50)?;
    p.push(peak_crossing(50, PeakTie::LeftPeakVsK, 0.04, j[0].lambda)?);
    p.push(peak_crossing(
        50,
        PeakTie::RightPeakVsLeft,
        0.04,
        j[0].lambda,
    )?);
    p.extend(j);
    p.push(flat_top(50, 116, 0.105)?);
    panels(6, 50, 160, p)
}

fn staircase_grid(k: u32, kl_max: f64) -> Vec<(f64, f64)> {
    let kap = kappa(k) as f64;
    let steps = (kl_max / STAIRCASE_STEP).round() as usize;
    (1..=steps)
        .map(|i| {
            let kl = i as f64 * STAIRCASE_STEP;
            (kl, kl / kap)
        })
        .collect()
}

fn median_staircase(k: u32, kl_max: f64) -> Result<Figure> {
    let mut b = Builder::new(&[
        ("k", ColumnKind::Integer),
        ("lambda", ColumnKind::Float),
        ("kappa_lambda", ColumnKind::Float),
        ("median", ColumnKind::Integer),
        ("lower", ColumnKind::Float),
        ("upper", ColumnKind::Integer),
    ]);
    b.begin(
        "median",
        format!("k = {k}, median with bounds, κλ <= {kl_max}"),
        k,
        None,
    );
    for (kl, lambda) in staircase_grid(k, kl_max) {
        let nu = median(&OrderKParams::new(k, lambda)?)?;
        let bounds = MedianBounds::new(k, lambda);
        b.push(vec![
            json!(k),
            float(lambda),
            float(kl),
            json!(nu),
            float(bounds.lower),
            json!(bounds.upper),
        ]);
    }
    Ok(b.finish(7, &format!("median with bounds, k = {k}")))
}

fn mode_staircase(id: u8, k: u32, kl_max: f64) -> Result<Figure> {
    let mut b = Builder::new(&[
        ("k", ColumnKind::Integer),
        ("lambda", ColumnKind::Float),
        ("kappa_lambda", ColumnKind::Float),
        ("mode", ColumnKind::Integer),
        ("lower", ColumnKind::Integer),
        ("upper", ColumnKind::Integer),
    ]);
    b.begin(
        "mode",
        format!("k = {k}, mode with bounds, κλ <= {kl_max}"),
        k,
        None,
    );
    for (kl, lambda) in staircase_grid(k, kl_max) {
        let m = principal_mode(&OrderKParams::new(k, lambda)?)?;
        let bounds = ModeBounds::new(k, lambda);
        b.push(vec![
            json!(k),
            float(lambda),
            float(kl),
            json!(m),
            json!(bounds.lower_conjectured),
            json!(bounds.upper),
        ]);
    }
    Ok(b.finish(id, &format!("mode with bounds, k = {k}")))
}

fn unit_peak_curves() -> Result<Figure> {
    let lambda = 2.0;
    let mut b = Builder::new(&[
        ("k", ColumnKind::Integer),
        ("lambda", ColumnKind::Float),
        ("n", ColumnKind::Integer),
        ("x", ColumnKind::Float),
        ("y", ColumnKind::Float),
    ]);
    for k in [3u32, 10, 20, 50] {
        let kap = kappa(k) as usize;
        let table = ScaledPmfTable::new(OrderKParams::new(k, lambda)?, 6 * kap)?;
        let peak = table.argmax_in(0..=6 * kap);
        let ln_peak = table.ln_value(peak);
        b.begin(
            &format!("k{k}"),
            format!("k = {k}, λ = 2, scaled to unit peak, n/κ in [0, 6]"),
            k,
            Some(lambda),
        );
        for n in 0..=6 * kap {
            let y = (table.ln_value(n) - ln_peak).exp();
            b.push(vec![
                json!(k),
                float(lambda),
                json!(n),
                float(n as f64 / kap as f64),
                float(y),
            ]);
        }
    }
    Ok(b.finish(10, "pmf scaled to unit peak, λ = 2"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(t: &Table, col: &str) -> Vec<i64> {
        t.column(col)
            .unwrap()
            .map(|v| v.as_i64().unwrap())
            .collect()
    }

    fn floats(t: &Table, col: &str) -> Vec<f64> {
        t.column(col)
            .unwrap()
            .map(|v| v.as_f64().unwrap())
            .collect()
    }

    #[test]
    fn unknown_id() {
        assert!(matches!(figure(0), Err(Error::InvalidParameter(_))));
        assert!(matches!(figure(11), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn k1_family_is_decreasing_at_low_rate() {
        let f = figure(1).unwrap();
        assert_eq!(f.series.len(), 4);
        let h = floats(&f.series_table("lambda1"), "h");
        assert!(h.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn mode_staircase_k10_jumps() {
        let f = figure(8).unwrap();
        let modes = ints(&f.table, "mode");
        let mut steps: Vec<(i64, i64)> = modes
            .windows(2)
            .filter(|w| w[1] - w[0] >= 2)
            .map(|w| (w[0], w[1]))
            .collect();
        steps.dedup();
        assert_eq!(steps, vec![(0, 10), (10, 17), (20, 23)]);
    }

    #[test]
    fn mode_staircase_k2_jump_position() {
        let f = figure(9).unwrap();
        let kl = floats(&f.table, "kappa_lambda");
        let modes = ints(&f.table, "mode");
        let i = modes.windows(2).position(|w| w == [2, 4]).unwrap();
        assert!(kl[i] < 4.0238 && kl[i + 1] >= 4.0237);
    }

    #[test]
    fn unit_peak_shift_right_with_k() {
        let f = figure(10).unwrap();
        let mut peaks = Vec::new();
        for k in [3, 10, 20, 50] {
            let t = f.series_table(&format!("k{k}"));
            let y = floats(&t, "y");
            let x = floats(&t, "x");
            let i = y.iter().position(|&v| v == 1.0).unwrap();
            peaks.push(x[i]);
        }
        assert!(peaks.windows(2).all(|w| w[1] > w[0]), "{peaks:?}");
    }

    #[test]
    fn panel_rates_are_solved() {
        let f = figure(5).unwrap();
        let lambdas: Vec<f64> = f.series.iter().map(|s| s.lambda.unwrap()).collect();
        let quoted = [0.1, 0.1899, 0.20333, 0.24159, 0.3039];
        for (got, want) in lambdas.iter().zip(quoted) {
            assert!((got - want).abs() < 5e-4, "{lambdas:?}");
        }
        let f = figure(6).unwrap();
        let lambdas: Vec<f64> = f.series.iter().map(|s| s.lambda.unwrap()).collect();
        let quoted = [0.04, 0.07822, 0.098, 0.10194, 0.105];
        for (got, want) in lambdas.iter().zip(quoted) {
            assert!((got - want).abs() < 5e-4, "{lambdas:?}");
        }
    }

    #[test]
    fn written_files_reparse() {
        let dir = tempfile::tempdir().unwrap();
        let f = figure(2).unwrap();
        let files = f.write_to_dir(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let text = fs::read_to_string(&files[0]).unwrap();
        let back = Table::from_csv(&f.table.columns, &text).unwrap();
        assert_eq!(back, f.series_table("pmf"));
        let manifest = fs::read_to_string(&files[1]).unwrap();
        assert!(manifest.contains("fig02_pmf.csv"));
    }
}
