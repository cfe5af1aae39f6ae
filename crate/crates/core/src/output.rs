//! Tabular output records with CSV and JSON Lines serialization.
//!
//! Every record carries a schema version, the command name and the echoed
//! inputs. The payload is a typed table; numeric cells are rounded to 15
//! significant digits when they enter the table, so serialization and
//! re-parsing are exact and repeatable.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Integer,
    Float,
    Text,
    Bool,
    /// Integers joined with `;` in CSV, an array in JSON.
    IntegerList,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub schema_version: String,
    pub command: String,
    pub params: Map<String, Value>,
    pub payload: Table,
}

/// Rounds to 15 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// A float cell. Non-finite values become the strings `inf`, `-inf`, `nan`.
pub fn float(x: f64) -> Value {
    if x.is_nan() {
        Value::from("nan")
    } else if x.is_infinite() {
        Value::from(if x > 0.0 { "inf" } else { "-inf" })
    } else {
        Value::from(round_sig(x))
    }
}

pub fn int_list<I: IntoIterator<Item = T>, T: Into<i64>>(values: I) -> Value {
    Value::Array(values.into_iter().map(|v| Value::from(v.into())).collect())
}

impl Column {
    pub fn new(name: &str, kind: ColumnKind) -> Self {
        Column {
            name: name.to_string(),
            kind,
        }
    }
}

impl Table {
    pub fn new(columns: &[(&str, ColumnKind)]) -> Self {
        Table {
            columns: columns.iter().map(|(n, k)| Column::new(n, *k)).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row, normalizing float cells. Panics on a schema mismatch.
    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        let row = row
            .into_iter()
            .zip(&self.columns)
            .map(|(v, c)| {
                let v = normalize(v, c.kind);
                assert!(
                    cell_matches(&v, c.kind),
                    "cell {v} does not match column {}",
                    c.name
                );
                v
            })
            .collect();
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<impl Iterator<Item = &Value>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(move |r| &r[i]))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(csv_cell))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    /// Parses CSV produced by [`Table::to_csv`] under the given schema.
    pub fn from_csv(columns: &[Column], text: &str) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| Error::Malformed(e.to_string()))?;
        let names: Vec<&str> = header.iter().collect();
        let expected: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
        if names != expected {
            return Err(Error::Malformed(format!(
                "header {names:?}, expected {expected:?}"
            )));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Malformed(e.to_string()))?;
            let row = rec
                .iter()
                .zip(columns)
                .map(|(s, c)| parse_cell(s, c))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Table {
            columns: columns.to_vec(),
            rows,
        })
    }
}

fn normalize(v: Value, kind: ColumnKind) -> Value {
    match (kind, &v) {
        (ColumnKind::Float, Value::Number(n)) => match n.as_f64() {
            Some(x) if n.is_f64() => float(x),
            Some(x) => Value::from(x),
            None => v,
        },
        _ => v,
    }
}

fn cell_matches(v: &Value, kind: ColumnKind) -> bool {
    if v.is_null() {
        return nullable(kind);
    }
    match kind {
        ColumnKind::Integer => v.is_i64() || v.is_u64(),
        ColumnKind::Float => v.is_number() || matches!(v.as_str(), Some("inf" | "-inf" | "nan")),
        ColumnKind::Text => v.is_string(),
        ColumnKind::Bool => v.is_boolean(),
        ColumnKind::IntegerList => v
            .as_array()
            .is_some_and(|a| a.iter().all(|x| x.is_i64() || x.is_u64())),
    }
}

/// Integer, float and bool cells may be null; CSV writes them empty.
fn nullable(kind: ColumnKind) -> bool {
    matches!(
        kind,
        ColumnKind::Integer | ColumnKind::Float | ColumnKind::Bool
    )
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(a) => a
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";"),
        other => other.to_string(),
    }
}

fn parse_cell(s: &str, col: &Column) -> Result<Value> {
    let bad = || Error::Malformed(format!("column {}: cannot parse {s:?}", col.name));
    if s.is_empty() && nullable(col.kind) {
        return Ok(Value::Null);
    }
    Ok(match col.kind {
        ColumnKind::Integer => Value::from(s.parse::<i64>().map_err(|_| bad())?),
        ColumnKind::Float => match s {
            "inf" | "-inf" | "nan" => Value::from(s),
            _ => float(s.parse::<f64>().map_err(|_| bad())?),
        },
        ColumnKind::Text => Value::from(s),
        ColumnKind::Bool => Value::from(s.parse::<bool>().map_err(|_| bad())?),
        ColumnKind::IntegerList => {
            if s.is_empty() {
                Value::Array(Vec::new())
            } else {
                let items = s
                    .split(';')
                    .map(|x| x.parse::<i64>().map(Value::from).map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                Value::Array(items)
            }
        }
    })
}

#[derive(Serialize, Deserialize)]
struct JsonLine {
    schema_version: String,
    command: String,
    params: Map<String, Value>,
    row: Map<String, Value>,
}

impl OutputRecord {
    pub fn new(command: &str, params: Value, payload: Table) -> Self {
        let params = match params {
            Value::Object(m) => m,
            Value::Null => Map::new(),
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        OutputRecord {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            params,
            payload,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.payload.to_csv(),
            Format::Json => self.to_json_lines(),
        }
    }

    /// One object per payload row, each repeating the record header.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.payload.rows {
            let line = JsonLine {
                schema_version: self.schema_version.clone(),
                command: self.command.clone(),
                params: self.params.clone(),
                row: self
                    .payload
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.name.clone(), v.clone()))
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&line).expect("json values serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses JSON Lines produced by [`OutputRecord::to_json_lines`].
    /// An empty payload cannot carry its header, so it needs `command`.
    pub fn from_json_lines(columns: &[Column], text: &str) -> Result<OutputRecord> {
        let mut record: Option<OutputRecord> = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let parsed: JsonLine =
                serde_json::from_str(line).map_err(|e| Error::Malformed(e.to_string()))?;
            if parsed.schema_version != SCHEMA_VERSION {
                return Err(Error::Malformed(format!(
                    "schema version {}",
                    parsed.schema_version
                )));
            }
            if parsed.row.len() != columns.len() {
                return Err(Error::Malformed("row width mismatch".into()));
            }
            let mut row = Vec::with_capacity(columns.len());
            for c in columns {
                let v = parsed
                    .row
                    .get(&c.name)
                    .ok_or_else(|| Error::Malformed(format!("missing column {}", c.name)))?;
                if !cell_matches(v, c.kind) {
                    return Err(Error::Malformed(format!(
                        "column {}: bad value {v}",
                        c.name
                    )));
                }
                row.push(v.clone());
            }
            let rec = record.get_or_insert_with(|| OutputRecord {
                schema_version: parsed.schema_version.clone(),
                command: parsed.command.clone(),
                params: parsed.params.clone(),
                payload: Table {
                    columns: columns.to_vec(),
                    rows: Vec::new(),
                },
            });
            if rec.command != parsed.command || rec.params != parsed.params {
                return Err(Error::Malformed("mixed records in one stream".into()));
            }
            rec.payload.rows.push(row);
        }
        record.ok_or_else(|| Error::Malformed("empty stream".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> OutputRecord {
        let mut t = Table::new(&[
            ("n", ColumnKind::Integer),
            ("h", ColumnKind::Float),
            ("label", ColumnKind::Text),
            ("ok", ColumnKind::Bool),
            ("modes", ColumnKind::IntegerList),
            ("opt", ColumnKind::Float),
        ]);
        t.push(vec![
            json!(0),
            float(1.0),
            json!("a,b"),
            json!(true),
            int_list([24u32, 25]),
            Value::Null,
        ]);
        t.push(vec![
            json!(1),
            float(0.1 + 0.2),
            json!(""),
            json!(false),
            int_list(Vec::<i64>::new()),
            float(2.5),
        ]);
        t.push(vec![
            json!(2),
            float(f64::NEG_INFINITY),
            json!("x\"y"),
            json!(true),
            int_list([7i64]),
            Value::Null,
        ]);
        OutputRecord::new("test", json!({"k": 3, "lambda": 0.5}), t)
    }

    #[test]
    fn rounding_to_fifteen_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333333);
        assert_eq!(round_sig(-2.5e-300), -2.5e-300);
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let rec = sample();
        let text = rec.payload.to_csv();
        assert!(text.starts_with("n,h,label,ok,modes,opt\n"));
        assert!(text.contains("24;25"));
        let back = Table::from_csv(&rec.payload.columns, &text).unwrap();
        assert_eq!(back, rec.payload);
        assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn json_lines_round_trip() {
        let rec = sample();
        let text = rec.to_json_lines();
        assert_eq!(text.lines().count(), 3);
        let back = OutputRecord::from_json_lines(&rec.payload.columns, &text).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.to_json_lines(), text);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let rec = sample();
        let mut cols = rec.payload.columns.clone();
        cols[0].name = "m".into();
        assert!(matches!(
            Table::from_csv(&cols, &rec.payload.to_csv()),
            Err(Error::Malformed(_))
        ));
    }

    #[test]
    #[should_panic]
    fn push_rejects_wrong_kind() {
        let mut t = Table::new(&[("n", ColumnKind::Integer)]);
        t.push(vec![json!("nope")]);
    }
}
