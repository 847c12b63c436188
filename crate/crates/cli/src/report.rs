//! Verdict reports in human and JSON form.

use std::time::Duration;

use cbd_core::rational::{format_decimal, format_rational};
use cbd_core::{JointMass, Rational};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Json,
}

/// One extra fact about a run, rendered after the verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Flag(bool),
    Count(usize),
    Text(String),
    Exact(Rational),
    Matrix(Vec<Vec<Rational>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub contextual: bool,
    /// `None` when the degree was not computed.
    pub degree: Option<Rational>,
    pub witness: Option<JointMass>,
    pub fields: Vec<(String, Field)>,
    /// Human output only.
    pub elapsed: Option<Duration>,
    /// Printed to stderr, never part of the payload.
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: impl Into<String>, contextual: bool) -> Self {
        Self {
            command: command.into(),
            contextual,
            degree: None,
            witness: None,
            fields: Vec::new(),
            elapsed: None,
            warnings: Vec::new(),
        }
    }

    pub fn field(mut self, name: &str, value: Field) -> Self {
        self.fields.push((name.to_string(), value));
        self
    }
}

fn field_json(f: &Field) -> Value {
    match f {
        Field::Flag(b) => json!(b),
        Field::Count(n) => json!(n),
        Field::Text(s) => json!(s),
        Field::Exact(r) => json!(format_rational(r)),
        Field::Matrix(rows) => Value::Array(
            rows.iter()
                .map(|row| row.iter().map(|v| json!(format_rational(v))).collect())
                .collect(),
        ),
    }
}

fn exact_and_decimal(r: &Rational) -> String {
    format!("{} ({})", format_rational(r), format_decimal(r, 6))
}

fn matrix_lines(rows: &[Vec<Rational>]) -> Vec<String> {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.iter().map(format_rational).collect())
        .collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
    cells
        .iter()
        .map(|r| {
            let padded: Vec<String> = r.iter().map(|c| format!("{c:>width$}")).collect();
            format!("  {}", padded.join("  "))
        })
        .collect()
}

fn witness_lines(w: &JointMass) -> Vec<String> {
    let mut out = vec![format!("  {}", w.variables().join(" "))];
    for (state, m) in w.masses() {
        let bits: Vec<String> = state.iter().map(usize::to_string).collect();
        out.push(format!("  {}  {}", bits.join(""), exact_and_decimal(m)));
    }
    out
}

pub fn emit_report(r: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut obj = Map::new();
            obj.insert("command".into(), json!(r.command));
            obj.insert("contextual".into(), json!(r.contextual));
            obj.insert(
                "degree".into(),
                r.degree
                    .as_ref()
                    .map_or(Value::Null, |d| json!(format_rational(d))),
            );
            if let Some(w) = &r.witness {
                obj.insert(
                    "witness".into(),
                    serde_json::to_value(w).expect("witness serializes"),
                );
            }
            for (name, f) in &r.fields {
                obj.insert(name.clone(), field_json(f));
            }
            let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
            text.push('\n');
            text
        }
        Format::Human => {
            let mut lines = vec![format!("command: {}", r.command)];
            lines.push(format!(
                "verdict: {}",
                if r.contextual {
                    "contextual"
                } else {
                    "noncontextual"
                }
            ));
            lines.push(match &r.degree {
                Some(d) => format!("degree: {}", exact_and_decimal(d)),
                None => "degree: not computed (pass --degree)".to_string(),
            });
            for (name, f) in &r.fields {
                match f {
                    Field::Matrix(rows) => {
                        lines.push(format!("{name}:"));
                        lines.extend(matrix_lines(rows));
                    }
                    Field::Flag(b) => lines.push(format!("{name}: {b}")),
                    Field::Count(n) => lines.push(format!("{name}: {n}")),
                    Field::Text(s) => lines.push(format!("{name}: {s}")),
                    Field::Exact(v) => lines.push(format!("{name}: {}", exact_and_decimal(v))),
                }
            }
            if let Some(w) = &r.witness {
                lines.push("witness:".to_string());
                lines.extend(witness_lines(w));
            }
            if let Some(t) = r.elapsed {
                lines.push(format!("time: {:.3} s", t.as_secs_f64()));
            }
            lines.push(String::new());
            lines.join("\n")
        }
    }
}
