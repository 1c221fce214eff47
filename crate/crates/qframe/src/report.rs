//! CSV and JSON output.

use std::fmt::Write as _;

use qframe_core::bounds::BoundSet;
use qframe_core::frame::{BatteryLedger, ProtocolResult, Verdict};
use qframe_core::{Axis, CMatrix};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub const SWEEP_HEADER: &str =
    "N,seed,err,sep_xx,sep_yy,sep_zz,off_xy,off_xz,off_yx,off_yz,off_zx,off_zy,bound_total,bound_diag,bound_off,pass";

/// Floats in CSV: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV line of the sweep table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub iterations: usize,
    pub seed: u64,
    pub err: f64,
    pub sep: [f64; 3],
    /// `|ΔS_j^(k)|` in the order xy, xz, yx, yz, zx, zy.
    pub off: [f64; 6],
    pub bound_total: f64,
    pub bound_diag: f64,
    pub bound_off: f64,
    pub pass: bool,
}

impl SweepRow {
    pub fn from_result(iterations: usize, seed: u64, result: &ProtocolResult) -> Self {
        let mut off = [0.0; 6];
        let mut i = 0;
        for j in 0..3 {
            for k in 0..3 {
                if j != k {
                    off[i] = result.separation.off[j][k];
                    i += 1;
                }
            }
        }
        SweepRow {
            iterations,
            seed,
            err: result.error_trace_norm,
            sep: result.separation.diagonal,
            off,
            bound_total: result.bounds.total_accuracy,
            bound_diag: result.bounds.diagonal_separation,
            bound_off: result.bounds.off_diagonal_separation,
            pass: result.passes.all(),
        }
    }

    pub fn csv_line(&self) -> String {
        let mut line = format!("{},{},{}", self.iterations, self.seed, fmt_float(self.err));
        for v in self.sep.iter().chain(&self.off).chain(&[self.bound_total, self.bound_diag, self.bound_off]) {
            line.push(',');
            line.push_str(&fmt_float(*v));
        }
        line.push(',');
        line.push_str(if self.pass { "true" } else { "false" });
        line
    }
}

/// Header, one line per row, then the `slope` summary line.
pub fn sweep_csv(rows: &[SweepRow], slope: Option<f64>) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    let slope = slope.map(fmt_float).unwrap_or_default();
    let _ = writeln!(out, "slope,,{slope}{}", ",".repeat(13));
    out
}

/// Versioned JSON report.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub results: Value,
    pub bounds: Value,
    pub passes: Value,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "bounds": self.bounds,
            "passes": self.passes,
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }

    /// `key,value` lines with dotted paths, for commands without a table.
    pub fn to_kv_csv(&self) -> String {
        let mut pairs = Vec::new();
        flatten("", &self.to_json(), &mut pairs);
        let mut out = String::from("key,value\n");
        for (k, v) in pairs {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        Value::Number(n) => {
            let text = match (n.as_u64(), n.as_i64(), n.as_f64()) {
                (Some(u), _, _) => u.to_string(),
                (_, Some(i), _) => i.to_string(),
                (_, _, Some(f)) => fmt_float(f),
                _ => n.to_string(),
            };
            out.push((prefix.to_string(), text));
        }
        Value::String(s) => out.push((prefix.to_string(), csv_escape(s))),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null => out.push((prefix.to_string(), String::new())),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn vec3_json(v: [f64; 3]) -> Value {
    json!(v)
}

/// `{"x": [...], "y": [...], "z": [...]}` by battery part.
pub fn ledger_json(ledger: &BatteryLedger) -> Value {
    let mut map = Map::new();
    for part in Axis::ALL {
        map.insert(part.label().to_string(), vec3_json(ledger.part(part)));
    }
    Value::Object(map)
}

pub fn matrix_json(m: &CMatrix) -> Value {
    let rows = |f: fn(f64, f64) -> f64| -> Vec<Vec<f64>> {
        (0..m.rows()).map(|i| (0..m.cols()).map(|j| f(m[(i, j)].re, m[(i, j)].im)).collect()).collect()
    };
    json!({ "dim": m.rows(), "re": rows(|re, _| re), "im": rows(|_, im| im) })
}

pub fn bounds_json(b: &BoundSet) -> Value {
    let mut map = Map::new();
    for (name, value) in b.entries() {
        map.insert(name.to_string(), json!(value));
    }
    map.insert("step_valid".into(), json!(b.step_valid));
    map.insert("sequence_valid".into(), json!(b.sequence_valid));
    Value::Object(map)
}

pub fn verdict_json(v: &Verdict) -> Value {
    let mut map = Map::new();
    for (name, ok) in v.entries() {
        map.insert(name, json!(ok));
    }
    map.insert("all".into(), json!(v.all()));
    Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> SweepRow {
        SweepRow {
            iterations: 128,
            seed: 3,
            err: 0.1,
            sep: [1.0, 2.0, 3.0],
            off: [0.5; 6],
            bound_total: 50.0,
            bound_diag: 49.0,
            bound_off: 24.5,
            pass: true,
        }
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.5), "-2.5000000000000000e0");
        let back: f64 = fmt_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn sweep_csv_shape() {
        let csv = sweep_csv(&[row(), row()], Some(-1.0));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        let columns = SWEEP_HEADER.split(',').count();
        for line in &lines {
            assert_eq!(line.split(',').count(), columns, "{line}");
        }
        assert!(lines[1].starts_with("128,3,1.0000000000000001e-1,"));
        assert!(lines[1].ends_with(",true"));
        assert!(lines[3].starts_with("slope,,-1.0000000000000000e0"));
        assert_eq!(sweep_csv(&[], None).lines().last().unwrap().split(',').count(), columns);
    }

    #[test]
    fn json_envelope_and_flattening() {
        let report = Report {
            command: "bounds",
            config: json!({"N": 10, "tag": "a,b"}),
            results: json!({"v": [0.5, -1]}),
            bounds: json!({}),
            passes: json!({"ok": true}),
        };
        let v = report.to_json();
        for key in ["schema", "command", "config", "results", "bounds", "passes"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["schema"], 1);
        let csv = report.to_kv_csv();
        assert!(csv.contains("config.N,10\n"));
        assert!(csv.contains("config.tag,\"a,b\"\n"));
        assert!(csv.contains("results.v.0,5.0000000000000000e-1\n"));
        assert!(csv.contains("results.v.1,-1\n"));
        assert!(csv.contains("passes.ok,true\n"));
    }
}
