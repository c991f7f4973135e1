//! Run reports and their deterministic JSON and CSV renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde::{Serialize, Serializer};
use serde_json::Value;

use super::config::{ConfigSpec, Task};

/// Floats are written with 17 significant digits; non-finite values become
/// the strings `"inf"`, `"-inf"` and `"nan"`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn float<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&format_float(*x))
    }
}

fn float_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    struct F(f64);
    impl Serialize for F {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            float(&self.0, s)
        }
    }
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &F(*v))?;
    }
    map.end()
}

/// One checked inequality `lhs ≤ rhs + slack`.
#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    #[serde(serialize_with = "float")]
    pub lhs: f64,
    #[serde(serialize_with = "float")]
    pub rhs: f64,
    #[serde(serialize_with = "float")]
    pub slack: f64,
    pub verdict: bool,
}

impl Assertion {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        Assertion { name: name.into(), lhs, rhs, slack, verdict: lhs <= rhs + slack }
    }

    /// The instance with the largest `lhs − rhs`, so the recorded numbers
    /// decide the verdict for the whole batch.
    pub fn worst(name: impl Into<String>, pairs: impl IntoIterator<Item = (f64, f64)>, slack: f64) -> Option<Self> {
        let mut worst: Option<(f64, f64)> = None;
        for (l, r) in pairs {
            let excess = if l.is_nan() || r.is_nan() { f64::INFINITY } else { l - r };
            if worst.is_none_or(|(wl, wr)| excess > wl - wr || (wl - wr).is_nan()) {
                worst = Some((l, r));
            }
        }
        worst.map(|(l, r)| Assertion::new(name, l, r, slack))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    /// A theorem's hypothesis does not hold for this instance.
    Skipped,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskResult {
    pub task: Task,
    #[serde(serialize_with = "float")]
    pub beta: f64,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(serialize_with = "float_map")]
    pub values: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl TaskResult {
    pub fn passed(&self) -> bool {
        self.status != TaskStatus::Error && self.assertions.iter().all(|a| a.verdict)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: String,
    pub config: ConfigSpec,
    pub results: Vec<TaskResult>,
    pub pass: bool,
}

impl RunReport {
    pub fn assertions(&self) -> impl Iterator<Item = (&TaskResult, &Assertion)> {
        self.results.iter().flat_map(|r| r.assertions.iter().map(move |a| (r, a)))
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => write!(out, "{u}").unwrap(),
            (None, Some(i)) => write!(out, "{i}").unwrap(),
            _ => out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push_str(": ");
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and 17-significant-digit floats.
pub fn emit_json(report: &RunReport) -> String {
    let v = serde_json::to_value(report).expect("report serializes");
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

/// One row per assertion.
pub fn emit_csv(report: &RunReport) -> String {
    let mut out = String::from("task,beta,assertion,lhs,rhs,slack,verdict\n");
    for (r, a) in report.assertions() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.task.name(),
            format_float(r.beta),
            a.name,
            format_float(a.lhs),
            format_float(a.rhs),
            format_float(a.slack),
            if a.verdict { "pass" } else { "fail" }
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.0, 1.0, -2.5e-300, std::f64::consts::PI, 1.0 / 3.0, f64::MAX] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn worst_assertion_is_recomputable() {
        let a = Assertion::worst("x", vec![(1.0, 2.0), (3.0, 2.5), (0.0, 0.0)], 0.1).unwrap();
        assert_eq!((a.lhs, a.rhs), (3.0, 2.5));
        assert!(!a.verdict);
        assert_eq!(a.verdict, a.lhs <= a.rhs + a.slack);
        let b = Assertion::worst("y", vec![(1.0, f64::INFINITY)], 0.0).unwrap();
        assert!(b.verdict);
        assert!(Assertion::worst("z", Vec::new(), 0.0).is_none());
    }

    #[test]
    fn json_writer_output_parses() {
        let v: Value = serde_json::json!({"b": [1.5, {"c": null}], "a": "q\"", "n": 3});
        let mut s = String::new();
        write_value(&mut s, &v, 0);
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
    }
}
