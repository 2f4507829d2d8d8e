use std::fmt;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::{Common, Format};

/// Failure of a run, carrying its exit status.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Core(fracbin::Error),
    Io(String),
    Serialize(serde_json::Error),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        use fracbin::Error as E;
        ExitCode::from(match self {
            Failure::Invalid(_) => 2,
            Failure::Core(E::Domain(_) | E::Parse(_) | E::DimensionMismatch(_)) => 2,
            Failure::Core(E::NonConvergence { .. } | E::Infeasible { .. } | E::Bracket { .. }) => 3,
            Failure::Core(E::CapExceeded { .. }) => 4,
            Failure::Io(_) | Failure::Serialize(_) => 5,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "invalid input: {m}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(m) => write!(f, "{m}"),
            Failure::Serialize(e) => write!(f, "serialization failed: {e}"),
        }
    }
}

impl From<fracbin::Error> for Failure {
    fn from(e: fracbin::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Serialize(e)
    }
}

/// Result of one command, rendered as JSON or CSV.
pub struct Report {
    pub result: Value,
    pub csv: Vec<u8>,
    pub coefficient_hash: String,
    /// Whether a verification report found failures.
    pub failed: bool,
}

impl Report {
    pub fn new(
        result: impl Serialize,
        csv: Vec<u8>,
        coefficient_hash: String,
    ) -> Result<Self, Failure> {
        Ok(Self {
            result: serde_json::to_value(result)?,
            csv,
            coefficient_hash,
            failed: false,
        })
    }
}

/// Resolved configuration: shared settings merged with the command's own.
pub fn resolved_config(
    common: &Common,
    command: &impl Serialize,
    tail_sd_tol: f64,
) -> Result<Value, Failure> {
    let mut map = Map::new();
    map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    if let Value::Object(m) = serde_json::to_value(common)? {
        map.extend(m);
    }
    if let Value::Object(m) = serde_json::to_value(command)? {
        map.extend(m);
    }
    map.insert("tail_sd_tol".into(), json!(tail_sd_tol));
    Ok(Value::Object(map))
}

pub fn render(config: &Value, report: &Report, format: Format) -> Result<Vec<u8>, Failure> {
    let mut out = Vec::new();
    match format {
        Format::Json => {
            let doc = json!({
                "config": config,
                "coefficient_hash": report.coefficient_hash,
                "result": report.result,
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            out.push(b'\n');
        }
        Format::Csv => {
            let header = format!(
                "# config {}\n# coefficient_hash {}\n",
                serde_json::to_string(config)?,
                report.coefficient_hash
            );
            out.extend_from_slice(header.as_bytes());
            out.extend_from_slice(&report.csv);
        }
    }
    Ok(out)
}

pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| Failure::Io(format!("cannot write to standard output: {e}"))),
    }
}
