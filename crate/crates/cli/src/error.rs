use std::fmt;
use std::path::Path;

use serde_json::json;

/// Error reported on stderr as one JSON object:
/// `{"error": {"kind": ..., "message": ...}}`.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::new("io", format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind, "message": self.message } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

/// Message of `e` followed by its sources.
fn chain(e: &dyn std::error::Error) -> String {
    let mut out = e.to_string();
    let mut cur = e.source();
    while let Some(s) = cur {
        let msg = s.to_string();
        if !out.ends_with(&msg) {
            out.push_str(": ");
            out.push_str(&msg);
        }
        cur = s.source();
    }
    out
}

macro_rules! from_error {
    ($($ty:ty => $kind:literal),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($kind, chain(&e))
            }
        })*
    };
}

from_error! {
    egofields::filtering::FilterError => "filter",
    egofields::recon_io::ReconError => "reconstruction",
    egofields::metrics::MetricError => "metric",
    egofields::benchmark::BenchmarkError => "benchmark",
    egofields::propagation::PropagationError => "propagation",
    egofields::geometry::GeometryError => "geometry",
    egofields::synthetic::SyntheticError => "synthetic",
    serde_json::Error => "json",
}
