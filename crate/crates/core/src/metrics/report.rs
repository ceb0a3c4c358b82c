use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// One per-frame measurement. `group` holds a difficulty tier or region
/// label and may be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub frame: String,
    #[serde(default)]
    pub group: String,
    pub metric: String,
    pub value: f64,
}

/// Per-frame records of one method. Undefined values are never recorded,
/// so every aggregate is a plain mean over the frames where the metric is
/// defined.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub method: String,
    pub records: Vec<MetricRecord>,
}

/// Non-finite numbers become the strings `"inf"`, `"-inf"` and `"nan"`.
fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

impl MetricReport {
    pub fn new(method: impl Into<String>) -> Self {
        MetricReport {
            method: method.into(),
            records: Vec::new(),
        }
    }

    /// Records `value` when it is defined.
    pub fn push(&mut self, frame: &str, group: &str, metric: &str, value: Option<f64>) {
        if let Some(value) = value {
            self.records.push(MetricRecord {
                frame: frame.to_string(),
                group: group.to_string(),
                metric: metric.to_string(),
                value,
            });
        }
    }

    pub fn merge(&mut self, other: MetricReport) {
        self.records.extend(other.records);
    }

    /// `(group, metric) -> (mean, frame count)`.
    pub fn means(&self) -> BTreeMap<(String, String), (f64, usize)> {
        let mut acc: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
        for r in &self.records {
            let e = acc.entry((r.group.clone(), r.metric.clone())).or_default();
            e.0 += r.value;
            e.1 += 1;
        }
        for (sum, n) in acc.values_mut() {
            *sum /= *n as f64;
        }
        acc
    }

    pub fn mean(&self, group: &str, metric: &str) -> Option<f64> {
        self.means().get(&(group.to_string(), metric.to_string())).map(|m| m.0)
    }

    /// `frame,group,metric,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["frame", "group", "metric", "value"])
            .expect("in-memory write");
        for r in &self.records {
            w.write_record([r.frame.as_str(), &r.group, &r.metric, &r.value.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// `{method: {group: {metric: mean}}}`, with an empty group named `all`.
    pub fn summary_json(&self) -> Value {
        let mut groups: BTreeMap<String, Map<String, Value>> = BTreeMap::new();
        for ((group, metric), (mean, _)) in self.means() {
            let g = if group.is_empty() { "all".to_string() } else { group };
            groups.entry(g).or_default().insert(metric, number(mean));
        }
        let mut inner = Map::new();
        for (g, m) in groups {
            inner.insert(g, Value::Object(m));
        }
        let mut root = Map::new();
        root.insert(self.method.clone(), Value::Object(inner));
        Value::Object(root)
    }
}
