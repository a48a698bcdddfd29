//! Evaluation report structure and its flat (CSV) rendering.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baseline::{PqResult, TrackScores};
use crate::error::{Error, Result};
use crate::io::{Violation, World};
use crate::ospa::{OspaComponents, OspaSummary, ScaleBreakdown};
use crate::taxonomy::Subset;
use crate::track::TemporalWindow;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPORT_SCHEMA: &str = "panospa-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Panoptic segmentation.
    Ps,
    /// Panoptic tracking.
    Pt,
}

/// Which metric family sees flattened (single-label) ground truth and predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flatten {
    /// OSPA on multi-label ground truth, threshold metrics on flattened.
    #[default]
    Auto,
    On,
    Off,
}

impl Flatten {
    pub fn for_ospa(self) -> bool {
        self == Flatten::On
    }

    pub fn for_baselines(self) -> bool {
        self != Flatten::Off
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputsEcho {
    pub gt: String,
    pub pred: String,
    pub taxonomy: String,
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputsEcho>,
    pub subset: Subset,
    pub world: World,
    pub flatten: Flatten,
    pub ospa_gt_flattened: bool,
    pub baseline_gt_flattened: bool,
    pub scale_breakdown: bool,
    pub temporal_window: TemporalWindow,
    pub class_set: String,
    pub aggregation: String,
    pub ospa_cutoff: f64,
    pub ospa_order: u32,
    pub match_iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsBlock {
    pub all: OspaSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thing: Option<OspaSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stuff: Option<OspaSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceValue {
    pub sequence: String,
    #[serde(flatten)]
    pub value: OspaComponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtBlock {
    pub all: OspaSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thing: Option<OspaSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stuff: Option<OspaSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub known: Option<OspaSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unknown: Option<OspaSummary>,
    pub per_sequence: Vec<SequenceValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub toolkit_version: String,
    pub report_schema: String,
    pub task: Task,
    pub dataset: String,
    pub sequences: Vec<String>,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ospa_ps: Option<PsBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pq: Option<PqResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ospa2_pt: Option<PtBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackScores>,
    pub warnings: Vec<Violation>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Every scalar leaf as `(dotted.path, value)`, sorted by key at each level.
    /// Numbers and strings are rendered exactly as in the JSON output.
    pub fn to_rows(&self) -> Vec<(String, String)> {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut rows = Vec::new();
        flatten_value("", &value, &mut rows);
        rows
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let io_err = |e: csv::Error| Error::Internal(format!("csv: {e}"));
        writer.write_record(["metric", "value"]).map_err(io_err)?;
        for (k, v) in self.to_rows() {
            writer.write_record([k, v]).map_err(io_err)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Internal(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }
}

fn flatten_value(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten_value(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_value(&key(&i.to_string()), v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_flatten_nested_values() {
        let mut rows = Vec::new();
        let v: Value = serde_json::json!({"a": {"b": 0.1, "c": [1, "x"]}, "d": true});
        flatten_value("", &v, &mut rows);
        let expect = [("a.b", "0.1"), ("a.c.0", "1"), ("a.c.1", "x"), ("d", "true")];
        assert_eq!(rows.len(), expect.len());
        for ((k, v), (ek, ev)) in rows.iter().zip(expect) {
            assert_eq!((k.as_str(), v.as_str()), (ek, ev));
        }
    }
}
