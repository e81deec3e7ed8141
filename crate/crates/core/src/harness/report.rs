use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiments::LinearFit;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DpSweep,
    BlockBench,
    TrainCompare,
    IotaSweep,
}

/// Parameters of one run; absent fields do not apply to the experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iota: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kind: ExperimentKind,
    pub dataset: String,
    pub params: RunParams,
    pub metrics: BTreeMap<String, f64>,
}

impl ReportRow {
    pub fn new(kind: ExperimentKind, dataset: &str, params: RunParams) -> Self {
        ReportRow {
            kind,
            dataset: dataset.to_string(),
            params,
            metrics: BTreeMap::new(),
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub dataset: String,
    pub rows: Vec<ReportRow>,
    /// Least-squares fit of total time against `iota + 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<LinearFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(kind: ExperimentKind, dataset: &str) -> Self {
        ExperimentReport {
            kind,
            dataset: dataset.to_string(),
            rows: Vec::new(),
            fit: None,
            notes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per row; metric columns are the union over rows.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let metric_names: BTreeSet<&str> = self
            .rows
            .iter()
            .flat_map(|r| r.metrics.keys().map(String::as_str))
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["kind", "dataset", "mode", "protocol", "k", "epsilon", "iota", "key_bits", "seed"];
        header.extend(metric_names.iter());
        w.write_record(&header).map_err(|e| HarnessError::Csv(e.to_string()))?;
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        for row in &self.rows {
            let kind = serde_json::to_value(row.kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            let p = &row.params;
            let mut record = vec![
                kind,
                row.dataset.clone(),
                opt(&p.mode),
                opt(&p.protocol),
                opt(&p.k),
                opt(&p.epsilon),
                opt(&p.iota),
                opt(&p.key_bits),
                opt(&p.seed),
            ];
            record.extend(metric_names.iter().map(|m| opt(&row.metric(m))));
            w.write_record(&record).map_err(|e| HarnessError::Csv(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Csv(e.to_string()))
    }

    pub fn write(&self, json: &Path, csv: Option<&Path>) -> Result<(), HarnessError> {
        std::fs::write(json, self.to_json()).map_err(|e| HarnessError::Io(e.to_string()))?;
        if let Some(path) = csv {
            std::fs::write(path, self.to_csv()?).map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        Ok(())
    }

    /// Mean of a metric over the rows accepted by `filter`.
    pub fn mean_metric(&self, name: &str, filter: impl Fn(&ReportRow) -> bool) -> Option<f64> {
        let values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| filter(r))
            .filter_map(|r| r.metric(name))
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }
}
