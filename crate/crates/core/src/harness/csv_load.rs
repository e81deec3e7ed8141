use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{AttributeKind, AttributeMeta, Dataset};
use super::HarnessError;

/// How raw label strings become `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// At most two distinct raw values; those listed are class 1.
    Binary { positive: Vec<String> },
    /// Any number of raw values; those listed are class 1, the rest 0.
    OneVsRest { positive: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub has_header: bool,
    pub label_column: usize,
    pub labels: LabelRule,
    #[serde(default)]
    pub ignore_columns: Vec<usize>,
    #[serde(default)]
    pub discrete_columns: Vec<usize>,
    #[serde(default = "default_missing")]
    pub missing_tokens: Vec<String>,
    /// Attribute names when the file has no header.
    #[serde(default)]
    pub names: Option<Vec<String>>,
}

fn default_missing() -> Vec<String> {
    vec!["?".into(), "".into(), "NA".into()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LoadStats {
    pub rows_read: usize,
    pub rows_dropped: usize,
}

impl CsvSchema {
    /// Headered file, label in the last column, every other column numeric,
    /// label values "1" positive.
    pub fn numeric_with_header(label_column: usize) -> Self {
        CsvSchema {
            has_header: true,
            label_column,
            labels: LabelRule::Binary {
                positive: vec!["1".into()],
            },
            ignore_columns: vec![],
            discrete_columns: vec![],
            missing_tokens: default_missing(),
            names: None,
        }
    }

    /// UCI breast-cancer-wisconsin.data: id, nine attributes, class 2/4.
    pub fn bcwd() -> Self {
        CsvSchema {
            has_header: false,
            label_column: 10,
            labels: LabelRule::Binary {
                positive: vec!["4".into()],
            },
            ignore_columns: vec![0],
            discrete_columns: vec![],
            missing_tokens: default_missing(),
            names: Some(
                [
                    "clump_thickness",
                    "cell_size_uniformity",
                    "cell_shape_uniformity",
                    "marginal_adhesion",
                    "single_epithelial_cell_size",
                    "bare_nuclei",
                    "bland_chromatin",
                    "normal_nucleoli",
                    "mitoses",
                ]
                .map(String::from)
                .to_vec(),
            ),
        }
    }

    /// UCI adult.data / adult.test.
    pub fn adult() -> Self {
        CsvSchema {
            has_header: false,
            label_column: 14,
            labels: LabelRule::Binary {
                positive: vec![">50K".into(), ">50K.".into()],
            },
            ignore_columns: vec![],
            discrete_columns: vec![1, 3, 5, 6, 7, 8, 9, 13],
            missing_tokens: default_missing(),
            names: Some(
                [
                    "age",
                    "workclass",
                    "fnlwgt",
                    "education",
                    "education_num",
                    "marital_status",
                    "occupation",
                    "relationship",
                    "race",
                    "sex",
                    "capital_gain",
                    "capital_loss",
                    "hours_per_week",
                    "native_country",
                ]
                .map(String::from)
                .to_vec(),
            ),
        }
    }

    /// UCI crx.data (credit approval).
    pub fn cad() -> Self {
        CsvSchema {
            has_header: false,
            label_column: 15,
            labels: LabelRule::Binary {
                positive: vec!["+".into()],
            },
            ignore_columns: vec![],
            discrete_columns: vec![0, 3, 4, 5, 6, 8, 9, 11, 12],
            missing_tokens: default_missing(),
            names: Some((1..=15).map(|i| format!("A{i}")).collect()),
        }
    }

    /// UCI car.data; "unacc" against the three acceptable classes.
    pub fn car() -> Self {
        CsvSchema {
            has_header: false,
            label_column: 6,
            labels: LabelRule::OneVsRest {
                positive: vec!["acc".into(), "good".into(), "vgood".into()],
            },
            ignore_columns: vec![],
            discrete_columns: vec![0, 1, 2, 3, 4, 5],
            missing_tokens: default_missing(),
            names: Some(
                ["buying", "maint", "doors", "persons", "lug_boot", "safety"]
                    .map(String::from)
                    .to_vec(),
            ),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "bcwd" => Some(Self::bcwd()),
            "adult" => Some(Self::adult()),
            "cad" => Some(Self::cad()),
            "car" => Some(Self::car()),
            _ => None,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset, HarnessError> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.as_ref().display())))?;
    let (data, stats) = read_csv(file, schema)?;
    if stats.rows_dropped > 0 {
        log::info!(
            "{}: dropped {} of {} rows with missing values",
            path.as_ref().display(),
            stats.rows_dropped,
            stats.rows_read
        );
    }
    Ok(data)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<(Dataset, LoadStats), HarnessError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Option<Vec<String>> = if schema.has_header {
        Some(
            rdr.headers()
                .map_err(|e| HarnessError::Csv(e.to_string()))?
                .iter()
                .map(String::from)
                .collect(),
        )
    } else {
        None
    };

    let mut stats = LoadStats::default();
    let mut kept: Vec<Vec<String>> = Vec::new();
    let mut width = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| HarnessError::Csv(e.to_string()))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        stats.rows_read += 1;
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(HarnessError::Csv(format!(
                "row {} has {} fields, expected {w}",
                stats.rows_read,
                rec.len()
            )));
        }
        if rec.iter().any(|f| schema.missing_tokens.iter().any(|t| t == f)) {
            stats.rows_dropped += 1;
            continue;
        }
        kept.push(rec.iter().map(String::from).collect());
    }
    let width = width.ok_or_else(|| HarnessError::Csv("no data rows".into()))?;
    if kept.is_empty() {
        return Err(HarnessError::Csv("every row has missing values".into()));
    }
    if schema.label_column >= width {
        return Err(HarnessError::Csv(format!(
            "label column {} out of range for {width} fields",
            schema.label_column
        )));
    }

    let columns: Vec<usize> = (0..width)
        .filter(|c| *c != schema.label_column && !schema.ignore_columns.contains(c))
        .collect();
    let mut attributes: Vec<AttributeMeta> = columns
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let name = header
                .as_ref()
                .map(|h| h[c].clone())
                .or_else(|| schema.names.as_ref().and_then(|n| n.get(k).cloned()))
                .unwrap_or_else(|| format!("a{k}"));
            if schema.discrete_columns.contains(&c) {
                AttributeMeta::discrete(name)
            } else {
                AttributeMeta::numeric(name)
            }
        })
        .collect();

    let positive = match &schema.labels {
        LabelRule::Binary { positive } | LabelRule::OneVsRest { positive } => positive,
    };
    if let LabelRule::Binary { .. } = schema.labels {
        let mut distinct: Vec<&str> = kept.iter().map(|r| r[schema.label_column].as_str()).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() > 2 {
            return Err(HarnessError::NonBinaryLabel(distinct.join(",")));
        }
    }

    let mut codes: Vec<HashMap<String, u32>> = vec![HashMap::new(); columns.len()];
    let mut rows = Vec::with_capacity(kept.len());
    let mut labels = Vec::with_capacity(kept.len());
    for (i, rec) in kept.iter().enumerate() {
        let mut row = Vec::with_capacity(columns.len());
        for (k, &c) in columns.iter().enumerate() {
            let field = &rec[c];
            let v = match attributes[k].kind {
                AttributeKind::Discrete => {
                    let next = codes[k].len() as u32;
                    *codes[k].entry(field.clone()).or_insert(next) as f64
                }
                AttributeKind::Numeric => field.parse::<f64>().map_err(|_| {
                    HarnessError::Csv(format!(
                        "row {}: `{field}` in column {c} is not numeric",
                        i + 1
                    ))
                })?,
            };
            row.push(v);
        }
        rows.push(row);
        labels.push(u8::from(positive.iter().any(|p| p == &rec[schema.label_column])));
    }
    for (meta, map) in attributes.iter_mut().zip(codes) {
        if meta.kind == AttributeKind::Discrete {
            meta.encoding = map.into_iter().collect::<BTreeMap<_, _>>();
        }
    }
    Ok((Dataset::new(rows, labels, attributes)?, stats))
}
