use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeMeta {
    pub name: String,
    pub kind: AttributeKind,
    /// Category label to integer code, for discrete attributes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub encoding: BTreeMap<String, u32>,
}

impl AttributeMeta {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeMeta {
            name: name.into(),
            kind: AttributeKind::Numeric,
            encoding: BTreeMap::new(),
        }
    }

    pub fn discrete(name: impl Into<String>) -> Self {
        AttributeMeta {
            name: name.into(),
            kind: AttributeKind::Discrete,
            encoding: BTreeMap::new(),
        }
    }
}

/// Records with binary labels, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    labels: Vec<u8>,
    attributes: Vec<AttributeMeta>,
}

impl Dataset {
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
        attributes: Vec<AttributeMeta>,
    ) -> Result<Self, HarnessError> {
        let d = attributes.len();
        if rows.len() != labels.len() {
            return Err(HarnessError::Shape(format!(
                "{} records but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(HarnessError::NonBinaryLabel(bad.to_string()));
        }
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(HarnessError::Shape(format!(
                    "record {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(HarnessError::Shape(format!("record {i} has non-finite value {x}")));
            }
            values.extend(row);
        }
        Ok(Dataset {
            values,
            labels,
            attributes,
        })
    }

    /// Numeric attributes named `a0, a1, ...`.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self, HarnessError> {
        let d = rows.first().map_or(0, Vec::len);
        let attributes = (0..d).map(|j| AttributeMeta::numeric(format!("a{j}"))).collect();
        Self::new(rows, labels, attributes)
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.attributes.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.d();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.m()).map(move |i| self.row(i))
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn attributes(&self) -> &[AttributeMeta] {
        &self.attributes
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Same labels and metadata with replaced values.
    pub fn with_rows(&self, rows: Vec<Vec<f64>>) -> Result<Self, HarnessError> {
        Self::new(rows, self.labels.clone(), self.attributes.clone())
    }

    pub fn select_columns(&self, columns: &[usize]) -> Dataset {
        let rows = self
            .rows()
            .map(|r| columns.iter().map(|&j| r[j]).collect())
            .collect();
        let attributes = columns.iter().map(|&j| self.attributes[j].clone()).collect();
        Self::new(rows, self.labels.clone(), attributes).expect("subset of a valid dataset")
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let data = rows.iter().map(|&i| self.row(i).to_vec()).collect();
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Self::new(data, labels, self.attributes.clone()).expect("subset of a valid dataset")
    }

    /// Per-column minimum and maximum.
    pub fn column_ranges(&self) -> Vec<(f64, f64)> {
        (0..self.d())
            .map(|j| {
                self.rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[j]), hi.max(r[j]))
                })
            })
            .collect()
    }

    /// Min-max scaling with externally supplied ranges (typically from the
    /// training split), clamped to `[0, 1]`. Constant columns map to 0.
    pub fn normalized_with(&self, ranges: &[(f64, f64)]) -> Dataset {
        let rows = self
            .rows()
            .map(|r| {
                r.iter()
                    .zip(ranges)
                    .map(|(&x, &(lo, hi))| {
                        if hi > lo {
                            ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        self.with_rows(rows).expect("same shape")
    }

    /// Seeded shuffle, then the first `ceil(fraction * m)` records train.
    pub fn split_train_test(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset), HarnessError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(HarnessError::Parameter(format!("train fraction {fraction} not in (0, 1]")));
        }
        let mut idx: Vec<usize> = (0..self.m()).collect();
        idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
        let n_train = (fraction * self.m() as f64).ceil() as usize;
        let (train, test) = idx.split_at(n_train.min(self.m()));
        Ok((self.select_rows(train), self.select_rows(test)))
    }

    /// Horizontal partition into `parts` contiguous record blocks of
    /// near-equal size.
    pub fn partition_rows(&self, parts: usize) -> Vec<Dataset> {
        let parts = parts.max(1);
        let m = self.m();
        (0..parts)
            .map(|p| {
                let lo = p * m / parts;
                let hi = (p + 1) * m / parts;
                self.select_rows(&(lo..hi).collect::<Vec<_>>())
            })
            .collect()
    }

    /// Concatenates record blocks that share a schema.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset, HarnessError> {
        let first = parts
            .first()
            .ok_or_else(|| HarnessError::Parameter("nothing to concatenate".into()))?;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            if p.d() != first.d() {
                return Err(HarnessError::Shape("column counts differ".into()));
            }
            rows.extend(p.to_rows());
            labels.extend_from_slice(p.labels());
        }
        Dataset::new(rows, labels, first.attributes.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_rows(
            vec![vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0], vec![4.0, 40.0], vec![5.0, 50.0]],
            vec![0, 1, 0, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn accessors() {
        let d = toy();
        assert_eq!((d.m(), d.d()), (5, 2));
        assert_eq!(d.row(2), &[3.0, 30.0]);
        assert_eq!(d.column(1), vec![10.0, 20.0, 30.0, 40.0, 50.0]);
        assert_eq!(d.select_columns(&[1]).row(0), &[10.0]);
        assert_eq!(d.column_ranges(), vec![(1.0, 5.0), (10.0, 50.0)]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Dataset::from_rows(vec![vec![1.0]], vec![2]).is_err());
        assert!(Dataset::from_rows(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1]).is_err());
        assert!(Dataset::from_rows(vec![vec![f64::NAN]], vec![0]).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = toy();
        let (tr, te) = d.split_train_test(0.8, 7).unwrap();
        assert_eq!((tr.m(), te.m()), (4, 1));
        let (tr2, _) = d.split_train_test(0.8, 7).unwrap();
        assert_eq!(tr, tr2);
    }

    #[test]
    fn normalization_and_partition() {
        let d = toy();
        let n = d.normalized_with(&d.column_ranges());
        assert_eq!(n.column(0), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let parts = d.partition_rows(2);
        assert_eq!(parts.iter().map(Dataset::m).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(Dataset::concat(&parts).unwrap(), d);
    }
}
