//! Training/evaluation datasets: pairs of edge-distance inputs and binary
//! edge labels, with JSON (de)serialization.

use crate::error::{Error, Result};
use crate::graph::{edge_count, EdgeVector};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// `T` pairs `(e, a)` of distance inputs and binary labels on `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    n: usize,
    pairs: Vec<(EdgeVector<T>, EdgeVector<T>)>,
}

impl<T: Real> Dataset<T> {
    pub fn new(n: usize, pairs: Vec<(EdgeVector<T>, EdgeVector<T>)>) -> Result<Self> {
        for (e, a) in &pairs {
            if e.n() != n || a.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: edge_count(n),
                    got: e.len().min(a.len()),
                });
            }
            if e.values().iter().any(|x| *x < T::zero()) {
                return Err(Error::Precondition("distances must be non-negative".into()));
            }
            if a
                .values()
                .iter()
                .any(|x| *x != T::zero() && *x != T::one())
            {
                return Err(Error::Precondition("labels must be binary".into()));
            }
        }
        Ok(Dataset { n, pairs })
    }

    pub fn empty(n: usize) -> Self {
        Dataset { n, pairs: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(EdgeVector<T>, EdgeVector<T>)] {
        &self.pairs
    }

    pub fn inputs(&self) -> impl Iterator<Item = &EdgeVector<T>> {
        self.pairs.iter().map(|(e, _)| e)
    }

    pub fn labels(&self) -> impl Iterator<Item = &EdgeVector<T>> {
        self.pairs.iter().map(|(_, a)| a)
    }

    /// Mean edge density of the labels across all pairs.
    pub fn mean_label_density(&self) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .labels()
            .map(|a| {
                a.values()
                    .iter()
                    .map(|x| x.to_f64().unwrap())
                    .sum::<f64>()
                    / a.len() as f64
            })
            .sum();
        total / self.pairs.len() as f64
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    n: usize,
    #[serde(rename = "T")]
    t: usize,
    ordering: String,
    pairs: Vec<PairFile>,
}

#[derive(Serialize, Deserialize)]
struct PairFile {
    e: Vec<f64>,
    a: Vec<u8>,
}

const ORDERING: &str = "upper-row-major";

impl<T: Real> Dataset<T> {
    pub fn to_json(&self) -> String {
        let file = DatasetFile {
            n: self.n,
            t: self.pairs.len(),
            ordering: ORDERING.to_string(),
            pairs: self
                .pairs
                .iter()
                .map(|(e, a)| PairFile {
                    e: e.values().iter().map(|x| x.to_f64().unwrap()).collect(),
                    a: a.values()
                        .iter()
                        .map(|x| if *x == T::one() { 1 } else { 0 })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("dataset serialization cannot fail")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let file: DatasetFile =
            serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
        if file.ordering != ORDERING {
            return Err(Error::Precondition(format!(
                "{origin}: unsupported edge ordering '{}'",
                file.ordering
            )));
        }
        let pairs = file
            .pairs
            .into_iter()
            .map(|p| {
                let e = EdgeVector::new(p.e.iter().map(|&x| T::of(x)).collect(), file.n)?;
                let a = EdgeVector::new(
                    p.a.iter().map(|&x| T::of(x as f64)).collect(),
                    file.n,
                )?;
                Ok((e, a))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(file.n, pairs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}
