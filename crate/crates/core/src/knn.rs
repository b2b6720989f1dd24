//! k-nearest-neighbour classification of labelled benchmarks, with and
//! without a transductive denoising pass over all features.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{parse_row, PointCloud};
use crate::error::{Result, SameError};
use crate::estimator::{run_same, SameConfig};
use crate::linalg::dist_sq;
use crate::rng::{derive_seed, stream_rng, TAG_SPLIT};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub features: PointCloud,
    /// Each label is `-1` or `+1`.
    pub labels: Vec<i8>,
    pub name: String,
}

impl LabeledDataset {
    pub fn new(features: PointCloud, labels: Vec<i8>, name: impl Into<String>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(SameError::DimensionMismatch {
                expected: features.len(),
                found: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(SameError::param("labels", format!("must be -1 or +1, found {bad}")));
        }
        Ok(Self {
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Reads a CSV with `D` feature columns followed by a label column in
/// `{-1, 1}`. Blank lines are skipped; errors carry 1-based line numbers.
pub fn read_benchmark<R: BufRead>(input: R, name: &str) -> Result<LabeledDataset> {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(&line, lineno)?;
        if row.len() < 2 {
            return Err(SameError::Parse {
                line: lineno,
                reason: "need at least one feature and a label".into(),
            });
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(SameError::Parse {
                    line: lineno,
                    reason: format!("expected {w} fields, found {}", row.len()),
                })
            }
            _ => {}
        }
        let label = row[row.len() - 1];
        let label = if label == 1.0 {
            1
        } else if label == -1.0 {
            -1
        } else {
            return Err(SameError::Parse {
                line: lineno,
                reason: format!("label must be -1 or 1, found {label}"),
            });
        };
        data.extend_from_slice(&row[..row.len() - 1]);
        labels.push(label);
    }
    let dim = width.map(|w| w - 1).ok_or_else(|| SameError::EmptySet("benchmark file has no rows".into()))?;
    LabeledDataset::new(PointCloud::new(dim, data)?, labels, name)
}

pub fn load_benchmark(path: &Path) -> Result<LabeledDataset> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
    read_benchmark(BufReader::new(File::open(path)?), &name)
}

fn default_train() -> usize {
    100
}

fn default_test() -> usize {
    1400
}

/// Seeded uniform train/test split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    #[serde(default = "default_train")]
    pub n_train: usize,
    #[serde(default = "default_test")]
    pub n_test: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            n_train: default_train(),
            n_test: default_test(),
            seed,
        }
    }

    /// `(train, test)` index lists drawn without replacement from `0..n`.
    pub fn indices(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if self.n_train == 0 || self.n_train + self.n_test > n {
            return Err(SameError::param(
                "split",
                format!("need 1 <= n_train and n_train + n_test <= {n}, got {} + {}", self.n_train, self.n_test),
            ));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut stream_rng(derive_seed(self.seed, TAG_SPLIT), 0));
        let test = idx[self.n_train..self.n_train + self.n_test].to_vec();
        idx.truncate(self.n_train);
        Ok((idx, test))
    }
}

/// Train indices ordered by `(distance, index)`, truncated to `k`.
fn nearest(train: &PointCloud, q: &[f64], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = train.iter().enumerate().map(|(j, p)| (dist_sq(p, q), j)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_unstable_by(cmp);
    d.into_iter().map(|(_, j)| j).collect()
}

fn vote(labels: &[i8], nbrs: &[usize]) -> i8 {
    let s: i64 = nbrs.iter().map(|&j| labels[j] as i64).sum();
    if s >= 0 {
        1
    } else {
        -1
    }
}

/// Majority vote over the `k` nearest training points (Euclidean). Distance
/// ties go to the lower training index, vote ties to `+1`.
pub fn knn_classify(train: &LabeledDataset, test: &PointCloud, k: usize) -> Result<Vec<i8>> {
    if train.is_empty() {
        return Err(SameError::EmptySet("training set is empty".into()));
    }
    if k == 0 || k > train.len() {
        return Err(SameError::param("k", format!("need 1 <= k <= {}", train.len())));
    }
    Ok((0..test.len())
        .into_par_iter()
        .map(|i| vote(&train.labels, &nearest(&train.features, test.point(i), k)))
        .collect())
}

/// Test error for every `k` of `k_grid`, sharing one neighbour ordering per
/// test point.
pub fn knn_error_curve(train: &LabeledDataset, test: &LabeledDataset, k_grid: &[usize]) -> Result<Vec<(usize, f64)>> {
    let kmax = *k_grid.iter().max().ok_or_else(|| SameError::param("k_grid", "must not be empty"))?;
    if train.is_empty() || test.is_empty() {
        return Err(SameError::EmptySet("train and test sets must be non-empty".into()));
    }
    if k_grid.contains(&0) || kmax > train.len() {
        return Err(SameError::param("k_grid", format!("entries must lie in 1..={}", train.len())));
    }
    let orders: Vec<Vec<usize>> = (0..test.len())
        .into_par_iter()
        .map(|i| nearest(&train.features, test.features.point(i), kmax))
        .collect();
    Ok(k_grid
        .iter()
        .map(|&k| {
            let wrong = orders
                .iter()
                .zip(&test.labels)
                .filter(|(o, &l)| vote(&train.labels, &o[..k]) != l)
                .count();
            (k, wrong as f64 / test.len() as f64)
        })
        .collect())
}

fn best(curve: &[(usize, f64)]) -> (usize, f64) {
    // First minimum, so ties go to the smallest k.
    curve
        .iter()
        .copied()
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnReport {
    pub schema: String,
    pub dataset: String,
    pub n: usize,
    pub dim: usize,
    pub split: SplitSpec,
    pub same: SameConfig,
    pub best_k_raw: usize,
    pub err_raw: f64,
    pub best_k_denoised: usize,
    pub err_denoised: f64,
    pub curve_raw: Vec<(usize, f64)>,
    pub curve_denoised: Vec<(usize, f64)>,
    pub fallback_count: usize,
}

fn subset(data: &LabeledDataset, features: &PointCloud, idx: &[usize]) -> LabeledDataset {
    LabeledDataset {
        features: features.select(idx),
        labels: idx.iter().map(|&i| data.labels[i]).collect(),
        name: data.name.clone(),
    }
}

/// Best-`k` test error before and after denoising all features (train and
/// test alike, labels unused) with the estimator.
pub fn denoise_then_knn(
    data: &LabeledDataset,
    split: &SplitSpec,
    same: &SameConfig,
    k_grid: &[usize],
) -> Result<KnnReport> {
    let (train_idx, test_idx) = split.indices(data.len())?;
    let trace = run_same(&data.features, same, None)?;
    let denoised = trace.estimates();
    let curve_raw = knn_error_curve(
        &subset(data, &data.features, &train_idx),
        &subset(data, &data.features, &test_idx),
        k_grid,
    )?;
    let curve_denoised = knn_error_curve(
        &subset(data, denoised, &train_idx),
        &subset(data, denoised, &test_idx),
        k_grid,
    )?;
    let (best_k_raw, err_raw) = best(&curve_raw);
    let (best_k_denoised, err_denoised) = best(&curve_denoised);
    Ok(KnnReport {
        schema: "knn_v1".into(),
        dataset: data.name.clone(),
        n: data.len(),
        dim: data.features.dim(),
        split: *split,
        same: same.clone(),
        best_k_raw,
        err_raw,
        best_k_denoised,
        err_denoised,
        curve_raw,
        curve_denoised,
        fallback_count: trace.fallback_count(),
    })
}
