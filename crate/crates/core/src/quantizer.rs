//! One-dimensional k-means quantization.
//!
//! Samples are collapsed into a sorted table of distinct values with
//! multiplicities, so each Lloyd pass is a single merge-style sweep over the
//! distinct values (`O(d + k)`) instead of an `O(n k)` scan. 8-bit rasters
//! build that table with a counting sort.
//!
//! Cluster labels are 1-based (`1..=k`), matching the combined crisp
//! indicator convention used by [`crate::indicators`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizeError {
    #[error("signal is empty")]
    EmptySignal,
    #[error("non-finite value {value} at index {index}")]
    NonFiniteValue { index: usize, value: f64 },
    #[error("cluster count must be at least 1")]
    InvalidK,
    #[error("cannot form {k} clusters from {distinct} distinct values")]
    DegenerateK { k: usize, distinct: usize },
    #[error("length mismatch: signal has {signal} samples, labels {labels}")]
    LengthMismatch { signal: usize, labels: usize },
    #[error("label {label} at index {index} is outside 1..={k}")]
    InvalidLabel {
        index: usize,
        label: usize,
        k: usize,
    },
    #[error("Lloyd iteration did not converge within {0} iterations")]
    NotConverged(usize),
}

/// A finite, non-empty sequence of real samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self, QuantizeError> {
        if values.is_empty() {
            return Err(QuantizeError::EmptySignal);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(QuantizeError::NonFiniteValue { index, value });
        }
        Ok(Signal(values))
    }

    pub fn from_u8(values: &[u8]) -> Result<Self, QuantizeError> {
        Signal::new(values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for Signal {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// How the Lloyd iteration is seeded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Centroids at the sample quantiles `(j - 0.5) / k`, `j = 1..=k`.
    Quantile,
    /// Centroids of the SSE-optimal contiguous partition of the sorted
    /// distinct values (dynamic programming, `O(k d^2)`).
    OptimalPartition,
    /// `OptimalPartition` when the number of distinct values is at most
    /// [`QuantizeOptions::exact_partition_limit`], `Quantile` otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizeOptions {
    pub init: Init,
    pub max_iterations: usize,
    pub exact_partition_limit: usize,
}

impl Default for QuantizeOptions {
    fn default() -> Self {
        QuantizeOptions {
            init: Init::Auto,
            max_iterations: 200,
            exact_partition_limit: 2048,
        }
    }
}

impl QuantizeOptions {
    pub fn with_init(init: Init) -> Self {
        QuantizeOptions {
            init,
            ..Default::default()
        }
    }
}

/// A converged k-means quantization of a signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantization {
    pub k: usize,
    /// Strictly increasing.
    pub centroids: Vec<f64>,
    /// Per-sample cluster label in `1..=k`.
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared errors of the final partition.
    pub sse: f64,
    /// SSE after every centroid update, in iteration order.
    pub sse_history: Vec<f64>,
    /// Number of assignment passes performed.
    pub iterations: usize,
}

impl Quantization {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of samples in each cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l - 1] += 1;
        }
        sizes
    }
}

/// Sorted distinct sample values with multiplicities, plus the map from each
/// sample back to its distinct value.
struct ValueTable {
    values: Vec<f64>,
    weights: Vec<u64>,
    sample_slot: Vec<u32>,
}

impl ValueTable {
    fn from_f64(samples: &[f64]) -> Self {
        let mut order: Vec<u32> = (0..samples.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| samples[a as usize].total_cmp(&samples[b as usize]));
        let mut values = Vec::new();
        let mut weights: Vec<u64> = Vec::new();
        let mut sample_slot = vec![0u32; samples.len()];
        for &i in &order {
            let v = samples[i as usize];
            if values.last() != Some(&v) {
                values.push(v);
                weights.push(0);
            }
            *weights.last_mut().unwrap() += 1;
            sample_slot[i as usize] = (values.len() - 1) as u32;
        }
        ValueTable {
            values,
            weights,
            sample_slot,
        }
    }

    fn from_u8(samples: &[u8]) -> Self {
        let mut counts = [0u64; 256];
        for &s in samples {
            counts[s as usize] += 1;
        }
        let mut slot_of = [0u32; 256];
        let mut values = Vec::new();
        let mut weights = Vec::new();
        for (v, &c) in counts.iter().enumerate() {
            if c > 0 {
                slot_of[v] = values.len() as u32;
                values.push(v as f64);
                weights.push(c);
            }
        }
        let sample_slot = samples.iter().map(|&s| slot_of[s as usize]).collect();
        ValueTable {
            values,
            weights,
            sample_slot,
        }
    }

    fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// Value of the sample at position `rank` of the fully sorted signal.
    fn sorted_sample(&self, rank: u64) -> f64 {
        let mut seen = 0;
        for (v, &w) in self.values.iter().zip(&self.weights) {
            seen += w;
            if rank < seen {
                return *v;
            }
        }
        *self.values.last().unwrap()
    }
}

/// Quantizes `signal` into `k` clusters.
pub fn kmeans_quantize(
    signal: &Signal,
    k: usize,
    options: &QuantizeOptions,
) -> Result<Quantization, QuantizeError> {
    let table = ValueTable::from_f64(signal.values());
    let mut q = quantize_table(&table, k, options)?;
    q.sse = sse(signal, &q)?;
    Ok(q)
}

/// Same as [`kmeans_quantize`] on the 8-bit samples converted to reals, with
/// the distinct-value table built by counting sort.
pub fn kmeans_quantize_u8(
    samples: &[u8],
    k: usize,
    options: &QuantizeOptions,
) -> Result<Quantization, QuantizeError> {
    if samples.is_empty() {
        return Err(QuantizeError::EmptySignal);
    }
    let table = ValueTable::from_u8(samples);
    let mut q = quantize_table(&table, k, options)?;
    q.sse = q.sse_history.last().copied().unwrap_or(0.0);
    Ok(q)
}

/// Sum of squared distances from each sample to its labeled centroid.
pub fn sse(signal: &Signal, q: &Quantization) -> Result<f64, QuantizeError> {
    let values = signal.values();
    if values.len() != q.labels.len() {
        return Err(QuantizeError::LengthMismatch {
            signal: values.len(),
            labels: q.labels.len(),
        });
    }
    let mut total = 0.0;
    for (index, (&v, &label)) in values.iter().zip(&q.labels).enumerate() {
        if label == 0 || label > q.centroids.len() {
            return Err(QuantizeError::InvalidLabel {
                index,
                label,
                k: q.centroids.len(),
            });
        }
        let d = v - q.centroids[label - 1];
        total += d * d;
    }
    Ok(total)
}

fn quantize_table(
    table: &ValueTable,
    k: usize,
    options: &QuantizeOptions,
) -> Result<Quantization, QuantizeError> {
    if k == 0 {
        return Err(QuantizeError::InvalidK);
    }
    let d = table.values.len();
    if d < k {
        return Err(QuantizeError::DegenerateK { k, distinct: d });
    }
    let use_partition = match options.init {
        Init::Quantile => false,
        Init::OptimalPartition => true,
        Init::Auto => d <= options.exact_partition_limit,
    };
    let init = if use_partition {
        optimal_partition_centroids(&table.values, &table.weights, k)
    } else {
        quantile_centroids(table, k)
    };
    let fit = lloyd(&table.values, &table.weights, init, options.max_iterations)?;

    let labels = table
        .sample_slot
        .iter()
        .map(|&s| fit.slot_labels[s as usize] + 1)
        .collect();
    Ok(Quantization {
        k,
        centroids: fit.centroids,
        labels,
        sse: fit.sse_history.last().copied().unwrap_or(0.0),
        sse_history: fit.sse_history,
        iterations: fit.iterations,
    })
}

fn quantile_centroids(table: &ValueTable, k: usize) -> Vec<f64> {
    let n = table.total_weight();
    (1..=k)
        .map(|j| {
            let pos = ((j as f64 - 0.5) / k as f64 * n as f64).floor() as u64;
            table.sorted_sample(pos.min(n - 1))
        })
        .collect()
}

/// Centroids of the contiguous k-partition of the sorted distinct values that
/// minimises the weighted SSE. Requires `values.len() >= k`.
#[allow(clippy::needless_range_loop)]
fn optimal_partition_centroids(values: &[f64], weights: &[u64], k: usize) -> Vec<f64> {
    let d = values.len();
    let total_w: f64 = weights.iter().map(|&w| w as f64).sum();
    let shift = values
        .iter()
        .zip(weights)
        .map(|(&v, &w)| v * w as f64)
        .sum::<f64>()
        / total_w;

    // prefix sums of w, w*x, w*x^2 over the centered values
    let mut s0 = vec![0.0; d + 1];
    let mut s1 = vec![0.0; d + 1];
    let mut s2 = vec![0.0; d + 1];
    for i in 0..d {
        let w = weights[i] as f64;
        let x = values[i] - shift;
        s0[i + 1] = s0[i] + w;
        s1[i + 1] = s1[i] + w * x;
        s2[i + 1] = s2[i] + w * x * x;
    }
    // cost of the block of distinct values a..b (half-open)
    let cost = |a: usize, b: usize| {
        let w = s0[b] - s0[a];
        let m = s1[b] - s1[a];
        (s2[b] - s2[a] - m * m / w).max(0.0)
    };

    // best[m][i]: min cost of splitting the first i values into m + 1 blocks
    let mut best = vec![vec![f64::INFINITY; d + 1]; k];
    let mut split = vec![vec![0usize; d + 1]; k];
    for i in 1..=d {
        best[0][i] = cost(0, i);
    }
    for m in 1..k {
        for i in (m + 1)..=d {
            let mut b = f64::INFINITY;
            let mut arg = m;
            for j in m..i {
                let c = best[m - 1][j] + cost(j, i);
                if c < b {
                    b = c;
                    arg = j;
                }
            }
            best[m][i] = b;
            split[m][i] = arg;
        }
    }

    let mut bounds = vec![d; k + 1];
    bounds[0] = 0;
    let mut end = d;
    for m in (1..k).rev() {
        let start = split[m][end];
        bounds[m] = start;
        end = start;
    }
    (0..k)
        .map(|m| {
            block_mean(
                &values[bounds[m]..bounds[m + 1]],
                &weights[bounds[m]..bounds[m + 1]],
            )
        })
        .collect()
}

fn block_mean(values: &[f64], weights: &[u64]) -> f64 {
    let mut sum = 0.0;
    let mut w = 0u64;
    for (&v, &c) in values.iter().zip(weights) {
        sum += v * c as f64;
        w += c;
    }
    sum / w as f64
}

struct LloydFit {
    centroids: Vec<f64>,
    slot_labels: Vec<usize>,
    sse_history: Vec<f64>,
    iterations: usize,
}

/// Nearest-centroid assignment of ascending `values` to ascending
/// `centroids`, ties to the lower index. Labels are 0-based.
fn assign_sorted(values: &[f64], centroids: &[f64], labels: &mut [usize]) {
    let k = centroids.len();
    let mut j = 0;
    for (label, &v) in labels.iter_mut().zip(values) {
        loop {
            let mut next = j + 1;
            while next < k && centroids[next] == centroids[j] {
                next += 1;
            }
            if next < k && (v - centroids[next]).abs() < (v - centroids[j]).abs() {
                j = next;
            } else {
                break;
            }
        }
        *label = j;
    }
}

fn weighted_sse(values: &[f64], weights: &[u64], labels: &[usize], centroids: &[f64]) -> f64 {
    values
        .iter()
        .zip(weights)
        .zip(labels)
        .map(|((&v, &w), &l)| {
            let e = v - centroids[l];
            w as f64 * e * e
        })
        .sum()
}

fn lloyd(
    values: &[f64],
    weights: &[u64],
    mut centroids: Vec<f64>,
    max_iterations: usize,
) -> Result<LloydFit, QuantizeError> {
    let k = centroids.len();
    let mut labels = vec![0usize; values.len()];
    let mut previous: Option<Vec<usize>> = None;
    let mut sse_history = Vec::new();

    for iteration in 1..=max_iterations {
        assign_sorted(values, &centroids, &mut labels);

        let mut counts = vec![0u64; k];
        for (&l, &w) in labels.iter().zip(weights) {
            counts[l] += w;
        }
        if counts.contains(&0) {
            reseed_empty(values, &mut centroids, &mut labels, &counts);
            previous = None;
            continue;
        }

        if previous.as_deref() == Some(labels.as_slice()) {
            if centroids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(QuantizeError::DegenerateK {
                    k,
                    distinct: values.len(),
                });
            }
            return Ok(LloydFit {
                centroids,
                slot_labels: labels,
                sse_history,
                iterations: iteration,
            });
        }

        let mut sums = vec![0.0; k];
        for ((&v, &w), &l) in values.iter().zip(weights).zip(&labels) {
            sums[l] += v * w as f64;
        }
        for j in 0..k {
            centroids[j] = sums[j] / counts[j] as f64;
        }
        sse_history.push(weighted_sse(values, weights, &labels, &centroids));
        previous = Some(labels.clone());
    }
    Err(QuantizeError::NotConverged(max_iterations))
}

/// Moves each empty cluster's centroid onto the value farthest from its
/// current centroid, then restores ascending centroid order.
fn reseed_empty(values: &[f64], centroids: &mut [f64], labels: &mut [usize], counts: &[u64]) {
    for (j, _) in counts.iter().enumerate().filter(|(_, &c)| c == 0) {
        let mut far = 0;
        let mut far_dist = -1.0;
        for (i, &v) in values.iter().enumerate() {
            let dist = (v - centroids[labels[i]]).abs();
            if dist > far_dist {
                far_dist = dist;
                far = i;
            }
        }
        centroids[j] = values[far];
        labels[far] = j;
    }
    centroids.sort_by(f64::total_cmp);
}
