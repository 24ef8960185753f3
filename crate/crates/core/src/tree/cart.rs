use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_xy, TreeError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Columns drawn at each node; `None` means all of them.
    pub feature_subset_size: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_samples_leaf: 1,
            feature_subset_size: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub column: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

/// Every node records its sample count, mean target and variance; internal
/// nodes also carry the split and the variance decrease it achieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub n_samples: usize,
    pub value: f64,
    pub impurity: f64,
    pub impurity_decrease: f64,
    pub split: Option<SplitInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl RegressionTree {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut id = 0;
        loop {
            let node = &self.nodes[id];
            match node.split {
                Some(s) => id = if row[s.column] <= s.threshold { s.left } else { s.right },
                None => return node.value,
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>, TreeError> {
        if x.ncols() != self.n_features {
            return Err(TreeError::WidthMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        Ok(x.rows().into_iter().map(|r| self.predict_row(r)).collect())
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_some()).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &RegressionTree, id: usize) -> usize {
            match t.nodes[id].split {
                Some(s) => 1 + walk(t, s.left).max(walk(t, s.right)),
                None => 0,
            }
        }
        walk(self, 0)
    }
}

/// Per-column sorted distinct values and each row's rank among them.
/// Built once per design matrix and shared by every tree fitted on it.
pub(crate) struct SortedColumns {
    uniq: Vec<Vec<f64>>,
    rank: Vec<Vec<u32>>,
    /// Columns with exactly two distinct values.
    binary: Vec<bool>,
    /// Row-wise lists of the binary columns holding their upper value.
    row_ptr: Vec<usize>,
    row_cols: Vec<u32>,
}

impl SortedColumns {
    pub(crate) fn new(x: ArrayView2<'_, f64>) -> Self {
        let mut uniq = Vec::with_capacity(x.ncols());
        let mut rank = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mut u: Vec<f64> = col.to_vec();
            u.sort_by(f64::total_cmp);
            u.dedup();
            let r: Vec<u32> = col
                .iter()
                .map(|v| u.binary_search_by(|p| p.total_cmp(v)).expect("value present") as u32)
                .collect();
            uniq.push(u);
            rank.push(r);
        }
        let binary: Vec<bool> = uniq.iter().map(|u| u.len() == 2).collect();
        let mut row_ptr = Vec::with_capacity(x.nrows() + 1);
        let mut row_cols = Vec::new();
        row_ptr.push(0);
        for i in 0..x.nrows() {
            for (c, r) in rank.iter().enumerate() {
                if binary[c] && r[i] == 1 {
                    row_cols.push(c as u32);
                }
            }
            row_ptr.push(row_cols.len());
        }
        SortedColumns {
            uniq,
            rank,
            binary,
            row_ptr,
            row_cols,
        }
    }

    fn n_cols(&self) -> usize {
        self.uniq.len()
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    column: usize,
    /// Highest rank sent left.
    rank: u32,
    threshold: f64,
}

pub(crate) struct TreeBuilder<'a, R: Rng> {
    cols: &'a SortedColumns,
    y: ArrayView1<'a, f64>,
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    // Scratch buffers reused across nodes.
    hist_count: Vec<u32>,
    hist_sum: Vec<f64>,
    pairs: Vec<(u32, f64)>,
    spill: Vec<usize>,
    is_candidate: Vec<bool>,
    upper_count: Vec<u32>,
    upper_sum: Vec<f64>,
}

impl<'a, R: Rng> TreeBuilder<'a, R> {
    pub(crate) fn new(cols: &'a SortedColumns, y: ArrayView1<'a, f64>, params: TreeParams, rng: &'a mut R) -> Self {
        TreeBuilder {
            cols,
            y,
            params,
            rng,
            nodes: Vec::new(),
            hist_count: Vec::new(),
            hist_sum: Vec::new(),
            pairs: Vec::new(),
            spill: Vec::new(),
            is_candidate: Vec::new(),
            upper_count: Vec::new(),
            upper_sum: Vec::new(),
        }
    }

    /// Grow a tree on `samples`, which may repeat rows (bootstrap).
    pub(crate) fn build(mut self, samples: &mut [usize]) -> RegressionTree {
        self.grow(samples, 0);
        RegressionTree {
            nodes: self.nodes,
            n_features: self.cols.n_cols(),
            max_depth: self.params.max_depth,
            min_samples_leaf: self.params.min_samples_leaf,
        }
    }

    fn grow(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let n = samples.len();
        let mean = samples.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        let sse: f64 = samples.iter().map(|&i| (self.y[i] - mean).powi(2)).sum();
        let id = self.nodes.len();
        self.nodes.push(Node {
            n_samples: n,
            value: mean,
            impurity: sse / n as f64,
            impurity_decrease: 0.0,
            split: None,
        });

        let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(self.y[i]), hi.max(self.y[i]))
        });
        if depth >= self.params.max_depth || n < 2 * self.params.min_samples_leaf.max(1) || lo == hi {
            return id;
        }

        let Some(best) = self.best_split(samples, mean, sse) else {
            return id;
        };

        // Stable partition: ranks <= best.rank go left. Keeping rows in
        // ascending order makes the per-column rank lookups sequential.
        let rank = &self.cols.rank[best.column];
        self.spill.clear();
        let mut left_len = 0;
        for i in 0..n {
            let row = samples[i];
            if rank[row] <= best.rank {
                samples[left_len] = row;
                left_len += 1;
            } else {
                self.spill.push(row);
            }
        }
        samples[left_len..].copy_from_slice(&self.spill);
        let (left, right) = samples.split_at_mut(left_len);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        let node = &mut self.nodes[id];
        node.impurity_decrease = (best.gain / n as f64).max(0.0);
        node.split = Some(SplitInfo {
            column: best.column,
            threshold: best.threshold,
            left: l,
            right: r,
        });
        id
    }

    fn candidate_columns(&mut self) -> Vec<usize> {
        let d = self.cols.n_cols();
        match self.params.feature_subset_size {
            Some(m) if m < d => {
                let mut c = rand::seq::index::sample(self.rng, d, m).into_vec();
                c.sort_unstable();
                c
            }
            _ => (0..d).collect(),
        }
    }

    /// Count and centered target sum of the upper value of every candidate
    /// binary column, visiting only the columns active in each row.
    fn binary_stats(&mut self, samples: &[usize], mean: f64, candidates: &[usize]) {
        let d = self.cols.n_cols();
        self.is_candidate.clear();
        self.is_candidate.resize(d, false);
        self.upper_count.clear();
        self.upper_count.resize(d, 0);
        self.upper_sum.clear();
        self.upper_sum.resize(d, 0.0);
        let mut any = false;
        for &c in candidates {
            if self.cols.binary[c] {
                self.is_candidate[c] = true;
                any = true;
            }
        }
        if !any {
            return;
        }
        for &i in samples {
            let v = self.y[i] - mean;
            for &c in &self.cols.row_cols[self.cols.row_ptr[i]..self.cols.row_ptr[i + 1]] {
                let c = c as usize;
                if self.is_candidate[c] {
                    self.upper_count[c] += 1;
                    self.upper_sum[c] += v;
                }
            }
        }
    }

    fn best_split(&mut self, samples: &[usize], mean: f64, sse: f64) -> Option<Candidate> {
        let n = samples.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        // Gains within this margin of each other count as ties.
        let tol = 1e-10 * sse;
        let mut best: Option<Candidate> = None;
        let candidates = self.candidate_columns();
        let node_total: f64 = samples.iter().map(|&i| self.y[i] - mean).sum();
        self.binary_stats(samples, mean, &candidates);
        for column in candidates {
            let uniq = &self.cols.uniq[column];
            if self.cols.binary[column] {
                let n_upper = self.upper_count[column] as usize;
                let n_lower = n - n_upper;
                if n_lower < min_leaf || n_upper < min_leaf {
                    continue;
                }
                let s_upper = self.upper_sum[column];
                let s_lower = node_total - s_upper;
                let gain = s_lower * s_lower / n_lower as f64 + s_upper * s_upper / n_upper as f64
                    - node_total * node_total / n as f64;
                let better = match best {
                    None => gain > tol,
                    Some(b) => gain > b.gain + tol,
                };
                if better {
                    best = Some(Candidate {
                        gain,
                        column,
                        rank: 0,
                        threshold: 0.5 * (uniq[0] + uniq[1]),
                    });
                }
                continue;
            }
            let rank = &self.cols.rank[column];
            // (rank, count, centered sum) groups in ascending rank order.
            let groups: Vec<(u32, u32, f64)> = if uniq.len() <= 2 * n {
                let u = uniq.len();
                self.hist_count.clear();
                self.hist_count.resize(u, 0);
                self.hist_sum.clear();
                self.hist_sum.resize(u, 0.0);
                for &i in samples {
                    let r = rank[i] as usize;
                    self.hist_count[r] += 1;
                    self.hist_sum[r] += self.y[i] - mean;
                }
                (0..u)
                    .filter(|&r| self.hist_count[r] > 0)
                    .map(|r| (r as u32, self.hist_count[r], self.hist_sum[r]))
                    .collect()
            } else {
                self.pairs.clear();
                self.pairs.extend(samples.iter().map(|&i| (rank[i], self.y[i] - mean)));
                self.pairs.sort_unstable_by_key(|p| p.0);
                let mut g: Vec<(u32, u32, f64)> = Vec::new();
                for &(r, v) in &self.pairs {
                    match g.last_mut() {
                        Some(last) if last.0 == r => {
                            last.1 += 1;
                            last.2 += v;
                        }
                        _ => g.push((r, 1, v)),
                    }
                }
                g
            };
            if groups.len() < 2 {
                continue;
            }
            let total: f64 = groups.iter().map(|g| g.2).sum();
            let mut n_left = 0usize;
            let mut s_left = 0.0;
            for w in groups.windows(2) {
                let (r, c, s) = w[0];
                n_left += c as usize;
                s_left += s;
                let n_right = n - n_left;
                if n_left < min_leaf {
                    continue;
                }
                if n_right < min_leaf {
                    break;
                }
                let s_right = total - s_left;
                let gain =
                    s_left * s_left / n_left as f64 + s_right * s_right / n_right as f64 - total * total / n as f64;
                let better = match best {
                    None => gain > tol,
                    Some(b) => gain > b.gain + tol,
                };
                if better {
                    best = Some(Candidate {
                        gain,
                        column,
                        rank: r,
                        threshold: 0.5 * (uniq[r as usize] + uniq[w[1].0 as usize]),
                    });
                }
            }
        }
        best
    }
}

/// Fit a single tree on all rows of `x`.
pub fn fit_tree<R: Rng>(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    params: &TreeParams,
    rng: &mut R,
) -> Result<RegressionTree, TreeError> {
    check_xy(x, y)?;
    let needed = params.min_samples_leaf.max(1);
    if x.nrows() < needed {
        return Err(TreeError::TooFewSamples { needed, got: x.nrows() });
    }
    if let Some(m) = params.feature_subset_size {
        if m == 0 || m > x.ncols() {
            return Err(TreeError::BadFeatureCount { m, d: x.ncols() });
        }
    }
    let cols = SortedColumns::new(x);
    let mut samples: Vec<usize> = (0..x.nrows()).collect();
    Ok(TreeBuilder::new(&cols, y, *params, rng).build(&mut samples))
}
