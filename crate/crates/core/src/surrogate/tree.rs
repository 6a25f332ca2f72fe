//! Squared-error regression trees shared by the forest and boosting models.
//!
//! Splits are searched over binned feature values. Bit features have a single
//! threshold (0.5); dense features get up to `max_bins` quantile bins. Among
//! equal-gain candidates the lowest feature index, then the lowest threshold,
//! wins.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub(crate) enum Node {
    Leaf { value: f64 },
    Split { feature: u32, threshold: f32, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, x: &FeatureMatrix, row: usize) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x.value(row, feature as usize) <= threshold { left } else { right } as usize;
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Feature values mapped to small integer bins for split search.
pub(crate) struct Binned<'a> {
    x: &'a FeatureMatrix,
    dense: Option<DenseBins>,
}

struct DenseBins {
    /// Row-major bin index per value.
    bins: Vec<u8>,
    /// Ascending thresholds per feature; bin `b` holds values in
    /// `(thresholds[b-1], thresholds[b]]`.
    thresholds: Vec<Vec<f32>>,
}

impl<'a> Binned<'a> {
    pub fn new(x: &'a FeatureMatrix, max_bins: usize) -> Self {
        if x.is_binary() {
            return Binned { x, dense: None };
        }
        let (n, d) = (x.rows(), x.cols());
        let max_bins = max_bins.clamp(2, 256);
        let thresholds: Vec<Vec<f32>> = (0..d)
            .map(|f| {
                let mut col: Vec<f32> = (0..n).map(|r| x.value(r, f)).collect();
                col.sort_by(f32::total_cmp);
                col.dedup();
                let picks: Vec<usize> = if col.len() <= max_bins {
                    (0..col.len().saturating_sub(1)).collect()
                } else {
                    let mut p: Vec<usize> =
                        (1..max_bins).map(|q| (q * col.len() / max_bins).min(col.len() - 2)).collect();
                    p.dedup();
                    p
                };
                picks
                    .into_iter()
                    .map(|k| {
                        let (a, b) = (col[k], col[k + 1]);
                        let mid = a + (b - a) / 2.0;
                        if mid >= b { a } else { mid }
                    })
                    .collect()
            })
            .collect();
        let mut bins = vec![0u8; n * d];
        for r in 0..n {
            for f in 0..d {
                let v = x.value(r, f);
                bins[r * d + f] = thresholds[f].partition_point(|&t| t < v) as u8;
            }
        }
        Binned { x, dense: Some(DenseBins { bins, thresholds }) }
    }

    fn cols(&self) -> usize {
        self.x.cols()
    }

    fn threshold(&self, f: usize, bin: usize) -> f32 {
        match &self.dense {
            None => 0.5,
            Some(d) => d.thresholds[f][bin],
        }
    }

    fn goes_left(&self, row: u32, f: usize, bin: usize) -> bool {
        match &self.dense {
            None => self.x.bit_words(row as usize)[f / 64] >> (f % 64) & 1 == 0,
            Some(d) => usize::from(d.bins[row as usize * self.cols() + f]) <= bin,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub max_leaves: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all.
    pub max_features: Option<usize>,
    /// Only split when the variance reduction is strictly positive. When
    /// false, any impure node is split by its best valid partition.
    pub require_gain: bool,
}

#[derive(Debug, Clone, Copy)]
struct SplitChoice {
    feature: usize,
    bin: usize,
    gain: f64,
}

impl SplitChoice {
    fn beats(&self, other: &Option<SplitChoice>) -> bool {
        match other {
            None => true,
            Some(o) => match self.gain.total_cmp(&o.gain) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => (self.feature, self.bin) < (o.feature, o.bin),
            },
        }
    }
}

struct Candidate {
    node: usize,
    rows: Vec<u32>,
    depth: usize,
    split: SplitChoice,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // max-heap: larger gain first, then earlier node
    fn cmp(&self, other: &Self) -> Ordering {
        self.split.gain.total_cmp(&other.split.gain).then(other.node.cmp(&self.node))
    }
}

struct Grower<'a, 'b> {
    binned: &'a Binned<'b>,
    weights: &'a [f64],
    targets: &'a [f64],
    params: &'a GrowParams,
    // sparse accumulators for bit features
    count: Vec<u32>,
    wsum: Vec<f64>,
    ysum: Vec<f64>,
    touched: Vec<u32>,
    order: Vec<usize>,
}

struct NodeSummary {
    w: f64,
    s: f64,
    value: f64,
    pure: bool,
}

impl Grower<'_, '_> {
    fn summarize(&self, rows: &[u32]) -> NodeSummary {
        let (mut w, mut s) = (0.0, 0.0);
        for &r in rows {
            let wi = self.weights[r as usize];
            w += wi;
            s += wi * self.targets[r as usize];
        }
        let first = self.targets[rows[0] as usize];
        let pure = rows.iter().all(|&r| self.targets[r as usize] == first);
        let value = if pure { first } else { s / w };
        NodeSummary { w, s, value, pure }
    }

    fn best_split(&mut self, rows: &[u32], depth: usize, summary: &NodeSummary, rng: &mut ChaCha8Rng) -> Option<SplitChoice> {
        let p = self.params;
        let n = rows.len();
        if summary.pure || n < 2 * p.min_samples_leaf.max(1) || p.max_depth.is_some_and(|m| depth >= m) {
            return None;
        }
        let d = self.binned.cols();
        let parent = summary.s * summary.s / summary.w;
        let min_leaf = p.min_samples_leaf.max(1);
        let mut best: Option<SplitChoice> = None;

        let consider = |best: &mut Option<SplitChoice>, feature: usize, bin: usize, left: (f64, f64, usize)| {
            let (wl, sl, nl) = left;
            let (wr, sr, nr) = (summary.w - wl, summary.s - sl, n - nl);
            if nl < min_leaf || nr < min_leaf || wl <= 0.0 || wr <= 0.0 {
                return;
            }
            let gain = sl * sl / wl + sr * sr / wr - parent;
            let choice = SplitChoice { feature, bin, gain };
            if choice.beats(best) {
                *best = Some(choice);
            }
        };

        let binary = self.binned.dense.is_none();
        if binary {
            for &r in rows {
                let (wi, yi) = (self.weights[r as usize], self.targets[r as usize]);
                for (wi_idx, &word) in self.binned.x.bit_words(r as usize).iter().enumerate() {
                    let mut rest = word;
                    while rest != 0 {
                        let f = wi_idx * 64 + rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        if self.count[f] == 0 {
                            self.touched.push(f as u32);
                        }
                        self.count[f] += 1;
                        self.wsum[f] += wi;
                        self.ysum[f] += wi * yi;
                    }
                }
            }
        }
        let non_constant = |g: &Self, f: usize, hist: &[(f64, f64, usize)]| -> bool {
            if binary {
                let c = g.count[f] as usize;
                c > 0 && c < n
            } else {
                hist.iter().filter(|h| h.2 > 0).count() > 1
            }
        };

        let budget = p.max_features.map_or(d, |m| m.min(d));
        let mut visited = 0usize;
        let mut hist: Vec<(f64, f64, usize)> = Vec::new();
        self.order.clear();
        self.order.extend(0..d);
        for i in 0..d {
            if visited >= budget {
                break;
            }
            let f = if budget < d {
                let j = rng.random_range(i..d);
                self.order.swap(i, j);
                self.order[i]
            } else {
                i
            };
            if binary {
                if !non_constant(self, f, &hist) {
                    continue;
                }
                visited += 1;
                // bit 0 goes left
                let left = (summary.w - self.wsum[f], summary.s - self.ysum[f], n - self.count[f] as usize);
                consider(&mut best, f, 0, left);
            } else {
                let dense = self.binned.dense.as_ref().expect("dense bins");
                let nb = dense.thresholds[f].len() + 1;
                hist.clear();
                hist.resize(nb, (0.0, 0.0, 0));
                for &r in rows {
                    let b = usize::from(dense.bins[r as usize * d + f]);
                    let wi = self.weights[r as usize];
                    let h = &mut hist[b];
                    h.0 += wi;
                    h.1 += wi * self.targets[r as usize];
                    h.2 += 1;
                }
                if !non_constant(self, f, &hist) {
                    continue;
                }
                visited += 1;
                let mut acc = (0.0, 0.0, 0usize);
                for (b, h) in hist[..nb - 1].iter().enumerate() {
                    acc = (acc.0 + h.0, acc.1 + h.1, acc.2 + h.2);
                    if h.2 > 0 {
                        consider(&mut best, f, b, acc);
                    }
                }
            }
        }
        for &f in &self.touched {
            let f = f as usize;
            self.count[f] = 0;
            self.wsum[f] = 0.0;
            self.ysum[f] = 0.0;
        }
        self.touched.clear();

        match best {
            Some(b) if p.require_gain && b.gain <= 0.0 => None,
            other => other,
        }
    }
}

/// Grow one tree on `rows` (indices into the binned matrix). `weights` and
/// `targets` are indexed by matrix row; rows with zero weight must be omitted.
pub(crate) fn grow_tree(
    binned: &Binned,
    rows: Vec<u32>,
    weights: &[f64],
    targets: &[f64],
    params: &GrowParams,
    rng: &mut ChaCha8Rng,
) -> RegressionTree {
    assert!(!rows.is_empty(), "cannot grow a tree on zero rows");
    let d = binned.cols();
    let sparse = if binned.dense.is_none() { d } else { 0 };
    let mut g = Grower {
        binned,
        weights,
        targets,
        params,
        count: vec![0; sparse],
        wsum: vec![0.0; sparse],
        ysum: vec![0.0; sparse],
        touched: Vec::new(),
        order: Vec::with_capacity(d),
    };

    let root = g.summarize(&rows);
    let mut nodes = vec![Node::Leaf { value: root.value }];
    let mut heap = BinaryHeap::new();
    if let Some(split) = g.best_split(&rows, 0, &root, rng) {
        heap.push(Candidate { node: 0, rows, depth: 0, split });
    }
    let mut leaves = 1usize;
    while let Some(c) = heap.pop() {
        if params.max_leaves.is_some_and(|m| leaves >= m) {
            break;
        }
        let SplitChoice { feature, bin, .. } = c.split;
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            c.rows.iter().partition(|&&r| binned.goes_left(r, feature, bin));
        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes[c.node] = Node::Split {
            feature: feature as u32,
            threshold: binned.threshold(feature, bin),
            left: left_id as u32,
            right: right_id as u32,
        };
        leaves += 1;
        for (id, child_rows) in [(left_id, left_rows), (right_id, right_rows)] {
            let summary = g.summarize(&child_rows);
            nodes.push(Node::Leaf { value: summary.value });
            if let Some(split) = g.best_split(&child_rows, c.depth + 1, &summary, rng) {
                heap.push(Candidate { node: id, rows: child_rows, depth: c.depth + 1, split });
            }
        }
    }
    RegressionTree { nodes }
}
