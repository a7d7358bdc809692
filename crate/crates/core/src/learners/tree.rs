//! Histogram-based regression trees grown on per-row gradient/hessian
//! statistics. One grower serves both ensemble families:
//!
//! * bagged forests use g = −w·y, h = w (leaf value = weighted mean; with
//!   one-hot targets this is the class-frequency leaf of a Gini tree),
//! * boosting uses the first and second derivatives of its loss.
//!
//! Split gain is Σ_c G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ) summed over
//! outputs, which reduces to the squared-error reduction when λ = 0.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::Features;
use crate::error::{Error, Result};
use crate::noise::{index_below, seeded_rng};

pub const MAX_BINS: usize = 64;

/// Per-feature split candidates. A value falls in bin b when it exceeds
/// exactly b thresholds.
#[derive(Debug, Clone)]
pub struct BinnedFeatures {
    pub thresholds: Vec<Vec<f64>>,
    /// Column-major: bins[f * n + i].
    pub bins: Vec<u8>,
    pub n: usize,
}

impl BinnedFeatures {
    pub fn new(x: &Features, max_bins: usize) -> Self {
        let n = x.n_rows();
        let p = x.n_cols();
        let max_bins = max_bins.clamp(2, 256);
        let mut thresholds = Vec::with_capacity(p);
        let mut bins = vec![0u8; n * p];
        let mut col = vec![0.0; n];
        for f in 0..p {
            for (i, c) in col.iter_mut().enumerate() {
                *c = x.get(i, f);
            }
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            let edges = candidate_thresholds(&sorted, max_bins);
            for i in 0..n {
                bins[f * n + i] = edges.partition_point(|e| *e < col[i]) as u8;
            }
            thresholds.push(edges);
        }
        Self { thresholds, bins, n }
    }

    pub fn n_features(&self) -> usize {
        self.thresholds.len()
    }

    pub fn n_bins(&self, f: usize) -> usize {
        self.thresholds[f].len() + 1
    }

    fn bin(&self, f: usize, i: usize) -> usize {
        self.bins[f * self.n + i] as usize
    }
}

fn candidate_thresholds(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let mut uniq: Vec<(f64, usize)> = Vec::new();
    for &v in sorted {
        match uniq.last_mut() {
            Some((u, c)) if *u == v => *c += 1,
            _ => uniq.push((v, 1)),
        }
    }
    if uniq.len() <= 1 {
        return Vec::new();
    }
    let mid = |j: usize| 0.5 * (uniq[j].0 + uniq[j + 1].0);
    if uniq.len() <= max_bins {
        return (0..uniq.len() - 1).map(mid).collect();
    }
    let n = sorted.len() as f64;
    let mut edges = Vec::with_capacity(max_bins - 1);
    let mut cum = 0usize;
    let mut q = 1;
    for j in 0..uniq.len() - 1 {
        cum += uniq[j].1;
        if cum as f64 >= q as f64 * n / max_bins as f64 {
            edges.push(mid(j));
            while q < max_bins && cum as f64 >= q as f64 * n / max_bins as f64 {
                q += 1;
            }
            if q >= max_bins {
                break;
            }
        }
    }
    edges
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; 0 means all.
    pub max_features: usize,
    pub lambda: f64,
    /// Minimum mean (over outputs) hessian sum per child.
    pub min_child_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        offset: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub leaf_values: Vec<f64>,
    pub n_outputs: usize,
}

impl Tree {
    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut id = 0usize;
        loop {
            match self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
                Node::Leaf { offset } => {
                    let o = offset as usize;
                    return &self.leaf_values[o..o + self.n_outputs];
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &Tree, id: usize) -> usize {
            match t.nodes[id] {
                Node::Split { left, right, .. } => 1 + rec(t, left as usize).max(rec(t, right as usize)),
                Node::Leaf { .. } => 0,
            }
        }
        rec(self, 0)
    }
}

/// Gradient statistics for one fit: g and h are row-major n x k.
pub struct GradStats<'a> {
    pub g: &'a [f64],
    pub h: &'a [f64],
    pub k: usize,
}

struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
}

/// Grow one tree on `rows` (rows with zero hessian should be left out).
pub fn grow_tree(
    data: &BinnedFeatures,
    stats: &GradStats,
    rows: Vec<u32>,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let k = stats.k;
    let p = data.n_features();
    let mut offsets = Vec::with_capacity(p + 1);
    offsets.push(0usize);
    for f in 0..p {
        offsets.push(offsets[f] + data.n_bins(f));
    }
    let total_bins = offsets[p];
    let stride = 2 * k + 1;
    let use_all = params.max_features == 0 || params.max_features >= p;

    let mut tree = Tree {
        nodes: vec![Node::Leaf { offset: 0 }],
        leaf_values: Vec::new(),
        n_outputs: k,
    };
    let mut features: Vec<usize> = (0..p).collect();

    struct Work {
        id: usize,
        rows: Vec<u32>,
        depth: usize,
        hist: Option<Vec<f64>>,
    }
    let mut stack = vec![Work {
        id: 0,
        rows,
        depth: 0,
        hist: None,
    }];

    while let Some(work) = stack.pop() {
        let mut sums = vec![0.0; 2 * k];
        for &r in &work.rows {
            let r = r as usize;
            for c in 0..k {
                sums[c] += stats.g[r * k + c];
                sums[k + c] += stats.h[r * k + c];
            }
        }
        let count = work.rows.len();
        let can_split = work.depth < params.max_depth && count >= 2 * params.min_samples_leaf.max(1);

        let mut best: Option<Candidate> = None;
        let mut hist_here: Option<Vec<f64>> = None;
        if can_split && p > 0 {
            let candidates: &[usize] = if use_all {
                &features
            } else {
                for j in 0..params.max_features {
                    let r = j + index_below(rng, p - j);
                    features.swap(j, r);
                }
                &features[..params.max_features]
            };
            let hist = match work.hist {
                Some(h) => h,
                None => {
                    let mut h = vec![0.0; total_bins * stride];
                    build_histogram(data, stats, &work.rows, candidates, &offsets, &mut h);
                    h
                }
            };
            let parent_score = score(&sums, k, params.lambda);
            for &f in candidates {
                if let Some((gain, bin)) =
                    best_split_for_feature(&hist[offsets[f] * stride..offsets[f + 1] * stride], &sums, k, count, parent_score, params)
                {
                    if best.as_ref().is_none_or(|b| gain > b.gain) {
                        best = Some(Candidate { gain, feature: f, bin });
                    }
                }
            }
            if use_all {
                hist_here = Some(hist);
            }
        }

        match best {
            Some(cand) if cand.gain > 1e-12 * (1.0 + score(&sums, k, params.lambda).abs()) => {
                let f = cand.feature;
                let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
                    work.rows.iter().partition(|&&r| data.bin(f, r as usize) <= cand.bin);
                let left_id = tree.nodes.len();
                tree.nodes.push(Node::Leaf { offset: 0 });
                tree.nodes.push(Node::Leaf { offset: 0 });
                tree.nodes[work.id] = Node::Split {
                    feature: f as u32,
                    threshold: data.thresholds[f][cand.bin],
                    left: left_id as u32,
                    right: left_id as u32 + 1,
                };
                // Histogram subtraction: build the smaller child, derive the other.
                let (small_hist, large_hist) = match hist_here {
                    Some(parent) => {
                        let small = if left_rows.len() <= right_rows.len() { &left_rows } else { &right_rows };
                        let mut hs = vec![0.0; total_bins * stride];
                        build_histogram(data, stats, small, &features, &offsets, &mut hs);
                        let mut hl = parent;
                        for (a, b) in hl.iter_mut().zip(&hs) {
                            *a -= b;
                        }
                        (Some(hs), Some(hl))
                    }
                    None => (None, None),
                };
                let left_small = left_rows.len() <= right_rows.len();
                let (lh, rh) = if left_small { (small_hist, large_hist) } else { (large_hist, small_hist) };
                stack.push(Work {
                    id: left_id + 1,
                    rows: right_rows,
                    depth: work.depth + 1,
                    hist: rh,
                });
                stack.push(Work {
                    id: left_id,
                    rows: left_rows,
                    depth: work.depth + 1,
                    hist: lh,
                });
            }
            _ => {
                let offset = tree.leaf_values.len();
                for c in 0..k {
                    let denom = sums[k + c] + params.lambda;
                    tree.leaf_values.push(if denom > 0.0 { -sums[c] / denom } else { 0.0 });
                }
                tree.nodes[work.id] = Node::Leaf { offset: offset as u32 };
            }
        }
    }
    tree
}

fn build_histogram(
    data: &BinnedFeatures,
    stats: &GradStats,
    rows: &[u32],
    features: &[usize],
    offsets: &[usize],
    hist: &mut [f64],
) {
    let k = stats.k;
    let stride = 2 * k + 1;
    for &f in features {
        let col = &data.bins[f * data.n..(f + 1) * data.n];
        let base = offsets[f];
        if k == 1 {
            for &r in rows {
                let r = r as usize;
                let o = (base + col[r] as usize) * 3;
                hist[o] += stats.g[r];
                hist[o + 1] += stats.h[r];
                hist[o + 2] += 1.0;
            }
        } else {
            for &r in rows {
                let r = r as usize;
                let o = (base + col[r] as usize) * stride;
                for c in 0..k {
                    hist[o + c] += stats.g[r * k + c];
                    hist[o + k + c] += stats.h[r * k + c];
                }
                hist[o + 2 * k] += 1.0;
            }
        }
    }
}

fn score(sums: &[f64], k: usize, lambda: f64) -> f64 {
    (0..k)
        .map(|c| {
            let d = sums[k + c] + lambda;
            if d > 0.0 {
                sums[c] * sums[c] / d
            } else {
                0.0
            }
        })
        .sum()
}

fn best_split_for_feature(
    hist: &[f64],
    total: &[f64],
    k: usize,
    count: usize,
    parent_score: f64,
    params: &TreeParams,
) -> Option<(f64, usize)> {
    let stride = 2 * k + 1;
    let n_bins = hist.len() / stride;
    let msl = params.min_samples_leaf.max(1) as f64;
    let mut left = vec![0.0; 2 * k];
    let mut right = vec![0.0; 2 * k];
    let mut n_left = 0.0;
    let mut best: Option<(f64, usize)> = None;
    for b in 0..n_bins.saturating_sub(1) {
        let o = b * stride;
        for j in 0..2 * k {
            left[j] += hist[o + j];
        }
        n_left += hist[o + 2 * k];
        let n_right = count as f64 - n_left;
        if n_left < msl {
            continue;
        }
        if n_right < msl {
            break;
        }
        for j in 0..2 * k {
            right[j] = total[j] - left[j];
        }
        let hl: f64 = left[k..].iter().sum::<f64>() / k as f64;
        let hr: f64 = right[k..].iter().sum::<f64>() / k as f64;
        if hl < params.min_child_weight || hr < params.min_child_weight {
            continue;
        }
        let gain = score(&left, k, params.lambda) + score(&right, k, params.lambda) - parent_score;
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, b));
        }
    }
    best
}

/// How many features a forest examines at each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Third,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        let m = match self {
            MaxFeatures::All => p,
            MaxFeatures::Sqrt => (p as f64).sqrt().round() as usize,
            MaxFeatures::Third => p / 3,
            MaxFeatures::Count(c) => c,
        };
        m.clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
}

/// Bagged ensemble; predictions average the per-tree leaf vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub n_outputs: usize,
}

impl Forest {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_outputs];
        for t in &self.trees {
            for (o, v) in out.iter_mut().zip(t.leaf(x)) {
                *o += v;
            }
        }
        let m = self.trees.len().max(1) as f64;
        out.iter_mut().for_each(|o| *o /= m);
        out
    }
}

fn check_size(n: usize, min_samples_leaf: usize) -> Result<()> {
    if n < 2 * min_samples_leaf.max(1) {
        return Err(Error::data(format!(
            "tree ensemble needs at least {} rows, got {n}",
            2 * min_samples_leaf.max(1)
        )));
    }
    Ok(())
}

/// Fit a forest to row-major n x k targets (k = 1 for regression, one-hot
/// rows for classification).
pub fn fit_forest(
    x: &Features,
    targets: &[f64],
    k: usize,
    weights: Option<&[f64]>,
    params: &ForestParams,
) -> Result<Forest> {
    let n = x.n_rows();
    check_size(n, params.min_samples_leaf)?;
    if params.n_trees == 0 {
        return Err(Error::config("forest needs at least one tree"));
    }
    let data = BinnedFeatures::new(x, MAX_BINS);
    let tp = TreeParams {
        max_depth: params.max_depth.unwrap_or(64),
        min_samples_leaf: params.min_samples_leaf,
        max_features: params.max_features.resolve(x.n_cols()),
        lambda: 0.0,
        min_child_weight: 0.0,
    };
    let mut g = vec![0.0; n * k];
    let mut h = vec![0.0; n * k];
    let mut mult = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let mut rng = seeded_rng(params.seed, t as u64);
        if params.bootstrap {
            mult.iter_mut().for_each(|m| *m = 0.0);
            for _ in 0..n {
                mult[index_below(&mut rng, n)] += 1.0;
            }
        } else {
            mult.iter_mut().for_each(|m| *m = 1.0);
        }
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let w = mult[i] * weights.map_or(1.0, |w| w[i]);
            if w > 0.0 {
                rows.push(i as u32);
            }
            for c in 0..k {
                g[i * k + c] = -w * targets[i * k + c];
                h[i * k + c] = w;
            }
        }
        let stats = GradStats { g: &g, h: &h, k };
        trees.push(grow_tree(&data, &stats, rows, &tp, &mut rng));
    }
    Ok(Forest { trees, n_outputs: k })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoostObjective {
    SquaredError,
    /// Binary log-loss on a single margin.
    Logistic,
    /// Multi-class softmax on k margins with a shared tree structure.
    Softmax(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub eta: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
}

/// Gradient-boosted trees: margins start at a constant and each round adds
/// eta times a tree fit to the loss derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub objective: BoostObjective,
    pub base: Vec<f64>,
    pub eta: f64,
    pub trees: Vec<Tree>,
}

impl Boosted {
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        let mut m = self.base.clone();
        for t in &self.trees {
            for (a, v) in m.iter_mut().zip(t.leaf(x)) {
                *a += self.eta * v;
            }
        }
        m
    }
}

/// `y` holds the regression target or the class index (as f64).
pub fn fit_boosted(
    x: &Features,
    y: &[f64],
    objective: BoostObjective,
    weights: Option<&[f64]>,
    params: &BoostParams,
) -> Result<Boosted> {
    let n = x.n_rows();
    check_size(n, params.min_samples_leaf)?;
    let k = match objective {
        BoostObjective::SquaredError | BoostObjective::Logistic => 1,
        BoostObjective::Softmax(k) => k,
    };
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(w).sum();
    if !(sw > 0.0) {
        return Err(Error::numeric("boosting: total sample weight is zero"));
    }
    let base = match objective {
        BoostObjective::SquaredError => vec![(0..n).map(|i| w(i) * y[i]).sum::<f64>() / sw],
        BoostObjective::Logistic => {
            let p = ((0..n).map(|i| w(i) * y[i]).sum::<f64>() / sw).clamp(1e-6, 1.0 - 1e-6);
            vec![(p / (1.0 - p)).ln()]
        }
        BoostObjective::Softmax(k) => {
            let mut freq = vec![0.0; k];
            for i in 0..n {
                freq[y[i] as usize] += w(i);
            }
            freq.iter().map(|f| (f / sw).max(1e-6).ln()).collect()
        }
    };
    let data = BinnedFeatures::new(x, MAX_BINS);
    let tp = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: 0,
        lambda: params.lambda,
        min_child_weight: params.min_child_weight,
    };
    let rows: Vec<u32> = (0..n).filter(|&i| w(i) > 0.0).map(|i| i as u32).collect();
    let mut margin: Vec<f64> = (0..n).flat_map(|_| base.iter().copied()).collect();
    let mut g = vec![0.0; n * k];
    let mut h = vec![0.0; n * k];
    let mut rng = seeded_rng(0, 0);
    let mut trees = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let wi = w(i);
            match objective {
                BoostObjective::SquaredError => {
                    g[i] = wi * (margin[i] - y[i]);
                    h[i] = wi;
                }
                BoostObjective::Logistic => {
                    let p = 1.0 / (1.0 + (-margin[i]).exp());
                    g[i] = wi * (p - y[i]);
                    h[i] = wi * (p * (1.0 - p)).max(1e-16);
                }
                BoostObjective::Softmax(k) => {
                    let m = &margin[i * k..(i + 1) * k];
                    let mx = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let s: f64 = m.iter().map(|v| (v - mx).exp()).sum();
                    for c in 0..k {
                        let p = (m[c] - mx).exp() / s;
                        let t = if y[i] as usize == c { 1.0 } else { 0.0 };
                        g[i * k + c] = wi * (p - t);
                        h[i * k + c] = wi * (p * (1.0 - p)).max(1e-16);
                    }
                }
            }
        }
        let stats = GradStats { g: &g, h: &h, k };
        let tree = grow_tree(&data, &stats, rows.clone(), &tp, &mut rng);
        for i in 0..n {
            let leaf = tree.leaf(x.row(i));
            for c in 0..k {
                margin[i * k + c] += params.eta * leaf[c];
            }
        }
        trees.push(tree);
    }
    Ok(Boosted {
        objective,
        base,
        eta: params.eta,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forest_params(n_trees: usize, depth: Option<usize>) -> ForestParams {
        ForestParams {
            n_trees,
            max_depth: depth,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            bootstrap: false,
            seed: 3,
        }
    }

    #[test]
    fn thresholds_are_midpoints_for_few_values() {
        assert_eq!(candidate_thresholds(&[1.0, 1.0, 2.0, 4.0], 64), vec![1.5, 3.0]);
        assert!(candidate_thresholds(&[5.0, 5.0], 64).is_empty());
    }

    #[test]
    fn many_values_are_capped() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        let t = candidate_thresholds(&v, 64);
        assert!(t.len() <= 63 && t.len() > 50);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_target_gives_constant_prediction() {
        let x = Features::from_rows(&(0..30).map(|i| vec![f64::from(i)]).collect::<Vec<_>>()).unwrap();
        let f = fit_forest(&x, &vec![7.5; 30], 1, None, &forest_params(3, None)).unwrap();
        for i in 0..30 {
            assert_eq!(f.predict(x.row(i)), vec![7.5]);
        }
        let b = fit_boosted(
            &x,
            &vec![7.5; 30],
            BoostObjective::SquaredError,
            None,
            &BoostParams {
                n_rounds: 5,
                eta: 0.3,
                max_depth: 3,
                min_samples_leaf: 1,
                lambda: 1.0,
                min_child_weight: 1.0,
            },
        )
        .unwrap();
        assert!((b.margins(x.row(4))[0] - 7.5).abs() < 1e-12);
    }

    #[test]
    fn stump_finds_step() {
        let x = Features::from_rows(&(0..20).map(|i| vec![f64::from(i)]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = (0..20).map(|i| if i < 13 { 1.0 } else { 4.0 }).collect();
        let f = fit_forest(&x, &y, 1, None, &forest_params(1, Some(1))).unwrap();
        match f.trees[0].nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, 12.5),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn min_samples_leaf_respected() {
        let x = Features::from_rows(&(0..20).map(|i| vec![f64::from(i)]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = (0..20).map(|i| if i < 2 { 10.0 } else { 0.0 }).collect();
        let mut p = forest_params(1, Some(1));
        p.min_samples_leaf = 5;
        let f = fit_forest(&x, &y, 1, None, &p).unwrap();
        match f.trees[0].nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, 4.5),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn classification_forest_leaves_are_distributions() {
        let x = Features::from_rows(&(0..60).map(|i| vec![f64::from(i % 10), f64::from(i % 7)]).collect::<Vec<_>>()).unwrap();
        let mut t = vec![0.0; 60 * 3];
        for i in 0..60 {
            t[i * 3 + (i % 3)] = 1.0;
        }
        let mut p = forest_params(10, Some(4));
        p.bootstrap = true;
        p.max_features = MaxFeatures::Sqrt;
        let f = fit_forest(&x, &t, 3, None, &p).unwrap();
        for i in 0..60 {
            let pr = f.predict(x.row(i));
            assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let g = fit_forest(&x, &t, 3, None, &p).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn too_few_rows() {
        let x = Features::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let mut p = forest_params(1, None);
        p.min_samples_leaf = 5;
        assert!(fit_forest(&x, &[1.0, 2.0], 1, None, &p).is_err());
    }
}
