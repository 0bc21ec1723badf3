use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Criterion, ForestError, MaxFeatures};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            criterion: Criterion::SquaredError,
            max_features: MaxFeatures::All,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), ForestError> {
        if self.max_depth == Some(0) {
            return Err(ForestError::ZeroDepth);
        }
        if self.min_samples_split < 2 {
            return Err(ForestError::BadMinSamplesSplit);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        n: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Criterion cost summed over both children.
        child_cost: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// Fits one tree on all rows (no bootstrap).
pub fn fit_tree(x: &[Vec<f64>], y: &[f64], params: &TreeParams, seed: u64) -> Result<Tree, ForestError> {
    check_inputs(x, y, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<usize> = (0..y.len()).collect();
    Ok(grow(x, y, samples, params, &mut rng))
}

pub(crate) fn check_inputs(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> Result<(), ForestError> {
    params.validate()?;
    if x.len() != y.len() {
        return Err(ForestError::LengthMismatch { rows: x.len(), targets: y.len() });
    }
    if y.is_empty() {
        return Err(ForestError::TooFewRows { need: 1, got: 0 });
    }
    if params.criterion == Criterion::Poisson && y.iter().any(|v| *v < 0.0) {
        return Err(ForestError::NegativePoissonTarget);
    }
    Ok(())
}

pub(crate) fn grow(x: &[Vec<f64>], y: &[f64], samples: Vec<usize>, params: &TreeParams, rng: &mut ChaCha8Rng) -> Tree {
    let p = x[0].len();
    let k = params.max_features.count(p);
    let mut nodes = vec![Node::Leaf { value: 0.0, n: 0 }];
    let mut stack = vec![(0usize, samples, 0usize)];
    while let Some((slot, idx, depth)) = stack.pop() {
        let value = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        let leaf = Node::Leaf { value, n: idx.len() };
        let can_split = idx.len() >= params.min_samples_split
            && params.max_depth.is_none_or(|d| depth < d)
            && idx.iter().any(|&i| y[i] != y[idx[0]]);
        if !can_split {
            nodes[slot] = leaf;
            continue;
        }
        let features = choose_features(p, k, rng);
        let Some(best) = best_split(x, y, &idx, &features, params.criterion) else {
            nodes[slot] = leaf;
            continue;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| x[i][best.feature] <= best.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0, n: 0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { value: 0.0, n: 0 });
        nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            child_cost: best.cost,
            left,
            right,
        };
        stack.push((right, right_idx, depth + 1));
        stack.push((left, left_idx, depth + 1));
    }
    Tree { nodes }
}

fn choose_features(p: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut all: Vec<usize> = (0..p).collect();
    if k >= p {
        return all;
    }
    for i in 0..k {
        let j = rng.random_range(i..p);
        all.swap(i, j);
    }
    all.truncate(k);
    all
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub cost: f64,
}

/// Lowest-cost split over `features`; ties keep the earlier candidate.
pub(crate) fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    features: &[usize],
    criterion: Criterion,
) -> Option<Split> {
    let n = idx.len();
    let mut best: Option<Split> = None;
    for &f in features {
        let mut order = idx.to_vec();
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let left = prefix_costs(&ys, criterion);
        let mut rev = ys.clone();
        rev.reverse();
        let right = prefix_costs(&rev, criterion);
        for k in 1..n {
            let (a, b) = (x[order[k - 1]][f], x[order[k]][f]);
            if a >= b {
                continue;
            }
            let (cl, cr) = (left[k], right[n - k]);
            if !cl.is_finite() || !cr.is_finite() {
                continue;
            }
            let cost = cl + cr;
            if best.is_none_or(|s| cost < s.cost) {
                let mut threshold = 0.5 * (a + b);
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Split { feature: f, threshold, cost });
            }
        }
    }
    best
}

/// `out[m]` is the criterion cost of the first `m` values; infinite marks a
/// child the criterion cannot accept.
pub(crate) fn prefix_costs(ys: &[f64], criterion: Criterion) -> Vec<f64> {
    let n = ys.len();
    let mut out = vec![0.0; n + 1];
    match criterion {
        Criterion::SquaredError => {
            let (mut s, mut s2) = (0.0, 0.0);
            for (m, v) in ys.iter().enumerate() {
                s += v;
                s2 += v * v;
                let c = s2 - s * s / (m + 1) as f64;
                out[m + 1] = c.max(0.0);
            }
        }
        Criterion::Poisson => {
            let (mut s, mut sl) = (0.0, 0.0);
            for (m, v) in ys.iter().enumerate() {
                s += v;
                if *v > 0.0 {
                    sl += v * v.ln();
                }
                out[m + 1] = if s > 0.0 {
                    (sl - s * (s / (m + 1) as f64).ln()).max(0.0)
                } else {
                    f64::INFINITY
                };
            }
        }
        Criterion::AbsoluteError => {
            let mut ranked: Vec<usize> = (0..n).collect();
            ranked.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
            let mut rank = vec![0; n];
            for (r, &i) in ranked.iter().enumerate() {
                rank[i] = r;
            }
            let mut fen = Fenwick::new(n);
            let mut total = 0.0;
            for (m, v) in ys.iter().enumerate() {
                fen.add(rank[m], *v);
                total += v;
                let cnt = m + 1;
                let lower = fen.smallest_sum(cnt / 2);
                let upper = total - fen.smallest_sum(cnt.div_ceil(2));
                out[cnt] = (upper - lower).max(0.0);
            }
        }
    }
    out
}

/// Counts and sums over value ranks, for running medians.
struct Fenwick {
    cnt: Vec<usize>,
    sum: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { cnt: vec![0; n + 1], sum: vec![0.0; n + 1] }
    }

    fn add(&mut self, rank: usize, v: f64) {
        let mut i = rank + 1;
        while i < self.cnt.len() {
            self.cnt[i] += 1;
            self.sum[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of the `k` smallest inserted values.
    fn smallest_sum(&self, k: usize) -> f64 {
        let n = self.cnt.len() - 1;
        let mut pos = 0;
        let mut rem = k;
        let mut acc = 0.0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.cnt[next] <= rem {
                pos = next;
                rem -= self.cnt[next];
                acc += self.sum[next];
            }
            step >>= 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(ys: &[f64], c: Criterion) -> f64 {
        match c {
            Criterion::SquaredError => {
                let m = ys.iter().sum::<f64>() / ys.len() as f64;
                ys.iter().map(|v| (v - m).powi(2)).sum()
            }
            Criterion::AbsoluteError => {
                let mut s = ys.to_vec();
                s.sort_by(f64::total_cmp);
                let med = s[s.len() / 2];
                ys.iter().map(|v| (v - med).abs()).sum()
            }
            Criterion::Poisson => {
                let m = ys.iter().sum::<f64>() / ys.len() as f64;
                ys.iter().map(|v| if *v > 0.0 { v * (v / m).ln() } else { 0.0 } - (v - m)).sum()
            }
        }
    }

    #[test]
    fn prefix_costs_match_direct_formulas() {
        let ys = [3.0, 0.5, 7.0, 2.0, 2.0, 9.5, 0.0, 4.0];
        for c in [Criterion::SquaredError, Criterion::AbsoluteError, Criterion::Poisson] {
            let pc = prefix_costs(&ys, c);
            for m in 1..=ys.len() {
                let want = brute(&ys[..m], c);
                assert!((pc[m] - want).abs() < 1e-9, "{c} {m}: {} vs {want}", pc[m]);
            }
        }
    }

    #[test]
    fn depth_one_split_on_line() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let y = [0.0, 1.0, 2.0, 3.0];
        let params = TreeParams { max_depth: Some(1), ..Default::default() };
        let t = fit_tree(&x, &y, &params, 0).unwrap();
        match t.root() {
            Node::Split { threshold, left, right, .. } => {
                assert!(*threshold > 1.0 && *threshold < 2.0);
                assert_eq!(t.nodes()[*left], Node::Leaf { value: 0.5, n: 2 });
                assert_eq!(t.nodes()[*right], Node::Leaf { value: 2.5, n: 2 });
            }
            n => panic!("{n:?}"),
        }
    }

    #[test]
    fn constant_targets_give_single_leaf() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * 7 % 3) as f64]).collect();
        let t = fit_tree(&x, &[4.2; 6], &TreeParams::default(), 0).unwrap();
        assert_eq!(t.nodes(), &[Node::Leaf { value: 4.2, n: 6 }]);
    }

    #[test]
    fn zero_depth_is_rejected() {
        let params = TreeParams { max_depth: Some(0), ..Default::default() };
        assert_eq!(fit_tree(&[vec![0.0]], &[1.0], &params, 0), Err(ForestError::ZeroDepth));
    }

    #[test]
    fn poisson_rejects_negative_targets() {
        let params = TreeParams { criterion: Criterion::Poisson, ..Default::default() };
        assert_eq!(
            fit_tree(&[vec![0.0], vec![1.0]], &[1.0, -1.0], &params, 0),
            Err(ForestError::NegativePoissonTarget)
        );
    }

    #[test]
    fn unbounded_tree_interpolates_training_data() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin(), i as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 3.0 + r[1]).collect();
        let t = fit_tree(&x, &y, &TreeParams::default(), 1).unwrap();
        for (r, v) in x.iter().zip(&y) {
            assert_eq!(t.predict(r), *v);
        }
    }
}
