use rayon::prelude::*;

use super::{check_dim, check_training_set, Hyperparams};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::vfdata::Label;

/// Minimum impurity decrease that counts as an improvement.
const GAIN_EPS: f64 = 1e-12;

/// Gini impurity of a two-class count pair.
pub fn gini(counts: [usize; 2]) -> Result<f64> {
    let n = counts[0] + counts[1];
    if n == 0 {
        return Err(Error::invalid("gini", "both counts are zero"));
    }
    Ok(gini_unchecked(counts))
}

fn gini_unchecked(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    let (p0, p1) = (counts[0] as f64 / n, counts[1] as f64 / n);
    1.0 - (p0 * p0 + p1 * p1)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        predicted: Label,
        class_counts: [usize; 2],
    },
}

/// CART tree stored as a node array in pre-order; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, f: &[f64]) -> Label {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { predicted, .. } => return *predicted,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if f[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Checks child links, pre-order layout, finiteness and feature bounds.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid("decision tree", msg));
        if self.nodes.is_empty() {
            return bad("no nodes".into());
        }
        // Walk the tree in pre-order; every node must be reached exactly once,
        // in array order.
        let mut expected = 0;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i != expected || i >= self.nodes.len() {
                return bad(format!("node {i} is out of pre-order position"));
            }
            expected += 1;
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = &self.nodes[i]
            {
                if *feature >= n_features {
                    return bad(format!("node {i}: feature {feature} >= {n_features}"));
                }
                if !threshold.is_finite() {
                    return bad(format!("node {i}: non-finite threshold"));
                }
                stack.push(*right);
                stack.push(*left);
            }
        }
        if expected != self.nodes.len() {
            return bad(format!("{} unreachable nodes", self.nodes.len() - expected));
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForestModel {
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForestModel {
    /// Majority vote; ties go to label 0.
    pub fn predict(&self, f: &[f64]) -> Result<Label> {
        check_dim(self.n_features, f)?;
        let ones = self
            .trees
            .iter()
            .filter(|t| t.predict(f) == Label::Glaucoma)
            .count();
        Ok(if 2 * ones > self.trees.len() {
            Label::Glaucoma
        } else {
            Label::Other
        })
    }
}

/// Fits one tree on the whole training set, drawing feature subsets from `rng`.
pub fn tree_fit(
    x: &[Vec<f64>],
    y: &[Label],
    hyper: &Hyperparams,
    rng: &mut SplitMix64,
) -> Result<DecisionTree> {
    let d = check_training_set(x, y, false)?;
    let sample: Vec<usize> = (0..x.len()).collect();
    Ok(fit_tree_on(x, y, d, &sample, hyper, rng))
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Label],
    d: usize,
    mtry: usize,
    max_depth: Option<usize>,
    min_samples_split: usize,
    nodes: Vec<Node>,
}

fn fit_tree_on(
    x: &[Vec<f64>],
    y: &[Label],
    d: usize,
    sample: &[usize],
    hyper: &Hyperparams,
    rng: &mut SplitMix64,
) -> DecisionTree {
    let mut builder = TreeBuilder {
        x,
        y,
        d,
        mtry: ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1)),
        max_depth: hyper.max_depth,
        min_samples_split: hyper.min_samples_split,
        nodes: Vec::new(),
    };
    builder.grow(sample, 0, rng);
    DecisionTree {
        nodes: builder.nodes,
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl TreeBuilder<'_> {
    fn counts(&self, sample: &[usize]) -> [usize; 2] {
        let mut c = [0; 2];
        for &i in sample {
            c[self.y[i].index()] += 1;
        }
        c
    }

    fn grow(&mut self, sample: &[usize], depth: usize, rng: &mut SplitMix64) -> usize {
        let counts = self.counts(sample);
        let id = self.nodes.len();
        let leaf = Node::Leaf {
            predicted: if counts[1] > counts[0] {
                Label::Glaucoma
            } else {
                Label::Other
            },
            class_counts: counts,
        };
        let pure = counts[0] == 0 || counts[1] == 0;
        if pure || sample.len() < self.min_samples_split || self.max_depth == Some(depth) {
            self.nodes.push(leaf);
            return id;
        }
        let Some(best) = self.find_split(sample, counts, rng) else {
            self.nodes.push(leaf);
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = sample
            .iter()
            .partition(|&&i| self.x[i][best.feature] <= best.threshold);
        // Placeholder until the children ids are known; pre-order is kept
        // because the parent slot is reserved before recursing.
        self.nodes.push(leaf);
        let l = self.grow(&left, depth + 1, rng);
        let r = self.grow(&right, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }

    /// Draws `mtry` candidate features at a time (without replacement) until
    /// some candidate decreases impurity or every feature has been tried.
    fn find_split(
        &self,
        sample: &[usize],
        counts: [usize; 2],
        rng: &mut SplitMix64,
    ) -> Option<BestSplit> {
        let parent = gini_unchecked(counts);
        let mut order: Vec<usize> = (0..self.d).collect();
        let mut drawn = 0;
        while drawn < self.d {
            let take = self.mtry.min(self.d - drawn);
            for k in drawn..drawn + take {
                let j = k + rng.below(self.d - k);
                order.swap(k, j);
            }
            let mut batch = order[drawn..drawn + take].to_vec();
            drawn += take;
            batch.sort_unstable();
            let mut best: Option<BestSplit> = None;
            for &f in &batch {
                if let Some(cand) = self.best_threshold(sample, counts, parent, f) {
                    if best.as_ref().is_none_or(|b| cand.gain > b.gain + GAIN_EPS) {
                        best = Some(cand);
                    }
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    /// Best midpoint threshold on feature `f`, if any decreases impurity.
    fn best_threshold(
        &self,
        sample: &[usize],
        counts: [usize; 2],
        parent: f64,
        f: usize,
    ) -> Option<BestSplit> {
        let mut vals: Vec<(f64, usize)> = sample
            .iter()
            .map(|&i| (self.x[i][f], self.y[i].index()))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = vals.len() as f64;
        let mut left = [0usize; 2];
        let mut best: Option<BestSplit> = None;
        for k in 0..vals.len() - 1 {
            left[vals[k].1] += 1;
            let (lo, hi) = (vals[k].0, vals[k + 1].0);
            if lo == hi {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let nl = (left[0] + left[1]) as f64;
            let nr = (right[0] + right[1]) as f64;
            let gain = parent - (nl / n) * gini_unchecked(left) - (nr / n) * gini_unchecked(right);
            if gain > GAIN_EPS && best.as_ref().is_none_or(|b| gain > b.gain + GAIN_EPS) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestOptions {
    /// Fit trees on rayon's thread pool.
    pub parallel: bool,
    /// Bootstrap each tree's sample; `false` trains every tree on the full set.
    pub bootstrap: bool,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            parallel: true,
            bootstrap: true,
        }
    }
}

pub fn forest_fit(x: &[Vec<f64>], y: &[Label], hyper: &Hyperparams) -> Result<RandomForestModel> {
    forest_fit_with(x, y, hyper, ForestOptions::default())
}

/// Tree `t` draws its bootstrap sample and feature subsets from
/// `SplitMix64::new(rng_seed ^ t)`, so serial and parallel fits agree.
pub fn forest_fit_with(
    x: &[Vec<f64>],
    y: &[Label],
    hyper: &Hyperparams,
    options: ForestOptions,
) -> Result<RandomForestModel> {
    if hyper.n_trees == 0 {
        return Err(Error::invalid("random forest", "n_trees must be >= 1"));
    }
    let d = check_training_set(x, y, true)?;
    let n = x.len();
    let fit_one = |t: usize| {
        let mut rng = SplitMix64::new(hyper.rng_seed ^ t as u64);
        let sample: Vec<usize> = if options.bootstrap {
            (0..n).map(|_| rng.below(n)).collect()
        } else {
            (0..n).collect()
        };
        fit_tree_on(x, y, d, &sample, hyper, &mut rng)
    };
    let trees = if options.parallel {
        (0..hyper.n_trees).into_par_iter().map(fit_one).collect()
    } else {
        (0..hyper.n_trees).map(fit_one).collect()
    };
    Ok(RandomForestModel {
        n_features: d,
        trees,
    })
}
