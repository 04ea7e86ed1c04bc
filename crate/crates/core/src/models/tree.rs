//! CART with Gini impurity on sparse inputs.
//!
//! Implicit zeros form one block per feature, placed at its sorted position
//! among the explicit values. Candidate thresholds are midpoints between
//! consecutive distinct values and a sample goes left when
//! `x[feature] <= threshold`. The best split minimizes weighted child
//! impurity; ties keep the lowest feature, then the lowest threshold. A split
//! with zero gain is still taken while the node is impure, so growth stops
//! only at pure nodes, the depth cap, `min_samples_split`, or when every
//! feature is constant within the node.

use rand::seq::index;
use rayon::prelude::*;

use super::{check_training, Classifier, Family, ForestParams, Model, ModelError, TreeParams};
use crate::rng::{seeded, stable_hash, SeededRng};
use crate::textpipe::SparseVector;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted tree. The score is the positive fraction of the reached leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    dim: usize,
    nodes: Vec<Node>,
}

impl TreeModel {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            best = best.max(d);
            if let Node::Split { left, right, .. } = self.nodes[id] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        best
    }

    fn leaf_value(&self, x: &SparseVector) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x.get(feature) <= threshold { left } else { right },
            }
        }
    }
}

impl Model for TreeModel {
    fn family(&self) -> Family {
        Family::DT
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn threshold(&self) -> f64 {
        0.5
    }

    fn raw_score(&self, x: &SparseVector) -> f64 {
        self.leaf_value(x)
    }
}

/// Bagged trees; the score is the mean leaf fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    dim: usize,
    trees: Vec<TreeModel>,
}

impl ForestModel {
    pub fn trees(&self) -> &[TreeModel] {
        &self.trees
    }
}

impl Model for ForestModel {
    fn family(&self) -> Family {
        Family::RF
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn threshold(&self) -> f64 {
        0.5
    }

    fn raw_score(&self, x: &SparseVector) -> f64 {
        self.trees.iter().map(|t| t.leaf_value(x)).sum::<f64>() / self.trees.len() as f64
    }
}

struct GrowOptions {
    max_depth: Option<usize>,
    min_samples_split: usize,
    /// Features drawn per split; `None` evaluates all of them.
    mtry: Option<usize>,
}

#[derive(Clone, Copy)]
struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
}

/// Per-feature scratch sized to the feature dimension, reused across nodes.
struct Scratch {
    count: Vec<u32>,
    first: Vec<f64>,
    varies: Vec<bool>,
    selected: Vec<bool>,
    touched: Vec<usize>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch {
            count: vec![0; dim],
            first: vec![0.0; dim],
            varies: vec![false; dim],
            selected: vec![false; dim],
            touched: Vec::new(),
        }
    }
}

// Sum over children of (p^2 + q^2) / n; larger means lower weighted Gini.
fn purity(n: usize, pos: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (p, q) = (pos as f64, (n - pos) as f64);
    (p * p + q * q) / n as f64
}

struct Grower<'a> {
    x: &'a [SparseVector],
    y: &'a [u8],
    opts: &'a GrowOptions,
    scratch: Scratch,
    entries: Vec<(u32, f64, u8)>,
}

impl<'a> Grower<'a> {
    /// Non-constant features within the node, ascending.
    fn candidate_features(&mut self, rows: &[u32]) -> Vec<usize> {
        let s = &mut self.scratch;
        for &r in rows {
            for (j, v) in self.x[r as usize].iter() {
                if v == 0.0 {
                    continue;
                }
                if s.count[j] == 0 {
                    s.touched.push(j);
                    s.first[j] = v;
                } else if s.first[j] != v {
                    s.varies[j] = true;
                }
                s.count[j] += 1;
            }
        }
        let mut out: Vec<usize> = s
            .touched
            .iter()
            .copied()
            .filter(|&j| s.varies[j] || (s.count[j] as usize) < rows.len())
            .collect();
        for &j in &s.touched {
            s.count[j] = 0;
            s.varies[j] = false;
        }
        s.touched.clear();
        out.sort_unstable();
        out
    }

    fn best_split(&mut self, rows: &[u32], node_pos: usize, rng: Option<&mut SeededRng>) -> Option<Best> {
        let mut features = self.candidate_features(rows);
        if features.is_empty() {
            return None;
        }
        if let (Some(m), Some(rng)) = (self.opts.mtry, rng) {
            if m < features.len() {
                let mut picked: Vec<usize> = index::sample(rng, features.len(), m)
                    .into_iter()
                    .map(|k| features[k])
                    .collect();
                picked.sort_unstable();
                features = picked;
            }
        }
        for &j in &features {
            self.scratch.selected[j] = true;
        }
        self.entries.clear();
        for &r in rows {
            let label = self.y[r as usize];
            for (j, v) in self.x[r as usize].iter() {
                if v != 0.0 && self.scratch.selected[j] {
                    self.entries.push((j as u32, v, label));
                }
            }
        }
        for &j in &features {
            self.scratch.selected[j] = false;
        }
        self.entries
            .sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let n = rows.len();
        let mut best: Option<Best> = None;
        let mut blocks: Vec<(f64, usize, usize)> = Vec::new();
        let mut start = 0;
        while start < self.entries.len() {
            let feature = self.entries[start].0;
            let mut end = start;
            while end < self.entries.len() && self.entries[end].0 == feature {
                end += 1;
            }
            // Collapse equal values into (value, count, positives) blocks and
            // insert the zero block at its sorted position.
            blocks.clear();
            let nz = end - start;
            let nz_pos = self.entries[start..end].iter().filter(|e| e.2 == 1).count();
            let zero_block = (0.0, n - nz, node_pos - nz_pos);
            let mut zero_placed = zero_block.1 == 0;
            for &(_, v, l) in &self.entries[start..end] {
                if !zero_placed && v > 0.0 {
                    blocks.push(zero_block);
                    zero_placed = true;
                }
                match blocks.last_mut() {
                    Some(b) if b.0 == v => {
                        b.1 += 1;
                        b.2 += usize::from(l);
                    }
                    _ => blocks.push((v, 1, usize::from(l))),
                }
            }
            if !zero_placed {
                blocks.push(zero_block);
            }
            let (mut nl, mut pl) = (0, 0);
            for w in blocks.windows(2) {
                nl += w[0].1;
                pl += w[0].2;
                let score = purity(nl, pl) + purity(n - nl, node_pos - pl);
                if best.map_or(true, |b| score > b.score) {
                    best = Some(Best {
                        score,
                        feature: feature as usize,
                        threshold: w[0].0 + (w[1].0 - w[0].0) / 2.0,
                    });
                }
            }
            start = end;
        }
        best
    }

    fn grow(&mut self, rows: Vec<u32>, mut rng: Option<SeededRng>) -> Vec<Node> {
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut stack = vec![(0usize, rows, 0usize)];
        while let Some((id, rows, depth)) = stack.pop() {
            let n = rows.len();
            let pos = rows.iter().filter(|&&r| self.y[r as usize] == 1).count();
            let value = pos as f64 / n as f64;
            let stop = pos == 0
                || pos == n
                || n < self.opts.min_samples_split
                || self.opts.max_depth.is_some_and(|d| depth >= d);
            let split = if stop {
                None
            } else {
                self.best_split(&rows, pos, rng.as_mut())
            };
            let Some(b) = split else {
                nodes[id] = Node::Leaf { value };
                continue;
            };
            let (l, r): (Vec<u32>, Vec<u32>) = rows
                .iter()
                .partition(|&&row| self.x[row as usize].get(b.feature) <= b.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[id] = Node::Split {
                feature: b.feature,
                threshold: b.threshold,
                left,
                right: left + 1,
            };
            // Right first so the left subtree is expanded first.
            stack.push((left + 1, r, depth + 1));
            stack.push((left, l, depth + 1));
        }
        nodes
    }
}

fn grow_tree(
    x: &[SparseVector],
    y: &[u8],
    dim: usize,
    rows: Vec<u32>,
    opts: &GrowOptions,
    rng: Option<SeededRng>,
) -> TreeModel {
    let mut g = Grower {
        x,
        y,
        opts,
        scratch: Scratch::new(dim),
        entries: Vec::new(),
    };
    TreeModel {
        dim,
        nodes: g.grow(rows, rng),
    }
}

#[derive(Debug, Clone, Default)]
pub struct DecisionTree {
    params: TreeParams,
}

impl DecisionTree {
    pub fn new(params: TreeParams) -> Self {
        DecisionTree { params }
    }

    pub fn fit_model(&self, x: &[SparseVector], y: &[u8]) -> Result<TreeModel, ModelError> {
        let (n, dim, _) = check_training(x, y, false)?;
        let opts = GrowOptions {
            max_depth: self.params.max_depth,
            min_samples_split: self.params.min_samples_split,
            mtry: None,
        };
        Ok(grow_tree(x, y, dim, (0..n as u32).collect(), &opts, None))
    }
}

impl Classifier for DecisionTree {
    fn family(&self) -> Family {
        Family::DT
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], _seed: u64) -> Result<Box<dyn Model>, ModelError> {
        Ok(Box::new(self.fit_model(x, y)?))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RandomForest {
    params: ForestParams,
}

impl RandomForest {
    pub fn new(params: ForestParams) -> Self {
        RandomForest { params }
    }

    /// Each tree draws its bootstrap and feature subsets from its own seed,
    /// `stable_hash([seed, tree])`, so results do not depend on scheduling.
    pub fn fit_model(&self, x: &[SparseVector], y: &[u8], seed: u64) -> Result<ForestModel, ModelError> {
        let (n, dim, _) = check_training(x, y, false)?;
        let p = &self.params;
        let opts = GrowOptions {
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            mtry: p.max_features.resolve(dim),
        };
        let trees = (0..p.n_trees as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = seeded(stable_hash(&[seed, t]));
                let rows: Vec<u32> = if p.bootstrap {
                    (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..n as u32)).collect()
                } else {
                    (0..n as u32).collect()
                };
                grow_tree(x, y, dim, rows, &opts, Some(rng))
            })
            .collect();
        Ok(ForestModel { dim, trees })
    }
}

impl Classifier for RandomForest {
    fn family(&self) -> Family {
        Family::RF
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], seed: u64) -> Result<Box<dyn Model>, ModelError> {
        Ok(Box::new(self.fit_model(x, y, seed)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(d: &[f64]) -> SparseVector {
        SparseVector::from_dense(d)
    }

    #[test]
    fn splits_on_zero_block() {
        let x = vec![sv(&[0.0, 1.0]), sv(&[0.0, 2.0]), sv(&[3.0, 0.0]), sv(&[4.0, 0.0])];
        let t = DecisionTree::default().fit_model(&x, &[0, 0, 1, 1]).unwrap();
        assert_eq!(t.n_leaves(), 2);
        // Feature 0 and feature 1 separate equally well; the lower one wins.
        assert_eq!(
            t.nodes[0],
            Node::Split {
                feature: 0,
                threshold: 1.5,
                left: 1,
                right: 2
            }
        );
        assert_eq!(t.score(&sv(&[5.0, 0.0])).unwrap(), 1.0);
    }

    #[test]
    fn fits_training_data_exactly() {
        let x = vec![
            sv(&[0.1, 0.0, 0.5]),
            sv(&[0.2, 0.3, 0.0]),
            sv(&[0.0, 0.3, 0.5]),
            sv(&[0.4, 0.0, 0.0]),
            sv(&[0.0, 0.0, 0.9]),
        ];
        let y = [1, 0, 0, 1, 1];
        let t = DecisionTree::default().fit_model(&x, &y).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(t.predict(xi).unwrap(), yi);
        }
    }

    #[test]
    fn identical_rows_make_an_impure_leaf() {
        let x = vec![sv(&[1.0]); 4];
        let t = DecisionTree::default().fit_model(&x, &[1, 0, 1, 1]).unwrap();
        assert_eq!(t.n_nodes(), 1);
        assert_eq!(t.score(&x[0]).unwrap(), 0.75);
    }

    #[test]
    fn depth_cap_is_respected() {
        let x: Vec<SparseVector> = (0..16).map(|i| sv(&[i as f64])).collect();
        let y: Vec<u8> = (0..16).map(|i| (i % 2) as u8).collect();
        let t = DecisionTree::new(TreeParams {
            max_depth: Some(2),
            min_samples_split: 2,
        })
        .fit_model(&x, &y)
        .unwrap();
        assert!(t.depth() <= 2);
    }
}
