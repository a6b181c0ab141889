#![allow(dead_code)]

use std::sync::Arc;

use augtree::hypergraph::{build_augmented_tree, AugmentedTree};
use augtree::partition::build_tree;
use augtree::{ModelSpec, Network};

pub fn aug(spec: &ModelSpec, levels: usize, gamma: f64) -> Arc<AugmentedTree> {
    Arc::new(build_augmented_tree(build_tree(spec, levels).unwrap(), gamma).unwrap())
}

pub fn net(spec: &ModelSpec, levels: usize, lambda: f64) -> Network {
    Network::build(aug(spec, levels, 0.25), lambda).unwrap()
}

pub fn vertex(tree: &AugmentedTree, label: &str) -> usize {
    tree.tree.find_label(label).unwrap()
}

/// `max / min` of a positive sample.
pub fn band(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}
