use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::kmeans::{kmeans, MAX_ITERATIONS};
use super::{Docid, Strategy};
use crate::math::decimal_width;
use crate::seed;
use crate::{Error, Result};

/// Hierarchical k-means identifiers.
///
/// All descriptors are split into `k` clusters, and every cluster larger than
/// `leaf_size` is split again. A docid is the path of cluster digits from the
/// root followed by the scene's zero-padded rank inside its leaf. Leaf paths
/// form a prefix-free set, so the docids are unique.
pub fn encode_semantic(descriptors: &[&[f64]], k: usize, leaf_size: usize, seed: u64) -> Result<Vec<Docid>> {
    if !(2..=10).contains(&k) {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 2..=10")));
    }
    if leaf_size == 0 {
        return Err(Error::InvalidArgument("leaf_size must be positive".into()));
    }
    let mut leaves: Vec<(String, Vec<usize>)> = Vec::new();
    let all: Vec<usize> = (0..descriptors.len()).collect();
    if !all.is_empty() {
        split(descriptors, all, String::new(), k, leaf_size, seed, &mut leaves);
    }
    let widest = leaves.iter().map(|(_, m)| m.len()).max().unwrap_or(1);
    let width = decimal_width((widest - 1) as u64);
    let mut out: Vec<Option<Docid>> = (0..descriptors.len()).map(|_| None).collect();
    for (path, members) in leaves {
        for (rank, i) in members.into_iter().enumerate() {
            out[i] = Some(Docid::new(format!("{path}{rank:0width$}"), Strategy::Semantic));
        }
    }
    Ok(out.into_iter().map(|d| d.expect("every scene lands in a leaf")).collect())
}

fn split(
    descriptors: &[&[f64]],
    members: Vec<usize>,
    path: String,
    k: usize,
    leaf_size: usize,
    seed: u64,
    leaves: &mut Vec<(String, Vec<usize>)>,
) {
    if members.len() <= leaf_size {
        leaves.push((path, members));
        return;
    }
    let rows: Vec<&[f64]> = members.iter().map(|&i| descriptors[i]).collect();
    let km = kmeans(&rows, k, MAX_ITERATIONS, seed::sub_seed(seed, &path));
    let mut groups: Vec<Vec<usize>> = (0..km.centroids.len()).map(|_| Vec::new()).collect();
    for (&m, &c) in members.iter().zip(&km.assignment) {
        groups[c].push(m);
    }
    if groups.iter().filter(|g| !g.is_empty()).count() < 2 {
        // Indistinguishable descriptors: clustering cannot make progress.
        leaves.push((path, members));
        return;
    }
    for (c, group) in groups.into_iter().enumerate() {
        if !group.is_empty() {
            let mut child = path.clone();
            child.push(char::from(b'0' + c as u8));
            split(descriptors, group, child, k, leaf_size, seed, leaves);
        }
    }
}
