use alloc::vec::Vec;

use super::{top_k, DescriptorMatrix};
use crate::{math, Error, Result};

/// Top-`k` references by cosine similarity to `query`, descending, ties to
/// the lower scene index. References for which `excluded` holds are skipped.
pub fn exact_search(
    query: &[f64],
    reference: &DescriptorMatrix,
    k: usize,
    excluded: impl Fn(usize) -> bool,
) -> Result<Vec<(usize, f64)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if query.len() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            found: query.len(),
        });
    }
    let qn = math::norm(query);
    let mut scored = Vec::with_capacity(reference.len());
    for (row, (id, r)) in reference.rows().enumerate() {
        if excluded(id) {
            continue;
        }
        let denom = qn * reference.norm(row);
        let sim = if denom == 0.0 { 0.0 } else { math::dot(query, r) / denom };
        scored.push((id, sim));
    }
    Ok(top_k(scored, k, |a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))))
}
