use alloc::collections::BTreeMap;
use alloc::vec::Vec;

/// Uniform bucket grid over planar points for fixed-radius neighbour queries.
pub(crate) struct PlanarGrid<'a> {
    cell: f64,
    points: &'a [(f64, f64)],
    buckets: BTreeMap<(i64, i64), Vec<usize>>,
}

impl<'a> PlanarGrid<'a> {
    /// Buckets `points[i]` for every `i` in `members`.
    pub fn new(points: &'a [(f64, f64)], members: impl IntoIterator<Item = usize>, cell: f64) -> Self {
        let cell = if cell > 0.0 { cell } else { 1.0 };
        let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for i in members {
            let (x, y) = points[i];
            buckets.entry(key(x, y, cell)).or_default().push(i);
        }
        PlanarGrid { cell, points, buckets }
    }

    /// Indices of bucketed points within `radius` of `(x, y)`, in
    /// ascending index order.
    pub fn within(&self, x: f64, y: f64, radius: f64) -> Vec<usize> {
        let span = libm::ceil(radius / self.cell) as i64;
        let (cx, cy) = key(x, y, self.cell);
        let mut out = Vec::new();
        for gx in cx - span..=cx + span {
            for gy in cy - span..=cy + span {
                if let Some(bucket) = self.buckets.get(&(gx, gy)) {
                    for &i in bucket {
                        let (px, py) = self.points[i];
                        if crate::math::planar_distance(x, y, px, py) <= radius {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn key(x: f64, y: f64, cell: f64) -> (i64, i64) {
    (libm::floor(x / cell) as i64, libm::floor(y / cell) as i64)
}
