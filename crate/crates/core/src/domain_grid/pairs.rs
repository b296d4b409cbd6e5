//! Deterministic node-pair enumeration for supremum estimates.
//!
//! Pairs closer than `near_radius` are always visited. The remaining pairs are
//! visited completely when they fit in the budget, otherwise through a stride
//! `2^k` with a fixed per-node offset, so that a larger budget always visits a
//! superset of the pairs visited by a smaller one.

use rayon::prelude::*;

use super::geometry::{dist, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPlan {
    pub near_radius: f64,
    pub stride: usize,
}

impl PairPlan {
    pub fn new(n: usize, near_radius: f64, budget: usize) -> Self {
        let total = n.saturating_mul(n.saturating_sub(1)) / 2;
        let mut stride = 1usize;
        while total / stride > budget.max(1) {
            stride *= 2;
        }
        Self {
            near_radius,
            stride,
        }
    }
}

#[inline]
fn offset(i: usize, stride: usize) -> usize {
    (i.wrapping_mul(2_654_435_761) >> 7) & (stride - 1)
}

struct NodeGrid {
    lo: Point,
    size: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl NodeGrid {
    fn new(points: &[Point], size: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let size = size
            .max((hi[0] - lo[0]).max(hi[1] - lo[1]) / 2048.0)
            .max(1e-300);
        let nx = ((hi[0] - lo[0]) / size) as usize + 1;
        let ny = ((hi[1] - lo[1]) / size) as usize + 1;
        let mut cells = vec![Vec::new(); nx * ny];
        for (i, p) in points.iter().enumerate() {
            let (a, b) = (
                ((p[0] - lo[0]) / size) as usize,
                ((p[1] - lo[1]) / size) as usize,
            );
            cells[a.min(nx - 1) * ny + b.min(ny - 1)].push(i as u32);
        }
        Self {
            lo,
            size,
            nx,
            ny,
            cells,
        }
    }

    fn near(&self, points: &[Point], i: usize, r: f64, out: &mut Vec<usize>) {
        out.clear();
        let p = points[i];
        let a = ((p[0] - self.lo[0]) / self.size) as isize;
        let b = ((p[1] - self.lo[1]) / self.size) as isize;
        let k = (r / self.size).ceil() as isize;
        for da in -k..=k {
            for db in -k..=k {
                let (x, y) = (a + da, b + db);
                if x < 0 || y < 0 || x >= self.nx as isize || y >= self.ny as isize {
                    continue;
                }
                for &j in &self.cells[x as usize * self.ny + y as usize] {
                    let j = j as usize;
                    if j > i && dist(&p, &points[j]) <= r {
                        out.push(j);
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

/// Best value of `f(i, j)` over ordered pairs (both orders of every visited
/// unordered pair). Ties go to the lexicographically smallest `(i, j)`.
/// Pairs where `f` returns NaN are skipped.
pub fn max_over_pairs<F>(points: &[Point], plan: PairPlan, f: F) -> Option<(f64, usize, usize)>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let n = points.len();
    if n < 2 {
        return None;
    }
    let grid = if plan.stride > 1 && plan.near_radius > 0.0 {
        Some(NodeGrid::new(points, plan.near_radius))
    } else {
        None
    };
    let better = |a: &Option<(f64, usize, usize)>, v: f64, i: usize, j: usize| match a {
        None => true,
        Some((bv, bi, bj)) => v > *bv || (v == *bv && (i, j) < (*bi, *bj)),
    };
    let per_node: Vec<Option<(f64, usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(f64, usize, usize)> = None;
            let mut consider = |j: usize| {
                for (a, b) in [(i, j), (j, i)] {
                    let v = f(a, b);
                    if !v.is_nan() && better(&best, v, a, b) {
                        best = Some((v, a, b));
                    }
                }
            };
            if plan.stride == 1 {
                for j in i + 1..n {
                    consider(j);
                }
            } else {
                let s = plan.stride;
                let mut j = i + 1 + offset(i, s);
                while j < n {
                    consider(j);
                    j += s;
                }
                if let Some(g) = &grid {
                    let mut buf = Vec::new();
                    g.near(points, i, plan.near_radius, &mut buf);
                    for j in buf {
                        consider(j);
                    }
                }
            }
            best
        })
        .collect();
    let mut best: Option<(f64, usize, usize)> = None;
    for (v, i, j) in per_node.into_iter().flatten() {
        if better(&best, v, i, j) {
            best = Some((v, i, j));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_enumeration_finds_farthest_pair() {
        let pts: Vec<Point> = (0..50).map(|k| [k as f64, 0.0]).collect();
        let plan = PairPlan::new(pts.len(), 0.0, 10_000);
        assert_eq!(plan.stride, 1);
        let (v, i, j) = max_over_pairs(&pts, plan, |i, j| dist(&pts[i], &pts[j])).unwrap();
        assert_eq!((v, i, j), (49.0, 0, 49));
    }

    #[test]
    fn larger_budget_never_lowers_the_maximum() {
        let pts: Vec<Point> = (0..400)
            .map(|k| [(k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()])
            .collect();
        let f =
            |i: usize, j: usize| (pts[i][0] - pts[j][1]).abs() / (1e-3 + dist(&pts[i], &pts[j]));
        let mut last = 0.0;
        for budget in [500, 2_000, 8_000, 100_000] {
            let plan = PairPlan::new(pts.len(), 0.05, budget);
            let (v, _, _) = max_over_pairs(&pts, plan, f).unwrap();
            assert!(v >= last);
            last = v;
        }
    }
}
