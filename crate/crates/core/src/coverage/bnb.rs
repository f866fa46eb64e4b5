//! Certified maximization of a lower envelope of distance functions.
//!
//! For `f(x) = min_i g_i(x)` with cell-wise bounds `|g_i(y) - g_i(c)| <= s_i`,
//! every cell carries the upper bound `min_i (g_i(c) + s_i) >= sup_cell f`.
//! Trajectory `i` can attain the minimum somewhere in the cell only if
//! `g_i(c) - s_i` does not exceed that bound, so each cell keeps the short list
//! of such candidates and its sub-cells only look at those.
//!
//! Cells are refined depth first in a fixed order, so the reported bracket
//! depends only on the field, the domain, and the tolerance.

use super::field::{Cell, Field};

pub(crate) const INITIAL_CELLS_PER_AXIS: usize = 9;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bracket {
    pub lower: f64,
    pub upper: f64,
    pub evaluations: u64,
    pub exhausted: bool,
}

struct Node<const D: usize> {
    cell: Cell<D>,
    center_value: f64,
    upper: f64,
    /// Trajectory attaining `upper`.
    best: u32,
    candidates: Vec<u32>,
}

/// Evaluates `cell` against `candidates`, or returns `None` as soon as the
/// cell's upper bound is known to be at most `prune_at`.
fn evaluate<const D: usize, F: Field<D>>(
    field: &F,
    cell: Cell<D>,
    candidates: &[u32],
    scratch: &mut Vec<f64>,
    scale: f64,
    prune_at: f64,
) -> Option<Node<D>> {
    scratch.clear();
    scratch.reserve(candidates.len());
    let mut fmin = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut best = 0;
    for (j, &i) in candidates.iter().enumerate() {
        let (v, s) = field.bound(i as usize, &cell);
        // Lowest value this trajectory can take in the cell.
        scratch.push(v - s);
        fmin = fmin.min(v);
        let u = v + s;
        if u < upper {
            upper = u;
            best = j;
            if scale * upper <= prune_at {
                return None;
            }
        }
    }
    let kept_len = scratch.iter().filter(|&&low| low <= upper).count();
    let mut kept = Vec::with_capacity(kept_len);
    // The trajectory attaining the bound goes first: it is the likeliest to
    // settle the sub-cells early.
    kept.push(candidates[best]);
    for (j, (&i, &low)) in candidates.iter().zip(scratch.iter()).enumerate() {
        if low <= upper && j != best {
            kept.push(i);
        }
    }
    Some(Node { cell, center_value: scale * fmin, upper: scale * upper, best: candidates[best], candidates: kept })
}

/// Brackets `sup_{x in [lo, hi]} scale * f(x)` to within `tol` (in scaled
/// units) unless `budget` field evaluations run out first.
pub(crate) fn maximize<const D: usize, F: Field<D>>(
    field: &F,
    lo: [f64; D],
    hi: [f64; D],
    tol: f64,
    budget: u64,
    scale: f64,
) -> Bracket {
    let n = field.len();
    assert!(n > 0, "empty field");
    let all: Vec<u32> = (0..n as u32).collect();
    let mut scratch = Vec::with_capacity(n);
    let mut evaluations = 0u64;

    let k = INITIAL_CELLS_PER_AXIS;
    let total = k.pow(D as u32);
    let mut roots = Vec::with_capacity(total);
    for j in 0..total {
        let mut rem = j;
        let mut clo = [0.0; D];
        let mut chi = [0.0; D];
        for a in 0..D {
            let idx = rem % k;
            rem /= k;
            let w = (hi[a] - lo[a]) / k as f64;
            clo[a] = lo[a] + idx as f64 * w;
            chi[a] = if idx + 1 == k { hi[a] } else { lo[a] + (idx + 1) as f64 * w };
        }
        roots.push(
            evaluate(field, Cell::new(clo, chi), &all, &mut scratch, scale, f64::NEG_INFINITY)
                .expect("nothing is pruned below -inf"),
        );
        evaluations += n as u64;
    }
    let mut theta = roots.iter().map(|r| r.center_value).fold(f64::NEG_INFINITY, f64::max);
    // Highest upper bound ends up on top of the stack.
    roots.sort_by(|a, b| a.upper.total_cmp(&b.upper));
    let mut stack = roots;
    let mut leaf_max = f64::NEG_INFINITY;
    let mut exhausted = false;

    while let Some(node) = stack.pop() {
        if node.upper <= theta {
            continue;
        }
        if node.upper <= theta + tol {
            leaf_max = leaf_max.max(node.upper);
            continue;
        }
        let cost = 2 * node.candidates.len() as u64;
        if evaluations.saturating_add(cost) > budget {
            stack.push(node);
            exhausted = true;
            break;
        }
        let axis = field.split_axis(node.best as usize, &node.cell);
        let mid = node.cell.center[axis];
        if !(mid > node.cell.lo[axis] && mid < node.cell.hi[axis]) {
            // Cell is at floating-point resolution; keep its bound as is.
            leaf_max = leaf_max.max(node.upper);
            continue;
        }
        let (left, right) = node.cell.bisect(axis);
        let a = evaluate(field, left, &node.candidates, &mut scratch, scale, theta);
        evaluations += scratch.len() as u64;
        if let Some(a) = &a {
            theta = theta.max(a.center_value);
        }
        let b = evaluate(field, right, &node.candidates, &mut scratch, scale, theta);
        evaluations += scratch.len() as u64;
        if let Some(b) = &b {
            theta = theta.max(b.center_value);
        }
        match (a, b) {
            (Some(a), Some(b)) if a.upper >= b.upper => {
                stack.push(b);
                stack.push(a);
            }
            (Some(a), Some(b)) => {
                stack.push(a);
                stack.push(b);
            }
            (Some(c), None) | (None, Some(c)) => stack.push(c),
            (None, None) => {}
        }
    }

    let mut upper = theta.max(leaf_max);
    if exhausted {
        upper = stack.iter().map(|n| n.upper).fold(upper, f64::max);
    }
    Bracket { lower: theta, upper, evaluations, exhausted }
}

#[cfg(test)]
mod tests {
    use super::super::field::PointTable;
    use super::*;

    #[test]
    fn single_point_in_interval() {
        // f(y) = |y - 0.3| on [0, 1] peaks at y = 1 with value 0.7.
        let field = PointTable::<1>::new(&[0.3]);
        let b = maximize(&field, [0.0], [1.0], 1e-9, u64::MAX, 1.0);
        assert!(!b.exhausted);
        assert!(b.lower <= 0.7 + 1e-15 && b.upper >= 0.7 - 1e-15);
        assert!(b.upper - b.lower <= 1e-9);
    }

    #[test]
    fn two_points_in_square() {
        // Largest empty circle for points (0,0) and (1,1) in the unit square
        // is centered at (1,0) or (0,1) with radius 1.
        let field = PointTable::<2>::new(&[0.0, 0.0, 1.0, 1.0]);
        let b = maximize(&field, [0.0, 0.0], [1.0, 1.0], 1e-6, u64::MAX, 1.0);
        assert!(b.lower <= 1.0 && b.upper >= 1.0 - 1e-12, "{b:?}");
        assert!(b.upper - b.lower <= 1e-6);
    }

    #[test]
    fn budget_exhaustion_keeps_a_valid_bracket() {
        let pts: Vec<f64> = (0..40).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let field = PointTable::<2>::new(&pts);
        let full = maximize(&field, [0.0, 0.0], [1.0, 1.0], 1e-9, u64::MAX, 1.0);
        let cut = maximize(&field, [0.0, 0.0], [1.0, 1.0], 1e-9, 81 * 20 + 50, 1.0);
        assert!(cut.exhausted);
        assert!(cut.lower <= full.upper && cut.upper >= full.lower);
        assert!(cut.upper - cut.lower > full.upper - full.lower);
    }
}
