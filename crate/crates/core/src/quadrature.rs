//! Adaptive tensor-product Gauss-Legendre cubature on boxes.
//!
//! Each cell is integrated with the 5-point and 3-point tensor rules; their
//! difference is the cell's error estimate. The cell with the largest estimate
//! is split into `2^m` halves until the summed estimate drops below the
//! tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
}

const G3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const G3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
const G5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const G5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: f64,
    error: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn tensor_rule<F: FnMut(&[f64]) -> f64>(f: &mut F, lo: &[f64], hi: &[f64], nodes: &[f64], weights: &[f64], x: &mut [f64]) -> f64 {
    let m = lo.len();
    let q = nodes.len();
    let total = q.pow(m as u32);
    let mut sum = 0.0;
    for j in 0..total {
        let mut rem = j;
        let mut w = 1.0;
        for k in 0..m {
            let i = rem % q;
            rem /= q;
            let half = 0.5 * (hi[k] - lo[k]);
            x[k] = lo[k] + half * (1.0 + nodes[i]);
            w *= half * weights[i];
        }
        sum += w * f(x);
    }
    sum
}

fn make_cell<F: FnMut(&[f64]) -> f64>(f: &mut F, lo: Vec<f64>, hi: Vec<f64>, x: &mut [f64]) -> Cell {
    let fine = tensor_rule(f, &lo, &hi, &G5_NODES, &G5_WEIGHTS, x);
    let coarse = tensor_rule(f, &lo, &hi, &G3_NODES, &G3_WEIGHTS, x);
    Cell { lo, hi, value: fine, error: (fine - coarse).abs() }
}

/// Integrates `f` over `[lo, hi]` to absolute error `tol`.
///
/// `breaks` lists one optional interior split point per axis, used to cut the
/// domain before refinement starts (typically at a peak of `f`).
pub(crate) fn integrate<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    breaks: &[Option<f64>],
    tol: f64,
    max_cells: usize,
) -> Result<Quadrature> {
    let m = lo.len();
    let mut x = vec![0.0; m];

    // Initial cells: product of the per-axis pieces cut at the breaks.
    let mut pieces: Vec<Vec<(f64, f64)>> = Vec::with_capacity(m);
    for k in 0..m {
        match breaks.get(k).copied().flatten() {
            Some(b) if b > lo[k] && b < hi[k] => pieces.push(vec![(lo[k], b), (b, hi[k])]),
            _ => pieces.push(vec![(lo[k], hi[k])]),
        }
    }
    let count: usize = pieces.iter().map(Vec::len).product();
    let mut heap = BinaryHeap::new();
    for j in 0..count {
        let mut rem = j;
        let mut clo = Vec::with_capacity(m);
        let mut chi = Vec::with_capacity(m);
        for p in &pieces {
            let (a, b) = p[rem % p.len()];
            rem /= p.len();
            clo.push(a);
            chi.push(b);
        }
        heap.push(make_cell(&mut f, clo, chi, &mut x));
    }

    let mut running: f64 = heap.iter().map(|c| c.error).sum();
    loop {
        if running <= tol {
            running = heap.iter().map(|c| c.error).sum();
        }
        if running <= tol {
            let error = running;
            // Sum in a fixed order so the result does not depend on heap layout.
            let mut cells = heap.into_vec();
            cells.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap_or(Ordering::Equal));
            let value = cells.iter().map(|c| c.value).sum();
            return Ok(Quadrature { value, abs_error: error });
        }
        if heap.len() >= max_cells {
            let abs_error = heap.iter().map(|c| c.error).sum();
            return Err(Error::QuadratureDidNotConverge { tol, abs_error });
        }
        let worst = heap.pop().expect("heap is never empty");
        running -= worst.error;
        let mid: Vec<f64> = worst.lo.iter().zip(&worst.hi).map(|(a, b)| 0.5 * (a + b)).collect();
        for j in 0..1usize << m {
            let mut clo = Vec::with_capacity(m);
            let mut chi = Vec::with_capacity(m);
            for k in 0..m {
                if j >> k & 1 == 0 {
                    clo.push(worst.lo[k]);
                    chi.push(mid[k]);
                } else {
                    clo.push(mid[k]);
                    chi.push(worst.hi[k]);
                }
            }
            let child = make_cell(&mut f, clo, chi, &mut x);
            running += child.error;
            heap.push(child);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact_on_one_cell() {
        let q = integrate(|x| x[0].powi(4) * x[1].powi(3), &[0.0, 0.0], &[1.0, 2.0], &[], 1e-12, 10).unwrap();
        assert!((q.value - 0.2 * 4.0).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand_converges() {
        // Integral of 1 / (y^2 + h^2) over [0, 1] is atan(1 / h) / h.
        let h = 1e-2;
        let q = integrate(|x| 1.0 / (x[0] * x[0] + h * h), &[0.0], &[1.0], &[Some(0.0)], 1e-9, 100_000).unwrap();
        let exact = (1.0 / h).atan() / h;
        assert!((q.value - exact).abs() < 1e-8, "{} vs {exact}", q.value);
    }

    #[test]
    fn cell_cap_is_reported() {
        let r = integrate(|x| 1.0 / x[0].abs().sqrt().max(1e-300), &[-1.0], &[1.0], &[], 1e-14, 8);
        assert!(matches!(r, Err(Error::QuadratureDidNotConverge { .. })));
    }
}
