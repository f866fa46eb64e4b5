//! Flat per-trajectory tables and the distance fields they define.
//!
//! Each table answers `value(i, x)`, the distance that decides whether
//! trajectory `i` covers `x`, together with the cell-wise modulus bounds the
//! branch and bound needs. Tables are sized at compile time by the dimension
//! `D` of the search domain.

use crate::error::{Error, Result};
use crate::processes::{BrownianModelSample, LineModelSample};

/// Axis-aligned cell of the search domain with cached center and half-widths.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cell<const D: usize> {
    pub lo: [f64; D],
    pub hi: [f64; D],
    pub center: [f64; D],
    pub half: [f64; D],
    /// Euclidean half-diagonal.
    pub half_diag: f64,
    /// Half-diagonal of the first `D - 1` axes.
    pub half_diag_h: f64,
}

impl<const D: usize> Cell<D> {
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Self {
        let mut center = [0.0; D];
        let mut half = [0.0; D];
        let mut hh2 = 0.0;
        for k in 0..D {
            center[k] = 0.5 * (lo[k] + hi[k]);
            half[k] = 0.5 * (hi[k] - lo[k]);
            if k + 1 < D {
                hh2 += half[k] * half[k];
            }
        }
        let ht = half[D - 1];
        Cell { lo, hi, center, half, half_diag: (hh2 + ht * ht).sqrt(), half_diag_h: hh2.sqrt() }
    }

    pub fn half_t(&self) -> f64 {
        self.half[D - 1]
    }

    /// Longest axis among the first `end`, first one on ties.
    pub fn longest_axis(&self, end: usize) -> usize {
        let mut best = 0;
        for k in 1..end {
            if self.half[k] > self.half[best] {
                best = k;
            }
        }
        best
    }

    pub fn bisect(&self, axis: usize) -> (Self, Self) {
        let mid = self.center[axis];
        let mut left_hi = self.hi;
        left_hi[axis] = mid;
        let mut right_lo = self.lo;
        right_lo[axis] = mid;
        (Cell::new(self.lo, left_hi), Cell::new(right_lo, self.hi))
    }
}

/// Distance field `f(x) = min_i value(i, x)` over a family of trajectories.
pub(crate) trait Field<const D: usize> {
    fn len(&self) -> usize;
    fn value(&self, i: usize, x: &[f64; D]) -> f64;
    /// `value(i, cell.center)` and a bound on `|value(i, y) - value(i, cell.center)|`
    /// for `y` in `cell`.
    fn bound(&self, i: usize, cell: &Cell<D>) -> (f64, f64);
    /// Axis to bisect; `i` is the trajectory attaining the cell's upper bound.
    fn split_axis(&self, i: usize, cell: &Cell<D>) -> usize;
}

/// Trajectories whose horizontal extent over a height band can be bounded,
/// for building a coverage index.
pub(crate) trait Banded<const D: usize>: Field<D> {
    /// Writes into `lo`/`hi` (length `D - 1`) a box containing the horizontal
    /// positions of trajectory `i` at heights in `[t0, t1]`. Returns `false`
    /// when the trajectory has no point at those heights.
    fn band_extent(&self, i: usize, t0: f64, t1: f64, lo: &mut [f64], hi: &mut [f64]) -> bool;

    /// Extra height reach of a dilation around a trajectory point.
    fn vertical_reach(&self, r: f64) -> f64;
}

/// Permutation placing trajectories whose positions (row-major, `m` per
/// trajectory) are close together next to each other, so that the short
/// candidate lists of small cells touch few cache lines.
fn locality_order(m: usize, positions: &[f64]) -> Vec<usize> {
    let n = positions.len() / m;
    let g = ((n as f64).powf(1.0 / m as f64) / 2.0).ceil().max(1.0);
    let key = |i: usize| {
        let p = &positions[i * m..(i + 1) * m];
        let mut cell = 0u64;
        for (k, &c) in p.iter().enumerate().rev() {
            let q = (c.clamp(0.0, 1.0) * g).min(g - 1.0) as u64;
            // Snake through the grid so consecutive rows stay adjacent.
            let q = if k == 0 && cell % 2 == 1 { g as u64 - 1 - q } else { q };
            cell = cell * g as u64 + q;
        }
        (cell, p[0])
    };
    let keys: Vec<(u64, f64)> = (0..n).map(key).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].0.cmp(&keys[b].0).then(keys[a].1.total_cmp(&keys[b].1)));
    order
}

#[derive(Debug, Clone, Copy)]
struct RayRow<const D: usize> {
    /// Base point with a trailing zero height.
    base: [f64; D],
    dir: [f64; D],
}

/// Rays for the full-ball dilation; `value` is the Euclidean ray distance.
pub(crate) struct RayTable<const D: usize> {
    rows: Vec<RayRow<D>>,
}

impl<const D: usize> RayTable<D> {
    pub fn new(sample: &LineModelSample) -> Self {
        assert_eq!(sample.d, D);
        let rows = sample
            .rays
            .iter()
            .map(|r| {
                let mut base = [0.0; D];
                base[..D - 1].copy_from_slice(r.base.coords());
                let mut dir = [0.0; D];
                dir.copy_from_slice(r.dir.coords());
                RayRow { base, dir }
            })
            .collect::<Vec<_>>();
        let mid: Vec<f64> = rows
            .iter()
            .flat_map(|r| {
                let a = if r.dir[D - 1] > 0.0 { 0.5 / r.dir[D - 1] } else { 0.0 };
                (0..D - 1).map(move |k| r.base[k] + a * r.dir[k])
            })
            .collect();
        let rows = locality_order(D - 1, &mid).into_iter().map(|i| rows[i]).collect();
        RayTable { rows }
    }

    #[inline(always)]
    fn distance(row: &RayRow<D>, x: &[f64; D]) -> f64 {
        let mut diff = [0.0; D];
        let mut proj = 0.0;
        for k in 0..D {
            diff[k] = x[k] - row.base[k];
            proj += diff[k] * row.dir[k];
        }
        let a = proj.max(0.0);
        let mut acc = 0.0;
        for k in 0..D {
            let r = diff[k] - a * row.dir[k];
            acc += r * r;
        }
        acc.sqrt()
    }
}

impl<const D: usize> Field<D> for RayTable<D> {
    fn len(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    fn value(&self, i: usize, x: &[f64; D]) -> f64 {
        Self::distance(&self.rows[i], x)
    }

    /// Distance to a ray is 1-Lipschitz.
    #[inline]
    fn bound(&self, i: usize, cell: &Cell<D>) -> (f64, f64) {
        (Self::distance(&self.rows[i], &cell.center), cell.half_diag)
    }

    fn split_axis(&self, _i: usize, cell: &Cell<D>) -> usize {
        cell.longest_axis(D)
    }
}

impl<const D: usize> Banded<D> for RayTable<D> {
    fn band_extent(&self, i: usize, t0: f64, t1: f64, lo: &mut [f64], hi: &mut [f64]) -> bool {
        let row = &self.rows[i];
        let m = D - 1;
        let sd = row.dir[m];
        let t0 = t0.max(0.0);
        if t1 < t0 {
            return false;
        }
        if sd > 0.0 {
            let (a0, a1) = (t0 / sd, t1 / sd);
            for k in 0..m {
                let (p, q) = (row.base[k] + a0 * row.dir[k], row.base[k] + a1 * row.dir[k]);
                lo[k] = p.min(q);
                hi[k] = p.max(q);
            }
            true
        } else {
            // A flat ray stays at height 0 and runs off along its direction.
            if t0 > 0.0 {
                return false;
            }
            for k in 0..m {
                let (b, s) = (row.base[k], row.dir[k]);
                lo[k] = if s < 0.0 { f64::NEG_INFINITY } else { b };
                hi[k] = if s > 0.0 { f64::INFINITY } else { b };
            }
            true
        }
    }

    fn vertical_reach(&self, r: f64) -> f64 {
        r
    }
}

#[derive(Debug, Clone, Copy)]
struct SlideRow<const D: usize> {
    /// Horizontal base; the last entry is unused.
    base: [f64; D],
    /// Horizontal displacement per unit height; the last entry is unused.
    vel: [f64; D],
    speed: f64,
}

/// Rays for the base-disk dilation; `value` is the horizontal offset at the
/// query height.
pub(crate) struct SlidingTable<const D: usize> {
    rows: Vec<SlideRow<D>>,
}

impl<const D: usize> SlidingTable<D> {
    pub fn new(sample: &LineModelSample) -> Result<Self> {
        assert_eq!(sample.d, D);
        let m = D - 1;
        let mut rows = Vec::with_capacity(sample.rays.len());
        for r in &sample.rays {
            let s = r.dir.coords();
            let sd = s[m];
            if sd <= 0.0 {
                return Err(Error::ZeroVerticalComponent);
            }
            let mut base = [0.0; D];
            base[..m].copy_from_slice(r.base.coords());
            let mut vel = [0.0; D];
            for k in 0..m {
                vel[k] = s[k] / sd;
            }
            let speed = vel.iter().map(|c| c * c).sum::<f64>().sqrt();
            rows.push(SlideRow { base, vel, speed });
        }
        let mid: Vec<f64> = rows.iter().flat_map(|r| (0..m).map(move |k| r.base[k] + 0.5 * r.vel[k])).collect();
        let rows = locality_order(m, &mid).into_iter().map(|i| rows[i]).collect();
        Ok(SlidingTable { rows })
    }

    /// Positions of all rays at height `t`, row-major with `D - 1` coordinates.
    pub fn positions_at(&self, t: f64) -> Vec<f64> {
        let m = D - 1;
        let mut out = Vec::with_capacity(self.rows.len() * m);
        for row in &self.rows {
            for k in 0..m {
                out.push(row.base[k] + t * row.vel[k]);
            }
        }
        out
    }
}

impl<const D: usize> Field<D> for SlidingTable<D> {
    fn len(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    fn value(&self, i: usize, x: &[f64; D]) -> f64 {
        let row = &self.rows[i];
        let t = x[D - 1];
        if D == 2 {
            return (x[0] - row.base[0] - t * row.vel[0]).abs();
        }
        let mut acc = 0.0;
        for k in 0..D - 1 {
            let r = x[k] - row.base[k] - t * row.vel[k];
            acc += r * r;
        }
        acc.sqrt()
    }

    #[inline]
    fn bound(&self, i: usize, cell: &Cell<D>) -> (f64, f64) {
        let v = self.value(i, &cell.center);
        (v, cell.half_diag_h + self.rows[i].speed * cell.half_t())
    }

    fn split_axis(&self, i: usize, cell: &Cell<D>) -> usize {
        if self.rows[i].speed * cell.half_t() >= cell.half_diag_h {
            D - 1
        } else {
            cell.longest_axis(D - 1)
        }
    }
}

impl<const D: usize> Banded<D> for SlidingTable<D> {
    fn band_extent(&self, i: usize, t0: f64, t1: f64, lo: &mut [f64], hi: &mut [f64]) -> bool {
        let row = &self.rows[i];
        for k in 0..D - 1 {
            let (p, q) = (row.base[k] + t0 * row.vel[k], row.base[k] + t1 * row.vel[k]);
            lo[k] = p.min(q);
            hi[k] = p.max(q);
        }
        true
    }

    fn vertical_reach(&self, _r: f64) -> f64 {
        0.0
    }
}

/// Grid steps per leaf of the per-path range tree.
const BLOCK: usize = 16;

/// Piecewise-linear Brownian paths for the base-disk dilation.
///
/// Besides the grid positions, every path keeps a small segment tree of
/// coordinate-wise minima and maxima over blocks of [`BLOCK`] steps, so the
/// spread of a path over a long time range is found without visiting every
/// grid point.
pub(crate) struct PathTable<const D: usize> {
    n_steps: usize,
    /// `(n_steps + 1) * (D - 1)` grid positions per path.
    pos: Vec<f64>,
    /// Leaves in each path's tree (a power of two).
    leaves: usize,
    /// `2 * leaves * (D - 1)` entries per path; node `j` holds coordinates at
    /// `j * (D - 1)`.
    tree_min: Vec<f64>,
    tree_max: Vec<f64>,
}

impl<const D: usize> PathTable<D> {
    const M: usize = D - 1;

    pub fn new(sample: &BrownianModelSample) -> Self {
        assert_eq!(sample.d, D);
        let m = Self::M;
        let n_steps = sample.n_steps;
        let n_paths = sample.paths.len();
        let mut pos = Vec::with_capacity(n_paths * (n_steps + 1) * m);
        let mid: Vec<f64> = sample.paths.iter().flat_map(|p| p.position(0.5)).collect();
        for i in locality_order(m, &mid) {
            pos.extend(sample.paths[i].grid_positions());
        }
        let blocks = n_steps.div_ceil(BLOCK);
        let leaves = blocks.next_power_of_two();
        let per_path = 2 * leaves * m;
        let mut tree_min = vec![f64::INFINITY; n_paths * per_path];
        let mut tree_max = vec![f64::NEG_INFINITY; n_paths * per_path];
        let stride = (n_steps + 1) * m;
        for i in 0..n_paths {
            let row = &pos[i * stride..(i + 1) * stride];
            let tmin = &mut tree_min[i * per_path..(i + 1) * per_path];
            let tmax = &mut tree_max[i * per_path..(i + 1) * per_path];
            for b in 0..blocks {
                let node = leaves + b;
                for v in b * BLOCK..=((b + 1) * BLOCK).min(n_steps) {
                    for k in 0..m {
                        let c = row[v * m + k];
                        tmin[node * m + k] = tmin[node * m + k].min(c);
                        tmax[node * m + k] = tmax[node * m + k].max(c);
                    }
                }
            }
            for node in (1..leaves).rev() {
                for k in 0..m {
                    tmin[node * m + k] = tmin[2 * node * m + k].min(tmin[(2 * node + 1) * m + k]);
                    tmax[node * m + k] = tmax[2 * node * m + k].max(tmax[(2 * node + 1) * m + k]);
                }
            }
        }
        PathTable { n_steps, pos, leaves, tree_min, tree_max }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let stride = (self.n_steps + 1) * Self::M;
        &self.pos[i * stride..(i + 1) * stride]
    }

    /// Interpolated position of path `i` at time `t`.
    #[inline]
    fn position(&self, i: usize, t: f64) -> [f64; D] {
        let m = Self::M;
        let n = self.n_steps;
        let s = t.clamp(0.0, 1.0) * n as f64;
        let k = (s as usize).min(n - 1);
        let frac = s - k as f64;
        let row = self.row(i);
        let mut out = [0.0; D];
        for j in 0..m {
            let a = row[k * m + j];
            out[j] = a + frac * (row[(k + 1) * m + j] - a);
        }
        out
    }

    /// Grid indices strictly inside `(t0, t1)` or on its ends, as an
    /// inclusive range; empty when `first > last`.
    #[inline]
    fn interior_vertices(&self, t0: f64, t1: f64) -> (usize, usize) {
        let n = self.n_steps as f64;
        let first = (t0.max(0.0) * n).ceil() as usize;
        let last = ((t1.min(1.0) * n).floor().max(0.0) as usize).min(self.n_steps);
        (first, last)
    }

    /// Widens `lo`/`hi` by the coordinate range of grid points `a..=b` of path `i`.
    fn widen_by_range(&self, i: usize, a: usize, b: usize, lo: &mut [f64; D], hi: &mut [f64; D]) {
        let m = Self::M;
        let row = self.row(i);
        let scan = |from: usize, to: usize, lo: &mut [f64; D], hi: &mut [f64; D]| {
            for v in from..=to {
                for k in 0..m {
                    lo[k] = lo[k].min(row[v * m + k]);
                    hi[k] = hi[k].max(row[v * m + k]);
                }
            }
        };
        let first_block = a.div_ceil(BLOCK);
        let end_block = b / BLOCK; // blocks first_block..end_block are whole
        if end_block <= first_block + 1 {
            scan(a, b, lo, hi);
            return;
        }
        scan(a, first_block * BLOCK, lo, hi);
        scan(end_block * BLOCK, b, lo, hi);
        let per_path = 2 * self.leaves * m;
        let tmin = &self.tree_min[i * per_path..(i + 1) * per_path];
        let tmax = &self.tree_max[i * per_path..(i + 1) * per_path];
        let mut l = first_block + self.leaves;
        let mut r = end_block + self.leaves;
        let take = |node: usize, lo: &mut [f64; D], hi: &mut [f64; D]| {
            for k in 0..m {
                lo[k] = lo[k].min(tmin[node * m + k]);
                hi[k] = hi[k].max(tmax[node * m + k]);
            }
        };
        while l < r {
            if l & 1 == 1 {
                take(l, lo, hi);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                take(r, lo, hi);
            }
            l >>= 1;
            r >>= 1;
        }
    }

    /// Bound on the distance between the path at times in `[t0, t1]` and at `tc`.
    fn displacement(&self, i: usize, t0: f64, t1: f64, tc: f64) -> f64 {
        let m = Self::M;
        let c = self.position(i, tc);
        let dist2 = |q: &[f64]| {
            let mut acc = 0.0;
            for k in 0..m {
                acc += (q[k] - c[k]) * (q[k] - c[k]);
            }
            acc
        };
        let mut best = dist2(&self.position(i, t0)).max(dist2(&self.position(i, t1)));
        let (first, last) = self.interior_vertices(t0, t1);
        if first > last {
            return best.sqrt();
        }
        if last - first <= 2 * BLOCK {
            let row = self.row(i);
            for v in first..=last {
                best = best.max(dist2(&row[v * m..(v + 1) * m]));
            }
            return best.sqrt();
        }
        let mut lo = [f64::INFINITY; D];
        let mut hi = [f64::NEG_INFINITY; D];
        self.widen_by_range(i, first, last, &mut lo, &mut hi);
        let mut far = 0.0;
        for k in 0..m {
            let e = (hi[k] - c[k]).max(c[k] - lo[k]);
            far += e * e;
        }
        best.max(far).sqrt()
    }
}

impl<const D: usize> Field<D> for PathTable<D> {
    fn len(&self) -> usize {
        self.pos.len() / ((self.n_steps + 1) * Self::M)
    }

    #[inline]
    fn value(&self, i: usize, x: &[f64; D]) -> f64 {
        let p = self.position(i, x[D - 1]);
        if D == 2 {
            return (p[0] - x[0]).abs();
        }
        let mut acc = 0.0;
        for k in 0..D - 1 {
            acc += (p[k] - x[k]) * (p[k] - x[k]);
        }
        acc.sqrt()
    }

    fn bound(&self, i: usize, cell: &Cell<D>) -> (f64, f64) {
        let t = D - 1;
        let v = self.value(i, &cell.center);
        (v, cell.half_diag_h + self.displacement(i, cell.lo[t], cell.hi[t], cell.center[t]))
    }

    fn split_axis(&self, i: usize, cell: &Cell<D>) -> usize {
        let t = D - 1;
        if self.displacement(i, cell.lo[t], cell.hi[t], cell.center[t]) >= cell.half_diag_h {
            t
        } else {
            cell.longest_axis(t)
        }
    }
}

impl<const D: usize> Banded<D> for PathTable<D> {
    fn band_extent(&self, i: usize, t0: f64, t1: f64, lo: &mut [f64], hi: &mut [f64]) -> bool {
        let m = Self::M;
        let a = self.position(i, t0);
        let b = self.position(i, t1);
        let mut blo = [0.0; D];
        let mut bhi = [0.0; D];
        for k in 0..m {
            blo[k] = a[k].min(b[k]);
            bhi[k] = a[k].max(b[k]);
        }
        let (first, last) = self.interior_vertices(t0, t1);
        if first <= last {
            self.widen_by_range(i, first, last, &mut blo, &mut bhi);
        }
        lo.copy_from_slice(&blo[..m]);
        hi.copy_from_slice(&bhi[..m]);
        true
    }

    fn vertical_reach(&self, _r: f64) -> f64 {
        0.0
    }
}

/// Points in `R^D`; the field is the Euclidean nearest-point distance.
pub(crate) struct PointTable<const D: usize> {
    pos: Vec<[f64; D]>,
}

impl<const D: usize> PointTable<D> {
    /// `pos` holds the points row-major.
    pub fn new(pos: &[f64]) -> Self {
        PointTable { pos: pos.chunks_exact(D).map(|c| c.try_into().expect("chunk of length D")).collect() }
    }
}

impl<const D: usize> Field<D> for PointTable<D> {
    fn len(&self) -> usize {
        self.pos.len()
    }

    #[inline]
    fn value(&self, i: usize, x: &[f64; D]) -> f64 {
        let p = &self.pos[i];
        let mut acc = 0.0;
        for k in 0..D {
            acc += (p[k] - x[k]) * (p[k] - x[k]);
        }
        acc.sqrt()
    }

    #[inline]
    fn bound(&self, i: usize, cell: &Cell<D>) -> (f64, f64) {
        (self.value(i, &cell.center), cell.half_diag)
    }

    fn split_axis(&self, _i: usize, cell: &Cell<D>) -> usize {
        cell.longest_axis(D)
    }
}
