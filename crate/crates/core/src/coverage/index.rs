//! Bucket grid for batched point-coverage queries at a fixed dilation radius.
//!
//! The cube is cut into height bands and, within each band, into horizontal
//! cells. A trajectory is listed in every cell that its dilation can reach, so
//! a query only tests the trajectories listed in the query's own cell.

use super::field::Banded;

#[derive(Debug, Clone)]
pub(crate) struct Grid {
    m: usize,
    cells_per_axis: usize,
    bands: usize,
    offsets: Vec<usize>,
    entries: Vec<u32>,
}

const MAX_CELLS: usize = 1 << 21;

fn choose_resolution(n: usize, m: usize, r: f64) -> (usize, usize) {
    let spacing = (1.0 / n.max(1) as f64).powf(1.0 / m as f64);
    let width = (2.0 * r).max(spacing);
    let cap = ((MAX_CELLS / 64) as f64).powf(1.0 / m as f64).floor() as usize;
    let cells = ((1.0 / width).round() as usize).clamp(1, cap.max(1));
    let bands = (cells / 4).clamp(1, 64);
    (cells, bands)
}

impl Grid {
    pub fn build<const D: usize, T: Banded<D>>(table: &T, r: f64) -> Grid {
        let m = D - 1;
        let n = table.len();
        let (cells_per_axis, bands) = choose_resolution(n, m, r);
        let per_band = cells_per_axis.pow(m as u32);
        let reach = table.vertical_reach(r);
        let cf = cells_per_axis as f64;
        let bh = 1.0 / bands as f64;

        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let mut lo = vec![0.0; m];
        let mut hi = vec![0.0; m];
        let mut ilo = vec![0usize; m];
        let mut ihi = vec![0usize; m];
        let mut idx = vec![0usize; m];
        for i in 0..n {
            for band in 0..bands {
                let t0 = band as f64 * bh - reach;
                let t1 = (band + 1) as f64 * bh + reach;
                if !table.band_extent(i, t0, t1, &mut lo, &mut hi) {
                    continue;
                }
                let mut empty = false;
                for k in 0..m {
                    let a = lo[k] - r;
                    let b = hi[k] + r;
                    if b < 0.0 || a > 1.0 {
                        empty = true;
                        break;
                    }
                    ilo[k] = ((a.max(0.0) * cf).floor() as usize).min(cells_per_axis - 1);
                    ihi[k] = ((b.min(1.0) * cf).floor() as usize).min(cells_per_axis - 1);
                }
                if empty {
                    continue;
                }
                idx.copy_from_slice(&ilo);
                loop {
                    let mut cell = 0;
                    for k in (0..m).rev() {
                        cell = cell * cells_per_axis + idx[k];
                    }
                    pairs.push(((band * per_band + cell) as u32, i as u32));
                    let mut k = 0;
                    while k < m {
                        if idx[k] < ihi[k] {
                            idx[k] += 1;
                            break;
                        }
                        idx[k] = ilo[k];
                        k += 1;
                    }
                    if k == m {
                        break;
                    }
                }
            }
        }

        let total = bands * per_band;
        let mut offsets = vec![0usize; total + 1];
        for &(c, _) in &pairs {
            offsets[c as usize + 1] += 1;
        }
        for c in 0..total {
            offsets[c + 1] += offsets[c];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![0u32; pairs.len()];
        for &(c, i) in &pairs {
            entries[fill[c as usize]] = i;
            fill[c as usize] += 1;
        }
        Grid { m, cells_per_axis, bands, offsets, entries }
    }

    /// Trajectories whose dilation may reach `x in [0,1]^d`.
    pub fn candidates(&self, x: &[f64]) -> &[u32] {
        let m = self.m;
        let mut cell = 0;
        for k in (0..m).rev() {
            let ix = ((x[k] * self.cells_per_axis as f64).floor().max(0.0) as usize).min(self.cells_per_axis - 1);
            cell = cell * self.cells_per_axis + ix;
        }
        let band = ((x[m] * self.bands as f64).floor().max(0.0) as usize).min(self.bands - 1);
        let c = band * self.cells_per_axis.pow(m as u32) + cell;
        &self.entries[self.offsets[c]..self.offsets[c + 1]]
    }
}
