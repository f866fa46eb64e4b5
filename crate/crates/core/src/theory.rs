//! Leading-order formulas for the line model with uniform directions.
//!
//! `k_d = 2 kappa_{d-1} / (d kappa_d)` is the probability scale of a uniform
//! ray from a base point crossing a small ball: a ball of radius `r` at
//! distance `D` is hit with probability about `k_d (r / D)^{d-1}`. Integrating
//! over base points gives the covering intensity `rho r^{d-1} k_d phi_d(x)`,
//! where `phi_d(x) = int_{[0,1]^{d-1}} |(y, 0) - x|^{-(d-1)} dy`.

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, PointD};
use crate::quadrature::integrate;

const MAX_CELLS: usize = 2_000_000;

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // kappa_n = kappa_{n-2} * 2 pi / n
    let (mut even, mut odd) = (1.0, 2.0);
    let mut k = if n % 2 == 0 { 0 } else { 1 };
    while k + 2 <= n {
        k += 2;
        if n % 2 == 0 {
            even *= 2.0 * std::f64::consts::PI / k as f64;
        } else {
            odd *= 2.0 * std::f64::consts::PI / k as f64;
        }
    }
    if n % 2 == 0 {
        even
    } else {
        odd
    }
}

/// `2 kappa_{d-1} / (d kappa_d)`.
pub fn crossing_constant(d: usize) -> f64 {
    2.0 * unit_ball_volume(d - 1) / (d as f64 * unit_ball_volume(d))
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingProbability {
    pub leading: f64,
    pub lower: f64,
    pub upper: f64,
    /// Exact value, available in the plane.
    pub exact_2d: Option<f64>,
}

/// Probability that a uniformly directed ray from a base point meets a ball
/// of radius `r` whose center lies at distance `dist` above the base.
pub fn crossing_probability(dist: f64, r: f64, d: usize) -> Result<CrossingProbability> {
    check_dim(d)?;
    if !(dist > 0.0 && dist.is_finite()) {
        return Err(Error::InvalidDistance(dist));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be finite and nonnegative, got {r}")));
    }
    if dist <= r {
        let exact_2d = (d == 2).then_some(1.0);
        return Ok(CrossingProbability { leading: 1.0, lower: 1.0, upper: 1.0, exact_2d });
    }
    let u = r / dist;
    let k = crossing_constant(d);
    let leading = u.powi(d as i32 - 1) * k;
    let upper = u.asin().powi(d as i32 - 1) * k;
    let exact_2d = (d == 2).then(|| 2.0 / std::f64::consts::PI * u.asin());
    Ok(CrossingProbability { leading, lower: leading, upper, exact_2d })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiResult {
    pub value: f64,
    pub abs_error: f64,
    pub x: PointD,
}

fn phi_raw(x: &[f64], tol: f64) -> Result<(f64, f64)> {
    let d = x.len();
    let m = d - 1;
    let h = x[m];
    if !(h > 0.0) {
        return Err(Error::DegenerateHeight(h));
    }
    let xh = &x[..m];
    let h2 = h * h;
    let e = (d - 1) as f64;
    let integrand = |y: &[f64]| {
        let r2: f64 = y.iter().zip(xh).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + h2;
        if d == 2 {
            1.0 / r2.sqrt()
        } else if d == 3 {
            1.0 / r2
        } else {
            r2.powf(-0.5 * e)
        }
    };
    let breaks: Vec<Option<f64>> = xh.iter().map(|&c| Some(c)).collect();
    let q = integrate(integrand, &vec![0.0; m], &vec![1.0; m], &breaks, tol, MAX_CELLS)?;
    Ok((q.value, q.abs_error))
}

/// `phi_d(x)` for `x` above the base, to absolute error `tol`.
pub fn phi_d(x: &PointD, tol: f64) -> Result<PhiResult> {
    check_dim(x.dim())?;
    check_tol(tol)?;
    let (value, abs_error) = phi_raw(x.coords(), tol)?;
    Ok(PhiResult { value, abs_error, x: x.clone() })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive and finite, got {tol}")));
    }
    Ok(())
}

/// Default quadrature tolerance for `phi_d` in dimension `d`.
pub fn default_tol(d: usize) -> f64 {
    if d <= 2 {
        1e-8
    } else {
        1e-6
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfPhi {
    pub value: f64,
    pub argmin: PointD,
    /// Smallest value over the corners of the top face.
    pub corner_value: f64,
    /// Whether no searched point beat the best corner by more than `tol`.
    pub corner_confirmed: bool,
}

/// Lowest height the local search may visit; `phi_d` blows up at the base.
const MIN_SEARCH_HEIGHT: f64 = 1e-3;

fn coordinate_search(start: Vec<f64>, f0: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
    let d = start.len();
    let mut x = start;
    let mut fx = f0;
    let mut step = 0.25;
    while step > 1e-6 {
        let mut improved = false;
        for k in 0..d {
            let floor = if k == d - 1 { MIN_SEARCH_HEIGHT } else { 0.0 };
            for sign in [-1.0, 1.0] {
                let mut y = x.clone();
                y[k] = (y[k] + sign * step).clamp(floor, 1.0);
                if y[k] == x[k] {
                    continue;
                }
                let (fy, _) = phi_raw(&y, tol)?;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((x, fx))
}

/// Minimizes `phi_d` over `[0,1]^{d-1} x (0, 1]`: the top-face corners are
/// evaluated first, then a coordinate search runs from every corner and from
/// interior starts.
pub fn inf_phi(d: usize, tol: f64) -> Result<InfPhi> {
    check_dim(d)?;
    check_tol(tol)?;
    let m = d - 1;
    let mut corners = Vec::with_capacity(1 << m);
    for mask in 0..1usize << m {
        let mut x: Vec<f64> = (0..m).map(|k| (mask >> k & 1) as f64).collect();
        x.push(1.0);
        let (v, _) = phi_raw(&x, tol)?;
        corners.push((x, v));
    }
    let (corner_x, corner_value) =
        corners.iter().cloned().min_by(|a, b| a.1.total_cmp(&b.1)).expect("at least one corner");

    let mut starts = corners.clone();
    for &(hc, t) in &[(0.5, 0.5), (0.25, 0.75), (0.5, 1.0)] {
        let mut x = vec![hc; m];
        x.push(t);
        let (v, _) = phi_raw(&x, tol)?;
        starts.push((x, v));
    }
    let (mut best_x, mut best) = (corner_x, corner_value);
    for (x, v) in starts {
        let (y, fy) = coordinate_search(x, v, tol)?;
        if fy < best {
            best = fy;
            best_x = y;
        }
    }
    Ok(InfPhi {
        value: best,
        argmin: PointD::new(best_x),
        corner_value,
        corner_confirmed: corner_value <= best + tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CStar {
    pub d: usize,
    pub inf_phi: f64,
    pub value: f64,
}

impl CStar {
    /// `(c*)^{1/(d-1)}`, the limit of the normalized coverage radius.
    pub fn limit(&self) -> f64 {
        self.value.powf(1.0 / (self.d - 1) as f64)
    }
}

/// `(d^2 / (d - 1)) kappa_d / (2 kappa_{d-1})`.
pub fn c_star_prefactor(d: usize) -> f64 {
    let df = d as f64;
    df * df / (df - 1.0) * unit_ball_volume(d) / (2.0 * unit_ball_volume(d - 1))
}

pub fn c_star(d: usize, tol: f64) -> Result<CStar> {
    let inf = inf_phi(d, tol)?;
    Ok(CStar { d, inf_phi: inf.value, value: c_star_prefactor(d) / inf.value })
}

/// Leading-order mean number of `r`-dilated uniform rays covering `x`.
pub fn expected_cover_count(x: &PointD, rho: f64, r: f64, tol: f64) -> Result<f64> {
    let d = x.dim();
    check_dim(d)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidIntensity(rho));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be finite and nonnegative, got {r}")));
    }
    let phi = phi_d(x, tol)?;
    Ok(rho * r.powi(d as i32 - 1) * crossing_constant(d) * phi.value)
}

/// Leading-order mean uncovered volume of `region` at radius
/// `r = (c log rho / rho)^{1/(d-1)}`: `int_D rho^{-c k_d phi_d(x)} dx`.
pub fn expected_uncovered_volume(region: &AxisBox, c: f64, rho: f64, tol: f64) -> Result<f64> {
    let d = region.dim();
    check_dim(d)?;
    check_tol(tol)?;
    if !(rho > 1.0 && rho.is_finite()) {
        return Err(Error::InvalidIntensity(rho));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("c must be finite and nonnegative, got {c}")));
    }
    if !region.is_within_unit_cube() {
        return Err(Error::InvalidArgument("region must lie inside the unit cube".into()));
    }
    if region.lo()[d - 1] <= 0.0 {
        return Err(Error::DegenerateHeight(region.lo()[d - 1]));
    }
    if c == 0.0 {
        return Ok(region.volume());
    }
    let rate = c * crossing_constant(d) * rho.ln();
    // An error e in phi moves the integrand by at most rate * e.
    let inner_tol = (0.1 * tol / (rate * region.volume())).max(1e-13);
    let mut failure = None;
    let q = integrate(
        |x: &[f64]| match phi_raw(x, inner_tol) {
            Ok((phi, _)) => (-rate * phi).exp(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        region.lo(),
        region.hi(),
        &[],
        0.9 * tol,
        MAX_CELLS,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(q.value)
}
