//! Euclidean primitives in dimension `d >= 2`.
//!
//! The last coordinate is the "height" (time) axis. Trajectories start on the
//! base `[0,1]^{d-1} x {0}` of the unit cube and move upwards.

use crate::error::{Error, Result};

/// Minimum vertical component of a direction inside an orthant cone: `2/sqrt(5)`.
pub const CONE_MIN_VERTICAL: f64 = 0.894_427_190_999_915_9;

/// Tolerance on `|s| = 1` for [`Direction`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// A point of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointD(Vec<f64>);

impl PointD {
    pub fn new(coords: Vec<f64>) -> Self {
        PointD(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Height (last coordinate).
    pub fn height(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// The first `d - 1` coordinates.
    pub fn horizontal(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn in_unit_cube(&self) -> bool {
        self.0.iter().all(|c| (0.0..=1.0).contains(c))
    }
}

impl From<Vec<f64>> for PointD {
    fn from(v: Vec<f64>) -> Self {
        PointD(v)
    }
}

/// A starting point on the cube base, stored without its zero height.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePoint(Vec<f64>);

impl BasePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint("base point needs at least one coordinate".into()));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidPoint(format!("base coordinate {c} outside [0,1]")));
        }
        Ok(BasePoint(coords))
    }

    pub(crate) fn from_unchecked(coords: Vec<f64>) -> Self {
        BasePoint(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Ambient dimension `d` of the cube this point is the base of.
    pub fn ambient_dim(&self) -> usize {
        self.0.len() + 1
    }
}

/// A unit vector on the upper hemisphere (`s_d >= 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`. Fails on zero or non-finite input, fewer than two
    /// coordinates, or a negative last coordinate.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::InvalidDirection(format!("need d >= 2 coordinates, got {}", v.len())));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDirection("non-finite coordinate".into()));
        }
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidDirection("zero vector".into()));
        }
        if v[v.len() - 1] < 0.0 {
            return Err(Error::InvalidDirection("last coordinate must be non-negative".into()));
        }
        Ok(Direction(v.into_iter().map(|c| c / norm).collect()))
    }

    /// Caller guarantees unit norm and `s_d >= 0`.
    pub(crate) fn from_unit_unchecked(v: Vec<f64>) -> Self {
        debug_assert!((v.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() <= 1e-9);
        Direction(v)
    }

    /// `(0, ..., 0, 1)`.
    pub fn vertical(d: usize) -> Self {
        let mut v = vec![0.0; d];
        v[d - 1] = 1.0;
        Direction(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn vertical_component(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Horizontal displacement per unit of height, `|s_h| / s_d`.
    pub fn horizontal_speed(&self) -> f64 {
        let sd = self.vertical_component();
        let h2: f64 = self.0[..self.0.len() - 1].iter().map(|c| c * c).sum();
        h2.sqrt() / sd
    }

    pub fn is_unit(&self) -> bool {
        (self.0.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs() <= UNIT_NORM_TOL
    }
}

/// Ray `{base x {0} + a * dir : a >= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineRay {
    pub base: BasePoint,
    pub dir: Direction,
}

impl LineRay {
    pub fn new(base: BasePoint, dir: Direction) -> Result<Self> {
        if base.ambient_dim() != dir.dim() {
            return Err(Error::DimensionMismatch { expected: dir.dim(), found: base.ambient_dim() });
        }
        Ok(LineRay { base, dir })
    }

    pub fn dim(&self) -> usize {
        self.dir.dim()
    }
}

/// Sign pattern `z in {-1,+1}^{d-1}` selecting the cone of directions with
/// `sgn(s_i) = z_i` and `s_d >= 2/sqrt(5)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrthantCone(Vec<i8>);

impl OrthantCone {
    pub fn new(z: Vec<i8>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidArgument("cone needs at least one sign".into()));
        }
        if z.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(format!("cone signs must be +1 or -1, got {z:?}")));
        }
        Ok(OrthantCone(z))
    }

    /// All `2^{d-1}` cones in dimension `d`. Cone `j` has `z_k = -1` exactly
    /// when bit `k` of `j` is set, so the first cone is all `+1`.
    pub fn all(d: usize) -> Vec<OrthantCone> {
        assert!(d >= 2, "dimension must be at least 2");
        let m = d - 1;
        (0..1usize << m)
            .map(|j| OrthantCone((0..m).map(|k| if (j >> k) & 1 == 0 { 1 } else { -1 }).collect()))
            .collect()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.len() + 1
    }
}

/// Axis-aligned box `[lo_1,hi_1] x ... x [lo_n,hi_n]` with positive volume.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidArgument("box corners must have equal, positive length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidArgument(format!("empty box {lo:?} .. {hi:?}")));
        }
        Ok(AxisBox { lo, hi })
    }

    pub fn unit_cube(d: usize) -> Self {
        AxisBox { lo: vec![0.0; d], hi: vec![1.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn is_within_unit_cube(&self) -> bool {
        self.lo.iter().all(|&a| a >= 0.0) && self.hi.iter().all(|&b| b <= 1.0)
    }
}

/// Squared distance from `x` to the ray starting at `base x {0}` with unit
/// direction `dir`. `base` has `d - 1` entries.
#[inline]
pub(crate) fn ray_distance_sq(x: &[f64], base: &[f64], dir: &[f64]) -> f64 {
    let m = base.len();
    let mut proj = x[m] * dir[m];
    for k in 0..m {
        proj += (x[k] - base[k]) * dir[k];
    }
    let a = proj.max(0.0);
    let dz = x[m] - a * dir[m];
    let mut acc = dz * dz;
    for k in 0..m {
        let r = x[k] - base[k] - a * dir[k];
        acc += r * r;
    }
    acc
}

/// Distance from `x` to the ray, i.e. `min_{a >= 0} |x - (base x {0} + a dir)|`.
pub fn point_ray_distance(x: &PointD, ray: &LineRay) -> f64 {
    assert_eq!(x.dim(), ray.dim(), "point and ray dimensions differ");
    ray_distance_sq(x.coords(), ray.base.coords(), ray.dir.coords()).sqrt()
}

/// Distance from `x` to the full line through the ray (both orientations).
pub fn point_line_distance(x: &PointD, ray: &LineRay) -> f64 {
    assert_eq!(x.dim(), ray.dim(), "point and ray dimensions differ");
    let m = ray.base.coords().len();
    let (b, s, xc) = (ray.base.coords(), ray.dir.coords(), x.coords());
    let diff: Vec<f64> = (0..=m).map(|k| xc[k] - if k < m { b[k] } else { 0.0 }).collect();
    let proj: f64 = diff.iter().zip(s).map(|(a, b)| a * b).sum();
    diff.iter().zip(s).map(|(a, b)| (a - proj * b).powi(2)).sum::<f64>().sqrt()
}

pub fn ray_hits_ball(ray: &LineRay, center: &PointD, r: f64) -> bool {
    debug_assert!(r >= 0.0);
    point_ray_distance(center, ray) <= r
}

/// Horizontal position of the ray at height `t`: `base + (t / s_d) * (s_1..s_{d-1})`.
pub fn horizontal_position(ray: &LineRay, t: f64) -> Result<Vec<f64>> {
    let s = ray.dir.coords();
    let sd = ray.dir.vertical_component();
    if sd == 0.0 {
        return Err(Error::ZeroVerticalComponent);
    }
    let scale = t / sd;
    Ok(ray.base.coords().iter().zip(s).map(|(b, sk)| b + scale * sk).collect())
}

/// Membership of `dir` in the closure of the orthant cone: `sgn(s_i) in {0, z_i}`
/// for every horizontal coordinate and `s_d >= 2/sqrt(5)`.
pub fn in_cone(dir: &Direction, cone: &OrthantCone) -> bool {
    assert_eq!(dir.dim(), cone.ambient_dim(), "direction and cone dimensions differ");
    let s = dir.coords();
    let signs_ok = cone.signs().iter().zip(s).all(|(&z, &sk)| sk == 0.0 || (sk > 0.0) == (z > 0));
    signs_ok && dir.vertical_component() >= CONE_MIN_VERTICAL
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ray(base: &[f64], dir: &[f64]) -> LineRay {
        LineRay::new(BasePoint::new(base.to_vec()).unwrap(), Direction::new(dir.to_vec()).unwrap())
            .unwrap()
    }

    #[test]
    fn distance_examples() {
        let vertical = ray(&[0.5], &[0.0, 1.0]);
        assert_abs_diff_eq!(point_ray_distance(&vec![0.0, 0.0].into(), &vertical), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(point_ray_distance(&vec![0.5, 0.7].into(), &vertical), 0.0, epsilon = 1e-15);
        let diag = ray(&[0.0], &[1.0, 1.0]);
        assert_abs_diff_eq!(
            point_ray_distance(&vec![0.0, 1.0].into(), &diag),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn distance_clamps_behind_origin() {
        // Projection parameter is negative: nearest ray point is the origin.
        let diag = ray(&[0.5], &[1.0, 1.0]);
        let x = PointD::new(vec![0.0, 0.0]);
        assert_abs_diff_eq!(point_ray_distance(&x, &diag), 0.5, epsilon = 1e-15);
        assert!(point_line_distance(&x, &diag) < 0.5);
    }

    #[test]
    fn ball_hits() {
        let vertical = ray(&[0.5], &[0.0, 1.0]);
        assert!(ray_hits_ball(&vertical, &vec![0.6, 0.5].into(), 0.1 + 1e-15));
        assert!(!ray_hits_ball(&vertical, &vec![0.7, 0.5].into(), 0.1));
        let diag = ray(&[0.0], &[1.0, 1.0]);
        assert!(!ray_hits_ball(&diag, &vec![0.0, 1.0].into(), 0.7));
    }

    #[test]
    fn horizontal_position_examples() {
        let vertical = ray(&[0.3], &[0.0, 1.0]);
        for t in [0.0, 0.4, 1.0] {
            assert_eq!(horizontal_position(&vertical, t).unwrap(), vec![0.3]);
        }
        let diag = ray(&[0.0], &[1.0, 1.0]);
        assert_abs_diff_eq!(horizontal_position(&diag, 0.5).unwrap()[0], 0.5, epsilon = 1e-15);
        let r3 = ray(&[0.0, 0.0], &[0.6, 0.0, 0.8]);
        let p = horizontal_position(&r3, 0.4).unwrap();
        assert_abs_diff_eq!(p[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn horizontal_position_rejects_flat_rays() {
        let flat = ray(&[0.3], &[1.0, 0.0]);
        assert_eq!(horizontal_position(&flat, 0.2), Err(Error::ZeroVerticalComponent));
    }

    #[test]
    fn cone_examples() {
        let plus = OrthantCone::new(vec![1]).unwrap();
        assert!(in_cone(&Direction::vertical(2), &plus));
        assert!(!in_cone(&Direction::new(vec![0.6, 0.8]).unwrap(), &plus));
        assert!(!in_cone(&Direction::new(vec![-0.3, 0.91f64.sqrt()]).unwrap(), &plus));
        assert!(in_cone(&Direction::new(vec![0.3, 0.91f64.sqrt()]).unwrap(), &plus));
    }

    #[test]
    fn constructors_validate() {
        assert!(Direction::new(vec![0.0, 0.0]).is_err());
        assert!(Direction::new(vec![1.0]).is_err());
        assert!(Direction::new(vec![0.0, -1.0]).is_err());
        assert!(Direction::new(vec![3.0, 4.0]).unwrap().is_unit());
        assert!(BasePoint::new(vec![1.5]).is_err());
        assert!(OrthantCone::new(vec![1, 0]).is_err());
        assert!(AxisBox::new(vec![0.0, 0.5], vec![1.0, 0.5]).is_err());
        assert_eq!(OrthantCone::all(3).len(), 4);
        assert_eq!(OrthantCone::all(2)[0].signs(), &[1]);
    }

    fn unit_dir(d: usize) -> impl Strategy<Value = Direction> {
        prop::collection::vec(-1.0f64..1.0, d).prop_filter_map("degenerate", |mut v| {
            let last = v.len() - 1;
            v[last] = v[last].abs();
            Direction::new(v).ok()
        })
    }

    fn ray_strategy(d: usize) -> impl Strategy<Value = LineRay> {
        (prop::collection::vec(0.0f64..=1.0, d - 1), unit_dir(d))
            .prop_map(|(b, s)| LineRay::new(BasePoint::new(b).unwrap(), s).unwrap())
    }

    proptest! {
        #[test]
        fn distance_is_one_lipschitz(
            r in (2usize..5).prop_flat_map(ray_strategy),
            seed in prop::collection::vec(-0.5f64..1.5, 8),
            seed2 in prop::collection::vec(-0.5f64..1.5, 8),
        ) {
            let d = r.dim();
            let x = PointD::new(seed[..d].to_vec());
            let y = PointD::new(seed2[..d].to_vec());
            let dxy = x.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let diff = (point_ray_distance(&x, &r) - point_ray_distance(&y, &r)).abs();
            prop_assert!(diff <= dxy + 1e-12);
        }

        #[test]
        fn ray_distance_dominates_line_distance(
            r in (2usize..5).prop_flat_map(ray_strategy),
            seed in prop::collection::vec(0.0f64..=1.0, 8),
        ) {
            let x = PointD::new(seed[..r.dim()].to_vec());
            let ray_d = point_ray_distance(&x, &r);
            let line_d = point_line_distance(&x, &r);
            prop_assert!(ray_d >= line_d - 1e-12);
            let proj: f64 = x.coords().iter().enumerate()
                .map(|(k, c)| (c - r.base.coords().get(k).copied().unwrap_or(0.0)) * r.dir.coords()[k])
                .sum();
            if proj >= 0.0 {
                prop_assert!((ray_d - line_d).abs() <= 1e-12);
            }
        }

        #[test]
        fn height_zero_is_base(r in (2usize..5).prop_flat_map(ray_strategy)) {
            prop_assume!(r.dir.vertical_component() > 0.0);
            let p = horizontal_position(&r, 0.0).unwrap();
            prop_assert_eq!(p.as_slice(), r.base.coords());
        }

        #[test]
        fn steep_directions_lie_in_exactly_one_cone(
            h in (1usize..4).prop_flat_map(|m| prop::collection::vec(-0.28f64..0.28, m)),
        ) {
            prop_assume!(h.iter().all(|&c| c != 0.0));
            let mut v = h.clone();
            v.push(1.0);
            let dir = Direction::new(v).unwrap();
            prop_assert!(dir.vertical_component() >= CONE_MIN_VERTICAL);
            let hits = OrthantCone::all(dir.dim()).iter().filter(|z| in_cone(&dir, z)).count();
            prop_assert_eq!(hits, 1);
        }
    }
}
