//! Coverage of the unit cube by dilated trajectories.
//!
//! For a sample and a dilation kind, `f(x)` is the smallest distance from `x`
//! to any trajectory (Euclidean ray distance for [`DilationKind::FullBall`],
//! horizontal offset at height `x_d` for [`DilationKind::BaseDisk`]). A point
//! is covered at radius `r` iff `f(x) <= r`, and the coverage radius is
//! `sup_x f(x)`, which [`coverage_radius`] brackets with a certified interval.

mod bnb;
mod field;
mod index;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{horizontal_position, point_ray_distance, AxisBox, PointD};
use crate::processes::{BrownianModelSample, LineModelSample, SeedSpec};

use field::{Banded, Field, PathTable, PointTable, RayTable, SlidingTable};
use index::Grid;

/// Largest ambient dimension handled by the coverage routines.
pub const MAX_DIM: usize = 9;

/// Runs `$body` with `$D` bound to the runtime dimension `$d` as a constant.
macro_rules! with_dim {
    ($d:expr, $D:ident => $body:expr) => {
        match $d {
            1 => { const $D: usize = 1; $body }
            2 => { const $D: usize = 2; $body }
            3 => { const $D: usize = 3; $body }
            4 => { const $D: usize = 4; $body }
            5 => { const $D: usize = 5; $body }
            6 => { const $D: usize = 6; $body }
            7 => { const $D: usize = 7; $body }
            8 => { const $D: usize = 8; $body }
            9 => { const $D: usize = 9; $body }
            _ => Err(Error::UnsupportedCombination("dimension above 9")),
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DilationKind {
    /// Ball of radius `r` in `R^d`.
    FullBall,
    /// Horizontal disk of radius `r` in `R^{d-1} x {0}`.
    BaseDisk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationSpec {
    pub kind: DilationKind,
    pub r: f64,
}

impl DilationSpec {
    pub fn new(kind: DilationKind, r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("dilation radius must be finite and nonnegative, got {r}")));
        }
        Ok(DilationSpec { kind, r })
    }

    pub fn full_ball(r: f64) -> Result<Self> {
        Self::new(DilationKind::FullBall, r)
    }

    pub fn base_disk(r: f64) -> Result<Self> {
        Self::new(DilationKind::BaseDisk, r)
    }
}

/// Interval known to contain the coverage radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifiedRadius {
    pub lower: f64,
    pub upper: f64,
    /// Number of single-trajectory distance evaluations spent.
    pub evaluations: u64,
}

impl CertifiedRadius {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_points: usize,
}

/// Settings for [`coverage_radius`] and [`slice_coverage_radius`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusOptions {
    /// Target bracket width, in the units of the reported radius.
    pub tol: f64,
    /// Maximum number of distance evaluations.
    pub budget: u64,
    /// Every trajectory distance is multiplied by this factor.
    pub scale: f64,
}

impl RadiusOptions {
    pub fn new(tol: f64) -> Self {
        RadiusOptions { tol, budget: u64::MAX, scale: 1.0 }
    }

    pub fn budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive and finite, got {}", self.tol)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive and finite, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Borrowed view of either trajectory model.
#[derive(Debug, Clone, Copy)]
pub enum SampleRef<'a> {
    Lines(&'a LineModelSample),
    Brownian(&'a BrownianModelSample),
}

impl<'a> From<&'a LineModelSample> for SampleRef<'a> {
    fn from(s: &'a LineModelSample) -> Self {
        SampleRef::Lines(s)
    }
}

impl<'a> From<&'a BrownianModelSample> for SampleRef<'a> {
    fn from(s: &'a BrownianModelSample) -> Self {
        SampleRef::Brownian(s)
    }
}

impl SampleRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            SampleRef::Lines(s) => s.d,
            SampleRef::Brownian(s) => s.d,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SampleRef::Lines(s) => s.rays.len(),
            SampleRef::Brownian(s) => s.paths.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_supported(sample: SampleRef<'_>, kind: DilationKind) -> Result<()> {
    match (sample, kind) {
        (SampleRef::Brownian(_), DilationKind::FullBall) => {
            Err(Error::UnsupportedCombination("full-ball dilation of Brownian paths"))
        }
        _ if sample.dim() > MAX_DIM => Err(Error::UnsupportedCombination("dimension above 9")),
        _ => Ok(()),
    }
}

fn check_point(sample: SampleRef<'_>, x: &PointD) -> Result<()> {
    if x.dim() != sample.dim() {
        return Err(Error::DimensionMismatch { expected: sample.dim(), found: x.dim() });
    }
    if !x.in_unit_cube() {
        return Err(Error::InvalidPoint(format!("{:?} is outside the unit cube", x.coords())));
    }
    Ok(())
}

/// Distances from `x` to every trajectory, in sample order.
fn distances(sample: SampleRef<'_>, kind: DilationKind, x: &PointD) -> Result<Vec<f64>> {
    check_supported(sample, kind)?;
    check_point(sample, x)?;
    let t = x.height();
    let xh = x.horizontal();
    let dist = |p: &[f64]| p.iter().zip(xh).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    match (sample, kind) {
        (SampleRef::Lines(s), DilationKind::FullBall) => Ok(s.rays.iter().map(|ray| point_ray_distance(x, ray)).collect()),
        (SampleRef::Lines(s), DilationKind::BaseDisk) => {
            s.rays.iter().map(|ray| horizontal_position(ray, t).map(|p| dist(&p))).collect()
        }
        (SampleRef::Brownian(s), DilationKind::BaseDisk) => Ok(s.paths.iter().map(|p| dist(&p.position(t))).collect()),
        (SampleRef::Brownian(_), DilationKind::FullBall) => unreachable!(),
    }
}

/// `min` over trajectories of the distance deciding coverage of `x`;
/// `+inf` for an empty sample.
pub fn min_distance<'a>(sample: impl Into<SampleRef<'a>>, kind: DilationKind, x: &PointD) -> Result<f64> {
    Ok(distances(sample.into(), kind, x)?.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn covers_point<'a>(sample: impl Into<SampleRef<'a>>, dilation: DilationSpec, x: &PointD) -> Result<bool> {
    Ok(cover_count(sample, dilation, x)? >= 1)
}

/// Number of trajectories whose dilation contains `x`.
pub fn cover_count<'a>(sample: impl Into<SampleRef<'a>>, dilation: DilationSpec, x: &PointD) -> Result<usize> {
    Ok(distances(sample.into(), dilation.kind, x)?.into_iter().filter(|&v| v <= dilation.r).count())
}

/// Batched coverage queries at a fixed dilation, for many points against one
/// sample.
pub struct CoverIndex {
    inner: Box<dyn Counter + Send + Sync>,
    d: usize,
}

trait Counter {
    fn count(&self, x: &[f64], stop_at_first: bool) -> usize;
}

struct Indexed<T, const D: usize> {
    table: T,
    grid: Grid,
    r: f64,
}

impl<const D: usize, T: Banded<D>> Counter for Indexed<T, D> {
    fn count(&self, x: &[f64], stop_at_first: bool) -> usize {
        let x: &[f64; D] = x.try_into().expect("query point has the wrong dimension");
        let mut n = 0;
        for &i in self.grid.candidates(x) {
            if self.table.value(i as usize, x) <= self.r {
                n += 1;
                if stop_at_first {
                    break;
                }
            }
        }
        n
    }
}

struct NoTrajectories;

impl Counter for NoTrajectories {
    fn count(&self, _x: &[f64], _stop_at_first: bool) -> usize {
        0
    }
}

fn indexed<const D: usize, T: Banded<D> + Send + Sync + 'static>(table: T, r: f64) -> Box<dyn Counter + Send + Sync> {
    let grid = Grid::build(&table, r);
    Box::new(Indexed::<T, D> { table, grid, r })
}

impl CoverIndex {
    pub fn new<'a>(sample: impl Into<SampleRef<'a>>, dilation: DilationSpec) -> Result<Self> {
        let sample = sample.into();
        check_supported(sample, dilation.kind)?;
        let r = dilation.r;
        let d = sample.dim();
        if sample.is_empty() {
            return Ok(CoverIndex { inner: Box::new(NoTrajectories), d });
        }
        let inner = with_dim!(d, D => match (sample, dilation.kind) {
            (SampleRef::Lines(s), DilationKind::FullBall) => Ok(indexed::<D, _>(RayTable::<D>::new(s), r)),
            (SampleRef::Lines(s), DilationKind::BaseDisk) => Ok(indexed::<D, _>(SlidingTable::<D>::new(s)?, r)),
            (SampleRef::Brownian(s), _) => Ok(indexed::<D, _>(PathTable::<D>::new(s), r)),
        })?;
        Ok(CoverIndex { inner, d })
    }

    fn query(&self, x: &[f64], stop_at_first: bool) -> usize {
        assert_eq!(x.len(), self.d, "query point has the wrong dimension");
        self.inner.count(x, stop_at_first)
    }

    /// Whether `x in [0,1]^d` is covered.
    pub fn covers(&self, x: &[f64]) -> bool {
        self.query(x, true) > 0
    }

    /// Number of dilated trajectories containing `x in [0,1]^d`.
    pub fn count(&self, x: &[f64]) -> usize {
        self.query(x, false)
    }
}

/// Monte Carlo estimate of the volume of `region` left uncovered.
pub fn uncovered_volume_estimate<'a>(
    sample: impl Into<SampleRef<'a>>,
    dilation: DilationSpec,
    region: &AxisBox,
    n_points: usize,
    seed: SeedSpec,
) -> Result<VolumeEstimate> {
    let sample = sample.into();
    if region.dim() != sample.dim() {
        return Err(Error::DimensionMismatch { expected: sample.dim(), found: region.dim() });
    }
    if !region.is_within_unit_cube() {
        return Err(Error::InvalidArgument("region must lie inside the unit cube".into()));
    }
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be at least 1".into()));
    }
    let vol = region.volume();
    if sample.is_empty() {
        check_supported(sample, dilation.kind)?;
        return Ok(VolumeEstimate { estimate: vol, std_error: 0.0, n_points });
    }
    let index = CoverIndex::new(sample, dilation)?;
    let mut rng = seed.rng();
    let (lo, hi) = (region.lo(), region.hi());
    let mut x = vec![0.0; lo.len()];
    let mut uncovered = 0usize;
    for _ in 0..n_points {
        for k in 0..x.len() {
            x[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
        }
        if !index.covers(&x) {
            uncovered += 1;
        }
    }
    let p = uncovered as f64 / n_points as f64;
    Ok(VolumeEstimate {
        estimate: vol * p,
        std_error: vol * (p * (1.0 - p) / n_points as f64).sqrt(),
        n_points,
    })
}

fn run<const D: usize, F: Field<D>>(field: &F, lo: [f64; D], hi: [f64; D], opts: &RadiusOptions) -> Result<CertifiedRadius> {
    if field.len() == 0 {
        return Err(Error::EmptyModel);
    }
    // Distances evaluated by other formulas (the brute-force path, say) can
    // differ in the last bits, so the bracket is widened by a few ulps. Half
    // the tolerance goes to the search so the widened bracket still fits.
    let b = bnb::maximize(field, lo, hi, 0.5 * opts.tol, opts.budget, opts.scale);
    let pad = 8.0 * f64::EPSILON;
    let best = CertifiedRadius { lower: b.lower * (1.0 - pad), upper: b.upper * (1.0 + pad), evaluations: b.evaluations };
    if b.exhausted {
        Err(Error::BudgetExhausted { best })
    } else {
        Ok(best)
    }
}

/// Certified bracket for `sup_{x in [0,1]^d} f(x)`, the smallest dilation
/// radius at which the sample covers the cube.
pub fn coverage_radius<'a>(
    sample: impl Into<SampleRef<'a>>,
    kind: DilationKind,
    opts: &RadiusOptions,
) -> Result<CertifiedRadius> {
    let sample = sample.into();
    opts.validate()?;
    check_supported(sample, kind)?;
    if sample.is_empty() {
        return Err(Error::EmptyModel);
    }
    with_dim!(sample.dim(), D => {
        let (lo, hi) = ([0.0; D], [1.0; D]);
        match (sample, kind) {
            (SampleRef::Lines(s), DilationKind::FullBall) => run(&RayTable::<D>::new(s), lo, hi, opts),
            (SampleRef::Lines(s), DilationKind::BaseDisk) => run(&SlidingTable::<D>::new(s)?, lo, hi, opts),
            (SampleRef::Brownian(s), _) => run(&PathTable::<D>::new(s), lo, hi, opts),
        }
    })
}

/// Certified bracket for the largest distance from a point of
/// `[shrink, 1 - shrink]^{d-1}` to the horizontal positions of the rays at
/// height `t`.
pub fn slice_coverage_radius(
    sample: &LineModelSample,
    t: f64,
    shrink: f64,
    opts: &RadiusOptions,
) -> Result<CertifiedRadius> {
    opts.validate()?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("height must lie in [0, 1], got {t}")));
    }
    if !(0.0..0.5).contains(&shrink) {
        return Err(Error::InvalidArgument(format!("shrink must lie in [0, 1/2), got {shrink}")));
    }
    check_supported(SampleRef::Lines(sample), DilationKind::BaseDisk)?;
    let positions = with_dim!(sample.d, D => Ok(SlidingTable::<D>::new(sample)?.positions_at(t)))?;
    if sample.rays.is_empty() {
        return Err(Error::EmptyModel);
    }
    with_dim!(sample.d - 1, M => run(&PointTable::<M>::new(&positions), [shrink; M], [1.0 - shrink; M], opts))
}
