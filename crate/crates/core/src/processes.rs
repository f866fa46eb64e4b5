//! Seeded sampling of the Poisson base process and of the two trajectory models.
//!
//! Every sampler is a pure function of its parameters and a [`SeedSpec`]. A
//! seed selects one ChaCha8 stream (`master_seed` keys the generator,
//! `stream_index` picks the stream), so replication `i` of an experiment can
//! run on any thread and still see the same random numbers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{in_cone, BasePoint, Direction, LineRay, OrthantCone, CONE_MIN_VERTICAL};

/// Default number of Brownian time steps on `[0, 1]`.
pub const DEFAULT_BROWNIAN_STEPS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        SeedSpec { master_seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Law of the direction `S` of a line trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionalLaw {
    /// Uniform on the upper hemisphere.
    UniformHemisphere,
    /// Uniform on the upper hemisphere conditioned on the closed cone.
    ConeRestricted(OrthantCone),
    /// Point mass.
    Fixed(Direction),
}

impl DirectionalLaw {
    fn check_dim(&self, d: usize) -> Result<()> {
        let found = match self {
            DirectionalLaw::UniformHemisphere => return Ok(()),
            DirectionalLaw::ConeRestricted(z) => z.ambient_dim(),
            DirectionalLaw::Fixed(s) => s.dim(),
        };
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
        Ok(())
    }
}

impl fmt::Display for DirectionalLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionalLaw::UniformHemisphere => write!(f, "uniform"),
            DirectionalLaw::ConeRestricted(z) => {
                let signs: Vec<&str> = z.signs().iter().map(|&s| if s > 0 { "+1" } else { "-1" }).collect();
                write!(f, "cone:{}", signs.join(","))
            }
            DirectionalLaw::Fixed(s) => {
                let c: Vec<String> = s.coords().iter().map(|c| c.to_string()).collect();
                write!(f, "fixed:{}", c.join(","))
            }
        }
    }
}

/// Parses `uniform`, `cone:+1,-1,...` or `fixed:s1,...,sd`.
impl FromStr for DirectionalLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(DirectionalLaw::UniformHemisphere);
        }
        let parse_list = |body: &str| -> Result<Vec<f64>> {
            body.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad number {t:?} in law {s:?}")))
                })
                .collect()
        };
        if let Some(body) = s.strip_prefix("cone:") {
            let signs = parse_list(body)?
                .into_iter()
                .map(|v| match v {
                    v if v == 1.0 => Ok(1),
                    v if v == -1.0 => Ok(-1),
                    _ => Err(Error::InvalidArgument(format!("cone sign {v} is not +1 or -1"))),
                })
                .collect::<Result<Vec<i8>>>()?;
            return Ok(DirectionalLaw::ConeRestricted(OrthantCone::new(signs)?));
        }
        if let Some(body) = s.strip_prefix("fixed:") {
            return Ok(DirectionalLaw::Fixed(Direction::new(parse_list(body)?)?));
        }
        Err(Error::InvalidArgument(format!("unknown directional law {s:?}")))
    }
}

/// One realization of the line model restricted to rays starting in the cube base.
#[derive(Debug, Clone, PartialEq)]
pub struct LineModelSample {
    pub d: usize,
    pub rho: f64,
    pub rays: Vec<LineRay>,
}

/// Piecewise-linear Brownian path on `[0, 1]` started at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub base: BasePoint,
    /// `n_steps` increments of `d - 1` coordinates each, row-major.
    increments: Vec<f64>,
}

impl BrownianPath {
    pub fn new(base: BasePoint, increments: Vec<f64>) -> Result<Self> {
        let m = base.coords().len();
        if increments.is_empty() || increments.len() % m != 0 {
            return Err(Error::InvalidArgument(format!(
                "increment buffer of length {} does not hold whole steps of dimension {m}",
                increments.len()
            )));
        }
        Ok(BrownianPath { base, increments })
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len() / self.base.coords().len()
    }

    pub fn increment(&self, step: usize) -> &[f64] {
        let m = self.base.coords().len();
        &self.increments[step * m..(step + 1) * m]
    }

    /// Grid positions `X_{k/n}` for `k = 0..=n_steps`, row-major.
    pub fn grid_positions(&self) -> Vec<f64> {
        let m = self.base.coords().len();
        let n = self.n_steps();
        let mut out = Vec::with_capacity((n + 1) * m);
        out.extend_from_slice(self.base.coords());
        for k in 0..n {
            for j in 0..m {
                let prev = out[k * m + j];
                out.push(prev + self.increments[k * m + j]);
            }
        }
        out
    }

    /// Linearly interpolated horizontal position at time `t in [0, 1]`.
    pub fn position(&self, t: f64) -> Vec<f64> {
        let m = self.base.coords().len();
        let n = self.n_steps();
        let s = (t.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let k = (s.floor() as usize).min(n - 1);
        let frac = s - k as f64;
        let mut p = self.base.coords().to_vec();
        for step in 0..k {
            for j in 0..m {
                p[j] += self.increments[step * m + j];
            }
        }
        for j in 0..m {
            p[j] += frac * self.increments[k * m + j];
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrownianModelSample {
    pub d: usize,
    pub rho: f64,
    pub n_steps: usize,
    pub paths: Vec<BrownianPath>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

fn check_intensity(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidIntensity(rho));
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

fn draw_base_points<R: Rng>(d: usize, rho: f64, rng: &mut R) -> Result<Vec<BasePoint>> {
    let count = Poisson::new(rho).map_err(|_| Error::InvalidIntensity(rho))?.sample(rng) as usize;
    Ok((0..count)
        .map(|_| BasePoint::from_unchecked((0..d - 1).map(|_| rng.random::<f64>()).collect()))
        .collect())
}

fn draw_uniform_hemisphere<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|c| *c /= norm);
            v[d - 1] = v[d - 1].abs();
            return v;
        }
    }
}

pub(crate) fn draw_direction<R: Rng>(d: usize, law: &DirectionalLaw, rng: &mut R) -> Direction {
    match law {
        DirectionalLaw::UniformHemisphere => Direction::from_unit_unchecked(draw_uniform_hemisphere(d, rng)),
        DirectionalLaw::ConeRestricted(cone) => {
            // The uniform law is invariant under horizontal sign flips, so
            // conditioning on the cone is conditioning on s_d and then
            // imposing the cone's signs.
            loop {
                let mut v = draw_uniform_hemisphere(d, rng);
                if v[d - 1] >= CONE_MIN_VERTICAL {
                    for (c, &z) in v.iter_mut().zip(cone.signs()) {
                        *c = c.abs() * f64::from(z);
                    }
                    return Direction::from_unit_unchecked(v);
                }
            }
        }
        DirectionalLaw::Fixed(s) => s.clone(),
    }
}

/// Poisson(`rho`) many points, uniform on `[0,1]^{d-1}`.
pub fn sample_base_points(d: usize, rho: f64, seed: SeedSpec) -> Result<Vec<BasePoint>> {
    check_dim(d)?;
    check_intensity(rho)?;
    draw_base_points(d, rho, &mut seed.rng())
}

pub fn sample_direction(d: usize, law: &DirectionalLaw, seed: SeedSpec) -> Result<Direction> {
    check_dim(d)?;
    law.check_dim(d)?;
    Ok(draw_direction(d, law, &mut seed.rng()))
}

/// `n` independent directions from one stream.
pub fn sample_directions(d: usize, law: &DirectionalLaw, n: usize, seed: SeedSpec) -> Result<Vec<Direction>> {
    check_dim(d)?;
    law.check_dim(d)?;
    let mut rng = seed.rng();
    Ok((0..n).map(|_| draw_direction(d, law, &mut rng)).collect())
}

/// Marked Poisson process of rays: the base points of [`sample_base_points`]
/// (same seed, same points) each paired with an independent direction.
pub fn sample_line_model(d: usize, rho: f64, law: &DirectionalLaw, seed: SeedSpec) -> Result<LineModelSample> {
    check_dim(d)?;
    check_intensity(rho)?;
    law.check_dim(d)?;
    let mut rng = seed.rng();
    let bases = draw_base_points(d, rho, &mut rng)?;
    let rays = bases
        .into_iter()
        .map(|base| LineRay { base, dir: draw_direction(d, law, &mut rng) })
        .collect();
    Ok(LineModelSample { d, rho, rays })
}

/// Poisson many Brownian paths in `R^{d-1}` on the `n_steps` grid of `[0, 1]`.
pub fn sample_brownian_model(d: usize, rho: f64, n_steps: usize, seed: SeedSpec) -> Result<BrownianModelSample> {
    check_dim(d)?;
    check_intensity(rho)?;
    if n_steps < 1 {
        return Err(Error::InvalidSteps(n_steps));
    }
    let mut rng = seed.rng();
    let bases = draw_base_points(d, rho, &mut rng)?;
    let sd = (1.0 / n_steps as f64).sqrt();
    let m = d - 1;
    let paths = bases
        .into_iter()
        .map(|base| {
            let increments = (0..n_steps * m)
                .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            BrownianPath { base, increments }
        })
        .collect();
    Ok(BrownianModelSample { d, rho, n_steps, paths })
}

/// Monte Carlo estimate of `P(S in closure(cone))`.
pub fn condition_probability(
    d: usize,
    law: &DirectionalLaw,
    cone: &OrthantCone,
    n_samples: usize,
    seed: SeedSpec,
) -> Result<ProbabilityEstimate> {
    check_dim(d)?;
    law.check_dim(d)?;
    if cone.ambient_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: cone.ambient_dim() });
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let mut rng = seed.rng();
    let hits = (0..n_samples).filter(|_| in_cone(&draw_direction(d, law, &mut rng), cone)).count();
    let p = hits as f64 / n_samples as f64;
    Ok(ProbabilityEstimate { estimate: p, std_error: (p * (1.0 - p) / n_samples as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn base_points_are_deterministic_and_in_cube() {
        let seed = SeedSpec::new(7, 3);
        let a = sample_base_points(3, 200.0, seed).unwrap();
        let b = sample_base_points(3, 200.0, seed).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.coords().len() == 2 && p.coords().iter().all(|c| (0.0..1.0).contains(c))));
        let c = sample_base_points(3, 200.0, SeedSpec::new(7, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_parameters() {
        let seed = SeedSpec::new(0, 0);
        assert_eq!(sample_base_points(2, 0.0, seed), Err(Error::InvalidIntensity(0.0)));
        assert_eq!(sample_base_points(2, -1.0, seed), Err(Error::InvalidIntensity(-1.0)));
        assert!(matches!(
            sample_line_model(2, -3.0, &DirectionalLaw::UniformHemisphere, seed),
            Err(Error::InvalidIntensity(_))
        ));
        assert_eq!(sample_brownian_model(2, 10.0, 0, seed), Err(Error::InvalidSteps(0)));
        assert!(sample_brownian_model(2, f64::NAN, 4, seed).is_err());
    }

    #[test]
    fn poisson_count_is_equidispersed() {
        for rho in [10.0, 100.0, 1000.0] {
            let counts: Vec<f64> = (0..10_000)
                .map(|i| sample_base_points(2, rho, SeedSpec::new(11, i)).unwrap().len() as f64)
                .collect();
            let (mean, var) = mean_var(&counts);
            let se = (rho / 10_000.0).sqrt();
            assert!((mean - rho).abs() <= 4.0 * se * 3.0, "rho={rho} mean={mean}");
            let ratio = var / mean;
            assert!((0.95..=1.05).contains(&ratio), "rho={rho} var/mean={ratio}");
        }
    }

    #[test]
    fn fixed_law_returns_its_direction() {
        let s = Direction::vertical(2);
        let got = sample_direction(2, &DirectionalLaw::Fixed(s.clone()), SeedSpec::new(1, 1)).unwrap();
        assert_eq!(got, s);
    }

    #[test]
    fn uniform_cone_frequency_matches_arc_length() {
        // Arc {theta in (0, pi/2): sin(theta) >= 2/sqrt(5)} of the half-circle has
        // length atan(1/2), so its probability is atan(1/2)/pi.
        let expected = 0.5f64.atan() / std::f64::consts::PI;
        let cone = OrthantCone::new(vec![1]).unwrap();
        let est = condition_probability(2, &DirectionalLaw::UniformHemisphere, &cone, 1_000_000, SeedSpec::new(5, 0))
            .unwrap();
        assert!((est.estimate - expected).abs() <= 3.0 * est.std_error, "{est:?} vs {expected}");
    }

    #[test]
    fn uniform_3d_is_horizontally_centered() {
        let mut rng = SeedSpec::new(9, 0).rng();
        let xs: Vec<f64> =
            (0..200_000).map(|_| draw_direction(3, &DirectionalLaw::UniformHemisphere, &mut rng).coords()[0]).collect();
        let (mean, var) = mean_var(&xs);
        assert!(mean.abs() <= 3.0 * (var / xs.len() as f64).sqrt());
    }

    #[test]
    fn uniform_cone_probabilities_are_symmetric_in_3d() {
        let law = DirectionalLaw::UniformHemisphere;
        let n = 400_000;
        let mut rng = SeedSpec::new(21, 0).rng();
        let cones = OrthantCone::all(3);
        let mut counts = vec![0usize; cones.len()];
        for _ in 0..n {
            let s = draw_direction(3, &law, &mut rng);
            for (c, z) in counts.iter_mut().zip(&cones) {
                if in_cone(&s, z) {
                    *c += 1;
                }
            }
        }
        let total: usize = counts.iter().sum();
        let expected = total as f64 / cones.len() as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 3 degrees of freedom; 16.27 is the 0.999 quantile.
        assert!(chi2 < 16.27, "counts {counts:?} chi2 {chi2}");
    }

    #[test]
    fn degenerate_condition_probabilities() {
        let vertical = DirectionalLaw::Fixed(Direction::vertical(3));
        for cone in OrthantCone::all(3) {
            let p = condition_probability(3, &vertical, &cone, 100, SeedSpec::new(1, 2)).unwrap();
            assert_eq!(p.estimate, 1.0);
            let restricted = DirectionalLaw::ConeRestricted(cone.clone());
            let p = condition_probability(3, &restricted, &cone, 10_000, SeedSpec::new(1, 2)).unwrap();
            assert_eq!(p.estimate, 1.0);
        }
    }

    #[test]
    fn line_model_shares_bases_with_base_sampler() {
        let seed = SeedSpec::new(42, 1);
        let law = DirectionalLaw::UniformHemisphere;
        let s = sample_line_model(2, 500.0, &law, seed).unwrap();
        assert_eq!(s, sample_line_model(2, 500.0, &law, seed).unwrap());
        let bases = sample_base_points(2, 500.0, seed).unwrap();
        assert_eq!(s.rays.iter().map(|r| r.base.clone()).collect::<Vec<_>>(), bases);
        assert!(s.rays.iter().all(|r| r.dir.is_unit() && r.dir.vertical_component() >= 0.0));
    }

    #[test]
    fn vertical_law_gives_constant_horizontal_position() {
        let law = DirectionalLaw::Fixed(Direction::vertical(3));
        let s = sample_line_model(3, 50.0, &law, SeedSpec::new(3, 3)).unwrap();
        for r in &s.rays {
            for t in [0.0, 0.3, 1.0] {
                assert_eq!(crate::geometry::horizontal_position(r, t).unwrap(), r.base.coords());
            }
        }
    }

    #[test]
    fn brownian_paths_start_at_base_and_have_unit_variance() {
        let s = sample_brownian_model(2, 10_000.0, 1024, SeedSpec::new(8, 0)).unwrap();
        assert!(s.paths.len() > 9000);
        let mut ends = Vec::with_capacity(s.paths.len());
        let mut first_incs = Vec::with_capacity(s.paths.len());
        for p in &s.paths {
            assert_eq!(p.position(0.0), p.base.coords());
            let end = p.position(1.0);
            ends.push(end[0] - p.base.coords()[0]);
            first_incs.push(p.increment(0)[0]);
        }
        let (_, var) = mean_var(&ends);
        assert!((var - 1.0).abs() <= 0.05, "endpoint variance {var}");
        let (mean, var) = mean_var(&first_incs);
        let n = first_incs.len() as f64;
        assert!(mean.abs() <= 3.0 * (1.0 / 1024.0 / n).sqrt());
        assert!((var * 1024.0 - 1.0).abs() <= 0.05, "increment variance {}", var * 1024.0);
    }

    #[test]
    fn brownian_interpolation_matches_grid() {
        let s = sample_brownian_model(3, 5.0, 16, SeedSpec::new(2, 2)).unwrap();
        for p in &s.paths {
            let grid = p.grid_positions();
            let mid = p.position(2.5 / 16.0);
            for j in 0..2 {
                let expected = 0.5 * (grid[2 * 2 + j] + grid[3 * 2 + j]);
                assert!((mid[j] - expected).abs() < 1e-12);
            }
            let last = p.position(1.0);
            assert!((last[0] - grid[16 * 2]).abs() < 1e-12);
        }
    }

    #[test]
    fn law_descriptors_round_trip() {
        for text in ["uniform", "cone:+1,-1", "fixed:0,0,1"] {
            let law: DirectionalLaw = text.parse().unwrap();
            assert_eq!(law.to_string().parse::<DirectionalLaw>().unwrap(), law);
        }
        assert!("cone:2".parse::<DirectionalLaw>().is_err());
        assert!("gaussian".parse::<DirectionalLaw>().is_err());
    }
}
