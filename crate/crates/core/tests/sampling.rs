use cylcover::processes::{
    sample_base_points, sample_brownian_model, sample_directions, sample_line_model, DirectionalLaw, SeedSpec,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
}

#[test]
fn point_counts_are_equidispersed() {
    const REPS: u64 = 10_000;
    for rho in [10.0, 100.0, 1000.0] {
        let counts: Vec<f64> =
            (0..REPS).map(|i| sample_base_points(3, rho, SeedSpec::new(9, i)).unwrap().len() as f64).collect();
        let (m, v) = mean_var(&counts);
        let se = (rho / REPS as f64).sqrt();
        assert!((m - rho).abs() <= 4.0 * se, "rho {rho}: mean {m}");
        // Dispersion standard error is about sqrt(2 / REPS).
        assert!((v / m - 1.0).abs() <= 4.0 * (2.0 / REPS as f64).sqrt(), "rho {rho}: var/mean {}", v / m);
    }
}

#[test]
fn base_points_fill_the_unit_square() {
    let pts = sample_base_points(3, 20_000.0, SeedSpec::new(2, 0)).unwrap();
    let mut bins = [0f64; 16];
    for p in &pts {
        let c = p.coords();
        assert!(c.iter().all(|x| (0.0..1.0).contains(x)));
        bins[(c[0] * 4.0) as usize * 4 + (c[1] * 4.0) as usize] += 1.0;
    }
    let e = pts.len() as f64 / 16.0;
    let chi2: f64 = bins.iter().map(|o| (o - e) * (o - e) / e).sum();
    let p = 1.0 - ChiSquared::new(15.0).unwrap().cdf(chi2);
    assert!(p > 1e-3, "chi2 {chi2}");
}

#[test]
fn uniform_directions_are_symmetric_in_the_horizontal_plane() {
    let dirs = sample_directions(3, &DirectionalLaw::UniformHemisphere, 200_000, SeedSpec::new(3, 0)).unwrap();
    let mut quadrants = [0f64; 4];
    let mut heights = Vec::with_capacity(dirs.len());
    for s in &dirs {
        let c = s.coords();
        assert!(c[2] >= 0.0);
        assert!((c.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        quadrants[usize::from(c[0] > 0.0) * 2 + usize::from(c[1] > 0.0)] += 1.0;
        heights.push(c[2]);
    }
    let e = dirs.len() as f64 / 4.0;
    let chi2: f64 = quadrants.iter().map(|o| (o - e) * (o - e) / e).sum();
    assert!(1.0 - ChiSquared::new(3.0).unwrap().cdf(chi2) > 1e-3, "{quadrants:?}");
    // Archimedes: the height of a uniform point on the 2-sphere is uniform.
    let (m, v) = mean_var(&heights);
    assert!((m - 0.5).abs() < 4.0 * (1.0 / 12.0 / dirs.len() as f64).sqrt());
    assert!((v - 1.0 / 12.0).abs() < 2e-3);
}

#[test]
fn brownian_increments_have_step_variance() {
    let n_steps = 256;
    let s = sample_brownian_model(3, 200.0, n_steps, SeedSpec::new(4, 0)).unwrap();
    let mut inc = Vec::new();
    let mut ends = Vec::new();
    for p in &s.paths {
        assert_eq!(p.n_steps(), n_steps);
        for k in 0..n_steps {
            inc.extend_from_slice(p.increment(k));
        }
        let end = p.position(1.0);
        ends.extend(end.iter().zip(p.base.coords()).map(|(a, b)| a - b));
    }
    let (m, v) = mean_var(&inc);
    let n = inc.len() as f64;
    let h = 1.0 / n_steps as f64;
    assert!(m.abs() < 4.0 * (h / n).sqrt());
    assert!((v / h - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "{}", v / h);
    // Endpoint displacement is N(0, 1) per coordinate.
    let (_, ve) = mean_var(&ends);
    assert!((ve - 1.0).abs() < 4.0 * (2.0 / ends.len() as f64).sqrt(), "{ve}");
}

#[test]
fn sampling_is_a_function_of_the_seed() {
    let law: DirectionalLaw = "cone:+1".parse().unwrap();
    let a = sample_line_model(2, 300.0, &law, SeedSpec::new(5, 7)).unwrap();
    assert_eq!(a, sample_line_model(2, 300.0, &law, SeedSpec::new(5, 7)).unwrap());
    assert_ne!(a, sample_line_model(2, 300.0, &law, SeedSpec::new(5, 8)).unwrap());
    assert_ne!(a, sample_line_model(2, 300.0, &law, SeedSpec::new(6, 7)).unwrap());
    let bases = sample_base_points(2, 300.0, SeedSpec::new(5, 7)).unwrap();
    assert!(a.rays.iter().map(|r| &r.base).eq(bases.iter()));
    let b = sample_brownian_model(2, 50.0, 32, SeedSpec::new(5, 7)).unwrap();
    assert_eq!(b, sample_brownian_model(2, 50.0, 32, SeedSpec::new(5, 7)).unwrap());
}
