use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;
use wfbs::special_functions::*;

// E|S|^p of the standard symmetric stable law, -1 < p < alpha.
fn abs_moment(alpha: f64, p: f64) -> f64 {
    2f64.powf(p) * gamma((1.0 + p) / 2.0) * gamma(1.0 - p / alpha) / (PI.sqrt() * gamma(1.0 - p / 2.0))
}

// 2∫_0^R p_1(x) x^{-gamma} dx by composite Simpson in y = x^{1/2}, plus the
// leading tail term beyond R.
fn simpson_oracle(alpha: f64, gamma_: f64, r: f64, n: usize) -> f64 {
    let law = StableLaw::new(alpha, 1.0).unwrap();
    let ymax = r.sqrt();
    let h = ymax / n as f64;
    let f = |y: f64| {
        if y == 0.0 {
            if gamma_ == 0.5 {
                return 2.0 * stable_density(law, 0.0).unwrap();
            }
            return 0.0;
        }
        let x = y * y;
        2.0 * y * stable_density(law, x).unwrap() * x.powf(-gamma_)
    };
    let mut s = f(0.0) + f(ymax);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    let body = s * h / 3.0;
    let tail = if alpha < 2.0 {
        let c1 = gamma(alpha + 1.0) * (PI * alpha / 2.0).sin() / PI;
        c1 / ((alpha + gamma_) * r.powf(alpha + gamma_))
    } else {
        0.0
    };
    2.0 * (body + tail)
}

#[test]
fn density_at_zero_matches_quadrature() {
    for &alpha in &[1.0, 1.2, 1.25, 1.5, 1.75, 1.8, 2.0] {
        let law = StableLaw::new(alpha, 1.0).unwrap();
        let q = stable_density(law, 0.0).unwrap();
        let c = stable_density_at_zero(alpha, 1.0).unwrap();
        assert!((q - c).abs() < 1e-8, "alpha={alpha}: {q} vs {c}");
        let scaled = stable_density_at_zero(alpha, 3.0).unwrap();
        assert!((scaled - 3f64.powf(-1.0 / alpha) * c).abs() < 1e-15);
    }
}

#[test]
fn weighted_integral_examples() {
    for &alpha in &[1.3, 2.0] {
        assert_eq!(weighted_density_integral(alpha, 0.0).unwrap(), 1.0);
    }
    let w = weighted_density_integral(2.0, 0.5).unwrap();
    let s = simpson_oracle(2.0, 0.5, 40.0, 20_000);
    assert!((w - s).abs() < 1e-7, "{w} vs {s}");
    assert!((w - abs_moment(2.0, -0.5)).abs() < 1e-7);

    let w = weighted_density_integral(1.5, 0.5).unwrap();
    let s = simpson_oracle(1.5, 0.5, 40.0, 4000);
    assert!((w - s).abs() < 1e-5, "{w} vs {s}");
    assert!((w - abs_moment(1.5, -0.5)).abs() < 1e-7, "{w}");
}

#[test]
fn weighted_integral_matches_mellin_moments() {
    for &(alpha, g) in &[(1.2, 0.3), (1.8, 0.9), (1.5, -0.7), (2.0, -3.0), (1.9, -1.5)] {
        let w = weighted_density_integral(alpha, g).unwrap();
        let m = abs_moment(alpha, -g);
        assert!((w - m).abs() < 1e-7, "alpha={alpha} gamma={g}: {w} vs {m}");
    }
    assert!(weighted_density_integral(1.5, -1.5).is_err());
    assert!(weighted_density_integral(1.5, 1.0).is_err());
}

#[test]
fn densities_integrate_to_one() {
    for &alpha in &[1.0, 1.25, 1.5, 1.75, 2.0] {
        let law = StableLaw::new(alpha, 1.0).unwrap();
        // mass on [-20, 20] by quadrature, the rest from the distribution function
        let r = wfbs::quadrature::integrate_breaks(
            |x: f64| stable_density(law, x).unwrap(),
            &[0.0, 1.0, 2.0, 5.0, 10.0, 20.0],
            wfbs::quadrature::Tolerance::new(1e-11, 1e-11),
        )
        .unwrap();
        let outside = 2.0 * (1.0 - stable_cdf(law, 20.0).unwrap());
        let mass = 2.0 * r.value + outside;
        assert!((mass - 1.0).abs() < 1e-6, "alpha={alpha}: {mass}");
    }
}

fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampler_passes_kolmogorov_smirnov() {
    let n = 100_000;
    let critical = 1.628 / (n as f64).sqrt();
    for &alpha in &[1.25, 1.5, 2.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..n).map(|_| stable_increment_sample(alpha, 1.0, &mut rng)).collect();
        let d = if alpha < 2.0 {
            let table = stable_table(alpha).unwrap();
            ks_distance(xs, |x| table.cdf(x))
        } else {
            let law = StableLaw::new(alpha, 1.0).unwrap();
            ks_distance(xs, |x| stable_cdf(law, x).unwrap())
        };
        assert!(d < critical, "alpha={alpha}: D={d} critical={critical}");
    }
}

#[test]
fn sampler_cauchy_quartile_and_median() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200_000;
    let xs: Vec<f64> = (0..n).map(|_| stable_increment_sample(1.0, 1.0, &mut rng)).collect();
    let below_one = xs.iter().filter(|&&x| x <= 1.0).count() as f64 / n as f64;
    let se = (0.75f64 * 0.25 / n as f64).sqrt();
    assert!((below_one - 0.75).abs() < 4.0 * se);
    for &alpha in &[0.7, 1.5] {
        let pos = (0..n).filter(|_| stable_increment_sample(alpha, 2.0, &mut rng) > 0.0).count();
        let frac = pos as f64 / n as f64;
        assert!((frac - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }
}

#[test]
fn sampler_scales_with_time_step() {
    // P(dt^{1/alpha} S <= x) = P(S <= x dt^{-1/alpha})
    let alpha = 1.5;
    let dt = 0.25;
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inc = StableIncrements::new(alpha, dt).unwrap();
    let xs: Vec<f64> = (0..n).map(|_| inc.sample(&mut rng)).collect();
    let law = StableLaw::new(alpha, dt).unwrap();
    let table = stable_table(alpha).unwrap();
    let d = ks_distance(xs, |x| table.distribution(law.t, x));
    assert!(d < 1.628 / (n as f64).sqrt());
}
