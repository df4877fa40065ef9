//! Independent quadrature oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use wfbs::quadrature::{integrate_breaks, Tolerance};

const TOL: Tolerance = Tolerance::new(1e-15, 1e-13).with_max_splits(20_000);

fn quad(f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> f64 {
    integrate_breaks(f, &[lo, hi], TOL).unwrap().value
}

// ∫_0^h r^a g(r) dr with r = h w^{1/(1+a)}
fn left_singular(a: f64, h: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
    let e = 1.0 + a;
    h.powf(e) / e * quad(|w| g(h * w.powf(1.0 / e)), 0.0, 1.0)
}

// ∫_{e-h}^e (e - r)^b g(r) dr with e - r = h y^{1/(1+b)}
fn right_singular(b: f64, e: f64, h: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
    let q = 1.0 + b;
    h.powf(q) / q * quad(|y| g(e - h * y.powf(1.0 / q)), 0.0, 1.0)
}

/// `∫_0^{u∧v} r^a[(u-r)^b + (v-r)^b] dr` by adaptive quadrature with both
/// endpoint singularities flattened.
pub fn integral_oracle(a: f64, b: f64, u: f64, v: f64) -> f64 {
    let m = u.min(v);
    if m == 0.0 {
        return 0.0;
    }
    let h = 0.5 * m;
    let pw = |w: f64, r: f64| (w - r).powf(b);
    let head = left_singular(a, h, |r| pw(u, r) + pw(v, r));
    let mut tail = 0.0;
    for w in [u, v] {
        if w == m {
            tail += right_singular(b, m, h, |r| r.powf(a));
        } else {
            tail += quad(|r| r.powf(a) * pw(w, r), h, m);
        }
    }
    head + tail
}

/// `∫_x1^x2 r^a (w - r)^b dr`, `x2 <= w`.
pub fn h_oracle(a: f64, b: f64, x1: f64, x2: f64, w: f64) -> f64 {
    let mid = 0.5 * (x1 + x2);
    let pw = |r: f64| (w - r).powf(b);
    let lower = if x1 == 0.0 {
        left_singular(a, mid, pw)
    } else {
        quad(|r| r.powf(a) * pw(r), x1, mid)
    };
    let upper = if x2 == w {
        right_singular(b, w, x2 - mid, |r| r.powf(a))
    } else {
        quad(|r| r.powf(a) * pw(r), mid, x2)
    };
    lower + upper
}

/// One factor of the ordered increment covariance,
/// `∫_s^{s2} r^a[(p2-r)^b - (p-r)^b] dr` for `s < s2 <= p < p2`.
pub fn ordered_factor_oracle(a: f64, b: f64, s: f64, s2: f64, p: f64, p2: f64) -> f64 {
    h_oracle(a, b, s, s2, p2) - h_oracle(a, b, s, s2, p)
}

/// Uniform draw from the admissible `(a, b)` region with `a <= a_max`,
/// kept away from the open boundaries.
pub fn random_axis<R: Rng>(rng: &mut R, a_max: f64) -> (f64, f64) {
    let a = rng.random_range(-0.9..a_max);
    let lim = (1.0 + a).min(1.0);
    let b = rng.random_range((-lim + 0.05).min(0.0)..=lim);
    (a, b.max(-0.95))
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
