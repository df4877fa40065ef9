//! Exact covariance of the fluctuation field at finite `T` for the
//! untruncated system, by quadrature.
//!
//! Per axis the covariance factor is the double time integral of
//! `k(u1, u2) = ∫ |x|^{-γ} (p_m * (f · (p_d * f)))(x) dx` with
//! `m = u1 ∧ u2`, `d = |u1 - u2|`. It is integrated in the coordinates
//! `(m, d)`, where the diagonal `u1 = u2` becomes the edge `d = 0`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{domain, Result};
use crate::particle_system::{ParticleConfig, TestFunction};
use crate::quadrature::{integrate_breaks, integrate_power_weighted, Tolerance};
use crate::special_functions::{gamma, normal_cdf, normal_pdf, stable_table, StableTable};

const INNER: Tolerance = Tolerance::new(1e-14, 1e-10);
const OUTER: Tolerance = Tolerance::new(1e-12, 1e-9);
// nested quadrature of the general case
const SLOW: Tolerance = Tolerance::new(1e-10, 1e-6);

/// One axis of the system at a pair of (unscaled) times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupQuery {
    pub alpha: f64,
    pub gamma: f64,
    pub f: TestFunction,
    pub u1: f64,
    pub u2: f64,
}

/// Which evaluation a configuration uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    /// `γ = 0`: the kernel depends on `|u1 - u2|` only.
    Stationary,
    /// `α = 2` with a gaussian test function: closed-form convolutions.
    GaussianClosedForm,
    /// Nested quadrature, slow.
    Nested,
}

pub fn oracle_method(alpha: f64, gamma: f64, f: &TestFunction) -> OracleMethod {
    if gamma == 0.0 {
        OracleMethod::Stationary
    } else if alpha == 2.0 && matches!(f, TestFunction::Gaussian { .. }) {
        OracleMethod::GaussianClosedForm
    } else {
        OracleMethod::Nested
    }
}

/// `E|X|^{-γ}` for `X ~ N(c, v)`.
fn normal_neg_moment(c: f64, v: f64, g: f64) -> Result<f64> {
    let sd = v.sqrt();
    if c == 0.0 {
        return Ok(v.powf(-0.5 * g) * 2f64.powf(-0.5 * g) * gamma(0.5 * (1.0 - g)) / PI.sqrt());
    }
    let lo = c - 40.0 * sd;
    let hi = c + 40.0 * sd;
    let breaks: Vec<f64> = (-8..=8).map(|k| c + k as f64 * sd).collect();
    let r = integrate_power_weighted(|x| normal_pdf((x - c) / sd) / sd, lo, hi, g, &breaks, INNER)?;
    Ok(r.value)
}

#[derive(Debug, Clone)]
struct Axis {
    alpha: f64,
    gamma: f64,
    f: TestFunction,
    table: Option<Arc<StableTable>>,
}

impl Axis {
    fn new(alpha: f64, gamma: f64, f: TestFunction) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(domain(format!("the oracle needs 1 < alpha <= 2, got {alpha}")));
        }
        if !(gamma < 1.0) {
            return Err(domain(format!("gamma must be below 1, got {gamma}")));
        }
        f.validate()?;
        let table = if alpha < 2.0 { Some(stable_table(alpha)?) } else { None };
        Ok(Self { alpha, gamma, f, table })
    }

    fn scale(&self, w: f64) -> f64 {
        match self.table {
            None => (2.0 * w).sqrt(),
            Some(_) => w.powf(1.0 / self.alpha),
        }
    }

    fn density(&self, w: f64, x: f64) -> f64 {
        match &self.table {
            None => {
                let s = (2.0 * w).sqrt();
                normal_pdf(x / s) / s
            }
            Some(t) => t.density(w, x),
        }
    }

    fn cdf(&self, w: f64, x: f64) -> f64 {
        match &self.table {
            None => normal_cdf(x / (2.0 * w).sqrt()),
            Some(t) => t.distribution(w, x),
        }
    }

    /// `∫∫ f(y) p_d(y - z) f(z) dy dz`, with `∫ f²` at `d = 0`.
    fn stationary_kernel(&self, d: f64) -> Result<f64> {
        match (self.f, &self.table) {
            (TestFunction::Gaussian { width, .. }, None) => {
                Ok(1.0 / (2.0 * PI * (2.0 * width * width + 2.0 * d)).sqrt())
            }
            (TestFunction::Indicator { lo, hi }, None) => {
                let w = hi - lo;
                if d == 0.0 {
                    return Ok(w);
                }
                let s = (2.0 * d).sqrt();
                Ok(2.0 * (w * (normal_cdf(w / s) - 0.5) - s * (normal_pdf(0.0) - normal_pdf(w / s))))
            }
            (TestFunction::Gaussian { width, .. }, Some(_)) => {
                // autocorrelation N(0, 2 width²) against p_d
                let v = 2.0 * width * width;
                if d == 0.0 {
                    return Ok(1.0 / (2.0 * PI * v).sqrt());
                }
                let sd = v.sqrt();
                let sc = self.scale(d);
                let g = |r: f64| normal_pdf(r / sd) / sd * self.density(d, r);
                let mut pts: Vec<f64> = (0..=10).map(|k| k as f64 * sd).collect();
                pts.extend([sc, 4.0 * sc].iter().filter(|x| **x < 10.0 * sd));
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                Ok(2.0 * integrate_breaks(g, &pts, INNER)?.value)
            }
            (TestFunction::Indicator { lo, hi }, Some(_)) => {
                let w = hi - lo;
                if d == 0.0 {
                    return Ok(w);
                }
                let sc = self.scale(d);
                let mut pts = vec![0.0, w];
                pts.extend([0.1 * sc, sc, 4.0 * sc].iter().filter(|x| **x < w));
                pts.sort_by(f64::total_cmp);
                Ok(2.0 * integrate_breaks(|r| (w - r) * self.density(d, r), &pts, INNER)?.value)
            }
        }
    }

    /// `(p_d * f)(y)`.
    fn smoothed(&self, d: f64, y: f64) -> Result<f64> {
        if d == 0.0 {
            return Ok(self.f.eval(y));
        }
        match (self.f, &self.table) {
            (TestFunction::Indicator { lo, hi }, _) => Ok(self.cdf(d, y - lo) - self.cdf(d, y - hi)),
            (TestFunction::Gaussian { center, width }, None) => {
                let s = (width * width + 2.0 * d).sqrt();
                Ok(normal_pdf((y - center) / s) / s)
            }
            (TestFunction::Gaussian { center, width }, Some(_)) => {
                let sc = self.scale(d);
                let mut pts: Vec<f64> = (-8..=8).map(|k| center + k as f64 * width).collect();
                pts.extend([y - sc, y, y + sc].iter().filter(|p| (**p - center).abs() < 8.0 * width));
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                Ok(integrate_breaks(|z| self.f.eval(z) * self.density(d, y - z), &pts, SLOW)?.value)
            }
        }
    }

    /// `E|y + S_m|^{-γ}`.
    fn weight_at(&self, m: f64, y: f64) -> Result<f64> {
        if m == 0.0 {
            return Ok(y.abs().powf(-self.gamma));
        }
        if self.table.is_none() {
            return normal_neg_moment(y, 2.0 * m, self.gamma);
        }
        let sc = self.scale(m);
        let mut breaks: Vec<f64> = vec![y];
        let mut k = 0.25;
        while k <= 4096.0 {
            breaks.push(y - k * sc);
            breaks.push(y + k * sc);
            k *= 2.0;
        }
        let reach = 4096.0 * sc + y.abs();
        let head = integrate_power_weighted(|x| self.density(m, x - y), -reach, reach, self.gamma, &breaks, SLOW)?.value;
        // beyond the reach |x|^{-γ} p_m(x - y) is a tail term
        let tail = 2.0 * reach.powf(-self.gamma) * self.table.as_ref().unwrap().sf(reach / sc);
        Ok(head + tail)
    }

    /// The kernel `k` at `m = u1 ∧ u2`, `d = |u1 - u2|`.
    fn kernel(&self, m: f64, d: f64) -> Result<f64> {
        match oracle_method(self.alpha, self.gamma, &self.f) {
            OracleMethod::Stationary => self.stationary_kernel(d),
            OracleMethod::GaussianClosedForm => {
                let TestFunction::Gaussian { center, width } = self.f else {
                    unreachable!()
                };
                // f · (p_d * f) is a multiple of a normal density
                let v1 = width * width;
                let v2 = v1 + 2.0 * d;
                let mass = 1.0 / (2.0 * PI * (v1 + v2)).sqrt();
                let v = v1 * v2 / (v1 + v2);
                Ok(mass * normal_neg_moment(center, v + 2.0 * m, self.gamma)?)
            }
            OracleMethod::Nested => self.nested_kernel(m, d),
        }
    }

    fn nested_kernel(&self, m: f64, d: f64) -> Result<f64> {
        let (lo, hi) = self.f.band();
        let pts = [lo, self.f.center(), hi];
        let mut err = None;
        let v = integrate_breaks(
            |y| match self.smoothed(d, y).and_then(|s| Ok(s * self.weight_at(m, y)?)) {
                Ok(s) => self.f.eval(y) * s,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            &pts,
            SLOW,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(v.value),
        }
    }

    // the (m, d) integration used for gamma != 0, usable for any kernel
    fn time_integral_md<K: Fn(f64, f64) -> Result<f64>>(&self, a: f64, b: f64, k: K, tol: Tolerance) -> Result<f64> {
        let mut err = None;
        let inner = |m: f64, len: f64| -> Result<f64> {
            if len <= 0.0 {
                return Ok(0.0);
            }
            let pts = geometric_breaks(len, &[]);
            let mut e = None;
            let v = integrate_breaks(
                |d| match k(m, d) {
                    Ok(v) => v,
                    Err(x) => {
                        e.get_or_insert(x);
                        0.0
                    }
                },
                &pts,
                tol,
            )?
            .value;
            e.map_or(Ok(v), Err)
        };
        let pts = geometric_breaks(a.min(b), &[]);
        let mut guard = |r: Result<f64>| match r {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        };
        let v = integrate_breaks(|m| guard(inner(m, b - m)) + guard(inner(m, a - m)), &pts, tol)?.value;
        err.map_or(Ok(v), Err)
    }

    fn tolerance(&self) -> Tolerance {
        if oracle_method(self.alpha, self.gamma, &self.f) == OracleMethod::Nested {
            SLOW
        } else {
            OUTER
        }
    }

    /// `∫_0^A ∫_0^B k(u1, u2) du2 du1`.
    fn time_integral(&self, a: f64, b: f64) -> Result<f64> {
        if a <= 0.0 || b <= 0.0 {
            return Ok(0.0);
        }
        let tol = self.tolerance();
        let value = if oracle_method(self.alpha, self.gamma, &self.f) == OracleMethod::Stationary {
            // ∫ κ(d) ℓ(d) dd, ℓ the length of {|u1 - u2| = d} in the rectangle
            let len = |d: f64| (a.min(b - d)).max(0.0) + (b.min(a - d)).max(0.0);
            let pts = geometric_breaks(a.max(b), &[(a - b).abs()]);
            let mut err = None;
            let v = integrate_breaks(
                |d| match self.stationary_kernel(d) {
                    Ok(k) => k * len(d),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                &pts,
                tol,
            )?
            .value;
            err.map_or(Ok(v), Err)?
        } else {
            self.time_integral_md(a, b, |m, d| self.kernel(m, d), tol)?
        };
        if !value.is_finite() {
            return Err(domain("oracle integrand produced a non-finite value"));
        }
        Ok(value)
    }
}

// 0, 2^-8, ..., up to `hi`, plus extra points
fn geometric_breaks(hi: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts = vec![0.0, hi];
    let mut x = hi.min(1.0) / 256.0;
    while x < hi {
        pts.push(x);
        x *= 4.0;
    }
    pts.extend(extra.iter().filter(|e| **e > 0.0 && **e < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Single-axis factor `∫ |x|^{-γ} (p_{u1∧u2} * (f · (p_{|u1-u2|} * f)))(x) dx`.
///
/// At `u1 = u2` the inner kernel is the identity and the value is
/// `∫ |x|^{-γ} (p_u * f²)(x) dx` (`∫ f²` when `γ = 0`).
pub fn axis_number_cov(q: &SemigroupQuery) -> Result<f64> {
    if !(q.u1 >= 0.0 && q.u2 >= 0.0) {
        return Err(domain(format!("times must be nonnegative, got ({}, {})", q.u1, q.u2)));
    }
    let axis = Axis::new(q.alpha, q.gamma, q.f)?;
    axis.kernel(q.u1.min(q.u2), (q.u1 - q.u2).abs())
}

/// `∫_0^{a} ∫_0^{b}` of [`axis_number_cov`] over the time rectangle.
pub fn axis_time_integral(alpha: f64, gamma: f64, f: TestFunction, a: f64, b: f64) -> Result<f64> {
    Axis::new(alpha, gamma, f)?.time_integral(a, b)
}

/// `Cov(X_T(s, t), X_T(s', t'))` of the untruncated system.
#[allow(non_snake_case)]
pub fn prelimit_cov_XT(cfg: &ParticleConfig, pt1: (f64, f64), pt2: (f64, f64)) -> Result<f64> {
    cfg.validate()?;
    let mut out = 1.0;
    for (axis, (x1, x2)) in [(1usize, (pt1.0, pt2.0)), (2, (pt1.1, pt2.1))] {
        if !(x1 >= 0.0 && x2 >= 0.0) {
            return Err(domain("evaluation times must be nonnegative"));
        }
        let (alpha, gamma) = (cfg.pp.alpha[axis - 1], cfg.pp.gamma[axis - 1]);
        let m = axis_time_integral(alpha, gamma, cfg.test_function(axis), cfg.t * x1, cfg.t * x2)?;
        let fi = cfg.axis_norming(axis);
        out *= m / (fi * fi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neg_moment_closed_form_matches_quadrature() {
        for &g in &[0.5, -0.4] {
            let closed = normal_neg_moment(0.0, 1.7, g).unwrap();
            let quad = integrate_power_weighted(
                |x| normal_pdf(x / 1.7f64.sqrt()) / 1.7f64.sqrt(),
                -60.0,
                60.0,
                g,
                &[-1.0, 1.0],
                INNER,
            )
            .unwrap()
            .value;
            assert!((closed - quad).abs() < 1e-10 * closed, "{closed} vs {quad}");
        }
    }

    #[test]
    fn indicator_kernel_matches_quadrature() {
        let ax = Axis::new(2.0, 0.0, TestFunction::indicator(-0.5, 1.0).unwrap()).unwrap();
        for &d in &[0.01f64, 0.3, 5.0] {
            let s = (2.0 * d).sqrt();
            let w = 1.5;
            let q = integrate_breaks(|r| 2.0 * (w - r) * normal_pdf(r / s) / s, &[0.0, w], INNER).unwrap().value;
            let k = ax.stationary_kernel(d).unwrap();
            assert!((k - q).abs() < 1e-10 * q, "d={d}: {k} vs {q}");
        }
    }

    #[test]
    fn nested_kernel_matches_closed_forms() {
        let f = TestFunction::gaussian(0.3, 0.2).unwrap();
        let ax = Axis::new(2.0, 0.5, f).unwrap();
        for &(m, d) in &[(0.0, 0.5), (0.7, 0.0), (1.3, 2.0)] {
            let (a, b) = (ax.kernel(m, d).unwrap(), ax.nested_kernel(m, d).unwrap());
            assert!((a - b).abs() < 1e-5 * a, "m={m} d={d}: {a} vs {b}");
        }
        let ax = Axis::new(1.5, 0.0, TestFunction::indicator(-0.5, 1.0).unwrap()).unwrap();
        for &d in &[0.05, 1.0] {
            let (a, b) = (ax.stationary_kernel(d).unwrap(), ax.nested_kernel(0.4, d).unwrap());
            assert!((a - b).abs() < 1e-5 * a, "d={d}: {a} vs {b}");
        }
    }

    #[test]
    fn stationary_reduction_matches_two_dimensional_integral() {
        let ax = Axis::new(2.0, 0.0, TestFunction::gaussian(0.0, 0.3).unwrap()).unwrap();
        let one = ax.time_integral(3.0, 1.5).unwrap();
        let two = ax.time_integral_md(3.0, 1.5, |_, d| ax.stationary_kernel(d), OUTER).unwrap();
        assert!((one - two).abs() < 1e-8 * one, "{one} vs {two}");
    }
}
