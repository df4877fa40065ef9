use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{gamma, ln_gamma, normal_cdf};
use crate::error::{domain, Result};
use crate::quadrature::{integrate_breaks, integrate_power_weighted, Tolerance};

/// Default absolute tolerance of [`stable_density`].
pub const DENSITY_TOL: f64 = 1e-9;
/// Default absolute tolerance of [`weighted_density_integral`].
pub const WEIGHTED_INTEGRAL_TOL: f64 = 1e-7;

// Beyond this |x| (standard scale, 1 < alpha < 2) the Fourier integral
// oscillates too much and the Zolotarev representation takes over.
const FOURIER_MAX_Z: f64 = 8.0;
// e^{-y^alpha} < 1e-18 past y = 41.5^{1/alpha}.
const FOURIER_CUTOFF_EXP: f64 = 41.5;

/// Symmetric alpha-stable law with characteristic function `exp(-t|y|^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLaw {
    pub alpha: f64,
    pub t: f64,
}

impl StableLaw {
    pub fn new(alpha: f64, t: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(format!("stable time scale must be positive, got {t}")));
        }
        Ok(Self { alpha, t })
    }

    /// `t^{1/alpha}`, the spatial scale.
    pub fn scale(&self) -> f64 {
        self.t.powf(1.0 / self.alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(domain(format!("stability index must lie in (0, 2], got {alpha}")))
    }
}

/// Density `p_t(x)` at the default tolerance.
pub fn stable_density(law: StableLaw, x: f64) -> Result<f64> {
    stable_density_tol(law, x, DENSITY_TOL)
}

/// Density `p_t(x) = t^{-1/alpha} p_1(t^{-1/alpha} x)` to absolute error `tol`.
pub fn stable_density_tol(law: StableLaw, x: f64, tol: f64) -> Result<f64> {
    let s = law.scale();
    Ok(standard_density(law.alpha, x.abs() / s, tol * s)? / s)
}

/// `p_1(z)` for `z >= 0`.
pub(crate) fn standard_density(alpha: f64, z: f64, tol: f64) -> Result<f64> {
    if alpha == 2.0 {
        return Ok((-0.25 * z * z).exp() / (2.0 * PI.sqrt()));
    }
    if alpha == 1.0 {
        return Ok(1.0 / (PI * (1.0 + z * z)));
    }
    if alpha > 1.0 && (z <= FOURIER_MAX_Z || alpha - 1.0 < 0.02) {
        fourier_density(alpha, z, tol)
    } else if z == 0.0 {
        Ok(gamma(1.0 + 1.0 / alpha) / PI)
    } else {
        zolotarev_density(alpha, z, tol)
    }
}

/// `(1/pi) ∫_0^∞ cos(z y) e^{-y^alpha} dy`, split at the zeros of the cosine.
fn fourier_density(alpha: f64, z: f64, tol: f64) -> Result<f64> {
    let ymax = FOURIER_CUTOFF_EXP.powf(1.0 / alpha);
    let mut pts = vec![0.0];
    if z > 0.0 {
        let mut k = 0.0;
        loop {
            let y = (k + 0.5) * PI / z;
            if y >= ymax {
                break;
            }
            pts.push(y);
            k += 1.0;
        }
    }
    if pts.len() == 1 {
        pts.push(ymax.min(1.0));
    }
    pts.push(ymax);
    let tol_q = Tolerance::new(0.5 * tol * PI, 1e-13).with_max_splits(20_000);
    let r = integrate_breaks(|y: f64| (z * y).cos() * (-y.powf(alpha)).exp(), &pts, tol_q)?;
    Ok((r.value / PI).max(0.0))
}

// ln V(theta) of the Zolotarev representation, theta in (0, pi/2).
fn ln_v(alpha: f64, theta: f64) -> f64 {
    let zeta = alpha / (alpha - 1.0);
    let cos_t = (FRAC_PI_2 - theta).sin();
    zeta * (cos_t.ln() - (alpha * theta).sin().ln()) + ((alpha - 1.0) * theta).cos().ln() - cos_t.ln()
}

// theta where ln c + ln V(theta) = 0, if V crosses that level.
fn crossing(alpha: f64, ln_c: f64) -> Option<f64> {
    let f = |th: f64| ln_c + ln_v(alpha, th);
    let decreasing = alpha > 1.0;
    let (mut lo, mut hi) = (1e-300_f64.max(f64::MIN_POSITIVE), FRAC_PI_2 * (1.0 - 1e-16));
    let (flo, fhi) = (f(lo), f(hi));
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

// Panels bracketing the region where c V(theta) is of order one; the
// integrands are negligible well away from it.
fn zolotarev_points(alpha: f64, ln_c: f64) -> Vec<f64> {
    let mut pts = vec![0.0, FRAC_PI_2];
    for level in [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0] {
        if let Some(th) = crossing(alpha, ln_c - level) {
            if th > 0.0 && th < FRAC_PI_2 {
                pts.push(th);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn zolotarev_density(alpha: f64, z: f64, tol: f64) -> Result<f64> {
    let zeta = alpha / (alpha - 1.0);
    let ln_c = zeta * z.ln();
    let ln_pref = alpha.ln() + z.ln() / (alpha - 1.0) - (PI * (alpha - 1.0).abs()).ln();
    let pref = ln_pref.exp();
    let g = |th: f64| {
        let lv = ln_v(alpha, th);
        let e = lv - (ln_c + lv).exp();
        if e.is_nan() {
            0.0
        } else {
            e.exp()
        }
    };
    let pts = zolotarev_points(alpha, ln_c);
    let tol_q = Tolerance::new(0.5 * tol / pref, 1e-13).with_max_splits(20_000);
    let r = integrate_breaks(g, &pts, tol_q)?;
    Ok(pref * r.value)
}

/// `(1/pi) ∫_0^{pi/2} exp(-c V(theta)) dtheta` for `z > 0`.
fn zolotarev_tail_integral(alpha: f64, z: f64) -> Result<f64> {
    let zeta = alpha / (alpha - 1.0);
    let ln_c = zeta * z.ln();
    let g = |th: f64| {
        let e = -(ln_c + ln_v(alpha, th)).exp();
        if e.is_nan() {
            0.0
        } else {
            e.exp()
        }
    };
    let pts = zolotarev_points(alpha, ln_c);
    let r = integrate_breaks(g, &pts, Tolerance::new(1e-14, 1e-13).with_max_splits(20_000))?;
    Ok(r.value / PI)
}

/// Upper tail `P(S > z)` of the standard law, `z >= 0`.
pub(crate) fn standard_sf(alpha: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.5);
    }
    if alpha == 2.0 {
        return Ok(normal_cdf(-z / std::f64::consts::SQRT_2));
    }
    if alpha == 1.0 {
        return Ok(0.5 - z.atan() / PI);
    }
    let i = zolotarev_tail_integral(alpha, z)?;
    Ok(if alpha > 1.0 { i } else { 0.5 - i })
}

/// Distribution function `P(X <= x)` of the law.
pub fn stable_cdf(law: StableLaw, x: f64) -> Result<f64> {
    let z = x / law.scale();
    let sf = standard_sf(law.alpha, z.abs())?;
    Ok(if z >= 0.0 { 1.0 - sf } else { sf })
}

/// `p_t(0) = Γ(1/alpha) / (alpha pi t^{1/alpha})`.
pub fn stable_density_at_zero(alpha: f64, t: f64) -> Result<f64> {
    let law = StableLaw::new(alpha, t)?;
    Ok(gamma(1.0 / alpha) / (alpha * PI * law.scale()))
}

/// Coefficient `c_k` of the large-|z| expansion `p_1(z) ~ Σ c_k z^{-alpha k - 1}`.
fn tail_coefficient(alpha: f64, k: usize) -> f64 {
    let kf = k as f64;
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    let mag = (ln_gamma(alpha * kf + 1.0) - ln_gamma(kf + 1.0)).exp();
    sign * mag * (kf * PI * alpha / 2.0).sin() / PI
}

/// `Σ_k c_k z^{-alpha k - 1 - shift} / w_k`, summed while the terms shrink.
/// With `weight = true` each term is divided by `alpha k + shift`.
pub(crate) fn tail_series(alpha: f64, z: f64, shift: f64, weight: bool) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for k in 1..=60 {
        let kf = k as f64;
        let p = alpha * kf + shift;
        let mut term = tail_coefficient(alpha, k) * (-(p) * z.ln()).exp();
        if !weight {
            term /= z;
        } else {
            term /= p;
        }
        let mag = term.abs();
        if mag > last && k > 2 {
            break;
        }
        sum += term;
        if mag != 0.0 {
            last = mag;
        }
        if mag < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `∫ p_1(x) |x|^{-gamma} dx` at the default tolerance.
pub fn weighted_density_integral(alpha: f64, gamma: f64) -> Result<f64> {
    weighted_density_integral_tol(alpha, gamma, WEIGHTED_INTEGRAL_TOL)
}

/// `∫_R p_1^alpha(x) |x|^{-gamma} dx` to absolute error `tol`.
pub fn weighted_density_integral_tol(alpha: f64, gamma: f64, tol: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(domain(format!("weighted density integral needs 1 < alpha <= 2, got {alpha}")));
    }
    if !(gamma < 1.0) {
        return Err(domain(format!("|x|^(-gamma) is not integrable at 0 for gamma = {gamma}")));
    }
    if alpha < 2.0 && gamma <= -alpha {
        return Err(domain(format!(
            "tail integral diverges for gamma = {gamma} <= -alpha = {}",
            -alpha
        )));
    }
    if gamma == 0.0 {
        return Ok(1.0);
    }
    let dens_tol = 1e-3 * tol;
    let p1 = |x: f64| standard_density(alpha, x.abs(), dens_tol).unwrap_or(f64::NAN);
    let qt = Tolerance::new(0.1 * tol, 1e-12).with_max_splits(10_000);
    if alpha == 2.0 {
        // exp(-x^2/4) is below 1e-300 past 53.
        let hi = 54.0_f64;
        let pts: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0].to_vec();
        let r = integrate_power_weighted(p1, 0.0, hi, gamma, &pts, qt)?;
        return check_finite(2.0 * r.value);
    }
    let head = integrate_power_weighted(p1, 0.0, 1.0, gamma, &[0.5], qt)?.value;
    let mut pts = vec![1.0];
    let mut x = 1.0;
    while x < 1024.0 {
        x *= 2.0;
        pts.push(x);
    }
    let mid = integrate_breaks(|x: f64| p1(x) * x.powf(-gamma), &pts, qt)?.value;
    let tail = tail_series(alpha, 1024.0, gamma, true);
    check_finite(2.0 * (head + mid + tail))
}

fn check_finite(v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(domain(format!("weighted density integral evaluated to {v}")))
    }
}

/// Pre-computed Chambers–Mallows–Stuck sampler for increments over `dt`.
#[derive(Debug, Clone, Copy)]
pub struct StableIncrements {
    alpha: f64,
    scale: f64,
}

impl StableIncrements {
    pub fn new(alpha: f64, dt: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(dt > 0.0) {
            return Err(domain(format!("time step must be positive, got {dt}")));
        }
        let scale = if alpha == 2.0 {
            (2.0 * dt).sqrt()
        } else {
            dt.powf(1.0 / alpha)
        };
        Ok(Self { alpha, scale })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.alpha == 2.0 {
            let n: f64 = StandardNormal.sample(rng);
            return self.scale * n;
        }
        let v = PI * (rng.random::<f64>() - 0.5);
        let w: f64 = Exp1.sample(rng);
        let a = self.alpha;
        let s = if a == 1.0 {
            v.tan()
        } else {
            (a * v).sin() / v.cos().powf(1.0 / a) * (((1.0 - a) * v).cos() / w).powf((1.0 - a) / a)
        };
        self.scale * s
    }
}

/// One draw of `dt^{1/alpha} S` with `S` standard symmetric alpha-stable.
pub fn stable_increment_sample<R: Rng + ?Sized>(alpha: f64, dt: f64, rng: &mut R) -> f64 {
    StableIncrements::new(alpha, dt)
        .expect("stable_increment_sample needs 0 < alpha <= 2 and dt > 0")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_forms() {
        let p = stable_density(StableLaw::new(2.0, 1.0).unwrap(), 0.0).unwrap();
        assert!((p - 0.282_094_791_773_878_14).abs() < 1e-15);
        let p = stable_density(StableLaw::new(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert!((p - 0.159_154_943_091_895_35).abs() < 1e-15);
        assert!((stable_density_at_zero(1.0, 1.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(stable_density_at_zero(2.5, 1.0).is_err());
        assert!(stable_density_at_zero(1.5, 0.0).is_err());
    }

    #[test]
    fn fourier_and_zolotarev_agree() {
        for &alpha in &[1.2, 1.5, 1.8] {
            for &z in &[0.5, 2.0, 5.0, 8.0] {
                let f = fourier_density(alpha, z, 1e-12).unwrap();
                let g = zolotarev_density(alpha, z, 1e-12).unwrap();
                assert!((f - g).abs() < 1e-10, "alpha={alpha} z={z}: {f} vs {g}");
            }
        }
    }

    #[test]
    fn zolotarev_matches_series_far_out() {
        for &alpha in &[0.7, 1.3, 1.7] {
            let z = 200.0;
            let d = zolotarev_density(alpha, z, 1e-16).unwrap();
            let s = tail_series(alpha, z, 0.0, false);
            assert!((d / s - 1.0).abs() < 1e-8, "alpha={alpha}: {d} vs {s}");
        }
    }

    #[test]
    fn self_similarity() {
        let law8 = StableLaw::new(1.5, 8.0).unwrap();
        let law1 = StableLaw::new(1.5, 1.0).unwrap();
        let k = 8f64.powf(-2.0 / 3.0);
        for &x in &[0.0, 0.3, 3.0, 30.0] {
            let lhs = stable_density(law8, x).unwrap();
            let rhs = k * stable_density(law1, k * x).unwrap();
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn cdf_closed_forms_and_symmetry() {
        let c = StableLaw::new(1.0, 1.0).unwrap();
        assert!((stable_cdf(c, 1.0).unwrap() - 0.75).abs() < 1e-15);
        let g = StableLaw::new(2.0, 0.5).unwrap();
        assert!((stable_cdf(g, 1.0).unwrap() - normal_cdf(1.0)).abs() < 1e-15);
        let l = StableLaw::new(1.5, 2.0).unwrap();
        let a = stable_cdf(l, 0.7).unwrap();
        let b = stable_cdf(l, -0.7).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
        // the Cauchy limit of the Zolotarev branch
        let near = stable_cdf(StableLaw::new(1.02, 1.0).unwrap(), 1.0).unwrap();
        assert!((near - 0.75).abs() < 0.01);
    }

    #[test]
    fn cdf_derivative_is_density() {
        for &alpha in &[0.8, 1.25, 1.6] {
            let law = StableLaw::new(alpha, 1.0).unwrap();
            for &x in &[0.4, 1.5, 9.0] {
                let h = 1e-4;
                let d = (stable_cdf(law, x + h).unwrap() - stable_cdf(law, x - h).unwrap()) / (2.0 * h);
                let p = stable_density(law, x).unwrap();
                assert!((d - p).abs() < 1e-7, "alpha={alpha} x={x}: {d} vs {p}");
            }
        }
    }

    #[test]
    fn sampler_gaussian_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let s: f64 = (0..n).map(|_| stable_increment_sample(2.0, 1.0, &mut rng).powi(2)).sum();
        let var = s / n as f64;
        assert!((var - 2.0).abs() < 3.0 * (2.0f64 / n as f64).sqrt() * 2.0);
    }
}
