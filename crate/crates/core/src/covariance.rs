//! Covariance of the weighted fractional Brownian sheet, its rectangle
//! increments, and the limit constants of the increment structure.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, WfbsError};
use crate::params::{AxisParams, ParticleParams, WfbsParams};
use crate::special_functions::{
    beta_fn, inc_beta_pair, stable_density_at_zero, weighted_density_integral,
};

/// The rectangle `((s, t), (s2, t2)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub s: f64,
    pub t: f64,
    pub s2: f64,
    pub t2: f64,
}

impl Rect {
    pub fn new(s: f64, t: f64, s2: f64, t2: f64) -> Result<Self> {
        let ok = [s, t, s2, t2].iter().all(|v| v.is_finite() && *v >= 0.0);
        if !ok || !(s < s2) || !(t < t2) {
            return Err(WfbsError::InvalidRect(format!(
                "need 0 <= s < s2 and 0 <= t < t2, got ({s}, {t}), ({s2}, {t2})"
            )));
        }
        Ok(Self { s, t, s2, t2 })
    }

    /// The same rectangle moved by `(ds, dt)`.
    pub fn shifted(&self, ds: f64, dt: f64) -> Result<Self> {
        Self::new(self.s + ds, self.t + dt, self.s2 + ds, self.t2 + dt)
    }
}

/// Increments of the sheet along the ray `x -> (x, theta x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayQuery {
    pub theta: f64,
    pub u: f64,
    pub v: f64,
    pub s: f64,
    pub t: f64,
    pub tau: f64,
}

impl RayQuery {
    pub fn new(theta: f64, u: f64, v: f64, s: f64, t: f64, tau: f64) -> Result<Self> {
        if !(theta > 0.0) || !(tau > 0.0) {
            return Err(domain(format!("ray needs theta > 0 and tau > 0, got {theta}, {tau}")));
        }
        if !(0.0 <= u && u < v) || !(0.0 <= s && s < t) {
            return Err(WfbsError::InvalidRect(format!(
                "ray increments need 0 <= u < v and 0 <= s < t, got u={u}, v={v}, s={s}, t={t}"
            )));
        }
        Ok(Self {
            theta,
            u,
            v,
            s,
            t,
            tau,
        })
    }
}

/// `∫_lo^hi r^a (w - r)^b dr` for `0 <= lo <= hi <= w`.
pub fn partial_h(axis: AxisParams, lo: f64, hi: f64, w: f64) -> f64 {
    let (a, b) = (axis.a, axis.b);
    if hi <= lo || w <= 0.0 {
        return 0.0;
    }
    if b == 0.0 {
        let e = 1.0 + a;
        return (hi.powf(e) - lo.powf(e)) / e;
    }
    let (p, q) = (a + 1.0, b + 1.0);
    let scale = w.powf(1.0 + a + b) * beta_fn(p, q);
    let (i_lo, ic_lo) = inc_beta_pair(lo / w, (w - lo) / w, p, q);
    let (i_hi, ic_hi) = inc_beta_pair(hi / w, (w - hi) / w, p, q);
    // difference of whichever tails are small
    let frac = if lo / w > 0.5 { ic_lo - ic_hi } else { i_hi - i_lo };
    scale * frac.max(0.0)
}

/// Axis covariance `C(u, v) = ∫_0^{u∧v} r^a[(u-r)^b + (v-r)^b] dr`.
pub fn axis_cov(axis: AxisParams, u: f64, v: f64) -> f64 {
    let m = u.min(v);
    if m <= 0.0 {
        return 0.0;
    }
    if axis.b == 0.0 {
        let e = 1.0 + axis.a;
        return 2.0 * m.powf(e) / e;
    }
    partial_h(axis, 0.0, m, u) + partial_h(axis, 0.0, m, v)
}

fn check_times(ts: &[f64]) -> Result<()> {
    for &x in ts {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(domain(format!("times must be finite and nonnegative, got {x}")));
        }
    }
    Ok(())
}

/// Weighted fractional Brownian motion covariance with validated `(a, b)`.
pub fn wfbm_cov(a: f64, b: f64, u: f64, v: f64) -> Result<f64> {
    let axis = AxisParams::new(a, b, 1).map_err(|e| domain(e.to_string()))?;
    check_times(&[u, v])?;
    Ok(axis_cov(axis, u, v))
}

/// `K_W((s, t), (s2, t2)) = C1(s, s2) C2(t, t2)`.
pub fn sheet_cov(p: &WfbsParams, s: f64, t: f64, s2: f64, t2: f64) -> Result<f64> {
    check_times(&[s, t, s2, t2])?;
    Ok(axis_cov(p.axis(0), s, s2) * axis_cov(p.axis(1), t, t2))
}

/// `Cov(Y(x2) - Y(x1), Y(y2) - Y(y1))` for one axis.
pub fn axis_increment_cov(axis: AxisParams, x1: f64, x2: f64, y1: f64, y2: f64) -> f64 {
    if x1 == y1 && x2 == y2 {
        return 2.0 * partial_h(axis, x1, x2, x2);
    }
    if x2 <= y1 {
        return ordered_increment_cov(axis, x1, x2, y1, y2);
    }
    if y2 <= x1 {
        return ordered_increment_cov(axis, y1, y2, x1, x2);
    }
    let c = |u, v| axis_cov(axis, u, v);
    c(x2, y2) - c(x2, y1) - c(x1, y2) + c(x1, y1)
}

// x1 < x2 <= y1 < y2: ∫_{x1}^{x2} r^a[(y2 - r)^b - (y1 - r)^b] dr
fn ordered_increment_cov(axis: AxisParams, x1: f64, x2: f64, y1: f64, y2: f64) -> f64 {
    if axis.b == 0.0 {
        return 0.0;
    }
    partial_h(axis, x1, x2, y2) - partial_h(axis, x1, x2, y1)
}

/// Covariance of the increments of `W` over two rectangles.
pub fn rect_increment_cov(p: &WfbsParams, r1: &Rect, r2: &Rect) -> Result<f64> {
    let c1 = axis_increment_cov(p.axis(0), r1.s, r1.s2, r2.s, r2.s2);
    let c2 = axis_increment_cov(p.axis(1), r1.t, r1.t2, r2.t, r2.t2);
    Ok(c1 * c2)
}

/// `E(Δ W)^2 = 4 A(s, s2; a1, b1) A(t, t2; a2, b2)`.
pub fn rect_increment_var(p: &WfbsParams, r: &Rect) -> Result<f64> {
    Ok(4.0 * partial_h(p.axis(0), r.s, r.s2, r.s2) * partial_h(p.axis(1), r.t, r.t2, r.t2))
}

/// Limit of `eps^{-1-b1} delta^{-1-b2} E(Δ W)^2` over `((s,t),(s+eps,t+delta)]`.
pub fn short_increment_limit(p: &WfbsParams, s: f64, t: f64) -> Result<f64> {
    check_times(&[s, t])?;
    for (x, axis) in [(s, p.axis(0)), (t, p.axis(1))] {
        if x == 0.0 && axis.a < 0.0 {
            return Err(domain(format!("x^a diverges at 0 for a = {}", axis.a)));
        }
    }
    let c = 4.0 / ((1.0 + p.b1()) * (1.0 + p.b2()));
    Ok(c * s.powf(p.a1()) * t.powf(p.a2()))
}

/// `4 B(1+a1, 1+b1) B(1+a2, 1+b2)`.
pub fn long_increment_limit(p: &WfbsParams) -> f64 {
    4.0 * beta_fn(1.0 + p.a1(), 1.0 + p.b1()) * beta_fn(1.0 + p.a2(), 1.0 + p.b2())
}

/// Long-range limit of `tau^{1-b1} kappa^{1-b2} Cov(Δ_{r1} W, Δ_{r2 + (tau, kappa)} W)`.
pub fn lrd_limit(p: &WfbsParams, r1: &Rect, r2: &Rect) -> Result<f64> {
    let (e1, e2) = (1.0 + p.a1(), 1.0 + p.a2());
    let c = p.b1() * p.b2() / (e1 * e2);
    Ok(c * (r2.s2 - r2.s)
        * (r1.s2.powf(e1) - r1.s.powf(e1))
        * (r2.t2 - r2.t)
        * (r1.t2.powf(e2) - r1.t.powf(e2)))
}

/// `Cov(Z_v - Z_u, Z_{t+tau} - Z_{s+tau})` with `Z_x = W(x, theta x)`.
pub fn ray_increment_cov(p: &WfbsParams, q: &RayQuery) -> f64 {
    let (c1, c2) = (p.axis(0), p.axis(1));
    let (lo, hi) = (q.s + q.tau, q.t + q.tau);
    let th = q.theta;
    // Cov(Z_x, Z_hi - Z_lo), written with differences that stay accurate far out
    let d = |x: f64| {
        let d1 = if x <= lo {
            ordered_point_diff(c1, x, lo, hi)
        } else {
            axis_cov(c1, x, hi) - axis_cov(c1, x, lo)
        };
        let d2 = if x <= lo {
            ordered_point_diff(c2, th * x, th * lo, th * hi)
        } else {
            axis_cov(c2, th * x, th * hi) - axis_cov(c2, th * x, th * lo)
        };
        d1 * axis_cov(c2, th * x, th * hi) + axis_cov(c1, x, lo) * d2
    };
    d(q.v) - d(q.u)
}

// C(x, y2) - C(x, y1) for x <= y1 < y2
fn ordered_point_diff(axis: AxisParams, x: f64, y1: f64, y2: f64) -> f64 {
    if axis.b == 0.0 || x <= 0.0 {
        return 0.0;
    }
    partial_h(axis, 0.0, x, y2) - partial_h(axis, 0.0, x, y1)
}

/// Long-range limit of `tau^{1-(b1+b2)} Cov(Z_v - Z_u, Z_{t+tau} - Z_{s+tau})`.
pub fn ray_lrd_limit(p: &WfbsParams, q: &RayQuery) -> Result<f64> {
    let (b1, b2) = (p.b1(), p.b2());
    if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) {
        return Err(domain(format!("ray limit needs 0 <= b_i < 1, got b1={b1}, b2={b2}")));
    }
    if b1 == 0.0 && b2 == 0.0 {
        return Err(domain("ray limit needs b1 and b2 not both zero"));
    }
    let (a1, a2) = (p.a1(), p.a2());
    let e = 2.0 + a1 + a2;
    Ok(q.theta.powf(1.0 + a2 + b2) * (b1 + b2) / ((1.0 + a1) * (1.0 + a2))
        * (q.v.powf(e) - q.u.powf(e))
        * (q.t - q.s))
}

/// Regime of the ray process covariance decay, from the sign of `b1 + b2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayRegime {
    /// `b1 + b2 < 1`: covariances decay to zero.
    Decaying,
    /// `b1 + b2 = 1`: a non-trivial limit.
    NonTrivialLimit,
    /// `b1 + b2 > 1`: covariances grow.
    Growing,
}

pub fn ray_regime(p: &WfbsParams) -> RayRegime {
    let s = p.b1() + p.b2();
    if s < 1.0 {
        RayRegime::Decaying
    } else if s == 1.0 {
        RayRegime::NonTrivialLimit
    } else {
        RayRegime::Growing
    }
}

/// Amplitude `D` of the occupation-time limit.
pub fn amplitude_d(pp: &ParticleParams, int_phi: f64, int_psi: f64) -> Result<f64> {
    if int_phi * int_psi == 0.0 || !(int_phi * int_psi).is_finite() {
        return Err(domain(format!(
            "test function integrals must be finite and nonzero, got {int_phi}, {int_psi}"
        )));
    }
    let mut prod = 1.0;
    for i in 0..2 {
        let (alpha, gamma) = (pp.alpha[i], pp.gamma[i]);
        let w = weighted_density_integral(alpha, gamma)?;
        prod *= stable_density_at_zero(alpha, 1.0)? / (1.0 - 1.0 / alpha) * w;
    }
    Ok((int_phi * int_psi).abs() * prod.sqrt())
}
