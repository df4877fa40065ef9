//! Mean occupation of one axis under the truncated intensity
//! `1{|x| <= R} |x|^{-gamma} dx`.

use super::TestFunction;
use crate::error::Result;
use crate::quadrature::{integrate_breaks, integrate_power_weighted, Tolerance};
use crate::special_functions::{normal_cdf, normal_pdf, stable_table, StableTable};
use std::sync::Arc;

const TOL: Tolerance = Tolerance::new(1e-13, 1e-10);

/// `g(w) = ∫_{-R}^{R} |x|^{-gamma} (p_w * f)(x) dx`, the expected rate of
/// occupation at time `w`.
#[derive(Debug, Clone)]
pub(crate) struct MeanRate {
    alpha: f64,
    gamma: f64,
    f: TestFunction,
    r: f64,
    table: Option<Arc<StableTable>>,
}

// ∫ Φ(z) dz = z Φ(z) + φ(z)
fn int_cdf(z: f64) -> f64 {
    z * normal_cdf(z) + normal_pdf(z)
}

impl MeanRate {
    pub(crate) fn new(alpha: f64, gamma: f64, f: TestFunction, r: f64) -> Result<Self> {
        let table = if alpha < 2.0 { Some(stable_table(alpha)?) } else { None };
        Ok(Self {
            alpha,
            gamma,
            f,
            r,
            table,
        })
    }

    fn scale(&self, w: f64) -> f64 {
        match &self.table {
            None => (2.0 * w).sqrt(),
            Some(_) => w.powf(1.0 / self.alpha),
        }
    }

    // distribution function of the motion at time w
    fn cdf(&self, w: f64, x: f64) -> f64 {
        match &self.table {
            None => normal_cdf(x / (2.0 * w).sqrt()),
            Some(t) => t.distribution(w, x),
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

    // (p_w * f)(x)
    fn smoothed(&self, w: f64, x: f64) -> Result<f64> {
        match self.f {
            TestFunction::Indicator { lo, hi } => Ok(self.cdf(w, x - lo) - self.cdf(w, x - hi)),
            TestFunction::Gaussian { center, width } if self.table.is_none() => {
                let s = (width * width + 2.0 * w).sqrt();
                Ok(normal_pdf((x - center) / s) / s)
            }
            TestFunction::Gaussian { center, width } => {
                let sc = self.scale(w);
                let mut pts: Vec<f64> = (-8..=8).map(|k| center + k as f64 * width).collect();
                pts.extend([x - 4.0 * sc, x, x + 4.0 * sc].iter().filter(|p| p.abs() < center.abs() + 8.0 * width));
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let v = integrate_breaks(|y| self.f.eval(y) * self.density(w, x - y), &pts, TOL)?;
                Ok(v.value)
            }
        }
    }

    pub(crate) fn at(&self, w: f64) -> Result<f64> {
        let r = self.r;
        if w <= 0.0 {
            let (lo, hi) = self.f.band();
            let pts = [lo.max(-r), hi.min(r)];
            return Ok(integrate_power_weighted(|x| self.f.eval(x), pts[0], pts[1], self.gamma, &[self.f.center()], TOL)?.value);
        }
        if self.gamma == 0.0 {
            match (self.f, &self.table) {
                (TestFunction::Gaussian { center, width }, None) => {
                    let s = (width * width + 2.0 * w).sqrt();
                    return Ok(normal_cdf((r - center) / s) - normal_cdf((-r - center) / s));
                }
                (TestFunction::Indicator { lo, hi }, None) => {
                    // ∫_{-R}^{R} [Φ((x-lo)/s) - Φ((x-hi)/s)] dx
                    let s = (2.0 * w).sqrt();
                    let part = |e: f64| s * (int_cdf((r - e) / s) - int_cdf((-r - e) / s));
                    return Ok(part(lo) - part(hi));
                }
                _ => {
                    // swap the order: ∫ f(y) P(|y + S_w| <= R) dy
                    let (lo, hi) = self.f.band();
                    let c = self.f.center();
                    let pts = [lo, c, hi];
                    let v = integrate_breaks(
                        |y| self.f.eval(y) * (self.cdf(w, r - y) - self.cdf(w, -r - y)),
                        &pts,
                        TOL,
                    )?;
                    return Ok(v.value);
                }
            }
        }
        let (lo, hi) = self.f.band();
        let sc = self.scale(w);
        let mut breaks = vec![self.f.center()];
        let mut k = 0.0;
        while k <= 64.0 {
            breaks.push(lo - k * sc);
            breaks.push(hi + k * sc);
            k = if k == 0.0 { 0.5 } else { 2.0 * k };
        }
        let mut err = None;
        let v = integrate_power_weighted(
            |x| match self.smoothed(w, x) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            -r,
            r,
            self.gamma,
            &breaks,
            TOL,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(v.value)
    }
}

/// `∫_0^{S} g(w) dw` at every checkpoint, as the midpoint sum matching the
/// simulated occupation: `dt (Σ_{k<K} g(t_k) + frac g(t_K))`.
pub(crate) fn midpoint_mean(rate: &MeanRate, dt: f64, full: &[usize], frac: &[f64], cells: usize) -> Result<Vec<f64>> {
    let g: Vec<f64> = (0..cells)
        .map(|k| rate.at((k as f64 + 0.5) * dt))
        .collect::<Result<_>>()?;
    let mut prefix = Vec::with_capacity(cells + 1);
    prefix.push(0.0);
    for v in &g {
        prefix.push(prefix[prefix.len() - 1] + v);
    }
    Ok(full
        .iter()
        .zip(frac)
        .map(|(&k, &fr)| {
            let extra = if fr > 0.0 { fr * g[k] } else { 0.0 };
            dt * (prefix[k] + extra)
        })
        .collect())
}
