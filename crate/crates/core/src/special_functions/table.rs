use std::sync::{Arc, Mutex, OnceLock};

use super::stable::{standard_density, standard_sf, tail_series};
use crate::error::{domain, Result};

const STEP: f64 = 0.01;
const ZMAX: f64 = 30.0;

/// Interpolation table of the standard density and upper tail for one
/// `1 < alpha < 2`, for use inside nested quadratures.
#[derive(Debug)]
pub struct StableTable {
    alpha: f64,
    pdf: Vec<f64>,
    sf: Vec<f64>,
}

impl StableTable {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(domain(format!("stable table needs 1 < alpha < 2, got {alpha}")));
        }
        let n = (ZMAX / STEP).round() as usize;
        let mut pdf = Vec::with_capacity(n + 3);
        let mut sf = Vec::with_capacity(n + 3);
        // two guard nodes past ZMAX keep the cubic stencil inside the table
        for i in 0..=n + 2 {
            let z = i as f64 * STEP;
            pdf.push(standard_density(alpha, z, 1e-13)?);
            sf.push(standard_sf(alpha, z)?);
        }
        Ok(Self { alpha, pdf, sf })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    // Cubic through the nodes i-1..i+2; `left` supplies the value at -STEP.
    fn interp(v: &[f64], z: f64, left: f64) -> f64 {
        let u = z / STEP;
        let i = u.floor() as usize;
        let f = u - i as f64;
        let y0 = if i == 0 { left } else { v[i - 1] };
        let (y1, y2, y3) = (v[i], v[i + 1], v[i + 2]);
        let c0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let c1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let c2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let c3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        c0 * y0 + c1 * y1 + c2 * y2 + c3 * y3
    }

    /// Standard density `p_1(z)`.
    pub fn pdf(&self, z: f64) -> f64 {
        let z = z.abs();
        if z >= ZMAX {
            return tail_series(self.alpha, z, 0.0, false);
        }
        Self::interp(&self.pdf, z, self.pdf[1])
    }

    /// Upper tail `P(S > z)`; negative `z` uses symmetry.
    pub fn sf(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 1.0 - self.sf(-z);
        }
        if z >= ZMAX {
            return tail_series(self.alpha, z, 0.0, true);
        }
        Self::interp(&self.sf, z, 1.0 - self.sf[1])
    }

    /// `P(S <= z)`.
    pub fn cdf(&self, z: f64) -> f64 {
        1.0 - self.sf(z)
    }

    /// Density of the law with time scale `t` at `x`.
    pub fn density(&self, t: f64, x: f64) -> f64 {
        let s = t.powf(1.0 / self.alpha);
        self.pdf(x / s) / s
    }

    /// `P(X <= x)` for the law with time scale `t`.
    pub fn distribution(&self, t: f64, x: f64) -> f64 {
        self.cdf(x / t.powf(1.0 / self.alpha))
    }
}

/// Shared table for `alpha`, built on first use.
pub fn stable_table(alpha: f64) -> Result<Arc<StableTable>> {
    static CACHE: OnceLock<Mutex<Vec<Arc<StableTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    {
        let guard = cache.lock().expect("stable table cache poisoned");
        if let Some(t) = guard.iter().find(|t| t.alpha == alpha) {
            return Ok(Arc::clone(t));
        }
    }
    let table = Arc::new(StableTable::new(alpha)?);
    let mut guard = cache.lock().expect("stable table cache poisoned");
    if let Some(t) = guard.iter().find(|t| t.alpha == alpha) {
        return Ok(Arc::clone(t));
    }
    guard.push(Arc::clone(&table));
    Ok(table)
}
