//! Numerical kernels shared by the covariance engine, the particle system and
//! the pre-limit oracle.

mod stable;
mod table;

pub use stable::{
    stable_cdf, stable_density, stable_density_at_zero, stable_density_tol, stable_increment_sample,
    weighted_density_integral, weighted_density_integral_tol, StableIncrements, StableLaw,
    DENSITY_TOL, WEIGHTED_INTEGRAL_TOL,
};
pub use table::{stable_table, StableTable};

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

use crate::error::{domain, Result};

pub use statrs::function::beta::ln_beta;
pub use statrs::function::gamma::{gamma, ln_gamma};

/// Regularized incomplete Beta function `I_x(p, q)`.
pub fn reg_inc_beta(x: f64, p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(p > 0.0) || !(q > 0.0) {
        return Err(domain(format!("I_x(p,q) needs x in [0,1], p,q > 0; got x={x}, p={p}, q={q}")));
    }
    Ok(inc_beta_pair(x, 1.0 - x, p, q).0)
}

/// `(I_x(p,q), 1 - I_x(p,q))`, where `xc = 1 - x` is supplied by the caller so
/// that whichever of the two is small keeps full relative precision.
pub(crate) fn inc_beta_pair(x: f64, xc: f64, p: f64, q: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if xc <= 0.0 {
        return (1.0, 0.0);
    }
    if x <= xc {
        let i = beta_reg(p, q, x);
        (i, 1.0 - i)
    } else {
        let ic = beta_reg(q, p, xc);
        (1.0 - ic, ic)
    }
}

/// Euler Beta function `B(p, q)`.
pub fn beta_fn(p: f64, q: f64) -> f64 {
    ln_beta(p, q).exp()
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}
