//! Parameter domains of the sheet and of the particle system, and the maps
//! between them.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WfbsError};

/// Parameters `(a, b)` of one weighted fractional Brownian motion axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisParams {
    pub a: f64,
    pub b: f64,
}

impl AxisParams {
    /// Checks `a > -1`, `-1 < b <= 1` and `|b| <= 1 + a`. Endpoints are
    /// compared exactly.
    pub fn new(a: f64, b: f64, index: usize) -> Result<Self> {
        let fail = |constraint: String| WfbsError::OutOfRange { index, constraint };
        if !a.is_finite() || !b.is_finite() {
            return Err(fail(format!("a{index}, b{index} must be finite")));
        }
        if a <= -1.0 {
            return Err(fail(format!("a{index} = {a} violates a > -1")));
        }
        if b <= -1.0 || b > 1.0 {
            return Err(fail(format!("b{index} = {b} violates -1 < b <= 1")));
        }
        if b.abs() > 1.0 + a {
            return Err(fail(format!(
                "|b{index}| = {} exceeds 1 + a{index} = {}",
                b.abs(),
                1.0 + a
            )));
        }
        Ok(Self { a, b })
    }

    /// Self-similarity exponent `1 + a + b` of the axis covariance.
    pub fn scaling_exponent(&self) -> f64 {
        1.0 + self.a + self.b
    }
}

/// The four sheet parameters `(a1, b1, a2, b2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWfbsParams", into = "RawWfbsParams")]
pub struct WfbsParams {
    axes: [AxisParams; 2],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWfbsParams {
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
}

impl TryFrom<RawWfbsParams> for WfbsParams {
    type Error = WfbsError;
    fn try_from(r: RawWfbsParams) -> Result<Self> {
        validate_wfbs_params(r.a1, r.b1, r.a2, r.b2)
    }
}

impl From<WfbsParams> for RawWfbsParams {
    fn from(p: WfbsParams) -> Self {
        Self {
            a1: p.a1(),
            b1: p.b1(),
            a2: p.a2(),
            b2: p.b2(),
        }
    }
}

impl WfbsParams {
    pub fn axis(&self, i: usize) -> AxisParams {
        self.axes[i]
    }
    pub fn a1(&self) -> f64 {
        self.axes[0].a
    }
    pub fn b1(&self) -> f64 {
        self.axes[0].b
    }
    pub fn a2(&self) -> f64 {
        self.axes[1].a
    }
    pub fn b2(&self) -> f64 {
        self.axes[1].b
    }
}

/// Validates the four sheet parameters; the error names the violated inequality.
pub fn validate_wfbs_params(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<WfbsParams> {
    Ok(WfbsParams {
        axes: [AxisParams::new(a1, b1, 1)?, AxisParams::new(a2, b2, 2)?],
    })
}

/// Stability indices and intensity exponents of the two particle types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParticleParams", into = "RawParticleParams")]
pub struct ParticleParams {
    pub alpha: [f64; 2],
    pub gamma: [f64; 2],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParticleParams {
    alpha: [f64; 2],
    gamma: [f64; 2],
}

impl TryFrom<RawParticleParams> for ParticleParams {
    type Error = WfbsError;
    fn try_from(r: RawParticleParams) -> Result<Self> {
        ParticleParams::new(r.alpha, r.gamma)
    }
}

impl From<ParticleParams> for RawParticleParams {
    fn from(p: ParticleParams) -> Self {
        Self {
            alpha: p.alpha,
            gamma: p.gamma,
        }
    }
}

impl ParticleParams {
    /// Requires `1 < alpha <= 2`, `gamma < 1`, and `|gamma| < alpha` whenever
    /// `gamma < 0` and `alpha < 2`.
    pub fn new(alpha: [f64; 2], gamma: [f64; 2]) -> Result<Self> {
        for i in 0..2 {
            let index = i + 1;
            let (al, ga) = (alpha[i], gamma[i]);
            let fail = |constraint: String| WfbsError::OutOfRange { index, constraint };
            if !(al > 1.0 && al <= 2.0) {
                return Err(fail(format!("alpha{index} = {al} violates 1 < alpha <= 2")));
            }
            if !(ga < 1.0) || !ga.is_finite() {
                return Err(fail(format!("gamma{index} = {ga} violates gamma < 1")));
            }
            if ga < 0.0 && al < 2.0 && ga.abs() >= al {
                return Err(fail(format!(
                    "gamma{index} = {ga} needs |gamma| < alpha = {al} for a finite mean"
                )));
            }
        }
        Ok(Self { alpha, gamma })
    }

    /// Both axes with the same `(alpha, gamma)`.
    pub fn symmetric(alpha: f64, gamma: f64) -> Result<Self> {
        Self::new([alpha, alpha], [gamma, gamma])
    }
}

/// Sheet parameters reached by the occupation-time limit:
/// `a = -gamma/alpha`, `b = 1 - 1/alpha` per axis.
pub fn params_from_particle(p: &ParticleParams) -> Result<WfbsParams> {
    let a = |i: usize| -p.gamma[i] / p.alpha[i];
    let b = |i: usize| 1.0 - 1.0 / p.alpha[i];
    validate_wfbs_params(a(0), b(0), a(1), b(1))
}

/// Hurst index `1 - 1/(2 alpha)` of the fractional Brownian sheet limit.
pub fn hurst_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(WfbsError::OutOfRange {
            index: 0,
            constraint: format!("alpha = {alpha} violates 1 < alpha <= 2"),
        });
    }
    Ok(1.0 - 0.5 / alpha)
}

/// Hölder-bound exponents `delta_i` of the rectangle-increment variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderExponents {
    pub delta1: f64,
    pub delta2: f64,
}

impl HolderExponents {
    pub fn get(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.delta1
        } else {
            self.delta2
        }
    }
}

/// Whether the axis uses the `1 + a + b` branch (`a < 0` and `1 + a + b > 0`).
pub fn uses_weighted_branch(axis: AxisParams) -> bool {
    axis.a < 0.0 && 1.0 + axis.a + axis.b > 0.0
}

pub fn holder_exponent(axis: AxisParams) -> f64 {
    if uses_weighted_branch(axis) {
        1.0 + axis.a + axis.b
    } else {
        1.0 + axis.b
    }
}

pub fn holder_exponents(p: &WfbsParams) -> HolderExponents {
    HolderExponents {
        delta1: holder_exponent(p.axis(0)),
        delta2: holder_exponent(p.axis(1)),
    }
}
