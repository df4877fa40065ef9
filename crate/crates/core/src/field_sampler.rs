//! Exact Gaussian simulation of the sheet on rectangular grids through the
//! Kronecker factorization of its covariance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::covariance::axis_cov;
use crate::error::{domain, Result, WfbsError};
use crate::exec::{try_map_indexed, unit_rng, Execution};
use crate::params::{AxisParams, WfbsParams};

/// Jitter levels tried by [`cholesky_psd`], as multiples of `trace / n`.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Axis points of a rectangular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    s_points: Vec<f64>,
    t_points: Vec<f64>,
}

impl GridSpec {
    pub fn new(s_points: Vec<f64>, t_points: Vec<f64>) -> Result<Self> {
        for (name, pts) in [("s", &s_points), ("t", &t_points)] {
            if pts.is_empty() {
                return Err(domain(format!("{name} axis of the grid is empty")));
            }
            if pts.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(domain(format!("{name} axis points must be finite and nonnegative")));
            }
            if pts.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(domain(format!("{name} axis points must be strictly ascending")));
            }
        }
        Ok(Self { s_points, t_points })
    }

    /// `count` equally spaced points from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        match count {
            0 => vec![],
            1 => vec![lo],
            _ => (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    }

    /// Square dyadic grid with `2^power + 1` points per axis on `[lo, hi]`.
    pub fn dyadic(lo: f64, hi: f64, power: u32) -> Result<Self> {
        let pts = Self::linspace(lo, hi, (1usize << power) + 1);
        Self::new(pts.clone(), pts)
    }

    pub fn s_points(&self) -> &[f64] {
        &self.s_points
    }

    pub fn t_points(&self) -> &[f64] {
        &self.t_points
    }
}

/// One realization of the sheet on a grid, `values[(i, j)] = W(s_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub values: DMatrix<f64>,
    pub seed: u64,
}

/// Covariance matrix `C(p_i, p_j)` of one axis.
pub fn build_axis_cov(a: f64, b: f64, pts: &[f64]) -> Result<DMatrix<f64>> {
    let axis = AxisParams::new(a, b, 1)?;
    if pts.iter().any(|x| !(*x >= 0.0)) {
        return Err(domain("axis points must be nonnegative"));
    }
    Ok(axis_cov_matrix(axis, pts))
}

fn axis_cov_matrix(axis: AxisParams, pts: &[f64]) -> DMatrix<f64> {
    let n = pts.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let c = axis_cov(axis, pts[i], pts[j]);
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    m
}

/// Lower Cholesky factor together with the jitter it needed.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub l: DMatrix<f64>,
    /// Diagonal shift actually added, `level * trace / n`.
    pub jitter: f64,
}

/// Cholesky factor of a symmetric matrix, retrying with the diagonal shifts
/// of [`JITTER_LADDER`].
pub fn cholesky_psd(m: &DMatrix<f64>) -> Result<CholeskyFactor> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(domain("cholesky needs a square matrix"));
    }
    if n == 0 {
        return Ok(CholeskyFactor {
            l: DMatrix::zeros(0, 0),
            jitter: 0.0,
        });
    }
    let mean_diag = m.trace() / n as f64;
    for level in JITTER_LADDER {
        let jitter = level * mean_diag;
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(ch) = shifted.cholesky() {
            return Ok(CholeskyFactor {
                l: ch.unpack(),
                jitter,
            });
        }
    }
    Err(WfbsError::NotPsd {
        size: n,
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * mean_diag,
    })
}

/// Factorized sampler for one parameter set and grid.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    grid: GridSpec,
    // factors over the strictly positive points; zeros are re-inserted
    l1: DMatrix<f64>,
    l2: DMatrix<f64>,
    skip1: usize,
    skip2: usize,
    jitter: [f64; 2],
}

impl FieldSampler {
    pub fn new(p: &WfbsParams, grid: GridSpec) -> Result<Self> {
        let skip1 = grid.s_points.iter().take_while(|x| **x == 0.0).count();
        let skip2 = grid.t_points.iter().take_while(|x| **x == 0.0).count();
        let f1 = cholesky_psd(&axis_cov_matrix(p.axis(0), &grid.s_points[skip1..]))?;
        let f2 = cholesky_psd(&axis_cov_matrix(p.axis(1), &grid.t_points[skip2..]))?;
        Ok(Self {
            grid,
            l1: f1.l,
            l2: f2.l,
            skip1,
            skip2,
            jitter: [f1.jitter, f2.jitter],
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Diagonal shifts used by the two axis factorizations.
    pub fn jitter(&self) -> [f64; 2] {
        self.jitter
    }

    /// One sample from a stream seeded with `seed`.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> FieldSample {
        let (m, n) = (self.l1.nrows(), self.l2.nrows());
        let z = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let inner = &self.l1 * z * self.l2.transpose();
        let mut values = DMatrix::zeros(self.grid.s_points.len(), self.grid.t_points.len());
        values
            .view_mut((self.skip1, self.skip2), (m, n))
            .copy_from(&inner);
        FieldSample { values, seed }
    }

    /// Samples `start..start + n` of the stream derived from `master`.
    pub fn sample_range(
        &self,
        master: u64,
        start: usize,
        n: usize,
        exec: Execution,
    ) -> Vec<FieldSample> {
        try_map_indexed(exec, start..start + n, |i| {
            let mut rng = unit_rng(master, i as u64);
            Ok(self.sample_with(&mut rng, master))
        })
        .expect("sampling is infallible")
    }
}

/// `n` independent samples of the sheet on `g`, deterministic given `seed`.
pub fn sample_field(p: &WfbsParams, g: &GridSpec, n: usize, seed: u64) -> Result<Vec<FieldSample>> {
    sample_field_with(p, g, n, seed, Execution::default())
}

pub fn sample_field_with(
    p: &WfbsParams,
    g: &GridSpec,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<FieldSample>> {
    if n == 0 {
        return Err(domain("need at least one sample"));
    }
    let sampler = FieldSampler::new(p, g.clone())?;
    Ok(sampler.sample_range(seed, 0, n, exec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_wfbs_params;

    #[test]
    fn cholesky_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(cholesky_psd(&id).unwrap().l, id);
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 4.0]);
        let l = cholesky_psd(&m).unwrap().l;
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 3f64.sqrt()]);
        assert!((l - expect).abs().max() < 1e-15);
        let r1 = DMatrix::from_element(2, 2, 1.0);
        let f = cholesky_psd(&r1).unwrap();
        assert!(f.jitter > 0.0);
        assert!((&f.l * f.l.transpose() - r1).abs().max() < 1e-8);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky_psd(&bad), Err(WfbsError::NotPsd { .. })));
    }

    #[test]
    fn axis_matrix_examples() {
        assert_eq!(build_axis_cov(0.0, 0.0, &[1.0]).unwrap()[(0, 0)], 2.0);
        let m = build_axis_cov(0.3, 0.2, &[0.0, 1.0]).unwrap();
        assert_eq!(m.row(0).iter().copied().fold(0.0, f64::max), 0.0);
        assert_eq!(m.column(0).iter().copied().fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn zero_rows_and_determinism() {
        let p = validate_wfbs_params(-0.25, 0.5, 0.0, 0.25).unwrap();
        let g = GridSpec::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0]).unwrap();
        let a = sample_field(&p, &g, 3, 7).unwrap();
        let b = sample_field_with(&p, &g, 3, 7, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        for s in &a {
            assert!(s.values.row(0).iter().all(|v| *v == 0.0));
            assert!(s.values.column(0).iter().all(|v| *v == 0.0));
            assert!(s.values[(2, 1)] != 0.0);
        }
        assert_ne!(a[0].values, a[1].values);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![1.0, 1.0], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![-1.0], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![], vec![1.0]).is_err());
        assert_eq!(GridSpec::dyadic(0.0, 1.0, 3).unwrap().s_points().len(), 9);
    }
}
