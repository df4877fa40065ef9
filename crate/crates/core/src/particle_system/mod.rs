//! Monte Carlo simulation of the two-type particle system: a Poisson field
//! of initial pairs with intensity `|x|^{-γ1}|y|^{-γ2} dx dy`, each
//! coordinate moving as an independent symmetric stable process, and the
//! rescaled fluctuation field of its occupation time.
//!
//! Only particles that can reach the test functions matter. Initial points
//! are drawn from a truncated box and, for Brownian axes, thinned with an
//! upper bound on the probability of reaching the test function before the
//! horizon; kept particles are then started from the law conditioned on
//! that event, which leaves the law of the occupation field unchanged.
//! Brownian paths skip their excursions away from the test function
//! exactly, using the first passage law.

mod expectation;
mod intensity;
mod path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, WfbsError};
use crate::exec::{derive_seed, try_map_indexed, Execution};
use crate::params::ParticleParams;
use crate::special_functions::normal_pdf;

use expectation::{midpoint_mean, MeanRate};
use intensity::{gaussian_hit_prob, Envelope};
use path::{AxisPaths, Checkpoints};

pub use path::midpoint_occupation;

/// Test function of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// Normal density with unit integral.
    Gaussian { center: f64, width: f64 },
    /// `1_{[lo, hi]}`.
    Indicator { lo: f64, hi: f64 },
}

impl TestFunction {
    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        let f = Self::Gaussian { center, width };
        f.validate()?;
        Ok(f)
    }

    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        let f = Self::Indicator { lo, hi };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian { center, width } => {
                if !(center.is_finite() && width.is_finite() && width > 0.0) {
                    return Err(domain(format!("gaussian test function needs a finite center and width > 0, got ({center}, {width})")));
                }
            }
            Self::Indicator { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(domain(format!("indicator needs finite lo < hi, got [{lo}, {hi}]")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Gaussian { center, width } => normal_pdf((x - center) / width) / width,
            Self::Indicator { lo, hi } => {
                if x >= lo && x <= hi {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫ f`.
    pub fn integral(&self) -> f64 {
        match *self {
            Self::Gaussian { .. } => 1.0,
            Self::Indicator { lo, hi } => hi - lo,
        }
    }

    /// Interval outside of which `f` is treated as zero (8 widths for the
    /// gaussian).
    pub fn band(&self) -> (f64, f64) {
        match *self {
            Self::Gaussian { center, width } => (center - 8.0 * width, center + 8.0 * width),
            Self::Indicator { lo, hi } => (lo, hi),
        }
    }

    pub fn center(&self) -> f64 {
        let (lo, hi) = self.band();
        0.5 * (lo + hi)
    }

    /// Effective support radius `max |x|` over the band.
    pub fn support_radius(&self) -> f64 {
        let (lo, hi) = self.band();
        lo.abs().max(hi.abs())
    }
}

/// How initial points are turned into simulated paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PathMethod {
    /// Thinning plus excursion skipping on Brownian axes.
    #[default]
    Auto,
    /// Every initial point in the box, every path step simulated.
    FullPaths,
}

fn default_time_steps() -> usize {
    256
}
fn default_trunc_eps() -> f64 {
    1e-3
}
fn default_norming_scale() -> f64 {
    1.0
}

/// Parameters of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub pp: ParticleParams,
    pub phi: TestFunction,
    pub psi: TestFunction,
    #[serde(rename = "T")]
    pub t: f64,
    /// Points `(s, t)` at which the field is evaluated.
    pub eval_points: Vec<(f64, f64)>,
    /// Grid cells per unit of scaled time.
    #[serde(default = "default_time_steps")]
    pub time_steps: usize,
    /// Expected number of relevant particles lost to truncation.
    #[serde(default = "default_trunc_eps")]
    pub trunc_eps: f64,
    /// Multiplies the exponent of the norming `F_T`; anything but 1 is a
    /// deliberately wrong norming for negative controls.
    #[serde(default = "default_norming_scale")]
    pub norming_scale: f64,
    #[serde(default)]
    pub method: PathMethod,
}

impl ParticleConfig {
    /// Config with default discretization for the given points.
    pub fn new(pp: ParticleParams, phi: TestFunction, psi: TestFunction, t: f64, eval_points: Vec<(f64, f64)>) -> Result<Self> {
        let cfg = Self {
            pp,
            phi,
            psi,
            t,
            eval_points,
            time_steps: default_time_steps(),
            trunc_eps: default_trunc_eps(),
            norming_scale: default_norming_scale(),
            method: PathMethod::Auto,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WfbsError::InvalidConfig(m));
        // re-run the parameter checks for configs built field by field
        ParticleParams::new(self.pp.alpha, self.pp.gamma)?;
        self.phi.validate()?;
        self.psi.validate()?;
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad(format!("T must be positive and finite, got {}", self.t));
        }
        if self.time_steps < 64 {
            return bad(format!("time_steps must be at least 64, got {}", self.time_steps));
        }
        if !(self.trunc_eps > 0.0 && self.trunc_eps.is_finite()) {
            return bad(format!("trunc_eps must be positive, got {}", self.trunc_eps));
        }
        if !self.norming_scale.is_finite() {
            return bad("norming_scale must be finite".into());
        }
        if self.eval_points.is_empty() {
            return bad("eval_points is empty".into());
        }
        if self
            .eval_points
            .iter()
            .any(|(s, t)| !(s.is_finite() && t.is_finite() && *s >= 0.0 && *t >= 0.0))
        {
            return bad("eval_points must be finite and nonnegative".into());
        }
        Ok(())
    }

    pub fn test_function(&self, axis: usize) -> TestFunction {
        if axis == 1 {
            self.phi
        } else {
            self.psi
        }
    }

    /// Largest scaled horizon `T max s` (axis 1) or `T max t` (axis 2).
    pub fn horizon(&self, axis: usize) -> f64 {
        let m = self
            .eval_points
            .iter()
            .map(|&(s, t)| if axis == 1 { s } else { t })
            .fold(0.0, f64::max);
        self.t * m
    }

    /// Per-axis norming `T^{scale (1 - (1 + γ)/(2α))}`.
    pub fn axis_norming(&self, axis: usize) -> f64 {
        let (alpha, gamma) = (self.pp.alpha[axis - 1], self.pp.gamma[axis - 1]);
        self.t.powf(self.norming_scale * (1.0 - (1.0 + gamma) / (2.0 * alpha)))
    }

    /// `F_T`, the product of the axis normings.
    pub fn norming(&self) -> f64 {
        self.axis_norming(1) * self.axis_norming(2)
    }
}

/// Radius `R = r_supp + (2 T s_max / eps)^{1/α}` of the simulated box on one axis.
pub fn truncation_radius(cfg: &ParticleConfig, axis: usize) -> f64 {
    let alpha = cfg.pp.alpha[axis.clamp(1, 2) - 1];
    let f = cfg.test_function(axis);
    f.support_radius() + (2.0 * cfg.horizon(axis) / cfg.trunc_eps).powf(1.0 / alpha)
}

/// Poisson points on `[-R, R]` with intensity `|x|^{-γ} dx`.
pub fn sample_initial_points<R: Rng + ?Sized>(gamma: f64, r: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(gamma < 1.0) {
        return Err(domain(format!("intensity exponent must be below 1, got {gamma}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(domain(format!("radius must be positive and finite, got {r}")));
    }
    let e = 1.0 - gamma;
    let mass = 2.0 * r.powf(e) / e;
    let n = poisson(mass, rng);
    Ok((0..n)
        .map(|_| {
            let x = r * rng.random::<f64>().powf(1.0 / e);
            if rng.random::<bool>() {
                x
            } else {
                -x
            }
        })
        .collect())
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Distinct sorted times of one axis and, per eval point, the index into them.
fn axis_times(cfg: &ParticleConfig, axis: usize) -> (Vec<f64>, Vec<usize>) {
    let raw: Vec<f64> = cfg
        .eval_points
        .iter()
        .map(|&(s, t)| cfg.t * if axis == 1 { s } else { t })
        .collect();
    let mut times = raw.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let index = raw
        .iter()
        .map(|x| times.partition_point(|y| y < x))
        .collect();
    (times, index)
}

#[derive(Debug, Clone)]
struct Axis {
    paths: AxisPaths,
    envelope: Envelope,
    // thinning needs the exact hitting probability of a kept point
    thinned: bool,
    index: Vec<usize>,
    mean: Vec<f64>,
}

impl Axis {
    fn build(cfg: &ParticleConfig, axis: usize) -> Result<Self> {
        let (alpha, gamma) = (cfg.pp.alpha[axis - 1], cfg.pp.gamma[axis - 1]);
        let f = cfg.test_function(axis);
        let r = truncation_radius(cfg, axis);
        let dt = 1.0 / cfg.time_steps as f64;
        let (times, index) = axis_times(cfg, axis);
        let cp = Checkpoints::new(times, dt);
        let auto = cfg.method == PathMethod::Auto;
        let thinned = auto && alpha == 2.0;
        let paths = AxisPaths::new(alpha, f, dt, cp, auto, thinned);
        let envelope = if thinned {
            let (lo, hi) = paths.band();
            Envelope::gaussian(gamma, r, lo, hi, paths.horizon())
        } else {
            Envelope::flat(gamma, r)
        };
        let rate = MeanRate::new(alpha, gamma, f, r)?;
        let mean = midpoint_mean(&rate, dt, &paths.cp.full, &paths.cp.frac, paths.cp.cells)?;
        Ok(Self {
            paths,
            envelope,
            thinned,
            index,
            mean,
        })
    }

    fn accept_prob(&self, x: f64) -> f64 {
        if self.thinned {
            gaussian_hit_prob(self.paths.distance(x), self.paths.horizon())
        } else {
            1.0
        }
    }
}

/// A config prepared for repeated replications: envelopes, checkpoints and
/// the exact centering are computed once.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    cfg: ParticleConfig,
    axes: [Axis; 2],
    norming: f64,
}

impl ParticleSystem {
    pub fn new(cfg: &ParticleConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            axes: [Axis::build(cfg, 1)?, Axis::build(cfg, 2)?],
            norming: cfg.norming(),
        })
    }

    pub fn config(&self) -> &ParticleConfig {
        &self.cfg
    }

    /// Mean of the truncated occupation `E⟨L_{Ts,Tt}, φ⊗ψ⟩` at each eval
    /// point, as the midpoint sum the simulation realizes.
    pub fn centering(&self) -> Vec<f64> {
        let [a1, a2] = &self.axes;
        a1.index
            .iter()
            .zip(&a2.index)
            .map(|(&i, &j)| a1.mean[i] * a2.mean[j])
            .collect()
    }

    /// Expected number of initial pairs simulated per replication.
    pub fn expected_pairs(&self) -> f64 {
        self.axes[0].envelope.total() * self.axes[1].envelope.total()
    }

    /// Raw occupation `⟨L_{Ts,Tt}, φ⊗ψ⟩` at each eval point.
    pub fn occupation(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [a1, a2] = &self.axes;
        let (n1, n2) = (a1.paths.cp.len(), a2.paths.cp.len());
        let mut grid = vec![0.0; n1 * n2];
        let mut o1 = vec![0.0; n1];
        let mut o2 = vec![0.0; n2];
        let pairs = poisson(self.expected_pairs(), &mut rng);
        for _ in 0..pairs {
            let (x1, e1) = a1.envelope.sample(&mut rng);
            let (x2, e2) = a2.envelope.sample(&mut rng);
            let q = a1.accept_prob(x1) * a2.accept_prob(x2) / (e1 * e2);
            if q < 1.0 && rng.random::<f64>() >= q {
                continue;
            }
            self.accumulate_pair(x1, x2, true, &mut rng, &mut o1, &mut o2, &mut grid);
        }
        self.at_eval_points(&grid)
    }

    // adds the pair's occupation products at every checkpoint pair to `grid`
    #[allow(clippy::too_many_arguments)]
    fn accumulate_pair<R: Rng + ?Sized>(
        &self,
        x1: f64,
        x2: f64,
        conditioned: bool,
        rng: &mut R,
        o1: &mut [f64],
        o2: &mut [f64],
        grid: &mut [f64],
    ) {
        let [a1, a2] = &self.axes;
        let n2 = o2.len();
        a1.paths.occupation_with(x1, conditioned, rng, o1);
        if o1.iter().all(|v| *v == 0.0) {
            return;
        }
        a2.paths.occupation_with(x2, conditioned, rng, o2);
        for (i, u) in o1.iter().enumerate() {
            if *u != 0.0 {
                for (g, v) in grid[i * n2..(i + 1) * n2].iter_mut().zip(o2.iter()) {
                    *g += u * v;
                }
            }
        }
    }

    fn at_eval_points(&self, grid: &[f64]) -> Vec<f64> {
        let [a1, a2] = &self.axes;
        let n2 = a2.paths.cp.len();
        a1.index
            .iter()
            .zip(&a2.index)
            .map(|(&i, &j)| grid[i * n2 + j])
            .collect()
    }

    /// `∫_0^{Ts}∫_0^{Tt} φ(ξ_u) ψ(ζ_v) dv du` at each eval point for a single
    /// pair started at `(x1, x2)`, with unconditioned paths.
    pub fn pair_occupation<R: Rng + ?Sized>(&self, x1: f64, x2: f64, rng: &mut R) -> Vec<f64> {
        let [a1, a2] = &self.axes;
        let (n1, n2) = (a1.paths.cp.len(), a2.paths.cp.len());
        let mut grid = vec![0.0; n1 * n2];
        let (mut o1, mut o2) = (vec![0.0; n1], vec![0.0; n2]);
        self.accumulate_pair(x1, x2, false, rng, &mut o1, &mut o2, &mut grid);
        self.at_eval_points(&grid)
    }

    /// `X_T` at each eval point; exactly 0 where `s = 0` or `t = 0`.
    pub fn replication(&self, seed: u64) -> Vec<f64> {
        let occ = self.occupation(seed);
        occ.iter()
            .zip(self.centering())
            .zip(&self.cfg.eval_points)
            .map(|((l, m), &(s, t))| {
                if s == 0.0 || t == 0.0 {
                    0.0
                } else {
                    (l - m) / self.norming
                }
            })
            .collect()
    }

    /// Replications `start..start + n` of the seed schedule of `master_seed`.
    pub fn ensemble_range(&self, master_seed: u64, start: usize, n: usize, exec: Execution) -> OccupationEnsemble {
        let seeds: Vec<u64> = (start..start + n).map(|i| derive_seed(master_seed, i as u64)).collect();
        let xt_values = try_map_indexed(exec, 0..n, |i| Ok(self.replication(seeds[i])))
            .expect("replications are infallible");
        OccupationEnsemble {
            config: self.cfg.clone(),
            replications: n,
            xt_values,
            seeds,
        }
    }
}

/// Replicated `X_T` values, one row per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationEnsemble {
    pub config: ParticleConfig,
    pub replications: usize,
    pub xt_values: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
}

impl OccupationEnsemble {
    /// Column `j` (one eval point across replications).
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.xt_values.iter().map(|row| row[j]).collect()
    }

    /// Appends the replications of `other`, which must share the config.
    pub fn extend(&mut self, other: OccupationEnsemble) -> Result<()> {
        if other.config != self.config {
            return Err(WfbsError::InvalidConfig("ensembles with different configs".into()));
        }
        self.replications += other.replications;
        self.xt_values.extend(other.xt_values);
        self.seeds.extend(other.seeds);
        Ok(())
    }
}

/// `E⟨L_{Ts,Tt}, φ⊗ψ⟩` under the intensity truncated to `[-R1,R1]×[-R2,R2]`
/// (either radius may be infinite).
pub fn expected_occupation(cfg: &ParticleConfig, s: f64, t: f64, r1: f64, r2: f64) -> Result<f64> {
    cfg.validate()?;
    let mut out = 1.0;
    for (axis, u, r) in [(1, s, r1), (2, t, r2)] {
        let (alpha, gamma) = (cfg.pp.alpha[axis - 1], cfg.pp.gamma[axis - 1]);
        let f = cfg.test_function(axis);
        let horizon = cfg.t * u;
        if horizon == 0.0 {
            return Ok(0.0);
        }
        if gamma == 0.0 && r.is_infinite() {
            out *= horizon * f.integral();
            continue;
        }
        if r.is_infinite() {
            return Err(domain("an infinite radius needs gamma = 0 on that axis"));
        }
        let rate = MeanRate::new(alpha, gamma, f, r)?;
        let mut err = None;
        let v = crate::quadrature::integrate_power_weighted(
            |w| match rate.at(w) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            horizon,
            0.0,
            &[],
            crate::quadrature::Tolerance::new(1e-12, 1e-9),
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        out *= v.value;
    }
    Ok(out)
}

/// `X_T` at the eval points for one replication seeded with `seed`.
pub fn run_replication(cfg: &ParticleConfig, seed: u64) -> Result<Vec<f64>> {
    Ok(ParticleSystem::new(cfg)?.replication(seed))
}

/// `replications` independent replications; replication `i` uses
/// `derive_seed(master_seed, i)`.
pub fn run_ensemble(cfg: &ParticleConfig, replications: usize, master_seed: u64) -> Result<OccupationEnsemble> {
    run_ensemble_with(cfg, replications, master_seed, Execution::default())
}

pub fn run_ensemble_with(
    cfg: &ParticleConfig,
    replications: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<OccupationEnsemble> {
    if replications < 2 {
        return Err(WfbsError::TooFewReplications {
            got: replications,
            need: 2,
        });
    }
    Ok(ParticleSystem::new(cfg)?.ensemble_range(master_seed, 0, replications, exec))
}
