//! Occupation integrals `∫_0^S f(ξ_u) du` of single particle paths, as
//! midpoint sums on a uniform grid, for several horizons `S` at once.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::TestFunction;
use crate::special_functions::StableIncrements;

/// Horizons of one axis expressed on the cell grid: `S_j = (full_j + frac_j) dt`.
#[derive(Debug, Clone)]
pub(crate) struct Checkpoints {
    pub(crate) times: Vec<f64>,
    pub(crate) full: Vec<usize>,
    pub(crate) frac: Vec<f64>,
    pub(crate) cells: usize,
}

impl Checkpoints {
    /// `times` must be sorted, distinct and nonnegative.
    pub(crate) fn new(times: Vec<f64>, dt: f64) -> Self {
        let mut full = Vec::with_capacity(times.len());
        let mut frac = Vec::with_capacity(times.len());
        for &s in &times {
            let u = s / dt;
            let mut k = u.floor();
            let mut f = u - k;
            // snap horizons that sit on a cell boundary up to rounding
            if 1.0 - f < 1e-9 {
                k += 1.0;
                f = 0.0;
            } else if f < 1e-9 {
                f = 0.0;
            }
            full.push(k as usize);
            frac.push(f);
        }
        let cells = full
            .iter()
            .zip(&frac)
            .map(|(k, f)| if *f > 0.0 { k + 1 } else { *k })
            .max()
            .unwrap_or(0);
        Self {
            times,
            full,
            frac,
            cells,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.times.len()
    }
}

// Streams cell values in increasing cell order into per-checkpoint sums.
struct Recorder<'a> {
    cp: &'a Checkpoints,
    out: &'a mut [f64],
    j: usize,
    sum: f64,
}

impl<'a> Recorder<'a> {
    fn new(cp: &'a Checkpoints, out: &'a mut [f64]) -> Self {
        out.iter_mut().for_each(|o| *o = 0.0);
        Self { cp, out, j: 0, sum: 0.0 }
    }

    fn push(&mut self, k: usize, v: f64) {
        let n = self.cp.len();
        while self.j < n && self.cp.full[self.j] < k {
            self.out[self.j] = self.sum;
            self.j += 1;
        }
        while self.j < n && self.cp.full[self.j] == k {
            self.out[self.j] = self.sum + self.cp.frac[self.j] * v;
            self.j += 1;
        }
        self.sum += v;
    }

    fn finish(mut self, dt: f64) {
        while self.j < self.cp.len() {
            self.out[self.j] = self.sum;
            self.j += 1;
        }
        self.out.iter_mut().for_each(|o| *o *= dt);
    }
}

/// `|Z|` for standard normal `Z` conditioned on `|Z| > c`.
pub(crate) fn normal_tail_abs<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    if c < 0.5 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z.abs() > c {
                return z.abs();
            }
        }
    }
    // Robert (1995): translated exponential proposal
    let lam = 0.5 * (c + (c * c + 4.0).sqrt());
    loop {
        let e: f64 = Exp1.sample(rng);
        let z = c + e / lam;
        if rng.random::<f64>() <= (-0.5 * (z - lam) * (z - lam)).exp() {
            return z;
        }
    }
}

/// Simulation of one coordinate of the particle system.
#[derive(Debug, Clone)]
pub(crate) struct AxisPaths {
    pub(crate) f: TestFunction,
    lo: f64,
    hi: f64,
    dt: f64,
    pub(crate) cp: Checkpoints,
    step: StableIncrements,
    half_step: StableIncrements,
    // alpha = 2: skip excursions away from the band exactly
    skip_excursions: bool,
    // start from the path conditioned on entering the band by the horizon
    conditioned: bool,
}

impl AxisPaths {
    pub(crate) fn new(
        alpha: f64,
        f: TestFunction,
        dt: f64,
        cp: Checkpoints,
        skip_excursions: bool,
        conditioned: bool,
    ) -> Self {
        let (lo, hi) = f.band();
        Self {
            f,
            lo,
            hi,
            dt,
            cp,
            step: StableIncrements::new(alpha, dt).expect("validated alpha"),
            half_step: StableIncrements::new(alpha, 0.5 * dt).expect("validated alpha"),
            skip_excursions: skip_excursions && alpha == 2.0,
            conditioned: conditioned && skip_excursions && alpha == 2.0,
        }
    }

    /// Last simulated time that can matter (the hitting horizon).
    pub(crate) fn horizon(&self) -> f64 {
        self.cp.cells as f64 * self.dt
    }

    pub(crate) fn band(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub(crate) fn distance(&self, x: f64) -> f64 {
        (self.lo - x).max(x - self.hi).max(0.0)
    }

    fn value(&self, y: f64) -> Option<f64> {
        if y >= self.lo && y <= self.hi {
            Some(self.f.eval(y))
        } else {
            None
        }
    }

    /// Occupation integrals of a particle started at `x`, written to `out`
    /// (one entry per checkpoint). With `conditioned` the start is the path
    /// conditioned on reaching the band, where the axis supports it.
    pub(crate) fn occupation_with<R: Rng + ?Sized>(&self, x: f64, conditioned: bool, rng: &mut R, out: &mut [f64]) {
        let mut rec = Recorder::new(&self.cp, out);
        if self.skip_excursions {
            self.run_skipping(x, conditioned && self.conditioned, rng, &mut rec);
        } else {
            self.run_full(x, rng, &mut rec);
        }
        rec.finish(self.dt);
    }

    fn run_full<R: Rng + ?Sized>(&self, x: f64, rng: &mut R, rec: &mut Recorder) {
        let n = self.cp.cells;
        if n == 0 {
            return;
        }
        let mut y = x + self.half_step.sample(rng);
        for k in 0..n {
            if let Some(v) = self.value(y) {
                rec.push(k, v);
            }
            y += self.step.sample(rng);
        }
    }

    fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt
    }

    // first midpoint index strictly after time t
    fn next_midpoint(&self, t: f64) -> usize {
        let k = (t / self.dt - 0.5).ceil().max(0.0) as usize;
        if self.midpoint(k) <= t {
            k + 1
        } else {
            k
        }
    }

    fn nearest_edge(&self, y: f64) -> f64 {
        if y < self.lo {
            self.lo
        } else {
            self.hi
        }
    }

    fn run_skipping<R: Rng + ?Sized>(&self, x: f64, conditioned: bool, rng: &mut R, rec: &mut Recorder) {
        let n = self.cp.cells;
        if n == 0 {
            return;
        }
        let last = self.midpoint(n - 1);
        let sd_step = (2.0 * self.dt).sqrt();
        // time and position at which the path is known to sit in the band
        let d0 = self.distance(x);
        let (mut tau, mut pos) = if d0 == 0.0 {
            (0.0, x)
        } else {
            let z = if conditioned {
                normal_tail_abs(d0 / (2.0 * self.horizon()).sqrt(), rng)
            } else {
                let z: f64 = StandardNormal.sample(rng);
                z.abs()
            };
            (d0 * d0 / (2.0 * z * z), self.nearest_edge(x))
        };
        loop {
            if tau >= last {
                return;
            }
            let mut k = self.next_midpoint(tau);
            let z: f64 = StandardNormal.sample(rng);
            let mut y = pos + (2.0 * (self.midpoint(k) - tau)).sqrt() * z;
            // walk inside the band cell by cell
            loop {
                match self.value(y) {
                    Some(v) => {
                        rec.push(k, v);
                        k += 1;
                        if k >= n {
                            return;
                        }
                        let z: f64 = StandardNormal.sample(rng);
                        y += sd_step * z;
                    }
                    None => break,
                }
            }
            // outside at midpoint k: jump to the next entrance
            let d = self.distance(y);
            let z: f64 = StandardNormal.sample(rng);
            tau = self.midpoint(k) + d * d / (2.0 * z * z);
            pos = self.nearest_edge(y);
        }
    }
}

/// `∫_0^{S_j} f(y(u)) du` by the midpoint rule from path values at the
/// midpoints `(k + 1/2) dt`, for checking the streamed sums.
pub fn midpoint_occupation(f: &TestFunction, midpoints: &[f64], dt: f64, horizons: &[f64]) -> Vec<f64> {
    let (lo, hi) = f.band();
    horizons
        .iter()
        .map(|&s| {
            let u = s / dt;
            let full = u.floor() as usize;
            let frac = u - full as f64;
            let val = |y: f64| if y >= lo && y <= hi { f.eval(y) } else { 0.0 };
            let mut acc: f64 = midpoints.iter().take(full).map(|&y| val(y)).sum();
            if frac > 0.0 && full < midpoints.len() {
                acc += frac * val(midpoints[full]);
            }
            acc * dt
        })
        .collect()
}
