//! The power-law intensity `|x|^{-gamma} dx` and the envelope used to thin
//! initial points down to those whose path can reach the test function.

use rand::Rng;
use statrs::function::erf::erfc;

/// `F(x) = sign(x)|x|^{1-gamma}/(1-gamma)`, an antiderivative of `|x|^{-gamma}`.
pub(crate) fn mass_cdf(gamma: f64, x: f64) -> f64 {
    let e = 1.0 - gamma;
    x.signum() * x.abs().powf(e) / e
}

pub(crate) fn mass_cdf_inv(gamma: f64, y: f64) -> f64 {
    let e = 1.0 - gamma;
    y.signum() * (y.abs() * e).powf(1.0 / e)
}

/// Point drawn from `|x|^{-gamma} dx` restricted to `[x0, x1]`.
pub(crate) fn sample_in<R: Rng + ?Sized>(gamma: f64, x0: f64, x1: f64, rng: &mut R) -> f64 {
    if gamma == 0.0 {
        return x0 + (x1 - x0) * rng.random::<f64>();
    }
    let (f0, f1) = (mass_cdf(gamma, x0), mass_cdf(gamma, x1));
    mass_cdf_inv(gamma, f0 + (f1 - f0) * rng.random::<f64>()).clamp(x0, x1)
}

/// Probability that a path with variance `2t` started at distance `d` from
/// an interval enters it before `horizon`.
pub(crate) fn gaussian_hit_prob(d: f64, horizon: f64) -> f64 {
    if d <= 0.0 {
        1.0
    } else if horizon <= 0.0 {
        0.0
    } else {
        erfc(d / (2.0 * horizon.sqrt()))
    }
}

#[derive(Debug, Clone, Copy)]
struct Bin {
    x0: f64,
    x1: f64,
    env: f64,
}

/// Piecewise-constant upper bound `env(x) >= P(hit | x)` over `[-r, r]`,
/// with the intensity mass of every bin.
#[derive(Debug, Clone)]
pub(crate) struct Envelope {
    gamma: f64,
    bins: Vec<Bin>,
    cum: Vec<f64>,
}

impl Envelope {
    /// Every point kept (no hitting bound available).
    pub(crate) fn flat(gamma: f64, r: f64) -> Self {
        Self::from_bins(gamma, vec![Bin { x0: -r, x1: r, env: 1.0 }])
    }

    /// Gaussian hitting bound for the band `[lo, hi]` and the given horizon.
    pub(crate) fn gaussian(gamma: f64, r: f64, lo: f64, hi: f64, horizon: f64) -> Self {
        let sq = horizon.sqrt().max(1e-12);
        let mut ds = vec![0.0];
        let mut d = 0.0;
        // fine steps through the bulk of the hitting probability, then geometric
        while d < 6.0 * sq {
            d += 0.05 * sq;
            ds.push(d);
        }
        while d < 40.0 * sq && d < 2.0 * r + (hi - lo) {
            d *= 1.25;
            ds.push(d);
        }
        let mut bins = vec![Bin {
            x0: lo.max(-r),
            x1: hi.min(r),
            env: 1.0,
        }];
        for w in ds.windows(2) {
            let env = gaussian_hit_prob(w[0], horizon);
            bins.push(Bin {
                x0: (hi + w[0]).max(-r),
                x1: (hi + w[1]).min(r),
                env,
            });
            bins.push(Bin {
                x0: (lo - w[1]).max(-r),
                x1: (lo - w[0]).min(r),
                env,
            });
        }
        bins.retain(|b| b.x1 > b.x0 && b.env > 0.0);
        Self::from_bins(gamma, bins)
    }

    fn from_bins(gamma: f64, bins: Vec<Bin>) -> Self {
        let mut cum = Vec::with_capacity(bins.len());
        let mut acc = 0.0;
        for b in &bins {
            acc += (mass_cdf(gamma, b.x1) - mass_cdf(gamma, b.x0)) * b.env;
            cum.push(acc);
        }
        Self { gamma, bins, cum }
    }

    /// `∫ env(x) |x|^{-gamma} dx`.
    pub(crate) fn total(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    /// A point from the normalized `env(x)|x|^{-gamma} dx` and its envelope value.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u = rng.random::<f64>() * self.total();
        let i = self.cum.partition_point(|c| *c <= u).min(self.bins.len() - 1);
        let b = self.bins[i];
        (sample_in(self.gamma, b.x0, b.x1, rng), b.env)
    }
}
