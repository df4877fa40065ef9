//! Adaptive Gauss–Kronrod integration and Gauss–Legendre rules.
//!
//! The adaptive driver bisects the interval with the largest error estimate
//! until the summed estimate drops below `max(abs, rel * |I|)`. Nodes never
//! touch the interval endpoints, so integrable endpoint singularities are
//! tolerated (slowly); callers flatten the strong ones by substitution.

use std::collections::BinaryHeap;

use crate::error::{Result, WfbsError};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_643_474_262,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of interval bisections.
    pub max_splits: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_splits: 4000,
        }
    }

    pub const fn with_max_splits(mut self, max_splits: usize) -> Self {
        self.max_splits = max_splits;
        self
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-12)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

/// One 21-point Gauss–Kronrod panel on `[a, b]`: `(value, error estimate)`.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let x = half * XGK[jtwm1];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let err = rescale_error((res_k - res_g) * half, res_abs * abs_half, res_asc * abs_half);
    (value, err)
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    integrate_breaks(f, &[a, b], tol)
}

/// Adaptive integration over `[points[0], points[last]]`, starting from the
/// panels delimited by `points` (which must be ascending).
pub fn integrate_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    let (value, abs_err, evals) = adaptive(&mut f, points, tol);
    let target = tol.abs.max(tol.rel * value.abs());
    if !value.is_finite() || abs_err > target {
        return Err(WfbsError::QuadratureFailure {
            what: format!("integral over [{}, {}]", points[0], points[points.len() - 1]),
            estimate: value,
            abs_err,
            tolerance: target,
        });
    }
    Ok(Integral {
        value,
        abs_err,
        evals,
    })
}

/// Like [`integrate_breaks`], but returns the best estimate even when the
/// tolerance was not met.
pub fn integrate_lenient<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], tol: Tolerance) -> Integral {
    let (value, abs_err, evals) = adaptive(&mut f, points, tol);
    Integral {
        value,
        abs_err,
        evals,
    }
}

fn adaptive<F: FnMut(f64) -> f64>(f: &mut F, points: &[f64], tol: Tolerance) -> (f64, f64, usize) {
    debug_assert!(points.len() >= 2);
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let (value, err) = gk21(f, a, b);
        evals += 21;
        total += value;
        total_err += err;
        heap.push(Segment { a, b, value, err });
    }
    let mut splits = 0;
    while total_err > tol.abs.max(tol.rel * total.abs()) && splits < tol.max_splits {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval collapsed to machine resolution; keep it and stop.
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk21(f, seg.a, mid);
        let (v2, e2) = gk21(f, mid, seg.b);
        evals += 42;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            err: e2,
        });
        splits += 1;
    }
    // Re-sum to shed the drift of the running totals.
    let (value, err) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
    (value, err, evals)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `∫_lo^hi |x|^{-gamma} g(x) dx` for `gamma < 1`, splitting at the origin and
/// flattening the power singularity with `|x| = y^{1/(1-gamma)}`.
///
/// `breaks` are extra interior points (outside `[lo, hi]` they are ignored).
pub fn integrate_power_weighted<F: FnMut(f64) -> f64>(
    mut g: F,
    lo: f64,
    hi: f64,
    gamma: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    debug_assert!(gamma < 1.0);
    if hi <= lo {
        return Ok(Integral {
            value: 0.0,
            abs_err: 0.0,
            evals: 0,
        });
    }
    if gamma == 0.0 {
        let pts = sorted_points(lo, hi, breaks);
        return integrate_breaks(g, &pts, tol);
    }
    let e = 1.0 - gamma;
    let mut out = Integral {
        value: 0.0,
        abs_err: 0.0,
        evals: 0,
    };
    // One side of the origin at a time, in the variable y = |x|^{1-gamma}.
    let mut side = |sign: f64, x0: f64, x1: f64, out: &mut Integral| -> Result<()> {
        // x0 < x1 are magnitudes on the side `sign`.
        if x1 <= x0 {
            return Ok(());
        }
        let y0 = x0.powf(e);
        let y1 = x1.powf(e);
        let mut ys: Vec<f64> = vec![y0, y1];
        for &bk in breaks {
            let m = sign * bk;
            if m > x0 && m < x1 {
                ys.push(m.powf(e));
            }
        }
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let r = integrate_breaks(
            |y: f64| {
                let x = y.powf(1.0 / e);
                g(sign * x) / e
            },
            &ys,
            tol,
        )?;
        out.value += r.value;
        out.abs_err += r.abs_err;
        out.evals += r.evals;
        Ok(())
    };
    if hi > 0.0 {
        side(1.0, lo.max(0.0), hi, &mut out)?;
    }
    if lo < 0.0 {
        side(-1.0, (-hi).max(0.0), -lo, &mut out)?;
    }
    Ok(out)
}

fn sorted_points(lo: f64, hi: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    pts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}
