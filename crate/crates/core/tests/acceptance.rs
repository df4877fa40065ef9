//! End-to-end acceptance run: every criterion prints one pass/fail line.
//!
//! Criteria 4, 5 and 6 compare Monte Carlo estimates with limits at 95%
//! (or 3 standard error) confidence and carry a genuine chance of failing
//! for a fixed seed; their verdicts are printed but do not abort the run.
//! Every other failure makes the process exit with status 1.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::{integral_oracle, random_axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wfbs::covariance::*;
use wfbs::exec::Execution;
use wfbs::field_sampler::{sample_field, GridSpec};
use wfbs::params::{validate_wfbs_params, ParticleParams, WfbsParams};
use wfbs::particle_system::{OccupationEnsemble, ParticleConfig, TestFunction};
use wfbs::prelimit_oracle::prelimit_cov_XT;
use wfbs::quadrature::{integrate_breaks, Tolerance};
use wfbs::special_functions::{gamma, stable_density, StableLaw};
use wfbs::verify::*;

/// Master seed of every random draw below, fixed before any run.
const SEED: u64 = 20261018;
const REPS: usize = 4000;
const WIDTH: f64 = 0.06;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn params(a1: f64, b1: f64, a2: f64, b2: f64) -> WfbsParams {
    validate_wfbs_params(a1, b1, a2, b2).unwrap()
}

fn find<'a>(reports: &'a [StatReport], name: &str) -> &'a StatReport {
    reports
        .iter()
        .find(|r| r.name == name)
        .unwrap_or_else(|| panic!("missing report {name}"))
}

fn describe(r: &StatReport) -> String {
    format!(
        "{} estimate {:.6} target {:.6} (tolerance {:.2e})",
        r.name, r.estimate, r.target, r.tolerance
    )
}

fn criterion1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b) = random_axis(&mut rng, 2.0);
        let u = rng.random_range(0.01..10.0);
        let v = if rng.random_bool(0.1) { u } else { rng.random_range(0.01..10.0) };
        let got = wfbm_cov(a, b, u, v).unwrap();
        let want = integral_oracle(a, b, u, v);
        worst = worst.max(((got - want) / want).abs());
    }
    outcome(worst <= 1e-9, format!("max relative deviation {worst:.2e} over 1000 tuples"))
}

// mass beyond L from the tail series p(x) ~ Σ_k c_k x^{-kα-1}
fn tail_mass(alpha: f64, l: f64) -> f64 {
    if alpha == 2.0 {
        return 0.0;
    }
    (1..=4)
        .map(|k| {
            let k = k as f64;
            let c = (-1f64).powf(k + 1.0) * gamma(k * alpha + 1.0) / gamma(k + 1.0) * (k * PI * alpha / 2.0).sin() / PI;
            c * l.powf(-k * alpha) / (k * alpha)
        })
        .sum()
}

fn criterion2() -> Outcome {
    let mut worst_const = 0.0f64;
    let mut worst_mass = 0.0f64;
    let l = 400.0;
    for alpha in [1.0, 1.2, 1.5, 1.8, 2.0] {
        let law = StableLaw::new(alpha, 1.0).unwrap();
        let c = gamma(1.0 / alpha) / (alpha * PI);
        worst_const = worst_const.max((stable_density(law, 0.0).unwrap() - c).abs());
        let hi = if alpha == 2.0 { 40.0 } else { l };
        let breaks = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0, 100.0, 400.0];
        let pts: Vec<f64> = breaks.iter().copied().filter(|x| *x <= hi).collect();
        let body = integrate_breaks(|x| stable_density(law, x).unwrap(), &pts, Tolerance::new(1e-12, 1e-11))
            .unwrap()
            .value;
        let mass = 2.0 * (body + tail_mass(alpha, hi));
        worst_mass = worst_mass.max((mass - 1.0).abs());
    }
    outcome(
        worst_const <= 1e-8 && worst_mass <= 1e-6,
        format!("max |p(0) - Γ(1/α)/(απ)| {worst_const:.2e}, max |mass - 1| {worst_mass:.2e}"),
    )
}

fn criterion3() -> Outcome {
    let p = params(-0.25, 0.5, 0.0, 0.25);
    let axis = vec![0.5, 1.0, 1.5];
    let g = GridSpec::new(axis.clone(), axis.clone()).unwrap();
    let samples = sample_field(&p, &g, 200_000, SEED ^ 3).unwrap();
    let cells: Vec<(usize, usize)> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
    let cols: Vec<Vec<f64>> = cells
        .iter()
        .map(|&c| samples.iter().map(|s| s.values[c]).collect())
        .collect();
    let mut worst = 0.0f64;
    for (k1, &(i1, j1)) in cells.iter().enumerate() {
        for (k2, &(i2, j2)) in cells.iter().enumerate().skip(k1) {
            let want = sheet_cov(&p, axis[i1], axis[j1], axis[i2], axis[j2]).unwrap();
            let (est, se) = column_cov(&cols[k1], &cols[k2]).unwrap();
            worst = worst.max((est - want).abs() / se);
        }
    }
    outcome(worst <= 4.0, format!("45 distinct entries, largest deviation {worst:.2} standard errors"))
}

fn brownian_config(t: f64) -> ParticleConfig {
    let f = TestFunction::gaussian(0.0, WIDTH).unwrap();
    ParticleConfig::new(ParticleParams::symmetric(2.0, 0.0).unwrap(), f, f, t, vec![(1.0, 1.0)]).unwrap()
}

fn criterion4(ladder: &[OccupationEnsemble]) -> Outcome {
    let opts = Theorem31Options {
        ci_multiplier: 1.96,
        prelimit: false,
        ..Default::default()
    };
    let reports = theorem31_reports(ladder, &opts).unwrap();
    let ci = find(&reports, "limit_cov T=128 (1,1)(1,1)");
    let dec = find(&reports, "error_decreasing (1,1)(1,1)");
    outcome(
        ci.passed() && dec.passed(),
        format!("{}; {}", describe(ci), dec.metadata["ladder"]),
    )
}

fn criterion5(ladder: &[OccupationEnsemble]) -> Outcome {
    let opts = Theorem31Options {
        prelimit_multiplier: 3.0,
        ..Default::default()
    };
    let reports = theorem31_reports(&ladder[..1], &opts).unwrap();
    let mc = find(&reports, "prelimit_cov T=8 (1,1)(1,1)");
    let c512 = brownian_config(512.0);
    let exact = prelimit_cov_XT(&c512, (1.0, 1.0), (1.0, 1.0)).unwrap();
    let limit = limit_covariances(&c512).unwrap()[0].1;
    let rel = (exact / limit - 1.0).abs();
    outcome(
        mc.passed() && rel <= 0.01,
        format!("{}; T=512 exact {exact:.6} vs limit {limit:.6} ({:.2}%)", describe(mc), 100.0 * rel),
    )
}

fn criterion6() -> Outcome {
    let f = TestFunction::gaussian(0.0, WIDTH).unwrap();
    let pp = ParticleParams::new([2.0, 2.0], [0.5, 0.0]).unwrap();
    let cfg = ParticleConfig::new(pp, f, f, 128.0, vec![(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)]).unwrap();
    let sheet = params_check(&cfg);
    let opts = Theorem31Options {
        ci_multiplier: 1.96,
        prelimit: false,
        ..Default::default()
    };
    let ens = run_ladder(&cfg, &[128.0], REPS, SEED + 6, Execution::Parallel).unwrap();
    let reports = theorem31_reports(&ens, &opts).unwrap();
    let cov: Vec<&StatReport> = reports.iter().filter(|r| r.name.starts_with("limit_cov")).collect();
    let failed: Vec<String> = cov.iter().filter(|r| !r.passed()).map(|r| describe(r)).collect();
    let worst = cov
        .iter()
        .map(|r| (r.estimate - r.target).abs() / r.stderr)
        .fold(0.0, f64::max);
    outcome(
        cov.len() == 6 && failed.is_empty() && sheet,
        format!("6 entries, largest deviation {worst:.2} standard errors{}", if failed.is_empty() { String::new() } else { format!("; outside: {}", failed.join(", ")) }),
    )
}

// the limit sheet of the weighted case has a = (-0.25, 0), b = (0.5, 0.5)
fn params_check(cfg: &ParticleConfig) -> bool {
    let p = wfbs::params::params_from_particle(&cfg.pp).unwrap();
    p == params(-0.25, 0.5, 0.0, 0.5)
}

fn criterion7() -> Outcome {
    let signs = [-0.3, 0.0, 0.4];
    let rects = [
        (Rect::new(1.0, 1.0, 2.0, 2.0).unwrap(), Rect::new(3.0, 2.5, 4.5, 5.0).unwrap()),
        (Rect::new(0.0, 0.5, 0.7, 1.0).unwrap(), Rect::new(0.7, 1.0, 9.0, 1.2).unwrap()),
    ];
    let mut checked = 0;
    let mut bad = Vec::new();
    for b1 in signs {
        for b2 in signs {
            for a in [-0.2, 0.3] {
                let p = params(a, b1, -a, b2);
                for (r1, r2) in &rects {
                    let c = rect_increment_cov(&p, r1, r2).unwrap();
                    let want = (b1 * b2).partial_cmp(&0.0).unwrap();
                    let got = if c == 0.0 { std::cmp::Ordering::Equal } else { c.partial_cmp(&0.0).unwrap() };
                    checked += 1;
                    if got != want {
                        bad.push(format!("b=({b1},{b2}) a={a}: {c:e}"));
                    }
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} cases over 9 sign patterns{}", if bad.is_empty() { String::new() } else { format!("; mismatches {}", bad.join(", ")) }))
}

fn criterion8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (a1, b1) = random_axis(&mut rng, 2.0);
        let (a2, b2) = random_axis(&mut rng, 2.0);
        let p = params(a1, b1, a2, b2);
        let (h, k) = (rng.random_range(0.01..100.0), rng.random_range(0.01..100.0));
        let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.01..10.0));
        let lhs = sheet_cov(&p, h * x[0], k * x[1], h * x[2], k * x[3]).unwrap();
        let rhs = h.powf(1.0 + a1 + b1) * k.powf(1.0 + a2 + b2) * sheet_cov(&p, x[0], x[1], x[2], x[3]).unwrap();
        worst = worst.max(((lhs - rhs) / rhs).abs());
    }
    outcome(worst <= 1e-10, format!("max relative error {worst:.2e} over 10^4 draws"))
}

fn lrd_sets() -> [(WfbsParams, &'static str); 3] {
    [
        (params(0.0, 0.48, 0.0, 0.48), "decaying"),
        (params(-0.25, 0.5, 0.3, 0.5), "non-trivial limit"),
        (params(0.0, 0.6, 0.0, 0.6), "growing"),
    ]
}

fn criterion9() -> (Outcome, Vec<StatReport>) {
    let mut all = Vec::new();
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, regime) in lrd_sets() {
        let reports = check_lrd(&p, &[1e2, 1e3, 1e4]).unwrap();
        let lrd = find(&reports, "lrd_limit");
        let ray = find(&reports, "ray_lrd_limit");
        ok &= lrd.passed() && ray.passed() && ray.metadata["regime"] == regime;
        let rel = |r: &StatReport| 100.0 * (r.estimate / r.target - 1.0).abs();
        parts.push(format!("{regime}: lrd {:.3}%, ray {:.3}%", rel(lrd), rel(ray)));
        all.extend(reports);
    }
    (outcome(ok, parts.join("; ")), all)
}

fn criterion10() -> Outcome {
    let sets = [params(0.0, 0.0, 0.0, 0.0), params(0.0, 0.5, 0.0, 0.5), params(-0.3, 0.5, 0.0, 0.0)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, p) in sets.iter().enumerate() {
        let r = check_holder(p, 10, SEED + 10 + k as u64).unwrap();
        ok &= r.passed();
        parts.push(format!(
            "slopes ({}, {}) vs ({}, {})",
            &r.metadata["slope1"][..5.min(r.metadata["slope1"].len())],
            &r.metadata["slope2"][..5.min(r.metadata["slope2"].len())],
            r.metadata["half_delta1"],
            r.metadata["half_delta2"]
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion11(ladder: &[OccupationEnsemble], lrd: &[StatReport]) -> Outcome {
    let opts = Theorem31Options {
        ci_multiplier: 1.96,
        prelimit: false,
        ..Default::default()
    };
    let name = "limit_cov T=128 (1,1)(1,1)";
    let renormed: Vec<OccupationEnsemble> = ladder.iter().map(|e| renormalized(e, 1.1)).collect();
    let wrong_norming = find(&theorem31_reports(&renormed, &opts).unwrap(), name).clone();
    let base = find(&theorem31_reports(ladder, &opts).unwrap(), name).clone();
    let wrong_target = base.clone().with_target(1.1 * base.target);
    let mut flipped = vec![("norming exponent x1.1", &wrong_norming), ("variance target x1.1", &wrong_target)];
    let shifted: Vec<StatReport> = lrd.iter().map(|r| r.clone().with_target(1.1 * r.target)).collect();
    for r in &shifted {
        flipped.push((r.name.as_str(), r));
    }
    let survivors: Vec<&str> = flipped.iter().filter(|(_, r)| r.passed()).map(|(n, _)| *n).collect();
    outcome(
        survivors.is_empty(),
        format!("{} perturbed verdicts, {} still pass{}", flipped.len(), survivors.len(), if survivors.is_empty() { String::new() } else { format!(": {}", survivors.join(", ")) }),
    )
}

fn main() {
    let start = Instant::now();
    let mut hard_failures = 0;
    let mut report = |id: usize, soft: bool, run: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let o = run();
        let verdict = if o.passed { "pass" } else { "FAIL" };
        println!("criterion {id:>2}: {verdict}  [{:.1}s] {}", t0.elapsed().as_secs_f64(), o.detail);
        if !o.passed && !soft {
            hard_failures += 1;
        }
    };
    report(1, false, &mut criterion1);
    report(2, false, &mut criterion2);
    report(3, false, &mut criterion3);

    let t0 = Instant::now();
    let ladder = run_ladder(&brownian_config(8.0), &[8.0, 32.0, 128.0], REPS, SEED, Execution::Parallel).unwrap();
    println!("(Brownian ladder T = 8, 32, 128 with {REPS} replications: {:.1}s)", t0.elapsed().as_secs_f64());
    report(4, true, &mut || criterion4(&ladder));
    report(5, true, &mut || criterion5(&ladder));
    report(6, true, &mut criterion6);
    report(7, false, &mut criterion7);
    report(8, false, &mut criterion8);
    let mut lrd = Vec::new();
    report(9, false, &mut || {
        let (o, r) = criterion9();
        lrd = r;
        o
    });
    report(10, false, &mut criterion10);
    report(11, false, &mut || criterion11(&ladder, &lrd));
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
