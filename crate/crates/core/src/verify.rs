//! Acceptance suite: ten numbered criteria, each reported as pass or fail.

use std::fmt::{self, Write as _};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demo::{flat_check, left_fraction, valley_check, walk_environments, DemoConfig};
use crate::environment::{IncrementSampler, SimConfig, DEFAULT_SEED};
use crate::error::Result;
use crate::extrema::{oracle::brute_force_extrema, sweep_extrema};
use crate::fluctuation::{
    bias_gamma, g_closed, g_integral, lt_down_excursion, lt_down_run, lt_undershoot, lt_up_excursion,
    lt_up_run, slope_length_lt, slope_length_mean, B1Law, HittingParams, RunLevel, SlopeKind,
};
use crate::inversion::{gaver_stehfest, invert_cdf, kesten_oracle_density, InversionConfig};
use crate::montecarlo::{b1_report, increment_calibration, renewal_overshoot_check, simulate_paths, slope_report, McConfig};
use crate::numeric::linspace;
use crate::scale::ScaleContext;
use crate::special::{gamma, StabilityIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Reduced sample sizes; statistical bands widen from 3 to 4 standard errors.
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Soft criteria are reported but do not fail the suite.
    pub blocking: bool,
    pub seconds: f64,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match (self.passed, self.blocking) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "SOFT-FAIL",
        };
        write!(
            f,
            "{tag} criterion {:>2} {} ({:.2} s): {}",
            self.id, self.name, self.seconds, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub results: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed || !r.blocking)
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "bias endpoints and monotonicity"),
    (2, "closed and integral forms of g"),
    (3, "Brownian slope transforms"),
    (4, "slope mean identities"),
    (5, "fluctuation identity algebra"),
    (6, "scale function Laplace transform"),
    (7, "Laplace inversion accuracy"),
    (8, "Monte Carlo against analytic laws"),
    (9, "random walk demo"),
    (10, "extrema sweep against definition"),
];

struct Outcome {
    passed: bool,
    soft_passed: bool,
    detail: String,
}

impl Outcome {
    fn hard(passed: bool, detail: String) -> Self {
        Self {
            passed,
            soft_passed: true,
            detail,
        }
    }
}

/// Accumulates sub-checks and a short description of each failure.
#[derive(Default)]
struct Checks {
    total: usize,
    failed: Vec<String>,
    worst: f64,
}

impl Checks {
    fn close(&mut self, what: impl FnOnce() -> String, got: f64, want: f64, tol: f64) {
        let err = (got - want).abs();
        self.worst = self.worst.max(err / tol);
        self.check(err <= tol, || format!("{}: {got} vs {want}", what()));
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if !ok {
            self.failed.push(what());
        }
    }

    fn outcome(self) -> Outcome {
        let mut detail = format!("{}/{} checks", self.total - self.failed.len(), self.total);
        if self.worst > 0.0 {
            let _ = write!(detail, ", worst error/tolerance {:.3}", self.worst);
        }
        for f in self.failed.iter().take(3) {
            let _ = write!(detail, "; {f}");
        }
        Outcome::hard(self.failed.is_empty(), detail)
    }
}

fn ctx(a: f64) -> Result<ScaleContext> {
    ScaleContext::with_index(a)
}

fn criterion_1() -> Result<Outcome> {
    let mut c = Checks::default();
    c.close(|| "gamma(1)".into(), bias_gamma(1.0)?, 1.0, 1e-12);
    c.close(|| "gamma(2)".into(), bias_gamma(2.0)?, 0.5, 1e-12);
    let values = linspace(1.0, 2.0, 201)
        .into_iter()
        .map(bias_gamma)
        .collect::<Result<Vec<_>>>()?;
    c.check(values.windows(2).all(|w| w[1] < w[0]), || "not strictly decreasing".into());
    Ok(c.outcome())
}

fn criterion_2() -> Result<Outcome> {
    let mut c = Checks::default();
    for a in [1.1, 1.5, 1.9, 2.0] {
        c.close(|| format!("a={a}"), g_integral(a)?, g_closed(a)?, 1e-8);
    }
    Ok(c.outcome())
}

fn criterion_3() -> Result<Outcome> {
    let mut c = Checks::default();
    let ctx = ctx(2.0)?;
    for u in [0.1f64, 1.0, 10.0] {
        let want = 1.0 / u.sqrt().cosh();
        for kind in [SlopeKind::Upward, SlopeKind::Downward] {
            c.close(|| format!("{kind} u={u}"), slope_length_lt(&ctx, kind, u)?, want, 1e-10);
        }
    }
    Ok(c.outcome())
}

fn criterion_4() -> Result<Outcome> {
    let mut c = Checks::default();
    for a in [1.3, 1.7, 2.0] {
        let ctx = ctx(a)?;
        let up = slope_length_mean(&ctx, SlopeKind::Upward)?;
        let down = slope_length_mean(&ctx, SlopeKind::Downward)?;
        c.close(|| format!("sum a={a}"), up + down, 1.0 / ((a - 1.0) * gamma(a)?), 1e-12);
        let u = 1e-6;
        for (kind, mean) in [(SlopeKind::Upward, up), (SlopeKind::Downward, down)] {
            let fd = (1.0 - slope_length_lt(&ctx, kind, u)?) / u;
            c.close(|| format!("{kind} slope a={a}"), fd / mean, 1.0, 1e-4);
        }
    }
    Ok(c.outcome())
}

fn criterion_5() -> Result<Outcome> {
    let mut c = Checks::default();
    for a in [1.3, 1.7, 2.0] {
        let ctx = ctx(a)?;
        for u in [0.1, 1.0, 5.0] {
            let k = 1.0;
            let pist = lt_up_excursion(&ctx, u, k)? * lt_down_run(&ctx, u, k)? * ctx.zq(u, k)?;
            c.close(|| format!("product a={a} u={u}"), pist, 1.0, 1e-12);
            let down = lt_down_excursion(&ctx, &HittingParams::new(u, 0.0, k)?)? * lt_down_run(&ctx, u, k)?;
            let up = lt_up_excursion(&ctx, u, k)? * lt_up_run(&ctx, u, RunLevel::Infinite, k)?;
            c.close(
                || format!("down composition a={a} u={u}"),
                down,
                slope_length_lt(&ctx, SlopeKind::Downward, u)?,
                1e-10,
            );
            c.close(
                || format!("up composition a={a} u={u}"),
                up,
                slope_length_lt(&ctx, SlopeKind::Upward, u)?,
                1e-10,
            );
            let via_quad = (-u * k).exp() / ctx.tilted_z(u, -ctx.psi(u)?, k)?;
            c.close(|| format!("undershoot a={a} u={u}"), lt_undershoot(&ctx, u, k)?, via_quad, 1e-9);
        }
    }
    Ok(c.outcome())
}

fn criterion_6() -> Result<Outcome> {
    let mut c = Checks::default();
    for a in [1.3, 1.7, 2.0] {
        let ctx = ctx(a)?;
        for q in [0.0, 0.5, 2.0] {
            let lambda = 2.0 * ctx.phi(q)? + 1.0;
            let want = 1.0 / (ctx.psi(lambda)? - q);
            c.close(|| format!("a={a} q={q}"), ctx.laplace_wq(q, lambda)?, want, 1e-6);
        }
    }
    Ok(c.outcome())
}

fn criterion_7() -> Result<Outcome> {
    let mut c = Checks::default();
    let fine = InversionConfig {
        n_terms: 20,
        ..InversionConfig::default()
    };
    let kesten = |l: f64| Ok(1.0 / l.sqrt().cosh());
    for t in linspace(0.1, 5.0, 50) {
        c.close(|| format!("density t={t}"), gaver_stehfest(&kesten, t, &fine)?, kesten_oracle_density(t, 60), 1e-4);
    }
    let cdf = linspace(0.1, 5.0, 50)
        .into_iter()
        .map(|t| invert_cdf(&kesten, t, &InversionConfig::default()))
        .collect::<Result<Vec<_>>>()?;
    c.check(cdf.windows(2).all(|w| w[1] >= w[0] - 1e-5), || "Kesten CDF not monotone".into());
    for a in [1.5, 2.0] {
        let law = B1Law::with_index(a)?;
        let lo = 8.0 * law.slope_mean(SlopeKind::Upward);
        let hi = (8.0 * law.slope_mean(SlopeKind::Downward)).min(law.inversion().t_max);
        let values = linspace(-lo, hi, 201)
            .into_iter()
            .map(|x| law.cdf(x))
            .collect::<Result<Vec<_>>>()?;
        c.check(values.windows(2).all(|w| w[1] >= w[0] - 1e-5), || format!("b1 CDF not monotone a={a}"));
        let mass = law.mass_check(30.0)?;
        c.close(|| format!("mass a={a}"), mass.total, 1.0, 1e-3);
    }
    Ok(c.outcome())
}

fn criterion_8(mode: Mode) -> Result<Outcome> {
    let mut c = Checks::default();
    let (n_paths, n_draws, sigmas) = match mode {
        Mode::Fast => (2_000, 100_000, 4.0),
        Mode::Full => (20_000, 1_000_000, 3.0),
    };
    let mut ks_worst = 0.0f64;
    for a in [1.5, 2.0] {
        let index = StabilityIndex::new(a)?;
        let cfg = McConfig {
            n_paths,
            ..McConfig::new(SimConfig::new(index))
        };
        let samples = simulate_paths(&cfg)?;
        let b1 = b1_report(&cfg, &samples, &B1Law::with_index(a)?)?;
        let p = b1.comparisons["p_left"];
        c.check(p.within(sigmas, 0.01), || format!("P(b<0) a={a}: z={:.2}", p.z));
        let ks = b1.ks.unwrap_or(f64::INFINITY);
        ks_worst = ks_worst.max(ks);
        c.check(ks <= 0.03, || format!("KS a={a}: {ks}"));
        let slopes = slope_report(&cfg, &samples)?;
        for kind in [SlopeKind::Upward, SlopeKind::Downward] {
            let m = slopes.comparisons[&format!("{kind}_mean")];
            c.check(m.within(sigmas, 0.05 * m.analytic), || format!("{kind} mean a={a}: z={:.2}", m.z));
            for u in &cfg.probe_us {
                let key = format!("{kind}_lt_u{u}");
                let l = slopes.comparisons[&key];
                c.check(l.within(sigmas, 0.0), || format!("{key} a={a}: z={:.2}", l.z));
            }
        }
        let renewal = renewal_overshoot_check(&cfg, &samples, &[0.0])?;
        let r = renewal.comparisons["gamma_complement"];
        c.check(r.within(sigmas, 0.0), || format!("renewal at 0 a={a}: z={:.2}", r.z));
        let cal = increment_calibration(&cfg, &[0.25, 0.5], n_draws)?;
        for (key, cmp) in &cal.comparisons {
            c.check(cmp.within(sigmas, 0.0), || format!("{key} a={a}: z={:.2}", cmp.z));
        }
    }
    let mut out = c.outcome();
    let _ = write!(out.detail, ", max KS {ks_worst:.4}, N={n_paths}, {sigmas} SE bands");
    Ok(out)
}

fn criterion_9(mode: Mode) -> Result<Outcome> {
    let (n_envs, n_steps) = match mode {
        Mode::Fast => (100, 100_000),
        Mode::Full => (500, 1_000_000),
    };
    let flat = flat_check(2_000, 10_000, 1.0, DEFAULT_SEED)?;
    let valley = valley_check(100, 200_000, DEFAULT_SEED)?;
    let mut cfg = DemoConfig::new(StabilityIndex::new(1.5)?);
    cfg.n_envs = n_envs;
    cfg.n_steps = n_steps;
    let lf = left_fraction(&walk_environments(&cfg)?, cfg.a)?;
    let soft = valley.localized >= 95 && lf.fraction > 0.55;
    Ok(Outcome {
        passed: flat.passed(3.0),
        soft_passed: soft,
        detail: format!(
            "flat walk {} (mean {:.3}, variance {:.1} vs {:.1}); valley {}/{}; left fraction {:.3} +- {:.3} over {} environments at {} steps ({} wall hits, {:.0}% on the side of b)",
            if flat.passed(3.0) { "ok" } else { "off" },
            flat.mean,
            flat.variance,
            flat.expected_variance,
            valley.localized,
            valley.runs,
            lf.fraction,
            lf.se,
            lf.n_envs,
            n_steps,
            lf.wall_hits,
            100.0 * lf.same_side_as_b,
        ),
    })
}

/// Hand-built paths where ties and exact level hits decide the outcome.
pub fn adversarial_paths() -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::new();
    out.push((vec![0.0; 100], 1.0));
    out.push(((0..5000).map(|i| i as f64).collect(), 3.0));
    out.push(((0..5000).map(|i| -(i as f64)).collect(), 3.0));
    for x in [1.0, 2.0, 0.5] {
        // Swings of exactly x.
        out.push(((0..2000).map(|i| if i % 2 == 0 { 0.0 } else { x }).collect(), x));
        // Sawtooth of height exactly x with flat tops and bottoms.
        out.push((
            (0..3000)
                .map(|i| match i % 6 {
                    0 | 1 => 0.0,
                    2 => x / 2.0,
                    3 | 4 => x,
                    _ => x / 2.0,
                })
                .collect(),
            x,
        ));
        // Repeated equal minima separated by bumps just below and at x.
        out.push((
            (0..4000)
                .map(|i| match i % 8 {
                    1 => x * 0.999,
                    5 => x,
                    _ => 0.0,
                })
                .collect(),
            x,
        ));
        // Staircase up then down in steps of x / 4.
        let mut stairs: Vec<f64> = (0..400).map(|i| (i / 10) as f64 * x / 4.0).collect();
        stairs.extend((0..400).rev().map(|i| (i / 10) as f64 * x / 4.0));
        out.push((stairs, x));
    }
    out.push((vec![0.0, 5.0, 0.0], 5.0));
    out.push((vec![0.0], 1.0));
    out.push((vec![], 1.0));
    out
}

fn random_path(rng: &mut ChaCha8Rng, max_len: usize) -> (Vec<f64>, f64) {
    let len = rng.random_range(2..=max_len);
    match rng.random_range(0..3) {
        0 => {
            // Lattice walk with plateaus, which produces exact ties.
            let x = f64::from(rng.random_range(1u8..=4));
            let mut acc = 0.0;
            let values = (0..len)
                .map(|_| {
                    acc += f64::from(rng.random_range(-2i8..=2));
                    acc
                })
                .collect();
            (values, x)
        }
        1 => {
            let a = StabilityIndex::new(rng.random_range(1.05..=2.0)).expect("index in range");
            let sampler = IncrementSampler::new(a, 1e-2);
            let mut acc = 0.0;
            let values = (0..len)
                .map(|_| {
                    acc += sampler.sample(rng);
                    acc
                })
                .collect();
            (values, rng.random_range(0.05..1.0))
        }
        _ => {
            let values = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
            (values, rng.random_range(0.1..4.0))
        }
    }
}

/// `true` if the sweep and the definition agree; an empty sweep error counts
/// as agreeing with an empty definition.
pub fn oracle_agrees(values: &[f64], x: f64) -> bool {
    let brute = brute_force_extrema(values, x);
    match sweep_extrema(values, x) {
        Ok(got) => got == brute,
        Err(_) => brute.is_empty(),
    }
}

fn criterion_10(mode: Mode) -> Result<Outcome> {
    let (n_random, max_len) = match mode {
        Mode::Fast => (1_000, 1_000),
        Mode::Full => (10_000, 5_000),
    };
    let mut c = Checks::default();
    for (i, (values, x)) in adversarial_paths().iter().enumerate() {
        c.check(oracle_agrees(values, *x), || format!("adversarial path {i}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    for i in 0..n_random {
        let (values, x) = random_path(&mut rng, max_len);
        c.check(oracle_agrees(&values, x), || format!("random path {i}"));
    }
    Ok(c.outcome())
}

/// Runs criterion `id` in `1..=10`.
pub fn run_criterion(id: u8, mode: Mode) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map_or("unknown criterion", |(_, n)| n);
    let start = Instant::now();
    let outcome = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(mode),
        9 => criterion_9(mode),
        10 => criterion_10(mode),
        _ => Ok(Outcome::hard(false, "no such criterion".into())),
    };
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(o) if id == 9 => CriterionResult {
            id,
            name,
            passed: o.passed && o.soft_passed,
            blocking: !o.passed,
            seconds,
            detail: o.detail,
        },
        Ok(o) => CriterionResult {
            id,
            name,
            passed: o.passed,
            blocking: true,
            seconds,
            detail: o.detail,
        },
        Err(e) => CriterionResult {
            id,
            name,
            passed: false,
            blocking: true,
            seconds,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs all criteria in order.
pub fn run_all(mode: Mode) -> VerifyReport {
    VerifyReport {
        mode,
        results: CRITERIA.iter().map(|&(id, _)| run_criterion(id, mode)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_criteria_pass() {
        for id in [1, 2, 3, 4, 5, 6] {
            let r = run_criterion(id, Mode::Fast);
            assert!(r.passed && r.blocking, "{r}");
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        let r = run_criterion(11, Mode::Fast);
        assert!(!r.passed && r.blocking);
        assert!(r.to_string().starts_with("FAIL"));
    }

    #[test]
    fn adversarial_paths_agree() {
        for (values, x) in adversarial_paths() {
            assert!(oracle_agrees(&values, x), "x={x} len={}", values.len());
        }
    }
}
