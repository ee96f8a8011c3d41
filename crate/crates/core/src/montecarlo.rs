//! Monte Carlo checks of the limit law, the slope laws and the renewal step.
//!
//! Paths are simulated in parallel, one independent stream per path, and
//! collected in path order. All reductions run sequentially with compensated
//! sums, so a report depends on the configuration only, not on the thread
//! count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{generate_path, IncrementSampler, SimConfig, StopRule, StreamId};
use crate::error::{Error, Result};
use crate::extrema::{b_from_extrema, continuity_corrected_level, find_x_extrema, slopes_from_extrema};
use crate::fluctuation::{bias_gamma, slope_length_lt, slope_length_mean, B1Law, SlopeKind};
use crate::inversion::InversionConfig;
use crate::numeric::{linspace, mean_and_se, CompensatedSum};
use crate::scale::ScaleContext;

/// Stream offset of the renewal replicates, clear of path streams.
const RENEWAL_STREAM: u64 = 1 << 62;
const CALIBRATION_STREAM: u64 = 1 << 61;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub sim: SimConfig,
    pub n_paths: usize,
    pub probe_us: Vec<f64>,
    /// Points for the Kolmogorov–Smirnov comparison; empty selects 200 points
    /// over `[-8 E l_up, 8 E l_down]`.
    pub ks_grid: Vec<f64>,
    /// Extrema level `x` of `b_x`.
    pub level: f64,
    /// Lower the detection level by the expected grid miss of both extremes.
    pub continuity_correction: bool,
    /// Slopes with `1 <= |offset| <= slope_window` enter the slope statistics.
    pub slope_window: usize,
    /// Retries per path after a cap event.
    pub max_retries: u64,
    /// Simulate the time reversal, a spectrally positive environment.
    pub spectrally_positive: bool,
    /// Worker count; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn new(sim: SimConfig) -> Self {
        Self {
            sim,
            n_paths: 20_000,
            probe_us: vec![0.5, 1.0, 2.0],
            ks_grid: Vec::new(),
            level: 1.0,
            continuity_correction: true,
            slope_window: 3,
            max_retries: 16,
            spectrally_positive: false,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.n_paths < 100 {
            return Err(Error::Config(format!("n_paths must be at least 100, got {}", self.n_paths)));
        }
        if !(self.level > 0.0 && self.level.is_finite()) {
            return Err(Error::Config(format!("level must be positive, got {}", self.level)));
        }
        if self.probe_us.iter().any(|u| !(*u > 0.0 && u.is_finite())) {
            return Err(Error::Config("probe_us must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// Level used to detect extrema on the grid.
    pub fn detection_level(&self) -> Result<f64> {
        if self.continuity_correction {
            continuity_corrected_level(self.sim.a.value(), self.sim.h, self.level)
        } else {
            Ok(self.level)
        }
    }

    fn stop_rule(&self) -> Result<StopRule> {
        Ok(StopRule {
            level: self.detection_level()?,
            firings: self.slope_window + 2,
        })
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(e.to_string()))?;
                Ok(pool.install(job))
            }
            None => Ok(job()),
        }
    }

    fn worker_count(&self) -> usize {
        self.threads.unwrap_or_else(rayon::current_num_threads)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (value, se) = mean_and_se(xs);
        Self { value, se, n: xs.len() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub analytic: f64,
    pub empirical: f64,
    pub se: f64,
    pub z: f64,
}

impl Comparison {
    pub fn new(analytic: f64, empirical: f64, se: f64) -> Self {
        let diff = empirical - analytic;
        let z = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::MAX
        };
        Self { analytic, empirical, se, z }
    }

    /// `|empirical - analytic| <= sigmas se + allowance`.
    pub fn within(&self, sigmas: f64, allowance: f64) -> bool {
        (self.empirical - self.analytic).abs() <= sigmas * self.se + allowance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub config: serde_json::Value,
    pub estimates: BTreeMap<String, Estimate>,
    pub comparisons: BTreeMap<String, Comparison>,
    pub ks: Option<f64>,
    pub retries: u64,
    pub notes: Vec<String>,
}

impl McReport {
    fn new(config: serde_json::Value, retries: u64) -> Self {
        Self {
            config,
            estimates: BTreeMap::new(),
            comparisons: BTreeMap::new(),
            ks: None,
            retries,
            notes: Vec::new(),
        }
    }

    /// Merges the entries of `other`, keeping the larger retry count.
    pub fn merge(&mut self, other: McReport) {
        self.estimates.extend(other.estimates);
        self.comparisons.extend(other.comparisons);
        self.ks = self.ks.or(other.ks);
        self.retries = self.retries.max(other.retries);
        self.notes.extend(other.notes);
    }
}

/// Per-path outputs pooled over a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSamples {
    pub b: Vec<f64>,
    pub up_lengths: Vec<f64>,
    pub down_lengths: Vec<f64>,
    pub retries: u64,
    pub grid_points: u64,
}

struct PathOutcome {
    b: f64,
    up: Vec<f64>,
    down: Vec<f64>,
    retries: u64,
    points: usize,
}

fn simulate_one(cfg: &McConfig, stop: &StopRule, level: f64, path: u64) -> Result<PathOutcome> {
    let mut retries = 0;
    loop {
        let id = StreamId { path, retry: retries };
        let env = match generate_path(&cfg.sim, stop, id) {
            Ok(env) => env,
            Err(Error::CapExceeded { .. }) if retries < cfg.max_retries => {
                retries += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let env = if cfg.spectrally_positive { env.reversed() } else { env };
        let records = find_x_extrema(&env, level)?;
        let b = b_from_extrema(&records)?;
        let window = cfg.slope_window as i64;
        let (mut up, mut down) = (Vec::new(), Vec::new());
        for s in slopes_from_extrema(&env, &records)? {
            if s.is_boundary_partial || s.offset == 0 || s.offset.abs() > window {
                continue;
            }
            match s.kind {
                SlopeKind::Upward => up.push(s.length),
                SlopeKind::Downward => down.push(s.length),
            }
        }
        return Ok(PathOutcome {
            b,
            up,
            down,
            retries,
            points: env.len(),
        });
    }
}

/// Simulates `n_paths` environments and extracts `b_x` and the windowed slope lengths.
pub fn simulate_paths(cfg: &McConfig) -> Result<PathSamples> {
    cfg.validate()?;
    let stop = cfg.stop_rule()?;
    let level = stop.level;
    let outcomes: Vec<Result<PathOutcome>> = cfg.run(|| {
        (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| simulate_one(cfg, &stop, level, i))
            .collect()
    })?;
    let mut samples = PathSamples {
        b: Vec::with_capacity(cfg.n_paths),
        up_lengths: Vec::new(),
        down_lengths: Vec::new(),
        retries: 0,
        grid_points: 0,
    };
    for outcome in outcomes {
        let o = outcome?;
        samples.b.push(o.b);
        samples.up_lengths.extend(o.up);
        samples.down_lengths.extend(o.down);
        samples.retries += o.retries;
        samples.grid_points += o.points as u64;
    }
    Ok(samples)
}

fn config_json(cfg: &McConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null);
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("workers".into(), cfg.worker_count().into());
        if let Ok(level) = cfg.detection_level() {
            map.insert("detection_level".into(), level.into());
        }
    }
    v
}

fn indicator(flag: bool) -> f64 {
    f64::from(u8::from(flag))
}

/// Sup distance between the empirical CDF of `samples` and `cdf` over `grid`.
pub fn ks_on_grid(samples: &[f64], grid: &[f64], cdf: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientPool("no samples for the KS distance"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    grid.iter().try_fold(0.0f64, |acc, &x| {
        let empirical = sorted.partition_point(|&s| s <= x) as f64 / n;
        Ok(acc.max((empirical - cdf(x)?).abs()))
    })
}

fn law_for(cfg: &McConfig) -> Result<B1Law> {
    B1Law::new(ScaleContext::new(cfg.sim.a, Default::default())?, InversionConfig::default())
}

// The reversed environment has b -> -b and swaps the slope kinds.
fn analytic_kind(cfg: &McConfig, observed: SlopeKind) -> SlopeKind {
    if cfg.spectrally_positive {
        observed.opposite()
    } else {
        observed
    }
}

/// Sign frequency and KS distance of simulated `b` against the analytic law.
pub fn b1_report(cfg: &McConfig, samples: &PathSamples, law: &B1Law) -> Result<McReport> {
    let mut report = McReport::new(config_json(cfg), samples.retries);
    let left: Vec<f64> = samples.b.iter().map(|&b| indicator(b < 0.0)).collect();
    let p_left = Estimate::from_samples(&left);
    report.estimates.insert("p_left".into(), p_left);
    report.estimates.insert("b_mean".into(), Estimate::from_samples(&samples.b));
    let a = cfg.sim.a.value();
    let gamma = bias_gamma(a)?;
    let analytic = if cfg.spectrally_positive { 1.0 - gamma } else { gamma };
    report
        .comparisons
        .insert("p_left".into(), Comparison::new(analytic, p_left.value, p_left.se));
    let scale = cfg.level.powf(a);
    if cfg.level != 1.0 {
        report.notes.push(format!("b_x rescaled by x^-a = {}", 1.0 / scale));
    }
    let grid = if cfg.ks_grid.is_empty() {
        let t_max = law.inversion().t_max;
        let lo = (8.0 * law.slope_mean(SlopeKind::Upward)).min(t_max);
        let hi = (8.0 * law.slope_mean(SlopeKind::Downward)).min(t_max);
        if cfg.spectrally_positive {
            linspace(-hi, lo, 200)
        } else {
            linspace(-lo, hi, 200)
        }
    } else {
        cfg.ks_grid.clone()
    };
    let scaled: Vec<f64> = samples.b.iter().map(|b| b / scale).collect();
    let ks = if cfg.spectrally_positive {
        ks_on_grid(&scaled, &grid, |x| Ok(1.0 - law.cdf(-x)?))?
    } else {
        ks_on_grid(&scaled, &grid, |x| law.cdf(x))?
    };
    report.ks = Some(ks);
    Ok(report)
}

/// Means and transform probes of the pooled slope lengths.
pub fn slope_report(cfg: &McConfig, samples: &PathSamples) -> Result<McReport> {
    let mut report = McReport::new(config_json(cfg), samples.retries);
    let ctx = ScaleContext::new(cfg.sim.a, Default::default())?;
    let scale = cfg.level.powf(cfg.sim.a.value());
    let mut means = BTreeMap::new();
    for (kind, pool) in [
        (SlopeKind::Upward, &samples.up_lengths),
        (SlopeKind::Downward, &samples.down_lengths),
    ] {
        if pool.len() < 2 {
            return Err(Error::InsufficientPool("fewer than two slopes of one kind"));
        }
        let lengths: Vec<f64> = pool.iter().map(|l| l / scale).collect();
        let law_kind = analytic_kind(cfg, kind);
        let mean = Estimate::from_samples(&lengths);
        report.estimates.insert(format!("{kind}_mean"), mean);
        report.comparisons.insert(
            format!("{kind}_mean"),
            Comparison::new(slope_length_mean(&ctx, law_kind)?, mean.value, mean.se),
        );
        means.insert(kind, (mean, lengths));
        for &u in &cfg.probe_us {
            let probe: Vec<f64> = means[&kind].1.iter().map(|l| (-u * l).exp()).collect();
            let est = Estimate::from_samples(&probe);
            report.estimates.insert(format!("{kind}_lt_u{u}"), est);
            report.comparisons.insert(
                format!("{kind}_lt_u{u}"),
                Comparison::new(slope_length_lt(&ctx, law_kind, u)?, est.value, est.se),
            );
        }
    }
    let (down, up) = (&means[&SlopeKind::Downward].0, &means[&SlopeKind::Upward].0);
    let ratio = down.value / up.value;
    let se = ratio * ((down.se / down.value).powi(2) + (up.se / up.value).powi(2)).sqrt();
    let (num, den) = (
        slope_length_mean(&ctx, analytic_kind(cfg, SlopeKind::Downward))?,
        slope_length_mean(&ctx, analytic_kind(cfg, SlopeKind::Upward))?,
    );
    report.estimates.insert("down_up_ratio".into(), Estimate { value: ratio, se, n: down.n.min(up.n) });
    report
        .comparisons
        .insert("down_up_ratio".into(), Comparison::new(num / den, ratio, se));
    Ok(report)
}

/// Empirical law of `b_1` against the analytic one.
pub fn estimate_b1_law(cfg: &McConfig) -> Result<McReport> {
    let samples = simulate_paths(cfg)?;
    b1_report(cfg, &samples, &law_for(cfg)?)
}

/// Pooled non-central slope statistics against their analytic laws.
pub fn estimate_slope_stats(cfg: &McConfig) -> Result<McReport> {
    let samples = simulate_paths(cfg)?;
    slope_report(cfg, &samples)
}

/// Alternating renewal sequence resampled from the slope pools.
///
/// Odd cycles draw from the downward pool, even cycles from the upward one.
/// Each of `n_paths` replicates runs to `50 (mean up + mean down)` and
/// records whether `N(t)` is odd and the overshoot `B_t`. The limit
/// `E(xi_1 - x)^+ / (E l_up + E l_down)` is formed from the same pools.
pub fn renewal_overshoot_check(cfg: &McConfig, samples: &PathSamples, x_values: &[f64]) -> Result<McReport> {
    cfg.validate()?;
    let (up, down) = (&samples.up_lengths, &samples.down_lengths);
    if up.len() < 2 || down.len() < 2 {
        return Err(Error::InsufficientPool("renewal check needs both slope pools"));
    }
    let (m_up, _) = mean_and_se(up);
    let (m_down, _) = mean_and_se(down);
    let cycle = m_up + m_down;
    let horizon = 50.0 * cycle;
    let seed = cfg.sim.seed;
    let outcomes: Vec<(bool, f64)> = cfg.run(|| {
        (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(RENEWAL_STREAM | rep);
                let mut s = 0.0;
                let mut n = 0u64;
                while s < horizon {
                    n += 1;
                    let pool = if n % 2 == 1 { down } else { up };
                    s += pool[rng.random_range(0..pool.len())];
                }
                (n % 2 == 1, s - horizon)
            })
            .collect()
    })?;
    let mut report = McReport::new(config_json(cfg), samples.retries);
    report.notes.push(format!("renewal horizon {horizon} = 50 mean cycles"));
    for &x in x_values {
        let hits: Vec<f64> = outcomes.iter().map(|&(odd, b)| indicator(odd && b > x)).collect();
        let emp = Estimate::from_samples(&hits);
        let excess: Vec<f64> = down.iter().map(|&d| (d - x).max(0.0)).collect();
        let (d_mean, _) = mean_and_se(&excess);
        let analytic = d_mean / cycle;
        // Delta-method influence of each pool on analytic = D / (U + M).
        let infl_down: Vec<f64> = down
            .iter()
            .zip(&excess)
            .map(|(&l, &e)| (e - d_mean) / cycle - d_mean * (l - m_down) / (cycle * cycle))
            .collect();
        let infl_up: Vec<f64> = up.iter().map(|&l| -d_mean * (l - m_up) / (cycle * cycle)).collect();
        let (_, se_d) = mean_and_se(&infl_down);
        let (_, se_u) = mean_and_se(&infl_up);
        let se_analytic = (se_d * se_d + se_u * se_u).sqrt();
        let se = (emp.se * emp.se + se_analytic * se_analytic).sqrt();
        report.estimates.insert(format!("odd_overshoot_x{x}"), emp);
        report
            .comparisons
            .insert(format!("odd_overshoot_x{x}"), Comparison::new(analytic, emp.value, se));
        if x == 0.0 {
            let gamma = bias_gamma(cfg.sim.a.value())?;
            let target = if cfg.spectrally_positive { gamma } else { 1.0 - gamma };
            report
                .comparisons
                .insert("gamma_complement".into(), Comparison::new(target, emp.value, se));
        }
    }
    Ok(report)
}

/// Increment law probes: `E exp(lambda xi)` against `exp(lambda^a)` and
/// `P(xi >= 0)` against `1/a`, from `n_draws` standardized draws.
pub fn increment_calibration(cfg: &McConfig, lambdas: &[f64], n_draws: usize) -> Result<McReport> {
    cfg.validate()?;
    let sampler = IncrementSampler::new(cfg.sim.a, 1.0);
    const CHUNK: u64 = 1 << 16;
    let chunks = (n_draws as u64).div_ceil(CHUNK);
    let seed = cfg.sim.seed;
    let draws: Vec<Vec<f64>> = cfg.run(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(CALIBRATION_STREAM | c);
                let len = CHUNK.min(n_draws as u64 - c * CHUNK);
                (0..len).map(|_| sampler.standard(&mut rng)).collect()
            })
            .collect()
    })?;
    let xs: Vec<f64> = draws.into_iter().flatten().collect();
    let a = cfg.sim.a.value();
    let mut report = McReport::new(config_json(cfg), 0);
    for &lambda in lambdas {
        let e: Vec<f64> = xs.iter().map(|x| (lambda * x).exp()).collect();
        let est = Estimate::from_samples(&e);
        report.estimates.insert(format!("mgf_lambda{lambda}"), est);
        report.comparisons.insert(
            format!("mgf_lambda{lambda}"),
            Comparison::new(lambda.powf(a).exp(), est.value, est.se),
        );
    }
    let pos: Vec<f64> = xs.iter().map(|&x| indicator(x >= 0.0)).collect();
    let est = Estimate::from_samples(&pos);
    report.estimates.insert("p_nonnegative".into(), est);
    report
        .comparisons
        .insert("p_nonnegative".into(), Comparison::new(1.0 / a, est.value, est.se));
    Ok(report)
}

/// Sum of the per-path grid sizes, for cost reporting.
pub fn total_grid_points(samples: &PathSamples) -> u64 {
    samples.grid_points
}

/// Compensated mean of a slice, exposed for report consumers.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<CompensatedSum>().value() / xs.len() as f64
}
