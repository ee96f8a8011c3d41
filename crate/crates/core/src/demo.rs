//! Random walk in a simulated environment, for qualitative checks only.
//!
//! The chain on sites `i h` steps right with probability
//! `p_i = 1 / (1 + exp(w_{i+1} - w_i))`, so the odds `q_i / p_i` telescope to
//! `exp(w)`. Walls at both ends of the path reflect the walker, and every
//! wall hit is counted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{generate_path, EnvironmentPath, IncrementSampler, SimConfig, StopRule, StreamId, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::extrema::compute_b;
use crate::fluctuation::bias_gamma;
use crate::numeric::mean_and_se;
use crate::special::StabilityIndex;

const FLAT_STREAM: u64 = 1 << 60;
const VALLEY_STREAM: u64 = 1 << 59;
const WALK_STREAM: u64 = 1 << 58;

#[derive(Debug, Clone, PartialEq)]
pub struct RwreChain {
    h: f64,
    origin: usize,
    p_right: Vec<f64>,
    p_left: Vec<f64>,
}

impl RwreChain {
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Physical time of one step.
    pub fn step_time(&self) -> f64 {
        self.h * self.h
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn sites(&self) -> usize {
        self.p_right.len()
    }

    pub fn p_right(&self) -> &[f64] {
        &self.p_right
    }

    pub fn position(&self, site: usize) -> f64 {
        (site as f64 - self.origin as f64) * self.h
    }

    /// `prod_{j < i} q_j / p_j` from the leftmost site, which equals `exp(w_i - w_0)`.
    pub fn scale_product(&self, i: usize) -> f64 {
        self.p_left[..i]
            .iter()
            .zip(&self.p_right)
            .map(|(q, p)| q / p)
            .product()
    }
}

/// Chain on the grid of `path`.
pub fn build_chain(path: &EnvironmentPath) -> RwreChain {
    let (w, origin) = path.combined();
    let mut p_right = Vec::with_capacity(w.len());
    let mut p_left = Vec::with_capacity(w.len());
    for pair in w.windows(2) {
        let d = pair[1] - pair[0];
        p_right.push(1.0 / (1.0 + d.exp()));
        p_left.push(1.0 / (1.0 + (-d).exp()));
    }
    // The last site only reflects.
    p_right.push(0.0);
    p_left.push(1.0);
    RwreChain {
        h: path.h(),
        origin,
        p_right,
        p_left,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub time: f64,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    /// Positions after `1, 2, 4, ...` steps and after the last step.
    pub checkpoints: Vec<Checkpoint>,
    pub final_position: f64,
    pub wall_hits: u64,
    /// Most visited position.
    pub mode_position: f64,
}

/// Runs `n_steps` steps from the origin.
pub fn run_walk<R: Rng + ?Sized>(chain: &RwreChain, n_steps: u64, rng: &mut R) -> WalkSummary {
    let last = chain.sites() - 1;
    let mut site = chain.origin;
    let mut visits = vec![0u32; chain.sites()];
    let mut wall_hits = 0;
    let mut checkpoints = Vec::new();
    let mut next_checkpoint = 1;
    for step in 1..=n_steps {
        if site == 0 || site == last {
            wall_hits += 1;
        }
        if site == 0 {
            site = 1;
        } else if rng.random::<f64>() < chain.p_right[site] {
            site += 1;
        } else {
            site -= 1;
        }
        visits[site] = visits[site].saturating_add(1);
        if step == next_checkpoint || step == n_steps {
            checkpoints.push(Checkpoint {
                step,
                time: step as f64 * chain.step_time(),
                position: chain.position(site),
            });
            next_checkpoint *= 2;
        }
    }
    let mode = visits
        .iter()
        .enumerate()
        .max_by_key(|&(i, &v)| (v, std::cmp::Reverse(i)))
        .map_or(chain.origin, |(i, _)| i);
    WalkSummary {
        checkpoints,
        final_position: chain.position(site),
        wall_hits,
        mode_position: chain.position(mode),
    }
}

fn walk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub a: StabilityIndex,
    pub n_steps: u64,
    pub n_envs: usize,
    pub seed: u64,
    /// Barrier height of the simulated environment, in units of `ln n_steps`.
    pub barrier_factor: f64,
    pub threads: Option<usize>,
}

impl DemoConfig {
    pub fn new(a: StabilityIndex) -> Self {
        Self {
            a,
            n_steps: 1_000_000,
            n_envs: 500,
            seed: DEFAULT_SEED,
            barrier_factor: 2.0,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 || self.n_envs == 0 {
            return Err(Error::Config("need n_steps >= 2 and n_envs >= 1".into()));
        }
        if !(self.barrier_factor > 0.0 && self.barrier_factor.is_finite()) {
            return Err(Error::Config(format!(
                "barrier_factor must be positive, got {}",
                self.barrier_factor
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// `ln n_steps`, the scale at which the walker sees the environment.
    pub fn valley_level(&self) -> f64 {
        (self.n_steps as f64).ln()
    }
}

/// Environment number `env` on the unit lattice, extended until extrema of
/// height `barrier_factor ln n_steps` confine the origin on both sides.
pub fn lattice_environment(cfg: &DemoConfig, env: u64) -> Result<EnvironmentPath> {
    let sim = SimConfig {
        h: 1.0,
        seed: cfg.seed,
        ..SimConfig::new(cfg.a)
    };
    let stop = StopRule {
        level: cfg.barrier_factor * cfg.valley_level(),
        firings: 4,
    };
    generate_path(&sim, &stop, StreamId { path: env, retry: 0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentWalk {
    pub env: u64,
    /// `b_x` of the environment at `x = ln n_steps`.
    pub b: f64,
    pub summary: WalkSummary,
}

/// One walk per environment.
pub fn walk_environments(cfg: &DemoConfig) -> Result<Vec<EnvironmentWalk>> {
    cfg.validate()?;
    let job = || {
        (0..cfg.n_envs as u64)
            .into_par_iter()
            .map(|env| {
                let path = lattice_environment(cfg, env)?;
                let b = compute_b(&path, cfg.valley_level())?;
                let chain = build_chain(&path);
                let summary = run_walk(&chain, cfg.n_steps, &mut walk_rng(cfg.seed, WALK_STREAM | env));
                Ok(EnvironmentWalk { env, b, summary })
            })
            .collect::<Result<Vec<_>>>()
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(job),
        None => job(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeftFraction {
    pub fraction: f64,
    pub se: f64,
    /// Limit value `gamma(a)`.
    pub gamma: f64,
    /// Walkers ending on the same side of the origin as `b`.
    pub same_side_as_b: f64,
    pub wall_hits: u64,
    pub n_envs: usize,
}

pub fn left_fraction(walks: &[EnvironmentWalk], a: StabilityIndex) -> Result<LeftFraction> {
    if walks.is_empty() {
        return Err(Error::InsufficientPool("no walks"));
    }
    let left: Vec<f64> = walks
        .iter()
        .map(|w| f64::from(u8::from(w.summary.final_position < 0.0)))
        .collect();
    let (fraction, se) = mean_and_se(&left);
    let same = walks
        .iter()
        .filter(|w| (w.summary.final_position < 0.0) == (w.b < 0.0))
        .count();
    Ok(LeftFraction {
        fraction,
        se,
        gamma: bias_gamma(a.value())?,
        same_side_as_b: same as f64 / walks.len() as f64,
        wall_hits: walks.iter().map(|w| w.summary.wall_hits).sum(),
        n_envs: walks.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatCheck {
    /// Every transition probability equals one half.
    pub exact_half: bool,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    /// `n_steps h^2`.
    pub expected_variance: f64,
    pub wall_hits: u64,
}

impl FlatCheck {
    pub fn passed(&self, sigmas: f64) -> bool {
        self.exact_half
            && self.wall_hits == 0
            && self.mean.abs() <= sigmas * self.mean_se
            && (self.variance - self.expected_variance).abs() <= sigmas * self.variance_se
    }
}

/// Walks in `w = 0` with spacing `h`.
pub fn flat_check(n_walks: usize, n_steps: u64, h: f64, seed: u64) -> Result<FlatCheck> {
    if n_walks < 2 {
        return Err(Error::Config("flat check needs two or more walks".into()));
    }
    let half = (4.0 * (n_steps as f64).sqrt()).ceil() as usize + 8;
    let path = EnvironmentPath::from_sides(h, vec![0.0; half], vec![0.0; half])?;
    let chain = build_chain(&path);
    let last = chain.sites() - 1;
    let exact_half = chain.p_right[..last].iter().all(|&p| p == 0.5);
    let summaries: Vec<WalkSummary> = (0..n_walks as u64)
        .into_par_iter()
        .map(|k| run_walk(&chain, n_steps, &mut walk_rng(seed, FLAT_STREAM | k)))
        .collect();
    let end: Vec<f64> = summaries.iter().map(|s| s.final_position).collect();
    let (mean, mean_se) = mean_and_se(&end);
    let sq: Vec<f64> = end.iter().map(|x| x * x).collect();
    let (variance, variance_se) = mean_and_se(&sq);
    Ok(FlatCheck {
        exact_half,
        mean,
        mean_se,
        variance,
        variance_se,
        expected_variance: n_steps as f64 * h * h,
        wall_hits: summaries.iter().map(|s| s.wall_hits).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValleyCheck {
    pub runs: usize,
    /// Runs whose most visited site lies within the valley floor.
    pub localized: usize,
}

/// A V-shaped potential with bottom at `+20`, slope `0.5` per site and
/// independent site roughness `0.2 clamp(xi, -1, 1)` with `xi` of index 1.5,
/// started from the origin.
pub fn valley_check(runs: usize, n_steps: u64, seed: u64) -> Result<ValleyCheck> {
    const CENTER: f64 = 20.0;
    const HALF_WIDTH: usize = 200;
    let sampler = IncrementSampler::new(StabilityIndex::new(1.5)?, 1.0);
    let localized = (0..runs as u64)
        .into_par_iter()
        .map(|k| -> Result<bool> {
            let mut rng = walk_rng(seed, VALLEY_STREAM | k);
            let mut rough = |side: f64| -> Vec<f64> {
                (0..HALF_WIDTH)
                    .map(|i| {
                        let x = side * (i as f64 + 1.0);
                        0.5 * (x - CENTER).abs() - 0.5 * CENTER + 0.2 * sampler.sample(&mut rng).clamp(-1.0, 1.0)
                    })
                    .collect()
            };
            let right = rough(1.0);
            let left = rough(-1.0);
            let chain = build_chain(&EnvironmentPath::from_sides(1.0, left, right)?);
            let s = run_walk(&chain, n_steps, &mut rng);
            Ok((s.mode_position - CENTER).abs() <= 5.0)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&hit| hit)
        .count();
    Ok(ValleyCheck { runs, localized })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_environment_is_symmetric() {
        let path = EnvironmentPath::from_sides(0.1, vec![0.0; 5], vec![0.0; 5]).unwrap();
        let chain = build_chain(&path);
        assert!(chain.p_right()[..10].iter().all(|&p| p == 0.5));
        assert_eq!(chain.step_time(), 0.1 * 0.1);
        let c = flat_check(2000, 4096, 0.01, 7).unwrap();
        assert!(c.passed(3.0), "{c:?}");
    }

    #[test]
    fn linear_drift_probabilities() {
        let delta = 0.3;
        let right: Vec<f64> = (1..=10).map(|i| delta * i as f64).collect();
        let left: Vec<f64> = (1..=10).map(|i| -delta * i as f64).collect();
        let chain = build_chain(&EnvironmentPath::from_sides(1.0, left, right).unwrap());
        let want = 1.0 / (1.0 + delta.exp());
        assert!(chain.p_right()[..20].iter().all(|&p| (p - want).abs() < 1e-15));
        assert!(want < 0.5);
    }

    #[test]
    fn odds_telescope_to_exp_w() {
        let sim = SimConfig {
            h: 1e-2,
            ..SimConfig::new(StabilityIndex::new(2.0).unwrap())
        };
        let path = generate_path(&sim, &StopRule { level: 1.0, firings: 3 }, StreamId::default()).unwrap();
        let chain = build_chain(&path);
        let (w, _) = path.combined();
        for i in (0..w.len()).step_by(7) {
            let want = (w[i] - w[0]).exp();
            let got = chain.scale_product(i);
            assert!((got / want - 1.0).abs() < 1e-12, "i={i}");
        }
    }

    #[test]
    fn walls_reflect_and_are_counted() {
        let path = EnvironmentPath::from_sides(1.0, vec![0.0; 2], vec![0.0; 2]).unwrap();
        let chain = build_chain(&path);
        let s = run_walk(&chain, 1000, &mut walk_rng(1, 0));
        assert!(s.wall_hits > 0);
        assert!(s.checkpoints.iter().all(|c| c.position.abs() <= 2.0));
        let steps: Vec<u64> = s.checkpoints.iter().map(|c| c.step).collect();
        assert_eq!(steps, [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1000]);
    }

    #[test]
    fn walker_settles_in_valley() {
        let c = valley_check(20, 20_000, 3).unwrap();
        assert!(c.localized >= 19, "{c:?}");
    }

    #[test]
    fn environment_walks_are_reproducible() {
        let mut cfg = DemoConfig::new(StabilityIndex::new(1.5).unwrap());
        cfg.n_steps = 10_000;
        cfg.n_envs = 8;
        let one = walk_environments(&cfg).unwrap();
        assert_eq!(one, walk_environments(&cfg).unwrap());
        let lf = left_fraction(&one, cfg.a).unwrap();
        assert_eq!(lf.n_envs, 8);
        assert!((lf.gamma - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
    }
}
