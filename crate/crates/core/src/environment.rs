//! Grid paths of the two-sided spectrally negative stable environment with
//! `E exp(lambda w_t) = exp(t lambda^a)`.
//!
//! `w(s) = Y(s)` for `s >= 0` and `w(-s) = -Y~(s)` on the left, with `Y`, `Y~`
//! independent. Each side draws from its own ChaCha8 stream, so paths are
//! reproducible from `(seed, path index, retry)` alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrema::Sweep;
use crate::special::StabilityIndex;

/// Simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub a: StabilityIndex,
    /// Grid spacing.
    pub h: f64,
    pub seed: u64,
    /// Largest number of grid points generated on one side.
    pub max_side_length: usize,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl SimConfig {
    pub fn new(a: StabilityIndex) -> Self {
        Self {
            a,
            h: 1e-3,
            seed: DEFAULT_SEED,
            max_side_length: 100_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("grid step must be positive, got {}", self.h)));
        }
        if self.max_side_length == 0 {
            return Err(Error::Config("max_side_length must be positive".into()));
        }
        Ok(())
    }
}

/// How far each side is extended: until a sweep outward from the origin at
/// `level` has confirmed `firings` excursions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub level: f64,
    pub firings: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            level: 1.0,
            firings: 2,
        }
    }
}

/// Identifies the random stream of one path attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StreamId {
    pub path: u64,
    pub retry: u64,
}

impl StreamId {
    fn stream(self, side: u64) -> u64 {
        debug_assert!(self.path < 1 << 47 && self.retry < 1 << 16);
        (self.retry << 48) | (self.path << 1) | side
    }
}

/// Generator for `h^{1/a} xi`, where `E exp(lambda xi) = exp(lambda^a)` and
/// `xi` has no positive jumps.
///
/// Chambers–Mallows–Stuck with skewness -1. In that parametrization the
/// scale `|cos(pi a / 2)|^{1/a}` needed for this Laplace exponent cancels the
/// `|sec(pi a / 2)|^{1/a}` factor of the transform, leaving
/// `xi = sin(a (V + B)) / cos(V)^{1/a} (cos(V - a (V + B)) / E)^{(1-a)/a}`
/// with `B = pi/a - pi/2`, `V` uniform on `(-pi/2, pi/2)`, `E` standard exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementSampler {
    a: f64,
    shift: f64,
    scale: f64,
}

impl IncrementSampler {
    pub fn new(a: StabilityIndex, h: f64) -> Self {
        let a = a.value();
        Self {
            a,
            shift: std::f64::consts::PI / a - std::f64::consts::FRAC_PI_2,
            scale: h.powf(1.0 / a),
        }
    }

    /// One draw of the standardized variable `xi`.
    pub fn standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.a;
        loop {
            let v = std::f64::consts::PI * (rng.random::<f64>() - 0.5);
            let e = -(1.0 - rng.random::<f64>()).ln();
            let av = a * (v + self.shift);
            let xi = av.sin() / v.cos().powf(1.0 / a) * ((v - av).cos() / e).powf((1.0 - a) / a);
            if xi.is_finite() {
                return xi;
            }
        }
    }

    /// One increment over a grid step.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * self.standard(rng)
    }
}

/// One increment `w_h`, distributed as `h^{1/a} xi`.
pub fn sample_increment<R: Rng + ?Sized>(a: StabilityIndex, h: f64, rng: &mut R) -> f64 {
    IncrementSampler::new(a, h).sample(rng)
}

/// Random stream for one side of a path.
pub fn side_rng(seed: u64, id: StreamId, side: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id.stream(side));
    rng
}

/// A grid path with `w(0) = 0`, read as piecewise constant between points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentPath {
    h: f64,
    /// `w(-h), w(-2h), ...`
    left: Vec<f64>,
    /// `w(h), w(2h), ...`
    right: Vec<f64>,
}

impl EnvironmentPath {
    pub fn from_sides(h: f64, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("grid step must be positive, got {h}")));
        }
        Ok(Self { h, left, right })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// Number of grid points including the origin.
    pub fn len(&self) -> usize {
        self.left.len() + self.right.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values from the far left to the far right, and the index of the origin.
    pub fn combined(&self) -> (Vec<f64>, usize) {
        let mut out = Vec::with_capacity(self.len());
        out.extend(self.left.iter().rev());
        out.push(0.0);
        out.extend(&self.right);
        (out, self.left.len())
    }

    /// Position of combined index `i` given the origin index.
    pub fn position(&self, i: usize, origin: usize) -> f64 {
        (i as f64 - origin as f64) * self.h
    }

    /// Leftmost grid position and its value.
    pub fn left_end(&self) -> (f64, f64) {
        (-(self.left.len() as f64) * self.h, self.left.last().copied().unwrap_or(0.0))
    }

    /// Rightmost grid position and its value.
    pub fn right_end(&self) -> (f64, f64) {
        (self.right.len() as f64 * self.h, self.right.last().copied().unwrap_or(0.0))
    }

    /// `s -> w(-s)` on the grid; time reversal turns downward jumps into upward ones.
    pub fn reversed(&self) -> Self {
        Self {
            h: self.h,
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }

    /// `s -> -w(s)`.
    pub fn negated(&self) -> Self {
        Self {
            h: self.h,
            left: self.left.iter().map(|v| -v).collect(),
            right: self.right.iter().map(|v| -v).collect(),
        }
    }
}

fn grow_side(
    cfg: &SimConfig,
    stop: &StopRule,
    rng: &mut ChaCha8Rng,
    sign: f64,
) -> Result<Vec<f64>> {
    let sampler = IncrementSampler::new(cfg.a, cfg.h);
    let mut values = Vec::new();
    if stop.level <= 0.0 || stop.firings == 0 {
        values.push(sign * sampler.sample(rng));
        return Ok(values);
    }
    let mut sweep = Sweep::new(stop.level);
    sweep.push(0.0);
    let mut acc = 0.0;
    while sweep.firings() < stop.firings {
        if values.len() >= cfg.max_side_length {
            return Err(Error::CapExceeded {
                cap: cfg.max_side_length,
            });
        }
        acc += sampler.sample(rng);
        values.push(sign * acc);
        sweep.push(sign * acc);
    }
    Ok(values)
}

/// Path for stream `id`.
pub fn generate_path(cfg: &SimConfig, stop: &StopRule, id: StreamId) -> Result<EnvironmentPath> {
    cfg.validate()?;
    let right = grow_side(cfg, stop, &mut side_rng(cfg.seed, id, 0), 1.0)?;
    let left = grow_side(cfg, stop, &mut side_rng(cfg.seed, id, 1), -1.0)?;
    EnvironmentPath::from_sides(cfg.h, left, right)
}

/// Path 0 of the configured seed.
pub fn generate_two_sided(cfg: &SimConfig, stop: &StopRule) -> Result<EnvironmentPath> {
    generate_path(cfg, stop, StreamId::default())
}
