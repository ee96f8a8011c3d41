//! Density and distribution function of `b_1`.
//!
//! With `c = (a-1) Gamma(a)`, the density is `c (1 - F_u(-x))` for `x <= 0` and
//! `c (1 - F_d(x))` for `x > 0`, where `F_u`, `F_d` are the 1-slope length laws.
//! Both sides are recovered by Gaver–Stehfest inversion of the slope transforms.

use serde::{Deserialize, Serialize};

use super::{slope_length_lt, slope_length_mean, slope_length_mgf, SlopeKind};
use crate::error::{domain, Error, Result};
use crate::inversion::{gaver_stehfest, invert_cdf, InversionConfig};
use crate::quadrature::{integrate_with_breakpoints, QuadConfig};
use crate::scale::ScaleContext;

const THETA_STEP: f64 = 0.05;
// Grid points closest to the first pole are dropped from the Chernoff search.
const THETA_GUARD: usize = 2;

/// Outcome of integrating the density over `[-L, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassCheck {
    pub truncation: f64,
    pub integral: f64,
    pub quadrature_error: f64,
    /// Upper bound on the mass outside `[-L, L]`.
    pub tail_bound: f64,
    pub total: f64,
}

/// The law of `b_1` for one stability index.
#[derive(Debug, Clone)]
pub struct B1Law {
    ctx: ScaleContext,
    inv: InversionConfig,
    c: f64,
    mean_up: f64,
    mean_down: f64,
    // Slope CDFs at t_min, for the linear continuation below it.
    f_min_up: f64,
    f_min_down: f64,
}

impl B1Law {
    pub fn new(ctx: ScaleContext, inv: InversionConfig) -> Result<Self> {
        inv.validate()?;
        let a = ctx.index().value();
        let c = (a - 1.0) * crate::special::gamma(a)?;
        let mean_up = slope_length_mean(&ctx, SlopeKind::Upward)?;
        let mean_down = slope_length_mean(&ctx, SlopeKind::Downward)?;
        let mut law = Self {
            ctx,
            inv,
            c,
            mean_up,
            mean_down,
            f_min_up: 0.0,
            f_min_down: 0.0,
        };
        law.f_min_up = law.invert_slope_cdf(SlopeKind::Upward, inv.t_min)?;
        law.f_min_down = law.invert_slope_cdf(SlopeKind::Downward, inv.t_min)?;
        Ok(law)
    }

    pub fn with_index(a: f64) -> Result<Self> {
        Self::new(ScaleContext::with_index(a)?, InversionConfig::default())
    }

    pub fn context(&self) -> &ScaleContext {
        &self.ctx
    }

    pub fn inversion(&self) -> &InversionConfig {
        &self.inv
    }

    /// Density at the origin, `(a-1) Gamma(a)`.
    pub fn density_at_zero(&self) -> f64 {
        self.c
    }

    /// `P(b_1 < 0) = c E l_up`.
    pub fn left_mass(&self) -> f64 {
        self.c * self.mean_up
    }

    pub fn slope_mean(&self, kind: SlopeKind) -> f64 {
        match kind {
            SlopeKind::Upward => self.mean_up,
            SlopeKind::Downward => self.mean_down,
        }
    }

    fn f_min(&self, kind: SlopeKind) -> f64 {
        match kind {
            SlopeKind::Upward => self.f_min_up,
            SlopeKind::Downward => self.f_min_down,
        }
    }

    fn invert_slope_cdf(&self, kind: SlopeKind, t: f64) -> Result<f64> {
        invert_cdf(&|u: f64| slope_length_lt(&self.ctx, kind, u), t, &self.inv)
    }

    fn check_upper(&self, t: f64) -> Result<()> {
        if t > self.inv.t_max * (1.0 + 1e-12) {
            return Err(Error::OutOfRange {
                what: "slope length",
                value: t,
                min: 0.0,
                max: self.inv.t_max,
            });
        }
        Ok(())
    }

    /// `F(t)` of the 1-slope length; linear between 0 and `t_min`.
    pub fn slope_cdf(&self, kind: SlopeKind, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(domain("slope length is NaN"));
        }
        if t <= 0.0 {
            return Ok(0.0);
        }
        self.check_upper(t)?;
        if t < self.inv.t_min {
            return Ok(self.f_min(kind) * t / self.inv.t_min);
        }
        self.invert_slope_cdf(kind, t)
    }

    /// `int_0^s (1 - F(t)) dt`, inverted from `(1 - f̂(lambda)) / lambda^2`.
    pub fn integrated_tail(&self, kind: SlopeKind, s: f64) -> Result<f64> {
        if s.is_nan() {
            return Err(domain("slope length is NaN"));
        }
        if s <= 0.0 {
            return Ok(0.0);
        }
        self.check_upper(s)?;
        let t_min = self.inv.t_min;
        if s < t_min {
            return Ok(s - self.f_min(kind) * s * s / (2.0 * t_min));
        }
        let transform = |u: f64| Ok(-(slope_length_lt(&self.ctx, kind, u)? - 1.0) / (u * u));
        let g = gaver_stehfest(&transform, s, &self.inv)?;
        Ok(g.clamp(0.0, s.min(self.slope_mean(kind))))
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        let (kind, t) = if x <= 0.0 {
            (SlopeKind::Upward, -x)
        } else {
            (SlopeKind::Downward, x)
        };
        Ok(self.c * (1.0 - self.slope_cdf(kind, t)?))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(domain("cdf argument is NaN"));
        }
        let value = if x <= 0.0 {
            self.c * (self.mean_up - self.integrated_tail(SlopeKind::Upward, -x)?)
        } else {
            self.left_mass() + self.c * self.integrated_tail(SlopeKind::Downward, x)?
        };
        Ok(value.clamp(0.0, 1.0))
    }

    /// Chernoff bound on `int_L^inf (1 - F(s)) ds`, minimized over a `theta`
    /// grid below the first singularity of the moment generating function.
    pub fn tail_bound(&self, kind: SlopeKind, l: f64) -> Result<f64> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(domain(format!("tail truncation must be positive, got {l}")));
        }
        let mut values = Vec::new();
        let mut prev = 1.0;
        for i in 1.. {
            let theta = THETA_STEP * i as f64;
            match slope_length_mgf(&self.ctx, kind, theta) {
                Ok(m) if m.is_finite() && m > prev => {
                    values.push((theta, m));
                    prev = m;
                }
                _ => break,
            }
        }
        let usable = values.len().saturating_sub(THETA_GUARD);
        values[..usable]
            .iter()
            .map(|&(theta, m)| m * (-theta * l).exp() / theta)
            .min_by(f64::total_cmp)
            .ok_or(Error::NonConvergence {
                what: "moment generating function grid",
                iterations: values.len(),
            })
    }

    /// Integrates the density over `[-L, L]` and adds the tail bounds of both sides.
    pub fn mass_check(&self, l: f64) -> Result<MassCheck> {
        self.check_upper(l)?;
        let t_min = self.inv.t_min;
        if l <= t_min {
            return Err(domain(format!("truncation must exceed t_min = {t_min}, got {l}")));
        }
        let points = [-l, -t_min, 0.0, t_min, l];
        let q = integrate_with_breakpoints(
            |x| self.density(x),
            &points,
            &QuadConfig::absolute(1e-6),
        )?;
        let tail = self.c
            * (self.tail_bound(SlopeKind::Upward, l)? + self.tail_bound(SlopeKind::Downward, l)?);
        Ok(MassCheck {
            truncation: l,
            integral: q.value,
            quadrature_error: q.error,
            tail_bound: tail,
            total: q.value + tail,
        })
    }
}

/// Density of `b_1` at `x`; builds a fresh [`B1Law`] per call.
pub fn density_b1(ctx: &ScaleContext, x: f64, inv: &InversionConfig) -> Result<f64> {
    B1Law::new(ctx.clone(), *inv)?.density(x)
}

/// Distribution function of `b_1` at `x`; builds a fresh [`B1Law`] per call.
pub fn cdf_b1(ctx: &ScaleContext, x: f64, inv: &InversionConfig) -> Result<f64> {
    B1Law::new(ctx.clone(), *inv)?.cdf(x)
}
