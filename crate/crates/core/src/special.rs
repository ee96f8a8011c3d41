//! Mittag-Leffler function, gamma-family helpers and the Riemann zeta function.
//!
//! `E_a(z) = sum_n z^n / Gamma(1 + a n)` is summed directly from its power
//! series. Coefficients are tabulated once per index so repeated evaluation at
//! many arguments costs one pass over the table.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;
use crate::quadrature::{integrate_with_breakpoints, QuadConfig};

/// Stability index `a` of the environment, restricted to `(1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StabilityIndex(f64);

impl StabilityIndex {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a > 1.0 && a <= 2.0 {
            Ok(Self(a))
        } else {
            Err(domain(format!("stability index must lie in (1, 2], got {a}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for StabilityIndex {
    type Error = Error;
    fn try_from(a: f64) -> Result<Self> {
        Self::new(a)
    }
}

impl From<StabilityIndex> for f64 {
    fn from(a: StabilityIndex) -> f64 {
        a.0
    }
}

impl fmt::Display for StabilityIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Summation controls for the Mittag-Leffler series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub rel_tolerance: f64,
    pub max_terms: usize,
    /// Largest accepted argument for nonnegative real `z`.
    pub domain_cap_real: f64,
    /// Largest accepted modulus for negative real or complex `z`.
    pub domain_cap_complex: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-15,
            max_terms: 400,
            domain_cap_real: 1e4,
            domain_cap_complex: 30.0,
        }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::Config("rel_tolerance must be positive".into()));
        }
        if self.max_terms < 10 {
            return Err(Error::Config("max_terms must be at least 10".into()));
        }
        if !(self.domain_cap_real > 0.0 && self.domain_cap_complex > 0.0) {
            return Err(Error::Config("domain caps must be positive".into()));
        }
        Ok(())
    }
}

/// `E_a(z)` together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlTriple {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl MlTriple {
    pub fn order(&self, order: usize) -> f64 {
        match order {
            0 => self.value,
            1 => self.d1,
            _ => self.d2,
        }
    }
}

// Terms are formed in log space beyond this magnitude.
const MAGNITUDE_GUARD: f64 = 1e300;

/// Tabulated Mittag-Leffler evaluator for a fixed index.
#[derive(Debug, Clone)]
pub struct MittagLeffler {
    a: f64,
    cfg: SeriesConfig,
    // 1 / Gamma(1 + a n), zero where it underflows.
    coef: Vec<f64>,
    // -ln Gamma(1 + a n).
    ln_coef: Vec<f64>,
}

impl MittagLeffler {
    pub fn new(a: f64, cfg: SeriesConfig) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(domain(format!("Mittag-Leffler index must be positive, got {a}")));
        }
        cfg.validate()?;
        let len = cfg.max_terms + 3;
        let mut coef = Vec::with_capacity(len);
        let mut ln_coef = Vec::with_capacity(len);
        for n in 0..len {
            let x = 1.0 + a * n as f64;
            let lg = statrs::function::gamma::ln_gamma(x);
            ln_coef.push(-lg);
            coef.push(if x < 170.0 { recip_gamma_by_recurrence(x) } else { (-lg).exp() });
        }
        Ok(Self { a, cfg, coef, ln_coef })
    }

    pub fn index(&self) -> f64 {
        self.a
    }

    pub fn config(&self) -> &SeriesConfig {
        &self.cfg
    }

    fn check_real(&self, z: f64) -> Result<()> {
        if !z.is_finite() {
            return Err(domain(format!("non-finite Mittag-Leffler argument {z}")));
        }
        let cap = if z >= 0.0 {
            self.cfg.domain_cap_real
        } else {
            self.cfg.domain_cap_complex
        };
        if z.abs() > cap {
            return Err(Error::DomainCapExceeded { modulus: z.abs(), cap });
        }
        Ok(())
    }

    /// `E_a^{(order)}(z)` for real `z`.
    pub fn eval(&self, z: f64, order: usize) -> Result<f64> {
        if order > 2 {
            return Err(domain(format!("derivative order must be 0, 1 or 2, got {order}")));
        }
        self.check_real(z)?;
        let mut acc = RealSeries::new(self, z, order);
        for n in order..self.coef.len() {
            if acc.push(n)? {
                return Ok(acc.sum.value());
            }
        }
        Err(Error::NonConvergence {
            what: "Mittag-Leffler series",
            iterations: self.cfg.max_terms,
        })
    }

    /// Value and first two derivatives at real `z`.
    pub fn eval_all(&self, z: f64) -> Result<MlTriple> {
        Ok(MlTriple {
            value: self.eval(z, 0)?,
            d1: self.eval(z, 1)?,
            d2: self.eval(z, 2)?,
        })
    }

    /// `E_a^{(order)}(z)` for complex `z` with `|z| <= domain_cap_complex`.
    pub fn eval_complex(&self, z: Complex64, order: usize) -> Result<Complex64> {
        if order > 2 {
            return Err(domain(format!("derivative order must be 0, 1 or 2, got {order}")));
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(domain("non-finite Mittag-Leffler argument"));
        }
        if z.im == 0.0 && z.re >= 0.0 {
            return self.eval(z.re, order).map(Complex64::from);
        }
        let modulus = z.norm();
        if modulus > self.cfg.domain_cap_complex {
            return Err(Error::DomainCapExceeded {
                modulus,
                cap: self.cfg.domain_cap_complex,
            });
        }
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        let ln_z = z.ln();
        let mut zpow = Complex64::new(1.0, 0.0);
        let mut prev = f64::INFINITY;
        for n in order..self.coef.len() {
            let k = n - order;
            if k > 0 {
                zpow *= z;
            }
            let ff = falling(n, order);
            let term = if self.coef[n] > 0.0 && zpow.norm() < MAGNITUDE_GUARD {
                zpow * (ff * self.coef[n])
            } else {
                (ln_z * k as f64 + (ff.ln() + self.ln_coef[n])).exp()
            };
            re.add(term.re);
            im.add(term.im);
            let mag = term.norm();
            let total = Complex64::new(re.value(), im.value()).norm();
            if modulus == 0.0 || (k > 0 && mag <= self.cfg.rel_tolerance * total && mag <= prev) {
                return Ok(Complex64::new(re.value(), im.value()));
            }
            prev = mag;
        }
        Err(Error::NonConvergence {
            what: "complex Mittag-Leffler series",
            iterations: self.cfg.max_terms,
        })
    }
}

struct RealSeries<'a> {
    ml: &'a MittagLeffler,
    z: f64,
    order: usize,
    sum: CompensatedSum,
    zpow: f64,
    log_mode: bool,
    prev: f64,
}

impl<'a> RealSeries<'a> {
    fn new(ml: &'a MittagLeffler, z: f64, order: usize) -> Self {
        Self {
            ml,
            z,
            order,
            sum: CompensatedSum::new(),
            zpow: 1.0,
            log_mode: false,
            prev: f64::INFINITY,
        }
    }

    // Adds term `n`; returns true once the series has converged.
    fn push(&mut self, n: usize) -> Result<bool> {
        let k = n - self.order;
        let ff = falling(n, self.order);
        if k > 0 && !self.log_mode {
            self.zpow *= self.z;
        }
        if !self.log_mode && (self.zpow.abs() > MAGNITUDE_GUARD || self.ml.coef[n] == 0.0) {
            self.log_mode = true;
        }
        let term = if self.log_mode {
            let ln_mag = ff.ln() + self.ml.ln_coef[n] + k as f64 * self.z.abs().ln();
            if ln_mag > 709.0 {
                return Err(Error::Overflow("Mittag-Leffler series term"));
            }
            let sign = if self.z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            sign * ln_mag.exp()
        } else {
            ff * self.ml.coef[n] * self.zpow
        };
        self.sum.add(term);
        let total = self.sum.value();
        if !total.is_finite() {
            return Err(Error::Overflow("Mittag-Leffler series"));
        }
        if self.z == 0.0 {
            return Ok(true);
        }
        let mag = term.abs();
        let done = k > 0 && mag <= self.ml.cfg.rel_tolerance * total.abs() && mag <= self.prev;
        self.prev = mag;
        Ok(done)
    }
}

#[inline]
fn falling(n: usize, order: usize) -> f64 {
    match order {
        0 => 1.0,
        1 => n as f64,
        _ => (n * (n - 1)) as f64,
    }
}

// 1/Gamma(x) for 1 <= x < 170 from Gamma on [1, 2) and the upward recurrence.
fn recip_gamma_by_recurrence(x: f64) -> f64 {
    let k = x.floor();
    let r = x - k + 1.0;
    let mut g = if r == 1.0 {
        1.0
    } else {
        statrs::function::gamma::gamma(r)
    };
    let mut y = r;
    while y + 0.5 < x {
        g *= y;
        y += 1.0;
    }
    1.0 / g
}

/// One-shot evaluation of `E_a^{(order)}(z)` for real `z`.
pub fn mittag_leffler(a: f64, z: f64, order: usize, cfg: &SeriesConfig) -> Result<f64> {
    MittagLeffler::new(a, *cfg)?.eval(z, order)
}

/// One-shot evaluation of `E_a^{(order)}(z)` for complex `z`.
pub fn mittag_leffler_complex(
    a: f64,
    z: Complex64,
    order: usize,
    cfg: &SeriesConfig,
) -> Result<Complex64> {
    MittagLeffler::new(a, *cfg)?.eval_complex(z, order)
}

/// Decomposition `E_a^{(m)}(z) = X^{(m)}(z) + R^{(m)}(z)` on `z > 0` for `1 < a <= 2`.
///
/// `X(z) = exp(z^{1/a}) / a` carries all of the exponential growth. For `a < 2`
/// the remainder is the contour integral
/// `R(z) = -(sin(pi a) / (a pi)) int_0^inf e^{-r^{1/a}} z / (r^2 - 2 r z cos(pi a) + z^2) dr`;
/// at `a = 2` it is `exp(-sqrt z) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlSplit {
    pub dominant: MlTriple,
    pub remainder: MlTriple,
}

impl MlSplit {
    pub fn total(&self) -> MlTriple {
        MlTriple {
            value: self.dominant.value + self.remainder.value,
            d1: self.dominant.d1 + self.remainder.d1,
            d2: self.dominant.d2 + self.remainder.d2,
        }
    }
}

/// Computes the [`MlSplit`] of `E_a` at `z`.
pub fn mittag_leffler_split(a: f64, z: f64) -> Result<MlSplit> {
    if !(a > 1.0 && a <= 2.0) {
        return Err(domain(format!("split representation needs a in (1, 2], got {a}")));
    }
    if !(z.is_finite() && z > 0.0) {
        return Err(domain(format!("split representation needs z > 0, got {z}")));
    }
    let s = z.powf(1.0 / a);
    if s > 700.0 {
        return Err(Error::Overflow("dominant Mittag-Leffler term"));
    }
    let s1 = s / (a * z);
    let s2 = s1 * (1.0 / a - 1.0) / z;
    let x = s.exp() / a;
    let dominant = MlTriple {
        value: x,
        d1: x * s1,
        d2: x * (s1 * s1 + s2),
    };
    let remainder = if a == 2.0 {
        let y = 0.5 * (-s).exp();
        MlTriple {
            value: y,
            d1: -y * s1,
            d2: y * (s1 * s1 - s2),
        }
    } else {
        MlTriple {
            value: split_remainder(a, z, 0)?,
            d1: split_remainder(a, z, 1)?,
            d2: split_remainder(a, z, 2)?,
        }
    };
    Ok(MlSplit { dominant, remainder })
}

// z-derivatives of the contour remainder, integrated in rho = r^{1/a}.
fn split_remainder(a: f64, z: f64, order: usize) -> Result<f64> {
    let pi_a = std::f64::consts::PI * a;
    let c = pi_a.cos();
    let pref = -pi_a.sin() / pi_a;
    // 1 - cos(pi a), written to keep the denominator accurate near a = 2.
    let one_minus_c = 2.0 * (0.5 * pi_a).sin().powi(2);
    let kernel = |rho: f64| -> Result<f64> {
        let r = rho.powf(a);
        let diff = r - z;
        let d = diff * diff + 2.0 * r * z * one_minus_c;
        let g = match order {
            0 => z / d,
            1 => diff * (r + z) / (d * d),
            _ => {
                let dd = -2.0 * diff + 2.0 * r * one_minus_c;
                (-2.0 * z * d - 2.0 * diff * (r + z) * dd) / (d * d * d)
            }
        };
        Ok(pref * a * rho.powf(a - 1.0) * (-rho).exp() * g)
    };
    let rho_max = 60.0_f64.max(2.0 * z.powf(1.0 / a));
    // Near a = 2 the kernel peaks sharply around r = z |cos(pi a)|, with width
    // proportional to |sin(pi a)|.
    let width = pi_a.sin().abs();
    let mut points = vec![0.0, 1.0, 10.0, rho_max];
    for r in [z * c.abs(), z] {
        for k in [-10.0, -1.0, 0.0, 1.0, 10.0] {
            let rr = r * (1.0 + k * width);
            if rr > 0.0 {
                points.push(rr.powf(1.0 / a));
            }
        }
    }
    points.retain(|p| *p >= 0.0 && *p <= rho_max);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let l1 = integrate_with_breakpoints(
        |rho| kernel(rho).map(f64::abs),
        &points,
        &QuadConfig::relative(1e-6, 0.0),
    )?
    .value;
    let cfg = QuadConfig {
        abs_tol: 1e-13 * l1,
        rel_tol: 1e-13,
        max_subdivisions: 10_000,
    };
    Ok(integrate_with_breakpoints(kernel, &points, &cfg)?.value)
}

/// `ln Gamma(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(domain(format!("log_gamma needs x > 0, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// `Gamma(x)` for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(domain(format!("gamma needs x > 0, got {x}")));
    }
    if x < 1.0 {
        Ok(1.0 / (recip_gamma_by_recurrence(x + 1.0) * x))
    } else if x < 170.0 {
        Ok(1.0 / recip_gamma_by_recurrence(x))
    } else {
        let v = log_gamma(x)?.exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow("gamma"))
        }
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = Gamma(a, x) / Gamma(a)`.
pub fn regularized_upper_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(domain(format!("regularized_upper_gamma needs a > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(domain(format!("regularized_upper_gamma needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    statrs::function::gamma::checked_gamma_ur(a, x)
        .map_err(|e| domain(format!("regularized_upper_gamma({a}, {x}): {e}")))
}

/// Riemann zeta function for real `s > 0`, `s != 1`.
///
/// Evaluated through the alternating eta series with Borwein's acceleration.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) || s == 1.0 {
        return Err(domain(format!("zeta implemented for s > 0, s != 1; got {s}")));
    }
    const N: usize = 40;
    let mut d = [0.0f64; N + 1];
    let mut term = 1.0 / N as f64;
    let mut acc = term;
    d[0] = N as f64 * acc;
    for i in 0..N {
        let fi = i as f64;
        let n = N as f64;
        term *= 4.0 * (n + fi) * (n - fi) / ((2.0 * fi + 1.0) * (2.0 * fi + 2.0));
        acc += term;
        d[i + 1] = n * acc;
    }
    let mut sum = CompensatedSum::new();
    for (k, dk) in d.iter().take(N).enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(sign * (dk - d[N]) / ((k + 1) as f64).powf(s));
    }
    let eta = -sum.value() / d[N];
    Ok(eta / (1.0 - 2f64.powf(1.0 - s)))
}
