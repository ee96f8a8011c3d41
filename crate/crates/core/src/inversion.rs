//! Gaver–Stehfest inversion of Laplace transforms sampled on the positive
//! real axis.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// A one-argument map `lambda -> f̂(lambda)` to be inverted.
pub trait LaplaceTransform {
    fn eval(&self, lambda: f64) -> Result<f64>;
}

impl<F> LaplaceTransform for F
where
    F: Fn(f64) -> Result<f64>,
{
    fn eval(&self, lambda: f64) -> Result<f64> {
        self(lambda)
    }
}

/// Gaver–Stehfest controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub n_terms: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            n_terms: 16,
            t_min: 0.05,
            t_max: 50.0,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_terms % 2 != 0 || !(8..=20).contains(&self.n_terms) {
            return Err(Error::Config(format!(
                "n_terms must be even and in [8, 20], got {}",
                self.n_terms
            )));
        }
        if !(self.t_min > 0.0 && self.t_min < self.t_max && self.t_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    /// Largest transform argument sampled by an inversion at `t_min`.
    pub fn lambda_max(&self) -> f64 {
        self.n_terms as f64 * std::f64::consts::LN_2 / self.t_min
    }

    fn check_t(&self, t: f64) -> Result<()> {
        self.validate()?;
        let slack = 1e-12 * self.t_max;
        if !(t >= self.t_min - slack && t <= self.t_max + slack) {
            return Err(Error::OutOfRange {
                what: "inversion time",
                value: t,
                min: self.t_min,
                max: self.t_max,
            });
        }
        Ok(())
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn compute_weights(n: usize) -> Vec<f64> {
    let h = n / 2;
    (1..=n)
        .map(|k| {
            let mut sum = CompensatedSum::new();
            for j in k.div_ceil(2)..=k.min(h) {
                let num = (j as u128).pow(h as u32) * factorial(2 * j);
                let den = factorial(h - j)
                    * factorial(j)
                    * factorial(j - 1)
                    * factorial(k - j)
                    * factorial(2 * j - k);
                // Both fit in u128 for n <= 20; the quotient is formed in f64.
                sum.add(num as f64 / den as f64);
            }
            let sign = if (k + h) % 2 == 0 { 1.0 } else { -1.0 };
            sign * sum.value()
        })
        .collect()
}

/// Stehfest weights `V_1..V_n` for even `n` in `[8, 20]`, computed once.
pub fn stehfest_weights(n: usize) -> Result<&'static [f64]> {
    static TABLES: [OnceLock<Vec<f64>>; 7] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    if n % 2 != 0 || !(8..=20).contains(&n) {
        return Err(Error::Config(format!("no Stehfest table for n = {n}")));
    }
    Ok(TABLES[(n - 8) / 2].get_or_init(|| compute_weights(n)))
}

/// `f(t) ≈ (ln 2 / t) sum_k V_k f̂(k ln 2 / t)`.
pub fn gaver_stehfest<L: LaplaceTransform + ?Sized>(
    transform: &L,
    t: f64,
    cfg: &InversionConfig,
) -> Result<f64> {
    cfg.check_t(t)?;
    let weights = stehfest_weights(cfg.n_terms)?;
    let step = std::f64::consts::LN_2 / t;
    let mut sum = CompensatedSum::new();
    for (k, v) in weights.iter().enumerate() {
        let value = transform.eval((k + 1) as f64 * step)?;
        if !value.is_finite() {
            return Err(Error::Domain(format!(
                "transform is not finite at lambda = {}",
                (k + 1) as f64 * step
            )));
        }
        sum.add(v * value);
    }
    Ok(step * sum.value())
}

/// CDF at `t` of the law whose transform is `f̂`, via the transform `f̂(λ)/λ`,
/// clamped to `[0, 1]`.
pub fn invert_cdf<L: LaplaceTransform + ?Sized>(
    density_transform: &L,
    t: f64,
    cfg: &InversionConfig,
) -> Result<f64> {
    let cdf = gaver_stehfest(
        &|lambda: f64| Ok(density_transform.eval(lambda)? / lambda),
        t,
        cfg,
    )?;
    Ok(cdf.clamp(0.0, 1.0))
}

/// Density with transform `1 / cosh(sqrt(lambda))` by its residue series,
/// `pi sum_{n=0}^{terms} (-1)^n (2n+1) exp(-(2n+1)^2 pi^2 t / 4)`.
pub fn kesten_oracle_density(t: f64, terms: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let mut sum = CompensatedSum::new();
    for n in 0..=terms {
        let m = (2 * n + 1) as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(sign * m * (-m * m * pi * pi * t / 4.0).exp());
    }
    pi * sum.value()
}

/// Magnitude of the first omitted term of [`kesten_oracle_density`].
pub fn kesten_oracle_truncation(t: f64, terms: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let m = (2 * terms + 3) as f64;
    pi * m * (-m * m * pi * pi * t / 4.0).exp()
}

/// CDF of the same law, `1 - (4/pi) sum (-1)^n exp(-(2n+1)^2 pi^2 t / 4) / (2n+1)`.
pub fn kesten_oracle_cdf(t: f64, terms: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let mut sum = CompensatedSum::new();
    for n in 0..=terms {
        let m = (2 * n + 1) as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(sign * (-m * m * pi * pi * t / 4.0).exp() / m);
    }
    1.0 - 4.0 / pi * sum.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> InversionConfig {
        InversionConfig::default()
    }

    #[test]
    fn weights_sum_to_zero_and_match_known_values() {
        for n in (8..=20).step_by(2) {
            let w = stehfest_weights(n).unwrap();
            let total: CompensatedSum = w.iter().copied().collect();
            // A constant transform is a point mass at 0, so it inverts to 0.
            assert!(total.value().abs() < 1e-6 * w.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        let w = stehfest_weights(8).unwrap();
        let known = [
            -1.0 / 3.0,
            145.0 / 3.0,
            -906.0,
            16_394.0 / 3.0,
            -43_130.0 / 3.0,
            18_730.0,
            -35_840.0 / 3.0,
            8_960.0 / 3.0,
        ];
        for (got, want) in w.iter().zip(known) {
            assert!(((got - want) / want).abs() < 1e-15, "{got} vs {want}");
        }
        assert!(stehfest_weights(7).is_err());
        assert!(stehfest_weights(22).is_err());
    }

    fn with_terms(n_terms: usize) -> InversionConfig {
        InversionConfig {
            n_terms,
            ..InversionConfig::default()
        }
    }

    // Double-precision accuracy is set by weight magnitude (roundoff) against
    // truncation; the bounds below are the attained ones with some margin.
    #[test]
    fn inverts_elementary_transforms() {
        for &t in &[0.1, 1.0, 10.0] {
            let one = gaver_stehfest(&|l: f64| Ok(1.0 / l), t, &cfg()).unwrap();
            assert!((one - 1.0).abs() < 2e-7);
            let one = gaver_stehfest(&|l: f64| Ok(1.0 / l), t, &with_terms(12)).unwrap();
            assert!((one - 1.0).abs() < 1e-8);
        }
        for i in 0..=20 {
            let t = 0.1 + i as f64 * (10.0 - 0.1) / 20.0;
            let f = |l: f64| Ok(1.0 / (l + 1.0));
            let e = gaver_stehfest(&f, t, &cfg()).unwrap();
            assert!((e - (-t).exp()).abs() < 5e-5, "t={t}");
            let e = gaver_stehfest(&f, t, &with_terms(18)).unwrap();
            assert!((e - (-t).exp()).abs() < 1e-5, "t={t}");
        }
    }

    #[test]
    fn cdf_of_point_mass_and_exponential() {
        for &t in &[0.1, 0.5, 3.0, 40.0] {
            let c = invert_cdf(&|_l: f64| Ok(1.0), t, &cfg()).unwrap();
            assert!((c - 1.0).abs() < 1e-6);
            let c = invert_cdf(&|l: f64| Ok(1.0 / (l + 1.0)), t, &cfg()).unwrap();
            assert!((c - (1.0 - (-t).exp())).abs() < 5e-5);
        }
    }

    #[test]
    fn kesten_transform_against_residue_series() {
        let f = |l: f64| Ok(1.0 / l.sqrt().cosh());
        for i in 0..50 {
            let t = 0.1 + i as f64 * (5.0 - 0.1) / 49.0;
            let oracle = kesten_oracle_density(t, 60);
            let got = gaver_stehfest(&f, t, &with_terms(20)).unwrap();
            assert!((got - oracle).abs() < 1e-4, "t={t}");
            let got = gaver_stehfest(&f, t, &cfg()).unwrap();
            assert!((got - oracle).abs() < 1e-3, "t={t}");
        }
    }

    #[test]
    fn kesten_cdf_against_residue_series() {
        let f = |l: f64| Ok(1.0 / l.sqrt().cosh());
        let mut prev = 0.0;
        for i in 0..60 {
            let t = 0.1 + i as f64 * (20.0 - 0.1) / 59.0;
            let got = invert_cdf(&f, t, &cfg()).unwrap();
            assert!((got - kesten_oracle_cdf(t, 60)).abs() < 1e-4, "t={t}");
            assert!(got >= prev - 1e-5);
            prev = got;
        }
    }

    #[test]
    fn kesten_oracle_normalization_and_mean() {
        use crate::quadrature::{integrate, QuadConfig};
        let qc = QuadConfig::absolute(1e-11);
        let mass = integrate(|t| Ok(kesten_oracle_density(t, 200)), 1e-4, 60.0, &qc).unwrap();
        // Mass below 1e-4 is the CDF there, which is negligible.
        assert!((mass.value + kesten_oracle_cdf(1e-4, 400) - 1.0).abs() < 1e-8);
        let mean = integrate(|t| Ok(t * kesten_oracle_density(t, 200)), 1e-4, 60.0, &qc).unwrap();
        assert!((mean.value - 0.5).abs() < 1e-6);
        assert!(kesten_oracle_density(30.0, 10) < kesten_oracle_density(20.0, 10));
        assert!(kesten_oracle_truncation(1.0, 3) < 1e-50);
    }

    #[test]
    fn rejects_out_of_range_times() {
        assert!(matches!(
            gaver_stehfest(&|l: f64| Ok(1.0 / l), 0.01, &cfg()),
            Err(Error::OutOfRange { .. })
        ));
        let bad = InversionConfig {
            n_terms: 15,
            ..cfg()
        };
        assert!(gaver_stehfest(&|l: f64| Ok(1.0 / l), 1.0, &bad).is_err());
    }
}
