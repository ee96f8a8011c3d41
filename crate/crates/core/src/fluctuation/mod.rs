//! Hitting-time transforms of the drawdown and drawup functionals, the slope
//! length laws, the bias `gamma(a)` and the limit law of `b_1`.
//!
//! Notation: for level `k`, `tau_bar` is the first time the path falls `k`
//! below its running maximum and `sigma_bar` the last time before it that the
//! path sat at that maximum; `tau_under`, `sigma_under` are the mirror-image
//! drawup quantities. `beta` denotes the associated overshoot or undershoot.

mod bias;
mod limit_law;
mod slopes;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use bias::{bias_gamma, g_closed, g_integral, g_integral_with_bound};
pub use limit_law::{cdf_b1, density_b1, B1Law, MassCheck};
pub use slopes::{slope_length_lt, slope_length_mean, slope_length_mgf};

use crate::error::{domain, Result};
use crate::scale::ScaleContext;

/// Direction of an x-slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeKind {
    Upward,
    Downward,
}

impl SlopeKind {
    pub fn opposite(self) -> Self {
        match self {
            Self::Upward => Self::Downward,
            Self::Downward => Self::Upward,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Upward => "up",
            Self::Downward => "down",
        }
    }
}

impl fmt::Display for SlopeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Arguments of the drawdown excursion transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingParams {
    /// Time Laplace variable.
    pub u: f64,
    /// Overshoot Laplace variable.
    pub v: f64,
    /// Level.
    pub k: f64,
}

impl HittingParams {
    pub fn new(u: f64, v: f64, k: f64) -> Result<Self> {
        if !(u >= 0.0 && u.is_finite() && v >= 0.0 && v.is_finite()) {
            return Err(domain(format!("need u, v >= 0, got u = {u}, v = {v}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(domain(format!("need level k > 0, got {k}")));
        }
        Ok(Self { u, v, k })
    }

    /// `p = u - psi(v)`.
    pub fn p(&self, ctx: &ScaleContext) -> Result<f64> {
        Ok(self.u - ctx.psi(self.v)?)
    }
}

/// Upper limit of the overshoot event in [`lt_up_run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunLevel {
    Finite(f64),
    Infinite,
}

fn check_uk(u: f64, k: f64) -> Result<()> {
    HittingParams::new(u, 0.0, k).map(|_| ())
}

/// `E exp{-u (tau_bar_k - sigma_bar_k) - v (overshoot beyond k)}`.
pub fn lt_down_excursion(ctx: &ScaleContext, params: &HittingParams) -> Result<f64> {
    let HittingParams { u, v, k } = *params;
    let p = params.p(ctx)?;
    let (w, wp) = (ctx.w(k)?, ctx.w_prime(k)?);
    let wv = ctx.tilted_w(v, p, k)?;
    let wvp = ctx.tilted_w_prime(v, p, k)?;
    let zv = if v == 0.0 {
        ctx.zq(u, k)?
    } else {
        ctx.tilted_z(v, p, k)?
    };
    Ok((v * k).exp() * (w / wp) * (zv * wvp / wv - p * wv))
}

/// `E(exp{-u sigma_bar_k}; beta_bar_k <= x)`.
pub fn lt_up_run(ctx: &ScaleContext, u: f64, x: RunLevel, k: f64) -> Result<f64> {
    check_uk(u, k)?;
    let ratio = ctx.wq_prime(u, k)? / ctx.wq(u, k)?;
    let base = ctx.w_prime(k)? / ctx.w(k)? / ratio;
    match x {
        RunLevel::Infinite => Ok(base),
        RunLevel::Finite(x) if x > 0.0 => Ok(-base * (-x * ratio).exp_m1()),
        RunLevel::Finite(x) => Err(domain(format!("need overshoot level x > 0, got {x}"))),
    }
}

/// `E exp{-u (tau_under_k - sigma_under_k)} = W(k) / W^{(u)}(k)`.
pub fn lt_up_excursion(ctx: &ScaleContext, u: f64, k: f64) -> Result<f64> {
    check_uk(u, k)?;
    Ok(ctx.w(k)? / ctx.wq(u, k)?)
}

/// `E exp{-u sigma_under_k} = W^{(u)}(k) / (Z^{(u)}(k) W(k))`.
pub fn lt_down_run(ctx: &ScaleContext, u: f64, k: f64) -> Result<f64> {
    check_uk(u, k)?;
    Ok(ctx.wq(u, k)? / (ctx.zq(u, k)? * ctx.w(k)?))
}

/// `E exp{-u beta_under_k} = e^{-u k} / Z_u^{(-psi(u))}(k) = e^{-u k} / Q(a, u k)`.
pub fn lt_undershoot(ctx: &ScaleContext, u: f64, k: f64) -> Result<f64> {
    check_uk(u, k)?;
    if u * k > 700.0 {
        return Err(crate::Error::Overflow("undershoot transform"));
    }
    Ok((-u * k).exp() / ctx.tilted_z_critical(u, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(a: f64) -> ScaleContext {
        ScaleContext::with_index(a).unwrap()
    }

    const GRID_A: [f64; 3] = [1.3, 1.7, 2.0];
    const GRID_U: [f64; 3] = [0.1, 1.0, 5.0];

    #[test]
    fn transforms_are_one_at_zero() {
        for &a in &GRID_A {
            let c = ctx(a);
            for &k in &[0.5, 1.0, 2.0] {
                let p = HittingParams::new(0.0, 0.0, k).unwrap();
                assert!((lt_down_excursion(&c, &p).unwrap() - 1.0).abs() < 1e-14);
                assert!((lt_up_run(&c, 0.0, RunLevel::Infinite, k).unwrap() - 1.0).abs() < 1e-14);
                assert_eq!(lt_up_excursion(&c, 0.0, k).unwrap(), 1.0);
                assert_eq!(lt_down_run(&c, 0.0, k).unwrap(), 1.0);
                assert_eq!(lt_undershoot(&c, 0.0, k).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn hyperbolic_closed_forms_at_two() {
        let c = ctx(2.0);
        let (s1, c1) = (1f64.sinh(), 1f64.cosh());
        // W = z, W' = 1, W^{(1)} = sinh, W^{(1)'} = cosh, Z^{(1)} = cosh.
        let want = c1 * c1 / s1 - s1;
        let got = lt_down_excursion(&c, &HittingParams::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert!((got - want).abs() < 1e-13);
        assert!((lt_up_run(&c, 1.0, RunLevel::Infinite, 1.0).unwrap() - s1 / c1).abs() < 1e-14);
        assert!((lt_up_excursion(&c, 1.0, 1.0).unwrap() - 1.0 / s1).abs() < 1e-14);
        assert!((lt_down_run(&c, 1.0, 1.0).unwrap() - s1 / c1).abs() < 1e-14);
        assert!((lt_undershoot(&c, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn up_excursion_at_three_halves() {
        let c = ctx(1.5);
        let e1 = c.mittag_leffler().eval(1.0, 1).unwrap();
        let want = 1.0 / (crate::special::gamma(1.5).unwrap() * 1.5 * e1);
        assert!((lt_up_excursion(&c, 1.0, 1.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn up_run_finite_level() {
        for &a in &GRID_A {
            let c = ctx(a);
            for &x in &[0.1, 1.0, 4.0] {
                let got = lt_up_run(&c, 0.0, RunLevel::Finite(x), 2.0).unwrap();
                let want = 1.0 - (-x * (a - 1.0) / 2.0).exp();
                assert!((got - want).abs() < 1e-14);
            }
            let mut prev = 0.0;
            for i in 1..=30 {
                let v = lt_up_run(&c, 1.0, RunLevel::Finite(0.2 * i as f64), 1.0).unwrap();
                assert!(v >= prev);
                prev = v;
            }
            assert!(prev <= lt_up_run(&c, 1.0, RunLevel::Infinite, 1.0).unwrap());
            assert!(lt_up_run(&c, 1.0, RunLevel::Finite(0.0), 1.0).is_err());
        }
    }

    #[test]
    fn pistorius_identity() {
        for &a in &GRID_A {
            let c = ctx(a);
            for &u in &GRID_U {
                let prod = lt_up_excursion(&c, u, 1.0).unwrap()
                    * lt_down_run(&c, u, 1.0).unwrap()
                    * c.zq(u, 1.0).unwrap();
                assert!((prod - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn compositions_reproduce_slope_laws() {
        for &a in &GRID_A {
            let c = ctx(a);
            for &u in &GRID_U {
                let down = lt_down_excursion(&c, &HittingParams::new(u, 0.0, 1.0).unwrap()).unwrap()
                    * lt_down_run(&c, u, 1.0).unwrap();
                let up = lt_up_excursion(&c, u, 1.0).unwrap()
                    * lt_up_run(&c, u, RunLevel::Infinite, 1.0).unwrap();
                let d = slope_length_lt(&c, SlopeKind::Downward, u).unwrap();
                let upl = slope_length_lt(&c, SlopeKind::Upward, u).unwrap();
                assert!((down - d).abs() < 1e-10, "a={a} u={u}: {down} vs {d}");
                assert!((up - upl).abs() < 1e-10, "a={a} u={u}: {up} vs {upl}");
            }
        }
    }

    #[test]
    fn undershoot_against_quadrature() {
        for &a in &GRID_A {
            let c = ctx(a);
            for &u in &GRID_U {
                let q = -c.psi(u).unwrap();
                let via_quad = (-u).exp() / c.tilted_z(u, q, 1.0).unwrap();
                assert!((lt_undershoot(&c, u, 1.0).unwrap() - via_quad).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn overshoot_variable_behaves() {
        for &a in &GRID_A {
            let c = ctx(a);
            let mut prev = 1.0;
            for &v in &[0.0, 0.3, 1.0, 3.0] {
                let val = lt_down_excursion(&c, &HittingParams::new(0.5, v, 1.0).unwrap()).unwrap();
                assert!(val > 0.0 && val <= prev * (1.0 + 1e-9), "a={a} v={v}: {val}");
                prev = val;
            }
        }
    }

    #[test]
    fn transforms_decrease_in_u() {
        for &a in &GRID_A {
            let c = ctx(a);
            let mut prev = [1.0f64; 5];
            for i in 1..=40 {
                let u = 0.25 * i as f64;
                let cur = [
                    lt_down_excursion(&c, &HittingParams::new(u, 0.0, 1.0).unwrap()).unwrap(),
                    lt_up_run(&c, u, RunLevel::Infinite, 1.0).unwrap(),
                    lt_up_excursion(&c, u, 1.0).unwrap(),
                    lt_down_run(&c, u, 1.0).unwrap(),
                    lt_undershoot(&c, u, 1.0).unwrap(),
                ];
                for (p, v) in prev.iter().zip(cur) {
                    assert!(v > 0.0 && v <= 1.0 && v <= *p * (1.0 + 1e-12), "a={a} u={u}");
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn invalid_params() {
        assert!(HittingParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(HittingParams::new(1.0, -0.5, 1.0).is_err());
        assert!(HittingParams::new(1.0, 0.0, 0.0).is_err());
        let c = ctx(1.5);
        assert!(lt_up_excursion(&c, 1.0, -1.0).is_err());
    }
}
