//! The bias `gamma(a) = P(b_1 < 0)` and its logarithm `g(a) = -ln gamma(a)`.

use crate::error::{domain, Result};
use crate::quadrature::{integrate_with_breakpoints, QuadConfig};
use crate::special::{gamma, log_gamma};

const EPS: f64 = 1e-8;
const HORIZON: f64 = 60.0;

fn check_g_domain(a: f64) -> Result<()> {
    if !(a > 0.5 && a.is_finite()) {
        return Err(domain(format!("g(a) needs a > 1/2, got {a}")));
    }
    Ok(())
}

/// `gamma(a) = Gamma(a)^2 / Gamma(2a - 1)` on `[1, 2]`.
pub fn bias_gamma(a: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&a) {
        return Err(domain(format!("bias gamma(a) needs a in [1, 2], got {a}")));
    }
    let ga = gamma(a)?;
    Ok(ga * ga / gamma(2.0 * a - 1.0)?)
}

/// `g(a) = ln Gamma(2a - 1) - 2 ln Gamma(a)` for `a > 1/2`.
pub fn g_closed(a: f64) -> Result<f64> {
    check_g_domain(a)?;
    Ok(log_gamma(2.0 * a - 1.0)? - 2.0 * log_gamma(a)?)
}

/// `g(a)` from `int_0^inf e^{-t} (1 - e^{-(a-1)t})^2 / (t (1 - e^{-t})) dt`.
pub fn g_integral(a: f64) -> Result<f64> {
    Ok(g_integral_with_bound(a)?.0)
}

/// [`g_integral`] together with a bound on the neglected tail beyond `t = 60`.
pub fn g_integral_with_bound(a: f64) -> Result<(f64, f64)> {
    check_g_domain(a)?;
    let b = a - 1.0;
    let integrand = |t: f64| {
        let num = (-b * t).exp_m1();
        Ok((-t).exp() * num * num / (t * -(-t).exp_m1()))
    };
    let body = integrate_with_breakpoints(
        integrand,
        &[EPS, 1.0, 5.0, 20.0, HORIZON],
        &QuadConfig::relative(1e-13, 1e-15),
    )?;
    // Near 0 the integrand is b^2 + O(t).
    let head = b * b * EPS;
    let t = HORIZON;
    let tail = if a >= 1.0 {
        (-t).exp() / (t * -(-t).exp_m1())
    } else {
        let r = 2.0 * a - 1.0;
        (-r * t).exp() / (r * t * -(-t).exp_m1())
    };
    Ok((body.value + head, tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;

    #[test]
    fn endpoints_and_half() {
        assert!((bias_gamma(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((bias_gamma(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((bias_gamma(1.5).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        assert!(bias_gamma(0.9).is_err());
        assert!(bias_gamma(2.1).is_err());
    }

    #[test]
    fn strictly_decreasing() {
        let grid = linspace(1.0, 2.0, 201);
        let values: Vec<f64> = grid.iter().map(|&a| bias_gamma(a).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn closed_and_integral_forms_agree() {
        for &a in &[1.0, 1.1, 1.5, 1.9, 2.0, 3.0] {
            let (integral, tail) = g_integral_with_bound(a).unwrap();
            let closed = g_closed(a).unwrap();
            assert!((integral - closed).abs() < 1e-10, "a={a}: {integral} vs {closed}");
            assert!(tail < 1e-10);
        }
        // Below a = 1 the integrand decays like exp(-(2a-1) t) and the tail matters.
        let (integral, tail) = g_integral_with_bound(0.6).unwrap();
        let closed = g_closed(0.6).unwrap();
        assert!(integral < closed && closed < integral + tail);
        assert!((g_closed(2.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-14);
        assert!(g_closed(0.5).is_err());
    }

    #[test]
    fn exponent_of_minus_g_is_gamma() {
        for &a in &[1.0, 1.25, 1.75, 2.0] {
            let via_g = (-g_closed(a).unwrap()).exp();
            assert!((via_g - bias_gamma(a).unwrap()).abs() < 1e-14);
        }
    }
}
