//! Laws of the 1-slope lengths through their Laplace transforms.
//!
//! With `c = a / (a - 1)` and `E = E_a`,
//! up:   `1 / (Gamma(a+1) (E'(u) + c u E''(u)))`,
//! down: `Gamma(a+1) (E'(u) + c u E''(u) - c u E'(u)^2 / E(u))`.

use super::SlopeKind;
use crate::error::{domain, Error, Result};
use crate::scale::ScaleContext;
use crate::special::{gamma, mittag_leffler_split, MlTriple};

// Largest tolerated ratio between the summands and the result of the direct
// downward formula before switching to the split representation.
const DIRECT_CANCELLATION_LIMIT: f64 = 1e2;

fn formula(ctx: &ScaleContext, kind: SlopeKind, u: f64, e: &MlTriple) -> Result<(f64, f64)> {
    let a = ctx.index().value();
    let c = a / (a - 1.0);
    let g = gamma(a + 1.0)?;
    let lead = e.d1 + c * u * e.d2;
    Ok(match kind {
        SlopeKind::Upward => (1.0 / (g * lead), 1.0),
        SlopeKind::Downward => {
            let corr = c * u * e.d1 * e.d1 / e.value;
            let diff = lead - corr;
            (g * diff, lead.abs().max(corr.abs()) / diff.abs())
        }
    })
}

// Downward transform from E = X + R, where the X-X part of the bilinear form
// E E' + c u (E E'' - E'^2) vanishes identically.
fn downward_split(ctx: &ScaleContext, u: f64) -> Result<f64> {
    let a = ctx.index().value();
    let c = a / (a - 1.0);
    let split = mittag_leffler_split(a, u)?;
    let (x, r) = (split.dominant, split.remainder);
    let rho1 = x.d1 / x.value;
    let rho2 = x.d2 / x.value;
    let cross = r.d1 + r.value * rho1 + c * u * (r.d2 + r.value * rho2 - 2.0 * rho1 * r.d1);
    let rr = r.value * r.d1 + c * u * (r.value * r.d2 - r.d1 * r.d1);
    Ok(gamma(a + 1.0)? * (cross + rr / x.value) / (1.0 + r.value / x.value))
}

/// `E exp(-u l)` for the 1-slope length `l` of the given kind.
pub fn slope_length_lt(ctx: &ScaleContext, kind: SlopeKind, u: f64) -> Result<f64> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(domain(format!("slope transform needs u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(1.0);
    }
    let direct = ctx
        .mittag_leffler()
        .eval_all(u)
        .and_then(|e| formula(ctx, kind, u, &e));
    match (kind, direct) {
        (SlopeKind::Upward, Ok((v, _))) => Ok(v),
        // The up transform decays like exp(-u^{1/a}); past overflow it is 0.
        (SlopeKind::Upward, Err(Error::Overflow(_) | Error::NonConvergence { .. })) => Ok(0.0),
        (SlopeKind::Downward, Ok((v, cond))) if cond < DIRECT_CANCELLATION_LIMIT => Ok(v),
        (SlopeKind::Downward, _) => downward_split(ctx, u),
        (_, Err(e)) => Err(e),
    }
}

/// `E exp(theta l)` for `theta >= 0` small enough that it is finite.
///
/// Uses the transform formulas at `u = -theta`. Returns an error once the
/// series cap is hit; callers detect the first pole by loss of positivity or
/// monotonicity along a grid.
pub fn slope_length_mgf(ctx: &ScaleContext, kind: SlopeKind, theta: f64) -> Result<f64> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(domain(format!("moment generating function needs theta >= 0, got {theta}")));
    }
    if theta == 0.0 {
        return Ok(1.0);
    }
    let e = ctx.mittag_leffler().eval_all(-theta)?;
    Ok(formula(ctx, kind, -theta, &e)?.0)
}

/// Mean 1-slope length.
///
/// Upward: `Gamma(a) / ((a-1) Gamma(2a-1))`; downward:
/// `(1/Gamma(a) - Gamma(a)/Gamma(2a-1)) / (a-1)`.
pub fn slope_length_mean(ctx: &ScaleContext, kind: SlopeKind) -> Result<f64> {
    let a = ctx.index().value();
    let ga = gamma(a)?;
    let g2 = gamma(2.0 * a - 1.0)?;
    Ok(match kind {
        SlopeKind::Upward => ga / ((a - 1.0) * g2),
        SlopeKind::Downward => (1.0 / ga - ga / g2) / (a - 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(a: f64) -> ScaleContext {
        ScaleContext::with_index(a).unwrap()
    }

    #[test]
    fn one_at_zero() {
        for &a in &[1.1, 1.5, 2.0] {
            for kind in [SlopeKind::Upward, SlopeKind::Downward] {
                assert_eq!(slope_length_lt(&ctx(a), kind, 0.0).unwrap(), 1.0);
                let tiny = slope_length_lt(&ctx(a), kind, 1e-12).unwrap();
                assert!((tiny - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kesten_case() {
        let c = ctx(2.0);
        for &u in &[0.1, 1.0, 10.0, 100.0, 400.0] {
            let want = 1.0 / f64::sqrt(u).cosh();
            for kind in [SlopeKind::Upward, SlopeKind::Downward] {
                let got = slope_length_lt(&c, kind, u).unwrap();
                assert!((got - want).abs() <= 1e-10 * want.max(1e-6), "{kind} u={u}: {got} vs {want}");
            }
        }
        assert!((slope_length_lt(&c, SlopeKind::Upward, 1.0).unwrap() - 0.648_054_273_663_885_4).abs() < 1e-15);
    }

    // Downward transform at large u, against an 80-digit evaluation of the
    // defining series.
    #[test]
    fn downward_large_u_reference_values() {
        let cases = [
            (1.5, 50.0, 4.541_028_842_976_821e-2),
            (1.5, 200.0, 1.594_331_280_365_169e-2),
            (1.3, 200.0, 6.202_941_527_157_343e-2),
            (1.7, 100.0, 8.942_466_519_602_955e-3),
            (1.9, 222.0, 7.939_590_913_893_628e-4),
            (1.1, 222.0, 3.354_282_590_869_662e-1),
        ];
        for (a, u, want) in cases {
            let got = slope_length_lt(&ctx(a), SlopeKind::Downward, u).unwrap();
            assert!(((got - want) / want).abs() < 1e-9, "a={a} u={u}: {got} vs {want}");
        }
    }

    #[test]
    fn split_and_direct_agree_where_both_are_accurate() {
        for &a in &[1.2, 1.5, 1.8, 2.0] {
            let c = ctx(a);
            for &u in &[0.5, 2.0, 5.0, 10.0] {
                let e = c.mittag_leffler().eval_all(u).unwrap();
                let (direct, _) = formula(&c, SlopeKind::Downward, u, &e).unwrap();
                let split = downward_split(&c, u).unwrap();
                assert!(((direct - split) / direct).abs() < 1e-10, "a={a} u={u}");
            }
        }
    }

    #[test]
    fn documented_means() {
        let c = ctx(2.0);
        assert!((slope_length_mean(&c, SlopeKind::Upward).unwrap() - 0.5).abs() < 1e-15);
        assert!((slope_length_mean(&c, SlopeKind::Downward).unwrap() - 0.5).abs() < 1e-15);
        let c = ctx(1.5);
        assert!((slope_length_mean(&c, SlopeKind::Upward).unwrap() - 1.772_453_850_905_516).abs() < 1e-12);
        assert!((slope_length_mean(&c, SlopeKind::Downward).unwrap() - 0.484_304_483_285_509_1).abs() < 1e-12);
    }

    #[test]
    fn mean_sum_and_finite_difference() {
        for &a in &[1.3, 1.7, 2.0] {
            let c = ctx(a);
            let up = slope_length_mean(&c, SlopeKind::Upward).unwrap();
            let down = slope_length_mean(&c, SlopeKind::Downward).unwrap();
            let want = 1.0 / ((a - 1.0) * gamma(a).unwrap());
            assert!((up + down - want).abs() < 1e-12);
            for (kind, mean) in [(SlopeKind::Upward, up), (SlopeKind::Downward, down)] {
                // Centered difference around u = 1e-6 with the transform at 0 equal to 1.
                let h = 1e-6;
                let fd = -(slope_length_lt(&c, kind, 2.0 * h).unwrap() - 1.0) / (2.0 * h);
                assert!(((fd - mean) / mean).abs() < 1e-4, "a={a} {kind}: {fd} vs {mean}");
            }
        }
    }

    #[test]
    fn mgf_finite_before_first_pole() {
        let c = ctx(2.0);
        // 1/cos(sqrt(theta)) at a = 2.
        let got = slope_length_mgf(&c, SlopeKind::Upward, 1.0).unwrap();
        assert!((got - 1.0 / 1f64.cos()).abs() < 1e-13);
        let got = slope_length_mgf(&c, SlopeKind::Downward, 1.0).unwrap();
        assert!((got - 1.0 / 1f64.cos()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn transforms_in_unit_interval_and_decreasing(a in 1.05f64..=2.0, u in 0.0f64..200.0, du in 0.01f64..20.0) {
            let c = ctx(a);
            for kind in [SlopeKind::Upward, SlopeKind::Downward] {
                let lo = slope_length_lt(&c, kind, u).unwrap();
                let hi = slope_length_lt(&c, kind, u + du).unwrap();
                prop_assert!(lo > 0.0 && lo <= 1.0, "{} {}", kind, lo);
                prop_assert!(hi <= lo * (1.0 + 1e-9), "{} {} {}", kind, lo, hi);
            }
        }
    }
}
