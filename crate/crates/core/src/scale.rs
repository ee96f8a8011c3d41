//! Scale functions of the spectrally negative stable process with Laplace
//! exponent `psi(lambda) = lambda^a`.
//!
//! For this exponent `W(z) = z^{a-1} / Gamma(a)`,
//! `W^{(q)}(z) = a z^{a-1} E_a'(q z^a)` and `Z^{(q)}(z) = E_a(q z^a)`.

use crate::error::{domain, Result};
use crate::quadrature::{integrate, integrate_with_breakpoints, QuadConfig};
use crate::special::{
    gamma, regularized_upper_gamma, MittagLeffler, MlTriple, SeriesConfig, StabilityIndex,
};

/// Scale-function evaluator for one stability index.
#[derive(Debug, Clone)]
pub struct ScaleContext {
    a: StabilityIndex,
    ml: MittagLeffler,
    gamma_a: f64,
}

fn nonneg(what: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{what} must be finite and nonnegative, got {x}")))
    }
}

impl ScaleContext {
    pub fn new(a: StabilityIndex, series: SeriesConfig) -> Result<Self> {
        Ok(Self {
            a,
            ml: MittagLeffler::new(a.value(), series)?,
            gamma_a: gamma(a.value())?,
        })
    }

    /// Context with the default series configuration.
    pub fn with_index(a: f64) -> Result<Self> {
        Self::new(StabilityIndex::new(a)?, SeriesConfig::default())
    }

    pub fn index(&self) -> StabilityIndex {
        self.a
    }

    pub fn mittag_leffler(&self) -> &MittagLeffler {
        &self.ml
    }

    fn alpha(&self) -> f64 {
        self.a.value()
    }

    /// Laplace exponent `psi(lambda) = lambda^a`.
    pub fn psi(&self, lambda: f64) -> Result<f64> {
        nonneg("psi argument", lambda)?;
        Ok(lambda.powf(self.alpha()))
    }

    /// Right inverse `Phi(q) = q^{1/a}`.
    pub fn phi(&self, q: f64) -> Result<f64> {
        nonneg("Phi argument", q)?;
        Ok(q.powf(1.0 / self.alpha()))
    }

    /// `W(z) = z^{a-1} / Gamma(a)`.
    pub fn w(&self, z: f64) -> Result<f64> {
        nonneg("scale function argument", z)?;
        Ok(z.powf(self.alpha() - 1.0) / self.gamma_a)
    }

    /// `W'(z) = (a-1) z^{a-2} / Gamma(a)`.
    pub fn w_prime(&self, z: f64) -> Result<f64> {
        self.positive_for_derivative(z)?;
        let a = self.alpha();
        Ok((a - 1.0) * z.powf(a - 2.0) / self.gamma_a)
    }

    fn positive_for_derivative(&self, z: f64) -> Result<()> {
        nonneg("scale function argument", z)?;
        if z == 0.0 && self.alpha() < 2.0 {
            return Err(domain("scale function derivative is singular at 0 for a < 2"));
        }
        Ok(())
    }

    fn ml_at(&self, q: f64, z: f64) -> Result<MlTriple> {
        self.ml.eval_all(q * z.powf(self.alpha()))
    }

    /// `W^{(q)}(z) = a z^{a-1} E_a'(q z^a)`; equals `W(z)` at `q = 0`.
    pub fn wq(&self, q: f64, z: f64) -> Result<f64> {
        nonneg("q", q)?;
        nonneg("scale function argument", z)?;
        if q == 0.0 {
            return self.w(z);
        }
        let a = self.alpha();
        let e1 = self.ml.eval(q * z.powf(a), 1)?;
        Ok(a * z.powf(a - 1.0) * e1)
    }

    /// `d/dz W^{(q)}(z)`, computed from the termwise-differentiated series.
    pub fn wq_prime(&self, q: f64, z: f64) -> Result<f64> {
        nonneg("q", q)?;
        self.positive_for_derivative(z)?;
        if q == 0.0 {
            return self.w_prime(z);
        }
        let a = self.alpha();
        let e = self.ml_at(q, z)?;
        Ok(a * (a - 1.0) * z.powf(a - 2.0) * e.d1 + a * a * q * z.powf(2.0 * a - 2.0) * e.d2)
    }

    /// `Z^{(q)}(z) = E_a(q z^a)`.
    pub fn zq(&self, q: f64, z: f64) -> Result<f64> {
        nonneg("q", q)?;
        nonneg("scale function argument", z)?;
        if q == 0.0 || z == 0.0 {
            return Ok(1.0);
        }
        self.ml.eval(q * z.powf(self.alpha()), 0)
    }

    // q + psi(c), rejecting the region where the tilted functions would need
    // the series at a negative argument.
    fn untilted_q(&self, c: f64, q: f64) -> Result<f64> {
        nonneg("tilt c", c)?;
        if !q.is_finite() {
            return Err(domain(format!("q must be finite, got {q}")));
        }
        let pc = self.psi(c)?;
        let u = q + pc;
        if u >= 0.0 {
            Ok(u)
        } else if u >= -1e-13 * pc.max(q.abs()) {
            Ok(0.0)
        } else {
            Err(domain(format!(
                "tilted scale functions need q + psi(c) >= 0, got q = {q}, psi(c) = {pc}"
            )))
        }
    }

    /// `W_c^{(q)}(z) = e^{-c z} W^{(q + psi(c))}(z)`.
    pub fn tilted_w(&self, c: f64, q: f64, z: f64) -> Result<f64> {
        let u = self.untilted_q(c, q)?;
        let w = self.wq(u, z)?;
        Ok(if c == 0.0 { w } else { (-c * z).exp() * w })
    }

    /// `d/dz W_c^{(q)}(z) = e^{-c z} (W^{(u)'}(z) - c W^{(u)}(z))` with `u = q + psi(c)`.
    pub fn tilted_w_prime(&self, c: f64, q: f64, z: f64) -> Result<f64> {
        let u = self.untilted_q(c, q)?;
        let wp = self.wq_prime(u, z)?;
        if c == 0.0 {
            return Ok(wp);
        }
        Ok((-c * z).exp() * (wp - c * self.wq(u, z)?))
    }

    /// `Z_c^{(q)}(z) = 1 + q int_0^z W_c^{(q)}(s) ds` by adaptive quadrature.
    pub fn tilted_z(&self, c: f64, q: f64, z: f64) -> Result<f64> {
        self.untilted_q(c, q)?;
        nonneg("scale function argument", z)?;
        if q == 0.0 || z == 0.0 {
            return Ok(1.0);
        }
        let cfg = QuadConfig::absolute(1e-10 / q.abs().max(1.0));
        let integral = integrate(|s| self.tilted_w(c, q, s), 0.0, z, &cfg)?;
        Ok(1.0 + q * integral.value)
    }

    /// Closed form `Z_u^{(-psi(u))}(k) = Q(a, u k)`.
    pub fn tilted_z_critical(&self, u: f64, k: f64) -> Result<f64> {
        nonneg("tilt u", u)?;
        nonneg("scale function argument", k)?;
        regularized_upper_gamma(self.alpha(), u * k)
    }

    /// `int_0^inf e^{-lambda z} W^{(q)}(z) dz` by quadrature, for `lambda > Phi(q)`.
    ///
    /// The range is cut where `e^{-(lambda - Phi(q)) z}` drops below about 1e-17.
    pub fn laplace_wq(&self, q: f64, lambda: f64) -> Result<f64> {
        let phi = self.phi(q)?;
        if !(lambda > phi && lambda.is_finite()) {
            return Err(domain(format!("need lambda > Phi(q) = {phi}, got {lambda}")));
        }
        let horizon = 40.0 / (lambda - phi);
        let cfg = QuadConfig::relative(1e-12, 1e-13);
        let integrand = |z: f64| Ok((-lambda * z).exp() * self.wq(q, z)?);
        let points = [0.0, horizon / 64.0, horizon / 8.0, horizon];
        Ok(integrate_with_breakpoints(integrand, &points, &cfg)?.value)
    }

    /// Two-sided exit transform `E_x(e^{-q T}; X_T = y) = W^{(q)}(x) / W^{(q)}(y)`.
    pub fn exit_up_lt(&self, q: f64, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0 && x < y && y.is_finite()) {
            return Err(domain(format!("exit transform needs 0 < x < y, got x = {x}, y = {y}")));
        }
        Ok(self.wq(q, x)? / self.wq(q, y)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(a: f64) -> ScaleContext {
        ScaleContext::with_index(a).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn exponent_and_inverse() {
        let c2 = ctx(2.0);
        assert_eq!(c2.psi(3.0).unwrap(), 9.0);
        assert_eq!(c2.phi(16.0).unwrap(), 4.0);
        assert!(close(ctx(1.5).psi(4.0).unwrap(), 8.0, 1e-15));
        assert!(c2.psi(-1.0).is_err());
        let c = ctx(1.37);
        assert!(close(c.phi(c.psi(2.3).unwrap()).unwrap(), 2.3, 1e-15));
    }

    #[test]
    fn documented_scale_values() {
        let c2 = ctx(2.0);
        assert!(close(c2.w(1.0).unwrap(), 1.0, 1e-15));
        assert!(close(c2.wq(1.0, 1.0).unwrap(), 1f64.sinh(), 1e-14));
        for &a in &[1.2, 1.5, 2.0] {
            let c = ctx(a);
            assert!(close(c.wq(0.0, 1.0).unwrap(), 1.0 / gamma(a).unwrap(), 1e-15));
            assert!(close(c.wq(1e-300, 1.0).unwrap(), c.w(1.0).unwrap(), 1e-14));
        }
        assert_eq!(ctx(1.5).zq(5.0, 0.0).unwrap(), 1.0);
        assert!(close(c2.zq(1.0, 1.0).unwrap(), 1f64.cosh(), 1e-15));
        assert_eq!(ctx(1.7).zq(0.0, 7.0).unwrap(), 1.0);
    }

    #[test]
    fn derivative_closed_form_at_two() {
        // W^{(q)}(z) = sinh(sqrt(q) z) / sqrt(q) at a = 2.
        let c2 = ctx(2.0);
        for &(q, z) in &[(1.0, 1.0), (4.0, 0.3), (0.25, 3.0)] {
            let s = f64::sqrt(q);
            assert!(close(c2.wq_prime(q, z).unwrap(), (s * z).cosh(), 1e-13));
        }
        assert!(close(c2.wq_prime(1.0, 0.0).unwrap(), 1.0, 1e-15));
        assert!(ctx(1.5).wq_prime(1.0, 0.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &a in &[1.3, 1.7] {
            let c = ctx(a);
            for &(q, z) in &[(0.5, 0.7), (2.0, 1.0), (5.0, 1.3)] {
                let h = 1e-6;
                let fd = (c.wq(q, z + h).unwrap() - c.wq(q, z - h).unwrap()) / (2.0 * h);
                assert!(close(c.wq_prime(q, z).unwrap(), fd, 1e-7));
                let fd = (c.tilted_w(0.8, q - 0.2, z + h).unwrap()
                    - c.tilted_w(0.8, q - 0.2, z - h).unwrap())
                    / (2.0 * h);
                assert!(close(c.tilted_w_prime(0.8, q - 0.2, z).unwrap(), fd, 1e-7));
            }
        }
    }

    #[test]
    fn tilted_values() {
        let c2 = ctx(2.0);
        assert_eq!(c2.tilted_w(0.0, 1.0, 1.0).unwrap(), c2.wq(1.0, 1.0).unwrap());
        assert!(close(c2.tilted_w(1.0, -1.0, 1.0).unwrap(), (-1f64).exp(), 1e-15));
        let c = ctx(1.5);
        let q = -c.psi(2.0).unwrap();
        let want = (-1f64).exp() * 0.5f64.sqrt() / gamma(1.5).unwrap();
        assert!(close(c.tilted_w(2.0, q, 0.5).unwrap(), want, 1e-14));
        assert!(c.tilted_w(1.0, -1.5, 1.0).is_err());
    }

    #[test]
    fn tilted_z_quadrature_and_closed_form() {
        let c2 = ctx(2.0);
        assert_eq!(c2.tilted_z(3.0, 0.0, 3.0).unwrap(), 1.0);
        let quad = c2.tilted_z(1.0, -1.0, 1.0).unwrap();
        assert!((quad - 2.0 / std::f64::consts::E).abs() < 1e-9);
        for &a in &[1.3, 1.7, 2.0] {
            let c = ctx(a);
            for &u in &[0.1, 1.0, 5.0] {
                let q = -c.psi(u).unwrap();
                let quad = c.tilted_z(u, q, 1.0).unwrap();
                let closed = c.tilted_z_critical(u, 1.0).unwrap();
                assert!((quad - closed).abs() < 1e-9, "a={a} u={u}: {quad} vs {closed}");
            }
        }
    }

    #[test]
    fn z_from_w_identity() {
        for &a in &[1.3, 2.0] {
            let c = ctx(a);
            for &(q, z) in &[(0.5, 1.0), (2.0, 2.5)] {
                let via_quad = c.tilted_z(0.0, q, z).unwrap();
                assert!((via_quad - c.zq(q, z).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exit_identity() {
        let c2 = ctx(2.0);
        assert!(close(c2.exit_up_lt(0.0, 1.0, 2.0).unwrap(), 0.5, 1e-15));
        assert!(close(
            c2.exit_up_lt(1.0, 1.0, 2.0).unwrap(),
            1f64.sinh() / 2f64.sinh(),
            1e-14
        ));
        assert!(c2.exit_up_lt(0.0, 2.0, 1.0).is_err());
        let c = ctx(1.6);
        assert!(close(c.exit_up_lt(0.0, 1.0, 3.0).unwrap(), (1.0f64 / 3.0).powf(0.6), 1e-14));
        assert!(c.exit_up_lt(0.0, 1.0 - 1e-9, 1.0).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn laplace_transform_of_scale_function() {
        for &a in &[1.3, 1.7, 2.0] {
            let c = ctx(a);
            for &q in &[0.0, 0.5, 2.0] {
                let lambda = 2.0 * c.phi(q).unwrap() + 1.0;
                let got = c.laplace_wq(q, lambda).unwrap();
                let want = 1.0 / (c.psi(lambda).unwrap() - q);
                assert!((got - want).abs() < 1e-9, "a={a} q={q}: {got} vs {want}");
            }
        }
        assert!(ctx(1.5).laplace_wq(1.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn scale_functions_monotone_in_z(a in 1.05f64..=2.0, q in 0.0f64..5.0, z in 0.0f64..3.0, dz in 1e-3f64..1.0) {
            let c = ctx(a);
            prop_assert!(c.wq(q, z + dz).unwrap() >= c.wq(q, z).unwrap());
            prop_assert!(c.zq(q, z + dz).unwrap() >= c.zq(q, z).unwrap());
        }

        #[test]
        fn exit_transform_nonincreasing_in_q(a in 1.05f64..=2.0, q in 0.0f64..5.0, dq in 1e-3f64..2.0, x in 0.05f64..1.0, y in 1.0f64..3.0) {
            let c = ctx(a);
            let lo = c.exit_up_lt(q, x, y).unwrap();
            let hi = c.exit_up_lt(q + dq, x, y).unwrap();
            prop_assert!(hi <= lo * (1.0 + 1e-14));
            prop_assert!(lo > 0.0 && lo <= 1.0);
        }

        #[test]
        fn untilted_identity_exact(a in 1.05f64..=2.0, q in 0.0f64..5.0, z in 0.0f64..3.0) {
            let c = ctx(a);
            prop_assert_eq!(c.tilted_w(0.0, q, z).unwrap(), c.wq(q, z).unwrap());
        }
    }
}
