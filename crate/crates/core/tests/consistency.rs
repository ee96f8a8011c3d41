use asymenv::environment::SimConfig;
use asymenv::fluctuation::{bias_gamma, g_integral, B1Law, SlopeKind};
use asymenv::montecarlo::{b1_report, renewal_overshoot_check, simulate_paths, McConfig};
use asymenv::StabilityIndex;

fn mc(a: f64, n_paths: usize) -> McConfig {
    let sim = SimConfig {
        h: 1e-2,
        ..SimConfig::new(StabilityIndex::new(a).unwrap())
    };
    McConfig {
        n_paths,
        ..McConfig::new(sim)
    }
}

#[test]
fn gamma_from_closed_form_integral_and_limit_law() {
    for a in [1.2, 1.5, 1.8, 2.0] {
        let gamma = bias_gamma(a).unwrap();
        assert!(((-g_integral(a).unwrap()).exp() - gamma).abs() < 1e-10, "a={a}");
        let law = B1Law::with_index(a).unwrap();
        assert!((law.left_mass() - gamma).abs() < 1e-10, "a={a}");
        let below_zero = law.cdf(-1e-12).unwrap();
        assert!((below_zero - gamma).abs() < 1e-6, "a={a}: {below_zero}");
    }
}

#[test]
fn simulated_sign_and_renewal_parity_match_gamma() {
    let cfg = mc(1.5, 2_000);
    let samples = simulate_paths(&cfg).unwrap();
    let law = B1Law::with_index(1.5).unwrap();
    let p = b1_report(&cfg, &samples, &law).unwrap().comparisons["p_left"];
    assert!(p.within(4.0, 0.02), "{p:?}");
    let r = renewal_overshoot_check(&cfg, &samples, &[0.0]).unwrap().comparisons["gamma_complement"];
    assert!(r.within(4.0, 0.02), "{r:?}");
}

#[test]
fn standard_errors_shrink_like_root_n() {
    let law = B1Law::with_index(2.0).unwrap();
    let se = |n| {
        let cfg = mc(2.0, n);
        b1_report(&cfg, &simulate_paths(&cfg).unwrap(), &law).unwrap().estimates["p_left"].se
    };
    let ratio = se(400) / se(1600);
    assert!((1.8..2.2).contains(&ratio), "{ratio}");
}

#[test]
fn mean_slope_ratio_is_unity_for_brownian_case() {
    let law = B1Law::with_index(2.0).unwrap();
    let (up, down) = (law.slope_mean(SlopeKind::Upward), law.slope_mean(SlopeKind::Downward));
    assert!((up - down).abs() < 1e-12 && (up - 0.5).abs() < 1e-12);
}
