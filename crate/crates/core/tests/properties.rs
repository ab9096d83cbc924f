//! Property tests for the algebraic identities the closed forms rely on.

use proptest::prelude::*;
use steinpath::fractional::{frac_integral_left, gamma_fn, gauss_2f1, FracOrder};
use steinpath::grid::{Grid, GridFunction};
use steinpath::processes::StepPath;
use steinpath::quad::trig_power_point;
use steinpath::verify::rate_fit;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_functional_equation(x in 0.05f64..8.0) {
        let lhs = gamma_fn(x + 1.0).unwrap();
        let rhs = x * gamma_fn(x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn gauss_2f1_euler_transformation(
        a in -0.45f64..0.9,
        b in 0.1f64..1.4,
        c in 1.6f64..3.0,
        z in -6.0f64..0.45,
    ) {
        // F(a,b;c;z) = (1-z)^(c-a-b) F(c-a, c-b; c; z)
        let lhs = gauss_2f1(a, b, c, z).unwrap();
        let rhs = (1.0 - z).powf(c - a - b) * gauss_2f1(c - a, c - b, c, z).unwrap();
        prop_assert!(
            (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
            "lhs {lhs} rhs {rhs}"
        );
    }

    #[test]
    fn trig_power_integration_by_parts(
        p in 0.3f64..2.0,
        omega in 0.5f64..300.0,
        l in 0.05f64..1.0,
    ) {
        let (c0, s0) = trig_power_point(p, omega, l);
        let (c1, s1) = trig_power_point(p + 1.0, omega, l);
        let lp = l.powf(p);
        let c_expect = lp * (omega * l).sin() / omega - p / omega * s0;
        let s_expect = -lp * (omega * l).cos() / omega + p / omega * c0;
        prop_assert!((c1 - c_expect).abs() < 1e-10 * (1.0 + c1.abs()));
        prop_assert!((s1 - s_expect).abs() < 1e-10 * (1.0 + s1.abs()));
    }

    #[test]
    fn rate_fit_recovers_any_power_law(
        c in 0.01f64..100.0,
        slope in -3.0f64..3.0,
    ) {
        let pts: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&m| (m, c * m.powf(slope)))
            .collect();
        let fit = rate_fit(&pts).unwrap();
        prop_assert!((fit.fitted_slope - slope).abs() < 1e-9);
    }

    #[test]
    fn fractional_integral_of_tagged_powers(alpha in 0.15f64..1.0, p in 0.001f64..2.5) {
        // I^alpha(t^p)(x) = Gamma(p+1)/Gamma(p+alpha+1) x^(p+alpha); the
        // endpoint tag routes the kink through the weighted-moment machinery
        let grid = Grid::new(512).unwrap();
        let f = GridFunction::from_fn(grid, |t| t.powf(p))
            .unwrap()
            .with_singularity(steinpath::SingularExponent::left(p));
        let out = frac_integral_left(&f, FracOrder::new(alpha).unwrap()).unwrap();
        let factor = gamma_fn(p + 1.0).unwrap() / gamma_fn(p + alpha + 1.0).unwrap();
        for &i in &[25usize, 113, 400, 511] {
            let x = out.grid().node(i);
            let expect = factor * x.powf(p + alpha);
            prop_assert!(
                (out.values()[i] - expect).abs() <= 5e-7 * expect.abs() + 1e-9,
                "alpha {alpha} p {p} node {i}: {} vs {expect}",
                out.values()[i]
            );
        }
    }

    #[test]
    fn step_path_value_is_cadlag_sum(drift in -2.0f64..2.0, size in -1.5f64..1.5) {
        let path = StepPath::new(vec![0.25, 0.5, 0.75], vec![size, size, size], drift).unwrap();
        let v = path.value(0.6);
        prop_assert!((v - (2.0 * size + drift * 0.6)).abs() < 1e-12);
    }
}
