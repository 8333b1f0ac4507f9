//! Randomized invariants of the fractional calculus layer and its consumers.

use num_complex::Complex64;
use proptest::prelude::*;

use fracsim::bohm::{de_broglie, decompose};
use fracsim::fraccalc::{gl_weights, mrl_derivative, sequential_derivative, FracOrder};
use fracsim::grid::{BoundaryMode, Grid1D, GridFunction};
use fracsim::model::PhysicalParams;
use fracsim::observables::probability_density;

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

fn unit_params(grid: Grid1D, alpha: f64) -> PhysicalParams {
    PhysicalParams {
        hbar: 1.0,
        mass: 1.0,
        c: 1.0,
        m_x_alpha: 1.0,
        alpha: order(alpha),
        beta: order(alpha),
        potential: GridFunction::zeros(grid),
        include_relativistic: false,
    }
}

fn alpha_strategy() -> impl Strategy<Value = f64> {
    (0.05f64..=1.0).prop_map(|a| (a * 100.0).round() / 100.0).prop_filter("positive", |a| *a > 0.0)
}

fn field_strategy(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constants_are_annihilated(
        a in alpha_strategy(),
        re in -100.0f64..100.0,
        im in -100.0f64..100.0,
    ) {
        let grid = Grid1D::new(-1.0, 0.05, 64).unwrap();
        let f = GridFunction::constant(grid, Complex64::new(re, im));
        for mode in [BoundaryMode::Periodic, BoundaryMode::ZeroExtension] {
            let d = mrl_derivative(&f, order(a), mode).unwrap();
            prop_assert!(d.max_abs() < 1e-10, "mode {mode:?}: {}", d.max_abs());
        }
    }

    #[test]
    fn derivative_is_linear(
        a in alpha_strategy(),
        f_vals in field_strategy(48),
        g_vals in field_strategy(48),
        s_re in -3.0f64..3.0,
        s_im in -3.0f64..3.0,
    ) {
        let grid = Grid1D::new(0.0, 0.1, 48).unwrap();
        let f = GridFunction::new(grid, f_vals).unwrap();
        let g = GridFunction::new(grid, g_vals).unwrap();
        let s = Complex64::new(s_re, s_im);
        let alpha = order(a);
        for mode in [BoundaryMode::Periodic, BoundaryMode::ZeroExtension] {
            let combo = mrl_derivative(&f.scale(s).add(&g).unwrap(), alpha, mode).unwrap();
            let parts = mrl_derivative(&f, alpha, mode).unwrap().scale(s)
                .add(&mrl_derivative(&g, alpha, mode).unwrap()).unwrap();
            let scale = combo.max_abs().max(1.0);
            prop_assert!(combo.max_abs_diff(&parts).unwrap() / scale < 1e-9);
        }
    }

    #[test]
    fn gl_weights_structure(a in alpha_strategy()) {
        let w = gl_weights(order(a), 64);
        prop_assert_eq!(w[0], 1.0);
        prop_assert!((w[1] + a).abs() < 1e-14);
        // for 0 < a <= 1 every later weight is nonpositive with decreasing
        // magnitude, and the partial sums stay nonnegative
        let mut partial = 1.0;
        for k in 1..w.len() {
            prop_assert!(w[k] <= 1e-15, "w[{k}] = {}", w[k]);
            if k > 1 {
                prop_assert!(w[k].abs() <= w[k - 1].abs() + 1e-15);
            }
            partial += w[k];
            prop_assert!(partial >= -1e-12, "partial sum at {k}: {partial}");
        }
    }

    #[test]
    fn sequential_depth_composes(
        a in alpha_strategy(),
        vals in field_strategy(40),
    ) {
        let grid = Grid1D::new(0.0, 0.1, 40).unwrap();
        let f = GridFunction::new(grid, vals).unwrap();
        let alpha = order(a);
        for mode in [BoundaryMode::Periodic, BoundaryMode::ZeroExtension] {
            let twice = sequential_derivative(&f, alpha, 2, mode).unwrap();
            let once = sequential_derivative(&f, alpha, 1, mode).unwrap();
            let once_again = sequential_derivative(&once, alpha, 1, mode).unwrap();
            let scale = twice.max_abs().max(1.0);
            prop_assert!(twice.max_abs_diff(&once_again).unwrap() / scale < 1e-9);
        }
    }

    #[test]
    fn density_nonnegative_and_phase_blind(vals in field_strategy(32)) {
        let grid = Grid1D::new(-1.0, 0.0625, 32).unwrap();
        let f = GridFunction::new(grid, vals).unwrap();
        let rho = probability_density(&f);
        for v in rho.values() {
            prop_assert!(v.re >= 0.0 && v.im == 0.0);
        }
        let rotated = f.scale(Complex64::new(0.0, 1.234).exp());
        let rho2 = probability_density(&rotated);
        prop_assert!(rho.max_abs_diff(&rho2).unwrap() < 1e-12 * rho.max_abs().max(1.0));
    }

    #[test]
    fn de_broglie_monotone_in_k_and_omega(
        a in alpha_strategy(),
        k1 in 0.1f64..5.0,
        dk in 0.1f64..5.0,
    ) {
        let grid = Grid1D::new(0.0, 0.1, 8).unwrap();
        let params = unit_params(grid, a);
        let (e1, p1) = de_broglie(k1, k1, &params).unwrap();
        let (e2, p2) = de_broglie(k1 + dk, k1 + dk, &params).unwrap();
        prop_assert!(e2 > e1 && p2 > p1);
        prop_assert!(e1 > 0.0 && p1 > 0.0);
    }

    #[test]
    fn polar_decomposition_reconstructs(
        k in -3.0f64..3.0,
        amp in 0.2f64..2.0,
    ) {
        let n = 128;
        let grid = Grid1D::new(-4.0, 8.0 / n as f64, n).unwrap();
        let psi = GridFunction::from_fn(grid, |x| {
            amp * (-x * x / 4.0).exp() * Complex64::new(0.0, k * x).exp()
        });
        let fields = decompose(&psi, 1.0, 1e-8 * psi.max_abs()).unwrap();
        for j in 0..n {
            if fields.node_mask[j] {
                continue;
            }
            let rebuilt = fields.r.values()[j].re
                * Complex64::new(0.0, fields.s.values()[j].re).exp();
            prop_assert!((rebuilt - psi.values()[j]).norm() < 1e-9);
        }
        // R is nonnegative by construction
        for v in fields.r.values() {
            prop_assert!(v.re >= 0.0);
        }
    }
}
