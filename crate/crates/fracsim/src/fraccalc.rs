//! Discrete and closed-form modified Riemann-Liouville (MRL) fractional
//! derivatives, with Miller-Ross sequential composition.
//!
//! The discrete operator is a Grunwald-Letnikov weighted history sum applied
//! to the constant-subtracted field, so the derivative of a constant vanishes
//! identically and the alpha = 1 limit is the two-point backward difference.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gamma::gamma;
use crate::grid::{BoundaryMode, GridFunction};

/// Fractional order restricted to (0, 1]. Composite orders (2a, 3a, 4a)
/// exist only as cascade depths, never as a single operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::BadOrder(value))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn one() -> Self {
        Self(1.0)
    }

    pub fn is_integer(&self) -> bool {
        self.0 == 1.0
    }
}

/// Grunwald-Letnikov weights: w_0 = 1, w_k = w_{k-1} * (k - 1 - alpha) / k.
/// These are the coefficients of (1 - z)^alpha. At alpha = 1 they reduce to
/// [1, -1, 0, 0, ...].
pub fn gl_weights(alpha: FracOrder, len: usize) -> Vec<f64> {
    let a = alpha.value();
    let mut w = Vec::with_capacity(len);
    if len == 0 {
        return w;
    }
    w.push(1.0);
    for k in 1..len {
        let prev = w[k - 1];
        w.push(prev * ((k as f64 - 1.0 - a) / k as f64));
    }
    w
}

/// Closed-form MRL power rule: D^alpha x^g = Gamma(g+1)/Gamma(g+1-alpha) x^(g-alpha).
pub fn mrl_power_derivative(gamma_exp: f64, alpha: FracOrder, x: f64) -> Result<f64> {
    if !(gamma_exp > 0.0) {
        return Err(Error::Domain(format!(
            "power-rule exponent must be positive, got {gamma_exp}"
        )));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("power rule requires x >= 0, got {x}")));
    }
    let a = alpha.value();
    if x == 0.0 && gamma_exp - a < 0.0 {
        return Err(Error::Domain(
            "singular: x = 0 with negative result exponent".into(),
        ));
    }
    let num = gamma(gamma_exp + 1.0)?;
    let den = gamma(gamma_exp + 1.0 - a)?;
    Ok(num / den * x.powf(gamma_exp - a))
}

/// MRL derivative of a constant is exactly zero.
pub fn mrl_constant_derivative(_alpha: FracOrder) -> f64 {
    0.0
}

/// Discrete MRL derivative on a uniform grid.
///
/// Zero-extension mode subtracts the left-edge value and truncates the
/// history at the domain edge; periodic mode subtracts the mean and wraps
/// the history over one period.
pub fn mrl_derivative(
    f: &GridFunction,
    alpha: FracOrder,
    mode: BoundaryMode,
) -> Result<GridFunction> {
    f.check_finite()?;
    let grid = f.grid();
    let n = grid.n();
    let scale = grid.h().powf(-alpha.value());
    let w = gl_weights(alpha, n);
    let vals = f.values();

    let out = match mode {
        BoundaryMode::ZeroExtension => {
            let fref = vals[0];
            let mut out = vec![Complex64::ZERO; n];
            for (j, o) in out.iter_mut().enumerate() {
                let mut acc = Complex64::ZERO;
                for (k, &wk) in w[..=j].iter().enumerate() {
                    acc += wk * (vals[j - k] - fref);
                }
                *o = acc * scale;
            }
            out
        }
        BoundaryMode::Periodic => {
            let mean = f.mean();
            let g: Vec<Complex64> = vals.iter().map(|&v| v - mean).collect();
            let mut out = vec![Complex64::ZERO; n];
            for (j, o) in out.iter_mut().enumerate() {
                let mut acc = Complex64::ZERO;
                for (k, &wk) in w.iter().enumerate() {
                    acc += wk * g[(j + n - k) % n];
                }
                *o = acc * scale;
            }
            out
        }
    };
    GridFunction::new(grid, out)
}

/// Miller-Ross sequential derivative: `depth` successive applications of the
/// single-order operator. Never builds a single operator of order depth*alpha.
pub fn sequential_derivative(
    f: &GridFunction,
    alpha: FracOrder,
    depth: usize,
    mode: BoundaryMode,
) -> Result<GridFunction> {
    if !(1..=4).contains(&depth) {
        return Err(Error::BadDepth(depth));
    }
    let mut out = mrl_derivative(f, alpha, mode)?;
    for _ in 1..depth {
        out = mrl_derivative(&out, alpha, mode)?;
    }
    Ok(out)
}

/// Discrete MRL derivative of a uniformly sampled time series, evaluated at
/// every level. Base-point subtraction uses the first sample, so a single
/// initial snapshot suffices to start the memory sum.
fn mrl_series_derivative(series: &[Complex64], dt: f64, order: FracOrder) -> Vec<Complex64> {
    let n = series.len();
    let w = gl_weights(order, n);
    let scale = dt.powf(-order.value());
    let base = series[0];
    (0..n)
        .map(|m| {
            let mut acc = Complex64::ZERO;
            for (k, &wk) in w[..=m].iter().enumerate() {
                acc += wk * (series[m - k] - base);
            }
            acc * scale
        })
        .collect()
}

/// Temporal MRL derivative of a snapshot stack, evaluated at the latest time.
/// `depth` > 1 cascades the operator over the derived series.
pub fn mrl_time_derivative(
    stack: &[GridFunction],
    dt: f64,
    order: FracOrder,
    depth: usize,
) -> Result<GridFunction> {
    if !(1..=4).contains(&depth) {
        return Err(Error::BadDepth(depth));
    }
    if stack.len() < depth + 1 {
        return Err(Error::InsufficientHistory {
            needed: depth + 1,
            have: stack.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let grid = stack[0].grid();
    let n = grid.n();
    let levels = stack.len();
    let mut out = vec![Complex64::ZERO; n];
    let mut series = vec![Complex64::ZERO; levels];
    for (j, o) in out.iter_mut().enumerate() {
        for (m, snap) in stack.iter().enumerate() {
            if snap.grid() != grid {
                return Err(Error::GridMismatch);
            }
            series[m] = snap.values()[j];
        }
        let mut derived = mrl_series_derivative(&series, dt, order);
        for _ in 1..depth {
            derived = mrl_series_derivative(&derived, dt, order);
        }
        *o = *derived.last().unwrap();
    }
    GridFunction::new(grid, out)
}

/// Which chain-rule identity to probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainRuleVariant {
    /// d^a f[u]/dx^a = (d^a f/du^a) (du/dx)^a, for differentiable u.
    NondiffOuter,
    /// d^a f[u]/dx^a = (df/du) (d^a u/dx^a), for coarse-grained composition.
    CoarseGrained,
}

/// Pointwise residual between the two sides of the selected chain-rule
/// identity, evaluated with the discrete operators. A test harness, not a
/// production rewrite rule: the paper presents both rules as approximations.
pub fn chain_rule_check(
    f_outer: &dyn Fn(f64) -> f64,
    f_outer_prime: &dyn Fn(f64) -> f64,
    u: &GridFunction,
    alpha: FracOrder,
    variant: ChainRuleVariant,
    mode: BoundaryMode,
) -> Result<GridFunction> {
    let grid = u.grid();
    let composed = GridFunction::from_real_fn(grid, |x| {
        let j = ((x - grid.x0()) / grid.h()).round() as usize;
        f_outer(u.values()[j.min(grid.n() - 1)].re)
    });
    composed.check_finite()?;
    let lhs = mrl_derivative(&composed, alpha, mode)?;

    let rhs = match variant {
        ChainRuleVariant::CoarseGrained => {
            let du = mrl_derivative(u, alpha, mode)?;
            let fp = u.map(|v| Complex64::new(f_outer_prime(v.re), 0.0));
            fp.mul(&du)?
        }
        ChainRuleVariant::NondiffOuter => {
            // Sample f on a uniform grid in u, differentiate there, and read
            // the result back at u(x_j) by linear interpolation.
            let umin = u.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
            let umax = u
                .values()
                .iter()
                .map(|v| v.re)
                .fold(f64::NEG_INFINITY, f64::max);
            if !(umax > umin) {
                return Err(Error::Domain("u has no spread; chain rule check needs a non-constant inner map".into()));
            }
            let nu = grid.n();
            let hu = (umax - umin) / (nu - 1) as f64;
            let ugrid = crate::grid::Grid1D::new(umin, hu, nu)?;
            let f_on_u = GridFunction::from_real_fn(ugrid, f_outer);
            let dfdu = mrl_derivative(&f_on_u, alpha, BoundaryMode::ZeroExtension)?;

            // du/dx by centered differences (one-sided at the edges).
            let h = grid.h();
            let n = grid.n();
            let uv = u.values();
            let a = alpha.value();
            let mut rhs_vals = vec![Complex64::ZERO; n];
            for (j, r) in rhs_vals.iter_mut().enumerate() {
                let dudx = if j == 0 {
                    (uv[1].re - uv[0].re) / h
                } else if j == n - 1 {
                    (uv[n - 1].re - uv[n - 2].re) / h
                } else {
                    (uv[j + 1].re - uv[j - 1].re) / (2.0 * h)
                };
                let frac_slope = dudx.signum() * dudx.abs().powf(a);
                *r = Complex64::new(dfdu.interp_real(uv[j].re) * frac_slope, 0.0);
            }
            GridFunction::new(grid, rhs_vals)?
        }
    };
    lhs.sub(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn order(a: f64) -> FracOrder {
        FracOrder::new(a).unwrap()
    }

    #[test]
    fn order_validation() {
        assert!(FracOrder::new(0.5).is_ok());
        assert!(FracOrder::new(1.0).is_ok());
        assert!(FracOrder::new(0.0).is_err());
        assert!(FracOrder::new(1.2).is_err());
        assert!(FracOrder::new(f64::NAN).is_err());
    }

    #[test]
    fn weights_reduce_to_backward_difference_at_integer_order() {
        let w = gl_weights(order(1.0), 6);
        assert_eq!(w[0], 1.0);
        assert_eq!(w[1], -1.0);
        for &wk in &w[2..] {
            assert_eq!(wk, 0.0);
        }
    }

    #[test]
    fn weights_sum_tends_to_zero() {
        // sum of all GL weights is (1-1)^alpha = 0 in the limit; partial sums
        // of a long window must already be small.
        let w = gl_weights(order(0.5), 4096);
        let s: f64 = w.iter().sum();
        assert!(s.abs() < 0.02, "partial weight sum {s}");
    }

    #[test]
    fn power_rule_closed_form() {
        // integer derivative of x^2
        let d = mrl_power_derivative(2.0, order(1.0), 3.0).unwrap();
        assert!((d - 6.0).abs() < 1e-12);
        // Gamma(2)/Gamma(3/2) = 2/sqrt(pi)
        let d = mrl_power_derivative(1.0, order(0.5), 1.0).unwrap();
        assert!((d - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-10);
        // x-independent when gamma == alpha: Gamma(1.5)/Gamma(1)
        let d = mrl_power_derivative(0.5, order(0.5), 5.0).unwrap();
        assert!((d - 0.88622692545275801365).abs() < 1e-10);
    }

    #[test]
    fn power_rule_domain_errors() {
        assert!(mrl_power_derivative(0.3, order(0.5), 0.0).is_err());
        assert!(mrl_power_derivative(-1.0, order(0.5), 1.0).is_err());
        // gamma + 1 - alpha at a pole cannot happen for gamma > 0, alpha <= 1;
        // but x = 0 with positive result exponent is fine.
        assert!(mrl_power_derivative(1.0, order(0.5), 0.0).is_ok());
    }

    #[test]
    fn constant_annihilation_both_modes() {
        let grid = Grid1D::new(0.0, 0.01, 128).unwrap();
        for a in [0.3, 0.5, 0.7, 1.0] {
            for mode in [BoundaryMode::Periodic, BoundaryMode::ZeroExtension] {
                let f = GridFunction::constant(grid, Complex64::new(3.2, -1.5));
                let d = mrl_derivative(&f, order(a), mode).unwrap();
                assert!(d.max_abs() < 1e-12, "alpha={a}, mode={mode:?}");
            }
        }
        assert_eq!(mrl_constant_derivative(order(0.5)), 0.0);
    }

    #[test]
    fn integer_order_is_backward_difference() {
        let grid = Grid1D::new(0.0, 0.1, 32).unwrap();
        let f = GridFunction::from_real_fn(grid, |x| x * x);
        let d = mrl_derivative(&f, order(1.0), BoundaryMode::ZeroExtension).unwrap();
        for j in 1..32 {
            let expect = (grid.x(j).powi(2) - grid.x(j - 1).powi(2)) / grid.h();
            assert!((d.values()[j].re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn power_rule_convergence_of_discrete_operator() {
        // f = x on [0,1], alpha = 0.5: converges to 2/sqrt(pi) sqrt(x), O(h).
        let mut errs = Vec::new();
        for n in [250usize, 500, 1000] {
            let h = 1.0 / n as f64;
            let grid = Grid1D::new(0.0, h, n + 1).unwrap();
            let f = GridFunction::from_real_fn(grid, |x| x);
            let d = mrl_derivative(&f, order(0.5), BoundaryMode::ZeroExtension).unwrap();
            let mut emax: f64 = 0.0;
            for j in grid.interior() {
                let x = grid.x(j);
                let exact = mrl_power_derivative(1.0, order(0.5), x).unwrap();
                emax = emax.max((d.values()[j].re - exact).abs());
            }
            errs.push(emax);
        }
        let order01 = (errs[0] / errs[1]).log2();
        let order12 = (errs[1] / errs[2]).log2();
        assert!(order01 > 0.9 && order12 > 0.9, "orders {order01} {order12}");
    }

    #[test]
    fn sequential_depth_one_is_single_application() {
        let grid = Grid1D::new(0.0, 0.05, 64).unwrap();
        let f = GridFunction::from_real_fn(grid, |x| (x + 0.3).sin());
        let a = order(0.7);
        let d1 = mrl_derivative(&f, a, BoundaryMode::ZeroExtension).unwrap();
        let s1 = sequential_derivative(&f, a, 1, BoundaryMode::ZeroExtension).unwrap();
        assert_eq!(d1, s1);
    }

    #[test]
    fn sequential_half_derivatives_compose_to_one() {
        // D^{1/2} D^{1/2} x = 1 in the interior; the composed GL weights
        // telescope to the backward difference, so only roundoff remains
        for n in [500usize, 1000, 2000] {
            let h = 1.0 / n as f64;
            let grid = Grid1D::new(0.0, h, n + 1).unwrap();
            let f = GridFunction::from_real_fn(grid, |x| x);
            let d = sequential_derivative(&f, order(0.5), 2, BoundaryMode::ZeroExtension).unwrap();
            let mut emax: f64 = 0.0;
            for j in grid.interior() {
                emax = emax.max((d.values()[j].re - 1.0).abs());
            }
            assert!(emax < 1e-10, "n {n}: {emax}");
        }
    }

    #[test]
    fn sequential_second_derivative_of_sine_periodic() {
        let n = 512;
        let h = 1.0 / n as f64;
        let grid = Grid1D::new(0.0, h, n).unwrap();
        let k = 2.0 * std::f64::consts::PI;
        let f = GridFunction::from_real_fn(grid, |x| (k * x).sin());
        let d = sequential_derivative(&f, order(1.0), 2, BoundaryMode::Periodic).unwrap();
        let mut emax: f64 = 0.0;
        for j in 0..n {
            let exact = -k * k * (k * grid.x(j)).sin();
            emax = emax.max((d.values()[j].re - exact).abs());
        }
        // one-sided cascade: first order accurate
        assert!(emax < k * k * k * h * 1.5, "emax {emax}");
    }

    #[test]
    fn rejects_bad_depth_and_small_history() {
        let grid = Grid1D::new(0.0, 0.1, 8).unwrap();
        let f = GridFunction::zeros(grid);
        assert!(sequential_derivative(&f, order(0.5), 0, BoundaryMode::Periodic).is_err());
        assert!(sequential_derivative(&f, order(0.5), 5, BoundaryMode::Periodic).is_err());
        let stack = vec![f.clone()];
        assert!(matches!(
            mrl_time_derivative(&stack, 0.1, order(0.5), 1),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn time_derivative_integer_limit_is_backward_difference() {
        let grid = Grid1D::new(0.0, 0.1, 8).unwrap();
        let dt = 0.01;
        let stack: Vec<GridFunction> = (0..5)
            .map(|m| {
                let t = m as f64 * dt;
                GridFunction::from_real_fn(grid, move |x| x + t * t)
            })
            .collect();
        let d = mrl_time_derivative(&stack, dt, order(1.0), 1).unwrap();
        let t4 = 4.0 * dt;
        let t3 = 3.0 * dt;
        let expect = (t4 * t4 - t3 * t3) / dt;
        for v in d.values() {
            assert!((v.re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_rule_identity_outer_map() {
        let grid = Grid1D::new(0.1, 0.01, 128).unwrap();
        let u = GridFunction::from_real_fn(grid, |x| x);
        for variant in [ChainRuleVariant::NondiffOuter, ChainRuleVariant::CoarseGrained] {
            let r = chain_rule_check(
                &|v| v,
                &|_| 1.0,
                &u,
                order(0.6),
                variant,
                BoundaryMode::ZeroExtension,
            )
            .unwrap();
            // identity outer map: both sides are D^a u up to interpolation error
            assert!(r.interior_max_abs() < 0.05, "{variant:?}: {}", r.interior_max_abs());
        }
    }

    #[test]
    fn chain_rule_integer_limit() {
        let grid = Grid1D::new(0.0, 0.005, 256).unwrap();
        let u = GridFunction::from_real_fn(grid, |x| x);
        let r = chain_rule_check(
            &|v| v * v,
            &|v| 2.0 * v,
            &u,
            order(1.0),
            ChainRuleVariant::CoarseGrained,
            BoundaryMode::ZeroExtension,
        )
        .unwrap();
        assert!(r.interior_max_abs() < 0.02, "{}", r.interior_max_abs());
    }

    #[test]
    fn chain_rule_fractional_residual_is_small_but_reported() {
        // the paper's rule "is a good approximation"; we only record the
        // interior residual magnitude, no exactness asserted.
        let grid = Grid1D::new(0.0, 0.002, 512).unwrap();
        let u = GridFunction::from_real_fn(grid, |x| x);
        let r = chain_rule_check(
            &|v| v * v,
            &|v| 2.0 * v,
            &u,
            order(0.5),
            ChainRuleVariant::NondiffOuter,
            BoundaryMode::ZeroExtension,
        )
        .unwrap();
        assert!(r.interior_max_abs().is_finite());
    }
}
