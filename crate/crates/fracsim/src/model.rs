//! Physical parameters, dispersion relations, assembly of the right-hand
//! side of the fractional Schrodinger equation, and the fractional
//! Klein-Gordon residual diagnostic.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fraccalc::{mrl_time_derivative, sequential_derivative, FracOrder};
use crate::grid::{BoundaryMode, GridFunction};

/// Scales, fractional orders and external potential for one experiment.
///
/// Default code units set hbar = m = c = M_{x,alpha} = 1 so that every
/// fractional power of a scale is inert and all order effects live in the
/// derivatives.
#[derive(Debug, Clone)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
    pub c: f64,
    /// Diffusion factor introduced for dimensional consistency of the
    /// fractional spatial derivative; dimensionless at alpha = 1.
    pub m_x_alpha: f64,
    pub alpha: FracOrder,
    pub beta: FracOrder,
    /// Sampled external potential V(x), real-valued. One sampled V serves
    /// both the integer and fractional equations.
    pub potential: GridFunction,
    pub include_relativistic: bool,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("c", self.c),
            ("m_x_alpha", self.m_x_alpha),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be strictly positive, got {v}")));
            }
        }
        self.potential.check_finite()?;
        if !self.potential.is_real(0.0) {
            return Err(Error::Domain("potential must be real-valued".into()));
        }
        Ok(())
    }

    /// lambda_{alpha,beta} = (M c^alpha / c^beta)^{-1}, the factor that
    /// relates the fractional velocity to the fractional momentum.
    pub fn lambda(&self) -> f64 {
        self.c.powf(self.beta.value() - self.alpha.value()) / self.m_x_alpha
    }
}

/// Truncated Maclaurin expansion of sqrt(1 + x): coefficients (1, 1/2, -1/8).
#[derive(Debug, Clone, Copy)]
pub struct DispersionExpansion;

impl DispersionExpansion {
    pub const COEFFS: [f64; 3] = [1.0, 0.5, -0.125];
}

/// 1 + x/2 - x^2/8. Meaningful for |x| < 1; check range with
/// [`expansion_in_range`] — out-of-range input is a warning, not an error.
pub fn expand_dispersion(x_ab: f64) -> f64 {
    let c = DispersionExpansion::COEFFS;
    c[0] + c[1] * x_ab + c[2] * x_ab * x_ab
}

pub fn expansion_in_range(x_ab: f64) -> bool {
    x_ab.abs() < 1.0
}

/// Exact fractional dispersion E_beta = sqrt(p^{2a} c^{2a} + m^{2b} c^{4b}).
/// At alpha = beta = 1 this is the integer relation E = sqrt(p^2 c^2 + m^2 c^4).
pub fn relativistic_energy(p: f64, params: &PhysicalParams) -> f64 {
    let a = params.alpha.value();
    let b = params.beta.value();
    let pa = p.abs().powf(2.0 * a) * params.c.powf(2.0 * a);
    let mb = params.mass.powf(2.0 * b) * params.c.powf(4.0 * b);
    (pa + mb).sqrt()
}

/// Kinetic prefactors of the fractional Schrodinger equation:
/// c2 = M^2 hbar^{2a} / (2 m^b) * c^{2a}/c^{2b},
/// c4 = (1/8) M^4 hbar^{4a} / m^{3b} * c^{4a}/c^{6b}.
pub fn kinetic_coefficients(params: &PhysicalParams) -> (f64, f64) {
    let a = params.alpha.value();
    let b = params.beta.value();
    let m2 = params.m_x_alpha * params.m_x_alpha;
    let c2 = m2 * params.hbar.powf(2.0 * a) / (2.0 * params.mass.powf(b))
        * params.c.powf(2.0 * a - 2.0 * b);
    let c4 = 0.125 * m2 * m2 * params.hbar.powf(4.0 * a) / params.mass.powf(3.0 * b)
        * params.c.powf(4.0 * a - 6.0 * b);
    (c2, c4)
}

/// Right-hand side of i hbar^b d^b_t psi = [-c2 d^{2a}_x - c4 d^{4a}_x + V] psi.
/// The 2a and 4a derivatives are Miller-Ross cascades of depths 2 and 4;
/// the 4a term enters only when the relativistic correction is on.
pub fn schrodinger_rhs(
    psi: &GridFunction,
    params: &PhysicalParams,
    mode: BoundaryMode,
) -> Result<GridFunction> {
    params.validate()?;
    psi.check_finite()?;
    if psi.grid() != params.potential.grid() {
        return Err(Error::GridMismatch);
    }
    let (c2, c4) = kinetic_coefficients(params);
    let d2 = sequential_derivative(psi, params.alpha, 2, mode)?;
    let mut rhs = d2.scale(Complex64::new(-c2, 0.0));
    if params.include_relativistic {
        let d4 = sequential_derivative(psi, params.alpha, 4, mode)?;
        rhs = rhs.add(&d4.scale(Complex64::new(-c4, 0.0)))?;
    }
    rhs.add(&params.potential.mul(psi)?)
}

/// Pointwise residual of the fractional Klein-Gordon equation
/// (1/c^{2b}) d^{2b}_t psi - M^2 d^{2a}_x psi + (m^{2b} c^{2b} / hbar^{2b}) psi = 0,
/// evaluated at the latest time level of the stack. A diagnostic, not an evolver.
pub fn klein_gordon_residual(
    psi_history: &[GridFunction],
    dt: f64,
    params: &PhysicalParams,
    mode: BoundaryMode,
) -> Result<GridFunction> {
    params.validate()?;
    let b = params.beta.value();
    let a2 = params.m_x_alpha * params.m_x_alpha;
    let tt = mrl_time_derivative(psi_history, dt, params.beta, 2)?;
    let latest = psi_history.last().expect("history checked non-empty");
    let xx = sequential_derivative(latest, params.alpha, 2, mode)?;
    let mass_coeff =
        params.mass.powf(2.0 * b) * params.c.powf(2.0 * b) / params.hbar.powf(2.0 * b);
    let term_t = tt.scale(Complex64::new(params.c.powf(-2.0 * b), 0.0));
    let term_x = xx.scale(Complex64::new(-a2, 0.0));
    let term_m = latest.scale(Complex64::new(mass_coeff, 0.0));
    term_t.add(&term_x)?.add(&term_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn unit_params(grid: Grid1D, alpha: f64, beta: f64, rel: bool) -> PhysicalParams {
        PhysicalParams {
            hbar: 1.0,
            mass: 1.0,
            c: 1.0,
            m_x_alpha: 1.0,
            alpha: FracOrder::new(alpha).unwrap(),
            beta: FracOrder::new(beta).unwrap(),
            potential: GridFunction::zeros(grid),
            include_relativistic: rel,
        }
    }

    #[test]
    fn rest_energy_and_fractional_dispersion() {
        let grid = Grid1D::new(0.0, 0.1, 8).unwrap();
        let p = unit_params(grid, 1.0, 1.0, true);
        assert!((relativistic_energy(0.0, &p) - 1.0).abs() < 1e-15);
        let pf = unit_params(grid, 0.6, 0.8, true);
        assert!((relativistic_energy(0.0, &pf) - 1.0).abs() < 1e-15);
        // sqrt(1.09), cross-checked against a direct evaluation
        let e = relativistic_energy(0.3, &p);
        assert!((e - 1.044030650891055018).abs() < 1e-12);
    }

    #[test]
    fn dispersion_expansion_values() {
        assert_eq!(expand_dispersion(0.0), 1.0);
        assert!((expand_dispersion(0.1) - 1.04875).abs() < 1e-15);
        // truncation error consistent with O(x^3)
        let err = (expand_dispersion(0.1) - 1.1f64.sqrt()).abs();
        assert!(err < 1e-4 && err > 1e-5, "err {err}");
        assert!(expansion_in_range(0.3));
        assert!(!expansion_in_range(1.5));
    }

    #[test]
    fn expansion_error_is_cubic() {
        for x in [1e-4, 1e-3, 1e-2, 0.1, 0.3] {
            let err = (expand_dispersion(x) - (1.0 + x).sqrt()).abs();
            let ratio = err / (x * x * x);
            assert!(ratio < 0.1, "x={x}: ratio {ratio}");
        }
    }

    #[test]
    fn low_momentum_energy_matches_p4_expansion() {
        let grid = Grid1D::new(0.0, 0.1, 8).unwrap();
        let params = unit_params(grid, 1.0, 1.0, true);
        for p in [1e-3, 1e-2, 0.05, 0.1] {
            let exact = relativistic_energy(p, &params);
            let approx = 1.0 + p * p / 2.0 - p.powi(4) / 8.0;
            let err = (exact - approx).abs();
            assert!(err < 0.1 * p.powi(6) + 1e-15, "p={p}: err {err}");
        }
    }

    #[test]
    fn kinetic_coefficients_unit_and_scaled() {
        let grid = Grid1D::new(0.0, 0.1, 8).unwrap();
        let p = unit_params(grid, 1.0, 1.0, true);
        let (c2, c4) = kinetic_coefficients(&p);
        assert_eq!((c2, c4), (0.5, 0.125));
        // unit scales leave exponents inert regardless of alpha
        let p = unit_params(grid, 0.8, 1.0, true);
        let (c2, c4) = kinetic_coefficients(&p);
        assert_eq!((c2, c4), (0.5, 0.125));
        // hbar = 2: c2 = 4/2, c4 = 16/8
        let mut p = unit_params(grid, 1.0, 1.0, true);
        p.hbar = 2.0;
        let (c2, c4) = kinetic_coefficients(&p);
        assert!((c2 - 2.0).abs() < 1e-15 && (c4 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rhs_annihilates_constants_and_zero() {
        let grid = Grid1D::new(0.0, 0.05, 64).unwrap();
        let params = unit_params(grid, 0.7, 1.0, true);
        let zero = GridFunction::zeros(grid);
        let rhs = schrodinger_rhs(&zero, &params, BoundaryMode::Periodic).unwrap();
        assert_eq!(rhs.max_abs(), 0.0);
        let c = GridFunction::constant(grid, Complex64::new(1.3, 0.4));
        let rhs = schrodinger_rhs(&c, &params, BoundaryMode::Periodic).unwrap();
        assert!(rhs.max_abs() < 1e-10);
    }

    #[test]
    fn rhs_plane_wave_integer_limit() {
        let n = 1024;
        let len = 2.0 * std::f64::consts::PI;
        let grid = Grid1D::new(0.0, len / n as f64, n).unwrap();
        let k = 3.0;
        let psi = GridFunction::from_fn(grid, |x| Complex64::new(0.0, k * x).exp());
        let params = unit_params(grid, 1.0, 1.0, true);
        let rhs = schrodinger_rhs(&psi, &params, BoundaryMode::Periodic).unwrap();
        let expect = k * k / 2.0 - k.powi(4) / 8.0;
        // one-sided cascades: O(h) accuracy
        let mut emax: f64 = 0.0;
        for (r, p) in rhs.values().iter().zip(psi.values()) {
            emax = emax.max((r - expect * p).norm());
        }
        assert!(emax < 0.4, "emax {emax}");
    }

    #[test]
    fn rhs_matches_backward_difference_cascade_at_integer_order() {
        let grid = Grid1D::new(-1.0, 0.02, 100).unwrap();
        let psi = GridFunction::from_fn(grid, |x| Complex64::new((-x * x).exp(), 0.3 * x));
        let mut params = unit_params(grid, 1.0, 1.0, false);
        params.potential = GridFunction::from_real_fn(grid, |x| 0.5 * x * x);
        let rhs = schrodinger_rhs(&psi, &params, BoundaryMode::ZeroExtension).unwrap();

        // direct finite-difference discretization of the integer equation,
        // built from the same backward-difference stencil
        let h = grid.h();
        let v = psi.values();
        let mut expect = vec![Complex64::ZERO; grid.n()];
        for j in 2..grid.n() {
            let d2 = (v[j] - 2.0 * v[j - 1] + v[j - 2]) / (h * h);
            expect[j] = -0.5 * d2 + params.potential.values()[j] * v[j];
        }
        for j in 2..grid.n() {
            assert!((rhs.values()[j] - expect[j]).norm() < 1e-10);
        }
    }

    #[test]
    fn rhs_is_linear() {
        let grid = Grid1D::new(0.0, 0.05, 64).unwrap();
        let params = unit_params(grid, 0.6, 0.9, true);
        let f = GridFunction::from_fn(grid, |x| Complex64::new(x.sin(), x.cos()));
        let g = GridFunction::from_fn(grid, |x| Complex64::new(x * x, -x));
        let a = Complex64::new(1.7, -0.4);
        let b = Complex64::new(-0.2, 0.9);
        let combo = f.scale(a).add(&g.scale(b)).unwrap();
        let lhs = schrodinger_rhs(&combo, &params, BoundaryMode::Periodic).unwrap();
        let rhs = schrodinger_rhs(&f, &params, BoundaryMode::Periodic)
            .unwrap()
            .scale(a)
            .add(&schrodinger_rhs(&g, &params, BoundaryMode::Periodic).unwrap().scale(b))
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn kg_residual_zero_field_and_constant() {
        let grid = Grid1D::new(0.0, 0.05, 64).unwrap();
        let params = unit_params(grid, 1.0, 1.0, false);
        let stack: Vec<_> = (0..4).map(|_| GridFunction::zeros(grid)).collect();
        let r = klein_gordon_residual(&stack, 0.01, &params, BoundaryMode::Periodic).unwrap();
        assert_eq!(r.max_abs(), 0.0);

        // constant C: only the mass term survives
        let c = Complex64::new(2.5, 0.0);
        let stack: Vec<_> = (0..4).map(|_| GridFunction::constant(grid, c)).collect();
        let r = klein_gordon_residual(&stack, 0.01, &params, BoundaryMode::Periodic).unwrap();
        for v in r.values() {
            assert!((v - c).norm() < 1e-10);
        }
    }

    #[test]
    fn kg_residual_plane_wave_refines() {
        // psi = e^{i(kx - wt)}, w^2 = k^2 + 1 in unit scales: residual shrinks
        // under joint (h, dt) refinement.
        let k = 1.0;
        let w = (k * k + 1.0f64).sqrt();
        let mut norms = Vec::new();
        for (n, steps) in [(64usize, 64usize), (128, 128)] {
            let len = 2.0 * std::f64::consts::PI;
            let grid = Grid1D::new(0.0, len / n as f64, n).unwrap();
            let t_final = 0.5;
            let dt = t_final / steps as f64;
            let stack: Vec<GridFunction> = (0..=steps)
                .map(|m| {
                    let t = m as f64 * dt;
                    GridFunction::from_fn(grid, move |x| Complex64::new(0.0, k * x - w * t).exp())
                })
                .collect();
            let params = unit_params(grid, 1.0, 1.0, false);
            let r = klein_gordon_residual(&stack, dt, &params, BoundaryMode::Periodic).unwrap();
            norms.push(r.interior_l2_norm());
        }
        assert!(norms[1] < 0.7 * norms[0], "{norms:?}");
    }

    #[test]
    fn kg_requires_enough_history() {
        let grid = Grid1D::new(0.0, 0.05, 64).unwrap();
        let params = unit_params(grid, 1.0, 1.0, false);
        let stack = vec![GridFunction::zeros(grid), GridFunction::zeros(grid)];
        assert!(matches!(
            klein_gordon_residual(&stack, 0.01, &params, BoundaryMode::Periodic),
            Err(Error::InsufficientHistory { .. })
        ));
    }
}
