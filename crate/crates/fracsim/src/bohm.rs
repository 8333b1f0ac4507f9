//! Polar (Madelung/Bohm) decomposition, the fractional quantum potential
//! with relativistic correction, momentum/velocity/force/energy fields, the
//! Hamilton-Jacobi balance, trajectory integration, and closed-form
//! de Broglie checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fraccalc::{mrl_time_derivative, sequential_derivative, FracOrder};
use crate::gamma::gamma;
use crate::grid::{BoundaryMode, GridFunction};
use crate::model::{kinetic_coefficients, PhysicalParams};

/// Amplitude R, phase action S = hbar * arg(psi) (unwrapped), and the node
/// mask marking grid regions where R falls below the configured threshold.
#[derive(Debug, Clone)]
pub struct PolarFields {
    pub r: GridFunction,
    pub s: GridFunction,
    pub node_mask: Vec<bool>,
    /// Raw phase of the first unmasked sample before unwrapping; the global
    /// 2*pi branch choice, physically inert (only derivatives of S enter).
    pub branch: f64,
}

/// Full Bohmian field bundle on one snapshot.
#[derive(Debug, Clone)]
pub struct BohmFields {
    pub r: GridFunction,
    pub s: GridFunction,
    pub q: GridFunction,
    pub p: GridFunction,
    pub v: GridFunction,
    pub f: GridFunction,
    pub e: GridFunction,
    pub k: GridFunction,
    pub balance_residual: GridFunction,
    pub node_mask: Vec<bool>,
}

/// Default node threshold relative to max R.
pub const DEFAULT_EPS_R_REL: f64 = 1e-6;

/// Polar decomposition psi = R exp(i S / hbar). The phase is unwrapped left
/// to right, keeping adjacent jumps in (-pi, pi]; node regions are bridged by
/// continuation and masked.
pub fn decompose(psi: &GridFunction, hbar: f64, eps_r: f64) -> Result<PolarFields> {
    psi.check_finite()?;
    let n = psi.grid().n();
    let vals = psi.values();
    let r_vals: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
    let node_mask: Vec<bool> = r_vals.iter().map(|&r| r < eps_r).collect();
    if node_mask.iter().all(|&m| m) {
        return Err(Error::AllNodes);
    }

    let mut phase = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut branch = 0.0;
    let mut branch_set = false;
    for j in 0..n {
        let raw = if node_mask[j] {
            // continuation across node regions: hold the running phase
            if prev.is_nan() {
                0.0
            } else {
                prev
            }
        } else {
            vals[j].im.atan2(vals[j].re)
        };
        let unwrapped = if prev.is_nan() {
            raw
        } else {
            let mut d = raw - prev;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d <= -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            prev + d
        };
        if !branch_set && !node_mask[j] {
            branch = unwrapped;
            branch_set = true;
        }
        phase[j] = unwrapped;
        prev = unwrapped;
    }

    // fill masked runs so the phase is continuous at mask boundaries:
    // leading/trailing runs hold the nearest unmasked value, interior gaps
    // interpolate linearly. Otherwise the derivatives of S at the first
    // points past a node region would straddle an artificial jump.
    let first = node_mask.iter().position(|&m| !m).expect("not all nodes");
    let last = node_mask.iter().rposition(|&m| !m).expect("not all nodes");
    let head = phase[first];
    for p in phase.iter_mut().take(first) {
        *p = head;
    }
    let tail = phase[last];
    for p in phase.iter_mut().skip(last + 1) {
        *p = tail;
    }
    let mut j = first + 1;
    while j < last {
        if node_mask[j] {
            let start = j - 1;
            let mut end = j;
            while node_mask[end] {
                end += 1;
            }
            let (p0, p1) = (phase[start], phase[end]);
            let span = (end - start) as f64;
            for m in j..end {
                phase[m] = p0 + (p1 - p0) * (m - start) as f64 / span;
            }
            j = end;
        } else {
            j += 1;
        }
    }

    let grid = psi.grid();
    let r = GridFunction::new(grid, r_vals.iter().map(|&v| Complex64::new(v, 0.0)).collect())?;
    let s = GridFunction::new(grid, phase.iter().map(|&p| Complex64::new(hbar * p, 0.0)).collect())?;
    Ok(PolarFields {
        r,
        s,
        node_mask,
        branch,
    })
}

/// Shift the global 2*pi*hbar branch of `cur` to match `prev` at the first
/// index unmasked in both, keeping S continuous along a snapshot series.
pub fn align_branch(prev: &PolarFields, cur: &mut PolarFields, hbar: f64) {
    let two_pi_h = 2.0 * std::f64::consts::PI * hbar;
    let Some(j) = (0..cur.node_mask.len())
        .find(|&j| !cur.node_mask[j] && !prev.node_mask[j])
    else {
        return;
    };
    let diff = prev.s.values()[j].re - cur.s.values()[j].re;
    let shift = (diff / two_pi_h).round() * two_pi_h;
    if shift != 0.0 {
        for v in cur.s.values_mut() {
            v.re += shift;
        }
    }
}

fn apply_mask(f: &mut GridFunction, mask: &[bool]) {
    for (v, &m) in f.values_mut().iter_mut().zip(mask) {
        if m {
            *v = Complex64::ZERO;
        }
    }
}

/// Fractional quantum potential
/// Q_a = -c2 (1/R) d^a d^a R
///       - c4 (1/R) [ R^(4a) - (4/h^2) R S^(a) S^(3a) - (12/h^2) R^(a) S^(a) S^(2a)
///                    - (3/h^2) R (S^(2a))^2 - (6/h^2) R^(2a) (S^(a))^2 ],
/// with the (S^(a))^4 term living in K_a instead. Masked at nodes; division
/// by small R is handled by the mask, never by clipping.
pub fn quantum_potential(
    fields: &PolarFields,
    params: &PhysicalParams,
    mode: BoundaryMode,
) -> Result<GridFunction> {
    params.validate()?;
    let (c2, c4) = kinetic_coefficients(params);
    let alpha = params.alpha;
    let h2 = params.hbar * params.hbar;

    let r2 = sequential_derivative(&fields.r, alpha, 2, mode)?;
    let n = fields.r.grid().n();
    let rv = fields.r.values();
    let mut q_vals = vec![Complex64::ZERO; n];

    let rel = if params.include_relativistic {
        let r1 = sequential_derivative(&fields.r, alpha, 1, mode)?;
        let r4 = sequential_derivative(&fields.r, alpha, 4, mode)?;
        let s1 = sequential_derivative(&fields.s, alpha, 1, mode)?;
        let s2 = sequential_derivative(&fields.s, alpha, 2, mode)?;
        let s3 = sequential_derivative(&fields.s, alpha, 3, mode)?;
        Some((r1, r4, s1, s2, s3))
    } else {
        None
    };

    for (j, qv) in q_vals.iter_mut().enumerate() {
        if fields.node_mask[j] {
            continue;
        }
        let r = rv[j].re;
        let mut q = -c2 * r2.values()[j].re / r;
        if let Some((r1, r4, s1, s2, s3)) = &rel {
            let (r1j, r4j) = (r1.values()[j].re, r4.values()[j].re);
            let (s1j, s2j, s3j) = (s1.values()[j].re, s2.values()[j].re, s3.values()[j].re);
            let bracket = r4j
                - 4.0 / h2 * r * s1j * s3j
                - 12.0 / h2 * r1j * s1j * s2j
                - 3.0 / h2 * r * s2j * s2j
                - 6.0 / h2 * r2.values()[j].re * s1j * s1j;
            q -= c4 * bracket / r;
        }
        *qv = Complex64::new(q, 0.0);
    }
    GridFunction::new(fields.r.grid(), q_vals)
}

/// Fractional momentum p_a = hbar^(a-1) d^a S / dx^a.
pub fn momentum_field(
    fields: &PolarFields,
    hbar: f64,
    alpha: FracOrder,
    mode: BoundaryMode,
) -> Result<GridFunction> {
    let d = sequential_derivative(&fields.s, alpha, 1, mode)?;
    let mut p = d.scale(Complex64::new(hbar.powf(alpha.value() - 1.0), 0.0));
    apply_mask(&mut p, &fields.node_mask);
    Ok(p)
}

/// Fractional velocity v_a = lambda_{a,b} p_a.
pub fn velocity_field(p_alpha: &GridFunction, params: &PhysicalParams) -> GridFunction {
    p_alpha.scale(Complex64::new(params.lambda(), 0.0))
}

/// Fractional force F_a = -d^a_x (Q_a + V).
pub fn force_field(
    q: &GridFunction,
    potential: &GridFunction,
    alpha: FracOrder,
    mode: BoundaryMode,
) -> Result<GridFunction> {
    let total = q.add(potential)?;
    Ok(sequential_derivative(&total, alpha, 1, mode)?.scale(Complex64::new(-1.0, 0.0)))
}

/// Fractional mechanical energy E_a = -hbar^(a-1) d^a_t S (from the phase
/// history) and kinetic energy K_a = c2 (S^(a))^2 / hbar^2 - c4 (S^(a))^4 / hbar^4
/// (relativistic part gated on params.include_relativistic).
pub fn energy_fields(
    s_history: &[GridFunction],
    dt: f64,
    params: &PhysicalParams,
    mode: BoundaryMode,
) -> Result<(GridFunction, GridFunction)> {
    params.validate()?;
    let a = params.alpha.value();
    let st = mrl_time_derivative(s_history, dt, params.alpha, 1)?;
    let e = st.scale(Complex64::new(-params.hbar.powf(a - 1.0), 0.0));
    let k = kinetic_energy_field(s_history.last().unwrap(), params, mode)?;
    Ok((e, k))
}

/// K_a from one phase snapshot alone.
pub fn kinetic_energy_field(
    s: &GridFunction,
    params: &PhysicalParams,
    mode: BoundaryMode,
) -> Result<GridFunction> {
    let s1 = sequential_derivative(s, params.alpha, 1, mode)?;
    let (c2, c4) = kinetic_coefficients(params);
    let h2 = params.hbar * params.hbar;
    GridFunction::new(
        s.grid(),
        s1.values()
            .iter()
            .map(|v| {
                let g = v.re;
                let mut kv = c2 * g * g / h2;
                if params.include_relativistic {
                    kv -= c4 * g.powi(4) / (h2 * h2);
                }
                Complex64::new(kv, 0.0)
            })
            .collect(),
    )
}

/// Residual of the Hamilton-Jacobi-type balance E_a = K_a + Q_a + V.
pub fn energy_balance_residual(
    e: &GridFunction,
    k: &GridFunction,
    q: &GridFunction,
    potential: &GridFunction,
    node_mask: &[bool],
) -> Result<GridFunction> {
    let mut res = e.sub(k)?.sub(q)?.sub(potential)?;
    apply_mask(&mut res, node_mask);
    Ok(res)
}

/// Closed-form energy of the power-law phase S = E0 hbar (f(x) - t^a):
/// E_a = E0 hbar^a Gamma(a + 1), constant in x and t (the temporal power
/// rule has the exact value Gamma(a+1) t^0).
pub fn power_phase_energy(e0: f64, alpha: FracOrder, hbar: f64) -> Result<f64> {
    Ok(e0 * hbar.powf(alpha.value()) * gamma(alpha.value() + 1.0)?)
}

/// Closed-form fractional de Broglie relations:
/// E_a = hbar^a Gamma(a+1) omega^a, p_a = M Gamma(a+1) hbar^a k^a.
pub fn de_broglie(k: f64, omega: f64, params: &PhysicalParams) -> Result<(f64, f64)> {
    if k < 0.0 || omega < 0.0 {
        return Err(Error::Domain(format!(
            "de Broglie inputs must be nonnegative, got k={k}, omega={omega}"
        )));
    }
    let a = params.alpha.value();
    let g = gamma(a + 1.0)?;
    let e = params.hbar.powf(a) * g * omega.powf(a);
    let p = params.m_x_alpha * g * params.hbar.powf(a) * k.powf(a);
    Ok((e, p))
}

/// A Bohmian trajectory seeded at one position.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub seeded_at: f64,
    pub exited: bool,
}

/// Integrate x' from the fractional velocity field: the update is
/// x_{n+1} = x_n + sign(v) |v|^(1/a) dt with linear spatial interpolation.
/// At alpha = 1 this is explicit Euler along the Bohmian velocity. The
/// real root carries the sign of v, so negative velocities never abort.
pub fn integrate_trajectory(
    v_stack: &[GridFunction],
    seed: f64,
    alpha: FracOrder,
    dt: f64,
) -> Result<Trajectory> {
    if v_stack.is_empty() {
        return Err(Error::InsufficientHistory { needed: 1, have: 0 });
    }
    let grid = v_stack[0].grid();
    let xmin = grid.x0();
    let xmax = grid.x(grid.n() - 1);
    if seed < xmin || seed > xmax {
        return Err(Error::Domain(format!(
            "trajectory seed {seed} outside domain [{xmin}, {xmax}]"
        )));
    }
    let inv_a = 1.0 / alpha.value();
    let mut x = seed;
    let mut times = Vec::with_capacity(v_stack.len());
    let mut positions = Vec::with_capacity(v_stack.len());
    let mut exited = false;
    for (n, v_field) in v_stack.iter().enumerate() {
        times.push(n as f64 * dt);
        positions.push(x);
        if n + 1 == v_stack.len() {
            break;
        }
        let v = v_field.interp_real(x);
        x += v.signum() * v.abs().powf(inv_a) * dt;
        if x < xmin || x > xmax {
            exited = true;
            break;
        }
    }
    Ok(Trajectory {
        times,
        positions,
        seeded_at: seed,
        exited,
    })
}

/// Bohmian analysis of a snapshot series: per-snapshot fields with the phase
/// branch aligned in time so the temporal derivative of S is meaningful.
/// The energy field of the first snapshot has no history and is set to zero.
pub fn bohm_series(
    snapshots: &[GridFunction],
    dt: f64,
    params: &PhysicalParams,
    mode: BoundaryMode,
    eps_r_rel: f64,
) -> Result<Vec<BohmFields>> {
    params.validate()?;
    let mut polars: Vec<PolarFields> = Vec::with_capacity(snapshots.len());
    for psi in snapshots {
        let max_abs = psi.max_abs();
        if max_abs == 0.0 {
            return Err(Error::AllNodes);
        }
        let eps = eps_r_rel * max_abs;
        let mut polar = decompose(psi, params.hbar, eps)?;
        if let Some(prev) = polars.last() {
            align_branch(prev, &mut polar, params.hbar);
        }
        polars.push(polar);
    }

    let mut out = Vec::with_capacity(snapshots.len());
    let s_stack: Vec<GridFunction> = polars.iter().map(|p| p.s.clone()).collect();
    for (idx, polar) in polars.iter().enumerate() {
        let q = quantum_potential(polar, params, mode)?;
        let p = momentum_field(polar, params.hbar, params.alpha, mode)?;
        let v = velocity_field(&p, params);
        let f = force_field(&q, &params.potential, params.alpha, mode)?;
        // the first snapshot has no phase history, so its E field is zero
        let (e, k) = if idx == 0 {
            let k = kinetic_energy_field(&polar.s, params, mode)?;
            (GridFunction::zeros(polar.s.grid()), k)
        } else {
            energy_fields(&s_stack[..=idx], dt, params, mode)?
        };
        let balance_residual = energy_balance_residual(&e, &k, &q, &params.potential, &polar.node_mask)?;
        out.push(BohmFields {
            r: polar.r.clone(),
            s: polar.s.clone(),
            q,
            p,
            v,
            f,
            e,
            k,
            balance_residual,
            node_mask: polar.node_mask.clone(),
        });
    }
    Ok(out)
}
