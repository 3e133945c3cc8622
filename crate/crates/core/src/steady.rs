//! The steady boundary-value problem, solved by shooting.
//!
//! Steady solutions satisfy `f(Û)' = (B(Û)Û')'` with `Û(0) = U₀`,
//! `Û_II(1) = U₁ᵢᵢ`. Integrating once and using the hyperbolic constraint
//! `f_I(U) = f_I(U₀)` gives the first-order system
//!
//! ```text
//!   B₂₂(U) U_II' = f_II(U) − f_II(U₀) + B₂₂(U₀) C₂,
//! ```
//!
//! so profiles are exactly the roots `C₂` of the shooting map
//! `Φ(C₂) = U_II(1) − U₁ᵢᵢ`.

use crate::ode::{self, OdeOptions, OdeStatus, Trajectory};
use crate::system::{join_parts, MatF, StatePartition, SystemDef, VecF};
use crate::{Error, Result};
use std::cell::RefCell;
use std::io::Write;

/// Integrated constants of the steady system.
#[derive(Debug, Clone)]
pub struct ShootingConstants {
    /// Conserved hyperbolic flux level `f_I(U₀)`.
    pub c1: VecF,
    /// Shooting unknown (the ODE carries `B₂₂(U₀)C₂`).
    pub c2: VecF,
}

/// A computed steady profile.
pub struct SteadyProfile {
    pub u0: VecF,
    pub u1_ii: VecF,
    pub constants: ShootingConstants,
    /// `|Φ|` at the solution.
    pub residual: f64,
    /// Jacobian `dΦ/dC₂` at the solution.
    pub dphi: MatF,
    pub det_dphi: f64,
    /// `|det dΦ|` above the degeneracy threshold 1e−8.
    pub nondegenerate: bool,
    pub(crate) traj: Trajectory<f64>,
    fi_target: VecF,
}

impl SteadyProfile {
    /// Accepted integration nodes (useful as a quadrature grid).
    pub fn nodes(&self) -> &[f64] {
        &self.traj.nodes
    }

    /// Full state `U(x)`, reconstructing the hyperbolic part from the flux
    /// constraint.
    pub fn eval(&self, sys: &SystemDef, x: f64) -> Result<VecF> {
        let u_ii = self.traj.eval(x);
        let guess = self.guess_near(x);
        let u_i = resolve_hyperbolic(sys, &u_ii, &self.fi_target, &guess)?;
        Ok(join_parts(&u_i, &u_ii))
    }

    /// `(U(x), U'(x))`, the derivative coming from the profile ODE and the
    /// differentiated constraint `A₁₁ U_I' + A₁₂ U_II' = 0`.
    pub fn eval_with_deriv(&self, sys: &SystemDef, x: f64) -> Result<(VecF, VecF)> {
        let u = self.eval(sys, x)?;
        let blocks = sys.evaluate_blocks(&u)?;
        let b22_inv = blocks
            .b22
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix("B22 along profile".into()))?;
        let b22_0c2 = sys.b22(&self.u0) * &self.constants.c2;
        let u_ii_prime = b22_inv * (sys.f_ii(&u) - sys.f_ii(&self.u0) + b22_0c2);
        let u_i_prime = if sys.r > 0 {
            let a11_inv = blocks
                .a11
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::SingularMatrix("A11 along profile".into()))?;
            -(a11_inv * &blocks.a12 * &u_ii_prime)
        } else {
            VecF::zeros(0)
        };
        let mut du = VecF::zeros(sys.n);
        du.rows_mut(0, sys.r).copy_from(&u_i_prime);
        du.rows_mut(sys.r, sys.n - sys.r).copy_from(&u_ii_prime);
        Ok((u, du))
    }

    fn guess_near(&self, _x: f64) -> VecF {
        self.u0.rows(0, self.fi_target.len()).into_owned()
    }
}

/// Solve `f_I(u_I, u_II) = fI_target` for `u_I` by Newton iteration with the
/// exact block Jacobian `(df_I)_I`.
pub fn resolve_hyperbolic(
    sys: &SystemDef,
    u_ii: &VecF,
    fi_target: &VecF,
    guess: &VecF,
) -> Result<VecF> {
    let r = sys.r;
    if r == 0 {
        return Ok(VecF::zeros(0));
    }
    let tol = 1e-12 * (1.0 + fi_target.norm());
    let mut u_i = guess.clone();
    for _ in 0..50 {
        let u = join_parts(&u_i, u_ii);
        if !sys.in_domain(&u) {
            return Err(Error::DomainViolation(
                "hyperbolic resolution left the domain".into(),
            ));
        }
        let res = sys.f_i(&u) - fi_target;
        if res.norm() <= tol {
            return Ok(u_i);
        }
        let jac = sys.jac_f(&u).view((0, 0), (r, r)).into_owned();
        let step = jac.lu().solve(&res).ok_or_else(|| {
            Error::SingularMatrix("(df_I)_I singular during hyperbolic resolution".into())
        })?;
        u_i -= step;
    }
    // final check
    let u = join_parts(&u_i, u_ii);
    let res = sys.f_i(&u) - fi_target;
    if res.norm() <= tol {
        Ok(u_i)
    } else {
        Err(Error::NonConvergence(format!(
            "hyperbolic flux constraint unsolvable (residual {:.2e})",
            res.norm()
        )))
    }
}

/// Result of one shot: the parabolic trajectory plus termination status.
pub struct ShootResult {
    pub traj: Trajectory<f64>,
    pub fi_target: VecF,
}

impl ShootResult {
    pub fn completed(&self) -> bool {
        self.traj.completed()
    }
}

/// Integrate the profile ODE from `x = 0` with shooting constant `c2`.
pub fn shoot(sys: &SystemDef, u0: &VecF, c2: &VecF, opts: &OdeOptions) -> Result<ShootResult> {
    if !sys.in_domain(u0) {
        return Err(Error::DomainViolation("left boundary state".into()));
    }
    let fi_target = sys.f_i(u0);
    let f_ii0 = sys.f_ii(u0);
    let rhs_const = sys.b22(u0) * c2;
    let parts = StatePartition::split(u0, sys.r);
    let warm = RefCell::new(parts.u_i.clone());

    let field = |_x: f64, u_ii: &VecF| -> VecF {
        let guess = warm.borrow().clone();
        match resolve_hyperbolic(sys, u_ii, &fi_target, &guess) {
            Ok(u_i) => {
                *warm.borrow_mut() = u_i.clone();
                let u = join_parts(&u_i, u_ii);
                match sys.b22(&u).lu().solve(&(sys.f_ii(&u) - &f_ii0 + &rhs_const)) {
                    Some(v) => v,
                    None => VecF::from_element(u_ii.len(), f64::NAN),
                }
            }
            Err(_) => VecF::from_element(u_ii.len(), f64::NAN),
        }
    };
    let guard = |_x: f64, u_ii: &VecF| -> bool {
        let guess = warm.borrow().clone();
        match resolve_hyperbolic(sys, u_ii, &fi_target, &guess) {
            Ok(u_i) => sys.in_domain(&join_parts(&u_i, u_ii)),
            Err(_) => false,
        }
    };

    let traj = ode::integrate_ivp(&field, (0.0, 1.0), parts.u_ii.clone(), opts, Some(&guard));
    Ok(ShootResult { traj, fi_target })
}

/// The shooting map `Φ(C₂) = U_II(1) − U₁ᵢᵢ`.
pub fn phi(
    sys: &SystemDef,
    u0: &VecF,
    u1_ii: &VecF,
    c2: &VecF,
    opts: &OdeOptions,
) -> Result<VecF> {
    let shot = shoot(sys, u0, c2, opts)?;
    match shot.traj.status {
        OdeStatus::Completed => Ok(shot.traj.y_end() - u1_ii),
        OdeStatus::BlewUp(x) => Err(Error::Numerical(format!(
            "profile ODE blew up at x = {x:.4}; shooting map undefined"
        ))),
        OdeStatus::LeftDomain(x) => Err(Error::Numerical(format!(
            "profile left the system domain at x = {x:.4}; shooting map undefined"
        ))),
    }
}

/// Central finite-difference Jacobian of `Φ` in `C₂` (per-column step
/// `1e−6·(1 + |c2|)`), with one-sided fallback when a probe fails.
pub fn jacobian_dphi(
    sys: &SystemDef,
    u0: &VecF,
    c2: &VecF,
    opts: &OdeOptions,
) -> Result<MatF> {
    let p = sys.n - sys.r;
    let u0_ii = StatePartition::split(u0, sys.r).u_ii;
    let h = 1e-6 * (1.0 + c2.norm());
    let mut jac = MatF::zeros(p, p);
    let center = phi(sys, u0, &u0_ii, c2, opts);
    for j in 0..p {
        let mut cp = c2.clone();
        let mut cm = c2.clone();
        cp[j] += h;
        cm[j] -= h;
        let fp = phi(sys, u0, &u0_ii, &cp, opts);
        let fm = phi(sys, u0, &u0_ii, &cm, opts);
        let col = match (&fp, &fm) {
            (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
            (Ok(a), Err(_)) => match &center {
                Ok(c) => (a - c) / h,
                Err(_) => {
                    return Err(Error::Numerical(
                        "shooting map undefined near requested point".into(),
                    ))
                }
            },
            (Err(_), Ok(b)) => match &center {
                Ok(c) => (c - b) / h,
                Err(_) => {
                    return Err(Error::Numerical(
                        "shooting map undefined near requested point".into(),
                    ))
                }
            },
            (Err(_), Err(_)) => {
                return Err(Error::Numerical(
                    "Jacobian of the shooting map unavailable".into(),
                ))
            }
        };
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Damped (Armijo) Newton iteration on `C₂` for `Φ(C₂) = 0`.
pub fn solve_steady(
    sys: &SystemDef,
    u0: &VecF,
    u1_ii: &VecF,
    c2_guess: &VecF,
    opts: &OdeOptions,
) -> Result<SteadyProfile> {
    let tol = 1e-9 * (1.0 + u1_ii.norm());
    let mut c2 = c2_guess.clone();
    let mut res = phi(sys, u0, u1_ii, &c2, opts)?;
    let mut gradient_steps = 0usize;
    for _it in 0..100 {
        if res.norm() <= tol {
            return finish_profile(sys, u0, u1_ii, &c2, res.norm(), opts);
        }
        let jac = jacobian_dphi(sys, u0, &c2, opts)?;
        // Newton direction, falling back to a gradient step when dΦ is singular
        let step = match jac.clone().lu().solve(&res) {
            Some(s) => s,
            None => {
                gradient_steps += 1;
                let g = jac.transpose() * &res;
                let gn = g.norm();
                if gn == 0.0 {
                    return Err(Error::NonConvergence(
                        "singular dΦ with vanishing gradient".into(),
                    ));
                }
                g * (res.norm() / gn / gn.max(1.0))
            }
        };
        // Armijo backtracking on |Φ|²
        let f0 = res.norm_squared();
        let mut t = 1.0;
        let mut accepted = false;
        for _ls in 0..30 {
            let cand = &c2 - &step * t;
            if let Ok(r_new) = phi(sys, u0, u1_ii, &cand, opts) {
                if r_new.norm_squared() <= (1.0 - 2.0e-4 * t) * f0 {
                    c2 = cand;
                    res = r_new;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence(format!(
                "line search stalled at |Φ| = {:.3e} (c2 = {:?}, {} gradient steps)",
                res.norm(),
                c2.as_slice(),
                gradient_steps
            )));
        }
    }
    if res.norm() <= tol {
        return finish_profile(sys, u0, u1_ii, &c2, res.norm(), opts);
    }
    Err(Error::NonConvergence(format!(
        "Newton did not converge in 100 iterations; last |Φ| = {:.3e}, c2 = {:?}",
        res.norm(),
        c2.as_slice()
    )))
}

fn finish_profile(
    sys: &SystemDef,
    u0: &VecF,
    u1_ii: &VecF,
    c2: &VecF,
    residual: f64,
    opts: &OdeOptions,
) -> Result<SteadyProfile> {
    let shot = shoot(sys, u0, c2, opts)?;
    let dphi = jacobian_dphi(sys, u0, c2, opts)?;
    let det = dphi.clone().lu().determinant();
    Ok(SteadyProfile {
        u0: u0.clone(),
        u1_ii: u1_ii.clone(),
        constants: ShootingConstants {
            c1: sys.f_i(u0),
            c2: c2.clone(),
        },
        residual,
        dphi,
        det_dphi: det,
        nondegenerate: det.abs() > 1e-8,
        traj: shot.traj,
        fi_target: shot.fi_target,
    })
}

/// Construct a [`SteadyProfile`] directly from a known shooting constant
/// without Newton refinement (residual recorded as measured).
pub fn profile_from_c2(
    sys: &SystemDef,
    u0: &VecF,
    u1_ii: &VecF,
    c2: &VecF,
    opts: &OdeOptions,
) -> Result<SteadyProfile> {
    let r = phi(sys, u0, u1_ii, c2, opts)?;
    finish_profile(sys, u0, u1_ii, c2, r.norm(), opts)
}

// ---------------------------------------------------------------------------
// linear closed form
// ---------------------------------------------------------------------------

/// `φ₁(M) = ∫₀¹ e^{sM} ds`, via the augmented matrix exponential
/// `exp([[M, I], [0, 0]])` whose top-right block is exactly `φ₁(M)`.
pub fn phi1(m: &MatF) -> MatF {
    let p = m.nrows();
    let mut aug = MatF::zeros(2 * p, 2 * p);
    aug.view_mut((0, 0), (p, p)).copy_from(m);
    aug.view_mut((0, p), (p, p)).copy_from(&MatF::identity(p, p));
    let e = aug.exp();
    e.view((0, p), (p, p)).into_owned()
}

/// Exact steady solution for a constant-coefficient linear system.
#[derive(Debug, Clone)]
pub struct LinearSteadySolution {
    pub c2: VecF,
    pub a_tilde: MatF,
    /// `dΦ/dC₂ = φ₁(Ã)`.
    pub dphi: MatF,
    u0: VecF,
    r: usize,
    a11_inv_c1: VecF,
    a11_inv_a12: MatF,
}

impl LinearSteadySolution {
    /// Full state at `x` (exact, via matrix exponentials).
    pub fn eval(&self, x: f64) -> VecF {
        let u0_ii = self.u0.rows(self.r, self.u0.len() - self.r).into_owned();
        let u_ii = u0_ii + phi1_scaled(&self.a_tilde, x) * &self.c2;
        let u_i = &self.a11_inv_c1 - &self.a11_inv_a12 * &u_ii;
        join_parts(&u_i, &u_ii)
    }
}

fn phi1_scaled(m: &MatF, x: f64) -> MatF {
    // ∫₀ˣ e^{τM} dτ = x φ₁(xM)
    phi1(&(m * x)) * x
}

/// Solve the constant-coefficient steady problem in closed form
/// (`U_II(1) = U₀ᵢᵢ + φ₁(Ã) C₂`), failing with the offending eigenvalue when
/// the compatibility condition is violated.
pub fn linear_closed_form(
    a: &MatF,
    b22: &MatF,
    r: usize,
    u0: &VecF,
    u1_ii: &VecF,
) -> Result<LinearSteadySolution> {
    let n = a.nrows();
    let sys = crate::system::builtin_linear(a.clone(), b22.clone(), r)?;
    let blocks = sys.evaluate_blocks(u0)?;
    let a_tilde = blocks.a_tilde()?;
    // reject eigenvalues of Ã in 2πi·Z \ {0}
    for lam in a_tilde.complex_eigenvalues().iter() {
        let radius = lam.norm();
        let kmax = (radius / (2.0 * std::f64::consts::PI)).ceil() as i64 + 1;
        for k in 1..=kmax {
            for sgn in [-1.0f64, 1.0] {
                let target = num_complex::Complex64::new(
                    0.0,
                    sgn * 2.0 * std::f64::consts::PI * k as f64,
                );
                if (lam - target).norm() < 1e-8 {
                    return Err(Error::SpectralCondition { eigenvalue: *lam });
                }
            }
        }
    }
    let u0_ii = u0.rows(r, n - r).into_owned();
    let m = phi1(&a_tilde);
    let c2 = m
        .clone()
        .lu()
        .solve(&(u1_ii - &u0_ii))
        .ok_or_else(|| Error::SingularMatrix("φ₁(Ã) numerically singular".into()))?;
    let (a11_inv_c1, a11_inv_a12) = if r > 0 {
        let a11_inv = blocks
            .a11
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix("A11".into()))?;
        let c1 = &blocks.a11 * u0.rows(0, r).into_owned() + &blocks.a12 * &u0_ii;
        (&a11_inv * c1, &a11_inv * &blocks.a12)
    } else {
        (VecF::zeros(0), MatF::zeros(0, n - r))
    };
    Ok(LinearSteadySolution {
        c2,
        dphi: m,
        a_tilde,
        u0: u0.clone(),
        r,
        a11_inv_c1,
        a11_inv_a12,
    })
}

// ---------------------------------------------------------------------------
// entropy dissipation
// ---------------------------------------------------------------------------

/// Boundary term `[q̃ − dη̃·BU']₀¹` of the integrated entropy identity (after
/// normalizing the entropy gradient to vanish at `U(0)`), plus the pointwise
/// minimum of the dissipation integrand `⟨A⁰U', H_w B U'⟩` along the profile.
/// For admissible profiles the boundary term equals minus the integrated
/// dissipation, hence is ≤ 0, while the integrand stays ≥ 0 by convexity.
pub fn entropy_dissipation(sys: &SystemDef, profile: &SteadyProfile) -> Result<(f64, f64)> {
    let ent = sys
        .entropy
        .as_ref()
        .ok_or_else(|| Error::Unsupported("system has no entropy pair".into()))?;
    let u_at_0 = profile.eval(sys, 0.0)?;
    let ell = (ent.deta_dw)(&u_at_0);

    let eval_bt = |x: f64| -> Result<f64> {
        let (u, du) = profile.eval_with_deriv(sys, x)?;
        let q_tilde = (ent.q)(&u) - ell.dot(&sys.f(&u));
        let deta_tilde = (ent.deta_dw)(&u) - &ell;
        // B U' has zeros in the hyperbolic rows
        let u_ii_prime = du.rows(sys.r, sys.n - sys.r).into_owned();
        let b_up_ii = sys.b22(&u) * u_ii_prime;
        let mut b_up = VecF::zeros(sys.n);
        b_up.rows_mut(sys.r, sys.n - sys.r).copy_from(&b_up_ii);
        Ok(q_tilde - deta_tilde.dot(&b_up))
    };
    let boundary_term = eval_bt(1.0)? - eval_bt(0.0)?;

    let mut min_integrand = f64::INFINITY;
    let m = 400;
    for i in 0..=m {
        let x = i as f64 / m as f64;
        let (u, du) = profile.eval_with_deriv(sys, x)?;
        let a0 = sys.jac_f0(&u);
        let hess = (ent.hess_w)(&u);
        let u_ii_prime = du.rows(sys.r, sys.n - sys.r).into_owned();
        let b_up_ii = sys.b22(&u) * u_ii_prime;
        let mut b_up = VecF::zeros(sys.n);
        b_up.rows_mut(sys.r, sys.n - sys.r).copy_from(&b_up_ii);
        let val = (a0 * &du).dot(&(&hess * &b_up));
        min_integrand = min_integrand.min(val);
    }
    Ok((boundary_term, min_integrand))
}

// ---------------------------------------------------------------------------
// Brouwer-degree probe
// ---------------------------------------------------------------------------

/// Result of the multi-start degree estimate.
#[derive(Debug, Clone)]
pub struct DegreeReport {
    /// `Σ sgn det dΦ` over the distinct nondegenerate roots found.
    pub degree: i64,
    /// Distinct roots with their `det dΦ`.
    pub roots: Vec<(VecF, f64)>,
    /// Starts where `Φ` was undefined or Newton failed.
    pub failures: usize,
    /// True when some root has `|det dΦ| < 1e−8`.
    pub degenerate_root: bool,
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const HALTON_BASES: [usize; 6] = [2, 3, 5, 7, 11, 13];

/// Sampled Brouwer degree of `Φ(·) − U₁ᵢᵢ` over a box of shooting constants:
/// multi-start Newton from a low-discrepancy grid, deduplicated roots, signed
/// count. Exact only when all roots in the box are found.
pub fn brouwer_degree(
    sys: &SystemDef,
    u0: &VecF,
    u1_ii: &VecF,
    c2_lo: &VecF,
    c2_hi: &VecF,
    n_starts: usize,
    seed: u64,
    opts: &OdeOptions,
) -> Result<DegreeReport> {
    use rayon::prelude::*;
    let dim = sys.n - sys.r;
    if c2_lo.len() != dim || c2_hi.len() != dim {
        return Err(Error::InvalidParameter("degree box dimension mismatch".into()));
    }
    let offset = (seed % 8191) as usize + 1;
    let starts: Vec<VecF> = (0..n_starts)
        .map(|i| {
            VecF::from_fn(dim, |d, _| {
                let t = halton(i + offset, HALTON_BASES[d % HALTON_BASES.len()]);
                c2_lo[d] + t * (c2_hi[d] - c2_lo[d])
            })
        })
        .collect();

    let attempts: Vec<Option<(VecF, f64)>> = starts
        .par_iter()
        .map(|s| match solve_steady(sys, u0, u1_ii, s, opts) {
            Ok(p) => {
                let inside = (0..dim)
                    .all(|d| p.constants.c2[d] >= c2_lo[d] - 1e-9 && p.constants.c2[d] <= c2_hi[d] + 1e-9);
                if inside {
                    Some((p.constants.c2, p.det_dphi))
                } else {
                    None
                }
            }
            Err(_) => None,
        })
        .collect();

    let failures = attempts.iter().filter(|a| a.is_none()).count();
    let mut roots: Vec<(VecF, f64)> = Vec::new();
    let mut found: Vec<(VecF, f64)> = attempts.into_iter().flatten().collect();
    // deterministic order regardless of worker count
    found.sort_by(|a, b| {
        a.0.as_slice()
            .partial_cmp(b.0.as_slice())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for (c2, det) in found {
        if !roots.iter().any(|(r0, _)| (r0 - &c2).norm() < 1e-6) {
            roots.push((c2, det));
        }
    }
    let degenerate_root = roots.iter().any(|(_, d)| d.abs() < 1e-8);
    let degree = roots
        .iter()
        .filter(|(_, d)| d.abs() >= 1e-8)
        .map(|(_, d)| d.signum() as i64)
        .sum();
    Ok(DegreeReport {
        degree,
        roots,
        failures,
        degenerate_root,
    })
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

/// Write a profile as CSV (`x, U₁..Uₙ`), with '#'-prefixed header comments
/// carrying the shooting data.
pub fn write_profile_csv<W: Write>(
    sys: &SystemDef,
    profile: &SteadyProfile,
    n_samples: usize,
    mut w: W,
) -> Result<()> {
    writeln!(w, "# c2 = {:?}", profile.constants.c2.as_slice())?;
    writeln!(w, "# residual = {:.6e}", profile.residual)?;
    writeln!(w, "# det_dphi = {:.6e}", profile.det_dphi)?;
    write!(w, "x")?;
    for i in 1..=sys.n {
        write!(w, ",U{i}")?;
    }
    writeln!(w)?;
    for k in 0..n_samples {
        let x = k as f64 / (n_samples - 1) as f64;
        let u = profile.eval(sys, x)?;
        write!(w, "{x:.8}")?;
        for i in 0..sys.n {
            write!(w, ",{:.12e}", u[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
