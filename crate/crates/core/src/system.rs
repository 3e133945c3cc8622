//! System definitions, Jacobian block structure, and structural assumption
//! checks.
//!
//! A system is the data of `∂_t f⁰(U) + ∂_x f(U) = ∂_x(B(U)∂_x U)` on states
//! `U ∈ 𝒰 ⊂ Rⁿ`, where the first `r` components are hyperbolic (no viscosity)
//! and the viscosity acts through the lower-right block `B₂₂`. `df⁰` is
//! required to be lower block triangular with identity in the top-left `r × r`
//! block.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;

pub type VecF = DVector<f64>;
pub type MatF = DMatrix<f64>;

pub type VecFn = Box<dyn Fn(&VecF) -> VecF + Send + Sync>;
pub type MatFn = Box<dyn Fn(&VecF) -> MatF + Send + Sync>;
type ScalFn = Box<dyn Fn(&VecF) -> f64 + Send + Sync>;
pub type PredFn = Box<dyn Fn(&VecF) -> bool + Send + Sync>;

/// Convex entropy pair (η, q) with derivatives taken with respect to the
/// conserved variables `w = f⁰(U)`; all closures take the primitive state `U`.
pub struct EntropyPair {
    pub eta: ScalFn,
    pub q: ScalFn,
    /// Gradient dη/dw as a length-n vector.
    pub deta_dw: VecFn,
    /// Hessian d²η/dw², n × n symmetric positive definite.
    pub hess_w: MatFn,
}

/// A hyperbolic–parabolic system on the unit interval.
pub struct SystemDef {
    pub name: String,
    /// State dimension.
    pub n: usize,
    /// Hyperbolic sub-dimension, `0 ≤ r < n`.
    pub r: usize,
    f0: VecFn,
    f: VecFn,
    b22: MatFn,
    jac_f0: Option<MatFn>,
    jac_f: Option<MatFn>,
    /// Block-diagonal symmetrizer `U ↦ S(U)`, when available.
    symmetrizer: Option<MatFn>,
    pub entropy: Option<EntropyPair>,
    domain: PredFn,
}

/// Split of a state into hyperbolic and parabolic parts.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePartition {
    pub u_i: VecF,
    pub u_ii: VecF,
}

impl StatePartition {
    pub fn split(u: &VecF, r: usize) -> Self {
        StatePartition {
            u_i: u.rows(0, r).into_owned(),
            u_ii: u.rows(r, u.len() - r).into_owned(),
        }
    }

    pub fn join(&self) -> VecF {
        let mut v = VecF::zeros(self.u_i.len() + self.u_ii.len());
        v.rows_mut(0, self.u_i.len()).copy_from(&self.u_i);
        v.rows_mut(self.u_i.len(), self.u_ii.len())
            .copy_from(&self.u_ii);
        v
    }
}

pub fn join_parts(u_i: &VecF, u_ii: &VecF) -> VecF {
    StatePartition {
        u_i: u_i.clone(),
        u_ii: u_ii.clone(),
    }
    .join()
}

/// Jacobian blocks of `A⁰ = df⁰` and `A = df` at a state, plus `B₂₂`.
#[derive(Debug, Clone)]
pub struct JacobianBlocks {
    pub a0: MatF,
    pub a11: MatF,
    pub a12: MatF,
    pub a21: MatF,
    pub a22: MatF,
    pub b22: MatF,
}

impl JacobianBlocks {
    /// Full advection Jacobian `A = df`.
    pub fn a_full(&self) -> MatF {
        let r = self.a11.nrows();
        let p = self.a22.nrows();
        let mut a = MatF::zeros(r + p, r + p);
        a.view_mut((0, 0), (r, r)).copy_from(&self.a11);
        a.view_mut((0, r), (r, p)).copy_from(&self.a12);
        a.view_mut((r, 0), (p, r)).copy_from(&self.a21);
        a.view_mut((r, r), (p, p)).copy_from(&self.a22);
        a
    }

    /// Reduced matrix `Ã = B₂₂⁻¹ (A₂₂ − A₂₁ A₁₁⁻¹ A₁₂)`.
    pub fn a_tilde(&self) -> Result<MatF> {
        let r = self.a11.nrows();
        let schur = if r > 0 {
            let a11_inv = self
                .a11
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::SingularMatrix("A11 not invertible".into()))?;
            &self.a22 - &self.a21 * a11_inv * &self.a12
        } else {
            self.a22.clone()
        };
        let b22_inv = self
            .b22
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix("B22 not invertible".into()))?;
        Ok(b22_inv * schur)
    }
}

/// Verdict of a single structural check.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

/// Witness data attached to a failing check.
#[derive(Debug, Clone)]
pub struct Witness {
    pub state: VecF,
    pub eigenvalue: Complex64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CheckVerdict {
    pub status: CheckStatus,
    pub witness: Option<Witness>,
    /// Worst margin over the sampled states (sign convention: positive means
    /// the check holds with room to spare).
    pub margin: f64,
}

impl CheckVerdict {
    fn not_applicable(reason: &str) -> Self {
        CheckVerdict {
            status: CheckStatus::NotApplicable,
            witness: Some(Witness {
                state: VecF::zeros(0),
                eigenvalue: Complex64::new(0.0, 0.0),
                detail: reason.to_string(),
            }),
            margin: f64::NAN,
        }
    }
}

/// Report of the structural assumption checks over a sample of states.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// Strict parabolicity: `Re σ((df⁰_II)_II⁻¹ B₂₂) > 0`.
    pub h1: CheckVerdict,
    /// Hyperbolicity and left-to-right flow: `σ((df_I)_I)` real positive.
    pub h2: CheckVerdict,
    /// Symmetrizer structure, when a symmetrizer is provided.
    pub h3: CheckVerdict,
    /// Compatibility: `σ(Ã)` away from `2πi·Z \ {0}`.
    pub speccond: CheckVerdict,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        [&self.h1, &self.h2, &self.h3, &self.speccond]
            .iter()
            .all(|v| v.status != CheckStatus::Fail)
    }
}

const FD_EPS_CBRT: f64 = 6.055454452393343e-6; // (machine epsilon)^(1/3)

/// Central finite-difference Jacobian with step `h·max(1, |U|)`.
pub fn fd_jacobian(f: &dyn Fn(&VecF) -> VecF, u: &VecF, dim_out: usize) -> MatF {
    let h = FD_EPS_CBRT * u.norm().max(1.0);
    let mut jac = MatF::zeros(dim_out, u.len());
    for j in 0..u.len() {
        let mut up = u.clone();
        let mut um = u.clone();
        up[j] += h;
        um[j] -= h;
        let col = (f(&up) - f(&um)) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

impl SystemDef {
    /// General constructor for user-defined systems; Jacobians default to
    /// finite differences, symmetrizer and entropy are optional extras set
    /// through [`SystemDef::with_symmetrizer`] / [`SystemDef::with_entropy`].
    pub fn from_parts(
        name: impl Into<String>,
        n: usize,
        r: usize,
        f0: VecFn,
        f: VecFn,
        b22: MatFn,
        domain: PredFn,
    ) -> Result<Self> {
        if r >= n {
            return Err(Error::InvalidParameter(format!(
                "need 0 ≤ r < n (got r={r}, n={n})"
            )));
        }
        Ok(SystemDef {
            name: name.into(),
            n,
            r,
            f0,
            f,
            b22,
            jac_f0: None,
            jac_f: None,
            symmetrizer: None,
            entropy: None,
            domain,
        })
    }

    pub fn with_symmetrizer(mut self, s: MatFn) -> Self {
        self.symmetrizer = Some(s);
        self
    }

    pub fn with_entropy(mut self, e: EntropyPair) -> Self {
        self.entropy = Some(e);
        self
    }

    pub fn f0(&self, u: &VecF) -> VecF {
        (self.f0)(u)
    }
    pub fn f(&self, u: &VecF) -> VecF {
        (self.f)(u)
    }
    pub fn b22(&self, u: &VecF) -> MatF {
        (self.b22)(u)
    }
    pub fn in_domain(&self, u: &VecF) -> bool {
        (self.domain)(u)
    }
    pub fn has_symmetrizer(&self) -> bool {
        self.symmetrizer.is_some()
    }
    pub fn symmetrizer(&self, u: &VecF) -> Option<MatF> {
        self.symmetrizer.as_ref().map(|s| s(u))
    }

    /// Hyperbolic part of the space flux.
    pub fn f_i(&self, u: &VecF) -> VecF {
        self.f(u).rows(0, self.r).into_owned()
    }

    /// Parabolic part of the space flux.
    pub fn f_ii(&self, u: &VecF) -> VecF {
        self.f(u).rows(self.r, self.n - self.r).into_owned()
    }

    pub fn jac_f0(&self, u: &VecF) -> MatF {
        match &self.jac_f0 {
            Some(j) => j(u),
            None => fd_jacobian(&|v| (self.f0)(v), u, self.n),
        }
    }

    pub fn jac_f(&self, u: &VecF) -> MatF {
        match &self.jac_f {
            Some(j) => j(u),
            None => fd_jacobian(&|v| (self.f)(v), u, self.n),
        }
    }

    /// Finite-difference Jacobians regardless of analytic providers (oracle
    /// for consistency tests).
    pub fn jac_f_fd(&self, u: &VecF) -> MatF {
        fd_jacobian(&|v| (self.f)(v), u, self.n)
    }
    pub fn jac_f0_fd(&self, u: &VecF) -> MatF {
        fd_jacobian(&|v| (self.f0)(v), u, self.n)
    }

    /// Partial derivatives `∂B₂₂/∂U_k`, k = 1..n (finite differences).
    pub fn b22_partials(&self, u: &VecF) -> Vec<MatF> {
        let h = FD_EPS_CBRT * u.norm().max(1.0);
        (0..self.n)
            .map(|k| {
                let mut up = u.clone();
                let mut um = u.clone();
                up[k] += h;
                um[k] -= h;
                ((self.b22)(&up) - (self.b22)(&um)) / (2.0 * h)
            })
            .collect()
    }

    /// Evaluate the Jacobian blocks at a state.
    pub fn evaluate_blocks(&self, u: &VecF) -> Result<JacobianBlocks> {
        if u.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "state dimension {} != system dimension {}",
                u.len(),
                self.n
            )));
        }
        if !self.in_domain(u) {
            return Err(Error::DomainViolation(format!("state {:?}", u.as_slice())));
        }
        let a0 = self.jac_f0(u);
        let a = self.jac_f(u);
        let (n, r) = (self.n, self.r);
        Ok(JacobianBlocks {
            a0,
            a11: a.view((0, 0), (r, r)).into_owned(),
            a12: a.view((0, r), (r, n - r)).into_owned(),
            a21: a.view((r, 0), (n - r, r)).into_owned(),
            a22: a.view((r, r), (n - r, n - r)).into_owned(),
            b22: (self.b22)(u),
        })
    }
}

fn eig_complex(m: &MatF) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Run the structural checks at each sampled state.
///
/// `tol` controls both strictness margins (eigenvalue real parts must exceed
/// `tol`) and the scale-invariant realness test `|Im λ| < tol·(1 + |λ|)`.
pub fn check_assumptions(sys: &SystemDef, samples: &[VecF], tol: f64) -> Result<AssumptionReport> {
    let mut h1 = CheckVerdict {
        status: CheckStatus::Pass,
        witness: None,
        margin: f64::INFINITY,
    };
    let mut h2 = h1.clone();
    let mut h3 = if sys.has_symmetrizer() {
        h1.clone()
    } else {
        CheckVerdict::not_applicable("no symmetrizer provided")
    };
    let mut speccond = h1.clone();
    if sys.r == 0 {
        h2 = CheckVerdict::not_applicable("r = 0: no hyperbolic block");
    }

    for u in samples {
        if !sys.in_domain(u) {
            return Err(Error::DomainViolation(format!("sample {:?}", u.as_slice())));
        }
        let blocks = sys.evaluate_blocks(u)?;

        // H1: Re σ((df⁰_II)_II⁻¹ B₂₂) > 0
        let p = sys.n - sys.r;
        let a0_ii_ii = blocks.a0.view((sys.r, sys.r), (p, p)).into_owned();
        match a0_ii_ii.try_inverse() {
            Some(inv) => {
                let m = inv * &blocks.b22;
                for lam in eig_complex(&m) {
                    let margin = lam.re - tol;
                    if margin < h1.margin {
                        h1.margin = margin;
                    }
                    if lam.re <= tol && h1.status == CheckStatus::Pass {
                        h1.status = CheckStatus::Fail;
                        h1.witness = Some(Witness {
                            state: u.clone(),
                            eigenvalue: lam,
                            detail: "eigenvalue of (df⁰_II)_II⁻¹B₂₂ with nonpositive real part"
                                .into(),
                        });
                    }
                }
            }
            None => {
                h1.status = CheckStatus::Fail;
                h1.witness = Some(Witness {
                    state: u.clone(),
                    eigenvalue: Complex64::new(0.0, 0.0),
                    detail: "(df⁰_II)_II singular".into(),
                });
            }
        }

        // H2: σ((df_I)_I) real and positive
        if sys.r > 0 {
            for lam in eig_complex(&blocks.a11) {
                let real_ok = lam.im.abs() < tol * (1.0 + lam.norm());
                let margin = lam.re - tol;
                if margin < h2.margin {
                    h2.margin = margin;
                }
                if (!real_ok || lam.re <= tol) && h2.status == CheckStatus::Pass {
                    h2.status = CheckStatus::Fail;
                    h2.witness = Some(Witness {
                        state: u.clone(),
                        eigenvalue: lam,
                        detail: "eigenvalue of (df_I)_I not real positive".into(),
                    });
                }
            }
        }

        // speccond: σ(Ã) away from 2πik, k ≠ 0
        match blocks.a_tilde() {
            Ok(atilde) => {
                let eigs = eig_complex(&atilde);
                let radius = eigs.iter().map(|l| l.norm()).fold(0.0, f64::max);
                let kmax = (radius / (2.0 * std::f64::consts::PI)).ceil() as i64 + 1;
                for lam in eigs {
                    for k in 1..=kmax {
                        for sgn in [-1.0, 1.0] {
                            let target =
                                Complex64::new(0.0, sgn * 2.0 * std::f64::consts::PI * k as f64);
                            let dist = (lam - target).norm();
                            if dist < speccond.margin {
                                speccond.margin = dist;
                            }
                            if dist <= tol && speccond.status == CheckStatus::Pass {
                                speccond.status = CheckStatus::Fail;
                                speccond.witness = Some(Witness {
                                    state: u.clone(),
                                    eigenvalue: lam,
                                    detail: format!(
                                        "eigenvalue of Ã within {tol:.1e} of 2πi·{}",
                                        (sgn * k as f64) as i64
                                    ),
                                });
                            }
                        }
                    }
                }
            }
            Err(_) => {
                speccond = CheckVerdict::not_applicable("A11 singular: Ã not evaluable");
            }
        }

        // H3: symmetrizer structure
        if let Some(s) = sys.symmetrizer(u) {
            let sa = &s * blocks.a_full();
            let sym_resid = (&sa - sa.transpose()).norm() / (1.0 + sa.norm());
            // positivity of the symmetric part of S·A⁰
            let sa0 = &s * &blocks.a0;
            let sa0_sym = (&sa0 + sa0.transpose()) * 0.5;
            let min_eig_sa0 = sa0_sym
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let s22 = s.view((sys.r, sys.r), (p, p)).into_owned();
            let s22b = &s22 * &blocks.b22;
            let s22b_sym = (&s22b + s22b.transpose()) * 0.5;
            let min_eig_s22b = s22b_sym
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let margin = min_eig_sa0.min(min_eig_s22b);
            if margin < h3.margin {
                h3.margin = margin;
            }
            if (sym_resid > tol || min_eig_sa0 <= 0.0 || min_eig_s22b <= 0.0)
                && h3.status == CheckStatus::Pass
            {
                h3.status = CheckStatus::Fail;
                h3.witness = Some(Witness {
                    state: u.clone(),
                    eigenvalue: Complex64::new(min_eig_sa0.min(min_eig_s22b), 0.0),
                    detail: format!(
                        "S·A symmetry residual {sym_resid:.2e}, min eig sym(S·A⁰) {min_eig_sa0:.2e}, min eig sym(S₂₂B₂₂) {min_eig_s22b:.2e}"
                    ),
                });
            }
        }
    }
    Ok(AssumptionReport { h1, h2, h3, speccond })
}

// ---------------------------------------------------------------------------
// built-in systems
// ---------------------------------------------------------------------------

/// Constant-coefficient linear system `U_t + A U_x = (B U_x)_x` with
/// `f⁰(U) = U` and block-diagonal `B = diag(0, B₂₂)`.
pub fn builtin_linear(a: MatF, b22: MatF, r: usize) -> Result<SystemDef> {
    let n = a.nrows();
    if a.ncols() != n || b22.nrows() != n - r || b22.ncols() != n - r || r >= n {
        return Err(Error::InvalidParameter(
            "linear system: need square A, (n−r)×(n−r) B22, 0 ≤ r < n".into(),
        ));
    }
    if b22.clone().try_inverse().is_none() {
        return Err(Error::InvalidParameter("linear system: B22 singular".into()));
    }
    let a_cl = a.clone();
    let a_jac = a.clone();
    let b_cl = b22.clone();
    Ok(SystemDef {
        name: "linear".into(),
        n,
        r,
        f0: Box::new(|u: &VecF| u.clone()),
        f: Box::new(move |u: &VecF| &a_cl * u),
        b22: Box::new(move |_u: &VecF| b_cl.clone()),
        jac_f0: Some(Box::new(move |_u: &VecF| MatF::identity(n, n))),
        jac_f: Some(Box::new(move |_u: &VecF| a_jac.clone())),
        symmetrizer: None,
        entropy: None,
        domain: Box::new(|_u: &VecF| true),
    })
}

/// The 2π-rotation example `U_t + [[0,2π],[−2π,0]] U_x = U_xx` (r = 0), which
/// violates the spectral compatibility condition with witness ±2πi.
pub fn builtin_rotation() -> SystemDef {
    let tau = 2.0 * std::f64::consts::PI;
    let a = MatF::from_row_slice(2, 2, &[0.0, tau, -tau, 0.0]);
    builtin_linear(a, MatF::identity(2, 2), 0).unwrap()
}

/// Isentropic Navier–Stokes with power-law pressure `p(ρ) = a ρ^γ`:
///
/// ```text
///   ρ_t + (ρu)_x = 0,
///   (ρu)_t + (ρu² + p(ρ))_x = ν u_xx,
/// ```
///
/// in primitive variables `U = (ρ, u)` with `r = 1`. Ships an entropy pair
/// `η = ρu²/2 + P(ρ)`, `q = u(η + p)` with `P(ρ) = aρ^γ/(γ−1)`, and a diagonal
/// symmetrizer making `S·A` symmetric.
pub fn builtin_isentropic(gamma: f64, a: f64, nu: f64) -> Result<SystemDef> {
    if gamma <= 1.0 || a <= 0.0 || nu <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "isentropic: need γ>1, a>0, ν>0 (got γ={gamma}, a={a}, ν={nu})"
        )));
    }
    let p = move |rho: f64| a * rho.powf(gamma);
    let dp = move |rho: f64| a * gamma * rho.powf(gamma - 1.0);
    let cap_p = move |rho: f64| a * rho.powf(gamma) / (gamma - 1.0);
    let dcap_p = move |rho: f64| a * gamma * rho.powf(gamma - 1.0) / (gamma - 1.0);

    Ok(SystemDef {
        name: "isentropic_ns".into(),
        n: 2,
        r: 1,
        f0: Box::new(|u: &VecF| VecF::from_vec(vec![u[0], u[0] * u[1]])),
        f: Box::new(move |u: &VecF| {
            VecF::from_vec(vec![u[0] * u[1], u[0] * u[1] * u[1] + p(u[0])])
        }),
        b22: Box::new(move |_u: &VecF| MatF::from_element(1, 1, nu)),
        jac_f0: Some(Box::new(|u: &VecF| {
            MatF::from_row_slice(2, 2, &[1.0, 0.0, u[1], u[0]])
        })),
        jac_f: Some(Box::new(move |u: &VecF| {
            let (rho, v) = (u[0], u[1]);
            MatF::from_row_slice(2, 2, &[v, rho, v * v + dp(rho), 2.0 * rho * v])
        })),
        symmetrizer: Some(Box::new(move |u: &VecF| {
            let (rho, v) = (u[0], u[1]);
            MatF::from_diagonal(&VecF::from_vec(vec![(v * v + dp(rho)) / rho, 1.0]))
        })),
        entropy: Some(EntropyPair {
            eta: Box::new(move |u: &VecF| 0.5 * u[0] * u[1] * u[1] + cap_p(u[0])),
            q: Box::new(move |u: &VecF| {
                u[1] * (0.5 * u[0] * u[1] * u[1] + cap_p(u[0]) + p(u[0]))
            }),
            deta_dw: Box::new(move |u: &VecF| {
                VecF::from_vec(vec![dcap_p(u[0]) - 0.5 * u[1] * u[1], u[1]])
            }),
            hess_w: Box::new(move |u: &VecF| {
                let (rho, v) = (u[0], u[1]);
                MatF::from_row_slice(2, 2, &[v * v + dp(rho), -v, -v, 1.0]) / rho
            }),
        }),
        domain: Box::new(|u: &VecF| u[0] > 0.0 && u[1] > 0.0),
    })
}

/// Full gas dynamics in `U = (ρ, u, e)` (density, velocity, specific internal
/// energy) with pressure `p = Γρe`, viscosity `α` in the momentum equation and
/// heat conductivity `ν` in the energy equation (`r = 1`):
///
/// ```text
///   ρ_t + (ρu)_x = 0,
///   (ρu)_t + (ρu² + Γρe)_x = (α u_x)_x,
///   (ρE)_t + (ρuE + Γρeu)_x = (ν e_x + α u u_x)_x,    E = e + u²/2.
/// ```
pub fn builtin_full_gas(gamma_gruneisen: f64, alpha: f64, nu: f64) -> Result<SystemDef> {
    let g = gamma_gruneisen;
    if g <= 0.0 || alpha <= 0.0 || nu <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "full gas: need Γ>0, α>0, ν>0 (got Γ={g}, α={alpha}, ν={nu})"
        )));
    }
    Ok(SystemDef {
        name: "full_gas".into(),
        n: 3,
        r: 1,
        f0: Box::new(|u: &VecF| {
            let (rho, v, e) = (u[0], u[1], u[2]);
            VecF::from_vec(vec![rho, rho * v, rho * (e + 0.5 * v * v)])
        }),
        f: Box::new(move |u: &VecF| {
            let (rho, v, e) = (u[0], u[1], u[2]);
            VecF::from_vec(vec![
                rho * v,
                rho * v * v + g * rho * e,
                rho * v * (e + 0.5 * v * v) + g * rho * e * v,
            ])
        }),
        b22: Box::new(move |u: &VecF| {
            MatF::from_row_slice(2, 2, &[alpha, 0.0, alpha * u[1], nu])
        }),
        jac_f0: Some(Box::new(|u: &VecF| {
            let (rho, v, e) = (u[0], u[1], u[2]);
            MatF::from_row_slice(
                3,
                3,
                &[
                    1.0,
                    0.0,
                    0.0,
                    v,
                    rho,
                    0.0,
                    e + 0.5 * v * v,
                    rho * v,
                    rho,
                ],
            )
        })),
        jac_f: Some(Box::new(move |u: &VecF| {
            let (rho, v, e) = (u[0], u[1], u[2]);
            MatF::from_row_slice(
                3,
                3,
                &[
                    v,
                    rho,
                    0.0,
                    v * v + g * e,
                    2.0 * rho * v,
                    g * rho,
                    v * e * (1.0 + g) + 0.5 * v * v * v,
                    rho * e * (1.0 + g) + 1.5 * rho * v * v,
                    rho * v * (1.0 + g),
                ],
            )
        })),
        symmetrizer: None,
        entropy: None,
        domain: Box::new(|u: &VecF| u[0] > 0.0 && u[1] > 0.0 && u[2] > 0.0),
    })
}

/// JSON description of a system, as accepted by the CLI and FFI layers.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "system", deny_unknown_fields, rename_all = "snake_case")]
pub enum SystemConfig {
    Linear {
        a: Vec<Vec<f64>>,
        b22: Vec<Vec<f64>>,
        r: usize,
    },
    RotationExample {},
    IsentropicNs {
        gamma: f64,
        a: f64,
        nu: f64,
    },
    FullGas {
        gamma: f64,
        alpha: f64,
        nu: f64,
    },
}

fn mat_from_rows(rows: &[Vec<f64>]) -> Result<MatF> {
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    if nr == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Config("ragged or empty matrix".into()));
    }
    Ok(MatF::from_fn(nr, nc, |i, j| rows[i][j]))
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemDef> {
        match self {
            SystemConfig::Linear { a, b22, r } => {
                builtin_linear(mat_from_rows(a)?, mat_from_rows(b22)?, *r)
            }
            SystemConfig::RotationExample {} => Ok(builtin_rotation()),
            SystemConfig::IsentropicNs { gamma, a, nu } => builtin_isentropic(*gamma, *a, *nu),
            SystemConfig::FullGas { gamma, alpha, nu } => builtin_full_gas(*gamma, *alpha, *nu),
        }
    }
}

/// Build a built-in system from a JSON config block such as
/// `{"system": "isentropic_ns", "gamma": 2.0, "a": 1.0, "nu": 0.01}`.
/// Unknown keys are rejected.
pub fn from_config(json: &str) -> Result<SystemDef> {
    let cfg: SystemConfig =
        serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
    cfg.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vecf(v: &[f64]) -> VecF {
        VecF::from_column_slice(v)
    }

    /// Deterministic pseudo-random states in a box (splitmix64-based).
    fn sample_states(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Vec<VecF> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z = z ^ (z >> 31);
            (z >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..count)
            .map(|_| {
                VecF::from_fn(lo.len(), |i, _| lo[i] + next() * (hi[i] - lo[i]))
            })
            .collect()
    }

    #[test]
    fn isentropic_jacobians_match_finite_differences() {
        let sys = builtin_isentropic(1.4, 0.8, 0.05).unwrap();
        for u in sample_states(&[0.2, 0.2], &[3.0, 3.0], 100, 7) {
            assert!((sys.jac_f(&u) - sys.jac_f_fd(&u)).norm() < 1e-6);
            assert!((sys.jac_f0(&u) - sys.jac_f0_fd(&u)).norm() < 1e-6);
        }
    }

    #[test]
    fn full_gas_jacobians_match_finite_differences() {
        let sys = builtin_full_gas(0.4, 0.3, 0.2).unwrap();
        for u in sample_states(&[0.2, 0.2, 0.2], &[2.5, 2.5, 2.5], 100, 11) {
            assert!((sys.jac_f(&u) - sys.jac_f_fd(&u)).norm() < 1e-5);
            assert!((sys.jac_f0(&u) - sys.jac_f0_fd(&u)).norm() < 1e-5);
        }
    }

    #[test]
    fn isentropic_blocks_by_hand() {
        // γ = 2, a = 1: p(ρ) = ρ², p'(ρ) = 2ρ
        let sys = builtin_isentropic(2.0, 1.0, 0.1).unwrap();
        let u = vecf(&[1.2, 0.7]);
        let blocks = sys.evaluate_blocks(&u).unwrap();
        assert_relative_eq!(blocks.a11[(0, 0)], 0.7, epsilon = 1e-14);
        assert_relative_eq!(blocks.a12[(0, 0)], 1.2, epsilon = 1e-14);
        assert_relative_eq!(blocks.a21[(0, 0)], 0.7 * 0.7 + 2.4, epsilon = 1e-14);
        assert_relative_eq!(blocks.a22[(0, 0)], 2.0 * 1.2 * 0.7, epsilon = 1e-14);
        assert_relative_eq!(blocks.b22[(0, 0)], 0.1, epsilon = 1e-14);
        let atilde = blocks.a_tilde().unwrap();
        let expect = (1.68 - 2.89 * 1.2 / 0.7) / 0.1;
        assert_relative_eq!(atilde[(0, 0)], expect, epsilon = 1e-12);
    }

    #[test]
    fn symmetrized_reduced_matrix_factorization_agrees() {
        // Ã = B₂₂⁻¹(A₂₂ − A₂₁A₁₁⁻¹A₁₂) must equal the symmetric-factor form
        // (S₂₂B₂₂)⁻¹(S₂₂A₂₂ − (S₁₁A₁₂)ᵀ(S₁₁A₁₁)⁻¹(S₁₁A₁₂)).
        let sys = builtin_isentropic(1.6, 1.1, 0.07).unwrap();
        for u in sample_states(&[0.3, 0.3], &[2.5, 2.5], 50, 3) {
            let blocks = sys.evaluate_blocks(&u).unwrap();
            let direct = blocks.a_tilde().unwrap();
            let s = sys.symmetrizer(&u).unwrap();
            let r = sys.r;
            let p = sys.n - r;
            let s11 = s.view((0, 0), (r, r)).into_owned();
            let s22 = s.view((r, r), (p, p)).into_owned();
            let s11a12 = &s11 * &blocks.a12;
            let inner = &s22 * &blocks.a22
                - s11a12.transpose() * (&s11 * &blocks.a11).try_inverse().unwrap() * &s11a12;
            let sym_form = (&s22 * &blocks.b22).try_inverse().unwrap() * inner;
            assert!(
                (&direct - &sym_form).norm() < 1e-10 * (1.0 + direct.norm()),
                "mismatch at {:?}: {direct} vs {sym_form}",
                u.as_slice()
            );
        }
    }

    #[test]
    fn isentropic_assumptions_pass_on_supersonic_and_subsonic_states() {
        let sys = builtin_isentropic(2.0, 1.0, 0.1).unwrap();
        let samples = sample_states(&[0.3, 0.3], &[2.0, 2.0], 40, 19);
        let report = check_assumptions(&sys, &samples, 1e-8).unwrap();
        assert_eq!(report.h1.status, CheckStatus::Pass, "{:?}", report.h1);
        assert_eq!(report.h2.status, CheckStatus::Pass, "{:?}", report.h2);
        assert_eq!(report.h3.status, CheckStatus::Pass, "{:?}", report.h3);
        assert_eq!(report.speccond.status, CheckStatus::Pass);
        assert!(report.all_pass());
    }

    #[test]
    fn full_gas_h1_h2_pass() {
        let sys = builtin_full_gas(0.5, 0.4, 0.3).unwrap();
        let samples = sample_states(&[0.3, 0.3, 0.3], &[2.0, 2.0, 2.0], 40, 23);
        let report = check_assumptions(&sys, &samples, 1e-8).unwrap();
        // (df⁰_II)_II⁻¹B₂₂ = diag(α, ν)/ρ at every state
        assert_eq!(report.h1.status, CheckStatus::Pass);
        assert_eq!(report.h2.status, CheckStatus::Pass);
        assert_eq!(report.h3.status, CheckStatus::NotApplicable);
    }

    #[test]
    fn rotation_compatibility_check_fails_with_witness() {
        let sys = builtin_rotation();
        let report = check_assumptions(&sys, &[vecf(&[0.0, 0.0])], 1e-8).unwrap();
        assert_eq!(report.speccond.status, CheckStatus::Fail);
        assert_eq!(report.h2.status, CheckStatus::NotApplicable);
        let w = report.speccond.witness.as_ref().unwrap();
        assert_relative_eq!(w.eigenvalue.im.abs(), 2.0 * std::f64::consts::PI, epsilon = 1e-8);
        assert!(w.eigenvalue.re.abs() < 1e-8);
        assert!(!report.all_pass());
    }

    #[test]
    fn scalar_linear_checks_pass() {
        let sys = builtin_linear(MatF::from_element(1, 1, 1.0), MatF::from_element(1, 1, 1.0), 0)
            .unwrap();
        let report = check_assumptions(&sys, &[vecf(&[0.0])], 1e-8).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.speccond.status, CheckStatus::Pass);
        // distance from 1 to ±2πi
        assert!((report.speccond.margin - (1.0 + 4.0 * std::f64::consts::PI.powi(2)).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn evaluate_blocks_rejects_out_of_domain_state() {
        let sys = builtin_isentropic(1.4, 1.0, 0.1).unwrap();
        match sys.evaluate_blocks(&vecf(&[-1.0, 1.0])) {
            Err(Error::DomainViolation(_)) => {}
            other => panic!("expected domain violation, got {other:?}"),
        }
    }

    #[test]
    fn entropy_gradient_and_flux_are_compatible() {
        // dη/dU = (dη/dw)ᵀ A⁰ and dq/dU = (dη/dw)ᵀ A, both against finite
        // differences of the provided scalar closures.
        let sys = builtin_isentropic(1.7, 0.9, 0.2).unwrap();
        let ent = sys.entropy.as_ref().unwrap();
        for u in sample_states(&[0.4, 0.4], &[2.0, 2.0], 30, 31) {
            let grad_w = (ent.deta_dw)(&u);
            let a0 = sys.jac_f0(&u);
            let a = sys.jac_f(&u);
            let fd_eta = fd_jacobian(&|v| VecF::from_element(1, (ent.eta)(v)), &u, 1);
            let fd_q = fd_jacobian(&|v| VecF::from_element(1, (ent.q)(v)), &u, 1);
            let pred_eta = a0.transpose() * &grad_w;
            let pred_q = a.transpose() * &grad_w;
            for j in 0..2 {
                assert_relative_eq!(fd_eta[(0, j)], pred_eta[j], max_relative = 1e-5, epsilon = 1e-7);
                assert_relative_eq!(fd_q[(0, j)], pred_q[j], max_relative = 1e-5, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn entropy_hessian_matches_derivative_of_gradient() {
        // d²η/dw² = d(dη/dw)/dU · (A⁰)⁻¹, and it must be symmetric positive
        // definite on the physical domain.
        let sys = builtin_isentropic(1.4, 1.0, 0.1).unwrap();
        let ent = sys.entropy.as_ref().unwrap();
        for u in sample_states(&[0.4, 0.4], &[2.0, 2.0], 30, 37) {
            let hess = (ent.hess_w)(&u);
            let fd = fd_jacobian(&|v| (ent.deta_dw)(v), &u, 2)
                * sys.jac_f0(&u).try_inverse().unwrap();
            assert!((&hess - &fd).norm() < 1e-5 * (1.0 + hess.norm()), "at {:?}", u.as_slice());
            assert!((&hess - hess.transpose()).norm() < 1e-12);
            let eigs = hess.symmetric_eigenvalues();
            assert!(eigs.iter().all(|&e| e > 0.0), "indefinite Hessian at {:?}", u.as_slice());
        }
    }

    #[test]
    fn json_config_builds_and_rejects_unknown_keys() {
        let sys =
            from_config(r#"{"system": "isentropic_ns", "gamma": 2.0, "a": 1.0, "nu": 0.01}"#)
                .unwrap();
        assert_eq!(sys.n, 2);
        assert_eq!(sys.r, 1);
        assert!(from_config(
            r#"{"system": "isentropic_ns", "gamma": 2.0, "a": 1.0, "nu": 0.01, "bogus": 1}"#
        )
        .is_err());
        assert!(from_config(r#"{"system": "unknown_kind"}"#).is_err());
        let lin = from_config(
            r#"{"system": "linear", "a": [[2.0, 1.0], [1.0, 3.0]], "b22": [[1.0]], "r": 1}"#,
        )
        .unwrap();
        assert_eq!(lin.n, 2);
        assert_eq!(lin.r, 1);
    }

    #[test]
    fn invalid_constitutive_parameters_rejected() {
        assert!(builtin_isentropic(1.0, 1.0, 0.1).is_err());
        assert!(builtin_isentropic(1.4, -1.0, 0.1).is_err());
        assert!(builtin_isentropic(1.4, 1.0, 0.0).is_err());
        assert!(builtin_full_gas(0.0, 1.0, 1.0).is_err());
        // B22 must be square of size n − r
        assert!(builtin_linear(MatF::identity(2, 2), MatF::identity(2, 2), 1).is_err());
        // singular B22
        assert!(builtin_linear(MatF::identity(2, 2), MatF::zeros(1, 1), 1).is_err());
    }
}
