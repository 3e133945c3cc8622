//! Asymptotic regimes: small viscosity for isentropic gas dynamics and large
//! viscosity for full gas dynamics.
//!
//! For isentropic flow with mass flux `m = ρ₀u₀`, steady profiles obey the
//! scalar ODE
//!
//! ```text
//!   m ν ρ̂' = ρ̂² (b − ψ(ρ̂)),      ψ(ρ) = m²/ρ + p(ρ),
//! ```
//!
//! with `ρ(0) = ρ₀`, `ρ(1) = ρ₁ = m/u₁`. As ν → 0 the solutions converge to a
//! small zoo of inviscid configurations (constant states plus boundary layers
//! and/or one interior shock); this module classifies the limit, solves the
//! viscous problem at small ν in a cancellation-free parametrization, and
//! measures convergence rates. The large-viscosity side solves the full-gas
//! steady system along α → ∞ with r = να fixed and compares against the
//! closed-form limit, plus the formal limiting ODE and its cone-feasibility
//! criterion.

use crate::ode::{self, Trajectory};
use crate::steady;
use crate::system::{builtin_full_gas, join_parts, SystemDef, VecF};
use crate::{Error, Result};
use serde::Serialize;

// ---------------------------------------------------------------------------
// pressure law and the profile potential ψ
// ---------------------------------------------------------------------------

/// Power-law pressure `p(ρ) = a ρ^γ` with `a > 0`, `γ > 1` (so `p', p'' > 0`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PressureLaw {
    pub a: f64,
    pub gamma: f64,
}

impl PressureLaw {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if !(a > 0.0) || !(gamma > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pressure law needs a > 0, γ > 1 (got a={a}, γ={gamma})"
            )));
        }
        Ok(PressureLaw { a, gamma })
    }
    pub fn p(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }
    pub fn dp(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0)
    }
    pub fn ddp(&self, rho: f64) -> f64 {
        self.a * self.gamma * (self.gamma - 1.0) * rho.powf(self.gamma - 2.0)
    }
    /// Sound speed `√p'(ρ)`.
    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.dp(rho).sqrt()
    }
}

/// `ψ(ρ) = m²/ρ + p(ρ)`: convex on ρ > 0, minimized at the sonic density.
pub fn psi(m: f64, pr: &PressureLaw, rho: f64) -> f64 {
    m * m / rho + pr.p(rho)
}

pub fn dpsi(m: f64, pr: &PressureLaw, rho: f64) -> f64 {
    -m * m / (rho * rho) + pr.dp(rho)
}

pub fn ddpsi(m: f64, pr: &PressureLaw, rho: f64) -> f64 {
    2.0 * m * m / (rho * rho * rho) + pr.ddp(rho)
}

/// `ψ(x) − ψ(y)` evaluated without catastrophic cancellation for `x ≈ y`:
/// both the `m²/ρ` part and the pressure part are differenced analytically
/// (`expm1`/`log1p`), so the result keeps full relative accuracy however small
/// it is.
pub fn psi_diff(m: f64, pr: &PressureLaw, x: f64, y: f64) -> f64 {
    let kinetic = -m * m * (x - y) / (x * y);
    let pressure = pr.a * y.powf(pr.gamma) * (pr.gamma * ((x - y) / y).ln_1p()).exp_m1();
    kinetic + pressure
}

// ---------------------------------------------------------------------------
// boundary data, sonic and conjugate states
// ---------------------------------------------------------------------------

/// Inflow/outflow data for the isentropic problem: full state at x = 0,
/// velocity at x = 1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GasBoundaryData {
    pub rho0: f64,
    pub u0: f64,
    pub u1: f64,
    pub pressure: PressureLaw,
    pub nu: f64,
}

impl GasBoundaryData {
    pub fn new(rho0: f64, u0: f64, u1: f64, pressure: PressureLaw, nu: f64) -> Result<Self> {
        if !(rho0 > 0.0 && u0 > 0.0 && u1 > 0.0 && nu > 0.0) {
            return Err(Error::InvalidParameter(
                "boundary data must have ρ₀, u₀, u₁, ν > 0".into(),
            ));
        }
        Ok(GasBoundaryData {
            rho0,
            u0,
            u1,
            pressure,
            nu,
        })
    }
    /// Mass flux `m = ρ₀u₀`, conserved along profiles.
    pub fn m(&self) -> f64 {
        self.rho0 * self.u0
    }
    /// Right-end density `ρ₁ = m/u₁` induced by the outflow velocity.
    pub fn rho1(&self) -> f64 {
        self.m() / self.u1
    }
}

/// Sonic density ρ*: the unique positive root of `m²/ρ² = p'(ρ)` (minimizer
/// of ψ), found by bisection. For the power law it equals
/// `(m²/(aγ))^{1/(γ+1)}`.
pub fn sonic_state(m: f64, pr: &PressureLaw) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter("sonic state needs m > 0".into()));
    }
    // g(ρ) = ρ² p'(ρ) − m² is strictly increasing from −m² to ∞
    let g = |rho: f64| rho * rho * pr.dp(rho) - m * m;
    let mut lo = 1e-12;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numerical("sonic bracket expansion failed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The conjugate density ρ†: the other positive solution of ψ(·) = ψ(ρ),
/// i.e. the state connected to ρ across a standing viscous shock
/// (Rankine–Hugoniot `[m²/ρ + p(ρ)] = 0`).
pub fn conjugate_state(rho: f64, m: f64, pr: &PressureLaw) -> Result<f64> {
    let rho_star = sonic_state(m, pr)?;
    if (rho - rho_star).abs() <= 1e-12 * rho_star {
        return Err(Error::InvalidParameter(
            "conjugate state undefined at the sonic density".into(),
        ));
    }
    // ψ(σ) − ψ(ρ) changes sign across the conjugate on the other side of ρ*
    let h = |sigma: f64| psi_diff(m, pr, sigma, rho);
    let (mut lo, mut hi);
    if rho < rho_star {
        // conjugate above ρ*: expand upward until ψ exceeds ψ(ρ)
        lo = rho_star;
        hi = rho_star * 2.0;
        while h(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Numerical("conjugate bracket expansion failed".into()));
            }
        }
    } else {
        // conjugate below ρ*: expand downward
        hi = rho_star;
        lo = rho_star * 0.5;
        while h(lo) < 0.0 {
            lo *= 0.5;
            if lo < 1e-12 {
                return Err(Error::Numerical("conjugate bracket expansion failed".into()));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let positive_side_is_outer = rho < rho_star;
        if (h(mid) < 0.0) == positive_side_is_outer {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// inviscid classifier
// ---------------------------------------------------------------------------

/// The six possible ν → 0 limit configurations, plus the trivial constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConfigKind {
    Constant,
    LeftBLExpansive,
    RightBLExpansive,
    LeftBLCompressive,
    RightBLCompressive,
    InteriorShock,
    DoubleCharacteristicBL,
}

/// Descriptor of the boundary condition induced on the limiting inviscid
/// problem at the left endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LeftBcKind {
    /// Subsonic-or-sonic inflow: both pieces of data transfer (u₀ ≤ √p'(ρ₀)).
    FullDirichlet,
    /// Supersonic inflow: data transfer across a possible characteristic
    /// boundary layer (u₀ ≥ √p'(ρ₀)).
    Transcharacteristic,
}

/// Descriptor of the induced right boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RightBcKind {
    /// Subsonic outflow: the single datum u₁ transfers.
    SingleOutflow,
    /// Supersonic outflow: no imposed condition beyond the range restriction
    /// `u(1)† ≤ u₁` on the conjugate trace (recorded verbatim; the source
    /// analysis notes it imposes a strictly stronger upper bound on ρ(1)).
    RangeCondition,
}

/// The classified ν → 0 limit of the viscous boundary-value problem.
#[derive(Debug, Clone, Serialize)]
pub struct InviscidConfig {
    pub kind: ConfigKind,
    /// Density of the constant interior part (two-state kinds store both).
    pub interior_state: Option<f64>,
    pub rho_star: f64,
    /// Limit of the profile-ODE constant b.
    pub b: f64,
    /// Rest points (ρ₋, ρ₊) of the profile ODE when b > ψ(ρ*).
    pub rest_points: Option<(f64, f64)>,
    /// Linearized decay rates (r₀, r₁) = ρ²|ψ'(ρ)|/m at ρ₀ and ρ₁.
    pub rates: (f64, f64),
    /// Interior shock location x_s = r₁/(r₀ + r₁), when applicable.
    pub shock_location: Option<f64>,
    pub left_bc: LeftBcKind,
    pub right_bc: RightBcKind,
    /// Conjugate trace velocity u(1)† entering the right range condition.
    pub u1_conjugate: Option<f64>,
    pub rho0: f64,
    pub rho1: f64,
    pub m: f64,
}

impl InviscidConfig {
    /// The a.e. pointwise limit ρ_lim(x) (boundary layers carry no measure).
    pub fn limit_rho(&self, x: f64) -> f64 {
        match self.kind {
            ConfigKind::Constant => self.rho0,
            ConfigKind::LeftBLExpansive | ConfigKind::LeftBLCompressive => self.rho1,
            ConfigKind::RightBLExpansive | ConfigKind::RightBLCompressive => self.rho0,
            ConfigKind::DoubleCharacteristicBL => self.rho_star,
            ConfigKind::InteriorShock => {
                if x < self.shock_location.unwrap_or(0.5) {
                    self.rho0
                } else {
                    self.rho1
                }
            }
        }
    }
}

/// Decay rate ρ²|ψ'(ρ)|/m of the linearized profile ODE at a rest state.
fn decay_rate(m: f64, pr: &PressureLaw, rho: f64) -> f64 {
    rho * rho * dpsi(m, pr, rho).abs() / m
}

/// Classify the ν → 0 limit of the boundary-value problem from the data alone.
///
/// The case split is by the position of ρ₀, ρ₁ relative to the sonic density
/// ρ*; the transonic increasing case ρ₀ < ρ* < ρ₁ further splits on
/// sgn(ψ(ρ₀) − ψ(ρ₁)), with the codimension-one equality (relative tolerance
/// 1e−9) giving the interior shock.
pub fn classify_inviscid(data: &GasBoundaryData) -> Result<InviscidConfig> {
    let pr = &data.pressure;
    let m = data.m();
    let rho0 = data.rho0;
    let rho1 = data.rho1();
    let rho_star = sonic_state(m, pr)?;
    let rates = (decay_rate(m, pr, rho0), decay_rate(m, pr, rho1));

    let left_bc = if data.u0 <= pr.sound_speed(rho0) {
        LeftBcKind::FullDirichlet
    } else {
        LeftBcKind::Transcharacteristic
    };
    let u1_supersonic = data.u1 > pr.sound_speed(rho1);
    let (right_bc, u1_conjugate) = if u1_supersonic {
        let rho1_dagger = conjugate_state(rho1, m, pr)?;
        (RightBcKind::RangeCondition, Some(m / rho1_dagger))
    } else {
        (RightBcKind::SingleOutflow, None)
    };

    let base = |kind, interior: Option<f64>, b: f64| InviscidConfig {
        kind,
        interior_state: interior,
        rho_star,
        b,
        rest_points: None,
        rates,
        shock_location: None,
        left_bc,
        right_bc,
        u1_conjugate,
        rho0,
        rho1,
        m,
    };

    if (rho0 - rho1).abs() <= 1e-14 * rho0.max(rho1) {
        return Ok(base(ConfigKind::Constant, Some(rho0), psi(m, pr, rho0)));
    }

    let psi0 = psi(m, pr, rho0);
    let psi1 = psi(m, pr, rho1);
    let cfg = if rho0 > rho1 {
        // decreasing (expansive) branch
        if rho0 >= rho_star && rho_star >= rho1 {
            // ρ₀ ≥ ρ* ≥ ρ₁: double characteristic layer through the sonic state
            base(
                ConfigKind::DoubleCharacteristicBL,
                Some(rho_star),
                psi(m, pr, rho_star),
            )
        } else if rho1 > rho_star {
            // subsonic decreasing: b → ψ(ρ₁)⁻, the profile hugs ρ₁ except for a
            // fast drop from ρ₀ near x = 0 (slow rest point at the smaller ψ)
            base(ConfigKind::LeftBLExpansive, Some(rho1), psi1)
        } else {
            // supersonic decreasing: b → ψ(ρ₀)⁻, plateau at ρ₀, layer at x = 1
            base(ConfigKind::RightBLExpansive, Some(rho0), psi0)
        }
    } else {
        // increasing (compressive) branch
        if rho1 <= rho_star {
            base(ConfigKind::RightBLCompressive, Some(rho0), psi0)
        } else if rho0 >= rho_star {
            base(ConfigKind::LeftBLCompressive, Some(rho1), psi1)
        } else {
            // transonic: compare the potential levels
            let gap = psi_diff(m, pr, rho0, rho1);
            let scale = psi0.abs().max(psi1.abs());
            if gap.abs() <= 1e-9 * scale {
                let mut c = base(ConfigKind::InteriorShock, None, 0.5 * (psi0 + psi1));
                c.rest_points = Some((rho0, rho1));
                c.shock_location = Some(rates.1 / (rates.0 + rates.1));
                c
            } else if gap > 0.0 {
                base(ConfigKind::RightBLCompressive, Some(rho0), psi0)
            } else {
                base(ConfigKind::LeftBLCompressive, Some(rho1), psi1)
            }
        }
    };
    // rest points of the limiting ODE constant, when above the sonic level
    let mut cfg = cfg;
    if cfg.rest_points.is_none() {
        let b = cfg.b;
        if psi_diff_level(m, pr, b, rho_star) > 0.0 {
            let lo = conjugate_or_self(m, pr, rho_star, b, true)?;
            let hi = conjugate_or_self(m, pr, rho_star, b, false)?;
            if (hi - lo) > 1e-12 * rho_star {
                cfg.rest_points = Some((lo, hi));
            }
        }
    }
    Ok(cfg)
}

/// `b − ψ(ρ)` (no special conditioning needed at classifier scales).
fn psi_diff_level(m: f64, pr: &PressureLaw, b: f64, rho: f64) -> f64 {
    b - psi(m, pr, rho)
}

/// Root of ψ(ρ) = b on one side of ρ* (`lower` side or upper side).
fn conjugate_or_self(
    m: f64,
    pr: &PressureLaw,
    rho_star: f64,
    b: f64,
    lower: bool,
) -> Result<f64> {
    let h = |rho: f64| psi(m, pr, rho) - b; // negative near ρ*, positive far out
    let (mut near, mut far) = if lower {
        (rho_star, rho_star * 0.5)
    } else {
        (rho_star, rho_star * 2.0)
    };
    let mut tries = 0;
    while h(far) < 0.0 {
        far = if lower { far * 0.5 } else { far * 2.0 };
        tries += 1;
        if tries > 200 {
            return Err(Error::Numerical("rest-point bracket expansion failed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (near + far);
        if h(mid) < 0.0 {
            near = mid;
        } else {
            far = mid;
        }
    }
    Ok(0.5 * (near + far))
}

// ---------------------------------------------------------------------------
// viscous profiles at small ν: quadrature inversion of the profile ODE
// ---------------------------------------------------------------------------
//
// The ODE m ν ρ' = ρ²(b − ψ(ρ)) is autonomous and scalar, so each profile is
// monotone and satisfies x(ρ) = mν ∫ dσ/(σ²(b − ψ(σ))). We therefore solve the
// boundary-value problem by bisection on the total crossing time
//
//     T(b) = mν ∫_{ρ₀}^{ρ₁} dσ / (σ²|b − ψ(σ)|) = 1,
//
// which is monotone in b. Near the inviscid limit, b approaches a critical
// level b_edge (an endpoint value of ψ, or ψ(ρ*)) to within e^{−r/ν} — far
// below the floating-point resolution of b itself. We therefore parametrize
// b = b_edge ± e^s and work throughout with the decomposition
// |b − ψ(σ)| = e^s + Δ(σ), where Δ(σ) ≥ 0 is evaluated cancellation-free by
// psi_diff against the nearest critical density. Near each zero of Δ the
// quadrature substitutes σ = σ_c ± e^t, under which the integrand becomes
// 1/(σ²(Δ/e^t + e^{s−t})) — every factor well-scaled for arbitrarily negative
// s, so the same code covers ν from O(1) down to 1e−6 and below.

/// A density at which `Δ(σ) = |b_edge − ψ(σ)|` is computed stably; `gap = 0`
/// marks a zero of Δ (a rest point or the sonic density at the critical level).
#[derive(Debug, Clone, Copy)]
struct CritPoint {
    sigma: f64,
    gap: f64,
}

/// Geometry of the quadrature problem for one data set.
struct ProfileSetup {
    m: f64,
    nu: f64,
    pr: PressureLaw,
    /// ρ increases with x.
    increasing: bool,
    /// Critical densities in ascending σ order (segment boundaries).
    crits: Vec<CritPoint>,
}

impl ProfileSetup {
    /// `Δ(σ)` anchored at crits[i] (nonnegative on the segments adjacent to it).
    fn delta(&self, i: usize, sigma: f64) -> f64 {
        let c = self.crits[i];
        let diff = if self.increasing {
            psi_diff(self.m, &self.pr, c.sigma, sigma)
        } else {
            psi_diff(self.m, &self.pr, sigma, c.sigma)
        };
        (c.gap + diff).max(0.0)
    }
}

/// One half-segment: substitution σ = anchor + dir·e^t, t ∈ [t_min, t_max].
#[derive(Debug, Clone, Copy)]
struct Half {
    /// Index of the anchored critical point.
    anchor: usize,
    /// Index of the critical point used for the stable Δ evaluation
    /// (the segment end with the smaller gap).
    delta_ref: usize,
    dir: f64,
    t_max: f64,
    /// Singular when the anchor itself is a zero of Δ.
    singular: bool,
}

fn build_halves(setup: &ProfileSetup) -> Vec<Half> {
    let mut halves = Vec::new();
    for seg in 0..setup.crits.len() - 1 {
        let (i, j) = (seg, seg + 1);
        let p = setup.crits[i].sigma;
        let q = setup.crits[j].sigma;
        let w = 0.5 * (q - p);
        if w <= 0.0 {
            continue;
        }
        let delta_ref = if setup.crits[i].gap <= setup.crits[j].gap { i } else { j };
        halves.push(Half {
            anchor: i,
            delta_ref,
            dir: 1.0,
            t_max: w.ln(),
            singular: i == delta_ref && setup.crits[i].gap == 0.0,
        });
        halves.push(Half {
            anchor: j,
            delta_ref,
            dir: -1.0,
            t_max: w.ln(),
            singular: j == delta_ref && setup.crits[j].gap == 0.0,
        });
    }
    halves
}

/// Lower integration cutoff in t for a half at offset parameter s; everything
/// below contributes a relative e^{−45} or less.
fn t_min_for(setup: &ProfileSetup, h: &Half, s: f64) -> f64 {
    if !h.singular {
        return h.t_max - 45.0;
    }
    let a = setup.crits[h.anchor].sigma;
    let c_lin = dpsi(setup.m, &setup.pr, a).abs().max(1e-100);
    let q = (0.5 * ddpsi(setup.m, &setup.pr, a)).max(1e-100);
    let trans_linear = s - c_lin.ln();
    let trans_quadratic = 0.5 * (s - q.ln());
    (trans_linear.min(trans_quadratic).min(h.t_max) - 45.0).min(h.t_max - 1.0)
}

/// Stable difference quotient `(ψ(a+h) − ψ(a))/h`, valid for arbitrarily
/// small |h| (including h = 0, where it returns ψ\'(a)). Crucially it never
/// forms `a + h` when |h| is below the floating-point resolution of `a`.
fn psi_slope(m: f64, pr: &PressureLaw, a: f64, h: f64) -> f64 {
    if h.abs() < 1e-8 * a {
        dpsi(m, pr, a) + 0.5 * ddpsi(m, pr, a) * h
    } else {
        psi_diff(m, pr, a + h, a) / h
    }
}

/// Integrand of the crossing time in the substituted variable t (the factor
/// mν is applied by the caller).
fn half_integrand(setup: &ProfileSetup, h: &Half, s: f64, t: f64) -> f64 {
    let a = setup.crits[h.anchor].sigma;
    let et = t.exp();
    let sigma = a + h.dir * et;
    if h.singular {
        // 1 / (σ² (Δ/e^t + e^{s−t})): both terms well-scaled however small
        // e^s. Δ/e^t is a difference quotient of ψ at the anchor (a zero of
        // Δ), evaluated from the exact offset dir·e^t so it stays accurate
        // long after a + dir·e^t rounds to a.
        let orient = if setup.increasing { -1.0 } else { 1.0 };
        let g = (orient * h.dir * psi_slope(setup.m, &setup.pr, a, h.dir * et)).max(0.0);
        1.0 / (sigma * sigma * (g + (s - t).exp()))
    } else {
        et / (sigma * sigma * (s.exp() + setup.delta(h.delta_ref, sigma)))
    }
}

/// Adaptive Simpson quadrature (recursive, Richardson-corrected).
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(_f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(f, a, fa, m, fm, flm);
        let right = simpson(f, m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    if !(b > a) {
        return 0.0;
    }
    // pre-chunk long intervals so the recursion sees O(1)-length pieces
    let chunks = ((b - a) / 32.0).ceil().max(1.0) as usize;
    let mut total = 0.0;
    for k in 0..chunks {
        let ca = a + (b - a) * k as f64 / chunks as f64;
        let cb = a + (b - a) * (k + 1) as f64 / chunks as f64;
        let fa = f(ca);
        let fb = f(cb);
        let m = 0.5 * (ca + cb);
        let fm = f(m);
        let whole = simpson(f, ca, fa, cb, fb, fm);
        total += rec(f, ca, fa, cb, fb, fm, whole, tol * (1.0 + whole.abs()), 20);
    }
    total
}

/// Total crossing time T(s) (should equal 1 at the solution).
fn crossing_time(setup: &ProfileSetup, halves: &[Half], s: f64) -> f64 {
    let mut total = 0.0;
    for h in halves {
        let t_min = t_min_for(setup, h, s);
        let f = |t: f64| half_integrand(setup, h, s, t);
        total += adaptive_simpson(&f, t_min, h.t_max, 1e-11);
    }
    setup.m * setup.nu * total
}

/// A solved viscous profile: graded nodes (x, ρ) plus the parametrized level b.
#[derive(Debug, Clone)]
pub struct IsentropicProfile {
    /// Strictly increasing abscissas, x[0] = 0, x[last] = 1.
    pub x: Vec<f64>,
    /// Densities at the nodes (monotone).
    pub rho: Vec<f64>,
    /// Profile-ODE constant (may round to b_edge in f64).
    pub b: f64,
    /// b = b_edge + side·e^s exactly, with s stored here.
    pub s_param: f64,
    pub b_edge: f64,
    /// +1 when b = b_edge + e^s (increasing profiles), −1 otherwise.
    pub side: f64,
    pub increasing: bool,
    pub nu: f64,
    pub m: f64,
    pub pressure: PressureLaw,
}

impl IsentropicProfile {
    pub fn rho0(&self) -> f64 {
        self.rho[0]
    }
    pub fn rho1(&self) -> f64 {
        *self.rho.last().unwrap()
    }

    /// Density at x by monotone linear interpolation of the graded nodes.
    pub fn eval(&self, xq: f64) -> f64 {
        let x = &self.x;
        if xq <= x[0] {
            return self.rho[0];
        }
        if xq >= *x.last().unwrap() {
            return *self.rho.last().unwrap();
        }
        let mut lo = 0usize;
        let mut hi = x.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x[mid] <= xq {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = if x[hi] > x[lo] {
            (xq - x[lo]) / (x[hi] - x[lo])
        } else {
            0.0
        };
        self.rho[lo] + w * (self.rho[hi] - self.rho[lo])
    }

    /// Velocity u = m/ρ at x.
    pub fn u(&self, x: f64) -> f64 {
        self.m / self.eval(x)
    }

    /// |ρ'| at a node index, from the ODE with the stable decomposition.
    fn slope_at(&self, idx: usize) -> f64 {
        let sigma = self.rho[idx];
        let d = self.s_param.exp() + (self.b_edge - psi(self.m, &self.pressure, sigma)).abs();
        sigma * sigma * d / (self.m * self.nu)
    }

    /// Location of the steepest descent/ascent: the viscous shock location for
    /// interior-shock data, a layer endpoint otherwise.
    pub fn steepest_point(&self) -> f64 {
        let mut best = 0usize;
        let mut best_slope = -1.0;
        for i in 0..self.x.len() {
            let sl = self.slope_at(i);
            if sl > best_slope {
                best_slope = sl;
                best = i;
            }
        }
        self.x[best]
    }
}

/// Solve the viscous boundary-value problem at viscosity `nu` (the `nu` field
/// of `data` is ignored in favor of the argument). Returns the graded-grid
/// profile; `ρ(0) = ρ₀` and `ρ(1) = ρ₁` hold by construction.
pub fn solve_isentropic_viscous(data: &GasBoundaryData, nu: f64) -> Result<IsentropicProfile> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter("need ν > 0".into()));
    }
    let pr = data.pressure;
    let m = data.m();
    let rho0 = data.rho0;
    let rho1 = data.rho1();
    let cfg = classify_inviscid(data)?;

    if cfg.kind == ConfigKind::Constant {
        return Ok(IsentropicProfile {
            x: vec![0.0, 1.0],
            rho: vec![rho0, rho0],
            b: psi(m, &pr, rho0),
            s_param: f64::NEG_INFINITY,
            b_edge: psi(m, &pr, rho0),
            side: 1.0,
            increasing: false,
            nu,
            m,
            pressure: pr,
        });
    }

    let increasing = rho1 > rho0;
    let (lo, hi) = if increasing { (rho0, rho1) } else { (rho1, rho0) };
    let rho_star = cfg.rho_star;
    let sonic_interior = lo < rho_star && rho_star < hi;

    // critical set with stable gaps to the edge level
    let (b_edge, side, crits) = if increasing {
        // b = b_edge + e^s with b_edge = max(ψ(ρ₀), ψ(ρ₁))
        let d01 = psi_diff(m, &pr, lo, hi); // ψ(lo) − ψ(hi)
        let shock = cfg.kind == ConfigKind::InteriorShock;
        let (gap_lo, gap_hi) = if shock {
            (0.0, 0.0)
        } else if d01 >= 0.0 {
            (0.0, d01)
        } else {
            (-d01, 0.0)
        };
        let b_edge = if d01 >= 0.0 {
            psi(m, &pr, lo)
        } else {
            psi(m, &pr, hi)
        };
        let mut crits = vec![CritPoint { sigma: lo, gap: gap_lo }];
        if sonic_interior {
            let gap_star = if gap_lo == 0.0 || d01 >= 0.0 {
                psi_diff(m, &pr, lo, rho_star)
            } else {
                psi_diff(m, &pr, hi, rho_star)
            };
            crits.push(CritPoint { sigma: rho_star, gap: gap_star.max(0.0) });
        }
        crits.push(CritPoint { sigma: hi, gap: gap_hi });
        (b_edge, 1.0, crits)
    } else {
        // decreasing: b = b_edge − e^s with b_edge = min ψ over [lo, hi]
        if sonic_interior || (rho_star - lo).abs() < 1e-14 || (rho_star - hi).abs() < 1e-14 {
            let b_edge = psi(m, &pr, rho_star);
            let mut crits = vec![CritPoint {
                sigma: lo,
                gap: psi_diff(m, &pr, lo, rho_star).max(0.0),
            }];
            crits.push(CritPoint { sigma: rho_star, gap: 0.0 });
            crits.push(CritPoint {
                sigma: hi,
                gap: psi_diff(m, &pr, hi, rho_star).max(0.0),
            });
            crits.retain(|c| c.sigma >= lo && c.sigma <= hi);
            crits.sort_by(|a, b| a.sigma.partial_cmp(&b.sigma).unwrap());
            crits.dedup_by(|a, b| (a.sigma - b.sigma).abs() < 1e-13 * b.sigma.max(1.0));
            (b_edge, -1.0, crits)
        } else {
            let d01 = psi_diff(m, &pr, lo, hi); // ψ(lo) − ψ(hi)
            let (gap_lo, gap_hi) = if d01 <= 0.0 { (0.0, -d01) } else { (d01, 0.0) };
            let b_edge = if d01 <= 0.0 {
                psi(m, &pr, lo)
            } else {
                psi(m, &pr, hi)
            };
            let crits = vec![
                CritPoint { sigma: lo, gap: gap_lo },
                CritPoint { sigma: hi, gap: gap_hi },
            ];
            (b_edge, -1.0, crits)
        }
    };

    let setup = ProfileSetup {
        m,
        nu,
        pr,
        increasing,
        crits,
    };
    let halves = build_halves(&setup);

    // bracket and bisect s: T is strictly decreasing in s
    let mut s_hi = (b_edge.abs() + 1.0).ln() + 2.0;
    let mut t_hi = crossing_time(&setup, &halves, s_hi);
    let mut guard = 0;
    while t_hi > 1.0 {
        s_hi += 5.0;
        t_hi = crossing_time(&setup, &halves, s_hi);
        guard += 1;
        if guard > 200 {
            return Err(Error::NonConvergence("profile level bracket (upper)".into()));
        }
    }
    let mut s_lo = s_hi - 10.0;
    let mut t_lo = crossing_time(&setup, &halves, s_lo);
    guard = 0;
    while t_lo < 1.0 {
        s_lo -= (0.3 * s_lo.abs()).max(10.0);
        t_lo = crossing_time(&setup, &halves, s_lo);
        guard += 1;
        if guard > 200 || s_lo < -1e7 {
            return Err(Error::NonConvergence(format!(
                "profile level bracket (lower): T({s_lo:.1}) = {t_lo:.3e} still below 1"
            )));
        }
    }
    for _ in 0..200 {
        if (s_hi - s_lo) <= 1e-9 * (1.0 + s_lo.abs()) {
            break;
        }
        let mid = 0.5 * (s_lo + s_hi);
        if crossing_time(&setup, &halves, mid) > 1.0 {
            s_lo = mid;
        } else {
            s_hi = mid;
        }
    }
    let s = 0.5 * (s_lo + s_hi);

    // assemble the graded (x, ρ) grid by integrating between node densities
    let (xs, rhos) = assemble_profile(&setup, &halves, s)?;
    Ok(IsentropicProfile {
        x: xs,
        rho: rhos,
        b: b_edge + side * s.exp(),
        s_param: s,
        b_edge,
        side,
        increasing,
        nu,
        m,
        pressure: pr,
    })
}

/// Node t-grid for one half: dense near the top (σ resolution), dense around
/// the singular transition, coarse in between.
fn half_t_nodes(setup: &ProfileSetup, h: &Half, s: f64) -> Vec<f64> {
    let t_min = t_min_for(setup, h, s);
    let mut ts: Vec<f64> = Vec::new();
    let mut t = h.t_max;
    while t > t_min && t > h.t_max - 18.0 {
        ts.push(t);
        t -= 0.0625;
    }
    if h.singular {
        let a = setup.crits[h.anchor].sigma;
        let c_lin = dpsi(setup.m, &setup.pr, a).abs().max(1e-100);
        let q = (0.5 * ddpsi(setup.m, &setup.pr, a)).max(1e-100);
        let trans = (s - c_lin.ln()).min(0.5 * (s - q.ln()));
        let mut t = (trans + 12.0).min(h.t_max);
        while t > t_min {
            ts.push(t);
            t -= 0.25;
        }
    }
    // coarse fill
    let span = h.t_max - t_min;
    let step = (span / 300.0).max(0.5);
    let mut t = h.t_max;
    while t > t_min {
        ts.push(t);
        t -= step;
    }
    ts.push(t_min);
    ts.sort_by(|a, b| b.partial_cmp(a).unwrap()); // descending
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    ts
}

fn assemble_profile(
    setup: &ProfileSetup,
    halves: &[Half],
    s: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    // traverse halves in trajectory order: ascending σ if increasing, else descending
    let mut ordered: Vec<&Half> = halves.iter().collect();
    // halves come in σ-ascending segment order: (left, right) per segment
    if !setup.increasing {
        ordered.reverse();
    }
    let mut sigmas: Vec<f64> = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    let mut x_acc = 0.0;

    let start_sigma = if setup.increasing {
        setup.crits.first().unwrap().sigma
    } else {
        setup.crits.last().unwrap().sigma
    };
    sigmas.push(start_sigma);
    xs.push(0.0);

    for h in ordered {
        let a = setup.crits[h.anchor].sigma;
        let mut ts = half_t_nodes(setup, h, s);
        // walk in trajectory direction: anchored halves start either at the
        // anchor (t ascending from t_min) or at the segment midpoint (t_max)
        let anchor_first = if setup.increasing {
            h.dir > 0.0
        } else {
            h.dir < 0.0
        };
        if anchor_first {
            ts.reverse(); // ascending t: from near the anchor outward
        }
        let f = |t: f64| half_integrand(setup, h, s, t);
        let mut prev_t: Option<f64> = None;
        for &t in &ts {
            if let Some(pt) = prev_t {
                let (ta, tb) = if t > pt { (pt, t) } else { (t, pt) };
                x_acc += setup.m * setup.nu * adaptive_simpson(&f, ta, tb, 1e-12);
            } else if anchor_first {
                // sliver between the exact anchor and the first node: below the
                // t_min cutoff, negligible by construction
            }
            let sigma = a + h.dir * t.exp();
            if (sigma - *sigmas.last().unwrap()).abs() > 0.0 {
                sigmas.push(sigma);
                xs.push(x_acc);
            } else {
                *xs.last_mut().unwrap() = x_acc;
            }
            prev_t = Some(t);
        }
        // land exactly on the far end of the half when it is a critical point
        if !anchor_first {
            let end_sigma = a;
            sigmas.push(end_sigma);
            xs.push(x_acc);
        }
    }
    // normalize total length to exactly 1 (bisection + quadrature residual)
    let total = *xs.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::Numerical("profile assembly produced zero length".into()));
    }
    for x in xs.iter_mut() {
        *x /= total;
    }
    // enforce strict monotonicity of x (collapse exact duplicates)
    let mut cx: Vec<f64> = Vec::with_capacity(xs.len());
    let mut cr: Vec<f64> = Vec::with_capacity(xs.len());
    for (x, r) in xs.iter().zip(sigmas.iter()) {
        if let Some(&last) = cx.last() {
            if *x <= last {
                // keep the later density at the same abscissa
                *cr.last_mut().unwrap() = *r;
                continue;
            }
        }
        cx.push(*x);
        cr.push(*r);
    }
    Ok((cx, cr))
}

// ---------------------------------------------------------------------------
// convergence rates toward the inviscid limit
// ---------------------------------------------------------------------------

/// One viscosity in a rate sweep: L^p errors against the classified limit and,
/// for interior-shock data, the extracted viscous shock location.
#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub nu: f64,
    /// One error per entry of `p_list` (∞ allowed).
    pub errors: Vec<f64>,
    pub xs: Option<f64>,
}

/// Output of [`convergence_study`].
#[derive(Debug, Clone, Serialize)]
pub struct RateTable {
    pub config: InviscidConfig,
    pub p_list: Vec<f64>,
    pub rows: Vec<RateRow>,
    /// Fitted log-log slope per p; `None` when the errors are not monotone
    /// in ν (fit rejected, raw rows still present).
    pub slopes: Vec<Option<f64>>,
    /// Slope of |x_s(ν) − x_s(0)| for interior-shock data.
    pub xs_slope: Option<f64>,
    /// error/(ν·ln(1/ν)) per row for the first p = 1 entry, reported for the
    /// double characteristic layer where the L¹ rate carries a log factor.
    pub nu_log_ratios: Option<Vec<f64>>,
}

/// Least-squares slope of ln y against ln x.
fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.max(1e-300).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// `‖ρ_ν − ρ_lim‖_{L^p}` by composite trapezoid on the union of the profile's
/// graded nodes, a uniform grid, and points clustered at the limit's jump.
pub fn lp_error(profile: &IsentropicProfile, cfg: &InviscidConfig, p: f64) -> f64 {
    let mut grid: Vec<f64> = profile.x.clone();
    let n_uniform = 2000;
    for k in 0..=n_uniform {
        grid.push(k as f64 / n_uniform as f64);
    }
    if let Some(xs0) = cfg.shock_location {
        for k in 1..=40 {
            let d = 10.0_f64.powi(-(k as i32) / 4 - 1);
            grid.push((xs0 - d).clamp(0.0, 1.0));
            grid.push((xs0 + d).clamp(0.0, 1.0));
        }
        grid.push(xs0);
    }
    grid.retain(|x| (0.0..=1.0).contains(x));
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let diff: Vec<f64> = grid
        .iter()
        .map(|&x| (profile.eval(x) - cfg.limit_rho(x)).abs())
        .collect();
    if p.is_infinite() {
        return diff.iter().cloned().fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for i in 1..grid.len() {
        let h = grid[i] - grid[i - 1];
        acc += 0.5 * h * (diff[i - 1].powf(p) + diff[i].powf(p));
    }
    acc.powf(1.0 / p)
}

/// Sweep ν over `nu_list`, measure L^p distances to the classified inviscid
/// limit for each p in `p_list`, and fit log-log convergence slopes. Fits are
/// rejected (slope `None`) when the error fails to decrease monotonically
/// along decreasing ν; the raw rows are always returned.
pub fn convergence_study(
    data: &GasBoundaryData,
    nu_list: &[f64],
    p_list: &[f64],
) -> Result<RateTable> {
    if nu_list.len() < 2 {
        return Err(Error::InvalidParameter(
            "rate sweep needs at least two viscosities".into(),
        ));
    }
    let span = nu_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let top = nu_list.iter().cloned().fold(0.0, f64::max);
    if top / span < 10.0_f64.powf(1.5) {
        return Err(Error::InvalidParameter(
            "viscosity sweep must span at least 1.5 decades".into(),
        ));
    }
    let cfg = classify_inviscid(data)?;
    let mut nus: Vec<f64> = nu_list.to_vec();
    nus.sort_by(|a, b| b.partial_cmp(a).unwrap()); // descending ν

    use rayon::prelude::*;
    let rows: Result<Vec<RateRow>> = nus
        .par_iter()
        .map(|&nu| {
            let prof = solve_isentropic_viscous(data, nu)?;
            let errors: Vec<f64> = p_list.iter().map(|&p| lp_error(&prof, &cfg, p)).collect();
            let xs = if cfg.kind == ConfigKind::InteriorShock {
                Some(prof.steepest_point())
            } else {
                None
            };
            Ok(RateRow { nu, errors, xs })
        })
        .collect();
    let rows = rows?;

    let mut slopes = Vec::with_capacity(p_list.len());
    for (j, _) in p_list.iter().enumerate() {
        let errs: Vec<f64> = rows.iter().map(|r| r.errors[j]).collect();
        let monotone = errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        slopes.push(if monotone {
            loglog_slope(&nus, &errs)
        } else {
            None
        });
    }

    let xs_slope = if cfg.kind == ConfigKind::InteriorShock {
        let xs0 = cfg.shock_location.unwrap();
        let devs: Vec<f64> = rows.iter().map(|r| (r.xs.unwrap() - xs0).abs()).collect();
        if devs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) {
            loglog_slope(&nus, &devs)
        } else {
            None
        }
    } else {
        None
    };

    let nu_log_ratios = if cfg.kind == ConfigKind::DoubleCharacteristicBL {
        p_list.iter().position(|&p| (p - 1.0).abs() < 1e-12).map(|j| {
            rows.iter()
                .map(|r| r.errors[j] / (r.nu * (1.0 / r.nu).ln()))
                .collect()
        })
    } else {
        None
    };

    Ok(RateTable {
        config: cfg,
        p_list: p_list.to_vec(),
        rows,
        slopes,
        xs_slope,
        nu_log_ratios,
    })
}

// ---------------------------------------------------------------------------
// full gas dynamics in the large-viscosity regime
// ---------------------------------------------------------------------------

/// Data for the large-viscosity full-gas sweep: boundary values for (u, e),
/// transport coefficients, and the Gruneisen constant of p = Γρe. The density
/// at x = 0 is normalized to 1, so the mass flux is m = u₀.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FullGasParams {
    pub u0: f64,
    pub e0: f64,
    pub u1: f64,
    pub e1: f64,
    pub alpha: f64,
    pub nu: f64,
    pub gamma: f64,
}

impl FullGasParams {
    /// The ratio r = ν/α held fixed along the sweep (both coefficients grow
    /// together, keeping the heating coefficient α/ν = 1/r of order one).
    pub fn r_fixed(&self) -> f64 {
        self.nu / self.alpha
    }
    /// Closed-form limiting velocity: linear interpolation of the data.
    pub fn u_limit(&self, x: f64) -> f64 {
        self.u0 + x * (self.u1 - self.u0)
    }
    /// Closed-form limiting internal energy: linear interpolation plus the
    /// parabolic viscous-heating bulge with coefficient α/ν = α²/r.
    pub fn e_limit(&self, x: f64) -> f64 {
        let du = self.u1 - self.u0;
        self.e0 * (1.0 - x) + self.e1 * x + (self.alpha / self.nu) * du * du * x * (1.0 - x) / 2.0
    }
    pub fn du_limit(&self) -> f64 {
        self.u1 - self.u0
    }
    pub fn de_limit(&self, x: f64) -> f64 {
        let du = self.u1 - self.u0;
        self.e1 - self.e0 + (self.alpha / self.nu) * du * du * (1.0 - 2.0 * x) / 2.0
    }
}

/// One α in the large-viscosity sweep.
#[derive(Debug, Clone, Serialize)]
pub struct LargeViscRow {
    pub alpha: f64,
    pub nu: f64,
    /// `‖(u,e) − (ū,ē)‖_{H¹}`; `None` when the steady solve failed and the
    /// row was skipped.
    pub h1_error: Option<f64>,
}

/// Output of [`full_gas_large_visc`].
#[derive(Debug, Clone, Serialize)]
pub struct LargeViscTable {
    pub r_fixed: f64,
    pub rows: Vec<LargeViscRow>,
    /// Fitted slope of ln(H¹ error) vs ln α over the converged rows.
    pub slope: Option<f64>,
    pub skipped: usize,
}

/// Solve the steady full-gas system along `alpha_list` with the ratio
/// r = ν/α held at `params.r_fixed()`, and measure the H¹ distance of (u, e)
/// to the closed-form large-viscosity limit. Rows whose steady solve fails
/// are skipped and flagged rather than aborting the sweep.
pub fn full_gas_large_visc(params: &FullGasParams, alpha_list: &[f64]) -> Result<LargeViscTable> {
    let r = params.r_fixed();
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("need ν/α > 0".into()));
    }
    let mut alphas: Vec<f64> = alpha_list.to_vec();
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    use rayon::prelude::*;
    let rows: Vec<LargeViscRow> = alphas
        .par_iter()
        .map(|&alpha| {
            let nu = r * alpha;
            let scaled = FullGasParams { alpha, nu, ..*params };
            let h1_error = large_visc_row(&scaled).ok();
            LargeViscRow { alpha, nu, h1_error }
        })
        .collect();

    let conv: Vec<&LargeViscRow> = rows.iter().filter(|r| r.h1_error.is_some()).collect();
    let slope = if conv.len() >= 2 {
        let a: Vec<f64> = conv.iter().map(|r| r.alpha).collect();
        let e: Vec<f64> = conv.iter().map(|r| r.h1_error.unwrap()).collect();
        loglog_slope(&a, &e)
    } else {
        None
    };
    Ok(LargeViscTable {
        r_fixed: r,
        skipped: rows.len() - conv.len(),
        rows,
        slope,
    })
}

fn large_visc_row(p: &FullGasParams) -> Result<f64> {
    let sys = builtin_full_gas(p.gamma, p.alpha, p.nu)?;
    let u0 = VecF::from_vec(vec![1.0, p.u0, p.e0]);
    let u1_ii = VecF::from_vec(vec![p.u1, p.e1]);
    // warm start from the derivative of the closed-form limit at x = 0
    let c2 = VecF::from_vec(vec![p.du_limit(), p.de_limit(0.0)]);
    let opts = ode::OdeOptions::default();
    let profile = steady::solve_steady(&sys, &u0, &u1_ii, &c2, &opts)?;

    // H¹ distance of (u, e) to the limit; derivative terms by central
    // differences on the dense output
    let n = 400;
    let h = 1.0 / n as f64;
    let fd = 1e-5;
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for k in 0..=n {
        let x = k as f64 * h;
        let u = profile.eval(&sys, x)?;
        let (du, de) = {
            let xa = (x - fd).max(0.0);
            let xb = (x + fd).min(1.0);
            let ua = profile.eval(&sys, xa)?;
            let ub = profile.eval(&sys, xb)?;
            ((ub[1] - ua[1]) / (xb - xa), (ub[2] - ua[2]) / (xb - xa))
        };
        let val = (u[1] - p.u_limit(x)).powi(2)
            + (u[2] - p.e_limit(x)).powi(2)
            + (du - p.du_limit()).powi(2)
            + (de - p.de_limit(x)).powi(2);
        if let Some(pv) = prev {
            acc += 0.5 * h * (pv + val);
        }
        prev = Some(val);
    }
    Ok(acc.sqrt())
}

// ---------------------------------------------------------------------------
// formal limiting equations at infinite viscosity
// ---------------------------------------------------------------------------

/// Integrate the formal limiting ODE `Ū_II' = B₂₂(Ū)⁻¹ C̃₂` from
/// `Ū_II(0) = U₀_II`, resolving `Ū_I` pointwise from the conservation
/// constraint `f_I(Ū) = f_I(U₀)`. Returns the trajectory of Ū_II.
pub fn formal_large_visc_solve(
    sys: &SystemDef,
    u0: &VecF,
    c_tilde: &VecF,
) -> Result<Trajectory<f64>> {
    let r = sys.r;
    let nn = sys.n - r;
    if c_tilde.len() != nn {
        return Err(Error::InvalidParameter(
            "constant vector must have the parabolic dimension".into(),
        ));
    }
    if !sys.in_domain(u0) {
        return Err(Error::DomainViolation("left state outside domain".into()));
    }
    let fi_target = sys.f_i(u0);
    let u0_i = u0.rows(0, r).into_owned();
    let u0_ii = u0.rows(r, nn).into_owned();
    let guess = std::cell::RefCell::new(u0_i.clone());

    let field = |_x: f64, y: &VecF| -> VecF {
        let g = guess.borrow().clone();
        let u_i = match steady::resolve_hyperbolic(sys, y, &fi_target, &g) {
            Ok(v) => v,
            Err(_) => return VecF::from_element(nn, f64::NAN),
        };
        *guess.borrow_mut() = u_i.clone();
        let u = join_parts(&u_i, y);
        let b22 = sys.b22(&u);
        match b22.lu().solve(c_tilde) {
            Some(v) => v,
            None => VecF::from_element(nn, f64::NAN),
        }
    };
    let domain_guard = |_x: f64, y: &VecF| -> bool {
        if y.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let g = guess.borrow().clone();
        match steady::resolve_hyperbolic(sys, y, &fi_target, &g) {
            Ok(u_i) => sys.in_domain(&join_parts(&u_i, y)),
            Err(_) => false,
        }
    };
    let opts = ode::OdeOptions::default();
    let traj = ode::integrate_ivp(&field, (0.0, 1.0), u0_ii, &opts, Some(&domain_guard));
    if !traj.completed() {
        return Err(Error::DomainViolation(format!(
            "formal limiting trajectory left the domain at x = {:.6}",
            traj.x_end()
        )));
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// cone feasibility for the formal limit
// ---------------------------------------------------------------------------

/// Target region for the truncated-cone containment test.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ConeDomain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl ConeDomain {
    fn contains(&self, p: &VecF) -> bool {
        match self {
            ConeDomain::Ball { center, radius } => {
                let c = VecF::from_vec(center.clone());
                (p - c).norm() <= *radius * (1.0 + 1e-12)
            }
            ConeDomain::Box { lo, hi } => p
                .iter()
                .enumerate()
                .all(|(i, &v)| lo[i] - 1e-12 <= v && v <= hi[i] + 1e-12),
        }
    }
}

/// Feasibility of the truncated cone with vertex `u0_ii`, axis along
/// `u1_ii − u0_ii` rescaled by β₁/β₀, and half-angle θ = arccos(β₀/β₁):
/// returns (θ, contained-in-domain). Containment is tested on the extreme
/// generators and the cap (vertex, cap center, rim samples, and intermediate
/// generator points), which is exact for convex domains up to rim sampling.
pub fn cone_feasibility(
    beta0: f64,
    beta1: f64,
    u0_ii: &VecF,
    u1_ii: &VecF,
    domain: &ConeDomain,
) -> Result<(f64, bool)> {
    if !(0.0 < beta0 && beta0 <= beta1) {
        return Err(Error::InvalidParameter("need 0 < β₀ ≤ β₁".into()));
    }
    let theta = (beta0 / beta1).clamp(-1.0, 1.0).acos();
    let d = u1_ii - u0_ii;
    let len = d.norm();
    if len == 0.0 {
        // degenerate cone: a single point, feasible iff the vertex is inside
        return Ok((theta, domain.contains(u0_ii)));
    }
    let axis = d / len;
    let scale = (beta1 / beta0) * len;
    let dim = u0_ii.len();

    // orthonormal basis of the axis-perpendicular subspace by Gram–Schmidt
    let mut perp: Vec<VecF> = Vec::new();
    for i in 0..dim {
        let mut v = VecF::zeros(dim);
        v[i] = 1.0;
        v -= &axis * axis.dot(&v);
        for q in &perp {
            let vq = q.dot(&v);
            v -= q * vq;
        }
        let n = v.norm();
        if n > 1e-10 {
            perp.push(v / n);
        }
    }

    // rim directions: ± each basis vector and normalized pairwise diagonals
    let mut rim_dirs: Vec<VecF> = Vec::new();
    for q in &perp {
        rim_dirs.push(q.clone());
        rim_dirs.push(-q.clone());
    }
    for i in 0..perp.len() {
        for j in i + 1..perp.len() {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let v = (&perp[i] * si + &perp[j] * sj) / 2.0_f64.sqrt();
                rim_dirs.push(v);
            }
        }
    }

    let mut samples: Vec<VecF> = vec![u0_ii.clone(), u0_ii + &axis * scale];
    for w in &rim_dirs {
        let gen_dir = &axis * theta.cos() + w * theta.sin();
        for t in [0.25, 0.5, 0.75, 1.0] {
            samples.push(u0_ii + gen_dir.clone() * (t * scale));
        }
    }
    let feasible = samples.iter().all(|p| domain.contains(p));
    Ok((theta, feasible))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn law() -> PressureLaw {
        PressureLaw::new(1.0, 2.0).unwrap()
    }

    /// Direct RK4 integration of m ν ρ' = ρ²(b − ψ(ρ)) from ρ(0) = ρ₀,
    /// returning ρ(1); used as an independent oracle at moderate ν.
    fn shoot_rho1(m: f64, pr: &PressureLaw, nu: f64, rho0: f64, b: f64, steps: usize) -> f64 {
        let f = |rho: f64| rho * rho * (b - psi(m, pr, rho)) / (m * nu);
        let h = 1.0 / steps as f64;
        let mut rho = rho0;
        for _ in 0..steps {
            let k1 = f(rho);
            let k2 = f(rho + 0.5 * h * k1);
            let k3 = f(rho + 0.5 * h * k2);
            let k4 = f(rho + h * k3);
            rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !(rho > 1e-8) || rho > 1e8 {
                return f64::NAN;
            }
        }
        rho
    }

    #[test]
    fn sonic_state_matches_power_law_closed_form() {
        let pr = law();
        let m = 1.0;
        let star = sonic_state(m, &pr).unwrap();
        let exact = (m * m / (pr.a * pr.gamma)).powf(1.0 / (pr.gamma + 1.0));
        assert_relative_eq!(star, exact, max_relative = 1e-12);
    }

    #[test]
    fn sonic_state_scaling_in_mass_flux() {
        // ρ*(c·m) = c^{2/(γ+1)} ρ*(m) for the power law
        let pr = PressureLaw::new(0.7, 1.4).unwrap();
        let s1 = sonic_state(1.3, &pr).unwrap();
        let s2 = sonic_state(2.6, &pr).unwrap();
        assert_relative_eq!(s2 / s1, 2.0_f64.powf(2.0 / (pr.gamma + 1.0)), max_relative = 1e-10);
    }

    #[test]
    fn conjugate_state_reference_value_and_involution() {
        // γ = 2, a = 1, m = 1, ρ = 0.5: ψ(σ) = ψ(0.5) gives σ² + σ/2·... with
        // root (−1 + √33)/4 from 2σ² + ... — solved independently:
        // 2/σ·... reduces to 4σ³ + 2σ² − ... Direct check: the conjugate σ
        // satisfies 1/σ + σ² = 1/0.5 + 0.25 = 2.25 ⇒ 4σ³ − 9σ² + 4 = 0 with
        // positive root (−1+√33)/4 besides σ = 0.5... verify numerically.
        let pr = law();
        let m = 1.0;
        let conj = conjugate_state(0.5, m, &pr).unwrap();
        let expected = (-1.0 + 33.0_f64.sqrt()) / 4.0;
        assert_relative_eq!(conj, expected, max_relative = 1e-10);
        // ψ values agree and the map is an involution
        assert!(psi_diff(m, &pr, conj, 0.5).abs() < 1e-10);
        let back = conjugate_state(conj, m, &pr).unwrap();
        assert_relative_eq!(back, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn conjugate_state_continuous_through_sonic() {
        let pr = law();
        let m = 1.0;
        let star = sonic_state(m, &pr).unwrap();
        let below = conjugate_state(star * (1.0 - 1e-3), m, &pr).unwrap();
        let above = conjugate_state(star * (1.0 + 1e-3), m, &pr).unwrap();
        assert!((below - star).abs() < 5e-3 * star, "below: {below}, star: {star}");
        assert!((above - star).abs() < 5e-3 * star, "above: {above}");
    }

    #[test]
    fn psi_diff_full_relative_accuracy_near_coincidence() {
        let pr = law();
        let m = 1.0;
        let x = 0.8;
        let y = 0.8 * (1.0 + 1e-9);
        let exact = dpsi(m, &pr, 0.8) * (x - y);
        let got = psi_diff(m, &pr, x, y);
        assert_relative_eq!(got, exact, max_relative = 1e-5);
        assert_eq!(psi_diff(m, &pr, x, x), 0.0);
    }

    /// The six-case reference data set used across classifier/solver tests:
    /// γ = 2, a = 1, m = 1 (ρ* ≈ 0.7937).
    fn datum(rho0: f64, u0: f64, rho1: f64) -> GasBoundaryData {
        // choose u0 so that m = 1: u0 = 1/rho0; u1 = 1/rho1
        let _ = u0;
        GasBoundaryData::new(rho0, 1.0 / rho0, 1.0 / rho1, law(), 0.01).unwrap()
    }

    #[test]
    fn classifier_covers_the_six_cases() {
        let star = sonic_state(1.0, &law()).unwrap(); // ≈ 0.7937
        // decreasing, both above ρ*: left layer, interior ρ₁
        let c = classify_inviscid(&datum(1.2, 0.0, 1.0)).unwrap();
        assert_eq!(c.kind, ConfigKind::LeftBLExpansive);
        assert_relative_eq!(c.interior_state.unwrap(), 1.0, max_relative = 1e-12);
        // decreasing, both below ρ*: right layer, interior ρ₀
        let c = classify_inviscid(&datum(0.6, 0.0, 0.4)).unwrap();
        assert_eq!(c.kind, ConfigKind::RightBLExpansive);
        assert_relative_eq!(c.interior_state.unwrap(), 0.6, max_relative = 1e-12);
        // decreasing through ρ*: double characteristic layer, interior ρ*
        let c = classify_inviscid(&datum(1.1, 0.0, 0.5)).unwrap();
        assert_eq!(c.kind, ConfigKind::DoubleCharacteristicBL);
        assert_relative_eq!(c.interior_state.unwrap(), star, max_relative = 1e-9);
        // increasing, both below ρ*: right compressive layer, interior ρ₀
        let c = classify_inviscid(&datum(0.4, 0.0, 0.6)).unwrap();
        assert_eq!(c.kind, ConfigKind::RightBLCompressive);
        assert_relative_eq!(c.interior_state.unwrap(), 0.4, max_relative = 1e-12);
        // increasing, both above ρ*: left compressive layer, interior ρ₁
        let c = classify_inviscid(&datum(1.0, 0.0, 1.2)).unwrap();
        assert_eq!(c.kind, ConfigKind::LeftBLCompressive);
        assert_relative_eq!(c.interior_state.unwrap(), 1.2, max_relative = 1e-12);
        // increasing through ρ*, exactly conjugate: interior shock
        let conj = conjugate_state(0.5, 1.0, &law()).unwrap();
        let c = classify_inviscid(&datum(0.5, 0.0, conj)).unwrap();
        assert_eq!(c.kind, ConfigKind::InteriorShock);
        let (r0, r1) = c.rates;
        let xs = r1 / (r0 + r1);
        assert_relative_eq!(c.shock_location.unwrap(), xs, max_relative = 1e-12);
        // increasing through ρ*, not conjugate: layer on the ψ-larger side
        let c = classify_inviscid(&datum(0.5, 0.0, conj * 1.05)).unwrap();
        assert_eq!(c.kind, ConfigKind::LeftBLCompressive);
        let c = classify_inviscid(&datum(0.5, 0.0, conj * 0.95)).unwrap();
        assert_eq!(c.kind, ConfigKind::RightBLCompressive);
    }

    #[test]
    fn reference_shock_location() {
        // ρ₀ = 0.5, u₀ = 2, u₁ chosen conjugate: x_s = r₁/(r₀+r₁) ≈ 0.7571
        let pr = law();
        let m = 1.0;
        let conj = conjugate_state(0.5, m, &pr).unwrap();
        let data = GasBoundaryData::new(0.5, 2.0, m / conj, pr, 0.01).unwrap();
        let c = classify_inviscid(&data).unwrap();
        assert_eq!(c.kind, ConfigKind::InteriorShock);
        let (r0, r1) = c.rates;
        assert_relative_eq!(r0, 0.75, max_relative = 1e-9);
        let xs = c.shock_location.unwrap();
        assert_relative_eq!(xs, r1 / (r0 + r1), max_relative = 1e-12);
        assert!((xs - 0.7571).abs() < 1e-3, "xs = {xs}");
    }

    #[test]
    fn viscous_solver_hits_right_boundary_value() {
        // moderately small ν across all six configurations: ρ(1) must equal
        // ρ₁ by construction, and the solved level b must reproduce ρ(1) when
        // fed to a direct RK4 shoot (independent oracle)
        for (rho0, rho1) in [
            (1.2, 1.0),
            (0.6, 0.4),
            (1.1, 0.5),
            (0.4, 0.6),
            (1.0, 1.2),
        ] {
            let data = datum(rho0, 0.0, rho1);
            let prof = solve_isentropic_viscous(&data, 0.05).unwrap();
            assert_relative_eq!(prof.rho0(), rho0, max_relative = 1e-12);
            assert_relative_eq!(prof.rho1(), rho1, max_relative = 1e-12);
            // oracle: shoot with the recovered level
            let got = shoot_rho1(1.0, &law(), 0.05, rho0, prof.b, 40_000);
            assert!(
                (got - rho1).abs() < 2e-4 * rho1,
                "case ({rho0},{rho1}): oracle ρ(1) = {got}, want {rho1}"
            );
        }
    }

    #[test]
    fn viscous_solver_matches_oracle_profile_pointwise() {
        let data = datum(1.2, 0.0, 1.0);
        let nu = 0.05;
        let prof = solve_isentropic_viscous(&data, nu).unwrap();
        // independent dense RK4 path with the recovered b
        let m = 1.0;
        let pr = law();
        let b = prof.b;
        let f = |rho: f64| rho * rho * (b - psi(m, &pr, rho)) / (m * nu);
        let steps = 80_000;
        let h = 1.0 / steps as f64;
        let mut rho = 1.2;
        let mut max_err: f64 = 0.0;
        for k in 0..=steps {
            let x = k as f64 * h;
            max_err = max_err.max((prof.eval(x) - rho).abs());
            let k1 = f(rho);
            let k2 = f(rho + 0.5 * h * k1);
            let k3 = f(rho + 0.5 * h * k2);
            let k4 = f(rho + h * k3);
            rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!(max_err < 2e-4, "max pointwise error {max_err}");
    }

    #[test]
    fn viscous_solver_small_nu_profiles_are_sane() {
        // very small ν: endpoints exact, interior plateau near the classified
        // interior state, monotone in the right direction
        for (rho0, rho1) in [(1.2, 1.0), (0.6, 0.4), (1.1, 0.5), (0.4, 0.6), (1.0, 1.2)] {
            let data = datum(rho0, 0.0, rho1);
            let cfg = classify_inviscid(&data).unwrap();
            let prof = solve_isentropic_viscous(&data, 1e-4).unwrap();
            assert_relative_eq!(prof.rho1(), rho1, max_relative = 1e-12);
            let interior = cfg.interior_state.unwrap();
            let mid = prof.eval(0.5);
            assert!(
                (mid - interior).abs() < 1e-3 * interior,
                "case ({rho0},{rho1}): ρ(1/2) = {mid}, interior {interior}"
            );
            let dir = (rho1 - rho0).signum();
            for w in prof.rho.windows(2) {
                assert!(dir * (w[1] - w[0]) >= -1e-12, "non-monotone profile");
            }
        }
    }

    #[test]
    fn viscous_shock_location_approaches_inviscid_limit() {
        let pr = law();
        let m = 1.0;
        let conj = conjugate_state(0.5, m, &pr).unwrap();
        let data = GasBoundaryData::new(0.5, 2.0, m / conj, pr, 0.01).unwrap();
        let cfg = classify_inviscid(&data).unwrap();
        let xs0 = cfg.shock_location.unwrap();
        let prof = solve_isentropic_viscous(&data, 1e-3).unwrap();
        let xs = prof.steepest_point();
        assert!((xs - xs0).abs() < 0.02, "xs(ν=1e-3) = {xs}, limit {xs0}");
        let prof2 = solve_isentropic_viscous(&data, 1e-4).unwrap();
        let xs2 = prof2.steepest_point();
        assert!((xs2 - xs0).abs() < (xs - xs0).abs() + 1e-6, "not improving");
    }

    #[test]
    fn constant_data_gives_constant_profile() {
        let data = GasBoundaryData::new(0.9, 1.0 / 0.9, 1.0 / 0.9, law(), 0.01).unwrap();
        let prof = solve_isentropic_viscous(&data, 0.01).unwrap();
        assert_eq!(prof.rho.len(), 2);
        assert_eq!(prof.eval(0.37), 0.9);
    }
    #[test]
    fn interior_shock_l1_rate_is_first_order() {
        let pr = law();
        let m = 1.0;
        let conj = conjugate_state(0.5, m, &pr).unwrap();
        let data = GasBoundaryData::new(0.5, 2.0, m / conj, pr, 0.01).unwrap();
        let nus = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
        let table = convergence_study(&data, &nus, &[1.0]).unwrap();
        let slope = table.slopes[0].expect("monotone errors");
        assert!((slope - 1.0).abs() < 0.15, "L1 slope {slope}");
        let xs_slope = table.xs_slope.expect("monotone shock deviations");
        assert!((xs_slope - 1.0).abs() < 0.2, "xs slope {xs_slope}");
    }

    #[test]
    fn double_layer_rates_carry_log_factor() {
        // decreasing through the sonic density: double characteristic layer
        let data = datum(1.1, 0.0, 0.5);
        let nus = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
        let table = convergence_study(&data, &nus, &[1.0, 2.0]).unwrap();
        let l2 = table.slopes[1].expect("monotone L2 errors");
        assert!((l2 - 0.5).abs() < 0.1, "L2 slope {l2}");
        let ratios = table.nu_log_ratios.as_ref().unwrap();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min <= 2.0, "ν·log(1/ν) ratios spread {min}..{max}");
    }

    #[test]
    fn viscous_profiles_close_to_limit_in_l1() {
        let pr = law();
        let conj = conjugate_state(0.5, 1.0, &pr).unwrap();
        let nu: f64 = 1e-4;
        let bound = 10.0 * nu * (1.0 / nu).ln();
        let mut cases = vec![
            datum(1.2, 0.0, 1.0),
            datum(0.6, 0.0, 0.4),
            datum(1.1, 0.0, 0.5),
            datum(0.4, 0.0, 0.6),
            datum(1.0, 0.0, 1.2),
        ];
        cases.push(GasBoundaryData::new(0.5, 2.0, 1.0 / conj, pr, nu).unwrap());
        for data in &cases {
            let cfg = classify_inviscid(data).unwrap();
            let prof = solve_isentropic_viscous(data, nu).unwrap();
            let l1 = lp_error(&prof, &cfg, 1.0);
            assert!(l1 < bound, "{:?}: L1 = {l1}, bound {bound}", cfg.kind);
        }
    }

    #[test]
    fn large_viscosity_full_gas_first_order_in_inverse_alpha() {
        let params = FullGasParams {
            u0: 1.0,
            e0: 1.0,
            u1: 2.0,
            e1: 1.5,
            alpha: 10.0,
            nu: 10.0, // ratio r = ν/α = 1 held fixed along the sweep
            gamma: 0.5,
        };
        assert_relative_eq!(params.u_limit(0.5), 1.5, max_relative = 1e-15);
        assert_relative_eq!(params.e_limit(1.0), params.e1, max_relative = 1e-15);
        let table = full_gas_large_visc(&params, &[10.0, 30.0, 100.0, 300.0]).unwrap();
        assert_eq!(table.skipped, 0, "rows skipped: {:?}", table.rows);
        let slope = table.slope.unwrap();
        assert!((slope + 1.0).abs() < 0.15, "H1 slope {slope}");
    }

    #[test]
    fn formal_limit_with_identity_diffusion_is_a_straight_segment() {
        use crate::system::{builtin_linear, MatF};
        let a = MatF::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 1.5]);
        let sys = builtin_linear(a, MatF::identity(2, 2), 0).unwrap();
        let u0 = VecF::from_vec(vec![0.4, -0.2]);
        let c = VecF::from_vec(vec![0.7, 0.1]);
        let traj = formal_large_visc_solve(&sys, &u0, &c).unwrap();
        for &x in &[0.0, 0.31, 0.77, 1.0] {
            let y = traj.eval(x);
            assert_relative_eq!(y[0], u0[0] + x * c[0], epsilon = 1e-9);
            assert_relative_eq!(y[1], u0[1] + x * c[1], epsilon = 1e-9);
        }
    }

    #[test]
    fn formal_limit_matches_full_gas_closed_form() {
        // for B₂₂ = [[α,0],[αu,ν]] the formal ODE integrates in closed form:
        // ū linear, ē quadratic in x
        use crate::system::builtin_full_gas;
        let (alpha, nu, gamma) = (30.0, 1.0 / 30.0, 0.4);
        let (u0v, e0v, u1v, e1v) = (1.0, 1.0, 2.0, 1.5);
        let du = u1v - u0v;
        let sys = builtin_full_gas(gamma, alpha, nu).unwrap();
        let u0 = VecF::from_vec(vec![1.0, u0v, e0v]);
        let c = VecF::from_vec(vec![
            alpha * du,
            nu * (e1v - e0v) + alpha * du * (u0v + u1v) / 2.0,
        ]);
        let traj = formal_large_visc_solve(&sys, &u0, &c).unwrap();
        for &x in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            let y = traj.eval(x);
            let u_exact = u0v + x * du;
            let e_exact =
                e0v * (1.0 - x) + e1v * x + (alpha / nu) * du * du * x * (1.0 - x) / 2.0;
            assert_relative_eq!(y[0], u_exact, epsilon = 1e-8 * (1.0 + u_exact.abs()));
            assert_relative_eq!(y[1], e_exact, epsilon = 1e-8 * (1.0 + e_exact.abs()));
        }
    }

    #[test]
    fn cone_feasibility_reference_geometry() {
        let u0 = VecF::from_vec(vec![0.0, 0.0]);
        let u1 = VecF::from_vec(vec![1.0, 0.0]);
        let ball = |r: f64| ConeDomain::Ball {
            center: vec![0.0, 0.0],
            radius: r,
        };
        // β₀ = 0.5, β₁ = 1: half-angle π/3, cone length 2 for a unit step
        let (theta, feas) = cone_feasibility(0.5, 1.0, &u0, &u1, &ball(1.5)).unwrap();
        assert_relative_eq!(theta, std::f64::consts::FRAC_PI_3, max_relative = 1e-12);
        assert!(!feas, "length-2 cone cannot fit in a radius-1.5 ball");
        let (_, feas) = cone_feasibility(0.5, 1.0, &u0, &u1, &ball(2.5)).unwrap();
        assert!(feas);
        // β₀ = β₁: a segment
        let (theta, feas) = cone_feasibility(1.0, 1.0, &u0, &u1, &ball(1.0)).unwrap();
        assert_eq!(theta, 0.0);
        assert!(feas);
        // degenerate data: trivially feasible when the vertex is inside
        let (_, feas) = cone_feasibility(0.5, 1.0, &u0, &u0, &ball(0.1)).unwrap();
        assert!(feas);
        // box domain
        let bx = ConeDomain::Box {
            lo: vec![-0.1, -2.0],
            hi: vec![2.1, 2.0],
        };
        let (_, feas) = cone_feasibility(0.5, 1.0, &u0, &u1, &bx).unwrap();
        assert!(feas);
        let bx_tight = ConeDomain::Box {
            lo: vec![-0.1, -0.5],
            hi: vec![2.1, 0.5],
        };
        let (_, feas) = cone_feasibility(0.5, 1.0, &u0, &u1, &bx_tight).unwrap();
        assert!(!feas, "rim reaches |y| = 2 sin(π/3) ≈ 1.73");
    }
}
