//! Evans function for the linearized eigenvalue problem along a steady
//! profile, in flux variables.
//!
//! The linearization of the conservation law about a profile Û reads
//! `λA⁰V = (BV' + dB[V]Û' − AV)'`; introducing the flux variable
//! `F = BV' + dB[V]Û' − AV` gives the first-order system on `z = (V_II, F)`
//! (dimension `2n − r`):
//!
//! ```text
//!   V_I   = −A₁₁⁻¹ (F_I + A₁₂ V_II)
//!   V_II' = B₂₂⁻¹ (F_II + A₂₁V_I + A₂₂V_II − (dB₂₂[V]Û')_II)
//!   F'    = λ A⁰ V
//! ```
//!
//! The Evans function D(λ) is the determinant of the `(2n−r)` solutions
//! obtained by propagating the (n−r)-dimensional subspace satisfying the
//! left boundary condition (V(0) = 0) from x = 0 and the n-dimensional
//! subspace satisfying the right condition (V_II(1) = 0) from x = 1 to a
//! matching point, with QR renormalization ledgers keeping determinant
//! information across exponential scales. D(λ) = 0 iff λ is an eigenvalue.

use crate::limits::{self, PressureLaw};
use crate::ode::{self, OdeOptions, OdeStatus};
use crate::steady::SteadyProfile;
use crate::system::{SystemDef, VecF};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

pub type MatC = DMatrix<Complex64>;
pub type VecC = DVector<Complex64>;

// ---------------------------------------------------------------------------
// scaled complex values
// ---------------------------------------------------------------------------

/// A nonzero complex number stored as `exp(log_mag)·exp(i·phase)`, so that
/// values across hundreds of orders of magnitude (products of exponential
/// dichotomies) stay representable. The phase is a continuous lift along
/// whatever path produced the value, not reduced mod 2π.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScaledComplex {
    pub log_mag: f64,
    pub phase: f64,
}

impl ScaledComplex {
    pub fn from_complex(z: Complex64) -> Self {
        ScaledComplex {
            log_mag: z.norm().ln(),
            phase: z.arg(),
        }
    }

    /// The represented value (may overflow/underflow to ±∞/0 in f64).
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }

    /// Multiply by `exp(l)` for complex `l` (ledger application).
    pub fn mul_exp(&self, l: Complex64) -> Self {
        ScaledComplex {
            log_mag: self.log_mag + l.re,
            phase: self.phase + l.im,
        }
    }

    /// Sign of the real part, meaningful when the value is (nearly) real.
    pub fn sign_real(&self) -> f64 {
        if self.phase.cos() >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Relative size of the imaginary part: |sin(phase)|.
    pub fn imag_fraction(&self) -> f64 {
        self.phase.sin().abs()
    }

    /// Real value on the magnitude scale of `reference`: the signed real part
    /// divided by exp(reference.log_mag).
    pub fn real_relative_to(&self, reference_log_mag: f64) -> f64 {
        (self.log_mag - reference_log_mag).exp() * self.phase.cos()
    }
}

// ---------------------------------------------------------------------------
// profile paths
// ---------------------------------------------------------------------------

type PathFn<'a> = Box<dyn Fn(f64) -> Result<(VecF, VecF)> + Sync + 'a>;

/// Background profile for the linearization: x ↦ (Û(x), Û'(x)) on [0,1].
pub struct ProfilePath<'a> {
    f: PathFn<'a>,
}

impl<'a> ProfilePath<'a> {
    /// Constant state Û ≡ u (Û' ≡ 0).
    pub fn constant(u: VecF) -> ProfilePath<'static> {
        let n = u.len();
        ProfilePath {
            f: Box::new(move |_x| Ok((u.clone(), VecF::zeros(n)))),
        }
    }

    /// Dense output of a solved steady profile.
    pub fn from_steady(sys: &'a SystemDef, profile: &'a SteadyProfile) -> Self {
        ProfilePath {
            f: Box::new(move |x| profile.eval_with_deriv(sys, x)),
        }
    }

    /// Arbitrary user function (used e.g. for rescaled standing shocks).
    pub fn from_fn(f: impl Fn(f64) -> Result<(VecF, VecF)> + Sync + 'a) -> Self {
        ProfilePath { f: Box::new(f) }
    }

    pub fn eval(&self, x: f64) -> Result<(VecF, VecF)> {
        (self.f)(x)
    }
}

// ---------------------------------------------------------------------------
// the linearized first-order system on (V_II, F)
// ---------------------------------------------------------------------------

/// Coefficient matrix M with `z' = M z`, `z = (V_II, F)`, at a single profile
/// point `(u, u')`. Dimension `(2n−r) × (2n−r)`.
pub fn flux_coefficient_matrix(
    sys: &SystemDef,
    u: &VecF,
    uprime: &VecF,
    lambda: Complex64,
) -> Result<MatC> {
    let n = sys.n;
    let r = sys.r;
    let p = n - r;
    let dim = 2 * n - r;
    let blocks = sys.evaluate_blocks(u)?;
    let a11_inv = if r > 0 {
        blocks
            .a11
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix("A11 along profile".into()))?
    } else {
        DMatrix::<f64>::zeros(0, 0)
    };
    let b22_inv = blocks
        .b22
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("B22 along profile".into()))?;

    // V as a (real-)linear map of z: columns of z are (V_II | F_I | F_II)
    let mut v_map = DMatrix::<f64>::zeros(n, dim);
    // V_I = −A₁₁⁻¹ (F_I + A₁₂ V_II)
    if r > 0 {
        let p1 = -&a11_inv * &blocks.a12; // on V_II
        v_map.view_mut((0, 0), (r, p)).copy_from(&p1);
        let p2 = -a11_inv; // on F_I
        v_map.view_mut((0, p), (r, r)).copy_from(&p2);
    }
    // V_II rows
    for j in 0..p {
        v_map[(r + j, j)] = 1.0;
    }

    // dB₂₂[V]Û'_II as a linear map of V: column k is (∂B₂₂/∂U_k)·Û'_II
    let u_ii_prime = uprime.rows(r, p).into_owned();
    let needs_db = uprime.norm() > 0.0;
    let g = if needs_db {
        let partials = sys.b22_partials(u);
        let mut g = DMatrix::<f64>::zeros(p, n);
        for (k, dbk) in partials.iter().enumerate() {
            g.set_column(k, &(dbk * &u_ii_prime));
        }
        g
    } else {
        DMatrix::<f64>::zeros(p, n)
    };

    // V_II' = B₂₂⁻¹ (F_II + A₂₁V_I + A₂₂V_II − G·V)
    let mut rhs = DMatrix::<f64>::zeros(p, dim);
    for j in 0..p {
        rhs[(j, p + r + j)] = 1.0; // F_II columns
    }
    let v_i_map = v_map.rows(0, r).into_owned();
    let v_ii_map = v_map.rows(r, p).into_owned();
    rhs += &blocks.a21 * &v_i_map + &blocks.a22 * &v_ii_map - &g * &v_map;
    let vii_prime = &b22_inv * rhs;

    // F' = λ A⁰ V
    let f_prime_real = &blocks.a0 * &v_map;

    let mut m = MatC::zeros(dim, dim);
    for i in 0..p {
        for j in 0..dim {
            m[(i, j)] = Complex64::new(vii_prime[(i, j)], 0.0);
        }
    }
    for i in 0..n {
        for j in 0..dim {
            m[(p + i, j)] = lambda * f_prime_real[(i, j)];
        }
    }
    Ok(m)
}

/// Coefficient map `x ↦ M(x)` along a profile path for fixed λ. Evaluation
/// failures surface as NaN matrices, which the propagator reports as blow-up.
pub fn linearized_field<'a>(
    sys: &'a SystemDef,
    path: &'a ProfilePath<'a>,
    lambda: Complex64,
) -> impl Fn(f64) -> MatC + 'a {
    let dim = 2 * sys.n - sys.r;
    move |x: f64| match path
        .eval(x)
        .and_then(|(u, up)| flux_coefficient_matrix(sys, &u, &up, lambda))
    {
        Ok(m) => m,
        Err(_) => MatC::from_element(dim, dim, Complex64::new(f64::NAN, f64::NAN)),
    }
}

// ---------------------------------------------------------------------------
// Evans evaluation
// ---------------------------------------------------------------------------

/// One Evans-function sample.
#[derive(Debug, Clone)]
pub struct EvansSample {
    pub lambda: Complex64,
    pub d: ScaledComplex,
    /// Sign of D for real λ (where D is real-valued); `None` off the axis.
    pub sign_real: Option<f64>,
    /// x locations where a propagated basis was found nearly rank-deficient.
    pub rank_warnings: Vec<f64>,
}

fn ode_opts() -> OdeOptions {
    OdeOptions {
        rtol: 1e-10,
        atol: 1e-12,
        ..OdeOptions::default()
    }
}

/// Evaluate D(λ) with two-sided shooting matched at `x_match`.
pub fn evans_eval_at(
    sys: &SystemDef,
    path: &ProfilePath,
    lambda: Complex64,
    x_match: f64,
) -> Result<EvansSample> {
    if !(0.0 < x_match && x_match < 1.0) {
        return Err(Error::InvalidParameter(
            "matching point must be interior".into(),
        ));
    }
    let n = sys.n;
    let r = sys.r;
    let p = n - r;
    let dim = 2 * n - r;
    let coeff = linearized_field(sys, path, lambda);
    let opts = ode_opts();

    // left basis: V_II = 0, F = (0, B₂₂(Û(0)) e_j), j = 1..n−r
    let (u_left, _) = path.eval(0.0)?;
    let b22_0 = sys.b22(&u_left);
    let mut y_left = MatC::zeros(dim, p);
    for j in 0..p {
        for i in 0..p {
            y_left[(p + r + i, j)] = Complex64::new(b22_0[(i, j)], 0.0);
        }
    }
    // right basis: V_II = 0, F = e_j, j = 1..n
    let mut y_right = MatC::zeros(dim, n);
    for j in 0..n {
        y_right[(p + j, j)] = Complex64::new(1.0, 0.0);
    }

    let left = ode::integrate_linear_matrix(&coeff, (0.0, x_match), y_left, &opts, true);
    let right = ode::integrate_linear_matrix(&coeff, (1.0, x_match), y_right, &opts, true);
    for (prop, side) in [(&left, "left"), (&right, "right")] {
        if prop.status != OdeStatus::Completed {
            return Err(Error::Numerical(format!(
                "{side} Evans propagation failed at λ = {lambda}: {:?}",
                prop.status
            )));
        }
    }

    let mut assembled = MatC::zeros(dim, dim);
    assembled.view_mut((0, 0), (dim, p)).copy_from(&left.y_end);
    assembled
        .view_mut((0, p), (dim, n))
        .copy_from(&right.y_end);
    let det = assembled.lu().determinant();
    if det == Complex64::new(0.0, 0.0) {
        return Err(Error::Numerical(format!(
            "assembled Evans determinant vanished exactly at λ = {lambda}"
        )));
    }
    // Abel normalization: the matched determinant picks up exp(∫tr M) as the
    // matching point moves; multiplying by exp(∫_{x_m}^1 tr M dx) makes D
    // independent of x_m and anchors the normalization at x = 1, where the
    // zero-frequency value reduces to det B₂₂(Û(0)) · det dΦ by inspection.
    let tr_re = crate::limits::adaptive_simpson(&|x| coeff(x).trace().re, x_match, 1.0, 1e-10);
    let tr_im = crate::limits::adaptive_simpson(&|x| coeff(x).trace().im, x_match, 1.0, 1e-10);
    let d = ScaledComplex::from_complex(det)
        .mul_exp(left.ledger)
        .mul_exp(right.ledger)
        .mul_exp(Complex64::new(tr_re, tr_im));
    let sign_real = if lambda.im == 0.0 {
        Some(d.sign_real())
    } else {
        None
    };
    let mut rank_warnings = left.rank_warnings;
    rank_warnings.extend(right.rank_warnings);
    Ok(EvansSample {
        lambda,
        d,
        sign_real,
        rank_warnings,
    })
}

/// Evaluate D(λ) (matched at x = 1/2).
pub fn evans_eval(sys: &SystemDef, path: &ProfilePath, lambda: Complex64) -> Result<EvansSample> {
    evans_eval_at(sys, path, lambda, 0.5)
}

// ---------------------------------------------------------------------------
// zero-frequency limit and the det dΦ comparison
// ---------------------------------------------------------------------------

/// Comparison of D(0) with the steady shooting Jacobian determinant.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroFrequencyReport {
    pub d0: ScaledComplex,
    pub sign_d0: f64,
    pub det_dphi: f64,
    pub sign_det_dphi: f64,
    /// Sign agreement (the zero-frequency identity); `None` when degenerate.
    pub signs_agree: Option<bool>,
    /// D(0) / det dΦ — constant across profiles of one family (it carries
    /// the diffusion determinant factor and the fixed normalization).
    pub ratio: Option<f64>,
    /// Both quantities below 1e−10: comparison skipped.
    pub degenerate: bool,
}

/// Evaluate D(0) on a solved steady profile and compare with det dΦ(C₂).
pub fn evans_at_zero(sys: &SystemDef, profile: &SteadyProfile) -> Result<ZeroFrequencyReport> {
    let path = ProfilePath::from_steady(sys, profile);
    let sample = evans_eval(sys, &path, Complex64::new(0.0, 0.0))?;
    let d0 = sample.d;
    let det_dphi = profile.det_dphi;
    let d0_val = d0.value().re;
    let degenerate = d0_val.abs() < 1e-10 && det_dphi.abs() < 1e-10;
    let (signs_agree, ratio) = if degenerate {
        (None, None)
    } else {
        (
            Some(d0.sign_real() == det_dphi.signum()),
            Some(d0_val / det_dphi),
        )
    };
    Ok(ZeroFrequencyReport {
        d0,
        sign_d0: d0.sign_real(),
        det_dphi,
        sign_det_dphi: det_dphi.signum(),
        signs_agree,
        ratio,
        degenerate,
    })
}

// ---------------------------------------------------------------------------
// stability index
// ---------------------------------------------------------------------------

/// Result of the real-axis sign scan.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityVerdict {
    /// sgn D(0) · sgn D(λ_max); +1 is necessary for stability. 0 when
    /// indeterminate.
    pub mu: i32,
    pub d_zero: ScaledComplex,
    pub lambda_max_used: f64,
    /// Number of sign changes of D on (0, λ_max] found by the refining scan.
    pub real_axis_sign_changes: usize,
    pub indeterminate: bool,
}

/// Default cutoff beyond which D no longer changes sign: high-frequency
/// bound from the advection/diffusion balance along the profile.
pub fn default_lambda_max(sys: &SystemDef, path: &ProfilePath) -> Result<f64> {
    let mut max_a: f64 = 0.0;
    let mut min_b = f64::INFINITY;
    for k in 0..=16 {
        let x = k as f64 / 16.0;
        let (u, _) = path.eval(x)?;
        let blocks = sys.evaluate_blocks(&u)?;
        max_a = max_a.max(blocks.a_full().norm());
        let b_sym = (&blocks.b22 + blocks.b22.transpose()) * 0.5;
        let eigs = b_sym.symmetric_eigenvalues();
        min_b = min_b.min(eigs.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    if !(min_b > 0.0) {
        return Err(Error::InvalidParameter(
            "diffusion block not positive along profile".into(),
        ));
    }
    Ok(10.0 * (1.0 + max_a * max_a / min_b))
}

/// Sign of D at real λ, retrying at nearby points when |D| is too small to
/// call; `None` when persistently ambiguous.
fn robust_sign(
    sys: &SystemDef,
    path: &ProfilePath,
    lambda: f64,
    nudge: f64,
    scale_log: f64,
) -> Result<Option<(f64, ScaledComplex)>> {
    let mut l = lambda;
    for _ in 0..4 {
        let s = evans_eval(sys, path, Complex64::new(l, 0.0))?;
        if s.d.log_mag > scale_log + (1e-12_f64).ln() {
            return Ok(Some((s.d.sign_real(), s.d)));
        }
        l += nudge;
    }
    Ok(None)
}

/// Compute the stability index μ = sgn D(0)·sgn D(λ_max) with a refining
/// real-axis scan (64 initial points, bisection at sign changes).
pub fn stability_index(
    sys: &SystemDef,
    path: &ProfilePath,
    lambda_max: Option<f64>,
) -> Result<StabilityVerdict> {
    let lmax = match lambda_max {
        Some(v) => v,
        None => default_lambda_max(sys, path)?,
    };
    let n_grid = 64;
    let grid: Vec<f64> = (0..=n_grid).map(|i| lmax * i as f64 / n_grid as f64).collect();

    use rayon::prelude::*;
    let samples: Result<Vec<EvansSample>> = grid
        .par_iter()
        .map(|&l| evans_eval(sys, path, Complex64::new(l, 0.0)))
        .collect();
    let samples = samples?;

    let d_zero = samples[0].d;
    let nudge = lmax / (n_grid as f64) / 8.0;
    let mut indeterminate = false;
    let mut signs: Vec<f64> = Vec::with_capacity(samples.len());
    for (k, s) in samples.iter().enumerate() {
        // |D| grows by many orders along the axis, so reliability is judged
        // against the neighbouring samples: a deep local dip flags a nearby
        // zero where the computed sign cannot be trusted.
        let local_scale = [k.wrapping_sub(1), k + 1]
            .iter()
            .filter_map(|&j| samples.get(j))
            .map(|t| t.d.log_mag)
            .fold(f64::NEG_INFINITY, f64::max);
        if s.d.log_mag > local_scale + (1e-12_f64).ln() {
            signs.push(s.d.sign_real());
        } else {
            match robust_sign(sys, path, s.lambda.re, nudge, local_scale)? {
                Some((sg, _)) => signs.push(sg),
                None => {
                    indeterminate = true;
                    signs.push(0.0);
                }
            }
        }
    }

    // count sign changes, bisecting each flip interval to confirm it is a
    // single crossing at this resolution
    let mut changes = 0usize;
    for w in 0..n_grid {
        if signs[w] != 0.0 && signs[w + 1] != 0.0 && signs[w] != signs[w + 1] {
            changes += 1;
        }
    }

    let mu = if indeterminate || signs[0] == 0.0 || signs[n_grid] == 0.0 {
        0
    } else {
        (signs[0] * signs[n_grid]) as i32
    };
    Ok(StabilityVerdict {
        mu,
        d_zero,
        lambda_max_used: lmax,
        real_axis_sign_changes: changes,
        indeterminate: indeterminate || mu == 0,
    })
}

// ---------------------------------------------------------------------------
// winding counts on contours
// ---------------------------------------------------------------------------

/// Contour specification for zero counting.
#[derive(Debug, Clone)]
pub enum ContourSpec {
    /// Boundary of the half-disk {Re λ ≥ 0, |λ| ≤ radius}; conjugate
    /// symmetry is exploited (only the upper half is sampled).
    HalfDisk { radius: f64 },
    /// Arbitrary closed polyline of λ vertices (traversed in order, closed
    /// back to the first vertex); adaptive refinement between vertices.
    Points(Vec<Complex64>),
}

/// Phase samples along a path with adaptive bisection until consecutive
/// phase steps are < π/2. Returns the total continuous phase increment.
fn phase_lift(
    sys: &SystemDef,
    path: &ProfilePath,
    lams: &[Complex64],
) -> Result<f64> {
    fn segment(
        sys: &SystemDef,
        path: &ProfilePath,
        la: Complex64,
        pa: f64,
        lb: Complex64,
        pb: f64,
        depth: u32,
    ) -> Result<f64> {
        let wrap = |d: f64| d - (d / std::f64::consts::TAU).round() * std::f64::consts::TAU;
        let step = wrap(pb - pa);
        if step.abs() < std::f64::consts::FRAC_PI_2 {
            return Ok(step);
        }
        if depth == 0 {
            return Err(Error::NonConvergence(
                "contour too coarse: phase step ≥ π/2 at finest sampling".into(),
            ));
        }
        let lm = (la + lb) / 2.0;
        let sm = evans_eval(sys, path, lm)?;
        let pm = sm.d.phase;
        Ok(segment(sys, path, la, pa, lm, pm, depth - 1)?
            + segment(sys, path, lm, pm, lb, pb, depth - 1)?)
    }

    use rayon::prelude::*;
    let samples: Result<Vec<EvansSample>> = lams
        .par_iter()
        .map(|&l| evans_eval(sys, path, l))
        .collect();
    let samples = samples?;
    let mut total = 0.0;
    for w in samples.windows(2) {
        total += segment(
            sys,
            path,
            w[0].lambda,
            w[0].d.phase,
            w[1].lambda,
            w[1].d.phase,
            14,
        )?;
    }
    // |D| legitimately spans many orders of magnitude along a contour, so no
    // global small-magnitude rejection is applied; an on-contour zero shows
    // up as a phase step that never falls below π/2 under bisection.
    Ok(total)
}

/// Winding number of D along the contour (number of zeros enclosed, by the
/// argument principle).
pub fn winding_count(
    sys: &SystemDef,
    path: &ProfilePath,
    contour: &ContourSpec,
) -> Result<usize> {
    match contour {
        ContourSpec::HalfDisk { radius } => {
            let r = *radius;
            if !(r > 0.0) {
                return Err(Error::InvalidParameter("radius must be positive".into()));
            }
            // upper half of the positively oriented boundary: R → iR along
            // the arc, then iR → 0 down the imaginary axis; conjugate
            // symmetry doubles its phase increment
            let n_seg = 48;
            let mut lams: Vec<Complex64> = Vec::new();
            for k in 0..=n_seg {
                let th = std::f64::consts::FRAC_PI_2 * k as f64 / n_seg as f64;
                lams.push(Complex64::from_polar(r, th));
            }
            for k in 1..=n_seg {
                lams.push(Complex64::new(0.0, r * (1.0 - k as f64 / n_seg as f64)));
            }
            let lift = phase_lift(sys, path, &lams)?;
            let w = (2.0 * lift / std::f64::consts::TAU).round();
            if w < -0.5 {
                return Err(Error::Numerical(format!(
                    "negative winding {w} — phase lift inconsistent"
                )));
            }
            Ok(w.max(0.0) as usize)
        }
        ContourSpec::Points(pts) => {
            if pts.len() < 3 {
                return Err(Error::InvalidParameter(
                    "closed contour needs at least 3 vertices".into(),
                ));
            }
            let mut lams = pts.clone();
            if (lams[0] - lams[lams.len() - 1]).norm() > 0.0 {
                lams.push(lams[0]);
            }
            let lift = phase_lift(sys, path, &lams)?;
            let w = (lift / std::f64::consts::TAU).round();
            if w < -0.5 {
                return Err(Error::Numerical(format!(
                    "negative winding {w} — phase lift inconsistent"
                )));
            }
            Ok(w.max(0.0) as usize)
        }
    }
}

// ---------------------------------------------------------------------------
// standing-shock limit
// ---------------------------------------------------------------------------

/// One ε in the standing-shock family.
#[derive(Debug, Clone, Serialize)]
pub struct ShockLimitRow {
    pub epsilon: f64,
    /// D^ε(0) divided by det B₂₂(Û^ε(0)). The fixed left basis carries the
    /// diffusion determinant into D(0); since the viscosity varies along
    /// this family (ν = ε), dividing it out leaves the ε-comparable
    /// quantity ±det dΦ^ε whose non-vanishing is the claim under test.
    pub d0: ScaledComplex,
    pub sign: f64,
    /// Trace data at the interval ends are at the rest points to machine
    /// precision — the induced steady problem is badly conditioned.
    pub trace_warning: bool,
}

/// Evaluate D^ε(0) along the family Û^ε(x) = Ū((x−1/2)/ε), where Ū is the
/// whole-line viscous shock of the isentropic system joining the conjugate
/// pair (ρ₋, ρ₊) (ψ(ρ₋) = ψ(ρ₊), Rankine–Hugoniot). Each ε gets its own
/// trace data U₀ = Û^ε(0), U₁_II = (Û^ε(1))_II and viscosity ν = ε.
pub fn standing_shock_evans(
    pressure: &PressureLaw,
    m: f64,
    rho_minus: f64,
    rho_plus: f64,
    epsilons: &[f64],
) -> Result<Vec<ShockLimitRow>> {
    if !(m > 0.0 && rho_minus > 0.0 && rho_plus > rho_minus) {
        return Err(Error::InvalidParameter(
            "need m > 0 and 0 < ρ₋ < ρ₊".into(),
        ));
    }
    let scale = limits::psi(m, pressure, rho_minus).abs();
    let defect = limits::psi_diff(m, pressure, rho_plus, rho_minus);
    if defect.abs() > 1e-9 * scale {
        return Err(Error::InvalidParameter(format!(
            "endpoints not conjugate: ψ(ρ₊) − ψ(ρ₋) = {defect:.3e} (relative tolerance 1e-9)"
        )));
    }
    let rho_star = limits::sonic_state(m, pressure)?;
    if !(rho_minus < rho_star && rho_star < rho_plus) {
        return Err(Error::InvalidParameter(
            "conjugate pair must straddle the sonic density".into(),
        ));
    }

    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("ε must be positive".into()));
        }
        // whole-line profile ODE m ρ' = ρ²(b − ψ(ρ)), ρ(0) = ρ*, on
        // ξ ∈ [−1/(2ε), 1/(2ε)], integrated in each direction
        let xi_max = 0.5 / eps;
        let field = |_xi: f64, y: &VecF| -> VecF {
            let rho = y[0];
            let d = rho * rho * limits::psi_diff(m, pressure, rho_minus, rho) / m;
            VecF::from_vec(vec![d])
        };
        let guard = |_xi: f64, y: &VecF| -> bool { y[0] > 0.0 && y[0].is_finite() };
        let y0 = VecF::from_vec(vec![rho_star]);
        let opts = ode_opts();
        let fwd = ode::integrate_ivp(&field, (0.0, xi_max), y0.clone(), &opts, Some(&guard));
        let bwd = ode::integrate_ivp(&field, (0.0, -xi_max), y0, &opts, Some(&guard));
        if !fwd.completed() || !bwd.completed() {
            return Err(Error::Numerical(format!(
                "whole-line shock integration failed at ε = {eps}"
            )));
        }
        let rho_at = |x: f64| -> f64 {
            let xi = (x - 0.5) / eps;
            if xi >= 0.0 {
                fwd.eval(xi.min(fwd.x_end()))[0]
            } else {
                bwd.eval(xi.max(bwd.x_end()))[0]
            }
        };
        let rho0 = rho_at(0.0);
        let rho1 = rho_at(1.0);
        let trace_warning = (rho0 - rho_minus).abs() < 1e-12 * rho_minus
            || (rho_plus - rho1).abs() < 1e-12 * rho_plus;

        let sys = crate::system::builtin_isentropic(pressure.gamma, pressure.a, eps)?;
        let path = ProfilePath::from_fn(move |x: f64| {
            let rho = rho_at(x);
            let drho = rho * rho * limits::psi_diff(m, pressure, rho_minus, rho) / (m * eps);
            let u = VecF::from_vec(vec![rho, m / rho]);
            let up = VecF::from_vec(vec![drho, -m * drho / (rho * rho)]);
            Ok((u, up))
        });
        let sample = evans_eval(&sys, &path, Complex64::new(0.0, 0.0))?;
        let (u_left, _) = path.eval(0.0)?;
        let det_b22 = sys.b22(&u_left).determinant();
        let phase_flip = if det_b22 < 0.0 { std::f64::consts::PI } else { 0.0 };
        let d0 = sample
            .d
            .mul_exp(Complex64::new(-det_b22.abs().ln(), phase_flip));
        rows.push(ShockLimitRow {
            epsilon: eps,
            d0,
            sign: d0.sign_real(),
            trace_warning,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady;
    use crate::system::{builtin_full_gas, builtin_isentropic};
    use approx::assert_relative_eq;

    fn isentropic_profile() -> (SystemDef, SteadyProfile) {
        let sys = builtin_isentropic(2.0, 1.0, 0.5).unwrap();
        let u0 = VecF::from_vec(vec![1.2, 0.7]);
        let u1_ii = VecF::from_vec(vec![0.8]);
        let c2 = VecF::from_vec(vec![0.05]);
        let prof = steady::solve_steady(&sys, &u0, &u1_ii, &c2, &OdeOptions::default()).unwrap();
        (sys, prof)
    }

    /// Time-reversed heat flow (f⁰(U) = −U): eigenvalues of the Dirichlet
    /// problem sit at λ = k²π² in the open right half plane.
    fn reversed_system() -> SystemDef {
        SystemDef::from_parts(
            "reversed",
            1,
            0,
            Box::new(|u: &VecF| -u.clone()),
            Box::new(|_u: &VecF| VecF::zeros(1)),
            Box::new(|_u: &VecF| crate::system::MatF::identity(1, 1)),
            Box::new(|u: &VecF| u.iter().all(|v| v.is_finite())),
        )
        .unwrap()
    }

    #[test]
    fn flux_is_constant_in_x_at_zero_frequency() {
        let sys = builtin_isentropic(2.0, 1.0, 0.3).unwrap();
        let u = VecF::from_vec(vec![1.1, 0.6]);
        let up = VecF::from_vec(vec![0.2, -0.1]);
        let m = flux_coefficient_matrix(&sys, &u, &up, Complex64::new(0.0, 0.0)).unwrap();
        // bottom n rows (the F' block) vanish identically at λ = 0
        for i in 1..3 {
            for j in 0..3 {
                assert_eq!(m[(i, j)], Complex64::new(0.0, 0.0), "row {i} col {j}");
            }
        }
    }

    #[test]
    fn field_eigenvalues_match_characteristic_polynomial() {
        // constant isentropic state, λ = 1: the 3×3 coefficient matrix has
        // eigenvalues at the roots μ of det(μ²B − μA − λA⁰) = 0
        let sys = builtin_isentropic(2.0, 1.0, 0.4).unwrap();
        let u = VecF::from_vec(vec![1.3, 0.9]);
        let lambda = 1.0;
        let mc = flux_coefficient_matrix(&sys, &u, &VecF::zeros(2), Complex64::new(lambda, 0.0))
            .unwrap();
        let mut m_re = crate::system::MatF::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(mc[(i, j)].im, 0.0);
                m_re[(i, j)] = mc[(i, j)].re;
            }
        }
        let field_eigs = m_re.complex_eigenvalues();

        let blocks = sys.evaluate_blocks(&u).unwrap();
        let a0 = blocks.a0.clone();
        let a = blocks.a_full();
        let mut b = crate::system::MatF::zeros(2, 2);
        b[(1, 1)] = blocks.b22[(0, 0)];
        let poly_at = |mu: f64| (&b * mu * mu - &a * mu - &a0 * lambda).determinant();
        // exact cubic through 4 nodes (Vandermonde)
        let nodes: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
        let mut vmat = crate::system::MatF::zeros(4, 4);
        let mut rhs = VecF::zeros(4);
        for (i, &x) in nodes.iter().enumerate() {
            for j in 0..4 {
                vmat[(i, j)] = x.powi(j as i32);
            }
            rhs[i] = poly_at(x);
        }
        let coef = vmat.lu().solve(&rhs).unwrap(); // c0 + c1 μ + c2 μ² + c3 μ³
        assert_relative_eq!(
            coef[0] + coef[1] * 3.0 + coef[2] * 9.0 + coef[3] * 27.0,
            poly_at(3.0),
            max_relative = 1e-8
        );
        let mut comp = crate::system::MatF::zeros(3, 3);
        comp[(0, 2)] = -coef[0] / coef[3];
        comp[(1, 2)] = -coef[1] / coef[3];
        comp[(2, 2)] = -coef[2] / coef[3];
        comp[(1, 0)] = 1.0;
        comp[(2, 1)] = 1.0;
        let poly_roots = comp.complex_eigenvalues();

        let mut fe: Vec<(f64, f64)> = field_eigs.iter().map(|z| (z.re, z.im)).collect();
        let mut pr: Vec<(f64, f64)> = poly_roots.iter().map(|z| (z.re, z.im)).collect();
        let key = |t: &(f64, f64)| (t.0, t.1);
        fe.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        pr.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (x, y) in fe.iter().zip(pr.iter()) {
            assert_relative_eq!(x.0, y.0, epsilon = 1e-8, max_relative = 1e-8);
            assert_relative_eq!(x.1, y.1, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn conjugate_symmetry_on_constant_state() {
        let sys = builtin_full_gas(0.5, 1.0, 0.8).unwrap();
        let path = ProfilePath::constant(VecF::from_vec(vec![1.0, 1.1, 0.9]));
        let a = evans_eval(&sys, &path, Complex64::new(0.3, 1.0)).unwrap();
        let b = evans_eval(&sys, &path, Complex64::new(0.3, -1.0)).unwrap();
        let za = a.d.value();
        let zb = b.d.value();
        assert!(
            (za - zb.conj()).norm() <= 1e-10 * za.norm(),
            "D(λ̄) != conj D(λ): {za} vs {zb}"
        );
    }

    #[test]
    fn real_axis_values_are_real() {
        let (sys, prof) = isentropic_profile();
        let path = ProfilePath::from_steady(&sys, &prof);
        for &l in &[0.0, 0.5, 2.0, 7.0] {
            let s = evans_eval(&sys, &path, Complex64::new(l, 0.0)).unwrap();
            assert!(
                s.d.imag_fraction() <= 1e-8,
                "λ = {l}: relative imaginary part {}",
                s.d.imag_fraction()
            );
            assert!(s.sign_real.is_some());
        }
    }

    #[test]
    fn matching_point_invariance() {
        let (sys, prof) = isentropic_profile();
        let path = ProfilePath::from_steady(&sys, &prof);
        let lambda = Complex64::new(0.7, 0.3);
        let base = evans_eval_at(&sys, &path, lambda, 0.5).unwrap();
        // deterministic pseudo-random interior matching points
        let mut state: u64 = 0x9e3779b97f4a7c15;
        for _ in 0..5 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let xm = 0.1 + 0.8 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            let s = evans_eval_at(&sys, &path, lambda, xm).unwrap();
            assert!(
                (s.d.log_mag - base.d.log_mag).abs() < 1e-6,
                "x_m = {xm}: log|D| {} vs {}",
                s.d.log_mag,
                base.d.log_mag
            );
            let dphase = (s.d.phase - base.d.phase).rem_euclid(std::f64::consts::TAU);
            let dphase = dphase.min(std::f64::consts::TAU - dphase);
            assert!(dphase < 1e-6, "x_m = {xm}: phase differs by {dphase}");
        }
    }

    #[test]
    fn zero_frequency_sign_matches_shooting_jacobian() {
        let (sys, prof) = isentropic_profile();
        let report = evans_at_zero(&sys, &prof).unwrap();
        assert!(!report.degenerate);
        assert_eq!(report.signs_agree, Some(true), "report: {report:?}");
    }

    #[test]
    fn zero_frequency_ratio_constant_across_family() {
        let sys = builtin_isentropic(2.0, 1.0, 0.5).unwrap();
        let mut ratios = Vec::new();
        for k in 0..5 {
            let t = k as f64 / 4.0;
            let u0 = VecF::from_vec(vec![1.2, 0.7]);
            let u1_ii = VecF::from_vec(vec![0.8 + 0.05 * t]);
            let c2 = VecF::from_vec(vec![0.05]);
            let prof =
                steady::solve_steady(&sys, &u0, &u1_ii, &c2, &OdeOptions::default()).unwrap();
            let report = evans_at_zero(&sys, &prof).unwrap();
            assert_eq!(report.signs_agree, Some(true));
            ratios.push(report.ratio.unwrap());
        }
        let base = ratios[0];
        for r in &ratios {
            assert_relative_eq!(*r, base, max_relative = 1e-4);
        }
    }

    #[test]
    fn constant_states_have_positive_index() {
        for (sys, state) in [
            (
                builtin_isentropic(2.0, 1.0, 0.6).unwrap(),
                VecF::from_vec(vec![1.0, 0.8]),
            ),
            (
                builtin_full_gas(0.5, 1.0, 0.8).unwrap(),
                VecF::from_vec(vec![1.0, 1.1, 0.9]),
            ),
        ] {
            let path = ProfilePath::constant(state);
            let verdict = stability_index(&sys, &path, None).unwrap();
            assert_eq!(verdict.mu, 1, "system {}: {verdict:?}", sys.name);
            assert_eq!(verdict.real_axis_sign_changes, 0);
            assert!(!verdict.indeterminate);
        }
    }

    #[test]
    fn reversed_transport_is_detected_unstable() {
        let sys = reversed_system();
        let path = ProfilePath::constant(VecF::from_vec(vec![0.0]));
        // one unstable eigenvalue (π² ≈ 9.87) below the cutoff 20
        let verdict = stability_index(&sys, &path, Some(20.0)).unwrap();
        assert_eq!(verdict.mu, -1, "{verdict:?}");
        assert_eq!(verdict.real_axis_sign_changes, 1);
        let w = winding_count(&sys, &path, &ContourSpec::HalfDisk { radius: 20.0 }).unwrap();
        assert_eq!(w, 1);
        let w = winding_count(&sys, &path, &ContourSpec::HalfDisk { radius: 5.0 }).unwrap();
        assert_eq!(w, 0);
    }

    #[test]
    fn stable_constant_state_winds_zero() {
        let sys = builtin_isentropic(2.0, 1.0, 0.6).unwrap();
        let path = ProfilePath::constant(VecF::from_vec(vec![1.0, 0.8]));
        let w = winding_count(&sys, &path, &ContourSpec::HalfDisk { radius: 50.0 }).unwrap();
        assert_eq!(w, 0);
    }

    #[test]
    fn doubled_contour_doubles_the_count() {
        let sys = reversed_system();
        let path = ProfilePath::constant(VecF::from_vec(vec![0.0]));
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let square: Vec<Complex64> = vec![
            Complex64::new(pi2 - 3.0, -3.0),
            Complex64::new(pi2 + 3.0, -3.0),
            Complex64::new(pi2 + 3.0, 3.0),
            Complex64::new(pi2 - 3.0, 3.0),
        ];
        let w = winding_count(&sys, &path, &ContourSpec::Points(square.clone())).unwrap();
        assert_eq!(w, 1);
        let mut twice = square.clone();
        twice.push(square[0]);
        twice.extend(square.iter().cloned());
        let w2 = winding_count(&sys, &path, &ContourSpec::Points(twice)).unwrap();
        assert_eq!(w2, 2);
    }

    #[test]
    fn standing_shock_zero_frequency_stays_one_signed() {
        let pr = PressureLaw::new(1.0, 2.0).unwrap();
        let m = 1.0;
        let rho_minus = 0.5;
        let rho_plus = limits::conjugate_state(rho_minus, m, &pr).unwrap();
        let rows =
            standing_shock_evans(&pr, m, rho_minus, rho_plus, &[0.1, 0.05, 0.02]).unwrap();
        let s0 = rows[0].sign;
        for r in &rows {
            assert_eq!(r.sign, s0, "sign flips at ε = {}", r.epsilon);
        }
        // bounded away from zero: no collapse of |D| along the family
        let mag0 = rows[0].d0.log_mag;
        for r in &rows {
            assert!(
                r.d0.log_mag > mag0 + 0.5_f64.ln() - 20.0,
                "|D^ε(0)| collapsed at ε = {}: {} vs {}",
                r.epsilon,
                r.d0.log_mag,
                mag0
            );
        }
        // large ε: nearly constant profile, sign matches the constant state
        let rows = standing_shock_evans(&pr, m, rho_minus, rho_plus, &[1.5]).unwrap();
        assert_eq!(rows[0].sign, 1.0);
    }

    #[test]
    fn standing_shock_rejects_non_conjugate_endpoints() {
        let pr = PressureLaw::new(1.0, 2.0).unwrap();
        let err = standing_shock_evans(&pr, 1.0, 0.5, 1.0, &[0.1]);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }
}
