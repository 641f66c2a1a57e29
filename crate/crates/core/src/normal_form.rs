//! Centre-manifold reduction at a Hopf point (Hassard–Kazarinoff–Wan).
//!
//! At `tau = tau_c` the linear operator has the simple pair `±i omega_c`.
//! `Phi(theta) = v e^{lambda1 theta}` spans its eigenspace and
//! `Psi(s) = w e^{lambda2 s}` the adjoint one, normalised under
//!
//! ```text
//! <Psi, Phi> = Psi(0) Phi(0) + int_{-tau}^{0} Psi(theta + tau) B Phi(theta) dtheta = 1.
//! ```
//!
//! Restricted to the centre manifold the flow is
//! `z' = lambda1 z + g20 z^2/2 + g11 z zbar + g02 zbar^2/2 + g21 z^2 zbar/2 + ...`,
//! from which `C1(0)`, `mu2`, `beta2` and `T2` follow.
//!
//! Several coefficient formulas for this model circulate in a form with
//! transcription slips. [`FormulaReadings`] switches each one between the
//! re-derived version (default) and the literal one.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::stability::{linearize, HopfPoint};

pub type CVec4 = Vector4<Complex64>;

/// Residual bound for the delayed eigenproblems, relative to `max(1, |v|)`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
/// Condition-number ceiling for the `E1`/`E2` solves.
pub const MAX_CONDITION: f64 = 1e12;
/// Below this `|Re C1(0)|` the Hopf point is degenerate.
pub const DEGENERATE_C1: f64 = 1e-14;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Chooses between re-derived and literal variants of the coefficient
/// formulas. `Default` is fully re-derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FormulaReadings {
    /// `F4_11 = -a21 v2 v4bar e^{-l1 tau} + v4 v2bar e^{-l2 tau}` (the factor
    /// `-a21` on the first term only) instead of on both terms.
    pub literal_f4_11: bool,
    /// `F4_02` with the factor `-2 a12` instead of `-2 a21`.
    pub literal_f4_02: bool,
    /// Fourth component of `w20` built from `conj(g20)` instead of `conj(g02)`.
    pub literal_w4_20: bool,
    /// `F2_21` with `w2_11(-tau)` and `F4_21` with `w4_11(-tau)` instead of
    /// the undelayed values `w2_11(0)`, `w4_11(0)`.
    pub literal_cubic_lags: bool,
}

impl FormulaReadings {
    pub const DERIVED: FormulaReadings =
        FormulaReadings { literal_f4_11: false, literal_f4_02: false, literal_w4_20: false, literal_cubic_lags: false };
    pub const LITERAL: FormulaReadings =
        FormulaReadings { literal_f4_11: true, literal_f4_02: true, literal_w4_20: true, literal_cubic_lags: true };

    pub fn is_derived(&self) -> bool {
        *self == Self::DERIVED
    }
}

/// Right and left critical eigenvectors with their normalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair {
    pub v: CVec4,
    /// Normalised so that `<Psi, Phi> = 1`.
    pub w: CVec4,
    pub eta: Complex64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

/// `A + B e^{-lambda tau} - lambda I`.
fn delayed_pencil(p: &ModelParams, eq: &Equilibrium, lambda: Complex64, tau: f64) -> Matrix4<Complex64> {
    let lp = linearize(p, eq);
    lp.delayed_matrix(lambda, tau) - Matrix4::identity() * lambda
}

/// Right eigenvector of `A + B e^{-lambda1 tau}` for `lambda1 = i omega`,
/// normalised with `v1 = 0`, `v3 = 1`:
///
/// ```text
/// v2 = (lambda1 + b2) e^{lambda1 tau} / rho1
/// v4 = -(lambda1 + b2)(lambda1 + a1 + a12 y20) e^{2 lambda1 tau} / (rho1 a12 y10)
/// ```
pub fn right_eigenvector(p: &ModelParams, eq: &Equilibrium, omega: f64, tau: f64) -> Result<CVec4> {
    if eq.rho1 == 0.0 {
        return Err(Error::DegenerateHopf("rho1 = 0: eigenvector normalisation undefined".into()));
    }
    if p.a12 * eq.y10 == 0.0 {
        return Err(Error::DegenerateHopf("a12 y10 = 0: eigenvector normalisation undefined".into()));
    }
    let l = I * omega;
    let e = (l * tau).exp();
    let v2 = (l + p.b2) * e / eq.rho1;
    let v4 = -(l + p.b2) * (l + p.a1 + p.a12 * eq.y20) * e * e / (eq.rho1 * p.a12 * eq.y10);
    let v = CVec4::new(c(0.0), v2, c(1.0), v4);
    let residual = (delayed_pencil(p, eq, l, tau) * v).norm();
    if residual > EIGEN_RESIDUAL_TOL * v.norm().max(1.0) {
        return Err(Error::EigenResidual { residual, context: "right eigenvector" });
    }
    Ok(v)
}

/// `int_{-tau}^{0} e^{rate (theta + tau)} e^{other theta} dtheta`.
fn kernel_integral(rate: Complex64, other: Complex64, tau: f64) -> Complex64 {
    let s = (rate + other) * tau;
    let factor = if s.norm() < 1e-6 {
        c(tau) * (1.0 - s / 2.0 + s * s / 6.0)
    } else {
        (1.0 - (-s).exp()) / (rate + other)
    };
    (rate * tau).exp() * factor
}

/// Closed-form bilinear pairing of `Psi(s) = psi e^{psi_rate s}` with
/// `Phi(theta) = phi e^{phi_rate theta}`.
pub fn pairing(
    psi: &CVec4,
    psi_rate: Complex64,
    phi: &CVec4,
    phi_rate: Complex64,
    b: &Matrix4<f64>,
    tau: f64,
) -> Complex64 {
    let bc: Matrix4<Complex64> = b.map(c);
    psi.dot(phi) + kernel_integral(psi_rate, phi_rate, tau) * psi.dot(&(bc * phi))
}

/// Unnormalised left eigenvector components: `w1 = 1` and
/// `w2 = b1 + l`, `w4 = -a12 y10 e^{-l tau} (b1 + l) / (a2 + a21 y10 + l)`,
/// `w3 = w4 / (b2 + l)`.
fn left_components(p: &ModelParams, eq: &Equilibrium, l: Complex64, tau: f64) -> CVec4 {
    let x = p.a12 * eq.y10 * (-l * tau).exp() * (p.b1 + l) / (p.a2 + p.a21 * eq.y10 + l);
    CVec4::new(c(1.0), p.b1 + l, -x / (p.b2 + l), -x)
}

/// Left eigenvector `w` of `A + B e^{-lambda1 tau}` (so that `Psi(s) = w e^{-lambda1 s}`
/// is an adjoint eigenfunction) together with the normalisation `eta`
/// that makes `<Psi, Phi> = 1`.
pub fn left_eigenvector(p: &ModelParams, eq: &Equilibrium, omega: f64, tau: f64, v: &CVec4) -> Result<(CVec4, Complex64)> {
    let l = I * omega;
    let raw = left_components(p, eq, l, tau);
    let residual = (raw.transpose() * delayed_pencil(p, eq, l, tau)).norm();
    if residual > EIGEN_RESIDUAL_TOL * raw.norm().max(1.0) {
        return Err(Error::EigenResidual { residual, context: "left eigenvector" });
    }
    let b = linearize(p, eq).b;
    let eta = pairing(&raw, -l, v, l, &b, tau);
    if eta.norm() < 1e-14 {
        return Err(Error::DegenerateHopf("vanishing adjoint normalisation".into()));
    }
    Ok((raw / eta, eta))
}

/// The normalisation constant in its commonly printed closed form, which
/// carries `e^{+lambda1 tau}` in front of the integral term and drops the
/// factor `b1 + lambda1` on its last summand. Diagnostic only.
pub fn printed_eta(p: &ModelParams, eq: &Equilibrium, omega: f64, tau: f64, v: &CVec4) -> Complex64 {
    let l = I * omega;
    let x = p.a12 * eq.y10 * (-l * tau).exp() * (p.b1 + l) / (p.a2 + p.a21 * eq.y10 + l);
    let inner = v[1] * (-eq.rho1 * x / (p.b2 + l) + p.a21 * eq.y20 * x) - p.a12 * eq.y10 * v[3];
    v[1] * (p.b1 + l) - x / (p.b2 + l) * v[2] - x * v[3] + tau * (l * tau).exp() * inner
}

pub fn eigenpair(p: &ModelParams, eq: &Equilibrium, omega: f64, tau: f64) -> Result<Eigenpair> {
    let v = right_eigenvector(p, eq, omega, tau)?;
    let (w, eta) = left_eigenvector(p, eq, omega, tau, &v)?;
    Ok(Eigenpair { v, w, eta, lambda1: I * omega, lambda2: -I * omega })
}

/// Second-order Taylor blocks of the nonlinearity along the centre
/// eigenspace and their projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticTerms {
    pub f20: CVec4,
    pub f11: CVec4,
    pub f02: CVec4,
    pub g20: Complex64,
    pub g11: Complex64,
    pub g02: Complex64,
}

pub fn g_quadratic(p: &ModelParams, eq: &Equilibrium, ep: &Eigenpair, tau: f64, readings: FormulaReadings) -> QuadraticTerms {
    let (v2, v4) = (ep.v[1], ep.v[3]);
    let (v2b, v4b) = (v2.conj(), v4.conj());
    let e1 = (-ep.lambda1 * tau).exp();
    let e2 = (-ep.lambda2 * tau).exp();
    let (a12, a21, rho2) = (p.a12, p.a21, eq.rho2);

    let f20 = CVec4::new(c(0.0), -2.0 * a12 * v2 * v4 * e1, rho2 * v2 * v2 * e1 * e1, -2.0 * a21 * v2 * v4 * e1);
    let f4_11 = if readings.literal_f4_11 {
        -a21 * v2 * v4b * e1 + v4 * v2b * e2
    } else {
        -a21 * (v2 * v4b * e1 + v4 * v2b * e2)
    };
    let f11 = CVec4::new(c(0.0), -a12 * (v2 * v4b * e2 + v2b * v4 * e1), rho2 * v2 * v2b, f4_11);
    let f4_02_coeff = if readings.literal_f4_02 { a12 } else { a21 };
    let f02 = CVec4::new(
        c(0.0),
        -2.0 * a12 * v2b * v4b * e2,
        rho2 * v2b * v2b * e2 * e2,
        -2.0 * f4_02_coeff * v2b * v4b * e2,
    );
    QuadraticTerms { f20, f11, f02, g20: ep.w.dot(&f20), g11: ep.w.dot(&f11), g02: ep.w.dot(&f02) }
}

fn condition_1norm(m: &Matrix4<Complex64>, inv: &Matrix4<Complex64>) -> f64 {
    let norm1 = |x: &Matrix4<Complex64>| (0..4).map(|j| x.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    norm1(m) * norm1(inv)
}

fn solve_checked(m: Matrix4<Complex64>, rhs: &CVec4, context: &'static str) -> Result<CVec4> {
    let inv = m.try_inverse().ok_or(Error::Singular { condition: f64::INFINITY, context })?;
    let condition = condition_1norm(&m, &inv);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition, context });
    }
    let lu = m.lu();
    lu.solve(rhs).ok_or(Error::Singular { condition, context })
}

/// `E1 = -(A + B)^{-1} F11` and `E2 = -(A + e^{-2 lambda1 tau} B - 2 lambda1 I)^{-1} F20`,
/// returned as `(E1, E2)`.
pub fn solve_e_vectors(
    p: &ModelParams,
    eq: &Equilibrium,
    ep: &Eigenpair,
    tau: f64,
    f20: &CVec4,
    f11: &CVec4,
) -> Result<(CVec4, CVec4)> {
    let lp = linearize(p, eq);
    let m1: Matrix4<Complex64> = (lp.a + lp.b).map(c);
    let m2 = lp.delayed_matrix(2.0 * ep.lambda1, tau) - Matrix4::identity() * (2.0 * ep.lambda1);
    let e1 = -solve_checked(m1, f11, "E1 = -(A + B)^-1 F11")?;
    let e2 = -solve_checked(m2, f20, "E2 = -(A + e^{-2 l tau} B - 2 l I)^-1 F20")?;
    Ok((e1, e2))
}

/// The pieces needed to evaluate `w20(theta)` and `w11(theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldTerms {
    pub g20: Complex64,
    pub g11: Complex64,
    pub g02: Complex64,
    pub e1: CVec4,
    pub e2: CVec4,
    pub lambda1: Complex64,
    pub v: CVec4,
    pub readings: FormulaReadings,
}

impl ManifoldTerms {
    /// `w20(theta) = -g20/l v e^{l theta} - conj(g02)/(3 l) conj(v) e^{-l theta} + E2 e^{2 l theta}`.
    pub fn w20(&self, theta: f64) -> CVec4 {
        let l = self.lambda1;
        let ep = (l * theta).exp();
        let em = (-l * theta).exp();
        let vb = self.v.map(|z| z.conj());
        let mut out = self.v * (-self.g20 / l * ep) - vb * (self.g02.conj() / (3.0 * l) * em) + self.e2 * (2.0 * l * theta).exp();
        if self.readings.literal_w4_20 {
            out[3] = -self.g20 / l * self.v[3] * ep - self.g20.conj() / (3.0 * l) * vb[3] * em + self.e2[3] * (2.0 * l * theta).exp();
        }
        out
    }

    /// `w11(theta) = g11/l v e^{l theta} - conj(g11)/l conj(v) e^{-l theta} + E1`.
    pub fn w11(&self, theta: f64) -> CVec4 {
        let l = self.lambda1;
        let vb = self.v.map(|z| z.conj());
        self.v * (self.g11 / l * (l * theta).exp()) - vb * (self.g11.conj() / l * (-l * theta).exp()) + self.e1
    }

    pub fn w02(&self, theta: f64) -> CVec4 {
        self.w20(theta).map(|z| z.conj())
    }
}

/// Cubic coefficient `g21`.
pub fn g_cubic(p: &ModelParams, eq: &Equilibrium, ep: &Eigenpair, tau: f64, mt: &ManifoldTerms) -> Complex64 {
    let (v2, v4) = (ep.v[1], ep.v[3]);
    let (v2b, v4b) = (v2.conj(), v4.conj());
    let e1 = (-ep.lambda1 * tau).exp();
    let e2 = (-ep.lambda2 * tau).exp();

    let w20m = mt.w20(-tau);
    let w20z = mt.w20(0.0);
    let w11m = mt.w11(-tau);
    let w11z = mt.w11(0.0);
    let w11_lagged = if mt.readings.literal_cubic_lags { w11m } else { w11z };

    let f2 = -p.a12 * (2.0 * v2 * w11m[3] + v2b * w20m[3] + v4b * w20z[1] * e2 + 2.0 * v4 * w11_lagged[1] * e1);
    let f3 = eq.rho2 * (2.0 * v2 * w11m[1] * e1 + v2b * w20m[1] * e2) + eq.rho3 * v2 * v2 * v2b * e1;
    let f4 = -p.a21 * (2.0 * v2 * w11_lagged[3] * e1 + v2b * w20z[3] * e2 + v4b * w20m[1] + 2.0 * v4 * w11m[1]);
    ep.w[1] * f2 + ep.w[2] * f3 + ep.w[3] * f4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Supercritical,
    Subcritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitStability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodTrend {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Supercritical => "supercritical",
            Direction::Subcritical => "subcritical",
        }
    }
}

impl OrbitStability {
    pub fn as_str(self) -> &'static str {
        match self {
            OrbitStability::Stable => "orbitally stable",
            OrbitStability::Unstable => "orbitally unstable",
        }
    }
}

impl PeriodTrend {
    pub fn as_str(self) -> &'static str {
        match self {
            PeriodTrend::Increasing => "period increasing",
            PeriodTrend::Decreasing => "period decreasing",
        }
    }
}

/// `C1(0)` and the derived direction/stability/period coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfQuantities {
    pub c1: Complex64,
    pub mu2: f64,
    pub beta2: f64,
    pub t2: f64,
}

impl HopfQuantities {
    /// `mu2 > 0`: orbits exist for `tau > tau_c`.
    pub fn direction(&self) -> Direction {
        if self.mu2 > 0.0 {
            Direction::Supercritical
        } else {
            Direction::Subcritical
        }
    }

    pub fn orbit_stability(&self) -> OrbitStability {
        if self.beta2 < 0.0 {
            OrbitStability::Stable
        } else {
            OrbitStability::Unstable
        }
    }

    pub fn period_trend(&self) -> PeriodTrend {
        if self.t2 > 0.0 {
            PeriodTrend::Increasing
        } else {
            PeriodTrend::Decreasing
        }
    }
}

/// ```text
/// C1(0) = i/(2 omega) (g20 g11 - 2|g11|^2 - |g02|^2/3) + g21/2
/// mu2   = -Re C1(0) / Re lambda'(tau_c)
/// beta2 = 2 Re C1(0)
/// T2    = -(Im C1(0) + mu2 Im lambda'(tau_c)) / omega
/// ```
pub fn hopf_quantities(
    g20: Complex64,
    g11: Complex64,
    g02: Complex64,
    g21: Complex64,
    dlambda_dtau: Complex64,
    omega: f64,
) -> Result<HopfQuantities> {
    let c1 = I / (2.0 * omega) * (g20 * g11 - 2.0 * g11.norm_sqr() - g02.norm_sqr() / 3.0) + g21 / 2.0;
    if c1.re.abs() < DEGENERATE_C1 {
        return Err(Error::DegenerateHopf(format!("Re C1(0) = {:e}", c1.re)));
    }
    if dlambda_dtau.re == 0.0 {
        return Err(Error::DegenerateHopf("Re(dlambda/dtau) = 0".into()));
    }
    let mu2 = -c1.re / dlambda_dtau.re;
    Ok(HopfQuantities { c1, mu2, beta2: 2.0 * c1.re, t2: -(c1.im + mu2 * dlambda_dtau.im) / omega })
}

/// Complete normal-form data at one Hopf point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalForm {
    pub g20: Complex64,
    pub g11: Complex64,
    pub g02: Complex64,
    pub g21: Complex64,
    pub e1: CVec4,
    pub e2: CVec4,
    pub c1: Complex64,
    pub mu2: f64,
    pub beta2: f64,
    pub t2: f64,
    pub readings: FormulaReadings,
}

impl NormalForm {
    pub fn quantities(&self) -> HopfQuantities {
        HopfQuantities { c1: self.c1, mu2: self.mu2, beta2: self.beta2, t2: self.t2 }
    }

    pub fn manifold(&self, ep: &Eigenpair) -> ManifoldTerms {
        ManifoldTerms {
            g20: self.g20,
            g11: self.g11,
            g02: self.g02,
            e1: self.e1,
            e2: self.e2,
            lambda1: ep.lambda1,
            v: ep.v,
            readings: self.readings,
        }
    }
}

/// Runs the whole reduction for a given (possibly negative, for the
/// conjugate branch) frequency.
pub fn normal_form_at(
    p: &ModelParams,
    eq: &Equilibrium,
    omega: f64,
    tau: f64,
    dlambda_dtau: Complex64,
    readings: FormulaReadings,
) -> Result<(Eigenpair, NormalForm)> {
    let ep = eigenpair(p, eq, omega, tau)?;
    let quad = g_quadratic(p, eq, &ep, tau, readings);
    let (e1, e2) = solve_e_vectors(p, eq, &ep, tau, &quad.f20, &quad.f11)?;
    let mt = ManifoldTerms { g20: quad.g20, g11: quad.g11, g02: quad.g02, e1, e2, lambda1: ep.lambda1, v: ep.v, readings };
    let g21 = g_cubic(p, eq, &ep, tau, &mt);
    let hq = hopf_quantities(quad.g20, quad.g11, quad.g02, g21, dlambda_dtau, omega)?;
    Ok((
        ep,
        NormalForm {
            g20: quad.g20,
            g11: quad.g11,
            g02: quad.g02,
            g21,
            e1,
            e2,
            c1: hq.c1,
            mu2: hq.mu2,
            beta2: hq.beta2,
            t2: hq.t2,
            readings,
        },
    ))
}

pub fn normal_form(p: &ModelParams, eq: &Equilibrium, hp: &HopfPoint, readings: FormulaReadings) -> Result<(Eigenpair, NormalForm)> {
    normal_form_at(p, eq, hp.omega_c, hp.tau_c, hp.dlambda_dtau, readings)
}
