//! Linear stability of the equilibrium and detection of delay-induced
//! Hopf points.
//!
//! Linearising about an equilibrium gives `X'(t) = A X(t) + B X(t - tau)`.
//! Its characteristic function factors as
//! `(lambda + b1) * Delta(lambda, tau)` with
//!
//! ```text
//! Delta(lambda, tau) = lambda^3 + b lambda^2 + c lambda + d + (g lambda + h) e^{-2 lambda tau}
//! ```
//!
//! The doubled exponent comes from the two delayed couplings (`y2 -> y1` and
//! `y1 -> x2`) entering the determinant as a product.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Default number of delay branches reported per frequency.
pub const DEFAULT_K_MAX: usize = 8;
/// Admissible deviation of `|G(i omega)|` from one.
pub const MODULUS_TOL: f64 = 1e-8;
/// Minimum `|dF/dz|` for a frequency root to count as simple.
pub const SIMPLE_ROOT_TOL: f64 = 1e-10;
/// Half-width of the "at bifurcation" band around a critical delay.
pub const BIFURCATION_BAND: f64 = 1e-9;

/// Instantaneous (`a`) and delayed (`b`) Jacobians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPair {
    pub a: Matrix4<f64>,
    pub b: Matrix4<f64>,
}

impl LinearPair {
    /// `A + B e^{-lambda tau}` as a complex matrix.
    pub fn delayed_matrix(&self, lambda: Complex64, tau: f64) -> Matrix4<Complex64> {
        let e = (-lambda * tau).exp();
        Matrix4::from_fn(|i, j| Complex64::new(self.a[(i, j)], 0.0) + e * self.b[(i, j)])
    }

    /// `det(lambda I - A - B e^{-lambda tau})`.
    pub fn char_determinant(&self, lambda: Complex64, tau: f64) -> Complex64 {
        let m = Matrix4::<Complex64>::identity() * lambda - self.delayed_matrix(lambda, tau);
        m.determinant()
    }
}

pub fn linearize(p: &ModelParams, eq: &Equilibrium) -> LinearPair {
    #[rustfmt::skip]
    let a = Matrix4::new(
        -p.b1, 0.0, 0.0, 0.0,
        1.0, -(p.a1 + p.a12 * eq.y20), 0.0, 0.0,
        0.0, 0.0, -p.b2, 0.0,
        0.0, 0.0, 1.0, -(p.a2 + p.a21 * eq.y10),
    );
    #[rustfmt::skip]
    let b = Matrix4::new(
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, -p.a12 * eq.y10,
        0.0, eq.rho1, 0.0, 0.0,
        0.0, -p.a21 * eq.y20, 0.0, 0.0,
    );
    LinearPair { a, b }
}

/// Coefficients of `Delta` and of the frequency cubic
/// `F(z) = z^3 + l1 z^2 + l2 z + l3`, `z = omega^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharCoeffs {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub g: f64,
    pub h: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl CharCoeffs {
    pub fn from_bcdgh(b: f64, c: f64, d: f64, g: f64, h: f64) -> Self {
        Self { b, c, d, g, h, l1: b * b - 2.0 * c, l2: c * c - 2.0 * b * d - g * g, l3: d * d - h * h }
    }

    /// `lambda^3 + b lambda^2 + c lambda + d`.
    pub fn cubic_part(&self, lambda: Complex64) -> Complex64 {
        ((lambda + self.b) * lambda + self.c) * lambda + self.d
    }

    /// `g lambda + h`.
    pub fn delayed_part(&self, lambda: Complex64) -> Complex64 {
        lambda * self.g + self.h
    }

    pub fn delta(&self, lambda: Complex64, tau: f64) -> Complex64 {
        self.cubic_part(lambda) + self.delayed_part(lambda) * (-2.0 * lambda * tau).exp()
    }

    /// `G(lambda) = -(g lambda + h) / (lambda^3 + b lambda^2 + c lambda + d)`;
    /// roots of `Delta` satisfy `G(lambda) = e^{2 lambda tau}`.
    pub fn g_ratio(&self, lambda: Complex64) -> Complex64 {
        -self.delayed_part(lambda) / self.cubic_part(lambda)
    }

    pub fn frequency_poly(&self, z: f64) -> f64 {
        ((z + self.l1) * z + self.l2) * z + self.l3
    }

    pub fn frequency_poly_slope(&self, z: f64) -> f64 {
        (3.0 * z + 2.0 * self.l1) * z + self.l2
    }
}

pub fn char_coeffs(p: &ModelParams, eq: &Equilibrium) -> CharCoeffs {
    let s1 = p.a1 + p.a12 * eq.y20;
    let s2 = p.a2 + p.a21 * eq.y10;
    let b = s1 + s2 + p.b2;
    let c = p.b2 * (s1 + s2) + s1 * s2;
    let d = p.b2 * s1 * s2;
    let g = -p.a12 * eq.y10 * p.a21 * eq.y20;
    let h = -p.a12 * eq.y10 * (p.b2 * p.a21 * eq.y20 - eq.rho1);
    CharCoeffs::from_bcdgh(b, c, d, g, h)
}

/// Hurwitz test for the undelayed cubic
/// `lambda^3 + b lambda^2 + (c + g) lambda + (d + h)`.
///
/// The `d + h > 0` condition completes the cubic criterion; the remaining
/// factor `lambda + b1` is always stable.
pub fn routh_hurwitz_stable(cc: &CharCoeffs) -> bool {
    cc.b > 0.0 && (cc.c + cc.g) * cc.b > cc.d + cc.h && cc.d + cc.h > 0.0
}

fn polish_cubic(a: f64, b: f64, c: f64, mut z: f64) -> f64 {
    let f = |z: f64| ((z + a) * z + b) * z + c;
    for _ in 0..8 {
        let fz = f(z);
        let df = (3.0 * z + 2.0 * a) * z + b;
        if df == 0.0 || fz == 0.0 {
            break;
        }
        let next = z - fz / df;
        if f(next).abs() >= fz.abs() {
            break;
        }
        z = next;
    }
    z
}

/// Real roots of the monic cubic `z^3 + a z^2 + b z + c`, ascending.
///
/// Trigonometric form for three real roots, Cardano otherwise, followed by a
/// Newton polish on the undepressed polynomial.
pub fn cubic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if p == 0.0 && q == 0.0 {
        vec![-shift]
    } else if disc > 0.0 {
        let s = disc.sqrt();
        // pick the cancellation-free branch
        let u = (-q / 2.0 + if q <= 0.0 { s } else { -s }).cbrt();
        let t = if u != 0.0 { u - p / (3.0 * u) } else { 0.0 };
        vec![t - shift]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3).map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift).collect()
    };
    for z in roots.iter_mut() {
        *z = polish_cubic(a, b, c, *z);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// All three roots of the monic cubic, real ones first.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let real = cubic_real_roots(a, b, c);
    if real.len() == 3 {
        return real.into_iter().map(|r| Complex64::new(r, 0.0)).collect();
    }
    let r = real[0];
    // deflate: z^2 + (a + r) z + (b + (a + r) r)
    let p = a + r;
    let q = b + p * r;
    let disc = Complex64::new(p * p / 4.0 - q, 0.0).sqrt();
    vec![Complex64::new(r, 0.0), -p / 2.0 + disc, -p / 2.0 - disc]
}

/// Positive `omega` with `i omega` a root of `Delta` for some delay:
/// square roots of the positive real roots of `F`, ascending.
pub fn omega_candidates(cc: &CharCoeffs) -> Vec<f64> {
    cubic_real_roots(cc.l1, cc.l2, cc.l3).into_iter().filter(|&z| z > 0.0).map(f64::sqrt).collect()
}

pub fn is_simple_frequency(cc: &CharCoeffs, omega: f64) -> bool {
    cc.frequency_poly_slope(omega * omega).abs() > SIMPLE_ROOT_TOL
}

fn checked_phase(omega: f64, cc: &CharCoeffs) -> Result<f64> {
    let g = cc.g_ratio(Complex64::new(0.0, omega));
    let modulus = g.norm();
    if !((modulus - 1.0).abs() <= MODULUS_TOL) {
        return Err(Error::NotAFrequencyRoot { omega, modulus });
    }
    Ok(g.arg().rem_euclid(2.0 * PI))
}

/// `tau_k = (arg G(i omega) + 2 k pi) / (2 omega)` for `k = 0..=k_max`, with
/// the argument taken in `[0, 2 pi)`; non-positive values are dropped.
pub fn critical_delays(omega: f64, cc: &CharCoeffs, k_max: usize) -> Result<Vec<f64>> {
    let phase = checked_phase(omega, cc)?;
    Ok((0..=k_max)
        .map(|k| (phase + 2.0 * PI * k as f64) / (2.0 * omega))
        .filter(|&t| t > 0.0)
        .collect())
}

/// One `(omega, k, tau)` crossing of the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayCandidate {
    pub omega: f64,
    pub k: usize,
    pub tau: f64,
    pub simple: bool,
}

/// Every branch `k <= k_max` of every frequency, sorted by delay.
pub fn delay_candidates(cc: &CharCoeffs, k_max: usize) -> Result<Vec<DelayCandidate>> {
    let mut out = Vec::new();
    for omega in omega_candidates(cc) {
        let phase = checked_phase(omega, cc)?;
        let simple = is_simple_frequency(cc, omega);
        for k in 0..=k_max {
            let tau = (phase + 2.0 * PI * k as f64) / (2.0 * omega);
            if tau > 0.0 {
                out.push(DelayCandidate { omega, k, tau, simple });
            }
        }
    }
    out.sort_by(|x, y| x.tau.partial_cmp(&y.tau).unwrap());
    Ok(out)
}

/// `d lambda / d tau` at the root `lambda = i omega`, by implicit
/// differentiation of `Delta(lambda, tau) = 0`:
///
/// ```text
/// d lambda/d tau = 2 lambda (g lambda + h) e^{-2 lambda tau}
///                / (3 lambda^2 + 2 b lambda + c + (g - 2 tau (g lambda + h)) e^{-2 lambda tau})
/// ```
pub fn transversality(omega: f64, tau: f64, cc: &CharCoeffs) -> Result<Complex64> {
    let lambda = Complex64::new(0.0, omega);
    let e = (-2.0 * lambda * tau).exp();
    let q = cc.delayed_part(lambda);
    let num = 2.0 * lambda * q * e;
    let den = (3.0 * lambda + 2.0 * cc.b) * lambda + cc.c + (cc.g - 2.0 * tau * q) * e;
    if den.norm() < 1e-12 {
        return Err(Error::DegenerateHopf(format!("double characteristic root at omega = {omega}, tau = {tau}")));
    }
    Ok(num / den)
}

/// The closed `L1`/`L2` form of the transversality derivative as it is
/// commonly printed for this model. Kept as a diagnostic: it does not agree
/// with [`transversality`] in general.
pub fn transversality_closed_form(omega: f64, tau: f64, cc: &CharCoeffs) -> (Complex64, f64, f64) {
    let (s, c) = (2.0 * omega * tau).sin_cos();
    let w2 = omega * omega;
    let l1 = (-cc.c - 3.0 * w2) * c - 2.0 * cc.b * omega * s - 2.0 * cc.g * tau + cc.h;
    let l2 = (-cc.c - 3.0 * w2) * s + 2.0 * cc.b * omega * c - 2.0 * cc.h * omega * tau;
    let den = l1 * l1 + l2 * l2;
    let re = 2.0 * (omega * cc.g * l2 + w2 * cc.h * l1) / den;
    let im = 2.0 * (omega * cc.g * l1 + w2 * cc.h * l2) / den;
    (Complex64::new(re, im), l1, l2)
}

/// The first delay at which a simple root pair reaches the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfPoint {
    pub omega_c: f64,
    pub tau_c: f64,
    /// Branch index of `tau_c` on its frequency.
    pub k: usize,
    pub dlambda_dtau: Complex64,
    /// Closed-form transversality and its auxiliaries, for cross-checking.
    pub dlambda_dtau_closed_form: Complex64,
    pub aux_l1: f64,
    pub aux_l2: f64,
}

impl HopfPoint {
    /// `|Delta(i omega_c, tau_c)|`.
    pub fn residual(&self, cc: &CharCoeffs) -> f64 {
        cc.delta(Complex64::new(0.0, self.omega_c), self.tau_c).norm()
    }
}

/// Smallest positive critical delay over all simple frequencies, or `None`
/// when the frequency cubic has no positive root.
pub fn hopf_point(cc: &CharCoeffs, k_max: usize) -> Result<Option<HopfPoint>> {
    let Some(first) = delay_candidates(cc, k_max)?.into_iter().find(|c| c.simple) else {
        return Ok(None);
    };
    let dl = transversality(first.omega, first.tau, cc)?;
    if dl.re.abs() <= 1e-12 {
        return Err(Error::DegenerateHopf(format!("Re(dlambda/dtau) = {:e} at tau = {}", dl.re, first.tau)));
    }
    let (closed, aux_l1, aux_l2) = transversality_closed_form(first.omega, first.tau, cc);
    Ok(Some(HopfPoint {
        omega_c: first.omega,
        tau_c: first.tau,
        k: first.k,
        dlambda_dtau: dl,
        dlambda_dtau_closed_form: closed,
        aux_l1,
        aux_l2,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    AtBifurcation,
}

impl StabilityVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityVerdict::Stable => "stable",
            StabilityVerdict::Unstable => "unstable",
            StabilityVerdict::AtBifurcation => "at-bifurcation",
        }
    }
}

/// Number of characteristic roots in the open right half-plane at `tau = 0`.
pub fn undelayed_unstable_count(cc: &CharCoeffs) -> usize {
    cubic_roots(cc.b, cc.c + cc.g, cc.d + cc.h).iter().filter(|r| r.re > 0.0).count()
}

/// Stability of the equilibrium at delay `tau`.
///
/// Starts from the undelayed root count and adds or removes a pair at every
/// crossing delay below `tau`, in the direction given by the sign of
/// `Re(d lambda / d tau)` there.
pub fn classify_stability(p: &ModelParams, eq: &Equilibrium, tau: f64) -> Result<StabilityVerdict> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("delay must be a finite nonnegative number, got {tau}")));
    }
    let cc = char_coeffs(p, eq);
    let mut count = if routh_hurwitz_stable(&cc) { 0 } else { undelayed_unstable_count(&cc).max(1) } as i64;
    for omega in omega_candidates(&cc) {
        let phase = checked_phase(omega, &cc)?;
        let mut k = 0usize;
        loop {
            let tk = (phase + 2.0 * PI * k as f64) / (2.0 * omega);
            if tk > tau + BIFURCATION_BAND {
                break;
            }
            if tk > 0.0 {
                if (tk - tau).abs() < BIFURCATION_BAND {
                    return Ok(StabilityVerdict::AtBifurcation);
                }
                let dl = transversality(omega, tk, &cc)?;
                count += if dl.re > 0.0 { 2 } else { -2 };
            }
            k += 1;
        }
    }
    Ok(if count > 0 { StabilityVerdict::Unstable } else { StabilityVerdict::Stable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::equilibria;
    use crate::model::{rhs, StateVec};

    fn case(n: u32) -> (ModelParams, Equilibrium) {
        let p = ModelParams::reference(n);
        let eq = equilibria(&p).unwrap()[0];
        (p, eq)
    }

    #[test]
    fn linearization_entries() {
        let (p, eq) = case(2);
        let lp = linearize(&p, &eq);
        assert!((lp.a[(1, 1)] + 1.72939250).abs() < 1e-6);
        let mut q = p;
        q.a12 = 0.0;
        let lp0 = linearize(&q, &eq);
        assert!(lp0.b.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linearization_matches_finite_difference_jacobian() {
        let (p, eq) = case(4);
        let lp = linearize(&p, &eq);
        let x0 = eq.state().to_array();
        let h = 1e-6;
        for j in 0..4 {
            let mut up = x0;
            let mut dn = x0;
            up[j] += h;
            dn[j] -= h;
            let s0 = StateVec::from_array(x0);
            let da = rhs(&StateVec::from_array(up), &s0, &p) - rhs(&StateVec::from_array(dn), &s0, &p);
            let db = rhs(&s0, &StateVec::from_array(up), &p) - rhs(&s0, &StateVec::from_array(dn), &p);
            for i in 0..4 {
                assert!((da[i] / (2.0 * h) - lp.a[(i, j)]).abs() < 1e-6, "A({i},{j})");
                assert!((db[i] / (2.0 * h) - lp.b[(i, j)]).abs() < 1e-6, "B({i},{j})");
            }
        }
    }

    #[test]
    fn determinant_factors_through_delta() {
        let (p, eq) = case(2);
        let lp = linearize(&p, &eq);
        let cc = char_coeffs(&p, &eq);
        for &(re, im, tau) in &[(0.1, 0.3, 1.0), (-0.2, 1.1, 7.5), (0.01, -0.05, 90.0), (0.4, 0.0, 0.0)] {
            let l = Complex64::new(re, im);
            let full = lp.char_determinant(l, tau);
            let factored = (l + p.b1) * cc.delta(l, tau);
            assert!((full - factored).norm() < 1e-12 * factored.norm().max(1.0), "{full} vs {factored}");
        }
        for tau in [0.0, 3.3, 41.0] {
            assert!(lp.char_determinant(Complex64::new(-p.b1, 0.0), tau).norm() < 1e-10);
        }
    }

    #[test]
    fn coupling_off_removes_delay_terms() {
        let (mut p, eq) = case(2);
        p.a12 = 0.0;
        let cc = char_coeffs(&p, &eq);
        assert_eq!(cc.g, 0.0);
        assert_eq!(cc.h, 0.0);
        assert!(omega_candidates(&cc).is_empty());
    }

    #[test]
    fn cubic_identities_and_sign() {
        let (p, eq) = case(2);
        let cc = char_coeffs(&p, &eq);
        assert!((cc.l1 - (cc.b * cc.b - 2.0 * cc.c)).abs() < 1e-15);
        assert!(cc.b > 0.0 && cc.l1 > 0.0 && cc.l2 > 0.0);
        assert!(cc.l3 < 0.0);
    }

    #[test]
    fn routh_hurwitz_examples() {
        let mk = |b, cg, dh| CharCoeffs::from_bcdgh(b, cg, dh, 0.0, 0.0);
        assert!(routh_hurwitz_stable(&mk(1.0, 2.0, 1.0)));
        assert!(!routh_hurwitz_stable(&mk(1.0, 1.0, 2.0)));
        let (p, eq) = case(2);
        let cc = char_coeffs(&p, &eq);
        assert!(routh_hurwitz_stable(&cc));
        // all eigenvalues of A + B in the left half-plane
        let lp = linearize(&p, &eq);
        let eig = (lp.a + lp.b).complex_eigenvalues();
        assert!(eig.iter().all(|l| l.re < 0.0));
    }

    #[test]
    fn cubic_solver_planted_roots() {
        // (z + 1)(z - 0.25)(z - 4)
        let (r1, r2, r3) = (-1.0, 0.25, 4.0);
        let a = -(r1 + r2 + r3);
        let b = r1 * r2 + r1 * r3 + r2 * r3;
        let c = -r1 * r2 * r3;
        let roots = cubic_real_roots(a, b, c);
        assert_eq!(roots.len(), 3);
        for (got, want) in roots.iter().zip([r1, r2, r3]) {
            assert!((got - want).abs() < 1e-13);
        }
        let cc = CharCoeffs { l1: a, l2: b, l3: c, ..CharCoeffs::from_bcdgh(1.0, 0.0, 0.0, 0.0, 0.0) };
        let om = omega_candidates(&cc);
        assert_eq!(om.len(), 2);
        assert!((om[0] - 0.5).abs() < 1e-13 && (om[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn cubic_solver_single_real_root() {
        // (z - 2)(z^2 + z + 1)
        let roots = cubic_roots(-1.0, -1.0, -2.0);
        assert!((roots[0].re - 2.0).abs() < 1e-14 && roots[0].im == 0.0);
        for r in &roots[1..] {
            assert!((r.re + 0.5).abs() < 1e-14);
            assert!((r.im.abs() - 3f64.sqrt() / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn no_frequency_when_l3_nonnegative() {
        let cc = CharCoeffs { l1: 1.0, l2: 0.5, l3: 0.0, ..CharCoeffs::from_bcdgh(1.0, 0.0, 0.0, 0.0, 0.0) };
        assert!(omega_candidates(&cc).is_empty());
        let cc = CharCoeffs { l3: 0.2, ..cc };
        assert!(omega_candidates(&cc).is_empty());
    }

    #[test]
    fn published_frequency_and_delay() {
        let (p, eq) = case(2);
        let cc = char_coeffs(&p, &eq);
        let om = omega_candidates(&cc);
        assert_eq!(om.len(), 1);
        assert!((om[0] - 0.01173958).abs() < 1e-8);
        let taus = critical_delays(om[0], &cc, DEFAULT_K_MAX).unwrap();
        assert_eq!(taus.len(), DEFAULT_K_MAX + 1);
        assert!(((taus[0] - 90.21567180) / 90.21567180).abs() < 1e-3);
        for &t in &taus {
            assert!(cc.delta(Complex64::new(0.0, om[0]), t).norm() < 1e-9);
        }
    }

    #[test]
    fn crossing_equations_vanish() {
        for n in [2, 4, 163, 164] {
            let (p, eq) = case(n);
            let cc = char_coeffs(&p, &eq);
            for c in delay_candidates(&cc, 4).unwrap() {
                let (w, t) = (c.omega, c.tau);
                let (s, co) = (2.0 * w * t).sin_cos();
                let e1 = -cc.b * w * w + cc.d + cc.h * co + w * cc.g * s;
                let e2 = -w * w * w + cc.c * w + w * cc.g * co - cc.h * s;
                assert!(e1.abs() < 1e-8 && e2.abs() < 1e-8, "n={n}: {e1} {e2}");
                let modulus = cc.g_ratio(Complex64::new(0.0, w)).norm();
                assert!((modulus - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn critical_delays_reject_non_root() {
        let (p, eq) = case(2);
        let cc = char_coeffs(&p, &eq);
        assert!(matches!(critical_delays(0.5, &cc, 3), Err(Error::NotAFrequencyRoot { .. })));
    }

    #[test]
    fn delayed_reference_branches() {
        let (p, eq) = case(164);
        let cc = char_coeffs(&p, &eq);
        let hp = hopf_point(&cc, DEFAULT_K_MAX).unwrap().unwrap();
        assert!(((hp.tau_c - 7.40096599) / 7.40096599).abs() < 1e-6);
        assert_eq!(hp.k, 0);
        let (p, eq) = case(163);
        let hp = hopf_point(&char_coeffs(&p, &eq), DEFAULT_K_MAX).unwrap().unwrap();
        assert!(((hp.tau_c - 0.00213625) / 0.00213625).abs() < 1e-3);
    }

    #[test]
    fn transversality_nonzero() {
        for n in [2, 4, 163, 164] {
            let (p, eq) = case(n);
            let hp = hopf_point(&char_coeffs(&p, &eq), DEFAULT_K_MAX).unwrap().unwrap();
            assert!(hp.dlambda_dtau.re.abs() > 1e-12);
        }
    }

    #[test]
    fn classification() {
        let (p, eq) = case(2);
        let cc = char_coeffs(&p, &eq);
        let hp = hopf_point(&cc, DEFAULT_K_MAX).unwrap().unwrap();
        assert_eq!(classify_stability(&p, &eq, 0.0).unwrap(), StabilityVerdict::Stable);
        assert_eq!(classify_stability(&p, &eq, 0.5 * hp.tau_c).unwrap(), StabilityVerdict::Stable);
        assert_eq!(classify_stability(&p, &eq, hp.tau_c).unwrap(), StabilityVerdict::AtBifurcation);
        assert!(hp.dlambda_dtau.re > 0.0);
        assert_eq!(classify_stability(&p, &eq, hp.tau_c + 1.0).unwrap(), StabilityVerdict::Unstable);
        assert!(classify_stability(&p, &eq, -1.0).is_err());
        // undelayed instability persists below the first crossing
        let (p, eq) = case(164);
        assert!(!routh_hurwitz_stable(&char_coeffs(&p, &eq)));
        assert_eq!(classify_stability(&p, &eq, 1.0).unwrap(), StabilityVerdict::Unstable);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_params() -> impl Strategy<Value = ModelParams> {
            (0.05f64..0.5, 0.05f64..0.5, 0.0f64..0.1, 0.0f64..0.1, 0.1f64..1.0, 0.005f64..0.2, 0.5f64..8.0, 1u32..30)
                .prop_map(|(a1, a2, a12, a21, b1, b2, a, n)| ModelParams { a1, a2, a12, a21, b1, b2, a, n })
        }

        proptest! {
            #[test]
            fn coefficient_identities(p in random_params()) {
                for eq in equilibria(&p).unwrap() {
                    let cc = char_coeffs(&p, &eq);
                    prop_assert!(cc.b > 0.0);
                    prop_assert!((cc.l1 - (cc.b * cc.b - 2.0 * cc.c)).abs() <= 1e-12 * cc.l1.abs().max(1.0));
                    prop_assert!((cc.l3 - (cc.d * cc.d - cc.h * cc.h)).abs() <= 1e-12 * (cc.d * cc.d).max(1e-300));
                }
            }

            #[test]
            fn every_candidate_is_a_crossing(p in random_params()) {
                for eq in equilibria(&p).unwrap() {
                    let cc = char_coeffs(&p, &eq);
                    for omega in omega_candidates(&cc) {
                        let l = Complex64::new(0.0, omega);
                        prop_assert!((cc.g_ratio(l).norm() - 1.0).abs() < 1e-8);
                    }
                    let cands = delay_candidates(&cc, 3).unwrap();
                    for c in &cands {
                        let l = Complex64::new(0.0, c.omega);
                        let scale = cc.cubic_part(l).norm().max(cc.delayed_part(l).norm());
                        prop_assert!(cc.delta(l, c.tau).norm() < 1e-9 * scale.max(1.0));
                    }
                    prop_assert!(cands.windows(2).all(|w| w[0].tau <= w[1].tau));
                    if let Some(hp) = hopf_point(&cc, 3).unwrap() {
                        prop_assert!(hp.dlambda_dtau.re.abs() > 1e-12);
                        prop_assert_eq!(hp.tau_c, cands.iter().find(|c| c.simple).unwrap().tau);
                    }
                }
            }
        }
    }
}
