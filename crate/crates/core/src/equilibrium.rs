//! Positive equilibria.
//!
//! Nullifying the right-hand side gives `x1 = 1/b1`, `x2 = f(y1)/b2`,
//! `y2 = f(y1) / (b2 (a2 + a21 y1))`, and eliminating everything but `y1`
//! leaves a sparse polynomial of degree `n + 2`:
//!
//! ```text
//! k(x) = a1 b1 b2 a21 x^(n+2) + (b1 a12 - b2 a21 + a1 b1 a2 b2) x^(n+1) - a2 b2 x^n
//!      + a1 b1 b2 a a21 x^2 + (b1 a a2 a1 b2 - b2 a a21) x - a a2 b2
//! ```
//!
//! `k(0) < 0` and `k(+inf) = +inf`, so at least one positive root exists.

use crate::error::{Error, Result};
use crate::model::{hill_derivs, hill_eval, ModelParams, StateVec};

/// Scan density of the sign-change search.
const SAMPLES_PER_DECADE: usize = 2000;
const BISECTION_BUDGET: usize = 400;
/// Root residual bound, relative to the largest coefficient magnitude.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-12;
/// Looser bound accepted by [`build_equilibrium`] for externally supplied roots.
pub const EQUILIBRIUM_RESIDUAL_TOL: f64 = 1e-10;

/// A positive steady state with Hill derivatives at `y10` attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub x10: f64,
    pub y10: f64,
    pub x20: f64,
    pub y20: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
}

impl Equilibrium {
    pub fn state(&self) -> StateVec {
        StateVec::new(self.x10, self.y10, self.x20, self.y20)
    }
}

/// Coefficients of `k`, ascending by degree (`len = n + 3`).
pub fn equilibrium_poly_coeffs(p: &ModelParams) -> Vec<f64> {
    let n = p.n as usize;
    let mut c = vec![0.0; n + 3];
    c[n + 2] += p.a1 * p.b1 * p.b2 * p.a21;
    c[n + 1] += p.b1 * p.a12 - p.b2 * p.a21 + p.a1 * p.b1 * p.a2 * p.b2;
    c[n] -= p.a2 * p.b2;
    c[2] += p.a1 * p.b1 * p.b2 * p.a * p.a21;
    c[1] += p.b1 * p.a * p.a2 * p.a1 * p.b2 - p.b2 * p.a * p.a21;
    c[0] -= p.a * p.a2 * p.b2;
    c
}

fn degree(coeffs: &[f64]) -> usize {
    coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
}

/// Evaluates the polynomial with Neumaier-compensated summation.
///
/// For `x <= 1` this is `k(x)`; for `x > 1` it is `k(x) / x^deg`, which has
/// the same sign but cannot overflow.
pub fn eval_scaled(coeffs: &[f64], x: f64) -> f64 {
    let deg = degree(coeffs) as i32;
    let shift = if x > 1.0 { deg } else { 0 };
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let term = c * x.powi(i as i32 - shift);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Cauchy bound: every root satisfies `|x| < 1 + max_i |c_i| / |c_lead|`.
/// The sum form is used, which is looser but never smaller.
pub fn cauchy_bound(coeffs: &[f64]) -> f64 {
    let deg = degree(coeffs);
    let lead = coeffs[deg].abs();
    1.0 + coeffs[..deg].iter().map(|c| c.abs()).sum::<f64>() / lead
}

fn max_abs(coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

fn bisect(coeffs: &[f64], mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = eval_scaled(coeffs, lo);
    for _ in 0..BISECTION_BUDGET {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let f_hi = eval_scaled(coeffs, hi);
            return Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi });
        }
        let f_mid = eval_scaled(coeffs, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence { iterations: BISECTION_BUDGET })
}

/// All positive real roots, ascending.
///
/// A log-spaced sign scan between the lower and upper Cauchy bounds brackets
/// every simple root; each bracket is bisected down to adjacent floats.
/// Roots of even multiplicity (no sign change) are not detected.
pub fn find_positive_roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    let deg = degree(coeffs);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let c0 = coeffs[0];
    let hi = cauchy_bound(coeffs);
    // lower root bound from the reversed polynomial; falls back to a small
    // multiple of the upper bound when zero is itself a root
    let lo = if c0 != 0.0 {
        let rest = coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        c0.abs() / (c0.abs() + rest)
    } else {
        hi * 1e-12
    };
    debug_assert!(lead != 0.0);

    let decades = (hi / lo).log10().max(1e-3);
    let samples = ((decades * SAMPLES_PER_DECADE as f64).ceil() as usize).max(64);
    let ratio = (hi / lo).powf(1.0 / samples as f64);

    let tol = ROOT_RESIDUAL_TOL * max_abs(coeffs);
    let mut roots = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = eval_scaled(coeffs, lo);
    for i in 1..=samples {
        let x = if i == samples { hi } else { lo * ratio.powi(i as i32) };
        let f = eval_scaled(coeffs, x);
        if f_prev == 0.0 {
            roots.push(x_prev);
        } else if f != 0.0 && (f < 0.0) != (f_prev < 0.0) {
            let r = bisect(coeffs, x_prev, x)?;
            let res = eval_scaled(coeffs, r).abs();
            if res > tol {
                return Err(Error::EquilibriumResidual { residual: res, tolerance: tol });
            }
            roots.push(r);
        }
        x_prev = x;
        f_prev = f;
    }
    if f_prev == 0.0 {
        roots.push(x_prev);
    }
    Ok(roots)
}

/// Assembles the equilibrium from a root `y10` of `k`.
pub fn build_equilibrium(p: &ModelParams, y10: f64) -> Result<Equilibrium> {
    if !(y10 > 0.0) || !y10.is_finite() {
        return Err(Error::Domain(format!("equilibrium y10 must be positive, got {y10}")));
    }
    let coeffs = equilibrium_poly_coeffs(p);
    let tol = EQUILIBRIUM_RESIDUAL_TOL * max_abs(&coeffs);
    let residual = eval_scaled(&coeffs, y10).abs();
    if residual > tol {
        return Err(Error::EquilibriumResidual { residual, tolerance: tol });
    }
    let f = hill_eval(y10, p)?;
    let (rho1, rho2, rho3) = hill_derivs(y10, p)?;
    let x20 = f / p.b2;
    Ok(Equilibrium {
        x10: 1.0 / p.b1,
        y10,
        x20,
        y20: x20 / (p.a2 + p.a21 * y10),
        rho1,
        rho2,
        rho3,
    })
}

/// Every positive equilibrium, ordered by `y10`.
pub fn equilibria(p: &ModelParams) -> Result<Vec<Equilibrium>> {
    p.validate()?;
    find_positive_roots(&equilibrium_poly_coeffs(p))?
        .into_iter()
        .map(|y| build_equilibrium(p, y))
        .collect()
}
