//! The delayed P53–MDM2 feedback model.
//!
//! State is `(x1, y1, x2, y2)`: P53 mRNA, P53 protein, MDM2 mRNA, MDM2
//! protein. Transcription, translation and the P53 activation level are
//! normalised to one, and a single delay `tau` is shared by the three
//! delayed couplings:
//!
//! ```text
//! x1' = 1 - b1 x1
//! y1' = x1 - (a1 + a12 y2(t - tau)) y1
//! x2' = f(y1(t - tau)) - b2 x2
//! y2' = x2 - (a2 + a21 y1(t - tau)) y2
//! ```
//!
//! with the Hill activation `f(x) = x^n / (a + x^n)`. Setting `a21 = 0` and
//! `tau = 0` recovers the undelayed two-gene model without a separate code
//! path.

use std::ops::{Add, Index, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Rate constants and Hill parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// P53 protein degradation rate.
    pub a1: f64,
    /// MDM2 protein degradation rate.
    pub a2: f64,
    /// MDM2-induced P53 degradation rate.
    pub a12: f64,
    /// P53-induced MDM2 degradation rate.
    pub a21: f64,
    /// P53 mRNA degradation rate.
    pub b1: f64,
    /// MDM2 mRNA degradation rate.
    pub b2: f64,
    /// Hill half-saturation constant (units of conc^n).
    pub a: f64,
    /// Hill exponent.
    pub n: u32,
}

impl ModelParams {
    /// Builds and validates a parameter set.
    #[allow(clippy::too_many_arguments)]
    pub fn new(a1: f64, a2: f64, a12: f64, a21: f64, b1: f64, b2: f64, a: f64, n: u32) -> Result<Self> {
        let p = Self { a1, a2, a12, a21, b1, b2, a, n };
        p.validate()?;
        Ok(p)
    }

    /// The reference parameter set used for the four published cases; only
    /// the Hill exponent varies between them.
    pub fn reference(n: u32) -> Self {
        Self { a1: 0.13, a2: 0.13, a12: 0.02, a21: 0.02, b1: 0.8, b2: 0.01, a: 4.0, n }
    }

    /// Rates must lie in (0, 1]. `a12` and `a21` may also be zero, which
    /// switches off the corresponding coupling.
    pub fn validate(&self) -> Result<()> {
        let strict = [("a1", self.a1), ("a2", self.a2), ("b1", self.b1), ("b2", self.b2)];
        for (name, v) in strict {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter { name, reason: format!("must lie in (0, 1], got {v}") });
            }
        }
        for (name, v) in [("a12", self.a12), ("a21", self.a21)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter { name, reason: format!("must lie in [0, 1], got {v}") });
            }
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter { name: "a", reason: format!("must be positive, got {}", self.a) });
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter { name: "n", reason: "must be a positive integer".into() });
        }
        Ok(())
    }
}

/// A point in the four-dimensional state space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVec {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl StateVec {
    pub const ZERO: StateVec = StateVec { x1: 0.0, y1: 0.0, x2: 0.0, y2: 0.0 };

    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn norm(self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl Add for StateVec {
    type Output = StateVec;
    fn add(self, o: StateVec) -> StateVec {
        StateVec::new(self.x1 + o.x1, self.y1 + o.y1, self.x2 + o.x2, self.y2 + o.y2)
    }
}

impl Sub for StateVec {
    type Output = StateVec;
    fn sub(self, o: StateVec) -> StateVec {
        StateVec::new(self.x1 - o.x1, self.y1 - o.y1, self.x2 - o.x2, self.y2 - o.y2)
    }
}

impl Neg for StateVec {
    type Output = StateVec;
    fn neg(self) -> StateVec {
        self * -1.0
    }
}

impl Mul<f64> for StateVec {
    type Output = StateVec;
    fn mul(self, s: f64) -> StateVec {
        StateVec::new(self.x1 * s, self.y1 * s, self.x2 * s, self.y2 * s)
    }
}

impl Index<usize> for StateVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x1,
            1 => &self.y1,
            2 => &self.x2,
            3 => &self.y2,
            _ => panic!("state index {i} out of range"),
        }
    }
}

/// `1 - f(x) = 1 / (1 + x^n / a)`, evaluated in log space.
fn hill_complement(x: f64, p: &ModelParams) -> f64 {
    1.0 / (1.0 + (p.n as f64 * x.ln() - p.a.ln()).exp())
}

/// Hill activation `x^n / (a + x^n)`.
///
/// Evaluated as `1 / (1 + a exp(-n ln x))` so that exponents in the hundreds
/// neither overflow nor underflow.
pub fn hill_eval(x: f64, p: &ModelParams) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("Hill function needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (1.0 + (p.a.ln() - p.n as f64 * x.ln()).exp()))
}

/// First three derivatives `(f', f'', f''')` of the Hill function at `x > 0`.
///
/// With `P = f (1 - f)` and `m = 1 - 2f`:
/// `f' = n P / x`, `f'' = n P (n m - 1) / x^2`,
/// `f''' = n P ((n m - 1)(n m - 2) - 2 n^2 P) / x^3`.
pub fn hill_derivs(x: f64, p: &ModelParams) -> Result<(f64, f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Hill derivatives need x > 0, got {x}")));
    }
    let n = p.n as f64;
    let f = hill_eval(x, p)?;
    let g = hill_complement(x, p);
    let prod = f * g;
    let m = g - f;
    let nm = n * m;
    let rho1 = n * prod / x;
    let rho2 = n * prod * (nm - 1.0) / (x * x);
    let rho3 = n * prod * ((nm - 1.0) * (nm - 2.0) - 2.0 * n * n * prod) / (x * x * x);
    Ok((rho1, rho2, rho3))
}

/// Right-hand side of the delayed system. `delayed` supplies the state at
/// `t - tau`; only its `y1` and `y2` components are read.
pub fn rhs(state: &StateVec, delayed: &StateVec, p: &ModelParams) -> StateVec {
    // Negative delayed protein levels are unphysical; the Hill term treats
    // them as zero activation instead of failing mid-integration.
    let act = if delayed.y1 > 0.0 { hill_eval(delayed.y1, p).unwrap_or(0.0) } else { 0.0 };
    StateVec {
        x1: 1.0 - p.b1 * state.x1,
        y1: state.x1 - (p.a1 + p.a12 * delayed.y2) * state.y1,
        x2: act - p.b2 * state.x2,
        y2: state.x2 - (p.a2 + p.a21 * delayed.y1) * state.y2,
    }
}
