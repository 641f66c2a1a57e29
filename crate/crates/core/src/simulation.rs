//! Method-of-steps integration of the delayed model and centre-manifold
//! waveform reconstruction.
//!
//! The step `h` must divide `tau`, so every delayed lookup of a classical
//! RK4 stage lands either on a stored node or on the midpoint of a stored
//! interval. Midpoints are filled by cubic Hermite interpolation from the
//! node values and node derivatives, which keeps the scheme fourth order.
//! Derivative jumps propagate to multiples of `tau`, which are grid nodes.

use num_complex::Complex64;

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::model::{rhs, ModelParams, StateVec};
use crate::normal_form::{Eigenpair, NormalForm};

pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
pub const MAX_STEPS: u64 = 100_000_000;
pub const DEFAULT_PERTURBATION: f64 = 0.01;

/// Initial function on `[-tau, 0]`, stored on the integration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    tau: f64,
    steps_per_delay: usize,
    /// Node values at `theta = -tau + j h`, `j = 0..=steps_per_delay`.
    values: Vec<StateVec>,
    /// Derivatives at the same nodes (left derivative at `theta = 0`).
    derivs: Vec<StateVec>,
}

/// Checks that `step` divides `tau` and returns `tau / step`.
pub fn steps_per_delay(tau: f64, step: f64) -> Result<usize> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidStep(format!("delay must be positive and finite, got {tau}")));
    }
    if !(step > 0.0 && step <= tau) {
        return Err(Error::InvalidStep(format!("step must lie in (0, tau], got {step} with tau = {tau}")));
    }
    let m = (tau / step).round();
    if (m * step - tau).abs() > 1e-9 * tau {
        return Err(Error::InvalidStep(format!("step {step} does not divide tau = {tau}")));
    }
    Ok(m as usize)
}

impl History {
    pub fn from_fn(tau: f64, step: f64, f: impl Fn(f64) -> StateVec, df: impl Fn(f64) -> StateVec) -> Result<Self> {
        let m = steps_per_delay(tau, step)?;
        let h = tau / m as f64;
        let thetas = (0..=m).map(|j| if j == m { 0.0 } else { -tau + j as f64 * h });
        let (values, derivs) = thetas.map(|t| (f(t), df(t))).unzip();
        Ok(Self { tau, steps_per_delay: m, values, derivs })
    }

    pub fn constant(state: StateVec, tau: f64, step: f64) -> Result<Self> {
        Self::from_fn(tau, step, |_| state, |_| StateVec::ZERO)
    }

    /// Constant history `eq * (1 + perturbation)`, componentwise.
    pub fn perturbed_equilibrium(eq: &Equilibrium, perturbation: f64, tau: f64, step: f64) -> Result<Self> {
        Self::constant(eq.state() * (1.0 + perturbation), tau, step)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn step(&self) -> f64 {
        self.tau / self.steps_per_delay as f64
    }

    pub fn initial(&self) -> StateVec {
        self.values[self.steps_per_delay]
    }
}

/// Run metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMeta {
    pub tau: f64,
    pub params: ModelParams,
    pub step: f64,
    pub equilibrium: Option<StateVec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVec>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// One component over time.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }
}

fn hermite_midpoint(y0: StateVec, d0: StateVec, y1: StateVec, d1: StateVec, h: f64) -> StateVec {
    (y0 + y1) * 0.5 + (d0 - d1) * (h / 8.0)
}

/// Grid storage for history and solution: node `j` sits at `t = (j - m) h`.
struct Buffer {
    m: usize,
    h: f64,
    values: Vec<StateVec>,
    derivs: Vec<StateVec>,
    /// Right derivative at `t = 0`, which differs from the history slope.
    right_deriv0: StateVec,
}

impl Buffer {
    fn node(&self, j: usize) -> StateVec {
        self.values[j]
    }

    /// Value at the midpoint of `[node j, node j+1]`.
    fn midpoint(&self, j: usize) -> StateVec {
        let d0 = if j == self.m { self.right_deriv0 } else { self.derivs[j] };
        hermite_midpoint(self.values[j], d0, self.values[j + 1], self.derivs[j + 1], self.h)
    }
}

/// Integrates the delayed model with fixed-step RK4 from `t = 0` to
/// `t_end` (rounded up to the grid). Negative concentrations are kept as is.
pub fn integrate(p: &ModelParams, tau: f64, history: &History, t_end: f64, step: f64) -> Result<Trajectory> {
    p.validate()?;
    let m = steps_per_delay(tau, step)?;
    if (history.tau - tau).abs() > 1e-12 * tau || history.steps_per_delay != m {
        return Err(Error::InvalidStep("history grid does not match tau and step".into()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidStep(format!("t_end must be positive, got {t_end}")));
    }
    let h = tau / m as f64;
    let n_steps = ((t_end / h) - 1e-9).ceil().max(1.0);
    if n_steps > MAX_STEPS as f64 {
        return Err(Error::InvalidStep(format!("{n_steps} steps exceed the limit of {MAX_STEPS}")));
    }
    let n_steps = n_steps as usize;

    let y0 = history.initial();
    let mut buf = Buffer {
        m,
        h,
        values: Vec::with_capacity(m + n_steps + 1),
        derivs: Vec::with_capacity(m + n_steps + 1),
        right_deriv0: StateVec::ZERO,
    };
    buf.values.extend_from_slice(&history.values);
    buf.derivs.extend_from_slice(&history.derivs);
    buf.right_deriv0 = rhs(&y0, &buf.node(0), p);

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(y0);

    for i in 0..n_steps {
        // current node index m + i; delayed node index i
        let y = buf.node(m + i);
        let k1 = if i == 0 { buf.right_deriv0 } else { buf.derivs[m + i] };
        let dmid = buf.midpoint(i);
        let k2 = rhs(&(y + k1 * (h / 2.0)), &dmid, p);
        let k3 = rhs(&(y + k2 * (h / 2.0)), &dmid, p);
        let k4 = rhs(&(y + k3 * h), &buf.node(i + 1), p);
        let next = y + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        let t = (i + 1) as f64 * h;
        if !next.is_finite() || next.norm() > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergence { t });
        }
        let dnext = rhs(&next, &buf.node(i + 1), p);
        buf.values.push(next);
        buf.derivs.push(dnext);
        times.push(t);
        states.push(next);
    }
    log::debug!("integrated {n_steps} steps with h = {h} (tau = {tau})");
    Ok(Trajectory { times, states, meta: TrajectoryMeta { tau, params: *p, step: h, equilibrium: None } })
}

/// Estimated order `log2(|y_h - y_ref| / |y_{h/2} - y_ref|)` with reference
/// step `h/8`, errors measured as the maximum norm over the common nodes.
pub fn self_convergence_order(p: &ModelParams, tau: f64, history_state: StateVec, t_end: f64, steps_per_delay: usize) -> Result<f64> {
    let run = |mult: usize| -> Result<Trajectory> {
        let step = tau / (steps_per_delay * mult) as f64;
        let hist = History::constant(history_state, tau, step)?;
        integrate(p, tau, &hist, t_end, step)
    };
    let coarse = run(1)?;
    let fine = run(2)?;
    let reference = run(8)?;
    let err = |tr: &Trajectory, stride: usize| {
        tr.states
            .iter()
            .enumerate()
            .filter_map(|(i, s)| reference.states.get(i * stride).map(|r| (*s - *r).norm()))
            .fold(0.0, f64::max)
    };
    Ok((err(&coarse, 8) / err(&fine, 4)).log2())
}

/// Mean spacing of upward zero crossings of `values` (linear interpolation
/// between samples), or `None` with fewer than two crossings.
pub fn oscillation_period(times: &[f64], values: &[f64]) -> Option<f64> {
    let crossings: Vec<f64> = times
        .windows(2)
        .zip(values.windows(2))
        .filter(|(_, v)| v[0] < 0.0 && v[1] >= 0.0)
        .map(|(t, v)| t[0] + (t[1] - t[0]) * (-v[0]) / (v[1] - v[0]))
        .collect();
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Normal-form amplitude equation
/// `z' = lambda z + g20 z^2/2 + g11 z zbar + g02 zbar^2/2 + g21 z^2 zbar/2`,
/// with `lambda = lambda1 + mu lambda'(tau_c)` and `mu = tau - tau_c`.
pub fn integrate_normal_form(
    nf: &NormalForm,
    ep: &Eigenpair,
    dlambda_dtau: Complex64,
    mu: f64,
    z0: Complex64,
    t_end: f64,
    step: f64,
) -> Result<Vec<(f64, Complex64)>> {
    if !(step > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidStep(format!("step {step} and t_end {t_end} must be positive")));
    }
    let lambda = ep.lambda1 + dlambda_dtau * mu;
    let f = |z: Complex64| {
        let zb = z.conj();
        lambda * z + nf.g20 * z * z / 2.0 + nf.g11 * z * zb + nf.g02 * zb * zb / 2.0 + nf.g21 * z * z * zb / 2.0
    };
    let n = ((t_end / step) - 1e-9).ceil() as usize;
    let mut out = Vec::with_capacity(n + 1);
    let mut z = z0;
    out.push((0.0, z));
    for i in 0..n {
        let k1 = f(z);
        let k2 = f(z + k1 * (step / 2.0));
        let k3 = f(z + k2 * (step / 2.0));
        let k4 = f(z + k3 * step);
        z += (k1 + (k2 + k3) * 2.0 + k4) * (step / 6.0);
        if !z.is_finite() || z.norm() > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergence { t: (i + 1) as f64 * step });
        }
        out.push(((i + 1) as f64 * step, z));
    }
    Ok(out)
}

/// Which terms of the centre-manifold expansion to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    Linear,
    Quadratic,
}

/// `X = X0 + z v + zbar vbar + w20(0) z^2/2 + w11(0) z zbar + w02(0) zbar^2/2`.
pub fn reconstruct_center_manifold(
    nf: &NormalForm,
    ep: &Eigenpair,
    eq: &Equilibrium,
    tau: f64,
    params: &ModelParams,
    z_path: &[(f64, Complex64)],
    truncation: Truncation,
) -> Trajectory {
    let mt = nf.manifold(ep);
    let (w20, w11, w02) = (mt.w20(0.0), mt.w11(0.0), mt.w02(0.0));
    let x0 = eq.state();
    let states = z_path
        .iter()
        .map(|&(_, z)| {
            let zb = z.conj();
            let comp = |i: usize| {
                let mut s = z * ep.v[i] + zb * ep.v[i].conj();
                if truncation == Truncation::Quadratic {
                    s += w20[i] * z * z / 2.0 + w11[i] * z * zb + w02[i] * zb * zb / 2.0;
                }
                s.re
            };
            x0 + StateVec::new(comp(0), comp(1), comp(2), comp(3))
        })
        .collect();
    let step = if z_path.len() > 1 { z_path[1].0 - z_path[0].0 } else { 0.0 };
    Trajectory {
        times: z_path.iter().map(|&(t, _)| t).collect(),
        states,
        meta: TrajectoryMeta { tau, params: *params, step, equilibrium: Some(x0) },
    }
}
