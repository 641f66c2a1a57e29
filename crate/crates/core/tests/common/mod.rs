//! Oracles shared by the integration and acceptance tests. They use only
//! the right-hand side of the model and generic linear algebra, never the
//! closed forms of the library.
#![allow(dead_code)]

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use p53_hopf::equilibrium::{equilibria, Equilibrium};
use p53_hopf::model::rhs;
use p53_hopf::stability::{char_coeffs, hopf_point, HopfPoint, DEFAULT_K_MAX};
use p53_hopf::{ModelParams, StateVec};

pub type C = Complex64;
pub type CV = Vector4<C>;

pub fn setup(n: u32) -> (ModelParams, Equilibrium, HopfPoint) {
    let p = ModelParams::reference(n);
    let eq = equilibria(&p).unwrap()[0];
    let hp = hopf_point(&char_coeffs(&p, &eq), DEFAULT_K_MAX).unwrap().unwrap();
    (p, eq, hp)
}

/// Right-hand side as a function of the combined deviation `(u(0), u(-tau))`.
fn f_dev(p: &ModelParams, x0: StateVec, u: &[f64; 8]) -> [f64; 4] {
    let now = x0 + StateVec::new(u[0], u[1], u[2], u[3]);
    let lag = x0 + StateVec::new(u[4], u[5], u[6], u[7]);
    rhs(&now, &lag, p).to_array()
}

/// Jacobians with respect to the instantaneous and delayed state by
/// central differences.
pub fn fd_jacobians(p: &ModelParams, eq: &Equilibrium) -> (Matrix4<f64>, Matrix4<f64>) {
    let x0 = eq.state();
    let (mut a, mut b) = (Matrix4::zeros(), Matrix4::zeros());
    for j in 0..8 {
        let h = 1e-6 * x0[j % 4].abs().max(1.0);
        let mut up = [0.0; 8];
        let mut dn = [0.0; 8];
        up[j] = h;
        dn[j] = -h;
        let (fu, fd) = (f_dev(p, x0, &up), f_dev(p, x0, &dn));
        for i in 0..4 {
            let d = (fu[i] - fd[i]) / (2.0 * h);
            if j < 4 {
                a[(i, j)] = d;
            } else {
                b[(i, j - 4)] = d;
            }
        }
    }
    (a, b)
}

pub fn pencil(a: &Matrix4<f64>, b: &Matrix4<f64>, lambda: C, tau: f64) -> Matrix4<C> {
    a.map(C::from) + b.map(C::from) * (-lambda * tau).exp() - Matrix4::identity() * lambda
}

/// Null vector of `m` with the given component fixed to one.
fn null_vector(m: &Matrix4<C>, fixed: usize) -> CV {
    let free: Vec<usize> = (0..4).filter(|&j| j != fixed).collect();
    // drop the row with the smallest pivot effect: try all and keep the best residual
    let mut best: Option<(f64, CV)> = None;
    for skip in 0..4 {
        let rows: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
        let sub = Matrix3::from_fn(|r, c| m[(rows[r], free[c])]);
        let rhs = Vector3::from_fn(|r, _| -m[(rows[r], fixed)]);
        if let Some(sol) = sub.lu().solve(&rhs) {
            let mut v = CV::zeros();
            v[fixed] = C::new(1.0, 0.0);
            for (k, &j) in free.iter().enumerate() {
                v[j] = sol[k];
            }
            let res = (m * v).norm();
            if best.as_ref().is_none_or(|(r, _)| res < *r) {
                best = Some((res, v));
            }
        }
    }
    best.unwrap().1
}

pub fn right_null(a: &Matrix4<f64>, b: &Matrix4<f64>, lambda: C, tau: f64) -> CV {
    null_vector(&pencil(a, b, lambda, tau), 2)
}

pub fn left_null(a: &Matrix4<f64>, b: &Matrix4<f64>, lambda: C, tau: f64) -> CV {
    null_vector(&pencil(a, b, lambda, tau).transpose(), 0)
}

/// Composite Simpson approximation of
/// `psi phi + int_{-tau}^0 psi e^{psi_rate (theta + tau)} B phi e^{phi_rate theta} dtheta`.
pub fn pairing_quadrature(psi: &CV, psi_rate: C, phi: &CV, phi_rate: C, b: &Matrix4<f64>, tau: f64) -> C {
    let nodes = 20_000;
    let h = tau / nodes as f64;
    let kernel = psi.dot(&(b.map(C::from) * phi));
    let f = |t: f64| (psi_rate * (t + tau)).exp() * (phi_rate * t).exp();
    let mut acc = f(-tau) + f(0.0);
    for i in 1..nodes {
        acc += f(-tau + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    psi.dot(phi) + kernel * acc * (h / 3.0)
}

/// Real second and third directional derivatives of `f_dev` at zero.
fn d2_real(p: &ModelParams, x0: StateVec, x: &[f64; 8], y: &[f64; 8], h: f64) -> [f64; 4] {
    let comb = |sx: f64, sy: f64| {
        let u: [f64; 8] = std::array::from_fn(|k| h * (sx * x[k] + sy * y[k]));
        f_dev(p, x0, &u)
    };
    let (pp, pm, mp, mm) = (comb(1.0, 1.0), comb(1.0, -1.0), comb(-1.0, 1.0), comb(-1.0, -1.0));
    std::array::from_fn(|i| (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * h * h))
}

fn d3_real(p: &ModelParams, x0: StateVec, x: &[f64; 8], y: &[f64; 8], z: &[f64; 8], h: f64) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                let u: [f64; 8] = std::array::from_fn(|k| h * (sx * x[k] + sy * y[k] + sz * z[k]));
                let f = f_dev(p, x0, &u);
                for i in 0..4 {
                    acc[i] += sx * sy * sz * f[i];
                }
            }
        }
    }
    acc.map(|v| v / (8.0 * h * h * h))
}

type C8 = [C; 8];

fn split(a: &C8) -> ([f64; 8], [f64; 8]) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

/// Complex bilinear form `D^2 F[a, b]`.
pub fn d2(p: &ModelParams, eq: &Equilibrium, a: &C8, b: &C8, h: f64) -> CV {
    let x0 = eq.state();
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let rr = d2_real(p, x0, &ar, &br, h);
    let ii = d2_real(p, x0, &ai, &bi, h);
    let ri = d2_real(p, x0, &ar, &bi, h);
    let ir = d2_real(p, x0, &ai, &br, h);
    CV::from_fn(|i, _| C::new(rr[i] - ii[i], ri[i] + ir[i]))
}

/// Complex trilinear form `D^3 F[a, b, c]`.
pub fn d3(p: &ModelParams, eq: &Equilibrium, a: &C8, b: &C8, c: &C8, h: f64) -> CV {
    let x0 = eq.state();
    let parts = |v: &C8| {
        let (r, i) = split(v);
        [(r, C::new(1.0, 0.0)), (i, C::new(0.0, 1.0))]
    };
    let mut out = CV::zeros();
    for (xa, fa) in parts(a) {
        for (xb, fb) in parts(b) {
            for (xc, fc) in parts(c) {
                let d = d3_real(p, x0, &xa, &xb, &xc, h);
                for i in 0..4 {
                    out[i] += fa * fb * fc * d[i];
                }
            }
        }
    }
    out
}

fn stack(now: &CV, lag: &CV) -> C8 {
    std::array::from_fn(|k| if k < 4 { now[k] } else { lag[k - 4] })
}

fn conj(v: &CV) -> CV {
    v.map(|z| z.conj())
}

/// Normal-form coefficients from the generic centre-manifold formulas.
#[derive(Debug, Clone, Copy)]
pub struct OracleNormalForm {
    pub g20: C,
    pub g11: C,
    pub g02: C,
    pub g21: C,
    pub c1: C,
    pub mu2: f64,
    pub beta2: f64,
    pub t2: f64,
}

pub fn hassard_oracle(p: &ModelParams, eq: &Equilibrium, hp: &HopfPoint) -> OracleNormalForm {
    let (a, b) = fd_jacobians(p, eq);
    let (omega, tau) = (hp.omega_c, hp.tau_c);
    let l = C::new(0.0, omega);
    let v = right_null(&a, &b, l, tau);
    let w_raw = left_null(&a, &b, l, tau);
    let w = w_raw / pairing_quadrature(&w_raw, -l, &v, l, &b, tau);

    // the Hill term varies on the scale y10 / n; unit directions keep the
    // probe inside that scale
    let hill_scale = eq.y10 / p.n as f64;
    let probe = (10.0 * hill_scale).min(eq.state().norm());
    let h2 = 1e-3 * probe;
    let h3 = 2e-2 * probe;

    let e1 = (-l * tau).exp();
    let q = stack(&v, &(v * e1));
    let qb = stack(&conj(&v), &(conj(&v) * e1.conj()));

    let nw = |x: &C8| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let unit = |x: &C8| x.map(|z| z / nw(x));
    let d2n = |x: &C8, y: &C8| d2(p, eq, &unit(x), &unit(y), h2) * C::from(nw(x) * nw(y));
    let d3n = |x: &C8, y: &C8, z: &C8| d3(p, eq, &unit(x), &unit(y), &unit(z), h3) * C::from(nw(x) * nw(y) * nw(z));

    let f20 = d2n(&q, &q);
    let f11 = d2n(&q, &qb);
    let f02 = d2n(&qb, &qb);
    let (g20, g11, g02) = (w.dot(&f20), w.dot(&f11), w.dot(&f02));

    let m2 = pencil(&a, &b, 2.0 * l, tau);
    let m1: Matrix4<C> = (a + b).map(C::from);
    let big_e2 = -m2.lu().solve(&f20).unwrap();
    let big_e1 = -m1.lu().solve(&f11).unwrap();

    let w20 = |theta: f64| -> CV {
        v * (-g20 / l * (l * theta).exp()) - conj(&v) * (g02.conj() / (3.0 * l) * (-l * theta).exp())
            + big_e2 * (2.0 * l * theta).exp()
    };
    let w11 = |theta: f64| -> CV {
        v * (g11 / l * (l * theta).exp()) - conj(&v) * (g11.conj() / l * (-l * theta).exp()) + big_e1
    };
    let w20s = stack(&w20(0.0), &w20(-tau));
    let w11s = stack(&w11(0.0), &w11(-tau));

    let cubic = d2n(&q, &w11s) * C::from(2.0) + d2n(&qb, &w20s) + d3n(&q, &q, &qb);
    let g21 = w.dot(&cubic);

    let c1 = C::new(0.0, 1.0) / (2.0 * omega) * (g20 * g11 - 2.0 * g11.norm_sqr() - g02.norm_sqr() / 3.0) + g21 / 2.0;
    let dl = root_continuation_dlambda(p, eq, omega, tau);
    let mu2 = -c1.re / dl.re;
    OracleNormalForm { g20, g11, g02, g21, c1, mu2, beta2: 2.0 * c1.re, t2: -(c1.im + mu2 * dl.im) / omega }
}

/// `det(lambda I - A - B e^{-lambda tau})` with finite-difference Jacobians.
pub fn fd_char_det(a: &Matrix4<f64>, b: &Matrix4<f64>, lambda: C, tau: f64) -> C {
    (-pencil(a, b, lambda, tau)).determinant()
}

/// Follows the critical root by Newton iteration at `tau +- delta` and
/// differences the results.
pub fn root_continuation_dlambda(p: &ModelParams, eq: &Equilibrium, omega: f64, tau: f64) -> C {
    let (a, b) = fd_jacobians(p, eq);
    let newton = |t: f64| {
        let mut lam = C::new(0.0, omega);
        for _ in 0..100 {
            let f = fd_char_det(&a, &b, lam, t);
            let hs = 1e-7 * omega.max(1e-3);
            let df = (fd_char_det(&a, &b, lam + hs, t) - fd_char_det(&a, &b, lam - hs, t)) / (2.0 * hs);
            let step = f / df;
            lam -= step;
            if step.norm() < 1e-15 * omega.max(1e-3) {
                break;
            }
        }
        lam
    };
    let delta = 1e-4 * tau;
    (newton(tau + delta) - newton(tau - delta)) / (2.0 * delta)
}
