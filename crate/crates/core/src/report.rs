//! Pipeline composition, the flat text report and file output.
//!
//! The report is one `key = value` per line with dotted keys. Floats are
//! written with 17 significant digits so they parse back bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::AnalysisConfig;
use crate::equilibrium::{equilibria, Equilibrium};
use crate::model::ModelParams;
use crate::normal_form::{normal_form, printed_eta, Eigenpair, FormulaReadings, NormalForm};
use crate::simulation::{
    integrate, integrate_normal_form, oscillation_period, reconstruct_center_manifold, steps_per_delay, History,
    Trajectory, Truncation,
};
use crate::stability::{
    char_coeffs, classify_stability, delay_candidates, hopf_point, routh_hurwitz_stable, undelayed_unstable_count,
    CharCoeffs, DelayCandidate, HopfPoint, StabilityVerdict,
};

/// Relative gap above which the closed-form transversality is flagged.
pub const CLOSED_FORM_TOL: f64 = 1e-6;

/// Published values for the four reference cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedCase {
    pub n: u32,
    pub equilibrium: [f64; 4],
    pub omega: f64,
    pub tau: f64,
    pub mu2: f64,
    pub beta2: f64,
    pub t2: f64,
    /// Relative tolerance for the branch match.
    pub branch_tol: f64,
}

pub const PUBLISHED: [PublishedCase; 4] = [
    PublishedCase {
        n: 2,
        equilibrium: [1.25, 0.72279716, 11.55208766, 79.96962531],
        omega: 0.01173958,
        tau: 90.21567180,
        mu2: -15.56012572,
        beta2: -0.00020024,
        t2: -0.169703418,
        branch_tol: 1e-3,
    },
    PublishedCase {
        n: 4,
        equilibrium: [1.25, 0.82091152, 10.19581588, 69.63487984],
        omega: 0.02969208,
        tau: 26.61818721,
        mu2: -22.21740930,
        beta2: -0.00987558,
        t2: -0.86252133,
        branch_tol: 1e-3,
    },
    PublishedCase {
        n: 163,
        equilibrium: [1.25, 0.99390609, 8.45060883, 56.38320475],
        omega: 0.42317766,
        tau: 0.00213625,
        mu2: -12.63855144,
        beta2: -0.53197047,
        t2: 7.14847952,
        branch_tol: 1e-2,
    },
    PublishedCase {
        n: 164,
        equilibrium: [1.25, 0.99394289, 8.45030131, 56.38087608],
        omega: 0.42448028,
        tau: 7.40096599,
        mu2: 4.70953378,
        beta2: -1.32779287,
        t2: 3.42681695,
        branch_tol: 1e-2,
    },
];

/// The published case whose parameters equal `p`, if any.
pub fn published_case(p: &ModelParams) -> Option<&'static PublishedCase> {
    PUBLISHED.iter().find(|c| ModelParams::reference(c.n) == *p)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Comparison of computed results with a published case. All published
/// cases state "orbitally stable" and "period increasing".
#[derive(Debug, Clone, PartialEq)]
pub struct PublishedComparison {
    pub case: PublishedCase,
    pub equilibrium_max_rel_error: f64,
    /// Index into the candidate list of the first branch within tolerance.
    pub branch_index: Option<usize>,
    pub mu2_sign_match: Option<bool>,
    pub beta2_sign_match: Option<bool>,
    pub mu2_rel_error: Option<f64>,
    pub beta2_rel_error: Option<f64>,
    pub t2_rel_error: Option<f64>,
    /// Printed T2 sign agrees with the printed "period increasing".
    pub printed_t2_wording_consistent: bool,
    pub period_trend_match: Option<bool>,
}

impl PublishedComparison {
    fn new(case: &PublishedCase, eq: &Equilibrium, candidates: &[DelayCandidate], nf: Option<&NormalForm>) -> Self {
        let ours = [eq.x10, eq.y10, eq.x20, eq.y20];
        let equilibrium_max_rel_error = ours.iter().zip(case.equilibrium).map(|(a, b)| rel(*a, b)).fold(0.0, f64::max);
        let branch_index = candidates
            .iter()
            .position(|c| rel(c.omega, case.omega) < case.branch_tol && rel(c.tau, case.tau) < case.branch_tol);
        Self {
            case: *case,
            equilibrium_max_rel_error,
            branch_index,
            mu2_sign_match: nf.map(|nf| (nf.mu2 > 0.0) == (case.mu2 > 0.0)),
            beta2_sign_match: nf.map(|nf| (nf.beta2 > 0.0) == (case.beta2 > 0.0)),
            mu2_rel_error: nf.map(|nf| rel(nf.mu2, case.mu2)),
            beta2_rel_error: nf.map(|nf| rel(nf.beta2, case.beta2)),
            t2_rel_error: nf.map(|nf| rel(nf.t2, case.t2)),
            printed_t2_wording_consistent: case.t2 > 0.0,
            period_trend_match: nf.map(|nf| nf.t2 > 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub eq: Equilibrium,
    pub coeffs: CharCoeffs,
    pub routh_hurwitz_stable: bool,
    pub unstable_at_zero: usize,
    pub candidates: Vec<DelayCandidate>,
    pub hopf: Option<HopfPoint>,
    pub eigenpair: Option<Eigenpair>,
    pub printed_eta: Option<Complex64>,
    pub normal_form: Option<NormalForm>,
    pub verdict_at_tau: Option<StabilityVerdict>,
    pub published: Option<PublishedComparison>,
    /// `(stage, message)` for every stage that failed.
    pub errors: Vec<(&'static str, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub tau: f64,
    pub step: f64,
    pub t_end: f64,
    pub samples: usize,
    pub perturbation: f64,
    /// Zero-crossing period of `y1 - y10` over the last third.
    pub period: Option<f64>,
    /// Half peak-to-peak of `y1` over the last third.
    pub amplitude_y1: f64,
    pub initial_distance: f64,
    pub final_distance: f64,
    pub min_component: f64,
    /// `2 |v2| sqrt(mu / mu2)` with `mu = tau - tau_c`, when positive.
    pub predicted_amplitude_y1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub index: usize,
    pub label: String,
    pub params: ModelParams,
    pub tau: Option<f64>,
    pub equilibria: Vec<EquilibriumReport>,
    pub simulation: Option<SimulationSummary>,
    pub notes: Vec<String>,
    pub errors: Vec<(&'static str, String)>,
}

impl RunReport {
    pub fn has_failures(&self) -> bool {
        !self.errors.is_empty() || self.equilibria.iter().any(|e| !e.errors.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub readings: FormulaReadings,
    pub runs: Vec<RunReport>,
}

impl AnalysisReport {
    pub fn has_failures(&self) -> bool {
        self.runs.iter().any(RunReport::has_failures)
    }
}

/// Trajectories belonging to one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrajectories {
    pub simulation: Option<Trajectory>,
    pub manifold: Option<Trajectory>,
}

fn analyze_equilibrium(cfg: &AnalysisConfig, p: &ModelParams, eq: Equilibrium, tau: Option<f64>) -> EquilibriumReport {
    let coeffs = char_coeffs(p, &eq);
    let mut rep = EquilibriumReport {
        eq,
        coeffs,
        routh_hurwitz_stable: routh_hurwitz_stable(&coeffs),
        unstable_at_zero: undelayed_unstable_count(&coeffs),
        candidates: Vec::new(),
        hopf: None,
        eigenpair: None,
        printed_eta: None,
        normal_form: None,
        verdict_at_tau: None,
        published: None,
        errors: Vec::new(),
    };
    match delay_candidates(&coeffs, cfg.k_max) {
        Ok(c) => rep.candidates = c,
        Err(e) => rep.errors.push(("critical_delays", e.to_string())),
    }
    match hopf_point(&coeffs, cfg.k_max) {
        Ok(h) => rep.hopf = h,
        Err(e) => rep.errors.push(("hopf_point", e.to_string())),
    }
    if let Some(hp) = rep.hopf {
        match normal_form(p, &eq, &hp, cfg.readings) {
            Ok((ep, nf)) => {
                rep.printed_eta = Some(printed_eta(p, &eq, hp.omega_c, hp.tau_c, &ep.v));
                rep.eigenpair = Some(ep);
                rep.normal_form = Some(nf);
            }
            Err(e) => rep.errors.push(("normal_form", e.to_string())),
        }
    }
    if let Some(t) = tau {
        match classify_stability(p, &eq, t) {
            Ok(v) => rep.verdict_at_tau = Some(v),
            Err(e) => rep.errors.push(("classify_stability", e.to_string())),
        }
    }
    rep
}

fn last_third(tr: &Trajectory) -> usize {
    tr.len() * 2 / 3
}

fn simulate(
    cfg: &AnalysisConfig,
    p: &ModelParams,
    tau_run: Option<f64>,
    er: &EquilibriumReport,
) -> Result<Option<(SimulationSummary, RunTrajectories, Option<String>)>, String> {
    let sim = &cfg.sim;
    let tau = match (sim.tau, tau_run, er.hopf) {
        (Some(t), _, _) | (None, Some(t), _) => t,
        (None, None, Some(hp)) => sim.tau_factor * hp.tau_c,
        (None, None, None) => return Ok(None),
    };
    let step = match sim.step {
        Some(s) => {
            steps_per_delay(tau, s).map_err(|e| e.to_string())?;
            s
        }
        None => tau / (tau / sim.max_step).ceil().max(1.0),
    };
    let t_end = sim.t_end.unwrap_or_else(|| match er.hopf {
        Some(hp) => sim.periods * 2.0 * std::f64::consts::PI / hp.omega_c,
        None => sim.periods * tau,
    });
    let eq = &er.eq;
    let hist = History::perturbed_equilibrium(eq, sim.perturbation, tau, step).map_err(|e| e.to_string())?;
    let mut tr = integrate(p, tau, &hist, t_end, step).map_err(|e| e.to_string())?;
    tr.meta.equilibrium = Some(eq.state());

    let from = last_third(&tr);
    let y1: Vec<f64> = tr.states[from..].iter().map(|s| s.y1 - eq.y10).collect();
    let (lo, hi) = y1.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let min_component = tr.states.iter().flat_map(|s| s.to_array()).fold(f64::INFINITY, f64::min);

    let mut manifold = None;
    let mut predicted = None;
    let mut note = None;
    if let (Some(hp), Some(ep), Some(nf)) = (er.hopf, er.eigenpair, er.normal_form) {
        let mu = tau - hp.tau_c;
        let r2 = mu / nf.mu2;
        if r2 > 0.0 {
            predicted = Some(2.0 * ep.v[1].norm() * r2.sqrt());
        }
        if sim.manifold {
            let z0 = Complex64::new(if r2 > 0.0 { r2.sqrt() } else { 1e-3 }, 0.0);
            let nf_step = step.min(2.0 * std::f64::consts::PI / hp.omega_c / 200.0);
            // far from tau_c the truncated amplitude equation can blow up; that
            // is a limit of the approximation, not a failure of the run
            match integrate_normal_form(&nf, &ep, hp.dlambda_dtau, mu, z0, t_end, nf_step) {
                Ok(path) => manifold = Some(reconstruct_center_manifold(&nf, &ep, eq, tau, p, &path, Truncation::Quadratic)),
                Err(e) => note = Some(format!("centre-manifold reconstruction skipped: {e}")),
            }
        }
    }

    let summary = SimulationSummary {
        tau,
        step: tr.meta.step,
        t_end: *tr.times.last().unwrap_or(&0.0),
        samples: tr.len(),
        perturbation: sim.perturbation,
        period: oscillation_period(&tr.times[from..], &y1),
        amplitude_y1: if y1.is_empty() { 0.0 } else { (hi - lo) / 2.0 },
        initial_distance: (tr.states[0] - eq.state()).norm(),
        final_distance: (*tr.states.last().unwrap() - eq.state()).norm(),
        min_component,
        predicted_amplitude_y1: predicted,
    };
    Ok(Some((summary, RunTrajectories { simulation: Some(tr), manifold }, note)))
}

fn run_one(cfg: &AnalysisConfig, index: usize, label: String, p: ModelParams, tau: Option<f64>) -> (RunReport, RunTrajectories) {
    let mut rep = RunReport {
        index,
        label,
        params: p,
        tau,
        equilibria: Vec::new(),
        simulation: None,
        notes: Vec::new(),
        errors: Vec::new(),
    };
    let mut trajectories = RunTrajectories::default();
    let eqs = match equilibria(&p) {
        Ok(e) => e,
        Err(e) => {
            rep.errors.push(("equilibria", e.to_string()));
            return (rep, trajectories);
        }
    };
    if eqs.len() > 1 {
        rep.notes.push(format!("{} positive equilibria; simulation perturbs the first", eqs.len()));
    }
    rep.equilibria = eqs.into_iter().map(|eq| analyze_equilibrium(cfg, &p, eq, tau)).collect();
    if let Some(case) = published_case(&p) {
        if let Some(first) = rep.equilibria.first_mut() {
            first.published = Some(PublishedComparison::new(case, &first.eq, &first.candidates, first.normal_form.as_ref()));
        }
    }
    if cfg.sim.enabled {
        if let Some(first) = rep.equilibria.first() {
            match simulate(cfg, &p, tau, first) {
                Ok(Some((summary, tr, note))) => {
                    rep.simulation = Some(summary);
                    rep.notes.extend(note);
                    trajectories = tr;
                }
                Ok(None) => rep.notes.push("simulation skipped: no delay given and no Hopf point".into()),
                Err(e) => rep.errors.push(("simulation", e)),
            }
        }
    }
    log::info!("run {index} ({}) done", rep.label);
    (rep, trajectories)
}

/// Runs the full pipeline for every configured run. Runs execute on
/// `cfg.workers` threads; results keep configuration order.
pub fn run_analysis(cfg: &AnalysisConfig) -> Result<(AnalysisReport, Vec<RunTrajectories>), crate::config::ConfigError> {
    cfg.validate()?;
    let runs = cfg.runs()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| crate::config::ConfigError::Invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(RunReport, RunTrajectories)> = pool.install(|| {
        runs.into_par_iter()
            .enumerate()
            .map(|(i, (label, p, tau))| run_one(cfg, i, label, p, tau))
            .collect()
    });
    let (reports, trajectories) = results.into_iter().unzip();
    Ok((AnalysisReport { readings: cfg.readings, runs: reports }, trajectories))
}

/// One report value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Num(x) => format_f64(*x),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.replace('\n', " "),
        }
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Entries(Vec<(String, Value)>);

impl Entries {
    fn num(&mut self, k: impl Into<String>, v: f64) {
        self.0.push((k.into(), Value::Num(v)));
    }
    fn int(&mut self, k: impl Into<String>, v: i64) {
        self.0.push((k.into(), Value::Int(v)));
    }
    fn flag(&mut self, k: impl Into<String>, v: bool) {
        self.0.push((k.into(), Value::Bool(v)));
    }
    fn text(&mut self, k: impl Into<String>, v: impl Into<String>) {
        self.0.push((k.into(), Value::Text(v.into())));
    }
    fn complex(&mut self, k: &str, z: Complex64) {
        self.num(format!("{k}.re"), z.re);
        self.num(format!("{k}.im"), z.im);
    }
}

fn equilibrium_entries(out: &mut Entries, pre: &str, er: &EquilibriumReport) {
    let eq = &er.eq;
    for (k, v) in [
        ("x10", eq.x10),
        ("y10", eq.y10),
        ("x20", eq.x20),
        ("y20", eq.y20),
        ("rho1", eq.rho1),
        ("rho2", eq.rho2),
        ("rho3", eq.rho3),
    ] {
        out.num(format!("{pre}.{k}"), v);
    }
    out.flag(format!("{pre}.routh_hurwitz_stable"), er.routh_hurwitz_stable);
    out.int(format!("{pre}.unstable_roots_at_zero_delay"), er.unstable_at_zero as i64);
    let c = &er.coeffs;
    for (k, v) in [("b", c.b), ("c", c.c), ("d", c.d), ("g", c.g), ("h", c.h), ("l1", c.l1), ("l2", c.l2), ("l3", c.l3)] {
        out.num(format!("{pre}.char.{k}"), v);
    }
    out.int(format!("{pre}.candidates"), er.candidates.len() as i64);
    for (i, cand) in er.candidates.iter().enumerate() {
        let cp = format!("{pre}.candidate.{i}");
        out.num(format!("{cp}.omega"), cand.omega);
        out.int(format!("{cp}.k"), cand.k as i64);
        out.num(format!("{cp}.tau"), cand.tau);
        out.flag(format!("{cp}.simple"), cand.simple);
    }
    out.flag(format!("{pre}.hopf.found"), er.hopf.is_some());
    if let Some(hp) = &er.hopf {
        let hpre = format!("{pre}.hopf");
        out.num(format!("{hpre}.omega_c"), hp.omega_c);
        out.num(format!("{hpre}.tau_c"), hp.tau_c);
        out.int(format!("{hpre}.k"), hp.k as i64);
        out.num(format!("{hpre}.char_residual"), hp.residual(&er.coeffs));
        let g = er.coeffs.g_ratio(Complex64::new(0.0, hp.omega_c));
        out.num(format!("{hpre}.g_modulus_error"), (g.norm() - 1.0).abs());
        out.complex(&format!("{hpre}.dlambda_dtau"), hp.dlambda_dtau);
        out.complex(&format!("{hpre}.dlambda_dtau_closed_form"), hp.dlambda_dtau_closed_form);
        out.num(format!("{hpre}.closed_form_l1"), hp.aux_l1);
        out.num(format!("{hpre}.closed_form_l2"), hp.aux_l2);
        let gap = (hp.dlambda_dtau_closed_form - hp.dlambda_dtau).norm() / hp.dlambda_dtau.norm();
        out.flag(format!("{pre}.flags.transversality_closed_form_mismatch"), gap > CLOSED_FORM_TOL);
    }
    if let Some(ep) = &er.eigenpair {
        let epre = format!("{pre}.eigen");
        for i in 0..4 {
            out.complex(&format!("{epre}.v{}", i + 1), ep.v[i]);
        }
        for i in 0..4 {
            out.complex(&format!("{epre}.w{}", i + 1), ep.w[i]);
        }
        out.complex(&format!("{epre}.eta"), ep.eta);
        if let Some(pe) = er.printed_eta {
            out.complex(&format!("{epre}.eta_printed_form"), pe);
            out.flag(format!("{pre}.flags.printed_eta_mismatch"), (pe - ep.eta).norm() > 1e-6 * ep.eta.norm());
        }
    }
    if let Some(nf) = &er.normal_form {
        let npre = format!("{pre}.normal_form");
        for (k, z) in [("g20", nf.g20), ("g11", nf.g11), ("g02", nf.g02), ("g21", nf.g21), ("c1", nf.c1)] {
            out.complex(&format!("{npre}.{k}"), z);
        }
        for i in 0..4 {
            out.complex(&format!("{npre}.e1_{}", i + 1), nf.e1[i]);
        }
        for i in 0..4 {
            out.complex(&format!("{npre}.e2_{}", i + 1), nf.e2[i]);
        }
        out.num(format!("{npre}.mu2"), nf.mu2);
        out.num(format!("{npre}.beta2"), nf.beta2);
        out.num(format!("{npre}.t2"), nf.t2);
        let q = nf.quantities();
        out.text(format!("{npre}.direction"), q.direction().as_str());
        out.text(format!("{npre}.orbits"), q.orbit_stability().as_str());
        out.text(format!("{npre}.period"), q.period_trend().as_str());
    }
    if let Some(v) = er.verdict_at_tau {
        out.text(format!("{pre}.stability_at_tau"), v.as_str());
    }
    if let Some(pc) = &er.published {
        let rpre = format!("{pre}.published");
        out.int(format!("{rpre}.n"), pc.case.n as i64);
        out.num(format!("{rpre}.omega"), pc.case.omega);
        out.num(format!("{rpre}.tau"), pc.case.tau);
        out.num(format!("{rpre}.mu2"), pc.case.mu2);
        out.num(format!("{rpre}.beta2"), pc.case.beta2);
        out.num(format!("{rpre}.t2"), pc.case.t2);
        out.num(format!("{rpre}.equilibrium_max_rel_error"), pc.equilibrium_max_rel_error);
        out.flag(format!("{pre}.flags.published_branch_found"), pc.branch_index.is_some());
        if let Some(i) = pc.branch_index {
            out.int(format!("{rpre}.branch_candidate"), i as i64);
        }
        if let (Some(ms), Some(bs)) = (pc.mu2_sign_match, pc.beta2_sign_match) {
            out.flag(format!("{pre}.flags.published_mu2_sign_match"), ms);
            out.flag(format!("{pre}.flags.published_beta2_sign_match"), bs);
        }
        for (k, v) in [("mu2", pc.mu2_rel_error), ("beta2", pc.beta2_rel_error), ("t2", pc.t2_rel_error)] {
            if let Some(v) = v {
                out.num(format!("{rpre}.{k}_rel_error"), v);
                out.flag(format!("{pre}.flags.published_{k}_magnitude_mismatch"), v > 1e-2);
            }
        }
        out.flag(format!("{pre}.flags.published_t2_wording_inconsistent"), !pc.printed_t2_wording_consistent);
        if let Some(m) = pc.period_trend_match {
            out.flag(format!("{pre}.flags.published_period_trend_match"), m);
        }
    }
    for (stage, msg) in &er.errors {
        out.text(format!("{pre}.error.{stage}"), msg.clone());
    }
}

impl AnalysisReport {
    pub fn entries(&self) -> Vec<(String, Value)> {
        let mut out = Entries(Vec::new());
        out.int("format", 1);
        out.int("runs", self.runs.len() as i64);
        let r = &self.readings;
        out.flag("normal_form.literal_f4_11", r.literal_f4_11);
        out.flag("normal_form.literal_f4_02", r.literal_f4_02);
        out.flag("normal_form.literal_w4_20", r.literal_w4_20);
        out.flag("normal_form.literal_cubic_lags", r.literal_cubic_lags);
        for run in &self.runs {
            let pre = format!("run.{}", run.index);
            out.text(format!("{pre}.label"), run.label.clone());
            let p = &run.params;
            for (k, v) in [("a1", p.a1), ("a2", p.a2), ("a12", p.a12), ("a21", p.a21), ("b1", p.b1), ("b2", p.b2), ("a", p.a)] {
                out.num(format!("{pre}.params.{k}"), v);
            }
            out.int(format!("{pre}.params.n"), p.n as i64);
            if let Some(t) = run.tau {
                out.num(format!("{pre}.tau"), t);
            }
            out.int(format!("{pre}.equilibria"), run.equilibria.len() as i64);
            for (i, er) in run.equilibria.iter().enumerate() {
                equilibrium_entries(&mut out, &format!("{pre}.eq.{i}"), er);
            }
            if let Some(s) = &run.simulation {
                let spre = format!("{pre}.simulation");
                out.num(format!("{spre}.tau"), s.tau);
                out.num(format!("{spre}.step"), s.step);
                out.num(format!("{spre}.t_end"), s.t_end);
                out.int(format!("{spre}.samples"), s.samples as i64);
                out.num(format!("{spre}.perturbation"), s.perturbation);
                if let Some(per) = s.period {
                    out.num(format!("{spre}.period"), per);
                }
                out.num(format!("{spre}.amplitude_y1"), s.amplitude_y1);
                if let Some(a) = s.predicted_amplitude_y1 {
                    out.num(format!("{spre}.predicted_amplitude_y1"), a);
                }
                out.num(format!("{spre}.initial_distance"), s.initial_distance);
                out.num(format!("{spre}.final_distance"), s.final_distance);
                out.num(format!("{spre}.min_component"), s.min_component);
                out.flag(format!("{spre}.negative_concentrations"), s.min_component < 0.0);
            }
            for (i, note) in run.notes.iter().enumerate() {
                out.text(format!("{pre}.note.{i}"), note.clone());
            }
            for (stage, msg) in &run.errors {
                out.text(format!("{pre}.error.{stage}"), msg.clone());
            }
        }
        out.0
    }

    pub fn render(&self) -> String {
        let mut s = String::from("# p53-hopf analysis report\n");
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {}", v.render());
        }
        s
    }
}

/// Reads a rendered report back as ordered `(key, raw value)` pairs.
pub fn parse_report(text: &str) -> Result<Vec<(String, String)>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.split_once(" = ")
                .map(|(k, v)| (k.trim().to_string(), v.to_string()))
                .ok_or_else(|| format!("line {}: not a `key = value` line", i + 1))
        })
        .collect()
}

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct EmitError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

fn write_file(path: PathBuf, content: &str) -> Result<PathBuf, EmitError> {
    fs::write(&path, content).map_err(|source| EmitError { path: path.clone(), source })?;
    Ok(path)
}

fn sample_stride(len: usize, every: Option<usize>, max_rows: usize) -> usize {
    every.unwrap_or_else(|| len.div_ceil(max_rows.max(2)).max(1))
}

fn sampled_indices(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    let last = len.saturating_sub(1);
    (0..len).step_by(stride).chain((len > 0 && !last.is_multiple_of(stride)).then_some(last))
}

/// `t,x1,y1,x2,y2` rows.
pub fn trajectory_csv(tr: &Trajectory, stride: usize) -> String {
    let mut s = String::from("t,x1,y1,x2,y2\n");
    for i in sampled_indices(tr.len(), stride) {
        let st = tr.states[i];
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            format_f64(tr.times[i]),
            format_f64(st.x1),
            format_f64(st.y1),
            format_f64(st.x2),
            format_f64(st.y2)
        );
    }
    s
}

/// `y1,y2` rows.
pub fn phase_csv(tr: &Trajectory, stride: usize) -> String {
    let mut s = String::from("y1,y2\n");
    for i in sampled_indices(tr.len(), stride) {
        let _ = writeln!(s, "{},{}", format_f64(tr.states[i].y1), format_f64(tr.states[i].y2));
    }
    s
}

/// Writes `report.txt` plus trajectory and phase CSVs per run into
/// `outdir`, returning the written paths.
pub fn emit_outputs(
    report: &AnalysisReport,
    trajectories: &[RunTrajectories],
    outdir: &Path,
    every: Option<usize>,
    max_rows: usize,
) -> Result<Vec<PathBuf>, EmitError> {
    fs::create_dir_all(outdir).map_err(|source| EmitError { path: outdir.to_path_buf(), source })?;
    let mut written = vec![write_file(outdir.join("report.txt"), &report.render())?];
    for (run, tr) in report.runs.iter().zip(trajectories) {
        let stem = format!("run_{:03}", run.index);
        for (suffix, traj) in [("", &tr.simulation), ("_manifold", &tr.manifold)] {
            if let Some(traj) = traj {
                let stride = sample_stride(traj.len(), every, max_rows);
                written.push(write_file(outdir.join(format!("{stem}{suffix}_trajectory.csv")), &trajectory_csv(traj, stride))?);
                written.push(write_file(outdir.join(format!("{stem}{suffix}_phase.csv")), &phase_csv(traj, stride))?);
            }
        }
    }
    Ok(written)
}
