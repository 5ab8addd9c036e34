//! Executes a [`RunConfig`] and renders its outputs as text.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::config::{Mode, Problem, RunConfig};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::mms::{error_norms, ExactSolution};
use crate::stepper::{diagnostics_csv, discrete_energy, Scheme};
use crate::study::{convergence_study, StudySpec};
use crate::verify::verify_forms;

/// Largest admitted `|∫p|` at any step.
pub const MEAN_TOL: f64 = 1e-9;

/// Mesh used by `verify-forms`.
const VERIFY_MESH: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    /// a solve failed; the outputs hold everything computed before it
    SolverFailure(String),
    /// the run finished but a checked property did not hold
    AssertionFailure(String),
}

#[derive(Debug, Clone)]
pub struct Output {
    /// config echo followed by the CSV body
    pub csv: String,
    /// human-readable summary
    pub text: String,
    pub outcome: Outcome,
}

pub fn execute(cfg: &RunConfig) -> Result<Output> {
    let (body, text, outcome) = match cfg.mode {
        Mode::Run => run(cfg)?,
        Mode::StudySpace | Mode::StudyTime => study(cfg)?,
        Mode::VerifyForms => {
            let rep = verify_forms(cfg.seed, cfg.samples, VERIFY_MESH)?;
            let outcome = if rep.all_passed() {
                Outcome::Success
            } else {
                let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
                Outcome::AssertionFailure(format!("invariants failed: {}", failed.join(", ")))
            };
            (rep.to_csv(), rep.to_text(), outcome)
        }
    };
    Ok(Output { csv: format!("{}{body}", cfg.echo()), text, outcome })
}

fn run(cfg: &RunConfig) -> Result<(String, String, Outcome)> {
    let params = cfg.scheme_params(cfg.tau)?;
    let exact = ExactSolution::new(cfg.mu, params.kernel);
    let mut scheme = Scheme::new(Arc::new(TriMesh::uniform(cfg.n)?), cfg.r, params)?;
    let mut state = match cfg.problem {
        Problem::Zero => scheme.initialize(|_| [0.0, 0.0])?,
        Problem::Mms | Problem::Decay => scheme.initialize(|x| exact.velocity(x, 0.0))?,
    };
    let u0 = state.u.l2_norm();
    let mms = |x, t| exact.forcing(x, t);
    let zero = |_, _| [0.0, 0.0];
    let forcing: crate::stepper::Forcing = match cfg.problem {
        Problem::Mms => &mms,
        Problem::Zero | Problem::Decay => &zero,
    };
    let steps = params.n_steps()?;
    let mut diags = Vec::with_capacity(steps);
    let mut failure = None;
    while state.n < steps {
        match scheme.step(&mut state, forcing) {
            Ok(d) => diags.push(d),
            Err(e) if e.category() == crate::error::ErrorCategory::Solver => {
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut text = String::new();
    let _ = writeln!(text, "steps: {} of {steps}, t = {}", diags.len(), state.time());
    let worst_mean = diags.iter().map(|d| d.p_mean.abs()).fold(0.0, f64::max);
    let _ = writeln!(text, "max |mean(p)|: {worst_mean:.3e}");
    let _ = writeln!(text, "final |u|: {:.6e}", state.u.l2_norm());
    match cfg.problem {
        Problem::Mms => {
            let e = error_norms(&exact, &state.u, &state.p, state.time(), &cfg.forms)?;
            let _ = writeln!(text, "errors at t = {}: u {:.6e}  u_dG {:.6e}  p {:.6e}", state.time(), e.u_l2, e.u_dg, e.p_l2);
        }
        Problem::Decay => {
            let energy = discrete_energy(u0, &params, &diags);
            let peak = energy.iter().fold(0.0f64, |m, v| m.max(*v));
            let ratio = if energy[0] > 0.0 { peak / energy[0] } else { 0.0 };
            let _ = writeln!(text, "energy: initial {:.6e}, peak/initial {ratio:.6}", energy[0]);
        }
        Problem::Zero => {}
    }
    let outcome = match failure {
        Some(f) => Outcome::SolverFailure(f),
        None if worst_mean > MEAN_TOL => {
            Outcome::AssertionFailure(format!("pressure mean {worst_mean:e} exceeds {MEAN_TOL:e}"))
        }
        None => Outcome::Success,
    };
    Ok((diagnostics_csv(&diags), text, outcome))
}

fn study(cfg: &RunConfig) -> Result<(String, String, Outcome)> {
    let spec = match cfg.mode {
        Mode::StudySpace => StudySpec::space(cfg.r, &cfg.n_ladder, cfg.tau, cfg.scheme_params(cfg.tau)?),
        Mode::StudyTime => {
            let first = *cfg.tau_ladder.first().ok_or_else(|| Error::Config("empty tau-ladder".into()))?;
            StudySpec::time(cfg.r, cfg.n, &cfg.tau_ladder, cfg.scheme_params(first)?)
        }
        _ => unreachable!("study modes only"),
    };
    let rep = convergence_study(&spec)?;
    let mut text = rep.to_table();
    if rep.rows.len() >= 3 && !rep.is_asymptotic() {
        text.push_str("(last two rates differ by more than 0.25: ladder may be pre-asymptotic)\n");
    }
    let outcome = match &rep.failure {
        Some((i, e)) => Outcome::SolverFailure(format!("rung {i}: {e}")),
        None => Outcome::Success,
    };
    Ok((rep.to_csv(), text, outcome))
}
