//! Convergence studies against the manufactured solution.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::mms::{error_norms, rate, ErrorNorms, ExactSolution};
use crate::space::{project_scalar, project_vector};
use crate::stepper::{Scheme, SchemeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    Space,
    Time,
}

impl StudyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StudyMode::Space => "space",
            StudyMode::Time => "time",
        }
    }
}

/// A ladder of `(n, τ)` pairs; exactly one of the two halves per rung.
#[derive(Debug, Clone)]
pub struct StudySpec {
    pub mode: StudyMode,
    pub r: usize,
    pub rungs: Vec<(usize, f64)>,
    /// everything except `tau`, which each rung overrides
    pub params: SchemeParams,
}

impl StudySpec {
    pub fn space(r: usize, ns: &[usize], tau: f64, params: SchemeParams) -> Self {
        Self { mode: StudyMode::Space, r, rungs: ns.iter().map(|&n| (n, tau)).collect(), params }
    }

    pub fn time(r: usize, n: usize, taus: &[f64], params: SchemeParams) -> Self {
        Self { mode: StudyMode::Time, r, rungs: taus.iter().map(|&t| (n, t)).collect(), params }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rungs.len() < 3 {
            return Err(Error::Config(format!("a ladder needs at least 3 rungs, got {}", self.rungs.len())));
        }
        for w in self.rungs.windows(2) {
            let ((n0, t0), (n1, t1)) = (w[0], w[1]);
            let ok = match self.mode {
                StudyMode::Space => n1 == 2 * n0 && t0 == t1,
                StudyMode::Time => n0 == n1 && (t0 - 2.0 * t1).abs() <= 1e-14 * t0,
            };
            if !ok {
                return Err(Error::Config(format!(
                    "{} ladder must halve at every rung: ({n0}, {t0}) -> ({n1}, {t1})",
                    self.mode.as_str()
                )));
            }
        }
        for &(_, tau) in &self.rungs {
            SchemeParams { tau, ..self.params }.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n: usize,
    /// length of the axis-aligned faces, `1/n`
    pub h: f64,
    pub tau: f64,
    pub errors: ErrorNorms,
    /// against the previous row
    pub rates: Option<[f64; 3]>,
    /// projection error of the exact solution at `T` on this mesh
    pub floor: ErrorNorms,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub mode: StudyMode,
    pub r: usize,
    pub rows: Vec<ConvergenceRow>,
    /// rungs dropped because the spatial floor exceeded 10% of the error
    pub truncated: usize,
    /// first failed rung and its error; rows before it are still valid
    pub failure: Option<(usize, String)>,
}

/// Spatial floor above this share of the total error marks a time rung as
/// contaminated.
pub const FLOOR_SHARE: f64 = 0.1;

/// Final-time errors of one MMS run.
pub fn run_mms(n: usize, r: usize, params: SchemeParams) -> Result<ErrorNorms> {
    let exact = ExactSolution::new(params.mu, params.kernel);
    let mut scheme = Scheme::new(Arc::new(TriMesh::uniform(n)?), r, params)?;
    let mut state = scheme.initialize(|x| exact.velocity(x, 0.0))?;
    scheme.run(&mut state, &|x, t| exact.forcing(x, t))?;
    error_norms(&exact, &state.u, &state.p, state.time(), &params.forms)
}

/// Errors of the local L² projections of the exact solution at `T`.
pub fn projection_floor(n: usize, r: usize, params: &SchemeParams) -> Result<ErrorNorms> {
    let exact = ExactSolution::new(params.mu, params.kernel);
    let mesh = Arc::new(TriMesh::uniform(n)?);
    let vs = crate::space::DgSpace::vector(Arc::clone(&mesh), r)?;
    let ps = crate::space::DgSpace::scalar(mesh, r - 1)?;
    let t = params.t_final;
    let u = project_vector(&vs, |x| exact.velocity(x, t))?;
    let p = project_scalar(&ps, |x| exact.pressure(x, t))?;
    error_norms(&exact, &u, &p, t, &params.forms)
}

/// Runs all rungs in parallel; rows come back in ladder order.
pub fn convergence_study(spec: &StudySpec) -> Result<StudyReport> {
    spec.validate()?;
    let results: Vec<Result<(ErrorNorms, ErrorNorms)>> = spec
        .rungs
        .par_iter()
        .map(|&(n, tau)| {
            let p = SchemeParams { tau, ..spec.params };
            Ok((run_mms(n, spec.r, p)?, projection_floor(n, spec.r, &p)?))
        })
        .collect();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut failure = None;
    for (i, (res, &(n, tau))) in results.into_iter().zip(&spec.rungs).enumerate() {
        match res {
            Ok((errors, floor)) => {
                let rates = rows.last().map(|prev: &ConvergenceRow| {
                    [
                        rate(prev.errors.u_l2, errors.u_l2),
                        rate(prev.errors.u_dg, errors.u_dg),
                        rate(prev.errors.p_l2, errors.p_l2),
                    ]
                });
                rows.push(ConvergenceRow { n, h: 1.0 / n as f64, tau, errors, rates, floor });
            }
            Err(e) => {
                failure = Some((i, e.to_string()));
                break;
            }
        }
    }
    let mut truncated = 0;
    if spec.mode == StudyMode::Time {
        let clean = rows
            .iter()
            .position(|r| r.floor.u_l2 > FLOOR_SHARE * r.errors.u_l2 || r.floor.p_l2 > FLOOR_SHARE * r.errors.p_l2)
            .unwrap_or(rows.len());
        truncated = rows.len() - clean;
        rows.truncate(clean);
    }
    Ok(StudyReport { mode: spec.mode, r: spec.r, rows, truncated, failure })
}

impl StudyReport {
    pub fn final_rates(&self) -> Option<[f64; 3]> {
        self.rows.last().and_then(|r| r.rates)
    }

    /// True when the last rate of every quantity is within 0.25 of the one
    /// before it.
    pub fn is_asymptotic(&self) -> bool {
        let rates: Vec<[f64; 3]> = self.rows.iter().filter_map(|r| r.rates).collect();
        match rates.as_slice() {
            [.., a, b] => (0..3).all(|k| (a[k] - b[k]).abs() <= 0.25),
            _ => false,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,r,h,tau,err_u_l2,err_u_dg,err_p_l2,rate_u_l2,rate_u_dg,rate_p_l2\n");
        for row in &self.rows {
            let e = &row.errors;
            let _ = write!(
                out,
                "{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
                self.mode.as_str(),
                self.r,
                row.h,
                row.tau,
                e.u_l2,
                e.u_dg,
                e.p_l2
            );
            match row.rates {
                Some(r) => {
                    let _ = writeln!(out, ",{:.4},{:.4},{:.4}", r[0], r[1], r[2]);
                }
                None => out.push_str(",,,\n"),
            }
        }
        out
    }

    /// Plain-text table with one error/rate column pair per quantity.
    pub fn to_table(&self) -> String {
        let res = match self.mode {
            StudyMode::Space => "h_F",
            StudyMode::Time => "tau",
        };
        let mut out = format!(
            "{:>2}  {:>9}  {:>10}  {:>6}  {:>10}  {:>6}  {:>10}  {:>6}\n",
            "r", res, "|u-u_h|", "rate", "|u-u_h|_dG", "rate", "|p-p_h|", "rate"
        );
        for (i, row) in self.rows.iter().enumerate() {
            let rv = match self.mode {
                StudyMode::Space => row.h,
                StudyMode::Time => row.tau,
            };
            let label = if i == 0 { self.r.to_string() } else { String::new() };
            let rate = |k: usize| row.rates.map_or("--".to_string(), |r| format!("{:.3}", r[k]));
            let e = &row.errors;
            let _ = writeln!(
                out,
                "{:>2}  1/{:<7}  {:>10.3e}  {:>6}  {:>10.3e}  {:>6}  {:>10.3e}  {:>6}",
                label,
                (1.0 / rv).round() as u64,
                e.u_l2,
                rate(0),
                e.u_dg,
                rate(1),
                e.p_l2,
                rate(2)
            );
        }
        if self.truncated > 0 {
            let _ = writeln!(out, "({} rung(s) dropped: spatial floor above 10% of the error)", self.truncated);
        }
        if let Some((i, e)) = &self.failure {
            let _ = writeln!(out, "(rung {i} failed: {e})");
        }
        out
    }
}
