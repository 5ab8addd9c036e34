//! The pressure-correction time step and the time loop.
//!
//! One step, given `(u^{n−1}, p^{n−1}, q^{n−1})`:
//! 1. momentum: `(I + τC(u^{n−1}) + (τμ + τ²γ)A) ũ = u^{n−1} + τBᵀp^{n−1} + τf^n − τ e^{−ητ} A q^{n−1}`
//! 2. memory: `q^n = e^{−ητ} q^{n−1} + τγ ũ`
//! 3. potential: `A_sip v = −Bũ/τ` with `∫v = 0`
//! 4. pressure: `p^n = p^{n−1} + v − δμ Bũ − δ B q^n`
//! 5. velocity: `u^n = ũ + τ Bᵀ v`
//!
//! Mass matrices are identities in the orthonormal bases, which is why the
//! last two stages are plain vector updates.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::{
    assemble_pressure_coupling, assemble_pressure_poisson, componentwise_bilinear, convection_block,
    diffusion_block, merge_components, split_components, velocity_energy_block, FormContext, FormParams,
};
use crate::linalg::{gmres, GmresOptions, LuSolver, SolveReport, SparseMatrix, ZeroMeanSolver};
use crate::memory::{KernelParams, MemoryAccumulator};
use crate::mesh::{Point, TriMesh};
use crate::space::{project_vector, DgSpace, FieldVec};

/// Spatial dimension entering the δ bound.
const DIM: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumSolver {
    /// sparse LU, symbolic analysis reused across steps
    Direct,
    /// Jacobi-preconditioned GMRES started from `u^{n−1}`
    Gmres,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub mu: f64,
    pub kernel: KernelParams,
    pub delta: f64,
    pub tau: f64,
    pub t_final: f64,
    pub forms: FormParams,
    /// relative residual required from every linear solve
    pub tol: f64,
    pub solver: MomentumSolver,
    /// skip the δ bound check
    pub allow_large_delta: bool,
}

impl SchemeParams {
    /// Largest admissible δ: `min(ω/(8d), ωμ²/(16γ²d))`.
    pub fn delta_bound(mu: f64, gamma: f64, omega: f64) -> f64 {
        let first = omega / (8.0 * DIM);
        if gamma == 0.0 {
            return first;
        }
        first.min(omega * mu * mu / (16.0 * gamma * gamma * DIM))
    }

    /// Parameters with δ at its bound.
    pub fn new(mu: f64, kernel: KernelParams, tau: f64, t_final: f64, forms: FormParams) -> Result<Self> {
        let p = Self {
            mu,
            kernel,
            delta: Self::delta_bound(mu, kernel.gamma, forms.omega()),
            tau,
            t_final,
            forms,
            tol: crate::linalg::DEFAULT_TOL,
            solver: MomentumSolver::Direct,
            allow_large_delta: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.forms.validate()?;
        self.kernel.validate()?;
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Constraint(format!("mu = {} must be positive", self.mu)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Constraint(format!("tol = {} must be positive", self.tol)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Constraint(format!("delta = {} must be non-negative", self.delta)));
        }
        let bound = Self::delta_bound(self.mu, self.kernel.gamma, self.forms.omega());
        if !self.allow_large_delta && self.delta > bound * (1.0 + 1e-12) {
            return Err(Error::Constraint(format!(
                "delta = {} exceeds min(ω/(8d), ωμ²/(16γ²d)) = {bound} (ω = {}, μ = {}, γ = {}, d = 2)",
                self.delta,
                self.forms.omega(),
                self.mu,
                self.kernel.gamma
            )));
        }
        self.n_steps().map(|_| ())
    }

    /// `N = T/τ`, which must be a positive integer.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.tau > 0.0 && self.t_final > 0.0) {
            return Err(Error::Constraint(format!("tau = {} and T = {} must be positive", self.tau, self.t_final)));
        }
        let n = self.t_final / self.tau;
        let k = n.round();
        if k < 1.0 || (n - k).abs() > 1e-9 * k {
            return Err(Error::Constraint(format!("T/tau = {n} is not a positive integer")));
        }
        Ok(k as usize)
    }
}

#[derive(Debug, Clone)]
pub struct SchemeState {
    pub n: usize,
    pub u: FieldVec,
    pub p: FieldVec,
    pub acc: MemoryAccumulator,
    pub v: FieldVec,
    pub u_tilde: FieldVec,
}

impl SchemeState {
    pub fn time(&self) -> f64 {
        self.n as f64 * self.acc.tau()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub u_l2: f64,
    pub u_tilde_dg: f64,
    pub p_mean: f64,
    pub momentum: SolveReport,
    pub projection: SolveReport,
}

pub fn diagnostics_csv(rows: &[StepDiagnostics]) -> String {
    let mut out = String::from("step,time,u_l2,u_tilde_dg,p_mean,momentum_residual,momentum_iterations\n");
    for d in rows {
        let _ = writeln!(
            out,
            "{},{:.6e},{:.12e},{:.12e},{:.6e},{:.3e},{}",
            d.step,
            d.time,
            d.u_l2,
            d.u_tilde_dg,
            d.p_mean,
            d.momentum.residual,
            d.momentum.iterations()
        );
    }
    out
}

/// Right-hand side of the momentum equation as a function of `(x, t)`.
pub type Forcing<'a> = &'a (dyn Fn(Point, f64) -> [f64; 2] + Sync);

/// Discretization plus every time-independent operator of the scheme.
pub struct Scheme {
    params: SchemeParams,
    vel: FormContext,
    pres: FormContext,
    /// scalar block of `A_ε`
    a_eps: SparseMatrix,
    /// scalar block of `I + (τμ + τ²γ)A_ε`
    base: SparseMatrix,
    /// velocity energy block for `‖·‖_dG`
    energy: SparseMatrix,
    b: SparseMatrix,
    bt: SparseMatrix,
    sip: ZeroMeanSolver,
    mean: Vec<f64>,
    lu: LuSolver,
}

impl Scheme {
    /// Velocity degree `r`, pressure degree `r − 1`.
    pub fn new(mesh: Arc<TriMesh>, r: usize, params: SchemeParams) -> Result<Self> {
        params.validate()?;
        if r == 0 {
            return Err(Error::UnsupportedDegree(0));
        }
        let vs = DgSpace::vector(Arc::clone(&mesh), r)?;
        let ps = DgSpace::scalar(mesh, r - 1)?;
        let ex = vs.form_exactness();
        let vel = FormContext::new(&vs, ex)?;
        let pres = FormContext::new(&ps, ex)?;
        let a_eps = diffusion_block(&vel, &params.forms)?;
        let shift = params.tau * params.mu + params.tau * params.tau * params.kernel.gamma;
        let mut scaled = a_eps.clone();
        scaled.scale(shift);
        let base = identity_like(&a_eps).add_scaled(1.0, &scaled)?;
        let energy = velocity_energy_block(&vel, &params.forms);
        let b = assemble_pressure_coupling(&vel, &pres)?.matrix;
        let bt = b.transpose();
        let sip_matrix = assemble_pressure_poisson(&pres, &params.forms)?.matrix;
        let mean = ps.mean_functional()?;
        let sip = ZeroMeanSolver::new(&sip_matrix, &mean)?;
        Ok(Self { params, vel, pres, a_eps, base, energy, b, bt, sip, mean, lu: LuSolver::new() })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn velocity_space(&self) -> &Arc<DgSpace> {
        self.vel.space()
    }

    pub fn pressure_space(&self) -> &Arc<DgSpace> {
        self.pres.space()
    }

    pub fn velocity_context(&self) -> &FormContext {
        &self.vel
    }

    pub fn pressure_context(&self) -> &FormContext {
        &self.pres
    }

    pub fn coupling(&self) -> &SparseMatrix {
        &self.b
    }

    pub fn diffusion(&self) -> &SparseMatrix {
        &self.a_eps
    }

    /// `u^0` = local L² projection of `u0`, `p^0 = v^0 = 0`.
    pub fn initialize(&self, u0: impl Fn(Point) -> [f64; 2]) -> Result<SchemeState> {
        let u = project_vector(self.vel.space(), u0)?;
        let acc = MemoryAccumulator::new(self.params.kernel, self.params.tau, u.coeffs().len())?;
        Ok(SchemeState {
            n: 0,
            u_tilde: u.clone(),
            u,
            p: self.pres.space().zeros(),
            v: self.pres.space().zeros(),
            acc,
        })
    }

    pub fn dg_norm(&self, w: &FieldVec) -> f64 {
        componentwise_bilinear(&self.energy, self.vel.n_basis(), w.coeffs(), w.coeffs()).max(0.0).sqrt()
    }

    fn apply_componentwise(&self, m: &SparseMatrix, x: &[f64]) -> Vec<f64> {
        let nb = self.vel.n_basis();
        let parts: Vec<Vec<f64>> = split_components(x, nb, 2).iter().map(|c| m.mul_vec(c)).collect();
        merge_components(&parts, nb)
    }

    /// Scalar momentum matrix and the full right-hand side for step `n`.
    pub fn momentum_system(&self, state: &SchemeState, forcing: &FieldVec) -> Result<(SparseMatrix, Vec<f64>)> {
        let tau = self.params.tau;
        let conv = convection_block(&self.vel, &state.u, &state.u)?;
        let matrix = self.base.add_scaled(tau, &conv)?;
        let (history, _) = state.acc.history_rhs_and_matrix_shift();
        let hist = self.apply_componentwise(&self.a_eps, &history);
        let bp = self.bt.mul_vec(state.p.coeffs());
        let rhs = state
            .u
            .coeffs()
            .iter()
            .zip(&bp)
            .zip(forcing.coeffs())
            .zip(&hist)
            .map(|(((u, bp), f), h)| u + tau * bp + tau * f - tau * h)
            .collect();
        Ok((matrix, rhs))
    }

    pub fn momentum_solve(&mut self, state: &SchemeState, forcing: &FieldVec) -> Result<(FieldVec, SolveReport)> {
        let (matrix, rhs) = self.momentum_system(state, forcing)?;
        let nb = self.vel.n_basis();
        let parts = split_components(&rhs, nb, 2);
        let tol = self.params.tol;
        let (sol, report) = match self.params.solver {
            MomentumSolver::Direct => {
                let f = self.lu.factor(&matrix)?;
                let mut sols = Vec::with_capacity(2);
                let mut worst: Option<SolveReport> = None;
                for b in &parts {
                    let (x, rep) = f.solve(b, tol)?;
                    if worst.is_none_or(|w| rep.residual > w.residual) {
                        worst = Some(rep);
                    }
                    sols.push(x);
                }
                (sols, worst.expect("two components"))
            }
            MomentumSolver::Gmres => {
                let guess = split_components(state.u.coeffs(), nb, 2);
                let mut sols = Vec::with_capacity(2);
                let mut total = 0;
                let mut worst = 0.0f64;
                let mut time = std::time::Duration::ZERO;
                for (b, g) in parts.iter().zip(&guess) {
                    let opts = GmresOptions { tol, ..GmresOptions::default() };
                    let (x, rep) = gmres(&matrix, b, Some(g), opts)?;
                    total += rep.iterations();
                    worst = worst.max(rep.residual);
                    time += rep.wall_time;
                    sols.push(x);
                }
                (
                    sols,
                    SolveReport {
                        method: crate::linalg::SolveMethod::Iterative { iterations: total },
                        residual: worst,
                        wall_time: time,
                    },
                )
            }
        };
        Ok((self.vel.space().field(merge_components(&sol, nb))?, report))
    }

    /// `v ∈ P_h⁰` with `A_sip v = −Bũ/τ`.
    pub fn projection_solve(&self, u_tilde: &FieldVec) -> Result<(FieldVec, SolveReport)> {
        let rhs: Vec<f64> = self.b.mul_vec(u_tilde.coeffs()).iter().map(|x| -x / self.params.tau).collect();
        let (v, rep) = self.sip.solve(&rhs, self.params.tol)?;
        Ok((self.pres.space().field(v)?, rep))
    }

    /// Needs the accumulator to hold `ũ^n` already.
    pub fn pressure_update(&self, state: &SchemeState, u_tilde: &FieldVec, v: &FieldVec) -> Result<FieldVec> {
        let (mu, delta) = (self.params.mu, self.params.delta);
        let bu = self.b.mul_vec(u_tilde.coeffs());
        let bq = self.b.mul_vec(state.acc.q());
        let p = state
            .p
            .coeffs()
            .iter()
            .zip(v.coeffs())
            .zip(bu.iter().zip(&bq))
            .map(|((p, v), (bu, bq))| p + v - delta * mu * bu - delta * bq)
            .collect();
        self.pres.space().field(p)
    }

    pub fn velocity_correct(&self, u_tilde: &FieldVec, v: &FieldVec) -> Result<FieldVec> {
        let btv = self.bt.mul_vec(v.coeffs());
        let tau = self.params.tau;
        self.vel.space().field(u_tilde.coeffs().iter().zip(&btv).map(|(u, b)| u + tau * b).collect())
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &mut SchemeState, forcing: Forcing) -> Result<StepDiagnostics> {
        let n = state.n + 1;
        let t = n as f64 * self.params.tau;
        let run = |this: &mut Self, state: &mut SchemeState| -> Result<StepDiagnostics> {
            let f = project_vector(this.vel.space(), |x| forcing(x, t))?;
            let (u_tilde, momentum) = this.momentum_solve(state, &f)?;
            state.acc.push(u_tilde.coeffs())?;
            let (v, projection) = this.projection_solve(&u_tilde)?;
            let p = this.pressure_update(state, &u_tilde, &v)?;
            let u = this.velocity_correct(&u_tilde, &v)?;
            let p_mean = p.coeffs().iter().zip(&this.mean).map(|(a, b)| a * b).sum();
            let diag = StepDiagnostics {
                step: n,
                time: t,
                u_l2: u.l2_norm(),
                u_tilde_dg: this.dg_norm(&u_tilde),
                p_mean,
                momentum,
                projection,
            };
            state.n = n;
            state.u = u;
            state.p = p;
            state.v = v;
            state.u_tilde = u_tilde;
            Ok(diag)
        };
        run(self, state).map_err(|e| Error::Step { step: n, source: Box::new(e) })
    }

    /// Runs all `N = T/τ` steps.
    pub fn run(&mut self, state: &mut SchemeState, forcing: Forcing) -> Result<Vec<StepDiagnostics>> {
        let steps = self.params.n_steps()?;
        let mut out = Vec::with_capacity(steps);
        while state.n < steps {
            out.push(self.step(state, forcing)?);
        }
        Ok(out)
    }
}

/// Identity on the pattern of `m` (which must contain the diagonal).
fn identity_like(m: &SparseMatrix) -> SparseMatrix {
    let values = (0..m.n_rows())
        .flat_map(|i| m.row(i).map(move |(j, _)| if i == j { 1.0 } else { 0.0 }))
        .collect();
    SparseMatrix::from_raw_parts(m.n_rows(), m.n_cols(), m.row_ptr().to_vec(), m.col_idx().to_vec(), values)
        .expect("pattern copied from a valid matrix")
}

/// `‖u^m‖² + (ωμ/2) τ Σ_{n≤m} ‖ũ^n‖²_dG` for every `m`, starting at `m = 0`.
pub fn discrete_energy(u0_l2: f64, params: &SchemeParams, diags: &[StepDiagnostics]) -> Vec<f64> {
    let c = 0.5 * params.forms.omega() * params.mu * params.tau;
    let mut sum = 0.0;
    let mut out = vec![u0_l2 * u0_l2];
    for d in diags {
        sum += c * d.u_tilde_dg * d.u_tilde_dg;
        out.push(d.u_l2 * d.u_l2 + sum);
    }
    out
}
