//! Shared fixtures for the benchmarks in `benches/`.

use std::sync::Arc;

use oldroyd_dg::{
    DgSpace, ExactSolution, FieldVec, FormContext, FormParams, KernelParams, Result, Scheme, SchemeParams,
    SchemeState, TriMesh,
};

pub const KERNEL: KernelParams = KernelParams { gamma: 0.1, eta: 0.1 };

/// Velocity form context on an `n × n` mesh together with the projected
/// manufactured velocity at `t = 0.5`.
pub fn velocity_fixture(n: usize, r: usize) -> Result<(FormContext, FieldVec)> {
    let space = DgSpace::vector(Arc::new(TriMesh::uniform(n)?), r)?;
    let ctx = FormContext::for_space(&space)?;
    let exact = ExactSolution::new(1.0, KERNEL);
    let u = oldroyd_dg::space::project_vector(&space, |x| exact.velocity(x, 0.5))?;
    Ok((ctx, u))
}

/// A scheme and its initial state for the manufactured problem.
pub fn scheme_fixture(n: usize, r: usize, tau: f64) -> Result<(Scheme, SchemeState)> {
    let params = SchemeParams::new(1.0, KERNEL, tau, 1.0, FormParams::defaults_for(r))?;
    let scheme = Scheme::new(Arc::new(TriMesh::uniform(n)?), r, params)?;
    let exact = ExactSolution::new(1.0, KERNEL);
    let state = scheme.initialize(|x| exact.velocity(x, 0.0))?;
    Ok((scheme, state))
}
