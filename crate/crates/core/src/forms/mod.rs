//! Bilinear and trilinear dG forms.
//!
//! Conventions on a face `F` with unit normal `n_F` pointing from its first
//! element to its second: `[v] = v¹ − v²` and `{v} = (v¹ + v²)/2`. On a
//! boundary face both reduce to the single trace. All velocity operators act
//! componentwise, so they are assembled once as a scalar block.

mod assembly;
mod convection;
mod coupling;
mod diffusion;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

pub use assembly::{ElementQuad, FormContext};
pub use convection::{apply_convection, convection_block, ConvectionParts};
pub use coupling::{
    assemble_pressure_coupling, assemble_pressure_coupling_gradient_form, broken_divergence, broken_gradient,
    Lifts,
};
pub use diffusion::{
    assemble_diffusion, assemble_pressure_poisson, componentwise_bilinear, dg_norm, dg_seminorm, diffusion_block,
    merge_components, pressure_energy_matrix, split_components, velocity_energy_block,
};

/// Penalty and symmetry parameters of the elliptic forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormParams {
    pub sigma_int: f64,
    pub sigma_bnd: f64,
    pub sigma_tilde: f64,
    /// `-1` symmetric, `0` incomplete, `1` non-symmetric interior penalty
    pub epsilon: i32,
}

impl FormParams {
    pub fn new(sigma_int: f64, sigma_bnd: f64, sigma_tilde: f64, epsilon: i32) -> Result<Self> {
        let p = Self { sigma_int, sigma_bnd, sigma_tilde, epsilon };
        p.validate()?;
        Ok(p)
    }

    /// Penalties large enough for coercivity on the uniform meshes used here:
    /// σ = 6/12 (interior/boundary) for r = 1, 8/16 for r = 2, σ̃ = 10, ε = −1.
    pub fn defaults_for(degree: usize) -> Self {
        let s = 2.0 * degree as f64 + 4.0;
        Self { sigma_int: s, sigma_bnd: 2.0 * s, sigma_tilde: 10.0, epsilon: -1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.epsilon, -1..=1) {
            return Err(Error::Constraint(format!("epsilon = {} but ε ∈ {{-1,0,1}}", self.epsilon)));
        }
        for (name, v) in [("sigma_int", self.sigma_int), ("sigma_bnd", self.sigma_bnd), ("sigma_tilde", self.sigma_tilde)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Constraint(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Coercivity constant of `A_ε`: 1 for ε = 1, 1/2 otherwise.
    pub fn omega(&self) -> f64 {
        if self.epsilon == 1 {
            1.0
        } else {
            0.5
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Diffusion { epsilon: i32 },
    PressureCoupling,
    PressurePoisson,
    Convection,
}

impl FormKind {
    pub fn name(&self) -> &'static str {
        match self {
            FormKind::Diffusion { epsilon: -1 } => "diffusion-sipg",
            FormKind::Diffusion { .. } => "diffusion",
            FormKind::PressureCoupling => "pressure-coupling",
            FormKind::PressurePoisson => "pressure-poisson",
            FormKind::Convection => "convection",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssembledForm {
    pub kind: FormKind,
    pub matrix: SparseMatrix,
}

impl AssembledForm {
    /// Coordinate text with the form name in the header.
    pub fn export(&self) -> String {
        format!("% {}\n{}", self.kind.name(), self.matrix.to_coordinate_text())
    }
}

#[cfg(test)]
mod tests;
