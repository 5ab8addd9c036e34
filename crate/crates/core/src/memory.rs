//! Exponential memory kernel `β(t) = γ e^{−ηt}` and the right-rectangle
//! approximation of the Volterra term.
//!
//! With a uniform step the sum `q^n = τ Σ_{j≤n} β(t_n − t_j) φ^j` satisfies
//! `q^n = e^{−ητ} q^{n−1} + τ β(0) φ^n`, so the history never has to be
//! stored.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub gamma: f64,
    pub eta: f64,
}

impl KernelParams {
    pub fn new(gamma: f64, eta: f64) -> Result<Self> {
        let k = Self { gamma, eta };
        k.validate()?;
        Ok(k)
    }

    /// γ = 0 is allowed and switches the memory term off.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Constraint(format!("gamma = {} must be non-negative", self.gamma)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Constraint(format!("eta = {} must be positive", self.eta)));
        }
        Ok(())
    }

    pub fn beta(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.gamma * (-self.eta * t).exp())
    }

    /// `∫_0^t β(t − s)(s + 1) ds` in closed form.
    pub fn linear_history_integral(&self, t: f64) -> f64 {
        let (g, e) = (self.gamma, self.eta);
        let decay = (-e * t).exp();
        g * ((t + 1.0) / e - decay / e - (1.0 - decay) / (e * e))
    }
}

/// Running value of `q^n` for coefficient vectors.
#[derive(Debug, Clone)]
pub struct MemoryAccumulator {
    kernel: KernelParams,
    tau: f64,
    decay: f64,
    q: Vec<f64>,
    n: usize,
}

impl MemoryAccumulator {
    pub fn new(kernel: KernelParams, tau: f64, n_dofs: usize) -> Result<Self> {
        kernel.validate()?;
        if !(tau > 0.0) {
            return Err(Error::Constraint(format!("tau = {tau} must be positive")));
        }
        Ok(Self { kernel, tau, decay: (-kernel.eta * tau).exp(), q: vec![0.0; n_dofs], n: 0 })
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn step(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }

    /// `e^{−ητ}`
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn push(&mut self, u_new: &[f64]) -> Result<()> {
        if u_new.len() != self.q.len() {
            return Err(Error::Dimension(format!("{} values pushed into {} dofs", u_new.len(), self.q.len())));
        }
        let w = self.tau * self.kernel.gamma;
        for (q, u) in self.q.iter_mut().zip(u_new) {
            *q = self.decay * *q + w * u;
        }
        self.n += 1;
        Ok(())
    }

    /// Splits `τ A(q^{n}, ·)` before `φ^n` is known: the returned vector
    /// `e^{−ητ} q^{n−1}` goes to the right-hand side (through `τA`), and the
    /// coefficient `τ²γ` multiplies `A` in the system matrix.
    pub fn history_rhs_and_matrix_shift(&self) -> (Vec<f64>, f64) {
        let known = self.q.iter().map(|q| self.decay * q).collect();
        (known, self.tau * self.tau * self.kernel.gamma)
    }
}

/// `τ Σ_{j=1}^{n} β(t_n − t_j) φ^j` summed term by term.
pub fn direct_sum(kernel: &KernelParams, tau: f64, history: &[Vec<f64>]) -> Vec<f64> {
    let n = history.len();
    let mut out = vec![0.0; history.first().map_or(0, Vec::len)];
    for (j, phi) in history.iter().enumerate() {
        let b = kernel.gamma * (-kernel.eta * tau * (n - 1 - j) as f64).exp();
        for (o, p) in out.iter_mut().zip(phi) {
            *o += tau * b * p;
        }
    }
    out
}

/// Right-rectangle approximation of `∫_0^T β(T − s) φ(s) ds` for a scalar φ.
pub fn rectangle_rule(kernel: &KernelParams, t_final: f64, steps: usize, phi: impl Fn(f64) -> f64) -> f64 {
    let tau = t_final / steps as f64;
    (1..=steps).map(|j| tau * kernel.gamma * (-kernel.eta * (t_final - j as f64 * tau)).exp() * phi(j as f64 * tau)).sum()
}
