//! Reweighted l1 reconstruction: R-SALSA for data recovery, R-FISTA and
//! R-ADMM for direct initial-pressure recovery.

mod admm;
mod fista;
pub mod kernels;
mod salsa;

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};

pub use admm::reconstruct_p0r_plus;
pub use fista::reconstruct_p0r;
pub use kernels::{cg, cgls, power_iteration, smw_inverse, soft_threshold, update_weights, IterInfo, PowerEstimate, WeightState};
pub use salsa::reconstruct_dr;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Regularization weight.
    pub tau: f64,
    /// Augmented-Lagrangian weight (R-SALSA, R-ADMM). R-FISTA uses `1/L` instead.
    pub mu: f64,
    /// Sparsity constant in `S = ceil(m / (C ln n))`.
    pub c: f64,
    /// Relative-change stopping tolerance.
    pub eta: f64,
    pub k_max: usize,
    /// Update the weights every iteration; `false` keeps `Lambda = I`.
    pub reweight: bool,
    /// Solve the R-SALSA quadratic step by CG instead of the SMW formula.
    pub exact_inverse: bool,
    /// Tolerance and cap of inner CG / CGLS / power iterations.
    pub inner_tol: f64,
    pub inner_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            mu: 1.0,
            c: 5.0,
            eta: 5e-4,
            k_max: 100,
            reweight: true,
            exact_inverse: false,
            inner_tol: 1e-6,
            inner_max: 50,
        }
    }
}

impl SolverConfig {
    /// Data recovery settings of the vessel-phantom protocol.
    pub fn dr_paper() -> Self {
        Self {
            tau: 5e-5,
            mu: 1.0,
            ..Default::default()
        }
    }

    pub fn p0r_paper() -> Self {
        Self {
            tau: 1e-3,
            ..Default::default()
        }
    }

    pub fn p0r_plus_paper() -> Self {
        Self {
            tau: 1e-4,
            mu: 0.1,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [("tau", self.tau), ("mu", self.mu), ("C", self.c), ("eta", self.eta), ("inner_tol", self.inner_tol)];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} = {v} must be positive")));
            }
        }
        if self.eta >= 1.0 {
            return Err(Error::InvalidConfig(format!("eta = {} must be below 1", self.eta)));
        }
        if self.k_max == 0 || self.inner_max == 0 {
            return Err(Error::InvalidConfig("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// `S = ceil(m / (C ln n))`, clamped to `1..=n_coeffs`.
pub fn sparsity(m: usize, n: usize, c: f64, n_coeffs: usize) -> usize {
    let s = (m as f64 / (c * (n as f64).ln())).ceil();
    (s.max(1.0) as usize).min(n_coeffs.max(1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    /// `0.5 ||residual||^2`.
    pub fidelity: f64,
    pub relative_change: f64,
    /// Elapsed since the solver started.
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct SolverRun {
    pub method: &'static str,
    pub config: SolverConfig,
    pub sparsity: usize,
    pub trace: Vec<TraceRow>,
    /// `||E p - y||` per iteration (R-ADMM only).
    pub primal_residual: Vec<f64>,
    /// Final coefficients `f`.
    pub coeffs: Vec<f64>,
    pub epsilon: f64,
    /// Lipschitz estimate `L` (R-FISTA only).
    pub lipschitz: Option<f64>,
    /// Relative residual of the SMW step against `P + mu I` at the first iteration.
    pub smw_gap: Option<f64>,
    pub converged: bool,
    pub wall_ms: f64,
}

impl SolverRun {
    pub const CSV_HEADER: &'static str = "iteration,objective,fidelity,relative_change,wall_ms";

    pub(crate) fn new(method: &'static str, config: SolverConfig, sparsity: usize) -> Self {
        Self {
            method,
            config,
            sparsity,
            trace: Vec::new(),
            primal_residual: Vec::new(),
            coeffs: Vec::new(),
            epsilon: kernels::EPS_FLOOR,
            lipschitz: None,
            smw_gap: None,
            converged: false,
            wall_ms: 0.0,
        }
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn last_change(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |r| r.relative_change)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.trace {
            let _ = writeln!(
                s,
                "{},{:.12e},{:.12e},{:.12e},{:.3}",
                r.iteration, r.objective, r.fidelity, r.relative_change, r.wall_ms
            );
        }
        s
    }

    /// `Err(NonConvergence)` when the cap was hit before the tolerance.
    pub fn check_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NonConvergence {
                what: self.method,
                iterations: self.iterations(),
                last_change: self.last_change(),
            })
        }
    }
}

/// Shared outer-loop bookkeeping.
pub(crate) struct Outer {
    start: Instant,
    weights: WeightState,
    prev: Vec<f64>,
}

impl Outer {
    pub(crate) fn new(n: usize, s: usize) -> Self {
        Self {
            start: Instant::now(),
            weights: WeightState::identity(n, s),
            prev: vec![1.0; n],
        }
    }

    pub(crate) fn lambda(&self) -> &[f64] {
        &self.weights.lambda
    }

    pub(crate) fn weighted_l1(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights.lambda).map(|(v, l)| (v * l).abs()).sum()
    }

    /// Records iteration `k`, reweights from `f` and reports whether to stop.
    pub(crate) fn step(&mut self, run: &mut SolverRun, k: usize, f: &[f64], fidelity: f64) -> Result<bool> {
        let objective = fidelity + run.config.tau * self.weighted_l1(f);
        let change = kernels::rel_diff(f, &self.prev);
        self.prev.copy_from_slice(f);
        run.trace.push(TraceRow {
            iteration: k,
            objective,
            fidelity,
            relative_change: change,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        });
        if run.config.reweight {
            self.weights = update_weights(f, self.weights.s)?;
            run.epsilon = self.weights.epsilon;
        }
        let done = change < run.config.eta;
        run.converged = done;
        Ok(done)
    }

    pub(crate) fn finish(self, run: &mut SolverRun) {
        run.coeffs = self.prev;
        run.wall_ms = self.start.elapsed().as_secs_f64() * 1e3;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_rule() {
        assert_eq!(sparsity(43 * 591, 591 * 172, 5.0, 1 << 20), 441);
        assert_eq!(sparsity(1, 100, 5.0, 10), 1);
        assert_eq!(sparsity(1000, 3, 0.1, 10), 10);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::dr_paper().validate().is_ok());
        let bad = SolverConfig {
            eta: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            tau: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
