//! Run configuration: TOML file values overridden by command-line flags.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stcut::discretization::Discretization;
use stcut::levelset::{problem_by_name, ProblemData};
use stcut::solver::{SolveConfig, Variant};

/// Complete run configuration (serialized into summary.json).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub problem: String,
    pub variant: String,
    pub ks: usize,
    pub kt: usize,
    pub qs: usize,
    pub qt: usize,
    /// Base number of elements (level 0).
    pub n_elems: usize,
    /// Base number of slabs; 0 derives it from dt_over_h.
    pub n_slabs: usize,
    /// Time-step coupling dt = c * h used when n_slabs = 0.
    pub dt_over_h: f64,
    pub levels: usize,
    pub gamma_j: f64,
    pub penalty: f64,
    /// Quadrature order; 0 picks 2 max(k, q) + 2.
    pub quad_order: usize,
    pub seed: u64,
    pub out: String,
    pub deform: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "ms1".into(),
            variant: "mc".into(),
            ks: 1,
            kt: 1,
            qs: 1,
            qt: 1,
            n_elems: 8,
            n_slabs: 0,
            dt_over_h: 1.0,
            levels: 4,
            gamma_j: 1.0,
            penalty: 1e6,
            quad_order: 0,
            seed: 42,
            out: "results".into(),
            deform: true,
        }
    }
}

impl RunConfig {
    pub fn problem_data(&self) -> Result<ProblemData> {
        problem_by_name(&self.problem)
            .with_context(|| format!("unknown problem '{}' (known: ms0, ms1, ms1-mean, ms2-quadratic-levelset, const-fitted, poly-fitted)", self.problem))
    }

    pub fn variant(&self) -> Result<Variant> {
        match Variant::parse(&self.variant) {
            Some(v) => Ok(v),
            None => bail!(
                "unknown variant '{}' (known: plain, mc, constrained, penalty)",
                self.variant
            ),
        }
    }

    pub fn solve_config(&self) -> Result<SolveConfig> {
        Ok(SolveConfig {
            variant: self.variant()?,
            penalty: self.penalty,
        })
    }

    pub fn discretization(&self) -> Discretization {
        let mut d = Discretization::new(self.ks, self.kt, self.qs, self.qt)
            .with_gamma(self.gamma_j);
        if self.quad_order > 0 {
            d = d.with_quad_order(self.quad_order);
        }
        if !self.deform {
            d = d.without_deformation();
        }
        d
    }

    /// Base slab count: explicit or derived from dt = dt_over_h * h.
    pub fn base_slabs(&self, problem: &ProblemData) -> usize {
        if self.n_slabs > 0 {
            return self.n_slabs;
        }
        let (a, b) = problem.background;
        let h = (b - a) / self.n_elems as f64;
        let n = (problem.t_end / (self.dt_over_h * h)).round() as usize;
        n.max(1)
    }
}
