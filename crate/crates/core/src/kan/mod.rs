//! Kolmogorov–Arnold network learning `S_A(U, n_A)`.
//!
//! Every edge carries a learnable univariate activation
//! `φ(x) = w_b · silu(x) + w_s · Σ_k c_k B_k(x)` built from B-splines on a
//! fixed uniform grid; nodes sum their incoming edges. Training is full-batch
//! L-BFGS on the mean squared error.

mod cv;
mod lbfgs;
mod model;

pub use cv::{
    cross_validate, per_group_r2, stratified_folds, train, CvReport, FoldReport, KanBatch,
};
pub use lbfgs::{minimize, LbfgsSettings, LbfgsState, StepOutcome};
pub use model::{bspline_basis, KanLayer, KanModel, Prediction, TrainReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KanConfig {
    /// Node counts per layer, inputs `(U, n_A)` first, output `S_A` last.
    pub widths: Vec<usize>,
    /// Spline degree (3 = cubic).
    pub spline_order: usize,
    /// Grid size; counts intervals unless `grid_counts_basis` is set.
    pub grid_size: usize,
    /// Read `grid_size` as the number of basis functions per edge instead.
    pub grid_counts_basis: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    /// L-BFGS iterations run per epoch.
    pub iterations_per_epoch: usize,
    pub history: usize,
    pub seed: u64,
    /// Include the `w_b · silu(x)` term; off gives pure-spline edges.
    pub base_blend: bool,
    /// Half-width of the uniform spline-coefficient initialisation.
    pub init_scale: f64,
    pub folds: usize,
}

impl Default for KanConfig {
    fn default() -> Self {
        Self {
            widths: vec![2, 3, 1],
            spline_order: 3,
            grid_size: 10,
            grid_counts_basis: false,
            learning_rate: 0.01,
            epochs: 50,
            iterations_per_epoch: 20,
            history: 10,
            seed: 0,
            base_blend: true,
            init_scale: 0.1,
            folds: 5,
        }
    }
}

impl KanConfig {
    /// Number of grid intervals per edge.
    pub fn intervals(&self) -> usize {
        if self.grid_counts_basis {
            self.grid_size.saturating_sub(self.spline_order)
        } else {
            self.grid_size
        }
    }

    /// Spline coefficients per edge.
    pub fn basis_count(&self) -> usize {
        self.intervals() + self.spline_order
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("KAN config: {m}")));
        if self.widths.len() < 2 || self.widths.contains(&0) {
            return bad(format!("widths {:?} need at least two non-empty layers", self.widths));
        }
        if self.widths[0] != 2 || *self.widths.last().unwrap() != 1 {
            return bad(format!("widths {:?} must start at 2 inputs and end at 1 output", self.widths));
        }
        if self.spline_order < 1 || self.spline_order > 6 {
            return bad(format!("spline order {} outside 1..=6", self.spline_order));
        }
        if self.intervals() < 1 || self.grid_size < self.spline_order {
            return bad(format!(
                "grid size {} must be at least the spline order {}",
                self.grid_size, self.spline_order
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.history == 0 {
            return bad("history must be at least 1".into());
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init scale {} must be non-negative", self.init_scale));
        }
        if self.folds < 2 {
            return bad(format!("need at least 2 folds, got {}", self.folds));
        }
        Ok(())
    }
}
