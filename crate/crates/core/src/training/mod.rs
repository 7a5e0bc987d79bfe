//! Losses, optimizers, early stopping and the two-phase training protocol.
//!
//! Phase 1 fine-tunes a [`TransformerEncoder`](crate::encoder::TransformerEncoder)
//! end to end through a temporary [`LinearHead`] with AdamW and a linear
//! warmup. Phase 2 freezes the encoder and fits an [`MLPWeights`] regressor
//! on the pooled embedding concatenated with standardized readability
//! features, using RMSprop at a constant learning rate.

mod checkpoint;
mod early_stop;
mod head;
mod loss;
mod mlp;
mod model;
mod optim;
mod phase1;
mod phase2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointManifest, MemberConfig};
pub use early_stop::{Decision, EarlyStopState};
pub use head::LinearHead;
pub use loss::mse_loss;
pub use mlp::{mlp_forward, MLPWeights, MlpTrace};
pub use model::{predict, EncoderKind, EncoderProvider, TrainedModel};
pub use optim::{adamw_step, rmsprop_step, warmup_lr, AdamWState, RMSPropState};
pub use phase1::{eval_interval, train_phase1, Phase1Example, Phase1Outcome};
pub use phase2::{mlp_input, train_phase2, Phase2Data, Phase2Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub phase1_lr: f64,
    pub phase2_lr: f64,
    pub warmup_fraction: f64,
    pub phase1_max_epochs: usize,
    /// Evaluations without improvement before phase 1 stops.
    pub phase1_patience: usize,
    /// Gradient updates during which phase-1 evaluations are ignored.
    pub phase1_warmup_grace: usize,
    pub phase2_max_epochs: usize,
    /// Epochs without improvement before phase 2 stops.
    pub phase2_patience: usize,
    /// Updates between phase-1 evaluations; half an epoch when unset.
    pub eval_every: Option<usize>,
    pub mlp_hidden: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            batch_size: 16,
            phase1_lr: 5e-5,
            phase2_lr: 1e-3,
            warmup_fraction: 0.3,
            phase1_max_epochs: 100,
            phase1_patience: 5,
            phase1_warmup_grace: 300,
            phase2_max_epochs: 5000,
            phase2_patience: 100,
            eval_every: None,
            mlp_hidden: 128,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("phase1_max_epochs", self.phase1_max_epochs),
            ("phase1_patience", self.phase1_patience),
            ("phase2_max_epochs", self.phase2_max_epochs),
            ("phase2_patience", self.phase2_patience),
            ("mlp_hidden", self.mlp_hidden),
            ("eval_every", self.eval_every.unwrap_or(1)),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("training {name} must be positive")));
            }
        }
        for (name, v) in [("phase1_lr", self.phase1_lr), ("phase2_lr", self.phase2_lr)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("training {name} must be positive, got {v}")));
            }
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "warmup_fraction must lie in (0, 1), got {}",
                self.warmup_fraction
            )));
        }
        Ok(())
    }
}

/// What happened during one training phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHistory {
    /// `(updates_done, early-stop RMSE)` per evaluation.
    pub evaluations: Vec<(usize, f64)>,
    pub updates: usize,
    pub epochs: usize,
    pub stopped_early: bool,
    /// Early-stop RMSE of the returned weights.
    pub best_rmse: f64,
}

fn shuffled_batches(order: &mut [usize], batch: usize, rng: &mut crate::rng::Rng) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    order.shuffle(rng);
    order.chunks(batch).map(<[usize]>::to_vec).collect()
}
