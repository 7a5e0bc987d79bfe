use super::{mse_loss, rmsprop_step, shuffled_batches, Decision, EarlyStopState, MLPWeights, RMSPropState};
use super::{TrainingConfig, TrainingHistory};
use crate::error::{check_len, Error, Result};
use crate::features::{FeatureScaler, FeatureVector};
use crate::metrics::rmse;
use crate::rng;

/// Rows for the regressor: one embedding, raw feature vector and label each.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Phase2Data {
    pub embeddings: Vec<Vec<f64>>,
    pub features: Vec<FeatureVector>,
    pub labels: Vec<f64>,
}

impl Phase2Data {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn validate(&self, embedding_dim: usize) -> Result<()> {
        check_len(self.labels.len(), self.embeddings.len())?;
        check_len(self.labels.len(), self.features.len())?;
        for e in &self.embeddings {
            check_len(embedding_dim, e.len())?;
        }
        Ok(())
    }

    fn inputs(&self, scaler: &FeatureScaler) -> Result<Vec<Vec<f64>>> {
        self.embeddings
            .iter()
            .zip(&self.features)
            .map(|(e, f)| Ok(mlp_input(e, &scaler.apply(f)?.values)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Phase2Outcome {
    pub mlp: MLPWeights,
    pub scaler: FeatureScaler,
    pub history: TrainingHistory,
}

/// Regressor input: embedding followed by standardized features.
pub fn mlp_input(embedding: &[f64], scaled_features: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(embedding.len() + scaled_features.len());
    x.extend_from_slice(embedding);
    x.extend_from_slice(scaled_features);
    x
}

fn set_rmse(mlp: &MLPWeights, inputs: &[Vec<f64>], labels: &[f64]) -> Result<f64> {
    let pred = inputs
        .iter()
        .map(|x| Ok(mlp.forward(x)?.score))
        .collect::<Result<Vec<_>>>()?;
    rmse(labels, &pred)
}

/// Fits the feature scaler on `train` and an MLP on the concatenated inputs,
/// evaluating on `early_stop` once per epoch.
pub fn train_phase2(train: &Phase2Data, early_stop: &Phase2Data, config: &TrainingConfig) -> Result<Phase2Outcome> {
    config.validate()?;
    if train.is_empty() || early_stop.is_empty() {
        return Err(Error::invalid("phase 2 needs non-empty training and early-stop sets"));
    }
    let dim = train.embeddings[0].len();
    train.validate(dim)?;
    early_stop.validate(dim)?;
    let scaler = FeatureScaler::fit(&train.features)?;
    let x_train = train.inputs(&scaler)?;
    let x_es = early_stop.inputs(&scaler)?;
    let input_dim = x_train[0].len();

    let mut mlp = MLPWeights::new(input_dim, config.mlp_hidden, rng::derive_seed(config.seed, "phase2/mlp"))?;
    let mut opt = RMSPropState::new(mlp.params().len());
    let mut stopper = EarlyStopState::new(config.phase2_patience, 0)?;
    let mut shuffle = rng::stream(config.seed, "phase2/shuffle");
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = 0;
    let mut stopped_early = false;

    for _ in 0..config.phase2_max_epochs {
        epochs += 1;
        for batch in shuffled_batches(&mut order, config.batch_size, &mut shuffle) {
            let traces = batch
                .iter()
                .map(|&i| mlp.forward(&x_train[i]))
                .collect::<Result<Vec<_>>>()?;
            let pred: Vec<f64> = traces.iter().map(|t| t.score).collect();
            let target: Vec<f64> = batch.iter().map(|&i| train.labels[i]).collect();
            let (loss, d_pred) = mse_loss(&pred, &target)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite("phase-2 training loss".into()));
            }
            let mut grad = mlp.params().zeros();
            for (t, &d) in traces.iter().zip(&d_pred) {
                mlp.backward(t, d, &mut grad)?;
            }
            rmsprop_step(mlp.params_mut().data_mut(), &grad, &mut opt, config.phase2_lr)?;
            stopper.record_updates(1);
        }
        let r = set_rmse(&mlp, &x_es, &early_stop.labels)?;
        if stopper.update(r, || mlp.params().data().to_vec())? == Decision::Stop {
            stopped_early = true;
            break;
        }
    }

    let updates = stopper.updates_done();
    let evaluations = stopper.history().to_vec();
    let (best_rmse, best) = stopper
        .into_best()
        .expect("phase 2 evaluates after every epoch with no grace window");
    mlp.params_mut().data_mut().copy_from_slice(&best);
    Ok(Phase2Outcome {
        mlp,
        scaler,
        history: TrainingHistory {
            evaluations,
            updates,
            epochs,
            stopped_early,
            best_rmse,
        },
    })
}
