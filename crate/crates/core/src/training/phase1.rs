use super::{shuffled_batches, AdamWState, Decision, EarlyStopState, LinearHead, TrainingConfig, TrainingHistory};
use super::{adamw_step, mse_loss, warmup_lr};
use crate::corpus::TokenSequence;
use crate::encoder::TransformerEncoder;
use crate::error::{Error, Result};
use crate::metrics::rmse;
use crate::rng;

const HEAD_INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct Phase1Example {
    pub tokens: TokenSequence,
    pub label: f64,
}

#[derive(Debug, Clone)]
pub struct Phase1Outcome {
    pub encoder: TransformerEncoder,
    /// The temporary head at the returned checkpoint.
    pub head: LinearHead,
    pub history: TrainingHistory,
}

/// Updates between evaluations: half an epoch, rounded up.
pub fn eval_interval(n_train: usize, batch_size: usize) -> usize {
    n_train.div_ceil(batch_size).div_ceil(2).max(1)
}

fn predict_all(encoder: &TransformerEncoder, head: &LinearHead, set: &[Phase1Example]) -> Result<Vec<f64>> {
    set.iter()
        .map(|ex| head.forward(encoder.forward(&ex.tokens)?.pooled()))
        .collect()
}

fn set_rmse(encoder: &TransformerEncoder, head: &LinearHead, set: &[Phase1Example]) -> Result<f64> {
    let pred = predict_all(encoder, head, set)?;
    let y: Vec<f64> = set.iter().map(|e| e.label).collect();
    rmse(&y, &pred)
}

/// Fine-tunes `encoder` with a temporary linear head on MSE.
///
/// The head starts at the mean training label. Evaluation on `early_stop`
/// happens every `eval_every` updates and the weights of the best
/// evaluation are returned.
pub fn train_phase1(
    mut encoder: TransformerEncoder,
    train: &[Phase1Example],
    early_stop: &[Phase1Example],
    config: &TrainingConfig,
) -> Result<Phase1Outcome> {
    config.validate()?;
    if train.is_empty() || early_stop.is_empty() {
        return Err(Error::invalid("phase 1 needs non-empty training and early-stop sets"));
    }
    let n = train.len();
    let steps_per_epoch = n.div_ceil(config.batch_size);
    let eval_every = config.eval_every.unwrap_or_else(|| eval_interval(n, config.batch_size));
    let total_steps = steps_per_epoch * config.phase1_max_epochs;
    let mean_label = train.iter().map(|e| e.label).sum::<f64>() / n as f64;

    let mut head = LinearHead::new(
        encoder.dim(),
        rng::derive_seed(config.seed, "phase1/head"),
        HEAD_INIT_STD,
        mean_label,
    );
    let mut shuffle = rng::stream(config.seed, "phase1/shuffle");
    let mut enc_opt = AdamWState::new(encoder.params().len());
    let mut head_opt = AdamWState::new(head.params().len());
    let mut stopper = EarlyStopState::new(config.phase1_patience, config.phase1_warmup_grace)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut epochs = 0;
    let mut stopped_early = false;
    let mut last_eval_at = 0;

    'epochs: for _ in 0..config.phase1_max_epochs {
        epochs += 1;
        for batch in shuffled_batches(&mut order, config.batch_size, &mut shuffle) {
            let mut traces = Vec::with_capacity(batch.len());
            let mut pred = Vec::with_capacity(batch.len());
            let mut target = Vec::with_capacity(batch.len());
            for &i in &batch {
                let trace = encoder.forward(&train[i].tokens)?;
                pred.push(head.forward(trace.pooled())?);
                target.push(train[i].label);
                traces.push(trace);
            }
            let (loss, d_pred) = mse_loss(&pred, &target)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite("phase-1 training loss".into()));
            }
            let mut enc_grad = encoder.params().zeros();
            let mut head_grad = head.params().zeros();
            for (trace, &d) in traces.iter().zip(&d_pred) {
                let d_pooled = head.backward(trace.pooled(), d, &mut head_grad)?;
                encoder.backward(trace, &d_pooled, &mut enc_grad)?;
            }
            let lr = warmup_lr(stopper.updates_done() + 1, total_steps, config.phase1_lr, config.warmup_fraction)?;
            adamw_step(encoder.params_mut().data_mut(), &enc_grad, &mut enc_opt, lr)?;
            adamw_step(head.params_mut().data_mut(), &head_grad, &mut head_opt, lr)?;
            stopper.record_updates(1);

            if stopper.updates_done() % eval_every == 0 {
                last_eval_at = stopper.updates_done();
                let r = set_rmse(&encoder, &head, early_stop)?;
                let decision = stopper.update(r, || {
                    (encoder.params().data().to_vec(), head.params().data().to_vec())
                })?;
                if decision == Decision::Stop {
                    stopped_early = true;
                    break 'epochs;
                }
            }
        }
    }

    if last_eval_at != stopper.updates_done() {
        let r = set_rmse(&encoder, &head, early_stop)?;
        stopper.update(r, || (encoder.params().data().to_vec(), head.params().data().to_vec()))?;
    }
    let updates = stopper.updates_done();
    let evaluations = stopper.history().to_vec();
    let best_rmse = match stopper.into_best() {
        Some((best, (enc, hd))) => {
            encoder.params_mut().data_mut().copy_from_slice(&enc);
            head.params_mut().data_mut().copy_from_slice(&hd);
            best
        }
        // Every evaluation fell inside the grace window: keep the final weights.
        None => evaluations.last().map(|e| e.1).unwrap_or(f64::NAN),
    };
    Ok(Phase1Outcome {
        encoder,
        head,
        history: TrainingHistory {
            evaluations,
            updates,
            epochs,
            stopped_early,
            best_rmse,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_cadence() {
        assert_eq!(eval_interval(720, 16), 23);
        assert_eq!(eval_interval(16, 16), 1);
        assert_eq!(eval_interval(33, 16), 2);
    }
}
