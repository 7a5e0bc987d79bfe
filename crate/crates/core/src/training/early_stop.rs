use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

/// Early-stopping bookkeeping over a stream of evaluation RMSEs.
///
/// Evaluations made while `updates_done <= grace` are recorded in the
/// history only: they neither set the best checkpoint nor count toward
/// patience. Afterwards an evaluation improves when it is strictly below the
/// best so far; training stops once `patience` evaluations in a row failed
/// to improve.
#[derive(Debug, Clone)]
pub struct EarlyStopState<T> {
    best_rmse: f64,
    best_checkpoint: Option<T>,
    evals_since_best: usize,
    updates_done: usize,
    grace: usize,
    patience: usize,
    history: Vec<(usize, f64)>,
}

impl<T> EarlyStopState<T> {
    pub fn new(patience: usize, grace: usize) -> Result<Self> {
        if patience == 0 {
            return Err(Error::invalid("early-stop patience must be positive"));
        }
        Ok(EarlyStopState {
            best_rmse: f64::INFINITY,
            best_checkpoint: None,
            evals_since_best: 0,
            updates_done: 0,
            grace,
            patience,
            history: Vec::new(),
        })
    }

    pub fn record_updates(&mut self, n: usize) {
        self.updates_done += n;
    }

    pub fn updates_done(&self) -> usize {
        self.updates_done
    }

    pub fn evals_since_best(&self) -> usize {
        self.evals_since_best
    }

    /// `None` until a post-grace evaluation has been seen.
    pub fn best_rmse(&self) -> Option<f64> {
        self.best_checkpoint.as_ref().map(|_| self.best_rmse)
    }

    pub fn best_checkpoint(&self) -> Option<&T> {
        self.best_checkpoint.as_ref()
    }

    pub fn into_best(self) -> Option<(f64, T)> {
        let rmse = self.best_rmse;
        self.best_checkpoint.map(|c| (rmse, c))
    }

    /// `(updates_done, rmse)` for every evaluation, in order.
    pub fn history(&self) -> &[(usize, f64)] {
        &self.history
    }

    /// Feeds one evaluation. `snapshot` is called only on improvement.
    pub fn update(&mut self, rmse: f64, snapshot: impl FnOnce() -> T) -> Result<Decision> {
        if rmse.is_nan() {
            return Err(Error::NonFinite("early-stop RMSE is NaN".into()));
        }
        self.history.push((self.updates_done, rmse));
        if self.updates_done <= self.grace {
            return Ok(Decision::Continue);
        }
        if self.best_checkpoint.is_none() || rmse < self.best_rmse {
            self.best_rmse = rmse;
            self.best_checkpoint = Some(snapshot());
            self.evals_since_best = 0;
        } else {
            self.evals_since_best += 1;
        }
        Ok(if self.evals_since_best >= self.patience {
            Decision::Stop
        } else {
            Decision::Continue
        })
    }
}
