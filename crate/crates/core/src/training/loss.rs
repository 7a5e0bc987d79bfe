use crate::error::{check_len, Error, Result};

/// Mean squared error and its gradient with respect to the predictions.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len(pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(Error::invalid("mse of an empty batch"));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        assert_eq!(mse_loss(&[2.0, 5.0], &[2.0, 5.0]).unwrap(), (0.0, vec![0.0, 0.0]));
        assert_eq!(mse_loss(&[3.0], &[1.0]).unwrap(), (4.0, vec![4.0]));
        assert_eq!(mse_loss(&[1.0, 3.0], &[1.0, 1.0]).unwrap(), (2.0, vec![0.0, 2.0]));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(mse_loss(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(mse_loss(&[], &[]).is_err());
    }
}
