use super::{check_dim, check_training_set, dot, Hyperparams};
use crate::error::{Error, Result};
use crate::vfdata::Label;

/// Floor applied to probabilities inside the log-loss.
const LOG_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Logistic function, evaluated on the branch that cannot overflow.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad_w: Vec<f64>,
    pub grad_b: f64,
}

/// Mean binary cross-entropy plus `(l2 / 2) |w|^2`, and its gradient.
pub fn logreg_loss_grad(
    w: &[f64],
    b: f64,
    x: &[Vec<f64>],
    y: &[Label],
    l2: f64,
) -> Result<LossGrad> {
    let d = check_training_set(x, y, false)?;
    check_dim(d, w)?;
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;
    for (row, label) in x.iter().zip(y) {
        let t = label.code() as f64;
        let p = sigmoid(dot(w, row) + b);
        loss -= t * p.max(LOG_FLOOR).ln() + (1.0 - t) * (1.0 - p).max(LOG_FLOOR).ln();
        let r = p - t;
        for (g, v) in grad_w.iter_mut().zip(row) {
            *g += r * v;
        }
        grad_b += r;
    }
    loss /= n;
    loss += 0.5 * l2 * dot(w, w);
    for (g, wj) in grad_w.iter_mut().zip(w) {
        *g = *g / n + l2 * wj;
    }
    Ok(LossGrad {
        loss,
        grad_w,
        grad_b: grad_b / n,
    })
}

pub fn logreg_fit(x: &[Vec<f64>], y: &[Label], hyper: &Hyperparams) -> Result<LogRegModel> {
    logreg_fit_traced(x, y, hyper).map(|(m, _)| m)
}

/// Full-batch gradient descent from zero. Also returns the loss at every
/// evaluated iterate.
pub fn logreg_fit_traced(
    x: &[Vec<f64>],
    y: &[Label],
    hyper: &Hyperparams,
) -> Result<(LogRegModel, Vec<f64>)> {
    let d = check_training_set(x, y, true)?;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut trace: Vec<f64> = Vec::new();
    for epoch in 0..hyper.max_epochs {
        let lg = logreg_loss_grad(&w, b, x, y, hyper.l2_lambda)?;
        if !lg.loss.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite loss at epoch {epoch}; learning_rate {} is too large",
                hyper.learning_rate
            )));
        }
        let converged = trace
            .last()
            .is_some_and(|prev| (prev - lg.loss).abs() < hyper.tol);
        trace.push(lg.loss);
        if converged {
            break;
        }
        for (wj, g) in w.iter_mut().zip(&lg.grad_w) {
            *wj -= hyper.learning_rate * g;
        }
        b -= hyper.learning_rate * lg.grad_b;
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite weights at epoch {epoch}"
            )));
        }
    }
    Ok((
        LogRegModel {
            weights: w,
            bias: b,
        },
        trace,
    ))
}

pub fn logreg_predict_proba(model: &LogRegModel, f: &[f64]) -> Result<f64> {
    check_dim(model.weights.len(), f)?;
    Ok(sigmoid(dot(&model.weights, f) + model.bias))
}
