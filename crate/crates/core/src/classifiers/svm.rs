use super::{check_dim, check_training_set, dot, Hyperparams};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::vfdata::Label;

/// Linear SVM; the decision score is `w . f + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    pub fn score(&self, f: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), f)?;
        Ok(dot(&self.weights, f) + self.bias)
    }
}

fn signed(label: Label) -> f64 {
    match label {
        Label::Other => -1.0,
        Label::Glaucoma => 1.0,
    }
}

/// `(lambda / 2) |w|^2 + mean hinge loss`, labels mapped 0 -> -1, 1 -> +1.
pub fn svm_objective(w: &[f64], b: f64, x: &[Vec<f64>], y: &[Label], lambda: f64) -> Result<f64> {
    let d = check_training_set(x, y, false)?;
    check_dim(d, w)?;
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(row, l)| (1.0 - signed(*l) * (dot(w, row) + b)).max(0.0))
        .sum();
    Ok(0.5 * lambda * dot(w, w) + hinge / x.len() as f64)
}

pub fn svm_sgd_fit(x: &[Vec<f64>], y: &[Label], hyper: &Hyperparams) -> Result<SvmModel> {
    svm_sgd_fit_traced(x, y, hyper).map(|(m, _)| m)
}

/// Pegasos-style SGD with step `1 / (lambda t)` and an unregularized bias.
/// Each epoch visits the samples in a fresh shuffle drawn from
/// `SplitMix64::new(rng_seed)`. Returns the objective after every epoch.
pub fn svm_sgd_fit_traced(
    x: &[Vec<f64>],
    y: &[Label],
    hyper: &Hyperparams,
) -> Result<(SvmModel, Vec<f64>)> {
    let lambda = hyper.l2_lambda;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(
            "SGD SVM",
            format!("l2_lambda {lambda} must be > 0"),
        ));
    }
    let d = check_training_set(x, y, true)?;
    let mut rng = SplitMix64::new(hyper.rng_seed);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut t = 0u64;
    let mut trace = Vec::with_capacity(hyper.max_epochs);
    for _ in 0..hyper.max_epochs {
        let mut order: Vec<usize> = (0..x.len()).collect();
        rng.shuffle(&mut order);
        for i in order {
            t += 1;
            pegasos_step(&mut w, &mut b, &x[i], signed(y[i]), lambda, t);
        }
        trace.push(svm_objective(&w, b, x, y, lambda)?);
    }
    Ok((
        SvmModel {
            weights: w,
            bias: b,
        },
        trace,
    ))
}

/// One update at global step `t` (1-based) for sample `row` with label `yi` in {-1, +1}.
fn pegasos_step(w: &mut [f64], b: &mut f64, row: &[f64], yi: f64, lambda: f64, t: u64) {
    let eta = 1.0 / (lambda * t as f64);
    let margin = yi * (dot(w, row) + *b);
    let shrink = 1.0 - eta * lambda;
    if margin < 1.0 {
        for (wj, xj) in w.iter_mut().zip(row) {
            *wj = shrink * *wj + eta * yi * xj;
        }
        *b += eta * yi;
    } else {
        w.iter_mut().for_each(|wj| *wj *= shrink);
    }
}
