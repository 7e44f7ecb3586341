use std::f64::consts::PI;

use log::warn;

use super::{check_dim, check_training_set, Hyperparams};
use crate::error::{Error, Result};
use crate::vfdata::Label;

/// Gaussian naive Bayes. Arrays are indexed by label code.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    pub log_priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    /// Per-class population variances after smoothing.
    pub variances: [Vec<f64>; 2],
}

fn moments<'a>(rows: impl Iterator<Item = &'a Vec<f64>> + Clone, d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut n = 0usize;
    let mut mean = vec![0.0; d];
    for row in rows.clone() {
        n += 1;
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for row in rows {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n as f64);
    (mean, var)
}

/// Per-class means and population variances. Every variance is increased by
/// `var_smoothing` times the largest whole-data feature variance.
pub fn nb_fit(x: &[Vec<f64>], y: &[Label], hyper: &Hyperparams) -> Result<NaiveBayesModel> {
    let d = check_training_set(x, y, true)?;
    let n = x.len() as f64;
    let (_, total_var) = moments(x.iter(), d);
    let mut epsilon = hyper.var_smoothing * total_var.iter().copied().fold(0.0, f64::max);
    if epsilon <= 0.0 {
        // All features constant: fall back to the raw smoothing amount.
        epsilon = hyper.var_smoothing;
    }
    if epsilon <= 0.0 {
        return Err(Error::invalid(
            "naive Bayes",
            "var_smoothing is 0 and would leave zero variances",
        ));
    }

    let mut log_priors = [0.0; 2];
    let mut means: [Vec<f64>; 2] = Default::default();
    let mut variances: [Vec<f64>; 2] = Default::default();
    for label in Label::ALL {
        let rows = x
            .iter()
            .zip(y)
            .filter(|(_, l)| **l == label)
            .map(|(r, _)| r);
        let count = rows.clone().count();
        if count == 1 {
            warn!(
                "naive Bayes: class {label} has a single sample; its variances are smoothing only"
            );
        }
        let (mean, var) = moments(rows, d);
        let c = label.index();
        log_priors[c] = (count as f64 / n).ln();
        means[c] = mean;
        variances[c] = var.into_iter().map(|v| v + epsilon).collect();
    }
    Ok(NaiveBayesModel {
        log_priors,
        means,
        variances,
    })
}

/// Joint log-likelihood per class, `(score_0, score_1)`.
pub fn nb_log_posterior(model: &NaiveBayesModel, f: &[f64]) -> Result<(f64, f64)> {
    check_dim(model.means[0].len(), f)?;
    let score = |c: usize| {
        model.log_priors[c]
            + f.iter()
                .zip(&model.means[c])
                .zip(&model.variances[c])
                .map(|((v, m), s2)| -0.5 * (2.0 * PI * s2).ln() - (v - m) * (v - m) / (2.0 * s2))
                .sum::<f64>()
    };
    Ok((score(0), score(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{predict, Algorithm, TrainedModel};
    use crate::rng::SplitMix64;

    fn hyper() -> Hyperparams {
        Hyperparams::defaults(Algorithm::NaiveBayes, 0)
    }

    fn two_point_model() -> NaiveBayesModel {
        let x = vec![vec![0.0], vec![2.0], vec![10.0], vec![12.0]];
        let y = [Label::Other, Label::Other, Label::Glaucoma, Label::Glaucoma];
        nb_fit(&x, &y, &hyper()).unwrap()
    }

    #[test]
    fn hand_moments() {
        let m = two_point_model();
        assert_eq!(m.means, [vec![1.0], vec![11.0]]);
        // Whole-data variance of {0, 2, 10, 12} is 26.
        let eps = 1e-9 * 26.0;
        assert!((m.variances[0][0] - (1.0 + eps)).abs() < 1e-15);
        assert!((m.variances[1][0] - (1.0 + eps)).abs() < 1e-15);
        assert_eq!(m.log_priors, [0.5f64.ln(); 2]);
    }

    fn gaussian_pdf(x: f64, mean: f64, var: f64) -> f64 {
        (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    #[test]
    fn closer_class_wins() {
        let m = two_point_model();
        let (s0, s1) = nb_log_posterior(&m, &[1.0]).unwrap();
        // Brute-force densities on the probability scale.
        let p0 = 0.5 * gaussian_pdf(1.0, 1.0, m.variances[0][0]);
        let p1 = 0.5 * gaussian_pdf(1.0, 11.0, m.variances[1][0]);
        assert!(p0 > p1);
        assert!(s0 > s1);
        assert!((s0 - p0.ln()).abs() < 1e-12);
        assert_eq!(
            predict(&TrainedModel::NaiveBayes(m), &[1.0]).unwrap(),
            Label::Other
        );
    }

    #[test]
    fn midpoint_tie_goes_to_zero() {
        let m = two_point_model();
        let (s0, s1) = nb_log_posterior(&m, &[6.0]).unwrap();
        assert!((s0 - s1).abs() < 1e-12);
        assert_eq!(
            predict(&TrainedModel::NaiveBayes(m), &[6.0]).unwrap(),
            Label::Other
        );
    }

    #[test]
    fn row_order_does_not_matter() {
        let mut rng = SplitMix64::new(1);
        let x: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.next_f64()).collect())
            .collect();
        let y: Vec<Label> = (0..30)
            .map(|i| Label::from_code((i % 3 == 0) as u8).unwrap())
            .collect();
        let a = nb_fit(&x, &y, &hyper()).unwrap();
        let mut order: Vec<usize> = (0..30).collect();
        rng.shuffle(&mut order);
        let xs: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
        let ys: Vec<Label> = order.iter().map(|&i| y[i]).collect();
        let b = nb_fit(&xs, &ys, &hyper()).unwrap();
        assert_eq!(a.log_priors, b.log_priors);
        for c in 0..2 {
            for j in 0..4 {
                assert!((a.means[c][j] - b.means[c][j]).abs() < 1e-12);
                assert!((a.variances[c][j] - b.variances[c][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_sample_class_still_fits() {
        let x = vec![vec![0.0], vec![1.0], vec![5.0]];
        let y = [Label::Other, Label::Other, Label::Glaucoma];
        let m = nb_fit(&x, &y, &hyper()).unwrap();
        assert!(m.variances[1][0] > 0.0);
    }

    #[test]
    fn constant_features_still_get_positive_variance() {
        let x = vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0]];
        let y = [Label::Other, Label::Other, Label::Glaucoma, Label::Glaucoma];
        let m = nb_fit(&x, &y, &hyper()).unwrap();
        assert!(m.variances.iter().flatten().all(|&v| v > 0.0));
        let mut h = hyper();
        h.var_smoothing = 0.0;
        assert!(nb_fit(&x, &y, &h).is_err());
    }

    #[test]
    fn shifting_both_priors_keeps_predictions() {
        let mut rng = SplitMix64::new(12);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.next_gaussian()).collect())
            .collect();
        let y: Vec<Label> = x
            .iter()
            .map(|r| Label::from_code((r[1] > 0.0) as u8).unwrap())
            .collect();
        let m = nb_fit(&x, &y, &hyper()).unwrap();
        let mut shifted = m.clone();
        shifted.log_priors[0] += 3.7;
        shifted.log_priors[1] += 3.7;
        let (m, shifted) = (
            TrainedModel::NaiveBayes(m),
            TrainedModel::NaiveBayes(shifted),
        );
        for _ in 0..100 {
            let f: Vec<f64> = (0..3).map(|_| 2.0 * rng.next_gaussian()).collect();
            assert_eq!(predict(&m, &f).unwrap(), predict(&shifted, &f).unwrap());
        }
    }
}
