//! The four binary classifiers behind one fit/predict contract, plus model files.
//!
//! Training data is a slice of equal-length rows (`&[Vec<f64>]`) and a parallel
//! slice of labels. Decision conventions are fixed so predictions agree across
//! implementations: logistic regression and the SVM send the boundary (p = 0.5,
//! score = 0) to label 1; naive Bayes and the forest break ties toward label 0.

mod forest;
mod io;
mod logreg;
mod naive_bayes;
mod svm;

use std::fmt;
use std::str::FromStr;

pub use forest::{
    forest_fit, forest_fit_with, gini, tree_fit, DecisionTree, ForestOptions, Node,
    RandomForestModel,
};
pub use io::{load_model, model_from_text, model_to_text, save_model};
pub use logreg::{
    logreg_fit, logreg_fit_traced, logreg_loss_grad, logreg_predict_proba, sigmoid, LogRegModel,
    LossGrad,
};
pub use naive_bayes::{nb_fit, nb_log_posterior, NaiveBayesModel};
pub use svm::{svm_objective, svm_sgd_fit, svm_sgd_fit_traced, SvmModel};

use crate::error::{Error, Result};
use crate::vfdata::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    LogReg,
    NaiveBayes,
    RandomForest,
    SgdSvm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::LogReg,
        Algorithm::NaiveBayes,
        Algorithm::RandomForest,
        Algorithm::SgdSvm,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::LogReg => "LOGREG",
            Algorithm::NaiveBayes => "NAIVE_BAYES",
            Algorithm::RandomForest => "RANDOM_FOREST",
            Algorithm::SgdSvm => "SGD_SVM",
        }
    }

    /// Lower-case name used for config sections and file names.
    pub fn slug(self) -> &'static str {
        match self {
            Algorithm::LogReg => "logreg",
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::RandomForest => "random_forest",
            Algorithm::SgdSvm => "sgd_svm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s || a.slug() == s)
            .ok_or_else(|| Error::invalid("algorithm", format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub max_epochs: usize,
    pub tol: f64,
    pub n_trees: usize,
    /// `None` grows trees until the other stopping rules fire.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub var_smoothing: f64,
    pub rng_seed: u64,
}

impl Hyperparams {
    /// Defaults for `algorithm`; the seed has no default.
    pub fn defaults(algorithm: Algorithm, rng_seed: u64) -> Self {
        let (l2_lambda, max_epochs) = match algorithm {
            Algorithm::SgdSvm => (0.01, 200),
            _ => (0.0, 2000),
        };
        Self {
            algorithm,
            learning_rate: 0.1,
            l2_lambda,
            max_epochs,
            tol: 1e-7,
            n_trees: 101,
            max_depth: None,
            min_samples_split: 2,
            var_smoothing: 1e-9,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid("hyperparameters", msg));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate {} must be > 0", self.learning_rate));
        }
        if !(self.l2_lambda.is_finite() && self.l2_lambda >= 0.0) {
            return bad(format!("l2_lambda {} must be >= 0", self.l2_lambda));
        }
        if self.algorithm == Algorithm::SgdSvm && self.l2_lambda <= 0.0 {
            return bad("SGD_SVM needs l2_lambda > 0".into());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol {} must be > 0", self.tol));
        }
        if self.n_trees == 0 {
            return bad("n_trees must be >= 1".into());
        }
        if self.min_samples_split < 2 {
            return bad("min_samples_split must be >= 2".into());
        }
        if !(self.var_smoothing.is_finite() && self.var_smoothing >= 0.0) {
            return bad(format!("var_smoothing {} must be >= 0", self.var_smoothing));
        }
        Ok(())
    }

    /// `key = value` lines describing the settings that matter for `algorithm`.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![("algorithm".to_string(), self.algorithm.tag().to_string())];
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        match self.algorithm {
            Algorithm::LogReg => {
                push("learning_rate", self.learning_rate.to_string());
                push("l2_lambda", self.l2_lambda.to_string());
                push("max_epochs", self.max_epochs.to_string());
                push("tol", self.tol.to_string());
            }
            Algorithm::NaiveBayes => push("var_smoothing", self.var_smoothing.to_string()),
            Algorithm::RandomForest => {
                push("n_trees", self.n_trees.to_string());
                push(
                    "max_depth",
                    self.max_depth
                        .map_or_else(|| "unlimited".to_string(), |d| d.to_string()),
                );
                push("min_samples_split", self.min_samples_split.to_string());
                push("rng_seed", self.rng_seed.to_string());
            }
            Algorithm::SgdSvm => {
                push("l2_lambda", self.l2_lambda.to_string());
                push("max_epochs", self.max_epochs.to_string());
                push("rng_seed", self.rng_seed.to_string());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    LogReg(LogRegModel),
    NaiveBayes(NaiveBayesModel),
    RandomForest(RandomForestModel),
    Svm(SvmModel),
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            TrainedModel::LogReg(_) => Algorithm::LogReg,
            TrainedModel::NaiveBayes(_) => Algorithm::NaiveBayes,
            TrainedModel::RandomForest(_) => Algorithm::RandomForest,
            TrainedModel::Svm(_) => Algorithm::SgdSvm,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedModel::LogReg(m) => m.weights.len(),
            TrainedModel::NaiveBayes(m) => m.means[0].len(),
            TrainedModel::RandomForest(m) => m.n_features,
            TrainedModel::Svm(m) => m.weights.len(),
        }
    }
}

/// Fits the algorithm named in `hyper`.
pub fn fit(x: &[Vec<f64>], y: &[Label], hyper: &Hyperparams) -> Result<TrainedModel> {
    hyper.validate()?;
    Ok(match hyper.algorithm {
        Algorithm::LogReg => TrainedModel::LogReg(logreg_fit(x, y, hyper)?),
        Algorithm::NaiveBayes => TrainedModel::NaiveBayes(nb_fit(x, y, hyper)?),
        Algorithm::RandomForest => TrainedModel::RandomForest(forest_fit(x, y, hyper)?),
        Algorithm::SgdSvm => TrainedModel::Svm(svm_sgd_fit(x, y, hyper)?),
    })
}

pub fn predict(model: &TrainedModel, f: &[f64]) -> Result<Label> {
    check_dim(model.dim(), f)?;
    Ok(match model {
        TrainedModel::LogReg(m) => {
            if logreg_predict_proba(m, f)? >= 0.5 {
                Label::Glaucoma
            } else {
                Label::Other
            }
        }
        TrainedModel::NaiveBayes(m) => {
            let (s0, s1) = nb_log_posterior(m, f)?;
            if s1 > s0 {
                Label::Glaucoma
            } else {
                Label::Other
            }
        }
        TrainedModel::RandomForest(m) => m.predict(f)?,
        TrainedModel::Svm(m) => {
            if m.score(f)? >= 0.0 {
                Label::Glaucoma
            } else {
                Label::Other
            }
        }
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_dim(expected: usize, f: &[f64]) -> Result<()> {
    if f.len() != expected {
        return Err(Error::Dimension {
            expected,
            got: f.len(),
        });
    }
    Ok(())
}

/// Validates a training set and returns its feature dimension.
pub(crate) fn check_training_set(x: &[Vec<f64>], y: &[Label], need_both: bool) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::invalid("training set", "no samples"));
    }
    if x.len() != y.len() {
        return Err(Error::invalid(
            "training set",
            format!("{} rows but {} labels", x.len(), y.len()),
        ));
    }
    let d = x[0].len();
    for row in x {
        check_dim(d, row)?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("training set", "non-finite feature value"));
        }
    }
    if need_both && !(y.contains(&Label::Other) && y.contains(&Label::Glaucoma)) {
        return Err(Error::invalid(
            "training set",
            "both labels must be present",
        ));
    }
    Ok(d)
}
