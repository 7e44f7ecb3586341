//! Line-oriented model files.
//!
//! ```text
//! vfclassify-model v1 <ALGORITHM>
//! dim <d>
//! ...algorithm-specific lines...
//! end
//! ```
//!
//! Floats are written in shortest round-trip form. Forest trees follow a
//! `tree <node_count>` line as pre-order `node <feature> <threshold>` /
//! `leaf <label> <count0> <count1>` lines. A file without the final `end` line
//! is rejected.

use std::fs;
use std::path::Path;

use super::{
    Algorithm, DecisionTree, LogRegModel, NaiveBayesModel, Node, RandomForestModel, SvmModel,
    TrainedModel,
};
use crate::error::{Error, Result};
use crate::vfdata::Label;

const MAGIC: &str = "vfclassify-model";
const VERSION: &str = "v1";

fn floats(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn model_to_text(model: &TrainedModel) -> String {
    let mut out = format!(
        "{MAGIC} {VERSION} {}\ndim {}\n",
        model.algorithm(),
        model.dim()
    );
    match model {
        TrainedModel::LogReg(LogRegModel { weights, bias })
        | TrainedModel::Svm(SvmModel { weights, bias }) => {
            out.push_str(&format!("weights {}\nbias {bias}\n", floats(weights)));
        }
        TrainedModel::NaiveBayes(m) => {
            out.push_str(&format!("log_priors {}\n", floats(&m.log_priors)));
            for c in 0..2 {
                out.push_str(&format!("mean {c} {}\n", floats(&m.means[c])));
            }
            for c in 0..2 {
                out.push_str(&format!("variance {c} {}\n", floats(&m.variances[c])));
            }
        }
        TrainedModel::RandomForest(m) => {
            out.push_str(&format!("trees {}\n", m.trees.len()));
            for tree in &m.trees {
                out.push_str(&format!("tree {}\n", tree.nodes.len()));
                for node in &tree.nodes {
                    match node {
                        Node::Split {
                            feature, threshold, ..
                        } => out.push_str(&format!("node {feature} {threshold}\n")),
                        Node::Leaf {
                            predicted,
                            class_counts,
                        } => out.push_str(&format!(
                            "leaf {predicted} {} {}\n",
                            class_counts[0], class_counts[1]
                        )),
                    }
                }
            }
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_text(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_text(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next line split into tokens, which must start with `keyword`.
    fn expect(&mut self, keyword: &str) -> Result<(usize, Vec<&'a str>)> {
        let (i, line) = self
            .inner
            .next()
            .ok_or_else(|| bad(format!("truncated: expected `{keyword}` line")))?;
        let mut toks: Vec<&str> = line.split(' ').collect();
        if toks.first() != Some(&keyword) {
            return Err(bad(format!(
                "line {}: expected `{keyword}`, got {line:?}",
                i + 1
            )));
        }
        toks.remove(0);
        Ok((i + 1, toks))
    }

    fn next_tokens(&mut self) -> Result<(usize, Vec<&'a str>)> {
        let (i, line) = self.inner.next().ok_or_else(|| bad("truncated".into()))?;
        Ok((i + 1, line.split(' ').collect()))
    }
}

fn bad(msg: String) -> Error {
    Error::ModelFormat(msg)
}

fn parse_f64s(line: usize, toks: &[&str], expected: usize) -> Result<Vec<f64>> {
    if toks.len() != expected {
        return Err(bad(format!(
            "line {line}: expected {expected} values, got {}",
            toks.len()
        )));
    }
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("line {line}: bad number {t:?}")))
        })
        .collect()
}

fn parse_usize(line: usize, tok: Option<&&str>) -> Result<usize> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(format!("line {line}: expected a count")))
}

pub fn model_from_text(text: &str) -> Result<TrainedModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, head) = lines.expect(MAGIC)?;
    if head.len() != 2 {
        return Err(bad("malformed header line".into()));
    }
    if head[0] != VERSION {
        return Err(bad(format!(
            "unsupported version {:?}, expected {VERSION}",
            head[0]
        )));
    }
    let algorithm: Algorithm = head[1]
        .parse()
        .map_err(|_| bad(format!("unknown algorithm tag {:?}", head[1])))?;
    let (l, toks) = lines.expect("dim")?;
    let d = parse_usize(l, toks.first())?;
    if toks.len() != 1 || d == 0 {
        return Err(bad(format!("line {l}: bad dimension")));
    }

    let model = match algorithm {
        Algorithm::LogReg | Algorithm::SgdSvm => {
            let (l, toks) = lines.expect("weights")?;
            let weights = parse_f64s(l, &toks, d)?;
            let (l, toks) = lines.expect("bias")?;
            let bias = parse_f64s(l, &toks, 1)?[0];
            if algorithm == Algorithm::LogReg {
                TrainedModel::LogReg(LogRegModel { weights, bias })
            } else {
                TrainedModel::Svm(SvmModel { weights, bias })
            }
        }
        Algorithm::NaiveBayes => {
            let (l, toks) = lines.expect("log_priors")?;
            let lp = parse_f64s(l, &toks, 2)?;
            let mut read_pair = |kw: &str| -> Result<[Vec<f64>; 2]> {
                let mut pair: [Vec<f64>; 2] = Default::default();
                for (c, slot) in pair.iter_mut().enumerate() {
                    let (l, toks) = lines.expect(kw)?;
                    if toks.first() != Some(&c.to_string().as_str()) {
                        return Err(bad(format!("line {l}: expected class {c}")));
                    }
                    *slot = parse_f64s(l, &toks[1..], d)?;
                }
                Ok(pair)
            };
            let means = read_pair("mean")?;
            let variances = read_pair("variance")?;
            if variances.iter().flatten().any(|v| *v <= 0.0) {
                return Err(bad("non-positive variance".into()));
            }
            TrainedModel::NaiveBayes(NaiveBayesModel {
                log_priors: [lp[0], lp[1]],
                means,
                variances,
            })
        }
        Algorithm::RandomForest => {
            let (l, toks) = lines.expect("trees")?;
            let n_trees = parse_usize(l, toks.first())?;
            if n_trees == 0 {
                return Err(bad(format!("line {l}: empty forest")));
            }
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                trees.push(parse_tree(&mut lines, d)?);
            }
            TrainedModel::RandomForest(RandomForestModel {
                n_features: d,
                trees,
            })
        }
    };
    let (l, toks) = lines.next_tokens()?;
    if toks != ["end"] {
        return Err(bad(format!("line {l}: expected `end`")));
    }
    if let Some((i, _)) = lines.inner.find(|(_, line)| !line.is_empty()) {
        return Err(bad(format!("line {}: content after `end`", i + 1)));
    }
    Ok(model)
}

fn parse_tree(lines: &mut Lines<'_>, d: usize) -> Result<DecisionTree> {
    let (l, toks) = lines.expect("tree")?;
    let count = parse_usize(l, toks.first())?;
    if count == 0 {
        return Err(bad(format!("line {l}: tree without nodes")));
    }
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        let (l, toks) = lines.next_tokens()?;
        let node = match toks.first().copied() {
            Some("node") if toks.len() == 3 => Node::Split {
                feature: parse_usize(l, toks.get(1))?,
                threshold: parse_f64s(l, &toks[2..], 1)?[0],
                left: 0,
                right: 0,
            },
            Some("leaf") if toks.len() == 4 => Node::Leaf {
                predicted: toks[1]
                    .parse::<u8>()
                    .ok()
                    .and_then(Label::from_code)
                    .ok_or_else(|| bad(format!("line {l}: bad leaf label")))?,
                class_counts: [parse_usize(l, toks.get(2))?, parse_usize(l, toks.get(3))?],
            },
            _ => return Err(bad(format!("line {l}: expected `node` or `leaf`"))),
        };
        nodes.push(node);
    }
    link_preorder(&mut nodes)?;
    let tree = DecisionTree { nodes };
    tree.validate(d).map_err(|e| bad(e.to_string()))?;
    Ok(tree)
}

/// Fills in child indices of a pre-order node list; the list must describe
/// exactly one complete tree.
fn link_preorder(nodes: &mut [Node]) -> Result<()> {
    fn go(nodes: &mut [Node], i: usize) -> Result<usize> {
        let Some(node) = nodes.get(i) else {
            return Err(bad("tree structure ends early".into()));
        };
        if matches!(node, Node::Leaf { .. }) {
            return Ok(i + 1);
        }
        let left = i + 1;
        let right = go(nodes, left)?;
        let end = go(nodes, right)?;
        if let Node::Split {
            left: l, right: r, ..
        } = &mut nodes[i]
        {
            *l = left;
            *r = right;
        }
        Ok(end)
    }
    let end = go(nodes, 0)?;
    if end != nodes.len() {
        return Err(bad(format!("{} trailing nodes in tree", nodes.len() - end)));
    }
    Ok(())
}
