//! Line-oriented model files.
//!
//! ```text
//! guided-forest-model 1
//! mode GRF
//! master_seed 42
//! gamma 1.0
//! n_trees 2
//! n_features 3
//! n_classes 2
//! mtry 1
//! min_leaf_size 1
//! max_depth none
//! rrf_lambda 0.8
//! oob_error 0.25
//! columns none
//! lambda 1.0 0.5 0.0
//! weights_gamma 1.0
//! class 0 no
//! class 1 yes
//! tree 0
//! I 0 2.5 0.5 4
//! L 2 0
//! L 0 2
//! tree 1
//! L 2 2
//! end
//! ```
//!
//! Tree nodes are written in pre-order, one per line: `I feature threshold
//! gain n_node` for a split, `L count_0 count_1 ...` for a leaf. Reals use
//! the shortest decimal form that parses back to the same bits. `columns`
//! lists the original feature indices a restricted forest was trained on.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{Forest, ForestConfig, Mode};
use crate::error::{Error, Result};
use crate::math::{ClassCounts, RegWeights};
use crate::tree::{SplitSpec, TreeNode};

pub const MODEL_MAGIC: &str = "guided-forest-model 1";

fn write_opt<T: std::fmt::Display>(out: &mut String, key: &str, value: Option<T>) {
    match value {
        Some(v) => writeln!(out, "{key} {v}").unwrap(),
        None => writeln!(out, "{key} none").unwrap(),
    }
}

fn write_node(out: &mut String, node: &TreeNode) {
    for node in node.nodes() {
        match node {
            TreeNode::Internal { split, gain, n_node, .. } => {
                writeln!(out, "I {} {:?} {:?} {}", split.feature, split.threshold, gain, n_node).unwrap();
            }
            TreeNode::Leaf { counts, .. } => {
                out.push('L');
                for c in counts.counts() {
                    write!(out, " {c}").unwrap();
                }
                out.push('\n');
            }
        }
    }
}

impl Forest {
    pub fn to_model_string(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        writeln!(out, "{MODEL_MAGIC}").unwrap();
        writeln!(out, "mode {}", c.mode).unwrap();
        writeln!(out, "master_seed {}", c.master_seed).unwrap();
        writeln!(out, "gamma {:?}", c.gamma).unwrap();
        writeln!(out, "n_trees {}", self.trees.len()).unwrap();
        writeln!(out, "n_features {}", self.n_features).unwrap();
        writeln!(out, "n_classes {}", self.n_classes).unwrap();
        write_opt(&mut out, "mtry", c.mtry);
        writeln!(out, "min_leaf_size {}", c.min_leaf_size).unwrap();
        write_opt(&mut out, "max_depth", c.max_depth);
        writeln!(out, "rrf_lambda {:?}", c.rrf_lambda).unwrap();
        write_opt(&mut out, "oob_error", self.oob_error.map(|e| format!("{e:?}")));
        match &self.columns {
            Some(cols) => {
                out.push_str("columns");
                for col in cols {
                    write!(out, " {col}").unwrap();
                }
                out.push('\n');
            }
            None => out.push_str("columns none\n"),
        }
        out.push_str("lambda");
        for l in self.weights.lambda() {
            write!(out, " {l:?}").unwrap();
        }
        out.push('\n');
        write_opt(&mut out, "weights_gamma", self.weights.gamma().map(|g| format!("{g:?}")));
        for (i, name) in self.class_names.iter().enumerate() {
            writeln!(out, "class {i} {name}").unwrap();
        }
        for (t, tree) in self.trees.iter().enumerate() {
            writeln!(out, "tree {t}").unwrap();
            write_node(&mut out, tree);
        }
        out.push_str("end\n");
        out
    }

    /// Text after the header, i.e. the `tree` sections. Two forests with equal
    /// bodies make identical predictions and report identical importances.
    pub fn model_body(&self) -> String {
        let s = self.to_model_string();
        let start = s.find("\ntree ").map_or(s.len(), |i| i + 1);
        s[start..].to_string()
    }

    pub fn from_model_str(text: &str) -> Result<Forest> {
        Parser::new(text).forest()
    }
}

pub fn write_model(path: impl AsRef<Path>, forest: &Forest) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, forest.to_model_string()).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Forest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Forest::from_model_str(&text)
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line_no: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { lines: text.lines().enumerate().peekable(), line_no: 0 }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat { line: self.line_no, message: message.into() }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, line)) => {
                self.line_no = i + 1;
                Ok(line)
            }
            None => {
                self.line_no += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    /// Next line, which must start with `key`; returns the rest.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            _ if line == key => Ok(""),
            _ => Err(self.err(format!("expected `{key}`, found {line:?}"))),
        }
    }

    fn parse<T: FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid {what}: {s:?}")))
    }

    fn value<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let s = self.field(key)?;
        self.parse(s, key)
    }

    fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let s = self.field(key)?;
        if s == "none" {
            Ok(None)
        } else {
            self.parse(s, key).map(Some)
        }
    }

    fn list<T: FromStr>(&self, s: &str, what: &str) -> Result<Vec<T>> {
        s.split_whitespace().map(|tok| self.parse(tok, what)).collect()
    }

    fn forest(mut self) -> Result<Forest> {
        let magic = self.next_line()?;
        if magic != MODEL_MAGIC {
            return Err(self.err(format!("not a model file (expected {MODEL_MAGIC:?})")));
        }
        let mode: Mode = {
            let s = self.field("mode")?;
            s.parse().map_err(|_| self.err(format!("unknown mode {s:?}")))?
        };
        let master_seed = self.value("master_seed")?;
        let gamma = self.value("gamma")?;
        let n_trees: usize = self.value("n_trees")?;
        let n_features: usize = self.value("n_features")?;
        let n_classes: usize = self.value("n_classes")?;
        let mtry = self.optional("mtry")?;
        let min_leaf_size = self.value("min_leaf_size")?;
        let max_depth = self.optional("max_depth")?;
        let rrf_lambda = self.value("rrf_lambda")?;
        let oob_error = self.optional("oob_error")?;
        let columns = {
            let s = self.field("columns")?;
            if s == "none" {
                None
            } else {
                Some(self.list::<usize>(s, "column")?)
            }
        };
        let lambda = {
            let s = self.field("lambda")?;
            self.list::<f64>(s, "lambda")?
        };
        if lambda.len() != n_features {
            return Err(self.err(format!("{} weights for {n_features} features", lambda.len())));
        }
        let weights_gamma = self.optional("weights_gamma")?;
        let mut class_names = Vec::with_capacity(n_classes);
        for i in 0..n_classes {
            let rest = self.field("class")?;
            let (id, name) = rest.split_once(' ').unwrap_or((rest, ""));
            if self.parse::<usize>(id, "class id")? != i {
                return Err(self.err(format!("expected class {i}")));
            }
            class_names.push(name.to_string());
        }
        let mut trees = Vec::with_capacity(n_trees);
        for t in 0..n_trees {
            let id: usize = self.value("tree")?;
            if id != t {
                return Err(self.err(format!("expected tree {t}, found {id}")));
            }
            trees.push(self.node(n_features, n_classes)?);
        }
        let end = self.next_line()?;
        if end != "end" {
            return Err(self.err(format!("expected `end`, found {end:?}")));
        }
        let config = ForestConfig {
            n_trees,
            mode,
            gamma,
            mtry,
            master_seed,
            min_leaf_size,
            max_depth,
            rrf_lambda,
            workers: None,
        };
        for (index, &value) in lambda.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::LambdaOutOfRange { index, value });
            }
        }
        Ok(Forest {
            trees,
            config,
            weights: RegWeights::from_parts(lambda, weights_gamma),
            n_features,
            n_classes,
            class_names,
            columns,
            oob_error,
        })
    }

    fn node(&mut self, n_features: usize, n_classes: usize) -> Result<TreeNode> {
        let line = self.next_line()?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("L") => {
                let counts: Vec<usize> = tokens.map(|t| self.parse(t, "class count")).collect::<Result<_>>()?;
                if counts.len() != n_classes {
                    return Err(self.err(format!("leaf has {} counts for {n_classes} classes", counts.len())));
                }
                Ok(TreeNode::leaf(ClassCounts::new(counts)))
            }
            Some("I") => {
                let fields: Vec<&str> = tokens.collect();
                let [feature, threshold, gain, n_node] = fields[..] else {
                    return Err(self.err("split record needs feature, threshold, gain, n_node"));
                };
                let feature: usize = self.parse(feature, "feature")?;
                if feature >= n_features {
                    return Err(self.err(format!("feature {feature} out of range")));
                }
                let split = SplitSpec { feature, threshold: self.parse(threshold, "threshold")? };
                let gain = self.parse(gain, "gain")?;
                let n_node = self.parse(n_node, "n_node")?;
                let left = self.node(n_features, n_classes)?;
                let right = self.node(n_features, n_classes)?;
                Ok(TreeNode::Internal { split, gain, n_node, left: Box::new(left), right: Box::new(right) })
            }
            _ => Err(self.err(format!("expected a node record, found {line:?}"))),
        }
    }
}
