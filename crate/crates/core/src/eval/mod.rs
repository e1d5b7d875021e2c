//! Replicated train/test benchmarking with paired significance tests.
//!
//! For every dataset and replicate, each method trains on the same training
//! split and is scored on the same test split. Methods are then compared to a
//! baseline with a paired t-test over the per-replicate error rates.

mod report;
mod split;
mod ttest;

pub use report::{csv_report, write_csv_report};
pub use split::{split_indices, split_train_test, SplitPlan};
pub use ttest::{paired_t_test, regularized_incomplete_beta, student_t_two_sided, TTest};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestConfig, Mode};
use crate::pipeline::{rf_on_selection, select_from_importance, train_guide};

/// Fraction of positions where `predicted` and `actual` disagree.
pub fn error_rate(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch(predicted.len(), actual.len()));
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let wrong = predicted.iter().zip(actual).filter(|(p, a)| p != a).count();
    Ok(wrong as f64 / predicted.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rf,
    /// The GRF selector used directly as a classifier.
    Grf,
    /// RF retrained on the GRF-selected features.
    GrfRf,
    /// The GRRF selector used directly as a classifier.
    Grrf,
    /// RF retrained on the GRRF-selected features.
    GrrfRf,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::GrfRf, Method::Grf, Method::Rf, Method::Grrf, Method::GrrfRf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rf => "RF",
            Method::Grf => "GRF",
            Method::GrfRf => "GRF-RF",
            Method::Grrf => "GRRF",
            Method::GrrfRf => "GRRF-RF",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "rf" => Ok(Method::Rf),
            "grf" => Ok(Method::Grf),
            "grf-rf" => Ok(Method::GrfRf),
            "grrf" => Ok(Method::Grrf),
            "grrf-rf" => Ok(Method::GrrfRf),
            _ => Err(Error::InvalidConfig(format!(
                "unknown method {s:?} (expected rf, grf, grf-rf, grrf or grrf-rf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    /// Trees, mtry and leaf settings for every forest; mode, gamma and seed
    /// are set per method and replicate.
    pub forest: ForestConfig,
    pub grf_gamma: f64,
    pub grrf_gamma: f64,
    pub plan: SplitPlan,
    /// Significance level for the marks and the win-lose-tie tally.
    pub alpha: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            forest: ForestConfig::default(),
            grf_gamma: 1.0,
            grrf_gamma: 0.1,
            plan: SplitPlan::default(),
            alpha: 0.05,
        }
    }
}

/// Significance of a method's error relative to the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    /// Significantly higher error than the baseline.
    Higher,
    /// Significantly lower error than the baseline.
    Lower,
    None,
}

impl Mark {
    pub fn symbol(self) -> &'static str {
        match self {
            Mark::Higher => "\u{2218}",
            Mark::Lower => "\u{2022}",
            Mark::None => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub test: TTest,
    pub mark: Mark,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub errors: Vec<f64>,
    pub features_used: Vec<usize>,
    /// Size of the selected feature subset, for the selection methods.
    pub selected: Vec<Option<usize>>,
    pub mean_error: f64,
    pub mean_features: f64,
    /// `None` for the baseline column itself.
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetReport {
    pub name: String,
    pub n_rows: usize,
    pub n_classes: usize,
    pub n_features: usize,
    /// Forest master seed of each replicate.
    pub seeds: Vec<u64>,
    pub results: Vec<MethodResult>,
    /// Set when the dataset could not be evaluated; `results` is then empty.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub methods: Vec<Method>,
    /// Position of the baseline in `methods`.
    pub baseline: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub datasets: Vec<DatasetReport>,
}

/// Wins, losses and ties of one method against the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub win: usize,
    pub lose: usize,
    pub tie: usize,
}

impl fmt::Display for Tally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.win, self.lose, self.tie)
    }
}

impl EvalReport {
    fn evaluated(&self) -> impl Iterator<Item = &DatasetReport> {
        self.datasets.iter().filter(|d| d.failure.is_none())
    }

    /// Datasets where method `index` has significantly lower (win), higher
    /// (lose) or indistinguishable (tie) error than the baseline.
    pub fn win_lose_tie(&self, index: usize) -> Tally {
        let mut tally = Tally::default();
        for d in self.evaluated() {
            match d.results[index].comparison.as_ref().map_or(Mark::None, |c| c.mark) {
                Mark::Lower => tally.win += 1,
                Mark::Higher => tally.lose += 1,
                Mark::None => tally.tie += 1,
            }
        }
        tally
    }

    /// Same tally by comparing mean errors only, ignoring significance.
    pub fn win_lose_tie_by_mean(&self, index: usize) -> Tally {
        let mut tally = Tally::default();
        for d in self.evaluated() {
            let mine = d.results[index].mean_error;
            let base = d.results[self.baseline].mean_error;
            if mine < base {
                tally.win += 1;
            } else if mine > base {
                tally.lose += 1;
            } else {
                tally.tie += 1;
            }
        }
        tally
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetReport> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

impl DatasetReport {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

struct Outcome {
    error: f64,
    features_used: usize,
    selected: Option<usize>,
}

/// One replicate's forests, trained on demand and shared between methods.
struct Replicate<'a> {
    train: &'a Dataset,
    config: ForestConfig,
    grf_gamma: f64,
    grrf_gamma: f64,
    guide: Option<Forest>,
    grf: Option<(Vec<usize>, Forest)>,
    grrf: Option<(Vec<usize>, Forest)>,
}

impl Replicate<'_> {
    fn guide(&mut self) -> Result<&Forest> {
        if self.guide.is_none() {
            self.guide = Some(train_guide(self.train, &self.config)?);
        }
        Ok(self.guide.as_ref().unwrap())
    }

    fn selector(&mut self, sequential: bool) -> Result<&(Vec<usize>, Forest)> {
        let cached = if sequential { self.grrf.is_some() } else { self.grf.is_some() };
        if !cached {
            let importance = self.guide()?.importance();
            let (mode, gamma) = if sequential { (Mode::Grrf, self.grrf_gamma) } else { (Mode::Grf, self.grf_gamma) };
            let config = ForestConfig { mode, ..self.config.clone() };
            let (result, forest) = select_from_importance(self.train, &importance, gamma, &config)?;
            let slot = if sequential { &mut self.grrf } else { &mut self.grf };
            *slot = Some((result.selected_features, forest));
        }
        Ok(if sequential { self.grrf.as_ref().unwrap() } else { self.grf.as_ref().unwrap() })
    }

    fn forest_for(&mut self, method: Method) -> Result<(Forest, Option<usize>)> {
        Ok(match method {
            Method::Rf => (self.guide()?.clone(), None),
            Method::Grf | Method::Grrf => {
                let (selected, forest) = self.selector(method == Method::Grrf)?;
                (forest.clone(), Some(selected.len()))
            }
            Method::GrfRf | Method::GrrfRf => {
                let (selected, _) = self.selector(method == Method::GrrfRf)?;
                let selected = selected.clone();
                (rf_on_selection(self.train, &selected, &self.config)?, Some(selected.len()))
            }
        })
    }
}

fn run_replicate(
    data: &Dataset,
    methods: &[Method],
    config: &BenchmarkConfig,
    replicate: usize,
) -> Result<Vec<Outcome>> {
    let (train, test) = split_train_test(data, &config.plan, replicate)?;
    let mut rep = Replicate {
        train: &train,
        config: ForestConfig { master_seed: config.plan.replicate_seed(replicate), ..config.forest.clone() },
        grf_gamma: config.grf_gamma,
        grrf_gamma: config.grrf_gamma,
        guide: None,
        grf: None,
        grrf: None,
    };
    methods
        .iter()
        .map(|&method| {
            let (forest, selected) = rep.forest_for(method)?;
            let predicted = forest.predict_dataset(&test)?;
            Ok(Outcome {
                error: error_rate(&predicted, test.labels())?,
                features_used: forest.feature_set().len(),
                selected,
            })
        })
        .collect()
}

fn mean<T: Copy + Into<f64>>(values: &[T]) -> f64 {
    values.iter().map(|&v| v.into()).sum::<f64>() / values.len() as f64
}

fn evaluate_dataset(name: &str, data: &Dataset, methods: &[Method], baseline: usize, config: &BenchmarkConfig) -> DatasetReport {
    let replicates = config.plan.replicate_count;
    let mut report = DatasetReport {
        name: name.to_string(),
        n_rows: data.n_rows(),
        n_classes: data.n_classes(),
        n_features: data.n_features(),
        seeds: (0..replicates).map(|r| config.plan.replicate_seed(r)).collect(),
        results: Vec::new(),
        failure: None,
    };
    let outcomes: Result<Vec<Vec<Outcome>>> = (0..replicates)
        .into_par_iter()
        .map(|r| run_replicate(data, methods, config, r))
        .collect();
    let outcomes = match outcomes {
        Ok(o) => o,
        Err(e) => {
            report.failure = Some(e.to_string());
            return report;
        }
    };

    let column = |m: usize| -> (Vec<f64>, Vec<usize>, Vec<Option<usize>>) {
        let errors = outcomes.iter().map(|o| o[m].error).collect();
        let used = outcomes.iter().map(|o| o[m].features_used).collect();
        let selected = outcomes.iter().map(|o| o[m].selected).collect();
        (errors, used, selected)
    };
    let (base_errors, _, _) = column(baseline);
    for (m, &method) in methods.iter().enumerate() {
        let (errors, features_used, selected) = column(m);
        let comparison = if m == baseline || replicates < 2 {
            None
        } else {
            // errors_method - errors_baseline: positive t means higher error
            let test = paired_t_test(&errors, &base_errors).expect("equal-length replicate vectors");
            let mark = if test.p_value < config.alpha {
                if test.mean_difference > 0.0 {
                    Mark::Higher
                } else {
                    Mark::Lower
                }
            } else {
                Mark::None
            };
            Some(Comparison { test, mark })
        };
        report.results.push(MethodResult {
            method,
            mean_error: mean(&errors),
            mean_features: features_used.iter().map(|&u| u as f64).sum::<f64>() / replicates as f64,
            errors,
            features_used,
            selected,
            comparison,
        });
    }
    report
}

/// Evaluates every method on every dataset. A dataset that fails (e.g. a
/// class too small to split) is flagged in the report; the others still run.
pub fn run_benchmark(
    datasets: &[(String, Dataset)],
    methods: &[Method],
    baseline: Method,
    config: &BenchmarkConfig,
) -> Result<EvalReport> {
    if datasets.is_empty() {
        return Err(Error::InvalidConfig("no datasets to evaluate".into()));
    }
    if methods.len() < 2 {
        return Err(Error::InvalidConfig("at least two methods are needed for a comparison".into()));
    }
    let baseline_index = methods
        .iter()
        .position(|&m| m == baseline)
        .ok_or_else(|| Error::InvalidConfig(format!("baseline {baseline} is not among the methods")))?;
    config.plan.validate()?;
    if !(0.0..=1.0).contains(&config.grf_gamma) {
        return Err(Error::GammaOutOfRange(config.grf_gamma));
    }
    if !(0.0..=1.0).contains(&config.grrf_gamma) {
        return Err(Error::GammaOutOfRange(config.grrf_gamma));
    }
    let datasets = datasets
        .iter()
        .map(|(name, data)| evaluate_dataset(name, data, methods, baseline_index, config))
        .collect();
    Ok(EvalReport {
        methods: methods.to_vec(),
        baseline: baseline_index,
        alpha: config.alpha,
        replicates: config.plan.replicate_count,
        datasets,
    })
}
