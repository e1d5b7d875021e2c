//! Feature selection with guided forests.
//!
//! 1. Train an ordinary RF (the guide) on all features.
//! 2. Normalize its importances by the maximum and turn them into per-feature
//!    weights `lambda_i = (1 - gamma) + gamma * imp_i / imp_max`.
//! 3. Train a guided forest (GRF, or GRRF in sequential mode) with those
//!    weights; the features its splits use are the selection.
//! 4. Optionally retrain an ordinary RF on the selected columns only.
//!
//! Each stage gets its own seed derived from `config.master_seed` with the
//! tags in [`crate::rng::tags`].

use std::fs;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{build_forest, Forest, ForestConfig, Mode};
use crate::math::{compute_lambda, normalize_importance, ImportanceVector, RegWeights};
use crate::rng::{derive_seed, tags};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestSummary {
    pub mode: Mode,
    pub master_seed: u64,
    pub n_trees: usize,
    pub gamma: f64,
}

impl ForestSummary {
    fn of(forest: &Forest) -> Self {
        let c = forest.config();
        ForestSummary { mode: c.mode, master_seed: c.master_seed, n_trees: forest.trees().len(), gamma: c.gamma }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Ascending feature indices used by the selector forest.
    pub selected_features: Vec<usize>,
    /// Absent when the weights were supplied directly.
    pub guide_importance: Option<ImportanceVector>,
    pub weights: RegWeights,
    pub guide_forest: Option<ForestSummary>,
    pub selector_forest: ForestSummary,
}

/// A selection together with the forests that produced it.
#[derive(Debug, Clone)]
pub struct SelectionRun {
    pub result: SelectionResult,
    pub guide: Option<Forest>,
    pub selector: Forest,
}

pub fn guide_seed(config: &ForestConfig) -> u64 {
    derive_seed(config.master_seed, tags::GUIDE)
}

pub fn selector_seed(config: &ForestConfig) -> u64 {
    derive_seed(config.master_seed, tags::SELECTOR)
}

pub fn final_seed(config: &ForestConfig) -> u64 {
    derive_seed(config.master_seed, tags::FINAL)
}

/// The ordinary RF whose importances guide selection.
pub fn train_guide(data: &Dataset, config: &ForestConfig) -> Result<Forest> {
    let guide_config = ForestConfig { mode: Mode::Rf, gamma: 0.0, master_seed: guide_seed(config), ..config.clone() };
    build_forest(data, &guide_config, None)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::GammaOutOfRange(gamma))
    }
}

fn selector_mode(mode: Mode) -> Mode {
    if mode.is_sequential() {
        Mode::Grrf
    } else {
        Mode::Grf
    }
}

/// Steps 2-3 from given guide importances. `config.mode` picks GRF (RF/GRF)
/// or GRRF (RRF/GRRF).
pub fn select_from_importance(
    data: &Dataset,
    importance: &ImportanceVector,
    gamma: f64,
    config: &ForestConfig,
) -> Result<(SelectionResult, Forest)> {
    check_gamma(gamma)?;
    if importance.len() != data.n_features() {
        return Err(Error::LambdaLengthMismatch { expected: data.n_features(), got: importance.len() });
    }
    let normalized = normalize_importance(importance)?;
    let weights = compute_lambda(&normalized, gamma)?;
    let selector_config = ForestConfig {
        mode: selector_mode(config.mode),
        gamma,
        master_seed: selector_seed(config),
        ..config.clone()
    };
    let selector = build_forest(data, &selector_config, Some(&weights))?;
    let result = SelectionResult {
        selected_features: selector.feature_set().into_iter().collect(),
        guide_importance: Some(importance.clone()),
        weights,
        guide_forest: None,
        selector_forest: ForestSummary::of(&selector),
    };
    Ok((result, selector))
}

fn guided_selection(data: &Dataset, gamma: f64, config: &ForestConfig, mode: Mode) -> Result<SelectionRun> {
    check_gamma(gamma)?;
    let guide = train_guide(data, config)?;
    let config = ForestConfig { mode, ..config.clone() };
    let (mut result, selector) = select_from_importance(data, &guide.importance(), gamma, &config)?;
    result.guide_forest = Some(ForestSummary::of(&guide));
    Ok(SelectionRun { result, guide: Some(guide), selector })
}

/// GRF feature selection: guide RF, weights, then the GRF's used features.
pub fn grf_select(data: &Dataset, gamma: f64, config: &ForestConfig) -> Result<SelectionResult> {
    grf_select_run(data, gamma, config).map(|run| run.result)
}

pub fn grf_select_run(data: &Dataset, gamma: f64, config: &ForestConfig) -> Result<SelectionRun> {
    guided_selection(data, gamma, config, Mode::Grf)
}

/// GRRF feature selection: as [`grf_select`] with a sequential selector.
pub fn grrf_select_run(data: &Dataset, gamma: f64, config: &ForestConfig) -> Result<SelectionRun> {
    guided_selection(data, gamma, config, Mode::Grrf)
}

/// Ordinary RF on `selected` columns, with `mtry` recomputed for the reduced
/// width. The returned forest takes rows in the original feature space.
pub fn rf_on_selection(data: &Dataset, selected: &[usize], config: &ForestConfig) -> Result<Forest> {
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let restricted = data.select_columns(selected)?;
    let final_config = ForestConfig {
        mode: Mode::Rf,
        gamma: 0.0,
        mtry: None,
        master_seed: final_seed(config),
        ..config.clone()
    };
    let forest = build_forest(&restricted, &final_config, None)?;
    Ok(forest.lift_columns(selected, data.n_features()))
}

/// GRF selection followed by an RF on the selected features (GRF-RF).
pub fn grf_rf(data: &Dataset, gamma: f64, config: &ForestConfig) -> Result<(SelectionResult, Forest)> {
    let run = grf_select_run(data, gamma, config)?;
    let forest = rf_on_selection(data, &run.result.selected_features, config)?;
    Ok((run.result, forest))
}

/// GRRF selection followed by an RF on the selected features (GRRF-RF).
/// The usual `gamma` is 0.1.
pub fn grrf_rf(data: &Dataset, gamma: f64, config: &ForestConfig) -> Result<(SelectionResult, Forest)> {
    let run = grrf_select_run(data, gamma, config)?;
    let forest = rf_on_selection(data, &run.result.selected_features, config)?;
    Ok((run.result, forest))
}

/// Selection from externally supplied weights, skipping the guide forest.
pub fn select_with_custom_weights(data: &Dataset, lambda: &RegWeights, config: &ForestConfig) -> Result<SelectionResult> {
    if lambda.len() != data.n_features() {
        return Err(Error::LambdaLengthMismatch { expected: data.n_features(), got: lambda.len() });
    }
    let weights = RegWeights::custom(lambda.lambda().to_vec())?;
    let selector_config = ForestConfig {
        mode: selector_mode(config.mode),
        master_seed: selector_seed(config),
        ..config.clone()
    };
    let selector = build_forest(data, &selector_config, Some(&weights))?;
    Ok(SelectionResult {
        selected_features: selector.feature_set().into_iter().collect(),
        guide_importance: None,
        weights,
        guide_forest: None,
        selector_forest: ForestSummary::of(&selector),
    })
}

/// Weights file: one real in `[0, 1]` per line, in feature order. Blank lines
/// and lines starting with `#` are skipped.
pub fn read_lambda_file(path: impl AsRef<Path>, n_features: usize) -> Result<RegWeights> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lambda(&text, n_features)
}

pub fn parse_lambda(text: &str, n_features: usize) -> Result<RegWeights> {
    let mut lambda = Vec::with_capacity(n_features);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| Error::Parse {
            row: i + 1,
            column: 1,
            message: format!("not a number: {line:?}"),
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::LambdaOutOfRange { index: lambda.len(), value });
        }
        lambda.push(value);
    }
    if lambda.len() != n_features {
        return Err(Error::LambdaLengthMismatch { expected: n_features, got: lambda.len() });
    }
    RegWeights::custom(lambda)
}
