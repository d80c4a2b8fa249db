//! Domain types shared across the crate.
//!
//! Every type here is immutable once built; validation happens in the
//! constructors so downstream code can rely on the invariants.

use std::collections::{HashMap, HashSet};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque entity key: an image, a video, or a synthetic sample.
pub type EntityId = String;

/// A labeled collection of fixed-dimension embeddings produced by one system.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    system_tag: String,
    ids: Vec<EntityId>,
    index: HashMap<EntityId, usize>,
    data: Vec<f64>,
}

impl EmbeddingSet {
    pub fn new(dim: usize, system_tag: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::protocol("embedding dimension must be positive"));
        }
        Ok(Self {
            dim,
            system_tag: system_tag.into(),
            ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    /// Appends an entry, rejecting wrong lengths, non-finite values and duplicate ids.
    pub fn insert(&mut self, id: impl Into<EntityId>, vector: &[f64]) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::protocol(format!(
                "entity {id:?} has {} values, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if let Some(bad) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::protocol(format!(
                "entity {id:?} has a non-finite value at index {bad}"
            )));
        }
        if self.index.contains_key(&id) {
            return Err(Error::protocol(format!("duplicate entity id {id:?}")));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn system_tag(&self) -> &str {
        &self.system_tag
    }

    pub fn with_system_tag(mut self, tag: impl Into<String>) -> Self {
        self.system_tag = tag.into();
        self
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[EntityId] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&row| self.row(row))
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), self.row(i)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Same,
    Different,
}

impl Label {
    pub fn is_same(self) -> bool {
        matches!(self, Label::Same)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Same => f.write_str("same"),
            Label::Different => f.write_str("different"),
        }
    }
}

/// One verification trial: `id_a` is looked up in the source system,
/// `id_b` in the target system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub id_a: EntityId,
    pub id_b: EntityId,
    pub label: Label,
}

impl Pair {
    pub fn new(id_a: impl Into<EntityId>, id_b: impl Into<EntityId>, label: Label) -> Self {
        Self {
            id_a: id_a.into(),
            id_b: id_b.into(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Fold {
    pub pairs: Vec<Pair>,
}

impl Fold {
    pub fn new(pairs: Vec<Pair>) -> Self {
        Self { pairs }
    }

    pub fn matched(&self) -> impl Iterator<Item = &Pair> {
        self.pairs.iter().filter(|p| p.label.is_same())
    }

    pub fn matched_count(&self) -> usize {
        self.matched().count()
    }
}

/// Fold-partitioned verification pairs, in the role of LFW's `pairs.txt`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairProtocol {
    folds: Vec<Fold>,
}

impl PairProtocol {
    pub fn new(folds: Vec<Fold>) -> Result<Self> {
        if folds.len() < 2 {
            return Err(Error::protocol(format!(
                "a protocol needs at least 2 folds, got {}",
                folds.len()
            )));
        }
        let mut seen = HashSet::new();
        for (f, fold) in folds.iter().enumerate() {
            for pair in &fold.pairs {
                if !seen.insert((&pair.id_a, &pair.id_b)) {
                    return Err(Error::protocol(format!(
                        "pair ({}, {}) appears more than once (again in fold {f})",
                        pair.id_a, pair.id_b
                    )));
                }
            }
        }
        Ok(Self { folds })
    }

    pub fn folds(&self) -> &[Fold] {
        &self.folds
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.folds.iter().map(|f| f.pairs.len()).sum()
    }

    /// Pairs from every fold except `held_out`, in fold order.
    pub fn training_pairs(&self, held_out: usize) -> impl Iterator<Item = &Pair> {
        self.folds
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != held_out)
            .flat_map(|(_, f)| f.pairs.iter())
    }

    /// Number of matched pairs available to fit a map when `held_out` is the test fold.
    pub fn training_matched_count(&self, held_out: usize) -> usize {
        self.training_pairs(held_out)
            .filter(|p| p.label.is_same())
            .count()
    }

    /// Checks that every `id_a` resolves in `source` and every `id_b` in `target`.
    pub fn check_resolves(&self, source: &EmbeddingSet, target: &EmbeddingSet) -> Result<()> {
        for (f, fold) in self.folds.iter().enumerate() {
            for pair in &fold.pairs {
                if !source.contains(&pair.id_a) {
                    return Err(Error::protocol(format!(
                        "entity {:?} (fold {f}) not found in source set {:?}",
                        pair.id_a,
                        source.system_tag()
                    )));
                }
                if !target.contains(&pair.id_b) {
                    return Err(Error::protocol(format!(
                        "entity {:?} (fold {f}) not found in target set {:?}",
                        pair.id_b,
                        target.system_tag()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A source_dim x target_dim matrix `M`; a source row vector `x` maps to `x M`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    pub lambda: f64,
    pub n_pairs_used: usize,
    pub source_tag: String,
    pub target_tag: String,
}

impl LinearMap {
    pub fn new(
        matrix: DMatrix<f64>,
        lambda: f64,
        n_pairs_used: usize,
        source_tag: impl Into<String>,
        target_tag: impl Into<String>,
    ) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::protocol("map dimensions must be positive"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("map matrix has non-finite entries"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::protocol(format!(
                "ridge coefficient must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self {
            matrix,
            lambda,
            n_pairs_used,
            source_tag: source_tag.into(),
            target_tag: target_tag.into(),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim), 0.0, 0, "", "")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn source_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn target_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Returns `Mᵀ x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.source_dim() {
            return Err(Error::protocol(format!(
                "vector of length {} does not match map source dimension {}",
                x.len(),
                self.source_dim()
            )));
        }
        Ok((0..self.target_dim())
            .map(|j| {
                self.matrix
                    .column(j)
                    .iter()
                    .zip(x)
                    .map(|(m, v)| m * v)
                    .sum()
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingMode {
    Fitted,
    Identity,
    TruncatedRank(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSubsample {
    AllMatched,
    /// Draw `p` matched training pairs per fold; per-fold subsets derive from `seed`.
    Count {
        p: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub lambda: f64,
    pub mapping_mode: MappingMode,
    pub pairs_subsample: PairSubsample,
    pub normalize_before_fit: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mapping_mode: MappingMode::Fitted,
            pairs_subsample: PairSubsample::AllMatched,
            normalize_before_fit: true,
        }
    }
}

impl EvalConfig {
    pub fn with_mode(mut self, mode: MappingMode) -> Self {
        self.mapping_mode = mode;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_subsample(mut self, subsample: PairSubsample) -> Self {
        self.pairs_subsample = subsample;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::protocol(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if let MappingMode::TruncatedRank(0) = self.mapping_mode {
            return Err(Error::protocol("truncation rank must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold_index: usize,
    pub threshold: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Training scores held only one label, so the threshold is all-accept or all-reject.
    #[serde(default)]
    pub degenerate_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub source_tag: String,
    pub target_tag: String,
    pub per_fold: Vec<FoldResult>,
    pub mean_accuracy: f64,
    /// Population standard deviation of the per-fold test accuracies.
    pub std_accuracy: f64,
    pub config: EvalConfig,
}

impl EvaluationReport {
    pub fn from_folds(
        source_tag: impl Into<String>,
        target_tag: impl Into<String>,
        per_fold: Vec<FoldResult>,
        config: EvalConfig,
    ) -> Self {
        let (mean_accuracy, std_accuracy) = mean_std(per_fold.iter().map(|f| f.test_accuracy));
        Self {
            source_tag: source_tag.into(),
            target_tag: target_tag.into(),
            per_fold,
            mean_accuracy,
            std_accuracy,
            config,
        }
    }

    pub fn has_degenerate_threshold(&self) -> bool {
        self.per_fold.iter().any(|f| f.degenerate_threshold)
    }

    /// `mean ± std` as percentages with two decimals, e.g. `99.03% ± 0.42%`.
    pub fn summary(&self) -> String {
        format!(
            "{:.2}% ± {:.2}%",
            100.0 * self.mean_accuracy,
            100.0 * self.std_accuracy
        )
    }
}

pub(crate) fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// One embedding system in a synthetic world: `output = normalize(Aᵀ latent) + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSystem {
    /// latent_dim x out_dim.
    pub transform: DMatrix<f64>,
    /// Standard deviation of per-coordinate output-space noise.
    pub output_sigma: f64,
    pub out_dim: usize,
}

/// Ground-truth latent identities shared by several linear embedding systems.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub n_identities: usize,
    pub latent_dim: usize,
    pub images_per_identity: usize,
    /// Standard deviation of per-image latent jitter, shared by every system.
    pub latent_sigma: f64,
    /// Unit-norm latent identity vectors, one per identity.
    pub identities: Vec<Vec<f64>>,
    pub systems: Vec<SyntheticSystem>,
    pub seed: u64,
}
