//! Pair-count sensitivity and rank ablation sweeps over the evaluation protocol.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{svd, variance_explained};
use crate::protocol::{evaluate, fit_map};
use crate::seed::derive_seed;
use crate::types::{EmbeddingSet, EvalConfig, MappingMode, PairProtocol, PairSubsample};

pub const DEFAULT_POINTS: usize = 100;
pub const DEFAULT_DROP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub num_points: usize,
    pub seed: u64,
    pub drop_threshold: f64,
    /// Independent subsets drawn per `p`; the curve reports their mean.
    pub repetitions: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            num_points: DEFAULT_POINTS,
            seed: crate::seed::DEFAULT_SEED,
            drop_threshold: DEFAULT_DROP,
            repetitions: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub p: usize,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurve {
    pub source_tag: String,
    pub target_tag: String,
    pub points: Vec<SensitivityPoint>,
    pub full_accuracy: f64,
    /// Smallest swept `p` within `drop_threshold` of `full_accuracy`.
    pub p_for_drop: Option<usize>,
    pub drop_threshold: f64,
    /// Matched training pairs available in every fold.
    pub m: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub config: EvalConfig,
}

/// `num_points` integers spread uniformly over `[1, m]`, rounded and deduplicated.
pub fn sweep_values(m: usize, num_points: usize) -> Vec<usize> {
    if m == 0 || num_points == 0 {
        return Vec::new();
    }
    if num_points == 1 {
        return vec![m];
    }
    let step = (m - 1) as f64 / (num_points - 1) as f64;
    let mut values: Vec<usize> = (0..num_points)
        .map(|i| (1.0 + i as f64 * step).round() as usize)
        .map(|p| p.clamp(1, m))
        .collect();
    values.dedup();
    values
}

pub fn sensitivity_sweep(
    source: &EmbeddingSet,
    target: &EmbeddingSet,
    proto: &PairProtocol,
    config: &EvalConfig,
    spec: &SweepSpec,
) -> Result<SensitivityCurve> {
    if spec.num_points < 2 {
        return Err(Error::protocol(
            "a sensitivity sweep needs at least 2 points",
        ));
    }
    if spec.repetitions == 0 {
        return Err(Error::protocol("repetitions must be at least 1"));
    }
    if !(0.0..=1.0).contains(&spec.drop_threshold) {
        return Err(Error::protocol(format!(
            "drop threshold {} outside [0, 1]",
            spec.drop_threshold
        )));
    }
    if config.mapping_mode == MappingMode::Identity {
        return Err(Error::protocol(
            "a sensitivity sweep needs a fitted mapping mode",
        ));
    }
    let m = (0..proto.n_folds())
        .map(|f| proto.training_matched_count(f))
        .min()
        .unwrap_or(0);
    if m == 0 {
        return Err(Error::protocol("some fold has no matched training pairs"));
    }

    let full_config = config.with_subsample(PairSubsample::AllMatched);
    let full_accuracy = evaluate(source, target, proto, &full_config)?.mean_accuracy;

    let points = sweep_values(m, spec.num_points)
        .into_par_iter()
        .map(|p| {
            let mut total = 0.0;
            for rep in 0..spec.repetitions {
                let seed = derive_seed(spec.seed, "sensitivity", &[p as u64, rep as u64]);
                let cfg = config.with_subsample(PairSubsample::Count { p, seed });
                total += evaluate(source, target, proto, &cfg)?.mean_accuracy;
            }
            Ok(SensitivityPoint {
                p,
                mean_accuracy: total / spec.repetitions as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let p_for_drop = points
        .iter()
        .find(|pt| pt.mean_accuracy >= full_accuracy - spec.drop_threshold)
        .map(|pt| pt.p);

    Ok(SensitivityCurve {
        source_tag: source.system_tag().to_string(),
        target_tag: target.system_tag().to_string(),
        points,
        full_accuracy,
        p_for_drop,
        drop_threshold: spec.drop_threshold,
        m,
        repetitions: spec.repetitions,
        seed: spec.seed,
        config: full_config,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankPoint {
    pub k: usize,
    pub mean_accuracy: f64,
    /// Share of squared singular values of the all-pairs map kept at rank `k`.
    pub variance_explained: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCurve {
    pub source_tag: String,
    pub target_tag: String,
    pub points: Vec<RankPoint>,
    /// Accuracy of the untruncated fitted map.
    pub fitted_accuracy: f64,
    /// Spectrum of the map fit on every matched pair of the protocol.
    pub singular_values: Vec<f64>,
    pub config: EvalConfig,
}

pub fn rank_sweep(
    source: &EmbeddingSet,
    target: &EmbeddingSet,
    proto: &PairProtocol,
    config: &EvalConfig,
    ranks: &[usize],
) -> Result<RankCurve> {
    let full = source.dim().min(target.dim());
    if ranks.is_empty() {
        return Err(Error::protocol("no ranks to sweep"));
    }
    if let Some(&bad) = ranks.iter().find(|&&k| k == 0 || k > full) {
        return Err(Error::protocol(format!("rank {bad} outside [1, {full}]")));
    }
    let mut ks = ranks.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let fitted_config = config.with_mode(MappingMode::Fitted);
    let fitted_accuracy = evaluate(source, target, proto, &fitted_config)?.mean_accuracy;
    let whole = fit_map(source, target, proto, &fitted_config, None)?;
    let spectrum = svd(whole.matrix())?;

    let points = ks
        .into_par_iter()
        .map(|k| {
            let cfg = config.with_mode(MappingMode::TruncatedRank(k));
            Ok(RankPoint {
                k,
                mean_accuracy: evaluate(source, target, proto, &cfg)?.mean_accuracy,
                variance_explained: variance_explained(&spectrum, k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RankCurve {
        source_tag: source.system_tag().to_string(),
        target_tag: target.system_tag().to_string(),
        points,
        fitted_accuracy,
        singular_values: spectrum.singular_values,
        config: fitted_config,
    })
}
