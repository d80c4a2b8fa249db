//! Fold-based verification: threshold search, accuracy, and cross-validated
//! evaluation of a (possibly mapped) pair of embedding systems.
//!
//! For each held-out fold the map is fit on the matched pairs of the other
//! folds, every training pair is scored through the map, the threshold that
//! maximizes training accuracy is chosen, and that threshold is applied to the
//! held-out fold.

use nalgebra::DMatrix;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ridge_fit, truncate_rank};
use crate::metrics::{cosine_distance, l2_normalize, norm, MIN_NORM};
use crate::seed::rng_for;
use crate::types::{
    EmbeddingSet, EvalConfig, EvaluationReport, FoldResult, LinearMap, MappingMode, Pair,
    PairProtocol, PairSubsample,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub pair: Pair,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub tau: f64,
    pub train_accuracy: f64,
    /// Only one label was present; `tau` accepts or rejects everything.
    pub single_class: bool,
}

/// Sentinel offset beyond the extreme distances.
pub fn sentinel_epsilon(min: f64, max: f64) -> f64 {
    f64::max(1e-9, 1e-6 * (max - min))
}

/// Picks the threshold maximizing accuracy under "Same iff distance ≤ τ".
///
/// Candidates are the midpoints between adjacent distinct distances plus one
/// sentinel below the minimum and one above the maximum. Ties go to the
/// smallest candidate.
pub fn find_threshold(scored: &[ScoredPair]) -> Result<Threshold> {
    let distances: Vec<f64> = scored.iter().map(|s| s.distance).collect();
    let same: Vec<bool> = scored.iter().map(|s| s.pair.label.is_same()).collect();
    search_threshold(&distances, &same)
}

pub fn accuracy_at(scored: &[ScoredPair], tau: f64) -> Result<f64> {
    if scored.is_empty() {
        return Err(Error::protocol("accuracy of an empty pair list"));
    }
    let correct = scored
        .iter()
        .filter(|s| (s.distance <= tau) == s.pair.label.is_same())
        .count();
    Ok(correct as f64 / scored.len() as f64)
}

pub(crate) fn search_threshold(distances: &[f64], same: &[bool]) -> Result<Threshold> {
    let n = distances.len();
    if n == 0 {
        return Err(Error::protocol("threshold search over an empty pair list"));
    }
    if let Some(bad) = distances.iter().position(|d| !d.is_finite()) {
        return Err(Error::numerical(format!("distance {bad} is not finite")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
    let min = distances[order[0]];
    let max = distances[order[n - 1]];
    let eps = sentinel_epsilon(min, max);

    let n_same = same.iter().filter(|&&s| s).count();
    let n_diff = n - n_same;

    // all-reject sentinel
    let mut best_correct = n_diff;
    let mut best_tau = min - eps;

    let (mut same_accepted, mut diff_accepted) = (0usize, 0usize);
    let mut i = 0;
    while i < n {
        let value = distances[order[i]];
        while i < n && distances[order[i]] == value {
            if same[order[i]] {
                same_accepted += 1;
            } else {
                diff_accepted += 1;
            }
            i += 1;
        }
        let tau = if i < n {
            let next = distances[order[i]];
            let mid = value + (next - value) / 2.0;
            if mid < next {
                mid
            } else {
                value
            }
        } else {
            max + eps
        };
        let correct = same_accepted + (n_diff - diff_accepted);
        if correct > best_correct {
            best_correct = correct;
            best_tau = tau;
        }
    }

    Ok(Threshold {
        tau: best_tau,
        train_accuracy: best_correct as f64 / n as f64,
        single_class: n_same == 0 || n_diff == 0,
    })
}

/// Evaluation output plus, per fold, whether each held-out pair was decided correctly.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailedEvaluation {
    pub report: EvaluationReport,
    pub test_correct: Vec<Vec<bool>>,
}

pub fn evaluate(
    source: &EmbeddingSet,
    target: &EmbeddingSet,
    proto: &PairProtocol,
    config: &EvalConfig,
) -> Result<EvaluationReport> {
    evaluate_detailed(source, target, proto, config).map(|d| d.report)
}

pub fn evaluate_detailed(
    source: &EmbeddingSet,
    target: &EmbeddingSet,
    proto: &PairProtocol,
    config: &EvalConfig,
) -> Result<DetailedEvaluation> {
    let prepared = Prepared::new(source, target, proto, config)?;
    let outcomes: Vec<FoldOutcome> = (0..proto.n_folds())
        .into_par_iter()
        .map(|f| prepared.run_fold(f))
        .collect::<Result<_>>()?;

    let mut per_fold = Vec::with_capacity(outcomes.len());
    let mut test_correct = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        per_fold.push(outcome.result);
        test_correct.push(outcome.test_correct);
    }
    Ok(DetailedEvaluation {
        report: EvaluationReport::from_folds(
            source.system_tag(),
            target.system_tag(),
            per_fold,
            *config,
        ),
        test_correct,
    })
}

/// Fits the map a fold evaluation would use, on the matched pairs of every
/// fold except `held_out` (or of all folds when `held_out` is `None`).
pub fn fit_map(
    source: &EmbeddingSet,
    target: &EmbeddingSet,
    proto: &PairProtocol,
    config: &EvalConfig,
    held_out: Option<usize>,
) -> Result<LinearMap> {
    let prepared = Prepared::new(source, target, proto, config)?;
    prepared.map_for(held_out)
}

struct FoldOutcome {
    result: FoldResult,
    test_correct: Vec<bool>,
}

/// Pair-aligned copies of the embeddings, laid out one pair per column.
struct Prepared<'a> {
    proto: &'a PairProtocol,
    config: EvalConfig,
    source_tag: &'a str,
    target_tag: &'a str,
    d_s: usize,
    d_t: usize,
    pairs: Vec<&'a Pair>,
    fold_of: Vec<usize>,
    /// d_s x n, column i = source embedding of pair i's `id_a`.
    xs: DMatrix<f64>,
    /// n x d_t row-major, row i = target embedding of pair i's `id_b`.
    ys: Vec<f64>,
}

impl<'a> Prepared<'a> {
    fn new(
        source: &'a EmbeddingSet,
        target: &'a EmbeddingSet,
        proto: &'a PairProtocol,
        config: &EvalConfig,
    ) -> Result<Self> {
        config.validate()?;
        proto.check_resolves(source, target)?;
        let (d_s, d_t) = (source.dim(), target.dim());
        match config.mapping_mode {
            MappingMode::Identity if d_s != d_t => {
                return Err(Error::protocol(format!(
                    "identity mapping needs equal dimensions, got {d_s} and {d_t}"
                )));
            }
            MappingMode::TruncatedRank(k) if k > d_s.min(d_t) => {
                return Err(Error::protocol(format!(
                    "truncation rank {k} exceeds min(source dim, target dim) = {}",
                    d_s.min(d_t)
                )));
            }
            _ => {}
        }

        let mut pairs = Vec::with_capacity(proto.n_pairs());
        let mut fold_of = Vec::with_capacity(proto.n_pairs());
        for (f, fold) in proto.folds().iter().enumerate() {
            for pair in &fold.pairs {
                pairs.push(pair);
                fold_of.push(f);
            }
        }
        let n = pairs.len();
        let mut xs = DMatrix::zeros(d_s, n);
        let mut ys = Vec::with_capacity(n * d_t);
        for (i, pair) in pairs.iter().enumerate() {
            let x = source.get(&pair.id_a).expect("resolved above");
            xs.column_mut(i).copy_from_slice(x);
            let y = target.get(&pair.id_b).expect("resolved above");
            if norm(y) < MIN_NORM {
                return Err(Error::degenerate(format!(
                    "target embedding {:?} of pair ({}, {}) has zero norm",
                    pair.id_b, pair.id_a, pair.id_b
                )));
            }
            ys.extend_from_slice(y);
        }

        Ok(Self {
            proto,
            config: *config,
            source_tag: source.system_tag(),
            target_tag: target.system_tag(),
            d_s,
            d_t,
            pairs,
            fold_of,
            xs,
            ys,
        })
    }

    fn source_col(&self, i: usize) -> &[f64] {
        &self.xs.as_slice()[i * self.d_s..(i + 1) * self.d_s]
    }

    fn target_row(&self, i: usize) -> &[f64] {
        &self.ys[i * self.d_t..(i + 1) * self.d_t]
    }

    /// Indices of the matched pairs used to fit the map for `held_out`.
    fn fit_indices(&self, held_out: Option<usize>) -> Result<Vec<usize>> {
        let available: Vec<usize> = (0..self.pairs.len())
            .filter(|&i| Some(self.fold_of[i]) != held_out && self.pairs[i].label.is_same())
            .collect();
        match self.config.pairs_subsample {
            PairSubsample::AllMatched => Ok(available),
            PairSubsample::Count { p, seed } => {
                if p == 0 || p > available.len() {
                    return Err(Error::protocol(format!(
                        "subsample size {p} outside [1, {}] matched training pairs",
                        available.len()
                    )));
                }
                let fold_tag = held_out.map_or(u64::MAX, |f| f as u64);
                let mut rng = rng_for(seed, "subsample", &[p as u64, fold_tag]);
                let mut chosen = index::sample(&mut rng, available.len(), p).into_vec();
                chosen.sort_unstable();
                Ok(chosen.into_iter().map(|k| available[k]).collect())
            }
        }
    }

    fn map_for(&self, held_out: Option<usize>) -> Result<LinearMap> {
        if self.config.mapping_mode == MappingMode::Identity {
            return LinearMap::new(
                DMatrix::identity(self.d_s, self.d_t),
                0.0,
                0,
                self.source_tag,
                self.target_tag,
            );
        }
        let rows = self.fit_indices(held_out)?;
        if rows.is_empty() {
            return Err(Error::protocol(format!(
                "no matched training pairs to fit a map (held-out fold {held_out:?})"
            )));
        }
        let mut s = DMatrix::zeros(rows.len(), self.d_s);
        let mut t = DMatrix::zeros(rows.len(), self.d_t);
        for (r, &i) in rows.iter().enumerate() {
            let pair = self.pairs[i];
            let x = self.source_col(i);
            let y = self.target_row(i);
            if self.config.normalize_before_fit {
                let x = l2_normalize(x).map_err(|e| name_pair(e, pair))?;
                let y = l2_normalize(y).map_err(|e| name_pair(e, pair))?;
                s.row_mut(r).copy_from_slice(&x);
                t.row_mut(r).copy_from_slice(&y);
            } else {
                s.row_mut(r).copy_from_slice(x);
                t.row_mut(r).copy_from_slice(y);
            }
        }
        let fitted = ridge_fit(&s, &t, self.config.lambda)?;
        let fitted = LinearMap::new(
            fitted.matrix().clone(),
            fitted.lambda,
            fitted.n_pairs_used,
            self.source_tag,
            self.target_tag,
        )?;
        match self.config.mapping_mode {
            MappingMode::TruncatedRank(k) => truncate_rank(&fitted, k),
            _ => Ok(fitted),
        }
    }

    /// Distance of every pair under `map`.
    fn distances(&self, map: &LinearMap) -> Result<Vec<f64>> {
        let identity = self.config.mapping_mode == MappingMode::Identity;
        let mapped;
        let columns: &[f64] = if identity {
            self.xs.as_slice()
        } else {
            mapped = map.matrix().tr_mul(&self.xs);
            mapped.as_slice()
        };
        columns
            .chunks_exact(self.d_t)
            .enumerate()
            .map(|(i, m)| {
                let pair = self.pairs[i];
                if norm(m) < MIN_NORM {
                    return Err(Error::degenerate(format!(
                        "mapped embedding of {:?} has zero norm in pair ({}, {})",
                        pair.id_a, pair.id_a, pair.id_b
                    )));
                }
                cosine_distance(m, self.target_row(i)).map_err(|e| name_pair(e, pair))
            })
            .collect()
    }

    fn run_fold(&self, f: usize) -> Result<FoldOutcome> {
        let map = self.map_for(Some(f))?;
        let distances = self.distances(&map)?;
        let same: Vec<bool> = self.pairs.iter().map(|p| p.label.is_same()).collect();

        let (mut train_d, mut train_s) = (Vec::new(), Vec::new());
        for i in 0..self.pairs.len() {
            if self.fold_of[i] != f {
                train_d.push(distances[i]);
                train_s.push(same[i]);
            }
        }
        if train_d.is_empty() {
            return Err(Error::protocol(format!("no training pairs for fold {f}")));
        }
        let threshold = search_threshold(&train_d, &train_s)?;

        let test_correct: Vec<bool> = (0..self.pairs.len())
            .filter(|&i| self.fold_of[i] == f)
            .map(|i| (distances[i] <= threshold.tau) == same[i])
            .collect();
        if test_correct.is_empty() {
            return Err(Error::protocol(format!("fold {f} has no pairs")));
        }
        let test_accuracy =
            test_correct.iter().filter(|&&c| c).count() as f64 / test_correct.len() as f64;
        debug_assert_eq!(self.proto.folds()[f].pairs.len(), test_correct.len());

        Ok(FoldOutcome {
            result: FoldResult {
                fold_index: f,
                threshold: threshold.tau,
                train_accuracy: threshold.train_accuracy,
                test_accuracy,
                degenerate_threshold: threshold.single_class,
            },
            test_correct,
        })
    }
}

fn name_pair(err: Error, pair: &Pair) -> Error {
    match err {
        Error::DegenerateVector(msg) => {
            Error::DegenerateVector(format!("pair ({}, {}): {msg}", pair.id_a, pair.id_b))
        }
        other => other,
    }
}

/// One cell of a cross-system matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCell {
    pub source_index: usize,
    pub target_index: usize,
    pub report: EvaluationReport,
    /// Off-diagonal only: the same cell evaluated without a map (equal dims required).
    pub identity_baseline: Option<EvaluationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMatrix {
    pub system_tags: Vec<String>,
    /// `cells[i][j]` maps system `i` into system `j`.
    pub cells: Vec<Vec<CrossCell>>,
}

impl CrossMatrix {
    pub fn native_accuracy(&self, i: usize) -> f64 {
        self.cells[i][i].report.mean_accuracy
    }

    /// Largest drop of an off-diagonal mapped accuracy below its column's native accuracy.
    pub fn max_mapping_drop(&self) -> f64 {
        let n = self.cells.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst =
                        worst.max(self.native_accuracy(j) - self.cells[i][j].report.mean_accuracy);
                }
            }
        }
        worst
    }

    /// Aligned text table: mapped accuracy, with the identity baseline in parentheses.
    pub fn render_table(&self) -> String {
        let width = self
            .system_tags
            .iter()
            .map(|t| t.chars().count())
            .max()
            .unwrap_or(0)
            .max(20);
        let mut out = format!("{:>width$}", "from \\ to");
        for tag in &self.system_tags {
            out.push_str(&format!(" | {tag:>width$}"));
        }
        out.push('\n');
        for (i, row) in self.cells.iter().enumerate() {
            out.push_str(&format!("{:>width$}", self.system_tags[i]));
            for cell in row {
                let text = match &cell.identity_baseline {
                    Some(base) => format!(
                        "{:.2}% ({:.2}%)",
                        100.0 * cell.report.mean_accuracy,
                        100.0 * base.mean_accuracy
                    ),
                    None => format!("{:.2}%", 100.0 * cell.report.mean_accuracy),
                };
                out.push_str(&format!(" | {text:>width$}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates every ordered pair of systems. The diagonal is native accuracy
/// (identity map); off-diagonal cells use `config` and carry an identity baseline.
pub fn cross_matrix(
    systems: &[EmbeddingSet],
    proto: &PairProtocol,
    config: &EvalConfig,
) -> Result<CrossMatrix> {
    if systems.len() < 2 {
        return Err(Error::protocol(format!(
            "cross matrix needs at least 2 systems, got {}",
            systems.len()
        )));
    }
    let n = systems.len();
    let identity = config.with_mode(MappingMode::Identity);
    let cells: Vec<CrossCell> = (0..n * n)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / n, cell % n);
            if i == j {
                let report = evaluate(&systems[i], &systems[j], proto, &identity)?;
                return Ok(CrossCell {
                    source_index: i,
                    target_index: j,
                    report,
                    identity_baseline: None,
                });
            }
            let report = evaluate(&systems[i], &systems[j], proto, config)?;
            let identity_baseline = if systems[i].dim() == systems[j].dim() {
                Some(evaluate(&systems[i], &systems[j], proto, &identity)?)
            } else {
                None
            };
            Ok(CrossCell {
                source_index: i,
                target_index: j,
                report,
                identity_baseline,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<Vec<CrossCell>> = Vec::with_capacity(n);
    let mut it = cells.into_iter();
    for _ in 0..n {
        rows.push(it.by_ref().take(n).collect());
    }
    Ok(CrossMatrix {
        system_tags: systems.iter().map(|s| s.system_tag().to_string()).collect(),
        cells: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Fold, Label};

    fn scored(items: &[(f64, Label)]) -> Vec<ScoredPair> {
        items
            .iter()
            .enumerate()
            .map(|(i, &(d, label))| ScoredPair {
                pair: Pair::new(format!("a{i}"), format!("b{i}"), label),
                distance: d,
            })
            .collect()
    }

    use Label::{Different as D, Same as S};

    #[test]
    fn separable_threshold_is_midpoint() {
        let pairs = scored(&[(0.1, S), (0.2, S), (0.8, D), (0.9, D)]);
        let t = find_threshold(&pairs).unwrap();
        assert!((t.tau - 0.5).abs() < 1e-15);
        assert_eq!(t.train_accuracy, 1.0);
        assert!(!t.single_class);
    }

    #[test]
    fn inverted_labels_pick_lower_sentinel() {
        let pairs = scored(&[(0.9, S), (0.1, D)]);
        let t = find_threshold(&pairs).unwrap();
        let eps = sentinel_epsilon(0.1, 0.9);
        assert_eq!(t.tau, 0.1 - eps);
        assert_eq!(t.train_accuracy, 0.5);
    }

    #[test]
    fn tied_distances() {
        let pairs = scored(&[(0.3, S), (0.3, D)]);
        let t = find_threshold(&pairs).unwrap();
        assert_eq!(t.train_accuracy, 0.5);
        assert_eq!(t.tau, 0.3 - 1e-9);
    }

    #[test]
    fn single_class_is_flagged() {
        let t = find_threshold(&scored(&[(0.2, S), (0.4, S)])).unwrap();
        assert!(t.single_class);
        assert_eq!(t.train_accuracy, 1.0);
        assert!(t.tau > 0.4);
        let t = find_threshold(&scored(&[(0.2, D), (0.4, D)])).unwrap();
        assert!(t.single_class && t.tau < 0.2);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(find_threshold(&[]), Err(Error::Protocol(_))));
        assert!(matches!(accuracy_at(&[], 0.5), Err(Error::Protocol(_))));
    }

    #[test]
    fn accuracy_examples() {
        let all_same = scored(&[(0.1, S), (0.2, S)]);
        assert_eq!(accuracy_at(&all_same, 0.5).unwrap(), 1.0);
        let mixed = scored(&[(0.1, S), (0.2, D), (0.3, D), (0.5, S), (0.6, D)]);
        assert_eq!(accuracy_at(&mixed, -1.0).unwrap(), 0.6);
        let four = scored(&[(0.1, S), (0.2, S), (0.3, D), (0.1, D)]);
        assert_eq!(accuracy_at(&four, 0.25).unwrap(), 0.75);
    }

    #[test]
    fn adjacent_floats_keep_rule_consistent() {
        let a = 0.5f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let pairs = scored(&[(a, S), (b, D)]);
        let t = find_threshold(&pairs).unwrap();
        assert_eq!(t.train_accuracy, 1.0);
        assert_eq!(accuracy_at(&pairs, t.tau).unwrap(), 1.0);
    }

    fn tiny_sets() -> (EmbeddingSet, EmbeddingSet, PairProtocol) {
        let mut a = EmbeddingSet::new(2, "a").unwrap();
        let mut b = EmbeddingSet::new(2, "b").unwrap();
        let pts = [
            ("p0", [1.0, 0.1]),
            ("p1", [1.0, -0.1]),
            ("q0", [0.1, 1.0]),
            ("q1", [-0.1, 1.0]),
            ("r0", [-1.0, 0.1]),
            ("r1", [-1.0, -0.1]),
            ("s0", [0.1, -1.0]),
            ("s1", [-0.1, -1.0]),
        ];
        for (id, v) in pts {
            a.insert(id, &v).unwrap();
            // b is a 90° rotation of a
            b.insert(id, &[-v[1], v[0]]).unwrap();
        }
        let proto = PairProtocol::new(vec![
            Fold::new(vec![Pair::new("p0", "p1", S), Pair::new("p0", "q0", D)]),
            Fold::new(vec![Pair::new("q0", "q1", S), Pair::new("q1", "r1", D)]),
            Fold::new(vec![Pair::new("r0", "r1", S), Pair::new("r0", "s0", D)]),
            Fold::new(vec![Pair::new("s0", "s1", S), Pair::new("s1", "p1", D)]),
        ])
        .unwrap();
        (a, b, proto)
    }

    #[test]
    fn rotated_system_is_recovered() {
        let (a, b, proto) = tiny_sets();
        let cfg = EvalConfig::default().with_lambda(1e-6);
        let fitted = evaluate(&a, &b, &proto, &cfg).unwrap();
        assert_eq!(fitted.mean_accuracy, 1.0);
        assert_eq!(fitted.per_fold.len(), 4);
        let native = evaluate(&b, &b, &proto, &cfg.with_mode(MappingMode::Identity)).unwrap();
        assert_eq!(native.mean_accuracy, 1.0);
    }

    #[test]
    fn unresolved_id_is_named() {
        let (a, _, _) = tiny_sets();
        let proto = PairProtocol::new(vec![
            Fold::new(vec![Pair::new("p0", "ghost", S)]),
            Fold::new(vec![Pair::new("p1", "p0", S)]),
        ])
        .unwrap();
        let err = evaluate(&a, &a, &proto, &EvalConfig::default()).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn identity_requires_equal_dims() {
        let (a, _, proto) = tiny_sets();
        let mut c = EmbeddingSet::new(3, "c").unwrap();
        for (id, v) in a.iter() {
            c.insert(id, &[v[0], v[1], 0.0]).unwrap();
        }
        let cfg = EvalConfig::default().with_mode(MappingMode::Identity);
        assert!(matches!(
            evaluate(&a, &c, &proto, &cfg),
            Err(Error::Protocol(_))
        ));
        // fitted maps between unequal dims are fine
        assert!(evaluate(&a, &c, &proto, &EvalConfig::default()).is_ok());
    }

    #[test]
    fn null_space_pair_is_reported() {
        let (a, _, proto) = tiny_sets();
        let mut z = EmbeddingSet::new(2, "z").unwrap();
        for (id, v) in a.iter() {
            // every target lies on one axis: fitted map has a null space
            z.insert(id, &[v[0].abs() + 1.0, 0.0]).unwrap();
        }
        let mut src = EmbeddingSet::new(2, "src").unwrap();
        for (id, v) in a.iter() {
            src.insert(id, v).unwrap();
        }
        let cfg = EvalConfig::default();
        match evaluate(&src, &z, &proto, &cfg) {
            Ok(_) => {}
            Err(Error::DegenerateVector(msg)) => assert!(msg.contains("pair")),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn subsample_bounds_checked() {
        let (a, b, proto) = tiny_sets();
        let cfg = EvalConfig::default().with_subsample(PairSubsample::Count { p: 4, seed: 1 });
        assert!(matches!(
            evaluate(&a, &b, &proto, &cfg),
            Err(Error::Protocol(_))
        ));
        let cfg = EvalConfig::default().with_subsample(PairSubsample::Count { p: 0, seed: 1 });
        assert!(evaluate(&a, &b, &proto, &cfg).is_err());
        let cfg = EvalConfig::default().with_subsample(PairSubsample::Count { p: 2, seed: 1 });
        assert!(evaluate(&a, &b, &proto, &cfg).is_ok());
    }

    #[test]
    fn cross_matrix_needs_two_systems() {
        let (a, _, proto) = tiny_sets();
        assert!(cross_matrix(&[a], &proto, &EvalConfig::default()).is_err());
    }

    #[test]
    fn summary_format() {
        let report = EvaluationReport::from_folds(
            "a",
            "b",
            vec![
                FoldResult {
                    fold_index: 0,
                    threshold: 0.5,
                    train_accuracy: 1.0,
                    test_accuracy: 0.99,
                    degenerate_threshold: false,
                },
                FoldResult {
                    fold_index: 1,
                    threshold: 0.5,
                    train_accuracy: 1.0,
                    test_accuracy: 0.97,
                    degenerate_threshold: false,
                },
            ],
            EvalConfig::default(),
        );
        assert_eq!(report.summary(), "98.00% ± 1.00%");
    }
}
