//! Evaluation metrics: confusion-matrix F1 (macro and micro), NDCG ranking
//! agreement, and selector-vs-truth agreement matrices.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::category::{ImpactCategory, ALL_CATEGORIES, NUM_CATEGORIES};
use crate::math;

/// Metric computation errors.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("prediction/gold length mismatch: {preds} vs {golds}")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("at least one prediction is required")]
    EmptyInput,
    #[error("all gains are zero; NDCG is undefined")]
    AllZeroGains,
    #[error("set {name:?} does not cover doc_id {doc_id:?}")]
    DocIdMismatch { name: String, doc_id: String },
}

/// Precision/recall/F1 for one category, with the 0/0 := 0 convention.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold instances of this category.
    pub support: usize,
}

/// Which classes the macro average runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MacroAveraging {
    /// Average over classes appearing in golds or predictions.
    #[default]
    PresentClasses,
    /// Average over all six categories regardless of presence.
    AllClasses,
}

/// Classification evaluation summary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub macro_f1: f64,
    /// Equals accuracy for single-label multiclass prediction.
    pub micro_f1: f64,
    pub per_class: BTreeMap<ImpactCategory, ClassMetrics>,
    /// Counts indexed `confusion[gold][predicted]` in category order.
    pub confusion: [[usize; NUM_CATEGORIES]; NUM_CATEGORIES],
    pub n: usize,
}

/// Computes per-class and aggregate F1 with the default macro averaging
/// (classes present in golds or predictions).
pub fn compute_f1(
    preds: &[ImpactCategory],
    golds: &[ImpactCategory],
) -> Result<EvalReport, MetricsError> {
    compute_f1_with(preds, golds, MacroAveraging::default())
}

/// Computes per-class and aggregate F1 under the given macro convention.
pub fn compute_f1_with(
    preds: &[ImpactCategory],
    golds: &[ImpactCategory],
    averaging: MacroAveraging,
) -> Result<EvalReport, MetricsError> {
    if preds.len() != golds.len() {
        return Err(MetricsError::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }

    let mut confusion = [[0usize; NUM_CATEGORIES]; NUM_CATEGORIES];
    for (pred, gold) in preds.iter().zip(golds) {
        confusion[gold.index()][pred.index()] += 1;
    }

    let n = preds.len();
    let mut per_class = BTreeMap::new();
    let mut macro_sum = 0.0;
    let mut macro_count = 0usize;
    for category in ALL_CATEGORIES {
        let c = category.index();
        let tp = confusion[c][c];
        let fp: usize = (0..NUM_CATEGORIES).filter(|&g| g != c).map(|g| confusion[g][c]).sum();
        let fn_: usize = (0..NUM_CATEGORIES).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
        let support = tp + fn_;
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, support);
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        per_class.insert(category, ClassMetrics { precision, recall, f1, support });

        let present = support > 0 || fp > 0;
        if averaging == MacroAveraging::AllClasses || present {
            macro_sum += f1;
            macro_count += 1;
        }
    }

    let trace: usize = (0..NUM_CATEGORIES).map(|c| confusion[c][c]).sum();
    Ok(EvalReport {
        macro_f1: macro_sum / macro_count as f64,
        micro_f1: trace as f64 / n as f64,
        per_class,
        confusion,
        n,
    })
}

/// Gain transform applied before discounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GainScheme {
    /// The gain value itself.
    #[default]
    Linear,
    /// `2^g − 1`, emphasizing higher grades.
    Exponential,
}

impl GainScheme {
    fn apply(&self, gain: f64) -> f64 {
        match self {
            Self::Linear => gain,
            Self::Exponential => math::exp2(gain) - 1.0,
        }
    }
}

/// Normalized discounted cumulative gain of a predicted order against
/// per-index gains, with linear gains and the full list as default cutoff.
pub fn compute_ndcg(
    order: &[usize],
    gains: &[f64],
    k: Option<usize>,
) -> Result<f64, MetricsError> {
    compute_ndcg_with(order, gains, k, GainScheme::default())
}

/// NDCG with an explicit gain scheme.
///
/// `DCG = Σ_{i=1..k} gain(order[i]) / log2(i+1)` over 1-based positions;
/// the ideal order sorts gains descending. Always in `[0, 1]`.
///
/// # Panics
/// Panics if `order` is not a permutation of `0..gains.len()` or any gain
/// is negative.
pub fn compute_ndcg_with(
    order: &[usize],
    gains: &[f64],
    k: Option<usize>,
    scheme: GainScheme,
) -> Result<f64, MetricsError> {
    let n = gains.len();
    assert_eq!(order.len(), n, "order and gains must have equal length");
    let mut seen = alloc::vec![false; n];
    for &index in order {
        assert!(index < n, "order index {index} out of range");
        assert!(!seen[index], "order repeats index {index}");
        seen[index] = true;
    }
    assert!(gains.iter().all(|&g| g >= 0.0), "gains must be non-negative");
    if gains.iter().all(|&g| g == 0.0) {
        return Err(MetricsError::AllZeroGains);
    }

    let cutoff = k.unwrap_or(n).min(n);
    let dcg = |values: &mut dyn Iterator<Item = f64>| -> f64 {
        values
            .take(cutoff)
            .enumerate()
            .map(|(i, g)| scheme.apply(g) / math::log2((i + 2) as f64))
            .sum()
    };
    let predicted = dcg(&mut order.iter().map(|&i| gains[i]));

    let mut ideal_gains: Vec<f64> = gains.to_vec();
    ideal_gains.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let ideal = dcg(&mut ideal_gains.into_iter());

    Ok(predicted / ideal)
}

/// Agreement table: one row per ranking set, one column per truth set, each
/// cell the mean NDCG of that selector's orders against that truth's gains.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgreementMatrix {
    pub selectors: Vec<String>,
    pub truths: Vec<String>,
    /// `values[selector][truth]`.
    pub values: Vec<Vec<f64>>,
    /// Documents contributing to each cell column (all-zero-gain documents
    /// are skipped, since NDCG is undefined for them).
    pub docs_used: Vec<usize>,
}

/// Computes the full selector-vs-truth agreement matrix.
///
/// Every ranking set and every truth set must cover exactly the same
/// doc_ids. Documents whose gains under a truth are all zero are skipped
/// for that truth's column; a column with no usable documents is an error.
pub fn agreement_matrix(
    rankings: &BTreeMap<String, BTreeMap<String, Vec<usize>>>,
    truths: &BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    scheme: GainScheme,
) -> Result<AgreementMatrix, MetricsError> {
    let doc_ids: Vec<&String> = match rankings.values().next() {
        Some(first) => first.keys().collect(),
        None => Vec::new(),
    };
    for (name, set) in rankings {
        ensure_same_docs(name, set.keys(), &doc_ids)?;
    }
    for (name, set) in truths {
        ensure_same_docs(name, set.keys(), &doc_ids)?;
    }

    let selectors: Vec<String> = rankings.keys().cloned().collect();
    let truth_names: Vec<String> = truths.keys().cloned().collect();
    let mut values = Vec::with_capacity(selectors.len());
    let mut docs_used = alloc::vec![0usize; truth_names.len()];
    for selector in &selectors {
        let orders = &rankings[selector];
        let mut row = Vec::with_capacity(truth_names.len());
        for (t, truth_name) in truth_names.iter().enumerate() {
            let gains_by_doc = &truths[truth_name];
            let mut sum = 0.0;
            let mut used = 0usize;
            for doc_id in &doc_ids {
                let gains = &gains_by_doc[*doc_id];
                if gains.iter().all(|&g| g == 0.0) {
                    continue;
                }
                sum += compute_ndcg_with(&orders[*doc_id], gains, None, scheme)?;
                used += 1;
            }
            if used == 0 {
                return Err(MetricsError::AllZeroGains);
            }
            docs_used[t] = used;
            row.push(sum / used as f64);
        }
        values.push(row);
    }
    Ok(AgreementMatrix { selectors, truths: truth_names, values, docs_used })
}

fn ensure_same_docs<'a>(
    name: &str,
    keys: impl Iterator<Item = &'a String> + Clone,
    expected: &[&String],
) -> Result<(), MetricsError> {
    let mismatch = |doc_id: &str| MetricsError::DocIdMismatch {
        name: name.into(),
        doc_id: doc_id.into(),
    };
    let mut count = 0usize;
    for key in keys.clone() {
        if !expected.contains(&key) {
            return Err(mismatch(key));
        }
        count += 1;
    }
    if count != expected.len() {
        for doc_id in expected {
            if !keys.clone().any(|k| k == *doc_id) {
                return Err(mismatch(doc_id));
            }
        }
    }
    Ok(())
}
