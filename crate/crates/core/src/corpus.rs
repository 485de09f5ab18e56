//! Corpus data model: documents, assessment records and species-disjoint
//! splits.
//!
//! Documents are immutable once built; everything downstream indexes into
//! their sentence lists, so sentence order and indices must never change
//! after ingestion.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::category::{ImpactCategory, UnknownCategory};
use crate::math;

pub use crate::text::{count_tokens, reference_tokenize, segment_sentences, EmptyInput};

/// One sentence of a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    /// 0-based position within the document.
    pub index: usize,
    /// Sentence text; never contains line breaks.
    pub text: String,
    /// Token count under the reference tokenizer.
    pub token_count: usize,
}

/// A full text with its species target and optional gold annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub species: String,
    pub title: String,
    pub sentences: Vec<Sentence>,
    pub label: Option<ImpactCategory>,
    /// Indices of sentences marked as evidence, when aligned.
    pub evidence_indices: Option<BTreeSet<usize>>,
}

impl Document {
    /// Concatenated reference-token stream of all sentences, in order.
    pub fn tokens(&self) -> Vec<String> {
        let mut tokens = Vec::new();
        for sentence in &self.sentences {
            tokens.extend(reference_tokenize(&sentence.text));
        }
        tokens
    }

    /// Total reference-token count.
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.token_count).sum()
    }

    /// All sentence texts joined with single spaces.
    pub fn full_text(&self) -> String {
        let mut out = String::new();
        for sentence in &self.sentences {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&sentence.text);
        }
        out
    }
}

/// Split assignment of one species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

/// Species-disjoint split: every species maps to exactly one split, and all
/// documents of a species inherit that assignment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusSplit {
    pub assignment: BTreeMap<String, SplitName>,
}

impl CorpusSplit {
    /// Split of a document, by its species.
    pub fn split_of(&self, doc: &Document) -> Option<SplitName> {
        self.assignment.get(&doc.species).copied()
    }

    /// Documents of `corpus` assigned to `split`, in corpus order.
    pub fn select<'a>(&self, corpus: &'a [Document], split: SplitName) -> Vec<&'a Document> {
        corpus.iter().filter(|d| self.split_of(d) == Some(split)).collect()
    }
}

/// A normalized assessment-table record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assessment {
    pub species: String,
    pub publication: String,
    pub category: ImpactCategory,
    pub evidence_texts: Vec<String>,
}

/// Raw assessment row as read from tabular input, before normalization.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssessmentRow {
    pub species: String,
    pub publication: String,
    pub category: String,
    pub evidence_texts: Vec<String>,
}

/// Errors from ingestion and split construction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("row {row}: {source}")]
    UnknownCategory {
        row: usize,
        #[source]
        source: UnknownCategory,
    },
    #[error("row {row}: missing field {field:?}")]
    MissingField { row: usize, field: &'static str },
    #[error("split ratios {0:?} do not sum to 1")]
    InvalidRatios([f64; 3]),
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Normalizes raw assessment rows: category strings are mapped through the
/// alias table, species and category must be present.
///
/// Row numbers in errors are 0-based positions in `rows`.
pub fn ingest_assessments(rows: &[AssessmentRow]) -> Result<Vec<Assessment>, CorpusError> {
    let mut out = Vec::with_capacity(rows.len());
    for (row, raw) in rows.iter().enumerate() {
        if raw.species.trim().is_empty() {
            return Err(CorpusError::MissingField { row, field: "species" });
        }
        if raw.category.trim().is_empty() {
            return Err(CorpusError::MissingField { row, field: "category" });
        }
        let category = ImpactCategory::parse(&raw.category)
            .map_err(|source| CorpusError::UnknownCategory { row, source })?;
        out.push(Assessment {
            species: raw.species.trim().into(),
            publication: raw.publication.trim().into(),
            category,
            evidence_texts: raw.evidence_texts.clone(),
        });
    }
    Ok(out)
}

/// Builds a species-disjoint split.
///
/// Distinct species are sorted, shuffled with a ChaCha stream seeded by
/// `seed`, and assigned greedily: the first `S - round(r_val*S) -
/// round(r_test*S)` species go to train (rounding remainders land there),
/// the next `round(r_val*S)` to val, the rest to test. Deterministic for a
/// fixed `(corpus, ratios, seed)` regardless of document order.
pub fn build_splits(
    corpus: &[Document],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<CorpusSplit, CorpusError> {
    let (r_train, r_val, r_test) = ratios;
    let sum = r_train + r_val + r_test;
    if math::abs(sum - 1.0) > 1e-9 || r_train < 0.0 || r_val < 0.0 || r_test < 0.0 {
        return Err(CorpusError::InvalidRatios([r_train, r_val, r_test]));
    }
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }

    let mut species: Vec<&str> = corpus
        .iter()
        .map(|d| d.species.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let total = species.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    species.shuffle(&mut rng);

    let n_val = (math::round(r_val * total as f64) as usize).min(total);
    let n_test = (math::round(r_test * total as f64) as usize).min(total - n_val);
    let n_train = total - n_val - n_test;

    let mut assignment = BTreeMap::new();
    for (i, sp) in species.into_iter().enumerate() {
        let split = if i < n_train {
            SplitName::Train
        } else if i < n_train + n_val {
            SplitName::Val
        } else {
            SplitName::Test
        };
        assignment.insert(String::from(sp), split);
    }
    Ok(CorpusSplit { assignment })
}

#[cfg(test)]
mod tests {
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    use super::*;

    fn doc_for(species: &str) -> Document {
        Document {
            doc_id: format!("doc-{species}"),
            species: species.to_string(),
            title: String::new(),
            sentences: segment_sentences("One sentence.").unwrap(),
            label: None,
            evidence_indices: None,
        }
    }

    #[test]
    fn ingest_maps_both_alias_families() {
        let rows = vec![
            AssessmentRow {
                species: "Lates niloticus".into(),
                publication: "p1".into(),
                category: "Major Risk".into(),
                evidence_texts: vec!["Native fish declined.".into()],
            },
            AssessmentRow {
                species: "Lates niloticus".into(),
                publication: "p2".into(),
                category: "major".into(),
                evidence_texts: vec![],
            },
        ];
        let got = ingest_assessments(&rows).unwrap();
        assert_eq!(got[0].category, ImpactCategory::Major);
        assert_eq!(got[1].category, ImpactCategory::Major);
    }

    #[test]
    fn ingest_rejects_unknown_category() {
        let rows = vec![AssessmentRow {
            species: "x".into(),
            publication: "p".into(),
            category: "Severe".into(),
            evidence_texts: vec![],
        }];
        match ingest_assessments(&rows) {
            Err(CorpusError::UnknownCategory { row: 0, source }) => {
                assert_eq!(source.0, "Severe");
            }
            other => panic!("expected UnknownCategory, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_missing_species() {
        let rows = vec![AssessmentRow {
            species: "  ".into(),
            publication: "p".into(),
            category: "Minor".into(),
            evidence_texts: vec![],
        }];
        assert_eq!(
            ingest_assessments(&rows),
            Err(CorpusError::MissingField { row: 0, field: "species" })
        );
    }

    #[test]
    fn split_counts_match_rounded_ratios() {
        let corpus: Vec<Document> = (0..100).map(|i| doc_for(&format!("sp{i:03}"))).collect();
        let split = build_splits(&corpus, (0.82, 0.08, 0.10), 7).unwrap();
        let count = |name| split.assignment.values().filter(|&&s| s == name).count();
        assert_eq!(count(SplitName::Train), 82);
        assert_eq!(count(SplitName::Val), 8);
        assert_eq!(count(SplitName::Test), 10);
    }

    #[test]
    fn single_species_lands_in_train() {
        for ratios in [(0.82, 0.08, 0.10), (0.34, 0.33, 0.33), (0.5, 0.25, 0.25)] {
            let corpus = vec![doc_for("only")];
            let split = build_splits(&corpus, ratios, 1).unwrap();
            assert_eq!(split.assignment["only"], SplitName::Train, "{ratios:?}");
        }
    }

    #[test]
    fn same_seed_same_assignment() {
        let corpus: Vec<Document> = (0..37).map(|i| doc_for(&format!("sp{i}"))).collect();
        let a = build_splits(&corpus, (0.82, 0.08, 0.10), 99).unwrap();
        let b = build_splits(&corpus, (0.82, 0.08, 0.10), 99).unwrap();
        assert_eq!(a, b);
        let c = build_splits(&corpus, (0.82, 0.08, 0.10), 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_is_independent_of_document_order() {
        let mut corpus: Vec<Document> = (0..20).map(|i| doc_for(&format!("sp{i}"))).collect();
        let a = build_splits(&corpus, (0.8, 0.1, 0.1), 3).unwrap();
        corpus.reverse();
        let b = build_splits(&corpus, (0.8, 0.1, 0.1), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_ratios_rejected() {
        let corpus = vec![doc_for("a")];
        assert!(matches!(
            build_splits(&corpus, (0.5, 0.5, 0.5), 0),
            Err(CorpusError::InvalidRatios(_))
        ));
    }

    #[test]
    fn species_share_one_split() {
        let mut corpus: Vec<Document> = (0..10).map(|i| doc_for(&format!("sp{i}"))).collect();
        // Two extra documents for existing species.
        corpus.push(Document { doc_id: "extra1".into(), ..doc_for("sp3") });
        corpus.push(Document { doc_id: "extra2".into(), ..doc_for("sp7") });
        let split = build_splits(&corpus, (0.6, 0.2, 0.2), 11).unwrap();
        assert_eq!(split.assignment.len(), 10);
        for doc in &corpus {
            assert!(split.split_of(doc).is_some());
        }
    }
}
