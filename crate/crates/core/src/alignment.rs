//! Fuzzy alignment of assessment evidence sentences to document sentences.
//!
//! Evidence sentences rarely match the extracted full text verbatim: the
//! assessed paper version may differ, and PDF extraction sometimes splits a
//! sentence in two. Matching therefore compares normalized word sequences by
//! longest common subsequence, and considers both single sentences and
//! concatenations of two adjacent sentences as candidates.

use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Document;
use crate::text::{is_punctuation, reference_tokenize};

/// Outcome classification for one evidence sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MatchStatus {
    Exact,
    Fuzzy,
    Borderline,
    Unmatched,
}

/// Result of aligning one evidence sentence against a document.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchResult {
    /// Index of the evidence sentence within its assessment.
    pub evidence_id: usize,
    /// Matched document sentence indices: empty, one, or two adjacent.
    pub matched_indices: Vec<usize>,
    /// Best similarity score in `[0, 1]`.
    pub score: f64,
    pub status: MatchStatus,
}

/// Thresholds for match classification.
///
/// `t_match` and above is a match (exact at score 1.0); `t_borderline` up to
/// `t_match` is handed to the adjudicator; anything below is unmatched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignConfig {
    pub t_match: f64,
    pub t_borderline: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self { t_match: 0.80, t_borderline: 0.65 }
    }
}

/// Error for threshold configurations violating `0 < t_borderline < t_match <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("alignment thresholds must satisfy 0 < t_borderline < t_match <= 1, got ({t_borderline}, {t_match})")]
pub struct InvalidThresholds {
    pub t_match: f64,
    pub t_borderline: f64,
}

impl AlignConfig {
    pub fn new(t_match: f64, t_borderline: f64) -> Result<Self, InvalidThresholds> {
        if !(t_borderline > 0.0 && t_borderline < t_match && t_match <= 1.0) {
            return Err(InvalidThresholds { t_match, t_borderline });
        }
        Ok(Self { t_match, t_borderline })
    }
}

/// Decides whether a borderline-scored candidate is still a valid match.
///
/// The production pipeline can plug in an LLM-backed adjudicator; the
/// default rejects every borderline candidate and keeps alignment fully
/// offline and deterministic.
pub trait Adjudicator {
    fn adjudicate(&self, evidence_text: &str, candidate_text: &str, score: f64) -> bool;
}

/// Default adjudicator: rejects all borderline candidates.
#[derive(Debug, Clone, Copy, Default)]
pub struct RejectBorderline;

impl Adjudicator for RejectBorderline {
    fn adjudicate(&self, _evidence_text: &str, _candidate_text: &str, _score: f64) -> bool {
        false
    }
}

/// Accepts all borderline candidates; useful for measuring the borderline band.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptBorderline;

impl Adjudicator for AcceptBorderline {
    fn adjudicate(&self, _evidence_text: &str, _candidate_text: &str, _score: f64) -> bool {
        true
    }
}

/// Normalizes text for word-level comparison: lowercased word tokens with
/// punctuation-only tokens dropped and typographic variants folded.
pub fn normalize_for_match(text: &str) -> Vec<String> {
    let folded: String = text.chars().map(fold_char).collect();
    reference_tokenize(&folded)
        .into_iter()
        .filter(|tok| !tok.chars().all(is_punctuation))
        .map(|tok| {
            let mut lower = String::with_capacity(tok.len());
            for c in tok.chars() {
                lower.extend(c.to_lowercase());
            }
            lower
        })
        .collect()
}

/// Folds common typographic variants to ASCII so PDF extraction artifacts
/// (curly quotes, dashes, non-breaking spaces) do not defeat matching.
fn fold_char(c: char) -> char {
    match c {
        '\u{2018}' | '\u{2019}' => '\'',
        '\u{201C}' | '\u{201D}' => '"',
        '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' => '-',
        '\u{00A0}' | '\u{2009}' | '\u{200A}' | '\u{2002}' | '\u{2003}' => ' ',
        other => other,
    }
}

/// Similarity of two token lists: LCS length over the longer list's length.
///
/// Returns 0 if either list is empty. A score of 1.0 means one list is a
/// subsequence of the other covering the longer list entirely, i.e. they are
/// equal.
pub fn match_score(a: &[String], b: &[String]) -> f64 {
    let longest = a.len().max(b.len());
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    lcs_length(a, b) as f64 / longest as f64
}

/// LCS length via the standard dynamic program, rolling one row.
fn lcs_length(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut prev = alloc::vec![0usize; short.len() + 1];
    let mut curr = alloc::vec![0usize; short.len() + 1];
    for item in long {
        for (j, other) in short.iter().enumerate() {
            curr[j + 1] = if item == other {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// Aligns evidence sentences against a document.
///
/// For every evidence sentence, the best-scoring candidate among all single
/// sentences and all concatenations of two adjacent sentences decides the
/// outcome. Ties prefer the earliest document index, then single-sentence
/// over two-sentence candidates. Borderline scores go to `adjudicator`;
/// rejection downgrades the result to unmatched (indices cleared, score
/// kept for diagnostics).
pub fn align_evidence(
    doc: &Document,
    evidence_texts: &[String],
    cfg: &AlignConfig,
    adjudicator: &dyn Adjudicator,
) -> Vec<MatchResult> {
    let sentence_tokens: Vec<Vec<String>> =
        doc.sentences.iter().map(|s| normalize_for_match(&s.text)).collect();

    evidence_texts
        .iter()
        .enumerate()
        .map(|(evidence_id, evidence)| {
            let evidence_tokens = normalize_for_match(evidence);
            let mut best_score = 0.0f64;
            let mut best_indices: Vec<usize> = Vec::new();

            // Candidates are visited by ascending start index, single before
            // the pair starting there; strict improvement only, so ties fall
            // to the earliest index and to single over pair.
            let mut joined: Vec<String> = Vec::new();
            for i in 0..sentence_tokens.len() {
                let single = match_score(&evidence_tokens, &sentence_tokens[i]);
                if single > best_score {
                    best_score = single;
                    best_indices = alloc::vec![i];
                }
                if i + 1 < sentence_tokens.len() {
                    joined.clear();
                    joined.extend_from_slice(&sentence_tokens[i]);
                    joined.extend_from_slice(&sentence_tokens[i + 1]);
                    let pair = match_score(&evidence_tokens, &joined);
                    if pair > best_score {
                        best_score = pair;
                        best_indices = alloc::vec![i, i + 1];
                    }
                }
            }

            let status = if best_score >= cfg.t_match {
                if best_score >= 1.0 {
                    MatchStatus::Exact
                } else {
                    MatchStatus::Fuzzy
                }
            } else if best_score >= cfg.t_borderline && !best_indices.is_empty() {
                let candidate_text = candidate_text(doc, &best_indices);
                if adjudicator.adjudicate(evidence, &candidate_text, best_score) {
                    MatchStatus::Borderline
                } else {
                    MatchStatus::Unmatched
                }
            } else {
                MatchStatus::Unmatched
            };

            if status == MatchStatus::Unmatched {
                best_indices.clear();
            }
            MatchResult { evidence_id, matched_indices: best_indices, score: best_score, status }
        })
        .collect()
}

fn candidate_text(doc: &Document, indices: &[usize]) -> String {
    let mut out = String::new();
    for &i in indices {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&doc.sentences[i].text);
    }
    out
}

/// Aggregate counts over one alignment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlignmentSummary {
    pub total_evidence: usize,
    pub matched: usize,
    pub borderline_accepted: usize,
    pub unmatched: usize,
}

impl AlignmentSummary {
    pub fn accumulate(&mut self, results: &[MatchResult]) {
        for r in results {
            self.total_evidence += 1;
            match r.status {
                MatchStatus::Exact | MatchStatus::Fuzzy => self.matched += 1,
                MatchStatus::Borderline => {
                    self.matched += 1;
                    self.borderline_accepted += 1;
                }
                MatchStatus::Unmatched => self.unmatched += 1,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use alloc::string::ToString;
    use alloc::vec;

    use super::*;
    use crate::corpus::segment_sentences;

    fn doc_from(text: &str) -> Document {
        Document {
            doc_id: "d".into(),
            species: "sp".into(),
            title: String::new(),
            sentences: segment_sentences(text).unwrap(),
            label: None,
            evidence_indices: None,
        }
    }

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn normalize_lowercases_and_drops_punctuation() {
        assert_eq!(normalize_for_match("The Fish, eats!"), toks(&["the", "fish", "eats"]));
        assert_eq!(normalize_for_match(""), Vec::<String>::new());
        assert_eq!(
            normalize_for_match("co-occurring  species\u{2019} decline"),
            toks(&["co-occurring", "species", "decline"])
        );
    }

    #[test]
    fn match_score_identical_lists() {
        let a = toks(&["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]);
        assert_eq!(match_score(&a, &a), 1.0);
    }

    #[test]
    fn match_score_disjoint_lists() {
        assert_eq!(match_score(&toks(&["x", "y"]), &toks(&["u", "v"])), 0.0);
        assert_eq!(match_score(&[], &toks(&["u"])), 0.0);
    }

    #[test]
    fn match_score_partial_overlap() {
        // LCS(["x","y","z","w"], ["x","z","w","q","r"]) = ["x","z","w"], 3/5.
        let a = toks(&["x", "y", "z", "w"]);
        let b = toks(&["x", "z", "w", "q", "r"]);
        assert!((match_score(&a, &b) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn exact_evidence_matches_its_sentence() {
        let doc = doc_from(
            "Alpha beta gamma. Delta epsilon. Nile perch spread fast. Zeta eta theta. More filler words here.",
        );
        let results = align_evidence(
            &doc,
            &["Nile perch spread fast.".to_string()],
            &AlignConfig::default(),
            &RejectBorderline,
        );
        assert_eq!(results[0].status, MatchStatus::Exact);
        assert_eq!(results[0].matched_indices, vec![2]);
        assert_eq!(results[0].score, 1.0);
    }

    #[test]
    fn split_sentence_matches_adjacent_pair() {
        // Evidence equals sentences 1 and 2 concatenated (a PDF split).
        let doc = doc_from("Intro words first. Native fish populations declined. After the perch arrived.");
        let results = align_evidence(
            &doc,
            &["Native fish populations declined after the perch arrived.".to_string()],
            &AlignConfig::default(),
            &RejectBorderline,
        );
        assert_eq!(results[0].status, MatchStatus::Exact);
        assert_eq!(results[0].matched_indices, vec![1, 2]);
    }

    #[test]
    fn fuzzy_match_at_threshold() {
        // Evidence shares 12 of max-length 15 tokens in order: score 0.8.
        // The capitalized first token lets segmentation split the fixture.
        let doc_sentence = "W1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12 w13 w14 w15";
        let evidence = "W1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12";
        let doc = doc_from(&alloc::format!("Other sentence entirely. {doc_sentence}."));
        // "." is dropped by normalization; doc sentence has 15 word tokens.
        let cfg = AlignConfig::new(0.80, 0.65).unwrap();
        let results = align_evidence(&doc, &[evidence.to_string()], &cfg, &RejectBorderline);
        assert_eq!(results[0].status, MatchStatus::Fuzzy);
        assert_eq!(results[0].matched_indices, vec![1]);
        assert!((results[0].score - 0.8).abs() < 1e-12);
    }

    #[test]
    fn borderline_goes_through_adjudicator() {
        // 7 of 10 tokens shared: score 0.7, between the default thresholds.
        let doc = doc_from("a1 a2 a3 a4 a5 a6 a7 a8 a9 a10.");
        let evidence = vec!["a1 a2 a3 a4 a5 a6 a7 x y z".to_string()];
        let cfg = AlignConfig::default();

        let rejected = align_evidence(&doc, &evidence, &cfg, &RejectBorderline);
        assert_eq!(rejected[0].status, MatchStatus::Unmatched);
        assert!(rejected[0].matched_indices.is_empty());
        assert!((rejected[0].score - 0.7).abs() < 1e-12);

        let accepted = align_evidence(&doc, &evidence, &cfg, &AcceptBorderline);
        assert_eq!(accepted[0].status, MatchStatus::Borderline);
        assert_eq!(accepted[0].matched_indices, vec![0]);
    }

    #[test]
    fn ties_prefer_earliest_and_single() {
        // Identical sentences: the earlier index wins.
        let doc = doc_from("Same words here. Same words here.");
        let results = align_evidence(
            &doc,
            &["Same words here.".to_string()],
            &AlignConfig::default(),
            &RejectBorderline,
        );
        assert_eq!(results[0].matched_indices, vec![0]);
        assert_eq!(results[0].status, MatchStatus::Exact);
    }

    #[test]
    fn unmatched_evidence_reports_empty_indices() {
        let doc = doc_from("Completely unrelated sentence content.");
        let results = align_evidence(
            &doc,
            &["quantum flux capacitor theory".to_string()],
            &AlignConfig::default(),
            &RejectBorderline,
        );
        assert_eq!(results[0].status, MatchStatus::Unmatched);
        assert!(results[0].matched_indices.is_empty());
    }

    #[test]
    fn invalid_thresholds_rejected() {
        assert!(AlignConfig::new(0.5, 0.8).is_err());
        assert!(AlignConfig::new(1.2, 0.3).is_err());
        assert!(AlignConfig::new(0.8, 0.0).is_err());
        assert!(AlignConfig::new(0.8, 0.65).is_ok());
    }

    #[test]
    fn summary_counts() {
        let doc = doc_from("First unique sentence content. Second unique sentence content.");
        let results = align_evidence(
            &doc,
            &[
                "First unique sentence content.".to_string(),
                "nothing in common at all".to_string(),
            ],
            &AlignConfig::default(),
            &RejectBorderline,
        );
        let mut summary = AlignmentSummary::default();
        summary.accumulate(&results);
        assert_eq!(summary.total_evidence, 2);
        assert_eq!(summary.matched, 1);
        assert_eq!(summary.unmatched, 1);
        assert_eq!(summary.borderline_accepted, 0);
    }
}
