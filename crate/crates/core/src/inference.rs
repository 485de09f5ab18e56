//! End-to-end document prediction: prompt construction for generative
//! backends, structured-answer parsing, and the deterministic and
//! majority-vote prediction paths for both backend families.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::category::ImpactCategory;
use crate::corpus::Document;
use crate::scoring::{
    argmax, classify_tokens, softmax, BackendError, ChunkConfig, ScorerBackend, ScoringError,
};
use crate::selection::{
    assemble_input, sample_selection, select_top_k, InputStyle, SelectionConfig, SelectionMode,
    SentenceRanking,
};
use crate::text::reference_tokenize;

/// The six numbered impact-category descriptions embedded in the prompt,
/// shipped as a versioned asset so prompt bytes stay stable across builds.
pub const CATEGORY_DESCRIPTIONS_V1: &str = include_str!("assets/category_descriptions_v1.txt");

/// Default generation budget: one summary sentence plus the label.
pub const DEFAULT_MAX_NEW_TOKENS: usize = 96;

/// Whether the prompt presents a full paper or extracted sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PromptMode {
    #[default]
    FullText,
    Extracted,
}

/// Generation-side knobs for the LLM prediction path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LlmConfig {
    pub max_new_tokens: usize,
    /// When false the response format asks for the answer line only.
    pub include_summary: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self { max_new_tokens: DEFAULT_MAX_NEW_TOKENS, include_summary: true }
    }
}

/// Error from a generation client.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("generation client error: {message}")]
pub struct ClientError {
    pub message: String,
}

impl ClientError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into() }
    }
}

/// A text-generation backend. Decoding must be greedy: identical prompts
/// yield identical outputs for a fixed backend state.
pub trait GenerationClient {
    fn generate(&self, prompt: &str, max_new_tokens: usize) -> Result<String, ClientError>;
}

/// Errors of the inference module.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error("species name must not be empty")]
    EmptySpecies,
    #[error("response has no Answer line")]
    MalformedResponse,
    #[error("answer label not recognized: {0:?}")]
    UnknownLabel(String),
    #[error("randomized prediction requires a sentence ranking")]
    MissingRanking,
    #[error(transparent)]
    Selection(#[from] crate::selection::SelectionError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Client(#[from] ClientError),
}

/// A final document-level prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub doc_id: String,
    pub category: ImpactCategory,
    /// Vote counts per category; empty for deterministic single-pass runs.
    pub votes: BTreeMap<ImpactCategory, usize>,
    /// Generated summary sentence, when the generative path produced one.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub summary: Option<String>,
    pub sample_inputs_used: usize,
    /// Samples whose responses failed to parse and were excluded.
    pub abstentions: usize,
    /// True when every sample abstained and the category fell back to
    /// Data Deficient.
    pub all_abstained: bool,
}

/// Builds the classification prompt with default options.
pub fn build_llm_prompt(
    body_text: &str,
    species: &str,
    mode: PromptMode,
) -> Result<String, InferenceError> {
    build_llm_prompt_with(body_text, species, mode, &LlmConfig::default())
}

/// Builds the classification prompt.
///
/// The template is assembled by concatenation with `body_text` and
/// `species` dropped into their slots, so marker-like strings inside the
/// body are never substituted. Extracted mode prepends a one-sentence
/// notice that the input is extracted sentences rather than the full paper.
pub fn build_llm_prompt_with(
    body_text: &str,
    species: &str,
    mode: PromptMode,
    options: &LlmConfig,
) -> Result<String, InferenceError> {
    if species.trim().is_empty() {
        return Err(InferenceError::EmptySpecies);
    }
    let mut prompt = String::new();
    if mode == PromptMode::Extracted {
        prompt.push_str(
            "Note: The following input consists of individual sentences extracted from a scientific paper, not the complete text.\n\n",
        );
    }
    prompt.push_str("This is a scientific paper about an invasive species: ");
    prompt.push_str(body_text);
    prompt.push_str("\n\nThis is the end of the scientific text. Your task is to classify the impact that the invasive species ");
    prompt.push_str(species);
    prompt.push_str(" has. Note that the text might contain information on other species. Possible classes are the following:\n\n");
    prompt.push_str(CATEGORY_DESCRIPTIONS_V1.trim_end());
    prompt.push_str("\n\nReturn just the classification and end your answer, and provide one of the following labels as answer: \"Minimal\", \"Minor\", \"Moderate\", \"Major\", \"Massive\", \"Data Deficient\". Provide your answer by just using the following response format, and do not answer anything else in addition to that:\n\n");
    if options.include_summary {
        prompt.push_str("Summary: [One sentence summarizing the key information that you consider for the assessment]\n\n");
    }
    prompt.push_str("Answer: [Your answer, that is one of the six labels]\n\nEND.");
    Ok(prompt)
}

/// A parsed generative response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedAnswer {
    /// Content of the first Summary line; empty when absent.
    pub summary: String,
    pub category: ImpactCategory,
}

/// Parses a structured response: the first line beginning `Summary:` (if
/// any) and the first line beginning `Answer:`, whose remainder is matched
/// against the category labels case-insensitively after trimming
/// whitespace and punctuation.
pub fn parse_llm_answer(response: &str) -> Result<ParsedAnswer, InferenceError> {
    let mut summary: Option<String> = None;
    let mut answer: Option<&str> = None;
    for line in response.lines() {
        let line = line.trim_start();
        if summary.is_none() {
            if let Some(rest) = line.strip_prefix("Summary:") {
                summary = Some(rest.trim().to_string());
                continue;
            }
        }
        if let Some(rest) = line.strip_prefix("Answer:") {
            answer = Some(rest);
            break;
        }
    }
    let answer = answer.ok_or(InferenceError::MalformedResponse)?;
    let label =
        answer.trim_matches(|c: char| c.is_whitespace() || crate::text::is_punctuation(c));
    let category = ImpactCategory::parse(label)
        .map_err(|_| InferenceError::UnknownLabel(label.to_string()))?;
    Ok(ParsedAnswer { summary: summary.unwrap_or_default(), category })
}

/// Aggregates weighted votes into a final category.
///
/// The winner is the most frequent category. Count ties break toward the
/// higher mean confidence across that category's votes; exact confidence
/// ties break toward the less severe category (lower enum index). Returns
/// `None` for an empty vote list.
pub fn majority_vote(
    votes: &[(ImpactCategory, f64)],
) -> Option<(ImpactCategory, BTreeMap<ImpactCategory, usize>)> {
    if votes.is_empty() {
        return None;
    }
    let mut counts: BTreeMap<ImpactCategory, usize> = BTreeMap::new();
    let mut confidence_sum: BTreeMap<ImpactCategory, f64> = BTreeMap::new();
    for &(category, confidence) in votes {
        *counts.entry(category).or_insert(0) += 1;
        *confidence_sum.entry(category).or_insert(0.0) += confidence;
    }
    // BTreeMap iterates in enum order, so keeping strict inequalities makes
    // the final tie-break fall to the less severe category.
    let mut best: Option<(ImpactCategory, usize, f64)> = None;
    for (&category, &count) in &counts {
        let mean_confidence = confidence_sum[&category] / count as f64;
        let better = match best {
            None => true,
            Some((_, best_count, best_conf)) => {
                count > best_count || (count == best_count && mean_confidence > best_conf)
            }
        };
        if better {
            best = Some((category, count, mean_confidence));
        }
    }
    best.map(|(category, _, _)| (category, counts))
}

fn assembled_logits(
    doc: &Document,
    indices: &[usize],
    style: InputStyle,
    backend: &dyn ScorerBackend,
    chunk_cfg: &ChunkConfig,
) -> Result<Vec<f64>, InferenceError> {
    let text = assemble_input(doc, indices, style);
    let tokens = reference_tokenize(&text);
    Ok(classify_tokens(&tokens, backend, chunk_cfg)?)
}

fn ensure_six(logits: &[f64]) -> Result<(), InferenceError> {
    if logits.len() != crate::category::NUM_CATEGORIES {
        return Err(InferenceError::Scoring(ScoringError::ClassCountMismatch {
            expected: crate::category::NUM_CATEGORIES,
            got: logits.len(),
        }));
    }
    Ok(())
}

/// Predicts with a classification backend.
///
/// Without a ranking the full document is classified (chunked, logits
/// averaged). With a ranking, deterministic mode classifies the top-k
/// concatenated input; randomized mode classifies `num_samples` sampled
/// inputs and majority-votes, breaking count ties by the higher mean
/// winning-class softmax confidence.
pub fn predict_with_classifier(
    doc: &Document,
    ranking: Option<&SentenceRanking>,
    cfg: &SelectionConfig,
    backend: &dyn ScorerBackend,
    chunk_cfg: &ChunkConfig,
) -> Result<Prediction, InferenceError> {
    let single_pass = |logits: Vec<f64>| -> Result<Prediction, InferenceError> {
        ensure_six(&logits)?;
        let category = ImpactCategory::from_index(argmax(&logits)).expect("six-class argmax");
        Ok(Prediction {
            doc_id: doc.doc_id.clone(),
            category,
            votes: BTreeMap::new(),
            summary: None,
            sample_inputs_used: 1,
            abstentions: 0,
            all_abstained: false,
        })
    };

    match (ranking, cfg.mode) {
        (None, _) => single_pass(classify_tokens(&doc.tokens(), backend, chunk_cfg)?),
        (Some(ranking), SelectionMode::Deterministic) => {
            let indices = select_top_k(ranking, cfg.k);
            single_pass(assembled_logits(doc, &indices, InputStyle::Concatenated, backend, chunk_cfg)?)
        }
        (Some(ranking), SelectionMode::Randomized) => {
            let mut votes: Vec<(ImpactCategory, f64)> = Vec::with_capacity(cfg.num_samples);
            for sample_index in 0..cfg.num_samples {
                let indices = sample_selection(ranking, cfg, sample_index as u64);
                let logits = assembled_logits(
                    doc,
                    &indices,
                    InputStyle::Concatenated,
                    backend,
                    chunk_cfg,
                )?;
                ensure_six(&logits)?;
                let winner = argmax(&logits);
                let confidence = softmax(&logits)[winner];
                let category = ImpactCategory::from_index(winner).expect("six-class argmax");
                votes.push((category, confidence));
            }
            let (category, counts) = majority_vote(&votes).expect("num_samples >= 1");
            Ok(Prediction {
                doc_id: doc.doc_id.clone(),
                category,
                votes: counts,
                summary: None,
                sample_inputs_used: cfg.num_samples,
                abstentions: 0,
                all_abstained: false,
            })
        }
    }
}

/// Predicts with a generative backend.
///
/// Without a ranking the full text is prompted; with one, the selected
/// sentences are assembled with gap markers and prompted in extracted
/// mode. Randomized mode votes over `num_samples` generations; responses
/// that fail to parse abstain, and if every sample abstains the prediction
/// falls back to Data Deficient with `all_abstained` set.
pub fn predict_with_llm(
    doc: &Document,
    ranking: Option<&SentenceRanking>,
    cfg: &SelectionConfig,
    client: &dyn GenerationClient,
    llm: &LlmConfig,
) -> Result<Prediction, InferenceError> {
    let generate_and_parse = |body: &str, mode: PromptMode| -> Result<Result<ParsedAnswer, InferenceError>, InferenceError> {
        let prompt = build_llm_prompt_with(body, &doc.species, mode, llm)?;
        let response = client.generate(&prompt, llm.max_new_tokens)?;
        Ok(parse_llm_answer(&response))
    };

    let single_pass = |body: &str, mode: PromptMode| -> Result<Prediction, InferenceError> {
        let parsed = generate_and_parse(body, mode)?;
        let mut prediction = Prediction {
            doc_id: doc.doc_id.clone(),
            category: ImpactCategory::DataDeficient,
            votes: BTreeMap::new(),
            summary: None,
            sample_inputs_used: 1,
            abstentions: 0,
            all_abstained: false,
        };
        match parsed {
            Ok(answer) => {
                prediction.category = answer.category;
                prediction.summary = (!answer.summary.is_empty()).then_some(answer.summary);
            }
            Err(_) => {
                prediction.abstentions = 1;
                prediction.all_abstained = true;
            }
        }
        Ok(prediction)
    };

    match (ranking, cfg.mode) {
        (None, _) => single_pass(&doc.full_text(), PromptMode::FullText),
        (Some(ranking), SelectionMode::Deterministic) => {
            let indices = select_top_k(ranking, cfg.k);
            let body = assemble_input(doc, &indices, InputStyle::GapMarked);
            single_pass(&body, PromptMode::Extracted)
        }
        (Some(ranking), SelectionMode::Randomized) => {
            let mut votes: Vec<(ImpactCategory, f64)> = Vec::new();
            let mut summaries: Vec<(ImpactCategory, String)> = Vec::new();
            let mut abstentions = 0usize;
            for sample_index in 0..cfg.num_samples {
                let indices = sample_selection(ranking, cfg, sample_index as u64);
                let body = assemble_input(doc, &indices, InputStyle::GapMarked);
                match generate_and_parse(&body, PromptMode::Extracted)? {
                    Ok(answer) => {
                        if !answer.summary.is_empty() {
                            summaries.push((answer.category, answer.summary));
                        }
                        // The generative path carries no confidence, so count
                        // ties fall through to the less severe category.
                        votes.push((answer.category, 0.0));
                    }
                    Err(_) => abstentions += 1,
                }
            }
            let (category, counts, all_abstained) = match majority_vote(&votes) {
                Some((category, counts)) => (category, counts, false),
                None => (ImpactCategory::DataDeficient, BTreeMap::new(), true),
            };
            let summary = summaries
                .into_iter()
                .find(|(c, _)| *c == category)
                .map(|(_, s)| s);
            Ok(Prediction {
                doc_id: doc.doc_id.clone(),
                category,
                votes: counts,
                summary,
                sample_inputs_used: cfg.num_samples,
                abstentions,
                all_abstained,
            })
        }
    }
}

pub mod mock {
    //! Deterministic generation clients for tests and dry runs.

    use alloc::format;
    use alloc::string::String;
    use alloc::vec::Vec;

    use super::{ClientError, GenerationClient};
    use crate::category::ImpactCategory;
    use crate::text::reference_tokenize;

    /// Answers with the category whose keywords appear most often in the
    /// prompt body; ties fall to the less severe category, no hits to
    /// Data Deficient. Greedy by construction: a pure function of the
    /// prompt.
    #[derive(Debug, Clone)]
    pub struct KeywordMockClient {
        /// Per-category keyword lists, matched against case-folded tokens.
        pub keywords: Vec<(ImpactCategory, Vec<String>)>,
    }

    impl KeywordMockClient {
        pub fn new(keywords: Vec<(ImpactCategory, Vec<String>)>) -> Self {
            Self { keywords }
        }

        /// The body slot sits between the fixed intro and outro lines; when
        /// both are present only that slice is scanned, so template words
        /// never count as hits.
        fn body_of<'a>(&self, prompt: &'a str) -> &'a str {
            let intro = "about an invasive species: ";
            let outro = "\n\nThis is the end of the scientific text.";
            match (prompt.find(intro), prompt.find(outro)) {
                (Some(start), Some(end)) if start + intro.len() <= end => {
                    &prompt[start + intro.len()..end]
                }
                _ => prompt,
            }
        }
    }

    impl GenerationClient for KeywordMockClient {
        fn generate(&self, prompt: &str, _max_new_tokens: usize) -> Result<String, ClientError> {
            let body = self.body_of(prompt);
            let tokens: Vec<String> =
                reference_tokenize(body).iter().map(|t| t.to_lowercase()).collect();
            let mut best: Option<(usize, ImpactCategory)> = None;
            for (category, words) in &self.keywords {
                let count =
                    tokens.iter().filter(|t| words.iter().any(|w| w == *t)).count();
                if count > 0 && best.is_none_or(|(c, _)| count > c) {
                    best = Some((count, *category));
                }
            }
            let category = best.map_or(ImpactCategory::DataDeficient, |(_, c)| c);
            Ok(format!(
                "Summary: Keyword scan of the provided text.\nAnswer: {}\nEND.",
                category.label()
            ))
        }
    }

    /// Always returns the same response string.
    #[derive(Debug, Clone)]
    pub struct FixedClient {
        pub response: String,
    }

    impl GenerationClient for FixedClient {
        fn generate(&self, _prompt: &str, _max_new_tokens: usize) -> Result<String, ClientError> {
            Ok(self.response.clone())
        }
    }
}
