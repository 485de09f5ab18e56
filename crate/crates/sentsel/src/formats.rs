//! File formats for every pipeline artifact.
//!
//! All JSON-lines readers report schema violations with 1-based line numbers
//! and reject unknown fields. Writers emit records in a deterministic order
//! so identical inputs always produce byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use sentsel_core::alignment::{AlignmentSummary, MatchResult, MatchStatus};
use sentsel_core::category::ImpactCategory;
use sentsel_core::corpus::{AssessmentRow, CorpusSplit, Document, Sentence, SplitName};
use sentsel_core::inference::Prediction;
use sentsel_core::linear::{LinearModel, ModelFormatError};
use sentsel_core::selection::{SelectorExample, SentenceRanking, UsefulnessLabel};
use sentsel_core::text::reference_tokenize;

/// Identifies a corpus file; written as the first line of every corpus file.
pub const CORPUS_FORMAT: &str = "sentsel-corpus";
/// Current corpus file version.
pub const CORPUS_VERSION: u32 = 1;

/// Error for any artifact read or write.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A record violating the file's schema, with its 1-based line number
    /// (0 for whole-file problems such as a malformed header).
    #[error("{path}:{line}: {message}")]
    Schema { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: ModelFormatError,
    },
}

impl FormatError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    fn schema(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Self::Schema { path: path.to_path_buf(), line, message: message.into() }
    }
}

fn open_reader(path: &Path) -> Result<BufReader<File>, FormatError> {
    File::open(path).map(BufReader::new).map_err(|e| FormatError::io(path, e))
}

fn open_writer(path: &Path) -> Result<BufWriter<File>, FormatError> {
    File::create(path).map(BufWriter::new).map_err(|e| FormatError::io(path, e))
}

/// Reads one JSON value per line, handing each parsed record and its 1-based
/// line number to `each`. Parse failures surface the serde message verbatim.
fn read_jsonl<T, F>(path: &Path, mut each: F) -> Result<(), FormatError>
where
    T: DeserializeOwned,
    F: FnMut(usize, T) -> Result<(), FormatError>,
{
    let reader = open_reader(path)?;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| FormatError::io(path, e))?;
        let number = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .map_err(|e| FormatError::schema(path, number, e.to_string()))?;
        each(number, record)?;
    }
    Ok(())
}

fn write_jsonl_line<T: Serialize>(
    out: &mut impl Write,
    path: &Path,
    record: &T,
) -> Result<(), FormatError> {
    serde_json::to_writer(&mut *out, record)
        .map_err(|e| FormatError::schema(path, 0, e.to_string()))?;
    out.write_all(b"\n").map_err(|e| FormatError::io(path, e))
}

// --- corpus ---------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusHeader {
    format: String,
    version: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SentenceRecord {
    index: usize,
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRecord {
    doc_id: String,
    species: String,
    title: String,
    sentences: Vec<SentenceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<ImpactCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    evidence_indices: Option<Vec<usize>>,
}

/// Writes a corpus as JSON-lines: a header record, then one document per
/// line in the given order. Token counts are derived data and not stored.
pub fn save_corpus(path: &Path, docs: &[Document]) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    let header = CorpusHeader { format: CORPUS_FORMAT.to_string(), version: CORPUS_VERSION };
    write_jsonl_line(&mut out, path, &header)?;
    for doc in docs {
        let record = DocumentRecord {
            doc_id: doc.doc_id.clone(),
            species: doc.species.clone(),
            title: doc.title.clone(),
            sentences: doc
                .sentences
                .iter()
                .map(|s| SentenceRecord { index: s.index, text: s.text.clone() })
                .collect(),
            label: doc.label,
            evidence_indices: doc
                .evidence_indices
                .as_ref()
                .map(|set| set.iter().copied().collect()),
        };
        write_jsonl_line(&mut out, path, &record)?;
    }
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Loads a corpus file, validating the header, per-document invariants and
/// doc_id uniqueness. Token counts are recomputed with the reference
/// tokenizer.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>, FormatError> {
    let reader = open_reader(path)?;
    let mut lines = reader.lines().enumerate();

    let header_line = match lines.next() {
        Some((_, line)) => line.map_err(|e| FormatError::io(path, e))?,
        None => return Err(FormatError::schema(path, 0, "missing corpus header record")),
    };
    let header: CorpusHeader = serde_json::from_str(&header_line)
        .map_err(|e| FormatError::schema(path, 1, format!("bad corpus header: {e}")))?;
    if header.format != CORPUS_FORMAT {
        return Err(FormatError::schema(
            path,
            1,
            format!("unexpected format {:?}; expected {CORPUS_FORMAT:?}", header.format),
        ));
    }
    if header.version != CORPUS_VERSION {
        return Err(FormatError::schema(
            path,
            1,
            format!("unsupported corpus version {}", header.version),
        ));
    }

    let mut docs = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| FormatError::io(path, e))?;
        let number = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord = serde_json::from_str(&line)
            .map_err(|e| FormatError::schema(path, number, e.to_string()))?;
        docs.push(document_from_record(path, number, record, &mut seen_ids)?);
    }
    Ok(docs)
}

fn document_from_record(
    path: &Path,
    line: usize,
    record: DocumentRecord,
    seen_ids: &mut BTreeSet<String>,
) -> Result<Document, FormatError> {
    if record.doc_id.is_empty() {
        return Err(FormatError::schema(path, line, "doc_id must be non-empty"));
    }
    if !seen_ids.insert(record.doc_id.clone()) {
        return Err(FormatError::schema(path, line, format!("duplicate doc_id {:?}", record.doc_id)));
    }
    if record.species.is_empty() {
        return Err(FormatError::schema(path, line, "species must be non-empty"));
    }
    let mut sentences = Vec::with_capacity(record.sentences.len());
    for (expected, s) in record.sentences.into_iter().enumerate() {
        if s.index != expected {
            return Err(FormatError::schema(
                path,
                line,
                format!("sentence index {} out of order; expected {expected}", s.index),
            ));
        }
        if s.text.is_empty() {
            return Err(FormatError::schema(path, line, format!("sentence {expected} is empty")));
        }
        let token_count = reference_tokenize(&s.text).len();
        sentences.push(Sentence { index: s.index, text: s.text, token_count });
    }
    let evidence_indices = match record.evidence_indices {
        None => None,
        Some(list) => {
            let set: BTreeSet<usize> = list.iter().copied().collect();
            if let Some(&bad) = set.iter().find(|&&i| i >= sentences.len()) {
                return Err(FormatError::schema(
                    path,
                    line,
                    format!("evidence index {bad} out of range for {} sentences", sentences.len()),
                ));
            }
            Some(set)
        }
    };
    Ok(Document {
        doc_id: record.doc_id,
        species: record.species,
        title: record.title,
        sentences,
        label: record.label,
        evidence_indices,
    })
}

// --- assessments (CSV) ----------------------------------------------------

/// Reads an assessment table: CSV with a header row naming the columns
/// `species`, `publication`, `category` and `evidence`. The evidence cell
/// holds zero or more sentences separated by `evidence_delimiter`.
pub fn read_assessments(
    path: &Path,
    evidence_delimiter: &str,
) -> Result<Vec<AssessmentRow>, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| FormatError::schema(path, 0, e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| FormatError::schema(path, 1, e.to_string()))?
        .clone();
    let column = |name: &str| -> Result<usize, FormatError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FormatError::schema(path, 1, format!("missing column {name:?}")))
    };
    let species_col = column("species")?;
    let publication_col = column("publication")?;
    let category_col = column("category")?;
    let evidence_col = column("evidence")?;

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let number = idx + 2; // header is line 1
        let record = record.map_err(|e| FormatError::schema(path, number, e.to_string()))?;
        let field = |col: usize| record.get(col).unwrap_or("").trim().to_string();
        let evidence_cell = field(evidence_col);
        let evidence_texts = if evidence_cell.is_empty() {
            Vec::new()
        } else {
            evidence_cell
                .split(evidence_delimiter)
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        };
        rows.push(AssessmentRow {
            species: field(species_col),
            publication: field(publication_col),
            category: field(category_col),
            evidence_texts,
        });
    }
    Ok(rows)
}

// --- splits ---------------------------------------------------------------

/// Writes a split as a JSON object mapping species to split name.
pub fn save_split(path: &Path, split: &CorpusSplit) -> Result<(), FormatError> {
    let map: BTreeMap<&str, &str> =
        split.assignment.iter().map(|(s, n)| (s.as_str(), n.as_str())).collect();
    let mut out = open_writer(path)?;
    serde_json::to_writer_pretty(&mut out, &map)
        .map_err(|e| FormatError::schema(path, 0, e.to_string()))?;
    out.write_all(b"\n").map_err(|e| FormatError::io(path, e))?;
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Loads a split file written by [`save_split`].
pub fn load_split(path: &Path) -> Result<CorpusSplit, FormatError> {
    let mut text = String::new();
    open_reader(path)?.read_to_string(&mut text).map_err(|e| FormatError::io(path, e))?;
    let map: BTreeMap<String, String> = serde_json::from_str(&text)
        .map_err(|e| FormatError::schema(path, 0, e.to_string()))?;
    let mut assignment = BTreeMap::new();
    for (species, name) in map {
        let split = match name.as_str() {
            "train" => SplitName::Train,
            "val" => SplitName::Val,
            "test" => SplitName::Test,
            other => {
                return Err(FormatError::schema(
                    path,
                    0,
                    format!("unknown split name {other:?} for species {species:?}"),
                ))
            }
        };
        assignment.insert(species, split);
    }
    Ok(CorpusSplit { assignment })
}

// --- per-sentence score files (signals, gains) ----------------------------

/// One document's per-sentence float values: signal scores or NDCG gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoresRecord {
    pub doc_id: String,
    pub scores: Vec<f64>,
}

/// Writes per-document score vectors in doc_id order.
pub fn write_scores(path: &Path, scores: &BTreeMap<String, Vec<f64>>) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    for (doc_id, values) in scores {
        let record = ScoresRecord { doc_id: doc_id.clone(), scores: values.clone() };
        write_jsonl_line(&mut out, path, &record)?;
    }
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Reads a score file; duplicate doc_ids are schema errors.
pub fn read_scores(path: &Path) -> Result<BTreeMap<String, Vec<f64>>, FormatError> {
    let mut scores = BTreeMap::new();
    read_jsonl(path, |line, record: ScoresRecord| {
        if scores.insert(record.doc_id.clone(), record.scores).is_some() {
            return Err(FormatError::schema(
                path,
                line,
                format!("duplicate doc_id {:?}", record.doc_id),
            ));
        }
        Ok(())
    })?;
    Ok(scores)
}

// --- rankings ---------------------------------------------------------------

/// Writes rankings as JSON-lines in the given order.
pub fn write_rankings(path: &Path, rankings: &[SentenceRanking]) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    for ranking in rankings {
        write_jsonl_line(&mut out, path, ranking)?;
    }
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Reads a ranking file, checking each record's order is a permutation of
/// its score indices.
pub fn read_rankings(path: &Path) -> Result<Vec<SentenceRanking>, FormatError> {
    let mut rankings: Vec<SentenceRanking> = Vec::new();
    read_jsonl(path, |line, record: SentenceRanking| {
        if record.order.len() != record.scores.len() {
            return Err(FormatError::schema(
                path,
                line,
                format!(
                    "order length {} does not match {} scores",
                    record.order.len(),
                    record.scores.len()
                ),
            ));
        }
        let mut seen = vec![false; record.scores.len()];
        for &i in &record.order {
            if i >= seen.len() || seen[i] {
                return Err(FormatError::schema(
                    path,
                    line,
                    format!("order is not a permutation (index {i})"),
                ));
            }
            seen[i] = true;
        }
        rankings.push(record);
        Ok(())
    })?;
    Ok(rankings)
}

// --- selector training data -------------------------------------------------

/// Writes selector training examples as JSON-lines in the given order.
pub fn write_selector_data(path: &Path, examples: &[SelectorExample]) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    for example in examples {
        write_jsonl_line(&mut out, path, example)?;
    }
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Reads selector training examples.
pub fn read_selector_data(path: &Path) -> Result<Vec<SelectorExample>, FormatError> {
    let mut examples = Vec::new();
    read_jsonl(path, |line, record: SelectorExample| {
        let classes = record.source.num_classes() as u8;
        if record.label >= classes {
            return Err(FormatError::schema(
                path,
                line,
                format!("label {} out of range for {} source", record.label, record.source),
            ));
        }
        examples.push(record);
        Ok(())
    })?;
    Ok(examples)
}

// --- selections ---------------------------------------------------------------

/// One sampled (or deterministic) sentence selection for a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionRecord {
    pub doc_id: String,
    pub sample_index: u64,
    /// Selected sentence indices in ascending document order.
    pub indices: Vec<usize>,
}

/// Writes selection records in the given order.
pub fn write_selections(path: &Path, records: &[SelectionRecord]) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    for record in records {
        write_jsonl_line(&mut out, path, record)?;
    }
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Reads selection records.
pub fn read_selections(path: &Path) -> Result<Vec<SelectionRecord>, FormatError> {
    let mut records = Vec::new();
    read_jsonl(path, |line, record: SelectionRecord| {
        if !record.indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(FormatError::schema(path, line, "indices must be strictly ascending"));
        }
        records.push(record);
        Ok(())
    })?;
    Ok(records)
}

// --- predictions ---------------------------------------------------------------

/// Writes predictions as JSON-lines in the given order.
pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    for prediction in predictions {
        write_jsonl_line(&mut out, path, prediction)?;
    }
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Reads a predictions file.
pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, FormatError> {
    let mut predictions = Vec::new();
    read_jsonl(path, |_, record: Prediction| {
        predictions.push(record);
        Ok(())
    })?;
    Ok(predictions)
}

// --- per-sentence usefulness labels ------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelsRecord {
    doc_id: String,
    /// One class per sentence: 0 not useful, 1 slightly useful, 2 highly useful.
    labels: Vec<u8>,
}

/// Reads per-sentence usefulness judgments keyed by doc_id.
pub fn read_usefulness_labels(
    path: &Path,
) -> Result<BTreeMap<String, Vec<UsefulnessLabel>>, FormatError> {
    let mut map = BTreeMap::new();
    read_jsonl(path, |line, record: LabelsRecord| {
        let mut labels = Vec::with_capacity(record.labels.len());
        for &class in &record.labels {
            let label = match class {
                0 => UsefulnessLabel::NotUseful,
                1 => UsefulnessLabel::SlightlyUseful,
                2 => UsefulnessLabel::HighlyUseful,
                other => {
                    return Err(FormatError::schema(
                        path,
                        line,
                        format!("usefulness class {other} out of range 0..=2"),
                    ))
                }
            };
            labels.push(label);
        }
        if map.insert(record.doc_id.clone(), labels).is_some() {
            return Err(FormatError::schema(
                path,
                line,
                format!("duplicate doc_id {:?}", record.doc_id),
            ));
        }
        Ok(())
    })?;
    Ok(map)
}

/// Writes per-sentence usefulness judgments in doc_id order.
pub fn write_usefulness_labels(
    path: &Path,
    labels: &BTreeMap<String, Vec<UsefulnessLabel>>,
) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    for (doc_id, doc_labels) in labels {
        let record = LabelsRecord {
            doc_id: doc_id.clone(),
            labels: doc_labels.iter().map(|l| l.class()).collect(),
        };
        write_jsonl_line(&mut out, path, &record)?;
    }
    out.flush().map_err(|e| FormatError::io(path, e))
}

// --- alignment report ---------------------------------------------------------

/// One evidence sentence's alignment outcome within a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentRecord {
    pub doc_id: String,
    pub evidence_id: usize,
    pub matched_indices: Vec<usize>,
    pub score: f64,
    pub status: MatchStatus,
}

impl AlignmentRecord {
    /// Pairs a core match result with its document.
    pub fn new(doc_id: &str, result: &MatchResult) -> Self {
        Self {
            doc_id: doc_id.to_string(),
            evidence_id: result.evidence_id,
            matched_indices: result.matched_indices.clone(),
            score: result.score,
            status: result.status,
        }
    }
}

/// Writes an alignment report: one record per evidence sentence, then the
/// summary as the final line.
pub fn write_alignment_report(
    path: &Path,
    records: &[AlignmentRecord],
    summary: &AlignmentSummary,
) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    for record in records {
        write_jsonl_line(&mut out, path, record)?;
    }
    write_jsonl_line(&mut out, path, summary)?;
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Reads an alignment report back into its records and trailing summary.
pub fn read_alignment_report(
    path: &Path,
) -> Result<(Vec<AlignmentRecord>, AlignmentSummary), FormatError> {
    let reader = open_reader(path)?;
    let mut records = Vec::new();
    let mut summary: Option<AlignmentSummary> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| FormatError::io(path, e))?;
        let number = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if summary.is_some() {
            return Err(FormatError::schema(path, number, "records after the summary line"));
        }
        if let Ok(record) = serde_json::from_str::<AlignmentRecord>(&line) {
            records.push(record);
        } else {
            summary = Some(
                serde_json::from_str::<AlignmentSummary>(&line)
                    .map_err(|e| FormatError::schema(path, number, e.to_string()))?,
            );
        }
    }
    let summary =
        summary.ok_or_else(|| FormatError::schema(path, 0, "missing trailing summary record"))?;
    Ok((records, summary))
}

// --- single-object JSON (reports, matrices) -------------------------------

/// Writes any serializable report as pretty-printed JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| FormatError::schema(path, 0, e.to_string()))?;
    out.write_all(b"\n").map_err(|e| FormatError::io(path, e))?;
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Reads a single JSON object written by [`write_json`].
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let mut text = String::new();
    open_reader(path)?.read_to_string(&mut text).map_err(|e| FormatError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| FormatError::schema(path, 0, e.to_string()))
}

/// Writes an agreement matrix as CSV: one row per selector, one column per
/// truth, cell values formatted with full float precision.
pub fn write_agreement_csv(
    path: &Path,
    matrix: &sentsel_core::metrics::AgreementMatrix,
) -> Result<(), FormatError> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| FormatError::schema(path, 0, e.to_string()))?;
    let mut header = vec!["selector".to_string()];
    header.extend(matrix.truths.iter().cloned());
    writer.write_record(&header).map_err(|e| FormatError::schema(path, 0, e.to_string()))?;
    for (row, selector) in matrix.selectors.iter().enumerate() {
        let mut record = vec![selector.clone()];
        record.extend(matrix.values[row].iter().map(|v| v.to_string()));
        writer.write_record(&record).map_err(|e| FormatError::schema(path, 0, e.to_string()))?;
    }
    writer.flush().map_err(|e| FormatError::io(path, e))
}

// --- model weights ----------------------------------------------------------

/// Writes reference-classifier weights in their binary format.
pub fn save_model(path: &Path, model: &LinearModel) -> Result<(), FormatError> {
    let mut out = open_writer(path)?;
    out.write_all(&model.to_bytes()).map_err(|e| FormatError::io(path, e))?;
    out.flush().map_err(|e| FormatError::io(path, e))
}

/// Loads reference-classifier weights.
pub fn load_model(path: &Path) -> Result<LinearModel, FormatError> {
    let mut bytes = Vec::new();
    open_reader(path)?.read_to_end(&mut bytes).map_err(|e| FormatError::io(path, e))?;
    LinearModel::from_bytes(&bytes)
        .map_err(|source| FormatError::Model { path: path.to_path_buf(), source })
}
