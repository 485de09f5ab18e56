//! Deterministic synthetic corpora for end-to-end and benchmark runs.
//!
//! Each document carries a known impact class, a handful of signal sentences
//! that state that class's vocabulary for the document's own species, and a
//! large body of distractors: neutral method filler plus sentences that
//! attribute *other* classes' vocabulary to *other* species. Full-text
//! classification therefore sees conflicting signal, while the gold evidence
//! indices isolate the true one — the regime sentence selection is meant to
//! exploit. Everything is derived from the seed; identical configs yield
//! identical corpora.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sentsel_core::category::ImpactCategory;
use sentsel_core::corpus::Document;
use sentsel_core::text::segment_sentences;

/// Shape of a generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Total documents; spread round-robin over the classes.
    pub docs: usize,
    /// Number of classes in play, at most six.
    pub classes: usize,
    /// Species names per class; documents of one species share a class.
    pub species_per_class: usize,
    /// Signal sentences per document (the gold evidence).
    pub signal_sentences: usize,
    /// Distractor sentences per document.
    pub distractor_sentences: usize,
    /// Fraction of distractors that attribute foreign vocabulary to foreign
    /// species; the rest are neutral filler.
    pub foreign_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            docs: 120,
            classes: 6,
            species_per_class: 4,
            signal_sentences: 5,
            distractor_sentences: 100,
            foreign_fraction: 0.3,
            seed: 42,
        }
    }
}

/// Per-class signal vocabulary, in [`ImpactCategory`] order.
const SIGNAL_WORDS: [[&str; 3]; 6] = [
    ["negligible", "undetectable", "coexistence"],
    ["slight", "localized", "marginal"],
    ["measurable", "appreciable", "shrinking"],
    ["severe", "displacement", "exclusion"],
    ["collapse", "extinction", "irreversible"],
    ["unreported", "unquantified", "unverified"],
];

const FILLER_WORDS: [&str; 12] = [
    "transect", "quadrat", "logbook", "station", "buoy", "quarterly", "archived", "calibrated",
    "rotated", "digitised", "seasonal", "protocol",
];

const NAME_SYLLABLES: [&str; 10] =
    ["var", "tel", "ona", "dra", "mex", "lus", "pin", "cor", "eth", "bal"];

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Class-uncorrelated binomial species names, derived from the seed alone.
fn species_pool(rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(count);
    while names.len() < count {
        let pick = |rng: &mut ChaCha8Rng| NAME_SYLLABLES[rng.gen_range(0..NAME_SYLLABLES.len())];
        let genus = capitalize(&format!("{}{}{}", pick(rng), pick(rng), pick(rng)));
        let epithet = format!("{}{}", pick(rng), pick(rng));
        let name = format!("{genus} {epithet}");
        if !names.contains(&name) {
            names.push(name);
        }
    }
    names
}

fn signal_sentence(rng: &mut ChaCha8Rng, species: &str, class: usize) -> String {
    let words = SIGNAL_WORDS[class];
    let a = words[rng.gen_range(0..words.len())];
    let b = words[rng.gen_range(0..words.len())];
    format!("Assessors recorded {a} and {b} outcomes for {species} across invaded sites.")
}

fn filler_sentence(rng: &mut ChaCha8Rng) -> String {
    let pick = |rng: &mut ChaCha8Rng| FILLER_WORDS[rng.gen_range(0..FILLER_WORDS.len())];
    let (a, b, c) = (pick(rng), pick(rng), pick(rng));
    let season = rng.gen_range(1..=9);
    format!("Field crews kept {a} and {b} routines on the {c} schedule during season {season}.")
}

fn foreign_sentence(
    rng: &mut ChaCha8Rng,
    own_class: usize,
    own_species: &str,
    classes: usize,
    pool: &[String],
) -> String {
    let mut class = rng.gen_range(0..classes);
    if class == own_class {
        class = (class + 1) % classes;
    }
    let mut species = &pool[rng.gen_range(0..pool.len())];
    while species == own_species {
        species = &pool[rng.gen_range(0..pool.len())];
    }
    let words = SIGNAL_WORDS[class];
    let word = words[rng.gen_range(0..words.len())];
    format!("By contrast {species} exhibited {word} impacts in adjacent basins.")
}

/// Generates a corpus under `cfg`. Documents are labeled, and their signal
/// sentences' indices are stored as gold evidence.
///
/// # Panics
/// Panics if `cfg.classes` is 0 or exceeds six, or if `docs` is 0.
pub fn synth_corpus(cfg: &SynthConfig) -> Vec<Document> {
    assert!(cfg.classes >= 1 && cfg.classes <= 6, "classes must be in 1..=6");
    assert!(cfg.docs >= 1, "docs must be positive");

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool = species_pool(&mut rng, cfg.classes * cfg.species_per_class.max(1));

    let mut docs = Vec::with_capacity(cfg.docs);
    for doc_index in 0..cfg.docs {
        let class = doc_index % cfg.classes;
        // Species rotate within the class's share of the pool.
        let share = pool.len() / cfg.classes;
        let species = &pool[class * share + (doc_index / cfg.classes) % share];

        let total = cfg.signal_sentences + cfg.distractor_sentences;
        let mut positions: Vec<usize> = (0..total).collect();
        positions.shuffle(&mut rng);
        let mut signal_positions: Vec<usize> =
            positions.into_iter().take(cfg.signal_sentences).collect();
        signal_positions.sort_unstable();

        let mut sentences = Vec::with_capacity(total);
        let mut signal_iter = signal_positions.iter().peekable();
        for position in 0..total {
            if signal_iter.peek() == Some(&&position) {
                signal_iter.next();
                sentences.push(signal_sentence(&mut rng, species, class));
            } else if rng.gen_bool(cfg.foreign_fraction) {
                sentences.push(foreign_sentence(&mut rng, class, species, cfg.classes, &pool));
            } else {
                sentences.push(filler_sentence(&mut rng));
            }
        }

        let raw = sentences.join(" ");
        let segmented = segment_sentences(&raw).expect("generated text is non-empty");
        assert_eq!(
            segmented.len(),
            total,
            "templates must segment one sentence per template"
        );

        docs.push(Document {
            doc_id: format!("{species}::synth-{doc_index:04}"),
            species: species.clone(),
            title: format!("Synthetic assessment {doc_index:04} for {species}"),
            sentences: segmented,
            label: ImpactCategory::from_index(class),
            evidence_indices: Some(signal_positions.into_iter().collect()),
        });
    }
    docs
}
