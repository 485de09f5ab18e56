//! Shared fixture for binary-level tests: a six-document corpus with one
//! impact category per document and two known evidence sentences per paper.
//!
//! Not every test target uses every helper.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

pub const SPECIES: [&str; 6] = [
    "Procyon lotor",
    "Castor fiber",
    "Myocastor coypus",
    "Sciurus carolinensis",
    "Mustela vison",
    "Ondatra zibethicus",
];

pub const CATEGORIES: [&str; 6] =
    ["Minimal", "Minor", "Moderate", "Major", "Massive", "Data Deficient"];

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sentsel"))
}

pub fn run_args(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn sentsel")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run_args(dir, args);
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

/// Eight segmentable sentences; index 2 and 5 carry the species impact.
pub fn paper_text(species: &str, category: &str) -> String {
    let filler = |n: usize| {
        format!("Survey teams visited transect {n} during the spring field season and logged habitat variables.")
    };
    [
        filler(1),
        filler(2),
        format!("Observers documented that {species} affected native communities at the {category} level in most plots."),
        filler(3),
        filler(4),
        format!("Follow-up monitoring confirmed the {category} classification of {species} impacts across all sites."),
        filler(5),
        filler(6),
    ]
    .join(" ")
}

/// Lays out assessments.csv and texts/, returning the fixture directory.
pub fn build_fixture() -> TempDir {
    let dir = tempfile::tempdir().expect("tempdir");
    let texts = dir.path().join("texts");
    std::fs::create_dir(&texts).unwrap();

    let mut csv = csv::Writer::from_path(dir.path().join("assessments.csv")).unwrap();
    csv.write_record(["species", "publication", "category", "evidence"]).unwrap();
    for (i, (species, category)) in SPECIES.iter().zip(CATEGORIES).enumerate() {
        let publication = format!("paper-{i}");
        let text = paper_text(species, category);
        std::fs::write(texts.join(format!("{publication}.txt")), &text).unwrap();
        // Evidence: the two signal sentences, verbatim.
        let evidence = format!(
            "Observers documented that {species} affected native communities at the {category} level in most plots.|Follow-up monitoring confirmed the {category} classification of {species} impacts across all sites."
        );
        csv.write_record([species, publication.as_str(), category, evidence.as_str()]).unwrap();
    }
    csv.flush().unwrap();
    dir
}
