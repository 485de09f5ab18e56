//! The six-way impact category enumeration used as classification target.

use core::fmt;

use alloc::string::String;

/// Number of impact categories.
pub const NUM_CATEGORIES: usize = 6;

/// EICAT impact category.
///
/// Enum order mirrors the category list used in the classification prompt,
/// from least to most severe, with `DataDeficient` last. Logit vectors and
/// confusion matrices are indexed in this order, and vote tie-breaking
/// prefers earlier variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ImpactCategory {
    MinimalConcern,
    Minor,
    Moderate,
    Major,
    Massive,
    DataDeficient,
}

/// All categories in enum (= logit index) order.
pub const ALL_CATEGORIES: [ImpactCategory; NUM_CATEGORIES] = [
    ImpactCategory::MinimalConcern,
    ImpactCategory::Minor,
    ImpactCategory::Moderate,
    ImpactCategory::Major,
    ImpactCategory::Massive,
    ImpactCategory::DataDeficient,
];

/// The canonical answer labels, index-aligned with [`ALL_CATEGORIES`].
pub const ANSWER_LABELS: [&str; NUM_CATEGORIES] =
    ["Minimal", "Minor", "Moderate", "Major", "Massive", "Data Deficient"];

/// Error returned when a category string matches neither surface family.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown impact category: {0:?}")]
pub struct UnknownCategory(pub String);

impl ImpactCategory {
    /// Position in enum order; also the index into logit vectors.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Category at a given logit index, if in range.
    pub fn from_index(index: usize) -> Option<Self> {
        ALL_CATEGORIES.get(index).copied()
    }

    /// Canonical label (the answer-format surface form).
    pub fn label(self) -> &'static str {
        ANSWER_LABELS[self.index()]
    }

    /// Parses either surface-form family, case-insensitively.
    ///
    /// Accepted per category: the canonical answer labels ("Minimal",
    /// "Major", ...) and the assessment-table names ("Minimal Concern",
    /// "Major Risk", ...). Interior whitespace is collapsed, so
    /// "data   deficient" parses too.
    pub fn parse(s: &str) -> Result<Self, UnknownCategory> {
        let folded = fold_label(s);
        match folded.as_str() {
            "minimal" | "minimal concern" => Ok(Self::MinimalConcern),
            "minor" => Ok(Self::Minor),
            "moderate" => Ok(Self::Moderate),
            "major" | "major risk" => Ok(Self::Major),
            "massive" => Ok(Self::Massive),
            "data deficient" => Ok(Self::DataDeficient),
            _ => Err(UnknownCategory(String::from(s))),
        }
    }
}

/// Lowercases and collapses whitespace runs to single spaces.
fn fold_label(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            out.extend(c.to_lowercase());
        }
    }
    out
}

impl fmt::Display for ImpactCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for ImpactCategory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for ImpactCategory {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <&str as serde::Deserialize>::deserialize(deserializer)?;
        Self::parse(s).map_err(serde::de::Error::custom)
    }
}
