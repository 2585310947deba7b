//! Topic characteristics of a selected term: categories, narrower terms,
//! clinical significance with its time lag, and pathogen status.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, CorpusProvider};
use crate::vocab::{self, TermRecord, VocabularyDB};

/// Annotation marker of an infectious organism.
pub const PATHOGEN_MARKER: &str = "infection: coord";

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("no clinical-trial year")]
    NoClinicalYear,
    #[error("clinical lag {0} is outside the staged range -4..=17")]
    LagOutOfRange(i32),
    #[error("term {0:?} is not an Organisms (B) term")]
    NotOrganism(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PathogenClass {
    PathogenHuman,
    PathogenOther,
    PathogenBoth,
    NonPathogen,
}

impl PathogenClass {
    pub const ALL: [PathogenClass; 4] = [
        Self::PathogenHuman,
        Self::PathogenOther,
        Self::PathogenBoth,
        Self::NonPathogen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PathogenHuman => "PathogenHuman",
            Self::PathogenOther => "PathogenOther",
            Self::PathogenBoth => "PathogenBoth",
            Self::NonPathogen => "NonPathogen",
        }
    }
}

impl fmt::Display for PathogenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Host keyword lists used to resolve which organisms a pathogen affects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeywordConfig {
    pub human_markers: Vec<String>,
    pub nonhuman_markers: Vec<String>,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            human_markers: owned(&["human", "humans", "man"]),
            nonhuman_markers: owned(&[
                "cattle",
                "swine",
                "poultry",
                "fish",
                "plants",
                "birds",
                "mice",
                "simian",
                "primates (non-human)",
                "animals",
                "dogs",
                "cats",
                "horses",
                "sheep",
                "chickens",
                "rodents",
                "monkeys",
                "insects",
            ]),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-'
}

/// Finds `needle` in `haystack` as a whole phrase (neither end glued to a
/// letter, digit or hyphen). Both inputs are expected lowercase.
fn phrase_spans(haystack: &str, needle: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    if needle.is_empty() {
        return spans;
    }
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let start = from + pos;
        let end = start + needle.len();
        let before_ok = haystack[..start].chars().next_back().is_none_or(|c| !is_word_char(c));
        let after_ok = haystack[end..].chars().next().is_none_or(|c| !is_word_char(c));
        if before_ok && after_ok {
            spans.push((start, end));
        }
        from = start + haystack[start..].chars().next().map_or(1, char::len_utf8);
    }
    spans
}

impl KeywordConfig {
    /// (human hit, non-human hit) for a scope note. Non-human phrases are
    /// matched first and masked, so "primates (non-human)" never also
    /// counts as a human mention.
    pub fn host_hits(&self, scope_note: &str) -> (bool, bool) {
        let mut text = scope_note.to_lowercase();
        let mut nonhuman = false;
        for marker in &self.nonhuman_markers {
            let marker = marker.to_lowercase();
            for (s, e) in phrase_spans(&text, &marker) {
                nonhuman = true;
                text.replace_range(s..e, &" ".repeat(e - s));
            }
        }
        let human = self
            .human_markers
            .iter()
            .any(|m| !phrase_spans(&text, &m.to_lowercase()).is_empty());
        (human, nonhuman)
    }
}

/// Pathogen status of an Organisms term from its annotation and scope note.
pub fn classify_pathogen(term: &TermRecord, keywords: &KeywordConfig) -> Result<PathogenClass, ProfileError> {
    if !vocab::subject_categories(term).contains(&'B') {
        return Err(ProfileError::NotOrganism(term.ui.clone()));
    }
    if !term.annotation.to_lowercase().contains(PATHOGEN_MARKER) {
        return Ok(PathogenClass::NonPathogen);
    }
    Ok(match keywords.host_hits(&term.scope_note) {
        (true, false) => PathogenClass::PathogenHuman,
        (true, true) => PathogenClass::PathogenBoth,
        (false, _) => PathogenClass::PathogenOther,
    })
}

/// Years from inclusion to the first clinical-trial article (may be negative).
pub fn clinical_lag(added_year: i32, clinical_first_year: Option<i32>) -> Result<i32, ProfileError> {
    clinical_first_year
        .map(|y| y - added_year)
        .ok_or(ProfileError::NoClinicalYear)
}

/// Inclusive lag bracket of each stage, stage 1 first.
pub const LAG_STAGES: [(i32, i32); 5] = [(-4, 0), (1, 4), (5, 8), (9, 12), (13, 17)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LagStage {
    pub stage: u8,
    pub lag_years: i32,
}

impl LagStage {
    pub fn range_label(self) -> String {
        let (lo, hi) = LAG_STAGES[self.stage as usize - 1];
        format!("from {lo} to {hi}")
    }
}

pub fn lag_stage(lag: i32) -> Result<LagStage, ProfileError> {
    LAG_STAGES
        .iter()
        .position(|&(lo, hi)| (lo..=hi).contains(&lag))
        .map(|i| LagStage {
            stage: i as u8 + 1,
            lag_years: lag,
        })
        .ok_or(ProfileError::LagOutOfRange(lag))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopicProfile {
    pub ui: String,
    pub year_added: i32,
    /// Subject categories (V and Z removed).
    pub categories: BTreeSet<char>,
    pub has_narrower: bool,
    /// First clinical-trial year, if it falls within the horizon.
    pub clinical_first_year: Option<i32>,
    pub clinical_significance: bool,
    /// Present exactly for Organisms (B) terms.
    pub pathogen: Option<PathogenClass>,
}

impl TopicProfile {
    pub fn clinical_lag(&self) -> Option<i32> {
        self.clinical_first_year.map(|y| y - self.year_added)
    }

    /// Whether clinical significance is known by forecasting year `m`
    /// (year 1 is the inclusion year).
    pub fn clinical_known_at(&self, m: u32) -> bool {
        self.clinical_first_year
            .is_some_and(|y| y < self.year_added + m as i32)
    }
}

pub fn build_profile(
    term: &TermRecord,
    db: &VocabularyDB,
    corpus: &dyn CorpusProvider,
    horizon_year: i32,
    keywords: &KeywordConfig,
) -> Result<TopicProfile, ProfileError> {
    let categories = vocab::subject_categories(term);
    let clinical_first_year = corpus
        .first_clinical_trial_year(term)?
        .filter(|&y| y <= horizon_year);
    let pathogen = if categories.contains(&'B') {
        Some(classify_pathogen(term, keywords)?)
    } else {
        None
    };
    Ok(TopicProfile {
        ui: term.ui.clone(),
        year_added: term.year_added,
        has_narrower: vocab::has_narrower_at_inclusion(db, term),
        clinical_significance: clinical_first_year.is_some(),
        clinical_first_year,
        categories,
        pathogen,
    })
}
