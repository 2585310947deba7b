//! Vocabulary snapshots, yearly new-term lists and the new-concept filter.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, CorpusProvider};
use crate::par;

/// Top-level categories that describe publications or places rather than
/// subject content.
pub const NON_SUBJECT_CATEGORIES: [char; 2] = ['V', 'Z'];

const VALID_CATEGORIES: &str = "ABCDEFGHIJKLMNVZ";

/// A first article this many years (or fewer) before inclusion still counts
/// as a new concept.
pub const PREEXISTING_WINDOW_YEARS: i32 = 5;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("line {line}: malformed term record: {source}")]
    Malformed {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: invalid term record {ui:?}: {reason}")]
    Invalid {
        line: usize,
        ui: String,
        reason: String,
    },
    #[error("duplicate ui {0:?}")]
    DuplicateUi(String),
    #[error("new-term list for {year} references unknown ui {ui:?}")]
    UnknownUi { year: i32, ui: String },
    #[error("ui {ui:?} listed as new in both {first} and {second}")]
    ListedTwice { ui: String, first: i32, second: i32 },
    #[error("malformed new-term lists: {0}")]
    MalformedLists(String),
    #[error("term {0:?} has no tree numbers")]
    NoCategory(String),
    #[error("no new-term list for cohort year {0}")]
    UnknownCohort(i32),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// One vocabulary concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub ui: String,
    pub label: String,
    pub year_added: i32,
    #[serde(default)]
    pub tree_numbers: Vec<String>,
    #[serde(default)]
    pub annotation: String,
    #[serde(default)]
    pub scope_note: String,
    #[serde(default)]
    pub previously_indexing: Vec<String>,
    #[serde(default)]
    pub deleted: bool,
    #[serde(default)]
    pub deleted_year: Option<i32>,
}

impl TermRecord {
    fn validate(&self) -> Result<(), String> {
        if self.ui.trim().is_empty() {
            return Err("empty ui".into());
        }
        for tn in &self.tree_numbers {
            match tn.chars().next() {
                Some(c) if VALID_CATEGORIES.contains(c) => {}
                _ => return Err(format!("tree number {tn:?} has no valid category letter")),
            }
        }
        if let Some(dy) = self.deleted_year {
            if !self.deleted {
                return Err("deleted_year set on a term that is not deleted".into());
            }
            if dy < self.year_added {
                return Err(format!("deleted_year {dy} precedes year_added {}", self.year_added));
            }
        }
        Ok(())
    }
}

/// The category letters of a term, one per distinct tree-number prefix.
pub fn broad_categories(term: &TermRecord) -> Result<BTreeSet<char>, VocabError> {
    let cats: BTreeSet<char> = term
        .tree_numbers
        .iter()
        .filter_map(|tn| tn.chars().next())
        .collect();
    if cats.is_empty() {
        return Err(VocabError::NoCategory(term.ui.clone()));
    }
    Ok(cats)
}

/// Display name of a top-level category letter.
pub fn category_name(letter: char) -> &'static str {
    match letter {
        'A' => "Anatomy",
        'B' => "Organisms",
        'C' => "Diseases",
        'D' => "Chemicals & Drugs",
        'E' => "Analytical, Diagnostic and Therapeutic Techniques and Equipment",
        'F' => "Psychiatry and Psychology",
        'G' => "Phenomena and Processes",
        'H' => "Disciplines and Occupations",
        'I' => "Anthropology, Education, Sociology and Social Phenomena",
        'J' => "Technology, Industry, Agriculture",
        'K' => "Humanities",
        'L' => "Information Science",
        'M' => "Named Groups",
        'N' => "Health Care",
        'V' => "Publication Characteristics",
        'Z' => "Geographicals",
        _ => "Unknown",
    }
}

/// Categories that carry subject content (everything but V and Z).
pub fn subject_categories(term: &TermRecord) -> BTreeSet<char> {
    broad_categories(term)
        .map(|cats| {
            cats.into_iter()
                .filter(|c| !NON_SUBJECT_CATEGORIES.contains(c))
                .collect()
        })
        .unwrap_or_default()
}

/// Immutable thesaurus snapshot plus the yearly new-term lists.
#[derive(Debug, Clone, Default)]
pub struct VocabularyDB {
    terms: HashMap<String, TermRecord>,
    new_terms_by_year: BTreeMap<i32, Vec<String>>,
    // tree number -> uis carrying it
    tree_index: BTreeMap<String, Vec<String>>,
}

impl VocabularyDB {
    pub fn from_records(
        records: impl IntoIterator<Item = TermRecord>,
        new_terms_by_year: BTreeMap<i32, Vec<String>>,
    ) -> Result<Self, VocabError> {
        let mut terms = HashMap::new();
        for (i, rec) in records.into_iter().enumerate() {
            rec.validate().map_err(|reason| VocabError::Invalid {
                line: i + 1,
                ui: rec.ui.clone(),
                reason,
            })?;
            if terms.contains_key(&rec.ui) {
                return Err(VocabError::DuplicateUi(rec.ui));
            }
            terms.insert(rec.ui.clone(), rec);
        }

        let mut seen: HashMap<&str, i32> = HashMap::new();
        for (&year, uis) in &new_terms_by_year {
            for ui in uis {
                if !terms.contains_key(ui) {
                    return Err(VocabError::UnknownUi { year, ui: ui.clone() });
                }
                if let Some(&first) = seen.get(ui.as_str()) {
                    return Err(VocabError::ListedTwice {
                        ui: ui.clone(),
                        first,
                        second: year,
                    });
                }
                seen.insert(ui, year);
            }
        }

        let mut tree_index: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for rec in terms.values() {
            for tn in &rec.tree_numbers {
                tree_index.entry(tn.clone()).or_default().push(rec.ui.clone());
            }
        }
        for uis in tree_index.values_mut() {
            uis.sort();
        }

        Ok(Self {
            terms,
            new_terms_by_year,
            tree_index,
        })
    }

    pub fn get(&self, ui: &str) -> Option<&TermRecord> {
        self.terms.get(ui)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &TermRecord> {
        self.terms.values()
    }

    pub fn cohort_years(&self) -> impl Iterator<Item = i32> + '_ {
        self.new_terms_by_year.keys().copied()
    }

    pub fn candidates(&self, year: i32) -> Option<&[String]> {
        self.new_terms_by_year.get(&year).map(Vec::as_slice)
    }

    pub fn new_terms_by_year(&self) -> &BTreeMap<i32, Vec<String>> {
        &self.new_terms_by_year
    }
}

/// Parses a JSONL term stream and a JSON map of yearly new-term lists.
pub fn load_vocabulary<R: BufRead>(
    term_stream: R,
    new_term_lists: &str,
) -> Result<VocabularyDB, VocabError> {
    let mut records = Vec::new();
    for (i, line) in term_stream.lines().enumerate() {
        let line = line.map_err(|source| VocabError::Io {
            path: "<term stream>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TermRecord = serde_json::from_str(&line)
            .map_err(|source| VocabError::Malformed { line: i + 1, source })?;
        records.push(rec);
    }
    let lists = parse_new_term_lists(new_term_lists)?;
    VocabularyDB::from_records(records, lists)
}

pub fn parse_new_term_lists(json: &str) -> Result<BTreeMap<i32, Vec<String>>, VocabError> {
    if json.trim().is_empty() {
        return Ok(BTreeMap::new());
    }
    let raw: BTreeMap<String, Vec<String>> =
        serde_json::from_str(json).map_err(|e| VocabError::MalformedLists(e.to_string()))?;
    raw.into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<i32>()
                .map(|y| (y, v))
                .map_err(|_| VocabError::MalformedLists(format!("year key {k:?} is not a year")))
        })
        .collect()
}

pub fn load_vocabulary_files(terms: &Path, lists: &Path) -> Result<VocabularyDB, VocabError> {
    let io_err = |p: &Path| {
        let path = p.display().to_string();
        move |source| VocabError::Io { path, source }
    };
    let file = std::fs::File::open(terms).map_err(io_err(terms))?;
    let lists_json = std::fs::read_to_string(lists).map_err(io_err(lists))?;
    load_vocabulary(std::io::BufReader::new(file), &lists_json)
}

/// Whether a direct child of `term` (one extra dotted segment under one of
/// its tree numbers) existed in the vocabulary by the term's inclusion year.
pub fn has_narrower_at_inclusion(db: &VocabularyDB, term: &TermRecord) -> bool {
    term.tree_numbers.iter().any(|parent| {
        let prefix = format!("{parent}.");
        db.tree_index
            .range(prefix.clone()..)
            .take_while(|(tn, _)| tn.starts_with(&prefix))
            .filter(|(tn, _)| !tn[prefix.len()..].contains('.') && tn.len() > prefix.len())
            .flat_map(|(_, uis)| uis)
            .filter(|ui| **ui != term.ui)
            .filter_map(|ui| db.get(ui))
            .any(|child| child.year_added <= term.year_added)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExclusionReason {
    Deleted,
    PreviouslyIndexed,
    NonSubjectCategory,
    PreexistingConcept,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Deleted => "Deleted",
            Self::PreviouslyIndexed => "PreviouslyIndexed",
            Self::NonSubjectCategory => "NonSubjectCategory",
            Self::PreexistingConcept => "PreexistingConcept",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionResult {
    pub year: i32,
    pub selected: Vec<String>,
    pub excluded: Vec<(String, ExclusionReason)>,
}

impl SelectionResult {
    pub fn candidates(&self) -> usize {
        self.selected.len() + self.excluded.len()
    }
}

/// The rule that does not need the corpus, applied in fixed order.
fn structural_exclusion(term: &TermRecord) -> Option<ExclusionReason> {
    if term.deleted {
        return Some(ExclusionReason::Deleted);
    }
    if !term.previously_indexing.is_empty() {
        return Some(ExclusionReason::PreviouslyIndexed);
    }
    if subject_categories(term).is_empty() {
        return Some(ExclusionReason::NonSubjectCategory);
    }
    None
}

/// True when the first indexed article predates inclusion by more than
/// the allowed window.
pub fn is_preexisting(year_added: i32, first_indexed: Option<i32>) -> bool {
    first_indexed.is_some_and(|first| first < year_added - PREEXISTING_WINDOW_YEARS)
}

/// Applies the four exclusion rules to one cohort year. Corpus lookups run
/// concurrently; any lookup failure fails the whole cohort.
pub fn select_terms(
    db: &VocabularyDB,
    corpus: &dyn CorpusProvider,
    year: i32,
) -> Result<SelectionResult, VocabError> {
    let candidates = db.candidates(year).ok_or(VocabError::UnknownCohort(year))?;

    let dispositions = par::try_map(candidates, |ui| -> Result<_, VocabError> {
        let term = db.get(ui).expect("new-term lists reference loaded terms");
        if let Some(reason) = structural_exclusion(term) {
            return Ok(Some(reason));
        }
        let first = corpus.first_indexed_year(term)?;
        Ok(is_preexisting(term.year_added, first).then_some(ExclusionReason::PreexistingConcept))
    })?;

    let mut result = SelectionResult {
        year,
        selected: Vec::new(),
        excluded: Vec::new(),
    };
    for (ui, disposition) in candidates.iter().zip(dispositions) {
        match disposition {
            None => result.selected.push(ui.clone()),
            Some(reason) => result.excluded.push((ui.clone(), reason)),
        }
    }
    Ok(result)
}
