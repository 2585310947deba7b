//! Per-term article counts under "major topic, no explosion" semantics.
//!
//! Two backends answer the same queries: [`FixtureCorpus`] scans a local
//! JSONL corpus, [`live::LiveCorpus`] issues count-only esearch requests.

pub mod live;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::TermRecord;

pub use live::{LiveConfig, LiveCorpus};

/// Publication type that marks clinical significance.
pub const CLINICAL_TRIAL: &str = "Clinical Trial";

/// Default last year of every popularity series.
pub const DEFAULT_HORIZON_YEAR: i32 = 2019;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed article: {source}")]
    Malformed {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: article year {year} is not a 4-digit year")]
    BadYear { line: usize, year: i32 },
    #[error("duplicate pmid {0:?}")]
    DuplicatePmid(String),
    #[error("invalid year range {start}..={end}")]
    InvalidRange { start: i32, end: i32 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend returned status {status} after {attempts} attempt(s)")]
    Status { status: u16, attempts: u32 },
    #[error("unparsable esearch response: {0}")]
    BadResponse(String),
    #[error("request budget of {0} exhausted")]
    BudgetExceeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Fixture,
    Live,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heading {
    pub ui: String,
    pub major: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub pmid: String,
    pub year: i32,
    #[serde(default)]
    pub pub_types: Vec<String>,
    #[serde(default)]
    pub headings: Vec<Heading>,
}

/// Yearly major-topic article counts for one term over an inclusive span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PopularitySeries {
    pub ui: String,
    pub start_year: i32,
    pub end_year: i32,
    pub counts: Vec<u64>,
}

impl PopularitySeries {
    pub fn new(
        ui: impl Into<String>,
        start_year: i32,
        end_year: i32,
        counts: Vec<u64>,
    ) -> Result<Self, CorpusError> {
        if start_year > end_year || counts.len() != (end_year - start_year + 1) as usize {
            return Err(CorpusError::InvalidRange {
                start: start_year,
                end: end_year,
            });
        }
        Ok(Self {
            ui: ui.into(),
            start_year,
            end_year,
            counts,
        })
    }

    /// Series with the given counts starting at `start_year`.
    pub fn from_counts(ui: impl Into<String>, start_year: i32, counts: Vec<u64>) -> Self {
        let end_year = start_year + counts.len() as i32 - 1;
        Self {
            ui: ui.into(),
            start_year,
            end_year,
            counts,
        }
    }

    pub fn years(&self) -> impl Iterator<Item = (i32, u64)> + '_ {
        (self.start_year..).zip(self.counts.iter().copied())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Source of article counts. Identical queries against an unchanged
/// backend must return identical answers.
pub trait CorpusProvider: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn yearly_major_counts(
        &self,
        term: &TermRecord,
        start_year: i32,
        end_year: i32,
    ) -> Result<PopularitySeries, CorpusError>;

    /// Earliest publication year of an article with `term` as major topic.
    fn first_indexed_year(&self, term: &TermRecord) -> Result<Option<i32>, CorpusError>;

    /// Earliest year of a clinical-trial article indexed with `term`,
    /// regardless of the major-topic flag.
    fn first_clinical_trial_year(&self, term: &TermRecord) -> Result<Option<i32>, CorpusError>;
}

#[derive(Debug, Default, Clone)]
struct TermIndex {
    major_by_year: BTreeMap<i32, u64>,
    first_clinical_trial: Option<i32>,
}

/// In-memory corpus built from a JSONL fixture.
#[derive(Debug, Default, Clone)]
pub struct FixtureCorpus {
    index: HashMap<String, TermIndex>,
    articles: usize,
}

impl FixtureCorpus {
    pub fn from_articles(articles: impl IntoIterator<Item = Article>) -> Result<Self, CorpusError> {
        let mut corpus = Self::default();
        let mut pmids = HashSet::new();
        for (i, article) in articles.into_iter().enumerate() {
            corpus.insert(i + 1, article, &mut pmids)?;
        }
        Ok(corpus)
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut corpus = Self::default();
        let mut pmids = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: "<corpus stream>".into(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let article: Article = serde_json::from_str(&line)
                .map_err(|source| CorpusError::Malformed { line: i + 1, source })?;
            corpus.insert(i + 1, article, &mut pmids)?;
        }
        Ok(corpus)
    }

    pub fn article_count(&self) -> usize {
        self.articles
    }

    fn insert(
        &mut self,
        line: usize,
        article: Article,
        pmids: &mut HashSet<String>,
    ) -> Result<(), CorpusError> {
        if !(1000..=9999).contains(&article.year) {
            return Err(CorpusError::BadYear {
                line,
                year: article.year,
            });
        }
        if !pmids.insert(article.pmid.clone()) {
            return Err(CorpusError::DuplicatePmid(article.pmid));
        }
        self.articles += 1;
        let is_trial = article.pub_types.iter().any(|t| t == CLINICAL_TRIAL);

        // a heading listed twice on one article still counts the article once
        let mut major_seen = HashSet::new();
        let mut any_seen = HashSet::new();
        for h in &article.headings {
            let entry = self.index.entry(h.ui.clone()).or_default();
            if h.major && major_seen.insert(h.ui.as_str()) {
                *entry.major_by_year.entry(article.year).or_default() += 1;
            }
            if is_trial && any_seen.insert(h.ui.as_str()) {
                entry.first_clinical_trial = Some(
                    entry
                        .first_clinical_trial
                        .map_or(article.year, |y| y.min(article.year)),
                );
            }
        }
        Ok(())
    }
}

pub fn load_fixture_corpus(path: &Path) -> Result<FixtureCorpus, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    FixtureCorpus::from_reader(std::io::BufReader::new(file))
}

impl CorpusProvider for FixtureCorpus {
    fn kind(&self) -> BackendKind {
        BackendKind::Fixture
    }

    fn yearly_major_counts(
        &self,
        term: &TermRecord,
        start_year: i32,
        end_year: i32,
    ) -> Result<PopularitySeries, CorpusError> {
        if start_year > end_year {
            return Err(CorpusError::InvalidRange {
                start: start_year,
                end: end_year,
            });
        }
        let mut counts = vec![0; (end_year - start_year + 1) as usize];
        if let Some(idx) = self.index.get(&term.ui) {
            for (&year, &n) in idx.major_by_year.range(start_year..=end_year) {
                counts[(year - start_year) as usize] = n;
            }
        }
        PopularitySeries::new(term.ui.clone(), start_year, end_year, counts)
    }

    fn first_indexed_year(&self, term: &TermRecord) -> Result<Option<i32>, CorpusError> {
        Ok(self
            .index
            .get(&term.ui)
            .and_then(|idx| idx.major_by_year.keys().next().copied()))
    }

    fn first_clinical_trial_year(&self, term: &TermRecord) -> Result<Option<i32>, CorpusError> {
        Ok(self.index.get(&term.ui).and_then(|idx| idx.first_clinical_trial))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::tests::term;

    fn art(pmid: &str, year: i32, types: &[&str], headings: &[(&str, bool)]) -> Article {
        Article {
            pmid: pmid.into(),
            year,
            pub_types: types.iter().map(|s| s.to_string()).collect(),
            headings: headings
                .iter()
                .map(|(ui, major)| Heading {
                    ui: ui.to_string(),
                    major: *major,
                })
                .collect(),
        }
    }

    #[test]
    fn empty_corpus_counts_zero() {
        let c = FixtureCorpus::from_reader(std::io::Cursor::new("")).unwrap();
        let s = c.yearly_major_counts(&term("X", 2001, &[]), 2001, 2019).unwrap();
        assert_eq!(s.counts.len(), 19);
        assert_eq!(s.total(), 0);
        assert_eq!(c.first_indexed_year(&term("X", 2001, &[])).unwrap(), None);
    }

    #[test]
    fn counts_only_major_exact_heading() {
        let c = FixtureCorpus::from_articles(vec![
            art("1", 2003, &[], &[("X", true)]),
            art("2", 2005, &[], &[("X", true), ("Y", false)]),
            art("3", 2005, &[], &[("X", false)]),
            art("4", 2005, &[], &[("XCHILD", true)]),
        ])
        .unwrap();
        let x = term("X", 2001, &[]);
        let s = c.yearly_major_counts(&x, 2001, 2019).unwrap();
        assert_eq!(s.total(), 2);
        assert_eq!(s.counts[2], 1);
        assert_eq!(s.counts[4], 1);
        assert_eq!(c.first_indexed_year(&x).unwrap(), Some(2003));
        let y = term("Y", 2001, &[]);
        assert_eq!(c.yearly_major_counts(&y, 2001, 2019).unwrap().total(), 0);
        assert_eq!(c.first_indexed_year(&y).unwrap(), None);
    }

    #[test]
    fn clinical_trial_ignores_major_flag() {
        let c = FixtureCorpus::from_articles(vec![
            art("1", 2008, &[CLINICAL_TRIAL], &[("X", true)]),
            art("2", 2006, &["Journal Article", CLINICAL_TRIAL], &[("X", false)]),
            art("3", 2001, &["clinical trial"], &[("X", true)]),
            art("4", 2004, &[CLINICAL_TRIAL], &[("Y", false)]),
        ])
        .unwrap();
        assert_eq!(c.first_clinical_trial_year(&term("X", 2001, &[])).unwrap(), Some(2006));
        assert_eq!(c.first_clinical_trial_year(&term("Y", 2001, &[])).unwrap(), Some(2004));
        assert_eq!(c.first_clinical_trial_year(&term("Z", 2001, &[])).unwrap(), None);
    }

    #[test]
    fn load_errors() {
        let dup = "{\"pmid\":\"1\",\"year\":2001}\n{\"pmid\":\"1\",\"year\":2002}\n";
        assert!(matches!(
            FixtureCorpus::from_reader(std::io::Cursor::new(dup)),
            Err(CorpusError::DuplicatePmid(_))
        ));
        assert!(matches!(
            FixtureCorpus::from_reader(std::io::Cursor::new("{\"pmid\":1}")),
            Err(CorpusError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            FixtureCorpus::from_reader(std::io::Cursor::new("{\"pmid\":\"1\",\"year\":99}")),
            Err(CorpusError::BadYear { .. })
        ));
    }

    #[test]
    fn inverted_range_rejected() {
        let c = FixtureCorpus::default();
        assert!(c.yearly_major_counts(&term("X", 2001, &[]), 2010, 2001).is_err());
    }
}
