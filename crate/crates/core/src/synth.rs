//! Synthetic inputs with a planted effect: terms that reach clinical
//! trials are more likely to become popular. Used by the `generate`
//! command, the acceptance suite and the benches.

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{Article, Heading, CLINICAL_TRIAL};
use crate::vocab::TermRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub seed: u64,
    pub cohorts: Vec<i32>,
    pub terms_per_cohort: usize,
    pub horizon_year: i32,
    pub clinical_rate: f64,
    /// Chance of a high-popularity trajectory given clinical relevance.
    pub high_if_clinical: f64,
    pub high_if_not: f64,
    pub narrower_rate: f64,
    /// Years from inclusion to the single clinical-trial article. `None`
    /// draws a lag between -2 and 9 per term.
    pub trial_lag: Option<i32>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 20,
            cohorts: vec![2001, 2002, 2003],
            terms_per_cohort: 100,
            horizon_year: 2019,
            clinical_rate: 0.5,
            high_if_clinical: 0.6,
            high_if_not: 0.15,
            narrower_rate: 0.2,
            trial_lag: Some(5),
        }
    }
}

/// Generated inputs, before serialization.
#[derive(Debug, Clone, Default)]
pub struct SynthData {
    pub terms: Vec<TermRecord>,
    pub new_terms: BTreeMap<i32, Vec<String>>,
    pub articles: Vec<Article>,
    /// Terms that should be excluded, with the expected reason.
    pub planted_exclusions: BTreeMap<String, &'static str>,
}

const CATEGORY_WEIGHTS: [(char, u32); 5] = [('B', 20), ('C', 25), ('D', 25), ('E', 15), ('G', 15)];

const HOST_NOTES: [&str; 4] = [
    "A bacterium causing infections in humans.",
    "A virus of cattle and swine.",
    "A parasite found in humans and mice.",
    "A free-living soil organism.",
];

fn pick_category(rng: &mut ChaCha8Rng) -> char {
    let total: u32 = CATEGORY_WEIGHTS.iter().map(|w| w.1).sum();
    let mut r = rng.gen_range(0..total);
    for (c, w) in CATEGORY_WEIGHTS {
        if r < w {
            return c;
        }
        r -= w;
    }
    unreachable!()
}

struct Builder {
    data: SynthData,
    mentions: Vec<(i32, String, bool)>,
}

impl Builder {
    fn major(&mut self, ui: &str, year: i32, n: u64) {
        for _ in 0..n {
            self.mentions.push((year, ui.to_string(), false));
        }
    }

    fn trial(&mut self, ui: &str, year: i32) {
        self.mentions.push((year, ui.to_string(), true));
    }

    fn candidate(&mut self, term: TermRecord) {
        self.data
            .new_terms
            .entry(term.year_added)
            .or_default()
            .push(term.ui.clone());
        self.data.terms.push(term);
    }
}

fn record(ui: String, year: i32, trees: Vec<String>) -> TermRecord {
    TermRecord {
        label: format!("Synthetic {ui}"),
        ui,
        year_added: year,
        tree_numbers: trees,
        annotation: String::new(),
        scope_note: String::new(),
        previously_indexing: Vec::new(),
        deleted: false,
        deleted_year: None,
    }
}

pub fn generate(spec: &SynthSpec) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder {
        data: SynthData::default(),
        mentions: Vec::new(),
    };

    for (ci, &year) in spec.cohorts.iter().enumerate() {
        for i in 0..spec.terms_per_cohort {
            let ui = format!("S{year}{i:03}");
            let cat = pick_category(&mut rng);
            let mut trees = vec![format!("{cat}{ci:02}.{i:03}")];
            if rng.gen_bool(0.15) && cat != 'E' {
                trees.push(format!("E{:02}.{i:03}", 50 + ci));
            }
            let mut term = record(ui.clone(), year, trees.clone());
            if cat == 'B' && rng.gen_bool(0.5) {
                term.annotation = "infection: coord with specific infection term".into();
                term.scope_note = HOST_NOTES[rng.gen_range(0..HOST_NOTES.len())].into();
            }
            if rng.gen_bool(spec.narrower_rate) {
                let child = record(format!("{ui}N"), year - 1, vec![format!("{}.001", trees[0])]);
                b.data.terms.push(child);
            }

            let clinical = rng.gen_bool(spec.clinical_rate);
            let high = rng.gen_bool(if clinical {
                spec.high_if_clinical
            } else {
                spec.high_if_not
            });
            let span = (spec.horizon_year - year + 1) as usize;
            let mut counts: Vec<u64> = (0..span)
                .map(|_| if high { rng.gen_range(25..=60) } else { rng.gen_range(0..=8) })
                .collect();
            if high && span > 4 && rng.gen_bool(0.25) {
                let at = rng.gen_range(1..span - 2);
                counts[at] = rng.gen_range(5..=20);
                counts[at + 1] = rng.gen_range(5..=20);
            } else if !high && rng.gen_bool(0.1) {
                counts[rng.gen_range(0..span)] = 30;
            }
            for (k, &n) in counts.iter().enumerate() {
                b.major(&ui, year + k as i32, n);
            }
            if clinical {
                let lag = spec.trial_lag.unwrap_or_else(|| rng.gen_range(-2..=9));
                let ct = (year + lag).min(spec.horizon_year);
                b.trial(&ui, ct);
            }
            b.candidate(term);
        }
    }

    // Candidates that exercise each exclusion rule and its boundary.
    let year = spec.cohorts[0];
    let mut deleted = record(format!("X{year}DEL"), year, vec!["D90.001".into()]);
    deleted.deleted = true;
    deleted.deleted_year = Some(year + 3);
    let mut previous = record(format!("X{year}PRV"), year, vec!["D90.002".into()]);
    previous.previously_indexing = vec!["Older Heading".into()];
    let support = record(format!("X{year}SUP"), year, vec!["Z01.999".into()]);
    let preexisting = record(format!("X{year}PRE"), year, vec!["D90.003".into()]);
    let boundary = record(format!("X{year}BND"), year, vec!["D90.004".into()]);
    let silent = record(format!("X{year}ZER"), year, vec!["D90.005".into()]);
    b.major(&preexisting.ui, year - 6, 1);
    b.major(&boundary.ui, year - 5, 1);
    for (t, reason) in [
        (&deleted, "Deleted"),
        (&previous, "PreviouslyIndexed"),
        (&support, "NonSubjectCategory"),
        (&preexisting, "PreexistingConcept"),
    ] {
        b.data.planted_exclusions.insert(t.ui.clone(), reason);
    }
    for t in [deleted, previous, support, preexisting, boundary, silent] {
        b.candidate(t);
    }

    b.mentions.sort();
    b.data.articles = b
        .mentions
        .into_iter()
        .enumerate()
        .map(|(i, (year, ui, trial))| Article {
            pmid: (100_000 + i).to_string(),
            year,
            pub_types: if trial {
                vec![CLINICAL_TRIAL.to_string()]
            } else {
                vec!["Journal Article".to_string()]
            },
            headings: vec![Heading { ui, major: !trial }],
        })
        .collect();
    b.data.terms.sort_by(|a, b| a.ui.cmp(&b.ui));
    b.data
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> std::io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Writes the inputs plus a `config.json` pointing at them. Returns the
/// config path.
pub fn write_fixture(dir: &Path, spec: &SynthSpec) -> std::io::Result<PathBuf> {
    let data = generate(spec);
    std::fs::create_dir_all(dir)?;
    write_jsonl(&dir.join("vocabulary.jsonl"), &data.terms)?;
    write_jsonl(&dir.join("corpus.jsonl"), &data.articles)?;
    let lists: BTreeMap<String, &Vec<String>> =
        data.new_terms.iter().map(|(y, v)| (y.to_string(), v)).collect();
    std::fs::write(dir.join("new_terms.json"), serde_json::to_vec_pretty(&lists)?)?;
    let config = RunConfig {
        horizon_year: spec.horizon_year,
        seed: spec.seed,
        ..RunConfig::default()
    };
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&config)?)?;
    Ok(path)
}
