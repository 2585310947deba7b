//! End-to-end commands: selection, counts, profiles, analysis, training and
//! clinical-lag staging.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::corpus::{self, BackendKind, CorpusError, CorpusProvider, LiveCorpus, PopularitySeries};
use crate::model::{self, LogisticModel, ModelError, SweepRow};
use crate::par;
use crate::profile::{self, LagStage, PathogenClass, ProfileError, TopicProfile, LAG_STAGES};
use crate::report::{num, ArtifactWriter, Provenance};
use crate::stats::{self, ContingencyTable, FiveNumberSummary, StatsError, TestResult};
use crate::trend::{self, PopularitySummary, Quartile, QuartileLabel, TrendClass, TrendError};
use crate::vocab::{self, SelectionResult, TermRecord, VocabError, VocabularyDB};

/// Categories retained for the contingency tests.
pub const TESTED_CATEGORIES: [&str; 5] = ["B", "C", "D", "E", "G"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Trend(#[from] TrendError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("horizon year {horizon} precedes cohort year {cohort}")]
    Horizon { horizon: i32, cohort: i32 },
    #[error("term {ui:?}: {source}")]
    Term {
        ui: String,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Select,
    Counts,
    Profile,
    Analyze,
    Train,
    Lag,
    All,
}

pub struct Pipeline {
    pub config: RunConfig,
    pub db: VocabularyDB,
    pub corpus: Arc<dyn CorpusProvider>,
}

/// A selected term with its popularity series.
#[derive(Debug, Clone)]
pub struct TracedTerm {
    pub term: TermRecord,
    pub series: PopularitySeries,
    pub summary: PopularitySummary,
    pub trend: TrendClass,
    pub quartile: QuartileLabel,
}

impl Pipeline {
    /// Loads the vocabulary and opens the configured corpus backend.
    pub fn load(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let db = vocab::load_vocabulary_files(&config.vocabulary, &config.new_terms)?;
        let corpus: Arc<dyn CorpusProvider> = match config.backend {
            BackendKind::Fixture => {
                let path = config.corpus.as_ref().expect("validated");
                Arc::new(corpus::load_fixture_corpus(path)?)
            }
            BackendKind::Live => Arc::new(LiveCorpus::connect(config.live.clone())),
        };
        Self::new(config, db, corpus)
    }

    pub fn new(config: RunConfig, db: VocabularyDB, corpus: Arc<dyn CorpusProvider>) -> Result<Self> {
        if let Some(cohort) = db.cohort_years().max() {
            if cohort > config.horizon_year {
                return Err(PipelineError::Horizon {
                    horizon: config.horizon_year,
                    cohort,
                });
            }
        }
        Ok(Self { config, db, corpus })
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            seed: self.config.seed,
            config_hash: self.config.hash(),
        }
    }

    pub fn selections(&self) -> Result<Vec<SelectionResult>> {
        let years: Vec<i32> = self.db.cohort_years().collect();
        years
            .into_iter()
            .map(|y| Ok(vocab::select_terms(&self.db, self.corpus.as_ref(), y)?))
            .collect()
    }

    fn selected_terms(&self, selections: &[SelectionResult]) -> Vec<TermRecord> {
        selections
            .iter()
            .flat_map(|s| &s.selected)
            .map(|ui| self.db.get(ui).expect("selected terms exist").clone())
            .collect()
    }

    /// Counts, trend classes and cohort quartiles for every selected term.
    pub fn trace(&self, selections: &[SelectionResult]) -> Result<Vec<TracedTerm>> {
        let terms = self.selected_terms(selections);
        let horizon = self.config.horizon_year;
        let params = self.config.trend;
        let series = par::try_map(&terms, |t| -> Result<_> {
            let s = self.corpus.yearly_major_counts(t, t.year_added, horizon)?;
            let trend = trend::classify_trend(&s, params)?;
            Ok((s, trend))
        })?;

        let mut quartiles = BTreeMap::new();
        for sel in selections.iter().filter(|s| !s.selected.is_empty()) {
            let cohort: Vec<(String, u64)> = terms
                .iter()
                .zip(&series)
                .filter(|(t, _)| sel.selected.contains(&t.ui))
                .map(|(t, (s, _))| (t.ui.clone(), s.total()))
                .collect();
            quartiles.extend(trend::cohort_quartiles(&cohort)?);
        }

        Ok(terms
            .into_iter()
            .zip(series)
            .map(|(term, (series, trend))| TracedTerm {
                summary: trend::summarize(&series),
                quartile: quartiles[&term.ui],
                term,
                series,
                trend,
            })
            .collect())
    }

    pub fn profiles(&self, terms: &[TermRecord]) -> Result<Vec<TopicProfile>> {
        par::try_map(terms, |t| {
            profile::build_profile(
                t,
                &self.db,
                self.corpus.as_ref(),
                self.config.horizon_year,
                &self.config.keywords,
            )
            .map_err(|e| PipelineError::Term {
                ui: t.ui.clone(),
                source: Box::new(e.into()),
            })
        })
    }

    /// Runs a command and promotes its outputs atomically.
    pub fn run(&self, command: Command) -> Result<Vec<PathBuf>> {
        let mut out = ArtifactWriter::new(&self.config.out_dir, self.provenance())?;
        let selections = self.selections()?;
        if matches!(command, Command::Select | Command::All) {
            write_selection(&mut out, &self.db, &selections)?;
        }
        if command == Command::Select {
            return Ok(out.commit()?);
        }
        let traced = self.trace(&selections)?;
        if matches!(command, Command::Counts | Command::All) {
            write_counts(&mut out, &traced)?;
        }
        if command == Command::Counts {
            return Ok(out.commit()?);
        }
        let terms: Vec<TermRecord> = traced.iter().map(|t| t.term.clone()).collect();
        let profiles = self.profiles(&terms)?;
        if matches!(command, Command::Profile | Command::All) {
            write_profiles(&mut out, &profiles)?;
        }
        if matches!(command, Command::Analyze | Command::All) {
            let report = analyze(&traced, &profiles)?;
            write_analysis(&mut out, &traced, &report)?;
        }
        if matches!(command, Command::Train | Command::All) {
            let outcome = train(&self.config, &traced, &profiles)?;
            write_training(&mut out, &self.config, &outcome)?;
        }
        if matches!(command, Command::Lag | Command::All) {
            let table = lag_table(&profiles)?;
            write_lag(&mut out, &table)?;
        }
        Ok(out.commit()?)
    }
}

fn write_selection(out: &mut ArtifactWriter, db: &VocabularyDB, selections: &[SelectionResult]) -> Result<()> {
    let label = |ui: &str| db.get(ui).map(|t| t.label.clone()).unwrap_or_default();
    let mut summary = Vec::new();
    for sel in selections {
        let mut rows: Vec<Vec<String>> = sel
            .selected
            .iter()
            .map(|ui| vec![ui.clone(), label(ui), "selected".into(), String::new()])
            .collect();
        rows.extend(sel.excluded.iter().map(|(ui, reason)| {
            vec![ui.clone(), label(ui), "excluded".into(), reason.as_str().into()]
        }));
        rows.sort();
        out.csv(
            &format!("selection_{}.csv", sel.year),
            &["ui", "label", "disposition", "reason"],
            &rows,
        )?;
        summary.push(vec![
            sel.year.to_string(),
            sel.candidates().to_string(),
            sel.selected.len().to_string(),
        ]);
    }
    out.csv("selection_summary.csv", &["Year", "# of New MeSH", "# of selected"], &summary)?;
    Ok(())
}

fn write_counts(out: &mut ArtifactWriter, traced: &[TracedTerm]) -> Result<()> {
    let rows: Vec<Vec<String>> = traced
        .iter()
        .flat_map(|t| {
            t.series
                .years()
                .map(|(y, c)| vec![t.term.ui.clone(), y.to_string(), c.to_string()])
        })
        .collect();
    out.csv("counts.csv", &["ui", "year", "count"], &rows)?;
    Ok(())
}

fn categories_str(cats: &BTreeSet<char>) -> String {
    cats.iter().map(char::to_string).collect::<Vec<_>>().join(";")
}

fn write_profiles(out: &mut ArtifactWriter, profiles: &[TopicProfile]) -> Result<()> {
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|p| {
            let lag = p.clinical_lag();
            // out-of-range lags are left unstaged here; `lag` rejects them
            let stage = lag.and_then(|l| profile::lag_stage(l).ok());
            vec![
                p.ui.clone(),
                categories_str(&p.categories),
                p.has_narrower.to_string(),
                p.clinical_first_year.map(|y| y.to_string()).unwrap_or_default(),
                p.clinical_significance.to_string(),
                p.pathogen.map(|c| c.to_string()).unwrap_or_default(),
                lag.map(|l| l.to_string()).unwrap_or_default(),
                stage.map(|s| s.stage.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    out.csv(
        "profiles.csv",
        &[
            "ui",
            "categories",
            "has_narrower",
            "clinical_first_year",
            "clinical_significance",
            "pathogen",
            "lag",
            "lag_stage",
        ],
        &rows,
    )?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedTest {
    pub test: String,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

impl NamedTest {
    fn new(test: &str, r: TestResult) -> Self {
        Self {
            test: test.into(),
            statistic: r.statistic,
            df: r.df,
            p_value: r.p_value,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub family: String,
    pub group: String,
    pub n: usize,
    pub summary: FiveNumberSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualTable {
    pub name: String,
    pub table: ContingencyTable,
    pub residuals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub popularity: BTreeMap<String, FiveNumberSummary>,
    pub trend_distribution: BTreeMap<String, usize>,
    pub category_by_quartile: ContingencyTable,
    pub category_by_trend: ContingencyTable,
    pub residuals: Vec<ResidualTable>,
    pub groups: Vec<GroupSummary>,
    pub tests: Vec<NamedTest>,
    /// Tests that could not run on this data, with the reason.
    pub skipped: BTreeMap<String, String>,
}

fn contingency(cells: impl Iterator<Item = (String, String)>, cols: &[&str]) -> ContingencyTable {
    let mut grid: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for (r, c) in cells {
        let j = cols.iter().position(|x| *x == c).expect("known column");
        grid.entry(r).or_insert_with(|| vec![0; cols.len()])[j] += 1;
    }
    let (rows, counts) = grid.into_iter().unzip();
    ContingencyTable::new(rows, cols.iter().map(|c| c.to_string()).collect(), counts)
        .expect("shape by construction")
}

/// Descriptive statistics, contingency tests and group comparisons over
/// the traced terms. Category-level outputs count one occurrence per
/// (term, category).
pub fn analyze(traced: &[TracedTerm], profiles: &[TopicProfile]) -> Result<AnalysisReport> {
    let mut tests = Vec::new();
    let mut skipped = BTreeMap::new();
    let mut residuals = Vec::new();

    let totals: Vec<f64> = traced.iter().map(|t| t.summary.total as f64).collect();
    let per_year: Vec<f64> = traced.iter().map(|t| t.summary.per_year).collect();
    let mut popularity = BTreeMap::new();
    if !traced.is_empty() {
        popularity.insert("articles_indexed".to_string(), stats::describe(&totals)?);
        popularity.insert("articles_indexed_per_year".to_string(), stats::describe(&per_year)?);
    }

    let trend_labels: Vec<TrendClass> = traced.iter().map(|t| t.trend).collect();
    let trend_distribution = trend::trend_distribution(&trend_labels)
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();

    let occurrences: Vec<(String, &TracedTerm)> = traced
        .iter()
        .zip(profiles)
        .flat_map(|(t, p)| p.categories.iter().map(move |c| (c.to_string(), t)))
        .collect();

    let quartile_cols: Vec<&str> = Quartile::ALL.iter().map(|q| q.as_str()).collect();
    let trend_cols: Vec<&str> = TrendClass::ALL.iter().map(|t| t.as_str()).collect();
    let category_by_quartile = contingency(
        occurrences
            .iter()
            .map(|(c, t)| (c.clone(), t.quartile.quartile.as_str().to_string())),
        &quartile_cols,
    );
    let category_by_trend = contingency(
        occurrences.iter().map(|(c, t)| (c.clone(), t.trend.as_str().to_string())),
        &trend_cols,
    );

    for (name, table) in [
        ("category_by_quartile", &category_by_quartile),
        ("category_by_trend", &category_by_trend),
    ] {
        let tested = table.select_rows(&TESTED_CATEGORIES).drop_empty();
        let test_name = format!("{name}_chi_square");
        match (stats::chi_square_independence(&tested), stats::pearson_residuals(&tested)) {
            (Ok(r), Ok(res)) => {
                tests.push(NamedTest::new(&test_name, r));
                residuals.push(ResidualTable {
                    name: name.into(),
                    table: tested,
                    residuals: res,
                });
            }
            (Err(e), _) | (_, Err(e)) => {
                skipped.insert(test_name, e.to_string());
            }
        }
    }

    let mut groups = Vec::new();
    let mut compare = |family: &str, members: Vec<(String, Vec<f64>)>| {
        let members: Vec<(String, Vec<f64>)> = members.into_iter().filter(|(_, v)| !v.is_empty()).collect();
        for (g, v) in &members {
            groups.push(GroupSummary {
                family: family.into(),
                group: g.clone(),
                n: v.len(),
                summary: stats::describe(v).expect("nonempty"),
            });
        }
        let samples: Vec<Vec<f64>> = members.into_iter().map(|(_, v)| v).collect();
        let test_name = format!("{family}_kruskal_wallis");
        match stats::kruskal_wallis(&samples) {
            Ok(r) => tests.push(NamedTest::new(&test_name, r)),
            Err(e) => {
                skipped.insert(test_name, e.to_string());
            }
        }
    };

    let split = |pred: &dyn Fn(&TopicProfile) -> bool| {
        let mut yes = Vec::new();
        let mut no = Vec::new();
        for (t, p) in traced.iter().zip(profiles) {
            if pred(p) { &mut yes } else { &mut no }.push(t.summary.total as f64);
        }
        (yes, no)
    };
    let (yes, no) = split(&|p| p.clinical_significance);
    compare("clinical", vec![("with_clinical_trial".into(), yes), ("without_clinical_trial".into(), no)]);
    let (yes, no) = split(&|p| p.has_narrower);
    compare("narrower", vec![("with_narrower".into(), yes), ("without_narrower".into(), no)]);

    let pathogen_groups = PathogenClass::ALL
        .iter()
        .map(|&c| {
            let v = traced
                .iter()
                .zip(profiles)
                .filter(|(_, p)| p.pathogen == Some(c))
                .map(|(t, _)| t.summary.total as f64)
                .collect();
            (c.to_string(), v)
        })
        .collect();
    compare("pathogen", pathogen_groups);

    let category_groups = TESTED_CATEGORIES
        .iter()
        .map(|&c| {
            let v = occurrences
                .iter()
                .filter(|(cat, _)| cat == c)
                .map(|(_, t)| t.summary.total as f64)
                .collect();
            (c.to_string(), v)
        })
        .collect();
    compare("category", category_groups);

    Ok(AnalysisReport {
        popularity,
        trend_distribution,
        category_by_quartile,
        category_by_trend,
        residuals,
        groups,
        tests,
        skipped,
    })
}

fn table_rows(table: &ContingencyTable) -> Vec<Vec<String>> {
    table
        .row_labels
        .iter()
        .zip(&table.counts)
        .map(|(l, row)| std::iter::once(l.clone()).chain(row.iter().map(u64::to_string)).collect())
        .collect()
}

fn header_with<'a>(first: &'a str, rest: &'a [String]) -> Vec<&'a str> {
    std::iter::once(first).chain(rest.iter().map(String::as_str)).collect()
}

fn write_analysis(out: &mut ArtifactWriter, traced: &[TracedTerm], report: &AnalysisReport) -> Result<()> {
    let rows: Vec<Vec<String>> = traced
        .iter()
        .map(|t| {
            vec![
                t.term.ui.clone(),
                t.term.label.clone(),
                t.term.year_added.to_string(),
                t.summary.total.to_string(),
                t.summary.per_year.to_string(),
                t.trend.to_string(),
                t.quartile.quartile.as_str().into(),
                t.quartile.emerging.to_string(),
            ]
        })
        .collect();
    out.csv(
        "trend.csv",
        &["ui", "label", "year_added", "total", "per_year", "trend_class", "quartile", "emerging"],
        &rows,
    )?;

    let n = traced.len().max(1) as f64;
    let rows: Vec<Vec<String>> = report
        .trend_distribution
        .iter()
        .map(|(k, &v)| vec![k.clone(), v.to_string(), (100.0 * v as f64 / n).to_string()])
        .collect();
    out.csv("trend_distribution.csv", &["trend_class", "count", "percentage"], &rows)?;

    let summary_row = |name: &str, s: &FiveNumberSummary| {
        vec![
            name.to_string(),
            s.mean.to_string(),
            s.min.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.max.to_string(),
        ]
    };
    let rows: Vec<Vec<String>> = report.popularity.iter().map(|(k, s)| summary_row(k, s)).collect();
    out.csv(
        "popularity_descriptive.csv",
        &["measure", "mean", "min", "q1", "median", "q3", "max"],
        &rows,
    )?;

    for (name, table) in [
        ("category_by_quartile", &report.category_by_quartile),
        ("category_by_trend", &report.category_by_trend),
    ] {
        out.csv(&format!("{name}.csv"), &header_with("category", &table.col_labels), &table_rows(table))?;
    }
    for r in &report.residuals {
        let rows: Vec<Vec<String>> = r
            .table
            .row_labels
            .iter()
            .zip(&r.residuals)
            .map(|(l, row)| std::iter::once(l.clone()).chain(row.iter().map(f64::to_string)).collect())
            .collect();
        out.csv(
            &format!("{}_residuals.csv", r.name),
            &header_with("category", &r.table.col_labels),
            &rows,
        )?;
    }

    let rows: Vec<Vec<String>> = report
        .groups
        .iter()
        .map(|g| {
            let mut row = vec![g.family.clone(), g.group.clone(), g.n.to_string()];
            row.extend(summary_row("", &g.summary).into_iter().skip(1));
            row
        })
        .collect();
    out.csv(
        "group_summaries.csv",
        &["family", "group", "n", "mean", "min", "q1", "median", "q3", "max"],
        &rows,
    )?;
    out.json("tests.json", &report.tests)?;
    out.json("analysis_report.json", report)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingOutcome {
    pub sweep: Vec<SweepRow>,
    pub full_fit: LogisticModel,
    pub rows: usize,
    pub positives: usize,
}

/// Forecasting sweep plus the full-data fit, labels from cohort Q4.
pub fn train(config: &RunConfig, traced: &[TracedTerm], profiles: &[TopicProfile]) -> Result<TrainingOutcome> {
    let labels: BTreeMap<String, bool> = traced
        .iter()
        .map(|t| (t.term.ui.clone(), t.quartile.emerging))
        .collect();
    let sweep = model::sweep_forecast(
        profiles,
        &labels,
        1..=config.forecast_years,
        &config.features,
        config.folds,
        config.seed,
    )?;
    let full = model::build_dataset(profiles, &labels, None, &config.features)?;
    let full_fit = model::fit_full(profiles, &labels, &config.features)?;
    Ok(TrainingOutcome {
        sweep,
        full_fit,
        rows: full.len(),
        positives: full.positives(),
    })
}

pub fn significance_code(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Serialize)]
struct ModelArtifact<'a> {
    model: &'a LogisticModel,
    rows: usize,
    positives: usize,
    config: &'a RunConfig,
}

fn write_training(out: &mut ArtifactWriter, config: &RunConfig, outcome: &TrainingOutcome) -> Result<()> {
    let rows: Vec<Vec<String>> = outcome
        .sweep
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                num(r.metrics.accuracy),
                num(r.metrics.recall),
                num(r.metrics.precision),
                num(r.metrics.f_measure),
                num(r.metrics.csi),
            ]
        })
        .collect();
    out.csv("sweep.csv", &["M", "accuracy", "recall", "precision", "f_measure", "csi"], &rows)?;
    let rows: Vec<Vec<String>> = outcome
        .sweep
        .iter()
        .map(|r| vec![r.m.to_string(), num(r.metrics.csi)])
        .collect();
    out.csv("csi_curve.csv", &["M", "csi"], &rows)?;

    let m = &outcome.full_fit;
    let rows: Vec<Vec<String>> = (0..m.coefficients.len())
        .map(|j| {
            vec![
                m.names[j].clone(),
                m.coefficients[j].to_string(),
                m.std_errors[j].to_string(),
                m.z_values[j].to_string(),
                m.p_values[j].to_string(),
                significance_code(m.p_values[j]).into(),
            ]
        })
        .collect();
    out.csv("full_fit.csv", &["variable", "coeff", "std_error", "z", "p", "signif"], &rows)?;
    out.json(
        "model.json",
        &ModelArtifact {
            model: m,
            rows: outcome.rows,
            positives: outcome.positives,
            config,
        },
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagStageRow {
    pub stage: u8,
    pub range: String,
    pub count: usize,
    pub percentage: f64,
    pub cumulative_percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagTable {
    pub stages: Vec<LagStageRow>,
    pub histogram: BTreeMap<i32, usize>,
}

/// Clinical-lag staging over every term with clinical significance.
pub fn lag_table(profiles: &[TopicProfile]) -> Result<LagTable> {
    let staged: Vec<LagStage> = profiles
        .iter()
        .filter_map(|p| p.clinical_lag().map(|l| (p, l)))
        .map(|(p, l)| {
            profile::lag_stage(l).map_err(|e| PipelineError::Term {
                ui: p.ui.clone(),
                source: Box::new(e.into()),
            })
        })
        .collect::<Result<_>>()?;
    let mut histogram = BTreeMap::new();
    for s in &staged {
        *histogram.entry(s.lag_years).or_default() += 1;
    }
    let total = staged.len();
    let mut cumulative = 0;
    let stages = (1..=LAG_STAGES.len() as u8)
        .map(|stage| {
            let count = staged.iter().filter(|s| s.stage == stage).count();
            cumulative += count;
            let pct = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
            LagStageRow {
                stage,
                range: LagStage { stage, lag_years: 0 }.range_label(),
                count,
                percentage: pct(count),
                cumulative_percentage: pct(cumulative),
            }
        })
        .collect();
    Ok(LagTable { stages, histogram })
}

fn write_lag(out: &mut ArtifactWriter, table: &LagTable) -> Result<()> {
    let rows: Vec<Vec<String>> = table
        .stages
        .iter()
        .map(|s| {
            vec![
                s.stage.to_string(),
                s.range.clone(),
                s.count.to_string(),
                s.percentage.to_string(),
                s.cumulative_percentage.to_string(),
            ]
        })
        .collect();
    out.csv(
        "lag_stages.csv",
        &["stage", "time_lag_years", "count", "percentage", "cumulative_percentage"],
        &rows,
    )?;
    let rows: Vec<Vec<String>> = table
        .histogram
        .iter()
        .map(|(l, c)| vec![l.to_string(), c.to_string()])
        .collect();
    out.csv("lag_histogram.csv", &["lag", "count"], &rows)?;
    Ok(())
}
