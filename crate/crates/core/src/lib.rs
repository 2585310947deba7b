//! Emergence analysis for newly added controlled-vocabulary terms.
//!
//! The crate follows a term from the year it enters the thesaurus through
//! its indexing history: [`vocab`] selects genuinely new concepts,
//! [`corpus`] counts the articles that use them, [`trend`] labels their
//! popularity trajectory, [`profile`] collects the topic characteristics,
//! [`stats`] runs the descriptive and nonparametric tests and [`model`]
//! fits and evaluates logistic-regression predictors of future emergence.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise.

// index loops mirror the matrix algebra they implement
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod corpus;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod profile;
pub mod report;
pub mod stats;
pub mod synth;
pub mod trend;
pub mod vocab;

pub use corpus::{CorpusError, CorpusProvider, PopularitySeries};
pub use model::{LogisticModel, Metrics};
pub use profile::{PathogenClass, TopicProfile};
pub use trend::{QuartileLabel, TrendClass, TrendParams};
pub use vocab::{TermRecord, VocabularyDB};
