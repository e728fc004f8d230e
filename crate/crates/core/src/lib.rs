//! Analytics for tracing dangerous speech through retweet networks.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`corpus`] ingests tweets, normalizes text, assigns events and picks
//!   lexicon candidates.
//! * [`annotate`] resolves dual annotations and measures agreement.
//! * [`graph`] builds the retweet graph, its transition matrix, centralities
//!   and visualization exports.
//! * [`diffusion`] runs the DeGroot belief update and the Jenks based danger
//!   categories.
//! * [`polarity`] scores audience polarization.
//! * [`stats`] holds the regression / ANOVA / Tukey HSD battery.

pub mod annotate;
pub mod corpus;
pub mod diffusion;
mod error;
pub mod graph;
pub mod polarity;
pub mod stats;

pub use annotate::{AnnotationPair, DangerCounts, KappaResult};
pub use corpus::{EmbeddingTable, EventLabel, LexiconSet, Tweet, UserProfile};
pub use diffusion::{BeliefVector, DabResult, DabScores, DangerCategory};
pub use error::{Error, Result};
pub use graph::{CentralityReport, RetweetGraph, SparseMatrix, TransitionMatrix};
pub use polarity::{FollowerPolarity, PartyFollowing, StanceTable};
