//! Cross-cultural relation mining from multilingual wiki articles.
//!
//! The crate covers the corpus data model and snapshot format, the
//! similarity/understanding/affinity measures, a small statistics kernel,
//! the generative attention simulator, cross-source validation and the
//! TSV/JSON/SVG emitters.

pub mod corpus;
pub mod measures;
pub mod report;
pub mod sim;
pub mod stats;
pub mod validate;
