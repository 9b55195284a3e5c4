pub mod ingest;
pub mod lemma;
pub mod lists;
mod par;
pub mod phrase;
pub mod pipeline;
pub mod rank;
pub mod report;
pub mod review;
pub mod stats;
pub mod synthetic;
pub mod tsv;

pub use par::{current_workers, with_workers};
