//! CSV ingestion, compressed-table files, JSON output and synthetic data.

#[cfg(feature = "oracle")]
pub mod bench;
mod csv_input;
pub mod json;
mod suffstats_csv;
pub mod synth;

pub use csv_input::{read_csv, read_csv_from, read_csv_full, JobConfig, LoadedData};
pub use json::{fit_to_json, summarize};
pub use suffstats_csv::{read_suffstats, read_suffstats_from, write_suffstats, write_suffstats_to};
pub use synth::{gen_panel, gen_panel_with, write_panel_csv, GeneratedPanel, Noise, PanelMetadata};
