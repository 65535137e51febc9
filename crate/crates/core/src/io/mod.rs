//! Scenario parsing and file formats.

pub mod config;
pub mod map_csv;
pub mod query_csv;
pub mod report_io;

pub use config::{parse_scenario, parse_scenario_file};
pub use map_csv::{read_radio_map, write_radio_map};
pub use query_csv::{estimates_csv, read_queries, ESTIMATE_HEADER, QUERY_HEADER};
pub use report_io::{read_summary, read_track, write_report, Summary, TRACK_HEADER};
