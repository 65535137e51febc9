//! Deterministic discrete-event simulation of a zoned tracking network.

pub mod engine;
pub mod event;
pub mod mobility;
pub mod report;
pub mod scenario;
pub mod synth;

pub use engine::{build_radio_map, run_scenario};
pub use event::{EventKind, EventQueue, SimTime};
pub use mobility::{mobility_position, Route};
pub use report::{ErrorStats, PlrStats, SimReport, TrackRow};
pub use scenario::{ChannelMode, LocalizationParams, MapSource, MobileNode, NetworkParams, Scenario, TrackingParams};
pub use synth::{synthesize_query, synthesize_radio_map, SurveyParams};
