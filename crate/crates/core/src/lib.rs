//! Fingerprint localization and tracking for zoned wireless sensor networks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod localization;
pub mod netproto;
pub mod propagation;
pub mod radio_map;
pub mod rng;
pub mod sim;
pub mod tracking;

pub use energy::{EfficiencyReport, EnergyLedger, EnergyModel, RadioMode};
pub use error::{Error, Result};
pub use geometry::{Position, Rect, ReferenceGrid, Zone};
pub use localization::{locate, Algorithm, AwknnParams, MatchResult, Measurement};
pub use propagation::PropagationModel;
pub use radio_map::{Anchor, RadioMap, RssVector, Rssi};
pub use sim::{run_scenario, Scenario, SimReport};
