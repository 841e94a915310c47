//! Deterministic discrete-event simulation of the reporting hierarchy.
//!
//! Leaf offices count ballots and report upward. Preliminary reports travel
//! over electronic channels and every office forwards its updated
//! accumulation the moment a subordinate's report passes the feasibility
//! check; the federal office publishes each update. Final reports travel by
//! post and an office forwards its final sum only once all subordinates have
//! reported.
//!
//! ```
//! use tallynet::simnet::{build_scenario, publish_timeline, run, ScenarioConfig};
//!
//! let text = r#"
//! election = "demo"
//! [[node]]
//! path = "CH"
//! [[node]]
//! path = "CH/ZG"
//! [[node]]
//! path = "CH/ZG/Zug"
//! yes = 40
//! no = 60
//! "#;
//! let cfg = ScenarioConfig::parse(text, std::path::Path::new(".")).unwrap();
//! let trace = run(build_scenario(cfg).unwrap());
//! let last = publish_timeline(&trace).pop().unwrap();
//! assert_eq!((last.totals.yes, last.totals.no), (40, 60));
//! ```

mod channel;
mod config;
mod node;
mod report;
mod sim;
mod trace;

pub use channel::{ChannelPreset, ChannelSpec};
pub use config::{
    swiss_preset, ConfigError, LeafConfig, NoiseModel, RelayMode, ScenarioConfig, SecurityConfig,
    Timing, TreeFile, WrapScope,
};
pub use node::{feasibility_check, FeasibilityFailure, FinalError, NodeState};
pub use report::{Report, ReportKind, Tick};
pub use sim::{build_scenario, run, BuildError, Delivery, Envelope, EventPayload, SimEvent, Simulation};
pub use trace::{
    escape, publish_timeline, unescape, EventTrace, Publication, TraceEvent, TraceParseError,
    TraceRecord,
};
