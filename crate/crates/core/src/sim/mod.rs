//! Deterministic single-process harness for protocol rounds.

pub mod analysis;
pub mod bus;
pub mod config;
pub mod faults;
pub mod report;
pub mod rng;
pub mod round;

pub use bus::{dump_transcript, meter_costs, transcript, transcript_hash, Bus, CostMeter, LogEntry, PhaseTag, TranscriptRecord};
pub use config::{load_scenario, parse_scenario, IncrementSource, ParamsConfig, ScenarioConfig, SCENARIO_SCHEMA};
pub use faults::{AdversaryStrategy, FaultConfig};
pub use report::{RoundReport, Status, Verdict, Verdicts, REPORT_SCHEMA};
pub use round::{cost_ceilings, run_round, Audit, RoundInputs, RoundOutcome, Simulation};
