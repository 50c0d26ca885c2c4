use std::collections::BTreeMap;

use serde::Serialize;

use super::bus::CostMeter;
use super::config::ParamsConfig;
use super::faults::FaultConfig;
use crate::codec::{fmt_rational, CostTriple};
use crate::protocol::Setup;

pub const REPORT_SCHEMA: &str = "rsrc-fsl/round-report/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    pub fn check(ok: bool, detail: impl Into<String>) -> Self {
        Verdict {
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    pub fn skipped(detail: impl Into<String>) -> Self {
        Verdict {
            status: Status::Skipped,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub reliability: Verdict,
    pub db_privacy: Verdict,
    pub inter_client_privacy: Verdict,
    pub eavesdropper: Verdict,
    pub cost_bounds: Verdict,
}

impl Verdicts {
    pub fn all(&self) -> [(&'static str, &Verdict); 5] {
        [
            ("reliability", &self.reliability),
            ("db_privacy", &self.db_privacy),
            ("inter_client_privacy", &self.inter_client_privacy),
            ("eavesdropper", &self.eavesdropper),
            ("cost_bounds", &self.cost_bounds),
        ]
    }

    pub fn any_failed(&self) -> bool {
        self.all().iter().any(|(_, v)| v.failed())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetLeakage {
    pub databases: Vec<usize>,
    pub leaked_symbols: usize,
    pub fraction: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeakageSummary {
    pub bound: String,
    /// Real (unpadded) model symbols, `K * L`.
    pub secret_symbols: usize,
    pub max_fraction: Option<String>,
    pub sets: Vec<SetLeakage>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentSummary {
    pub messages: usize,
    pub randomness: usize,
    pub instances_per_pass: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanSummary {
    pub lambda: usize,
    pub realized_leak: String,
    pub components: Vec<ComponentSummary>,
    pub normalized_costs: CostTriple,
    pub padded_len: usize,
    pub instances_per_submodel: usize,
}

impl PlanSummary {
    pub fn from_setup(setup: &Setup) -> Self {
        let plan = &setup.plan;
        PlanSummary {
            lambda: plan.lambda,
            realized_leak: fmt_rational(&plan.realized_leak()),
            components: plan
                .components()
                .map(|(_, l, count)| ComponentSummary {
                    messages: l.messages(),
                    randomness: l.randomness(),
                    instances_per_pass: count,
                })
                .collect(),
            normalized_costs: crate::codec::realized_costs(plan),
            padded_len: setup.padded_len(),
            instances_per_submodel: setup.slots(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StorageSummary {
    /// Symbols held per database at the end of the round.
    pub per_db: BTreeMap<usize, usize>,
    pub total: usize,
    pub ceiling: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TranscriptSummary {
    pub messages: usize,
    pub symbols: u64,
    pub sha256: String,
}

/// Everything observable about one round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundReport {
    pub schema: String,
    pub round: u64,
    pub seed: u64,
    pub modulus: u32,
    pub params: ParamsConfig,
    pub plan: PlanSummary,
    pub faults: FaultConfig,
    pub union: Vec<usize>,
    pub expected_union: Vec<usize>,
    pub contributing_clients: Vec<usize>,
    /// Database to routing client.
    pub routers: BTreeMap<usize, usize>,
    pub embedding_router: Option<usize>,
    pub committed: bool,
    pub verdicts: Verdicts,
    pub leakage: LeakageSummary,
    pub costs: CostMeter,
    pub ceilings: BTreeMap<String, u64>,
    pub storage: StorageSummary,
    pub transcript: TranscriptSummary,
    pub events: Vec<String>,
}

impl RoundReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn all_passed(&self) -> bool {
        !self.verdicts.any_failed()
    }
}
