use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::faults::AdversaryStrategy;
use super::rng::{nonzero, uniform};
use crate::field::FieldModulus;
use crate::protocol::{MessageKind, Party, PhaseMessage};
use crate::symbol::{Symbol, VarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseTag {
    Crg,
    Psu,
    Write,
    Repair,
    Crr,
}

#[derive(Clone, Debug)]
pub struct LogEntry<S> {
    pub step: u64,
    pub phase: PhaseTag,
    /// Sent after the receiver had already aggregated; never used.
    pub late: bool,
    pub msg: PhaseMessage<S>,
}

/// Last honest payload per `(database, kind, receiver)`.
pub type ReplayMemory<S> = BTreeMap<(usize, MessageKind, Party), Vec<S>>;

/// Carries every message of a round in send order, applies Byzantine
/// rewriting to adversarial senders, and keeps the complete log.
pub struct Bus<S: Symbol> {
    q: FieldModulus,
    step: u64,
    log: Vec<LogEntry<S>>,
    adversaries: BTreeSet<usize>,
    strategy: AdversaryStrategy,
    rng: ChaCha20Rng,
    replay: BTreeMap<(usize, MessageKind, Party), Vec<S>>,
}

impl<S: Symbol> Bus<S> {
    pub fn new(
        q: FieldModulus,
        adversaries: BTreeSet<usize>,
        strategy: AdversaryStrategy,
        rng: ChaCha20Rng,
        replay: BTreeMap<(usize, MessageKind, Party), Vec<S>>,
    ) -> Self {
        Bus {
            q,
            step: 0,
            log: Vec::new(),
            adversaries,
            strategy,
            rng,
            replay,
        }
    }

    pub fn tick(&mut self) {
        self.step += 1;
    }

    /// Sends `msg` and returns the payload as delivered.
    pub fn send(&mut self, phase: PhaseTag, mut msg: PhaseMessage<S>, factory: &mut S::Factory) -> Vec<S> {
        if let Party::Database(db) = msg.sender {
            if self.adversaries.contains(&db) {
                msg.payload = self.corrupt(db, msg.kind, msg.receiver, &msg.payload, factory);
            }
        }
        let payload = msg.payload.clone();
        self.log.push(LogEntry {
            step: self.step,
            phase,
            late: false,
            msg,
        });
        payload
    }

    /// Records a message that arrives after its receiver stopped listening.
    pub fn send_late(&mut self, phase: PhaseTag, msg: PhaseMessage<S>) {
        self.log.push(LogEntry {
            step: self.step + 1,
            phase,
            late: true,
            msg,
        });
    }

    fn corrupt(&mut self, db: usize, kind: MessageKind, to: Party, honest: &[S], factory: &mut S::Factory) -> Vec<S> {
        let q = self.q;
        let out: Vec<S> = match self.strategy {
            AdversaryStrategy::Random => honest
                .iter()
                .map(|_| S::variable(factory, uniform(&mut self.rng, q), VarKind::Adversarial { db }))
                .collect(),
            AdversaryStrategy::TargetedFlip => {
                let shift = nonzero(&mut self.rng, q);
                honest.iter().map(|s| s.plus(&S::constant(shift))).collect()
            }
            AdversaryStrategy::Replay => {
                let old = self.replay.get(&(db, kind, to)).cloned().unwrap_or_default();
                let mut v: Vec<S> = old.into_iter().take(honest.len()).collect();
                while v.len() < honest.len() {
                    v.push(S::constant(nonzero(&mut self.rng, q)));
                }
                v
            }
        };
        self.replay.insert((db, kind, to), honest.to_vec());
        out
    }

    pub fn log(&self) -> &[LogEntry<S>] {
        &self.log
    }

    pub fn into_parts(self) -> (Vec<LogEntry<S>>, ReplayMemory<S>) {
        (self.log, self.replay)
    }
}

/// Symbols carried per phase, split by direction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostMeter {
    /// Phase name to `[client-to-database, database-to-client]` symbol counts.
    pub by_phase: BTreeMap<String, [u64; 2]>,
    /// Message kind to total symbols.
    pub by_kind: BTreeMap<String, u64>,
    pub total: u64,
}

impl CostMeter {
    pub fn phase_total(&self, phase: PhaseTag) -> u64 {
        self.by_phase.get(&phase_name(phase)).map_or(0, |v| v[0] + v[1])
    }

    pub fn kind_total(&self, kind: MessageKind) -> u64 {
        self.by_kind.get(&format!("{kind:?}")).copied().unwrap_or(0)
    }
}

pub fn phase_name(p: PhaseTag) -> String {
    serde_json::to_value(p)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Counts every payload symbol, late ones included.
pub fn meter_costs<S: Symbol>(log: &[LogEntry<S>]) -> CostMeter {
    let mut m = CostMeter::default();
    for e in log {
        let n = e.msg.payload.len() as u64;
        let dir = usize::from(e.msg.sender.is_database());
        m.by_phase.entry(phase_name(e.phase)).or_insert([0, 0])[dir] += n;
        *m.by_kind.entry(format!("{:?}", e.msg.kind)).or_insert(0) += n;
        m.total += n;
    }
    m
}

/// One line of the transcript dump.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TranscriptRecord {
    pub step: u64,
    pub phase: PhaseTag,
    pub kind: MessageKind,
    pub sender: String,
    pub receiver: String,
    pub len: usize,
    pub late: bool,
    pub payload_sha256: String,
}

pub fn transcript<S: Symbol>(log: &[LogEntry<S>]) -> Vec<TranscriptRecord> {
    log.iter()
        .map(|e| TranscriptRecord {
            step: e.step,
            phase: e.phase,
            kind: e.msg.kind,
            sender: e.msg.sender.to_string(),
            receiver: e.msg.receiver.to_string(),
            len: e.msg.payload.len(),
            late: e.late,
            payload_sha256: hex::encode(Sha256::digest(e.msg.to_bytes())),
        })
        .collect()
}

/// Hash over the framed bytes of every message in order.
pub fn transcript_hash<S: Symbol>(log: &[LogEntry<S>]) -> String {
    let mut h = Sha256::new();
    for e in log {
        h.update(e.step.to_le_bytes());
        h.update([e.late as u8]);
        h.update(e.msg.to_bytes());
    }
    hex::encode(h.finalize())
}

/// Line-oriented dump: `step phase kind sender receiver len late hash`.
pub fn dump_transcript(records: &[TranscriptRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{} {} {:?} {} {} {} {} {}\n",
            r.step,
            phase_name(r.phase),
            r.kind,
            r.sender,
            r.receiver,
            r.len,
            if r.late { "late" } else { "on-time" },
            r.payload_sha256
        ));
    }
    out
}
