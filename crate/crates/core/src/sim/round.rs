//! One complete round on the message bus, with fault remedies and verdicts.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::analysis::{conditional_information, mutual_information, sparse, to_updated_basis, vars_where};
use super::bus::{meter_costs, transcript_hash, Bus, LogEntry, PhaseTag, ReplayMemory};
use super::config::ParamsConfig;
use super::faults::FaultConfig;
use super::report::{
    LeakageSummary, PlanSummary, RoundReport, SetLeakage, StorageSummary, TranscriptSummary, Verdict, Verdicts,
    REPORT_SCHEMA,
};
use super::rng::{nonzero, substream, uniform};
use crate::codec::{encode_row, fmt_rational, reconstruct, repair_share, CodedRow, OmegaInstance, Rational};
use crate::field::{mat_inv, FieldElement, FieldModulus};
use crate::protocol::*;
use crate::symbol::{Symbol, Tracked, VarKind, VarRegistry};

/// Client selections and increments for one round. Submodels are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundInputs {
    /// `gammas[i]` lists the submodels client `i+1` updates.
    pub gammas: Vec<Vec<usize>>,
    /// `increments[i][k]` holds `L` symbols for each `k` in `gammas[i]`.
    pub increments: Vec<BTreeMap<usize, Vec<u64>>>,
}

impl RoundInputs {
    pub fn new(gammas: Vec<Vec<usize>>, increments: Vec<BTreeMap<usize, Vec<u64>>>) -> Self {
        RoundInputs { gammas, increments }
    }

    /// Every client keeps each submodel with probability one half.
    pub fn random_gammas(p: &SystemParams, rng: &mut impl Rng) -> Vec<Vec<usize>> {
        (0..p.c)
            .map(|_| (1..=p.k).filter(|_| rng.gen_bool(0.5)).collect())
            .collect()
    }

    pub fn with_random_increments(p: &SystemParams, gammas: Vec<Vec<usize>>, rng: &mut impl Rng) -> Self {
        let q = p.modulus.get() as u64;
        let increments = gammas
            .iter()
            .map(|g| g.iter().map(|&k| (k, (0..p.l).map(|_| rng.gen_range(0..q)).collect())).collect())
            .collect();
        RoundInputs { gammas, increments }
    }

    pub fn random(p: &SystemParams, rng: &mut impl Rng) -> Self {
        let g = Self::random_gammas(p, rng);
        Self::with_random_increments(p, g, rng)
    }

    pub fn validate(&self, p: &SystemParams) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::Config(m));
        if self.gammas.len() != p.c || self.increments.len() != p.c {
            return bad(format!(
                "inputs: {} selections and {} increment sets for {} clients",
                self.gammas.len(),
                self.increments.len(),
                p.c
            ));
        }
        for (i, (g, inc)) in self.gammas.iter().zip(&self.increments).enumerate() {
            let set: BTreeSet<usize> = g.iter().copied().collect();
            if set.len() != g.len() || set.iter().any(|&k| k == 0 || k > p.k) {
                return bad(format!("gammas[{i}]: submodels must be distinct and in 1..={}", p.k));
            }
            let keys: BTreeSet<usize> = inc.keys().copied().collect();
            if keys != set {
                return bad(format!("increments[{i}]: keys must match the client's selection"));
            }
            if inc.values().any(|v| v.len() != p.l) {
                return bad(format!("increments[{i}]: every increment needs {} symbols", p.l));
            }
        }
        Ok(())
    }

    /// Union of the selections of `clients` (1-based ids).
    pub fn union_of(&self, clients: &BTreeSet<usize>) -> BTreeSet<usize> {
        clients.iter().flat_map(|&i| self.gammas[i - 1].iter().copied()).collect()
    }
}

/// Result of [`Simulation::run_round`].
pub struct RoundOutcome<S> {
    pub report: RoundReport,
    pub log: Vec<LogEntry<S>>,
    /// Storage after losses at the start of the round.
    pub start: Vec<Option<DatabaseState<S>>>,
    /// Storage at the end of the round.
    pub end: Vec<Option<DatabaseState<S>>>,
    /// Symbols each client generated itself.
    pub known: Vec<Vec<S>>,
    pub contributing: BTreeSet<usize>,
    pub union: BTreeSet<usize>,
}

impl<S: Symbol> RoundOutcome<S> {
    pub fn audit<'a>(&'a self, setup: &'a Setup) -> Audit<'a, S> {
        Audit {
            setup,
            log: &self.log,
            start: &self.start,
            end: &self.end,
            known: &self.known,
            contributing: &self.contributing,
            union: &self.union,
        }
    }
}

/// Databases, the ground-truth model and the round counter across rounds.
pub struct Simulation<S: Symbol> {
    setup: Setup,
    dbs: Vec<Option<DatabaseState<S>>>,
    /// Model values, `K x P`; positions from `L` on are dummy symbols.
    model: Vec<Vec<FieldElement>>,
    round: u64,
    seed: u64,
    factory: S::Factory,
    replay: ReplayMemory<S>,
}

impl<S: Symbol> Simulation<S>
where
    S::Factory: Default,
{
    /// Model drawn uniformly from the seed.
    pub fn new(params: &SystemParams, seed: u64) -> Result<Self, ProtocolError> {
        let q = params.modulus.get() as u64;
        let mut rng = substream(seed, 0, "model");
        let model: Vec<Vec<u64>> = (0..params.k)
            .map(|_| (0..params.l).map(|_| rng.gen_range(0..q)).collect())
            .collect();
        Self::with_model(params, &model, seed)
    }

    /// Encodes `model` (`K` rows of `L` symbols) into fresh storage.
    pub fn with_model(params: &SystemParams, model: &[Vec<u64>], seed: u64) -> Result<Self, ProtocolError> {
        let setup = params.setup()?;
        let q = setup.q();
        if model.len() != params.k || model.iter().any(|r| r.len() != params.l) {
            return Err(ProtocolError::Config(format!(
                "model must have {} rows of {} symbols",
                params.k, params.l
            )));
        }
        let mut pad = substream(seed, 0, "padding");
        let padded: Vec<Vec<FieldElement>> = model
            .iter()
            .map(|r| {
                let mut v: Vec<FieldElement> = r.iter().map(|&x| q.elem(x)).collect();
                while v.len() < setup.padded_len() {
                    v.push(uniform(&mut pad, q));
                }
                v
            })
            .collect();
        let mut rng = substream(seed, 0, "storage");
        let mut dbs: Vec<DatabaseState<S>> = (1..=params.n).map(DatabaseState::empty).collect();
        let hat_k: Vec<S> = (0..params.k).map(|_| S::constant(uniform(&mut rng, q))).collect();
        let hat_kl: Vec<Vec<S>> = (0..params.k)
            .map(|_| (0..setup.padded_len()).map(|_| S::constant(uniform(&mut rng, q))).collect())
            .collect();
        for (k, row) in padded.iter().enumerate() {
            let mut per_db: Vec<Vec<CodedRow<S>>> = vec![Vec::new(); params.n];
            for (slot, info) in setup.chunking.slots.iter().enumerate() {
                let layout = setup.slot_layout(slot).clone();
                let msgs = (0..layout.messages()).map(|i| S::constant(row[info.offset + i])).collect();
                let rand = (0..layout.randomness()).map(|_| S::constant(uniform(&mut rng, q))).collect();
                let inst = OmegaInstance::new(layout, msgs, rand)?;
                for db in 1..=params.n {
                    per_db[db - 1].push(encode_row(&inst, &setup.psi, db, slot)?);
                }
            }
            let _ = k;
            for (db, rows) in dbs.iter_mut().zip(per_db) {
                db.store.push(rows);
            }
        }
        for db in dbs.iter_mut() {
            db.hat_k = hat_k.clone();
            db.hat_kl = hat_kl.clone();
        }
        Ok(Simulation {
            setup,
            dbs: dbs.into_iter().map(Some).collect(),
            model: padded,
            round: 0,
            seed,
            factory: S::Factory::default(),
            replay: BTreeMap::new(),
        })
    }

    pub fn setup(&self) -> &Setup {
        &self.setup
    }

    /// Rounds completed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Ground-truth model values, `K` rows of `L` symbols.
    pub fn model(&self) -> Vec<Vec<FieldElement>> {
        self.model.iter().map(|r| r[..self.setup.params.l].to_vec()).collect()
    }

    pub fn databases(&self) -> &[Option<DatabaseState<S>>] {
        &self.dbs
    }

    /// Variables minted by the last round, for audited symbols.
    pub fn registry(&self) -> Option<&VarRegistry> {
        S::registry(&self.factory)
    }

    /// Reconstructs the model from the stored rows of `dbs`.
    pub fn decode_models(&self, dbs: &[usize]) -> Result<Vec<Vec<FieldElement>>, ProtocolError> {
        decode_storage(&self.setup, &self.dbs, dbs)
    }

    /// Drops lost storage and re-expresses the remaining state over fresh
    /// variables with the same values.
    fn rebase(&mut self, failed: &BTreeSet<usize>) -> Result<(), ProtocolError> {
        for &f in failed {
            self.dbs[f - 1] = None;
        }
        let setup = &self.setup;
        let q = setup.q();
        let d = setup.dim();
        let holders: Vec<usize> = (1..=setup.params.n).filter(|&j| self.dbs[j - 1].is_some()).collect();
        if holders.len() < d {
            return Err(ProtocolError::TooManyFaults(format!(
                "{} databases hold storage, reconstruction needs {d}",
                holders.len()
            )));
        }
        let helpers = &holders[..d];
        let idx: Vec<usize> = helpers.iter().map(|h| h - 1).collect();
        let inv = mat_inv(&setup.psi.select(&idx, &(0..d).collect::<Vec<_>>())?)?;
        let mut factory = S::Factory::default();
        let first = self.dbs[holders[0] - 1].as_ref().expect("holder");
        let hat_k: Vec<S> = first
            .hat_k
            .iter()
            .map(|s| S::variable(&mut factory, s.value(), VarKind::ServerCr))
            .collect();
        let hat_kl: Vec<Vec<S>> = first
            .hat_kl
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| S::variable(&mut factory, s.value(), VarKind::ServerCr))
                    .collect()
            })
            .collect();
        let mut stores: BTreeMap<usize, Vec<Vec<CodedRow<S>>>> = holders.iter().map(|&h| (h, Vec::new())).collect();
        for k in 1..=setup.params.k {
            let mut per: BTreeMap<usize, Vec<CodedRow<S>>> = holders.iter().map(|&h| (h, Vec::new())).collect();
            for (slot, info) in setup.chunking.slots.iter().enumerate() {
                let layout = setup.slot_layout(slot).clone();
                let rows: Vec<&CodedRow<S>> = helpers
                    .iter()
                    .map(|&h| &self.dbs[h - 1].as_ref().expect("holder").store[k - 1][slot])
                    .collect();
                let omega = |r: usize, c: usize| -> FieldElement {
                    (0..d).fold(q.zero(), |acc, t| acc + inv.get(r, t) * rows[t].symbols[c].value())
                };
                let msgs = (0..layout.messages())
                    .map(|i| {
                        let (r, c) = layout.message_position(i);
                        let pos = info.offset + i;
                        let kind = if pos < setup.params.l {
                            VarKind::Model { k, pos }
                        } else {
                            VarKind::Padding { k, pos }
                        };
                        S::variable(&mut factory, omega(r, c), kind)
                    })
                    .collect();
                let rand = (0..layout.randomness())
                    .map(|i| {
                        let (r, c) = layout.randomness_position(i);
                        S::variable(&mut factory, omega(r, c), VarKind::StorageRandomness)
                    })
                    .collect();
                let inst = OmegaInstance::new(layout, msgs, rand)?;
                for &h in &holders {
                    per.get_mut(&h).expect("holder").push(encode_row(&inst, &setup.psi, h, slot)?);
                }
            }
            for (h, rows) in per {
                stores.get_mut(&h).expect("holder").push(rows);
            }
        }
        for (h, store) in stores {
            self.dbs[h - 1] = Some(DatabaseState {
                id: h,
                store,
                hat_k: hat_k.clone(),
                hat_kl: hat_kl.clone(),
            });
        }
        for v in self.replay.values_mut() {
            *v = v.iter().map(|s| S::constant(s.value())).collect();
        }
        self.factory = factory;
        Ok(())
    }

    /// Runs CRG, PSU, write and CRR under `faults` and evaluates the round.
    pub fn run_round(&mut self, inputs: &RoundInputs, faults: &FaultConfig) -> Result<RoundOutcome<S>, ProtocolError> {
        let p = self.setup.params.clone();
        inputs.validate(&p)?;
        faults.validate(&p)?;
        let failed: BTreeSet<usize> = faults.failed_dbs.iter().copied().collect();
        self.rebase(&failed)?;
        self.round += 1;
        let start = self.dbs.clone();
        let adversaries: BTreeSet<usize> = faults.adversaries.iter().copied().collect();
        let bus = Bus::new(
            p.modulus,
            adversaries.clone(),
            faults.adversary_strategy,
            substream(self.seed, self.round, "adversary"),
            std::mem::take(&mut self.replay),
        );
        let mut round = Round {
            setup: self.setup.clone(),
            q: p.modulus,
            a: p.a,
            dbs: std::mem::take(&mut self.dbs),
            factory: std::mem::take(&mut self.factory),
            bus,
            rng: substream(self.seed, self.round, "protocol"),
            clients: Vec::new(),
            known: vec![Vec::new(); p.c],
            events: Vec::new(),
            live: Vec::new(),
            failed,
            dropped_dbs: faults.dropped_dbs.iter().copied().collect(),
            adversaries,
            dropped_clients: faults.dropped_clients.iter().copied().collect(),
            late_clients: faults.late_clients.iter().copied().collect(),
            contributing: BTreeSet::new(),
            routers: BTreeMap::new(),
            delivering: Vec::new(),
            lead: None,
            union: BTreeSet::new(),
            committed: false,
            reads: Vec::new(),
            pending_replacements: BTreeMap::new(),
        };
        let result = round.execute(inputs, &self.model);
        let Round {
            dbs,
            factory,
            bus,
            clients,
            known,
            mut events,
            contributing,
            routers,
            lead,
            union,
            committed,
            reads,
            ..
        } = round;
        let (log, replay) = bus.into_parts();
        self.dbs = dbs;
        self.factory = factory;
        self.replay = replay;
        result?;

        let q = p.modulus;
        let expected_union = inputs.union_of(&contributing);
        let mut new_model = self.model.clone();
        for &k in &union {
            for &i in &contributing {
                if let Some(inc) = inputs.increments[i - 1].get(&k) {
                    for (pos, &v) in inc.iter().enumerate() {
                        new_model[k - 1][pos] += q.elem(v);
                    }
                }
            }
        }

        let reliability = self.check_reliability(&union, &expected_union, &new_model, &reads, &mut events);
        let old_model = std::mem::replace(&mut self.model, new_model);
        let _ = old_model;

        let audit = Audit {
            setup: &self.setup,
            log: &log,
            start: &start,
            end: &self.dbs,
            known: &known,
            contributing: &contributing,
            union: &union,
        };
        let (db_privacy, inter_client, eavesdropper, leakage) = match S::registry(&self.factory) {
            Some(reg) => audit.evaluate(reg, faults),
            None => {
                let why = "plain run: no linear forms to audit";
                (
                    Verdict::skipped(why),
                    Verdict::skipped(why),
                    Verdict::skipped(why),
                    LeakageSummary {
                        bound: fmt_rational(&p.delta),
                        secret_symbols: p.k * p.l,
                        max_fraction: None,
                        sets: Vec::new(),
                    },
                )
            }
        };

        let costs = meter_costs(&log);
        let ceilings = cost_ceilings(&self.setup, union.len(), faults);
        let cost_bounds = if faults.is_fault_free() && p.a == 0 {
            let checks = [
                ("crg", costs.phase_total(PhaseTag::Crg)),
                ("psu", costs.phase_total(PhaseTag::Psu)),
                ("write", costs.phase_total(PhaseTag::Write)),
                ("crr", costs.phase_total(PhaseTag::Crr)),
            ];
            let over: Vec<String> = checks
                .iter()
                .filter(|(name, v)| *v > ceilings[*name])
                .map(|(name, v)| format!("{name} {v} > {}", ceilings[*name]))
                .collect();
            let storage_total: usize = self.dbs.iter().flatten().map(|d| d.symbol_count()).sum();
            let storage_ok = storage_total as u64 <= ceilings["storage"];
            let mut detail = checks.iter().map(|(n, v)| format!("{n} {v}/{}", ceilings[*n])).join(", ");
            detail.push_str(&format!(", storage {storage_total}/{}", ceilings["storage"]));
            if !over.is_empty() {
                detail = format!("over ceiling: {}", over.join(", "));
            }
            Verdict::check(over.is_empty() && storage_ok, detail)
        } else {
            Verdict::skipped("ceilings apply to fault-free rounds without Byzantine databases")
        };

        let per_db: BTreeMap<usize, usize> = self
            .dbs
            .iter()
            .flatten()
            .map(|d| (d.id, d.symbol_count()))
            .collect();
        let total = per_db.values().sum();
        let report = RoundReport {
            schema: REPORT_SCHEMA.into(),
            round: self.round,
            seed: self.seed,
            modulus: q.get(),
            params: ParamsConfig::from_params(&p),
            plan: PlanSummary::from_setup(&self.setup),
            faults: faults.clone(),
            union: union.iter().copied().collect(),
            expected_union: expected_union.iter().copied().collect(),
            contributing_clients: contributing.iter().copied().collect(),
            routers: routers.clone(),
            embedding_router: lead,
            committed,
            verdicts: Verdicts {
                reliability,
                db_privacy,
                inter_client_privacy: inter_client,
                eavesdropper,
                cost_bounds,
            },
            leakage,
            costs,
            ceilings: ceilings.clone(),
            storage: StorageSummary {
                per_db,
                total,
                ceiling: ceilings["storage"],
            },
            transcript: TranscriptSummary {
                messages: log.len(),
                symbols: log.iter().map(|e| e.msg.payload.len() as u64).sum(),
                sha256: transcript_hash(&log),
            },
            events,
        };
        let _ = clients;
        Ok(RoundOutcome {
            report,
            log,
            start,
            end: self.dbs.clone(),
            known,
            contributing,
            union,
        })
    }

    fn check_reliability(
        &self,
        union: &BTreeSet<usize>,
        expected: &BTreeSet<usize>,
        new_model: &[Vec<FieldElement>],
        reads: &[(usize, bool)],
        events: &mut Vec<String>,
    ) -> Verdict {
        let setup = &self.setup;
        let mut problems = Vec::new();
        if union != expected {
            problems.push(format!("union {union:?} differs from expected {expected:?}"));
        }
        for &(client, ok) in reads {
            if !ok {
                problems.push(format!("client {client} decoded wrong submodels"));
            }
        }
        let n = setup.params.n;
        if self.dbs.iter().any(Option::is_none) {
            problems.push("a database holds no storage after the round".into());
        }
        let present: Vec<usize> = (1..=n).filter(|&j| self.dbs[j - 1].is_some()).collect();
        let mut subsets = 0usize;
        'outer: for subset in present.iter().copied().combinations(setup.dim()) {
            subsets += 1;
            for k in 1..=setup.params.k {
                for (slot, info) in setup.chunking.slots.iter().enumerate() {
                    let rows: Vec<CodedRow<S>> = subset
                        .iter()
                        .map(|&j| self.dbs[j - 1].as_ref().expect("present").store[k - 1][slot].clone())
                        .collect();
                    match reconstruct(&rows, setup.slot_layout(slot), &setup.psi) {
                        Ok(rec) => {
                            let want = &new_model[k - 1][info.offset..info.offset + rec.messages.len()];
                            if rec.messages.iter().map(Symbol::value).ne(want.iter().copied()) {
                                problems.push(format!("databases {subset:?} reconstruct a wrong submodel {k}"));
                                break 'outer;
                            }
                        }
                        Err(e) => {
                            problems.push(format!("databases {subset:?} fail to reconstruct submodel {k}: {e}"));
                            break 'outer;
                        }
                    }
                }
            }
        }
        let values = |d: &DatabaseState<S>| -> (Vec<FieldElement>, Vec<Vec<FieldElement>>) {
            (
                d.hat_k.iter().map(Symbol::value).collect(),
                d.hat_kl.iter().map(|r| r.iter().map(Symbol::value).collect()).collect(),
            )
        };
        let hats: Vec<_> = self.dbs.iter().flatten().map(values).collect();
        if hats.windows(2).any(|w| w[0] != w[1]) {
            problems.push("plain server randomness differs between databases".into());
        }
        if problems.is_empty() {
            Verdict::check(
                true,
                format!("{subsets} reconstructing subsets agree with the updated model"),
            )
        } else {
            events.extend(problems.iter().cloned());
            Verdict::check(false, problems.join("; "))
        }
    }
}

/// Runs one audited round from a fresh encoding of `model`.
pub fn run_round(
    params: &SystemParams,
    model: &[Vec<u64>],
    inputs: &RoundInputs,
    faults: &FaultConfig,
    seed: u64,
) -> Result<RoundReport, ProtocolError> {
    let mut sim = Simulation::<Tracked>::with_model(params, model, seed)?;
    Ok(sim.run_round(inputs, faults)?.report)
}

/// Reconstructs padded submodels from the rows of `dbs`, truncated to `L`.
fn decode_storage<S: Symbol>(
    setup: &Setup,
    all: &[Option<DatabaseState<S>>],
    dbs: &[usize],
) -> Result<Vec<Vec<FieldElement>>, ProtocolError> {
    let mut out = Vec::with_capacity(setup.params.k);
    for k in 1..=setup.params.k {
        let mut model = Vec::with_capacity(setup.padded_len());
        for slot in 0..setup.slots() {
            let rows: Vec<CodedRow<S>> = dbs
                .iter()
                .map(|&j| {
                    all.get(j - 1)
                        .and_then(Option::as_ref)
                        .map(|d| d.store[k - 1][slot].clone())
                        .ok_or_else(|| ProtocolError::MissingShare(format!("database {j} holds no storage")))
                })
                .collect::<Result<_, _>>()?;
            let rec = reconstruct(&rows, setup.slot_layout(slot), &setup.psi)?;
            model.extend(rec.messages.iter().map(Symbol::value));
        }
        model.truncate(setup.params.l);
        out.push(model);
    }
    Ok(out)
}

/// Per-phase ceilings on metered symbols, with `N`, `C`, `|Gamma|` and the
/// padded length `P` of this round.
pub fn cost_ceilings(setup: &Setup, gamma: usize, faults: &FaultConfig) -> BTreeMap<String, u64> {
    let p = &setup.params;
    let live = (p.n - faults.dropped_dbs.len() - faults.failed_dbs.len()) as u64;
    let (n, c, k, d, j) = (p.n as u64, p.c as u64, p.k as u64, p.d as u64, p.j as u64);
    let g = gamma as u64;
    let pl = setup.padded_len() as u64;
    let slots = setup.slots() as u64;
    let c1: u64 = (0..setup.slots()).map(|s| setup.slot_layout(s).c1() as u64).sum();
    let mut m = BTreeMap::new();
    m.insert(
        "crg".into(),
        (j + 1) * n * (n - 1) * (k + d * g * pl) + (j + 1) * (n + 2) * c.saturating_sub(1) * (k + g * pl) + (j + 1) * c,
    );
    m.insert("psu".into(), (c + live + live * live) * k);
    m.insert("write".into(), c * c1 * g + (c + n) * g * pl + n * n * d * g * pl);
    m.insert("crr".into(), 2 * n * (k + g * pl));
    m.insert("storage".into(), n * (d * d * slots * k + k + k * pl));
    m.insert(
        "repair".into(),
        2 * (d + 2 * p.a as u64) * slots * k * faults.failed_dbs.len() as u64,
    );
    m
}

struct Round<S: Symbol> {
    setup: Setup,
    q: FieldModulus,
    a: usize,
    dbs: Vec<Option<DatabaseState<S>>>,
    factory: S::Factory,
    bus: Bus<S>,
    rng: ChaCha20Rng,
    clients: Vec<ClientState<S>>,
    /// Symbols each client generated itself.
    known: Vec<Vec<S>>,
    events: Vec<String>,
    live: Vec<usize>,
    failed: BTreeSet<usize>,
    dropped_dbs: BTreeSet<usize>,
    adversaries: BTreeSet<usize>,
    dropped_clients: BTreeSet<usize>,
    late_clients: BTreeSet<usize>,
    contributing: BTreeSet<usize>,
    /// Database to routing client; a router's slot is its rank here.
    routers: BTreeMap<usize, usize>,
    /// Databases whose router delivers, ascending.
    delivering: Vec<usize>,
    lead: Option<usize>,
    union: BTreeSet<usize>,
    committed: bool,
    /// `(client, decoded correctly)` for every reader.
    reads: Vec<(usize, bool)>,
    /// Rows committed to replacement databases during the write phase.
    pending_replacements: BTreeMap<usize, BTreeMap<usize, Vec<CodedRow<S>>>>,
}

struct CrgOutput<S> {
    router: BTreeMap<usize, RouterBatch<S>>,
    client: BTreeMap<usize, (Option<FieldElement>, Vec<S>)>,
}

impl<S: Symbol> Round<S> {
    fn db(&self, id: usize) -> &DatabaseState<S> {
        self.dbs[id - 1].as_ref().expect("database present")
    }

    fn send(&mut self, phase: PhaseTag, kind: MessageKind, from: Party, to: Party, payload: Vec<S>) -> Vec<S> {
        self.bus.send(phase, PhaseMessage::new(kind, from, to, payload), &mut self.factory)
    }

    fn var(&mut self, kind: VarKind) -> S {
        let v = uniform(&mut self.rng, self.q);
        S::variable(&mut self.factory, v, kind)
    }

    fn active(&self, client: usize) -> bool {
        !self.dropped_clients.contains(&client) && !self.late_clients.contains(&client)
    }

    fn is_live(&self, db: usize) -> bool {
        self.live.contains(&db)
    }

    /// Databases that receive group `g`'s answers: `g` itself, plus the
    /// next `2A` live databases when Byzantine databases are tolerated.
    fn serving_set(&self, g: usize) -> Vec<usize> {
        if self.a == 0 {
            return vec![g];
        }
        let pos = self.live.iter().position(|&d| d == g).expect("live group");
        (0..2 * self.a + 1).map(|t| self.live[(pos + t) % self.live.len()]).collect()
    }

    fn holdings(&self, client: usize) -> &RouterHoldings<S> {
        self.clients[client - 1].router.as_ref().expect("routing client")
    }

    /// Clients whose answers never reach an aggregate, split into those
    /// compensated by their own group's router and the rest.
    fn missing_in_group(&self, g: usize) -> Vec<usize> {
        self.setup
            .group(g)
            .into_iter()
            .filter(|i| !self.contributing.contains(i))
            .collect()
    }

    fn stranded(&self) -> Vec<usize> {
        (1..=self.setup.params.c)
            .filter(|&i| !self.delivering.contains(&self.setup.params.groups[i - 1]))
            .collect()
    }

    fn missing_slots(&self) -> Vec<usize> {
        self.routers
            .keys()
            .enumerate()
            .filter(|(_, db)| !self.delivering.contains(db))
            .map(|(slot, _)| slot)
            .collect()
    }

    fn execute(&mut self, inputs: &RoundInputs, truth: &[Vec<FieldElement>]) -> Result<(), ProtocolError> {
        let p = self.setup.params.clone();
        let q = self.q;
        self.live = (1..=p.n)
            .filter(|j| !self.failed.contains(j) && !self.dropped_dbs.contains(j))
            .collect();
        for &f in &self.failed {
            self.events.push(format!("database {f} failed; a replacement joins empty"));
        }
        for &d in &self.dropped_dbs {
            self.events.push(format!("database {d} is silent this round"));
        }

        for i in 1..=p.c {
            let gamma: BTreeSet<usize> = inputs.gammas[i - 1].iter().copied().collect();
            let incidence: Vec<S> = (1..=p.k)
                .map(|k| {
                    let y = q.elem(gamma.contains(&k) as u64);
                    S::variable(&mut self.factory, y, VarKind::Incidence { client: i, k })
                })
                .collect();
            let mut st = ClientState::new(i, p.groups[i - 1], gamma, incidence.clone());
            for (&k, vals) in &inputs.increments[i - 1] {
                let mut v: Vec<S> = vals
                    .iter()
                    .enumerate()
                    .map(|(pos, &x)| S::variable(&mut self.factory, q.elem(x), VarKind::Delta { client: i, k, pos }))
                    .collect();
                self.known[i - 1].extend(v.iter().cloned());
                v.resize(self.setup.padded_len(), S::zero(q));
                st.increments.insert(k, v);
            }
            self.known[i - 1].extend(incidence);
            self.clients.push(st);
        }

        for g in (1..=p.n).filter(|g| !self.failed.contains(g)) {
            let eligible: Vec<usize> = self.setup.group(g).into_iter().filter(|&i| self.active(i)).collect();
            if let Some(&r) = eligible.choose(&mut self.rng) {
                self.routers.insert(g, r);
            }
        }
        self.delivering = self.routers.keys().copied().filter(|&g| self.is_live(g)).collect();
        self.contributing = (1..=p.c)
            .filter(|&i| self.active(i) && self.delivering.contains(&p.groups[i - 1]))
            .collect();
        self.lead = self.delivering.first().map(|g| self.routers[g]);
        for (g, r) in &self.routers {
            self.events.push(format!("client {r} routes for database {g}"));
        }
        for &i in &self.late_clients {
            self.events.push(format!("client {i} is late; its answers are logged after aggregation"));
        }

        let mut psu_ran = false;
        if self.lead.is_none() {
            self.events.push("no routing client can deliver; the round is a no-op".into());
        } else {
            self.psu_phase()?;
            psu_ran = true;
            if self.union.is_empty() {
                self.events.push("empty union; write phase skipped".into());
            } else {
                self.write_phase(truth)?;
            }
        }
        self.bus.tick();
        self.repair_phase()?;
        self.bus.tick();
        self.crr_phase(psu_ran)?;
        Ok(())
    }

    fn crg(&mut self, shape: CrgShape) -> Result<CrgOutput<S>, ProtocolError> {
        let q = self.q;
        let p = self.setup.params.clone();
        let recipients: Vec<(usize, CrgRecipient)> = (1..=p.c)
            .map(|i| {
                let to = if self.routers.values().any(|&r| r == i) {
                    CrgRecipient::Router
                } else {
                    CrgRecipient::Client { pos: i - 1 }
                };
                (i, to)
            })
            .collect();
        let mut received: BTreeMap<usize, Vec<Vec<S>>> = BTreeMap::new();
        if self.a == 0 {
            let contributors: Vec<usize> = self.live[..p.j + 1].to_vec();
            for u in contributors {
                let mut syms = Vec::with_capacity(shape.draw_len());
                if shape.with_scalar {
                    syms.push(S::constant(nonzero(&mut self.rng, q)));
                }
                while syms.len() < shape.draw_len() {
                    syms.push(self.var(VarKind::CrgContribution { db: u }));
                }
                let draw = CrgDraw::new(shape, syms)?;
                for &(i, to) in &recipients {
                    let got = self.send(PhaseTag::Crg, MessageKind::CrgBroadcast, Party::Database(u), Party::Client(i), draw.payload_for(to));
                    received.entry(i).or_default().push(got);
                }
            }
        } else {
            if p.c < 2 {
                return Err(ProtocolError::Abort("robust randomness generation needs two clients".into()));
            }
            let size = 2 * self.a + 1;
            for u in 0..=p.j {
                let members: Vec<usize> = self.live[u * size..(u + 1) * size].to_vec();
                let seeders = [(2 * u) % p.c + 1, (2 * u + 1) % p.c + 1];
                let mut shares: Vec<Vec<Vec<S>>> = vec![Vec::new(); members.len()];
                for &s in &seeders {
                    let mut v = Vec::with_capacity(shape.draw_len());
                    if shape.with_scalar {
                        v.push(S::constant(nonzero(&mut self.rng, q)));
                    }
                    while v.len() < shape.draw_len() {
                        let x = self.var(VarKind::CrgContribution { db: members[0] });
                        self.known[s - 1].push(x.clone());
                        v.push(x);
                    }
                    for (m, &db) in members.iter().enumerate() {
                        let got = self.send(PhaseTag::Crg, MessageKind::CrgSeed, Party::Client(s), Party::Database(db), v.clone());
                        shares[m].push(got);
                    }
                }
                let mut copies: BTreeMap<usize, Vec<Vec<S>>> = BTreeMap::new();
                for (m, &db) in members.iter().enumerate() {
                    let (s1, s2) = (&shares[m][0], &shares[m][1]);
                    let syms: Vec<S> = (0..shape.draw_len())
                        .map(|t| {
                            if shape.with_scalar && t == 0 {
                                S::constant(s1[0].value() * s2[0].value())
                            } else {
                                s1[t].plus(&s2[t])
                            }
                        })
                        .collect();
                    let draw = CrgDraw::new(shape, syms)?;
                    for &(i, to) in &recipients {
                        let got = self.send(PhaseTag::Crg, MessageKind::CrgBroadcast, Party::Database(db), Party::Client(i), draw.payload_for(to));
                        copies.entry(i).or_default().push(got);
                    }
                }
                for (i, c) in copies {
                    let v = adversary_decode_repetition(&c, self.a)?;
                    received.entry(i).or_default().push(v);
                }
            }
        }
        self.bus.tick();
        let mut out = CrgOutput {
            router: BTreeMap::new(),
            client: BTreeMap::new(),
        };
        for (i, to) in recipients {
            let payloads = received.remove(&i).unwrap_or_default();
            match to {
                CrgRecipient::Router => {
                    out.router.insert(i, crg_router_assemble(q, &shape, &payloads)?);
                }
                CrgRecipient::Client { pos } => {
                    out.client.insert(i, crg_client_assemble(q, &shape, pos, &payloads)?);
                }
            }
        }
        Ok(out)
    }

    fn psu_phase(&mut self) -> Result<(), ProtocolError> {
        let p = self.setup.params.clone();
        let q = self.q;
        let shape = CrgShape {
            with_scalar: true,
            client_sets: p.k,
            clients: p.c,
            router_sets: p.k,
            routers: self.routers.len(),
        };
        let out = self.crg(shape)?;
        let slots: BTreeMap<usize, (usize, usize)> = self
            .routers
            .iter()
            .enumerate()
            .map(|(slot, (&g, &r))| (r, (g, slot)))
            .collect();
        for i in 1..=p.c {
            let st = &mut self.clients[i - 1];
            if let Some(batch) = out.router.get(&i) {
                let (g, slot) = slots[&i];
                st.c = batch.scalar;
                st.mask_k = batch.client_sets.iter().map(|s| s[i - 1].clone()).collect();
                st.router = Some(RouterHoldings {
                    db: g,
                    slot,
                    client_mask_k: batch.client_sets.clone(),
                    client_mask_kl: BTreeMap::new(),
                    router_mask_k: batch.router_sets.clone(),
                    router_mask_col: BTreeMap::new(),
                });
            } else if let Some((c, own)) = out.client.get(&i) {
                st.c = *c;
                st.mask_k = own.clone();
            }
        }

        let mut au1: BTreeMap<(usize, usize), Vec<Vec<S>>> = BTreeMap::new();
        for i in 1..=p.c {
            let g = p.groups[i - 1];
            if self.dropped_clients.contains(&i) || !self.is_live(g) {
                continue;
            }
            let ans = psu_client_answer(&self.clients[i - 1])?;
            for s in self.serving_set(g) {
                let msg = PhaseMessage::new(MessageKind::Au1, Party::Client(i), Party::Database(s), ans.clone());
                if self.late_clients.contains(&i) {
                    self.bus.send_late(PhaseTag::Psu, msg);
                } else {
                    let got = self.bus.send(PhaseTag::Psu, msg, &mut self.factory);
                    au1.entry((s, g)).or_default().push(got);
                }
            }
        }
        self.bus.tick();

        let mut du2: BTreeMap<usize, Vec<S>> = BTreeMap::new();
        for g in self.delivering.clone() {
            let r = self.routers[&g];
            let mut copies = Vec::new();
            for s in self.serving_set(g) {
                let answers = au1.get(&(s, g)).cloned().unwrap_or_default();
                let refs: Vec<&[S]> = answers.iter().map(Vec::as_slice).collect();
                let agg = psu_db_aggregate(self.db(s), &refs)?;
                copies.push(self.send(PhaseTag::Psu, MessageKind::Du2, Party::Database(s), Party::Client(r), agg));
            }
            du2.insert(g, adversary_decode_repetition(&copies, self.a)?);
        }
        self.bus.tick();

        let stranded = self.stranded();
        let missing_slots = self.missing_slots();
        let mut au2: BTreeMap<usize, Vec<Vec<S>>> = BTreeMap::new();
        for g in self.delivering.clone() {
            let r = self.routers[&g];
            let scalar = self.clients[r - 1]
                .c
                .ok_or_else(|| ProtocolError::MissingShare(format!("router {r} has no scalar")))?;
            let h = self.holdings(r);
            let mut ans = psu_route_answer(h, &du2[&g])?;
            let missing = self.missing_in_group(g);
            if !missing.is_empty() {
                ans = dropout_compensation_psu(&self.setup, h, scalar, &ans, &missing);
            }
            if Some(r) == self.lead && (!stranded.is_empty() || !missing_slots.is_empty()) {
                let extra = db_dropout_compensation(&self.setup, h, Phase::Psu { scalar }, &stranded, &missing_slots);
                add_into(&mut ans, &extra);
            }
            for t in self.live.clone() {
                let got = self.send(PhaseTag::Psu, MessageKind::Au2, Party::Client(r), Party::Database(t), ans.clone());
                au2.entry(t).or_default().push(got);
            }
        }
        self.bus.tick();

        let mut decided: Option<BTreeSet<usize>> = None;
        for t in self.live.clone() {
            let routed = au2.get(&t).cloned().unwrap_or_default();
            let refs: Vec<&[S]> = routed.iter().map(Vec::as_slice).collect();
            let u = psu_decode_union(q, self.db(t), &refs)?;
            if self.adversaries.contains(&t) {
                continue;
            }
            match &decided {
                None => decided = Some(u),
                Some(d) if *d != u => {
                    self.events.push(format!("database {t} decodes a different union {u:?}"));
                }
                _ => {}
            }
        }
        self.union = decided.unwrap_or_default();
        self.events.push(format!("union decoded: {:?}", self.union));
        Ok(())
    }

    fn aw2_payload(
        &self,
        g: usize,
        target: usize,
        dw2: &BTreeMap<usize, Vec<S>>,
        fresh: &BTreeMap<usize, RouterFresh<S>>,
    ) -> Result<Vec<S>, ProtocolError> {
        let gamma = &self.union;
        let r = self.routers[&g];
        let h = self.holdings(r);
        let embed = if Some(r) == self.lead {
            Some(&self.clients[r - 1].models)
        } else {
            None
        };
        let mut out = write_route_answer(&self.setup, gamma, h, &dw2[&g], embed, &fresh[&r], target)?;
        let missing = self.missing_in_group(g);
        if !missing.is_empty() {
            add_into(&mut out, &dropout_compensation_write(&self.setup, gamma, h, target, &missing));
        }
        if Some(r) == self.lead {
            let stranded = self.stranded();
            let slots = self.missing_slots();
            if !stranded.is_empty() || !slots.is_empty() {
                let extra = db_dropout_compensation(&self.setup, h, Phase::Write { gamma, target }, &stranded, &slots);
                add_into(&mut out, &extra);
            }
        }
        Ok(out)
    }

    fn write_phase(&mut self, truth: &[Vec<FieldElement>]) -> Result<(), ProtocolError> {
        let p = self.setup.params.clone();
        let pl = self.setup.padded_len();
        let gamma = self.union.clone();
        let keys = write_column_keys(&self.setup, &gamma);
        let shape = CrgShape {
            with_scalar: false,
            client_sets: gamma.len() * pl,
            clients: p.c,
            router_sets: keys.len(),
            routers: self.routers.len(),
        };
        let out = self.crg(shape)?;
        for i in 1..=p.c {
            let st = &mut self.clients[i - 1];
            let own: Vec<S> = if let Some(batch) = out.router.get(&i) {
                let h = st.router.as_mut().expect("router holdings");
                for (ki, &k) in gamma.iter().enumerate() {
                    h.client_mask_kl.insert(k, batch.client_sets[ki * pl..(ki + 1) * pl].to_vec());
                }
                h.router_mask_col = keys.iter().copied().zip(batch.router_sets.iter().cloned()).collect();
                batch.client_sets.iter().map(|s| s[i - 1].clone()).collect()
            } else {
                out.client.get(&i).map(|(_, own)| own.clone()).unwrap_or_default()
            };
            if own.len() == gamma.len() * pl {
                for (ki, &k) in gamma.iter().enumerate() {
                    st.mask_kl.insert(k, own[ki * pl..(ki + 1) * pl].to_vec());
                }
            }
        }

        // Every contributing client downloads the whole union.
        let requests = write_read_positions(&self.setup, &gamma, &self.live, self.a)?;
        let readers: Vec<usize> = self.contributing.iter().copied().collect();
        for &i in &readers {
            let mut replies = BTreeMap::new();
            let dbs: BTreeSet<usize> = requests.iter().map(|r| r.db).collect();
            for d in dbs {
                let reply = write_serve_read(self.db(d), &requests)?;
                let got = self.send(PhaseTag::Write, MessageKind::Dw1, Party::Database(d), Party::Client(i), reply);
                replies.insert(d, got);
            }
            let models = write_decode_models(&self.setup, &gamma, &requests, &replies, self.a)?;
            let ok = models
                .iter()
                .all(|(k, m)| m.iter().map(Symbol::value).eq(truth[k - 1].iter().copied()));
            self.reads.push((i, ok));
            self.clients[i - 1].models = models;
        }
        self.bus.tick();

        let mut aw1: BTreeMap<(usize, usize), Vec<Vec<S>>> = BTreeMap::new();
        for i in 1..=p.c {
            let g = p.groups[i - 1];
            if self.dropped_clients.contains(&i) || !self.is_live(g) {
                continue;
            }
            let ans = write_client_answer(&self.setup, &self.clients[i - 1], &gamma)?;
            for s in self.serving_set(g) {
                let msg = PhaseMessage::new(MessageKind::Aw1, Party::Client(i), Party::Database(s), ans.clone());
                if self.late_clients.contains(&i) {
                    self.bus.send_late(PhaseTag::Write, msg);
                } else {
                    let got = self.bus.send(PhaseTag::Write, msg, &mut self.factory);
                    aw1.entry((s, g)).or_default().push(got);
                }
            }
        }
        self.bus.tick();

        let mut dw2: BTreeMap<usize, Vec<S>> = BTreeMap::new();
        for g in self.delivering.clone() {
            let r = self.routers[&g];
            let mut copies = Vec::new();
            for s in self.serving_set(g) {
                let answers = aw1.get(&(s, g)).cloned().unwrap_or_default();
                let refs: Vec<&[S]> = answers.iter().map(Vec::as_slice).collect();
                let agg = write_db_aggregate(&self.setup, self.db(s), &gamma, &refs)?;
                copies.push(self.send(PhaseTag::Write, MessageKind::Dw2, Party::Database(s), Party::Client(r), agg));
            }
            dw2.insert(g, adversary_decode_repetition(&copies, self.a)?);
        }
        self.bus.tick();

        let mut fresh: BTreeMap<usize, RouterFresh<S>> = BTreeMap::new();
        for g in self.delivering.clone() {
            let r = self.routers[&g];
            let q = self.q;
            let rng = &mut self.rng;
            let f = draw_router_fresh(&self.setup, &gamma, r, || uniform(rng, q), &mut self.factory);
            self.known[r - 1].extend(f.values().flatten().cloned());
            fresh.insert(r, f);
        }
        let targets: Vec<usize> = self.live.iter().chain(&self.failed).copied().sorted().collect();
        let mut aw2: BTreeMap<usize, Vec<Vec<S>>> = BTreeMap::new();
        for g in self.delivering.clone() {
            let r = self.routers[&g];
            for &t in &targets {
                let payload = self.aw2_payload(g, t, &dw2, &fresh)?;
                let got = self.send(PhaseTag::Write, MessageKind::Aw2, Party::Client(r), Party::Database(t), payload);
                aw2.entry(t).or_default().push(got);
            }
        }
        self.bus.tick();

        let n_routed = self.delivering.len();
        let mut pending = BTreeMap::new();
        for t in self.live.clone() {
            let corr = write_cr_correction(&self.setup, &gamma, self.db(t), t, n_routed);
            let refs: Vec<&[S]> = aw2[&t].iter().map(Vec::as_slice).collect();
            pending.insert(t, write_commit_rows(&self.setup, &gamma, t, &refs, &corr)?);
        }
        let router_clients: BTreeSet<usize> = self.routers.values().copied().collect();
        let courier = (1..=p.c).find(|&i| self.active(i) && !router_clients.contains(&i));
        let mut replacement_rows: BTreeMap<usize, BTreeMap<usize, Vec<CodedRow<S>>>> = BTreeMap::new();
        for f in self.failed.clone() {
            let Some(courier) = courier else {
                self.events.push(format!(
                    "no courier for database {f}; its written submodels are rebuilt by repair"
                ));
                continue;
            };
            let holders: Vec<usize> = self.live[..2 * self.a + 1].to_vec();
            let mut copies = Vec::new();
            for h in holders {
                let k = write_cr_correction(&self.setup, &gamma, self.db(h), f, n_routed);
                copies.push(self.send(PhaseTag::Write, MessageKind::CrCorrection, Party::Database(h), Party::Client(courier), k));
            }
            let kappa = adversary_decode_repetition(&copies, self.a)?;
            let kappa = self.send(PhaseTag::Write, MessageKind::CrCorrection, Party::Client(courier), Party::Database(f), kappa);
            let refs: Vec<&[S]> = aw2[&f].iter().map(Vec::as_slice).collect();
            replacement_rows.insert(f, write_commit_rows(&self.setup, &gamma, f, &refs, &kappa)?);
            self.events.push(format!("client {courier} relays the randomness correction to database {f}"));
        }
        for (t, rows) in pending {
            write_commit_storage(self.dbs[t - 1].as_mut().expect("live"), rows);
        }
        self.committed = true;
        self.bus.tick();

        for d in self.dropped_dbs.clone() {
            let mut updates = Vec::new();
            for g in self.delivering.clone() {
                let r = self.routers[&g];
                let payload = self.aw2_payload(g, d, &dw2, &fresh)?;
                updates.push(self.send(PhaseTag::Write, MessageKind::Aw2, Party::Client(r), Party::Database(d), payload));
            }
            let corr = write_cr_correction(&self.setup, &gamma, self.db(d), d, n_routed);
            let refs: Vec<&[S]> = updates.iter().map(Vec::as_slice).collect();
            let rows = write_commit_rows(&self.setup, &gamma, d, &refs, &corr)?;
            write_commit_storage(self.dbs[d - 1].as_mut().expect("dropped database keeps storage"), rows);
            self.events.push(format!("database {d} catches up on the written submodels"));
        }
        self.pending_replacements = replacement_rows;
        Ok(())
    }

    fn repair_phase(&mut self) -> Result<(), ProtocolError> {
        if self.failed.is_empty() {
            return Ok(());
        }
        let p = self.setup.params.clone();
        let q = self.q;
        let helpers: Vec<usize> = self.live[..p.d + 2 * self.a].to_vec();
        let relay = self
            .delivering
            .last()
            .map(|g| self.routers[g])
            .or_else(|| (1..=p.c).find(|&i| self.active(i)))
            .ok_or_else(|| ProtocolError::Abort("no client can relay repair shares".into()))?;
        for f in self.failed.clone() {
            let committed = self.pending_replacements.remove(&f).unwrap_or_default();
            let needed: Vec<usize> = (1..=p.k).filter(|k| !committed.contains_key(k)).collect();
            let mut shares: BTreeMap<(usize, usize), Vec<(usize, S)>> = BTreeMap::new();
            if !needed.is_empty() {
                for &h in &helpers {
                    let mut payload = Vec::with_capacity(needed.len() * self.setup.slots());
                    for &k in &needed {
                        for row in &self.db(h).store[k - 1] {
                            payload.push(repair_share(row, &self.setup.psi, f)?);
                        }
                    }
                    let got = self.send(PhaseTag::Repair, MessageKind::RepairShare, Party::Database(h), Party::Client(relay), payload);
                    let fwd = self.send(PhaseTag::Repair, MessageKind::RepairShare, Party::Client(relay), Party::Database(f), got);
                    let mut it = fwd.into_iter();
                    for &k in &needed {
                        for slot in 0..self.setup.slots() {
                            let s = it.next().ok_or_else(|| ProtocolError::Shape("short repair payload".into()))?;
                            shares.entry((k, slot)).or_default().push((h, s));
                        }
                    }
                }
            }
            let hat_k = vec![S::zero(q); p.k];
            let hat_kl = vec![vec![S::zero(q); self.setup.padded_len()]; p.k];
            let db = repair_failed_database(&self.setup, f, committed, &shares, hat_k, hat_kl, self.a)?;
            self.dbs[f - 1] = Some(db);
            self.events.push(format!(
                "database {f} rebuilt from {} helpers via client {relay}; {} submodels repaired",
                helpers.len(),
                needed.len()
            ));
        }
        Ok(())
    }

    fn crr_phase(&mut self, psu_ran: bool) -> Result<(), ProtocolError> {
        let p = self.setup.params.clone();
        let pl = self.setup.padded_len();
        let all = !self.failed.is_empty();
        let ks: Vec<usize> = if psu_ran || all { (1..=p.k).collect() } else { Vec::new() };
        let kls: Vec<usize> = if all {
            (1..=p.k).collect()
        } else if self.committed {
            self.union.iter().copied().collect()
        } else {
            Vec::new()
        };
        let total = ks.len() + kls.len() * pl;
        if total == 0 {
            return Ok(());
        }
        let active: Vec<usize> = (1..=p.c).filter(|&i| self.active(i)).collect();
        let plan = crr_assignment(&active, total).map_err(|e| ProtocolError::Abort(e.to_string()))?;
        let mut fresh: Vec<Option<S>> = vec![None; total];
        for (c1, c2, range) in plan {
            let mut blocks = Vec::with_capacity(2);
            for c in [c1, c2] {
                let v: Vec<S> = range.clone().map(|_| self.var(VarKind::CrrShare { client: c })).collect();
                self.known[c - 1].extend(v.iter().cloned());
                blocks.push(v);
            }
            for t in 1..=p.n {
                for (c, b) in [c1, c2].into_iter().zip(&blocks) {
                    self.send(PhaseTag::Crr, MessageKind::CrrShare, Party::Client(c), Party::Database(t), b.clone());
                }
            }
            for (i, idx) in range.enumerate() {
                fresh[idx] = Some(crr_refresh(&blocks[0][i], &blocks[1][i]));
            }
        }
        let fresh: Vec<S> = fresh.into_iter().map(|s| s.expect("every symbol assigned")).collect();
        for db in self.dbs.iter_mut().flatten() {
            for (t, &k) in ks.iter().enumerate() {
                db.hat_k[k - 1] = fresh[t].clone();
            }
            for (t, &k) in kls.iter().enumerate() {
                let base = ks.len() + t * pl;
                db.hat_kl[k - 1] = fresh[base..base + pl].to_vec();
            }
        }
        self.events.push(format!("{total} server randomness symbols refreshed"));
        Ok(())
    }
}

/// Everything needed to evaluate privacy of one round.
pub struct Audit<'a, S> {
    pub setup: &'a Setup,
    pub log: &'a [LogEntry<S>],
    pub start: &'a [Option<DatabaseState<S>>],
    pub end: &'a [Option<DatabaseState<S>>],
    pub known: &'a [Vec<S>],
    pub contributing: &'a BTreeSet<usize>,
    pub union: &'a BTreeSet<usize>,
}

type Sparse = Vec<(u32, u32)>;

fn forms<'s, S: Symbol + 's>(syms: impl IntoIterator<Item = &'s S>) -> Vec<Sparse> {
    syms.into_iter().filter_map(|s| s.form().map(sparse)).collect()
}

fn storage_symbols<S>(db: &DatabaseState<S>) -> impl Iterator<Item = &S> {
    db.store
        .iter()
        .flatten()
        .flat_map(|r| r.symbols.iter())
        .chain(db.hat_k.iter())
        .chain(db.hat_kl.iter().flatten())
}

impl<S: Symbol> Audit<'_, S> {
    /// Storage at both ends of the round plus all traffic touching `set`.
    pub fn database_view(&self, set: &BTreeSet<usize>, include_late: bool) -> Vec<Sparse> {
        let mut out = Vec::new();
        for &j in set {
            for snap in [self.start, self.end] {
                if let Some(db) = snap.get(j - 1).and_then(Option::as_ref) {
                    out.extend(forms(storage_symbols(db)));
                }
            }
        }
        let touches = |p: Party| matches!(p, Party::Database(j) if set.contains(&j));
        for e in self.log {
            if (include_late || !e.late) && (touches(e.msg.sender) || touches(e.msg.receiver)) {
                out.extend(forms(&e.msg.payload));
            }
        }
        out
    }

    /// Traffic to or from `client` plus the symbols it generated.
    pub fn client_view(&self, client: usize) -> Vec<Sparse> {
        let me = Party::Client(client);
        let mut out: Vec<Sparse> = forms(&self.known[client - 1]);
        for e in self.log {
            if e.msg.sender == me || e.msg.receiver == me {
                out.extend(forms(&e.msg.payload));
            }
        }
        out
    }

    /// Model symbols of the updated model revealed to `set`.
    pub fn eavesdropper_leakage(&self, reg: &VarRegistry, set: &BTreeSet<usize>, include_late: bool) -> usize {
        let q = self.setup.q();
        let mut increments: BTreeMap<(usize, usize), Vec<u32>> = BTreeMap::new();
        for v in 0..reg.len() as u32 {
            if let VarKind::Delta { client, k, pos } = reg.kind(v) {
                if self.contributing.contains(&client) && self.union.contains(&k) {
                    increments.entry((k, pos)).or_default().push(v);
                }
            }
        }
        let view: Vec<Sparse> = self
            .database_view(set, include_late)
            .iter()
            .map(|f| to_updated_basis(f, reg, &increments, q))
            .collect();
        mutual_information(q, &view, |v| matches!(reg.kind(v), VarKind::Model { .. }))
    }

    /// Symbols about increments and selections that `set` learns beyond the
    /// per-submodel totals of the contributing clients.
    pub fn database_privacy_leakage(&self, reg: &VarRegistry, set: &BTreeSet<usize>) -> usize {
        let q = self.setup.q();
        let mut given: BTreeMap<(usize, usize, bool), Sparse> = BTreeMap::new();
        for v in 0..reg.len() as u32 {
            match reg.kind(v) {
                VarKind::Delta { client, k, pos } if self.contributing.contains(&client) && self.union.contains(&k) => {
                    given.entry((k, pos, false)).or_default().push((v, 1));
                }
                VarKind::Incidence { client, k } if self.contributing.contains(&client) => {
                    given.entry((k, 0, true)).or_default().push((v, 1));
                }
                _ => {}
            }
        }
        let given: Vec<Sparse> = given.into_values().collect();
        let secret = vars_where(reg, |k| matches!(k, VarKind::Delta { .. } | VarKind::Incidence { .. }));
        conditional_information(q, &self.database_view(set, true), &given, |v| secret.contains(&v))
    }

    /// Symbols about other clients' increments and selections that `client` learns.
    pub fn inter_client_leakage(&self, reg: &VarRegistry, client: usize) -> usize {
        let secret = vars_where(reg, |k| match k {
            VarKind::Delta { client: c, .. } | VarKind::Incidence { client: c, .. } => c != client,
            _ => false,
        });
        mutual_information(self.setup.q(), &self.client_view(client), |v| secret.contains(&v))
    }

    fn evaluate(&self, reg: &VarRegistry, faults: &FaultConfig) -> (Verdict, Verdict, Verdict, LeakageSummary) {
        let p = &self.setup.params;
        let all: Vec<usize> = (1..=p.n).collect();

        let db_privacy = if p.j == 0 {
            Verdict::skipped("no colluding databases")
        } else {
            let bad: Vec<(Vec<usize>, usize)> = all
                .iter()
                .copied()
                .combinations(p.j)
                .map(|s| {
                    let l = self.database_privacy_leakage(reg, &s.iter().copied().collect());
                    (s, l)
                })
                .filter(|(_, l)| *l > 0)
                .collect();
            Verdict::check(
                bad.is_empty(),
                if bad.is_empty() {
                    format!("every {}-subset learns only the aggregate", p.j)
                } else {
                    format!("leaking subsets: {bad:?}")
                },
            )
        };

        let bad: Vec<(usize, usize)> = (1..=p.c)
            .map(|i| (i, self.inter_client_leakage(reg, i)))
            .filter(|(_, l)| *l > 0)
            .collect();
        let inter = Verdict::check(
            bad.is_empty(),
            if bad.is_empty() {
                format!("{} clients learn nothing of other clients' inputs", p.c)
            } else {
                format!("leaking clients: {bad:?}")
            },
        );

        let secret_symbols = p.k * p.l;
        let sets: Vec<Vec<usize>> = if !faults.eavesdropper.is_empty() {
            vec![faults.eavesdropper.iter().copied().sorted().collect()]
        } else if p.e == 0 {
            Vec::new()
        } else {
            all.iter().copied().combinations(p.e).collect()
        };
        let mut measured = Vec::new();
        let mut max: Option<Rational> = None;
        for s in sets {
            let leaked = self.eavesdropper_leakage(reg, &s.iter().copied().collect(), true);
            let f = Rational::new(leaked as i64, secret_symbols as i64);
            max = Some(max.map_or(f, |m| m.max(f)));
            measured.push(SetLeakage {
                databases: s,
                leaked_symbols: leaked,
                fraction: fmt_rational(&f),
            });
        }
        let eaves = match max {
            None => Verdict::skipped("no eavesdropper"),
            Some(m) => Verdict::check(
                m <= p.delta,
                format!(
                    "max leakage fraction {} of {} model symbols over {} sets, bound {}",
                    fmt_rational(&m),
                    secret_symbols,
                    measured.len(),
                    fmt_rational(&p.delta)
                ),
            ),
        };
        let summary = LeakageSummary {
            bound: fmt_rational(&p.delta),
            secret_symbols,
            max_fraction: max.map(|m| fmt_rational(&m)),
            sets: measured,
        };
        (db_privacy, inter, eaves, summary)
    }
}
