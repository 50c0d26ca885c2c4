//! Compensation for missing clients and databases, and rebuilding a failed
//! database.

use std::collections::{BTreeMap, BTreeSet};

use super::robust::adversary_decode_rs;
use super::{DatabaseState, ProtocolError, RouterHoldings, Setup};
use crate::codec::{repair_assemble, Cell, CodedRow};
use crate::symbol::{combine, sum, Symbol};

/// Adds `c * sum_{i missing} w_k^<i>` to a routed selection answer so that
/// the client-side masks still cancel.
pub fn dropout_compensation_psu<S: Symbol>(
    setup: &Setup,
    router: &RouterHoldings<S>,
    scalar: crate::field::FieldElement,
    au2: &[S],
    missing_clients: &[usize],
) -> Vec<S> {
    let q = setup.q();
    au2.iter()
        .enumerate()
        .map(|(t, v)| {
            let set = &router.client_mask_k[t];
            let w = sum(q, missing_clients.iter().map(|&i| &set[i - 1]));
            v.plus(&w.times(scalar))
        })
        .collect()
}

/// Per `(submodel, slot, column)` term that cancels the update masks of
/// missing clients in database `target`'s sum.
pub fn dropout_compensation_write<S: Symbol>(
    setup: &Setup,
    gamma: &BTreeSet<usize>,
    router: &RouterHoldings<S>,
    target: usize,
    missing_clients: &[usize],
) -> Vec<S> {
    let q = setup.q();
    let d = setup.dim();
    let psi = setup.psi_row(target);
    let mut out = Vec::new();
    for &k in gamma {
        let sets = &router.client_mask_kl[&k];
        for (slot, info) in setup.chunking.slots.iter().enumerate() {
            let layout = setup.slot_layout(slot);
            for c in 0..d {
                let terms = (0..d).filter_map(|r| match layout.cell(r, c) {
                    Cell::Message(i) => {
                        let set = &sets[info.offset + i];
                        Some((psi[r], sum(q, missing_clients.iter().map(|&m| &set[m - 1]))))
                    }
                    Cell::Randomness(_) => None,
                });
                out.push(combine(q, terms));
            }
        }
    }
    out
}

/// Which phase a database drop-out is compensated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase<'a> {
    Psu { scalar: crate::field::FieldElement },
    Write { gamma: &'a BTreeSet<usize>, target: usize },
}

/// Compensation for routers that could not deliver because their database
/// is silent: the masks of the stranded clients plus the missing routers'
/// elements of every router-side set.
pub fn db_dropout_compensation<S: Symbol>(
    setup: &Setup,
    router: &RouterHoldings<S>,
    phase: Phase<'_>,
    stranded_clients: &[usize],
    missing_slots: &[usize],
) -> Vec<S> {
    let q = setup.q();
    match phase {
        Phase::Psu { scalar } => {
            let k = router.router_mask_k.len();
            let zero = vec![S::zero(q); k];
            dropout_compensation_psu(setup, router, scalar, &zero, stranded_clients)
                .into_iter()
                .enumerate()
                .map(|(t, v)| v.plus(&sum(q, missing_slots.iter().map(|&s| &router.router_mask_k[t][s]))))
                .collect()
        }
        Phase::Write { gamma, target } => {
            let d = setup.dim();
            let mut out = dropout_compensation_write(setup, gamma, router, target, stranded_clients);
            let mut idx = 0;
            for &k in gamma {
                for slot in 0..setup.slots() {
                    for c in 0..d {
                        if let Some(set) = router.router_mask_col.get(&(k, slot, c)) {
                            let extra = sum(q, missing_slots.iter().map(|&s| &set[s]));
                            out[idx] = out[idx].plus(&extra);
                        }
                        idx += 1;
                    }
                }
            }
            out
        }
    }
}

/// Adds a compensation vector into a payload.
pub fn add_into<S: Symbol>(payload: &mut [S], extra: &[S]) {
    for (p, e) in payload.iter_mut().zip(extra) {
        *p = p.plus(e);
    }
}

/// Assembles a replacement database. Rows of written submodels come from
/// the committed update stream; the other rows are rebuilt from helper
/// shares (`D` of them, or `D + 2a` decoded with error correction).
pub fn repair_failed_database<S: Symbol>(
    setup: &Setup,
    failed: usize,
    committed: BTreeMap<usize, Vec<CodedRow<S>>>,
    shares: &BTreeMap<(usize, usize), Vec<(usize, S)>>,
    hat_k: Vec<S>,
    hat_kl: Vec<Vec<S>>,
    a: usize,
) -> Result<DatabaseState<S>, ProtocolError> {
    let q = setup.q();
    let d = setup.dim();
    let mut store = Vec::with_capacity(setup.params.k);
    let mut committed = committed;
    for k in 1..=setup.params.k {
        if let Some(rows) = committed.remove(&k) {
            store.push(rows);
            continue;
        }
        let mut rows = Vec::with_capacity(setup.slots());
        for slot in 0..setup.slots() {
            let sh = shares
                .get(&(k, slot))
                .ok_or_else(|| ProtocolError::MissingShare(format!("no repair shares for submodel {k}")))?;
            let row = if a == 0 {
                repair_assemble(sh, &setup.psi, failed, slot)?
            } else {
                let pts: Vec<_> = sh.iter().map(|(db, s)| (setup.psi_row(*db)[1], s.clone())).collect();
                let symbols = adversary_decode_rs(q, &pts, d, a)?;
                CodedRow {
                    db: failed,
                    instance: slot,
                    symbols,
                }
            };
            rows.push(row);
        }
        store.push(rows);
    }
    Ok(DatabaseState {
        id: failed,
        store,
        hat_k,
        hat_kl,
    })
}
