//! Reading, aggregating and committing submodel updates.

use std::collections::{BTreeMap, BTreeSet};

use super::robust::adversary_decode_rs;
use super::{ClientState, ColumnKey, DatabaseState, ProtocolError, RouterHoldings, Setup};
use crate::codec::{decode_download, download_plan, reader_order, Cell, CodedRow};
use crate::symbol::{combine, Symbol, VarKind};

/// Leading `columns` symbols of one stored row, requested by a client.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadRequest {
    pub db: usize,
    pub k: usize,
    pub slot: usize,
    pub columns: usize,
}

/// Symbols a client fetches to rebuild the submodels in `gamma` from
/// `candidates` (live databases, in preference order). Without Byzantine
/// databases this is the reduced download of each instance; with `a > 0`
/// every one of `D + 2a` databases sends the full download width.
pub fn write_read_positions(
    setup: &Setup,
    gamma: &BTreeSet<usize>,
    candidates: &[usize],
    a: usize,
) -> Result<Vec<ReadRequest>, ProtocolError> {
    let d = setup.dim();
    let need = d + 2 * a;
    if candidates.len() < need {
        return Err(ProtocolError::TooManyFaults(format!(
            "reading needs {need} live databases, {} available",
            candidates.len()
        )));
    }
    let mut out = Vec::new();
    let order = if a == 0 {
        reader_order(&setup.psi, &candidates[..d])
    } else {
        candidates[..need].to_vec()
    };
    for &k in gamma {
        for slot in 0..setup.slots() {
            let layout = setup.slot_layout(slot);
            if a == 0 {
                for (db, columns) in download_plan(layout, &order) {
                    out.push(ReadRequest { db, k, slot, columns });
                }
            } else {
                let columns = layout.download_width();
                if columns > 0 {
                    out.extend(order.iter().map(|&db| ReadRequest { db, k, slot, columns }));
                }
            }
        }
    }
    Ok(out)
}

/// The database's reply to the requests addressed to it, in order.
pub fn write_serve_read<S: Symbol>(db: &DatabaseState<S>, requests: &[ReadRequest]) -> Result<Vec<S>, ProtocolError> {
    let mut out = Vec::new();
    for r in requests.iter().filter(|r| r.db == db.id) {
        let row = db
            .store
            .get(r.k - 1)
            .and_then(|rows| rows.get(r.slot))
            .ok_or_else(|| ProtocolError::Shape(format!("database {} has no row for submodel {}", db.id, r.k)))?;
        out.extend_from_slice(&row.symbols[..r.columns]);
    }
    Ok(out)
}

/// Rebuilds the padded submodels from the replies to
/// [`write_read_positions`].
pub fn write_decode_models<S: Symbol>(
    setup: &Setup,
    gamma: &BTreeSet<usize>,
    requests: &[ReadRequest],
    replies: &BTreeMap<usize, Vec<S>>,
    a: usize,
) -> Result<BTreeMap<usize, Vec<S>>, ProtocolError> {
    let q = setup.q();
    let d = setup.dim();
    let mut cursor: BTreeMap<usize, usize> = BTreeMap::new();
    let mut parts: BTreeMap<(usize, usize), Vec<(usize, Vec<S>)>> = BTreeMap::new();
    for r in requests {
        let reply = replies
            .get(&r.db)
            .ok_or_else(|| ProtocolError::MissingShare(format!("no read reply from database {}", r.db)))?;
        let at = cursor.entry(r.db).or_insert(0);
        let syms = reply
            .get(*at..*at + r.columns)
            .ok_or_else(|| ProtocolError::Shape(format!("short read reply from database {}", r.db)))?;
        *at += r.columns;
        parts.entry((r.k, r.slot)).or_default().push((r.db, syms.to_vec()));
    }
    let mut models = BTreeMap::new();
    for &k in gamma {
        let mut model = vec![S::zero(q); setup.padded_len()];
        for (slot, info) in setup.chunking.slots.iter().enumerate() {
            let layout = setup.slot_layout(slot);
            if layout.messages() == 0 {
                continue;
            }
            let download = parts
                .get(&(k, slot))
                .ok_or_else(|| ProtocolError::MissingShare(format!("no reads for submodel {k}")))?;
            let msgs = if a == 0 {
                decode_download(layout, &setup.psi, download)?
            } else {
                let width = layout.download_width();
                let mut cols = Vec::with_capacity(width);
                for c in 0..width {
                    let pts: Vec<_> = download
                        .iter()
                        .map(|(db, s)| (setup.psi_row(*db)[1], s[c].clone()))
                        .collect();
                    cols.push(adversary_decode_rs(q, &pts, d, a)?);
                }
                (0..layout.messages())
                    .map(|i| {
                        let (r, c) = layout.message_position(i);
                        cols[c][r].clone()
                    })
                    .collect()
            };
            for (i, m) in msgs.into_iter().enumerate() {
                model[info.offset + i] = m;
            }
        }
        models.insert(k, model);
    }
    Ok(models)
}

/// `Delta_{k,l} + w_{k,l}` for each submodel of the union, padded length.
/// Submodels the client did not select contribute a masked zero.
pub fn write_client_answer<S: Symbol>(
    setup: &Setup,
    client: &ClientState<S>,
    gamma: &BTreeSet<usize>,
) -> Result<Vec<S>, ProtocolError> {
    let q = setup.q();
    let p = setup.padded_len();
    let mut out = Vec::with_capacity(gamma.len() * p);
    for &k in gamma {
        let masks = client
            .mask_kl
            .get(&k)
            .ok_or_else(|| ProtocolError::MissingShare(format!("client {} lacks masks for submodel {k}", client.id)))?;
        for t in 0..p {
            let delta = client.increments.get(&k).map_or_else(|| S::zero(q), |v| v[t].clone());
            out.push(delta.plus(&masks[t]));
        }
    }
    Ok(out)
}

/// Sum of the group's answers plus the plain randomness of each symbol.
pub fn write_db_aggregate<S: Symbol>(
    setup: &Setup,
    db: &DatabaseState<S>,
    gamma: &BTreeSet<usize>,
    answers: &[&[S]],
) -> Result<Vec<S>, ProtocolError> {
    let p = setup.padded_len();
    let len = gamma.len() * p;
    if answers.iter().any(|a| a.len() != len) {
        return Err(ProtocolError::Shape("update answer has the wrong length".into()));
    }
    let mut out = Vec::with_capacity(len);
    for (ki, &k) in gamma.iter().enumerate() {
        for t in 0..p {
            let idx = ki * p + t;
            out.push(answers.iter().fold(db.hat_kl[k - 1][t].clone(), |acc, a| acc.plus(&a[idx])));
        }
    }
    Ok(out)
}

/// Columns of the written submodels that carry only messages; each gets a
/// router-side zero-sum set.
pub fn write_column_keys(setup: &Setup, gamma: &BTreeSet<usize>) -> Vec<ColumnKey> {
    let mut keys = Vec::new();
    for &k in gamma {
        for slot in 0..setup.slots() {
            let layout = setup.slot_layout(slot);
            for c in 0..layout.dim() {
                if layout.column_all_messages(c) {
                    keys.push((k, slot, c));
                }
            }
        }
    }
    keys
}

/// Randomness a router places in the next message matrices, per
/// `(submodel, slot)`.
pub type RouterFresh<S> = BTreeMap<(usize, usize), Vec<S>>;

pub fn draw_router_fresh<S: Symbol>(
    setup: &Setup,
    gamma: &BTreeSet<usize>,
    client: usize,
    mut draw: impl FnMut() -> crate::field::FieldElement,
    factory: &mut S::Factory,
) -> RouterFresh<S> {
    let mut out = BTreeMap::new();
    for &k in gamma {
        for slot in 0..setup.slots() {
            let n = setup.slot_layout(slot).randomness();
            let v = (0..n)
                .map(|_| S::variable(factory, draw(), VarKind::RouterFresh { client }))
                .collect();
            out.insert((k, slot), v);
        }
    }
    out
}

fn aw2_len(setup: &Setup, gamma: &BTreeSet<usize>) -> usize {
    gamma.len() * setup.slots() * setup.dim()
}

/// Router update for database `target`: the target's view
/// `psi_target^T X` of the router's share `X` of the next message matrix.
/// Message cells of `X` hold the group aggregate (plus the current model
/// for the embedding router); randomness cells hold fresh symbols.
#[allow(clippy::too_many_arguments)]
pub fn write_route_answer<S: Symbol>(
    setup: &Setup,
    gamma: &BTreeSet<usize>,
    router: &RouterHoldings<S>,
    dw2: &[S],
    embed: Option<&BTreeMap<usize, Vec<S>>>,
    fresh: &RouterFresh<S>,
    target: usize,
) -> Result<Vec<S>, ProtocolError> {
    let q = setup.q();
    let p = setup.padded_len();
    let d = setup.dim();
    if dw2.len() != gamma.len() * p {
        return Err(ProtocolError::Shape("group aggregate has the wrong length".into()));
    }
    let psi = setup.psi_row(target);
    let mut out = Vec::with_capacity(aw2_len(setup, gamma));
    for (ki, &k) in gamma.iter().enumerate() {
        let model = match embed {
            Some(m) => Some(
                m.get(&k)
                    .ok_or_else(|| ProtocolError::MissingShare(format!("embedding router lacks submodel {k}")))?,
            ),
            None => None,
        };
        for (slot, info) in setup.chunking.slots.iter().enumerate() {
            let layout = setup.slot_layout(slot);
            let rand = &fresh[&(k, slot)];
            let x = |r: usize, c: usize| -> S {
                match layout.cell(r, c) {
                    Cell::Message(i) => {
                        let pos = info.offset + i;
                        let agg = dw2[ki * p + pos].clone();
                        match model {
                            Some(m) => agg.plus(&m[pos]),
                            None => agg,
                        }
                    }
                    Cell::Randomness(i) => rand[i].clone(),
                }
            };
            for c in 0..d {
                let mut v = combine(q, (0..d).map(|r| (psi[r], x(r, c))));
                if let Some(set) = router.router_mask_col.get(&(k, slot, c)) {
                    v = v.plus(&set[router.slot]);
                }
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// Plain-randomness term a database removes after summing the router
/// updates: `sum over message cells of psi_target * n_routed * hat_R`.
pub fn write_cr_correction<S: Symbol>(
    setup: &Setup,
    gamma: &BTreeSet<usize>,
    holder: &DatabaseState<S>,
    target: usize,
    n_routed: usize,
) -> Vec<S> {
    let q = setup.q();
    let d = setup.dim();
    let n = q.elem(n_routed as u64);
    let psi = setup.psi_row(target);
    let mut out = Vec::with_capacity(aw2_len(setup, gamma));
    for &k in gamma {
        for (slot, info) in setup.chunking.slots.iter().enumerate() {
            let layout = setup.slot_layout(slot);
            for c in 0..d {
                let terms = (0..d).filter_map(|r| match layout.cell(r, c) {
                    Cell::Message(i) => Some((psi[r] * n, holder.hat_kl[k - 1][info.offset + i].clone())),
                    Cell::Randomness(_) => None,
                });
                out.push(combine(q, terms));
            }
        }
    }
    out
}

/// New coded rows of the written submodels: the sum of the router
/// updates minus the plain-randomness correction.
pub fn write_commit_rows<S: Symbol>(
    setup: &Setup,
    gamma: &BTreeSet<usize>,
    target: usize,
    updates: &[&[S]],
    correction: &[S],
) -> Result<BTreeMap<usize, Vec<CodedRow<S>>>, ProtocolError> {
    let q = setup.q();
    let d = setup.dim();
    let len = aw2_len(setup, gamma);
    if updates.is_empty() {
        return Err(ProtocolError::MissingShare("no router updates arrived".into()));
    }
    if correction.len() != len || updates.iter().any(|u| u.len() != len) {
        return Err(ProtocolError::Shape("router update has the wrong length".into()));
    }
    let mut out = BTreeMap::new();
    for (ki, &k) in gamma.iter().enumerate() {
        let rows = (0..setup.slots())
            .map(|slot| {
                let base = (ki * setup.slots() + slot) * d;
                let symbols = (0..d)
                    .map(|c| {
                        let idx = base + c;
                        let total = updates.iter().fold(S::zero(q), |acc, u| acc.plus(&u[idx]));
                        total.minus(&correction[idx])
                    })
                    .collect();
                CodedRow {
                    db: target,
                    instance: slot,
                    symbols,
                }
            })
            .collect();
        out.insert(k, rows);
    }
    Ok(out)
}

/// Replaces the stored rows of the written submodels.
pub fn write_commit_storage<S: Symbol>(db: &mut DatabaseState<S>, rows: BTreeMap<usize, Vec<CodedRow<S>>>) {
    for (k, r) in rows {
        db.store[k - 1] = r;
    }
}
