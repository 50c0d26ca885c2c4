//! Private union of the clients' submodel selections.

use std::collections::BTreeSet;

use super::{ClientState, DatabaseState, ProtocolError, RouterHoldings};
use crate::field::FieldModulus;
use crate::symbol::Symbol;

fn scalar<S>(client: &ClientState<S>) -> Result<crate::field::FieldElement, ProtocolError> {
    client
        .c
        .ok_or_else(|| ProtocolError::MissingShare(format!("client {} has no scalar", client.id)))
}

/// `c (Y_k + w_k)` for every submodel.
pub fn psu_client_answer<S: Symbol>(client: &ClientState<S>) -> Result<Vec<S>, ProtocolError> {
    let c = scalar(client)?;
    if client.mask_k.len() != client.incidence.len() {
        return Err(ProtocolError::MissingShare(format!(
            "client {} holds {} selection masks for {} submodels",
            client.id,
            client.mask_k.len(),
            client.incidence.len()
        )));
    }
    Ok(client
        .incidence
        .iter()
        .zip(&client.mask_k)
        .map(|(y, w)| y.plus(w).times(c))
        .collect())
}

/// Sum of the group's answers plus the database's plain randomness.
pub fn psu_db_aggregate<S: Symbol>(
    db: &DatabaseState<S>,
    answers: &[&[S]],
) -> Result<Vec<S>, ProtocolError> {
    let k = db.hat_k.len();
    if answers.iter().any(|a| a.len() != k) {
        return Err(ProtocolError::Shape("selection answer has the wrong length".into()));
    }
    Ok((0..k)
        .map(|t| answers.iter().fold(db.hat_k[t].clone(), |acc, a| acc.plus(&a[t])))
        .collect())
}

/// The aggregate plus this router's element of each router-side set.
pub fn psu_route_answer<S: Symbol>(router: &RouterHoldings<S>, du2: &[S]) -> Result<Vec<S>, ProtocolError> {
    if du2.len() != router.router_mask_k.len() {
        return Err(ProtocolError::Shape("group aggregate has the wrong length".into()));
    }
    Ok(du2
        .iter()
        .zip(&router.router_mask_k)
        .map(|(v, set)| v.plus(&set[router.slot]))
        .collect())
}

/// Submodels whose routed total differs from `n_routed` copies of the
/// plain randomness.
pub fn psu_decode_union<S: Symbol>(
    q: FieldModulus,
    db: &DatabaseState<S>,
    routed: &[&[S]],
) -> Result<BTreeSet<usize>, ProtocolError> {
    let k = db.hat_k.len();
    if routed.iter().any(|a| a.len() != k) {
        return Err(ProtocolError::Shape("routed answer has the wrong length".into()));
    }
    let n = q.elem(routed.len() as u64);
    Ok((0..k)
        .filter(|&t| {
            let total = routed.iter().fold(S::zero(q), |acc, a| acc.plus(&a[t]));
            !total.minus(&db.hat_k[t].times(n)).value().is_zero()
        })
        .map(|t| t + 1)
        .collect())
}
