//! Common-randomness generation and refresh.

use super::ProtocolError;
use crate::field::{FieldElement, FieldModulus};
use crate::symbol::{sum, Symbol};

/// Sizes of one generation batch: `client_sets` sets shared by `clients`
/// clients and `router_sets` sets shared by `routers` routing clients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrgShape {
    pub with_scalar: bool,
    pub client_sets: usize,
    pub clients: usize,
    pub router_sets: usize,
    pub routers: usize,
}

impl CrgShape {
    /// Symbols one contributor draws.
    pub fn draw_len(&self) -> usize {
        self.with_scalar as usize
            + self.client_sets * self.clients.saturating_sub(1)
            + self.router_sets * self.routers.saturating_sub(1)
    }
}

/// Who receives a contributor's payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrgRecipient {
    Router,
    /// A client that is not a router, at position `pos` among all clients.
    Client { pos: usize },
}

/// One contributor's draw, flattened as `[scalar?, client sets.., router sets..]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrgDraw<S> {
    pub shape: CrgShape,
    pub symbols: Vec<S>,
}

impl<S: Symbol> CrgDraw<S> {
    pub fn new(shape: CrgShape, symbols: Vec<S>) -> Result<Self, ProtocolError> {
        if symbols.len() != shape.draw_len() {
            return Err(ProtocolError::Shape(format!(
                "draw has {} symbols, shape needs {}",
                symbols.len(),
                shape.draw_len()
            )));
        }
        if shape.with_scalar && symbols[0].value().is_zero() {
            return Err(ProtocolError::Shape("scalar contribution must be nonzero".into()));
        }
        Ok(CrgDraw { shape, symbols })
    }

    fn client_set(&self, s: usize) -> &[S] {
        let w = self.shape.clients.saturating_sub(1);
        let start = self.shape.with_scalar as usize + s * w;
        &self.symbols[start..start + w]
    }

    /// The part of the draw sent to `to`. Routers receive everything, the
    /// last client receives every client-set symbol, other clients one
    /// symbol per client set.
    pub fn payload_for(&self, to: CrgRecipient) -> Vec<S> {
        match to {
            CrgRecipient::Router => self.symbols.clone(),
            CrgRecipient::Client { pos } => {
                let mut out = Vec::new();
                if self.shape.with_scalar {
                    out.push(self.symbols[0].clone());
                }
                let last = pos + 1 == self.shape.clients;
                for s in 0..self.shape.client_sets {
                    let set = self.client_set(s);
                    if last {
                        out.extend_from_slice(set);
                    } else {
                        out.push(set[pos].clone());
                    }
                }
                out
            }
        }
    }
}

/// Sums the contributors' length-`L-1` vectors and appends the negated
/// total, giving a length-`L` set that sums to zero.
pub fn crg_zero_sum_set<S: Symbol>(q: FieldModulus, contributions: &[&[S]]) -> Result<Vec<S>, ProtocolError> {
    let first = contributions
        .first()
        .ok_or_else(|| ProtocolError::MissingShare("no contributions".into()))?;
    let w = first.len();
    if contributions.iter().any(|c| c.len() != w) {
        return Err(ProtocolError::Shape("contributions differ in length".into()));
    }
    let mut set: Vec<S> = (0..w)
        .map(|t| contributions.iter().fold(S::zero(q), |acc, c| acc.plus(&c[t])))
        .collect();
    let total = sum(q, set.iter());
    set.push(total.negated());
    Ok(set)
}

/// Product of the contributors' nonzero scalars.
pub fn crg_scalar_c(q: FieldModulus, contributions: &[FieldElement]) -> Result<FieldElement, ProtocolError> {
    if contributions.is_empty() {
        return Err(ProtocolError::MissingShare("no scalar contributions".into()));
    }
    if contributions.iter().any(|c| c.is_zero()) {
        return Err(ProtocolError::Shape("scalar contribution must be nonzero".into()));
    }
    Ok(contributions.iter().fold(q.one(), |acc, &c| acc * c))
}

/// What a router learns from one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct RouterBatch<S> {
    pub scalar: Option<FieldElement>,
    /// Full client-side sets, each of length `clients`.
    pub client_sets: Vec<Vec<S>>,
    /// Full router-side sets, each of length `routers`.
    pub router_sets: Vec<Vec<S>>,
}

fn scalar_of<S: Symbol>(q: FieldModulus, shape: &CrgShape, payloads: &[Vec<S>]) -> Result<Option<FieldElement>, ProtocolError> {
    if !shape.with_scalar {
        return Ok(None);
    }
    let parts: Vec<FieldElement> = payloads.iter().map(|p| p[0].value()).collect();
    crg_scalar_c(q, &parts).map(Some)
}

/// Assembles a router's holdings from every contributor's payload.
pub fn crg_router_assemble<S: Symbol>(
    q: FieldModulus,
    shape: &CrgShape,
    payloads: &[Vec<S>],
) -> Result<RouterBatch<S>, ProtocolError> {
    if payloads.iter().any(|p| p.len() != shape.draw_len()) {
        return Err(ProtocolError::Shape("router payload has the wrong length".into()));
    }
    let scalar = scalar_of(q, shape, payloads)?;
    let base = shape.with_scalar as usize;
    let cw = shape.clients.saturating_sub(1);
    let rw = shape.routers.saturating_sub(1);
    let mut client_sets = Vec::with_capacity(shape.client_sets);
    for s in 0..shape.client_sets {
        let parts: Vec<&[S]> = payloads.iter().map(|p| &p[base + s * cw..base + (s + 1) * cw]).collect();
        client_sets.push(crg_zero_sum_set(q, &parts)?);
    }
    let rbase = base + shape.client_sets * cw;
    let mut router_sets = Vec::with_capacity(shape.router_sets);
    for s in 0..shape.router_sets {
        let parts: Vec<&[S]> = payloads.iter().map(|p| &p[rbase + s * rw..rbase + (s + 1) * rw]).collect();
        router_sets.push(crg_zero_sum_set(q, &parts)?);
    }
    Ok(RouterBatch {
        scalar,
        client_sets,
        router_sets,
    })
}

/// A non-router client's scalar and its element of each client-side set.
pub fn crg_client_assemble<S: Symbol>(
    q: FieldModulus,
    shape: &CrgShape,
    pos: usize,
    payloads: &[Vec<S>],
) -> Result<(Option<FieldElement>, Vec<S>), ProtocolError> {
    let scalar = scalar_of(q, shape, payloads)?;
    let base = shape.with_scalar as usize;
    let last = pos + 1 == shape.clients;
    let cw = shape.clients.saturating_sub(1);
    let per_set = if last { cw } else { 1 };
    if payloads.iter().any(|p| p.len() != base + shape.client_sets * per_set) {
        return Err(ProtocolError::Shape("client payload has the wrong length".into()));
    }
    let mut own = Vec::with_capacity(shape.client_sets);
    for s in 0..shape.client_sets {
        let sym = if last {
            let parts: Vec<&[S]> = payloads
                .iter()
                .map(|p| &p[base + s * cw..base + (s + 1) * cw])
                .collect();
            crg_zero_sum_set(q, &parts)?.pop().expect("set is nonempty")
        } else {
            payloads.iter().fold(S::zero(q), |acc, p| acc.plus(&p[base + s]))
        };
        own.push(sym);
    }
    Ok((scalar, own))
}

/// New plain server randomness from the two shares of a client pair.
pub fn crr_refresh<S: Symbol>(share1: &S, share2: &S) -> S {
    share1.plus(share2)
}

/// Splits `symbols` refreshable values into contiguous blocks, one per
/// client pair `(2t-1, 2t)` of the given clients. Returns
/// `(first, second, range)` per pair.
pub fn crr_assignment(clients: &[usize], symbols: usize) -> Result<Vec<(usize, usize, std::ops::Range<usize>)>, ProtocolError> {
    let pairs = clients.len() / 2;
    if symbols > 0 && pairs == 0 {
        return Err(ProtocolError::MissingShare(
            "refreshing server randomness needs two distinct clients".into(),
        ));
    }
    let mut out = Vec::with_capacity(pairs);
    let mut start = 0;
    for t in 0..pairs {
        let len = symbols / pairs + usize::from(t < symbols % pairs);
        out.push((clients[2 * t], clients[2 * t + 1], start..start + len));
        start += len;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldModulus {
        FieldModulus::new(13).unwrap()
    }

    #[test]
    fn assembled_sets_agree() {
        let q = q();
        let shape = CrgShape {
            with_scalar: true,
            client_sets: 2,
            clients: 3,
            router_sets: 1,
            routers: 2,
        };
        let draws: Vec<CrgDraw<FieldElement>> = (0..3u64)
            .map(|u| {
                let syms = (0..shape.draw_len() as u64).map(|t| q.elem(1 + u * 5 + t * 3)).collect();
                CrgDraw::new(shape, syms).unwrap()
            })
            .collect();
        let router: Vec<_> = draws.iter().map(|d| d.payload_for(CrgRecipient::Router)).collect();
        let rb = crg_router_assemble(q, &shape, &router).unwrap();
        for set in rb.client_sets.iter().chain(&rb.router_sets) {
            assert_eq!(set.iter().fold(q.zero(), |a, &b| a + b), q.zero());
        }
        for pos in 0..3 {
            let part: Vec<_> = draws.iter().map(|d| d.payload_for(CrgRecipient::Client { pos })).collect();
            let (c, own) = crg_client_assemble(q, &shape, pos, &part).unwrap();
            assert_eq!(c, rb.scalar);
            for s in 0..2 {
                assert_eq!(own[s], rb.client_sets[s][pos]);
            }
        }
    }

    #[test]
    fn scalar_is_product() {
        let q = q();
        assert_eq!(crg_scalar_c(q, &[q.elem(2), q.elem(7)]).unwrap(), q.elem(1));
        assert!(crg_scalar_c(q, &[q.elem(0)]).is_err());
    }

    #[test]
    fn crr_blocks_cover_everything() {
        let a = crr_assignment(&[1, 2, 3, 4, 5], 7).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0], (1, 2, 0..4));
        assert_eq!(a[1], (3, 4, 4..7));
        assert!(crr_assignment(&[1], 3).is_err());
        assert!(crr_assignment(&[1], 0).unwrap().is_empty());
    }
}
