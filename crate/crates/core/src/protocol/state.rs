use std::collections::{BTreeMap, BTreeSet};

use crate::codec::CodedRow;
use crate::field::FieldElement;

/// Identifies the column of one stored instance: `(submodel, slot, column)`.
pub type ColumnKey = (usize, usize, usize);

/// Everything a client holds during a round. Client positions inside
/// client-side randomness sets are `id - 1`.
#[derive(Clone, Debug)]
pub struct ClientState<S> {
    pub id: usize,
    /// Database serving this client.
    pub group: usize,
    /// Submodels this client wants to update.
    pub gamma: BTreeSet<usize>,
    /// Selection bit per submodel, as symbols.
    pub incidence: Vec<S>,
    /// Local increments, padded length, for submodels in `gamma`.
    pub increments: BTreeMap<usize, Vec<S>>,
    /// Product of the databases' nonzero scalar contributions.
    pub c: Option<FieldElement>,
    /// This client's element of each selection mask set.
    pub mask_k: Vec<S>,
    /// This client's element of each update mask set, for the union.
    pub mask_kl: BTreeMap<usize, Vec<S>>,
    /// Submodels read during the write phase.
    pub models: BTreeMap<usize, Vec<S>>,
    pub router: Option<RouterHoldings<S>>,
}

impl<S> ClientState<S> {
    pub fn new(id: usize, group: usize, gamma: BTreeSet<usize>, incidence: Vec<S>) -> Self {
        ClientState {
            id,
            group,
            gamma,
            incidence,
            increments: BTreeMap::new(),
            c: None,
            mask_k: Vec::new(),
            mask_kl: BTreeMap::new(),
            models: BTreeMap::new(),
            router: None,
        }
    }

    pub fn pos(&self) -> usize {
        self.id - 1
    }
}

/// Extra randomness held by a routing client: complete client-side and
/// router-side zero-sum sets.
#[derive(Clone, Debug)]
pub struct RouterHoldings<S> {
    /// Database whose group this client routes for.
    pub db: usize,
    /// Position among routers.
    pub slot: usize,
    /// `client_mask_k[k-1][pos]`.
    pub client_mask_k: Vec<Vec<S>>,
    /// `client_mask_kl[k][p][pos]`.
    pub client_mask_kl: BTreeMap<usize, Vec<Vec<S>>>,
    /// `router_mask_k[k-1][slot]`.
    pub router_mask_k: Vec<Vec<S>>,
    /// Router-side set for each all-message column of the written submodels.
    pub router_mask_col: BTreeMap<ColumnKey, Vec<S>>,
}

/// Contents of one database.
#[derive(Clone, Debug, PartialEq)]
pub struct DatabaseState<S> {
    pub id: usize,
    /// `store[k-1][slot]`.
    pub store: Vec<Vec<CodedRow<S>>>,
    /// Plain server randomness per submodel.
    pub hat_k: Vec<S>,
    /// Plain server randomness per submodel symbol, `hat_kl[k-1][p]`.
    pub hat_kl: Vec<Vec<S>>,
}

impl<S> DatabaseState<S> {
    pub fn empty(id: usize) -> Self {
        DatabaseState {
            id,
            store: Vec::new(),
            hat_k: Vec::new(),
            hat_kl: Vec::new(),
        }
    }

    /// Stored symbols: coded rows plus plain randomness.
    pub fn symbol_count(&self) -> usize {
        self.store
            .iter()
            .flat_map(|rows| rows.iter().map(|r| r.symbols.len()))
            .sum::<usize>()
            + self.hat_k.len()
            + self.hat_kl.iter().map(Vec::len).sum::<usize>()
    }

    pub fn coded_symbol_count(&self) -> usize {
        self.store
            .iter()
            .flat_map(|rows| rows.iter().map(|r| r.symbols.len()))
            .sum()
    }
}
