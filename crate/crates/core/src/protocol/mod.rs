//! Secure federated submodel learning over coded storage.
//!
//! A round runs common-randomness generation, a private union of the
//! clients' submodel selections, a write phase that reads, aggregates and
//! re-encodes the selected submodels, and a refresh of the plain server
//! randomness. The functions here are pure message transforms; the
//! simulator decides who talks to whom.

mod crg;
mod message;
mod params;
mod psu;
mod remedies;
mod robust;
mod state;
mod write;

pub use crg::{
    crg_client_assemble, crg_router_assemble, crg_scalar_c, crg_zero_sum_set, crr_assignment,
    crr_refresh, CrgDraw, CrgRecipient, CrgShape, RouterBatch,
};
pub use message::{decode_message, MessageKind, Party, PhaseMessage};
pub use params::{PlanChoice, Setup, SystemParams};
pub use psu::{psu_client_answer, psu_db_aggregate, psu_decode_union, psu_route_answer};
pub use remedies::{
    add_into, db_dropout_compensation, dropout_compensation_psu, dropout_compensation_write,
    repair_failed_database, Phase,
};
pub use robust::{adversary_decode_repetition, adversary_decode_rs};
pub use state::{ClientState, ColumnKey, DatabaseState, RouterHoldings};
pub use write::{
    draw_router_fresh, write_client_answer, write_column_keys, write_commit_rows,
    write_commit_storage, write_cr_correction, write_db_aggregate, write_decode_models,
    write_read_positions, write_route_answer, write_serve_read, ReadRequest, RouterFresh,
};

use thiserror::Error;

use crate::codec::CodecError;
use crate::field::FieldError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("missing share: {0}")]
    MissingShare(String),
    #[error("decoding failed: {0}")]
    DecodingFailure(String),
    #[error("too many faults: {0}")]
    TooManyFaults(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("protocol aborted: {0}")]
    Abort(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Field(#[from] FieldError),
}
