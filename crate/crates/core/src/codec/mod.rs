//! Ramp secure regenerating code over symmetric message matrices.
//!
//! A `D x D` symmetric matrix `Omega` holds message and randomness symbols;
//! database `j` stores `psi_j^T Omega`. Any `D` databases rebuild the
//! messages, any `D` helpers rebuild a lost row, and any `lambda` databases
//! learn only a controlled fraction of the messages.

mod code;
mod layout;
mod leakage;
mod plan;

pub use code::{
    decode_download, download_plan, encode_instance, encode_row, reader_order, reconstruct,
    repair_assemble, repair_share, CodedRow, OmegaInstance, Reconstruction,
};
pub use layout::{base_messages, build_layout, fill_order, full_layout, Cell, OmegaLayout};
pub use leakage::{layout_leaked_symbols, leakage_fraction, observed_message_rank};
pub use plan::{
    plan_time_sharing, realized_costs, saturation_leak, strip_threshold, theorem2_bounds, Chunking,
    CostTriple, InstanceSlot, RsrcPlan,
};

use thiserror::Error;

use crate::field::FieldError;

pub type Rational = num_rational::Ratio<i64>;

/// Renders a rational as `p/q`, or `p` when the denominator is one.
pub fn fmt_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, `p`, or a finite decimal such as `0.25`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let (n, d): (i64, i64) = (n.trim().parse().ok()?, d.trim().parse().ok()?);
        return (d != 0).then(|| Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let neg = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        let scale = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().ok()?;
        let num = whole.abs() * scale + f;
        return Some(Rational::new(if neg { -num } else { num }, scale));
    }
    s.parse::<i64>().ok().map(Rational::from_integer)
}

pub(crate) fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rational(r))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("security parameter {lambda} must satisfy 0 < lambda < D = {dim}")]
    InvalidLambda { dim: usize, lambda: usize },
    #[error("{requested} messages exceed the {capacity} free cells of the matrix")]
    TooManyMessages { requested: usize, capacity: usize },
    #[error("leakage {0} outside [0, 1]")]
    LeakOutOfRange(Rational),
    #[error("need {needed} rows, got {got}")]
    NotEnoughRows { needed: usize, got: usize },
    #[error("rows from the same database supplied twice")]
    DuplicateRows,
    #[error("rows are inconsistent with any symmetric message matrix")]
    InconsistentRows,
    #[error("encoding submatrix is singular")]
    Singular,
    #[error("database {0} cannot help repair itself")]
    SelfRepair(usize),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        assert_eq!(parse_rational("2/5"), Some(Rational::new(2, 5)));
        assert_eq!(parse_rational("0.25"), Some(Rational::new(1, 4)));
        assert_eq!(parse_rational("1"), Some(Rational::new(1, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(fmt_rational(&Rational::new(6, 4)), "3/2");
    }
}
