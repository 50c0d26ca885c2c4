use std::collections::BTreeSet;

use super::{Cell, CodecError, OmegaLayout, Rational};
use crate::field::{rank, vandermonde, FieldMatrix, FieldModulus};

/// Message symbols of one instance learned by the databases in `observed`:
/// `rank[A | B] - rank[B]` where the observed rows are `A m + B r`.
pub fn observed_message_rank(
    layout: &OmegaLayout,
    psi: &FieldMatrix,
    observed: &[usize],
) -> Result<usize, CodecError> {
    let d = layout.dim();
    if psi.cols() != d {
        return Err(CodecError::Shape(format!(
            "encoding matrix has {} columns, layout is {d}x{d}",
            psi.cols()
        )));
    }
    let set: BTreeSet<_> = observed.iter().collect();
    if set.len() != observed.len() {
        return Err(CodecError::DuplicateRows);
    }
    if observed.is_empty() || layout.messages() == 0 {
        return Ok(0);
    }
    let q = psi.modulus();
    let (b, nr) = (layout.messages(), layout.randomness());
    let mut full = FieldMatrix::zeros(q, observed.len() * d, b + nr)?;
    for (t, &db) in observed.iter().enumerate() {
        if db == 0 || db > psi.rows() {
            return Err(CodecError::Shape(format!("database {db} outside 1..={}", psi.rows())));
        }
        let p = psi.row(db - 1);
        for c in 0..d {
            let row = t * d + c;
            for (rr, &coef) in p.iter().enumerate() {
                let col = match layout.cell(rr, c) {
                    Cell::Message(i) => i,
                    Cell::Randomness(i) => b + i,
                };
                full.set(row, col, full.get(row, col) + coef);
            }
        }
    }
    let rank_full = rank(&full);
    let rank_rand = if nr == 0 {
        0
    } else {
        let rows: Vec<usize> = (0..full.rows()).collect();
        let cols: Vec<usize> = (b..b + nr).collect();
        rank(&full.select(&rows, &cols)?)
    };
    Ok(rank_full - rank_rand)
}

/// Leakage fraction of a collection of `(layout, count)` instances against
/// the databases in `observed`.
pub fn leakage_fraction(
    parts: &[(OmegaLayout, u64)],
    psi: &FieldMatrix,
    observed: &[usize],
) -> Result<Rational, CodecError> {
    let mut leaked = 0i64;
    let mut total = 0i64;
    for (layout, count) in parts {
        leaked += *count as i64 * observed_message_rank(layout, psi, observed)? as i64;
        total += *count as i64 * layout.messages() as i64;
    }
    if total == 0 {
        return Ok(Rational::new(0, 1));
    }
    Ok(Rational::new(leaked, total))
}

/// Message symbols leaked to any `lambda` databases under a Vandermonde
/// code with distinct points, evaluated once over a large prime field.
pub fn layout_leaked_symbols(layout: &OmegaLayout, lambda: usize) -> usize {
    let q = FieldModulus::new(2_147_483_647).expect("Mersenne prime");
    let psis: Vec<_> = (1..=lambda as u64).map(|j| q.elem(j)).collect();
    let psi = vandermonde(q, &psis, layout.dim()).expect("distinct points");
    let observed: Vec<usize> = (1..=lambda).collect();
    observed_message_rank(layout, &psi, &observed).expect("valid layout")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::build_layout;

    #[test]
    fn example_leakages() {
        let q = FieldModulus::new(13).unwrap();
        let psis: Vec<_> = (1..=4).map(|j| q.elem(j)).collect();
        let psi = vandermonde(q, &psis, 3).unwrap();
        let expect = [(0, 0, 3), (1, 1, 4), (2, 2, 5), (3, 3, 6)];
        for (extra, leaked, b) in expect {
            let l = build_layout(3, 1, extra).unwrap();
            for db in 1..=4 {
                let f = leakage_fraction(&[(l.clone(), 1)], &psi, &[db]).unwrap();
                assert_eq!(f, Rational::new(leaked, b), "extra {extra} db {db}");
            }
        }
    }

    #[test]
    fn duplicate_observers_rejected() {
        let q = FieldModulus::new(13).unwrap();
        let psis: Vec<_> = (1..=4).map(|j| q.elem(j)).collect();
        let psi = vandermonde(q, &psis, 3).unwrap();
        let l = build_layout(3, 1, 0).unwrap();
        assert_eq!(observed_message_rank(&l, &psi, &[1, 1]), Err(CodecError::DuplicateRows));
    }
}
