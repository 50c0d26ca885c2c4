use std::collections::BTreeSet;

use super::{Cell, CodecError, OmegaLayout};
use crate::field::{mat_inv, FieldElement, FieldMatrix};
use crate::symbol::{combine, Symbol};

/// One filled message matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaInstance<S> {
    pub layout: OmegaLayout,
    pub messages: Vec<S>,
    pub randomness: Vec<S>,
}

impl<S: Symbol> OmegaInstance<S> {
    pub fn new(layout: OmegaLayout, messages: Vec<S>, randomness: Vec<S>) -> Result<Self, CodecError> {
        if messages.len() != layout.messages() || randomness.len() != layout.randomness() {
            return Err(CodecError::Shape(format!(
                "layout wants {} messages and {} randomness symbols, got {} and {}",
                layout.messages(),
                layout.randomness(),
                messages.len(),
                randomness.len()
            )));
        }
        Ok(OmegaInstance {
            layout,
            messages,
            randomness,
        })
    }

    pub fn entry(&self, r: usize, c: usize) -> &S {
        match self.layout.cell(r, c) {
            Cell::Message(i) => &self.messages[i],
            Cell::Randomness(i) => &self.randomness[i],
        }
    }
}

/// The `D` symbols one database stores for one instance: `psi_j^T Omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodedRow<S> {
    /// 1-based database id.
    pub db: usize,
    pub instance: usize,
    pub symbols: Vec<S>,
}

fn check_psi(psi: &FieldMatrix, dim: usize) -> Result<(), CodecError> {
    if psi.cols() != dim {
        return Err(CodecError::Shape(format!(
            "encoding matrix has {} columns, message matrix is {dim}x{dim}",
            psi.cols()
        )));
    }
    Ok(())
}

fn psi_row(psi: &FieldMatrix, db: usize) -> Result<&[FieldElement], CodecError> {
    if db == 0 || db > psi.rows() {
        return Err(CodecError::Shape(format!("database {db} outside 1..={}", psi.rows())));
    }
    Ok(psi.row(db - 1))
}

/// Row `j` of the code, `zeta_j^T = psi_j^T Omega`.
pub fn encode_row<S: Symbol>(
    inst: &OmegaInstance<S>,
    psi: &FieldMatrix,
    db: usize,
    instance: usize,
) -> Result<CodedRow<S>, CodecError> {
    let d = inst.layout.dim();
    check_psi(psi, d)?;
    let p = psi_row(psi, db)?;
    let q = psi.modulus();
    let symbols = (0..d)
        .map(|c| combine(q, (0..d).map(|r| (p[r], inst.entry(r, c).clone()))))
        .collect();
    Ok(CodedRow { db, instance, symbols })
}

/// Rows for every database of `psi`.
pub fn encode_instance<S: Symbol>(
    inst: &OmegaInstance<S>,
    psi: &FieldMatrix,
    instance: usize,
) -> Result<Vec<CodedRow<S>>, CodecError> {
    (1..=psi.rows())
        .map(|db| encode_row(inst, psi, db, instance))
        .collect()
}

/// Symbols fetched from each database to rebuild the messages of one
/// instance: database `t` of the chosen `D` (in order) sends its first
/// `min(w, D - t)` symbols, where `w` is the layout's download width.
pub fn download_plan(layout: &OmegaLayout, dbs: &[usize]) -> Vec<(usize, usize)> {
    let d = layout.dim();
    let w = layout.download_width();
    dbs.iter()
        .take(d)
        .enumerate()
        .map(|(t, &db)| (db, w.min(d - t)))
        .filter(|&(_, n)| n > 0)
        .collect()
}

/// Orders candidate databases so the reduced download is solvable: a row
/// whose encoding vector vanishes beyond its first entry goes last.
pub fn reader_order(psi: &FieldMatrix, dbs: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = dbs.to_vec();
    out.sort_by_key(|&db| {
        let row = psi.row(db - 1);
        row[1..].iter().all(|e| e.is_zero())
    });
    out
}

/// Rebuilds the messages of one instance from the partial download
/// described by [`download_plan`]. `download[t]` holds the leading symbols
/// of the `t`-th database's row.
pub fn decode_download<S: Symbol>(
    layout: &OmegaLayout,
    psi: &FieldMatrix,
    download: &[(usize, Vec<S>)],
) -> Result<Vec<S>, CodecError> {
    let d = layout.dim();
    check_psi(psi, d)?;
    let w = layout.download_width();
    let q = psi.modulus();
    let dbs: Vec<usize> = download.iter().map(|(db, _)| *db).collect();
    ensure_distinct(&dbs)?;
    if w == 0 {
        return Ok(Vec::new());
    }
    // omega[r][c] for c < w, filled column by column
    let mut omega: Vec<Vec<Option<S>>> = vec![vec![None; w]; d];
    for c in 0..w {
        let rows = d - c;
        if download.len() < rows {
            return Err(CodecError::NotEnoughRows {
                needed: rows,
                got: download.len(),
            });
        }
        let mut sub = FieldMatrix::zeros(q, rows, rows)?;
        let mut rhs = Vec::with_capacity(rows);
        for t in 0..rows {
            let (db, syms) = &download[t];
            let p = psi_row(psi, *db)?;
            let y = syms.get(c).ok_or_else(|| {
                CodecError::Shape(format!("database {db} sent too few symbols for column {c}"))
            })?;
            let known = combine(
                q,
                (0..c).map(|r| (p[r], omega[c][r].clone().expect("decoded earlier"))),
            );
            rhs.push(y.minus(&known));
            for u in 0..rows {
                sub.set(t, u, p[c + u]);
            }
        }
        let inv = mat_inv(&sub).map_err(|_| CodecError::Singular)?;
        for u in 0..rows {
            let x = combine(q, (0..rows).map(|t| (inv.get(u, t), rhs[t].clone())));
            omega[c + u][c] = Some(x);
        }
    }
    Ok((0..layout.messages())
        .map(|i| {
            let (r, c) = layout.message_position(i);
            omega[r][c].clone().expect("message column inside download width")
        })
        .collect())
}

fn ensure_distinct(dbs: &[usize]) -> Result<(), CodecError> {
    let set: BTreeSet<_> = dbs.iter().collect();
    if set.len() != dbs.len() {
        return Err(CodecError::DuplicateRows);
    }
    Ok(())
}

/// Outcome of [`reconstruct`].
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction<S> {
    pub messages: Vec<S>,
    /// `(database, column)` pairs actually consumed.
    pub consumed: Vec<(usize, usize)>,
}

/// Rebuilds the messages of one instance from at least `D` full rows,
/// checking that the rows are consistent with one symmetric matrix.
pub fn reconstruct<S: Symbol>(
    rows: &[CodedRow<S>],
    layout: &OmegaLayout,
    psi: &FieldMatrix,
) -> Result<Reconstruction<S>, CodecError> {
    let d = layout.dim();
    check_psi(psi, d)?;
    if rows.len() < d {
        return Err(CodecError::NotEnoughRows {
            needed: d,
            got: rows.len(),
        });
    }
    let dbs: Vec<usize> = rows.iter().map(|r| r.db).collect();
    ensure_distinct(&dbs)?;
    if rows.iter().any(|r| r.instance != rows[0].instance || r.symbols.len() != d) {
        return Err(CodecError::Shape("rows belong to different instances".into()));
    }
    let full = full_decode(&rows[..d], psi)?;
    if !symmetric(&full) {
        return Err(CodecError::InconsistentRows);
    }
    for extra in &rows[d..] {
        let p = psi_row(psi, extra.db)?;
        for c in 0..d {
            let expect = combine(psi.modulus(), (0..d).map(|r| (p[r], full[r][c].clone())));
            if expect.value() != extra.symbols[c].value() {
                return Err(CodecError::InconsistentRows);
            }
        }
    }
    let order = reader_order(psi, &dbs[..d]);
    let plan = download_plan(layout, &order);
    let mut download = Vec::with_capacity(plan.len());
    let mut consumed = Vec::new();
    for &(db, n) in &plan {
        let row = rows.iter().find(|r| r.db == db).expect("chosen from rows");
        download.push((db, row.symbols[..n].to_vec()));
        consumed.extend((0..n).map(|c| (db, c)));
    }
    let messages = decode_download(layout, psi, &download)?;
    for (i, m) in messages.iter().enumerate() {
        let (r, c) = layout.message_position(i);
        if m.value() != full[r][c].value() {
            return Err(CodecError::InconsistentRows);
        }
    }
    Ok(Reconstruction { messages, consumed })
}

/// Solves `Psi_J Omega = Z_J` for the whole matrix.
fn full_decode<S: Symbol>(rows: &[CodedRow<S>], psi: &FieldMatrix) -> Result<Vec<Vec<S>>, CodecError> {
    let d = rows.len();
    let q = psi.modulus();
    let idx: Vec<usize> = rows.iter().map(|r| r.db - 1).collect();
    let sub = psi.select(&idx, &(0..d).collect::<Vec<_>>())?;
    let inv = mat_inv(&sub).map_err(|_| CodecError::Singular)?;
    Ok((0..d)
        .map(|r| {
            (0..d)
                .map(|c| combine(q, (0..d).map(|t| (inv.get(r, t), rows[t].symbols[c].clone()))))
                .collect()
        })
        .collect())
}

fn symmetric<S: Symbol>(m: &[Vec<S>]) -> bool {
    (0..m.len()).all(|r| (0..r).all(|c| m[r][c].value() == m[c][r].value()))
}

/// Helper `row.db`'s contribution to rebuilding database `failed`:
/// `zeta_j^T psi_f`.
pub fn repair_share<S: Symbol>(row: &CodedRow<S>, psi: &FieldMatrix, failed: usize) -> Result<S, CodecError> {
    check_psi(psi, row.symbols.len())?;
    if row.db == failed {
        return Err(CodecError::SelfRepair(failed));
    }
    let p = psi_row(psi, failed)?;
    Ok(combine(
        psi.modulus(),
        row.symbols.iter().zip(p).map(|(s, &c)| (c, s.clone())),
    ))
}

/// Rebuilds row `failed` from `D` helper shares. The shares are
/// `Psi_J (Omega psi_f)`, and by symmetry `Omega psi_f` is the lost row.
pub fn repair_assemble<S: Symbol>(
    shares: &[(usize, S)],
    psi: &FieldMatrix,
    failed: usize,
    instance: usize,
) -> Result<CodedRow<S>, CodecError> {
    let d = psi.cols();
    if shares.len() < d {
        return Err(CodecError::NotEnoughRows {
            needed: d,
            got: shares.len(),
        });
    }
    let helpers: Vec<usize> = shares.iter().take(d).map(|(db, _)| *db).collect();
    ensure_distinct(&helpers)?;
    if helpers.contains(&failed) {
        return Err(CodecError::SelfRepair(failed));
    }
    psi_row(psi, failed)?;
    for &h in &helpers {
        psi_row(psi, h)?;
    }
    let idx: Vec<usize> = helpers.iter().map(|h| h - 1).collect();
    let sub = psi.select(&idx, &(0..d).collect::<Vec<_>>())?;
    let inv = mat_inv(&sub).map_err(|_| CodecError::Singular)?;
    let symbols = (0..d)
        .map(|r| combine(psi.modulus(), (0..d).map(|t| (inv.get(r, t), shares[t].1.clone()))))
        .collect();
    Ok(CodedRow {
        db: failed,
        instance,
        symbols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::build_layout;
    use crate::field::{vandermonde, FieldModulus};

    fn setup() -> (FieldModulus, FieldMatrix) {
        let q = FieldModulus::new(13).unwrap();
        let psis: Vec<_> = (1..=4).map(|j| q.elem(j)).collect();
        (q, vandermonde(q, &psis, 3).unwrap())
    }

    fn instance(q: FieldModulus, extra: usize) -> OmegaInstance<FieldElement> {
        let l = build_layout(3, 1, extra).unwrap();
        let m = (0..l.messages()).map(|i| q.elem(i as u64 + 2)).collect();
        let r = (0..l.randomness()).map(|i| q.elem(7 * i as u64 + 1)).collect();
        OmegaInstance::new(l, m, r).unwrap()
    }

    #[test]
    fn reconstruct_consumes_c1() {
        let (q, psi) = setup();
        for extra in 0..=3 {
            let inst = instance(q, extra);
            let rows = encode_instance(&inst, &psi, 0).unwrap();
            let rec = reconstruct(&rows[..3], &inst.layout, &psi).unwrap();
            assert_eq!(rec.messages, inst.messages);
            assert_eq!(rec.consumed.len(), inst.layout.c1());
        }
    }

    #[test]
    fn corrupted_row_detected() {
        let (q, psi) = setup();
        let inst = instance(q, 0);
        let mut rows = encode_instance(&inst, &psi, 0).unwrap();
        rows[3].symbols[1] += q.one();
        assert_eq!(reconstruct(&rows, &inst.layout, &psi), Err(CodecError::InconsistentRows));
    }

    #[test]
    fn too_few_rows() {
        let (q, psi) = setup();
        let inst = instance(q, 0);
        let rows = encode_instance(&inst, &psi, 0).unwrap();
        assert!(matches!(
            reconstruct(&rows[..2], &inst.layout, &psi),
            Err(CodecError::NotEnoughRows { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn repair_identity() {
        let (q, psi) = setup();
        let inst = instance(q, 1);
        let rows = encode_instance(&inst, &psi, 5).unwrap();
        let shares: Vec<_> = rows[..3]
            .iter()
            .map(|r| (r.db, repair_share(r, &psi, 4).unwrap()))
            .collect();
        assert_eq!(repair_assemble(&shares, &psi, 4, 5).unwrap(), rows[3]);
        assert_eq!(repair_share(&rows[3], &psi, 4), Err(CodecError::SelfRepair(4)));
    }

    #[test]
    fn zero_evaluation_point_reader_last() {
        let q = FieldModulus::new(13).unwrap();
        let psis: Vec<_> = [0, 1, 2, 3].iter().map(|&j| q.elem(j)).collect();
        let psi = vandermonde(q, &psis, 3).unwrap();
        let inst = instance(q, 2);
        let rows = encode_instance(&inst, &psi, 0).unwrap();
        let rec = reconstruct(&rows[..3], &inst.layout, &psi).unwrap();
        assert_eq!(rec.messages, inst.messages);
    }
}
