//! Rank computations over the linear forms of an audited run.

use std::collections::{BTreeMap, BTreeSet};

use crate::field::FieldModulus;
use crate::symbol::{LinearForm, VarKind, VarRegistry};

type Sparse = Vec<(u32, u32)>;

fn inv_mod(a: u32, q: u64) -> u32 {
    let (mut t, mut new_t, mut r, mut new_r) = (0i64, 1i64, q as i64, a as i64);
    while new_r != 0 {
        let quo = r / new_r;
        (t, new_t) = (new_t, t - quo * new_t);
        (r, new_r) = (new_r, r - quo * new_r);
    }
    t.rem_euclid(q as i64) as u32
}

/// Row echelon form maintained one sparse vector at a time; rows are keyed
/// by their leading column and normalized to a leading one.
pub struct Echelon {
    q: u64,
    rows: BTreeMap<u32, Sparse>,
}

impl Echelon {
    pub fn new(q: FieldModulus) -> Self {
        Echelon {
            q: q.get() as u64,
            rows: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds a vector; returns whether the rank grew.
    pub fn insert(&mut self, mut v: Sparse) -> bool {
        let q = self.q;
        v.retain(|&(_, c)| c != 0);
        while let Some(&(lead, c)) = v.first() {
            match self.rows.get(&lead) {
                Some(row) => {
                    let f = q - c as u64;
                    v = axpy(&v, row, f, q);
                }
                None => {
                    let inv = inv_mod(c, q) as u64;
                    for t in v.iter_mut() {
                        t.1 = ((t.1 as u64 * inv) % q) as u32;
                    }
                    self.rows.insert(lead, v);
                    return true;
                }
            }
        }
        false
    }
}

/// `x + f * y` over sorted sparse vectors.
fn axpy(x: &Sparse, y: &Sparse, f: u64, q: u64) -> Sparse {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j >= y.len() || (i < x.len() && x[i].0 < y[j].0);
        let take_y = i >= x.len() || (j < y.len() && y[j].0 < x[i].0);
        if take_x {
            out.push(x[i]);
            i += 1;
        } else if take_y {
            out.push((y[j].0, ((y[j].1 as u64 * f) % q) as u32));
            j += 1;
        } else {
            let c = ((x[i].1 as u64 + y[j].1 as u64 * f) % q) as u32;
            if c != 0 {
                out.push((x[i].0, c));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Rank of the forms' variable parts, keeping only columns accepted by `keep`.
pub fn rank_of<'a>(q: FieldModulus, forms: impl IntoIterator<Item = &'a Sparse>, keep: impl Fn(u32) -> bool) -> usize {
    let mut e = Echelon::new(q);
    for f in forms {
        e.insert(f.iter().copied().filter(|&(v, _)| keep(v)).collect());
    }
    e.rank()
}

pub fn sparse(form: &LinearForm) -> Sparse {
    form.terms().to_vec()
}

/// Rewrites forms in the coordinates of the updated model, substituting
/// `Model(k,pos) = M'(k,pos) - sum of the listed increments`. The variable
/// id of `Model(k,pos)` is reused for `M'(k,pos)`.
pub fn to_updated_basis(form: &Sparse, reg: &VarRegistry, increments: &BTreeMap<(usize, usize), Vec<u32>>, q: FieldModulus) -> Sparse {
    let qq = q.get() as u64;
    let mut acc: BTreeMap<u32, u64> = form.iter().map(|&(v, c)| (v, c as u64)).collect();
    for &(v, c) in form {
        if let VarKind::Model { k, pos } = reg.kind(v) {
            if let Some(ids) = increments.get(&(k, pos)) {
                for &d in ids {
                    let e = acc.entry(d).or_insert(0);
                    *e = (*e + qq - c as u64) % qq;
                }
            }
        }
    }
    acc.into_iter().filter(|&(_, c)| c != 0).map(|(v, c)| (v, c as u32)).collect()
}

/// `rank[A | B] - rank[B]`, where the columns of `A` are the secrets.
pub fn mutual_information(q: FieldModulus, view: &[Sparse], secret: impl Fn(u32) -> bool) -> usize {
    let full = rank_of(q, view.iter(), |_| true);
    let rest = rank_of(q, view.iter(), |v| !secret(v));
    full - rest
}

/// `I(X; V | S) = rank[V; S] - rank[S] - rank[V restricted to non-X columns]`
/// where `S` is a set of forms over the `X` columns only.
pub fn conditional_information(q: FieldModulus, view: &[Sparse], given: &[Sparse], secret: impl Fn(u32) -> bool) -> usize {
    let joint = rank_of(q, view.iter().chain(given), |_| true);
    let cond = rank_of(q, given.iter(), |_| true);
    let rest = rank_of(q, view.iter(), |v| !secret(v));
    joint - cond - rest
}

/// Ids of the registered variables matching `pred`.
pub fn vars_where(reg: &VarRegistry, pred: impl Fn(VarKind) -> bool) -> BTreeSet<u32> {
    (0..reg.len() as u32).filter(|&v| pred(reg.kind(v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldModulus {
        FieldModulus::new(13).unwrap()
    }

    #[test]
    fn echelon_rank_matches_dense() {
        let mut e = Echelon::new(q());
        assert!(e.insert(vec![(0, 1), (1, 2)]));
        assert!(e.insert(vec![(1, 3), (2, 1)]));
        assert!(!e.insert(vec![(0, 2), (1, 7), (2, 1)]));
        assert!(!e.insert(vec![]));
        assert_eq!(e.rank(), 2);
    }

    #[test]
    fn masked_symbol_leaks_nothing() {
        let view = vec![vec![(0, 1), (1, 1)]];
        assert_eq!(mutual_information(q(), &view, |v| v == 0), 0);
        let view = vec![vec![(0, 1), (1, 1)], vec![(1, 1)]];
        assert_eq!(mutual_information(q(), &view, |v| v == 0), 1);
    }

    #[test]
    fn sum_is_excused_by_conditioning() {
        // x0 + x1 revealed, conditioned on x0 + x1.
        let view = vec![vec![(0, 1), (1, 1)]];
        let given = vec![vec![(0, 1), (1, 1)]];
        assert_eq!(conditional_information(q(), &view, &given, |v| v < 2), 0);
        let view = vec![vec![(0, 1)]];
        assert_eq!(conditional_information(q(), &view, &given, |v| v < 2), 1);
    }
}
