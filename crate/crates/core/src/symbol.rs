//! Symbols that flow through the codec and the protocol.
//!
//! Every codec and protocol routine is generic over [`Symbol`]. Plain runs
//! use [`FieldElement`]. Audited runs use [`Tracked`], which carries the
//! concrete value together with a linear form over the registered random
//! variables, so a single execution yields both the outputs and the exact
//! linear dependence of every transmitted symbol on secrets and randomness.

use std::fmt;

use crate::field::{FieldElement, FieldModulus};

/// What a registered variable stands for. Indices are 1-based for clients,
/// databases and submodels, 0-based for positions inside a submodel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// Model symbol at the start of the round.
    Model { k: usize, pos: usize },
    /// A client's local increment.
    Delta { client: usize, k: usize, pos: usize },
    /// A client's submodel-selection bit.
    Incidence { client: usize, k: usize },
    /// Randomness inside the stored message matrices at the start of the round.
    StorageRandomness,
    /// Dummy symbol filling a submodel up to whole instances.
    Padding { k: usize, pos: usize },
    /// Plain server-side common randomness held at the start of the round.
    ServerCr,
    /// A database's contribution during common-randomness generation.
    CrgContribution { db: usize },
    /// Randomness freshly drawn by a routing client for the next matrix.
    RouterFresh { client: usize },
    /// A client share used to refresh server-side common randomness.
    CrrShare { client: usize },
    /// Payload fabricated by an adversarial database.
    Adversarial { db: usize },
}

pub trait Symbol: Clone + fmt::Debug + PartialEq {
    /// State needed to mint new variables.
    type Factory;

    fn constant(v: FieldElement) -> Self;
    /// A new variable whose concrete value is `value`.
    fn variable(factory: &mut Self::Factory, value: FieldElement, kind: VarKind) -> Self;
    fn value(&self) -> FieldElement;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, c: FieldElement) -> Self;

    /// Linear form over registered variables, when tracked.
    fn form(&self) -> Option<&LinearForm> {
        None
    }

    /// Variable registry behind the factory, when tracked.
    fn registry(_factory: &Self::Factory) -> Option<&VarRegistry> {
        None
    }

    fn zero(q: FieldModulus) -> Self {
        Self::constant(q.zero())
    }

    fn negated(&self) -> Self {
        let q = self.value().modulus();
        self.times(-q.one())
    }
}

/// Sum of `coeff_i * sym_i`.
pub fn combine<S: Symbol>(q: FieldModulus, terms: impl IntoIterator<Item = (FieldElement, S)>) -> S {
    terms
        .into_iter()
        .fold(S::zero(q), |acc, (c, s)| acc.plus(&s.times(c)))
}

pub fn sum<'a, S: Symbol + 'a>(q: FieldModulus, items: impl IntoIterator<Item = &'a S>) -> S {
    items.into_iter().fold(S::zero(q), |acc, s| acc.plus(s))
}

impl Symbol for FieldElement {
    type Factory = ();

    fn constant(v: FieldElement) -> Self {
        v
    }
    fn variable(_: &mut (), value: FieldElement, _: VarKind) -> Self {
        value
    }
    fn value(&self) -> FieldElement {
        *self
    }
    fn plus(&self, other: &Self) -> Self {
        *self + *other
    }
    fn minus(&self, other: &Self) -> Self {
        *self - *other
    }
    fn times(&self, c: FieldElement) -> Self {
        *self * c
    }
}

/// Sparse affine form `constant + sum coeff * var` over `F_q`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LinearForm {
    modulus: FieldModulus,
    constant: u32,
    /// Sorted by variable id, coefficients nonzero.
    terms: Vec<(u32, u32)>,
}

impl LinearForm {
    pub fn constant(v: FieldElement) -> Self {
        LinearForm {
            modulus: v.modulus(),
            constant: v.value(),
            terms: Vec::new(),
        }
    }

    pub fn var(modulus: FieldModulus, id: u32) -> Self {
        LinearForm {
            modulus,
            constant: 0,
            terms: vec![(id, 1)],
        }
    }

    pub fn terms(&self) -> &[(u32, u32)] {
        &self.terms
    }

    pub fn constant_term(&self) -> FieldElement {
        self.modulus.elem(self.constant as u64)
    }

    pub fn modulus(&self) -> FieldModulus {
        self.modulus
    }

    pub fn coefficient(&self, id: u32) -> u32 {
        self.terms
            .binary_search_by_key(&id, |t| t.0)
            .map_or(0, |i| self.terms[i].1)
    }

    fn merge(&self, other: &LinearForm, sign: u64) -> LinearForm {
        assert_eq!(self.modulus, other.modulus, "linear forms over different fields");
        let q = self.modulus.get() as u64;
        let scaled = |c: u32| ((c as u64 * sign) % q) as u32;
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let a = self.terms.get(i);
            let b = other.terms.get(j);
            match (a, b) {
                (Some(&(va, ca)), Some(&(vb, cb))) if va == vb => {
                    let c = ((ca as u64 + scaled(cb) as u64) % q) as u32;
                    if c != 0 {
                        terms.push((va, c));
                    }
                    i += 1;
                    j += 1;
                }
                (Some(&(va, ca)), Some(&(vb, _))) if va < vb => {
                    terms.push((va, ca));
                    i += 1;
                }
                (Some(&(va, ca)), None) => {
                    terms.push((va, ca));
                    i += 1;
                }
                (_, Some(&(vb, cb))) => {
                    terms.push((vb, scaled(cb)));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        LinearForm {
            modulus: self.modulus,
            constant: ((self.constant as u64 + scaled(other.constant) as u64) % q) as u32,
            terms,
        }
    }

    pub fn plus(&self, other: &LinearForm) -> LinearForm {
        self.merge(other, 1)
    }

    pub fn minus(&self, other: &LinearForm) -> LinearForm {
        self.merge(other, self.modulus.get() as u64 - 1)
    }

    pub fn times(&self, c: FieldElement) -> LinearForm {
        if c.is_zero() {
            return LinearForm::constant(self.modulus.zero());
        }
        let q = self.modulus.get() as u64;
        let k = c.value() as u64;
        LinearForm {
            modulus: self.modulus,
            constant: ((self.constant as u64 * k) % q) as u32,
            terms: self
                .terms
                .iter()
                .map(|&(v, a)| (v, ((a as u64 * k) % q) as u32))
                .collect(),
        }
    }
}

impl fmt::Debug for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (v, c) in &self.terms {
            write!(f, " + {c}*x{v}")?;
        }
        Ok(())
    }
}

/// Registry of variables minted during an audited run.
#[derive(Clone, Debug, Default)]
pub struct VarRegistry {
    kinds: Vec<VarKind>,
}

impl VarRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, kind: VarKind) -> u32 {
        self.kinds.push(kind);
        (self.kinds.len() - 1) as u32
    }

    pub fn kind(&self, id: u32) -> VarKind {
        self.kinds[id as usize]
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }
}

/// A concrete value paired with its linear form.
#[derive(Clone)]
pub struct Tracked {
    value: FieldElement,
    form: LinearForm,
}

impl Tracked {
    pub fn form(&self) -> &LinearForm {
        &self.form
    }
}

/// Tracked symbols compare by value: protocol decoders compare the
/// payloads they receive, not their provenance.
impl PartialEq for Tracked {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl fmt::Debug for Tracked {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{:?}>", self.value, self.form)
    }
}

impl Symbol for Tracked {
    type Factory = VarRegistry;

    fn constant(v: FieldElement) -> Self {
        Tracked {
            value: v,
            form: LinearForm::constant(v),
        }
    }
    fn variable(reg: &mut VarRegistry, value: FieldElement, kind: VarKind) -> Self {
        let id = reg.register(kind);
        Tracked {
            value,
            form: LinearForm::var(value.modulus(), id),
        }
    }
    fn value(&self) -> FieldElement {
        self.value
    }
    fn form(&self) -> Option<&LinearForm> {
        Some(&self.form)
    }
    fn registry(factory: &VarRegistry) -> Option<&VarRegistry> {
        Some(factory)
    }
    fn plus(&self, other: &Self) -> Self {
        Tracked {
            value: self.value + other.value,
            form: self.form.plus(&other.form),
        }
    }
    fn minus(&self, other: &Self) -> Self {
        Tracked {
            value: self.value - other.value,
            form: self.form.minus(&other.form),
        }
    }
    fn times(&self, c: FieldElement) -> Self {
        Tracked {
            value: self.value * c,
            form: self.form.times(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms_cancel() {
        let q = FieldModulus::new(13).unwrap();
        let mut reg = VarRegistry::new();
        let a = Tracked::variable(&mut reg, q.elem(3), VarKind::ServerCr);
        let b = Tracked::variable(&mut reg, q.elem(5), VarKind::ServerCr);
        let s = a.plus(&b.times(q.elem(2))).minus(&b.times(q.elem(2)));
        assert_eq!(s.value(), q.elem(3));
        assert_eq!(s.form().terms(), &[(0, 1)]);
        let z = a.minus(&a);
        assert!(z.form().terms().is_empty());
    }

    #[test]
    fn combine_matches_plain() {
        let q = FieldModulus::new(13).unwrap();
        let v = combine(q, [(q.elem(2), q.elem(5)), (q.elem(3), q.elem(4))]);
        assert_eq!(v, q.elem(22 % 13));
    }
}
