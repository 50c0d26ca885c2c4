//! Prime-field scalars and dense matrices.
//!
//! Every element carries its modulus so that mixing elements from two
//! different fields is caught at the point of the operation.

mod matrix;

pub use matrix::{mat_inv, mat_mul, rank, vandermonde, FieldMatrix};
pub(crate) use matrix::solve_any;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not a prime modulus")]
    NotPrime(u64),
    #[error("element of F_{0} cannot be combined with an element of F_{1}")]
    ModulusMismatch(u32, u32),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("evaluation points are not pairwise distinct")]
    DuplicatePsi,
}

/// A prime modulus `q`. Construction checks primality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u32")]
pub struct FieldModulus(u32);

impl FieldModulus {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if q < 2 || q > u32::MAX as u64 / 2 || !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(FieldModulus(q as u32))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn elem(self, v: u64) -> FieldElement {
        FieldElement {
            value: (v % self.0 as u64) as u32,
            modulus: self,
        }
    }

    /// Embeds a signed integer, reducing negatives into `[0, q)`.
    pub fn signed(self, v: i64) -> FieldElement {
        let q = self.0 as i64;
        self.elem(v.rem_euclid(q) as u64)
    }

    pub fn zero(self) -> FieldElement {
        self.elem(0)
    }

    pub fn one(self) -> FieldElement {
        self.elem(1)
    }

    /// All elements in increasing order of representative.
    pub fn elements(self) -> impl Iterator<Item = FieldElement> {
        (0..self.0 as u64).map(move |v| self.elem(v))
    }
}

impl TryFrom<u64> for FieldModulus {
    type Error = FieldError;
    fn try_from(q: u64) -> Result<Self, FieldError> {
        FieldModulus::new(q)
    }
}

impl From<FieldModulus> for u32 {
    fn from(q: FieldModulus) -> u32 {
        q.0
    }
}

impl fmt::Display for FieldModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 4 {
        return n >= 2;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An element of `F_q`, stored as its canonical representative.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    value: u32,
    modulus: FieldModulus,
}

impl FieldElement {
    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> FieldModulus {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    /// Inverse by the extended Euclidean algorithm.
    pub fn inv(self) -> Result<FieldElement, FieldError> {
        if self.value == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let q = self.modulus.0 as i64;
        let (mut r0, mut r1) = (q, self.value as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        Ok(self.modulus.signed(t0))
    }

    pub fn pow(self, mut e: u64) -> FieldElement {
        let mut base = self;
        let mut acc = self.modulus.one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn checked_add(self, rhs: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(rhs)?;
        Ok(self + rhs)
    }

    pub fn checked_mul(self, rhs: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(rhs)?;
        Ok(self * rhs)
    }

    fn same_field(self, rhs: FieldElement) -> Result<(), FieldError> {
        if self.modulus != rhs.modulus {
            return Err(FieldError::ModulusMismatch(self.modulus.0, rhs.modulus.0));
        }
        Ok(())
    }

    #[track_caller]
    fn assert_same(self, rhs: FieldElement) {
        assert!(
            self.modulus == rhs.modulus,
            "field modulus mismatch: {} vs {}",
            self.modulus,
            rhs.modulus
        );
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    #[track_caller]
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.assert_same(rhs);
        let s = self.value as u64 + rhs.value as u64;
        self.modulus.elem(s)
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    #[track_caller]
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self.assert_same(rhs);
        let q = self.modulus.0 as u64;
        self.modulus.elem(self.value as u64 + q - rhs.value as u64)
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    #[track_caller]
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.assert_same(rhs);
        self.modulus.elem(self.value as u64 * rhs.value as u64)
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.modulus.zero() - self
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: FieldElement) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: FieldElement) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: FieldElement) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_composites() {
        assert!(FieldModulus::new(12).is_err());
        assert!(FieldModulus::new(1).is_err());
        assert!(FieldModulus::new(13).is_ok());
        assert!(FieldModulus::new(101).is_ok());
    }

    #[test]
    fn inverse_table_f13() {
        let q = FieldModulus::new(13).unwrap();
        for a in 1..13 {
            let x = q.elem(a);
            assert_eq!(x * x.inv().unwrap(), q.one());
        }
        assert_eq!(q.zero().inv(), Err(FieldError::ZeroInverse));
        assert_eq!(q.elem(2).inv().unwrap(), q.elem(7));
    }

    #[test]
    fn signed_embedding() {
        let q = FieldModulus::new(13).unwrap();
        assert_eq!(q.signed(-1), q.elem(12));
        assert_eq!(q.signed(-27), q.elem(12));
        assert_eq!(q.elem(4).pow(2), q.elem(3));
    }

    #[test]
    fn mismatch_is_reported() {
        let a = FieldModulus::new(13).unwrap().elem(3);
        let b = FieldModulus::new(5).unwrap().elem(3);
        assert_eq!(a.checked_add(b), Err(FieldError::ModulusMismatch(13, 5)));
    }
}
