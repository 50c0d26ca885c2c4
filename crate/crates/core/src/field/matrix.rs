use std::fmt;

use super::{FieldElement, FieldError, FieldModulus};

/// Dense row-major matrix over `F_q` with positive dimensions.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    modulus: FieldModulus,
    data: Vec<FieldElement>,
}

impl FieldMatrix {
    pub fn zeros(modulus: FieldModulus, rows: usize, cols: usize) -> Result<Self, FieldError> {
        if rows == 0 || cols == 0 {
            return Err(FieldError::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        Ok(FieldMatrix {
            rows,
            cols,
            modulus,
            data: vec![modulus.zero(); rows * cols],
        })
    }

    pub fn identity(modulus: FieldModulus, n: usize) -> Result<Self, FieldError> {
        let mut m = Self::zeros(modulus, n, n)?;
        for i in 0..n {
            m.set(i, i, modulus.one());
        }
        Ok(m)
    }

    pub fn from_rows(modulus: FieldModulus, rows: &[Vec<u64>]) -> Result<Self, FieldError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(modulus, rows.len(), cols)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(FieldError::DimensionMismatch(format!(
                    "row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                m.set(r, c, modulus.elem(v));
            }
        }
        Ok(m)
    }

    pub fn from_elements(
        modulus: FieldModulus,
        rows: usize,
        cols: usize,
        data: Vec<FieldElement>,
    ) -> Result<Self, FieldError> {
        if data.len() != rows * cols {
            return Err(FieldError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|e| e.modulus() != modulus) {
            return Err(FieldError::ModulusMismatch(modulus.get(), bad.modulus().get()));
        }
        let mut m = Self::zeros(modulus, rows, cols)?;
        m.data = data;
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> FieldModulus {
        self.modulus
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut t = FieldMatrix {
            rows: self.cols,
            cols: self.rows,
            modulus: self.modulus,
            data: vec![self.modulus.zero(); self.data.len()],
        };
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// The submatrix on the given row and column index lists, in that order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<FieldMatrix, FieldError> {
        let mut m = Self::zeros(self.modulus, rows.len(), cols.len())?;
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                if r >= self.rows || c >= self.cols {
                    return Err(FieldError::DimensionMismatch(format!(
                        "index ({r},{c}) outside {}x{}",
                        self.rows, self.cols
                    )));
                }
                m.set(i, j, self.get(r, c));
            }
        }
        Ok(m)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..r).all(|c| self.get(r, c) == self.get(c, r)))
    }
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} over F_{} [", self.rows, self.cols, self.modulus)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

pub fn mat_mul(a: &FieldMatrix, b: &FieldMatrix) -> Result<FieldMatrix, FieldError> {
    if a.modulus != b.modulus {
        return Err(FieldError::ModulusMismatch(a.modulus.get(), b.modulus.get()));
    }
    if a.cols != b.rows {
        return Err(FieldError::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let q = a.modulus.get() as u64;
    let mut out = FieldMatrix::zeros(a.modulus, a.rows, b.cols)?;
    for r in 0..a.rows {
        for c in 0..b.cols {
            let mut acc = 0u64;
            for t in 0..a.cols {
                acc = (acc + a.get(r, t).value() as u64 * b.get(t, c).value() as u64) % q;
            }
            out.set(r, c, a.modulus.elem(acc));
        }
    }
    Ok(out)
}

/// Reduces `m` in place to reduced row-echelon form, pivoting on the first
/// nonzero entry of each column. Returns the pivot columns.
fn rref(m: &mut FieldMatrix) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut lead = 0;
    for c in 0..m.cols {
        if lead == m.rows {
            break;
        }
        let Some(p) = (lead..m.rows).find(|&r| !m.get(r, c).is_zero()) else {
            continue;
        };
        if p != lead {
            for k in 0..m.cols {
                let tmp = m.get(p, k);
                m.set(p, k, m.get(lead, k));
                m.set(lead, k, tmp);
            }
        }
        let inv = m.get(lead, c).inv().expect("pivot is nonzero");
        for k in 0..m.cols {
            m.set(lead, k, m.get(lead, k) * inv);
        }
        for r in 0..m.rows {
            let f = m.get(r, c);
            if r != lead && !f.is_zero() {
                for k in 0..m.cols {
                    let v = m.get(r, k) - f * m.get(lead, k);
                    m.set(r, k, v);
                }
            }
        }
        pivots.push(c);
        lead += 1;
    }
    pivots
}

pub fn rank(m: &FieldMatrix) -> usize {
    let mut work = m.clone();
    rref(&mut work).len()
}

/// Gauss-Jordan inverse of a square matrix.
pub fn mat_inv(m: &FieldMatrix) -> Result<FieldMatrix, FieldError> {
    if m.rows != m.cols {
        return Err(FieldError::DimensionMismatch(format!(
            "cannot invert a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let mut aug = FieldMatrix::zeros(m.modulus, n, 2 * n)?;
    for r in 0..n {
        for c in 0..n {
            aug.set(r, c, m.get(r, c));
        }
        aug.set(r, n + r, m.modulus.one());
    }
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] >= n {
        return Err(FieldError::Singular);
    }
    let cols: Vec<usize> = (n..2 * n).collect();
    aug.select(&(0..n).collect::<Vec<_>>(), &cols)
}

/// Solves `a x = b` for one solution, setting free variables to zero.
/// Returns `Singular` when the system is inconsistent.
pub(crate) fn solve_any(a: &FieldMatrix, b: &[FieldElement]) -> Result<Vec<FieldElement>, FieldError> {
    if b.len() != a.rows {
        return Err(FieldError::DimensionMismatch(format!(
            "right-hand side has {} entries for {} equations",
            b.len(),
            a.rows
        )));
    }
    let n = a.cols;
    let mut aug = FieldMatrix::zeros(a.modulus, a.rows, n + 1)?;
    for r in 0..a.rows {
        for c in 0..n {
            aug.set(r, c, a.get(r, c));
        }
        aug.set(r, n, b[r]);
    }
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&n) {
        return Err(FieldError::Singular);
    }
    let mut x = vec![a.modulus.zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug.get(r, n);
    }
    Ok(x)
}

/// The `N x D` matrix whose row `j` is `[1, psi_j, ..., psi_j^(D-1)]`.
pub fn vandermonde(
    modulus: FieldModulus,
    psis: &[FieldElement],
    d: usize,
) -> Result<FieldMatrix, FieldError> {
    for (i, a) in psis.iter().enumerate() {
        if a.modulus() != modulus {
            return Err(FieldError::ModulusMismatch(modulus.get(), a.modulus().get()));
        }
        if psis[..i].contains(a) {
            return Err(FieldError::DuplicatePsi);
        }
    }
    let mut m = FieldMatrix::zeros(modulus, psis.len(), d)?;
    for (r, &p) in psis.iter().enumerate() {
        for c in 0..d {
            m.set(r, c, p.pow(c as u64));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f13() -> FieldModulus {
        FieldModulus::new(13).unwrap()
    }

    #[test]
    fn vandermonde_rows() {
        let q = f13();
        let psis: Vec<_> = (1..=4).map(|j| q.elem(j)).collect();
        let v = vandermonde(q, &psis, 3).unwrap();
        let expect = FieldMatrix::from_rows(
            q,
            &[vec![1, 1, 1], vec![1, 2, 4], vec![1, 3, 9], vec![1, 4, 3]],
        )
        .unwrap();
        assert_eq!(v, expect);
    }

    #[test]
    fn duplicate_psi_rejected() {
        let q = f13();
        let psis = vec![q.elem(2), q.elem(15)];
        assert_eq!(vandermonde(q, &psis, 2), Err(FieldError::DuplicatePsi));
    }

    #[test]
    fn inverse_round_trip() {
        let q = f13();
        let m = FieldMatrix::from_rows(q, &[vec![1, 1, 1], vec![1, 2, 4], vec![1, 3, 9]]).unwrap();
        let inv = mat_inv(&m).unwrap();
        assert_eq!(mat_mul(&m, &inv).unwrap(), FieldMatrix::identity(q, 3).unwrap());
    }

    #[test]
    fn singular_and_rank() {
        let q = f13();
        let m = FieldMatrix::from_rows(q, &[vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]]).unwrap();
        assert_eq!(rank(&m), 2);
        assert_eq!(mat_inv(&m), Err(FieldError::Singular));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(FieldMatrix::zeros(f13(), 0, 3).is_err());
    }

    #[test]
    fn solve_underdetermined() {
        let q = f13();
        let a = FieldMatrix::from_rows(q, &[vec![1, 1], vec![2, 2]]).unwrap();
        let x = solve_any(&a, &[q.elem(3), q.elem(6)]).unwrap();
        assert_eq!(x[0] + x[1], q.elem(3));
        assert!(solve_any(&a, &[q.elem(3), q.elem(5)]).is_err());
    }
}
