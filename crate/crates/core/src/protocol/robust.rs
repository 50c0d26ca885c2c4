//! Decoders that tolerate Byzantine databases.

use super::ProtocolError;
use crate::field::{mat_inv, solve_any, FieldElement, FieldMatrix, FieldModulus};
use crate::symbol::{combine, Symbol};

/// Majority vote over `2A+1` copies of the same payload. Needs `A+1`
/// identical copies.
pub fn adversary_decode_repetition<S: Symbol>(copies: &[Vec<S>], a: usize) -> Result<Vec<S>, ProtocolError> {
    let values = |v: &[S]| v.iter().map(Symbol::value).collect::<Vec<_>>();
    for cand in copies {
        let key = values(cand);
        let votes = copies.iter().filter(|c| values(c) == key).count();
        if votes > a && 2 * votes > copies.len() {
            return Ok(cand.clone());
        }
    }
    Err(ProtocolError::DecodingFailure(format!(
        "no payload reached a majority among {} copies",
        copies.len()
    )))
}

fn poly_eval(coeffs: &[FieldElement], x: FieldElement, q: FieldModulus) -> FieldElement {
    coeffs.iter().rev().fold(q.zero(), |acc, &c| acc * x + c)
}

/// Long division; returns `(quotient, remainder)`. `den` must have a
/// nonzero leading coefficient.
fn poly_divmod(num: &[FieldElement], den: &[FieldElement], q: FieldModulus) -> (Vec<FieldElement>, Vec<FieldElement>) {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let lead_inv = den[dd].inv().expect("leading coefficient nonzero");
    if rem.len() <= dd {
        return (vec![q.zero()], rem);
    }
    let mut quot = vec![q.zero(); rem.len() - dd];
    for i in (0..quot.len()).rev() {
        let f = rem[i + dd] * lead_inv;
        quot[i] = f;
        for t in 0..=dd {
            rem[i + t] -= f * den[t];
        }
    }
    rem.truncate(dd);
    (quot, rem)
}

/// Berlekamp-Welch decoding of a degree `< d` polynomial from evaluations
/// `(x_i, y_i)`, up to `a` of which may be wrong. Returns the coefficients.
/// Needs at most `a` errors and at least `d + 2a` points.
pub fn adversary_decode_rs<S: Symbol>(
    q: FieldModulus,
    points: &[(FieldElement, S)],
    d: usize,
    a: usize,
) -> Result<Vec<S>, ProtocolError> {
    let n = points.len();
    if n < d + 2 * a {
        return Err(ProtocolError::MissingShare(format!(
            "need {} evaluations to correct {a} errors of a degree-{} code, got {n}",
            d + 2 * a,
            d - 1
        )));
    }
    let ys: Vec<FieldElement> = points.iter().map(|(_, y)| y.value()).collect();
    let xs: Vec<FieldElement> = points.iter().map(|(x, _)| *x).collect();
    // Unknowns: e_0..e_{a-1} (monic error locator), q_0..q_{d+a-1}.
    let unknowns = a + d + a;
    let mut sys = FieldMatrix::zeros(q, n, unknowns)?;
    let mut rhs = Vec::with_capacity(n);
    for i in 0..n {
        for t in 0..a {
            sys.set(i, t, -(ys[i] * xs[i].pow(t as u64)));
        }
        for t in 0..d + a {
            sys.set(i, a + t, xs[i].pow(t as u64));
        }
        rhs.push(ys[i] * xs[i].pow(a as u64));
    }
    let fail = || ProtocolError::DecodingFailure("evaluations are not within the correction radius".into());
    let sol = solve_any(&sys, &rhs).map_err(|_| fail())?;
    let mut locator: Vec<FieldElement> = sol[..a].to_vec();
    locator.push(q.one());
    let (poly, rem) = poly_divmod(&sol[a..], &locator, q);
    if rem.iter().any(|r| !r.is_zero()) || poly[d.min(poly.len())..].iter().any(|c| !c.is_zero()) {
        return Err(fail());
    }
    let agree: Vec<usize> = (0..n).filter(|&i| poly_eval(&poly, xs[i], q) == ys[i]).collect();
    if agree.len() + a < n {
        return Err(fail());
    }
    // Re-derive the coefficients from honest points so that symbol
    // provenance follows the payloads actually used.
    let pick = &agree[..d];
    let mut v = FieldMatrix::zeros(q, d, d)?;
    for (r, &i) in pick.iter().enumerate() {
        for c in 0..d {
            v.set(r, c, xs[i].pow(c as u64));
        }
    }
    let inv = mat_inv(&v).map_err(|_| fail())?;
    Ok((0..d)
        .map(|c| combine(q, pick.iter().enumerate().map(|(r, &i)| (inv.get(c, r), points[i].1.clone()))))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_vote() {
        let q = FieldModulus::new(13).unwrap();
        let good = vec![q.elem(3), q.elem(4)];
        let bad = vec![q.elem(9), q.elem(4)];
        assert_eq!(
            adversary_decode_repetition(&[bad.clone(), good.clone(), good.clone()], 1).unwrap(),
            good
        );
        assert!(adversary_decode_repetition(&[bad, good.clone(), vec![q.one(); 2]], 1).is_err());
    }

    #[test]
    fn corrects_up_to_a_errors() {
        let q = FieldModulus::new(13).unwrap();
        let coeffs = [q.elem(5), q.elem(1), q.elem(7)];
        let mut pts: Vec<(FieldElement, FieldElement)> = (1..=7u64)
            .map(|x| (q.elem(x), poly_eval(&coeffs, q.elem(x), q)))
            .collect();
        pts[1].1 += q.elem(3);
        pts[5].1 += q.elem(1);
        assert_eq!(adversary_decode_rs(q, &pts, 3, 2).unwrap(), coeffs.to_vec());
        pts[3].1 += q.elem(1);
        assert!(adversary_decode_rs(q, &pts, 3, 2).is_err() || adversary_decode_rs(q, &pts, 3, 2).unwrap() != coeffs.to_vec());
    }

    #[test]
    fn no_errors_underdetermined_locator() {
        let q = FieldModulus::new(13).unwrap();
        let coeffs = [q.elem(2), q.elem(0), q.elem(11)];
        let pts: Vec<_> = (1..=5u64).map(|x| (q.elem(x), poly_eval(&coeffs, q.elem(x), q))).collect();
        assert_eq!(adversary_decode_rs(q, &pts, 3, 1).unwrap(), coeffs.to_vec());
    }
}
