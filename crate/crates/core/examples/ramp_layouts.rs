//! Costs and leakage of every layout on the ramp for D = 3, N = 4.

use itertools::Itertools;
use rsrc_fsl::codec::{build_layout, fmt_rational, leakage_fraction, Rational};
use rsrc_fsl::field::{vandermonde, FieldModulus};

fn main() {
    let q = FieldModulus::new(13).unwrap();
    let points: Vec<_> = (1..=4).map(|j| q.elem(j)).collect();
    let psi = vandermonde(q, &points, 3).unwrap();
    for lambda in 1..3 {
        println!("lambda = {lambda}");
        let top = 6 - (3 - lambda) * (4 - lambda) / 2;
        for extra in 0..=top {
            let l = build_layout(3, lambda, extra).unwrap();
            let b = l.messages() as i64;
            let leak = (1..=4)
                .combinations(lambda)
                .map(|s| leakage_fraction(&[(l.clone(), 1)], &psi, &s).unwrap())
                .max()
                .unwrap();
            println!(
                "  B = {b}: C1 = {}, C2 = {}, S = {}, normalized ({}, {}, {}), leak {}",
                l.c1(),
                l.c2(),
                l.storage(),
                fmt_rational(&Rational::new(l.c1() as i64, b)),
                fmt_rational(&Rational::new(l.c2() as i64, b)),
                fmt_rational(&Rational::new(l.storage() as i64, b)),
                fmt_rational(&leak)
            );
            println!("{l:?}");
        }
    }
}
