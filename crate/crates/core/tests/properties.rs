use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use rsrc_fsl::codec::{
    build_layout, encode_instance, leakage_fraction, plan_time_sharing, realized_costs, reconstruct, repair_assemble,
    repair_share, saturation_leak, theorem2_bounds, OmegaInstance, OmegaLayout, Rational,
};
use rsrc_fsl::field::{mat_inv, mat_mul, rank, vandermonde, FieldElement, FieldMatrix, FieldModulus};
use rsrc_fsl::protocol::{crg_scalar_c, crg_zero_sum_set};
use rsrc_fsl::sim::analysis::{mutual_information, sparse};
use rsrc_fsl::symbol::{Symbol, Tracked, VarKind, VarRegistry};

fn field(q: u64) -> FieldModulus {
    FieldModulus::new(q).unwrap()
}

fn psi(q: FieldModulus, n: usize, d: usize) -> FieldMatrix {
    let pts: Vec<FieldElement> = (1..=n as u64).map(|j| q.elem(j)).collect();
    vandermonde(q, &pts, d).unwrap()
}

fn random_layout(rng: &mut ChaCha20Rng, d: usize) -> (OmegaLayout, usize) {
    let lambda = rng.gen_range(1..d);
    let extra = rng.gen_range(0..=d * (d + 1) / 2 - (d - lambda) * (d - lambda + 1) / 2);
    (build_layout(d, lambda, extra).unwrap(), lambda)
}

fn random_instance(rng: &mut ChaCha20Rng, q: FieldModulus, layout: OmegaLayout) -> (OmegaInstance<FieldElement>, Vec<FieldElement>) {
    let qq = q.get() as u64;
    let msgs: Vec<FieldElement> = (0..layout.messages()).map(|_| q.elem(rng.gen_range(0..qq))).collect();
    let rand: Vec<FieldElement> = (0..layout.randomness()).map(|_| q.elem(rng.gen_range(0..qq))).collect();
    (OmegaInstance::new(layout, msgs.clone(), rand).unwrap(), msgs)
}

/// Rank by plain row reduction over `u64`, written separately from the library.
fn oracle_rank(rows: &[Vec<u64>], q: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_multiple_of(q)) else { continue };
        m.swap(r, p);
        let inv = (1..q).find(|&x| m[r][c] * x % q == 1).unwrap();
        for v in m[r].iter_mut() {
            *v = *v * inv % q;
        }
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] = (m[i][j] + q * q - f * m[r][j] % q) % q;
                }
            }
        }
        r += 1;
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_of_nonzero(q in prop::sample::select(vec![5u64, 13, 101]), a in 1u64..1000) {
        let q = field(q);
        let a = q.elem(a);
        prop_assume!(!a.is_zero());
        prop_assert_eq!(a * a.inv().unwrap(), q.one());
    }

    #[test]
    fn matrix_inverse_and_rank(q in prop::sample::select(vec![5u64, 13]), n in 1usize..=6, m in 1usize..=6, seed: u64) {
        let f = field(q);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let rows: Vec<Vec<u64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(0..q)).collect()).collect();
        let a = FieldMatrix::from_rows(f, &rows).unwrap();
        let rk = rank(&a);
        prop_assert_eq!(rk, oracle_rank(&rows, q));
        if n == m && rk == n {
            let prod = mat_mul(&a, &mat_inv(&a).unwrap()).unwrap();
            prop_assert_eq!(prod, FieldMatrix::identity(f, n).unwrap());
        } else if n == m {
            prop_assert!(mat_inv(&a).is_err());
        }
    }

    #[test]
    fn codec_round_trip(q in prop::sample::select(vec![13u64, 101]), d in 2usize..=4, extra_n in 1usize..=2, seed: u64) {
        let f = field(q);
        let n = d + extra_n;
        let ps = psi(f, n, d);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (layout, _) = random_layout(&mut rng, d);
        let (inst, msgs) = random_instance(&mut rng, f, layout.clone());
        let rows = encode_instance(&inst, &ps, 0).unwrap();
        for set in (0..n).combinations(d) {
            let chosen: Vec<_> = set.iter().map(|&i| rows[i].clone()).collect();
            let rec = reconstruct(&chosen, &layout, &ps).unwrap();
            prop_assert_eq!(&rec.messages, &msgs);
        }
    }

    #[test]
    fn repair_reproduces_the_lost_row(d in 2usize..=4, extra_n in 1usize..=2, seed: u64) {
        let f = field(13);
        let n = d + extra_n;
        let ps = psi(f, n, d);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (layout, _) = random_layout(&mut rng, d);
        let (inst, _) = random_instance(&mut rng, f, layout);
        let rows = encode_instance(&inst, &ps, 0).unwrap();
        for failed in 1..=n {
            let others: Vec<usize> = (1..=n).filter(|&j| j != failed).collect();
            for helpers in others.into_iter().combinations(d) {
                let shares: Vec<_> = helpers
                    .iter()
                    .map(|&h| (h, repair_share(&rows[h - 1], &ps, failed).unwrap()))
                    .collect();
                let rebuilt = repair_assemble(&shares, &ps, failed, 0).unwrap();
                prop_assert_eq!(&rebuilt.symbols, &rows[failed - 1].symbols);
            }
        }
    }

    #[test]
    fn plans_respect_their_target(d in 2usize..=5, num in 0i64..=24, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let lambda = rng.gen_range(1..d);
        let leak = Rational::new(num, 24);
        let plan = plan_time_sharing(d, lambda, leak).unwrap();
        let n = d + 1;
        let ps = psi(field(13), n, d);
        let parts: Vec<(OmegaLayout, u64)> = plan.components().map(|(_, l, c)| (l.clone(), c)).collect();
        for set in (1..=n).combinations(lambda) {
            prop_assert!(leakage_fraction(&parts, &ps, &set).unwrap() <= leak);
        }
        if leak <= saturation_leak(d, lambda) {
            prop_assert_eq!(realized_costs(&plan), theorem2_bounds(d, lambda, leak).unwrap());
        }
    }
}

#[test]
fn vandermonde_rows_are_independent() {
    for q in [7u64, 13] {
        let f = field(q);
        for n in 2..=6usize {
            for d in 1..=n {
                let ps = psi(f, n, d);
                for set in (0..n).combinations(d) {
                    let sub = ps.select(&set, &(0..d).collect::<Vec<_>>()).unwrap();
                    assert_eq!(rank(&sub), d, "q={q} N={n} D={d} rows {set:?}");
                }
            }
        }
    }
}

#[test]
fn leakage_grows_along_the_ramp() {
    let f = field(13);
    for d in 2..=5usize {
        let ps = psi(f, d + 1, d);
        for lambda in 1..d {
            let top = d * (d + 1) / 2 - (d - lambda) * (d - lambda + 1) / 2;
            for set in (1..=d + 1).combinations(lambda) {
                let leaks: Vec<Rational> = (0..=top)
                    .map(|e| leakage_fraction(&[(build_layout(d, lambda, e).unwrap(), 1)], &ps, &set).unwrap())
                    .collect();
                assert!(leaks.windows(2).all(|w| w[0] <= w[1]), "D={d} lambda={lambda} {set:?}: {leaks:?}");
            }
        }
    }
}

/// The repaired row has the same linear dependence on messages and
/// randomness as the original, so every coalition's leakage is unchanged.
#[test]
fn repair_leaves_leakage_unchanged() {
    let f = field(13);
    let (n, d) = (5usize, 3usize);
    let ps = psi(f, n, d);
    for lambda in 1..d {
        for extra in 0..=d * (d + 1) / 2 - (d - lambda) * (d - lambda + 1) / 2 {
            let layout = build_layout(d, lambda, extra).unwrap();
            let mut reg = VarRegistry::new();
            let msgs: Vec<Tracked> = (0..layout.messages())
                .map(|pos| Tracked::variable(&mut reg, f.elem(pos as u64 + 2), VarKind::Model { k: 1, pos }))
                .collect();
            let rand: Vec<Tracked> = (0..layout.randomness())
                .map(|i| Tracked::variable(&mut reg, f.elem(3 * i as u64 + 1), VarKind::StorageRandomness))
                .collect();
            let inst = OmegaInstance::new(layout, msgs, rand).unwrap();
            let rows = encode_instance(&inst, &ps, 0).unwrap();
            let is_msg = |v: u32| matches!(reg.kind(v), VarKind::Model { .. });
            for failed in 1..=n {
                let shares: Vec<_> = (1..=n)
                    .filter(|&j| j != failed)
                    .take(d)
                    .map(|h| (h, repair_share(&rows[h - 1], &ps, failed).unwrap()))
                    .collect();
                let rebuilt = repair_assemble(&shares, &ps, failed, 0).unwrap();
                let mut repaired = rows.clone();
                repaired[failed - 1] = rebuilt;
                for set in (0..n).combinations(lambda) {
                    let view = |rs: &[rsrc_fsl::codec::CodedRow<Tracked>]| -> Vec<Vec<(u32, u32)>> {
                        set.iter().flat_map(|&i| rs[i].symbols.iter().map(|s| sparse(s.form()))).collect()
                    };
                    assert_eq!(
                        mutual_information(f, &view(&rows), is_msg),
                        mutual_information(f, &view(&repaired), is_msg)
                    );
                }
            }
        }
    }
}

/// With two contributors at q = 5, every zero-sum set sums to zero, every
/// scalar is nonzero, and fixing one contributor leaves the result uniform.
#[test]
fn common_randomness_invariants() {
    let q = field(5);
    let els: Vec<FieldElement> = q.elements().collect();
    let nz: Vec<FieldElement> = els.iter().copied().filter(|x| !x.is_zero()).collect();
    let pairs: Vec<Vec<FieldElement>> = (0..2).map(|_| els.iter().copied()).multi_cartesian_product().collect();
    for known in &pairs {
        let mut seen: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for other in &pairs {
            let set = crg_zero_sum_set(q, &[known.as_slice(), other.as_slice()]).unwrap();
            assert_eq!(set.len(), 3);
            assert!(set.iter().fold(q.zero(), |a, &b| a + b).is_zero());
            *seen.entry(set[..2].iter().map(|x| (*x).value()).collect()).or_default() += 1;
        }
        assert_eq!(seen.len(), 25);
        assert!(seen.values().all(|&c| c == 1));
    }
    for &known in &nz {
        let products: BTreeSet<u32> = nz.iter().map(|&o| crg_scalar_c(q, &[known, o]).unwrap().value()).collect();
        assert_eq!(products.len(), 4);
        assert!(!products.contains(&0));
    }
    assert!(crg_scalar_c(q, &[q.one(), q.zero()]).is_err());
}
