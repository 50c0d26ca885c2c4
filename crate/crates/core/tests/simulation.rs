use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use rsrc_fsl::codec::Rational;
use rsrc_fsl::field::FieldElement;
use rsrc_fsl::protocol::{DatabaseState, SystemParams};
use rsrc_fsl::sim::{AdversaryStrategy, FaultConfig, RoundInputs, Simulation};
use rsrc_fsl::symbol::{Symbol, Tracked};

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn base() -> SystemParams {
    let mut p = SystemParams::new(5, 6, 4, 3, 3, 2, 2, r(1, 2));
    p.groups = vec![1, 1, 2, 3, 4, 5];
    p
}

fn byzantine() -> SystemParams {
    let mut p = SystemParams::new(7, 4, 3, 2, 3, 1, 1, r(1, 2));
    p.a = 1;
    p
}

fn values<S: Symbol>(sim: &Simulation<S>, dbs: &[usize]) -> Vec<Vec<u32>>
where
    S::Factory: Default,
{
    sim.decode_models(dbs)
        .unwrap()
        .iter()
        .map(|m| m.iter().map(|x| (*x).value()).collect())
        .collect()
}

fn all_subsets_agree<S: Symbol>(sim: &Simulation<S>, p: &SystemParams) -> Vec<Vec<u32>>
where
    S::Factory: Default,
{
    let first = values(sim, &(1..=p.d).collect::<Vec<_>>());
    for set in (1..=p.n).combinations(p.d) {
        assert_eq!(values(sim, &set), first, "databases {set:?}");
    }
    first
}

fn storage_consistent<S: Symbol>(dbs: &[Option<DatabaseState<S>>]) {
    let live: Vec<&DatabaseState<S>> = dbs.iter().flatten().collect();
    let shape = |d: &DatabaseState<S>| -> Vec<Vec<usize>> {
        d.store.iter().map(|rows| rows.iter().map(|r| r.symbols.len()).collect()).collect()
    };
    let plain = |d: &DatabaseState<S>| -> Vec<u32> {
        d.hat_k.iter().chain(d.hat_kl.iter().flatten()).map(|s| s.value().value()).collect()
    };
    for d in &live[1..] {
        assert_eq!(shape(d), shape(live[0]), "database {} shape", d.id);
        assert_eq!(plain(d), plain(live[0]), "database {} plain randomness", d.id);
    }
}

#[test]
fn late_answers_match_drop_outs_and_leak_nothing() {
    let p = base();
    let setup = p.setup().unwrap();
    for seed in 0..6u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let inputs = RoundInputs::random(&p, &mut rng);
        let client = rng.gen_range(1..=p.c);
        let mut late = Simulation::<Tracked>::new(&p, seed).unwrap();
        let mut dropped = Simulation::<Tracked>::new(&p, seed).unwrap();
        let a = late
            .run_round(&inputs, &FaultConfig { late_clients: vec![client], ..Default::default() })
            .unwrap();
        let b = dropped
            .run_round(&inputs, &FaultConfig { dropped_clients: vec![client], ..Default::default() })
            .unwrap();
        assert_eq!(a.report.union, b.report.union);
        assert_eq!(all_subsets_agree(&late, &p), all_subsets_agree(&dropped, &p));
        let reg = late.registry().unwrap();
        let audit = a.audit(&setup);
        for set in (1..=p.n).combinations(p.e) {
            let set: BTreeSet<usize> = set.into_iter().collect();
            assert_eq!(
                audit.eavesdropper_leakage(reg, &set, true),
                audit.eavesdropper_leakage(reg, &set, false),
                "seed {seed}: late traffic adds rank for {set:?}"
            );
        }
    }
}

#[test]
fn adversaries_do_not_change_the_outcome() {
    let p = byzantine();
    let strategies = [AdversaryStrategy::Random, AdversaryStrategy::TargetedFlip, AdversaryStrategy::Replay];
    for trial in 0..200u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(trial);
        let inputs = RoundInputs::random(&p, &mut rng);
        let mut honest = Simulation::<FieldElement>::new(&p, trial).unwrap();
        let clean = honest.run_round(&inputs, &FaultConfig::default()).unwrap();
        let faults = FaultConfig {
            adversaries: vec![rng.gen_range(1..=p.n)],
            adversary_strategy: strategies[rng.gen_range(0..3)],
            ..Default::default()
        };
        let mut attacked = Simulation::<FieldElement>::new(&p, trial).unwrap();
        let out = attacked.run_round(&inputs, &faults).unwrap();
        assert_eq!(out.report.union, clean.report.union, "trial {trial} {faults:?}");
        assert_eq!(all_subsets_agree(&attacked, &p), all_subsets_agree(&honest, &p), "trial {trial} {faults:?}");
    }
}

#[test]
fn dropping_clients_equals_a_smaller_population() {
    let p = base();
    for seed in 0..10u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(50 + seed);
        let inputs = RoundInputs::random(&p, &mut rng);
        let gone: BTreeSet<usize> = sample(&mut rng, p.c, 2).into_iter().map(|i| i + 1).collect();
        let model: Vec<Vec<u64>> = (0..p.k).map(|_| (0..p.l).map(|_| rng.gen_range(0..13)).collect()).collect();

        let mut full = Simulation::<FieldElement>::with_model(&p, &model, seed).unwrap();
        let a = full
            .run_round(&inputs, &FaultConfig { dropped_clients: gone.iter().copied().collect(), ..Default::default() })
            .unwrap();

        let keep: Vec<usize> = (1..=p.c).filter(|i| !gone.contains(i)).collect();
        let mut small = p.clone();
        small.c = keep.len();
        small.groups = keep.iter().map(|&i| p.groups[i - 1]).collect();
        let small_inputs = RoundInputs::new(
            keep.iter().map(|&i| inputs.gammas[i - 1].clone()).collect(),
            keep.iter().map(|&i| inputs.increments[i - 1].clone()).collect(),
        );
        let mut reduced = Simulation::<FieldElement>::with_model(&small, &model, seed + 100).unwrap();
        let b = reduced.run_round(&small_inputs, &FaultConfig::default()).unwrap();
        assert_eq!(a.report.union, b.report.union, "seed {seed} without {gone:?}");
        assert_eq!(all_subsets_agree(&full, &p), all_subsets_agree(&reduced, &small), "seed {seed}");
    }
}

#[test]
fn five_rounds_stay_reliable_and_consistent() {
    let p = base();
    let schedule = [
        FaultConfig::default(),
        FaultConfig { failed_dbs: vec![2], ..Default::default() },
        FaultConfig { dropped_dbs: vec![5], dropped_clients: vec![1], ..Default::default() },
        FaultConfig { late_clients: vec![3], failed_dbs: vec![1], ..Default::default() },
        FaultConfig::default(),
    ];
    for seed in 0..3u64 {
        let mut sim = Simulation::<FieldElement>::new(&p, seed).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut truth: Vec<Vec<u64>> =
            sim.model().iter().map(|m| m.iter().map(|x| u64::from((*x).value())).collect()).collect();
        for faults in &schedule {
            let inputs = RoundInputs::random(&p, &mut rng);
            let out = sim.run_round(&inputs, faults).unwrap();
            assert!(out.report.verdicts.reliability.passed(), "{}", out.report.verdicts.reliability.detail);
            for &i in &out.report.contributing_clients {
                for (&k, inc) in &inputs.increments[i - 1] {
                    for (pos, v) in inc.iter().enumerate() {
                        truth[k - 1][pos] = (truth[k - 1][pos] + v) % 13;
                    }
                }
            }
            let got: Vec<Vec<u64>> = all_subsets_agree(&sim, &p)
                .into_iter()
                .map(|m| m.into_iter().map(u64::from).collect())
                .collect();
            assert_eq!(got, truth, "seed {seed} round {}", sim.round());
            storage_consistent(sim.databases());
        }
    }
}

#[test]
fn round_without_selections_keeps_the_model() {
    let p = base();
    let mut sim = Simulation::<Tracked>::new(&p, 9).unwrap();
    let before = all_subsets_agree(&sim, &p);
    let coded = |sim: &Simulation<Tracked>| -> Vec<Vec<u32>> {
        sim.databases()
            .iter()
            .flatten()
            .map(|d| d.store.iter().flatten().flat_map(|r| r.symbols.iter().map(|s| s.value().value())).collect())
            .collect()
    };
    let stored = coded(&sim);
    let inputs = RoundInputs::new(vec![Vec::new(); p.c], vec![BTreeMap::new(); p.c]);
    let out = sim.run_round(&inputs, &FaultConfig::default()).unwrap();
    assert!(out.report.union.is_empty());
    assert_eq!(all_subsets_agree(&sim, &p), before);
    assert_eq!(coded(&sim), stored);
    for (name, v) in out.report.verdicts.all() {
        assert!(!v.failed(), "{name}: {}", v.detail);
    }
}

#[test]
fn every_verdict_holds_across_fault_mixes() {
    let p = base();
    let mixes = [
        FaultConfig { dropped_clients: vec![2], failed_dbs: vec![3], ..Default::default() },
        FaultConfig { late_clients: vec![1], dropped_dbs: vec![2], ..Default::default() },
        FaultConfig { dropped_clients: vec![6], late_clients: vec![4], failed_dbs: vec![5], ..Default::default() },
        FaultConfig { failed_dbs: vec![1], eavesdropper: vec![1, 4], ..Default::default() },
    ];
    for (i, faults) in mixes.iter().enumerate() {
        for seed in 0..2u64 {
            let mut sim = Simulation::<Tracked>::new(&p, seed).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(seed + 10 * i as u64);
            for f in [faults.clone(), FaultConfig::default()] {
                let out = sim.run_round(&RoundInputs::random(&p, &mut rng), &f).unwrap();
                for (name, v) in out.report.verdicts.all() {
                    assert!(!v.failed(), "mix {i} seed {seed} {name}: {}", v.detail);
                }
                storage_consistent(sim.databases());
            }
        }
    }
}

#[test]
fn byzantine_rounds_pass_their_audits() {
    let p = byzantine();
    for (seed, strategy) in [AdversaryStrategy::Random, AdversaryStrategy::TargetedFlip, AdversaryStrategy::Replay]
        .into_iter()
        .enumerate()
    {
        let mut sim = Simulation::<Tracked>::new(&p, seed as u64).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed as u64);
        for round in 0..2 {
            let faults = FaultConfig {
                adversaries: vec![(seed + round) % p.n + 1],
                adversary_strategy: strategy,
                ..Default::default()
            };
            let out = sim.run_round(&RoundInputs::random(&p, &mut rng), &faults).unwrap();
            for (name, v) in out.report.verdicts.all() {
                assert!(!v.failed(), "{strategy:?} round {round} {name}: {}", v.detail);
            }
        }
    }
}
