//! Exact leakage of every pair of databases, before and after a repair.

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rsrc_fsl::codec::Rational;
use rsrc_fsl::protocol::SystemParams;
use rsrc_fsl::sim::{FaultConfig, RoundInputs, Simulation};
use rsrc_fsl::symbol::Tracked;

fn main() {
    let p = SystemParams::new(5, 4, 3, 4, 3, 2, 2, Rational::new(1, 3));
    let setup = p.setup().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut sim = Simulation::<Tracked>::new(&p, 3).unwrap();
    for (round, f) in [FaultConfig { failed_dbs: vec![2], ..Default::default() }, FaultConfig::default()]
        .iter()
        .enumerate()
    {
        let out = sim.run_round(&RoundInputs::random(&p, &mut rng), f).unwrap();
        let reg = sim.registry().unwrap();
        let audit = out.audit(&setup);
        println!("round {}: {} model symbols, budget {}", round + 1, p.k * p.l, p.delta * Rational::from((p.k * p.l) as i64));
        for set in (1..=p.n).combinations(p.e) {
            let set: BTreeSet<usize> = set.into_iter().collect();
            println!("  {set:?} learns {} symbols", audit.eavesdropper_leakage(reg, &set, true));
        }
    }
}
