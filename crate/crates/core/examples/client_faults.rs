//! Dropped and late clients: their selections and increments vanish from
//! the round, the rest commit as if they had never joined.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rsrc_fsl::codec::Rational;
use rsrc_fsl::field::FieldElement;
use rsrc_fsl::protocol::SystemParams;
use rsrc_fsl::sim::{FaultConfig, RoundInputs, Simulation};

fn main() {
    let p = SystemParams::new(5, 6, 5, 3, 3, 2, 2, Rational::new(1, 2));
    let inputs = RoundInputs::random(&p, &mut ChaCha20Rng::seed_from_u64(1));
    for (i, g) in inputs.gammas.iter().enumerate() {
        println!("client {} wants {g:?}", i + 1);
    }
    let cases = [
        ("no faults", FaultConfig::default()),
        ("clients 2 and 5 drop", FaultConfig { dropped_clients: vec![2, 5], ..Default::default() }),
        ("client 3 late", FaultConfig { late_clients: vec![3], ..Default::default() }),
        ("database 4 silent", FaultConfig { dropped_dbs: vec![4], ..Default::default() }),
    ];
    for (name, f) in cases {
        let mut sim = Simulation::<FieldElement>::new(&p, 1).unwrap();
        let out = sim.run_round(&inputs, &f).unwrap();
        println!(
            "{name:<22} union {:?}, contributing {:?}, reliability {:?}",
            out.report.union, out.report.contributing_clients, out.report.verdicts.reliability.status
        );
    }
}
