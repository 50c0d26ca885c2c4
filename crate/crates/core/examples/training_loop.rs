//! Ten rounds with shifting selections and a failure every few rounds.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rsrc_fsl::codec::Rational;
use rsrc_fsl::field::FieldElement;
use rsrc_fsl::protocol::SystemParams;
use rsrc_fsl::sim::{FaultConfig, RoundInputs, Simulation};

fn main() {
    let p = SystemParams::new(5, 8, 6, 4, 3, 2, 1, Rational::new(1, 4));
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut sim = Simulation::<FieldElement>::new(&p, 6).unwrap();
    for round in 1..=10 {
        let faults = if round % 4 == 0 {
            FaultConfig { failed_dbs: vec![round % 5 + 1], ..Default::default() }
        } else {
            FaultConfig::default()
        };
        let out = sim.run_round(&RoundInputs::random(&p, &mut rng), &faults).unwrap();
        println!(
            "round {round:>2}: union {:?}, {} symbols sent, reliability {:?}",
            out.report.union, out.report.costs.total, out.report.verdicts.reliability.status
        );
    }
}
