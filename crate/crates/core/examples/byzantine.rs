//! One Byzantine database out of seven under each corruption strategy.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rsrc_fsl::codec::Rational;
use rsrc_fsl::field::FieldElement;
use rsrc_fsl::protocol::SystemParams;
use rsrc_fsl::sim::{AdversaryStrategy, FaultConfig, RoundInputs, Simulation};

fn main() {
    let mut p = SystemParams::new(7, 4, 3, 2, 3, 1, 1, Rational::new(1, 2));
    p.a = 1;
    let inputs = RoundInputs::random(&p, &mut ChaCha20Rng::seed_from_u64(2));
    let mut clean = Simulation::<FieldElement>::new(&p, 2).unwrap();
    clean.run_round(&inputs, &FaultConfig::default()).unwrap();
    for strategy in [AdversaryStrategy::Random, AdversaryStrategy::TargetedFlip, AdversaryStrategy::Replay] {
        let mut sim = Simulation::<FieldElement>::new(&p, 2).unwrap();
        let f = FaultConfig {
            adversaries: vec![3],
            adversary_strategy: strategy,
            ..Default::default()
        };
        let out = sim.run_round(&inputs, &f).unwrap();
        let same = sim.decode_models(&[1, 2, 4]).unwrap() == clean.decode_models(&[1, 2, 4]).unwrap();
        println!(
            "{strategy:?}: union {:?}, matches the honest run: {same}, {}",
            out.report.union, out.report.verdicts.reliability.detail
        );
    }
}
