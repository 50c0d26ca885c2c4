//! Line-delimited transcript of one round.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rsrc_fsl::codec::Rational;
use rsrc_fsl::field::FieldElement;
use rsrc_fsl::protocol::SystemParams;
use rsrc_fsl::sim::{dump_transcript, transcript, FaultConfig, RoundInputs, Simulation};

fn main() {
    let p = SystemParams::new(4, 3, 2, 2, 3, 1, 1, Rational::new(1, 2));
    let inputs = RoundInputs::random(&p, &mut ChaCha20Rng::seed_from_u64(4));
    let mut sim = Simulation::<FieldElement>::new(&p, 4).unwrap();
    let out = sim
        .run_round(&inputs, &FaultConfig { late_clients: vec![2], ..Default::default() })
        .unwrap();
    print!("{}", dump_transcript(&transcript(&out.log)));
    println!("sha256 {}", out.report.transcript.sha256);
}
