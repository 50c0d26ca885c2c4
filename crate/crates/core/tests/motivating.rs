use std::collections::BTreeMap;

use rsrc_fsl::codec::Rational;
use rsrc_fsl::protocol::{PlanChoice, SystemParams};
use rsrc_fsl::sim::{FaultConfig, RoundInputs, Simulation, Status};
use rsrc_fsl::symbol::Tracked;

fn params() -> SystemParams {
    let mut p = SystemParams::new(4, 4, 4, 2, 3, 2, 2, Rational::new(1, 2));
    p.groups = vec![1, 1, 2, 3];
    p.plan = PlanChoice::Single { extra_messages: 1 };
    p
}

fn inputs() -> RoundInputs {
    let gammas = vec![vec![1], vec![1, 3], vec![1, 4], vec![1, 3, 4]];
    let increments = gammas
        .iter()
        .enumerate()
        .map(|(i, g)| g.iter().map(|&k| (k, vec![(i + k) as u64 % 13, (2 * i + k + 1) as u64 % 13])).collect::<BTreeMap<_, _>>())
        .collect();
    RoundInputs::new(gammas, increments)
}

#[test]
fn motivating_round_with_failed_database() {
    let p = params();
    let model = vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8]];
    let mut sim = Simulation::<Tracked>::with_model(&p, &model, 7).unwrap();
    let faults = FaultConfig {
        failed_dbs: vec![4],
        ..Default::default()
    };
    let out = sim.run_round(&inputs(), &faults).unwrap();
    println!("{}", out.report.to_json());
    assert_eq!(out.report.union, vec![1, 3, 4]);
    for (name, v) in out.report.verdicts.all() {
        assert_ne!(v.status, Status::Fail, "{name}: {}", v.detail);
    }
}
