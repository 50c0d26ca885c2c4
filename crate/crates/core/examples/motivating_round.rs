//! Four clients, four databases, one failure: the worked round end to end.

use rsrc_fsl::golden::{motivating_inputs, motivating_model, motivating_params};
use rsrc_fsl::sim::{FaultConfig, Simulation};
use rsrc_fsl::symbol::Tracked;

fn main() {
    let p = motivating_params();
    let mut sim = Simulation::<Tracked>::with_model(&p, &motivating_model(), 5).unwrap();
    let faults = FaultConfig {
        failed_dbs: vec![4],
        ..Default::default()
    };
    let out = sim.run_round(&motivating_inputs(), &faults).unwrap();
    let rep = &out.report;
    println!("union {:?}, routers {:?}", rep.union, rep.routers);
    for e in &rep.events {
        println!("  {e}");
    }
    for (name, v) in rep.verdicts.all() {
        println!("{name:<22} {:?}: {}", v.status, v.detail);
    }
    println!("model before: {:?}", motivating_model());
    println!("model after:  {:?}", sim.model());
    println!("costs: {:?}", rep.costs.by_phase);
}
