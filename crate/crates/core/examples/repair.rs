//! Rebuilding a lost database row from one symbol per helper.

use rsrc_fsl::codec::{build_layout, encode_instance, reconstruct, repair_assemble, repair_share, OmegaInstance};
use rsrc_fsl::field::{vandermonde, FieldModulus};

fn main() {
    let q = FieldModulus::new(13).unwrap();
    let points: Vec<_> = (1..=5).map(|j| q.elem(j)).collect();
    let psi = vandermonde(q, &points, 3).unwrap();
    let layout = build_layout(3, 1, 2).unwrap();
    let msgs: Vec<_> = [4, 8, 15, 16, 2].iter().map(|&v| q.elem(v)).collect();
    let rand: Vec<_> = (0..layout.randomness()).map(|i| q.elem(7 * i as u64 + 3)).collect();
    let inst = OmegaInstance::new(layout.clone(), msgs, rand).unwrap();
    let rows = encode_instance(&inst, &psi, 0).unwrap();
    for r in &rows {
        println!("database {}: {:?}", r.db, r.symbols);
    }

    let failed = 2;
    let helpers = [1, 4, 5];
    let shares: Vec<_> = helpers
        .iter()
        .map(|&h| (h, repair_share(&rows[h - 1], &psi, failed).unwrap()))
        .collect();
    let rebuilt = repair_assemble(&shares, &psi, failed, 0).unwrap();
    println!("database {failed} rebuilt from {helpers:?}: {:?}", rebuilt.symbols);
    assert_eq!(rebuilt, rows[failed - 1]);

    let mut after = vec![rows[0].clone(), rebuilt, rows[2].clone()];
    after.sort_by_key(|r| r.db);
    let rec = reconstruct(&after, &layout, &psi).unwrap();
    println!("messages decoded with the replacement: {:?}", rec.messages);
}
