//! Worked examples reproduced exactly, for the `example` subcommand.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;

use crate::codec::{
    build_layout, encode_row, fmt_rational, leakage_fraction, theorem2_bounds, Cell, OmegaInstance,
    OmegaLayout, Rational,
};
use crate::field::{mat_inv, mat_mul, vandermonde, FieldElement, FieldMatrix, FieldModulus};
use crate::protocol::{MessageKind, PlanChoice, ProtocolError, SystemParams};
use crate::sim::{FaultConfig, RoundInputs, Simulation};
use crate::symbol::{Symbol, Tracked, VarKind, VarRegistry};

pub const EXAMPLES: [&str; 3] = ["rsrc-ex1", "rsrc-ex2", "fsl-round"];

/// One compared quantity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub label: String,
    pub expected: String,
    pub actual: String,
}

impl Check {
    fn new(label: impl Into<String>, expected: impl ToString, actual: impl ToString) -> Self {
        Check {
            label: label.into(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn ok(&self) -> bool {
        self.expected == self.actual
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Golden {
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl Golden {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::ok)
    }

    pub fn render(&self) -> String {
        let mut out = format!("example {}\n", self.name);
        for c in &self.checks {
            let mark = if c.ok() { "ok  " } else { "DIFF" };
            if c.ok() {
                out.push_str(&format!("  {mark} {}: {}\n", c.label, c.actual));
            } else {
                out.push_str(&format!("  {mark} {}: expected {}, got {}\n", c.label, c.expected, c.actual));
            }
        }
        out.push_str(if self.passed() { "PASS\n" } else { "FAIL\n" });
        out
    }
}

pub fn run_example(name: &str) -> Result<Golden, ProtocolError> {
    match name {
        "rsrc-ex1" => rsrc_ex1(),
        "rsrc-ex2" => rsrc_ex2(),
        "fsl-round" => fsl_round(),
        other => Err(ProtocolError::Config(format!(
            "unknown example {other:?}; choose one of {}",
            EXAMPLES.join(", ")
        ))),
    }
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn triple(a: Rational, b: Rational, c: Rational) -> String {
    format!("({}, {}, {})", fmt_rational(&a), fmt_rational(&b), fmt_rational(&c))
}

fn raw_costs(l: &OmegaLayout) -> String {
    format!("({}, {}, {})", l.c1(), l.c2(), l.storage())
}

fn normalized(l: &OmegaLayout) -> (Rational, Rational, Rational) {
    let b = l.messages() as i64;
    (r(l.c1() as i64, b), r(l.c2() as i64, b), r(l.storage() as i64, b))
}

/// Largest leakage fraction over every `lambda`-subset of the databases.
fn worst_leak(l: &OmegaLayout, n: usize, lambda: usize, q: u64) -> Result<Rational, ProtocolError> {
    let q = FieldModulus::new(q)?;
    let pts: Vec<_> = (1..=n as u64).map(|j| q.elem(j)).collect();
    let psi = vandermonde(q, &pts, l.dim())?;
    let mut worst = r(0, 1);
    for set in (1..=n).combinations(lambda) {
        worst = worst.max(leakage_fraction(&[(l.clone(), 1)], &psi, &set)?);
    }
    Ok(worst)
}

fn rsrc_ex1() -> Result<Golden, ProtocolError> {
    let raw = ["(5, 3, 9)", "(5, 3, 9)", "(5, 3, 9)", "(6, 3, 9)"];
    let norm = [
        (r(5, 3), r(1, 1), r(3, 1)),
        (r(5, 4), r(3, 4), r(9, 4)),
        (r(1, 1), r(3, 5), r(9, 5)),
        (r(1, 1), r(1, 2), r(3, 2)),
    ];
    let leaks = [r(0, 1), r(1, 4), r(2, 5), r(1, 2)];
    let mut checks = Vec::new();
    for extra in 0..4 {
        let l = build_layout(3, 1, extra)?;
        let name = format!("Omega{}", extra + 1);
        checks.push(Check::new(format!("{name} messages"), 3 + extra, l.messages()));
        checks.push(Check::new(format!("{name} (C1, C2, S)"), raw[extra], raw_costs(&l)));
        let (a, b, c) = normalized(&l);
        let (ea, eb, ec) = norm[extra];
        checks.push(Check::new(format!("{name} normalized"), triple(ea, eb, ec), triple(a, b, c)));
        checks.push(Check::new(
            format!("{name} leakage to one database"),
            fmt_rational(&leaks[extra]),
            fmt_rational(&worst_leak(&l, 4, 1, 13)?),
        ));
    }
    Ok(Golden {
        name: "rsrc-ex1",
        checks,
    })
}

fn rsrc_ex2() -> Result<Golden, ProtocolError> {
    let leaks = [r(0, 1), r(1, 2), r(2, 3)];
    let one = r(1, 1);
    let mut checks = Vec::new();
    for extra in 0..3 {
        let l = build_layout(3, 2, extra)?;
        let name = format!("lambda=2 with {} messages", l.messages());
        let leak = worst_leak(&l, 4, 2, 13)?;
        checks.push(Check::new(format!("{name} leakage to two databases"), fmt_rational(&leaks[extra]), fmt_rational(&leak)));
        checks.push(Check::new(format!("{name} (C1, C2, S)"), "(3, 3, 9)", raw_costs(&l)));
        let (a, b, c) = normalized(&l);
        let e = one - leaks[extra];
        checks.push(Check::new(
            format!("{name} normalized"),
            triple(r(3, 1) * e, r(3, 1) * e, r(9, 1) * e),
            triple(a, b, c),
        ));
        let t = theorem2_bounds(3, 2, leak)?;
        checks.push(Check::new(format!("{name} meets the lower bound"), triple(t.c1, t.c2, t.s), triple(a, b, c)));
    }
    Ok(Golden {
        name: "rsrc-ex2",
        checks,
    })
}

/// Parameters of the four-database motivating round.
pub fn motivating_params() -> SystemParams {
    let mut p = SystemParams::new(4, 4, 4, 2, 3, 2, 2, r(1, 2));
    p.groups = vec![1, 1, 2, 3];
    p.plan = PlanChoice::Single { extra_messages: 1 };
    p
}

pub fn motivating_model() -> Vec<Vec<u64>> {
    vec![vec![3, 7], vec![11, 2], vec![5, 0], vec![9, 12]]
}

/// Selections `{1}, {1,3}, {1,4}, {1,3,4}` with fixed increments.
pub fn motivating_inputs() -> RoundInputs {
    let gammas = vec![vec![1], vec![1, 3], vec![1, 4], vec![1, 3, 4]];
    let increments = gammas
        .iter()
        .enumerate()
        .map(|(i, g)| {
            g.iter()
                .map(|&k| (k, vec![((i + 1) * k % 13) as u64, ((i + 2 * k + 5) % 13) as u64]))
                .collect::<BTreeMap<_, _>>()
        })
        .collect();
    RoundInputs::new(gammas, increments)
}

/// Storage lines of one database for the motivating layout, written with
/// `M1, M2` for the messages and `R1..R4` for the randomness in the cell
/// order `(0,2), (1,1), (1,2), (2,2)`.
fn table_rows(layout: &OmegaLayout, q: FieldModulus) -> Result<Vec<String>, ProtocolError> {
    let mut reg = VarRegistry::new();
    let msgs: Vec<Tracked> = (0..layout.messages())
        .map(|pos| Tracked::variable(&mut reg, q.zero(), VarKind::Model { k: 1, pos }))
        .collect();
    let rand: Vec<Tracked> = (0..layout.randomness())
        .map(|_| Tracked::variable(&mut reg, q.zero(), VarKind::StorageRandomness))
        .collect();
    let mut names: BTreeMap<u32, String> = BTreeMap::new();
    for (cell, name) in [((0, 0), "M1"), ((0, 1), "M2"), ((0, 2), "R1"), ((1, 1), "R2"), ((1, 2), "R3"), ((2, 2), "R4")] {
        let id = match layout.cell(cell.0, cell.1) {
            Cell::Message(i) => msgs[i].form().terms()[0].0,
            Cell::Randomness(i) => rand[i].form().terms()[0].0,
        };
        names.insert(id, name.to_string());
    }
    let inst = OmegaInstance::new(layout.clone(), msgs, rand)?;
    let pts: Vec<_> = (1..=4u64).map(|j| q.elem(j)).collect();
    let psi = vandermonde(q, &pts, 3)?;
    let mut out = Vec::new();
    for db in 1..=4 {
        let row = encode_row(&inst, &psi, db, 0)?;
        let cols: Vec<String> = row
            .symbols
            .iter()
            .map(|s| {
                let mut terms: Vec<(String, u32)> = s
                    .form()
                    .terms()
                    .iter()
                    .map(|&(v, c)| (names.get(&v).cloned().unwrap_or_else(|| format!("x{v}")), c))
                    .collect();
                terms.sort();
                terms
                    .iter()
                    .map(|(n, c)| if *c == 1 { n.clone() } else { format!("{c}{n}") })
                    .join("+")
            })
            .collect();
        out.push(format!("DB {db}: {}", cols.join(", ")));
    }
    Ok(out)
}

fn fsl_round() -> Result<Golden, ProtocolError> {
    let p = motivating_params();
    let setup = p.setup()?;
    let q = setup.q();
    let mut checks = Vec::new();

    let layout = setup.slot_layout(0).clone();
    // Row 2 uses psi_2 = (1, 2, 4); the reference row carries 3 in the last column.
    let table = [
        "DB 1: M1+M2+R1, M2+R2+R3, R1+R3+R4",
        "DB 2: M1+2M2+4R1, M2+2R2+4R3, R1+2R3+4R4",
        "DB 3: M1+3M2+9R1, M2+3R2+9R3, R1+3R3+9R4",
        "DB 4: M1+4M2+3R1, M2+4R2+3R3, R1+4R3+3R4",
    ];
    for (want, got) in table.iter().zip(table_rows(&layout, q)?) {
        checks.push(Check::new("initial storage", want, got));
    }

    let model = motivating_model();
    let inputs = motivating_inputs();
    let faults = FaultConfig {
        failed_dbs: vec![4],
        ..Default::default()
    };
    let mut sim = Simulation::<Tracked>::with_model(&p, &model, 5)?;
    let out = sim.run_round(&inputs, &faults)?;
    let rep = &out.report;
    checks.push(Check::new("union", "[1, 3, 4]", format!("{:?}", rep.union)));
    checks.push(Check::new("routing clients", "3", rep.routers.len()));
    checks.push(Check::new(
        "PSU symbols, (C + N + N^2) K with N = 3",
        (4 + 3 + 9) * 4,
        rep.costs.phase_total(crate::sim::PhaseTag::Psu),
    ));
    checks.push(Check::new(
        "selection answers, C K",
        16,
        rep.costs.kind_total(MessageKind::Au1),
    ));

    let mut expected: Vec<Vec<u64>> = model.clone();
    for (i, g) in inputs.gammas.iter().enumerate() {
        for &k in g {
            for (pos, v) in inputs.increments[i][&k].iter().enumerate() {
                expected[k - 1][pos] = (expected[k - 1][pos] + v) % 13;
            }
        }
    }
    for subset in (1..=4usize).combinations(3) {
        let got: Vec<Vec<u64>> = sim
            .decode_models(&subset)?
            .iter()
            .map(|m| m.iter().map(|x| x.value().value() as u64).collect())
            .collect();
        checks.push(Check::new(
            format!("model decoded from databases {subset:?}"),
            format!("{expected:?}"),
            format!("{got:?}"),
        ));
    }
    let decoded = sim.decode_models(&[1, 2, 3])?;
    checks.push(Check::new(
        "submodel 2 unchanged",
        format!("{:?}", model[1]),
        format!("{:?}", decoded[1].iter().map(|x| x.value().value() as u64).collect::<Vec<_>>()),
    ));

    // Rows 1..3 fix a symmetric Omega; the replacement must hold psi_4^T Omega.
    let dbs = sim.databases();
    let top = setup.psi.select(&[0, 1, 2], &[0, 1, 2])?;
    let inv = mat_inv(&top)?;
    let last = setup.psi.select(&[3], &[0, 1, 2])?;
    let mut consistent = true;
    for k in 0..p.k {
        for slot in 0..dbs[0].as_ref().expect("live").store[k].len() {
            let row_of = |j: usize| -> Vec<FieldElement> {
                dbs[j - 1].as_ref().expect("live").store[k][slot].symbols.iter().map(Symbol::value).collect()
            };
            let z = FieldMatrix::from_elements(q, 3, 3, (1..=3).flat_map(row_of).collect())?;
            let omega = mat_mul(&inv, &z)?;
            let want = mat_mul(&last, &omega)?;
            consistent &= omega.is_symmetric() && want.row(0) == row_of(4).as_slice();
        }
    }
    checks.push(Check::new("replacement database 4 matches the code", true, consistent));
    let hats: BTreeSet<Vec<u32>> = dbs
        .iter()
        .flatten()
        .map(|d| d.hat_k.iter().chain(d.hat_kl.iter().flatten()).map(|s| s.value().value()).collect())
        .collect();
    checks.push(Check::new("plain server randomness agrees", 1, hats.len()));
    checks.push(Check::new(
        "eavesdropper leakage within 1/2",
        true,
        rep.leakage.sets.iter().all(|s| Rational::new(s.leaked_symbols as i64, 8) <= r(1, 2)),
    ));
    for (name, v) in rep.verdicts.all() {
        if name != "cost_bounds" {
            checks.push(Check::new(format!("verdict {name}"), "Pass", format!("{:?}", v.status)));
        }
    }
    Ok(Golden {
        name: "fsl-round",
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_example_passes() {
        for name in EXAMPLES {
            let g = run_example(name).unwrap();
            assert!(g.passed(), "{}", g.render());
        }
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(matches!(run_example("nope"), Err(ProtocolError::Config(_))));
    }
}
