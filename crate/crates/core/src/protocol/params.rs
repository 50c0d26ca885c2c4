use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::codec::{
    build_layout, fmt_rational, full_layout, plan_time_sharing, Chunking, Rational, RsrcPlan,
};
use crate::field::{vandermonde, FieldElement, FieldMatrix, FieldModulus};

/// How the storage layout is chosen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlanChoice {
    /// Time-share the two layouts adjacent to the leakage target.
    #[default]
    TimeSharing,
    /// Use one layout with this many messages beyond the secure block.
    Single { extra_messages: usize },
}

/// Static system parameters. Databases and clients are numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemParams {
    /// Databases.
    pub n: usize,
    /// Clients.
    pub c: usize,
    /// Submodels.
    pub k: usize,
    /// Symbols per submodel.
    pub l: usize,
    /// Message matrix dimension.
    pub d: usize,
    /// Colluding databases for privacy.
    pub j: usize,
    /// Eavesdropped databases.
    pub e: usize,
    /// Byzantine databases tolerated.
    pub a: usize,
    /// Allowed leakage fraction against `e` databases.
    pub delta: Rational,
    pub modulus: FieldModulus,
    /// Evaluation point of each database.
    pub psis: Vec<u64>,
    /// Database serving each client (`groups[i-1]` for client `i`).
    pub groups: Vec<usize>,
    pub plan: PlanChoice,
}

impl SystemParams {
    /// Defaults for everything except the sizes: q = 13, psi_j = j,
    /// clients assigned to databases round-robin.
    pub fn new(n: usize, c: usize, k: usize, l: usize, d: usize, j: usize, e: usize, delta: Rational) -> Self {
        SystemParams {
            n,
            c,
            k,
            l,
            d,
            j,
            e,
            a: 0,
            delta,
            modulus: FieldModulus::new(13).expect("13 is prime"),
            psis: (1..=n as u64).collect(),
            groups: (0..c).map(|i| i % n + 1).collect(),
            plan: PlanChoice::TimeSharing,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::Config(m));
        if self.d < 2 {
            return bad(format!("D = {} must be at least 2", self.d));
        }
        if !(self.n > self.d && self.d > self.e) {
            return bad(format!("need N > D > E, got N={} D={} E={}", self.n, self.d, self.e));
        }
        if self.e > self.j {
            return bad(format!("eavesdropped set E={} exceeds collusion bound J={}", self.e, self.j));
        }
        if self.j + 1 > self.n {
            return bad(format!("J+1 = {} contributors exceed N = {}", self.j + 1, self.n));
        }
        if self.k == 0 || self.l == 0 {
            return bad("K and L must be positive".into());
        }
        let q = self.modulus.get() as usize;
        if q <= self.c || q <= self.n {
            return bad(format!("modulus {q} must exceed both C={} and N={}", self.c, self.n));
        }
        if self.delta < Rational::new(0, 1) || self.delta > Rational::new(1, 1) {
            return bad(format!("delta {} outside [0, 1]", fmt_rational(&self.delta)));
        }
        if self.psis.len() != self.n {
            return bad(format!("{} evaluation points for {} databases", self.psis.len(), self.n));
        }
        let reduced: std::collections::BTreeSet<u64> = self.psis.iter().map(|p| p % q as u64).collect();
        if reduced.len() != self.n {
            return bad("evaluation points must be distinct modulo q".into());
        }
        if self.groups.len() != self.c {
            return bad(format!("{} group assignments for {} clients", self.groups.len(), self.c));
        }
        if let Some(g) = self.groups.iter().find(|&&g| g == 0 || g > self.n) {
            return bad(format!("group {g} outside 1..={}", self.n));
        }
        if self.a > 0 {
            let need = (2 * self.a + self.d).max((self.j + 1) * (2 * self.a + 1));
            if self.n < need {
                return bad(format!(
                    "A={} Byzantine databases need N >= max(2A+D, (J+1)(2A+1)) = {need}, got {}",
                    self.a, self.n
                ));
            }
        }
        Ok(())
    }

    /// Validates and derives the encoding matrix and storage plan.
    pub fn setup(&self) -> Result<Setup, ProtocolError> {
        self.validate()?;
        let q = self.modulus;
        let points: Vec<FieldElement> = self.psis.iter().map(|&p| q.elem(p)).collect();
        let psi = vandermonde(q, &points, self.d)?;
        let plan = if self.e == 0 {
            RsrcPlan::single(full_layout(self.d)?, 0)
        } else {
            match self.plan {
                PlanChoice::TimeSharing => plan_time_sharing(self.d, self.e, self.delta)?,
                PlanChoice::Single { extra_messages } => {
                    RsrcPlan::single(build_layout(self.d, self.e, extra_messages)?, self.e)
                }
            }
        };
        if self.e > 0 && plan.realized_leak() > self.delta {
            return Err(ProtocolError::Infeasible(format!(
                "layout leaks {} of the messages to {} databases, above delta = {}",
                fmt_rational(&plan.realized_leak()),
                self.e,
                fmt_rational(&self.delta)
            )));
        }
        let chunking = plan.chunking(self.l);
        Ok(Setup {
            params: self.clone(),
            psi,
            plan,
            chunking,
        })
    }
}

/// Parameters together with everything derived from them.
#[derive(Clone, Debug)]
pub struct Setup {
    pub params: SystemParams,
    pub psi: FieldMatrix,
    pub plan: RsrcPlan,
    pub chunking: Chunking,
}

impl Setup {
    pub fn q(&self) -> FieldModulus {
        self.params.modulus
    }

    pub fn dim(&self) -> usize {
        self.params.d
    }

    /// Padded symbols per submodel.
    pub fn padded_len(&self) -> usize {
        self.chunking.padded_len
    }

    pub fn slots(&self) -> usize {
        self.chunking.slots.len()
    }

    pub fn slot_layout(&self, slot: usize) -> &crate::codec::OmegaLayout {
        self.plan.layout(self.chunking.slots[slot].component)
    }

    pub fn psi_row(&self, db: usize) -> &[FieldElement] {
        self.psi.row(db - 1)
    }

    /// Clients of database `db`, ascending.
    pub fn group(&self, db: usize) -> Vec<usize> {
        (1..=self.params.c).filter(|&i| self.params.groups[i - 1] == db).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SystemParams {
        let mut p = SystemParams::new(4, 4, 4, 2, 3, 2, 2, Rational::new(1, 2));
        p.groups = vec![1, 1, 2, 3];
        p.plan = PlanChoice::Single { extra_messages: 1 };
        p
    }

    #[test]
    fn motivating_setup() {
        let s = base().setup().unwrap();
        assert_eq!(s.plan.layout_a.messages(), 2);
        assert_eq!(s.padded_len(), 2);
        assert_eq!(s.group(1), vec![1, 2]);
        assert!(s.group(4).is_empty());
    }

    #[test]
    fn constraint_violations() {
        let mut p = base();
        p.e = 3;
        assert!(matches!(p.validate(), Err(ProtocolError::Config(_))));
        let mut p = base();
        p.a = 1;
        assert!(p.validate().is_err());
        let mut p = base();
        p.psis = vec![1, 2, 3, 16];
        assert!(p.validate().is_err());
        let mut p = base();
        p.plan = PlanChoice::Single { extra_messages: 2 };
        assert!(matches!(p.setup(), Err(ProtocolError::Infeasible(_))));
    }
}
