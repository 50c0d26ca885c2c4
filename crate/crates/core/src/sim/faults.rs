use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::protocol::{ProtocolError, SystemParams};

/// How Byzantine databases rewrite their outbound payloads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryStrategy {
    /// Uniformly random symbols.
    #[default]
    Random,
    /// Every symbol shifted by a fixed nonzero offset.
    TargetedFlip,
    /// The database's previous payload of the same kind, resized.
    Replay,
}

/// Faults injected into one round. Ids are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FaultConfig {
    /// Clients that never answer.
    pub dropped_clients: Vec<usize>,
    /// Clients whose answers arrive after their database has aggregated.
    pub late_clients: Vec<usize>,
    /// Databases silent for the whole round; they catch up afterwards.
    pub dropped_dbs: Vec<usize>,
    /// Databases whose storage is lost and rebuilt on a replacement.
    pub failed_dbs: Vec<usize>,
    /// Databases whose view is audited. Empty audits every set of size E.
    pub eavesdropper: Vec<usize>,
    /// Byzantine databases.
    pub adversaries: Vec<usize>,
    pub adversary_strategy: AdversaryStrategy,
}

fn ids(v: &[usize], max: usize, what: &str) -> Result<BTreeSet<usize>, ProtocolError> {
    let set: BTreeSet<usize> = v.iter().copied().collect();
    if set.len() != v.len() {
        return Err(ProtocolError::Config(format!("{what} lists an id twice")));
    }
    if let Some(&bad) = set.iter().find(|&&i| i == 0 || i > max) {
        return Err(ProtocolError::Config(format!("{what} id {bad} outside 1..={max}")));
    }
    Ok(set)
}

impl FaultConfig {
    pub fn is_fault_free(&self) -> bool {
        self.dropped_clients.is_empty()
            && self.late_clients.is_empty()
            && self.dropped_dbs.is_empty()
            && self.failed_dbs.is_empty()
            && self.adversaries.is_empty()
    }

    pub fn validate(&self, p: &SystemParams) -> Result<(), ProtocolError> {
        let dropped = ids(&self.dropped_clients, p.c, "dropped_clients")?;
        let late = ids(&self.late_clients, p.c, "late_clients")?;
        if dropped.intersection(&late).next().is_some() {
            return Err(ProtocolError::Config("a client cannot be both dropped and late".into()));
        }
        let ddb = ids(&self.dropped_dbs, p.n, "dropped_dbs")?;
        let fdb = ids(&self.failed_dbs, p.n, "failed_dbs")?;
        if ddb.intersection(&fdb).next().is_some() {
            return Err(ProtocolError::Config("a database cannot be both dropped and failed".into()));
        }
        let eve = ids(&self.eavesdropper, p.n, "eavesdropper")?;
        if eve.len() > p.e {
            return Err(ProtocolError::Config(format!(
                "eavesdropper set of {} exceeds E = {}",
                eve.len(),
                p.e
            )));
        }
        let adv = ids(&self.adversaries, p.n, "adversaries")?;
        if adv.len() > p.a {
            return Err(ProtocolError::Config(format!(
                "{} adversarial databases exceed A = {}",
                adv.len(),
                p.a
            )));
        }
        if adv.iter().any(|a| ddb.contains(a) || fdb.contains(a)) {
            return Err(ProtocolError::Config("an adversarial database must be live".into()));
        }
        let live = p.n - ddb.len() - fdb.len();
        let need = (p.d + 2 * p.a).max((p.j + 1) * (2 * p.a + 1));
        if live < need {
            return Err(ProtocolError::TooManyFaults(format!(
                "{live} live databases, the round needs {need}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Rational;

    #[test]
    fn rejects_overlaps_and_overload() {
        let p = SystemParams::new(4, 4, 4, 2, 3, 2, 2, Rational::new(1, 2));
        let f = FaultConfig {
            dropped_clients: vec![1],
            late_clients: vec![1],
            ..Default::default()
        };
        assert!(f.validate(&p).is_err());
        let f = FaultConfig {
            dropped_dbs: vec![1],
            failed_dbs: vec![2],
            ..Default::default()
        };
        assert!(matches!(f.validate(&p), Err(ProtocolError::TooManyFaults(_))));
        let f = FaultConfig {
            failed_dbs: vec![4],
            ..Default::default()
        };
        assert!(f.validate(&p).is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: Result<FaultConfig, _> = serde_json::from_str(r#"{"dropped_client":[1]}"#);
        assert!(r.is_err());
        let r: FaultConfig = serde_json::from_str(r#"{"failed_dbs":[4],"adversary_strategy":"replay"}"#).unwrap();
        assert_eq!(r.adversary_strategy, AdversaryStrategy::Replay);
    }
}
