//! JSON scenario files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::faults::FaultConfig;
use super::round::RoundInputs;
use super::rng::substream;
use crate::codec::{fmt_rational, parse_rational};
use crate::field::FieldModulus;
use crate::protocol::{PlanChoice, ProtocolError, SystemParams};

pub const SCENARIO_SCHEMA: &str = "rsrc-fsl/scenario/v1";

fn default_q() -> u64 {
    13
}

/// System parameters as written in a scenario file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n: usize,
    pub c: usize,
    pub k: usize,
    pub l: usize,
    pub d: usize,
    pub j: usize,
    pub e: usize,
    #[serde(default)]
    pub a: usize,
    /// Leakage bound as `"p/q"`, an integer or a decimal.
    pub delta: String,
    #[serde(default = "default_q")]
    pub q: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psis: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<usize>>,
    #[serde(default)]
    pub plan: PlanChoice,
}

impl ParamsConfig {
    pub fn from_params(p: &SystemParams) -> Self {
        ParamsConfig {
            n: p.n,
            c: p.c,
            k: p.k,
            l: p.l,
            d: p.d,
            j: p.j,
            e: p.e,
            a: p.a,
            delta: fmt_rational(&p.delta),
            q: p.modulus.get() as u64,
            psis: Some(p.psis.clone()),
            groups: Some(p.groups.clone()),
            plan: p.plan.clone(),
        }
    }

    pub fn to_params(&self) -> Result<SystemParams, ProtocolError> {
        let delta = parse_rational(&self.delta)
            .ok_or_else(|| ProtocolError::Config(format!("params.delta: cannot parse {:?}", self.delta)))?;
        let modulus = FieldModulus::new(self.q).map_err(|e| ProtocolError::Config(format!("params.q: {e}")))?;
        let mut p = SystemParams::new(self.n, self.c, self.k, self.l, self.d, self.j, self.e, delta);
        p.a = self.a;
        p.modulus = modulus;
        if let Some(psis) = &self.psis {
            p.psis = psis.clone();
        }
        if let Some(groups) = &self.groups {
            p.groups = groups.clone();
        } else if self.n > 0 {
            p.groups = (0..self.c).map(|i| i % self.n + 1).collect();
        }
        p.plan = self.plan.clone();
        Ok(p)
    }
}

/// Where client increments come from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IncrementSource {
    /// Uniform symbols drawn from the scenario seed.
    #[default]
    SeededRandom,
    /// `values[i]["k"]` is client `i+1`'s increment of submodel `k`.
    Inline { values: Vec<BTreeMap<String, Vec<u64>>> },
    /// A JSON file holding the `values` array of the inline form.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    pub params: ParamsConfig,
    /// Submodels each client selects; drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub increments: IncrementSource,
    /// Initial model, `K` rows of `L` symbols; drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Vec<Vec<u64>>>,
    #[serde(default)]
    pub faults: FaultConfig,
    #[serde(default)]
    pub seed: u64,
    /// Report path, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Transcript dump path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<PathBuf>,
}

/// Parses a scenario, naming the offending field on failure.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ProtocolError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig =
        serde_path_to_error::deserialize(de).map_err(|e| ProtocolError::Config(format!("{}: {}", e.path(), e.inner())))?;
    if cfg.schema != SCENARIO_SCHEMA {
        return Err(ProtocolError::Config(format!(
            "schema: expected {SCENARIO_SCHEMA:?}, found {:?}",
            cfg.schema
        )));
    }
    Ok(cfg)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ProtocolError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProtocolError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

fn integer_keys(values: &[BTreeMap<String, Vec<u64>>]) -> Result<Vec<BTreeMap<usize, Vec<u64>>>, ProtocolError> {
    values
        .iter()
        .enumerate()
        .map(|(i, m)| {
            m.iter()
                .map(|(k, v)| {
                    let k = k
                        .parse()
                        .map_err(|_| ProtocolError::Config(format!("increments.values[{i}]: submodel key {k:?} is not an integer")))?;
                    Ok((k, v.clone()))
                })
                .collect()
        })
        .collect()
}

impl ScenarioConfig {
    /// Initial model values, `K x L`.
    pub fn initial_model(&self, p: &SystemParams) -> Result<Vec<Vec<u64>>, ProtocolError> {
        match &self.model {
            Some(m) => {
                if m.len() != p.k || m.iter().any(|r| r.len() != p.l) {
                    return Err(ProtocolError::Config(format!("model: expected {} rows of {} symbols", p.k, p.l)));
                }
                Ok(m.clone())
            }
            None => {
                let mut rng = substream(self.seed, 0, "model");
                let q = p.modulus.get() as u64;
                Ok((0..p.k).map(|_| (0..p.l).map(|_| rng.gen_range(0..q)).collect()).collect())
            }
        }
    }

    /// Client selections and increments for the first round.
    pub fn round_inputs(&self, p: &SystemParams, base: &Path) -> Result<RoundInputs, ProtocolError> {
        let mut rng = substream(self.seed, 0, "inputs");
        let gammas: Vec<Vec<usize>> = match &self.gammas {
            Some(g) => g.clone(),
            None => RoundInputs::random_gammas(p, &mut rng),
        };
        let values = match &self.increments {
            IncrementSource::SeededRandom => None,
            IncrementSource::Inline { values } => Some(values.clone()),
            IncrementSource::File { path } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| ProtocolError::Config(format!("increments.path: cannot read {}: {e}", full.display())))?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                let v: Vec<BTreeMap<String, Vec<u64>>> = serde_path_to_error::deserialize(de)
                    .map_err(|e| ProtocolError::Config(format!("increments file {}: {}", e.path(), e.inner())))?;
                Some(v)
            }
        };
        let values = values.map(|v| integer_keys(&v)).transpose()?;
        let inputs = match values {
            Some(v) => RoundInputs::new(gammas, v),
            None => RoundInputs::with_random_increments(p, gammas, &mut rng),
        };
        inputs.validate(p)?;
        Ok(inputs)
    }
}
