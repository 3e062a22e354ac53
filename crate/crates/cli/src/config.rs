use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use selab_core::model::summability;
use selab_core::verify::Protocol;
use selab_core::{CoefficientSpec, ProblemSpec, SourceSpec};

use crate::{CliError, Result};

pub const DEFAULT_CASE_CAP: usize = 10_000;

/// Sweep key that sets `gamma = p + value` after every other override.
pub const GAMMA_MINUS_P: &str = "gamma_minus_p";

/// One experiment: the problem, the protocol and where to write results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: u32,
    pub p: f64,
    pub gamma: f64,
    #[serde(default = "unit_coefficient")]
    pub coeff: CoefficientSpec,
    pub source: SourceSpec,
    /// Summability of the source; `"inf"` for bounded data.
    #[serde(with = "summability")]
    pub m: f64,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn unit_coefficient() -> CoefficientSpec {
    CoefficientSpec::constant(1.0)
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_value(read_json(path)?)
    }

    /// Builds the spec through the validating constructor and checks the protocol.
    pub fn spec(&self) -> Result<ProblemSpec> {
        let spec = ProblemSpec::new(self.dimension, self.p, self.gamma, self.coeff, self.source, self.m)?;
        self.protocol.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCase {
    pub name: String,
    /// Partial run configuration; its top-level keys replace those of `base`.
    pub config: Value,
}

/// A list of named cases (or just `base`) crossed with per-key value lists.
///
/// `vary` keys are dotted paths into the run configuration (`gamma`,
/// `source.a_exp`, `protocol.rho`, ...) plus the derived key `gamma_minus_p`.
/// Enumeration: cases in listed order, then keys in lexicographic order with
/// the first key varying slowest, values in listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub base: Option<Value>,
    #[serde(default)]
    pub cases: Vec<SweepCase>,
    #[serde(default)]
    pub vary: BTreeMap<String, Vec<Value>>,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

fn default_cap() -> usize {
    DEFAULT_CASE_CAP
}

/// A fully resolved sweep entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedCase {
    pub index: usize,
    pub name: String,
    /// `key=value` pairs applied from `vary`, `;`-separated.
    pub overrides: String,
    pub config: RunConfig,
    pub spec: ProblemSpec,
}

impl PlannedCase {
    pub fn dir_name(&self) -> String {
        format!("{:04}-{}", self.index, self.name)
    }
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_value(read_json(path)?).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn case_count(&self) -> usize {
        let cases = self.cases.len().max(usize::from(self.base.is_some()));
        self.vary.values().fold(cases, |acc, v| acc.saturating_mul(v.len()))
    }

    /// Resolves and validates every case; any invalid case rejects the sweep.
    pub fn plan(&self) -> Result<Vec<PlannedCase>> {
        if self.base.is_none() && self.cases.is_empty() {
            return Err(CliError::Config("sweep needs a `base` or a non-empty `cases` list".into()));
        }
        if let Some((key, _)) = self.vary.iter().find(|(_, v)| v.is_empty()) {
            return Err(CliError::Config(format!("sweep list `{key}` is empty")));
        }
        if self.vary.contains_key("gamma") && self.vary.contains_key(GAMMA_MINUS_P) {
            return Err(CliError::Config("`gamma` and `gamma_minus_p` cannot both vary".into()));
        }
        let total = self.case_count();
        if total > self.cap {
            return Err(CliError::Config(format!(
                "sweep has {total} cases, more than the cap of {}",
                self.cap
            )));
        }

        let base = self.base.clone().unwrap_or_else(|| Value::Object(Default::default()));
        let seeds: Vec<(String, Value)> = if self.cases.is_empty() {
            vec![("case".to_string(), base)]
        } else {
            self.cases
                .iter()
                .map(|c| {
                    let mut merged = base.clone();
                    merge(&mut merged, &c.config)?;
                    Ok((c.name.clone(), merged))
                })
                .collect::<Result<_>>()?
        };

        let keys: Vec<&String> = self.vary.keys().collect();
        let mut planned = Vec::with_capacity(total);
        for (name, seed) in seeds {
            for combo in product(&keys.iter().map(|k| self.vary[*k].len()).collect::<Vec<_>>()) {
                let mut value = seed.clone();
                let mut labels = Vec::with_capacity(keys.len());
                let mut gap = None;
                for (key, &choice) in keys.iter().zip(&combo) {
                    let v = &self.vary[*key][choice];
                    labels.push(format!("{key}={v}"));
                    if key.as_str() == GAMMA_MINUS_P {
                        gap = Some(v.as_f64().ok_or_else(|| {
                            CliError::Config(format!("`{GAMMA_MINUS_P}` values must be numbers, got {v}"))
                        })?);
                    } else {
                        set_path(&mut value, key, v.clone())?;
                    }
                }
                if let Some(gap) = gap {
                    let p = value.get("p").and_then(Value::as_f64).ok_or_else(|| {
                        CliError::Config(format!("`{GAMMA_MINUS_P}` needs a numeric `p`"))
                    })?;
                    set_path(&mut value, "gamma", Value::from(p + gap))?;
                }
                let index = planned.len();
                let overrides = labels.join(";");
                let config = RunConfig::from_value(value).map_err(|e| case_error(index, &name, e))?;
                let spec = config.spec().map_err(|e| case_error(index, &name, e))?;
                planned.push(PlannedCase { index, name: name.clone(), overrides, config, spec });
            }
        }
        Ok(planned)
    }
}

fn case_error(index: usize, name: &str, e: CliError) -> CliError {
    CliError::Config(format!("case {index:04}-{name}: {e}"))
}

pub(crate) fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Mixed-radix counter over the given list lengths, last digit fastest.
fn product(lens: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(lens.len())];
    for &len in lens {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..len).map(move |i| {
                    let mut next = prefix.clone();
                    next.push(i);
                    next
                })
            })
            .collect();
    }
    out
}

/// Top-level keys of `patch` replace those of `target` wholesale.
fn merge(target: &mut Value, patch: &Value) -> Result<()> {
    let (Value::Object(t), Value::Object(p)) = (target, patch) else {
        return Err(CliError::Config("`base` and case configs must be JSON objects".into()));
    };
    for (k, v) in p {
        t.insert(k.clone(), v.clone());
    }
    Ok(())
}

fn set_path(target: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cursor = target;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(CliError::Config(format!("malformed sweep key `{path}`")));
        }
        if !cursor.is_object() {
            if cursor.is_null() {
                *cursor = Value::Object(Default::default());
            } else {
                return Err(CliError::Config(format!("sweep key `{path}` crosses a non-object")));
            }
        }
        let map = cursor.as_object_mut().expect("checked above");
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cursor = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn base() -> Value {
        json!({
            "dimension": 3, "p": 1.0, "gamma": 2.0, "m": 1.0,
            "source": {"kind": "radial_power", "amplitude": 1.0, "a_exp": 2.9}
        })
    }

    #[test]
    fn run_config_defaults_and_inf() {
        let cfg = RunConfig::from_value(json!({
            "dimension": 3, "p": 0.5, "gamma": 0.5, "m": "inf",
            "source": {"kind": "constant", "value": 1.0}
        }))
        .unwrap();
        assert!(cfg.m.is_infinite());
        assert_eq!(cfg.protocol, Protocol::default());
        assert_eq!(cfg.coeff, CoefficientSpec::constant(1.0));
        cfg.spec().unwrap();
    }

    #[test]
    fn unknown_keys_rejected_at_every_level() {
        let mut top = base();
        top["seed"] = json!(1);
        assert!(RunConfig::from_value(top).is_err());
        let mut nested = base();
        nested["protocol"] = json!({"rho": 0.5, "window": 0.3});
        assert!(RunConfig::from_value(nested).is_err());
        let mut source = base();
        source["source"]["exponent"] = json!(2.0);
        assert!(RunConfig::from_value(source).is_err());
    }

    #[test]
    fn non_integrable_source_is_a_config_error() {
        let mut v = base();
        v["source"]["a_exp"] = json!(3.0);
        let err = RunConfig::from_value(v).unwrap().spec().unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn enumeration_order_is_lexicographic_first_key_slowest() {
        let sweep = SweepConfig {
            base: Some(base()),
            cases: vec![],
            vary: BTreeMap::from([
                ("source.a_exp".to_string(), vec![json!(2.5), json!(2.0)]),
                ("gamma_minus_p".to_string(), vec![json!(-0.5), json!(1.0), json!(2.0)]),
            ]),
            cap: DEFAULT_CASE_CAP,
            out_dir: None,
            jobs: None,
        };
        let plan = sweep.plan().unwrap();
        assert_eq!(plan.len(), 6);
        let got: Vec<&str> = plan.iter().map(|c| c.overrides.as_str()).collect();
        assert_eq!(
            got,
            [
                "gamma_minus_p=-0.5;source.a_exp=2.5",
                "gamma_minus_p=-0.5;source.a_exp=2.0",
                "gamma_minus_p=1.0;source.a_exp=2.5",
                "gamma_minus_p=1.0;source.a_exp=2.0",
                "gamma_minus_p=2.0;source.a_exp=2.5",
                "gamma_minus_p=2.0;source.a_exp=2.0",
            ]
        );
        assert_eq!(plan[2].spec.gamma, 2.0);
        assert_eq!(plan[1].spec.source, SourceSpec::RadialPower { amplitude: 1.0, a_exp: 2.0 });
    }

    #[test]
    fn sweep_rejections() {
        let mk = |vary: BTreeMap<String, Vec<Value>>, cap| SweepConfig {
            base: Some(base()),
            cases: vec![],
            vary,
            cap,
            out_dir: None,
            jobs: None,
        };
        assert!(mk(BTreeMap::from([("gamma".into(), vec![])]), 10).plan().is_err());
        let big = BTreeMap::from([
            ("gamma".to_string(), vec![json!(2.0); 5]),
            ("p".to_string(), vec![json!(1.0); 5]),
        ]);
        assert!(matches!(mk(big, 24).plan(), Err(CliError::Config(m)) if m.contains("cap")));
        let typo = BTreeMap::from([("protocol.rhoo".to_string(), vec![json!(0.5)])]);
        assert!(mk(typo, 10).plan().is_err());
        let none = SweepConfig { base: None, ..mk(BTreeMap::new(), 10) };
        assert!(none.plan().is_err());
    }

    #[test]
    fn cases_replace_top_level_keys() {
        let sweep = SweepConfig {
            base: Some(base()),
            cases: vec![
                SweepCase { name: "a".into(), config: json!({"gamma": 0.5}) },
                SweepCase {
                    name: "b".into(),
                    config: json!({"m": "inf", "source": {"kind": "constant", "value": 2.0}}),
                },
            ],
            vary: BTreeMap::new(),
            cap: DEFAULT_CASE_CAP,
            out_dir: None,
            jobs: None,
        };
        let plan = sweep.plan().unwrap();
        assert_eq!(plan[0].spec.gamma, 0.5);
        assert_eq!(plan[0].spec.source, SourceSpec::RadialPower { amplitude: 1.0, a_exp: 2.9 });
        assert_eq!(plan[1].spec.source, SourceSpec::Constant { value: 2.0 });
        assert_eq!(plan[1].dir_name(), "0001-b");

        let mut partial = sweep;
        partial.cases = vec![SweepCase { name: "c".into(), config: json!({"source": {"a_exp": 2.0}}) }];
        assert!(partial.plan().is_err());
    }
}
