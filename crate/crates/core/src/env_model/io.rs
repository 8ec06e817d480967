//! JSON instance files (`mrlab-instance-v1`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Layout, MdpClass};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "mrlab-instance-v1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    format: String,
    n_states: usize,
    n_actions: usize,
    n_outcomes: usize,
    n_params: usize,
    horizon: usize,
    reward_range: (f64, f64),
    transition: Vec<Vec<Vec<Vec<f64>>>>,
    outcome: Vec<Vec<Vec<f64>>>,
    reward: Vec<Vec<f64>>,
    init: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "is_direct")]
    layout: Layout,
}

fn is_direct(l: &Layout) -> bool {
    *l == Layout::Direct
}

impl MdpClass {
    pub fn to_json(&self) -> String {
        let doc = InstanceDoc {
            format: FORMAT_VERSION.to_string(),
            n_states: self.n_states,
            n_actions: self.n_actions,
            n_outcomes: self.n_outcomes,
            n_params: self.n_params,
            horizon: self.horizon,
            reward_range: self.reward_range,
            transition: self.transition.clone(),
            outcome: self.outcome.clone(),
            reward: self.reward.clone(),
            init: self.init.clone(),
            layout: self.layout,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Parses and validates an instance document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.format != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported format `{}` (expected `{FORMAT_VERSION}`)",
                doc.format
            )));
        }
        MdpClass {
            n_states: doc.n_states,
            n_actions: doc.n_actions,
            n_outcomes: doc.n_outcomes,
            n_params: doc.n_params,
            horizon: doc.horizon,
            reward_range: doc.reward_range,
            transition: doc.transition,
            outcome: doc.outcome,
            reward: doc.reward,
            init: doc.init,
            layout: doc.layout,
        }
        .checked()
    }
}

pub fn save_instance(instance: &MdpClass, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, instance.to_json())?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<MdpClass> {
    let text = fs::read_to_string(path)?;
    MdpClass::from_json(&text)
}

/// SHA-256 of the canonical JSON serialization, hex encoded.
pub fn instance_hash(instance: &MdpClass) -> String {
    hex::encode(Sha256::digest(instance.to_json().as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::{build_finite_mab, build_linear_bandit};

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mab.json");
        let m = build_finite_mab(&[vec![0.1, 1.0 / 3.0], vec![0.7, 0.2]], 4).unwrap();
        save_instance(&m, &path).unwrap();
        let back = load_instance(&path).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.outcome.iter().flatten().flatten().zip(m.outcome.iter().flatten().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let lin = build_linear_bandit(1, &[vec![0.3], vec![-1.0]], &[vec![0.77]], 4, 2).unwrap();
        assert_eq!(MdpClass::from_json(&lin.to_json()).unwrap(), lin);
    }

    #[test]
    fn missing_horizon_names_field() {
        let m = build_finite_mab(&[vec![0.5]], 1).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        v.as_object_mut().unwrap().remove("horizon");
        let err = MdpClass::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Parse(ref msg) if msg.contains("horizon")), "{err}");
    }

    #[test]
    fn negative_probability_fails_validation() {
        let m = build_finite_mab(&[vec![0.5, 0.5]], 1).unwrap();
        let text = m.to_json().replacen("0.25", "-0.25", 1);
        match MdpClass::from_json(&text).unwrap_err() {
            Error::Validation(report) => {
                assert!(report.violations.iter().any(|v| v.location.starts_with("outcome[param=0][state=0]")));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn format_string_is_mandatory() {
        let m = build_finite_mab(&[vec![0.5]], 1).unwrap();
        let text = m.to_json().replace(FORMAT_VERSION, "other-v9");
        assert!(matches!(MdpClass::from_json(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn hash_is_stable() {
        let m = build_finite_mab(&[vec![0.5, 0.25]], 2).unwrap();
        assert_eq!(instance_hash(&m), instance_hash(&m.clone()));
        assert_eq!(instance_hash(&m).len(), 64);
    }
}
