use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::{Error, Result};
use crate::hidden::ObservationParams;
use crate::model::{AttributeDecl, EffectSpec, Model, ModelParams, ModelSpec, NetworkState, StateRecord};

fn default_unit() -> String {
    "day".into()
}

fn yes() -> bool {
    true
}

/// Model definition file: structure, optional parameter values and an
/// optional initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default = "default_unit")]
    pub time_unit: String,
    pub n_actors: usize,
    #[serde(default)]
    pub attributes: Vec<AttributeDecl>,
    pub effects: Vec<EffectSpec>,
    /// Whether rates are shared by all actors when fitting.
    #[serde(default = "yes")]
    pub shared_rates: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<StateRecord>,
}

impl ModelFile {
    pub fn read(path: &Path) -> Result<Self> {
        let m: Self = read_json(path)?;
        m.spec().validate().map_err(|e| super::parse_error(path, e))?;
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec { n_actors: self.n_actors, attributes: self.attributes.clone(), effects: self.effects.clone() }
    }

    /// The model at the file's parameter values.
    pub fn model(&self) -> Result<Model> {
        let params = self
            .params
            .clone()
            .ok_or_else(|| Error::Usage("model file has no \"params\" section".into()))?;
        Model::new(self.spec(), params)
    }

    /// Declared initial state, or the empty network with attributes at their
    /// minimum.
    pub fn initial_state(&self) -> Result<NetworkState> {
        match &self.initial {
            Some(rec) => NetworkState::from_record(&self.spec(), rec),
            None => Ok(NetworkState::for_spec(&self.spec())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_name_the_field_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, "{\n  \"n_actors\": 3,\n  \"effects\": [{\"target\": \"network\", \"kind\": \"densty\"}]\n}\n")
            .unwrap();
        let msg = ModelFile::read(&p).unwrap_err().to_string();
        assert!(msg.contains("densty") && msg.contains("line 3"), "{msg}");
        std::fs::write(&p, "{\"n_actors\": 3, \"effects\": [], \"actors\": 4}").unwrap();
        let msg = ModelFile::read(&p).unwrap_err().to_string();
        assert!(msg.contains("actors"), "{msg}");
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let m = ModelFile {
            time_unit: "day".into(),
            n_actors: 4,
            attributes: vec![AttributeDecl::new("alcohol", 1, 5)],
            effects: vec![EffectSpec::network(crate::model::EffectKind::Density)],
            shared_rates: true,
            params: None,
            observation: None,
            initial: None,
        };
        m.write(&p).unwrap();
        assert_eq!(ModelFile::read(&p).unwrap(), m);
        assert!(m.model().is_err());
    }
}
