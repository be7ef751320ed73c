use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::Circuit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Port {
    #[default]
    Internal,
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub port: Port,
}

/// Named substructures over the nodes of a [`Circuit`], in file order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupConfig {
    groups: IndexMap<String, GroupSpec>,
}

impl GroupConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        nodes: impl IntoIterator<Item = S>,
        port: Port,
    ) -> &mut Self {
        let spec = GroupSpec {
            nodes: nodes.into_iter().map(Into::into).collect(),
            port,
        };
        self.groups.insert(name.into(), spec);
        self
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse("groups", e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Checks that every group is non-empty and names only nodes of `c`.
    pub fn validate(&self, c: &Circuit) -> Result<()> {
        for (name, spec) in &self.groups {
            if spec.nodes.is_empty() {
                return Err(Error::EmptyGroup(name.clone()));
            }
            c.indices_of(&spec.nodes)?;
        }
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Result<&GroupSpec> {
        self.groups
            .get(name)
            .ok_or_else(|| Error::UnknownGroup(name.to_string()))
    }

    /// Node names configured for `name`.
    pub fn resolve(&self, name: &str) -> Result<&[String]> {
        self.get(name).map(|g| g.nodes.as_slice())
    }

    /// Sorted, de-duplicated node indices of a group within `c`.
    pub fn indices(&self, name: &str, c: &Circuit) -> Result<Vec<usize>> {
        let mut idx = c.indices_of(self.resolve(name)?)?;
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }

    pub fn port(&self, name: &str) -> Result<Port> {
        self.get(name).map(|g| g.port)
    }

    pub fn groups_with_port(&self, port: Port) -> impl Iterator<Item = &str> {
        self.groups
            .iter()
            .filter(move |(_, g)| g.port == port)
            .map(|(n, _)| n.as_str())
    }

    /// Union of all nodes in groups flagged with `port`, sorted by index.
    pub fn port_indices(&self, port: Port, c: &Circuit) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for name in self.groups_with_port(port) {
            out.extend(self.indices(name, c)?);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn circuit() -> Circuit {
        let names = ["a", "b", "c"].map(String::from).to_vec();
        Circuit::new(names, vec![vec![0.0; 3]; 3], BTreeMap::new()).unwrap()
    }

    #[test]
    fn parses_documented_schema() {
        let gc: GroupConfig = serde_json::from_str(
            r#"{"in": {"nodes": ["a"], "port": "input"}, "mid": {"nodes": ["b", "c"]}}"#,
        )
        .unwrap();
        assert_eq!(gc.port("in").unwrap(), Port::Input);
        assert_eq!(gc.port("mid").unwrap(), Port::Internal);
        assert_eq!(gc.indices("mid", &circuit()).unwrap(), vec![1, 2]);
        assert_eq!(gc.names().collect::<Vec<_>>(), ["in", "mid"]);
    }

    #[test]
    fn unknown_group_and_node() {
        let mut gc = GroupConfig::new();
        gc.insert("g", ["zz"], Port::Internal);
        assert!(matches!(gc.resolve("nope"), Err(Error::UnknownGroup(_))));
        assert!(matches!(gc.validate(&circuit()), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn empty_group_rejected() {
        let mut gc = GroupConfig::new();
        gc.insert("g", Vec::<String>::new(), Port::Internal);
        assert!(matches!(gc.validate(&circuit()), Err(Error::EmptyGroup(_))));
    }

    #[test]
    fn bad_port_flag_is_a_parse_error() {
        let r: std::result::Result<GroupConfig, _> =
            serde_json::from_str(r#"{"g": {"nodes": ["a"], "port": "sideways"}}"#);
        assert!(r.is_err());
    }
}
