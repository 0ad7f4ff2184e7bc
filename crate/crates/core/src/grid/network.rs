use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GridError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: u32,
    pub load_mw: f64,
    pub gen_mw: f64,
    pub max_gen_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    /// Series reactance in p.u. on the network MVA base.
    pub reactance: f64,
    pub p_max_mw: f64,
    #[serde(default)]
    pub p_min_mw: f64,
}

fn default_base_mva() -> f64 {
    100.0
}

/// On-disk network document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    source: Option<String>,
    #[serde(default = "default_base_mva")]
    base_mva: f64,
    slack_bus: u32,
    buses: Vec<Bus>,
    lines: Vec<Line>,
}

/// A validated transmission network. Line positions (`0..lines().len()`)
/// are the element indices used by every optimizer in this crate.
#[derive(Debug, Clone)]
pub struct Network {
    doc: NetworkDoc,
    bus_index: HashMap<u32, usize>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.doc.base_mva == other.doc.base_mva
            && self.doc.slack_bus == other.doc.slack_bus
            && self.doc.buses == other.doc.buses
            && self.doc.lines == other.doc.lines
    }
}

impl Network {
    pub fn new(slack_bus: u32, buses: Vec<Bus>, lines: Vec<Line>) -> Result<Self, GridError> {
        Self::from_doc(NetworkDoc {
            name: None,
            source: None,
            base_mva: default_base_mva(),
            slack_bus,
            buses,
            lines,
        })
    }

    /// Reads and validates a network JSON document.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, GridError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GridError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, GridError> {
        let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| GridError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_doc(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("network serializes")
    }

    fn from_doc(doc: NetworkDoc) -> Result<Self, GridError> {
        let invalid = |msg: String| Err(GridError::Invalid(msg));
        if !(doc.base_mva > 0.0) {
            return invalid(format!("base_mva must be positive, got {}", doc.base_mva));
        }
        if doc.buses.is_empty() {
            return invalid("network has no buses".into());
        }
        let mut bus_index = HashMap::with_capacity(doc.buses.len());
        for (i, b) in doc.buses.iter().enumerate() {
            if bus_index.insert(b.id, i).is_some() {
                return invalid(format!("duplicate bus id {}", b.id));
            }
            for (what, v) in [("load_mw", b.load_mw), ("gen_mw", b.gen_mw), ("max_gen_mw", b.max_gen_mw)] {
                if !v.is_finite() || v < 0.0 {
                    return invalid(format!("bus {}: {what} must be finite and >= 0, got {v}", b.id));
                }
            }
        }
        if !bus_index.contains_key(&doc.slack_bus) {
            return invalid(format!("slack bus {} is not a bus", doc.slack_bus));
        }
        let mut line_ids = BTreeSet::new();
        for l in &doc.lines {
            if !line_ids.insert(l.id) {
                return invalid(format!("duplicate line id {}", l.id));
            }
            for end in [l.from, l.to] {
                if !bus_index.contains_key(&end) {
                    return invalid(format!("line {}: unknown bus {end}", l.id));
                }
            }
            if l.from == l.to {
                return invalid(format!("line {}: both ends at bus {}", l.id, l.from));
            }
            if !(l.reactance > 0.0) || !l.reactance.is_finite() {
                return invalid(format!("line {}: reactance must be > 0, got {}", l.id, l.reactance));
            }
            if !(l.p_max_mw > 0.0) || !l.p_max_mw.is_finite() {
                return invalid(format!("line {}: P_max must be > 0, got {}", l.id, l.p_max_mw));
            }
            if !(l.p_min_mw >= 0.0) {
                return invalid(format!("line {}: P_min must be >= 0, got {}", l.id, l.p_min_mw));
            }
            if l.p_min_mw >= l.p_max_mw {
                return invalid(format!(
                    "line {}: P_min ({}) must be below P_max ({})",
                    l.id, l.p_min_mw, l.p_max_mw
                ));
            }
        }
        let net = Network { doc, bus_index };
        if net.island_count(&vec![false; net.lines().len()]) != 1 {
            return invalid("network is not connected on its in-service lines".into());
        }
        Ok(net)
    }

    pub fn name(&self) -> Option<&str> {
        self.doc.name.as_deref()
    }

    pub fn source(&self) -> Option<&str> {
        self.doc.source.as_deref()
    }

    pub fn base_mva(&self) -> f64 {
        self.doc.base_mva
    }

    pub fn slack_bus(&self) -> u32 {
        self.doc.slack_bus
    }

    pub fn buses(&self) -> &[Bus] {
        &self.doc.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.doc.lines
    }

    pub fn bus_position(&self, id: u32) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    pub fn line_position(&self, id: u32) -> Option<usize> {
        self.doc.lines.iter().position(|l| l.id == id)
    }

    pub fn line_ids(&self) -> Vec<u32> {
        self.doc.lines.iter().map(|l| l.id).collect()
    }

    pub fn total_load_mw(&self) -> f64 {
        self.doc.buses.iter().map(|b| b.load_mw).sum()
    }

    /// Bus-position endpoints of line position `e`.
    pub(crate) fn line_ends(&self, e: usize) -> (usize, usize) {
        let l = &self.doc.lines[e];
        (self.bus_index[&l.from], self.bus_index[&l.to])
    }

    /// Union-find over in-service lines.
    pub(crate) fn islands(&self, outaged: &[bool]) -> UnionFind<usize> {
        let mut uf = UnionFind::new(self.doc.buses.len());
        for e in 0..self.doc.lines.len() {
            if !outaged[e] {
                let (a, b) = self.line_ends(e);
                uf.union(a, b);
            }
        }
        uf
    }

    fn island_count(&self, outaged: &[bool]) -> usize {
        let uf = self.islands(outaged);
        let mut roots: Vec<usize> = (0..self.doc.buses.len()).map(|b| uf.find(b)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// SHA-256 over the canonical JSON of all numeric and topological data.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::json!({
            "base_mva": self.doc.base_mva,
            "slack_bus": self.doc.slack_bus,
            "buses": self.doc.buses,
            "lines": self.doc.lines,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    /// Copy with bus loads and generation scaled element-wise.
    pub fn apply_state(&self, state: &super::SystemState) -> Result<Network, GridError> {
        let n = self.doc.buses.len();
        for (what, v) in [("load", &state.load_multipliers), ("generation", &state.gen_multipliers)] {
            if v.len() != n {
                return Err(GridError::DimensionMismatch {
                    what,
                    expected: n,
                    got: v.len(),
                });
            }
            if let Some(bad) = v.iter().find(|m| !m.is_finite() || **m < 0.0) {
                return Err(GridError::Invalid(format!("{what} multiplier {bad} must be finite and >= 0")));
            }
        }
        let mut out = self.clone();
        for ((bus, lm), gm) in out
            .doc
            .buses
            .iter_mut()
            .zip(&state.load_multipliers)
            .zip(&state.gen_multipliers)
        {
            bus.load_mw *= lm;
            bus.gen_mw *= gm;
        }
        Ok(out)
    }
}
