//! JSON file formats for instances and solutions.
//!
//! Instance: `{"players":[..],"resources":[..],"configs":[{"player":id,"resources":[..]}]}`.
//! Solution: `{"entries":[{"player":id,"config":index,"kept":[..]}]}`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Configuration, Hypergraph};
use crate::matching::{MatchEntry, RelaxedMatching};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub player: String,
    pub resources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub players: Vec<String>,
    pub resources: Vec<String>,
    pub configs: Vec<ConfigRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub player: String,
    pub config: usize,
    pub kept: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub entries: Vec<EntryRecord>,
}

fn index_of(ids: &[String]) -> HashMap<&str, usize> {
    ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
}

impl InstanceFile {
    pub fn from_hypergraph(h: &Hypergraph) -> Self {
        InstanceFile {
            players: h.players.clone(),
            resources: h.resources.clone(),
            configs: h
                .configs
                .iter()
                .map(|c| ConfigRecord {
                    player: h.players[c.player].clone(),
                    resources: c.resources.iter().map(|&r| h.resources[r].clone()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_hypergraph(&self) -> Result<Hypergraph> {
        let pidx = index_of(&self.players);
        let ridx = index_of(&self.resources);
        let mut configs = Vec::with_capacity(self.configs.len());
        for (c, rec) in self.configs.iter().enumerate() {
            let player = *pidx.get(rec.player.as_str()).ok_or_else(|| {
                Error::MalformedInstance(format!("configuration {c}: unknown player {:?}", rec.player))
            })?;
            let mut resources = Vec::with_capacity(rec.resources.len());
            for id in &rec.resources {
                if pidx.contains_key(id.as_str()) {
                    return Err(Error::MalformedInstance(format!(
                        "configuration {c} contains more than one player vertex ({id:?})"
                    )));
                }
                let r = *ridx.get(id.as_str()).ok_or_else(|| {
                    Error::MalformedInstance(format!("configuration {c}: unknown resource {id:?}"))
                })?;
                resources.push(r);
            }
            let cfg = Configuration::new(player, resources);
            if cfg.size() != rec.resources.len() {
                return Err(Error::MalformedInstance(format!(
                    "configuration {c} lists a resource more than once"
                )));
            }
            configs.push(cfg);
        }
        Hypergraph::new(self.players.clone(), self.resources.clone(), configs)
    }
}

impl SolutionFile {
    pub fn from_matching(h: &Hypergraph, sol: &RelaxedMatching) -> Self {
        SolutionFile {
            entries: sol
                .entries
                .iter()
                .map(|e| EntryRecord {
                    player: h.players[e.player].clone(),
                    config: e.config,
                    kept: e.kept.iter().map(|&r| h.resources[r].clone()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_matching(&self, h: &Hypergraph) -> Result<RelaxedMatching> {
        let pidx = index_of(&h.players);
        let ridx = index_of(&h.resources);
        let mut entries = Vec::with_capacity(self.entries.len());
        for rec in &self.entries {
            let player = *pidx
                .get(rec.player.as_str())
                .ok_or_else(|| Error::MalformedSolution(format!("unknown player {:?}", rec.player)))?;
            if rec.config >= h.configs.len() {
                return Err(Error::MalformedSolution(format!(
                    "configuration index {} out of range",
                    rec.config
                )));
            }
            let kept = rec
                .kept
                .iter()
                .map(|id| {
                    ridx.get(id.as_str())
                        .copied()
                        .ok_or_else(|| Error::MalformedSolution(format!("unknown resource {id:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push(MatchEntry { player, config: rec.config, kept });
        }
        Ok(RelaxedMatching::new(h, entries))
    }
}

pub fn read_instance(json: &str) -> Result<Hypergraph> {
    let file: InstanceFile =
        serde_json::from_str(json).map_err(|e| Error::MalformedInstance(e.to_string()))?;
    file.to_hypergraph()
}

pub fn write_instance(h: &Hypergraph) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_hypergraph(h)).expect("instance serializes")
}

/// Reads a solution either as a bare solution document or embedded under a
/// `"solution"` key (as emitted by `solve`).
pub fn read_solution(json: &str, h: &Hypergraph) -> Result<RelaxedMatching> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| Error::MalformedSolution(e.to_string()))?;
    let body = value.get("solution").cloned().unwrap_or(value);
    let file: SolutionFile =
        serde_json::from_value(body).map_err(|e| Error::MalformedSolution(e.to_string()))?;
    file.to_matching(h)
}

pub fn write_solution(h: &Hypergraph, sol: &RelaxedMatching) -> String {
    serde_json::to_string_pretty(&SolutionFile::from_matching(h, sol)).expect("solution serializes")
}
