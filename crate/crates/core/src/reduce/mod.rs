//! Reductions between relaxed hypergraph matching and the Santa Claus
//! max-min allocation problem, with solution pull-backs.

mod to_csc;
mod to_santa;

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational};

pub use to_csc::{
    csc_pullback, log_star_chain, santa_to_csc, stage4, stage4_pullback, CscPullback, SantaToCscTrace, StageRecord,
};
pub use to_santa::{csc_to_santa, matching_to_allocation, santa_pullback, CscToSantaTrace};

/// Players valuing resources; absent pairs are worth zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SantaInstance {
    pub players: Vec<String>,
    pub resources: Vec<String>,
    /// Positive values per player, keyed by resource index.
    pub values: Vec<BTreeMap<usize, BigRational>>,
}

impl SantaInstance {
    pub fn new(
        players: Vec<String>,
        resources: Vec<String>,
        values: Vec<BTreeMap<usize, BigRational>>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::MalformedInstance(msg));
        if values.len() != players.len() {
            return bad("one value map per player required".into());
        }
        let mut ids = BTreeSet::new();
        for id in players.iter().chain(&resources) {
            if !ids.insert(id) {
                return bad(format!("duplicate id {id}"));
            }
        }
        for row in &values {
            for (&r, v) in row {
                if r >= resources.len() {
                    return bad(format!("resource index {r} out of range"));
                }
                if v.is_negative() {
                    return bad(format!("negative value {v}"));
                }
            }
        }
        let values = values.into_iter().map(|row| row.into_iter().filter(|(_, v)| !v.is_zero()).collect()).collect();
        Ok(SantaInstance { players, resources, values })
    }

    pub fn m(&self) -> usize {
        self.players.len()
    }

    pub fn n(&self) -> usize {
        self.resources.len()
    }

    pub fn value(&self, player: usize, resource: usize) -> BigRational {
        self.values[player].get(&resource).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn player_values(&self, alloc: &Allocation) -> Vec<BigRational> {
        let mut totals = vec![BigRational::zero(); self.m()];
        for (r, owner) in alloc.owner.iter().enumerate() {
            if let Some(p) = *owner {
                totals[p] += self.value(p, r);
            }
        }
        totals
    }

    /// Value of the worst-off player.
    pub fn min_value(&self, alloc: &Allocation) -> BigRational {
        self.player_values(alloc).into_iter().min().unwrap_or_else(BigRational::zero)
    }
}

/// Owner of each resource, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub owner: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueRecord {
    pub player: String,
    pub resource: String,
    pub v: String,
}

/// On-disk Santa Claus instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SantaFile {
    pub players: Vec<String>,
    pub resources: Vec<String>,
    pub values: Vec<ValueRecord>,
}

impl SantaFile {
    pub fn from_instance(s: &SantaInstance) -> Self {
        let values = s
            .values
            .iter()
            .enumerate()
            .flat_map(|(p, row)| {
                row.iter().map(move |(&r, v)| ValueRecord {
                    player: s.players[p].clone(),
                    resource: s.resources[r].clone(),
                    v: format_rational(v),
                })
            })
            .collect();
        SantaFile { players: s.players.clone(), resources: s.resources.clone(), values }
    }

    pub fn to_instance(&self) -> Result<SantaInstance> {
        let pidx: BTreeMap<&str, usize> = self.players.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let ridx: BTreeMap<&str, usize> = self.resources.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        let mut values = vec![BTreeMap::new(); self.players.len()];
        for rec in &self.values {
            let p = *pidx
                .get(rec.player.as_str())
                .ok_or_else(|| Error::MalformedInstance(format!("unknown player {}", rec.player)))?;
            let r = *ridx
                .get(rec.resource.as_str())
                .ok_or_else(|| Error::MalformedInstance(format!("unknown resource {}", rec.resource)))?;
            let v = parse_rational(&rec.v).map_err(|_| Error::MalformedInstance(format!("bad value {}", rec.v)))?;
            if values[p].insert(r, v).is_some() {
                return Err(Error::MalformedInstance(format!("duplicate value for {} {}", rec.player, rec.resource)));
            }
        }
        SantaInstance::new(self.players.clone(), self.resources.clone(), values)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub resource: String,
    pub player: String,
}

/// On-disk allocation; unlisted resources are unassigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationFile {
    pub assignments: Vec<AssignmentRecord>,
}

impl AllocationFile {
    pub fn from_allocation(s: &SantaInstance, alloc: &Allocation) -> Self {
        let assignments = alloc
            .owner
            .iter()
            .enumerate()
            .filter_map(|(r, o)| {
                o.map(|p| AssignmentRecord { resource: s.resources[r].clone(), player: s.players[p].clone() })
            })
            .collect();
        AllocationFile { assignments }
    }

    pub fn to_allocation(&self, s: &SantaInstance) -> Result<Allocation> {
        let mut owner = vec![None; s.n()];
        for rec in &self.assignments {
            let bad = || Error::MalformedSolution(format!("unknown assignment {} -> {}", rec.resource, rec.player));
            let r = s.resources.iter().position(|x| *x == rec.resource).ok_or_else(bad)?;
            let p = s.players.iter().position(|x| *x == rec.player).ok_or_else(bad)?;
            if owner[r].replace(p).is_some() {
                return Err(Error::MalformedSolution(format!("resource {} assigned twice", rec.resource)));
            }
        }
        Ok(Allocation { owner })
    }
}

pub fn read_santa(json: &str) -> Result<SantaInstance> {
    let file: SantaFile = serde_json::from_str(json).map_err(|e| Error::MalformedInstance(e.to_string()))?;
    file.to_instance()
}

pub fn write_santa(s: &SantaInstance) -> String {
    serde_json::to_string_pretty(&SantaFile::from_instance(s)).expect("serializable")
}

/// Exhaustive max-min optimum: every resource goes to one of the players
/// valuing it. Errors with `TooLarge` beyond `limit` allocations.
pub fn santa_optimum(s: &SantaInstance, limit: u128) -> Result<(BigRational, Allocation)> {
    let mut likers: Vec<Vec<usize>> = vec![Vec::new(); s.n()];
    for (p, row) in s.values.iter().enumerate() {
        for &r in row.keys() {
            likers[r].push(p);
        }
    }
    let total = likers.iter().fold(1u128, |acc, l| acc.saturating_mul(l.len().max(1) as u128));
    if total > limit {
        return Err(Error::TooLarge { selections: total, limit });
    }
    let mut best: Option<(BigRational, Vec<Option<usize>>)> = None;
    let mut owner = vec![None; s.n()];
    let mut totals = vec![BigRational::zero(); s.m()];
    search(s, &likers, 0, &mut owner, &mut totals, &mut best);
    let (value, owner) = best.expect("at least one allocation");
    Ok((value, Allocation { owner }))
}

fn search(
    s: &SantaInstance,
    likers: &[Vec<usize>],
    r: usize,
    owner: &mut Vec<Option<usize>>,
    totals: &mut Vec<BigRational>,
    best: &mut Option<(BigRational, Vec<Option<usize>>)>,
) {
    if r == likers.len() {
        let v = totals.iter().min().cloned().unwrap_or_else(BigRational::zero);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            *best = Some((v, owner.clone()));
        }
        return;
    }
    if likers[r].is_empty() {
        return search(s, likers, r + 1, owner, totals, best);
    }
    for &p in &likers[r] {
        let v = s.value(p, r);
        owner[r] = Some(p);
        totals[p] += &v;
        search(s, likers, r + 1, owner, totals, best);
        totals[p] -= &v;
    }
    owner[r] = None;
}
