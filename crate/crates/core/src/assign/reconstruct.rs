//! Level-by-level reconstruction of a load-capped assignment for the chosen
//! configurations, from `R_d` down to `R_0`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::index;
use serde::Serialize;

use super::{lift_assignment, GoodAssignment, LiftRecord};
use crate::error::Result;
use crate::hierarchy::ResourceHierarchy;
use crate::instance::{Hypergraph, SizeClassIndex};
use crate::rational::{format_rational, int};
use crate::rng;
use crate::select::Selection;

/// Conflict bookkeeping for one higher-level configuration at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictRecord {
    pub config: usize,
    /// Overloaded resources it held before conflict resolution.
    pub overloaded_held: usize,
    /// Resources actually removed from it.
    pub removed: usize,
    /// `Σ a_r` over its overloaded resources.
    pub s: String,
    /// Expected loss `Σ (a_r + b_r - gamma) / b_r` over the same resources.
    pub mu: String,
    /// `S / gamma^2 <= mu <= 2 S / gamma`.
    pub sandwich_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRecord {
    /// The level `j - 1` being built.
    pub level: usize,
    pub lift: LiftRecord,
    /// Configurations of class `j - 1` and the resources withheld from them
    /// because more than `gamma` of them contain it.
    pub new_configs: usize,
    pub withheld: usize,
    pub overloaded: usize,
    pub conflicts: Vec<ConflictRecord>,
    pub max_load: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub assignment: GoodAssignment,
    pub levels: Vec<LevelRecord>,
}

impl Reconstruction {
    pub fn sandwich_holds(&self) -> bool {
        self.levels.iter().all(|l| l.conflicts.iter().all(|c| c.sandwich_holds))
    }
}

/// Builds an assignment of `R_0` to the chosen configurations with no
/// resource held more than `gamma` times.
///
/// For `j = d..1`: the holdings of chosen configurations of class `>= j` are
/// lifted from `R_j` to `R_{j-1}`; each chosen configuration of class `j-1`
/// receives `C ∩ R_{j-1}` minus the resources shared by more than `gamma` of
/// them; finally every resource with `a + b > gamma` holders (`a` new, `b`
/// lifted) is removed from `a + b - gamma` lifted holders chosen uniformly.
pub fn reconstruct(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    hier: &ResourceHierarchy,
    sel: &Selection,
    gamma: u64,
    seed: u64,
) -> Result<Reconstruction> {
    let mut rng = rng::stream(seed, "assign/reconstruct");
    let mut current = GoodAssignment::empty(gamma);
    let mut levels = Vec::new();
    for j in (1..=idx.d).rev() {
        let level = j - 1;
        let (lifted, lift) = lift_assignment(h, &current, hier, level)?;

        // new configurations of class j-1
        let fresh = sel.class(level);
        let mut a: BTreeMap<usize, u64> = BTreeMap::new();
        for &c in fresh {
            for &r in &h.configs[c].resources {
                if hier.contains(level, r) {
                    *a.entry(r).or_insert(0) += 1;
                }
            }
        }
        let withheld = a.values().filter(|&&v| v > gamma).count();
        a.retain(|_, v| *v <= gamma);

        // lifted holders per resource
        let mut holders: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&c, held) in &lifted.holdings {
            for &r in held {
                holders.entry(r).or_default().push(c);
            }
        }
        let mut excess: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
        for (&r, hs) in &holders {
            let ar = a.get(&r).copied().unwrap_or(0);
            let br = hs.len() as u64;
            if ar + br > gamma {
                excess.insert(r, (ar, br));
            }
        }

        // expected loss diagnostics, computed before any deletion
        let g = int(gamma);
        let mut conflicts = Vec::new();
        for (&c, held) in &lifted.holdings {
            let mut s = BigRational::zero();
            let mut mu = BigRational::zero();
            let mut overloaded_held = 0;
            for r in held {
                if let Some(&(ar, br)) = excess.get(r) {
                    overloaded_held += 1;
                    s += int(ar);
                    mu += BigRational::new(BigInt::from(ar + br - gamma), BigInt::from(br));
                }
            }
            if overloaded_held == 0 {
                continue;
            }
            let sandwich_holds = &s / (&g * &g) <= mu && mu <= int(2) * &s / &g;
            conflicts.push(ConflictRecord {
                config: c,
                overloaded_held,
                removed: 0,
                s: format_rational(&s),
                mu: format_rational(&mu),
                sandwich_holds,
            });
        }

        let mut next = lifted;
        let mut removed: BTreeMap<usize, usize> = BTreeMap::new();
        for (&r, &(ar, br)) in &excess {
            let drop = (ar + br - gamma) as usize;
            let hs = &holders[&r];
            for i in index::sample(&mut rng, hs.len(), drop) {
                let c = hs[i];
                next.holdings.get_mut(&c).expect("holder").retain(|&x| x != r);
                *removed.entry(c).or_insert(0) += 1;
            }
        }
        for rec in conflicts.iter_mut() {
            rec.removed = removed.get(&rec.config).copied().unwrap_or(0);
        }
        for &c in fresh {
            let held = h.configs[c]
                .resources
                .iter()
                .copied()
                .filter(|r| hier.contains(level, *r) && a.contains_key(r))
                .collect();
            next.holdings.insert(c, held);
        }
        let max_load = next.max_load();
        assert!(max_load <= gamma, "load {max_load} exceeds gamma {gamma} at level {level}");
        levels.push(LevelRecord {
            level,
            lift,
            new_configs: fresh.len(),
            withheld,
            overloaded: excess.len(),
            conflicts,
            max_load,
        });
        current = next;
    }
    Ok(Reconstruction { assignment: current, levels })
}
