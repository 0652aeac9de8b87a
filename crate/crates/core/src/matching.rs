//! Relaxed perfect matchings and their verification.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::instance::Hypergraph;
use crate::rational::Alpha;

/// A player's chosen configuration together with the resources it keeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchEntry {
    pub player: usize,
    pub config: usize,
    /// Sorted resource indices.
    pub kept: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelaxedMatching {
    pub entries: Vec<MatchEntry>,
    pub achieved_alpha: Alpha,
}

impl RelaxedMatching {
    /// Wraps entries, sorting them by player and computing the achieved
    /// relaxation against `h`.
    pub fn new(h: &Hypergraph, mut entries: Vec<MatchEntry>) -> Self {
        for e in &mut entries {
            e.kept.sort_unstable();
            e.kept.dedup();
        }
        entries.sort_by_key(|e| (e.player, e.config));
        let achieved_alpha = achieved_alpha(h, &entries);
        RelaxedMatching { entries, achieved_alpha }
    }
}

/// `max |C| / |kept|` over entries; unbounded when any kept set is empty or
/// an entry references a configuration outside `h`.
pub fn achieved_alpha(h: &Hypergraph, entries: &[MatchEntry]) -> Alpha {
    entries
        .iter()
        .map(|e| match h.configs.get(e.config) {
            Some(c) => Alpha::ratio(c.size(), e.kept.len()),
            None => Alpha::Unbounded,
        })
        .max()
        .unwrap_or(Alpha::Unbounded)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Uncovered { player: usize },
    DuplicateEntry { player: usize },
    WrongPlayer { player: usize, config: usize },
    UnknownConfig { player: usize, config: usize },
    NotSubset { player: usize, resource: usize },
    EmptyKept { player: usize },
    Overlap { resource: usize, players: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub accepted: bool,
    pub achieved_alpha: Alpha,
    pub alpha_target: Alpha,
    pub violations: Vec<Violation>,
}

/// Checks that `sol` is an `alpha_target`-relaxed perfect matching of `h`.
pub fn verify(h: &Hypergraph, sol: &RelaxedMatching, alpha_target: Alpha) -> VerifyReport {
    let mut violations = Vec::new();
    let mut seen = vec![0usize; h.m()];
    let mut holders: BTreeMap<usize, Vec<usize>> = BTreeMap::new();

    for e in &sol.entries {
        if e.player >= h.m() {
            continue;
        }
        seen[e.player] += 1;
        if seen[e.player] == 2 {
            violations.push(Violation::DuplicateEntry { player: e.player });
        }
        let Some(cfg) = h.configs.get(e.config) else {
            violations.push(Violation::UnknownConfig { player: e.player, config: e.config });
            continue;
        };
        if cfg.player != e.player {
            violations.push(Violation::WrongPlayer { player: e.player, config: e.config });
        }
        if e.kept.is_empty() {
            violations.push(Violation::EmptyKept { player: e.player });
        }
        for &r in &e.kept {
            if !cfg.contains(r) {
                violations.push(Violation::NotSubset { player: e.player, resource: r });
            }
            holders.entry(r).or_default().push(e.player);
        }
    }
    for (player, &count) in seen.iter().enumerate() {
        if count == 0 {
            violations.push(Violation::Uncovered { player });
        }
    }
    for (resource, players) in holders {
        if players.len() > 1 {
            violations.push(Violation::Overlap { resource, players });
        }
    }

    let achieved = achieved_alpha(h, &sol.entries);
    let accepted = violations.is_empty() && achieved <= alpha_target;
    VerifyReport { accepted, achieved_alpha: achieved, alpha_target, violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Configuration;

    fn t0() -> Hypergraph {
        Hypergraph::with_counts(
            2,
            2,
            vec![Configuration::new(0, vec![0]), Configuration::new(1, vec![1])],
        )
        .unwrap()
    }

    fn t1() -> Hypergraph {
        Hypergraph::with_counts(
            2,
            4,
            vec![
                Configuration::new(0, vec![0, 1]),
                Configuration::new(0, vec![2, 3]),
                Configuration::new(1, vec![0, 2]),
                Configuration::new(1, vec![1, 3]),
            ],
        )
        .unwrap()
    }

    fn entry(player: usize, config: usize, kept: &[usize]) -> MatchEntry {
        MatchEntry { player, config, kept: kept.to_vec() }
    }

    #[test]
    fn t0_full_singletons_accept_at_one() {
        let h = t0();
        let sol = RelaxedMatching::new(&h, vec![entry(0, 0, &[0]), entry(1, 1, &[1])]);
        let rep = verify(&h, &sol, Alpha::one());
        assert!(rep.accepted);
        assert_eq!(rep.achieved_alpha, Alpha::one());
    }

    #[test]
    fn t1_half_kept_accept_at_two() {
        let h = t1();
        // p0 keeps r0 of {r0,r1}; p1 keeps r3 of {r1,r3}
        let sol = RelaxedMatching::new(&h, vec![entry(0, 0, &[0]), entry(1, 3, &[3])]);
        let rep = verify(&h, &sol, Alpha::integer(2));
        assert!(rep.accepted, "{rep:?}");
        assert_eq!(rep.achieved_alpha, Alpha::integer(2));
        assert!(!verify(&h, &sol, Alpha::ratio(3, 2)).accepted);
    }

    #[test]
    fn reports_each_violation_kind() {
        let h = t1();
        let sol = RelaxedMatching {
            entries: vec![entry(0, 0, &[0, 2]), entry(0, 1, &[]), entry(1, 2, &[0])],
            achieved_alpha: Alpha::Unbounded,
        };
        let rep = verify(&h, &sol, Alpha::Unbounded);
        assert!(!rep.accepted);
        assert!(rep.violations.contains(&Violation::DuplicateEntry { player: 0 }));
        assert!(rep.violations.contains(&Violation::NotSubset { player: 0, resource: 2 }));
        assert!(rep.violations.contains(&Violation::EmptyKept { player: 0 }));
        assert!(rep
            .violations
            .contains(&Violation::Overlap { resource: 0, players: vec![0, 1] }));

        let sol = RelaxedMatching::new(&h, vec![entry(0, 2, &[0])]);
        let rep = verify(&h, &sol, Alpha::Unbounded);
        assert!(rep.violations.contains(&Violation::WrongPlayer { player: 0, config: 2 }));
        assert!(rep.violations.contains(&Violation::Uncovered { player: 1 }));
    }
}
