//! Relaxed matching to Santa Claus: one Santa player per configuration,
//! plus `deg(v) - 1` auxiliary resources per player `v` that all of its
//! configuration players value at 1.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{Allocation, SantaInstance};
use crate::error::{Error, Result};
use crate::instance::Hypergraph;
use crate::io::InstanceFile;
use crate::matching::{MatchEntry, RelaxedMatching};
use crate::rational::ratio;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CscToSantaTrace {
    pub original: InstanceFile,
    /// Santa player `c` stands for configuration `c`.
    pub configs: usize,
    /// Santa resources `n..` are auxiliary; `aux_owner[i]` is the original
    /// player they belong to.
    pub aux_owner: Vec<usize>,
}

impl CscToSantaTrace {
    fn aux_of(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.original.resources.len();
        self.aux_owner.iter().enumerate().filter(move |(_, &o)| o == v).map(move |(i, _)| n + i)
    }
}

/// Resource `u` of configuration `C` is worth `1/|C|` to `p_{v,C}` (with
/// `|C|` counting resources only), auxiliary resources of `v` are worth 1 to
/// every `p_{v,C}`.
pub fn csc_to_santa(h: &Hypergraph) -> (SantaInstance, CscToSantaTrace) {
    let configs_of = h.configs_of();
    let players = h.configs.iter().enumerate().map(|(c, cfg)| format!("p:{}:{c}", h.players[cfg.player])).collect();
    let mut resources: Vec<String> = h.resources.iter().map(|r| format!("r:{r}")).collect();
    let mut aux_owner = Vec::new();
    for (v, own) in configs_of.iter().enumerate() {
        for i in 1..own.len() {
            resources.push(format!("a:{}:{i}", h.players[v]));
            aux_owner.push(v);
        }
    }
    let trace = CscToSantaTrace { original: InstanceFile::from_hypergraph(h), configs: h.configs.len(), aux_owner };
    let values = h
        .configs
        .iter()
        .map(|cfg| {
            let share = ratio(1, cfg.size() as i64);
            let mut row: BTreeMap<usize, BigRational> =
                cfg.resources.iter().map(|&u| (u, share.clone())).collect();
            for a in trace.aux_of(cfg.player) {
                row.insert(a, ratio(1, 1));
            }
            row
        })
        .collect();
    let santa = SantaInstance::new(players, resources, values).expect("well-formed by construction");
    (santa, trace)
}

/// The chosen configuration player of `v` gets `v`'s kept set; the other
/// `deg(v) - 1` configuration players get one auxiliary resource each.
pub fn matching_to_allocation(h: &Hypergraph, trace: &CscToSantaTrace, sol: &RelaxedMatching) -> Allocation {
    let mut owner = vec![None; h.n() + trace.aux_owner.len()];
    let configs_of = h.configs_of();
    for e in &sol.entries {
        for &u in &e.kept {
            owner[u] = Some(e.config);
        }
        let others = configs_of[e.player].iter().filter(|&&c| c != e.config);
        for (a, &c) in trace.aux_of(e.player).zip(others) {
            owner[a] = Some(c);
        }
    }
    Allocation { owner }
}

/// For each original player, the first configuration player holding no
/// auxiliary resource keeps its original resources.
pub fn santa_pullback(trace: &CscToSantaTrace, alloc: &Allocation) -> Result<RelaxedMatching> {
    let h = trace.original.to_hypergraph()?;
    if alloc.owner.len() != h.n() + trace.aux_owner.len() {
        return Err(Error::PullbackFailed("allocation does not match the trace".into()));
    }
    let mut holds_aux = vec![false; trace.configs];
    for (i, _) in trace.aux_owner.iter().enumerate() {
        if let Some(c) = alloc.owner[h.n() + i] {
            holds_aux[c] = true;
        }
    }
    let mut entries = Vec::with_capacity(h.m());
    for (v, own) in h.configs_of().iter().enumerate() {
        let Some(&c) = own.iter().find(|&&c| !holds_aux[c]) else {
            return Err(Error::PullbackFailed(format!("every configuration of {} holds an auxiliary resource", h.players[v])));
        };
        let kept = h.configs[c].resources.iter().copied().filter(|&u| alloc.owner[u] == Some(c)).collect();
        entries.push(MatchEntry { player: v, config: c, kept });
    }
    Ok(RelaxedMatching::new(&h, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Configuration;
    use crate::matching::verify;
    use crate::rational::Alpha;
    use crate::reduce::santa_optimum;

    fn t0() -> Hypergraph {
        Hypergraph::with_counts(2, 2, vec![Configuration::new(0, vec![0]), Configuration::new(1, vec![1])]).unwrap()
    }

    fn t1() -> Hypergraph {
        Hypergraph::new(
            vec!["p1".into(), "p2".into()],
            vec!["r1".into(), "r2".into(), "r3".into(), "r4".into()],
            vec![
                Configuration::new(0, vec![0, 1]),
                Configuration::new(0, vec![2, 3]),
                Configuration::new(1, vec![0, 2]),
                Configuration::new(1, vec![1, 3]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn t1_shape() {
        let (s, trace) = csc_to_santa(&t1());
        assert_eq!((s.m(), s.n()), (4, 6));
        assert_eq!(trace.aux_owner, vec![0, 1]);
        let half = ratio(1, 2);
        assert_eq!(s.value(0, 0), half);
        assert_eq!(s.value(2, 0), half);
        assert_eq!(s.value(1, 0), ratio(0, 1));
        assert_eq!(s.value(3, 0), ratio(0, 1));
        assert_eq!(s.players[0], "p:p1:0");
        assert_eq!(s.resources[4], "a:p1:1");
    }

    #[test]
    fn t0_has_no_aux() {
        let (s, trace) = csc_to_santa(&t0());
        assert_eq!((s.m(), s.n()), (2, 2));
        assert!(trace.aux_owner.is_empty());
    }

    #[test]
    fn round_trip_identity() {
        let h = t0();
        let sol = RelaxedMatching::new(
            &h,
            vec![MatchEntry { player: 0, config: 0, kept: vec![0] }, MatchEntry { player: 1, config: 1, kept: vec![1] }],
        );
        let (s, trace) = csc_to_santa(&h);
        let alloc = matching_to_allocation(&h, &trace, &sol);
        assert_eq!(s.min_value(&alloc), ratio(1, 1));
        assert_eq!(santa_pullback(&trace, &alloc).unwrap(), sol);
    }

    #[test]
    fn t1_optimum_is_half() {
        let h = t1();
        let (s, trace) = csc_to_santa(&h);
        let (opt, alloc) = santa_optimum(&s, 1 << 20).unwrap();
        assert_eq!(opt, ratio(1, 2));
        let sol = santa_pullback(&trace, &alloc).unwrap();
        assert_eq!(sol.achieved_alpha, Alpha::integer(2));
        assert!(verify(&h, &sol, Alpha::integer(2)).accepted);

        let witness = RelaxedMatching::new(
            &h,
            vec![MatchEntry { player: 0, config: 0, kept: vec![0] }, MatchEntry { player: 1, config: 3, kept: vec![3] }],
        );
        let alloc = matching_to_allocation(&h, &trace, &witness);
        assert_eq!(s.min_value(&alloc), ratio(1, 2));
    }

    #[test]
    fn every_player_holding_aux_fails() {
        let h = t1();
        let (_, mut trace) = csc_to_santa(&h);
        // a malformed trace with a second aux resource for p1 lets both of
        // its configuration players hold one
        trace.aux_owner.push(0);
        let mut owner = vec![None; 7];
        owner[4] = Some(0);
        owner[6] = Some(1);
        let alloc = Allocation { owner };
        assert!(matches!(santa_pullback(&trace, &alloc), Err(Error::PullbackFailed(_))));
        let short = Allocation { owner: vec![None; 3] };
        assert!(santa_pullback(&trace, &short).is_err());
    }
}
