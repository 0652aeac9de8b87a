//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use hypermatch::assign::flow::{Dinic, FlowNetwork};
use hypermatch::assign::{finalize_matching, good_assignment, reconstruct};
use hypermatch::hierarchy::{certify, check_size_bounds, sample_hierarchy};
use hypermatch::instance::{size_classes, Configuration};
use hypermatch::instances::{counterexample_witness, gen_counterexample, gen_random_regular, gen_uniform_regular};
use hypermatch::oracle::{brute_force_min_alpha, optimal_for_selection};
use hypermatch::params::{Constants, Slack};
use hypermatch::pipeline::solve;
use hypermatch::rational::{int, ratio};
use hypermatch::reduce::{
    csc_pullback, csc_to_santa, log_star_chain, matching_to_allocation, santa_optimum, santa_pullback,
    santa_to_csc, stage4, stage4_pullback, SantaInstance,
};
use hypermatch::rng;
use hypermatch::select::{check_selection_bound, moser_tardos};
use hypermatch::{verify, Alpha, Hypergraph, MatchEntry, PipelineParams, RelaxedMatching};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 counter-example family", criterion_1),
        ("2 oracle dominance", criterion_2),
        ("3 flow criterion equivalence", criterion_3),
        ("4 max-flow/min-cut duality", criterion_4),
        ("5 hierarchy concentration", criterion_5),
        ("6 resampling convergence", criterion_6),
        ("7 reconstruction hard constraints", criterion_7),
        ("8 reduction round trips", criterion_8),
        ("9 CLI determinism", criterion_9),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {} ({:.1}s)", o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for k in [2usize, 3] {
        let h = gen_counterexample(k).unwrap();
        let res = brute_force_min_alpha(&h, 1 << 20).unwrap();
        ok &= res.alpha == Alpha::integer(k as u64);
        notes.push(format!("k={k} oracle={}", res.alpha));
    }
    for k in [4usize, 5, 6] {
        let h = gen_counterexample(k).unwrap();
        let below = Alpha::ratio(2 * k - 1, 2);
        let configs_of = h.configs_of();
        let mut rng = rng::stream(k as u64, "acceptance/counterexample");
        let mut accepted_below = 0;
        for _ in 0..10_000 {
            let chosen: Vec<usize> = configs_of.iter().map(|own| *own.choose(&mut rng).unwrap()).collect();
            // the best kept sets for this selection
            if let Some(best) = optimal_for_selection(&h, &chosen) {
                accepted_below += usize::from(verify(&h, &best, below).accepted);
            }
            // and arbitrary nonempty kept sets
            let entries = chosen
                .iter()
                .enumerate()
                .map(|(player, &config)| {
                    let rs = &h.configs[config].resources;
                    let mut kept: Vec<usize> = rs.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
                    if kept.is_empty() {
                        kept.push(*rs.choose(&mut rng).unwrap());
                    }
                    MatchEntry { player, config, kept }
                })
                .collect();
            let sol = RelaxedMatching::new(&h, entries);
            accepted_below += usize::from(verify(&h, &sol, below).accepted);
        }
        let witness = verify(&h, &counterexample_witness(&h, k), Alpha::integer(k as u64)).accepted;
        ok &= accepted_below == 0 && witness;
        notes.push(format!("k={k} accepted below k: {accepted_below}, witness accepted: {witness}"));
    }
    outcome(ok, notes.join("; "))
}

/// Random regular instances with `m <= 5`, `ell <= 3`, `n <= 10`.
fn small_regular_instances() -> Vec<Hypergraph> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < 200 {
        seed += 1;
        let mut rng = rng::stream(seed, "acceptance/small");
        let m = rng.gen_range(1..=5);
        let ell = rng.gen_range(1..=3);
        let hi = rng.gen_range(1..=4);
        if let Ok(h) = gen_random_regular(m, ell, 1..=hi, seed) {
            if h.n() <= 10 {
                out.push(h);
            }
        }
    }
    out
}

struct RunCheck {
    alpha_ok: bool,
    verified: bool,
    load_ok: bool,
    sandwich_ok: bool,
    conflicts: usize,
    fallback: bool,
}

fn pipeline_runs(gamma: Option<u64>) -> Vec<RunCheck> {
    small_regular_instances()
        .par_iter()
        .enumerate()
        .map(|(i, h)| {
            let oracle = brute_force_min_alpha(h, 1 << 22).unwrap().alpha;
            let params = PipelineParams { gamma, ..PipelineParams::default() };
            let (sol, rep) = solve(h, &params, i as u64).unwrap();
            let attempts = &rep.attempts;
            RunCheck {
                alpha_ok: sol.achieved_alpha >= oracle,
                verified: verify(h, &sol, sol.achieved_alpha).accepted && rep.verified,
                load_ok: attempts.iter().all(|a| a.max_load <= rep.gamma),
                sandwich_ok: attempts.iter().all(|a| a.sandwich_holds),
                conflicts: attempts.iter().flat_map(|a| &a.levels).map(|l| l.conflicts.len()).sum(),
                fallback: rep.fallback_used,
            }
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let runs = pipeline_runs(None);
    let dominated = runs.iter().filter(|r| r.alpha_ok).count();
    let verified = runs.iter().filter(|r| r.verified).count();
    let fallback = runs.iter().filter(|r| r.fallback).count();
    outcome(
        dominated == runs.len() && verified == runs.len(),
        format!("{dominated}/{} at or above the oracle, {verified} verified, {fallback} via fallback", runs.len()),
    )
}

/// Every way of giving each configuration exactly `alpha` of its resources
/// with no resource used more than `gamma` times.
fn brute_force_assignment(adjacency: &[u32], alpha: &[u64], gamma: u64, n: usize) -> bool {
    fn go(i: usize, adjacency: &[u32], alpha: &[u64], gamma: u64, load: &mut [u64]) -> bool {
        if i == adjacency.len() {
            return true;
        }
        let adj = adjacency[i];
        let mut sub = adj;
        loop {
            if u64::from(sub.count_ones()) == alpha[i] {
                let bits: Vec<usize> = (0..load.len()).filter(|&r| sub >> r & 1 == 1).collect();
                if bits.iter().all(|&r| load[r] < gamma) {
                    bits.iter().for_each(|&r| load[r] += 1);
                    let found = go(i + 1, adjacency, alpha, gamma, load);
                    bits.iter().for_each(|&r| load[r] -= 1);
                    if found {
                        return true;
                    }
                }
            }
            if sub == 0 {
                return false;
            }
            sub = (sub - 1) & adj;
        }
    }
    go(0, adjacency, alpha, gamma, &mut vec![0; n])
}

fn criterion_3() -> Outcome {
    let mut networks = 0u64;
    let mut discrepancies = 0u64;
    let mut bad_witness = 0u64;
    let zero = ratio(0, 1);
    for n in 1..=4usize {
        for f in 1..=3usize {
            let subsets = 1u32 << n;
            for code in 0..subsets.pow(f as u32) {
                let adjacency: Vec<u32> = (0..f).map(|i| (code / subsets.pow(i as u32)) % subsets).collect();
                // a dummy resource `n` keeps configurations nonempty; it is
                // excluded from the allowed set
                let configs = adjacency
                    .iter()
                    .enumerate()
                    .map(|(p, &a)| {
                        let mut rs: Vec<usize> = (0..n).filter(|&r| a >> r & 1 == 1).collect();
                        rs.push(n);
                        Configuration::new(p, rs)
                    })
                    .collect();
                let h = Hypergraph::with_counts(f, n + 1, configs).unwrap();
                let family: Vec<usize> = (0..f).collect();
                let adj_lists: Vec<Vec<usize>> =
                    adjacency.iter().map(|&a| (0..n).filter(|&r| a >> r & 1 == 1).collect()).collect();
                for alpha_code in 0..(1u32 << f) {
                    let alpha: Vec<u64> = (0..f).map(|i| 1 + u64::from(alpha_code >> i & 1)).collect();
                    for gamma in [1u64, 2] {
                        networks += 1;
                        let brute = brute_force_assignment(&adjacency, &alpha, gamma, n);
                        let flow = good_assignment(&h, &family, &|r| r < n, &alpha, gamma, &zero);
                        let net = FlowNetwork::new(family.clone(), adj_lists.clone(), alpha.clone(), gamma);
                        let all_subfamilies = (1u32..(1 << f)).all(|mask| {
                            let pos: Vec<usize> = (0..f).filter(|&i| mask >> i & 1 == 1).collect();
                            let sub = net.restrict(&pos);
                            sub.max_flow().value >= sub.demand()
                        });
                        if brute != flow.is_ok() || brute != all_subfamilies {
                            discrepancies += 1;
                        }
                        match &flow {
                            Ok(a) => {
                                let fine = a.max_load() <= gamma
                                    && a.holdings.iter().all(|(&c, held)| {
                                        held.len() as u64 >= alpha[c] && held.iter().all(|r| adj_lists[c].contains(r))
                                    });
                                bad_witness += u64::from(!fine);
                            }
                            Err(d) => bad_witness += u64::from(d.witness.is_empty() || d.flow >= d.demand),
                        }
                    }
                }
            }
        }
    }
    outcome(
        discrepancies == 0 && bad_witness == 0,
        format!("{networks} networks, {discrepancies} discrepancies, {bad_witness} bad certificates"),
    )
}

fn criterion_4() -> Outcome {
    let mut mismatches = 0;
    let mut rng = rng::stream(4, "acceptance/duality");
    for _ in 0..500 {
        let nodes = rng.gen_range(2..=12usize);
        let mut arcs = Vec::new();
        for u in 0..nodes {
            for v in 0..nodes {
                if u != v && rng.gen_bool(0.3) {
                    arcs.push((u, v, rng.gen_range(0..=10i64)));
                }
            }
        }
        let (s, t) = (0, nodes - 1);
        let mut g = Dinic::new(nodes);
        for &(u, v, c) in &arcs {
            g.add_arc(u, v, c);
        }
        let flow = g.max_flow(s, t);
        let others: Vec<usize> = (1..nodes - 1).collect();
        let min_cut = (0u32..1 << others.len())
            .map(|mask| {
                let mut side = vec![false; nodes];
                side[s] = true;
                for (i, &v) in others.iter().enumerate() {
                    side[v] = mask >> i & 1 == 1;
                }
                arcs.iter().filter(|&&(u, v, _)| side[u] && !side[v]).map(|&(_, _, c)| c).sum::<i64>()
            })
            .min()
            .unwrap();
        mismatches += usize::from(flow != min_cut);
    }
    outcome(mismatches == 0, format!("500 networks, {mismatches} mismatches"))
}

fn criterion_5() -> Outcome {
    let ell = 16usize;
    let size = ell.pow(4);
    let h = gen_uniform_regular(1, ell, size, 5).unwrap();
    let idx = size_classes(&h, ell);
    let slack = Slack::desk();
    let per_seed: Vec<(bool, u64, u64)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let hier = sample_hierarchy(&h, &idx, seed);
            let passed = check_size_bounds(&h, &idx, &hier, &slack).passed();
            let hits: u64 = h.configs.iter().map(|c| hier.count_in(&c.resources, 1) as u64).sum();
            (passed, hits, h.configs.len() as u64)
        })
        .collect();
    let passing = per_seed.iter().filter(|p| p.0).count();
    // mean of |R_1 ∩ C| ell / |C| over all configurations and seeds, exactly
    let num: u64 = per_seed.iter().map(|p| p.1).sum::<u64>() * ell as u64;
    let den: u64 = per_seed.iter().map(|p| p.2).sum::<u64>() * size as u64;
    let mean_ok = 9 * den <= 10 * num && 10 * num <= 11 * den;
    outcome(
        passing >= 95 && mean_ok,
        format!("{passing}/100 seeds within [1/4, 4], mean ratio {num}/{den} = {:.4}", num as f64 / den as f64),
    )
}

struct MtRun {
    converged: bool,
    rounds: usize,
    bounds_ok: bool,
    load_ok: bool,
    sandwich_ok: bool,
    disjoint_ok: bool,
    conflicts: usize,
    collapsed: bool,
}

fn desk_fixture_runs(gamma: Option<u64>) -> Vec<MtRun> {
    fixture_runs(20, 4, 256..=256, gamma)
}

fn fixture_runs(m: usize, ell: usize, sizes: std::ops::RangeInclusive<usize>, gamma: Option<u64>) -> Vec<MtRun> {
    let constants = Constants::default();
    let params = PipelineParams { gamma, ..PipelineParams::default() };
    (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let h = gen_random_regular(m, ell, sizes.clone(), seed).unwrap();
            let idx = size_classes(&h, ell);
            let cert = certify(&h, &idx, rng::derive(seed, "hierarchy"), 50, &params.slack, constants.c_overlap);
            let hier = &cert.hierarchy;
            let (sel, rep) = moser_tardos(&h, &idx, hier, &constants, rng::derive(seed, "select"), 10 * m);
            let bounds_ok = !rep.converged
                || (check_selection_bound(&h, &idx, hier, &sel, 1000, false).passed()
                    && check_selection_bound(&h, &idx, hier, &sel, 2000, true).passed());
            let g = params.resolve_gamma(idx.d, ell);
            let mut run = MtRun {
                converged: rep.converged,
                rounds: rep.rounds,
                bounds_ok,
                load_ok: true,
                sandwich_ok: true,
                disjoint_ok: true,
                conflicts: 0,
                collapsed: false,
            };
            match reconstruct(&h, &idx, hier, &sel, g, rng::derive(seed, "assign")) {
                Ok(rec) => {
                    run.load_ok = rec.assignment.max_load() <= g && rec.levels.iter().all(|l| l.max_load <= g);
                    run.sandwich_ok = rec.sandwich_holds();
                    run.conflicts = rec.levels.iter().map(|l| l.conflicts.len()).sum();
                    if let Ok((sol, _)) = finalize_matching(&h, &sel, &rec.assignment, g, constants.c_final) {
                        run.disjoint_ok = verify(&h, &sol, sol.achieved_alpha).accepted;
                    }
                }
                Err(_) => run.collapsed = true,
            }
            run
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let runs = desk_fixture_runs(None);
    let converged = runs.iter().filter(|r| r.converged).count();
    let bounds = runs.iter().filter(|r| r.converged && r.bounds_ok).count();
    let max_rounds = runs.iter().map(|r| r.rounds).max().unwrap_or(0);
    outcome(
        converged >= 95 && bounds == converged,
        format!("{converged}/100 converged (max {max_rounds} rounds), {bounds} of them satisfy both bounds"),
    )
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for gamma in [None, Some(2), Some(1)] {
        let label = gamma.map_or("default".to_string(), |g| g.to_string());
        let runs = pipeline_runs(gamma);
        let bad = runs.iter().filter(|r| !(r.load_ok && r.sandwich_ok && r.verified)).count();
        let conflicts: usize = runs.iter().map(|r| r.conflicts).sum();
        ok &= bad == 0;
        notes.push(format!("small instances gamma={label}: {bad} violations, {conflicts} conflicts checked"));
    }
    // ell = 2 with sizes spanning classes 0 to 2, so fresh configurations
    // meet lifted holders
    let fixtures: [(&str, usize, usize, std::ops::RangeInclusive<usize>); 2] =
        [("desk fixture", 20, 4, 256..=256), ("mixed classes", 12, 2, 4..=60)];
    for (name, gamma) in [(0, None), (0, Some(3)), (1, Some(1)), (1, Some(2)), (1, Some(4))] {
        let (name, m, ell, sizes) = fixtures[name].clone();
        let label = gamma.map_or("default".to_string(), |g| g.to_string());
        let runs = fixture_runs(m, ell, sizes, gamma);
        let bad = runs.iter().filter(|r| !(r.load_ok && r.sandwich_ok && r.disjoint_ok)).count();
        let conflicts: usize = runs.iter().map(|r| r.conflicts).sum();
        let collapsed = runs.iter().filter(|r| r.collapsed).count();
        ok &= bad == 0;
        notes.push(format!(
            "{name} gamma={label}: {bad} violations, {conflicts} conflicts checked, {collapsed} collapsed lifts"
        ));
    }
    outcome(ok, notes.join("; "))
}

fn santa(players: usize, resources: usize, vals: &[(usize, usize, (i64, i64))]) -> SantaInstance {
    let mut values = vec![BTreeMap::new(); players];
    for &(p, r, (a, b)) in vals {
        values[p].insert(r, ratio(a, b));
    }
    SantaInstance::new(
        (0..players).map(|i| format!("i{i}")).collect(),
        (0..resources).map(|j| format!("j{j}")).collect(),
        values,
    )
    .unwrap()
}

/// Three-size fixtures: each value is 0, 1 or the player's own `1/N`.
fn stage4_fixtures() -> Vec<SantaInstance> {
    let mut out = Vec::new();
    for players in 1..=3usize {
        for resources in 1..=3usize {
            let cells = players * resources;
            if cells > 6 {
                continue;
            }
            for ns in 0..(1usize << players) {
                let small: Vec<i64> = (0..players).map(|p| 2 + (ns >> p & 1) as i64).collect();
                for code in 0..3usize.pow(cells as u32) {
                    let mut vals = Vec::new();
                    for cell in 0..cells {
                        let (p, r) = (cell / resources, cell % resources);
                        match code / 3usize.pow(cell as u32) % 3 {
                            1 => vals.push((p, r, (1, 1))),
                            2 => vals.push((p, r, (1, small[p]))),
                            _ => {}
                        }
                    }
                    out.push(santa(players, resources, &vals));
                }
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();

    // relaxed matching -> Santa Claus on T1
    let t1 = Hypergraph::with_counts(
        2,
        4,
        vec![
            Configuration::new(0, vec![0, 1]),
            Configuration::new(0, vec![2, 3]),
            Configuration::new(1, vec![0, 2]),
            Configuration::new(1, vec![1, 3]),
        ],
    )
    .unwrap();
    let (s, trace) = csc_to_santa(&t1);
    let (opt, alloc) = santa_optimum(&s, 1 << 20).unwrap();
    let back = santa_pullback(&trace, &alloc).unwrap();
    let witness = RelaxedMatching::new(
        &t1,
        vec![MatchEntry { player: 0, config: 0, kept: vec![0] }, MatchEntry { player: 1, config: 3, kept: vec![3] }],
    );
    let forward = s.min_value(&matching_to_allocation(&t1, &trace, &witness));
    let t1_ok = opt == ratio(1, 2)
        && back.achieved_alpha == Alpha::integer(2)
        && verify(&t1, &back, Alpha::integer(2)).accepted
        && forward == ratio(1, 2);
    notes.push(format!("T1: santa value {opt}, pull-back alpha {}", back.achieved_alpha));

    // stage 4 is lossless: value 1 for everyone iff an alpha = 1 matching
    let fixtures = stage4_fixtures();
    let lossy: usize = fixtures
        .par_iter()
        .map(|s| {
            let (h, rec) = stage4(s).unwrap();
            let (opt, _) = santa_optimum(s, 1 << 20).unwrap();
            let oracle = brute_force_min_alpha(&h, 1 << 24).unwrap();
            let one = oracle.alpha == Alpha::one();
            let mut bad = (opt >= int(1)) != one;
            if let (true, Some(sol)) = (one, oracle.solution.as_ref()) {
                bad |= s.min_value(&stage4_pullback(&h, &rec, sol).unwrap()) < int(1);
            }
            usize::from(bad)
        })
        .sum();
    notes.push(format!("stage 4: {} fixtures, {lossy} lossy", fixtures.len()));

    // loss factors follow the per-stage formulas, and pull-backs meet the
    // composed guarantee
    let mut rng = rng::stream(8, "acceptance/reduce");
    let mut formula_mismatch = 0;
    let mut missed = 0;
    let mut checked = 0;
    for _ in 0..60 {
        let players = rng.gen_range(1..=3usize);
        let resources = rng.gen_range(1..=4usize);
        let mut vals = Vec::new();
        for p in 0..players {
            for r in 0..resources {
                if rng.gen_bool(0.6) {
                    vals.push((p, r, (rng.gen_range(1..=4i64), rng.gen_range(1..=4i64))));
                }
            }
        }
        let s = santa(players, resources, &vals);
        let Ok((opt, _)) = santa_optimum(&s, 1 << 16) else { continue };
        if opt == int(0) {
            continue;
        }
        let (h, trace) = santa_to_csc(&s, &opt).unwrap();
        let chain = log_star_chain(2.0 * resources as f64);
        let scale = ((chain.len() - 1).max(1) as u64).next_power_of_two();
        let losses: Vec<String> = trace.stages.iter().map(|st| st.loss.clone()).collect();
        formula_mismatch += usize::from(
            losses != ["4".to_string(), scale.to_string(), "2".into(), "1".into()]
                || trace.composed_loss() != int(8 * scale as i64),
        );
        if let Ok((sol, _)) = solve(&h, &PipelineParams::default(), 1) {
            checked += 1;
            missed += usize::from(!csc_pullback(&trace, &sol).unwrap().meets_guarantee);
        }
    }
    notes.push(format!("loss formulas: {formula_mismatch} mismatches; guarantee missed {missed}/{checked}"));
    outcome(t1_ok && lossy == 0 && formula_mismatch == 0 && missed == 0, notes.join("; "))
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_hypermatch");
    let dir = std::env::temp_dir().join(format!("hypermatch-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let inst = dir.join("inst.json");
    let inst = inst.to_str().unwrap();
    let hier = dir.join("hier.json");
    let hier = hier.to_str().unwrap();
    let run = |args: &[&str]| Command::new(bin).args(args).output().expect("spawn");
    let setup = run(&["generate", "regular", "--players", "8", "--degree", "3", "--sizes", "2..12", "--seed", "9", "--out", inst]);
    let hier_out = run(&["hierarchy", "--input", inst, "--ell", "3", "--seed", "2", "--out", hier]);
    if !setup.status.success() || !hier_out.status.success() {
        return outcome(false, "could not prepare inputs");
    }
    let commands: Vec<Vec<&str>> = vec![
        vec!["generate", "counterexample", "--k", "4"],
        vec!["preprocess", "--input", inst, "--ell", "2", "--seed", "3"],
        vec!["hierarchy", "--input", inst, "--ell", "3", "--seed", "2"],
        vec!["select", "--input", inst, "--hierarchy", hier, "--seed", "5", "--max-rounds", "80"],
        vec!["solve", "--input", inst, "--ell", "3", "--seed", "7"],
        vec!["solve", "--input", inst, "--seed", "7", "--gamma", "2"],
        vec!["oracle", "--input", inst],
        vec!["reduce", "to-santa", "--input", inst],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let a = run(args);
        let b = run(args);
        if !a.status.success() || a.stdout != b.stdout {
            differing.push(args.join(" "));
        }
    }
    let _ = fs::remove_dir_all(&dir);
    outcome(differing.is_empty(), format!("{} commands rerun, differing: {differing:?}", commands.len()))
}
