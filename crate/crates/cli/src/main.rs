//! `hypermatch` command-line front end.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hypermatch::hierarchy::{certify, ResourceHierarchy};
use hypermatch::instance::size_classes;
use hypermatch::instances::{gen_counterexample, gen_random_regular, gen_uniform_regular};
use hypermatch::io::{read_instance, write_instance, InstanceFile, SolutionFile};
use hypermatch::oracle::{brute_force_min_alpha, selection_count, DEFAULT_MAX_SELECTIONS};
use hypermatch::pipeline::{solve, SolveReport};
use hypermatch::preprocess::{normalize, Regularization};
use hypermatch::rational::parse_rational;
use hypermatch::reduce::{
    csc_pullback, csc_to_santa, read_santa, santa_pullback, santa_to_csc, AllocationFile, CscToSantaTrace,
    SantaFile, SantaToCscTrace,
};
use hypermatch::select::{check_selection_bound, moser_tardos};
use hypermatch::{verify, Alpha, Error, Hypergraph, PipelineParams, RelaxedMatching};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "hypermatch", version, about = "Relaxed perfect matchings in bipartite hypergraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance.
    #[command(subcommand)]
    Generate(Generate),
    /// Normalize an instance to a regular one of the target degree.
    Preprocess {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: Out,
    },
    /// Sample and certify a resource hierarchy.
    Hierarchy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        retries: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Select one configuration per player by resampling bad events.
    Select {
        /// Accepted for symmetry; the instance is taken from the hierarchy file.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_rounds: Option<usize>,
        #[command(flatten)]
        out: Out,
    },
    /// Run the full pipeline and write the solution with its report.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma: Option<u64>,
        /// Also write the report alone to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Check a solution against an instance.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        alpha: Alpha,
    },
    /// Exact optimum by exhaustive search.
    Oracle {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_SELECTIONS)]
        max_selections: u128,
    },
    /// Reductions to and from Santa Claus.
    #[command(subcommand)]
    Reduce(Reduce),
    /// Map a solution back through a reduction trace.
    Pullback {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Run a benchmark suite and print CSV.
    Bench {
        /// counterexamples, regular, uniform or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum Generate {
    Counterexample {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        out: Out,
    },
    Regular {
        #[arg(long)]
        players: usize,
        #[arg(long)]
        degree: usize,
        /// Size range `A..B`, inclusive.
        #[arg(long, default_value = "1..4")]
        sizes: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use one size for every configuration.
        #[arg(long)]
        uniform: Option<usize>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum Reduce {
    ToSanta {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Where to write the trace needed by `pullback`.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    ToCsc {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        opt_guess: String,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Args)]
struct Common {
    /// Instance file; stdin when absent or `-`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    paper_profile: bool,
}

impl Common {
    fn params(&self) -> PipelineParams {
        let mut p = if self.paper_profile { PipelineParams::paper() } else { PipelineParams::default() };
        p.ell_target = self.ell;
        p
    }
}

#[derive(Args)]
struct Out {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Out {
    fn write(&self, text: &str) -> Result<()> {
        emit(self.out.as_deref(), text)
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn read_text(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) if p != Path::new("-") => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading stdin")?;
            Ok(s)
        }
    }
}

fn load_instance(path: Option<&Path>) -> Result<Hypergraph> {
    Ok(read_instance(&read_text(path)?)?)
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

/// Reads a solution file, or the `solution` field of `solve` output.
fn load_solution(path: &Path, h: &Hypergraph) -> Result<RelaxedMatching> {
    let value: serde_json::Value = serde_json::from_str(&read_text(Some(path))?)?;
    let value = value.get("solution").cloned().unwrap_or(value);
    let file: SolutionFile = serde_json::from_value(value).context("parsing solution")?;
    Ok(file.to_matching(h)?)
}

#[derive(Serialize)]
struct PreprocessOutput {
    ell: usize,
    regularization: Regularization,
    origin: Vec<usize>,
    instance: InstanceFile,
}

#[derive(Serialize, Deserialize)]
struct HierarchyOutput {
    ell: usize,
    d: usize,
    certified: bool,
    attempts: usize,
    levels: Vec<Vec<String>>,
    report: serde_json::Value,
    hierarchy: ResourceHierarchy,
    instance: InstanceFile,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    solution: SolutionFile,
    report: &'a SolveReport,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TraceFile {
    ToSanta { trace: CscToSantaTrace },
    ToCsc { trace: SantaToCscTrace },
}

fn parse_sizes(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once("..").context("sizes must look like A..B")?;
    let (a, b) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
    if a == 0 || a > b {
        bail!("bad size range {s}");
    }
    Ok((a, b))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Generate(Generate::Counterexample { k, out }) => {
            out.write(&write_instance(&gen_counterexample(k)?))?;
        }
        Command::Generate(Generate::Regular { players, degree, sizes, seed, uniform, out }) => {
            let h = match uniform {
                Some(u) => gen_uniform_regular(players, degree, u, seed)?,
                None => {
                    let (a, b) = parse_sizes(&sizes)?;
                    gen_random_regular(players, degree, a..=b, seed)?
                }
            };
            out.write(&write_instance(&h))?;
        }
        Command::Preprocess { common, out } => {
            let h = load_instance(common.input.as_deref())?;
            let p = normalize(&h, &common.params(), common.seed)?;
            out.write(&json(&PreprocessOutput {
                ell: p.ell,
                regularization: p.regularization.clone(),
                origin: p.origin.clone(),
                instance: InstanceFile::from_hypergraph(&p.hypergraph),
            }))?;
        }
        Command::Hierarchy { common, retries, out } => {
            let h = load_instance(common.input.as_deref())?;
            let params = common.params();
            let p = normalize(&h, &params, common.seed)?;
            let hp = &p.hypergraph;
            let idx = size_classes(hp, p.ell);
            let seed = hypermatch::rng::derive(common.seed, "hierarchy");
            let cert = certify(hp, &idx, seed, retries, &params.slack, params.constants.c_overlap);
            let levels = cert
                .hierarchy
                .levels()
                .iter()
                .map(|lv| lv.iter().map(|&r| hp.resources[r].clone()).collect())
                .collect();
            let report = serde_json::json!({
                "slack": cert.slack,
                "size": cert.size_report,
                "overlap": cert.overlap_report,
            });
            out.write(&json(&HierarchyOutput {
                ell: p.ell,
                d: idx.d,
                certified: cert.certified,
                attempts: cert.attempts,
                levels,
                report,
                hierarchy: cert.hierarchy.clone(),
                instance: InstanceFile::from_hypergraph(hp),
            }))?;
        }
        Command::Select { input: _, hierarchy, seed, max_rounds, out } => {
            let hier: HierarchyOutput =
                serde_json::from_str(&read_text(Some(&hierarchy))?).context("parsing hierarchy file")?;
            let h = hier.instance.to_hypergraph()?;
            let idx = size_classes(&h, hier.ell);
            let params = PipelineParams::default();
            let rounds = max_rounds.unwrap_or(10 * h.m());
            let seed = hypermatch::rng::derive(seed, "select");
            let (sel, rep) = moser_tardos(&h, &idx, &hier.hierarchy, &params.constants, seed, rounds);
            let lemma = check_selection_bound(&h, &idx, &hier.hierarchy, &sel, params.constants.c_selection, false);
            let claim = check_selection_bound(&h, &idx, &hier.hierarchy, &sel, params.constants.c_claim, true);
            out.write(&json(&serde_json::json!({
                "selection": sel,
                "report": rep,
                "selection_bound": lemma,
                "chosen_bound": claim,
            })))?;
        }
        Command::Solve { common, gamma, report, out } => {
            let h = load_instance(common.input.as_deref())?;
            let mut params = common.params();
            params.gamma = gamma;
            let (sol, rep) = solve(&h, &params, common.seed)?;
            if let Some(path) = report {
                emit(Some(&path), &json(&rep))?;
            }
            out.write(&json(&SolveOutput { solution: SolutionFile::from_matching(&h, &sol), report: &rep }))?;
        }
        Command::Verify { input, solution, alpha } => {
            let h = load_instance(Some(&input))?;
            let sol = load_solution(&solution, &h)?;
            let rep = verify(&h, &sol, alpha);
            emit(None, &json(&rep))?;
            if !rep.accepted {
                return Ok(EXIT_INFEASIBLE);
            }
        }
        Command::Oracle { input, max_selections } => {
            let h = load_instance(input.as_deref())?;
            let res = brute_force_min_alpha(&h, max_selections)?;
            emit(None, &res.alpha.to_string())?;
        }
        Command::Reduce(Reduce::ToSanta { input, trace_out, out }) => {
            let h = load_instance(input.as_deref())?;
            let (s, trace) = csc_to_santa(&h);
            if let Some(path) = trace_out {
                emit(Some(&path), &json(&TraceFile::ToSanta { trace }))?;
            }
            out.write(&json(&SantaFile::from_instance(&s)))?;
        }
        Command::Reduce(Reduce::ToCsc { input, opt_guess, trace_out, out }) => {
            let s = read_santa(&read_text(input.as_deref())?)?;
            let opt = parse_rational(&opt_guess).map_err(|_| anyhow::anyhow!("bad --opt-guess {opt_guess}"))?;
            let (h, trace) = santa_to_csc(&s, &opt)?;
            if let Some(path) = trace_out {
                emit(Some(&path), &json(&TraceFile::ToCsc { trace }))?;
            }
            out.write(&write_instance(&h))?;
        }
        Command::Pullback { trace, solution, out } => {
            let trace: TraceFile = serde_json::from_str(&read_text(Some(&trace))?).context("parsing trace")?;
            match trace {
                TraceFile::ToSanta { trace } => {
                    let h = trace.original.to_hypergraph()?;
                    let (s, _) = csc_to_santa(&h);
                    let file: AllocationFile =
                        serde_json::from_str(&read_text(Some(&solution))?).context("parsing allocation")?;
                    let sol = santa_pullback(&trace, &file.to_allocation(&s)?)?;
                    out.write(&json(&SolutionFile::from_matching(&h, &sol)))?;
                }
                TraceFile::ToCsc { trace } => {
                    let h = trace.hypergraph.to_hypergraph()?;
                    let sol = load_solution(&solution, &h)?;
                    let back = csc_pullback(&trace, &sol)?;
                    let s = trace.original.to_instance()?;
                    out.write(&json(&serde_json::json!({
                        "allocation": AllocationFile::from_allocation(&s, &back.allocation),
                        "report": back,
                    })))?;
                }
            }
        }
        Command::Bench { suite, seed, out } => {
            out.write(&bench(&suite, seed)?)?;
        }
    }
    Ok(0)
}

struct BenchPoint {
    name: String,
    instance: Hypergraph,
}

fn bench_points(suite: &str, seed: u64) -> Result<Vec<BenchPoint>> {
    let mut points = Vec::new();
    let all = suite == "all";
    if all || suite == "counterexamples" {
        for k in 2..=6 {
            points.push(BenchPoint { name: format!("counterexample-k{k}"), instance: gen_counterexample(k)? });
        }
    }
    if all || suite == "regular" {
        for m in [3, 5, 8] {
            for ell in [2, 3] {
                for rep in 0..3u64 {
                    let s = hypermatch::rng::derive_indexed(seed, "bench/regular", rep);
                    points.push(BenchPoint {
                        name: format!("regular-m{m}-l{ell}-r{rep}"),
                        instance: gen_random_regular(m, ell, 1..=6, s)?,
                    });
                }
            }
        }
    }
    if all || suite == "uniform" {
        for m in [4, 8] {
            for ell in [2, 4] {
                for size in [4, 16] {
                    let s = hypermatch::rng::derive_indexed(seed, "bench/uniform", (m * 100 + ell * 10 + size) as u64);
                    points.push(BenchPoint {
                        name: format!("uniform-m{m}-l{ell}-s{size}"),
                        instance: gen_uniform_regular(m, ell, size, s)?,
                    });
                }
            }
        }
    }
    if points.is_empty() {
        bail!("unknown suite {suite}; expected counterexamples, regular, uniform or all");
    }
    Ok(points)
}

fn bench(suite: &str, seed: u64) -> Result<String> {
    let points = bench_points(suite, seed)?;
    let params = PipelineParams::default();
    let rows: Vec<Result<String>> = points
        .par_iter()
        .map(|p| {
            let h = &p.instance;
            let start = Instant::now();
            let (sol, rep) = solve(h, &params, seed)?;
            let seconds = start.elapsed().as_secs_f64();
            let oracle = if selection_count(h) <= 20_000 {
                brute_force_min_alpha(h, 20_000)?.alpha.to_string()
            } else {
                String::new()
            };
            let last = rep.attempts.last();
            Ok(format!(
                "{},{},{},{},{},{},{},{},{},{},{:.6}",
                p.name,
                h.m(),
                h.n(),
                rep.ell,
                rep.d,
                rep.gamma,
                sol.achieved_alpha,
                oracle,
                last.map_or(0, |a| a.selection.rounds),
                last.is_some_and(|a| a.hierarchy.certified),
                seconds
            ))
        })
        .collect();
    let mut csv = String::from("instance,m,n,ell,d,gamma,alpha_achieved,alpha_oracle,rounds,certified,seconds\n");
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    Ok(csv)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::NoPerfectMatching | Error::Infeasible) => ExitCode::from(EXIT_INFEASIBLE),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
