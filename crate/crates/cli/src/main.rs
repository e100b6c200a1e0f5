//! Workbench front door for the hubway library.
//!
//! One binary, eight subcommands: generate family instances, inspect the
//! hub cover ladder and the town tree, build audited host embeddings, run
//! the exact solvers on a given decomposition, run the end-to-end
//! approximation pipelines, ask the brute-force oracles for reference
//! answers, and audit every structural invariant independently.
//!
//! Reports are JSON on stdout (or `--out`, written atomically); graphs
//! and decompositions travel as diff-friendly plain text. Exit codes:
//! 0 success, 2 a bound audit failed, 1 anything else went wrong.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use hubway::cover::build_ladder;
use hubway::embed::depot::{
    audit_bands as band_audit, audit_multi_depot, audit_single_depot, embed_depot, DepotEmbedding,
};
use hubway::embed::diameter::{audit_bounded_diameter, embed_bounded_diameter};
use hubway::embed::DistortionReport;
use hubway::generate::{cluster_tree, generate, grid_with_highways, star_of_stars, Family};
use hubway::instance::{parse_instance, render_instance, Instance, Problem, RunDefaults};
use hubway::nice::make_nice;
use hubway::oracle::{
    self, brute_cvr, brute_cvr_penalties, brute_kcenter, brute_kmedian, search_space, AuditReport,
    OracleMetric,
};
use hubway::pipelines::{fpa_kcenter, fpa_kmedian, ptas_cvr, ptas_cvr_penalties};
use hubway::scale::{canonical_scale, DEFAULT_C, DEFAULT_DISTORTION_CONSTANT, DEFAULT_MULT_CONSTANT};
use hubway::solver::centers::{solve_kcenter_td, solve_kmedian_td};
use hubway::solver::cvr::{solve_cvr, solve_cvr_penalties};
use hubway::towns::{build_core_hubs, build_towns};
use hubway::tree_decomp::TreeDecomposition;
use hubway::vrp::{RoutingInstance, RoutingSolution};
use hubway::{MetricGraph, Role};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[derive(Parser)]
#[command(
    name = "hubway",
    version,
    about = "Embedding, routing, and center-placement workbench",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags shared by every subcommand. Accuracy-like values left unset fall
/// back to the instance file's `defaults` block, then to the built-ins.
#[derive(Args, Clone)]
struct Common {
    /// Accuracy: eps-hat for depot embeddings and pipelines, the raw net
    /// parameter for `embed --mode diam` [default 0.25].
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Ladder base; scale radii grow as (c/4)^i [default 8].
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Cluster-count hint sizing the depot guard pendants [default 4].
    #[arg(long, global = true)]
    eta_hint: Option<usize>,
    /// Generator seed [default 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the primary report here (write-then-rename); stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

/// `Common` with the instance-file defaults folded in.
struct Resolved {
    eps: f64,
    c: f64,
    eta_hint: usize,
    seed: u64,
}

impl Common {
    fn resolve(&self, file: &RunDefaults) -> Resolved {
        Resolved {
            eps: self.eps.or(file.eps_hat).unwrap_or(0.25),
            c: self.c.or(file.c).unwrap_or(DEFAULT_C),
            eta_hint: self.eta_hint.or(file.eta_hint).unwrap_or(4),
            seed: self.seed.or(file.seed).unwrap_or(0),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a family graph, or a ready-to-run instance with --problem.
    Gen(GenArgs),
    /// Print a graph's hub cover ladder as JSON.
    Cover(InputArgs),
    /// Print a graph's town tree as JSON.
    Towns(InputArgs),
    /// Build a host graph + decomposition and audit its distortion.
    Embed(EmbedArgs),
    /// Solve a problem exactly on a given tree decomposition.
    Solve(SolveArgs),
    /// Run an approximation pipeline end to end.
    Ptas(PtasArgs),
    /// Brute-force reference answers (desk-scale inputs only).
    Oracle(SolveArgs),
    /// Independent structural audits; exits 2 on any violation.
    Audit(AuditArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Instance JSON or plain-text graph (`n m` header, `u v w` lines).
    input: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// Graph family.
    #[arg(long)]
    family: Family,
    /// Target vertex count (a hint; families round to their shape).
    #[arg(long, default_value_t = 24)]
    n: usize,
    /// Wrap the graph into an instance of this problem.
    #[arg(long)]
    problem: Option<ProblemKind>,
    /// Vehicle capacity for generated routing instances.
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Number of centers for generated center instances.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Depot vertices for generated routing instances.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    depots: Vec<usize>,
    /// star-of-stars: number of satellite stars.
    #[arg(long)]
    satellites: Option<usize>,
    /// star-of-stars: leaves per satellite.
    #[arg(long)]
    leaves: Option<usize>,
    /// grid-with-highways: grid columns (rows are fixed at 4).
    #[arg(long)]
    cols: Option<usize>,
    /// cluster-tree: number of clusters.
    #[arg(long)]
    clusters: Option<usize>,
    /// cluster-tree: vertices per cluster.
    #[arg(long)]
    cluster_size: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemKind {
    Cvr,
    CvrPen,
    CvrMulti,
    Kcenter,
    Kmedian,
}

impl ProblemKind {
    fn tag(self) -> &'static str {
        match self {
            ProblemKind::Cvr => "cvr",
            ProblemKind::CvrPen => "cvr-pen",
            ProblemKind::CvrMulti => "cvr-multi",
            ProblemKind::Kcenter => "kcenter",
            ProblemKind::Kmedian => "kmedian",
        }
    }

}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbedMode {
    /// Bounded-diameter host (no depots).
    Diam,
    /// Single-depot host.
    Depot,
    /// Multi-depot host.
    Multi,
}

#[derive(Args)]
struct EmbedArgs {
    /// Instance JSON or plain-text graph.
    input: PathBuf,
    #[arg(long, value_enum)]
    mode: EmbedMode,
    /// Single depot vertex (depot/multi modes).
    #[arg(long)]
    depot: Option<usize>,
    /// Depot vertices, comma separated (multi mode).
    #[arg(long, value_delimiter = ',')]
    depots: Vec<usize>,
    /// Distortion constant dividing eps-hat; the audit allowance uses it.
    #[arg(long, default_value_t = DEFAULT_DISTORTION_CONSTANT)]
    c_dist: f64,
    /// Multiplicative corridor constant for multi-depot audits.
    #[arg(long, default_value_t = DEFAULT_MULT_CONSTANT)]
    c_mult: f64,
    /// Also write the host graph text here.
    #[arg(long)]
    host_out: Option<PathBuf>,
    /// Also write the tree decomposition text here.
    #[arg(long)]
    td_out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON or plain-text graph.
    input: PathBuf,
    #[arg(long, value_enum)]
    problem: ProblemKind,
    /// Tree decomposition file (`bag_id parent_id v1 v2 ...` per line);
    /// defaults to the trivial one-bag decomposition.
    #[arg(long)]
    td: Option<PathBuf>,
    /// Vehicle capacity (overrides the instance's).
    #[arg(long)]
    q: Option<u32>,
    /// Number of centers (overrides the instance's).
    #[arg(long)]
    k: Option<usize>,
    /// Depot vertices (overrides the instance's).
    #[arg(long, value_delimiter = ',')]
    depots: Vec<usize>,
}

#[derive(Args)]
struct PtasArgs {
    /// Instance JSON or plain-text graph.
    input: PathBuf,
    #[arg(long, value_enum)]
    problem: ProblemKind,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    depots: Vec<usize>,
    /// Also run the brute-force oracle and report the true ratio.
    #[arg(long)]
    oracle: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AuditMode {
    /// Town and cover audits only.
    Base,
    /// Base plus the single-depot embedding audits.
    Depot,
    /// Base plus the multi-depot embedding audits.
    Multi,
}

#[derive(Args)]
struct AuditArgs {
    /// Instance JSON or plain-text graph.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = AuditMode::Base)]
    mode: AuditMode,
    #[arg(long)]
    depot: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    depots: Vec<usize>,
    /// Distortion constant dividing eps-hat; the corridor allowance uses it.
    #[arg(long, default_value_t = DEFAULT_DISTORTION_CONSTANT)]
    c_dist: f64,
    /// Multiplicative corridor constant for multi-depot audits.
    #[arg(long, default_value_t = DEFAULT_MULT_CONSTANT)]
    c_mult: f64,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gen(args) => cmd_gen(&cli.common, args),
        Cmd::Cover(args) => cmd_cover(&cli.common, args),
        Cmd::Towns(args) => cmd_towns(&cli.common, args),
        Cmd::Embed(args) => cmd_embed(&cli.common, args),
        Cmd::Solve(args) => cmd_solve(&cli.common, args, false),
        Cmd::Oracle(args) => cmd_solve(&cli.common, args, true),
        Cmd::Ptas(args) => cmd_ptas(&cli.common, args),
        Cmd::Audit(args) => cmd_audit(&cli.common, args),
    }
}

// ---------------------------------------------------------------------
// I/O plumbing.

/// Writes atomically: a temporary sibling file, then a rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("{} has no file name", path.display()))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{name}.tmp.{}", std::process::id()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

/// Sends the primary output to `--out` or stdout. A closed stdout (the
/// reader hung up, e.g. `| head`) is not an error worth reporting.
fn emit(out: &Option<PathBuf>, contents: &str) -> Result<()> {
    use std::io::Write;
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", contents.trim_end()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other.context("writing to stdout"),
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("valid JSON value");
    s.push('\n');
    s
}

/// Loads either an instance file (JSON) or a bare graph (text).
fn load_input(path: &Path) -> Result<(MetricGraph, Option<Problem>, RunDefaults)> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let inst = parse_instance(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok((inst.graph, Some(inst.problem), inst.defaults))
    } else {
        let g = MetricGraph::parse_text(&text, Role::Guest)
            .with_context(|| format!("parsing {}", path.display()))?;
        Ok((g, None, RunDefaults::default()))
    }
}

fn merge_depots(depot: Option<usize>, depots: &[usize]) -> Option<Vec<usize>> {
    let mut all: Vec<usize> = depots.to_vec();
    if let Some(d) = depot {
        all.push(d);
    }
    if all.is_empty() {
        return None;
    }
    all.sort_unstable();
    all.dedup();
    Some(all)
}

/// Scales the guest and builds the ladder and town tree everything else
/// hangs off.
fn prepare(
    g: &MetricGraph,
    c: f64,
) -> Result<(MetricGraph, hubway::ScaleParams, hubway::cover::CoverLadder, hubway::towns::TownTree)>
{
    let (scaled, params) = canonical_scale(g, c)?;
    let ladder = build_ladder(&scaled, &params);
    let mut tree = build_towns(&scaled, &ladder, &params)?;
    build_core_hubs(&mut tree, &ladder);
    Ok((scaled, params, ladder, tree))
}

// ---------------------------------------------------------------------
// gen.

fn cmd_gen(common: &Common, args: GenArgs) -> Result<ExitCode> {
    let r = common.resolve(&RunDefaults::default());
    let overridden = args.satellites.is_some()
        || args.leaves.is_some()
        || args.cols.is_some()
        || args.clusters.is_some()
        || args.cluster_size.is_some();
    let g = if overridden {
        match args.family {
            Family::StarOfStars => star_of_stars(
                args.satellites.unwrap_or(3),
                args.leaves.unwrap_or(3),
                r.seed,
            ),
            Family::GridWithHighways => {
                grid_with_highways(args.cols.unwrap_or((args.n / 4).max(2)), r.seed)
            }
            Family::ClusterTree => cluster_tree(
                args.clusters.unwrap_or(4),
                args.cluster_size.unwrap_or((args.n / 4).max(2)),
                r.seed,
            ),
        }
    } else {
        generate(args.family, args.n, r.seed)
    };

    let Some(kind) = args.problem else {
        return emit(&common.out, &g.to_text()).map(|()| ExitCode::SUCCESS);
    };

    let n = g.vertex_count();
    for &d in &args.depots {
        if d >= n {
            bail!("depot {d} out of range for the generated graph (n = {n})");
        }
    }
    let problem = match kind {
        ProblemKind::Cvr | ProblemKind::CvrPen | ProblemKind::CvrMulti => {
            if kind == ProblemKind::CvrMulti && args.depots.len() < 2 {
                bail!("--problem cvr-multi needs at least two --depots");
            }
            let mut demands = vec![1u32; n];
            for &d in &args.depots {
                demands[d] = 0;
            }
            let penalties = (kind == ProblemKind::CvrPen).then(|| seeded_penalties(&g, &args.depots, r.seed));
            Problem::Cvr {
                depots: args.depots.clone(),
                capacity: args.q,
                demands,
                penalties,
            }
        }
        ProblemKind::Kcenter => {
            Problem::KCenter { k: args.k, coverable: vec![true; n], candidates: vec![true; n] }
        }
        ProblemKind::Kmedian => {
            Problem::KMedian { k: args.k, weights: vec![1.0; n], candidates: vec![true; n] }
        }
    };
    let inst = Instance {
        graph: g,
        problem,
        defaults: RunDefaults {
            eps_hat: Some(r.eps),
            c: Some(r.c),
            eta_hint: Some(r.eta_hint),
            seed: Some(r.seed),
        },
    };
    emit(&common.out, &render_instance(&inst)).map(|()| ExitCode::SUCCESS)
}

/// Deterministic penalties for generated prize-collecting instances:
/// pinned near the out-and-back cost so that skipping is a real choice,
/// with a seeded jitter. Depots get zero.
fn seeded_penalties(g: &MetricGraph, depots: &[usize], seed: u64) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|v| {
            if depots.contains(&v) {
                return 0.0;
            }
            let jitter =
                ((seed ^ (v as u64).wrapping_mul(0x9e3779b97f4a7c15)) >> 33) % 151;
            let d = g.distance_to_set(v, depots);
            1.5 * d + 0.01 * jitter as f64
        })
        .collect()
}

// ---------------------------------------------------------------------
// cover / towns.

fn cmd_cover(common: &Common, args: InputArgs) -> Result<ExitCode> {
    let (g, _, file_defaults) = load_input(&args.input)?;
    let r = common.resolve(&file_defaults);
    let (_, params, ladder, _) = prepare(&g, r.c)?;
    let rows: Vec<Value> = ladder
        .hubs
        .iter()
        .enumerate()
        .map(|(i, hubs)| json!({ "i": i, "r": params.radius(i), "hubs": hubs }))
        .collect();
    emit(&common.out, &pretty(&Value::Array(rows))).map(|()| ExitCode::SUCCESS)
}

fn cmd_towns(common: &Common, args: InputArgs) -> Result<ExitCode> {
    let (g, _, file_defaults) = load_input(&args.input)?;
    let r = common.resolve(&file_defaults);
    let (_, params, _, tree) = prepare(&g, r.c)?;
    let towns: Vec<Value> = tree
        .towns
        .iter()
        .enumerate()
        .map(|(i, t)| {
            json!({
                "id": i,
                "parent": tree.parent[i],
                "level": t.level,
                "size": t.vertices.len(),
                "diameter": t.diameter,
                "core_hubs": t.core_hubs.len(),
                "vertices": t.vertices,
            })
        })
        .collect();
    let doc = json!({
        "c": r.c,
        "scale_factor": params.scale_factor,
        "root": tree.root,
        "towns": towns,
    });
    emit(&common.out, &pretty(&doc)).map(|()| ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------
// embed.

fn violations_json(report: &DistortionReport, cap: usize) -> Value {
    let listed: Vec<Value> = report
        .violations
        .iter()
        .take(cap)
        .map(|v| {
            json!({
                "u": v.u, "v": v.v,
                "guest": v.guest, "host": v.host, "allowed": v.allowed,
            })
        })
        .collect();
    json!({
        "checked_pairs": report.checked_pairs,
        "max_additive_error": report.max_additive_error,
        "worst_slack": report.worst_slack,
        "violation_count": report.violations.len(),
        "violations": listed,
    })
}

fn cmd_embed(common: &Common, args: EmbedArgs) -> Result<ExitCode> {
    let (g, _, file_defaults) = load_input(&args.input)?;
    let r = common.resolve(&file_defaults);
    let depots = merge_depots(args.depot, &args.depots);

    let (report, host_text, td_text, doc) = match args.mode {
        EmbedMode::Diam => {
            let (scaled, params, _, tree) = prepare(&g, r.c)?;
            let delta = scaled.diameter();
            let emb = embed_bounded_diameter(&scaled, &tree, r.eps, delta)?;
            let report = audit_bounded_diameter(&scaled, &emb);
            let doc = json!({
                "mode": "diam",
                "n": g.vertex_count(),
                "epsilon": r.eps,
                "c": r.c,
                "c_dist": Value::Null,
                "scale_factor": params.scale_factor,
                "delta": delta,
                "width": emb.td.width(),
                "bags": emb.td.bags.len(),
                "host_edges": emb.host.edges().len(),
                "audit": violations_json(&report, 10),
                "clean": report.clean(),
            });
            (report, emb.host.to_text(), emb.td.to_text(), doc)
        }
        EmbedMode::Depot | EmbedMode::Multi => {
            let depots = depots.unwrap_or_else(|| vec![0]);
            if args.mode == EmbedMode::Depot && depots.len() != 1 {
                bail!("--mode depot takes exactly one depot; use --mode multi");
            }
            let emb = build_depot_embedding(&g, &depots, &r, args.c_dist)?;
            let report = match args.mode {
                EmbedMode::Depot => audit_single_depot(&emb),
                _ => audit_multi_depot(&emb, args.c_mult),
            };
            let bands = band_audit(&emb);
            let mut doc = json!({
                "mode": if args.mode == EmbedMode::Depot { "depot" } else { "multi" },
                "n": g.vertex_count(),
                "depots": depots,
                "eps_hat": r.eps,
                "epsilon": emb.params.epsilon,
                "c": r.c,
                "c_dist": args.c_dist,
                "eta_hint": r.eta_hint,
                "scale_factor": emb.params.scale_factor,
                "pendants": emb.aug.graph.vertex_count() - g.vertex_count(),
                "k_max": emb.k_max,
                "band_window": emb.band_window,
                "width": emb.td.width(),
                "bags": emb.td.bags.len(),
                "host_edges": emb.host.edges().len(),
                "audit": violations_json(&report, 10),
                "bands": {
                    "nesting_ok": bands.nesting_ok,
                    "covering_ok": bands.covering_ok,
                    "contiguity_ok": bands.contiguity_ok,
                },
                "clean": report.clean() && bands.clean(),
            });
            if args.mode == EmbedMode::Multi {
                doc["c_mult"] = json!(args.c_mult);
            }
            let clean = report.clean() && bands.clean();
            let (h, t) = (emb.host.to_text(), emb.td.to_text());
            return finish_embed(common, &args, doc, h, t, clean);
        }
    };
    let clean = report.clean();
    finish_embed(common, &args, doc, host_text, td_text, clean)
}

fn build_depot_embedding(
    g: &MetricGraph,
    depots: &[usize],
    r: &Resolved,
    c_dist: f64,
) -> Result<DepotEmbedding> {
    for &d in depots {
        if d >= g.vertex_count() {
            bail!("depot {d} out of range (n = {})", g.vertex_count());
        }
    }
    let (scaled, params) = canonical_scale(g, r.c)?;
    let params = params.with_accuracy(r.eps, c_dist);
    Ok(embed_depot(&scaled, depots, r.eta_hint, &params)?)
}

/// Writes the embed artifacts. The report always carries the host and
/// decomposition texts so a bare stdout run is self-contained; explicit
/// `--host-out` / `--td-out` additionally write them as plain files.
fn finish_embed(
    common: &Common,
    args: &EmbedArgs,
    mut doc: Value,
    host_text: String,
    td_text: String,
    clean: bool,
) -> Result<ExitCode> {
    if let Some(p) = &args.host_out {
        write_atomic(p, &host_text)?;
    }
    if let Some(p) = &args.td_out {
        write_atomic(p, &td_text)?;
    }
    doc["host_text"] = json!(host_text);
    doc["td_text"] = json!(td_text);
    emit(&common.out, &pretty(&doc))?;
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

// ---------------------------------------------------------------------
// solve / oracle.

/// What a solve or oracle run works on, assembled from the instance file
/// and the flag overrides.
enum Task {
    Routing { inst: RoutingInstance, penalties: bool },
    KCenter { k: usize, coverable: Vec<bool>, candidates: Vec<bool> },
    KMedian { k: usize, weights: Vec<f64>, candidates: Vec<bool> },
}

fn build_task(
    g: &MetricGraph,
    problem: Option<Problem>,
    kind: ProblemKind,
    q: Option<u32>,
    k: Option<usize>,
    depots: Option<Vec<usize>>,
    seed: u64,
) -> Result<Task> {
    let n = g.vertex_count();
    match kind {
        ProblemKind::Cvr | ProblemKind::CvrPen | ProblemKind::CvrMulti => {
            let (mut file_depots, mut capacity, mut demands, mut penalties) =
                (vec![0], 3u32, None, None);
            match problem {
                Some(Problem::Cvr { depots, capacity: cap, demands: dem, penalties: pen }) => {
                    file_depots = depots;
                    capacity = cap;
                    demands = Some(dem);
                    penalties = pen;
                }
                Some(_) => bail!("the instance poses a center problem, not routing"),
                None => {}
            }
            let depots = depots.unwrap_or(file_depots);
            let capacity = q.unwrap_or(capacity);
            let demands = demands.unwrap_or_else(|| {
                let mut d = vec![1u32; n];
                for &s in &depots {
                    if s < n {
                        d[s] = 0;
                    }
                }
                d
            });
            match kind {
                ProblemKind::Cvr if depots.len() != 1 => {
                    bail!("--problem cvr takes exactly one depot; use cvr-multi")
                }
                ProblemKind::CvrMulti if depots.len() < 2 => {
                    bail!("--problem cvr-multi needs at least two depots")
                }
                _ => {}
            }
            let want_pen = kind == ProblemKind::CvrPen;
            let penalties = match (want_pen, penalties) {
                (false, _) => None,
                (true, Some(p)) => Some(p),
                (true, None) => Some(seeded_penalties(g, &depots, seed)),
            };
            let mut inst = RoutingInstance::new(g.clone(), depots, capacity, demands)?;
            if let Some(p) = penalties {
                inst = inst.with_penalties(p)?;
            }
            Ok(Task::Routing { inst, penalties: want_pen })
        }
        ProblemKind::Kcenter => {
            let (mut kk, mut coverable, mut candidates) = (2, vec![true; n], vec![true; n]);
            match problem {
                Some(Problem::KCenter { k, coverable: cov, candidates: cand }) => {
                    kk = k;
                    coverable = cov;
                    candidates = cand;
                }
                Some(_) => bail!("the instance does not pose a k-center problem"),
                None => {}
            }
            Ok(Task::KCenter { k: k.unwrap_or(kk), coverable, candidates })
        }
        ProblemKind::Kmedian => {
            let (mut kk, mut weights, mut candidates) = (2, vec![1.0; n], vec![true; n]);
            match problem {
                Some(Problem::KMedian { k, weights: w, candidates: cand }) => {
                    kk = k;
                    weights = w;
                    candidates = cand;
                }
                Some(_) => bail!("the instance does not pose a k-median problem"),
                None => {}
            }
            Ok(Task::KMedian { k: k.unwrap_or(kk), weights, candidates })
        }
    }
}

fn solution_json(sol: &RoutingSolution) -> Value {
    let tours: Vec<Value> = sol
        .tours
        .iter()
        .map(|t| json!({ "stops": t.stops, "served": t.served }))
        .collect();
    json!({
        "tours": tours,
        "cost": sol.cost,
        "skipped": sol.skipped,
        "penalty_paid": sol.penalty_paid,
        "objective": sol.objective(),
    })
}

fn cmd_solve(common: &Common, args: SolveArgs, use_oracle: bool) -> Result<ExitCode> {
    let (g, problem, file_defaults) = load_input(&args.input)?;
    let r = common.resolve(&file_defaults);
    let depots = merge_depots(None, &args.depots);
    let task = build_task(&g, problem, args.problem, args.q, args.k, depots, r.seed)?;

    // The decomposition the exact solvers run on; the oracle ignores it.
    let td = match &args.td {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let td = TreeDecomposition::parse_text(&text)?;
            td.validate(&g)?;
            td
        }
        None => TreeDecomposition::new(vec![(0..g.vertex_count()).collect()], vec![0], 0),
    };

    let started = Instant::now();
    let mut doc = match task {
        Task::Routing { inst, penalties } => {
            if use_oracle {
                let optimum =
                    if penalties { brute_cvr_penalties(&inst)? } else { brute_cvr(&inst)? };
                json!({
                    "problem": args.problem.tag(),
                    "optimum": optimum,
                    "search_space": search_space(inst.clients().len()),
                })
            } else {
                let nice = make_nice(&td, &inst.depots);
                let sol = if penalties {
                    solve_cvr_penalties(&inst, &nice)?
                } else {
                    solve_cvr(&inst, &nice)?
                };
                json!({
                    "problem": args.problem.tag(),
                    "td_width": td.width(),
                    "solution": solution_json(&sol),
                })
            }
        }
        Task::KCenter { k, coverable, candidates } => {
            if use_oracle {
                let (value, centers) = brute_kcenter(&g, k, &coverable, &candidates)?;
                json!({ "problem": "kcenter", "k": k, "optimum": value, "centers": centers })
            } else {
                let sol = solve_kcenter_td(&g, &td, k, &coverable, &candidates)?;
                json!({
                    "problem": "kcenter", "k": k, "td_width": td.width(),
                    "value": sol.value, "centers": sol.centers,
                })
            }
        }
        Task::KMedian { k, weights, candidates } => {
            if use_oracle {
                let (value, centers) = brute_kmedian(&g, k, &weights, &candidates)?;
                json!({ "problem": "kmedian", "k": k, "optimum": value, "centers": centers })
            } else {
                let sol = solve_kmedian_td(&g, &td, k, &weights, &candidates)?;
                json!({
                    "problem": "kmedian", "k": k, "td_width": td.width(),
                    "value": sol.value, "centers": sol.centers,
                })
            }
        }
    };
    doc["runtime_ms"] = json!(started.elapsed().as_millis() as u64);
    emit(&common.out, &pretty(&doc)).map(|()| ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------
// ptas.

fn cmd_ptas(common: &Common, args: PtasArgs) -> Result<ExitCode> {
    let (g, problem, file_defaults) = load_input(&args.input)?;
    let r = common.resolve(&file_defaults);
    let depots = merge_depots(None, &args.depots);
    let task = build_task(&g, problem, args.problem, args.q, args.k, depots, r.seed)?;

    let started = Instant::now();
    let mut doc = match task {
        Task::Routing { inst, penalties } => {
            let pipe = if penalties {
                ptas_cvr_penalties(&inst, r.eps, r.c, r.eta_hint)?
            } else {
                ptas_cvr(&inst, r.eps, r.c, r.eta_hint)?
            };
            let oracle_v = if args.oracle {
                let optimum =
                    if penalties { brute_cvr_penalties(&inst)? } else { brute_cvr(&inst)? };
                ratio_json(pipe.solution.objective(), optimum)
            } else {
                Value::Null
            };
            json!({
                "problem": args.problem.tag(),
                "eps_hat": r.eps,
                "c": r.c,
                "eta_hint": r.eta_hint,
                "capacity": inst.capacity,
                "depots": inst.depots,
                "host_width": pipe.host_width,
                "solution": solution_json(&pipe.solution),
                "lower_bound": pipe.lower_bound,
                "ratio_to_lower_bound": pipe.ratio_to_lower_bound(),
                "oracle": oracle_v,
            })
        }
        Task::KCenter { k, coverable, candidates } => {
            let pipe = fpa_kcenter(&g, k, &coverable, &candidates, r.eps, r.c, r.eta_hint)?;
            let oracle_v = if args.oracle {
                let (optimum, centers) = brute_kcenter(&g, k, &coverable, &candidates)?;
                let mut v = ratio_json(pipe.value, optimum);
                v["centers"] = json!(centers);
                v
            } else {
                Value::Null
            };
            centers_doc("kcenter", k, &r, &pipe, oracle_v)
        }
        Task::KMedian { k, weights, candidates } => {
            let pipe = fpa_kmedian(&g, k, &weights, &candidates, r.eps, r.c, r.eta_hint)?;
            let oracle_v = if args.oracle {
                let (optimum, centers) = brute_kmedian(&g, k, &weights, &candidates)?;
                let mut v = ratio_json(pipe.value, optimum);
                v["centers"] = json!(centers);
                v
            } else {
                Value::Null
            };
            centers_doc("kmedian", k, &r, &pipe, oracle_v)
        }
    };
    doc["runtime_ms"] = json!(started.elapsed().as_millis() as u64);
    emit(&common.out, &pretty(&doc)).map(|()| ExitCode::SUCCESS)
}

fn ratio_json(achieved: f64, optimum: f64) -> Value {
    let ratio = if optimum > 0.0 { json!(achieved / optimum) } else { Value::Null };
    json!({ "optimum": optimum, "ratio": ratio })
}

fn centers_doc(
    tag: &str,
    k: usize,
    r: &Resolved,
    pipe: &hubway::pipelines::CentersPipeline,
    oracle_v: Value,
) -> Value {
    json!({
        "problem": tag,
        "eps_hat": r.eps,
        "c": r.c,
        "eta_hint": r.eta_hint,
        "k": k,
        "host_width": pipe.host_width,
        "centers": pipe.centers,
        "value": pipe.value,
        "seed_centers": pipe.seed,
        "oracle": oracle_v,
    })
}

// ---------------------------------------------------------------------
// audit.

fn audit_json(name: &str, report: &AuditReport, into: &mut Map<String, Value>) -> bool {
    const CAP: usize = 25;
    let listed: Vec<Value> =
        report.violations.iter().take(CAP).map(|s| json!(s)).collect();
    into.insert(
        name.to_string(),
        json!({
            "checked": report.checked,
            "violation_count": report.violations.len(),
            "violations": listed,
            "clean": report.clean(),
        }),
    );
    report.clean()
}

fn cmd_audit(common: &Common, args: AuditArgs) -> Result<ExitCode> {
    let (g, _, file_defaults) = load_input(&args.input)?;
    let r = common.resolve(&file_defaults);
    let (scaled, params, ladder, tree) = prepare(&g, r.c)?;

    let mut audits = Map::new();
    let mut clean = true;
    clean &= audit_json("towns", &oracle::audit_towns(&scaled, &tree, &params), &mut audits);
    clean &= audit_json("cover", &oracle::audit_cover(&scaled, &ladder, r.c), &mut audits);

    if args.mode != AuditMode::Base {
        let depots = merge_depots(args.depot, &args.depots).unwrap_or_else(|| vec![0]);
        if args.mode == AuditMode::Depot && depots.len() != 1 {
            bail!("--mode depot takes exactly one depot; use --mode multi");
        }
        let emb = build_depot_embedding(&g, &depots, &r, args.c_dist)?;

        clean &= audit_json(
            "distances_preserved",
            &oracle::audit_distances_preserved(&scaled, &emb.aug.graph),
            &mut audits,
        );
        clean &= audit_json(
            "depot_towns",
            &oracle::audit_depot_towns(&emb.tree, &emb.depots, emb.aug.graph.vertex_count()),
            &mut audits,
        );
        clean &= audit_json(
            "bands",
            &oracle::audit_bands(
                &emb.aug.graph,
                &emb.bands,
                &emb.ground,
                &emb.depots,
                emb.k_max,
                emb.params.epsilon,
            ),
            &mut audits,
        );

        // Corridor allowances recomputed from scratch, not trusted from
        // the embedding.
        let m = OracleMetric::from_graph(&emb.aug.graph);
        let ds: Vec<f64> = (0..emb.aug.graph.vertex_count())
            .map(|v| m.d_to_set(v, &emb.depots))
            .collect();
        let slack = emb.params.distortion_constant * emb.params.epsilon;
        let mult = args.c_mult * emb.params.epsilon;
        let originals: Vec<usize> = emb.aug.original_vertices().collect();
        let corridor = if args.mode == AuditMode::Depot {
            oracle::audit_corridor(&emb.aug.graph, &emb.host, &originals, |u, v| {
                slack * (ds[u] + ds[v])
            })
        } else {
            oracle::audit_corridor(&emb.aug.graph, &emb.host, &originals, |u, v| {
                mult * m.d(u, v) + slack * ds[u].min(ds[v])
            })
        };
        clean &= audit_json("corridor", &corridor, &mut audits);
    }

    let doc = json!({
        "mode": match args.mode {
            AuditMode::Base => "base",
            AuditMode::Depot => "depot",
            AuditMode::Multi => "multi",
        },
        "eps_hat": r.eps,
        "c": r.c,
        "c_dist": args.c_dist,
        "c_mult": args.c_mult,
        "eta_hint": r.eta_hint,
        "n": g.vertex_count(),
        "audits": Value::Object(audits),
        "clean": clean,
    });
    emit(&common.out, &pretty(&doc))?;
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

// A tiny smoke check lives here so `cargo test -p hubway-cli` exercises
// the plumbing helpers without going through a subprocess; the real
// end-to-end runs are in tests/cli.rs.
#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_lands_and_leaves_no_litter() {
        let dir = std::env::temp_dir().join(format!("hubway-cli-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let target = dir.join("report.json");
        write_atomic(&target, "{}\n").unwrap();
        assert_eq!(fs::read_to_string(&target).unwrap(), "{}\n");
        let leftovers: Vec<_> = fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains("tmp"))
            .collect();
        assert!(leftovers.is_empty());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn depot_merging_dedups_and_sorts() {
        assert_eq!(merge_depots(Some(3), &[5, 3, 1]), Some(vec![1, 3, 5]));
        assert_eq!(merge_depots(None, &[]), None);
    }
}
