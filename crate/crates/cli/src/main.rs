use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperdiff::io::{parse_node_list, parse_solution, write_node_list, write_solution};
use hyperdiff::oracles::{
    brute_min_conductance, cut_preservation_check, kkt_check, objective, objective_min_aux, reference_qp_solver,
    BRUTE_MAX_NODES, CUT_CHECK_MAX_GADGETS,
};
use hyperdiff::{
    planted_hypergraph, pnorm_push_volume_bound, pnorm_solve, prf1, push_volume_bound, sample_seeds, solve, sweepcut,
    Diffusion64, DiffusionConfig64, Error, Hypergraph64, NodeSet, PlantedConfig, SeedMode, Topology,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "hyperdiff", version, about = "Strongly local hypergraph diffusions and sweep-cut clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diffuse from one or more seed sets and round each result with a sweep cut.
    Diffuse(DiffuseArgs),
    /// Sweep-cut profile of a solution vector.
    Sweep(SweepArgs),
    /// F1 score of a predicted cluster against a reference, with precision and recall.
    Eval(EvalArgs),
    /// Planted-partition hypergraph with block labels.
    Gen(GenArgs),
    /// Oracle checks of a solve on a small instance.
    Check(CheckArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// hMETIS hypergraph file.
    #[arg(long)]
    graph: PathBuf,
    /// Gadget file, one line per hyperedge of `c:delta` pairs; overrides --delta.
    #[arg(long)]
    gadgets: Option<PathBuf>,
    /// Threshold of the delta-linear splitting function on every hyperedge.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
}

#[derive(Args)]
struct SolverArgs {
    /// Sparsity parameter. No universal default: 0.00025 suits Amazon-scale data and
    /// 0.0025 Stack-Overflow-scale data.
    #[arg(long)]
    kappa: f64,
    /// Locality parameter.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Pushes lower a residual to rho * kappa * d.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Loss exponent; anything other than 2 runs the p-norm solver.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Bisection width of the p-norm pushes.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 100_000_000)]
    max_pushes: usize,
}

impl SolverArgs {
    fn config(&self, delta: f64) -> DiffusionConfig64 {
        DiffusionConfig64::new(self.kappa)
            .with_gamma(self.gamma)
            .with_rho(self.rho)
            .with_delta(delta)
            .with_p(self.p)
            .with_eps(self.eps)
            .with_max_pushes(self.max_pushes)
    }
}

#[derive(Args)]
struct DiffuseArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Seed file (1-based node ids). Repeat for several runs; each gets its own subdirectory.
    #[arg(long, required = true)]
    seeds: Vec<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for independent seed sets (0 = all cores).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also write the auxiliary gadget values to aux.csv.
    #[arg(long)]
    emit_aux: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Solution CSV with `node_id,x` rows.
    #[arg(long)]
    x: PathBuf,
    /// Profile CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the best prefix set here.
    #[arg(long)]
    cluster: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Append `pred,truth,precision,recall,f1` to this CSV (header written when new).
    #[arg(long)]
    append_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Uniform,
    Chain,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedModeArg {
    Uniform,
    Degree,
}

#[derive(Args)]
struct GenArgs {
    /// Comma-separated block sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    blocks: Vec<usize>,
    /// Hyperedges generated per block.
    #[arg(long)]
    epb: usize,
    /// Inclusive hyperedge size range `min:max`.
    #[arg(long, value_parser = parse_range)]
    sizes: (usize, usize),
    /// Fraction of each block's edges that reach into another block.
    #[arg(long, default_value_t = 0.05)]
    cross: f64,
    #[arg(long)]
    rng: u64,
    #[arg(long, value_enum, default_value_t = TopologyArg::Uniform)]
    topology: TopologyArg,
    /// Output stem; writes STEM.hgr and STEM.labels.
    #[arg(long)]
    out: PathBuf,
    /// Also write STEM.seeds with this many seeds from --seed-block.
    #[arg(long)]
    seed_count: Option<usize>,
    /// 1-based block to draw seeds from.
    #[arg(long, default_value_t = 1)]
    seed_block: usize,
    #[arg(long, value_enum, default_value_t = SeedModeArg::Uniform)]
    seed_mode: SeedModeArg,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    seeds: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Tolerance of the KKT and objective checks.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected min:max, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok((num(a)?, num(b)?))
}

enum Failure {
    Usage(String),
    Io(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::Check(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Check(m) => m,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn lib_err(e: Error) -> Failure {
    match e {
        Error::InvalidConfig(_) | Error::InvalidSeeds(_) | Error::Infeasible(_) => Failure::Usage(e.to_string()),
        _ => Failure::Io(e.to_string()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn load_graph(g: &GraphArgs) -> Result<Hypergraph64, Failure> {
    let text = read(&g.graph)?;
    let h = match &g.gadgets {
        Some(p) => Hypergraph64::parse_with_gadgets(&text, &read(p)?),
        None => Hypergraph64::parse(&text, g.delta),
    };
    h.map_err(|e| io_err(&g.graph, e))
}

fn load_seeds(path: &Path, n: usize) -> Result<NodeSet, Failure> {
    parse_node_list(&read(path)?, n).map_err(|e| io_err(path, e))
}

fn run_solver(h: &Hypergraph64, seeds: &NodeSet, cfg: &DiffusionConfig64) -> Result<Diffusion64, Failure> {
    let x = if cfg.p == 2.0 { solve(h, seeds, cfg) } else { pnorm_solve(h, seeds, cfg) };
    x.map_err(lib_err)
}

#[derive(Serialize)]
struct RunReport {
    seeds: String,
    solver: &'static str,
    gamma: f64,
    kappa: f64,
    rho: f64,
    delta_max: f64,
    p: f64,
    seed_volume: f64,
    converged: bool,
    hyperpushes: usize,
    auxpushes: usize,
    pushed_volume: f64,
    bound: f64,
    touched_nodes: usize,
    support: usize,
    cluster_size: usize,
    best_conductance: Option<f64>,
    wall_time_s: f64,
}

fn diffuse_one(h: &Hypergraph64, seeds_path: &Path, dir: &Path, args: &DiffuseArgs) -> Result<RunReport, Failure> {
    let seeds = load_seeds(seeds_path, h.num_nodes())?;
    let cfg = args.solver.config(h.max_delta().max(1.0)).with_emit_aux(args.emit_aux);
    let start = Instant::now();
    let x = run_solver(h, &seeds, &cfg)?;
    let (cluster, best) = if x.is_zero() {
        eprintln!("warning: {}: diffusion is zero (kappa {}), the cluster is empty", seeds_path.display(), cfg.kappa);
        (NodeSet::empty(), None)
    } else {
        let profile = sweepcut(h, &x.x).map_err(lib_err)?;
        (profile.best_set, Some(profile.best_conductance))
    };
    let wall = start.elapsed().as_secs_f64();

    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write(&dir.join("solution.csv"), &write_solution(&x.x))?;
    write(&dir.join("cluster.txt"), &write_node_list(&cluster))?;
    if let Some(aux) = &x.aux {
        let mut s = String::from("gadget,xa,xb\n");
        for (g, a, b) in aux {
            s.push_str(&format!("{},{a},{b}\n", g + 1));
        }
        write(&dir.join("aux.csv"), &s)?;
    }
    let pnorm = cfg.p != 2.0;
    let bound = if pnorm {
        pnorm_push_volume_bound(&cfg, h.max_delta(), x.seed_volume)
    } else {
        push_volume_bound(&cfg, h.max_delta(), x.seed_volume)
    };
    Ok(RunReport {
        seeds: seeds_path.display().to_string(),
        solver: if pnorm { "pnorm" } else { "quadratic" },
        gamma: cfg.gamma,
        kappa: cfg.kappa,
        rho: cfg.rho,
        delta_max: h.max_delta(),
        p: cfg.p,
        seed_volume: x.seed_volume,
        converged: x.converged,
        hyperpushes: x.ledger.hyperpushes,
        auxpushes: x.ledger.auxpushes,
        pushed_volume: x.ledger.pushed_volume,
        bound,
        touched_nodes: x.touched_nodes,
        support: x.x.len(),
        cluster_size: cluster.len(),
        best_conductance: best,
        wall_time_s: wall,
    })
}

fn run_dirs(out: &Path, seeds: &[PathBuf]) -> Vec<PathBuf> {
    if seeds.len() == 1 {
        return vec![out.to_path_buf()];
    }
    seeds
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let stem = p.file_stem().map_or_else(|| "seeds".into(), |s| s.to_string_lossy().into_owned());
            out.join(format!("{}-{stem}", k + 1))
        })
        .collect()
}

fn run_diffuse(args: &DiffuseArgs) -> Result<(), Failure> {
    args.solver.config(1.0).validate().map_err(lib_err)?;
    let h = load_graph(&args.graph)?;
    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let dirs = run_dirs(&args.out, &args.seeds);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::Usage(format!("--jobs: {e}")))?;
    let results: Vec<Result<RunReport, Failure>> =
        pool.install(|| args.seeds.par_iter().zip(dirs.par_iter()).map(|(s, d)| diffuse_one(&h, s, d, args)).collect());

    let report_path = args.out.join("report.jsonl");
    let mut report = fs::File::create(&report_path).map_err(|e| io_err(&report_path, e))?;
    let mut first_err = None;
    let mut unconverged = Vec::new();
    for r in results {
        match r {
            Ok(rep) => {
                if !rep.converged {
                    unconverged.push(rep.seeds.clone());
                }
                let line = serde_json::to_string(&rep).expect("report serializes");
                writeln!(report, "{line}").map_err(|e| io_err(&report_path, e))?;
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    if !unconverged.is_empty() {
        return Err(Failure::Check(format!("push cap reached before convergence for {}", unconverged.join(", "))));
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let h = load_graph(&args.graph)?;
    let x = parse_solution::<f64>(&read(&args.x)?, h.num_nodes()).map_err(|e| io_err(&args.x, e))?;
    let profile = sweepcut(&h, &x).map_err(|e| io_err(&args.x, e))?;
    match &args.out {
        Some(p) => write(p, &profile.to_csv())?,
        None => print!("{}", profile.to_csv()),
    }
    if let Some(p) = &args.cluster {
        write(p, &write_node_list(&profile.best_set))?;
    }
    eprintln!("best prefix: {} nodes, conductance {}", profile.best_len, profile.best_conductance);
    Ok(())
}

/// Largest id in a node list, so both lists of `eval` parse against one universe.
fn max_id(text: &str) -> usize {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.starts_with('%') && !l.starts_with('#'))
        .flat_map(|l| l.split(|c: char| c.is_whitespace() || c == ','))
        .filter_map(|t| t.parse::<usize>().ok())
        .max()
        .unwrap_or(0)
}

fn run_eval(args: &EvalArgs) -> Result<(), Failure> {
    let (pred_text, truth_text) = (read(&args.pred)?, read(&args.truth)?);
    let n = max_id(&pred_text).max(max_id(&truth_text));
    let pred = parse_node_list(&pred_text, n).map_err(|e| io_err(&args.pred, e))?;
    let truth = parse_node_list(&truth_text, n).map_err(|e| io_err(&args.truth, e))?;
    let m = prf1(&pred, &truth);
    println!("{:.4} {:.4} {:.4}", m.precision, m.recall, m.f1);
    if let Some(path) = &args.append_csv {
        let fresh = !path.exists();
        let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| io_err(path, e))?;
        let mut row = String::new();
        if fresh {
            row.push_str("pred,truth,precision,recall,f1\n");
        }
        row.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4}\n",
            args.pred.display(),
            args.truth.display(),
            m.precision,
            m.recall,
            m.f1
        ));
        f.write_all(row.as_bytes()).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn run_gen(args: &GenArgs) -> Result<(), Failure> {
    let topology = match args.topology {
        TopologyArg::Uniform => Topology::Uniform,
        TopologyArg::Chain => Topology::Chain,
    };
    let cfg =
        PlantedConfig::new(args.blocks.clone(), args.epb, args.sizes, args.cross, args.rng).with_topology(topology);
    let inst = planted_hypergraph(&cfg).map_err(lib_err)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    write(&with_ext(&args.out, "hgr"), &inst.to_hgr())?;
    write(&with_ext(&args.out, "labels"), &inst.labels_text())?;
    if let Some(k) = args.seed_count {
        if args.seed_block == 0 || args.seed_block > args.blocks.len() {
            return Err(Failure::Usage(format!("--seed-block must lie in 1..={}", args.blocks.len())));
        }
        let mode = match args.seed_mode {
            SeedModeArg::Uniform => SeedMode::Uniform,
            SeedModeArg::Degree => SeedMode::DegreeProportional,
        };
        let h: Hypergraph64 = inst.hypergraph(1.0).map_err(lib_err)?;
        let seeds = sample_seeds(&h, &inst.labels, args.seed_block - 1, k, mode, args.rng).map_err(lib_err)?;
        write(&with_ext(&args.out, "seeds"), &write_node_list(&seeds))?;
    }
    Ok(())
}

fn run_check(args: &CheckArgs) -> Result<(), Failure> {
    let h = load_graph(&args.graph)?;
    let seeds = load_seeds(&args.seeds, h.num_nodes())?;
    let cfg = args.solver.config(h.max_delta().max(1.0));
    let tol = args.tol;
    let mut failed = Vec::new();
    let mut verdict = |name: &str, ok: bool, detail: String| {
        println!("{name}: {} ({detail})", if ok { "ok" } else { "FAILED" });
        if !ok {
            failed.push(name.to_string());
        }
    };

    let x = run_solver(&h, &seeds, &cfg)?;
    let dense = x.dense(h.num_nodes());
    let rep = kkt_check(&h, &seeds, &cfg, &dense, None);
    let infeasibility = rep.neg_residual.max(rep.excess).max(rep.aux_residual).max(rep.box_violation);
    verdict(
        "kkt",
        x.converged && rep.feasible(tol),
        format!("max infeasibility {infeasibility:.3e}, slackness {:.3e}, converged {}", rep.slackness, x.converged),
    );

    if cfg.p == 2.0 {
        let reference = reference_qp_solver(&h, &seeds, &cfg).map_err(lib_err)?;
        let f_ref = objective(&h, &seeds, &cfg, &reference.x, &reference.aux);
        let f_push = objective_min_aux(&h, &seeds, &cfg, &dense);
        verdict(
            "reference",
            f_ref <= f_push + tol * f_ref.abs().max(1.0),
            format!("objective {f_ref:.6e} reference vs {f_push:.6e} push"),
        );
    }

    if h.num_nodes() <= BRUTE_MAX_NODES && h.num_gadgets() <= CUT_CHECK_MAX_GADGETS {
        let n = h.num_nodes();
        let mut bad = 0;
        for mask in 0u64..1 << n {
            let s = NodeSet::new(n, (0..n).filter(|&v| mask >> v & 1 == 1)).expect("ids in range");
            if !cut_preservation_check(&h, &s).map_err(lib_err)?.equal {
                bad += 1;
            }
        }
        verdict("cut preservation", bad == 0, format!("{bad} of {} subsets differ", 1u64 << n));
    } else {
        println!(
            "cut preservation: skipped (needs at most {BRUTE_MAX_NODES} nodes and {CUT_CHECK_MAX_GADGETS} gadgets)"
        );
    }

    if h.num_nodes() <= BRUTE_MAX_NODES && !x.is_zero() {
        let (_, phi_star) = brute_min_conductance(&h).map_err(lib_err)?;
        let profile = sweepcut(&h, &x.x).map_err(lib_err)?;
        println!("sweep conductance {} vs global minimum {phi_star}", profile.best_conductance);
    }

    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Diffuse(a) => run_diffuse(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Eval(a) => run_eval(a),
        Command::Gen(a) => run_gen(a),
        Command::Check(a) => run_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
