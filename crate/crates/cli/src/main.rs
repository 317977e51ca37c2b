//! Command-line front end: build and apply sketch operators, solve constrained
//! least-squares problems, recommend sketch sizes, estimate widths, run
//! experiments, and certify solutions.
//!
//! Matrix files are CSV (`rows,cols` header) or raw little-endian f64 with a
//! `.bin` extension and a JSON sidecar; see `sketchls::tensor::io`. Problem,
//! sketch, and experiment configs are JSON mirroring the library structs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use sketchls::geometry::{
    certificate_sampled, certificate_subspace, recommend_sketch_size, restricted_eig,
    restricted_eig_brute, width_bound_group, width_bound_l1, width_bound_nuclear, width_cone_mc,
    width_subspace_mc, Certificate, ConeProbe, ReEstimate, ReMode, ReOptions, RecommendParams,
    WidthEstimate,
};
use sketchls::harness::{export_csv, export_summary, export_svg, run_experiment, ExperimentConfig};
use sketchls::model::{self, ConstraintSpec, Problem, Solution};
use sketchls::sketch::{sketch_problem, SketchKind, SketchOperator, SketchSpec};
use sketchls::solve::{solve, solve_unconstrained, SolverOptions};
use sketchls::tensor::{io, DenseMatrix, DenseVector};

#[derive(Parser)]
#[command(
    name = "sketchls",
    version,
    about = "Randomized sketching for constrained least squares"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a sketch operator and apply it to a matrix or materialize it
    Sketch(SketchArgs),
    /// Solve a constrained least-squares problem, optionally sketched
    Solve(SolveArgs),
    /// Recommended sketch size for a named bound
    Recommend(RecommendArgs),
    /// Width estimates and closed-form width bounds
    Width(WidthArgs),
    /// Run a configured experiment and export CSV, summary, and SVG
    Experiment(ExperimentArgs),
    /// Optimality certificate for a solution under a sketch
    Certify(CertifyArgs),
}

#[derive(Args)]
struct SketchArgs {
    /// Sketch kind: gaussian, rademacher, or ros
    #[arg(long, default_value = "gaussian")]
    kind: String,
    /// Number of sketch rows
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Matrix to apply the sketch to (CSV or .bin)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Where to write the sketched matrix; requires --input
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the operator itself as a dense m x n matrix
    #[arg(long)]
    dense: Option<PathBuf>,
    /// Original dimension n; required when --input is not given
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON: {"a": "a.csv", "y": "y.csv", "constraint": {...}}
    #[arg(long)]
    problem: PathBuf,
    /// Sketch spec JSON {"kind": "...", "m": ..., "seed": ...}; solves the sketched problem
    #[arg(long)]
    sketch: Option<PathBuf>,
    /// Write the solution JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Gradient-map tolerance for the iterative solver
    #[arg(long)]
    grad_tol: Option<f64>,
    /// Disable acceleration in the iterative solver
    #[arg(long, default_value_t = false)]
    no_accel: bool,
}

#[derive(Args)]
struct RecommendArgs {
    /// One of: theorem1, theorem2_ros, unconstrained, unconstrained_ros,
    /// lasso, lasso_ros, cs, cs_ros, svm, nuclear, nuclear_ros, group
    #[arg(long)]
    kind: String,
    /// Failure probability in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Leading constant; defaults to 4 for lasso*/cs*, 5 for svm, 1.5 otherwise
    #[arg(long)]
    c0: Option<f64>,
    /// Bound parameters as inline JSON, or @path to read a JSON file
    #[arg(long, default_value = "{}")]
    params: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WidthArgs {
    /// One of: subspace_mc, l1_bound, nuclear_bound, group_bound, cone_mc_lower
    #[arg(long)]
    method: String,
    /// Design matrix (subspace_mc, l1_bound, group_bound)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Monte-Carlo sample or probe count
    #[arg(long, default_value_t = 400)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sparsity level (l1_bound: coordinates, group_bound: active groups)
    #[arg(long)]
    k: Option<usize>,
    /// Weight vector file for nuclear_bound
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Target rank for nuclear_bound
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    d1: Option<usize>,
    #[arg(long)]
    d2: Option<usize>,
    /// Group index sets as JSON, e.g. [[0,1],[2,3]]
    #[arg(long)]
    groups: Option<String>,
    /// Problem JSON for cone_mc_lower
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Solution vector file; solved internally when omitted
    #[arg(long)]
    xstar: Option<PathBuf>,
    /// Cone directions sampled for cone_mc_lower
    #[arg(long, default_value_t = 500)]
    directions: usize,
    /// Probe distribution for cone_mc_lower: gaussian, rademacher, or sketch
    #[arg(long, default_value = "gaussian")]
    probe: String,
    /// Sketch spec JSON for --probe sketch
    #[arg(long)]
    sketch: Option<PathBuf>,
    /// Sparsity used for the restricted-eigenvalue estimate; defaults to k
    /// for l1_bound and k times the largest group for group_bound
    #[arg(long)]
    re_k: Option<usize>,
    /// Certify the restricted-eigenvalue estimate by support enumeration
    #[arg(long, default_value_t = false)]
    re_brute: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Directory for trials.csv, summary.json, and curves.svg
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count
    #[arg(long)]
    trials: Option<usize>,
    /// Override the alpha grid, comma-separated, e.g. 0.25,0.5,1.0
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Override the sketch kinds, comma-separated, e.g. gaussian,ros
    #[arg(long)]
    kinds: Option<String>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Problem JSON: {"a": "a.csv", "y": "y.csv", "constraint": {...}}
    #[arg(long)]
    problem: PathBuf,
    /// Sketch spec JSON to certify against
    #[arg(long)]
    sketch: PathBuf,
    /// Solution vector file; solved internally when omitted
    #[arg(long)]
    xstar: Option<PathBuf>,
    /// Cone directions for the sampled route on constrained problems
    #[arg(long, default_value_t = 500)]
    directions: usize,
    /// Seed for direction sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct ProblemFile {
    a: String,
    y: String,
    #[serde(default = "default_constraint")]
    constraint: ConstraintSpec,
}

fn default_constraint() -> ConstraintSpec {
    ConstraintSpec::Unconstrained
}

#[derive(Serialize)]
struct SolveReport {
    #[serde(flatten)]
    solution: Solution,
    sketched: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    sketch_rows: Option<usize>,
    /// Objective of the returned point on the original (unsketched) problem.
    objective_original: f64,
}

#[derive(Serialize)]
struct WidthReport {
    estimate: WidthEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    restricted_eig: Option<ReEstimate>,
}

#[derive(Serialize)]
struct CertifyReport {
    certificate: Certificate,
    route: &'static str,
    objective_at_xstar: f64,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Sketch(a) => cmd_sketch(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Recommend(a) => cmd_recommend(a),
        Cmd::Width(a) => cmd_width(a),
        Cmd::Experiment(a) => cmd_experiment(a),
        Cmd::Certify(a) => cmd_certify(a),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Write a line to stdout, treating a closed pipe as success.
fn print_out(line: &str) -> Result<()> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{line}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => {
            fs::write(p, text.as_bytes()).with_context(|| format!("writing {}", p.display()))?;
            eprintln!("wrote {}", p.display());
        }
        None => print_out(&text)?,
    }
    Ok(())
}

/// Paths inside a problem file resolve against that file's directory.
fn resolve(base: &Path, p: &str) -> PathBuf {
    let pb = PathBuf::from(p);
    if pb.is_absolute() {
        pb
    } else {
        base.join(pb)
    }
}

fn load_vector(path: &Path) -> Result<Vec<f64>> {
    let m = io::read_matrix_auto(path)?;
    let v = m.into_vector()?;
    Ok(v.0)
}

fn load_problem(path: &Path) -> Result<Problem> {
    let pf: ProblemFile = read_json(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let a = io::read_matrix_auto(resolve(base, &pf.a))?;
    let y = load_vector(&resolve(base, &pf.y))?;
    let p = Problem::new(a, DenseVector::from_vec(y), pf.constraint)?;
    Ok(p)
}

fn parse_kinds(s: &str) -> Result<Vec<SketchKind>> {
    s.split(',')
        .map(|t| SketchKind::parse(t.trim()).map_err(Into::into))
        .collect()
}

fn parse_alphas(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad alpha {t:?}"))
        })
        .collect()
}

/// Reference solve of the original problem: direct for the unconstrained
/// geometry, tight projected gradient otherwise.
fn solve_reference(p: &Problem) -> Result<Solution> {
    if p.constraint == ConstraintSpec::Unconstrained {
        return Ok(solve_unconstrained(&p.a, &p.y)?);
    }
    let opts = SolverOptions {
        max_iters: 50_000,
        rel_obj_tol: 1e-16,
        grad_map_tol: 1e-9,
        ..SolverOptions::default()
    };
    Ok(solve(p, &opts)?)
}

fn cmd_sketch(a: SketchArgs) -> Result<()> {
    let kind = SketchKind::parse(&a.kind)?;
    if a.input.is_none() && a.dense.is_none() {
        bail!("nothing to do: pass --input with --out, or --dense");
    }
    if a.input.is_some() && a.out.is_none() {
        bail!("--input requires --out for the sketched matrix");
    }

    let input = match &a.input {
        Some(p) => Some(io::read_matrix_auto(p)?),
        None => None,
    };
    let n = match (&input, a.n) {
        (Some(m), Some(n)) if m.rows() != n => {
            bail!("--n {} disagrees with input rows {}", n, m.rows())
        }
        (Some(m), _) => m.rows(),
        (None, Some(n)) => n,
        (None, None) => bail!("--dense without --input needs --n"),
    };

    let op = SketchOperator::build(
        SketchSpec {
            kind,
            m: a.m,
            seed: a.seed,
        },
        n,
    )?;
    if let (Some(m), Some(out)) = (&input, &a.out) {
        let sm = op.apply_left(m)?;
        io::write_matrix_auto(&sm, out)?;
        eprintln!(
            "applied {} sketch: {} x {} -> {} x {}, wrote {}",
            kind.as_str(),
            m.rows(),
            m.cols(),
            sm.rows(),
            sm.cols(),
            out.display()
        );
    }
    if let Some(dense_out) = &a.dense {
        let d = op.to_dense()?;
        io::write_matrix_auto(&d, dense_out)?;
        eprintln!(
            "materialized {} operator {} x {} to {}",
            kind.as_str(),
            d.rows(),
            d.cols(),
            dense_out.display()
        );
    }
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let p = load_problem(&a.problem)?;
    let mut opts = SolverOptions::default();
    if let Some(mi) = a.max_iters {
        opts.max_iters = mi;
    }
    if let Some(gt) = a.grad_tol {
        opts.grad_map_tol = gt;
    }
    opts.acceleration = !a.no_accel;
    opts.validate()?;

    let (sol, sketched, rows) = match &a.sketch {
        Some(spec_path) => {
            let spec: SketchSpec = read_json(spec_path)?;
            let op = SketchOperator::build(spec, p.n())?;
            let sp = sketch_problem(&p, &op)?;
            let sol = if sp.constraint == ConstraintSpec::Unconstrained {
                solve_unconstrained(&sp.a, &sp.y)?
            } else {
                solve(&sp, &opts)?
            };
            (sol, true, Some(op.m()))
        }
        None => {
            let sol = if p.constraint == ConstraintSpec::Unconstrained {
                solve_unconstrained(&p.a, &p.y)?
            } else {
                solve(&p, &opts)?
            };
            (sol, false, None)
        }
    };

    let objective_original = model::objective(&p, sol.x_slice())?;
    emit_json(
        &SolveReport {
            solution: sol,
            sketched,
            sketch_rows: rows,
            objective_original,
        },
        a.out.as_deref(),
    )
}

fn default_c0(kind: &str) -> f64 {
    match kind {
        "lasso" | "lasso_ros" | "cs" | "cs_ros" => 4.0,
        "svm" => 5.0,
        _ => 1.5,
    }
}

fn cmd_recommend(a: RecommendArgs) -> Result<()> {
    let params_text = match a.params.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        None => a.params.clone(),
    };
    let params: RecommendParams =
        serde_json::from_str(&params_text).context("parsing --params JSON")?;
    let c0 = a.c0.unwrap_or_else(|| default_c0(&a.kind));
    let rec = recommend_sketch_size(&a.kind, a.delta, c0, &params)?;
    emit_json(&rec, a.out.as_deref())
}

fn re_for(a: &DenseMatrix, sparsity: usize, seed: u64, brute: bool) -> Result<ReEstimate> {
    if brute {
        return Ok(restricted_eig_brute(a, sparsity)?);
    }
    let opts = ReOptions {
        seed,
        ..ReOptions::default()
    };
    Ok(restricted_eig(a, sparsity, ReMode::Min, &opts)?)
}

fn cmd_width(a: WidthArgs) -> Result<()> {
    let need_input = |p: &Option<PathBuf>| -> Result<DenseMatrix> {
        match p {
            Some(path) => Ok(io::read_matrix_auto(path)?),
            None => bail!("--method {} needs --input", a.method),
        }
    };

    let report = match a.method.as_str() {
        "subspace_mc" => {
            let m = need_input(&a.input)?;
            WidthReport {
                estimate: width_subspace_mc(&m, a.samples, a.seed)?,
                restricted_eig: None,
            }
        }
        "l1_bound" => {
            let m = need_input(&a.input)?;
            let k = a.k.context("--method l1_bound needs --k")?;
            let re = re_for(&m, a.re_k.unwrap_or(k), a.seed, a.re_brute)?;
            WidthReport {
                estimate: width_bound_l1(&m, k, &re)?,
                restricted_eig: Some(re),
            }
        }
        "nuclear_bound" => {
            let w = load_vector(&a.weights.clone().context("--method nuclear_bound needs --weights")?)?;
            let r = a.rank.context("--method nuclear_bound needs --rank")?;
            let d1 = a.d1.context("--method nuclear_bound needs --d1")?;
            let d2 = a.d2.context("--method nuclear_bound needs --d2")?;
            WidthReport {
                estimate: width_bound_nuclear(&w, r, d1, d2)?,
                restricted_eig: None,
            }
        }
        "group_bound" => {
            let m = need_input(&a.input)?;
            let k = a.k.context("--method group_bound needs --k")?;
            let groups_text = a.groups.clone().context("--method group_bound needs --groups")?;
            let groups: Vec<Vec<usize>> =
                serde_json::from_str(&groups_text).context("parsing --groups JSON")?;
            let max_size = groups.iter().map(Vec::len).max().unwrap_or(1);
            let sparsity = a.re_k.unwrap_or((k * max_size).min(m.cols()));
            let re = re_for(&m, sparsity, a.seed, a.re_brute)?;
            WidthReport {
                estimate: width_bound_group(&m, &groups, k, &re)?,
                restricted_eig: Some(re),
            }
        }
        "cone_mc_lower" => {
            let problem_path = a.problem.clone().context("--method cone_mc_lower needs --problem")?;
            let p = load_problem(&problem_path)?;
            let xstar = match &a.xstar {
                Some(path) => load_vector(path)?,
                None => solve_reference(&p)?.x.0,
            };
            let op;
            let probe = match a.probe.as_str() {
                "gaussian" => ConeProbe::Gaussian,
                "rademacher" => ConeProbe::Rademacher,
                "sketch" => {
                    let spec_path = a.sketch.clone().context("--probe sketch needs --sketch")?;
                    let spec: SketchSpec = read_json(&spec_path)?;
                    op = SketchOperator::build(spec, p.n())?;
                    ConeProbe::Sketch(&op)
                }
                other => bail!("unknown probe {other:?}, expected gaussian|rademacher|sketch"),
            };
            WidthReport {
                estimate: width_cone_mc(&p, &xstar, a.directions, a.samples, a.seed, probe)?,
                restricted_eig: None,
            }
        }
        other => bail!(
            "unknown method {other:?}, expected \
             subspace_mc|l1_bound|nuclear_bound|group_bound|cone_mc_lower"
        ),
    };
    emit_json(&report, a.out.as_deref())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg: ExperimentConfig = read_json(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(grid) = &a.alpha_grid {
        cfg.alphas = parse_alphas(grid)?;
    }
    if let Some(kinds) = &a.kinds {
        cfg.kinds = parse_kinds(kinds)?;
    }

    let records = run_experiment(&cfg)?;
    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))?;
    let csv_path = a.out_dir.join("trials.csv");
    let summary_path = a.out_dir.join("summary.json");
    let svg_path = a.out_dir.join("curves.svg");
    export_csv(&records, &csv_path)?;
    let summary = export_summary(&records);
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    export_svg(&records, &svg_path)?;

    print_out("experiment  kind        alpha   mean_ratio  stderr  count")?;
    for row in &summary {
        print_out(&format!(
            "{:<11} {:<11} {:<7.3} {:<11.4} {:<7.4} {}",
            row.experiment, row.kind, row.alpha, row.mean_ratio, row.stderr_ratio, row.count
        ))?;
    }
    eprintln!(
        "wrote {}, {}, {}",
        csv_path.display(),
        summary_path.display(),
        svg_path.display()
    );
    Ok(())
}

fn cmd_certify(a: CertifyArgs) -> Result<()> {
    let p = load_problem(&a.problem)?;
    let spec: SketchSpec = read_json(&a.sketch)?;
    let op = SketchOperator::build(spec, p.n())?;
    let xstar = match &a.xstar {
        Some(path) => load_vector(path)?,
        None => solve_reference(&p)?.x.0,
    };
    let objective_at_xstar = model::objective(&p, &xstar)?;

    let (certificate, route) = if p.constraint == ConstraintSpec::Unconstrained {
        (certificate_subspace(&p.a, &p.y, &xstar, &op)?, "subspace")
    } else {
        let dirs = model::tangent_cone_sample(&p, &xstar, a.directions, a.seed)?;
        (certificate_sampled(&p, &xstar, &op, &dirs)?, "sampled")
    };
    emit_json(
        &CertifyReport {
            certificate,
            route,
            objective_at_xstar,
        },
        a.out.as_deref(),
    )
}
