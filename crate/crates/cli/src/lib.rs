//! Command-line front end: JSON problem files in, verified certificates
//! out.
//!
//! Exit codes follow the alternatives of the underlying statements:
//! 0 for the first alternative (solved covering, all cells below `c`, a
//! cut), 1 for the second (uncovered point, quota partition, no cut plus
//! witnesses), 2 for input errors or an exhausted solver. Every claim in
//! a certificate is recomputed from scratch before it is emitted; a
//! certificate that fails its own verification block never leaves the
//! process.

mod input;
mod scores;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kkm_core::cutting::{
    cuts_family, find_cut, find_witness, helly_check, witness_from_kkm, BoxFamily, CutFamily,
    CutOutcome, SetKind, WitnessOutcome,
};
use kkm_core::matching::QuotaVector;
use kkm_core::measure::SquareOutcome;
use kkm_core::simplex::{
    check_cover_conditions, index_tuples, unity_weights, CanonicalField, ProductPoint, ScoreField,
};
use kkm_core::solver::{
    oracle_sigma_feasible, oracle_solve, required_matching_size, solve_colored_kkm, solve_kkm_r,
    solve_kkm_product, BalancedTarget, KkmRSolution, KkmSolution, OracleOutcome, SimplexScores,
    SolverError,
};

use scores::{tabulated_simplex_scores, ScoreSource, TabulatedProductField};

#[derive(Parser)]
#[command(
    name = "kkm",
    version,
    about = "Covering certificates on products of simplices, measure \
             partitions of the unit square, and line cuts of planar box \
             families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Balanced point plus quota assignment for a two-factor covering.
    Kkm(KkmArgs),
    /// Near-uniform point plus a disjoint tuple matching on equal factors.
    KkmR(KkmRArgs),
    /// Per-column coverings of one simplex with a row quota.
    ColoredKkm(ColoredArgs),
    /// Partition the unit square: assigned cells reach mass c, or every
    /// cell stays below c.
    SquarePartition(SquareArgs),
    /// Cut a box family with n vertical and m horizontal lines, or show
    /// the witnesses that forbid it.
    CutLines(CutLinesArgs),
    /// Witness extraction through the covering solver; an uncovered
    /// partition doubles as a cut.
    Witness(WitnessArgs),
    /// Check the Helly-type condition: single-axis cuttable subfamilies
    /// force a joint cut.
    HellyCheck(HellyArgs),
    /// Exhaustive lattice search for a quota assignment, independent of
    /// the solver path.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Certificate JSON, or CSV plot rows (partitions and cuts only).
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Recorded in the certificate; every solver is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct KkmArgs {
    /// `canonical` or a path to a tabulated score file.
    #[arg(long)]
    scores: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated positive row quotas summing to m.
    #[arg(long)]
    quota: String,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 60)]
    budget: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct KkmRArgs {
    /// Only the `canonical` builtin covers r factors.
    #[arg(long, default_value = "canonical")]
    scores: String,
    /// Number of factors.
    #[arg(long)]
    r: usize,
    /// Size of every factor.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 30)]
    budget: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ColoredArgs {
    /// `canonical` or a path to a tabulated score file (values over the
    /// row simplex's lattice).
    #[arg(long)]
    scores: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated positive row quotas summing to m.
    #[arg(long)]
    quota: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 40)]
    budget: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SquareArgs {
    /// Path to a density file.
    #[arg(long)]
    density: PathBuf,
    /// Mass threshold.
    #[arg(long)]
    c: f64,
    /// Vertical strips.
    #[arg(long)]
    n: usize,
    /// Horizontal strips.
    #[arg(long)]
    m: usize,
    /// Comma-separated positive strip quotas summing to m.
    #[arg(long)]
    quota: String,
    /// Allowed shortfall of assigned cells below c.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    budget: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CutLinesArgs {
    /// Path to a family file.
    #[arg(long)]
    family: PathBuf,
    /// Vertical line budget.
    #[arg(long)]
    n: usize,
    /// Horizontal line budget.
    #[arg(long)]
    m: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct WitnessArgs {
    /// Path to a family file.
    #[arg(long)]
    family: PathBuf,
    /// Vertical line budget.
    #[arg(long)]
    n: usize,
    /// Horizontal line budget.
    #[arg(long)]
    m: usize,
    /// Comma-separated positive group quotas, n+1 parts summing to m+1.
    #[arg(long)]
    quota: String,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 30)]
    budget: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct HellyArgs {
    /// Path to a family file.
    #[arg(long)]
    family: PathBuf,
    /// Vertical line budget (1 <= n <= m).
    #[arg(long)]
    n: usize,
    /// Horizontal line budget.
    #[arg(long)]
    m: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// `canonical` or a path to a tabulated score file.
    #[arg(long)]
    scores: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated positive row quotas summing to m.
    #[arg(long)]
    quota: String,
    /// Lattice resolution per factor.
    #[arg(long, default_value_t = 16)]
    resolution: u32,
    #[command(flatten)]
    output: OutputArgs,
}

/// Entry point behind `main`; returns the process exit code.
pub fn run(args: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    let started = Instant::now();
    let (mut cert, code, output) = match cli.command {
        Command::Kkm(args) => {
            let output = args.output.clone();
            let (cert, code) = cmd_kkm(args)?;
            (cert, code, output)
        }
        Command::KkmR(args) => {
            let output = args.output.clone();
            let (cert, code) = cmd_kkm_r(args)?;
            (cert, code, output)
        }
        Command::ColoredKkm(args) => {
            let output = args.output.clone();
            let (cert, code) = cmd_colored(args)?;
            (cert, code, output)
        }
        Command::SquarePartition(args) => {
            let output = args.output.clone();
            let (cert, code) = cmd_square(args)?;
            (cert, code, output)
        }
        Command::CutLines(args) => {
            let output = args.output.clone();
            let (cert, code) = cmd_cut_lines(args)?;
            (cert, code, output)
        }
        Command::Witness(args) => {
            let output = args.output.clone();
            let (cert, code) = cmd_witness(args)?;
            (cert, code, output)
        }
        Command::HellyCheck(args) => {
            let output = args.output.clone();
            let (cert, code) = cmd_helly(args)?;
            (cert, code, output)
        }
        Command::Oracle(args) => {
            let output = args.output.clone();
            let (cert, code) = cmd_oracle(args)?;
            (cert, code, output)
        }
    };
    cert["elapsed_ms"] = json!(started.elapsed().as_secs_f64() * 1e3);
    if let Some(seed) = output.seed {
        cert["seed"] = json!(seed);
    }
    let text = match output.format {
        Format::Json => serde_json::to_string_pretty(&cert)? + "\n",
        Format::Csv => emit_plot_data(&cert)?,
    };
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(code)
}

fn parse_quota(spec: &str) -> Result<QuotaVector> {
    let parts = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("--quota {spec} is not a comma list of integers"))?;
    Ok(QuotaVector::new(parts)?)
}

fn product_field(source: &ScoreSource) -> Result<Box<dyn ScoreField>> {
    Ok(match source {
        ScoreSource::Canonical { n, m } => Box::new(CanonicalField::new(vec![*n, *m])),
        ScoreSource::File(file) => {
            let field = TabulatedProductField::from_file(file)?;
            let report = check_cover_conditions(&field, file.lattice_resolution)?;
            if !report.boundary_ok {
                eprintln!(
                    "warning: {} lattice points score positive on a forbidden facet; \
                     the covering guarantees may not apply to this table",
                    report.boundary_violations.len()
                );
            }
            Box::new(field)
        }
    })
}

fn point_json(point: &ProductPoint) -> Value {
    let factors: Vec<Value> = point
        .factors()
        .iter()
        .map(|f| {
            json!({
                "exact": f.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "value": f.to_f64(),
            })
        })
        .collect();
    json!(factors)
}

fn boxes_json(family: &BoxFamily) -> Value {
    let rows: Vec<[f64; 4]> = family
        .boxes()
        .iter()
        .map(|b| [b.x_lo, b.x_hi, b.y_lo, b.y_hi])
        .collect();
    json!(rows)
}

fn merge(cert: &mut Value, extra: Value) {
    if let (Some(into), Some(from)) = (cert.as_object_mut(), extra.as_object()) {
        for (k, v) in from {
            into.insert(k.clone(), v.clone());
        }
    }
}

/// Refuses to emit when any recomputed check failed.
fn ensure_green(what: &str, checks: &[(&str, bool)]) -> Result<()> {
    for (name, ok) in checks {
        if !ok {
            bail!("refusing to emit an unverified certificate: {what} failed the \"{name}\" check");
        }
    }
    Ok(())
}

fn verify_kkm_solution(
    field: &dyn ScoreField,
    quota: &QuotaVector,
    solution: &KkmSolution,
    tol: f64,
) -> Result<Value> {
    let weights = unity_weights(field, &solution.point)?;
    let residual = BalancedTarget::from_quota(quota).residual(&weights);
    let residual_ok = residual.is_finite() && residual <= tol;
    let counts_ok = solution.assignment.counts(quota.len()) == quota.parts();
    let scores: Vec<f64> = solution
        .assignment
        .map()
        .iter()
        .enumerate()
        .map(|(j, &i)| field.eval_point(&[i, j], &solution.point))
        .collect();
    let scores_ok = scores.iter().all(|&s| s > 0.0);
    ensure_green(
        "the assignment",
        &[
            ("quota counts", counts_ok),
            ("residual within tolerance", residual_ok),
            ("assigned scores positive", scores_ok),
        ],
    )?;
    Ok(json!({
        "quota_counts": counts_ok,
        "residual": residual,
        "residual_within_tol": residual_ok,
        "assigned_scores": scores,
        "assigned_scores_positive": scores_ok,
        "all_green": true,
    }))
}

fn not_covered_cert(
    command: &str,
    field: &dyn ScoreField,
    point: &ProductPoint,
    extra: Value,
) -> Result<Value> {
    let shape = field.shape().to_vec();
    let scores: Vec<f64> = index_tuples(&shape)
        .map(|t| field.eval_point(&t, point))
        .collect();
    let all_zero = scores.iter().all(|&s| s <= 0.0);
    ensure_green("the uncovered point", &[("all scores vanish", all_zero)])?;
    let mut cert = json!({
        "command": command,
        "outcome": "not_covered",
        "point": point_json(point),
        "verification": {
            "scores": scores,
            "all_scores_zero": all_zero,
            "all_green": true,
        },
    });
    merge(&mut cert, extra);
    Ok(cert)
}

fn cmd_kkm(args: KkmArgs) -> Result<(Value, u8)> {
    let source = ScoreSource::parse(&args.scores, args.n, args.m)?;
    let quota = parse_quota(&args.quota)?;
    let (n, m) = source.dims();
    let field = product_field(&source)?;
    let header = json!({"n": n, "m": m, "quota": quota.parts(), "tol": args.tol});
    match solve_kkm_product(field.as_ref(), &quota, args.tol, args.budget) {
        Ok(solution) => {
            let verification = verify_kkm_solution(field.as_ref(), &quota, &solution, args.tol)?;
            let mut cert = json!({
                "command": "kkm",
                "outcome": "solved",
                "point": point_json(&solution.point),
                "assignment": solution.assignment.map(),
                "residual": solution.residual,
                "verification": verification,
            });
            merge(&mut cert, header);
            Ok((cert, 0))
        }
        Err(SolverError::NotCovered(point)) => {
            let cert = not_covered_cert("kkm", field.as_ref(), &point, header)?;
            Ok((cert, 1))
        }
        Err(e) => Err(e.into()),
    }
}

fn verify_kkm_r(field: &dyn ScoreField, solution: &KkmRSolution, tol: f64) -> Result<Value> {
    let shape = field.shape().to_vec();
    let required = required_matching_size(shape[0], shape.len());
    let disjoint = solution.matching.is_disjoint();
    let size_ok = solution.matching.size() >= required;
    let weights = unity_weights(field, &solution.point)?;
    let residual = BalancedTarget::uniform(shape.len(), shape[0]).residual(&weights);
    let residual_ok = residual.is_finite() && residual <= tol;
    let scores: Vec<f64> = solution
        .matching
        .edges
        .iter()
        .map(|e| field.eval_point(e, &solution.point))
        .collect();
    let scores_ok = scores.iter().all(|&s| s > 0.0);
    ensure_green(
        "the matching",
        &[
            ("pairwise disjoint", disjoint),
            ("size bound", size_ok),
            ("residual within tolerance", residual_ok),
            ("matched scores positive", scores_ok),
        ],
    )?;
    Ok(json!({
        "matching_disjoint": disjoint,
        "matching_size": solution.matching.size(),
        "required_size": required,
        "residual": residual,
        "residual_within_tol": residual_ok,
        "matched_scores": scores,
        "matched_scores_positive": scores_ok,
        "all_green": true,
    }))
}

fn cmd_kkm_r(args: KkmRArgs) -> Result<(Value, u8)> {
    if args.scores != "canonical" {
        bail!("kkm-r supports only --scores canonical");
    }
    if args.r < 2 {
        bail!("--r must be at least 2");
    }
    if args.n == 0 {
        bail!("--n must be positive");
    }
    let field = CanonicalField::new(vec![args.n; args.r]);
    let header = json!({"r": args.r, "n": args.n, "tol": args.tol});
    match solve_kkm_r(&field, args.tol, args.budget) {
        Ok(solution) => {
            let verification = verify_kkm_r(&field, &solution, args.tol)?;
            let mut cert = json!({
                "command": "kkm-r",
                "outcome": "solved",
                "point": point_json(&solution.point),
                "matching": solution.matching.edges,
                "residual": solution.residual,
                "verification": verification,
            });
            merge(&mut cert, header);
            Ok((cert, 0))
        }
        Err(SolverError::NotCovered(point)) => {
            let cert = not_covered_cert("kkm-r", &field, &point, header)?;
            Ok((cert, 1))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_colored(args: ColoredArgs) -> Result<(Value, u8)> {
    let source = ScoreSource::parse(&args.scores, args.n, args.m)?;
    let quota = parse_quota(&args.quota)?;
    let (n, m) = source.dims();
    let scores: SimplexScores = match &source {
        ScoreSource::Canonical { n, m } => SimplexScores::canonical(*n, *m),
        ScoreSource::File(file) => tabulated_simplex_scores(file)?,
    };
    let header = json!({"n": n, "m": m, "quota": quota.parts(), "tol": args.tol});
    match solve_colored_kkm(&scores, &quota, args.tol, args.budget) {
        Ok(solution) => {
            let x = solution.point.factor(0).to_f64();
            let per_column: Vec<f64> = solution
                .assignment
                .map()
                .iter()
                .enumerate()
                .map(|(j, &i)| scores.eval(i, j, &x))
                .collect();
            let counts_ok = solution.assignment.counts(n) == quota.parts();
            let positive = per_column.iter().all(|&s| s > 0.0);
            ensure_green(
                "the colored assignment",
                &[
                    ("quota counts", counts_ok),
                    ("column scores positive", positive),
                ],
            )?;
            let mut cert = json!({
                "command": "colored-kkm",
                "outcome": "solved",
                "simplex_point": {
                    "exact": solution.point.factor(0).coords().iter()
                        .map(|c| c.to_string()).collect::<Vec<_>>(),
                    "value": x,
                },
                "assignment": solution.assignment.map(),
                "residual": solution.residual,
                "verification": {
                    "quota_counts": counts_ok,
                    "column_scores": per_column,
                    "column_scores_positive": positive,
                    "all_green": true,
                },
            });
            merge(&mut cert, header);
            Ok((cert, 0))
        }
        Err(SolverError::NotCovered(point)) => {
            // All lifted scores vanish there; every column the lift keeps
            // active is a column whose sets all miss the simplex point.
            let x = point.factor(0).to_f64();
            let y = point.factor(1).to_f64();
            let top = y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let uncovered_columns: Vec<usize> = (0..m)
                .filter(|&j| {
                    y[j] - top + 1.0 / (2.0 * m as f64) > 0.0
                        && (0..n).all(|i| scores.eval(i, j, &x) <= 0.0)
                })
                .collect();
            ensure_green(
                "the uncovered column",
                &[("an active column has all scores zero", !uncovered_columns.is_empty())],
            )?;
            let mut cert = json!({
                "command": "colored-kkm",
                "outcome": "not_covered",
                "simplex_point": {
                    "exact": point.factor(0).coords().iter()
                        .map(|c| c.to_string()).collect::<Vec<_>>(),
                    "value": x,
                },
                "uncovered_columns": uncovered_columns,
                "verification": {"all_green": true},
            });
            merge(&mut cert, header);
            Ok((cert, 1))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_square(args: SquareArgs) -> Result<(Value, u8)> {
    if !args.c.is_finite() || args.c <= 0.0 {
        bail!("--c must be a positive finite number");
    }
    if !args.eps.is_finite() || args.eps < 0.0 {
        bail!("--eps must be a nonnegative finite number");
    }
    let density = input::load_density(&args.density)?;
    let quota = parse_quota(&args.quota)?;
    let header = json!({
        "n": args.n, "m": args.m, "c": args.c, "eps": args.eps,
        "quota": quota.parts(),
    });
    let outcome = kkm_core::measure::solve_square_partition(
        &density,
        args.c,
        args.n,
        args.m,
        &quota,
        args.eps,
        args.tol,
        args.budget,
    )?;
    match outcome {
        SquareOutcome::AllBelow { pair } => {
            let mut masses = Vec::with_capacity(args.n * args.m);
            for i in 0..args.n {
                for j in 0..args.m {
                    let (x_lo, x_hi) = pair.x_bounds(i);
                    let (y_lo, y_hi) = pair.y_bounds(j);
                    masses.push(density.rectangle_mass(x_lo, x_hi, y_lo, y_hi)?);
                }
            }
            let below = masses.iter().all(|&mass| mass < args.c);
            ensure_green("the partition", &[("every cell below c", below)])?;
            let mut cert = json!({
                "command": "square-partition",
                "outcome": "all_below",
                "x_cuts": pair.x_cuts(),
                "y_cuts": pair.y_cuts(),
                "verification": {
                    "cell_masses": masses,
                    "all_below_c": below,
                    "all_green": true,
                },
            });
            merge(&mut cert, header);
            Ok((cert, 0))
        }
        SquareOutcome::Quota {
            pair,
            assignment,
            min_mass,
            residual,
        } => {
            let counts_ok = assignment.counts(args.n) == quota.parts();
            let mut masses = Vec::with_capacity(args.m);
            for (j, &i) in assignment.map().iter().enumerate() {
                let (x_lo, x_hi) = pair.x_bounds(i);
                let (y_lo, y_hi) = pair.y_bounds(j);
                masses.push(density.rectangle_mass(x_lo, x_hi, y_lo, y_hi)?);
            }
            let recomputed_min = masses.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let mass_ok = recomputed_min >= args.c - args.eps - 1e-12;
            ensure_green(
                "the quota partition",
                &[
                    ("quota counts", counts_ok),
                    ("assigned masses reach c - eps", mass_ok),
                ],
            )?;
            let mut cert = json!({
                "command": "square-partition",
                "outcome": "quota",
                "x_cuts": pair.x_cuts(),
                "y_cuts": pair.y_cuts(),
                "assignment": assignment.map(),
                "min_mass": min_mass,
                "residual": residual,
                "verification": {
                    "quota_counts": counts_ok,
                    "assigned_masses": masses,
                    "recomputed_min_mass": recomputed_min,
                    "masses_reach_threshold": mass_ok,
                    "all_green": true,
                },
            });
            merge(&mut cert, header);
            Ok((cert, 1))
        }
    }
}

fn verify_cut(family: &BoxFamily, cut: &CutFamily, n: usize, m: usize) -> Result<Value> {
    let covered = cuts_family(family, cut);
    let budget_ok = cut.vertical().len() <= n && cut.horizontal().len() <= m;
    ensure_green(
        "the cut",
        &[
            ("every member meets a line", covered),
            ("line budget", budget_ok),
        ],
    )?;
    Ok(json!({
        "every_member_cut": covered,
        "line_budget_ok": budget_ok,
        "all_green": true,
    }))
}

fn cmd_cut_lines(args: CutLinesArgs) -> Result<(Value, u8)> {
    let family = input::load_family(&args.family)?;
    let header = json!({
        "n": args.n, "m": args.m,
        "open": family.kind() == SetKind::Open,
        "boxes": boxes_json(&family),
    });
    match find_cut(&family, args.n, args.m)? {
        CutOutcome::Cut(cut) => {
            let verification = verify_cut(&family, &cut, args.n, args.m)?;
            let mut cert = json!({
                "command": "cut-lines",
                "outcome": "cut",
                "vertical": cut.vertical(),
                "horizontal": cut.horizontal(),
                "verification": verification,
            });
            merge(&mut cert, header);
            Ok((cert, 0))
        }
        CutOutcome::NoneExists => {
            // The dichotomy owes a witness for every composition of m+1
            // into n+1 positive groups.
            let mut witnesses = Vec::new();
            for quota in QuotaVector::compositions(args.m + 1, args.n + 1) {
                let witness = find_witness(&family, args.n, args.m, &quota)?
                    .with_context(|| {
                        format!("no witness for quota {:?} despite no cut", quota.parts())
                    })?;
                witness.validate(&family)?;
                witnesses.push(json!({
                    "quota": quota.parts(),
                    "members": witness.members,
                    "groups": witness.groups.map(),
                }));
            }
            let count = witnesses.len();
            let mut cert = json!({
                "command": "cut-lines",
                "outcome": "none_exists",
                "witnesses": witnesses,
                "verification": {
                    "witnesses_for_every_quota": count,
                    "all_witnesses_valid": true,
                    "all_green": true,
                },
            });
            merge(&mut cert, header);
            Ok((cert, 1))
        }
    }
}

fn cmd_witness(args: WitnessArgs) -> Result<(Value, u8)> {
    let family = input::load_family(&args.family)?;
    let quota = parse_quota(&args.quota)?;
    let (unit, frame) = family.fit_to_unit(0.1)?;
    let header = json!({
        "n": args.n, "m": args.m, "quota": quota.parts(),
        "open": family.kind() == SetKind::Open,
        "boxes": boxes_json(&family),
    });
    match witness_from_kkm(&unit, args.n, args.m, &quota, args.tol, args.budget)? {
        WitnessOutcome::Witness(witness) => {
            witness.validate(&family)?;
            let mut cert = json!({
                "command": "witness",
                "outcome": "witness",
                "members": witness.members,
                "groups": witness.groups.map(),
                "verification": {
                    "disjointness_pattern": true,
                    "all_green": true,
                },
            });
            merge(&mut cert, header);
            Ok((cert, 1))
        }
        WitnessOutcome::CutPoint(pair) => {
            let vertical: Vec<f64> = pair
                .x_interior()
                .iter()
                .map(|&u| frame.from_unit_x(u))
                .collect();
            let horizontal: Vec<f64> = pair
                .y_interior()
                .iter()
                .map(|&u| frame.from_unit_y(u))
                .collect();
            let cut = CutFamily::new(vertical, horizontal);
            let verification = verify_cut(&family, &cut, args.n, args.m)?;
            let mut cert = json!({
                "command": "witness",
                "outcome": "cut",
                "vertical": cut.vertical(),
                "horizontal": cut.horizontal(),
                "verification": verification,
            });
            merge(&mut cert, header);
            Ok((cert, 0))
        }
    }
}

fn cmd_helly(args: HellyArgs) -> Result<(Value, u8)> {
    let family = input::load_family(&args.family)?;
    let report = helly_check(&family, args.n, args.m)?;
    if !report.theorem_respected {
        bail!("the premise holds but no joint cut was found; refusing the report");
    }
    let header = json!({
        "n": args.n, "m": args.m,
        "open": family.kind() == SetKind::Open,
        "boxes": boxes_json(&family),
    });
    if report.premise {
        let CutOutcome::Cut(cut) = report.conclusion else {
            bail!("inconsistent report: premise true without a cut conclusion");
        };
        let verification = verify_cut(&family, &cut, args.n, args.m)?;
        let mut cert = json!({
            "command": "helly-check",
            "outcome": "premise_holds",
            "vertical": cut.vertical(),
            "horizontal": cut.horizontal(),
            "theorem_respected": true,
            "verification": verification,
        });
        merge(&mut cert, header);
        return Ok((cert, 0));
    }
    let violating = report
        .violating
        .context("inconsistent report: failed premise without a violating subfamily")?;
    // The named subfamily really resists both single-axis budgets.
    let sub = family.subfamily(&violating);
    let no_horizontal = matches!(find_cut(&sub, 0, args.m)?, CutOutcome::NoneExists);
    let no_vertical = matches!(find_cut(&sub, args.n, 0)?, CutOutcome::NoneExists);
    ensure_green(
        "the violating subfamily",
        &[
            ("not cuttable by horizontals alone", no_horizontal),
            ("not cuttable by verticals alone", no_vertical),
        ],
    )?;
    let joint_cut = match report.conclusion {
        CutOutcome::Cut(ref cut) if cuts_family(&family, cut) => json!({
            "vertical": cut.vertical(),
            "horizontal": cut.horizontal(),
        }),
        _ => Value::Null,
    };
    let mut cert = json!({
        "command": "helly-check",
        "outcome": "premise_failed",
        "violating": violating,
        "joint_cut": joint_cut,
        "theorem_respected": true,
        "verification": {
            "violating_resists_horizontals": no_horizontal,
            "violating_resists_verticals": no_vertical,
            "all_green": true,
        },
    });
    merge(&mut cert, header);
    Ok((cert, 1))
}

fn cmd_oracle(args: OracleArgs) -> Result<(Value, u8)> {
    let source = ScoreSource::parse(&args.scores, args.n, args.m)?;
    let quota = parse_quota(&args.quota)?;
    let (n, m) = source.dims();
    let field = product_field(&source)?;
    let header = json!({
        "n": n, "m": m, "quota": quota.parts(), "resolution": args.resolution,
    });
    match oracle_solve(field.as_ref(), &quota, args.resolution)? {
        OracleOutcome::Found {
            point,
            assignment,
            min_score,
        } => {
            let counts_ok = assignment.counts(n) == quota.parts();
            let scores: Vec<f64> = assignment
                .map()
                .iter()
                .enumerate()
                .map(|(j, &i)| field.eval_point(&[i, j], &point))
                .collect();
            let positive = scores.iter().all(|&s| s > 0.0);
            let feasible = oracle_sigma_feasible(field.as_ref(), &assignment, args.resolution)?;
            ensure_green(
                "the oracle assignment",
                &[
                    ("quota counts", counts_ok),
                    ("assigned scores positive", positive),
                    ("independent feasibility", feasible),
                ],
            )?;
            let mut cert = json!({
                "command": "oracle",
                "outcome": "found",
                "point": point_json(&point),
                "assignment": assignment.map(),
                "min_score": min_score,
                "verification": {
                    "quota_counts": counts_ok,
                    "assigned_scores": scores,
                    "assigned_scores_positive": positive,
                    "sigma_feasible": feasible,
                    "all_green": true,
                },
            });
            merge(&mut cert, header);
            Ok((cert, 0))
        }
        OracleOutcome::NoneFound => {
            let mut cert = json!({
                "command": "oracle",
                "outcome": "none_found",
                "verification": {
                    "exhaustive_over_lattice": true,
                    "all_green": true,
                },
            });
            merge(&mut cert, header);
            Ok((cert, 1))
        }
    }
}

/// Flattens a partition or cut certificate into CSV rows for plotting:
/// `xcut,k,pos` / `ycut,k,pos` for partitions, `box,k,x_lo,x_hi,y_lo,y_hi`
/// plus `vline,k,x` / `hline,k,y` for cuts. Positions round-trip exactly.
pub fn emit_plot_data(cert: &Value) -> Result<String> {
    let command = cert["command"].as_str().unwrap_or_default();
    let mut rows = Vec::new();
    match command {
        "square-partition" => {
            let x = float_array(&cert["x_cuts"])?;
            let y = float_array(&cert["y_cuts"])?;
            for (k, v) in x[1..x.len() - 1].iter().enumerate() {
                rows.push(format!("xcut,{k},{v}"));
            }
            for (k, v) in y[1..y.len() - 1].iter().enumerate() {
                rows.push(format!("ycut,{k},{v}"));
            }
        }
        "cut-lines" => {
            let boxes = cert["boxes"]
                .as_array()
                .context("certificate has no boxes")?;
            for (k, b) in boxes.iter().enumerate() {
                let b = float_array(b)?;
                rows.push(format!("box,{k},{},{},{},{}", b[0], b[1], b[2], b[3]));
            }
            if cert["outcome"] == "cut" {
                for (k, v) in float_array(&cert["vertical"])?.iter().enumerate() {
                    rows.push(format!("vline,{k},{v}"));
                }
                for (k, v) in float_array(&cert["horizontal"])?.iter().enumerate() {
                    rows.push(format!("hline,{k},{v}"));
                }
            }
        }
        other => bail!(
            "unsupported certificate: plot data exists only for square-partition \
             and cut-lines, not {other}"
        ),
    }
    Ok(rows.join("\n") + "\n")
}

fn float_array(value: &Value) -> Result<Vec<f64>> {
    value
        .as_array()
        .and_then(|a| a.iter().map(|v| v.as_f64()).collect::<Option<Vec<_>>>())
        .context("expected an array of numbers")
}
