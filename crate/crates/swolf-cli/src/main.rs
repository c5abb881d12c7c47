//! Command-line front end: load a source (or mixture) from JSON, run the
//! analyses, and emit plot-ready CSV/JSON with reproducible metadata.
//!
//! Exit codes: 0 success, 2 input error, 3 budget error, 4 degenerate
//! source.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{emit, num, render_csv, render_json, source_hash, Field, Meta};
use swolf::bounds::{comparison_table, TableSpec};
use swolf::gaussian::GaussianError;
use swolf::region::{
    boundary_curve, classify, finite_n_boundary, first_order_region, mixed_membership,
    mixed_phi_lambda, sw_boundary_anchors, Anchor, BoundaryCase, Corner, RegionError, RegionQuery,
    RegionVerdict, SecondOrderPoint, Side,
};
use swolf::simulator::{ensemble_error, CodeRedraw, EmptyBinPolicy, EnsembleConfig, SimError};
use swolf::source_model::{JointPmf, MixedSource, SourceError, SourceStats};
use swolf::spectrum::{
    achievability_bound, convergence_report, converse_bound, mc_fn, SpectrumError,
};
use swolf::units;

const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl ToString) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }

    fn budget(message: impl ToString) -> Self {
        Self {
            code: EXIT_BUDGET,
            message: message.to_string(),
        }
    }

    fn degenerate(message: impl ToString) -> Self {
        Self {
            code: EXIT_DEGENERATE,
            message: message.to_string(),
        }
    }
}

impl From<SourceError> for CliError {
    fn from(e: SourceError) -> Self {
        CliError::input(e)
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match &e {
            RegionError::DegenerateSigma
            | RegionError::DegenerateComponentSigma(_)
            | RegionError::Gaussian(GaussianError::SingularCovariance) => CliError::degenerate(e),
            _ => CliError::input(e),
        }
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::BudgetExceeded(_) => CliError::budget(e),
            SpectrumError::Region(r) => r.into(),
            SpectrumError::InvalidParameter(_) => CliError::input(e),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::BudgetExceeded(_) => CliError::budget(e),
            _ => CliError::input(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Units {
    Bits,
    Nats,
}

impl Units {
    fn to_nats(self, x: f64) -> f64 {
        match self {
            Units::Bits => units::bits_to_nats(x),
            Units::Nats => x,
        }
    }

    fn rate(self, nats: f64) -> f64 {
        match self {
            Units::Bits => units::nats_to_bits(nats),
            Units::Nats => nats,
        }
    }

    fn var(self, nats2: f64) -> f64 {
        match self {
            Units::Bits => units::nats2_to_bits2(nats2),
            Units::Nats => nats2,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Units::Bits => "bits",
            Units::Nats => "nats",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RedrawArg {
    PerTrial,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    LexFirst,
    DeclareError,
}

#[derive(Parser, Debug)]
#[command(
    name = "swolf",
    version,
    about = "Slepian-Wolf rate regions: first/second-order analysis, error bounds, \
             exact finite-blocklength oracles and random-binning simulation"
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entropies, dispersion matrix and the first-order polygon of a source
    Analyze(AnalyzeArgs),
    /// Second-order region boundary (limit form, or mapped to rates at --n)
    Region(RegionArgs),
    /// Second-order error against the exponential bound (contour/sweep data)
    Bounds(BoundsArgs),
    /// Exact and Monte-Carlo finite-n tail probabilities across blocklengths
    Oracle(OracleArgs),
    /// Random-binning ensemble simulation with exact ML decoding
    Simulate(SimulateArgs),
    /// Second-order membership report for a finite mixed source
    Mixed(MixedArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Source file: {"p": [[...], ...]}
    #[arg(long)]
    input: PathBuf,
    /// Unit for all rate-like inputs and outputs
    #[arg(long, value_enum, default_value = "bits")]
    units: Units,
    /// Output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Emit JSON instead of the text report
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Args, Debug)]
struct RegionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target error probability in [0, 1)
    #[arg(long)]
    epsilon: f64,
    /// Anchor: `corner1 | corner2 | caseII:<lambda> | caseIII-a[:<offset>]
    /// | caseIII-b[:<offset>] | <a1>,<a2>` (rates in --units)
    #[arg(long, default_value = "corner1")]
    anchor: String,
    /// Map the boundary to rate space at this blocklength (whole-polygon
    /// sweep; --anchor is ignored)
    #[arg(long)]
    n: Option<u64>,
    /// Grid lo:hi:count over the case's free coordinate (in --units);
    /// case-aware default when omitted
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Corner-arc resolution for --n sweeps
    #[arg(long, default_value_t = 17)]
    corner_points: usize,
    /// Interior sum-edge anchors for --n sweeps
    #[arg(long, default_value_t = 9)]
    case2_anchors: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "corner1")]
    anchor: String,
    /// L1 grid lo:hi:count (in --units)
    #[arg(long, default_value = "0:2:21", allow_hyphen_values = true)]
    grid: String,
    /// L2 grid for rectangular contour data (defaults to --grid)
    #[arg(long, allow_hyphen_values = true)]
    grid2: Option<String>,
    /// Sweep L1 = L2 along the diagonal instead of a rectangle
    #[arg(long)]
    diagonal: bool,
    /// 1-D sweep of the case's own coordinate instead of a rectangle
    #[arg(long)]
    sweep: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value = "corner1")]
    anchor: String,
    /// Second-order rate L1 (in --units)
    #[arg(long, allow_negative_numbers = true)]
    l1: f64,
    /// Second-order rate L2 (in --units)
    #[arg(long, allow_negative_numbers = true)]
    l2: f64,
    /// Comma-separated blocklengths
    #[arg(long, default_value = "100,400,1600")]
    n_list: String,
    /// Add Monte-Carlo columns with this many samples per blocklength
    #[arg(long)]
    mc_samples: Option<u64>,
    /// Seed for the Monte-Carlo columns
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    n: u32,
    /// First encoder's bin count
    #[arg(long, alias = "M1")]
    m1: u32,
    /// Second encoder's bin count
    #[arg(long, alias = "M2")]
    m2: u32,
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "per-trial")]
    redraw: RedrawArg,
    /// Decoder behavior for bin pairs with no preimage
    #[arg(long, value_enum, default_value = "lex-first")]
    policy: PolicyArg,
    /// Slack for the reported achievability/converse bounds (nats)
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Worker threads (any value yields the identical report)
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct MixedArgs {
    /// Mixture file: {"components": [{"w": ..., "p": [[...]]}, ...]}
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "bits")]
    units: Units,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    epsilon: f64,
    /// Anchor, resolved against --component when symbolic
    #[arg(long, default_value = "corner1")]
    anchor: String,
    /// 1-based component index resolving symbolic anchors
    #[arg(long, default_value_t = 1)]
    component: usize,
    #[arg(long, allow_negative_numbers = true)]
    l1: f64,
    #[arg(long, allow_negative_numbers = true)]
    l2: f64,
}

fn main() -> ExitCode {
    let cli = CliArgs::parse();
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Region(a) => cmd_region(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Mixed(a) => cmd_mixed(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn load_pmf(path: &Path) -> Result<JointPmf, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(JointPmf::from_json_str(&text)?)
}

fn load_mixture(path: &Path) -> Result<MixedSource, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(MixedSource::from_json_str(&text)?)
}

/// Parses the anchor grammar; rates in `units`.
fn parse_anchor(spec: &str, units: Units) -> Result<Anchor, CliError> {
    let bad = || CliError::input(format!("unrecognized anchor spec '{spec}'"));
    if let Some((a1, a2)) = spec.split_once(',') {
        let a1: f64 = a1.trim().parse().map_err(|_| bad())?;
        let a2: f64 = a2.trim().parse().map_err(|_| bad())?;
        return Ok(Anchor::Explicit {
            a1: units.to_nats(a1),
            a2: units.to_nats(a2),
        });
    }
    let (head, tail) = match spec.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (spec, None),
    };
    let parse_tail = |default: f64| -> Result<f64, CliError> {
        match tail {
            Some(t) => t.trim().parse().map_err(|_| bad()),
            None => Ok(default),
        }
    };
    match head {
        "corner1" => Ok(Anchor::Corner1),
        "corner2" => Ok(Anchor::Corner2),
        "caseII" => {
            let lambda = parse_tail(0.5)?;
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(CliError::input("caseII lambda must lie in (0, 1)"));
            }
            Ok(Anchor::CaseII { lambda })
        }
        "caseIII-a" => Ok(Anchor::CaseIIIFirst {
            offset: units.to_nats(parse_tail(0.1)?),
        }),
        "caseIII-b" => Ok(Anchor::CaseIIISecond {
            offset: units.to_nats(parse_tail(0.1)?),
        }),
        _ => Err(bad()),
    }
}

/// Parses `lo:hi:count` into an inclusive linear grid, converted to nats.
fn parse_grid(spec: &str, units: Units) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::input(format!("grid must be lo:hi:count, got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count < 1 || hi < lo {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![units.to_nats(lo)]);
    }
    Ok((0..count)
        .map(|i| units.to_nats(lo + (hi - lo) * i as f64 / (count - 1) as f64))
        .collect())
}

fn case_label(case: &BoundaryCase) -> String {
    match case {
        BoundaryCase::Interior => "interior".into(),
        BoundaryCase::Exterior => "exterior".into(),
        BoundaryCase::CornerI {
            corner: Corner::First,
        } => "corner1".into(),
        BoundaryCase::CornerI {
            corner: Corner::Second,
        } => "corner2".into(),
        BoundaryCase::NonCornerII { lambda } => format!("caseII(lambda={lambda:.6})"),
        BoundaryCase::FullSideIII { side: Side::First } => "caseIII-a".into(),
        BoundaryCase::FullSideIII { side: Side::Second } => "caseIII-b".into(),
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let pmf = load_pmf(&args.common.input)?;
    let stats = pmf.stats();
    let u = args.common.units;
    let poly = first_order_region(&stats);
    let mut meta = Meta::new(&format!("{args:?}"));
    meta.push("source_hash", format!("{:016x}", source_hash(pmf.cells())));
    meta.push("units", u.label());
    let content = match args.format {
        ReportFormat::Json => {
            let sigma: Vec<Vec<f64>> = (0..3)
                .map(|i| (0..3).map(|j| u.var(stats.sigma[i][j])).collect())
                .collect();
            render_json(
                &meta,
                serde_json::json!({
                    "alphabet": { "x1": pmf.rows(), "x2": pmf.cols() },
                    "entropies": {
                        "h1_given_2": u.rate(stats.h1_given_2),
                        "h2_given_1": u.rate(stats.h2_given_1),
                        "h12": u.rate(stats.h12),
                        "h1": u.rate(stats.h1),
                        "h2": u.rate(stats.h2),
                        "mutual_info": u.rate(stats.mutual_info),
                    },
                    "dispersion": sigma,
                    "sigma_positive_definite": stats.sigma_positive_definite,
                    "polygon": {
                        "r1_min": u.rate(poly.r1_min),
                        "r2_min": u.rate(poly.r2_min),
                        "sum_min": u.rate(poly.sum_min),
                        "corner1": [u.rate(poly.corner1.0), u.rate(poly.corner1.1)],
                        "corner2": [u.rate(poly.corner2.0), u.rate(poly.corner2.1)],
                    },
                }),
            )
        }
        ReportFormat::Text => {
            let mut s = String::new();
            for (k, v) in meta.pairs() {
                s.push_str(&format!("# {k}: {v}\n"));
            }
            s.push_str(&format!("alphabet: {} x {}\n", pmf.rows(), pmf.cols()));
            s.push_str(&format!(
                "H(X1|X2) = {:.6} {u}\nH(X2|X1) = {:.6} {u}\nH(X1X2)  = {:.6} {u}\n\
                 H(X1)    = {:.6} {u}\nH(X2)    = {:.6} {u}\nI(X1;X2) = {:.6} {u}\n",
                u.rate(stats.h1_given_2),
                u.rate(stats.h2_given_1),
                u.rate(stats.h12),
                u.rate(stats.h1),
                u.rate(stats.h2),
                u.rate(stats.mutual_info),
                u = u.label(),
            ));
            s.push_str(&format!("dispersion matrix ({}^2):\n", u.label()));
            for i in 0..3 {
                let row: Vec<String> = (0..3)
                    .map(|j| format!("{:.6}", u.var(stats.sigma[i][j])))
                    .collect();
                s.push_str(&format!("  [{}]\n", row.join(", ")));
            }
            s.push_str(&format!(
                "sigma positive definite: {}\n",
                if stats.sigma_positive_definite {
                    "yes"
                } else {
                    "no (degenerate)"
                }
            ));
            s.push_str(&format!(
                "polygon: R1 >= {:.6}, R2 >= {:.6}, R1+R2 >= {:.6}\n\
                 corners: ({:.6}, {:.6}) and ({:.6}, {:.6})\n",
                u.rate(poly.r1_min),
                u.rate(poly.r2_min),
                u.rate(poly.sum_min),
                u.rate(poly.corner1.0),
                u.rate(poly.corner1.1),
                u.rate(poly.corner2.0),
                u.rate(poly.corner2.1),
            ));
            s
        }
    };
    emit(args.common.output.as_deref(), &content)?;
    Ok(())
}

/// Case-aware default grid over the free coordinate of a boundary curve.
fn default_curve_grid(stats: &SourceStats, q: &RegionQuery) -> Result<Vec<f64>, CliError> {
    let case = classify(stats, q)?;
    Ok(match case {
        BoundaryCase::CornerI { corner } => {
            let pin_var = match (corner, stats.mutual_info <= swolf::region::TOL_SNAP) {
                (Corner::Second, false) => stats.var(1),
                _ => stats.var(0),
            };
            if pin_var <= swolf::source_model::POSITIVE_DEFINITE_EIGENVALUE_MIN {
                return Err(RegionError::DegenerateSigma.into());
            }
            let sigma = pin_var.sqrt();
            let asym = swolf::gaussian::phi1_inv(1.0 - q.epsilon, pin_var)
                .map_err(|e| CliError::from(RegionError::from(e)))?;
            (0..25)
                .map(|i| {
                    let f = i as f64 / 24.0;
                    asym + 0.05 * sigma * (8.0 / 0.05f64).powf(f)
                })
                .collect()
        }
        _ => {
            let sigma = stats.var(2).sqrt().max(stats.var(0).sqrt());
            (0..25)
                .map(|i| -2.0 * sigma + 4.0 * sigma * i as f64 / 24.0)
                .collect()
        }
    })
}

fn cmd_region(args: RegionArgs) -> Result<(), CliError> {
    let pmf = load_pmf(&args.common.input)?;
    let stats = pmf.stats();
    let u = args.common.units;
    let anchor = parse_anchor(&args.anchor, u)?;
    let (a1, a2) = anchor.resolve(&stats);
    let q = RegionQuery::new(a1, a2, args.epsilon)?;
    let mut meta = Meta::new(&format!("{args:?}"));
    meta.push("source_hash", format!("{:016x}", source_hash(pmf.cells())));
    meta.push("units", u.label());
    meta.push("epsilon", num(args.epsilon));

    if let Some(n) = args.n {
        // whole-boundary sweep mapped to rate space
        let anchors = sw_boundary_anchors(&stats, args.case2_anchors, 0.1);
        let pts = finite_n_boundary(&stats, args.epsilon, n, &anchors, args.corner_points)?;
        meta.push("n", n);
        let header = ["anchor1", "anchor2", "case", "L1", "L2", "R1", "R2"];
        let rows: Vec<Vec<Field>> = pts
            .iter()
            .map(|p| {
                vec![
                    Field::F(u.rate(p.anchor.0)),
                    Field::F(u.rate(p.anchor.1)),
                    Field::S(case_label(&p.case)),
                    Field::F(u.rate(p.l.l1)),
                    Field::F(u.rate(p.l.l2)),
                    Field::F(u.rate(p.rate.0)),
                    Field::F(u.rate(p.rate.1)),
                ]
            })
            .collect();
        let content = match args.format {
            Format::Csv => render_csv(&meta, &header, &rows),
            Format::Json => render_json(
                &meta,
                serde_json::json!(pts
                    .iter()
                    .map(|p| serde_json::json!({
                        "anchor": [u.rate(p.anchor.0), u.rate(p.anchor.1)],
                        "case": case_label(&p.case),
                        "l": [u.rate(p.l.l1), u.rate(p.l.l2)],
                        "rate": [u.rate(p.rate.0), u.rate(p.rate.1)],
                    }))
                    .collect::<Vec<_>>()),
            ),
        };
        emit(args.common.output.as_deref(), &content)?;
        return Ok(());
    }

    let case = classify(&stats, &q)?;
    meta.push("anchor", format!("{},{}", num(u.rate(a1)), num(u.rate(a2))));
    meta.push("case", case_label(&case));
    match case {
        BoundaryCase::Interior => {
            meta.push(
                "note",
                "anchor interior to the polygon: every (L1, L2) is achievable",
            );
            let content = render_csv(&meta, &["L1", "L2"], &[]);
            emit(args.common.output.as_deref(), &content)?;
            eprintln!("anchor is interior: the second-order region is the whole plane");
            return Ok(());
        }
        BoundaryCase::Exterior => {
            meta.push("note", "anchor outside the polygon: the region is empty");
            let content = render_csv(&meta, &["L1", "L2"], &[]);
            emit(args.common.output.as_deref(), &content)?;
            eprintln!("anchor is exterior: the second-order region is empty");
            return Ok(());
        }
        _ => {}
    }
    let grid = match &args.grid {
        Some(g) => parse_grid(g, u)?,
        None => default_curve_grid(&stats, &q)?,
    };
    let pts = boundary_curve(&stats, &q, &grid)?;
    let rows: Vec<Vec<Field>> = pts
        .iter()
        .map(|p| vec![Field::F(u.rate(p.l1)), Field::F(u.rate(p.l2))])
        .collect();
    let content = match args.format {
        Format::Csv => render_csv(&meta, &["L1", "L2"], &rows),
        Format::Json => render_json(
            &meta,
            serde_json::json!(pts
                .iter()
                .map(|p| vec![u.rate(p.l1), u.rate(p.l2)])
                .collect::<Vec<_>>()),
        ),
    };
    emit(args.common.output.as_deref(), &content)?;
    Ok(())
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let pmf = load_pmf(&args.common.input)?;
    let stats = pmf.stats();
    let u = args.common.units;
    let anchor = parse_anchor(&args.anchor, u)?;
    let (a1, a2) = anchor.resolve(&stats);
    // epsilon plays no role in the comparison; any boundary query works
    let q = RegionQuery::new(a1, a2, 0.5)?;
    let case = classify(&stats, &q)?;
    let grid = parse_grid(&args.grid, u)?;
    let spec = if args.diagonal {
        TableSpec::Diagonal { values: grid }
    } else if args.sweep {
        TableSpec::Sweep { values: grid }
    } else {
        let grid2 = match &args.grid2 {
            Some(g) => parse_grid(g, u)?,
            None => parse_grid(&args.grid, u)?,
        };
        TableSpec::Grid {
            l1: grid,
            l2: grid2,
        }
    };
    let rows = comparison_table(&stats, &q, &spec)?;
    let mut meta = Meta::new(&format!("{args:?}"));
    meta.push("source_hash", format!("{:016x}", source_hash(pmf.cells())));
    meta.push("units", u.label());
    meta.push("case", case_label(&case));
    let csv_rows: Vec<Vec<Field>> = rows
        .iter()
        .map(|r| {
            vec![
                Field::F(u.rate(r.l1)),
                Field::F(u.rate(r.l2)),
                Field::F(r.second_order_error),
                match r.koshelev_error {
                    Some(k) => Field::F(k),
                    None => Field::Empty,
                },
            ]
        })
        .collect();
    let content = match args.format {
        Format::Csv => render_csv(
            &meta,
            &["L1", "L2", "err_second_order", "err_koshelev"],
            &csv_rows,
        ),
        Format::Json => render_json(
            &meta,
            serde_json::json!(rows
                .iter()
                .map(|r| serde_json::json!({
                    "l1": u.rate(r.l1),
                    "l2": u.rate(r.l2),
                    "err_second_order": r.second_order_error,
                    "err_koshelev": r.koshelev_error,
                }))
                .collect::<Vec<_>>()),
        ),
    };
    emit(args.common.output.as_deref(), &content)?;
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let pmf = load_pmf(&args.common.input)?;
    let stats = pmf.stats();
    let u = args.common.units;
    let anchor = parse_anchor(&args.anchor, u)?;
    let (a1, a2) = anchor.resolve(&stats);
    let q = RegionQuery::new(a1, a2, args.epsilon)?;
    let pt = SecondOrderPoint::new(u.to_nats(args.l1), u.to_nats(args.l2))?;
    let n_list: Vec<u64> = args
        .n_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::input("bad --n-list entry"))
        })
        .collect::<Result<_, _>>()?;
    let rows = convergence_report(&pmf, &q, &pt, &n_list)?;
    let mut meta = Meta::new(&format!("{args:?}"));
    meta.push("source_hash", format!("{:016x}", source_hash(pmf.cells())));
    meta.push("units", u.label());
    meta.push("epsilon", num(args.epsilon));
    meta.push("l1", num(args.l1));
    meta.push("l2", num(args.l2));
    meta.push("seed", args.seed);
    let mc: Vec<Option<swolf::spectrum::McEstimate>> = match args.mc_samples {
        Some(samples) => rows
            .iter()
            .map(|r| mc_fn(&pmf, r.n, &q, &pt, samples, args.seed).map(Some))
            .collect::<Result<_, _>>()?,
        None => rows.iter().map(|_| None).collect(),
    };
    let header: Vec<&str> = if args.mc_samples.is_some() {
        vec![
            "n",
            "exact",
            "gaussian",
            "gap",
            "mc_estimate",
            "mc_std_error",
        ]
    } else {
        vec!["n", "exact", "gaussian", "gap"]
    };
    let csv_rows: Vec<Vec<Field>> = rows
        .iter()
        .zip(&mc)
        .map(|(r, m)| {
            let mut row = vec![
                Field::I(r.n),
                Field::F(r.exact),
                Field::F(r.gaussian),
                Field::F(r.gap),
            ];
            if let Some(m) = m {
                row.push(Field::F(m.estimate));
                row.push(Field::F(m.std_error));
            }
            row
        })
        .collect();
    let content = match args.format {
        Format::Csv => render_csv(&meta, &header, &csv_rows),
        Format::Json => render_json(
            &meta,
            serde_json::json!(rows
                .iter()
                .zip(&mc)
                .map(|(r, m)| serde_json::json!({
                    "n": r.n,
                    "exact": r.exact,
                    "gaussian": r.gaussian,
                    "gap": r.gap,
                    "mc": m.map(|m| serde_json::json!({
                        "estimate": m.estimate,
                        "std_error": m.std_error,
                        "samples": m.samples,
                    })),
                }))
                .collect::<Vec<_>>()),
        ),
    };
    emit(args.common.output.as_deref(), &content)?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let pmf = load_pmf(&args.common.input)?;
    let mut cfg = EnsembleConfig::new(
        args.n,
        args.m1,
        args.m2,
        args.trials,
        match args.redraw {
            RedrawArg::PerTrial => CodeRedraw::PerTrial,
            RedrawArg::Fixed => CodeRedraw::Fixed,
        },
        args.seed,
    );
    cfg.policy = match args.policy {
        PolicyArg::LexFirst => EmptyBinPolicy::LexicographicFirst,
        PolicyArg::DeclareError => EmptyBinPolicy::DeclareError,
    };
    cfg.threads = args.threads;
    let report = ensemble_error(&pmf, &cfg)?;
    let mut meta = Meta::new(&format!("{args:?}"));
    meta.push("source_hash", format!("{:016x}", source_hash(pmf.cells())));
    meta.push("seed", args.seed);
    let up = achievability_bound(
        &pmf,
        args.n as u64,
        args.m1 as f64,
        args.m2 as f64,
        args.gamma,
    )?;
    let lo = converse_bound(
        &pmf,
        args.n as u64,
        args.m1 as f64,
        args.m2 as f64,
        args.gamma,
    )?;
    let bounds = serde_json::json!({
        "gamma": args.gamma,
        "achievability_upper": { "value": up.value, "raw": up.raw, "clamped": up.clamped() },
        "converse_lower": { "value": lo.value, "raw": lo.raw, "clamped": lo.clamped() },
    });
    let content = render_json(
        &meta,
        serde_json::json!({
            "report": report,
            "bounds": bounds,
        }),
    );
    emit(args.common.output.as_deref(), &content)?;
    Ok(())
}

fn cmd_mixed(args: MixedArgs) -> Result<(), CliError> {
    let mix = load_mixture(&args.input)?;
    let u = args.units;
    let anchor = parse_anchor(&args.anchor, u)?;
    if args.component == 0 || args.component > mix.len() {
        return Err(CliError::input(format!(
            "component index {} out of range (1..={})",
            args.component,
            mix.len()
        )));
    }
    let comp_stats = mix.components()[args.component - 1].1.stats();
    let (a1, a2) = anchor.resolve(&comp_stats);
    let q = RegionQuery::new(a1, a2, args.epsilon)?;
    let pt = SecondOrderPoint::new(u.to_nats(args.l1), u.to_nats(args.l2))?;
    let verdict = mixed_membership(&mix, &q, &pt)?;
    let phi_lambda = mixed_phi_lambda(&mix, &q, &pt)?;
    let mut meta = Meta::new(&format!("{args:?}"));
    let all_cells: Vec<f64> = mix
        .components()
        .iter()
        .flat_map(|(w, p)| std::iter::once(*w).chain(p.cells().iter().copied()))
        .collect();
    meta.push("source_hash", format!("{:016x}", source_hash(&all_cells)));
    meta.push("units", u.label());
    meta.push("epsilon", num(args.epsilon));
    let verdict_label = match verdict {
        RegionVerdict::Member { .. } => "member",
        RegionVerdict::NonMember { .. } => "non-member",
        RegionVerdict::AllOfPlane => "all-of-plane",
        RegionVerdict::Empty => "empty",
    };
    let content = render_json(
        &meta,
        serde_json::json!({
            "anchor": [u.rate(a1), u.rate(a2)],
            "l": [args.l1, args.l2],
            "verdict": verdict_label,
            "probability": verdict.probability(),
            "phi_lambda": phi_lambda,
            "components": mix.len(),
        }),
    );
    emit(args.output.as_deref(), &content)?;
    Ok(())
}
