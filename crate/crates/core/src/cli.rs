//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::aircraft::{stall_analysis, trim_sweep, AircraftParams, Model};
use crate::jet::{self, DiffSystem, JetPoint};
use crate::linalg::DEFAULT_RANK_TOL;
use crate::oreg::{o_reg, RegOptions};
use crate::osystem::{classify_block_triangular, o_test, OTestResult};
use crate::planner::{
    flat_parametrize, load_scenario, planner_residuals, simulate_closed_loop, write_outputs, PlannedTrajectory,
    SimResult,
};
use crate::report::{fmt_num, to_json};
use crate::tropical::{canon_to_cover, minimal_canon, tropical_det, ExtInt, ExtOrderMatrix};

/// Environment variable overriding the default rank tolerance.
pub const TOL_ENV: &str = "FLATCHAIN_TOL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "flatchain", version, about = "Order matrices, flat outputs and flatness-based aircraft planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tropical determinant of an order matrix with an optimal assignment
    Tropical { file: PathBuf },
    /// Minimal canon, Jacobi cover, witness and tropical determinant
    Canon { file: PathBuf },
    /// Search a variable set with saddle Jacobi number 0 (matrix or .dsys file)
    Otest { file: PathBuf },
    /// Search a regular set at a point of a .dsys system
    Oreg(OregArgs),
    /// Print the order matrix of a .dsys system
    Parse { file: PathBuf },
    /// Aircraft trim, planning and simulation
    #[command(subcommand)]
    Aircraft(AircraftCommand),
    /// Shipped fixture corpus
    #[command(subcommand)]
    Fixtures(FixtureCommand),
}

#[derive(Debug, Args)]
struct OregArgs {
    file: PathBuf,
    /// Jet point as a JSON object, e.g. '{"x5":0,"x6":1}'; missing jets are 0
    #[arg(long)]
    point: Option<String>,
    /// Relative rank tolerance [default: $FLATCHAIN_TOL or 1e-9]
    #[arg(long)]
    tol: Option<f64>,
    /// Exact rational elimination
    #[arg(long)]
    exact: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Full,
    Simplified,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Full => Model::Full,
            ModelArg::Simplified => Model::Simplified,
        }
    }
}

#[derive(Debug, Subcommand)]
enum AircraftCommand {
    /// Level trim sweep over alpha and the minimum-speed record
    Stall {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        model: ModelArg,
        /// Total thrust limit in newtons, overriding the parameter file
        #[arg(long)]
        fmax: Option<f64>,
        /// Directory receiving trim.csv and stall.json
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flat parametrization of a scenario's reference
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-loop simulation of a scenario
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum FixtureCommand {
    /// List the shipped fixtures
    List,
    /// Print the isoperimetric order matrix `a[i][j] = e[i] + e[j]`
    Iso {
        #[arg(required = true, num_args = 1..)]
        e: Vec<i64>,
    },
}

/// Name, path relative to the crate root, description.
pub const FIXTURES: &[(&str, &str, &str)] = &[
    ("ex_canon", "fixtures/ex_canon.mat", "5x5 matrix with minimal canon (1,0,4,2,3) and determinant 30"),
    ("ex_rmax", "fixtures/ex_rmax.mat", "zero pattern with maximal row cover {1,2,3}"),
    ("ex_otest", "fixtures/ex_otest.mat", "5x8 matrix with order-0 set {1,2,4,5,7}"),
    ("ex_otest_a41", "fixtures/ex_otest_a41.mat", "ex_otest with a41 = -inf; the test fails"),
    ("ex_jac", "fixtures/ex_jac.dsys", "three equations with cover (0,1,2),(0,1,-1) and bound 3"),
    ("ex_jac_matrix", "fixtures/ex_jac.mat", "order matrix of ex_jac"),
    ("ex_nnr", "fixtures/ex_nnr.dsys", "regular set depends on the point (x5, x6)"),
    ("ex_pq3", "fixtures/ex_pq3.dsys", "p-q system, s = 3"),
    ("ex_pq4", "fixtures/ex_pq4.dsys", "p-q system, s = 4"),
    ("ex_pq5", "fixtures/ex_pq5.dsys", "p-q system, s = 5"),
    ("goursat6", "fixtures/goursat6.dsys", "two-input chained form, n = 6"),
    ("goursat6_matrix", "fixtures/goursat6.mat", "order matrix of goursat6"),
    ("silveira5", "fixtures/silveira5.dsys", "affine chained form, n = 5"),
    ("silveira5_matrix", "fixtures/silveira5.mat", "order matrix of silveira5"),
    ("mchained_2x3", "fixtures/mchained_2x3.dsys", "multi-input chained form, m = 2, k = 3"),
    ("mchained_2x3_matrix", "fixtures/mchained_2x3.mat", "order matrix of mchained_2x3"),
    ("aircraft12", "fixtures/aircraft12_printed.mat", "12-state aircraft order matrix as published"),
    ("aircraft9", "fixtures/aircraft9_printed.mat", "9-state aircraft order matrix as published"),
    ("glider_small", "fixtures/aircraft/glider_small.json", "synthetic 3 kg airframe with an interior stall"),
    ("heavy_slow", "fixtures/aircraft/heavy_slow.json", "synthetic 100 kg airframe"),
    ("helix_offset", "fixtures/scenarios/helix_offset.json", "helix with a 50 m initial offset"),
    ("helix_engine_out", "fixtures/scenarios/helix_engine_out.json", "helix with offset and one engine out"),
    ("helix_wind", "fixtures/scenarios/helix_wind.json", "helix under a 222.4 N, 0.1 Hz wind force"),
];

/// Failure kinds mapped to exit codes.
#[derive(Debug)]
enum Fail {
    Usage(String),
    Domain(String),
}

type Outcome = Result<i32, Fail>;

fn usage(e: impl std::fmt::Display) -> Fail {
    Fail::Usage(e.to_string())
}

fn domain(e: impl std::fmt::Display) -> Fail {
    Fail::Domain(e.to_string())
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Fail::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nRun `flatchain --help` for the command grammar.");
            EXIT_USAGE
        }
        Err(Fail::Domain(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILED
        }
    }
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<(), Fail> {
    let text = to_json(value).map_err(domain)?;
    out.write_all(text.as_bytes()).map_err(domain)
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Result<ExtOrderMatrix, Fail> {
    ExtOrderMatrix::parse(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_system(path: &Path) -> Result<DiffSystem, Fail> {
    jet::parse_system(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn is_dsys(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "dsys")
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|k| k + 1).collect()
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Tropical { file } => {
            let a = read_matrix(&file)?;
            let canon = minimal_canon(&a).map_err(domain)?;
            emit(
                out,
                &json!({
                    "rows": a.rows(),
                    "cols": a.cols(),
                    "det": tropical_det(&a),
                    "assignment": canon.witness.as_deref().map(one_based),
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Canon { file } => {
            let a = read_matrix(&file)?;
            let canon = minimal_canon(&a).map_err(domain)?;
            let cover = canon_to_cover(&a, &canon);
            emit(
                out,
                &json!({
                    "lambda": canon.l,
                    "alpha": cover.mu,
                    "beta": cover.nu,
                    "witness": canon.witness.as_deref().map(one_based),
                    "det": tropical_det(&a),
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Otest { file } => otest(&file, out),
        Command::Oreg(args) => oreg(args, out),
        Command::Parse { file } => {
            let sys = read_system(&file)?;
            let text = jet::order_matrix(&sys).to_text();
            out.write_all(text.as_bytes()).map_err(domain)?;
            Ok(EXIT_OK)
        }
        Command::Aircraft(cmd) => aircraft(cmd, out),
        Command::Fixtures(FixtureCommand::List) => {
            let root = Path::new(env!("CARGO_MANIFEST_DIR"));
            for (name, rel, what) in FIXTURES {
                writeln!(out, "{name}\t{}\t{what}", root.join(rel).display()).map_err(domain)?;
            }
            Ok(EXIT_OK)
        }
        Command::Fixtures(FixtureCommand::Iso { e }) => {
            let rows = e.iter().map(|&x| e.iter().map(|&y| ExtInt::Fin(x + y)).collect()).collect();
            let a = ExtOrderMatrix::from_rows(rows).map_err(domain)?;
            out.write_all(a.to_text().as_bytes()).map_err(domain)?;
            Ok(EXIT_OK)
        }
    }
}

fn status_code(found: bool) -> i32 {
    if found {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn otest(file: &Path, out: &mut dyn Write) -> Outcome {
    if !is_dsys(file) {
        let r = o_test(&read_matrix(file)?);
        let blocks: Vec<_> = r
            .blocks
            .iter()
            .map(|b| json!({"sigma": one_based(&b.sigma), "xi": one_based(&b.xi), "y": one_based(&b.y)}))
            .collect();
        emit(
            out,
            &json!({
                "status": r.status,
                "y": one_based(&r.y),
                "xi0": one_based(&r.xi0),
                "blocks": blocks,
                "depth": r.depth,
                "reason": r.reason,
            }),
        )?;
        return Ok(status_code(r.found()));
    }
    let sys = read_system(file)?;
    let r: OTestResult = o_test(&jet::order_matrix(&sys));
    let names = |cols: &[usize]| cols.iter().map(|&j| sys.names()[j].clone()).collect::<Vec<_>>();
    let labels = |rows: &[usize]| rows.iter().map(|&i| sys.labels()[i].clone()).collect::<Vec<_>>();
    let blocks: Vec<_> =
        r.blocks.iter().map(|b| json!({"sigma": labels(&b.sigma), "xi": names(&b.xi), "y": names(&b.y)})).collect();
    let classification = if r.found() { classify_block_triangular(&sys, &r.partition()).ok() } else { None };
    emit(
        out,
        &json!({
            "status": r.status,
            "y": names(&r.y),
            "xi0": names(&r.xi0),
            "blocks": blocks,
            "depth": r.depth,
            "reason": r.reason,
            "classification": classification,
        }),
    )?;
    Ok(status_code(r.found()))
}

fn tolerance(cli: Option<f64>) -> Result<f64, Fail> {
    let tol = match cli {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(s) => s.trim().parse().map_err(|_| usage(format!("{TOL_ENV}: not a number: `{s}`")))?,
            Err(_) => DEFAULT_RANK_TOL,
        },
    };
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(usage(format!("tolerance must be positive and finite, got {tol}")))
    }
}

fn oreg(args: OregArgs, out: &mut dyn Write) -> Outcome {
    let sys = read_system(&args.file)?;
    let tol = tolerance(args.tol)?;
    let point = match &args.point {
        Some(text) => {
            let v: serde_json::Value = serde_json::from_str(text).map_err(|e| usage(format!("--point: {e}")))?;
            JetPoint::from_json(&sys, &v).map_err(|e| usage(format!("--point: {e}")))?
        }
        None => JetPoint::new(),
    };
    let r = o_reg(&sys, &point, RegOptions { tol, exact: args.exact }).map_err(domain)?;
    let names = |cols: &[usize]| cols.iter().map(|&j| sys.names()[j].clone()).collect::<Vec<_>>();
    let labels = |rows: &[usize]| rows.iter().map(|&i| sys.labels()[i].clone()).collect::<Vec<_>>();
    let levels: Vec<_> = r
        .levels
        .iter()
        .map(|l| json!({"sigma": labels(&l.sigma), "y": names(&l.y), "seq_iterations": l.seq_iterations}))
        .collect();
    emit(
        out,
        &json!({
            "status": r.status,
            "y": names(&r.y),
            "levels": levels,
            "nabla": r.nabla,
            "depth": r.depth,
            "tol": tol,
            "exact": args.exact,
            "reason": r.reason,
        }),
    )?;
    Ok(status_code(r.found()))
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), Fail> {
    let io = |e: &dyn std::fmt::Display| domain(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(|e| io(&e))?;
    w.write_record(header).map_err(|e| io(&e))?;
    for r in rows {
        w.write_record(r.iter().map(|&x| fmt_num(x))).map_err(|e| io(&e))?;
    }
    w.flush().map_err(|e| io(&e))
}

fn aircraft(cmd: AircraftCommand, out: &mut dyn Write) -> Outcome {
    match cmd {
        AircraftCommand::Stall { params, model, fmax, out: dir } => {
            let mut prm = AircraftParams::load(&params).map_err(usage)?;
            if let Some(f) = fmax {
                if !(f > 0.0) {
                    return Err(usage("--fmax must be positive"));
                }
                prm.f_max = Some(f);
            }
            let model = Model::from(model);
            let record = stall_analysis(&prm, model).map_err(domain)?;
            let body = json!({"airframe": prm.name, "model": model, "f_max": prm.f_max, "stall": record});
            if let Some(dir) = dir {
                std::fs::create_dir_all(&dir).map_err(|e| domain(format!("{}: {e}", dir.display())))?;
                let sweep = trim_sweep(&prm, model);
                write_csv(
                    &dir.join("trim.csv"),
                    &["alpha", "V", "F", "delta_m"],
                    sweep.iter().flatten().map(|t| vec![t.alpha, t.v, t.f, t.delta_m]),
                )?;
                let text = to_json(&body).map_err(domain)?;
                std::fs::write(dir.join("stall.json"), text).map_err(|e| domain(format!("{}: {e}", dir.display())))?;
            }
            emit(out, &body)?;
            Ok(EXIT_OK)
        }
        AircraftCommand::Plan { scenario, out: dir } => {
            let (sc, prm) = load_scenario(&scenario).map_err(usage)?;
            let plan = flat_parametrize(&prm, &sc.reference, sc.output_set, sc.integrator.step).map_err(domain)?;
            let summary = write_plan(&dir, &prm, &plan)?;
            emit(out, &summary)?;
            Ok(EXIT_OK)
        }
        AircraftCommand::Simulate { scenario, out: dir } => {
            let (sc, prm) = load_scenario(&scenario).map_err(usage)?;
            let plan = flat_parametrize(&prm, &sc.reference, sc.output_set, sc.integrator.step).map_err(domain)?;
            let res = simulate_closed_loop(&prm, &plan, &sc.reference, &sc.sim_config()).map_err(domain)?;
            let summary = sim_summary(&prm, &res);
            write_outputs(&dir, &res, &summary).map_err(|e| domain(format!("{}: {e}", dir.display())))?;
            emit(out, &summary)?;
            Ok(if res.summary.terminated.is_some() { EXIT_FAILED } else { EXIT_OK })
        }
    }
}

fn sim_summary(prm: &AircraftParams, res: &SimResult) -> serde_json::Value {
    json!({"airframe": prm.name, "output_set": res.output_set, "summary": res.summary})
}

fn write_plan(dir: &Path, prm: &AircraftParams, plan: &PlannedTrajectory) -> Result<serde_json::Value, Fail> {
    std::fs::create_dir_all(dir).map_err(|e| domain(format!("{}: {e}", dir.display())))?;
    let mut header = vec!["t"];
    header.extend(crate::aircraft::STATE_NAMES);
    write_csv(
        &dir.join("states.csv"),
        &header,
        plan.samples.iter().map(|s| std::iter::once(s.t).chain(s.state.to_array()).collect()),
    )?;
    write_csv(
        &dir.join("controls.csv"),
        &["t", "F", "delta_l", "delta_m", "delta_n", "eta"],
        plan.samples.iter().map(|s| {
            let c = &s.controls;
            vec![s.t, c.f, c.delta_l, c.delta_m, c.delta_n, c.eta]
        }),
    )?;
    let residuals = planner_residuals(prm, plan);
    write_csv(
        &dir.join("errors.csv"),
        &["t", "dynamics_residual", "delta_xi"],
        plan.samples.iter().zip(&residuals).map(|(s, r)| vec![s.t, *r, s.delta_xi]),
    )?;
    let min_delta = plan.samples.iter().map(|s| s.delta_xi.abs()).fold(f64::INFINITY, f64::min);
    let summary = json!({
        "airframe": prm.name,
        "output_set": plan.output_set,
        "samples": plan.samples.len(),
        "step": plan.step,
        "t_initial": plan.samples.first().map(|s| s.t),
        "t_final": plan.samples.last().map(|s| s.t),
        "max_dynamics_residual": residuals.iter().copied().fold(0.0, f64::max),
        "min_abs_delta_xi": min_delta,
    });
    let text = to_json(&summary).map_err(domain)?;
    std::fs::write(dir.join("summary.json"), text).map_err(|e| domain(format!("{}: {e}", dir.display())))?;
    Ok(summary)
}
