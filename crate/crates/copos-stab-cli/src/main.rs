//! Command-line front end: graph ingestion, exact combinatorics, bound
//! computation, minimizer classification, and JSON/text reporting.
//!
//! Exit codes: 0 success, 2 refusal (a size cap declined the computation),
//! 1 anything else (bad flags, unreadable input, solver failure).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use copos_stab::combinatorics;
use copos_stab::graph::Graph;
use copos_stab::motzkin::{self, SimplexPoint, SimplexQP};
use copos_stab::solver::{SolverConfig, SolverError};
use copos_stab::sos::{self, BoundResult, BoundValue, RankOutcome, SosError};
use copos_stab::zeta;
use copos_stab::io;

const SCHEMA: &str = "copos-stab/1";

#[derive(Parser)]
#[command(
    name = "copos-stab",
    version,
    about = "Stability-number bounds from conic and sum-of-squares hierarchies",
    after_help = "Exit codes: 0 success, 2 size-cap refusal, 1 error.\n\
                  The environment variable COPOS_STAB_THREADS caps worker \n\
                  parallelism (the current implementation is sequential, which \n\
                  respects any positive cap)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Primal residual tolerance for the conic solver.
    #[arg(long, global = true, default_value_t = 1e-8)]
    eps_primal: f64,
    /// Dual residual tolerance for the conic solver.
    #[arg(long, global = true, default_value_t = 1e-8)]
    eps_dual: f64,
    /// Relative duality-gap tolerance for the conic solver.
    #[arg(long, global = true, default_value_t = 1e-8)]
    eps_gap: f64,
    /// Iteration cap for the conic solver.
    #[arg(long, global = true, default_value_t = 200_000)]
    max_iter: usize,
    /// Disable Ruiz equilibration of the constraint matrix.
    #[arg(long, global = true)]
    no_scaling: bool,
    /// Print per-iteration solver progress on stderr.
    #[arg(long, global = true)]
    solver_log: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HierarchyArg {
    /// Copositivity hierarchy ϑ^(r); upper bound on α.
    Theta,
    /// LP hierarchy ζ^(r); exact rational upper bound on α.
    Zeta,
    /// Simplex Lasserre bound of order r ≥ 1; lower bound on 1/α.
    Simplex,
    /// Simplex preordering bound of order r ≥ 1; lower bound on 1/α.
    Preordering,
    /// Sphere-formulation bound of order r ≥ 2; lower bound on 1/α.
    Sphere,
    /// The plain Lovász theta SDP; upper bound on α.
    Shor,
}

#[derive(Subcommand)]
enum Command {
    /// Exact stability number with a maximum stable set witness.
    Alpha {
        /// Graph file (DIMACS .col or JSON).
        path: PathBuf,
    },
    /// Critical edges and the graph's criticality class.
    Critical {
        path: PathBuf,
    },
    /// Classify simplex points against the quadratic program min xᵀ(I+A)x.
    Minimizers {
        path: PathBuf,
        /// Comma-separated simplex coordinates, e.g. 0.5,0.5,0,0,0.
        #[arg(long, conflicts_with = "scan", required_unless_present = "scan")]
        point: Option<String>,
        /// Classify the uniform point of every maximal stable set instead.
        #[arg(long)]
        scan: bool,
    },
    /// One bound value from a chosen hierarchy.
    Bound {
        path: PathBuf,
        #[arg(long, value_enum)]
        hierarchy: HierarchyArg,
        /// Hierarchy order r.
        #[arg(long, default_value_t = 0)]
        order: usize,
        /// Edge-weight perturbation ε ≥ 0.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Smallest r with ϑ^(r) = α, searching r = 0..=max-order.
    Rank {
        path: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_order: usize,
    },
    /// Full report: graph summary, bound table, minimizer analyses.
    Report {
        path: PathBuf,
        /// Inclusive order range "a..b" or a comma list "0,1,2".
        #[arg(long, default_value = "0..1")]
        orders: String,
        /// Edge-weight perturbation ε ≥ 0 for the bound rows.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Include wall-clock timings (off by default so output is
        /// byte-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Cross-hierarchy identity check 1/ϑ^(2r) = sphere = preordering ≥ simplex.
    Chain {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        order: usize,
    },
}

enum Failure {
    /// Bad flags or malformed input: exit 1.
    Usage(String),
    /// A size cap declined the computation: exit 2.
    Refusal(String),
    /// Everything else: exit 1.
    Error(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Refusal(_) => 2,
            _ => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Refusal(m) | Failure::Error(m) => m,
        }
    }
}

impl From<SosError> for Failure {
    fn from(e: SosError) -> Self {
        match e {
            SosError::CapExceeded { .. } => Failure::Refusal(e.to_string()),
            SosError::Solver(SolverError::CapExceeded { .. }) => {
                Failure::Refusal(e.to_string())
            }
            _ => Failure::Error(e.to_string()),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // --help / --version are successes; everything else is usage.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(f) = run(cli) {
        eprintln!("error: {}", f.message());
        std::process::exit(f.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    check_thread_cap()?;
    let cfg = SolverConfig {
        eps_primal: cli.eps_primal,
        eps_dual: cli.eps_dual,
        eps_gap: cli.eps_gap,
        max_iter: cli.max_iter,
        scaling: !cli.no_scaling,
        verbose: cli.solver_log,
    };
    for (name, v) in
        [("eps-primal", cli.eps_primal), ("eps-dual", cli.eps_dual), ("eps-gap", cli.eps_gap)]
    {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Failure::Usage(format!("--{name} must be a positive real")));
        }
    }

    let (out, text) = match &cli.command {
        Command::Alpha { path } => cmd_alpha(&load_graph(path)?),
        Command::Critical { path } => cmd_critical(&load_graph(path)?),
        Command::Minimizers { path, point, scan } => {
            cmd_minimizers(&load_graph(path)?, point.as_deref(), *scan)?
        }
        Command::Bound { path, hierarchy, order, epsilon } => {
            cmd_bound(&load_graph(path)?, *hierarchy, *order, *epsilon, &cfg)?
        }
        Command::Rank { path, max_order } => {
            cmd_rank(&load_graph(path)?, *max_order, &cfg)?
        }
        Command::Report { path, orders, epsilon, timings } => {
            let orders = parse_orders(orders)?;
            cmd_report(&load_graph(path)?, &orders, *epsilon, *timings, &cfg)?
        }
        Command::Chain { path, order } => cmd_chain(&load_graph(path)?, *order, &cfg),
    };

    match cli.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&out).expect("report serialization")
        ),
        Format::Text => println!("{}", text.trim_end()),
    }
    Ok(())
}

/// Validates COPOS_STAB_THREADS when set. The implementation runs all work
/// on one thread, which honors any positive cap.
fn check_thread_cap() -> Result<(), Failure> {
    match std::env::var("COPOS_STAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(()),
            _ => Err(Failure::Usage(format!(
                "COPOS_STAB_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(()),
    }
}

fn load_graph(path: &PathBuf) -> Result<Graph, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    io::parse_auto(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn epsilon_valid(eps: f64) -> Result<(), Failure> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Failure::Usage("--epsilon must be a finite real >= 0".into()));
    }
    Ok(())
}

/// Edges as 1-based pairs, the external labeling convention everywhere.
fn edge_list_json(edges: &[(usize, usize)]) -> Value {
    Value::Array(
        edges.iter().map(|&(u, v)| json!([u + 1, v + 1])).collect(),
    )
}

fn set_1based(s: &[usize]) -> Vec<usize> {
    s.iter().map(|v| v + 1).collect()
}

fn cmd_alpha(g: &Graph) -> (Value, String) {
    let alpha = combinatorics::stability_number(g);
    let maximum = combinatorics::maximum_stable_sets(g).unwrap_or_default();
    let witness = maximum.first().cloned().unwrap_or_default();
    let out = json!({
        "schema": SCHEMA,
        "n": g.n(),
        "m": g.m(),
        "alpha": alpha,
        "maximum_stable_set": set_1based(&witness),
        "maximum_stable_set_count": maximum.len(),
        "clique_cover_number": combinatorics::clique_cover_number(g),
    });
    let text = format!(
        "n {}  edges {}\nalpha {}  clique cover {}\nmaximum stable set {:?} ({} of them)\n",
        g.n(),
        g.m(),
        alpha,
        out["clique_cover_number"],
        set_1based(&witness),
        maximum.len(),
    );
    (out, text)
}

fn cmd_critical(g: &Graph) -> (Value, String) {
    let critical = combinatorics::critical_edges(g);
    let class = combinatorics::criticality_class(g);
    let out = json!({
        "schema": SCHEMA,
        "n": g.n(),
        "m": g.m(),
        "alpha": combinatorics::stability_number(g),
        "critical_edges": edge_list_json(&critical),
        "criticality_class": class,
    });
    let mut text = format!(
        "alpha {}  class {:?}\ncritical edges ({} of {}):\n",
        out["alpha"],
        class,
        critical.len(),
        g.m()
    );
    for (u, v) in &critical {
        let _ = writeln!(text, "  {} -- {}", u + 1, v + 1);
    }
    (out, text)
}

fn parse_point(raw: &str, n: usize) -> Result<SimplexPoint, Failure> {
    let coords: Result<Vec<f64>, _> =
        raw.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let coords =
        coords.map_err(|e| Failure::Usage(format!("--point: bad coordinate: {e}")))?;
    if coords.len() != n {
        return Err(Failure::Usage(format!(
            "--point has {} coordinates, the graph has {} vertices",
            coords.len(),
            n
        )));
    }
    SimplexPoint::new(coords).map_err(|e| Failure::Usage(format!("--point: {e}")))
}

fn cmd_minimizers(
    g: &Graph,
    point: Option<&str>,
    scan: bool,
) -> Result<(Value, String), Failure> {
    let qp = SimplexQP::motzkin_straus(g);
    if scan {
        let maximal = combinatorics::maximal_stable_sets(g)
            .map_err(|e| Failure::Error(e.to_string()))?;
        let mut entries = Vec::new();
        let mut text = String::from("uniform stable-set points:\n");
        for s in &maximal {
            let x = SimplexPoint::uniform_on(s, g.n())
                .map_err(|e| Failure::Error(e.to_string()))?;
            let report = motzkin::classify_point(g, &x);
            let _ = writeln!(
                text,
                "  {:?} -> {:?}",
                set_1based(s),
                report.classification
            );
            entries.push(json!({
                "stable_set": set_1based(s),
                "report": report.to_json(),
            }));
        }
        let finite = motzkin::has_finitely_many_global_minimizers(g);
        let _ = writeln!(text, "finitely many global minimizers: {finite}");
        let out = json!({
            "schema": SCHEMA,
            "n": g.n(),
            "alpha": combinatorics::stability_number(g),
            "scan": entries,
            "finitely_many_global_minimizers": finite,
        });
        Ok((out, text))
    } else {
        let x = parse_point(point.expect("clap enforces point xor scan"), g.n())?;
        let value = qp
            .evaluate(&x)
            .map_err(|e| Failure::Usage(format!("--point: {e}")))?;
        let report = motzkin::classify_point(g, &x);
        let kkt = motzkin::kkt_check(&qp, &x);
        let text = format!(
            "value {}\nclassification {:?}\nkkt: cqc {} fooc {} cc {} scc {} sonc {} sosc {}\n",
            value,
            report.classification,
            kkt.cqc,
            kkt.fooc,
            kkt.cc,
            kkt.scc,
            kkt.sonc,
            kkt.sosc
        );
        let mut body = report.to_json();
        body["value"] = json!(value);
        body["schema"] = json!(SCHEMA);
        Ok((body, text))
    }
}

fn bound_json(b: &BoundResult) -> Value {
    let mut v = serde_json::to_value(b).expect("bound serialization");
    v["schema"] = json!(SCHEMA);
    v
}

fn bound_text(b: &BoundResult) -> String {
    let val = match b.value {
        BoundValue::Finite { value } => format!("{value}"),
        BoundValue::Infeasible => "infeasible".into(),
        BoundValue::Unbounded => "unbounded".into(),
    };
    let derived = b
        .derived_alpha_bound
        .map(|d| format!("  alpha bound {d}"))
        .unwrap_or_default();
    format!("{:?} r={} eps={}: {val}{derived}\n", b.hierarchy, b.r, b.eps)
}

fn cmd_bound(
    g: &Graph,
    h: HierarchyArg,
    order: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<(Value, String), Failure> {
    epsilon_valid(eps)?;
    let b = match h {
        HierarchyArg::Zeta => {
            let z = zeta::zeta(g, order, eps);
            let mut out = z.to_json();
            out["schema"] = json!(SCHEMA);
            out["hierarchy"] = json!("zeta");
            let text = match (&z.value, z.floor()) {
                (Some(v), Some(fl)) => {
                    format!("zeta r={order} eps={eps}: {v}  floor {fl}\n")
                }
                _ => format!("zeta r={order} eps={eps}: infeasible\n"),
            };
            return Ok((out, text));
        }
        HierarchyArg::Theta => sos::theta(g, order, eps, cfg)?,
        HierarchyArg::Simplex => {
            if order < 1 {
                return Err(Failure::Usage(
                    "the simplex hierarchy starts at --order 1".into(),
                ));
            }
            sos::simplex_bound(g, order, eps, cfg)?
        }
        HierarchyArg::Preordering => {
            if order < 1 {
                return Err(Failure::Usage(
                    "the preordering hierarchy starts at --order 1".into(),
                ));
            }
            sos::preordering_bound(g, order, eps, cfg)?
        }
        HierarchyArg::Sphere => {
            if order < 2 {
                return Err(Failure::Usage(
                    "the sphere hierarchy starts at --order 2".into(),
                ));
            }
            sos::sphere_bound(g, order, eps, cfg)?
        }
        HierarchyArg::Shor => {
            if order != 0 {
                return Err(Failure::Usage(
                    "the plain Lovász theta SDP has no order; omit --order".into(),
                ));
            }
            sos::lovasz_theta(g, cfg)?
        }
    };
    Ok((bound_json(&b), bound_text(&b)))
}

fn cmd_rank(
    g: &Graph,
    max_order: usize,
    cfg: &SolverConfig,
) -> Result<(Value, String), Failure> {
    let tr = sos::theta_rank(g, max_order, cfg)?;
    let (rank, found) = match tr.outcome {
        RankOutcome::Found { rank } => (json!(rank), true),
        RankOutcome::NotFoundUpTo { .. } => (Value::Null, false),
    };
    let out = json!({
        "schema": SCHEMA,
        "alpha": tr.alpha,
        "rank": rank,
        "max_order": max_order,
        "values": tr.values,
    });
    let text = if found {
        format!("rank {}  values {:?}\n", out["rank"], tr.values)
    } else {
        format!("rank not found up to order {max_order}; values {:?}\n", tr.values)
    };
    Ok((out, text))
}

fn parse_orders(raw: &str) -> Result<Vec<usize>, Failure> {
    let bad = |detail: &str| {
        Failure::Usage(format!(
            "--orders {raw:?}: {detail} (use an inclusive range \"a..b\" or a comma list)"
        ))
    };
    if let Some((a, b)) = raw.split_once("..") {
        let lo: usize = a.trim().parse().map_err(|_| bad("bad range start"))?;
        let hi: usize = b.trim().parse().map_err(|_| bad("bad range end"))?;
        if lo > hi {
            return Err(bad("start exceeds end"));
        }
        return Ok((lo..=hi).collect());
    }
    let list: Result<Vec<usize>, _> =
        raw.split(',').map(|t| t.trim().parse::<usize>()).collect();
    let mut list = list.map_err(|_| bad("bad order"))?;
    if list.is_empty() {
        return Err(bad("empty"));
    }
    list.sort_unstable();
    list.dedup();
    Ok(list)
}

/// One bound-table row; failures become rows instead of aborting the report.
fn report_row(
    name: &str,
    r: usize,
    eps: f64,
    timings: bool,
    run: impl FnOnce() -> Result<BoundResult, SosError>,
) -> Value {
    let t0 = Instant::now();
    let mut row = match run() {
        Ok(b) => {
            let mut v = serde_json::to_value(&b).expect("bound serialization");
            // the row labels the hierarchy already
            v.as_object_mut().expect("object").remove("hierarchy");
            v
        }
        Err(SosError::CapExceeded { products, cap }) => json!({
            "r": r, "eps": eps,
            "refused": format!("needs {products} products, cap {cap}"),
        }),
        Err(e) => json!({ "r": r, "eps": eps, "error": e.to_string() }),
    };
    row["hierarchy"] = json!(name);
    if timings {
        row["wall_ms"] = json!(t0.elapsed().as_millis() as u64);
    }
    row
}

fn cmd_report(
    g: &Graph,
    orders: &[usize],
    eps: f64,
    timings: bool,
    cfg: &SolverConfig,
) -> Result<(Value, String), Failure> {
    epsilon_valid(eps)?;
    let alpha = combinatorics::stability_number(g);
    let mut rows = Vec::new();
    for &r in orders {
        let z = zeta::zeta(g, r, eps);
        let mut zrow = z.to_json();
        zrow["hierarchy"] = json!("zeta");
        zrow["derived_alpha_bound"] = match z.floor() {
            Some(f) => json!(f),
            None => Value::Null,
        };
        rows.push(zrow);
        rows.push(report_row("theta", r, eps, timings, || {
            sos::theta(g, r, eps, cfg)
        }));
        if r >= 1 {
            rows.push(report_row("simplex", r, eps, timings, || {
                sos::simplex_bound(g, r, eps, cfg)
            }));
            rows.push(report_row("preordering", r, eps, timings, || {
                sos::preordering_bound(g, r, eps, cfg)
            }));
        }
        if r >= 2 {
            rows.push(report_row("sphere", r, eps, timings, || {
                sos::sphere_bound(g, r, eps, cfg)
            }));
        }
    }

    let maximum = combinatorics::maximum_stable_sets(g).unwrap_or_default();
    let minimizers: Vec<Value> = maximum
        .iter()
        .map(|s| {
            let x = SimplexPoint::uniform_on(s, g.n()).expect("stable set point");
            json!({
                "stable_set": set_1based(s),
                "classification": motzkin::classify_point(g, &x).classification,
            })
        })
        .collect();

    let out = json!({
        "schema": SCHEMA,
        "graph": {
            "n": g.n(),
            "m": g.m(),
            "alpha": alpha,
            "clique_cover_number": combinatorics::clique_cover_number(g),
            "criticality_class": combinatorics::criticality_class(g),
        },
        "bounds": rows,
        "maximum_stable_set_points": minimizers,
        "finitely_many_global_minimizers":
            motzkin::has_finitely_many_global_minimizers(g),
    });

    let mut text = format!(
        "n {}  edges {}  alpha {}  clique cover {}  class {:?}\n\n{:<12} {:>3} {:>6} {:>18} {:>12}\n",
        g.n(),
        g.m(),
        alpha,
        out["graph"]["clique_cover_number"],
        combinatorics::criticality_class(g),
        "hierarchy",
        "r",
        "eps",
        "value",
        "alpha bound"
    );
    for row in out["bounds"].as_array().expect("rows") {
        let value = if let Some(refused) = row.get("refused").and_then(Value::as_str) {
            format!("refused: {refused}")
        } else if let Some(err) = row.get("error").and_then(Value::as_str) {
            format!("error: {err}")
        } else if row["hierarchy"] == "zeta" {
            match row.get("value") {
                Some(Value::Object(frac)) => format!("{}/{}", frac["num"], frac["den"]),
                _ => "infeasible".into(),
            }
        } else {
            match row["value"]["kind"].as_str() {
                Some("finite") => format!("{}", row["value"]["value"]),
                Some(other) => other.into(),
                None => "?".into(),
            }
        };
        let derived = row
            .get("derived_alpha_bound")
            .and_then(Value::as_i64)
            .map(|d| d.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            text,
            "{:<12} {:>3} {:>6} {:>18} {:>12}",
            row["hierarchy"].as_str().unwrap_or("?"),
            row["r"],
            row["eps"],
            value,
            derived
        );
    }
    let _ = writeln!(
        text,
        "\nfinitely many global minimizers: {}",
        out["finitely_many_global_minimizers"]
    );
    Ok((out, text))
}

fn chain_entry_json(e: &Result<BoundResult, String>) -> Value {
    match e {
        Ok(b) => serde_json::to_value(b).expect("bound serialization"),
        Err(msg) => json!({ "error": msg }),
    }
}

fn cmd_chain(g: &Graph, order: usize, cfg: &SolverConfig) -> (Value, String) {
    let rep = sos::hierarchy_chain_report(g, order, cfg);
    let out = json!({
        "schema": SCHEMA,
        "r": rep.r,
        "alpha": rep.alpha,
        "theta": chain_entry_json(&rep.theta),
        "sphere": chain_entry_json(&rep.sphere),
        "preordering": chain_entry_json(&rep.preordering),
        "simplex": chain_entry_json(&rep.simplex),
        "max_equality_deviation": rep.max_equality_deviation,
        "chain_holds": rep.chain_holds,
    });
    let mut text = format!("alpha {}  1/alpha {}\n", rep.alpha, 1.0 / rep.alpha as f64);
    for (name, entry) in [
        ("1/theta^(2r)", &rep.theta),
        ("sphere 2r+2", &rep.sphere),
        ("preo r+1", &rep.preordering),
        ("simplex r+1", &rep.simplex),
    ] {
        let line = match entry {
            Ok(b) => match b.value {
                BoundValue::Finite { value } => {
                    let shown =
                        if name.starts_with("1/theta") { 1.0 / value } else { value };
                    format!("{shown}")
                }
                BoundValue::Infeasible => "infeasible".into(),
                BoundValue::Unbounded => "unbounded".into(),
            },
            Err(e) => format!("error: {e}"),
        };
        let _ = writeln!(text, "{name:<14} {line}");
    }
    let _ = writeln!(
        text,
        "deviation {:?}  chain holds {:?}",
        rep.max_equality_deviation, rep.chain_holds
    );
    (out, text)
}
