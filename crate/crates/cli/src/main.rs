use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exclusivity_core::catalog::{catalog_get, catalog_names, cglmp_s, pearl_family, LinearInequality};
use exclusivity_core::classical::{alpha, classical_max_oracle, DEFAULT_STRATEGY_CAP};
use exclusivity_core::graph::{build_graph_with, BuildStrategy, Graph};
use exclusivity_core::quantum::{lovasz_theta, seesaw_lower_bound, theta_cycle_formula, SeesawOptions};
use exclusivity_core::scenario::{estimate_iv_strength, parse_scenario, CausalScenario};
use exclusivity_core::structure::{
    find_odd_antiholes, find_odd_holes, instrumental_grid, perfect_verdict, scan_family,
};
use serde::Serialize;
use serde_json::{json, Value};

/// Exclusivity graphs, classical and quantum bounds for single-latent causal models.
#[derive(Parser, Debug)]
#[command(name = "exgraph", version)]
struct Cli {
    /// Write the JSON report to this file.
    #[arg(long, global = true, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Write the tabular result as CSV to this file.
    #[arg(long, global = true, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the exclusivity graph of a scenario.
    Graph(GraphArgs),
    /// Weighted independence number (classical bound).
    Alpha(TargetArgs),
    /// Weighted Lovász theta (quantum upper bound).
    Theta(TargetArgs),
    /// See-saw quantum lower bound for an inequality.
    Seesaw(SeesawArgs),
    /// Odd holes of one scenario, or first appearances over a grid.
    Scan(ScanArgs),
    /// List or show catalog inequalities.
    Catalog(CatalogArgs),
    /// α and θ (and optionally see-saw) for the CGLMP blocks S^d_k, k ∈ {0, 1}.
    Table1(Table1Args),
    /// Covariance-ratio IV estimate from a CSV of x,a,b rows.
    IvEstimate(IvArgs),
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Scenario shorthand (e.g. instrumental:3,2,2) or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum, default_value_t = Strategy::Pairwise)]
    strategy: Strategy,
    /// Write Graphviz DOT with one edge color per observed variable.
    #[arg(long, value_name = "FILE")]
    dot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Strategy {
    Pairwise,
    Bfs,
}

#[derive(Args, Debug)]
struct TargetArgs {
    /// Scenario; alone it selects the full exclusivity graph, with --ineq it embeds the inequality.
    #[arg(long)]
    scenario: Option<String>,
    /// Catalog name (bonet, c7_433, inst_chsh_422, chsh_bell, cglmp:d,k, cglmp_full:d) or inequality JSON file.
    #[arg(long)]
    ineq: Option<String>,
    /// Plain cycle C_n with unit weights.
    #[arg(long, conflicts_with_all = ["scenario", "ineq"])]
    cycle: Option<usize>,
    /// Use the complement graph.
    #[arg(long)]
    complement: bool,
    /// Also run the deterministic-strategy oracle (alpha with --ineq only).
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct SeesawArgs {
    #[arg(long)]
    ineq: String,
    #[arg(long)]
    scenario: Option<String>,
    /// Random seed (required; no hidden entropy).
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    /// Local dimensions, one per observed variable.
    #[arg(long, value_delimiter = ',', default_value = "2,2")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    max_sweeps: usize,
    /// Write the best strategy as JSON.
    #[arg(long, value_name = "FILE")]
    strategy_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// Report holes, antiholes and a perfectness verdict for this scenario.
    #[arg(long)]
    scenario: Option<String>,
    /// Longest odd cycle searched (default 11; with --scenario, `all` means |V|).
    #[arg(long, default_value = "11")]
    max_len: String,
    #[arg(long, default_value_t = 4)]
    l_max: usize,
    #[arg(long, default_value_t = 3)]
    m_max: usize,
    #[arg(long, default_value_t = 3)]
    n_max: usize,
    /// Scan only points with n = m.
    #[arg(long)]
    n_equals_m: bool,
}

#[derive(Args, Debug)]
struct CatalogArgs {
    /// Show one inequality.
    #[arg(long)]
    name: Option<String>,
    /// List the Pearl family for l,m,n.
    #[arg(long, value_delimiter = ',')]
    pearl: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct Table1Args {
    #[arg(long, default_value_t = 5)]
    max_d: usize,
    /// Add a see-saw column with this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
}

#[derive(Args, Debug)]
struct IvArgs {
    /// CSV file with columns x,a,b (a header row is optional).
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Run<T> = Result<T, Failure>;

/// What a subcommand produced.
struct Report {
    scenario: Option<String>,
    seed: Option<u64>,
    human: String,
    results: Value,
    table: Option<Table>,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct ReportBundle<'a> {
    schema: u32,
    tool: &'static str,
    version: &'static str,
    command: Vec<String>,
    scenario: Option<&'a str>,
    seed: Option<u64>,
    results: &'a Value,
    wall_time_s: f64,
}

/// Seven significant digits, shortest decimal form.
fn sig7(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.6e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn load_scenario(text: &str) -> Run<CausalScenario> {
    let path = Path::new(text);
    if !text.contains(':') && path.is_file() {
        return Ok(parse_scenario(&fs::read_to_string(path)?)?);
    }
    Ok(parse_scenario(text)?)
}

fn load_inequality(text: &str, scenario: Option<&CausalScenario>) -> Run<LinearInequality> {
    let path = Path::new(text);
    let ineq = if path.is_file() {
        LinearInequality::parse(&fs::read_to_string(path)?)?
    } else {
        catalog_get(text)?
    };
    match scenario {
        Some(s) if s != ineq.scenario() => Ok(ineq.embed(s)?),
        _ => Ok(ineq),
    }
}

struct Target {
    graph: Graph,
    label: String,
    events: Option<Vec<String>>,
    ineq: Option<LinearInequality>,
    scenario: Option<String>,
}

fn resolve_target(args: &TargetArgs) -> Run<Target> {
    let mut target = if let Some(n) = args.cycle {
        Target {
            graph: Graph::cycle(n),
            label: format!("C{n}"),
            events: None,
            ineq: None,
            scenario: None,
        }
    } else {
        let scenario = args.scenario.as_deref().map(load_scenario).transpose()?;
        match (&args.ineq, scenario) {
            (Some(name), s) => {
                let ineq = load_inequality(name, s.as_ref())?;
                let g = ineq.support_graph()?;
                Target {
                    events: Some(g.events().iter().map(|e| e.to_string()).collect()),
                    graph: g.graph().clone(),
                    label: format!("support of {name}"),
                    scenario: Some(ineq.scenario().label()),
                    ineq: Some(ineq),
                }
            }
            (None, Some(s)) => {
                let g = build_graph_with(&s, None, BuildStrategy::Pairwise)?;
                Target {
                    events: Some(g.events().iter().map(|e| e.to_string()).collect()),
                    graph: g.graph().clone(),
                    label: format!("exclusivity graph of {}", s.label()),
                    scenario: Some(s.label()),
                    ineq: None,
                }
            }
            (None, None) => return Err(Failure("give --cycle, --scenario or --ineq".into())),
        }
    };
    if args.complement {
        target.graph = target.graph.complement();
        target.label = format!("complement of {}", target.label);
    }
    Ok(target)
}

fn cmd_graph(args: &GraphArgs) -> Run<Report> {
    let s = load_scenario(&args.scenario)?;
    let strategy = match args.strategy {
        Strategy::Pairwise => BuildStrategy::Pairwise,
        Strategy::Bfs => BuildStrategy::BreadthFirst,
    };
    let g = build_graph_with(&s, None, strategy)?;
    let layers = g.colored_layers();
    if let Some(path) = &args.dot {
        fs::write(path, layers.to_dot())?;
    }
    let mut human = format!("{}: {} vertices, {} edges\n", s.label(), g.len(), g.edge_count());
    for (name, edges) in &layers.layers {
        human.push_str(&format!("  layer {name}: {} edges\n", edges.len()));
    }
    Ok(Report {
        scenario: Some(s.label()),
        seed: None,
        human,
        results: serde_json::to_value(layers.to_json())?,
        table: None,
    })
}

fn cmd_alpha(args: &TargetArgs) -> Run<Report> {
    let t = resolve_target(args)?;
    let r = alpha(&t.graph);
    let witness: Vec<String> = match &t.events {
        Some(ev) => r.vertices.iter().map(|&v| ev[v].clone()).collect(),
        None => r.vertices.iter().map(|v| v.to_string()).collect(),
    };
    let mut human = format!("alpha = {}\nwitness: {}\n", r.value, witness.join(" "));
    let mut results = json!({
        "target": t.label,
        "alpha": r.value,
        "witness": witness,
        "nodes": r.stats.nodes,
        "root_bound": r.stats.root_bound,
    });
    let mut row = vec![t.label.clone(), sig7(r.value)];
    if args.oracle {
        let ineq = t
            .ineq
            .as_ref()
            .ok_or_else(|| Failure("--oracle needs --ineq".into()))?;
        let o = classical_max_oracle(ineq, ineq.scenario(), DEFAULT_STRATEGY_CAP)?;
        human.push_str(&format!("oracle = {} ({} strategies)\n", o.value, o.enumerated));
        results["oracle"] = json!(o.value);
        results["strategies_enumerated"] = json!(o.enumerated);
        row.push(sig7(o.value));
    }
    let mut header = vec!["target", "alpha"];
    if args.oracle {
        header.push("oracle");
    }
    Ok(Report {
        scenario: t.scenario,
        seed: None,
        human,
        results,
        table: Some(Table {
            header,
            rows: vec![row],
        }),
    })
}

fn cmd_theta(args: &TargetArgs) -> Run<Report> {
    let t = resolve_target(args)?;
    let r = lovasz_theta(&t.graph)?;
    let mut human = format!("theta = {:.7}\n", r.value);
    let mut results = json!({
        "target": t.label,
        "theta": r.value,
        "iterations": r.diagnostics.iterations,
        "primal_objective": r.diagnostics.primal_objective,
        "dual_objective": r.diagnostics.dual_objective,
        "gap": r.diagnostics.gap,
    });
    if let (Some(n), false) = (args.cycle, args.complement) {
        if let Ok(f) = theta_cycle_formula(n) {
            human.push_str(&format!("closed form = {f:.7}\n"));
            results["closed_form"] = json!(f);
        }
    }
    Ok(Report {
        scenario: t.scenario,
        seed: None,
        human,
        table: Some(Table {
            header: vec!["target", "theta"],
            rows: vec![vec![t.label, sig7(r.value)]],
        }),
        results,
    })
}

fn cmd_seesaw(args: &SeesawArgs) -> Run<Report> {
    let scenario = args.scenario.as_deref().map(load_scenario).transpose()?;
    let ineq = load_inequality(&args.ineq, scenario.as_ref())?;
    let opts = SeesawOptions {
        max_sweeps: args.max_sweeps,
        ..SeesawOptions::new(args.seed)
            .with_dims(args.dims.clone())
            .with_restarts(args.restarts)
    };
    let r = seesaw_lower_bound(&ineq, ineq.scenario(), &opts)?;
    if let Some(path) = &args.strategy_out {
        fs::write(path, serde_json::to_string_pretty(&r.strategy.to_json())? + "\n")?;
    }
    let human = format!(
        "see-saw value = {:.7} (best restart {} of {}, classical bound {})\n",
        r.value,
        r.best_restart,
        r.restarts.len(),
        ineq.classical_bound()
    );
    let restarts: Vec<Value> = r
        .restarts
        .iter()
        .map(|t| json!({"index": t.index, "seed": t.seed, "deterministic": t.deterministic, "value": t.value, "sweeps": t.sweeps}))
        .collect();
    let rows = r
        .restarts
        .iter()
        .map(|t| vec![t.index.to_string(), t.seed.to_string(), sig7(t.value), t.sweeps.to_string()])
        .collect();
    Ok(Report {
        scenario: Some(ineq.scenario().label()),
        seed: Some(args.seed),
        human,
        results: json!({
            "inequality": args.ineq,
            "value": r.value,
            "classical_bound": ineq.classical_bound(),
            "best_restart": r.best_restart,
            "dims": args.dims,
            "restarts": restarts,
            "strategy": r.strategy.to_json(),
        }),
        table: Some(Table {
            header: vec!["restart", "seed", "value", "sweeps"],
            rows,
        }),
    })
}

fn cmd_scan(args: &ScanArgs) -> Run<Report> {
    if let Some(text) = &args.scenario {
        let s = load_scenario(text)?;
        let g = build_graph_with(&s, None, BuildStrategy::Pairwise)?;
        let max_len = if args.max_len == "all" {
            g.len()
        } else {
            args.max_len.parse()?
        };
        let holes = find_odd_holes(&g, max_len);
        let antiholes = find_odd_antiholes(&g, max_len);
        let verdict = perfect_verdict(&g, max_len);
        let count = |r: &exclusivity_core::structure::HoleReport, len: usize| {
            r.holes.iter().filter(|h| h.length == len).count()
        };
        let mut human = format!("{}: {} vertices\n", s.label(), g.len());
        let mut rows = Vec::new();
        for len in (5..=max_len).step_by(2) {
            let (h, a) = (count(&holes, len), count(&antiholes, len));
            if h + a > 0 {
                human.push_str(&format!("  length {len}: {h} holes, {a} antiholes\n"));
            }
            rows.push(vec![len.to_string(), h.to_string(), a.to_string()]);
        }
        human.push_str(&format!(
            "  exhaustive: {}\n  verdict: {}\n",
            holes.exhaustive && antiholes.exhaustive,
            serde_json::to_value(&verdict)?["status"].as_str().unwrap_or("?")
        ));
        return Ok(Report {
            scenario: Some(s.label()),
            seed: None,
            human,
            results: json!({"holes": holes, "antiholes": antiholes, "verdict": verdict}),
            table: Some(Table {
                header: vec!["cycle_length", "holes", "antiholes"],
                rows,
            }),
        });
    }
    let max_len: usize = args.max_len.parse()?;
    let grid = instrumental_grid(args.l_max, args.m_max, args.n_max, args.n_equals_m);
    let report = scan_family(&grid, max_len)?;
    let mut human = String::from("cycle_length,l,m,n,witness_vertices\n");
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let (l, m, n) = r
                .point
                .map_or((String::new(), String::new(), String::new()), |(l, m, n)| {
                    (l.to_string(), m.to_string(), n.to_string())
                });
            vec![r.cycle_length.to_string(), l, m, n, r.witness_events.join(" ")]
        })
        .collect();
    for r in &rows {
        human.push_str(&r.join(","));
        human.push('\n');
    }
    if !report.exhaustive {
        human.push_str("warning: node budget exhausted, absent rows may be incomplete\n");
    }
    Ok(Report {
        scenario: None,
        seed: None,
        human,
        results: serde_json::to_value(&report)?,
        table: Some(Table {
            header: vec!["cycle_length", "l", "m", "n", "witness_vertices"],
            rows,
        }),
    })
}

fn cmd_catalog(args: &CatalogArgs) -> Run<Report> {
    let list: Vec<LinearInequality> = match (&args.name, &args.pearl) {
        (Some(name), _) => vec![load_inequality(name, None)?],
        (None, Some(p)) => match p[..] {
            [l, m, n] => pearl_family(l, m, n)?,
            _ => return Err(Failure("--pearl takes l,m,n".into())),
        },
        (None, None) => catalog_names().iter().map(|n| catalog_get(n)).collect::<Result<_, _>>()?,
    };
    let mut human = String::new();
    let mut rows = Vec::new();
    for q in &list {
        let terms: Vec<String> = q
            .terms()
            .iter()
            .map(|(e, w)| if *w == 1.0 { format!("P({e})") } else { format!("{w}·P({e})") })
            .collect();
        human.push_str(&format!(
            "[{}] {}: {} <= {}\n",
            q.provenance().tag,
            q.provenance().citation,
            terms.join(" + "),
            q.classical_bound()
        ));
        rows.push(vec![
            q.provenance().tag.clone(),
            q.scenario().label(),
            terms.join(" + "),
            sig7(q.classical_bound()),
        ]);
    }
    let results = Value::Array(list.iter().map(|q| serde_json::to_value(q.to_json())).collect::<Result<_, _>>()?);
    Ok(Report {
        scenario: None,
        seed: None,
        human,
        results,
        table: Some(Table {
            header: vec!["tag", "scenario", "terms", "classical_bound"],
            rows,
        }),
    })
}

fn cmd_table1(args: &Table1Args) -> Run<Report> {
    if args.max_d < 3 {
        return Err(Failure("--max-d must be at least 3".into()));
    }
    let mut header = vec!["d", "k", "alpha", "theta"];
    if args.seed.is_some() {
        header.push("seesaw");
    }
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for d in 3..=args.max_d {
        for k in 0..2 {
            let q = cglmp_s(d, k)?;
            let g = q.support_graph()?;
            let a = alpha(&g).value;
            let th = lovasz_theta(&g)?.value;
            let mut row = vec![d.to_string(), k.to_string(), sig7(a), sig7(th)];
            let mut entry = json!({"d": d, "k": k, "alpha": a, "theta": th});
            if let Some(seed) = args.seed {
                let opts = SeesawOptions::new(seed)
                    .with_dims(vec![d.min(4); 2])
                    .with_restarts(args.restarts);
                let sw = seesaw_lower_bound(&q, q.scenario(), &opts)?.value;
                row.push(sig7(sw));
                entry["seesaw"] = json!(sw);
            }
            rows.push(row);
            results.push(entry);
        }
    }
    let mut human = header.join(",") + "\n";
    for r in &rows {
        human.push_str(&r.join(","));
        human.push('\n');
    }
    Ok(Report {
        scenario: None,
        seed: args.seed,
        human,
        results: Value::Array(results),
        table: Some(Table { header, rows }),
    })
}

fn cmd_iv(args: &IvArgs) -> Run<Report> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(&args.input)?;
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.len() == 3 => samples.push((v[0], v[1], v[2])),
            Err(_) if i == 0 => continue,
            _ => return Err(Failure(format!("row {} is not three numbers", i + 1))),
        }
    }
    let gamma = estimate_iv_strength(&samples)?;
    Ok(Report {
        scenario: None,
        seed: None,
        human: format!("gamma = {gamma:.7} ({} samples)\n", samples.len()),
        results: json!({"gamma": gamma, "samples": samples.len()}),
        table: Some(Table {
            header: vec!["gamma", "samples"],
            rows: vec![vec![sig7(gamma), samples.len().to_string()]],
        }),
    })
}

fn write_csv(path: &Path, table: &Table) -> Run<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Run<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()?;
    }
    let start = Instant::now();
    let report = match &cli.command {
        Command::Graph(a) => cmd_graph(a),
        Command::Alpha(a) => cmd_alpha(a),
        Command::Theta(a) => cmd_theta(a),
        Command::Seesaw(a) => cmd_seesaw(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Catalog(a) => cmd_catalog(a),
        Command::Table1(a) => cmd_table1(a),
        Command::IvEstimate(a) => cmd_iv(a),
    }?;
    let wall = start.elapsed().as_secs_f64();
    print!("{}", report.human);
    std::io::stdout().flush()?;
    if let Some(path) = &cli.json {
        let bundle = ReportBundle {
            schema: 1,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().skip(1).collect(),
            scenario: report.scenario.as_deref(),
            seed: report.seed,
            results: &report.results,
            wall_time_s: wall,
        };
        fs::write(path, serde_json::to_string_pretty(&bundle)? + "\n")?;
    }
    if let Some(path) = &cli.csv {
        let table = report
            .table
            .as_ref()
            .ok_or_else(|| Failure("this command has no tabular output".into()))?;
        write_csv(path, table)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_significant_digits() {
        assert_eq!(sig7(3.464101615), "3.464102");
        assert_eq!(sig7(2.0), "2");
        assert_eq!(sig7(0.0), "0");
        assert_eq!(sig7(1234567.89), "1234568");
        assert_eq!(sig7(-0.000123456789), "-0.0001234568");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
