//! `direx`: generate instances and run the expansion solvers.
//!
//! Every `run` prints one JSON document holding the resolved configuration
//! (seed and constants included) and the result, so identical inputs give
//! byte-identical output. Exit codes: 0 success, 1 certificate rejected,
//! 2 bad input or parse error, 3 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use direx::cutmatch::{
    approx_via_game, bipartite_matching_player, rounds_csv, run_game, Bipartition, GameApprox, GameOutcome, GameState,
    MatchingMove, RoundLog,
};
use direx::gen::{generate, GenKind};
use direx::graph::{phi_brute, phi_set, BRUTE_MAX_N};
use direx::io::{graph_to_text, parse_graph_any, GraphJson};
use direx::mmwu::{solve_sparsest, verify_certificate, DualCertificate, SparsestOutcome};
use direx::pipeline::sparsest_cut_search;
use direx::reductions::{
    hyper_derived, hyper_phi_brute, hyper_phi_set, parse_hypergraph, phi_exhaustive, psi_brute, psi_set, vertex_split,
    Hypergraph, EXHAUSTIVE_MAX_N, HYPER_BRUTE_MAX_N,
};
use direx::spectral::{default_t_max, fast_cheeger, lambda2star_solve, with_degree_pi};
use direx::{Constants, DiGraph, Error};
use serde::Serialize;
use serde_json::{json, Value};

const CONSTANTS_ENV: &str = "DIREX_CONSTANTS";

#[derive(Parser)]
#[command(name = "direx", version, about = "Directed edge expansion: exact, approximate and certified")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated instance to stdout.
    Gen {
        #[command(subcommand)]
        kind: GenArg,
        #[arg(long, default_value_t = 0, global = true)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = GraphFormat::Text, global = true)]
        format: GraphFormat,
    },
    /// Run a solver on an input file.
    Run(RunArgs),
}

#[derive(Subcommand, Clone)]
enum GenArg {
    Cycle { n: usize },
    Bicycle { n: usize },
    Hypercube { d: usize },
    Complete { n: usize },
    Planted { n1: usize, n2: usize, p: f64, q: f64, w_cross: f64 },
    Dag { n: usize, p: f64 },
    Strong { n: usize, p: f64 },
}

impl From<GenArg> for GenKind {
    fn from(a: GenArg) -> Self {
        match a {
            GenArg::Cycle { n } => GenKind::Cycle { n },
            GenArg::Bicycle { n } => GenKind::Bicycle { n },
            GenArg::Hypercube { d } => GenKind::Hypercube { d },
            GenArg::Complete { n } => GenKind::Complete { n },
            GenArg::Planted { n1, n2, p, q, w_cross } => GenKind::Planted { n1, n2, p, q, w_cross },
            GenArg::Dag { n, p } => GenKind::Dag { n, p },
            GenArg::Strong { n, p } => GenKind::Strong { n, p },
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
enum GraphFormat {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(ValueEnum, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
enum ReduceKind {
    Vertex,
    Hyper,
}

#[derive(Args, Serialize)]
struct RunArgs {
    #[command(subcommand)]
    command: Command,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Iteration or round count.
    #[arg(short = 'T', long = "rounds", global = true)]
    rounds: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// JSON file overriding any subset of the solver constants.
    #[arg(long, env = CONSTANTS_ENV, global = true)]
    constants: Option<PathBuf>,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
enum Command {
    /// Exact expansion of a cut, or of the best cut by enumeration.
    Expansion {
        input: PathBuf,
        /// Enumerate all cuts (the default when no --set is given).
        #[arg(long)]
        brute: bool,
        /// Evaluate this vertex set instead, e.g. `--set 0,2,3`.
        #[arg(long, value_delimiter = ',')]
        set: Option<Vec<usize>>,
        /// Vertex expansion of a graph.
        #[arg(long, conflicts_with = "hyper")]
        vertex: bool,
        /// Expansion of a hypergraph input.
        #[arg(long)]
        hyper: bool,
    },
    /// Sparse cut with a dual certificate; searches over kappa unless --kappa is set.
    Sparsest {
        input: PathBuf,
        /// Write the certificate, if any, to this file.
        #[arg(long)]
        cert_out: Option<PathBuf>,
    },
    /// Cut within the Cheeger envelope for degree weights.
    Cheeger { input: PathBuf },
    /// Reweighted second eigenvalue for degree weights.
    Lambda2star { input: PathBuf },
    /// Cut-matching game: bipartite player on the input weights, or the
    /// flow player on the graph when --kappa is set.
    Cutmatch { input: PathBuf },
    /// Check a certificate against a graph (weights scaled to total 1).
    Certify { cert: PathBuf, graph: PathBuf },
    /// Reduce vertex or hypergraph expansion to edge expansion.
    Reduce {
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: ReduceKind,
        /// Write the reduced graph in text format to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Rejected(Value),
    Input(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Domain(_) => Failure::Input(e.to_string()),
            Error::Budget(_) | Error::Solver(_) | Error::Invariant(_) => Failure::Solver(e.to_string()),
        }
    }
}

type Out = Result<Value, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<DiGraph, Failure> {
    parse_graph_any(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_hypergraph(path: &Path) -> Result<Hypergraph, Failure> {
    parse_hypergraph(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_constants(path: Option<&Path>) -> Result<Constants, Failure> {
    match path {
        None => Ok(Constants::default()),
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
    }
}

fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

/// Smallest `φ` over all cuts, by the cheapest exact enumerator for `n`.
fn exact_phi(g: &DiGraph) -> Result<(Vec<usize>, f64), Failure> {
    if g.n() <= BRUTE_MAX_N {
        Ok(phi_brute(g)?)
    } else if g.n() <= EXHAUSTIVE_MAX_N {
        Ok(phi_exhaustive(g)?)
    } else {
        Err(Failure::Input(format!("enumeration limited to n <= {EXHAUSTIVE_MAX_N}")))
    }
}

fn expansion(input: &Path, set: Option<&[usize]>, vertex: bool, hyper: bool) -> Out {
    let (measure, value, set) = if hyper {
        let h = load_hypergraph(input)?;
        match set {
            Some(s) => ("hyper_phi", hyper_phi_set(&h, s)?, s.to_vec()),
            None => {
                let (s, v) = hyper_phi_brute(&h)?;
                ("hyper_phi", v, s)
            }
        }
    } else {
        let g = load_graph(input)?;
        match (vertex, set) {
            (true, Some(s)) => ("psi", psi_set(&g, s)?, s.to_vec()),
            (true, None) => {
                let (s, v) = psi_brute(&g)?;
                ("psi", v, s)
            }
            (false, Some(s)) => ("phi", phi_set(&g, s)?, s.to_vec()),
            (false, None) => {
                let (s, v) = exact_phi(&g)?;
                ("phi", v, s)
            }
        }
    };
    Ok(json!({ "measure": measure, "exact": true, "set": set, "value": value }))
}

fn sparsest(input: &Path, cert_out: Option<&Path>, a: &RunArgs, consts: &Constants) -> Out {
    let g = load_graph(input)?;
    let eps = a.epsilon.unwrap_or(0.25);
    let (result, cert) = match a.kappa {
        Some(kappa) => {
            let run = solve_sparsest(&g.normalized(), kappa, eps, a.seed, consts)?;
            match run.outcome {
                SparsestOutcome::Cut(cut) => {
                    let cut = direx::CutResult::new(&g, cut.set, cut.witness)?;
                    (json!({ "outcome": "cut", "cut": cut, "trace": run.trace }), None)
                }
                SparsestOutcome::Certified(cert) => {
                    let body = json!({
                        "outcome": "certified",
                        "certificate_value": cert.value,
                        "lower_bound": cert.value / 2.0,
                        "trace": run.trace,
                    });
                    (body, Some(*cert))
                }
            }
        }
        None => {
            let r = sparsest_cut_search(&g, eps, a.seed, consts)?;
            let body = json!({
                "outcome": "search",
                "cut": r.cut,
                "certificate_value": r.certificate.as_ref().map(|c| c.value),
                "lower_bound": r.lower_bound,
                "steps": r.steps,
            });
            (body, r.certificate)
        }
    };
    if let (Some(path), Some(c)) = (cert_out, &cert) {
        write(path, &c.to_json())?;
    }
    Ok(result)
}

fn certify(cert: &Path, graph: &Path) -> Out {
    let text = read(cert)?;
    let c = DualCertificate::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", cert.display())))?;
    let g = load_graph(graph)?.normalized();
    let check = verify_certificate(&g, &c)?;
    let body = json!({ "accepted": check.ok(), "check": check, "value": c.value, "kappa": c.kappa });
    if check.ok() {
        Ok(body)
    } else {
        Err(Failure::Rejected(body))
    }
}

fn lambda2star(input: &Path, a: &RunArgs, consts: &Constants) -> Out {
    let g = with_degree_pi(&load_graph(input)?)?;
    let eta = a.eta.unwrap_or(consts.lambda_eta);
    let t_max = a.rounds.unwrap_or_else(|| default_t_max(g.n(), eta, consts.lambda_t_cap));
    let s = lambda2star_solve(&g, eta, t_max, consts)?;
    Ok(json!({
        "lambda2": s.lambda2,
        "eta": s.eta,
        "iterations": s.iterations,
        "t_max": s.t_max,
        "min_inner": s.min_inner,
        "argmin_round": s.argmin_round,
        "regret_slack": s.regret_slack,
        "guarantee_holds": s.guarantee_holds,
        "circulation": s.circulation,
        "inner": s.inner,
    }))
}

fn cutmatch(input: &Path, a: &RunArgs, consts: &Constants) -> Result<(Value, Vec<RoundLog>), Failure> {
    let g = load_graph(input)?;
    let mut consts = consts.clone();
    if let Some(eta) = a.eta {
        consts.game_eta = eta;
    }
    if let Some(kappa) = a.kappa {
        let run = approx_via_game(&g, kappa, a.seed, &consts)?;
        let outcome = match &run.outcome {
            GameApprox::Certified(c) => json!({
                "certified": { "lambda2": c.lambda2, "kappa": c.kappa, "lower_bound": c.lower_bound, "rounds": c.rounds }
            }),
            GameApprox::Cut { round, cut } => json!({ "cut": { "round": round, "cut": cut } }),
        };
        let body = json!({ "player": "flow", "outcome": outcome, "regret": run.regret, "rounds": run.rounds });
        return Ok((body, run.rounds));
    }
    let pi = g.normalized().pi().to_vec();
    let t = a.rounds.unwrap_or_else(|| consts.game_rounds(g.n()));
    let player = |s: &GameState, split: &Bipartition| {
        Ok(MatchingMove::Matching { demand: bipartite_matching_player(&s.pi, split), routing: None })
    };
    let r = run_game(player, &pi, t, a.seed, &consts)?;
    let outcome = match &r.outcome {
        GameOutcome::Completed { lambda2, union_lambda2, .. } => {
            json!({ "completed": { "lambda2": lambda2, "union_lambda2": union_lambda2 } })
        }
        GameOutcome::Cut { round, cut } => json!({ "cut": { "round": round, "cut": cut } }),
    };
    let body = json!({ "player": "bipartite", "outcome": outcome, "regret": r.regret, "t_rounds": r.t_rounds, "rounds": r.rounds });
    Ok((body, r.rounds))
}

fn reduce(input: &Path, kind: ReduceKind, out: Option<&Path>) -> Out {
    let (reduced, map, check) = match kind {
        ReduceKind::Vertex => {
            let g = load_graph(input)?;
            let (gs, map) = vertex_split(&g)?;
            let check = if gs.n() <= EXHAUSTIVE_MAX_N {
                let (s, psi) = psi_brute(&g)?;
                let (s2, phi) = phi_exhaustive(&gs)?;
                let lifted = map.lift_vertex_cut(&g, &gs, &s)?;
                let projected = map.project_vertex_cut(&g, &s2)?;
                Some(json!({
                    "original": { "set": s, "value": psi },
                    "reduced": { "set": s2, "value": phi },
                    "lifted": { "value": phi_set(&gs, &lifted)?, "set": lifted },
                    "projected": { "value": psi_set(&g, &projected)?, "set": projected },
                }))
            } else {
                None
            };
            (gs, map, check)
        }
        ReduceKind::Hyper => {
            let h = load_hypergraph(input)?;
            let (gd, map) = hyper_derived(&h)?;
            let check = if h.n() <= HYPER_BRUTE_MAX_N && gd.n() <= EXHAUSTIVE_MAX_N {
                let (s, hv) = hyper_phi_brute(&h)?;
                let (s2, gv) = phi_exhaustive(&gd)?;
                let lifted = map.lift_hyper_cut(&h, &gd, &s)?;
                let projected = map.project_hyper_cut(&s2)?;
                Some(json!({
                    "original": { "set": s, "value": hv },
                    "reduced": { "set": s2, "value": gv },
                    "lifted": { "value": phi_set(&gd, &lifted)?, "set": lifted },
                    "projected": { "value": hyper_phi_set(&h, &projected)?, "set": projected },
                }))
            } else {
                None
            };
            (gd, map, check)
        }
    };
    if let Some(path) = out {
        write(path, &graph_to_text(&reduced))?;
    }
    Ok(json!({ "map": map, "graph": GraphJson::from(&reduced), "correspondence": check }))
}

/// `key: value` lines, values as compact JSON.
fn render_text(doc: &Value) -> String {
    let mut s = String::new();
    let mut put = |k: &str, v: &Value| {
        let v = match v {
            Value::String(x) => x.clone(),
            other => other.to_string(),
        };
        s.push_str(&format!("{k}: {v}\n"));
    };
    put("command", &doc["command"]);
    put("seed", &doc["config"]["seed"]);
    if let Some(map) = doc["result"].as_object() {
        for (k, v) in map {
            put(k, v);
        }
    }
    s
}

fn run(a: &RunArgs) -> Result<String, Failure> {
    let consts = load_constants(a.constants.as_deref())?;
    if a.format == Format::Csv && !matches!(a.command, Command::Cutmatch { .. }) {
        return Err(Failure::Input("csv output is only available for cutmatch round logs".into()));
    }
    let result = match &a.command {
        Command::Expansion { input, set, vertex, hyper, .. } => expansion(input, set.as_deref(), *vertex, *hyper)?,
        Command::Sparsest { input, cert_out } => sparsest(input, cert_out.as_deref(), a, &consts)?,
        Command::Cheeger { input } => to_value(fast_cheeger(&load_graph(input)?, a.seed, &consts)?),
        Command::Lambda2star { input } => lambda2star(input, a, &consts)?,
        Command::Cutmatch { input } => {
            let (body, rounds) = cutmatch(input, a, &consts)?;
            if a.format == Format::Csv {
                return Ok(rounds_csv(&rounds));
            }
            body
        }
        Command::Certify { cert, graph } => match certify(cert, graph) {
            Err(Failure::Rejected(body)) => return Err(Failure::Rejected(envelope(a, &consts, body))),
            other => other?,
        },
        Command::Reduce { input, kind, out } => reduce(input, *kind, out.as_deref())?,
    };
    let doc = envelope(a, &consts, result);
    Ok(match a.format {
        Format::Text => render_text(&doc),
        _ => pretty(&doc),
    })
}

fn envelope(a: &RunArgs, consts: &Constants, result: Value) -> Value {
    let name = to_value(&a.command)["name"].clone();
    json!({
        "command": name,
        "config": {
            "seed": a.seed,
            "command": a.command,
            "epsilon": a.epsilon,
            "kappa": a.kappa,
            "eta": a.eta,
            "rounds": a.rounds,
            "format": a.format,
            "constants_file": a.constants,
            "constants": consts,
        },
        "result": result,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json renders");
    s.push('\n');
    s
}

fn gen(kind: GenArg, seed: u64, format: GraphFormat) -> Result<String, Failure> {
    let kind = GenKind::from(kind);
    let inst = generate(&kind, seed)?;
    Ok(match format {
        GraphFormat::Json => pretty(
            &json!({ "kind": kind, "seed": seed, "graph": GraphJson::from(&inst.graph), "planted": inst.planted }),
        ),
        GraphFormat::Text => {
            let mut s = format!("# {}\n# seed {seed}\n", serde_json::to_string(&kind).expect("kind renders"));
            if let Some(p) = &inst.planted {
                let side: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                s.push_str(&format!("# planted {}\n", side.join(" ")));
            }
            s.push_str(&graph_to_text(&inst.graph));
            s
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.cmd {
        Cmd::Gen { kind, seed, format } => gen(kind, seed, format),
        Cmd::Run(a) => run(&a),
    };
    match out {
        Ok(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Err(Failure::Rejected(doc)) => {
            print!("{}", pretty(&doc));
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
