//! `curvlab`: curvature, coupling and heat-flow computations on weighted
//! graphs from the command line.
//!
//! Exit status: 0 on success, 1 when a check fails (the report is still
//! written), 2 on usage or input errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use curvlab::coupling::{
    build_perfect_coupling, coupling_comparison, coupling_heat_bound, coupling_marginal_check, simulate_coupled_walks,
};
use curvlab::curvature::{curvature_all, kappa, kappa_dual, PairSelection};
use curvlab::error::Error;
use curvlab::generate::Family;
use curvlab::graph::Graph;
use curvlab::heat::{dirichlet_heat, heat_apply, phi_profile, PHI_TOLERANCE};
use curvlab::io::{read_graph_file, GraphFile};
use curvlab::report::{render_table, to_json, CheckEntry, Status};
use curvlab::spectral::{cheeger, spectrum};
use curvlab::transport::wasserstein1;
use curvlab::verify::{verify_inequalities, VerifyConfig};

#[derive(Parser, Debug)]
#[command(name = "curvlab", version, about = "Ollivier curvature, coupling and heat-flow toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GraphSource {
    /// Graph file (JSON, or TSV for .tsv/.txt)
    #[arg(long, conflicts_with = "family")]
    input: Option<PathBuf>,
    /// Generated family, e.g. `cycle(6)`, or a bare name used with --params
    #[arg(long)]
    family: Option<String>,
    /// key=value list for a bare family name, e.g. `n=6`
    #[arg(long, requires = "family")]
    params: Option<String>,
    /// Run each connected component separately instead of rejecting the input
    #[arg(long)]
    per_component: bool,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Output path (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Table,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Pairs {
    Edges,
    All,
}

impl From<Pairs> for PairSelection {
    fn from(p: Pairs) -> Self {
        match p {
            Pairs::Edges => PairSelection::Edges,
            Pairs::All => PairSelection::All,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph as a graph file
    Gen {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        output: Output,
    },
    /// Ollivier curvature of vertex pairs
    Curvature {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        output: Output,
        #[arg(long, value_enum, default_value_t = Pairs::All)]
        pairs: Pairs,
        /// Single pair: first vertex
        #[arg(long, requires = "y")]
        x: Option<String>,
        /// Single pair: second vertex
        #[arg(long, requires = "x")]
        y: Option<String>,
    },
    /// Build the perfect coupling chain and check it
    Coupling {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        output: Output,
        /// Times for the non-coalescence bound
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 1.0, 4.0, 16.0])]
        t: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Pairs::All)]
        pairs: Pairs,
        /// Monte Carlo samples per time for the pair --x/--y
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, requires = "y")]
        x: Option<String>,
        #[arg(long, requires = "x")]
        y: Option<String>,
    },
    /// Heat semigroup P_t f, or the comparison function with --phi
    Heat {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        output: Output,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0])]
        t: Vec<f64>,
        /// Initial values as `vertex=value` pairs; unlisted vertices are 0
        #[arg(long, value_delimiter = ',')]
        f: Vec<String>,
        /// Dirichlet set S as a vertex list; the flow is killed outside S
        #[arg(long, value_delimiter = ',')]
        dirichlet: Option<Vec<String>>,
        /// Evaluate phi_t(r) instead; needs no graph when --q-min is given
        #[arg(long)]
        phi: bool,
        #[arg(long)]
        q_min: Option<f64>,
        #[arg(long, default_value_t = 10)]
        r_max: usize,
    },
    /// Eigenvalues and eigenfunctions of -Laplacian
    Spectrum {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        output: Output,
    },
    /// Exact Cheeger constant (n <= 20)
    Cheeger {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        output: Output,
    },
    /// W1 distance between two densities w.r.t. the measure
    Wasserstein {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        output: Output,
        /// `vertex=density` pairs
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        nu: Vec<String>,
    },
    /// Run the full inequality harness
    Verify {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        output: Output,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 1.0, 4.0, 16.0])]
        t: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 32)]
        n_family: usize,
        #[arg(long, value_enum, default_value_t = Pairs::All)]
        pairs: Pairs,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        /// Run the checks even without certified non-negative curvature
        #[arg(long)]
        force: bool,
    },
}

/// Error with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonReversible { .. }
            | Error::AsymmetricSupport { .. }
            | Error::NonPositiveRate { .. }
            | Error::NonPositiveMass { .. }
            | Error::DisconnectedGraph { .. }
            | Error::NoEdges
            | Error::UnknownVertex(_)
            | Error::DuplicateVertex(_)
            | Error::DuplicateRate { .. }
            | Error::SelfLoop(_)
            | Error::BadParams(_)
            | Error::EqualEndpoints
            | Error::MassMismatch { .. }
            | Error::NegativeTime(_)
            | Error::TooLargeForExact { .. }
            | Error::Parse { .. } => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load(source: &GraphSource) -> CliResult<Vec<Graph>> {
    let file = match (&source.input, &source.family) {
        (Some(path), None) => read_graph_file(path)?,
        (None, Some(fam)) => {
            let family = match &source.params {
                Some(p) => Family::from_named(fam.trim(), p)?,
                None if fam.contains('(') => Family::parse(fam)?,
                None => return Err(usage(format!("family {fam:?} needs --params or the call syntax name(args)"))),
            };
            GraphFile::from_graph(&family.build()?)
        }
        _ => return Err(usage("exactly one of --input or --family is required")),
    };
    if source.per_component {
        Ok(file.to_components()?)
    } else {
        Ok(vec![file.to_graph()?])
    }
}

fn write_out(output: &Output, text: &str) -> CliResult<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure { code: 1, message: e.to_string() })
        }
    }
}

/// One JSON value per component; a single component is written bare.
fn emit_json(output: &Output, values: Vec<Value>) -> CliResult<()> {
    let v = if values.len() == 1 { values.into_iter().next().unwrap() } else { Value::Array(values) };
    write_out(output, &to_json(&v))
}

fn emit(output: &Output, values: Vec<Value>, tables: Vec<String>) -> CliResult<()> {
    match output.format {
        Format::Json => emit_json(output, values),
        Format::Table => write_out(output, &tables.join("\n")),
    }
}

fn assignments(g: &Graph, items: &[String]) -> CliResult<Vec<f64>> {
    let mut f = vec![0.0; g.n()];
    for item in items {
        let (k, v) = item.split_once('=').ok_or_else(|| usage(format!("expected vertex=value, got {item:?}")))?;
        let x = g.vertex(k.trim())?;
        f[x] = v.trim().parse().map_err(|_| usage(format!("cannot parse value in {item:?}")))?;
    }
    Ok(f)
}

fn entries_table(entries: &[CheckEntry]) -> String {
    let mut rows = vec![["check".to_string(), "status".into(), "lhs".into(), "rhs".into(), "slack".into(), "detail".into()]];
    for e in entries {
        rows.push([
            e.check_id.clone(),
            e.status.as_str().into(),
            format!("{:.6e}", e.lhs),
            format!("{:.6e}", e.rhs),
            format!("{:.3e}", e.slack),
            e.detail.clone(),
        ]);
    }
    render_table(&rows)
}

fn cmd_gen(source: &GraphSource, output: &Output) -> CliResult<bool> {
    let graphs = load(source)?;
    let values: Vec<Value> = graphs.iter().map(|g| serde_json::to_value(GraphFile::from_graph(g)).unwrap()).collect();
    let tables = graphs
        .iter()
        .map(|g| {
            let mut rows = vec![["u".to_string(), "v".into(), "q_uv".into(), "q_vu".into()]];
            for (x, y) in g.edges() {
                rows.push([g.label(x).into(), g.label(y).into(), g.rate(x, y).to_string(), g.rate(y, x).to_string()]);
            }
            render_table(&rows)
        })
        .collect();
    emit(output, values, tables)?;
    Ok(true)
}

fn cmd_curvature(source: &GraphSource, output: &Output, pairs: Pairs, pair: Option<(&str, &str)>) -> CliResult<bool> {
    let mut values = Vec::new();
    let mut tables = Vec::new();
    for g in load(source)? {
        if let Some((a, b)) = pair {
            let (x, y) = (g.vertex(a)?, g.vertex(b)?);
            let (k, kd) = (kappa(&g, x, y)?, kappa_dual(&g, x, y)?);
            values.push(json!({"x": a, "y": b, "distance": g.dist(x, y), "kappa": k, "kappa_dual": kd}));
            tables.push(render_table(&[
                ["x".into(), "y".into(), "d".into(), "kappa".into(), "kappa_dual".into()],
                [a.to_string(), b.to_string(), g.dist(x, y).to_string(), format!("{k:.12}"), format!("{kd:.12}")],
            ]));
            continue;
        }
        let map = curvature_all(&g, pairs.into())?;
        let list: Vec<Value> = map
            .kappa
            .iter()
            .map(|(&(x, y), &k)| json!({"x": g.label(x), "y": g.label(y), "distance": g.dist(x, y), "kappa": k}))
            .collect();
        values.push(json!({
            "min_kappa": map.min_kappa,
            "argmin": [g.label(map.argmin.0), g.label(map.argmin.1)],
            "nonneg": map.nonneg,
            "pairs": list,
        }));
        let mut rows = vec![["x".to_string(), "y".into(), "d".into(), "kappa".into()]];
        for (&(x, y), &k) in &map.kappa {
            rows.push([g.label(x).into(), g.label(y).into(), g.dist(x, y).to_string(), format!("{k:.12}")]);
        }
        let mut t = render_table(&rows);
        t.push_str(&format!(
            "min kappa = {:.12} at {}-{} (non-negative: {})\n",
            map.min_kappa,
            g.label(map.argmin.0),
            g.label(map.argmin.1),
            map.nonneg
        ));
        tables.push(t);
    }
    emit(output, values, tables)?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_coupling(
    source: &GraphSource,
    output: &Output,
    t: &[f64],
    pairs: Pairs,
    samples: usize,
    seed: u64,
    pair: Option<(&str, &str)>,
) -> CliResult<bool> {
    let mut ok = true;
    let mut values = Vec::new();
    let mut tables = Vec::new();
    for g in load(source)? {
        let cg = build_perfect_coupling(&g)?;
        let mut entries = coupling_marginal_check(&g, &cg);
        let map = curvature_all(&g, pairs.into())?;
        if map.nonneg {
            entries.extend(coupling_heat_bound(&g, &cg, &map, t)?);
        } else {
            entries.extend(coupling_comparison(&g, &cg, t)?);
        }
        let mut mc = Vec::new();
        if samples > 0 {
            let (x, y) = match pair {
                Some((a, b)) => (g.vertex(a)?, g.vertex(b)?),
                None => g.edges()[0],
            };
            if x == y {
                return Err(Error::EqualEndpoints.into());
            }
            for &ti in t {
                let est = simulate_coupled_walks(&g, &cg, x, y, ti, samples, seed)?;
                mc.push(json!({
                    "x": g.label(x), "y": g.label(y), "t": ti, "samples": est.samples,
                    "p_hat": est.p_hat, "std_err": est.std_err, "ci99": [est.ci.0, est.ci.1],
                    "bound": est.bound, "pass": est.pass,
                }));
                ok &= est.pass;
            }
        }
        ok &= entries.iter().all(|e| e.status != Status::Fail);
        tables.push(entries_table(&entries));
        values.push(json!({
            "states": cg.states(),
            "certified_nonneg": map.nonneg,
            "entries": entries,
            "monte_carlo": mc,
        }));
    }
    emit(output, values, tables)?;
    Ok(ok)
}

#[allow(clippy::too_many_arguments)]
fn cmd_heat(
    source: &GraphSource,
    output: &Output,
    t: &[f64],
    f: &[String],
    dirichlet: Option<&[String]>,
    phi: bool,
    q_min: Option<f64>,
    r_max: usize,
) -> CliResult<bool> {
    if phi {
        let qs: Vec<f64> = match q_min {
            Some(q) => vec![q],
            None => load(source)?.iter().map(|g| g.q_min()).collect(),
        };
        let mut values = Vec::new();
        let mut rows = vec![["q_min".to_string(), "t".into(), "r".into(), "phi".into()]];
        for q in qs {
            for &ti in t {
                let sol = phi_profile(q, ti, r_max, PHI_TOLERANCE)?;
                for (r, v) in sol.phi.iter().enumerate() {
                    rows.push([q.to_string(), ti.to_string(), r.to_string(), format!("{v:.15}")]);
                }
                values.push(json!({"q_min": q, "t": ti, "phi": sol.phi, "truncation_level": sol.truncation_level}));
            }
        }
        let table = render_table(&rows);
        return emit(output, values, vec![table]).map(|_| true);
    }
    let mut values = Vec::new();
    let mut tables = Vec::new();
    for g in load(source)? {
        if f.is_empty() {
            return Err(usage("heat needs --f vertex=value,... (or --phi)"));
        }
        let f0 = assignments(&g, f)?;
        let set = match dirichlet {
            Some(s) => Some(s.iter().map(|v| g.vertex(v.trim())).collect::<Result<Vec<_>, _>>()?),
            None => None,
        };
        let mut rows = vec![["t".to_string(), "vertex".into(), "value".into()]];
        let mut out = Vec::new();
        for &ti in t {
            let u = match &set {
                Some(s) => dirichlet_heat(&g, s, &f0, ti)?,
                None => heat_apply(&g, &f0, ti)?,
            };
            for x in 0..g.n() {
                rows.push([ti.to_string(), g.label(x).into(), format!("{:.15}", u[x])]);
            }
            let vals: serde_json::Map<String, Value> = (0..g.n()).map(|x| (g.label(x).to_string(), json!(u[x]))).collect();
            out.push(json!({"t": ti, "values": vals}));
        }
        values.push(json!({"results": out}));
        tables.push(render_table(&rows));
    }
    emit(output, values, tables)?;
    Ok(true)
}

fn cmd_spectrum(source: &GraphSource, output: &Output) -> CliResult<bool> {
    let mut values = Vec::new();
    let mut tables = Vec::new();
    for g in load(source)? {
        let s = spectrum(&g)?;
        let funcs: Vec<Value> = s
            .eigenfunctions
            .iter()
            .map(|f| Value::Object((0..g.n()).map(|x| (g.label(x).to_string(), json!(f[x]))).collect()))
            .collect();
        values.push(json!({"eigenvalues": s.eigenvalues, "eigenfunctions": funcs}));
        let mut rows = vec![["k".to_string(), "eigenvalue".into()]];
        for (k, l) in s.eigenvalues.iter().enumerate() {
            rows.push([k.to_string(), format!("{l:.12}")]);
        }
        tables.push(render_table(&rows));
    }
    emit(output, values, tables)?;
    Ok(true)
}

fn cmd_cheeger(source: &GraphSource, output: &Output) -> CliResult<bool> {
    let mut values = Vec::new();
    let mut tables = Vec::new();
    for g in load(source)? {
        let c = cheeger(&g)?;
        let witness: Vec<&str> = c.witness.iter().map(|&x| g.label(x)).collect();
        values.push(json!({"h": c.h, "witness": witness, "boundary": c.boundary, "mass": c.mass}));
        tables.push(format!("h = {:.12}\nA = {{{}}}\n|dA| = {}\nm(A) = {}\n", c.h, witness.join(", "), c.boundary, c.mass));
    }
    emit(output, values, tables)?;
    Ok(true)
}

fn cmd_wasserstein(source: &GraphSource, output: &Output, mu: &[String], nu: &[String]) -> CliResult<bool> {
    let mut values = Vec::new();
    let mut tables = Vec::new();
    for g in load(source)? {
        let (a, b) = (assignments(&g, mu)?, assignments(&g, nu)?);
        let w = wasserstein1(&g, &a, &b)?;
        values.push(json!({"w1": w}));
        tables.push(format!("W1 = {w:.12}\n"));
    }
    emit(output, values, tables)?;
    Ok(true)
}

fn cmd_verify(source: &GraphSource, output: &Output, cfg: VerifyConfig) -> CliResult<bool> {
    let mut reports = Vec::new();
    for g in load(source)? {
        reports.push(verify_inequalities(&g, &cfg)?);
    }
    let ok = reports.iter().all(|r| r.all_pass());
    match output.format {
        Format::Json => emit_json(output, reports.iter().map(|r| serde_json::to_value(r).unwrap()).collect())?,
        Format::Table => write_out(output, &reports.iter().map(|r| r.to_table()).collect::<Vec<_>>().join("\n"))?,
    }
    Ok(ok)
}

fn configure_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var("CURVLAB_WORKERS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("CURVLAB_WORKERS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure { code: 1, message: e.to_string() })
}

fn pair<'a>(x: &'a Option<String>, y: &'a Option<String>) -> Option<(&'a str, &'a str)> {
    x.as_deref().zip(y.as_deref())
}

fn run(cli: Cli) -> CliResult<bool> {
    configure_workers()?;
    match &cli.command {
        Command::Gen { source, output } => cmd_gen(source, output),
        Command::Curvature { source, output, pairs, x, y } => cmd_curvature(source, output, *pairs, pair(x, y)),
        Command::Coupling { source, output, t, pairs, samples, seed, x, y } => {
            cmd_coupling(source, output, t, *pairs, *samples, *seed, pair(x, y))
        }
        Command::Heat { source, output, t, f, dirichlet, phi, q_min, r_max } => {
            cmd_heat(source, output, t, f, dirichlet.as_deref(), *phi, *q_min, *r_max)
        }
        Command::Spectrum { source, output } => cmd_spectrum(source, output),
        Command::Cheeger { source, output } => cmd_cheeger(source, output),
        Command::Wasserstein { source, output, mu, nu } => cmd_wasserstein(source, output, mu, nu),
        Command::Verify { source, output, t, seed, samples, n_family, pairs, tolerance, force } => cmd_verify(
            source,
            output,
            VerifyConfig {
                t_grid: t.clone(),
                seed: *seed,
                n_family: *n_family,
                samples: *samples,
                pairs: (*pairs).into(),
                tolerance: *tolerance,
                force: *force,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
