mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use fswgnn::analysis::{metric_distances, report_from_distances, RHO_FLOOR, EMB_FLOOR};
use fswgnn::ds::DsError;
use fswgnn::wl::wl_colors_until_stable;
use fswgnn::{
    default_hidden_dim, ds_metric, enumerate_small_graphs, gen_neighbors_match, gen_transfer_graph,
    holder_fit, load_corpus, load_graph, smoothness_profile, tmd, wl_test, AnalysisError, Floors,
    FswGnnModel, FswParams, GnnError, Graph, GraphCorpus, GraphMetric, Multiset, Norm, Topology,
    UpdateKind,
};

#[derive(Parser)]
#[command(name = "fswgnn", version, about = "FSW graph embeddings, WL refinement and WL-equivalent graph metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph or an exhaustive small-graph corpus.
    Gen(GenArgs),
    /// WL colors of one graph, or a WL equivalence test between two.
    Wl(WlArgs),
    /// FSW embedding of a multiset given as a JSON array of vectors.
    Embed(EmbedArgs),
    /// FSW-GNN forward pass on one graph.
    Forward(ForwardArgs),
    /// Distance between two graphs, or a distance matrix over a corpus.
    Metric(MetricArgs),
    /// Empirical distortion of the FSW-GNN embedding over a corpus.
    Distortion(DistortionArgs),
    /// Dirichlet energy and MAD of every layer of a forward pass.
    Smoothness(SmoothnessArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Ring,
    Crossring,
    Cliquepath,
    NeighborsMatch,
    Small,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    topology: GenKind,
    /// Problem radius (transfer graphs, neighbors-match).
    #[arg(long)]
    radius: Option<usize>,
    /// Vertex count for `small` (1..=6).
    #[arg(long)]
    vertices: Option<usize>,
    /// Constant feature for `small`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    feature: Vec<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct WlArgs {
    first: PathBuf,
    second: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum UpdateArg {
    Linear,
    Hidden,
}

impl From<UpdateArg> for UpdateKind {
    fn from(u: UpdateArg) -> Self {
        match u {
            UpdateArg::Linear => UpdateKind::Linear,
            UpdateArg::Hidden => UpdateKind::Hidden,
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hidden width m [default: 2 N d + 2, N = largest vertex count].
    #[arg(long = "hidden-dim")]
    hidden_dim: Option<usize>,
    /// Message-passing rounds T [default: N].
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, value_enum, default_value = "linear")]
    update: UpdateArg,
}

impl ModelArgs {
    fn build(&self, d: usize, max_vertices: usize) -> Result<FswGnnModel, CliError> {
        let m = self.hidden_dim.unwrap_or_else(|| default_hidden_dim(max_vertices, d));
        let t = self.iterations.unwrap_or(max_vertices);
        FswGnnModel::with_update(d, m, t, self.seed, self.update.into()).map_err(CliError::from)
    }
}

#[derive(Args)]
struct EmbedArgs {
    /// JSON array of equal-length vectors.
    multiset: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dimension m.
    #[arg(long = "hidden-dim")]
    hidden_dim: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ForwardArgs {
    graph: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Also emit every H^(t).
    #[arg(long)]
    node_embeddings: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricKind {
    Ds,
    Tmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    L2,
}

#[derive(Args)]
struct MetricArgs {
    #[arg(value_enum)]
    kind: MetricKind,
    /// Two graph files, or one corpus file with `--matrix`.
    #[arg(required = true, num_args = 1..=2)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "l1")]
    norm: NormArg,
    /// Frank-Wolfe duality-gap tolerance for the l2 norm.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Computation-tree depth K for tmd [default: N + 1].
    #[arg(long)]
    depth: Option<usize>,
    /// Treat the single input as a corpus and emit a CSV distance matrix.
    #[arg(long)]
    matrix: bool,
    /// Include the transport plan (ds only).
    #[arg(long)]
    plan: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistortionMetric {
    DsL1,
    DsL2,
    Tmd,
}

#[derive(Args)]
struct DistortionArgs {
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "ds-l1")]
    metric: DistortionMetric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "hidden-dim")]
    hidden_dim: Option<usize>,
    /// One or more iteration counts; several give one report each.
    #[arg(long, value_delimiter = ',')]
    iterations: Vec<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = RHO_FLOOR)]
    rho_floor: f64,
    #[arg(long, default_value_t = EMB_FLOOR)]
    emb_floor: f64,
    /// Per-pair rows `i,j,rho,emb_dist,ratio` (last iteration count).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothnessArgs {
    graph: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Exit code 1 for bad input, 2 when a computation fails.
#[derive(Debug)]
enum CliError {
    Invalid(String),
    Compute(String),
}

impl From<GnnError> for CliError {
    fn from(e: GnnError) -> Self {
        Self::Invalid(e.to_string())
    }
}

impl From<DsError> for CliError {
    fn from(e: DsError) -> Self {
        match e {
            DsError::DimensionMismatch(..) | DsError::BadTolerance(_) => Self::Invalid(e.to_string()),
            DsError::Lp { .. } | DsError::NotConverged { .. } => Self::Compute(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Metric { .. } | AnalysisError::InsufficientPairs { .. } => Self::Compute(e.to_string()),
            _ => Self::Invalid(e.to_string()),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn read_graph(path: &PathBuf) -> Result<Graph, CliError> {
    load_graph(&read(path)?).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn read_corpus(path: &PathBuf) -> Result<GraphCorpus, CliError> {
    load_corpus(&read(path)?).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_gen(args: GenArgs) -> Result<(), CliError> {
    let radius = || args.radius.ok_or_else(|| invalid("--radius is required for this topology"));
    let text = match args.topology {
        GenKind::Ring | GenKind::Crossring | GenKind::Cliquepath => {
            let topology = match args.topology {
                GenKind::Ring => Topology::Ring,
                GenKind::Crossring => Topology::CrossRing,
                _ => Topology::CliquePath,
            };
            let t = gen_transfer_graph(topology, radius()?).map_err(invalid)?;
            let mut doc = t.graph.to_document();
            doc.label = Some(format!("source={} target={}", t.source, t.target));
            output::to_json(&doc)
        }
        GenKind::NeighborsMatch => output::to_json(&gen_neighbors_match(radius()?).map_err(invalid)?.to_document()),
        GenKind::Small => {
            let n = args.vertices.ok_or_else(|| invalid("--vertices is required for small"))?;
            let corpus = enumerate_small_graphs(n, &args.feature).map_err(invalid)?;
            let docs: Vec<_> = corpus.graphs().iter().map(Graph::to_document).collect();
            output::to_json(&docs)
        }
    };
    emit(&args.output, &text)
}

fn run_wl(args: WlArgs) -> Result<(), CliError> {
    let g1 = read_graph(&args.first)?;
    let text = match &args.second {
        Some(path) => {
            let g2 = read_graph(path)?;
            let verdict = wl_test(&g1, &g2).map_err(invalid)?;
            output::to_json(&json!({"equivalent": verdict.equivalent, "iterations": verdict.iterations}))
        }
        None => {
            let colors = wl_colors_until_stable(&g1);
            output::to_json(&json!({"colors": colors.as_table(), "iterations": colors.rounds()}))
        }
    };
    emit(&args.output, &text)
}

fn run_embed(args: EmbedArgs) -> Result<(), CliError> {
    let multiset: Multiset = serde_json::from_str(&read(&args.multiset)?)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.multiset.display())))?;
    let d = multiset
        .dim()
        .ok_or_else(|| invalid("cannot infer the dimension of an empty multiset"))?;
    let params = FswParams::sample(d, args.hidden_dim, args.seed).map_err(invalid)?;
    let z = fswgnn::embed_multiset(&multiset, &params).map_err(invalid)?;
    emit(&args.output, &output::to_json(&z))
}

fn run_forward(args: ForwardArgs) -> Result<(), CliError> {
    let g = read_graph(&args.graph)?;
    let model = args.model.build(g.feature_dim(), g.num_vertices())?;
    let hs = model.node_embeddings(&g)?;
    let embedding = model.readout_from(hs.last().expect("H0 is always present"));
    #[derive(Serialize)]
    struct Forward {
        graph_embedding: Vec<f64>,
        hidden_dim: usize,
        iterations: usize,
        seed: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        node_embeddings: Option<Vec<Vec<Vec<f64>>>>,
    }
    let out = Forward {
        graph_embedding: embedding,
        hidden_dim: model.hidden_dim(),
        iterations: model.iterations(),
        seed: model.seed(),
        node_embeddings: args.node_embeddings.then(|| hs.iter().map(|h| h.to_rows()).collect()),
    };
    emit(&args.output, &output::to_json(&out))
}

fn tmd_depth(depth: Option<usize>, max_vertices: usize) -> Result<usize, CliError> {
    match depth {
        Some(0) => Err(invalid("--depth must be >= 1")),
        Some(k) => Ok(k),
        None => Ok(max_vertices + 1),
    }
}

fn norm_of(arg: NormArg) -> Norm {
    match arg {
        NormArg::L1 => Norm::L1,
        NormArg::L2 => Norm::L2,
    }
}

fn run_metric(args: MetricArgs) -> Result<(), CliError> {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(invalid(format!("--tol must be positive, got {}", args.tol)));
    }
    if args.matrix {
        let [path] = args.inputs.as_slice() else {
            return Err(invalid("--matrix takes exactly one corpus file"));
        };
        let corpus = read_corpus(path)?;
        let graphs = corpus.graphs();
        let depth = tmd_depth(args.depth, corpus.max_vertices())?;
        let pairs: Vec<(usize, usize)> = (0..graphs.len())
            .flat_map(|i| (i + 1..graphs.len()).map(move |j| (i, j)))
            .collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| pair_distance(args.kind, &graphs[i], &graphs[j], args.norm, args.tol, depth))
            .collect::<Result<Vec<_>, _>>()?;
        let mut matrix = vec![vec![0.0; graphs.len()]; graphs.len()];
        for (&(i, j), v) in pairs.iter().zip(values) {
            matrix[i][j] = v;
            matrix[j][i] = v;
        }
        return emit(&args.output, &output::matrix_csv(&matrix));
    }
    let [a, b] = args.inputs.as_slice() else {
        return Err(invalid("metric needs two graph files (or --matrix with a corpus)"));
    };
    let (g1, g2) = (read_graph(a)?, read_graph(b)?);
    let text = match args.kind {
        MetricKind::Ds => {
            let norm = norm_of(args.norm);
            let result = ds_metric(&g1, &g2, norm, args.tol)?;
            let mut out = json!({"value": result.value, "norm": norm.name()});
            if args.plan {
                out["plan"] = json!(result.plan.rows());
            }
            output::to_json(&out)
        }
        MetricKind::Tmd => {
            let depth = tmd_depth(args.depth, g1.num_vertices().max(g2.num_vertices()))?;
            let value = tmd(&g1, &g2, depth).map_err(invalid)?;
            output::to_json(&json!({"value": value, "depth": depth}))
        }
    };
    emit(&args.output, &text)
}

fn pair_distance(kind: MetricKind, a: &Graph, b: &Graph, norm: NormArg, tol: f64, depth: usize) -> Result<f64, CliError> {
    match kind {
        MetricKind::Ds => Ok(ds_metric(a, b, norm_of(norm), tol)?.value),
        MetricKind::Tmd => tmd(a, b, depth).map_err(invalid),
    }
}

fn run_distortion(args: DistortionArgs) -> Result<(), CliError> {
    let corpus = read_corpus(&args.corpus)?;
    let d = corpus.feature_dim().ok_or_else(|| invalid("corpus is empty"))?;
    let n = corpus.max_vertices();
    let metric = match args.metric {
        DistortionMetric::DsL1 => GraphMetric::DsL1,
        DistortionMetric::DsL2 => GraphMetric::DsL2 { tol: args.tol },
        DistortionMetric::Tmd => GraphMetric::Tmd {
            depth: tmd_depth(args.depth, n)?,
        },
    };
    let floors = Floors {
        rho: args.rho_floor,
        emb: args.emb_floor,
    };
    let m = args.hidden_dim.unwrap_or_else(|| default_hidden_dim(n, d));
    let iterations = if args.iterations.is_empty() { vec![n] } else { args.iterations.clone() };
    let distances = metric_distances(&corpus, metric)?;

    #[derive(Serialize)]
    struct Entry {
        #[serde(flatten)]
        report: fswgnn::DistortionReport,
        hidden_dim: usize,
        holder: Option<fswgnn::HolderFit>,
    }
    let mut entries = Vec::with_capacity(iterations.len());
    for &t in &iterations {
        let model = FswGnnModel::new(d, m, t, args.seed)?;
        let report = report_from_distances(&corpus, &model, &metric.name(), &distances, floors)?;
        let pairs: Vec<(f64, f64)> = report.pairs.iter().map(|p| (p.rho, p.emb_dist)).collect();
        let holder = holder_fit(&pairs, floors.rho).ok();
        entries.push(Entry { report, hidden_dim: m, holder });
    }
    if let (Some(path), Some(last)) = (&args.csv, entries.last()) {
        fs::write(path, last.report.to_csv()).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    }
    let text = if entries.len() == 1 {
        output::to_json(&entries[0])
    } else {
        output::to_json(&entries)
    };
    emit(&args.output, &text)
}

fn run_smoothness(args: SmoothnessArgs) -> Result<(), CliError> {
    let g = read_graph(&args.graph)?;
    let model = args.model.build(g.feature_dim(), g.num_vertices())?;
    let profile = smoothness_profile(&model, &g)?;
    emit(&args.output, &output::to_json(&profile))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Wl(a) => run_wl(a),
        Command::Embed(a) => run_embed(a),
        Command::Forward(a) => run_forward(a),
        Command::Metric(a) => run_metric(a),
        Command::Distortion(a) => run_distortion(a),
        Command::Smoothness(a) => run_smoothness(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
