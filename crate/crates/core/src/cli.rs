//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 compute. Failures also print one
//! JSON line `{"error":<kind>,"code":<n>,"message":<text>}` on stderr.
//!
//! `--config <file>` reads `key = value` lines whose keys are the long flag
//! names of the subcommand (without dashes). A key only applies when the flag
//! is absent from the command line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::baselines::{fit_lda, fit_pca, PcaSpec};
use crate::dataset::{load_dataset, Format};
use crate::error::Error;
use crate::eval::{benchmark, dimension_sweep, param_sweep, write_rows_csv, Protocol, SearchSpace, SweptParam};
use crate::graph::{between_class_graph, knn_neighbors, knn_within_class, within_class_graph};
use crate::model_io::SavedModel;
use crate::mpda::{fit_mpda, fit_pmpda, partition_dataset, MpdaParams, NeighborScope, PmpdaParams};
use crate::partition::PartitionParams;
use crate::{Algorithm, Dataset};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_COMPUTE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "mpda", version, about = "Supervised dimensionality reduction with manifold partition discriminant analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and save it.
    Fit(FitArgs),
    /// Project a data file with a saved model; writes an embeddings CSV.
    Transform(TransformArgs),
    /// Repeated-split 1-NN benchmark with cross-validated hyperparameters.
    Benchmark(BenchArgs),
    /// Accuracy against dimensionality, or against one hyperparameter.
    Sweep(SweepArgs),
    /// Patch sizes, linearity and members per class, as JSON.
    PartitionInspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FileFormat {
    Csv,
    Libsvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scope {
    /// k-NN over all points, keep same-class pairs.
    Global,
    /// k-NN among same-class points.
    Class,
}

impl From<Scope> for NeighborScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Global => NeighborScope::GlobalThenFilter,
            Scope::Class => NeighborScope::ClassRestricted,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Labeled data file (label in the first column for CSV).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FileFormat,
    /// Skip one header line (CSV).
    #[arg(long)]
    header: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, Error> {
        let format = match self.format {
            FileFormat::Csv => Format::Csv { header: self.header },
            FileFormat::Libsvm => Format::Libsvm,
        };
        load_dataset(&self.data, format)
    }
}

#[derive(Debug, Args)]
struct Common {
    /// key = value file mirroring the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for splits.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct ManifoldArgs {
    /// Neighbors for the geodesic graph and for growing split sides.
    #[arg(long, default_value_t = 6)]
    k_prime: usize,
    /// Largest allowed patch.
    #[arg(long, default_value_t = 10)]
    max_patch: usize,
    /// Partition on Euclidean distances only.
    #[arg(long)]
    euclidean_only: bool,
    /// Variance fraction kept by tangent bases.
    #[arg(long, default_value_t = 0.95)]
    energy: f64,
    #[arg(long, value_enum, default_value = "global")]
    scope: Scope,
    /// Cap on the pencil size for the pairwise variant.
    #[arg(long, default_value_t = 8000)]
    max_total: usize,
}

impl ManifoldArgs {
    fn partition(&self) -> PartitionParams {
        PartitionParams {
            k_prime: self.k_prime,
            max_patch: self.max_patch,
            euclidean_only: self.euclidean_only,
        }
    }

    fn space(&self) -> SearchSpace {
        SearchSpace {
            partition: self.partition(),
            energy: self.energy,
            scope: self.scope.into(),
            max_total: self.max_total,
            ..SearchSpace::default()
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    manifold: ManifoldArgs,
    /// mpda, pmpda, lda or pca.
    #[arg(long)]
    algo: Algorithm,
    /// Embedding dimensionality (default: C−1 for lda, energy rule for pca, 1 otherwise).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-3)]
    alpha: f64,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the within- and between-class weights as i,j,w triplets
    /// (within.csv, between.csv) into this directory.
    #[arg(long)]
    dump_graphs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: Common,
    /// Embeddings CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    #[arg(long, default_value_t = 20)]
    splits: usize,
    #[arg(long, default_value_t = 4)]
    folds: usize,
    /// PCA-reduce inputs wider than this before fitting.
    #[arg(long, default_value_t = 100)]
    preprocess_above: usize,
    #[arg(long, default_value_t = 0.95)]
    preprocess_energy: f64,
    /// Never PCA-preprocess.
    #[arg(long)]
    no_preprocess: bool,
}

impl ProtocolArgs {
    fn protocol(&self, common: &Common) -> Protocol {
        Protocol {
            train_fraction: self.train_fraction,
            splits: self.splits,
            folds: self.folds,
            seed: common.seed,
            preprocess_above: (!self.no_preprocess).then_some(self.preprocess_above),
            preprocess_energy: self.preprocess_energy,
            jobs: common.jobs,
        }
    }
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    manifold: ManifoldArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// baseline, pca, lda, mpda or pmpda.
    #[arg(long)]
    algo: Algorithm,
    #[arg(long, value_delimiter = ',', default_values_t = vec![3, 5, 7, 10])]
    k_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-1, 1.0, 1e1, 1e2])]
    gamma_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-4, 1e-3, 1e-2])]
    alpha_grid: Vec<f64>,
    /// Dimensionalities, e.g. `1..60` or `2,4,8` (default depends on the algorithm).
    #[arg(long)]
    m_grid: Option<String>,
    /// Full JSON report; stdout when neither output is given.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Per-split CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    manifold: ManifoldArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(long)]
    algo: Algorithm,
    /// Dimension sweep over this range, e.g. `1..10`.
    #[arg(long, conflicts_with = "param")]
    dims: Option<String>,
    /// Hyperparameter to sweep: k, gamma or alpha.
    #[arg(long, requires = "values")]
    param: Option<SweptParam>,
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Dimensionality grid for the parameter sweep's cross-validation.
    #[arg(long)]
    m_grid: Option<String>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-3)]
    alpha: f64,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 6)]
    k_prime: usize,
    #[arg(long, default_value_t = 10)]
    max_patch: usize,
    #[arg(long)]
    euclidean_only: bool,
    /// Only this class (original label value).
    #[arg(long)]
    class: Option<i64>,
    /// JSON output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Why a run failed, and the exit code for it.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Compute(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Compute(_) => EXIT_COMPUTE,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Data(_) => "data",
            Failure::Compute(_) => "compute",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Compute(m) => m,
        }
    }

    /// The single stderr line describing this failure.
    pub fn line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "code": self.code(), "message": self.message() }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter(_) => Failure::Usage(msg),
            Error::Parse { .. }
            | Error::EmptyDataset
            | Error::DegenerateSplit { .. }
            | Error::KTooLarge { .. }
            | Error::DimensionMismatch { .. }
            | Error::EmptyTrainSet
            | Error::LengthMismatch(..)
            | Error::DegenerateFolds { .. }
            | Error::ModelFormat(_)
            | Error::Io(_) => Failure::Data(msg),
            Error::AsymmetricInput { .. }
            | Error::ShapeMismatch(_)
            | Error::LayoutMismatch(_)
            | Error::SolverFailure(_)
            | Error::ResourceLimit(_) => Failure::Compute(msg),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Run the CLI on `argv` (including the program name); returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    match dispatch(argv) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.line());
            f.code()
        }
    }
}

fn dispatch(argv: Vec<String>) -> Outcome {
    let argv = merge_config(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            eprint!("{}", e.render());
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            return Err(Failure::Usage(first.trim_start_matches("error: ").to_string()));
        }
    };
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Transform(a) => transform(a),
        Command::Benchmark(a) => bench(a),
        Command::Sweep(a) => sweep(a),
        Command::PartitionInspect(a) => inspect(a),
    }
}

/// Splice `--config` entries into `argv` right after the subcommand, skipping
/// flags already present on the command line.
fn merge_config(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let (Some(path), Some(sub)) = (path, argv.get(1)) else {
        return Ok(argv);
    };
    let cmd = Cli::command();
    let Some(sub_cmd) = cmd.find_subcommand(sub) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Data(format!("config {path}: {e}")))?;
    let given: Vec<&str> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();

    let mut extra = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config {path}:{}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config" && key != "help")
            .ok_or_else(|| Failure::Usage(format!("config {path}:{}: unknown key '{key}' for {sub}", lineno + 1)))?;
        if given.contains(&key.as_str()) {
            continue;
        }
        if arg.get_action().takes_values() {
            extra.push(format!("--{key}"));
            extra.push(value.to_string());
        } else {
            match value {
                "true" | "1" | "yes" => extra.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                _ => {
                    return Err(Failure::Usage(format!(
                        "config {path}:{}: '{key}' expects true or false",
                        lineno + 1
                    )))
                }
            }
        }
    }
    let mut out = argv[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

/// `a..b` (inclusive) or a comma list.
fn parse_dims(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("bad dimensionality list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a == 0 || a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn io_fail(e: io::Error) -> Failure {
    Failure::Data(e.to_string())
}

fn fit(a: FitArgs) -> Outcome {
    let ds = a.data.load()?;
    let d = ds.dim();
    let space = a.manifold.space();
    let saved: SavedModel<f64> = match a.algo {
        Algorithm::Baseline => return Err(Failure::Usage("the baseline has no model to fit".into())),
        Algorithm::Pca => {
            let spec = match a.m {
                Some(m) => PcaSpec::Components(m),
                None => PcaSpec::Energy(a.manifold.energy),
            };
            (&fit_pca(ds.features(), spec)?).into()
        }
        Algorithm::Lda => {
            let m = a.m.unwrap_or_else(|| ds.n_classes().saturating_sub(1).clamp(1, d));
            (&fit_lda(&ds, m)?).into()
        }
        Algorithm::Mpda => {
            let params = MpdaParams {
                k: a.k,
                partition: space.partition,
                gamma: a.gamma,
                alpha: a.alpha,
                energy: space.energy,
                m: a.m.unwrap_or(1),
                scope: space.scope,
            };
            (&fit_mpda(&ds, &params)?).into()
        }
        Algorithm::Pmpda => {
            let params = PmpdaParams {
                k: a.k,
                gamma: a.gamma,
                alpha: a.alpha,
                energy: space.energy,
                m: a.m.unwrap_or(1),
                scope: space.scope,
                max_total: space.max_total,
            };
            (&fit_pmpda(&ds, &params)?).into()
        }
    };
    saved.save(&a.out)?;

    if let Some(dir) = &a.dump_graphs {
        std::fs::create_dir_all(dir).map_err(io_fail)?;
        let x = ds.features();
        let nb = knn_neighbors(x, a.k)?;
        let within = match space.scope {
            NeighborScope::GlobalThenFilter => within_class_graph(&nb, ds.labels())?,
            NeighborScope::ClassRestricted => within_class_graph(&knn_within_class(x, ds.labels(), a.k)?, ds.labels())?,
        };
        let between = between_class_graph(x, ds.labels(), &nb)?;
        within.write_triplets(writer(Some(&dir.join("within.csv")))?).map_err(io_fail)?;
        between.write_triplets(writer(Some(&dir.join("between.csv")))?).map_err(io_fail)?;
    }

    #[derive(Serialize)]
    struct Summary<'a> {
        algorithm: Algorithm,
        n: usize,
        d: usize,
        m: usize,
        eigenvalues: &'a [f64],
        model: String,
    }
    let summary = Summary {
        algorithm: a.algo,
        n: ds.n(),
        d,
        m: saved.projection.ncols(),
        eigenvalues: &saved.eigenvalues,
        model: a.out.display().to_string(),
    };
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    Ok(())
}

/// Embeddings as CSV: no header, one row per point, shortest round-trip decimals.
pub fn write_embeddings<W: Write>(emb: &DMatrix<f64>, mut out: W) -> io::Result<()> {
    let mut line = String::new();
    for row in emb.row_iter() {
        line.clear();
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

fn transform(a: TransformArgs) -> Outcome {
    let model = SavedModel::<f64>::load(&a.model)?;
    let ds = a.data.load()?;
    let emb = model.transform(ds.features())?;
    write_embeddings(&emb, writer(a.out.as_deref())?).map_err(io_fail)
}

fn bench(a: BenchArgs) -> Outcome {
    let ds = a.data.load()?;
    let space = SearchSpace {
        k: a.k_grid.clone(),
        gamma: a.gamma_grid.clone(),
        alpha: a.alpha_grid.clone(),
        m: a.m_grid.as_deref().map(parse_dims).transpose()?.unwrap_or_default(),
        ..a.manifold.space()
    };
    let protocol = a.protocol.protocol(&a.common);
    let report = benchmark(&ds, a.algo, &space, &protocol)?;
    if let Some(p) = &a.csv {
        report.write_csv(writer(Some(p))?)?;
    }
    if a.json.is_some() || a.csv.is_none() {
        let mut w = writer(a.json.as_deref())?;
        report.write_json(&mut w)?;
        writeln!(w).map_err(io_fail)?;
        w.flush().map_err(io_fail)?;
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Outcome {
    let ds = a.data.load()?;
    let space = SearchSpace {
        k: vec![a.k],
        gamma: vec![a.gamma],
        alpha: vec![a.alpha],
        m: a.m_grid.as_deref().map(parse_dims).transpose()?.unwrap_or_default(),
        ..a.manifold.space()
    };
    let protocol = a.protocol.protocol(&a.common);
    let out = writer(a.out.as_deref())?;
    match (&a.dims, a.param) {
        (Some(dims), None) => {
            let rows = dimension_sweep(&ds, a.algo, &parse_dims(dims)?, &space, &protocol)?;
            write_rows_csv(&rows, out)?;
        }
        (None, Some(param)) => {
            let rows = param_sweep(&ds, a.algo, param, &a.values, &space, &protocol)?;
            write_rows_csv(&rows, out)?;
        }
        _ => return Err(Failure::Usage("sweep needs exactly one of --dims or --param".into())),
    }
    Ok(())
}

fn inspect(a: InspectArgs) -> Outcome {
    let ds = a.data.load()?;
    let params = PartitionParams {
        k_prime: a.k_prime,
        max_patch: a.max_patch,
        euclidean_only: a.euclidean_only,
    };
    if params.k_prime == 0 || params.max_patch == 0 {
        return Err(Failure::Usage("k-prime and max-patch must be at least 1".into()));
    }
    let parts = partition_dataset(&ds, &params)?;

    #[derive(Serialize)]
    struct Patch<'a> {
        size: usize,
        linearity: f64,
        members: &'a [usize],
    }
    #[derive(Serialize)]
    struct Class<'a> {
        class: i64,
        size: usize,
        patches: Vec<Patch<'a>>,
    }
    let mut classes: BTreeMap<usize, Class> = BTreeMap::new();
    for (p, members) in parts.patches.iter().enumerate() {
        let c = parts.class_of_patch[p];
        let label = ds.original_label(c);
        if a.class.is_some_and(|want| want != label) {
            continue;
        }
        let entry = classes.entry(c).or_insert_with(|| Class {
            class: label,
            size: 0,
            patches: Vec::new(),
        });
        entry.size += members.len();
        entry.patches.push(Patch {
            size: members.len(),
            linearity: parts.linearity[p],
            members,
        });
    }
    if let Some(want) = a.class {
        if classes.is_empty() {
            return Err(Failure::Usage(format!("no class with label {want}")));
        }
    }
    let body = serde_json::json!({ "classes": classes.into_values().collect::<Vec<_>>() });
    let mut w = writer(a.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &body).map_err(|e| Failure::Data(e.to_string()))?;
    writeln!(w).map_err(io_fail)?;
    w.flush().map_err(io_fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_dims("2,5").unwrap(), vec![2, 5]);
        assert!(parse_dims("0..3").is_err());
        assert!(parse_dims("x").is_err());
    }

    #[test]
    fn unknown_algorithm_is_usage() {
        assert_eq!(run(["mpda", "fit", "--algo", "unknown", "--data", "x.csv", "--out", "m.bin"]), EXIT_USAGE);
    }

    #[test]
    fn embeddings_full_precision() {
        let mut buf = Vec::new();
        write_embeddings(&DMatrix::from_row_slice(1, 2, &[0.1 + 0.2, -1.0]), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0.30000000000000004,-1\n");
    }
}
