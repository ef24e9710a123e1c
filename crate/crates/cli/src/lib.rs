//! Command-line front end for the `easyrepair` library.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use easyrepair::codes::Family;
use easyrepair::metrics::{
    self, column_distance_report, comparison_table, monte_carlo_repair, ErasureModel, SimulationConfig, SweepMode,
    Verdict,
};
use easyrepair::repair::{availability_profile, locality};
use easyrepair::storage::{self, Shard};
use easyrepair::{BitMatrix, CodeId, ErasurePattern, Error, LinearCode, RepairEngine};

#[derive(Debug, Parser)]
#[command(
    name = "easyrepair",
    version,
    about = "XOR-only erasure codes with easy and parallel repair"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the generator and parity-check matrices of a code.
    Gen(GenArgs),
    /// Split a file into shard files.
    Encode(EncodeArgs),
    /// Rebuild the original file from the shards present in a directory.
    Decode(DecodeArgs),
    /// Regenerate missing shard files in place.
    Repair(RepairArgs),
    /// Print a repair plan for an erasure pattern.
    Plan(PlanArgs),
    /// Per-node disjoint repair group counts.
    Availability(AvailabilityArgs),
    /// Exact minimum distance (and column distances for UM codes).
    Distance(DistanceArgs),
    /// Sweep erasure patterns for the Easy Repair Property or parallel capacity.
    Verify(VerifyArgs),
    /// Monte Carlo repair statistics.
    Simulate(SimulateArgs),
    /// Comparison table of every family of one dimension.
    Table(TableArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub code: String,
    /// Print G only.
    #[arg(long)]
    pub print: bool,
    /// Also write G to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub code: String,
    /// Input file; standard input when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub dir: PathBuf,
    /// Must match the manifest when given.
    #[arg(long)]
    pub code: Option<String>,
    /// Treat these shards as lost even if their files exist.
    #[arg(long, value_delimiter = ',')]
    pub erased: Vec<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub code: Option<String>,
    /// Shards to rebuild; defaults to every absent shard file.
    #[arg(long, value_delimiter = ',')]
    pub missing: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub code: String,
    #[arg(long, value_delimiter = ',')]
    pub erased: Vec<usize>,
    /// Parallel plan with groups of at most R helpers; sequential easy repair
    /// when absent.
    #[arg(long)]
    pub r: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AvailabilityArgs {
    #[arg(long)]
    pub code: String,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    pub code: Option<String>,
    /// Generator in text matrix format.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Last column distance to report for UM codes; defaults to the code's
    /// own horizon.
    #[arg(long)]
    pub s: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    pub code: Option<String>,
    /// Generator in text matrix format.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Check parallel repair with groups of at most R helpers instead of the
    /// Easy Repair Property.
    #[arg(long)]
    pub r: Option<usize>,
    /// Visit every pattern (with at most --max-erasures erasures).
    #[arg(long, conflicts_with = "seed")]
    pub exhaustive: bool,
    /// Erasure cap. With --r: exhaustive runs sweep every size up to it,
    /// sampled runs draw exactly this many.
    #[arg(long)]
    pub max_erasures: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub code: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub trials: u64,
    /// Fixed number of erased nodes per trial.
    #[arg(long, required_unless_present = "prob", conflicts_with = "prob")]
    pub max_erasures: Option<usize>,
    /// Independent per-node erasure probability.
    #[arg(long)]
    pub prob: Option<f64>,
    /// Tally parallel repair for every bound up to R.
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    #[default]
    Text,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// A failed command, carrying its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn failed(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_)
            | Error::InvalidDimension(_)
            | Error::InvalidBound(_)
            | Error::IndexOutOfRange { .. }
            | Error::TooLarge(_)
            | Error::DimensionMismatch { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::failed(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn build_code(id: &str) -> Result<LinearCode, Failure> {
    let id: CodeId = id.parse()?;
    Ok(id.build()?)
}

fn check_indices(indices: &[usize], n: usize) -> Result<(), Failure> {
    match indices.iter().find(|&&i| i >= n) {
        Some(&i) => Err(Error::IndexOutOfRange { index: i, n }.into()),
        None => Ok(()),
    }
}

fn load_engine(code: &Option<String>, input: &Option<PathBuf>) -> Result<(String, RepairEngine), Failure> {
    match (code, input) {
        (Some(id), _) => {
            let c = build_code(id)?;
            Ok((c.id.to_string(), RepairEngine::new(&c)?))
        }
        (None, Some(path)) => {
            let g = BitMatrix::from_text(&fs::read_to_string(path)?)?;
            Ok((
                path.display().to_string(),
                RepairEngine::from_generator(Family::Custom, &g)?,
            ))
        }
        (None, None) => Err(Failure::usage("either --code or --in is required")),
    }
}

fn load_generator(code: &Option<String>, input: &Option<PathBuf>) -> Result<(String, BitMatrix), Failure> {
    match (code, input) {
        (Some(id), _) => {
            let c = build_code(id)?;
            Ok((c.id.to_string(), c.generator))
        }
        (None, Some(path)) => Ok((
            path.display().to_string(),
            BitMatrix::from_text(&fs::read_to_string(path)?)?,
        )),
        (None, None) => Err(Failure::usage("either --code or --in is required")),
    }
}

fn check_manifest_code(manifest: &storage::ShardManifest, code: &Option<String>) -> CmdResult {
    if let Some(id) = code {
        let id: CodeId = id.parse()?;
        if id.to_string() != manifest.code {
            return Err(Failure::usage(format!(
                "--code {id} does not match manifest code {}",
                manifest.code
            )));
        }
    }
    Ok(())
}

/// Runs one parsed command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CmdResult {
    match cli.command {
        Command::Gen(a) => gen(a, out),
        Command::Encode(a) => encode(a, out),
        Command::Decode(a) => decode(a, out),
        Command::Repair(a) => repair(a, out),
        Command::Plan(a) => plan(a, out),
        Command::Availability(a) => availability(a, out),
        Command::Distance(a) => distance(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Table(a) => table(a, out),
    }
}

fn gen(a: GenArgs, out: &mut dyn Write) -> CmdResult {
    let code = build_code(&a.code)?;
    if let Some(path) = &a.out {
        fs::write(path, code.generator.to_text())?;
    }
    write!(out, "{}", code.generator.to_text())?;
    if !a.print {
        write!(out, "\n{}", code.parity_check().to_text())?;
    }
    Ok(())
}

fn encode(a: EncodeArgs, out: &mut dyn Write) -> CmdResult {
    let code = build_code(&a.code)?;
    let payload = match &a.input {
        Some(p) => fs::read(p)?,
        None => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf)?;
            buf
        }
    };
    let (manifest, shards) = storage::encode_object(&code, &payload)?;
    storage::write_dir(&a.dir, &manifest, &shards)?;
    writeln!(
        out,
        "encoded {} bytes with {} into {} shards of {} bytes",
        manifest.payload_length, manifest.code, manifest.n, manifest.fragment_length
    )?;
    Ok(())
}

fn read_dir(dir: &Path, code: &Option<String>) -> Result<(storage::ShardManifest, Vec<Shard>), Failure> {
    let manifest = storage::read_manifest(dir)?;
    check_manifest_code(&manifest, code)?;
    let shards = storage::read_shards(dir, manifest.n)?;
    Ok((manifest, shards))
}

fn decode(a: DecodeArgs, out: &mut dyn Write) -> CmdResult {
    let (manifest, shards) = read_dir(&a.dir, &a.code)?;
    check_indices(&a.erased, manifest.n)?;
    let live: Vec<Shard> = shards.into_iter().filter(|s| !a.erased.contains(&s.index)).collect();
    let payload = storage::decode_object(&manifest, &live)?;
    match &a.out {
        Some(p) => fs::write(p, &payload)?,
        None => out.write_all(&payload)?,
    }
    Ok(())
}

fn repair(a: RepairArgs, out: &mut dyn Write) -> CmdResult {
    let (manifest, shards) = read_dir(&a.dir, &a.code)?;
    check_indices(&a.missing, manifest.n)?;
    let present: Vec<usize> = shards.iter().map(|s| s.index).collect();
    let (live, missing): (Vec<Shard>, Vec<usize>) = if a.missing.is_empty() {
        let missing = (0..manifest.n).filter(|i| !present.contains(i)).collect();
        (shards, missing)
    } else {
        // listed shards are rebuilt even if a (possibly stale) file exists
        let live = shards.into_iter().filter(|s| !a.missing.contains(&s.index)).collect();
        (live, a.missing.clone())
    };
    let (repaired, plan) = storage::repair_shards(&manifest, &live, &missing)?;
    for shard in &repaired {
        storage::write_shard(&a.dir, shard)?;
    }
    write!(out, "{plan}")?;
    Ok(())
}

fn plan(a: PlanArgs, out: &mut dyn Write) -> CmdResult {
    let code = build_code(&a.code)?;
    check_indices(&a.erased, code.n())?;
    let engine = RepairEngine::new(&code)?;
    let pattern = ErasurePattern::new(code.n(), a.erased.iter().copied())?;
    let result = match a.r {
        None => engine.easy_repair_plan(&pattern)?,
        Some(r) => engine.parallel_repair_plan(&pattern, r)?,
    };
    match result {
        Ok(plan) => {
            write!(out, "{plan}")?;
            Ok(())
        }
        Err(failure) => {
            write!(out, "{}", failure.partial)?;
            let residual: Vec<String> = failure.residual.erased().iter().map(usize::to_string).collect();
            Err(Failure::failed(format!(
                "no complete plan; unrepaired nodes {} ({})",
                residual.join(","),
                if failure.correctable {
                    "pattern is correctable"
                } else {
                    "pattern is not correctable"
                }
            )))
        }
    }
}

fn availability(a: AvailabilityArgs, out: &mut dyn Write) -> CmdResult {
    let code = build_code(&a.code)?;
    let profile = availability_profile(&code, a.r)?;
    let header: Vec<String> = (1..=a.r).map(|r| format!("r<={r}")).collect();
    writeln!(out, "node\t{}", header.join("\t"))?;
    for node in &profile.nodes {
        if node.trivial {
            writeln!(out, "{}\tzero", node.node)?;
            continue;
        }
        let counts: Vec<String> = node.counts.iter().map(usize::to_string).collect();
        writeln!(out, "{}\t{}", node.node, counts.join("\t"))?;
    }
    for &(r, t) in &profile.code_level {
        writeln!(out, "t(r={r}) = {t}")?;
    }
    Ok(())
}

fn distance(a: DistanceArgs, out: &mut dyn Write) -> CmdResult {
    let (name, generator) = load_generator(&a.code, &a.input)?;
    if a.s.is_some() && !matches!(a.code.as_deref().map(str::parse::<CodeId>), Some(Ok(CodeId::Um { .. }))) {
        return Err(Failure::usage("--s applies to um:k:s codes only"));
    }
    let d = generator.min_weight_nonzero_rowspan()?;
    writeln!(out, "code {name}: n={} k={} d={d}", generator.cols(), generator.rows())?;
    if let Some(id) = &a.code {
        let id: CodeId = id.parse()?;
        let code = id.build()?;
        if let Ok(r) = locality(&code) {
            let bound = metrics::singleton_like_bound(code.n(), code.k(), r);
            writeln!(out, "locality r={r}; d <= n - k - ceil(k/r) + 2 = {bound}")?;
        }
        if let CodeId::Um { base_k, s } = id {
            let conv = easyrepair::codes::um_simplex(base_k)?;
            let j_max = match a.s {
                Some(j) => j,
                None => (0..=s)
                    .take_while(|j| base_k * (j + 1) <= metrics::CONV_MAX_MESSAGE_BITS)
                    .last()
                    .unwrap_or(0),
            };
            let report = column_distance_report(&conv, j_max)?;
            for (j, dj) in &report.distances {
                writeln!(out, "d_{j} = {dj}")?;
            }
            for (s, ds) in &report.sliding {
                writeln!(out, "sliding s={s}: d = {ds}")?;
            }
            writeln!(out, "d_free <= {}", report.d_free_evidence)?;
        }
    }
    Ok(())
}

fn write_verdict(out: &mut dyn Write, what: &str, name: &str, v: &Verdict) -> io::Result<()> {
    writeln!(out, "{what} {name}: {v}")?;
    if let Some(c) = &v.counterexample {
        writeln!(out, "# erased: {}", c.pattern)?;
        if let Some(f) = &c.failure {
            write!(out, "{}", f.partial)?;
        }
    }
    Ok(())
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let (name, engine) = load_engine(&a.code, &a.input)?;
    let mode = if a.exhaustive {
        SweepMode::Exhaustive {
            max_erasures: a.max_erasures,
        }
    } else {
        let seed = a
            .seed
            .ok_or_else(|| Failure::usage("sampled verification requires --seed (or pass --exhaustive)"))?;
        SweepMode::Sampled {
            seed,
            trials: a.trials,
            max_erasures: a.max_erasures,
        }
    };
    let passed = match a.r {
        None => {
            let v = metrics::verify_easy_repair_engine(&engine, mode, a.workers)?;
            write_verdict(out, "easy-repair", &name, &v)?;
            v.passed()
        }
        Some(r) => {
            let cap = a
                .max_erasures
                .ok_or_else(|| Failure::usage("--r requires --max-erasures"))?;
            let sizes: Vec<usize> = if a.exhaustive { (0..=cap).collect() } else { vec![cap] };
            let mut all = true;
            for e in sizes {
                let v = metrics::verify_parallel_capacity_engine(&engine, r, e, mode, a.workers)?;
                write_verdict(out, &format!("parallel r={r} e={e}"), &name, &v)?;
                all &= v.passed();
                if !v.passed() {
                    break;
                }
            }
            all
        }
    };
    if passed {
        Ok(())
    } else {
        Err(Failure::failed("verification failed"))
    }
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let code = build_code(&a.code)?;
    let model = match (a.max_erasures, a.prob) {
        (Some(e), _) => ErasureModel::Fixed(e),
        (None, Some(p)) => ErasureModel::PerNode(p),
        (None, None) => return Err(Failure::usage("one of --max-erasures or --prob is required")),
    };
    let report = monte_carlo_repair(
        &code,
        &SimulationConfig {
            trials: a.trials,
            model,
            seed: a.seed,
            r_max: a.r,
            workers: a.workers,
        },
    )?;
    write!(out, "{report}")?;
    Ok(())
}

fn table(a: TableArgs, out: &mut dyn Write) -> CmdResult {
    let rows = comparison_table(a.k)?;
    let text = match a.format {
        Format::Tsv => metrics::table_tsv(&rows),
        Format::Text => metrics::table_text(a.k, &rows),
    };
    write!(out, "{text}")?;
    Ok(())
}
