//! The `comix` command line: `mix`, `eval`, `bench` and `stats`.
//!
//! Every command accepts `--config <json>`; flags override file values and
//! unset values fall back to [`Hyperparams::default`]. Failures print
//! `error: <Kind>: <message>` and exit with status 2.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::benchlab::{run_suite, synthetic_batch, BenchSize, Suite};
use crate::energy::{objective_eval, EnergyBreakdown, EnergyModel, Hyperparams, Labeling};
use crate::error::{Error, Result};
use crate::optimizer::{partition_model, partition_ranges, OptimizerConfig};
use crate::pipeline::{mix_batch, SaliencySource};
use crate::saliency::normalize_saliency;
use crate::tensor_io::{load_image_batch, read_container_file, InputBatch, LabelMatrix};

/// Contents of a `--config` file. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
    #[serde(alias = "L")]
    pub levels: Option<u32>,
    #[serde(alias = "s")]
    pub grid_side: Option<usize>,
    #[serde(alias = "partition")]
    pub partition_size: Option<usize>,
    #[serde(alias = "T")]
    pub cycles: Option<usize>,
    pub seed: Option<u64>,
    pub inputs: Option<PathBuf>,
    pub saliency: Option<String>,
    pub labels: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map(Self::load).transpose().map(Option::unwrap_or_default)
    }
}

/// Hyperparameter flags shared by every command.
#[derive(Args, Clone, Debug, Default)]
pub struct ParamFlags {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub levels: Option<u32>,
    #[arg(long)]
    pub grid_side: Option<usize>,
    #[arg(long)]
    pub partition_size: Option<usize>,
    #[arg(long)]
    pub cycles: Option<usize>,
}

/// Flags first, then the config file, then defaults.
pub fn resolve_params(flags: &ParamFlags, file: &CliConfig) -> Result<Hyperparams> {
    let d = Hyperparams::default();
    let params = Hyperparams {
        beta: flags.beta.or(file.beta).unwrap_or(d.beta),
        gamma: flags.gamma.or(file.gamma).unwrap_or(d.gamma),
        eta: flags.eta.or(file.eta).unwrap_or(d.eta),
        tau: flags.tau.or(file.tau).unwrap_or(d.tau),
        alpha: flags.alpha.or(file.alpha).unwrap_or(d.alpha),
        omega: flags.omega.or(file.omega).unwrap_or(d.omega),
        levels: flags.levels.or(file.levels).unwrap_or(d.levels),
        grid_side: flags.grid_side.or(file.grid_side).unwrap_or(d.grid_side),
        partition_size: flags
            .partition_size
            .or(file.partition_size)
            .unwrap_or(d.partition_size),
        cycles: flags.cycles.or(file.cycles).unwrap_or(d.cycles),
    };
    params.validate()?;
    Ok(params)
}

#[derive(Parser, Debug)]
#[command(name = "comix", version, about = "Saliency-guided batch mixup")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimize and assemble a mixed batch.
    Mix(MixArgs),
    /// Print the objective breakdown of a labeling.
    Eval(EvalArgs),
    /// Compare the optimizer with exhaustive search or the permutation baseline.
    Bench(BenchArgs),
    /// Diversity, batch saliency and inputs-per-output over a parameter sweep.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
pub struct MixArgs {
    /// Input batch: a CMTX tensor `m × C × H × W` or a directory of PNGs.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    /// CMTX saliency `m × H × W`, or `proxy` (the default).
    #[arg(long)]
    pub saliency: Option<String>,
    /// CMTX one-hot labels `m × K`; defaults to one class per input.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write `png/output_XXX.png`.
    #[arg(long)]
    pub png: bool,
    /// Also write `timing.json` with per-partition wall times.
    #[arg(long)]
    pub timings: bool,
    #[command(flatten)]
    pub params: ParamFlags,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// CMTX labeling `m' × n × m`.
    #[arg(long)]
    pub labeling: PathBuf,
    /// CMTX saliency `m × H × W`.
    #[arg(long)]
    pub saliency: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Brute,
    Bp,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    /// Comma-separated `m x m' x n` triples; a bare `m` means `m' = m` with
    /// 4 sites (brute) or 16 sites (bp).
    #[arg(long)]
    pub sizes: String,
    #[arg(long, env = "COMIX_JOBS")]
    pub jobs: Option<usize>,
    /// Directory for `bench.csv` and `summary.json`; CSV goes to stdout
    /// otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Tau,
    Gamma,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long, value_enum, default_value = "tau")]
    pub sweep: SweepArg,
    /// Comma-separated parameter values.
    #[arg(long)]
    pub values: String,
    /// Input batch as for `mix`; a seeded synthetic batch when absent.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    #[arg(long)]
    pub saliency: Option<String>,
    /// Size of the synthetic batch.
    #[arg(long, default_value_t = 20)]
    pub batch: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamFlags,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mix(args) => cmd_mix(&args),
        Command::Eval(args) => {
            let breakdown = cmd_eval(&args)?;
            let json = serde_json::to_string_pretty(&breakdown).expect("breakdown serializes");
            println!("{json}");
            Ok(())
        }
        Command::Bench(args) => cmd_bench(&args),
        Command::Stats(args) => cmd_stats(&args),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// A CMTX tensor `m × C × H × W` (`u8` is scaled by 1/255) or a PNG directory.
pub fn load_inputs(path: &Path) -> Result<InputBatch> {
    if path.is_dir() {
        load_image_batch(path)
    } else {
        InputBatch::from_container(&read_container_file(path)?)
    }
}

fn load_saliency_maps(path: &Path, inputs: &InputBatch) -> Result<Vec<f64>> {
    let tensor = read_container_file(path)?;
    tensor.expect_rank(3, "saliency")?;
    let expected = [inputs.len(), inputs.height(), inputs.width()];
    if tensor.shape() != expected {
        return Err(Error::DimensionMismatch(format!(
            "saliency is {:?}, inputs need {:?}",
            tensor.shape(),
            expected
        )));
    }
    Ok(tensor.to_f64_vec())
}

fn saliency_source(arg: Option<&str>, inputs: &InputBatch) -> Result<SaliencySource> {
    match arg {
        None | Some("proxy") => Ok(SaliencySource::Proxy),
        Some(path) => Ok(SaliencySource::Maps(load_saliency_maps(Path::new(path), inputs)?)),
    }
}

/// Writes every file to a temporary sibling first and renames only once all
/// of them are complete.
pub fn write_atomically(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let target = dir.join(name);
        let parent = target.parent().unwrap_or(dir).to_path_buf();
        fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&parent).map_err(|e| Error::io(&parent, e))?;
        tmp.write_all(bytes).map_err(|e| Error::io(&target, e))?;
        staged.push((tmp, target));
    }
    for (tmp, target) in staged {
        tmp.persist(&target)
            .map_err(|e| Error::io(&target, e.error))?;
    }
    Ok(())
}

pub fn cmd_mix(args: &MixArgs) -> Result<()> {
    let file = CliConfig::load_opt(args.config.as_deref())?;
    let params = resolve_params(&args.params, &file)?;
    let inputs_path = args
        .inputs
        .clone()
        .or(file.inputs.clone())
        .ok_or_else(|| Error::Config("--inputs is required".into()))?;
    let out = args
        .out
        .clone()
        .or(file.out.clone())
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    let inputs = load_inputs(&inputs_path)?;
    let saliency = saliency_source(args.saliency.as_deref().or(file.saliency.as_deref()), &inputs)?;
    let labels = args
        .labels
        .clone()
        .or(file.labels.clone())
        .map(|p| read_container_file(&p).and_then(|t| LabelMatrix::from_container(&t)))
        .transpose()?;
    let config = OptimizerConfig {
        params,
        seed: args.seed.or(file.seed).unwrap_or(0),
        ..OptimizerConfig::default()
    };
    let outcome = mix_batch(&inputs, &saliency, labels.as_ref(), &config)?;
    let mut files = outcome.artifacts();
    if args.png {
        files.extend(outcome.png_artifacts()?);
    }
    if args.timings {
        let seconds: Vec<f64> = outcome
            .partitions
            .iter()
            .map(|p| p.stats.wall_time.as_secs_f64())
            .collect();
        let json = serde_json::json!({ "partition_seconds": seconds });
        files.push(("timing.json".into(), json.to_string().into_bytes()));
    }
    write_atomically(&out, &files)
}

/// Objective of a stored labeling, summed over partitions. A labeling covering
/// several partitions must be zero outside its diagonal blocks.
pub fn cmd_eval(args: &EvalArgs) -> Result<EnergyBreakdown> {
    let file = CliConfig::load_opt(args.config.as_deref())?;
    let params = resolve_params(&args.params, &file)?;
    let z = Labeling::from_container(&read_container_file(&args.labeling)?, params.levels)?;
    let tensor = read_container_file(&args.saliency)?;
    tensor.expect_rank(3, "saliency")?;
    let s = tensor.shape();
    let saliency = normalize_saliency(&tensor.to_f64_vec(), s[0], s[1], s[2])?;
    let n = params.grid_side * params.grid_side;
    if z.inputs() != saliency.len() || z.sites() != n {
        return Err(Error::DimensionMismatch(format!(
            "labeling is {}x{}x{}, saliency has {} inputs on a {n}-site grid",
            z.outputs(),
            z.sites(),
            z.inputs(),
            saliency.len()
        )));
    }
    let ranges = partition_ranges(saliency.len(), params.partition_size);
    if ranges.len() == 1 {
        let (model, _) = partition_model(&saliency, &params)?;
        let model = EnergyModel::new(
            model.unary().clone(),
            model.neighborhood(),
            model.compat().clone(),
            params,
            z.outputs(),
        )?;
        return objective_eval(&model, &z);
    }
    if z.outputs() != z.inputs() {
        return Err(Error::DimensionMismatch(format!(
            "a partitioned labeling needs m' = m, got {} outputs for {} inputs",
            z.outputs(),
            z.inputs()
        )));
    }
    let mut sum = EnergyBreakdown::default();
    for r in ranges {
        let mut counts = Vec::with_capacity(r.len() * n * r.len());
        for j in r.clone() {
            for k in 0..n {
                let col = z.column(j, k);
                if col[..r.start].iter().chain(&col[r.end..]).any(|&c| c > 0) {
                    return Err(Error::DimensionMismatch(format!(
                        "output {j} draws on inputs outside its partition {}..{}",
                        r.start, r.end
                    )));
                }
                counts.extend_from_slice(&col[r.clone()]);
            }
        }
        let block = Labeling::from_counts(r.len(), n, r.len(), params.levels, counts)?;
        let (model, _) = partition_model(&saliency.slice(r.start, r.len()), &params)?;
        let b = objective_eval(&model, &block)?;
        sum.unary += b.unary;
        sum.smoothness += b.smoothness;
        sum.compat_raw += b.compat_raw;
        sum.compat_clipped += b.compat_clipped;
        sum.prior += b.prior;
        sum.total += b.total;
    }
    Ok(sum)
}

/// Parses `"2x2x4,3x3x4"`; a bare `m` means `m' = m` with `default_sites`.
pub fn parse_sizes(text: &str, default_sites: usize) -> Result<Vec<BenchSize>> {
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::Config(format!("bad size component `{s}`")))
    };
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split('x').collect();
            match parts.as_slice() {
                [m] => {
                    let m = parse(m)?;
                    Ok(BenchSize { inputs: m, outputs: m, sites: default_sites })
                }
                [m, mo, n] => Ok(BenchSize {
                    inputs: parse(m)?,
                    outputs: parse(mo)?,
                    sites: parse(n)?,
                }),
                _ => Err(Error::Config(format!("bad size `{item}`, expected m x m' x n"))),
            }
        })
        .collect()
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad value `{s}`")))
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let file = CliConfig::load_opt(args.config.as_deref())?;
    let params = resolve_params(&args.params, &file)?;
    let suite = match args.suite {
        SuiteArg::Brute => Suite::Brute,
        SuiteArg::Bp => Suite::Bp,
    };
    let default_sites = match suite {
        Suite::Brute => 4,
        Suite::Bp => 16,
    };
    let sizes = parse_sizes(&args.sizes, default_sites)?;
    if sizes.is_empty() {
        return Err(Error::Config("--sizes is empty".into()));
    }
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let (records, summary) = run_suite(suite, &sizes, args.seeds, &params, jobs)?;

    let mut csv_out = csv::Writer::from_writer(Vec::new());
    for r in &records {
        csv_out.serialize(r).map_err(csv_error)?;
    }
    let csv_bytes = csv_out.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    let mut summary_bytes = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    summary_bytes.push(b'\n');
    match &args.out {
        Some(dir) => write_atomically(
            dir,
            &[
                ("bench.csv".into(), csv_bytes),
                ("summary.json".into(), summary_bytes),
            ],
        ),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&csv_bytes)
                .map_err(|e| Error::io("<stdout>", e))?;
            eprintln!("{}", String::from_utf8_lossy(&summary_bytes));
            Ok(())
        }
    }
}

/// One row of a `stats` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub diversity: f64,
    pub batch_saliency: f64,
    pub inputs_per_output: Vec<usize>,
}

/// Mixes the same batch once per value of the swept parameter.
pub fn sweep(
    inputs: &InputBatch,
    saliency: &SaliencySource,
    base: &OptimizerConfig,
    parameter: SweepArg,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&value| {
            let mut config = base.clone();
            match parameter {
                SweepArg::Tau => config.params.tau = value,
                SweepArg::Gamma => config.params.gamma = value,
            }
            let outcome = mix_batch(inputs, saliency, None, &config)?;
            Ok(SweepRow {
                value,
                diversity: outcome.report.diversity,
                batch_saliency: outcome.report.batch_saliency,
                inputs_per_output: outcome.report.inputs_per_output,
            })
        })
        .collect()
}

pub fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let file = CliConfig::load_opt(args.config.as_deref())?;
    let params = resolve_params(&args.params, &file)?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let values = parse_values(&args.values)?;
    if values.is_empty() {
        return Err(Error::Config("--values is empty".into()));
    }
    let (inputs, saliency) = match args.inputs.clone().or(file.inputs.clone()) {
        Some(path) => {
            let inputs = load_inputs(&path)?;
            let source =
                saliency_source(args.saliency.as_deref().or(file.saliency.as_deref()), &inputs)?;
            (inputs, source)
        }
        None => {
            let batch = synthetic_batch(args.batch, 3, 32, 32, seed)?;
            (batch.inputs, SaliencySource::Maps(batch.saliency))
        }
    };
    let config = OptimizerConfig {
        params,
        seed,
        ..OptimizerConfig::default()
    };
    let rows = sweep(&inputs, &saliency, &config, args.sweep, &values)?;

    let name = match args.sweep {
        SweepArg::Tau => "tau",
        SweepArg::Gamma => "gamma",
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![name.to_string(), "diversity".into(), "batch_saliency".into()];
    header.extend((1..=inputs.len()).map(|c| format!("hist_{c}")));
    w.write_record(&header).map_err(csv_error)?;
    for row in &rows {
        let mut record = vec![
            row.value.to_string(),
            row.diversity.to_string(),
            row.batch_saliency.to_string(),
        ];
        record.extend(row.inputs_per_output.iter().map(|c| c.to_string()));
        w.write_record(&record).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    match &args.out {
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let name = path
                .file_name()
                .ok_or_else(|| Error::Config(format!("bad output path {}", path.display())))?;
            write_atomically(dir, &[(name.to_string_lossy().into_owned(), bytes)])
        }
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let file: CliConfig = serde_json::from_str(r#"{"tau": 0.5, "L": 3}"#).unwrap();
        let flags = ParamFlags {
            tau: Some(0.2),
            ..ParamFlags::default()
        };
        let p = resolve_params(&flags, &file).unwrap();
        assert_eq!(p.tau, 0.2);
        assert_eq!(p.levels, 3);
        assert_eq!(p.beta, 0.32);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(serde_json::from_str::<CliConfig>(r#"{"lambda": 1}"#).is_err());
    }

    #[test]
    fn size_lists() {
        let sizes = parse_sizes("2x2x4, 5", 16).unwrap();
        assert_eq!(sizes[0], BenchSize { inputs: 2, outputs: 2, sites: 4 });
        assert_eq!(sizes[1], BenchSize { inputs: 5, outputs: 5, sites: 16 });
        assert!(parse_sizes("2x2", 4).is_err());
        assert!(parse_sizes("0", 4).is_err());
    }
}
