//! Command-line front end: resolve a norm and tail ratios (or a simulation
//! model) from flags and JSON spec files, dispatch to the library, and emit
//! JSON or CSV.
//!
//! Exit codes: 0 success, 2 validation or input error (the message names the
//! violated invariant), 3 when FI(m) is undefined and a numeric value was
//! requested without `--allow-undefined`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fragility::cluster::{cluster_pmf, ClusterReport};
use fragility::dnorm::DNorm;
use fragility::exceedance::{
    tail_mass_vanishes, ExceedanceReport, FiReport, TailRatios, VanishReport,
};
use fragility::simulate::{
    convergence_sweep, estimates, format_sig12, EmpiricalEstimates, SimModel,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_UNDEFINED: u8 = 3;

enum CliError {
    Validation(String),
    Undefined(usize),
}

impl CliError {
    fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<fragility::Error> for CliError {
    fn from(e: fragility::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o error: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "fragility",
    version,
    about = "Exceedance-count limits, fragility indices and cluster lengths \
             for d-variate systems given by a D-norm and marginal tail ratios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the result to a file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional distribution of the exceedance count: coefficients a_k,
    /// probabilities p_k and the fragility index.
    Acdec {
        #[command(flatten)]
        norm: NormArgs,
        /// Also report FI(m) and the vanishing check at this m.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Fragility index FI, optionally the conditioned FI(m).
    Fi {
        #[command(flatten)]
        norm: NormArgs,
        /// Condition on at least m exceedances.
        #[arg(long)]
        m: Option<usize>,
        /// Exit 0 with a null value when FI(m) is undefined instead of
        /// failing with exit code 3.
        #[arg(long)]
        allow_undefined: bool,
    },
    /// Distribution of the exceedance run length after the pivot.
    Cluster {
        #[command(flatten)]
        norm: NormArgs,
    },
    /// Check whether the chance of m or more simultaneous exceedances
    /// vanishes in the limit.
    Vanishes {
        #[command(flatten)]
        norm: NormArgs,
        /// Threshold count m.
        #[arg(long)]
        m: usize,
    },
    /// Sample a model and report empirical estimates at each quantile.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Independent replicates (seeds seed, seed+1, ...).
        #[arg(long, default_value_t = 1)]
        replicates: usize,
    },
    /// Empirical-versus-limit convergence table over a quantile ladder.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,
    },
}

#[derive(Args)]
struct NormArgs {
    /// Norm family: lambda:L, max, mo:THETA, iid_uniform, tripoint,
    /// gen:PATH, or a path to a norm spec JSON file.
    #[arg(long)]
    norm: String,
    /// Marginal tail ratios, comma separated; the pivot entry must be 1.
    /// Defaults to all ones.
    #[arg(long)]
    gamma: Option<String>,
    /// Dimension, for families given without --gamma.
    #[arg(long)]
    d: Option<usize>,
    /// Pivot component, 1-based.
    #[arg(long, default_value_t = 1)]
    kappa: usize,
}

#[derive(Args)]
struct SimArgs {
    /// Model spec JSON file.
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Quantile ladder in (0,1), comma separated, strictly increasing.
    #[arg(long)]
    quantiles: String,
    /// Rows per replicate.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pivot component, 1-based; defaults to the model's own pivot.
    #[arg(long)]
    kappa: Option<usize>,
}

fn parse_float_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::validation(format!("{what}: `{t}` is not a number")))
        })
        .collect()
}

fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))
}

impl NormArgs {
    fn resolve(&self) -> CliResult<(DNorm, TailRatios)> {
        let gamma = self
            .gamma
            .as_deref()
            .map(|g| parse_float_list(g, "--gamma"))
            .transpose()?;
        let spec_dim = |d: Option<usize>| -> CliResult<usize> {
            d.or(self.d)
                .or_else(|| gamma.as_ref().map(Vec::len))
                .ok_or_else(|| CliError::validation("dimension unknown: pass --gamma or --d"))
        };
        let norm = match self.norm.split_once(':') {
            Some(("lambda", v)) => {
                let l: f64 = v
                    .parse()
                    .map_err(|_| CliError::validation(format!("--norm lambda: bad value `{v}`")))?;
                DNorm::lambda(spec_dim(None)?, l)?
            }
            Some(("mo", v)) => {
                let theta: f64 = v
                    .parse()
                    .map_err(|_| CliError::validation(format!("--norm mo: bad value `{v}`")))?;
                DNorm::marshall_olkin(spec_dim(None)?, theta)?
            }
            Some(("gen", path)) => DNorm::from_json_str(&read_to_string(Path::new(path))?)?,
            Some((family, _)) => {
                return Err(CliError::validation(format!(
                    "unknown norm family `{family}` (expected lambda:L, max, mo:THETA, \
                     iid_uniform, tripoint or gen:PATH)"
                )))
            }
            None => match self.norm.as_str() {
                "max" => DNorm::max_norm(spec_dim(None)?)?,
                "iid_uniform" => DNorm::iid_uniform(spec_dim(None)?)?,
                "tripoint" => {
                    DNorm::from_generator(fragility::DiscreteGenerator::tripoint())?
                }
                path => DNorm::from_json_str(&read_to_string(Path::new(path))?)?,
            },
        };
        let d = norm.dim();
        if let Some(want) = self.d {
            if want != d {
                return Err(CliError::validation(format!(
                    "--d {want} disagrees with the norm dimension {d}"
                )));
            }
        }
        if self.kappa == 0 || self.kappa > d {
            return Err(CliError::validation(format!(
                "--kappa {} out of range 1..={d} (1-based)",
                self.kappa
            )));
        }
        let kappa = self.kappa - 1;
        let tr = match gamma {
            Some(g) => {
                if g.len() != d {
                    return Err(CliError::validation(format!(
                        "--gamma has {} entries but the norm dimension is {d}",
                        g.len()
                    )));
                }
                TailRatios::new(g, kappa)?
            }
            None => TailRatios::new(vec![1.0; d], kappa)?,
        };
        Ok((norm, tr))
    }
}

struct SimSetup {
    model: SimModel,
    quantiles: Vec<f64>,
    kappa: Option<usize>,
}

impl SimArgs {
    fn resolve(&self) -> CliResult<SimSetup> {
        let model = SimModel::from_json_str(&read_to_string(&self.model)?)?;
        let quantiles = parse_float_list(&self.quantiles, "--quantiles")?;
        if quantiles.is_empty() {
            return Err(CliError::validation("--quantiles: at least one value"));
        }
        let kappa = match self.kappa {
            Some(k) => {
                if k == 0 || k > model.dim() {
                    return Err(CliError::validation(format!(
                        "--kappa {k} out of range 1..={} (1-based)",
                        model.dim()
                    )));
                }
                Some(k - 1)
            }
            None => None,
        };
        Ok(SimSetup {
            model,
            quantiles,
            kappa,
        })
    }
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(format_sig12).unwrap_or_default()
}

fn acdec_csv(report: &ExceedanceReport) -> String {
    let mut out = String::from("k,a,p\n");
    for (k, a) in report.a.iter().enumerate() {
        let p = if k == 0 {
            String::new()
        } else {
            format_sig12(report.p[k - 1])
        };
        let _ = writeln!(out, "{k},{},{p}", format_sig12(*a));
    }
    out
}

fn fi_csv(report: &FiReport) -> String {
    match &report.fi_m {
        None => format!("fi\n{}\n", format_sig12(report.fi)),
        Some(fm) => format!(
            "fi,m,fi_m\n{},{},{}\n",
            format_sig12(report.fi),
            fm.m,
            csv_opt(fm.value)
        ),
    }
}

fn cluster_csv(report: &ClusterReport) -> String {
    let mut out = String::from("k,survival,pmf,cdf\n");
    for k in 0..report.pmf.len() {
        let _ = writeln!(
            out,
            "{k},{},{},{}",
            format_sig12(report.survival[k]),
            format_sig12(report.pmf[k]),
            format_sig12(report.cdf[k])
        );
    }
    out
}

fn vanishes_csv(report: &VanishReport) -> String {
    let witness = report
        .witness
        .as_ref()
        .map(|w| {
            w.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_default();
    format!("m,result,witness\n{},{},{witness}\n", report.m, report.result)
}

fn simulate_csv(d: usize, runs: &[(usize, Vec<(f64, EmpiricalEstimates)>)]) -> String {
    let mut out = String::from("replicate,q,s,k,p_hat,se,fi_hat");
    for i in 1..=d {
        let _ = write!(out, ",gamma_hat_{i}");
    }
    out.push('\n');
    for (rep, per_q) in runs {
        for (q, est) in per_q {
            for k in 1..=d {
                let _ = write!(
                    out,
                    "{rep},{},{},{k},{},{},{}",
                    format_sig12(*q),
                    format_sig12(est.threshold),
                    csv_opt(est.counts.as_ref().map(|c| c.p_hat[k - 1])),
                    csv_opt(est.counts.as_ref().map(|c| c.se[k - 1])),
                    csv_opt(est.counts.as_ref().map(|c| c.fi_hat)),
                );
                for i in 0..d {
                    out.push(',');
                    out.push_str(&csv_opt(
                        est.gamma.as_ref().map(|g| g.gamma_hat[i]),
                    ));
                }
                out.push('\n');
            }
        }
    }
    out
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::validation(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Acdec { norm, m } => {
            let (norm, tr) = norm.resolve()?;
            let report = ExceedanceReport::build(&norm, &tr, *m, *m)?;
            match cli.format {
                Format::Json => to_json(&report),
                Format::Csv => Ok(acdec_csv(&report)),
            }
        }
        Command::Fi {
            norm,
            m,
            allow_undefined,
        } => {
            let (norm, tr) = norm.resolve()?;
            let report = FiReport::build(&norm, &tr, *m)?;
            if let Some(fm) = &report.fi_m {
                if fm.value.is_none() && !allow_undefined {
                    return Err(CliError::Undefined(fm.m));
                }
            }
            match cli.format {
                Format::Json => to_json(&report),
                Format::Csv => Ok(fi_csv(&report)),
            }
        }
        Command::Cluster { norm } => {
            let (norm, tr) = norm.resolve()?;
            let report = cluster_pmf(&norm, &tr)?.to_report();
            match cli.format {
                Format::Json => to_json(&report),
                Format::Csv => Ok(cluster_csv(&report)),
            }
        }
        Command::Vanishes { norm, m } => {
            let (norm, tr) = norm.resolve()?;
            let report = tail_mass_vanishes(&norm, &tr, *m)?.into_report(*m);
            match cli.format {
                Format::Json => to_json(&report),
                Format::Csv => Ok(vanishes_csv(&report)),
            }
        }
        Command::Simulate { sim, replicates } => {
            if *replicates == 0 {
                return Err(CliError::validation("--replicates must be at least 1"));
            }
            let setup = sim.resolve()?;
            let kappa = setup.kappa.unwrap_or_else(|| setup.model.default_kappa());
            let mut runs = Vec::with_capacity(*replicates);
            for rep in 0..*replicates {
                let batch = setup.model.sample(sim.n, sim.seed + rep as u64)?;
                let mut per_q = Vec::with_capacity(setup.quantiles.len());
                for &q in &setup.quantiles {
                    let s = setup.model.threshold(q)?;
                    per_q.push((q, estimates(&batch, s, kappa)?));
                }
                runs.push((rep + 1, per_q));
            }
            match cli.format {
                Format::Json => {
                    let nested: Vec<Vec<&EmpiricalEstimates>> = runs
                        .iter()
                        .map(|(_, per_q)| per_q.iter().map(|(_, e)| e).collect())
                        .collect();
                    to_json(&nested)
                }
                Format::Csv => Ok(simulate_csv(setup.model.dim(), &runs)),
            }
        }
        Command::Sweep { sim } => {
            let setup = sim.resolve()?;
            let table = convergence_sweep(
                &setup.model,
                &setup.quantiles,
                sim.n,
                sim.seed,
                setup.kappa,
            )?;
            match cli.format {
                Format::Json => to_json(&table),
                Format::Csv => Ok(table.to_csv()),
            }
        }
    }
}

fn emit(cli: &Cli, content: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("FRAGILITY_THREADS") {
        match v.parse::<usize>() {
            Ok(t) if t >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => {
                eprintln!("error: FRAGILITY_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(EXIT_VALIDATION);
            }
        }
    }
    let cli = Cli::parse();
    match run(&cli).and_then(|content| emit(&cli, &content)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(CliError::Undefined(m)) => {
            eprintln!(
                "error: FI({m}) is undefined (the conditioning tail mass vanishes); \
                 pass --allow-undefined to emit null"
            );
            ExitCode::from(EXIT_UNDEFINED)
        }
    }
}
