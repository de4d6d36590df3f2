//! Command-line harness: Monte Carlo experiments over the library with
//! deterministic seeding, TOML configuration, and CSV/JSON emission.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical degeneracy.

mod config;
mod output;

use betamix::error::CoreError;
use betamix::experiments::{run_clt, run_entropy, run_equicontinuity, run_power, run_size};
use betamix::hausman::{analyze, parse_yx_csv, AnalyzeOptions};
use betamix::law::Law;
use betamix::mixing::{simulate, stationary_distribution, ProcessSpec};
use betamix::norm::{beta_norm, NormStatus, QuantileFn};
use clap::{Parser, Subcommand};
use config::ConfigFile;
use std::path::PathBuf;
use std::process::ExitCode;

const ENV_PREFIX: &str = "BETAMIX";

#[derive(Parser)]
#[command(
    name = "betamix",
    version,
    about = "Simulation and inference harness for stationary mixing processes"
)]
struct Cli {
    /// TOML experiment configuration (or BETAMIX_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override (or BETAMIX_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path override (or BETAMIX_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for replication loops (or BETAMIX_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a stationary sample path and emit it as CSV.
    Simulate,
    /// Evaluate the mixing norm of a configured function.
    Norm,
    /// Entropy table for a smoothness ball.
    Entropy,
    /// Finite-dimensional CLT check on a finite chain.
    Clt {
        /// Also dump the replication matrix to this CSV path.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Monte Carlo probe of the equicontinuity exceedance probability.
    Equicontinuity,
    /// Null rejection rates of the linearity statistics.
    Size,
    /// Power across a grid of local-alternative scales.
    Power,
    /// Linearity test on a y,x CSV file.
    Hausman {
        /// Input CSV with header `y,x`.
        file: PathBuf,
        /// Sieve term count (default max(3, ceil(2 n^{1/5}))).
        #[arg(long)]
        kappa: Option<usize>,
        /// HAC bandwidth (default floor(4 (n/100)^{2/9})).
        #[arg(long)]
        bandwidth: Option<usize>,
        /// Use the Hermite basis instead of powers.
        #[arg(long)]
        hermite: bool,
    },
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(format!("{ENV_PREFIX}_{name}")).ok()
}

fn env_parse<T: std::str::FromStr>(name: &str) -> Result<Option<T>, CoreError> {
    match env_var(name) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|_| CoreError::InvalidConfig {
            field: format!("{ENV_PREFIX}_{name}"),
            reason: format!("cannot parse `{raw}`"),
        }),
    }
}

struct Resolved {
    config: Option<ConfigFile>,
    seed_override: Option<u64>,
    threads_override: Option<usize>,
    out: Option<PathBuf>,
}

impl Resolved {
    fn config(&self) -> Result<&ConfigFile, CoreError> {
        self.config.as_ref().ok_or_else(|| CoreError::InvalidConfig {
            field: "--config".into(),
            reason: "this command needs a configuration file".into(),
        })
    }

    fn seed(&self) -> u64 {
        self.seed_override
            .or_else(|| self.config.as_ref().map(|c| c.seed))
            .unwrap_or(0)
    }

    fn threads(&self) -> usize {
        self.threads_override
            .or_else(|| self.config.as_ref().map(|c| c.threads))
            .unwrap_or(1)
            .max(1)
    }
}

fn resolve(cli: &Cli) -> Result<Resolved, CoreError> {
    let config_path = cli
        .config
        .clone()
        .or_else(|| env_var("CONFIG").map(PathBuf::from));
    let config = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| CoreError::InvalidConfig {
                field: "--config".into(),
                reason: format!("cannot read {}: {e}", path.display()),
            })?;
            Some(ConfigFile::parse(&text)?)
        }
        None => None,
    };
    Ok(Resolved {
        config,
        seed_override: cli.seed.or(env_parse::<u64>("SEED")?),
        threads_override: cli.threads.or(env_parse::<usize>("THREADS")?),
        out: cli.out.clone().or_else(|| env_var("OUT").map(PathBuf::from)),
    })
}

fn emit(
    out: &Option<PathBuf>,
    kind: &str,
    seed: u64,
    ext: &str,
    text: &str,
) -> Result<PathBuf, CoreError> {
    let path = out
        .clone()
        .unwrap_or_else(|| output::default_path(kind, seed, ext));
    output::write_text(&path, text)
        .map_err(|e| CoreError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn run(cli: &Cli) -> Result<ExitCode, CoreError> {
    let resolved = resolve(cli)?;
    match &cli.command {
        Command::Simulate => {
            let cfg = resolved.config()?;
            let spec = cfg.process()?;
            let path = simulate(spec, cfg.n()?, resolved.seed())?;
            let csv = output::path_csv(&path.values);
            let file = emit(&resolved.out, "simulate", resolved.seed(), "csv", &csv)?;
            println!("wrote {} observations to {}", path.values.len(), file.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Norm => {
            let cfg = resolved.config()?;
            let seq = cfg.mixing_sequence()?;
            let section = cfg.norm.as_ref().ok_or_else(|| CoreError::InvalidConfig {
                field: "norm".into(),
                reason: "required for this command".into(),
            })?;
            let quantile = match (&section.constant, &section.state_values) {
                (Some(c), None) => QuantileFn::constant(*c),
                (None, Some(values)) => {
                    let spec = cfg.process()?;
                    match spec {
                        ProcessSpec::FiniteMarkov { transition, states } => {
                            let pi = stationary_distribution(transition)?;
                            let law = Law::finite(states.clone(), pi)?;
                            if values.len() != states.len() {
                                return Err(CoreError::InvalidConfig {
                                    field: "norm.state_values".into(),
                                    reason: "one value per state required".into(),
                                });
                            }
                            let table: std::collections::HashMap<u64, f64> = states
                                .iter()
                                .zip(values)
                                .map(|(&s, &v)| (s.to_bits(), v))
                                .collect();
                            QuantileFn::from_finite_law(&law, move |x| table[&x.to_bits()])?
                        }
                        _ => {
                            return Err(CoreError::InvalidConfig {
                                field: "norm.state_values".into(),
                                reason: "needs a finite_markov process".into(),
                            })
                        }
                    }
                }
                _ => {
                    return Err(CoreError::InvalidConfig {
                        field: "norm".into(),
                        reason: "set exactly one of `constant` or `state_values`".into(),
                    })
                }
            };
            let result = beta_norm(&quantile, &seq);
            let status = match result.status {
                NormStatus::Exact => "exact",
                NormStatus::TruncatedLowerBound => "truncated_lower_bound",
                NormStatus::Divergent => "divergent",
            };
            let json = serde_json::json!({ "norm": result.value, "status": status });
            let text = serde_json::to_string_pretty(&json).expect("serializable");
            println!("{text}");
            let file = emit(&resolved.out, "norm", resolved.seed(), "json", &text)?;
            eprintln!("wrote {}", file.display());
            if result.status == NormStatus::Divergent {
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Entropy => {
            let cfg = resolved.config()?;
            let entropy_cfg = cfg.entropy_config()?;
            let scaling = run_entropy(&entropy_cfg)?;
            let csv = output::entropy_csv(&scaling.points);
            let file = emit(&resolved.out, "entropy", resolved.seed(), "csv", &csv)?;
            println!(
                "{}",
                serde_json::json!({
                    "fitted_exponent": scaling.fitted_exponent,
                    "predicted_exponent": scaling.predicted_exponent,
                    "table": file.display().to_string(),
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Clt { dump } => {
            let cfg = resolved.config()?;
            let clt_cfg = cfg.clt_config(resolved.seed(), resolved.threads())?;
            let result = run_clt(&clt_cfg)?;
            let csv = output::clt_csv(&result);
            let file = emit(&resolved.out, "clt", resolved.seed(), "csv", &csv)?;
            if let Some(dump_path) = dump {
                output::write_text(dump_path, &output::fidi_csv(&result.sample))
                    .map_err(|e| CoreError::Data(format!("cannot write dump: {e}")))?;
            }
            print!("{csv}");
            eprintln!("wrote {}", file.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Equicontinuity => {
            let cfg = resolved.config()?;
            let eq_cfg = cfg.equicontinuity_config(resolved.seed(), resolved.threads())?;
            let result = run_equicontinuity(&eq_cfg)?;
            let text = serde_json::to_string_pretty(&result).expect("serializable");
            println!("{text}");
            let file = emit(&resolved.out, "equicontinuity", resolved.seed(), "json", &text)?;
            eprintln!("wrote {}", file.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Size => {
            let cfg = resolved.config()?;
            let size_cfg = cfg.size_config(resolved.seed(), resolved.threads())?;
            let result = run_size(&size_cfg)?;
            let text = serde_json::to_string_pretty(&result).expect("serializable");
            println!("{text}");
            let file = emit(&resolved.out, "size", resolved.seed(), "json", &text)?;
            eprintln!("wrote {} ({:.2}s)", file.display(), result.runtime_s);
            Ok(ExitCode::SUCCESS)
        }
        Command::Power => {
            let cfg = resolved.config()?;
            let power_cfg = cfg.power_config(resolved.seed(), resolved.threads())?;
            let result = run_power(&power_cfg)?;
            let csv = output::power_csv(&result);
            let file = emit(&resolved.out, "power", resolved.seed(), "csv", &csv)?;
            print!("{csv}");
            if result.no_local_power {
                eprintln!(
                    "warning: the projected drift vanishes; the test has no local power \
                     against this direction"
                );
            }
            eprintln!("wrote {} ({:.2}s)", file.display(), result.runtime_s);
            Ok(ExitCode::SUCCESS)
        }
        Command::Hausman { file, kappa, bandwidth, hermite } => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| CoreError::Data(format!("cannot read {}: {e}", file.display())))?;
            let sample = parse_yx_csv(&text)?;
            let report = analyze(
                &sample,
                &AnalyzeOptions { kappa: *kappa, bandwidth: *bandwidth, hermite: *hermite },
            )?;
            let json = report.to_flat_json();
            let rendered = serde_json::to_string_pretty(&json).expect("serializable");
            println!("{rendered}");
            if let Some(out) = &resolved.out {
                output::write_text(out, &rendered)
                    .map_err(|e| CoreError::Data(format!("cannot write {}: {e}", out.display())))?;
            }
            if let Some(reason) = &report.degenerate {
                eprintln!("degenerate: {reason}");
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_code_for(err: &CoreError) -> ExitCode {
    match err {
        CoreError::InvalidConfig { .. }
        | CoreError::InvalidArgument(_)
        | CoreError::InvalidMarkov(_)
        | CoreError::Unsupported(_) => ExitCode::from(2),
        CoreError::Data(_) => ExitCode::from(3),
        CoreError::CollinearBasis { .. }
        | CoreError::DegenerateVariance(_)
        | CoreError::NoIdentifyingNonlinearity(_)
        | CoreError::NormDivergent(_) => ExitCode::from(4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
