//! Command-line front end: loads channel/ensemble/comb descriptions from
//! JSON, runs a single computation or a verification suite, and emits a
//! versioned JSON report (optionally flattened to CSV).
//!
//! Exit codes: 0 success, 1 invalid input or parameters, 2 solver failure,
//! 3 property violation in suite mode.

mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use commres_core::channels::ChannelError;
use commres_core::{capacity, channels, discrimination, resource};
use commres_core::{ChannelSpec, EnsembleSpec, QuantumChannel};

#[derive(Parser)]
#[command(
    name = "commres",
    about = "Resource-theoretic communication measures for quantum channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write the JSON report to this path instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Additionally print the results as key,value CSV lines.
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Max-relative entropy of communication in bits.
    Dmax {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Generalized robustness of communication.
    Robustness {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Smoothed measure over the diamond-norm ball of radius eps.
    SmoothedDmax {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Max-information of the Choi state (independent formulation).
    Imax {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Diamond-norm distance between two channels.
    Diamond {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        channel2: PathBuf,
    },
    /// Optimal discrimination of an ensemble through the channel.
    Psucc {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        /// Allow an ancilla-bearing ensemble.
        #[arg(long)]
        ancilla: bool,
    },
    /// Discrimination certificate meeting the robustness bound.
    Theorem1 {
        #[arg(long)]
        channel: PathBuf,
    },
    /// One-shot non-signalling assisted capacity (message count).
    Nscap {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Search ceiling; 0 means d_in·d_out.
        #[arg(long, default_value_t = 0)]
        m_max: usize,
    },
    /// Optimal success probability for a fixed message count.
    NsSuccess {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, short = 'm')]
        messages: usize,
    },
    /// Converse capacity bound in bits.
    Bound2 {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
    },
    /// One-shot simulation cost from noiseless identities.
    Simcost {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Per-copy smoothed measure of tensor powers.
    Trend {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
    },
    /// Run a verification suite of numerical property checks.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
}

/// Failure with its process exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<ChannelError> for Failure {
    fn from(e: ChannelError) -> Self {
        let code = match e {
            ChannelError::Solver(_) => 2,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli.cmd) {
        Ok((report, violations)) => {
            eprintln!("wall time: {:.3}s", started.elapsed().as_secs_f64());
            if let Err(e) = emit(&cli, &report) {
                eprintln!("error: {}", e.message);
                return ExitCode::from(e.code);
            }
            if violations {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Executes the command; the boolean flags suite-mode property violations.
fn run(cmd: &Cmd) -> Result<(Value, bool), Failure> {
    let mut violations = false;
    let report = match cmd {
        Cmd::Dmax { channel } => {
            let (spec, n) = load_channel(channel)?;
            let rep = resource::dmax(&n)?;
            report(
                "dmax",
                json!({ "channel": spec }),
                json!({ "dmax_bits": rep.dmax_bits, "gap": rep.gap }),
            )
        }
        Cmd::Robustness { channel } => {
            let (spec, n) = load_channel(channel)?;
            let rep = resource::dmax(&n)?;
            report(
                "robustness",
                json!({ "channel": spec }),
                json!({ "robustness": rep.robustness, "gap": rep.gap }),
            )
        }
        Cmd::SmoothedDmax { channel, eps } => {
            let (spec, n) = load_channel(channel)?;
            let rep = resource::dmax_smoothed(&n, *eps)?;
            report(
                "smoothed-dmax",
                json!({ "channel": spec, "eps": eps }),
                json!({ "dmax_bits": rep.dmax_bits, "gap": rep.gap }),
            )
        }
        Cmd::Imax { channel } => {
            let (spec, n) = load_channel(channel)?;
            let bits = resource::imax(&n)?;
            report("imax", json!({ "channel": spec }), json!({ "imax_bits": bits }))
        }
        Cmd::Diamond { channel, channel2 } => {
            let (spec1, n) = load_channel(channel)?;
            let (spec2, m) = load_channel(channel2)?;
            let dist = channels::diamond_dist(&n, &m)?;
            report(
                "diamond",
                json!({ "channel": spec1, "channel2": spec2 }),
                json!({ "diamond_distance": dist }),
            )
        }
        Cmd::Psucc { channel, ensemble, ancilla } => {
            let (spec, n) = load_channel(channel)?;
            let (espec, a) = load_ensemble(ensemble)?;
            let (succ, _) = discrimination::p_succ_optimal(&a, &n, *ancilla)?;
            let guess = discrimination::p_guess(&a);
            report(
                "psucc",
                json!({ "channel": spec, "ensemble": espec, "ancilla": ancilla }),
                json!({ "p_succ": succ, "p_guess": guess, "ratio": succ / guess }),
            )
        }
        Cmd::Theorem1 { channel } => {
            let (spec, n) = load_channel(channel)?;
            let (ratio, _, _) = discrimination::theorem1_certificate(&n)?;
            let rep = resource::dmax(&n)?;
            report(
                "theorem1",
                json!({ "channel": spec }),
                json!({
                    "ratio": ratio,
                    "one_plus_robustness": 1.0 + rep.robustness,
                    "deviation": (ratio - 1.0 - rep.robustness).abs(),
                }),
            )
        }
        Cmd::Nscap { channel, eps, m_max } => {
            let (spec, n) = load_channel(channel)?;
            let ceiling = if *m_max == 0 { n.d_in() * n.d_out() } else { *m_max };
            let m = capacity::ns_oneshot_capacity(&n, *eps, ceiling)?;
            report(
                "nscap",
                json!({ "channel": spec, "eps": eps, "m_max": ceiling }),
                json!({ "M": m, "capacity_bits": (m as f64).log2() }),
            )
        }
        Cmd::NsSuccess { channel, messages } => {
            let (spec, n) = load_channel(channel)?;
            let r = capacity::ns_success(&n, *messages)?;
            report(
                "ns-success",
                json!({ "channel": spec, "M": messages }),
                serde_json::to_value(&r).expect("result serializes"),
            )
        }
        Cmd::Bound2 { channel, eps, delta } => {
            let (spec, n) = load_channel(channel)?;
            let bits = capacity::theorem2_bound(&n, *eps, *delta)?;
            report(
                "bound2",
                json!({ "channel": spec, "eps": eps, "delta": delta }),
                json!({ "bound_bits": bits }),
            )
        }
        Cmd::Simcost { channel, eps } => {
            let (spec, n) = load_channel(channel)?;
            let r = capacity::simulation_cost(&n, *eps)?;
            report(
                "simcost",
                json!({ "channel": spec, "eps": eps }),
                serde_json::to_value(&r).expect("result serializes"),
            )
        }
        Cmd::Trend { channel, n_max, delta } => {
            let (spec, n) = load_channel(channel)?;
            let points = capacity::tensor_power_trend(&n, *n_max, *delta)?;
            let rows: Vec<Value> = points
                .iter()
                .map(|(copies, bits)| json!({ "copies": copies, "bits_per_copy": bits }))
                .collect();
            report(
                "trend",
                json!({ "channel": spec, "n_max": n_max, "delta": delta }),
                json!({ "trend": rows }),
            )
        }
        Cmd::Verify { suite, seeds } => {
            let checks = verify::run_suite(suite, *seeds)?;
            let failures = checks.iter().filter(|c| !c.pass).count();
            violations = failures > 0;
            let rows: Vec<Value> = checks
                .iter()
                .map(|c| json!({ "check": c.name, "pass": c.pass, "detail": c.detail }))
                .collect();
            report(
                "verify",
                json!({ "suite": suite, "seeds": seeds }),
                json!({ "checks": rows, "failures": failures }),
            )
        }
    };
    Ok((report, violations))
}

fn report(command: &str, inputs: Value, results: Value) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), Value::String("commres/1".into()));
    map.insert("command".into(), Value::String(command.into()));
    map.insert("inputs".into(), inputs);
    map.insert("results".into(), round_floats(results));
    Value::Object(map)
}

/// Rounds every number in the tree to 12 significant digits so reports are
/// byte-identical across repeated runs.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    let rounded: f64 = format!("{f:.11e}").parse().expect("valid float");
                    return json!(rounded);
                }
            }
            Value::Number(n)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_floats).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_floats(v))).collect())
        }
        other => other,
    }
}

fn emit(cli: &Cli, report: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    match &cli.output {
        Some(path) => std::fs::write(path, text.as_bytes())
            .map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{text}"),
    }
    if cli.csv {
        if let Some(results) = report.get("results").and_then(Value::as_object) {
            for line in csv_rows("", results) {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn csv_rows(prefix: &str, map: &Map<String, Value>) -> Vec<String> {
    let mut out = Vec::new();
    for (k, v) in map {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) => out.extend(csv_rows(&key, inner)),
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::Object(inner) => {
                            out.extend(csv_rows(&format!("{key}[{i}]"), inner))
                        }
                        other => out.push(format!("{key}[{i}],{other}")),
                    }
                }
            }
            other => out.push(format!("{key},{other}")),
        }
    }
    out
}

fn load_channel(path: &PathBuf) -> Result<(ChannelSpec, QuantumChannel), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    let spec: ChannelSpec = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("{}: invalid channel spec: {e}", path.display())))?;
    let n = spec.to_channel()?;
    Ok((spec, n))
}

fn load_ensemble(
    path: &PathBuf,
) -> Result<(EnsembleSpec, commres_core::StateEnsemble), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    let spec: EnsembleSpec = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("{}: invalid ensemble spec: {e}", path.display())))?;
    let a = spec.to_ensemble()?;
    Ok((spec, a))
}
