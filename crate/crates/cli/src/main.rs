//! `fracjac`: fractional Sobolev seminorms, distributional Jacobians,
//! Brouwer degree, flat norms, level-set tracing, and the verification
//! experiments built on them.

mod commands;
mod config;
mod runlog;

use clap::{Parser, Subcommand};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "fracjac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: machine parallelism; FRACJAC_WORKERS as
    /// fallback).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Write the JSON output to this path as well as stdout.
    #[arg(long, global = true)]
    out: Option<String>,

    /// Additionally emit flat CSV rows for sweep experiments.
    #[arg(long, global = true)]
    csv: bool,

    /// Omit timestamps and runtimes so identical runs are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fractional Sobolev seminorm (and optionally a Holder norm) of a field.
    Norm {
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "square:res=64")]
        domain: String,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Distributional pairing <Ju, psi> by divergence and/or direct routes.
    Pairing {
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "square:res=64")]
        domain: String,
        #[arg(long, default_value = "bump:cx=0.5:cy=0.5:r=0.3")]
        test: String,
        #[arg(long, default_value = "both")]
        mode: String,
    },
    /// Brouwer degree at a target by preimage, boundary, or all routes.
    Degree {
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "disk:r=1:res=64")]
        domain: String,
        #[arg(long)]
        a: String,
        #[arg(long, default_value = "all")]
        method: String,
    },
    /// Flat norm of an atomic measure read from a JSON file.
    Flatnorm {
        #[arg(long)]
        atoms: String,
        #[arg(long, default_value = "square:res=64")]
        domain: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Trace the level set of the mollified extension through a slab.
    Trace {
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "square:res=32")]
        domain: String,
        #[arg(long)]
        a: String,
        /// Slab t_lo,t_hi.
        #[arg(long, default_value = "0.05,0.2")]
        slab: String,
        /// Write curve polylines to this JSON file.
        #[arg(long)]
        dump: Option<String>,
        #[arg(long, default_value_t = 20)]
        kernel_pts: usize,
    },
    /// Evaluate the mollified extension U(x, t) at a probe point.
    Extend {
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "square:res=32")]
        domain: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        probe: String,
        #[arg(long, default_value_t = 20)]
        kernel_pts: usize,
    },
    /// Run a verification experiment from a JSON config.
    Verify {
        /// weak_coarea | weak_chain | strong_chain | strong_coarea |
        /// holder_chain | ua_continuity | stability | coarea_extension
        experiment: String,
        #[arg(long)]
        config: String,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(w) = cli.workers.or_else(|| {
        std::env::var("FRACJAC_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    }) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    std::process::exit(run(&cli));
}

fn run(cli: &Cli) -> i32 {
    let started = std::time::SystemTime::now();
    let (name, payload, result) = dispatch(&cli.command);
    let hash = runlog::config_hash(&payload);
    match result {
        Ok((mut doc, code)) => {
            if !cli.no_timestamp {
                let ts = started
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0);
                doc["timestamp_ms"] = serde_json::json!(ts);
            } else if let Some(obj) = doc.as_object_mut() {
                obj.remove("runtime_ms");
                if let Some(rep) = obj.get_mut("report").and_then(|r| r.as_object_mut()) {
                    rep.remove("runtime_ms");
                }
            }
            doc["config_hash"] = serde_json::json!(hash);
            let rendered = serde_json::to_string_pretty(&doc).unwrap();
            println!("{rendered}");
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &rendered) {
                    eprintln!("error: cannot write {path}: {e}");
                    runlog::append(&hash, &name, seed_of(&doc), 2);
                    return 2;
                }
            }
            if cli.csv {
                if let Some(csv) = doc
                    .get("report")
                    .and_then(|r| serde_json::from_value(r.clone()).ok())
                    .and_then(|rep: fracjac_core::verify::ExperimentReport| {
                        commands::csv_rows(&rep)
                    })
                {
                    match &cli.out {
                        Some(path) => {
                            let csv_path = format!("{path}.csv");
                            if let Err(e) = std::fs::write(&csv_path, &csv) {
                                eprintln!("error: cannot write {csv_path}: {e}");
                            }
                        }
                        None => print!("{csv}"),
                    }
                }
            }
            runlog::append(&hash, &name, seed_of(&doc), code);
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            runlog::append(&hash, &name, None, 2);
            2
        }
    }
}

fn seed_of(doc: &Value) -> Option<u64> {
    doc.get("report")
        .and_then(|r| r.get("seed"))
        .or_else(|| doc.get("seed"))
        .and_then(|s| s.as_u64())
}

type CmdResult = Result<(Value, i32), fracjac_core::Error>;

fn dispatch(cmd: &Command) -> (String, String, CmdResult) {
    match cmd {
        Command::Norm { field, domain, s, p, alpha } => (
            "norm".into(),
            format!("norm field={field} domain={domain} s={s} p={p} alpha={alpha:?}"),
            commands::cmd_norm(field, domain, *s, *p, *alpha),
        ),
        Command::Pairing { field, domain, test, mode } => (
            "pairing".into(),
            format!("pairing field={field} domain={domain} test={test} mode={mode}"),
            commands::cmd_pairing(field, domain, test, mode),
        ),
        Command::Degree { field, domain, a, method } => (
            "degree".into(),
            format!("degree field={field} domain={domain} a={a} method={method}"),
            commands::parse_point(a)
                .and_then(|pt| commands::cmd_degree(field, domain, pt, method)),
        ),
        Command::Flatnorm { atoms, domain, scale } => (
            "flatnorm".into(),
            format!("flatnorm atoms={atoms} domain={domain} scale={scale}"),
            commands::cmd_flatnorm(atoms, domain, *scale),
        ),
        Command::Trace { field, domain, a, slab, dump, kernel_pts } => (
            "trace".into(),
            format!("trace field={field} domain={domain} a={a} slab={slab}"),
            commands::parse_point(a).and_then(|pt| {
                let sl = commands::parse_point(slab)?;
                commands::cmd_trace(field, domain, pt, sl, dump.as_deref(), *kernel_pts)
            }),
        ),
        Command::Extend { field, domain, t, probe, kernel_pts } => (
            "extend".into(),
            format!("extend field={field} domain={domain} t={t} probe={probe}"),
            commands::parse_point(probe)
                .and_then(|pt| commands::cmd_extend(field, domain, *t, pt, *kernel_pts)),
        ),
        Command::Verify { experiment, config, seed } => {
            let payload = format!("verify {experiment} config={config} seed={seed:?}");
            let result = (|| {
                let text = std::fs::read_to_string(config).map_err(|e| {
                    fracjac_core::Error::InvalidParameter(format!(
                        "cannot read config {config}: {e}"
                    ))
                })?;
                let mut cfg: config::VerifyConfig =
                    serde_json::from_str(&text).map_err(|e| {
                        fracjac_core::Error::InvalidParameter(format!("bad config: {e}"))
                    })?;
                if let Some(s) = seed {
                    cfg.seed = Some(*s);
                }
                let report = commands::run_verify(experiment, &cfg)?;
                let code = i32::from(!report.passed);
                Ok((
                    serde_json::json!({
                        "experiment": experiment,
                        "config": cfg,
                        "report": report,
                    }),
                    code,
                ))
            })();
            ("verify".into(), payload, result)
        }
    }
}
