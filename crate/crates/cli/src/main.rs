//! `conebound`: command-line runner for the spectral toolkit.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conebound::{Error, ErrorCategory};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use commands::Outcome;
use config::Overlay;

const THREADS_ENV: &str = "CONEBOUND_THREADS";

#[derive(Parser)]
#[command(
    name = "conebound",
    version,
    about = "Spectral experiments for conical surfaces"
)]
struct Cli {
    /// Worker threads; falls back to CONEBOUND_THREADS.
    #[arg(long, global = true)]
    threads: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a loop on the sphere and its geodesic curvature.
    Curve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// Slope constant from the negative spectrum of the curvature operator.
    Ks {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        ks_n: Option<usize>,
        #[arg(long)]
        check_method: Option<String>,
        #[arg(long)]
        check_n: Option<usize>,
    },
    /// Transverse ground energy, truncation sweep and Agmon norms.
    Threshold {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        /// Truncation half-length.
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated half-lengths for a truncation sweep.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
        /// Lattice spacing of the sweep.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        agmon_theta: Option<f64>,
        #[arg(long = "agmon-R")]
        agmon_r: Option<f64>,
    },
    /// Eigenvalue counting for the inverse-square radial operator.
    Counting {
        #[command(flatten)]
        common: CommonArgs,
        /// Coupling of the attractive term `−c/ρ²`.
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        #[arg(long)]
        bc: Option<String>,
        #[arg(long)]
        rho0: Option<f64>,
        #[arg(long)]
        scale: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        /// `E_lo,E_hi` of the slope fit.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        fit_window: Option<Vec<f64>>,
    },
    /// Counting function of the separated model on a curve.
    Assemble {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        c_knob: Option<f64>,
        #[arg(long)]
        eps_knob: Option<f64>,
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long = "K")]
        k: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration; inline flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for summary.json and CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    /// Curve family: latitude, perturbed, tabulated or a registered kind.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    #[arg(long)]
    mode: Option<u32>,
    /// Curve samples (`x,y,z` or `s,x,y,z`).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    n_samples: Option<usize>,
}

#[derive(Args)]
struct PotentialArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    depth: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long)]
    w_reg: Option<f64>,
    #[arg(long)]
    penalty: Option<f64>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long = "E-max")]
    e_max: Option<f64>,
    #[arg(long = "E-min")]
    e_min: Option<f64>,
    #[arg(long)]
    per_decade: Option<usize>,
}

fn preset_kind(name: &str) -> &str {
    match name {
        "latitude" => "latitude_circle",
        "perturbed" => "perturbed_latitude",
        other => other,
    }
}

impl CurveArgs {
    fn apply(&self, o: &mut Overlay) -> Result<(), Error> {
        if let Some(path) = &self.csv {
            let spec = commands::tabulated_from_csv(path)?;
            o.replace(&["curve"], serde_json::to_value(spec).expect("curve spec"));
        } else if let Some(p) = &self.preset {
            o.replace(&["curve"], json!({ "kind": preset_kind(p) }));
        }
        o.set(&["curve"], "theta", self.theta);
        o.set(&["curve"], "amplitude", self.amplitude);
        o.set(&["curve"], "mode", self.mode);
        o.set(&[], "n_samples", self.n_samples);
        Ok(())
    }
}

impl PotentialArgs {
    fn apply(&self, o: &mut Overlay) {
        if let Some(f) = &self.family {
            o.replace(&["potential"], json!({ "family": f }));
        }
        let at = &["potential"];
        o.set(at, "a", self.a);
        o.set(at, "depth", self.depth);
        o.set(at, "width", self.width);
        o.set(at, "p", self.p);
        o.set(at, "alpha", self.alpha);
        o.set(at, "w_reg", self.w_reg);
        o.set(at, "penalty", self.penalty);
    }
}

impl GridArgs {
    fn apply(&self, o: &mut Overlay, at: &[&str]) {
        o.set(at, "E_max", self.e_max);
        o.set(at, "E_min", self.e_min);
        o.set(at, "per_decade", self.per_decade);
    }

    fn any(&self) -> bool {
        self.e_max.is_some() || self.e_min.is_some() || self.per_decade.is_some()
    }
}

/// Fills in entries left unset so partial inline sections stay valid.
fn seed_defaults<T: Serialize>(o: &mut Overlay, at: &[&str], default: T) {
    let Value::Object(defaults) = serde_json::to_value(default).expect("grid") else {
        return;
    };
    for (k, v) in defaults {
        if o.get(&[at, &[k.as_str()]].concat()).is_none() {
            o.set(at, &k, Some(v));
        }
    }
}

fn thread_count(flag: Option<&str>) -> Result<Option<usize>, Error> {
    let (source, text) = match flag {
        Some(t) => ("--threads", t.to_string()),
        None => match std::env::var(THREADS_ENV) {
            Ok(t) => (THREADS_ENV, t),
            Err(_) => return Ok(None),
        },
    };
    match text.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(Some(n)),
        _ => Err(Error::config(
            source,
            format!("thread count must be a positive integer, got `{text}`"),
        )),
    }
}

fn load_overlay(common: &CommonArgs) -> Result<Overlay, Error> {
    let base = common.config.as_deref().map(config::load).transpose()?;
    Ok(Overlay::new(base))
}

/// Summary document with a SHA-256 over its canonical compact form.
fn summary(command: &str, config: Value, result: Value) -> Value {
    let body = json!({ "command": command, "config": config, "result": result });
    let hash = hex::encode(Sha256::digest(body.to_string().as_bytes()));
    let mut doc = body;
    doc["hash"] = Value::String(hash);
    doc
}

fn execute<C, F>(name: &str, overlay: Overlay, out: Option<&Path>, run: F) -> Result<String, Error>
where
    C: DeserializeOwned + Serialize,
    F: FnOnce(&C) -> Result<Outcome, Error>,
{
    let cfg: C = config::resolve(overlay.into_value())?;
    let outcome = run(&cfg)?;
    let resolved = serde_json::to_value(&cfg).expect("config serializes");
    let doc = summary(name, resolved, outcome.result);
    let text = serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n";
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.json"), &text)?;
        for (file, bytes) in &outcome.files {
            std::fs::write(dir.join(file), bytes)?;
        }
    }
    Ok(text)
}

fn dispatch(command: Command) -> Result<String, Error> {
    match command {
        Command::Curve { common, curve } => {
            let mut o = load_overlay(&common)?;
            curve.apply(&mut o)?;
            execute("curve", o, common.out.as_deref(), commands::run_curve)
        }
        Command::Ks {
            common,
            curve,
            method,
            ks_n,
            check_method,
            check_n,
        } => {
            let mut o = load_overlay(&common)?;
            curve.apply(&mut o)?;
            o.set(&["ks"], "method", method);
            o.set(&["ks"], "n", ks_n);
            o.set(&["ks"], "check_method", check_method);
            o.set(&["ks"], "check_n", check_n);
            if o.get(&["ks"]).is_some() {
                seed_defaults(
                    &mut o,
                    &["ks"],
                    conebound::curvature_operator::KsOptions::default(),
                );
            }
            execute("ks", o, common.out.as_deref(), commands::run_ks)
        }
        Command::Threshold {
            common,
            potential,
            l,
            n,
            sweep,
            h,
            agmon_theta,
            agmon_r,
        } => {
            let mut o = load_overlay(&common)?;
            potential.apply(&mut o);
            o.set(&[], "L", l);
            o.set(&[], "n", n);
            o.set(&["sweep"], "L_grid", sweep);
            o.set(&["sweep"], "h", h);
            o.set(&["agmon"], "theta", agmon_theta);
            o.set(&["agmon"], "R", agmon_r);
            execute(
                "threshold",
                o,
                common.out.as_deref(),
                commands::run_threshold,
            )
        }
        Command::Counting {
            common,
            c,
            bc,
            rho0,
            scale,
            grid,
            fit_window,
        } => {
            let mut o = load_overlay(&common)?;
            o.set(&["problem"], "c_num", c.map(|c| -c));
            o.set(&["problem"], "bc", bc);
            o.set(&["problem"], "rho0", rho0);
            o.set(&["problem"], "scale", scale);
            if grid.any() {
                grid.apply(&mut o, &["grid"]);
                seed_defaults(&mut o, &["grid"], commands::CountingConfig::default_grid());
            }
            o.set(&[], "fit_window", fit_window);
            execute("counting", o, common.out.as_deref(), commands::run_counting)
        }
        Command::Assemble {
            common,
            curve,
            potential,
            variant,
            delta,
            c_knob,
            eps_knob,
            r,
            k,
            grid,
        } => {
            let mut o = load_overlay(&common)?;
            curve.apply(&mut o)?;
            potential.apply(&mut o);
            let at = &["model"];
            o.set(at, "variant", variant);
            o.set(at, "delta", delta);
            o.set(at, "c_knob", c_knob);
            o.set(at, "eps_knob", eps_knob);
            o.set(at, "R", r);
            o.set(at, "K", k);
            if grid.any() {
                grid.apply(&mut o, &["model", "grid"]);
                seed_defaults(
                    &mut o,
                    &["model", "grid"],
                    commands::ModelConfig::default_grid(),
                );
            }
            execute("assemble", o, common.out.as_deref(), commands::run_assemble)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Config => 2,
        ErrorCategory::Numerical => 3,
        ErrorCategory::Precondition => 4,
        ErrorCategory::Io => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<String, Error> {
        if let Some(n) = thread_count(cli.threads.as_deref())? {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::config("--threads", e.to_string()))?;
        }
        dispatch(cli.command)
    };
    match run() {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_categories() {
        assert_eq!(exit_code(&Error::config("x", "bad")), 2);
        assert_eq!(exit_code(&Error::Parse("bad".into())), 2);
        assert_eq!(exit_code(&Error::non_convergence("stuck")), 3);
        assert_eq!(exit_code(&Error::precondition("no")), 4);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("disk"))), 1);
    }
}
