use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blowlab_core::harness::{Command, Config, Context, HarnessError};

/// Verification laboratory for two explicit blowup families of the 3D
/// Navier–Stokes equations.
#[derive(Debug, Parser)]
#[command(name = "blowlab", version)]
struct Cli {
    /// Key/value configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory [default: $BLOWLAB_OUT_DIR or .]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct FamilyArg {
    /// Exact family, A or B.
    #[arg(long)]
    family: Option<String>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Exact symbolic certificate of the reduced and Cartesian equations.
    VerifySymbolic {
        #[command(flatten)]
        family: FamilyArg,
        /// Replace the swirl v^theta by this expression (negative control).
        #[arg(long)]
        vtheta: Option<String>,
    },
    /// Finite-difference residuals at seeded random points.
    ResidualScan {
        #[command(flatten)]
        family: FamilyArg,
        #[command(flatten)]
        samples: SampleArgs,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Manufactured-solution run of the transformed system.
    Simulate {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        nr: Option<usize>,
        #[arg(long)]
        nz: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Observed orders over a grid ladder.
    Convergence {
        #[command(flatten)]
        family: FamilyArg,
        /// Comma-separated nodes per axis, e.g. 33,65,129.
        #[arg(long)]
        levels: Option<String>,
    },
    /// Blowup-rate fits: closed-form gradient supremum and numerical chase.
    BlowupFit {
        #[command(flatten)]
        family: FamilyArg,
        /// Comma-separated decreasing distances to blowup.
        #[arg(long)]
        deltas: Option<String>,
    },
    /// Pressure Poisson consistency at seeded random points.
    PressureCheck {
        #[command(flatten)]
        family: FamilyArg,
        #[command(flatten)]
        samples: SampleArgs,
    },
    /// Kinetic energy in balls of growing radius.
    EnergyScan {
        #[command(flatten)]
        family: FamilyArg,
        /// Comma-separated radii.
        #[arg(long)]
        radii: Option<String>,
        #[arg(long)]
        t: Option<f64>,
    },
}

fn overrides(cmd: &Cmd) -> (Command, Vec<(&'static str, String)>) {
    let mut kv: Vec<(&'static str, String)> = Vec::new();
    let mut put = |k: &'static str, v: Option<String>| {
        if let Some(v) = v {
            kv.push((k, v));
        }
    };
    let s = |v: &Option<String>| v.clone();
    let n = |v: Option<f64>| v.map(|x| x.to_string());
    let command = match cmd {
        Cmd::VerifySymbolic { family, vtheta } => {
            put("family", s(&family.family));
            Command::VerifySymbolic { vtheta: vtheta.clone() }
        }
        Cmd::ResidualScan { family, samples, rel_tol, abs_tol, fd_step } => {
            put("family", s(&family.family));
            put("scan.n_samples", samples.n_samples.map(|x| x.to_string()));
            put("scan.seed", samples.seed.map(|x| x.to_string()));
            put("scan.rel_tol", n(*rel_tol));
            put("scan.abs_tol", n(*abs_tol));
            put("scan.fd_step", n(*fd_step));
            Command::ResidualScan
        }
        Cmd::Simulate { family, scheme, nr, nz, t_end } => {
            put("family", s(&family.family));
            put("scheme", s(scheme));
            put("nr", nr.map(|x| x.to_string()));
            put("nz", nz.map(|x| x.to_string()));
            put("t_end", n(*t_end));
            Command::Simulate
        }
        Cmd::Convergence { family, levels } => {
            put("family", s(&family.family));
            put("convergence.levels", s(levels));
            Command::Convergence
        }
        Cmd::BlowupFit { family, deltas } => {
            put("family", s(&family.family));
            put("chase.deltas", s(deltas));
            Command::BlowupFit
        }
        Cmd::PressureCheck { family, samples } => {
            put("family", s(&family.family));
            put("scan.n_samples", samples.n_samples.map(|x| x.to_string()));
            put("scan.seed", samples.seed.map(|x| x.to_string()));
            Command::PressureCheck
        }
        Cmd::EnergyScan { family, radii, t } => {
            put("family", s(&family.family));
            put("energy.radii", s(radii));
            put("energy.t", n(*t));
            Command::EnergyScan
        }
    };
    (command, kv)
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    let mut config = Config::default();
    if let Some(path) = &cli.config {
        config.merge_file(path)?;
    }
    for pair in &cli.set {
        config.set_pair(pair)?;
    }
    let (command, flags) = overrides(&cli.command);
    for (k, v) in flags {
        config.set(k, &v)?;
    }
    let ctx = Context::new(config, Context::default_out_dir(cli.out));
    let bundle = ctx.run(&command)?;
    print!("{}", bundle.render());
    for f in bundle.failures() {
        eprintln!("FAIL {} {}", f.name, f.detail);
    }
    Ok(bundle.exit_code() as i32)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("blowlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
