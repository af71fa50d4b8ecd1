//! Orchestration behind the `blowlab` binary: builds typed configurations
//! from the layered key/value table, runs one command, writes its CSV files
//! and returns a [`ReportBundle`].
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a run
//! aborts, 2 for usage and configuration errors.

mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::checks::{
    self, blowup_fit, energy_ball, energy_ball_with_cutoff, log_spaced_times, strain_energy_ball, BlowupQuantity,
    CheckError, CheckId, Normalization, ProbeRegion, ResidualReport, SampleDomain, TolerancePolicy,
};
use crate::fields::{Family, FieldError, SolutionParams};
use crate::solver::{
    blowup_chase, convergence_study, run_manufactured, Advection, ChaseQuantity, DtRule, DtScaling, FieldOrders,
    Grid2D, PoissonConfig, PoissonMethod, RunConfig, SolverError, TimeScheme,
};
use crate::symbolic::{parse, Certificate, ReducedFields, SymbolicError};
use crate::table::{header_comment, Table, TOOL_VERSION};

pub use config::{defaults_file, Config, ConfigError, Source, DEFAULTS};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BLOWLAB_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl HarnessError {
    /// 2 for anything the user can fix in the command line or config, 1
    /// otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Usage(_) => 2,
            HarnessError::Field(FieldError::InvalidParams(_)) => 2,
            HarnessError::Check(CheckError::InvalidPolicy(_) | CheckError::InvalidInput(_)) => 2,
            HarnessError::Solver(SolverError::InvalidConfig(_)) => 2,
            HarnessError::Solver(SolverError::Field(FieldError::InvalidParams(_))) => 2,
            HarnessError::Symbolic(SymbolicError::Syntax { .. } | SymbolicError::UnknownIdentifier { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Pass = 0,
    Fail = 1,
    Usage = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Summary of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub command: &'static str,
    pub tool_version: &'static str,
    pub seed: Option<u64>,
    pub params_echo: String,
    pub checks: Vec<CheckLine>,
    /// Informational lines that do not affect the outcome.
    pub notes: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl ReportBundle {
    fn new(command: &'static str, seed: Option<u64>, params_echo: String) -> Self {
        Self {
            command,
            tool_version: TOOL_VERSION,
            seed,
            params_echo,
            checks: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine { name: name.into(), pass, detail: detail.into() });
    }

    /// Take a preformatted `PASS NAME ...` or `FAIL NAME ...` line.
    fn check_line(&mut self, pass: bool, line: &str) {
        let rest = line.split_once(' ').map_or("", |(_, r)| r);
        let (name, detail) = rest.split_once(' ').unwrap_or((rest, ""));
        self.check(name, pass, detail);
    }

    pub fn overall_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> ExitCode {
        if self.overall_pass() {
            ExitCode::Pass
        } else {
            ExitCode::Fail
        }
    }

    pub fn failures(&self) -> Vec<&CheckLine> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {} command={}", self.tool_version, self.command);
        if let Some(s) = self.seed {
            out.push_str(&format!(" seed={s}"));
        }
        out.push_str(&format!("\n# {}\n", self.params_echo));
        for c in &self.checks {
            let word = if c.pass { "PASS" } else { "FAIL" };
            if c.detail.is_empty() {
                out.push_str(&format!("{word} {}\n", c.name));
            } else {
                out.push_str(&format!("{word} {} {}\n", c.name, c.detail));
            }
        }
        for n in &self.notes {
            out.push_str(n);
            out.push('\n');
        }
        out.push_str(&format!("OVERALL {}\n", if self.overall_pass() { "PASS" } else { "FAIL" }));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Optional swirl override for negative controls.
    VerifySymbolic {
        vtheta: Option<String>,
    },
    ResidualScan,
    Simulate,
    Convergence,
    BlowupFit,
    PressureCheck,
    EnergyScan,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifySymbolic { .. } => "verify-symbolic",
            Command::ResidualScan => "residual-scan",
            Command::Simulate => "simulate",
            Command::Convergence => "convergence",
            Command::BlowupFit => "blowup-fit",
            Command::PressureCheck => "pressure-check",
            Command::EnergyScan => "energy-scan",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resolved configuration plus output directory.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: Config,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn new(config: Config, out_dir: impl Into<PathBuf>) -> Self {
        Self { config, out_dir: out_dir.into() }
    }

    /// `--out`, else the environment variable, else the working directory.
    pub fn default_out_dir(flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn family(&self) -> Result<Family> {
        Ok(self.config.get::<Family>("family")?)
    }

    pub fn params(&self) -> Result<SolutionParams> {
        let c = &self.config;
        Ok(SolutionParams::new(c.get("a")?, c.get("k")?, c.get("t_star")?, c.get("nu")?, self.family()?)?)
    }

    pub fn poisson(&self) -> Result<PoissonConfig> {
        let c = &self.config;
        let cfg = PoissonConfig {
            method: c.get::<PoissonMethod>("poisson.method")?,
            tol: c.get("poisson.tol")?,
            max_iters: c.get("poisson.max_iters")?,
            sor_omega: c.get("poisson.sor_omega")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let c = &self.config;
        let params = self.params()?;
        let r_min = match c.auto::<f64>("r_min")? {
            Some(r) => r,
            None if params.family() == Family::A => 0.5,
            None => 0.0,
        };
        let grid = Grid2D::new(r_min, c.get("r_max")?, c.get("z_min")?, c.get("z_max")?, c.get("nr")?, c.get("nz")?)?;
        let mut run = RunConfig::new(params, grid, c.get("t_end")?);
        run.dt_rule = match c.raw("dt") {
            "cfl" => DtRule::Cfl(c.get("cfl_safety")?),
            _ => DtRule::Fixed(c.get("dt")?),
        };
        run.time_scheme = c.get::<TimeScheme>("scheme")?;
        run.advection = c.get::<Advection>("advection")?;
        run.poisson = self.poisson()?;
        run.max_steps = c.get("max_steps")?;
        run.min_gap = c.get::<f64>("delta_floor")? * params.t_star();
        run.validate()?;
        Ok(run)
    }

    pub fn policy(&self) -> Result<TolerancePolicy> {
        let c = &self.config;
        Ok(TolerancePolicy::new(
            c.get("scan.abs_tol")?,
            c.get("scan.rel_tol")?,
            c.get("scan.fd_step")?,
            Normalization::MaxTerm,
        )?)
    }

    fn order_band(&self) -> Result<(f64, f64)> {
        let band = (self.config.get("accept.order_min")?, self.config.get("accept.order_max")?);
        if !(band.0 < band.1) {
            return Err(HarnessError::Usage(format!("accept.order_min must be below accept.order_max, got {band:?}")));
        }
        Ok(band)
    }

    fn write_text(&self, bundle: &mut ReportBundle, name: &str, text: &str) -> Result<()> {
        fs::create_dir_all(&self.out_dir).map_err(|e| io_err(&self.out_dir, e))?;
        let path = self.out_dir.join(name);
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        bundle.files.push(path);
        Ok(())
    }

    fn write_table(&self, bundle: &mut ReportBundle, name: &str, table: &Table) -> Result<()> {
        self.write_text(bundle, name, &table.to_csv_string())
    }

    /// Run one command, writing its files and `<command>_report.txt`.
    pub fn run(&self, cmd: &Command) -> Result<ReportBundle> {
        let mut bundle = match cmd {
            Command::VerifySymbolic { vtheta } => self.verify_symbolic(vtheta.as_deref())?,
            Command::ResidualScan => self.residual_scan()?,
            Command::Simulate => self.simulate()?,
            Command::Convergence => self.convergence()?,
            Command::BlowupFit => self.blowup_fit()?,
            Command::PressureCheck => self.pressure_check()?,
            Command::EnergyScan => self.energy_scan()?,
        };
        let report = bundle.render();
        self.write_text(&mut bundle, &format!("{}_report.txt", cmd.name().replace('-', "_")), &report)?;
        Ok(bundle)
    }

    fn verify_symbolic(&self, vtheta: Option<&str>) -> Result<ReportBundle> {
        let family = self.family()?;
        let fields = match vtheta {
            Some(text) => ReducedFields::with_swirl(parse(text)?),
            None => ReducedFields::family(family),
        };
        let echo = match vtheta {
            Some(text) => format!("family={family} vtheta={text}"),
            None => format!("family={family}"),
        };
        let cert = Certificate::run_with(family, &fields)?;
        let mut b = ReportBundle::new("verify-symbolic", None, echo);
        for r in cert.residuals() {
            b.check_line(r.is_zero, &r.line());
        }
        let sols: Vec<String> = cert.ansatz.iter().map(|s| s.to_string()).collect();
        b.check("ANSATZ_EXPONENTS", cert.ansatz_ok, format!("{{{}}}", sols.join(", ")));
        b.notes.extend(cert.claims.iter().map(|c| c.line()));
        self.write_text(&mut b, &format!("certificate_{family}.txt"), &cert.render())?;
        Ok(b)
    }

    fn residual_scan(&self) -> Result<ReportBundle> {
        let p = self.params()?;
        let pol = self.policy()?;
        let n: usize = self.config.get("scan.n_samples")?;
        let seed: u64 = self.config.get("scan.seed")?;
        let step: f64 = self.config.get("scan.richardson_step")?;
        let scan = checks::residual_scan(&p, &pol, &SampleDomain::default(), n, seed, step)?;
        let mut b = ReportBundle::new("residual-scan", Some(seed), self.config.echo());
        for r in &scan.reports {
            b.check_line(r.pass, &r.line());
        }
        for r in &scan.richardson {
            b.check_line(r.pass, &r.line());
        }
        self.write_table(&mut b, "residual_points.csv", &scan.points_table())?;
        self.write_table(&mut b, "residual_summary.csv", &scan.summary_table())?;
        Ok(b)
    }

    fn pressure_check(&self) -> Result<ReportBundle> {
        let p = self.params()?;
        let pol = self.policy()?;
        let n: usize = self.config.get("scan.n_samples")?;
        let seed: u64 = self.config.get("scan.seed")?;
        if n == 0 {
            return Err(HarnessError::Usage("scan.n_samples must be at least 1".into()));
        }
        let points = checks::sample_points(&p, &SampleDomain::default(), n, seed);
        let mut table = Table::new(
            header_comment(Some(seed), &p.to_string()),
            ["sample", "t", "x1", "x2", "x3", "max_abs", "normalized"],
        );
        let mut results = Vec::with_capacity(n);
        for (i, q) in points.iter().enumerate() {
            let res = CheckId::PressurePoisson.evaluate(&p, q, &pol)?;
            table.push([
                i.to_string(),
                q.t.to_string(),
                q.x1.to_string(),
                q.x2.to_string(),
                q.x3.to_string(),
                res.max_abs().to_string(),
                res.normalized(pol.normalization()).to_string(),
            ]);
            results.push((*q, res));
        }
        let report = ResidualReport::reduce(CheckId::PressurePoisson, &results, &pol);
        let mut b = ReportBundle::new("pressure-check", Some(seed), self.config.echo());
        b.check_line(report.pass, &report.line());
        self.write_table(&mut b, "pressure_check.csv", &table)?;
        Ok(b)
    }

    fn energy_scan(&self) -> Result<ReportBundle> {
        let p = self.params()?;
        let c = &self.config;
        let radii: Vec<f64> = c.list("energy.radii")?;
        let t: f64 = c.get("energy.t")?;
        let quad_n: usize = c.get("energy.quad_n")?;
        let r_min = match c.auto::<f64>("energy.r_min")? {
            Some(r) => r,
            None if p.family() == Family::A => 0.1,
            None => 0.0,
        };
        if radii.is_empty() || radii.iter().any(|r| !(*r > r_min)) {
            return Err(HarnessError::Usage(format!("energy.radii must exceed energy.r_min = {r_min}")));
        }
        let tau = p.tau(t)?;
        let mut table = Table::new(
            header_comment(None, &format!("{p} t={t} r_min={r_min} quad_n={quad_n}")),
            ["radius", "energy", "strain_energy", "ratio_to_previous"],
        );
        let mut energies: Vec<f64> = Vec::with_capacity(radii.len());
        for (i, &radius) in radii.iter().enumerate() {
            let e: f64 = if r_min == 0.0 {
                energy_ball(&p, t, radius, quad_n)?
            } else {
                energy_ball_with_cutoff(&p, t, radius, r_min, quad_n)?
            };
            let ratio = if i == 0 { String::new() } else { (e / energies[i - 1]).to_string() };
            table.push([radius.to_string(), e.to_string(), strain_energy_ball(p.a(), tau, radius).to_string(), ratio]);
            energies.push(e);
        }
        let increasing = radii.windows(2).all(|w| w[1] > w[0]) && energies.windows(2).all(|w| w[1] > w[0]);
        let mut b = ReportBundle::new("energy-scan", None, c.echo());
        let list: Vec<String> = energies.iter().map(|e| format!("{e:.6e}")).collect();
        b.check("ENERGY_INCREASING", increasing, format!("energies=[{}]", list.join(", ")));
        self.write_table(&mut b, "energy_scan.csv", &table)?;
        Ok(b)
    }

    fn simulate(&self) -> Result<ReportBundle> {
        let run = self.run_config()?;
        let series = run_manufactured(&run)?;
        let c = &self.config;
        let omega_bound = c.get::<f64>("accept.omega1_factor")? * run.poisson.tol;
        let v1_max: f64 = c.get("accept.v1_err_max")?;
        let phi1_max: f64 = c.get("accept.phi1_err_max")?;
        let last = series.last();
        let mut b = ReportBundle::new("simulate", None, c.echo());
        b.check(
            "OMEGA1_BOUND",
            series.max_omega1() <= omega_bound,
            format!("max={:.3e} bound={omega_bound:.3e}", series.max_omega1()),
        );
        let worst = series
            .rows
            .iter()
            .fold(0.0f64, |m, r| m.max(r.poisson_residual / r.poisson_threshold.max(f64::MIN_POSITIVE)));
        b.check("POISSON_RESIDUAL", worst <= 1.0, format!("max residual/threshold={worst:.3e}"));
        b.check("V1_ERROR", last.err_v1_inf <= v1_max, format!("final={:.3e} bound={v1_max:.3e}", last.err_v1_inf));
        b.check(
            "PHI1_ERROR",
            last.err_phi1_inf <= phi1_max,
            format!("final={:.3e} bound={phi1_max:.3e}", last.err_phi1_inf),
        );
        b.notes.push(format!("steps={} t_end={}", series.steps, last.time));
        self.write_table(&mut b, "error_series.csv", &series.to_table())?;
        Ok(b)
    }

    fn convergence(&self) -> Result<ReportBundle> {
        let run = self.run_config()?;
        let c = &self.config;
        let levels: Vec<usize> = c.list("convergence.levels")?;
        let scaling = match c.raw("convergence.dt_scaling") {
            "square" => DtScaling::Square,
            "linear" => DtScaling::Linear,
            other => {
                return Err(ConfigError::InvalidValue {
                    key: "convergence.dt_scaling".into(),
                    value: other.into(),
                    message: "expected square or linear".into(),
                }
                .into())
            }
        };
        let band = self.order_band()?;
        let rep = convergence_study(&run, &levels, scaling)?;
        let omega_bound = c.get::<f64>("accept.omega1_factor")? * run.poisson.tol;
        let mut b = ReportBundle::new("convergence", None, c.echo());
        for f in [&rep.v1, &rep.phi1] {
            b.check(format!("ORDER_{}", f.field.to_uppercase()), f.pass_within(band), order_detail(f, band));
        }
        b.check(
            "OMEGA1_BOUND",
            rep.max_omega1() <= omega_bound,
            format!("max={:.3e} bound={omega_bound:.3e}", rep.max_omega1()),
        );
        for l in &rep.levels {
            b.notes.push(format!(
                "LEVEL n={} h={:.6e} dt={:.6e} steps={} err_v1={:.6e} err_phi1={:.6e}",
                l.nodes, l.h, l.dt, l.steps, l.err_v1, l.err_phi1
            ));
        }
        self.write_table(&mut b, "convergence.csv", &rep.to_table())?;
        Ok(b)
    }

    fn blowup_fit(&self) -> Result<ReportBundle> {
        let run = self.run_config()?;
        let c = &self.config;
        let deltas: Vec<f64> = c.list("chase.deltas")?;
        let quantity = match c.raw("chase.quantity") {
            "vr_sup_at_rmax" => ChaseQuantity::VrSupAtRmax,
            "v1_sup" => ChaseQuantity::V1Sup,
            other => {
                return Err(ConfigError::InvalidValue {
                    key: "chase.quantity".into(),
                    value: other.into(),
                    message: "expected vr_sup_at_rmax or v1_sup".into(),
                }
                .into())
            }
        };
        let expected: f64 = c.get("accept.exponent")?;
        let tol: f64 = c.get("accept.exponent_tol")?;
        let p = run.params;
        let mut b = ReportBundle::new("blowup-fit", None, c.echo());

        // Closed-form gradient supremum over the unit ball.
        let times = log_spaced_times(p.t_star(), 1e-1 * p.t_star(), 1e-3 * p.t_star(), 9);
        let grad = blowup_fit(&p, BlowupQuantity::GradSup, &ProbeRegion::unit_ball(p.family()), &times)?;
        let amp = 2.0 * p.a().abs();
        b.check(
            "GRAD_SUP_EXPONENT",
            (grad.exponent + 1.0).abs() <= 0.02,
            format!("exponent={:.6} expected=-1 tol=0.02", grad.exponent),
        );
        b.check(
            "GRAD_SUP_AMPLITUDE",
            (grad.amplitude_c - amp).abs() <= 0.02 * amp,
            format!("amplitude={:.6} expected={amp:.6} rel_tol=0.02", grad.amplitude_c),
        );

        let fit = blowup_chase(&run, &deltas, quantity)?;
        b.check(
            "CHASE_EXPONENT",
            (fit.exponent - expected).abs() <= tol,
            format!("quantity={} exponent={:.6} expected={expected} tol={tol}", quantity.name(), fit.exponent),
        );
        b.notes.push(fit.line());
        b.notes.push(grad.line());
        let mut table = Table::new(
            header_comment(None, &format!("{p} quantity={} grid={}x{}", quantity.name(), run.grid.nr(), run.grid.nz())),
            ["delta", "value", "fit"],
        );
        for (d, v) in &fit.samples {
            table.push([*d, *v, fit.amplitude_c * d.powf(fit.exponent)]);
        }
        self.write_table(&mut b, "blowup_fit.csv", &table)?;
        Ok(b)
    }
}

fn order_detail(f: &FieldOrders, band: (f64, f64)) -> String {
    let list: Vec<String> = f.orders.iter().map(|o| o.to_string()).collect();
    format!("orders=[{}] band=[{}, {}]", list.join(", "), band.0, band.1)
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
}
