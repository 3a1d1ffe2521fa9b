//! `fedosov` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, malformed input or failed
//! verification, 2 point outside the domain of the form, 3 a flow reached a
//! singular set (partial output is still written).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use fedosov::constrained::{compare_with_magnetic_flow, Branch, ConstrainedSystem, Variant};
use fedosov::dynamics::{attach_conserved_diagnostics, integrate, DynamicsError, HamiltonianField, IntegratorConfig, Trajectory};
use fedosov::export::{write_trajectory, Format};
use fedosov::form::TwoFormField;
use fedosov::geometry::{torsion, LocalGeometry};
use fedosov::monopole::{
    closed_form_r1112, closed_form_ricci_11, model_form, ricci_11_on_slice, singularity_guard, FMode, GMode,
    MonopoleParams, MODEL_NAMES,
};
use fedosov::ode::Method;
use fedosov::verify::{run_suite, DEFAULT_SEED};
use fedosov::{GeometryError, PhasePoint};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "fedosov", version, about = "Geometry and dynamics of non-standard 2-forms on phase space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate ω, its inverse, dω, connection, torsion, curvature and Ricci at a point.
    Tensors(Opts),
    /// Integrate the flow of H = |p|²/2 and write the trajectory.
    Simulate(Opts),
    /// Run the seeded property suite and print a JSON report.
    Verify(Opts),
    /// Compare the magnetic-form flow with the constrained formulations.
    Compare(Opts),
}

#[derive(Args, Default)]
struct Opts {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// standard, form4, form6 or form7.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Use a constant f = ALPHA instead of the monopole profile.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Comma-separated phase-space point.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Comma-separated initial state.
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Local error tolerance for rk45.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// Constraint residual that aborts a constrained run.
    #[arg(long)]
    drift_limit: Option<f64>,
    /// Only run verification checks whose id starts with this prefix.
    #[arg(long)]
    only: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    lambda: Option<f64>,
    alpha: Option<f64>,
    point: Option<Vec<f64>>,
    state: Option<Vec<f64>>,
    t_end: Option<f64>,
    step: Option<f64>,
    tol: Option<f64>,
    method: Option<Method>,
    out: Option<PathBuf>,
    format: Option<Format>,
    seed: Option<u64>,
    drift_limit: Option<f64>,
    only: Option<String>,
}

/// Flags merged over the config file, with defaults filled in.
struct RunConfig {
    model: String,
    lambda: f64,
    alpha: Option<f64>,
    point: Option<Vec<f64>>,
    state: Option<Vec<f64>>,
    integrator: IntegratorConfig,
    out: Option<PathBuf>,
    format: Format,
    seed: u64,
    drift_limit: Option<f64>,
    only: String,
}

enum CliError {
    Usage(String),
    Domain { message: String, report: Value },
    Singular(String),
    Failed,
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn parse_csv(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("cannot parse `{v}` as a number: {e}")))
        })
        .collect()
}

fn resolve(opts: Opts) -> CliResult<RunConfig> {
    let file: FileConfig = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let point = match opts.point {
        Some(s) => Some(parse_csv(&s)?),
        None => file.point,
    };
    let state = match opts.state {
        Some(s) => Some(parse_csv(&s)?),
        None => file.state,
    };
    let defaults = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        method: opts.method.or(file.method).unwrap_or(defaults.method),
        step: opts.step.or(file.step).unwrap_or(defaults.step),
        tol: opts.tol.or(file.tol).unwrap_or(defaults.tol),
        t_end: opts.t_end.or(file.t_end).unwrap_or(defaults.t_end),
        guard_policy: defaults.guard_policy,
    };
    integrator
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let model = opts.model.or(file.model).unwrap_or_else(|| "form7".into());
    if !MODEL_NAMES.contains(&model.as_str()) {
        return Err(CliError::Usage(format!(
            "unknown model `{model}` (expected one of {})",
            MODEL_NAMES.join(", ")
        )));
    }
    Ok(RunConfig {
        model,
        lambda: opts.lambda.or(file.lambda).unwrap_or(1.0),
        alpha: opts.alpha.or(file.alpha),
        point,
        state,
        integrator,
        out: opts.out.or(file.out),
        format: opts.format.or(file.format).unwrap_or_default(),
        seed: opts.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        drift_limit: opts.drift_limit.or(file.drift_limit),
        only: opts.only.or(file.only).unwrap_or_default(),
    })
}

impl RunConfig {
    fn params(&self) -> MonopoleParams {
        let f_mode = match self.alpha {
            Some(a) => FMode::Constant(a),
            None => FMode::Monopole,
        };
        let g_mode = if self.model == "form7" { GMode::Zero } else { GMode::Monopole };
        MonopoleParams {
            lambda: self.lambda,
            f_mode,
            g_mode,
            ..MonopoleParams::monopole(self.lambda)
        }
    }

    fn is_monopole_model(&self) -> bool {
        self.model != "standard"
    }

    /// The model form together with a validated point of matching dimension.
    fn form_at(&self, coords: Option<&Vec<f64>>, what: &str) -> CliResult<(Arc<dyn TwoFormField>, PhasePoint)> {
        let coords = coords.ok_or_else(|| CliError::Usage(format!("--{what} is required")))?;
        if self.is_monopole_model() && coords.len() != 6 {
            return Err(CliError::Usage(format!(
                "model {} needs a {what} of 6 coordinates, got {}",
                self.model,
                coords.len()
            )));
        }
        let x = PhasePoint::new(coords.clone()).map_err(|e| CliError::Usage(format!("--{what}: {e}")))?;
        let form = model_form(&self.model, self.params(), x.n()).expect("model name was validated");
        Ok((form, x))
    }

    fn emit(&self, value: &Value) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        if let Some(path) = &self.out {
            fs::write(path, format!("{text}\n"))?;
        }
        println!("{text}");
        Ok(())
    }
}

fn domain_error(cfg: &RunConfig, x: &PhasePoint, err: GeometryError) -> CliError {
    let report = match &err {
        GeometryError::DomainViolation { report: Some(r), .. } => serde_json::to_value(r.as_ref()).ok(),
        _ => None,
    };
    let report = report
        .or_else(|| {
            cfg.is_monopole_model()
                .then(|| serde_json::to_value(singularity_guard(&cfg.params(), x)).ok())
                .flatten()
        })
        .unwrap_or(Value::Null);
    CliError::Domain {
        message: err.to_string(),
        report,
    }
}

fn nonzero(block: &fedosov::TensorBlock) -> usize {
    block.count_above(1e-12 * block.max_abs().max(1.0))
}

fn cmd_tensors(cfg: RunConfig) -> CliResult<()> {
    let (form, x) = cfg.form_at(cfg.point.as_ref(), "point")?;
    let geom = LocalGeometry::at(&form, &x).map_err(|e| domain_error(&cfg, &x, e))?;
    let conn = geom.connection();
    let curv = geom.curvature();
    let tor = torsion(&conn.upper).map_err(|e| domain_error(&cfg, &x, e))?;
    let ricci = geom.ricci();
    let matrix = |m: &DMatrix<f64>| -> Vec<Vec<f64>> { m.row_iter().map(|r| r.iter().copied().collect()).collect() };

    let mut report = json!({
        "model": cfg.model,
        "point": x.coords(),
        "omega": matrix(geom.omega()),
        "omega_inverse": matrix(geom.inverse()),
        "d_omega": geom.exterior_derivative(),
        "connection_lower": conn.lower,
        "connection_upper": conn.upper,
        "torsion": tor,
        "curvature_upper": curv.upper,
        "curvature_lower": curv.lower,
        "ricci": ricci,
        "scalar_curvature": geom.scalar_curvature(),
        "nonzero": {
            "d_omega": nonzero(&geom.exterior_derivative()),
            "connection_lower": nonzero(&conn.lower),
            "torsion": nonzero(&tor),
            "curvature_upper": nonzero(&curv.upper),
            "ricci": nonzero(&ricci),
        },
    });
    if cfg.model == "form6" {
        let params = cfg.params();
        let (q, p) = (x.q(), x.p());
        let mut reference = json!({
            "ricci_11": ricci[[0, 0]],
            "ricci_11_closed_form": geom.ricci_diagonal_closed_form(0).ok(),
            "ricci_11_squared_trace_form": geom.ricci_diagonal_squared_trace_form(0).ok(),
            "ricci_11_reference": closed_form_ricci_11(&params, &x).ok(),
            "curvature_1112": curv.lower[[0, 0, 0, 1]],
            "curvature_1112_reference": closed_form_r1112(&params, &x).ok(),
        });
        if q[0] == 0.0 && q[2] == 0.0 && p[0] == 0.0 && p[2] == 0.0 {
            reference["ricci_11_slice_reference"] = json!(ricci_11_on_slice(q[1], p[1]));
        }
        report["reference"] = reference;
    }
    cfg.emit(&report)
}

fn write_partial(cfg: &RunConfig, traj: &Trajectory) -> CliResult<()> {
    if let Some(path) = &cfg.out {
        write_trajectory(traj, path, cfg.format).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn summary(cfg: &RunConfig, traj: &Trajectory) -> Value {
    let mut s = json!({
        "model": cfg.model,
        "samples": traj.len(),
        "final_time": traj.final_time(),
        "final_state": traj.last_state().map(|x| x.coords().to_vec()),
        "error_estimate": traj.error_estimate,
        "max_energy_drift": traj.max_abs_diagnostic("energy_drift"),
    });
    for key in ["speed_drift", "poincare_drift"] {
        if traj.diagnostics.iter().any(|d| d.contains_key(key)) {
            s[format!("max_{key}")] = json!(traj.max_abs_diagnostic(key));
        }
    }
    s
}

fn cmd_simulate(cfg: RunConfig) -> CliResult<()> {
    let (form, x0) = cfg.form_at(cfg.state.as_ref(), "state")?;
    let params = cfg.params();
    let conserved = cfg.model == "form7" && params.f_mode == FMode::Monopole;
    match integrate(&form, &HamiltonianField::kinetic(), &x0, &cfg.integrator) {
        Ok(mut traj) => {
            if conserved {
                attach_conserved_diagnostics(&mut traj, &params);
            }
            write_partial(&cfg, &traj)?;
            println!("{}", serde_json::to_string_pretty(&summary(&cfg, &traj)).expect("JSON"));
            Ok(())
        }
        Err(err) => {
            if let Some(partial) = err.partial() {
                let mut partial = partial.clone();
                if conserved && !partial.is_empty() {
                    attach_conserved_diagnostics(&mut partial, &params);
                }
                write_partial(&cfg, &partial)?;
            }
            Err(dynamics_error(err))
        }
    }
}

fn dynamics_error(err: DynamicsError) -> CliError {
    match err {
        DynamicsError::SingularEncounter { .. } | DynamicsError::ConstraintDrift { .. } => {
            CliError::Singular(err.to_string())
        }
        DynamicsError::Geometry(e @ GeometryError::DomainViolation { .. }) => CliError::Singular(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

fn cmd_verify(cfg: RunConfig) -> CliResult<()> {
    let report = run_suite(cfg.seed, &cfg.only);
    if report.results.is_empty() {
        return Err(CliError::Usage(format!("no checks match `{}`", cfg.only)));
    }
    cfg.emit(&serde_json::to_value(&report).expect("report serializes"))?;
    for f in report.failures() {
        eprintln!("FAIL {} observed {:e} tolerance {:e}", f.id, f.observed, f.tolerance);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

fn cmd_compare(cfg: RunConfig) -> CliResult<()> {
    if cfg.model != "form7" {
        return Err(CliError::Usage("compare is defined for model form7 only".into()));
    }
    let (_, x0) = cfg.form_at(cfg.state.as_ref(), "state")?;
    let params = cfg.params();
    let runs = [
        (Variant::A, Branch::Same),
        (Variant::B, Branch::Same),
        (Variant::B, Branch::Mirror),
    ];
    let mut rows = Vec::new();
    for (variant, branch) in runs {
        let sys = ConstrainedSystem::new(variant, params).with_drift_limit(cfg.drift_limit.unwrap_or(f64::INFINITY));
        let c = compare_with_magnetic_flow(&sys, x0.q(), x0.p(), branch, &cfg.integrator).map_err(dynamics_error)?;
        rows.push(c);
    }
    cfg.emit(&json!({
        "state": x0.coords(),
        "t_end": cfg.integrator.t_end,
        "method": cfg.integrator.method,
        "comparisons": rows,
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tensors(o) => resolve(o).and_then(cmd_tensors),
        Command::Simulate(o) => resolve(o).and_then(cmd_simulate),
        Command::Verify(o) => resolve(o).and_then(cmd_verify),
        Command::Compare(o) => resolve(o).and_then(cmd_compare),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: fedosov tensors|simulate|verify|compare [OPTIONS]  (see --help)");
            ExitCode::from(1)
        }
        Err(CliError::Failed) => ExitCode::from(1),
        Err(CliError::Domain { message, report }) => {
            eprintln!("error: {message}");
            eprintln!("{}", serde_json::to_string_pretty(&json!({ "singularity_report": report })).expect("JSON"));
            ExitCode::from(2)
        }
        Err(CliError::Singular(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
