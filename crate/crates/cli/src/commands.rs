use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};

use abspec::ab::{
    ab_spectrum, channel_window, m_of_phi, singular_channels, transform_checks, transform_forward,
    AbError, AbFamilySpec, AnalyticField, CylindricalField, CylindricalGrid, FluxParameter,
    HarmonicMode, ModeSum, TauSpec,
};
use abspec::ext::{
    extension_from_theta, rho_sigma, BoundaryCombination, BoundaryParameter, CutoffTimes,
    ExtControls, ExtensionDescriptor, Frame, SigmaPart,
};
use abspec::sl::{solve_ivp, Endpoint, Interval, IvpControls, IvpMethod, Potential};
use abspec::special::{CosWindow, SmoothCutoff};
use abspec::spectral::{eigenvalues_below, shoot_mismatch, EnergyWindow, SpectralControls};
use abspec::weyl::{classify_endpoint, extension_structure, ClassifyControls, ClassifyError, EndpointSide, Verdict};

use crate::config::Config;
use crate::report::{csv_num, CsvTable, Report};
use crate::{CliError, CommandOutput};

// ---------------------------------------------------------------------------
// shared parsing

fn parse_endpoint(text: &str) -> Result<Endpoint, CliError> {
    match text.trim() {
        "inf" | "+inf" | "infinity" => Ok(Endpoint::PosInfinity),
        "-inf" | "-infinity" => Ok(Endpoint::NegInfinity),
        other => other
            .parse::<f64>()
            .map(Endpoint::Finite)
            .map_err(|_| CliError::validation(format!("bad interval endpoint '{other}'"))),
    }
}

fn parse_domain(text: &str) -> Result<Interval, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::validation(format!(
            "domain must be 'a:b', got '{text}'"
        )));
    }
    Interval::new(parse_endpoint(parts[0])?, parse_endpoint(parts[1])?)
        .map_err(|e| CliError::validation(e.to_string()))
}

/// `start:end:step`, endpoints inclusive by step count.
fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::validation(format!(
            "grid must be 'start:end:step', got '{text}'"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::validation(format!("bad grid number '{p}'")))
        })
        .collect::<Result<_, _>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if start == end {
        return Ok(vec![start]);
    }
    if !(step > 0.0) || end < start {
        return Err(CliError::validation(format!(
            "grid '{text}' needs start <= end and step > 0"
        )));
    }
    let n = ((end - start) / step).round() as usize;
    if n > 1_000_000 {
        return Err(CliError::validation("grid is too dense".into()));
    }
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

fn load_two_column_table(path: &PathBuf) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read table {path:?}: {e}")))?;
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(CliError::validation(format!(
                "{path:?}:{}: expected two columns",
                lineno + 1
            )));
        }
        let x = fields[0].parse::<f64>().map_err(|_| {
            CliError::validation(format!("{path:?}:{}: bad number", lineno + 1))
        })?;
        let v = fields[1].parse::<f64>().map_err(|_| {
            CliError::validation(format!("{path:?}:{}: bad number", lineno + 1))
        })?;
        xs.push(x);
        vals.push(v);
    }
    Ok((xs, vals))
}

fn parse_tau(text: &str) -> Result<TauSpec, CliError> {
    let Some((kind, rest)) = text.split_once(':') else {
        return Err(CliError::validation(format!(
            "tau must be 'const:VALUE', 'table:PATH', or 'expr:EXPRESSION', got '{text}'"
        )));
    };
    let spec = match kind {
        "const" => {
            let v = rest
                .parse::<f64>()
                .map_err(|_| CliError::validation(format!("bad tau constant '{rest}'")))?;
            TauSpec::constant(v)
        }
        "table" => {
            let (ps, values) = load_two_column_table(&PathBuf::from(rest))?;
            TauSpec::table(ps, values)
        }
        "expr" => TauSpec::expression(rest),
        other => {
            return Err(CliError::validation(format!(
                "unknown tau kind '{other}'"
            )))
        }
    };
    spec.map_err(ab_validation)
}

fn ab_validation(e: AbError) -> CliError {
    match e {
        AbError::Validation(_) | AbError::Precondition(_) => CliError::validation(e.to_string()),
        other => CliError::inconclusive(other.to_string()),
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PotentialArgs {
    /// Potential family: inverse-square | constant | tabulated.
    #[arg(long)]
    potential: Option<String>,
    /// Coupling of the inverse-square family q = (kappa^2 - 1/4) / x^2.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Level of the constant potential.
    #[arg(long, allow_hyphen_values = true)]
    value: Option<f64>,
    /// Interval 'a:b'; endpoints may be -inf / inf.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Two-column file (x, q) for the tabulated family.
    #[arg(long)]
    table: Option<PathBuf>,
}

fn build_potential(args: &PotentialArgs, config: &Config) -> Result<(Potential, Value), CliError> {
    let family = config.string("potential", args.potential.clone(), "inverse-square")?;
    match family.as_str() {
        "inverse-square" => {
            let kappa = config
                .f64("kappa", args.kappa, f64::NAN)
                .and_then(|v| {
                    if v.is_nan() {
                        Err(CliError::validation(
                            "the inverse-square family requires --kappa".into(),
                        ))
                    } else {
                        Ok(v)
                    }
                })?;
            let q = Potential::inverse_square(kappa);
            let echo = json!({"potential": "inverse-square", "kappa": kappa});
            Ok((q, echo))
        }
        "constant" => {
            let value = config.f64("value", args.value, f64::NAN).and_then(|v| {
                if v.is_nan() {
                    Err(CliError::validation(
                        "the constant family requires --value".into(),
                    ))
                } else {
                    Ok(v)
                }
            })?;
            let domain_text = config.string("domain", args.domain.clone(), "0:inf")?;
            let domain = parse_domain(&domain_text)?;
            let q = Potential::constant(value, domain);
            let echo = json!({"potential": "constant", "value": value, "domain": domain_text});
            Ok((q, echo))
        }
        "tabulated" => {
            let Some(path) = &args.table else {
                return Err(CliError::validation(
                    "the tabulated family requires --table".into(),
                ));
            };
            let (xs, vals) = load_two_column_table(path)?;
            let domain_text = config.string("domain", args.domain.clone(), "0:inf")?;
            let domain = parse_domain(&domain_text)?;
            let q = Potential::tabulated(xs, vals, domain)
                .map_err(|e| CliError::validation(e.to_string()))?;
            let echo = json!({
                "potential": "tabulated",
                "table": path.display().to_string(),
                "domain": domain_text
            });
            Ok((q, echo))
        }
        other => Err(CliError::validation(format!(
            "unknown potential family '{other}'"
        ))),
    }
}

fn ivp_controls(
    config: &Config,
    rel: Option<f64>,
    abs: Option<f64>,
    max_step: Option<f64>,
    method: Option<&str>,
) -> Result<IvpControls, CliError> {
    let mut c = IvpControls::default();
    c.rel_tol = config.f64("rel-tol", rel, c.rel_tol)?;
    c.abs_tol = config.f64("abs-tol", abs, c.abs_tol)?;
    let max_step = config.f64("max-step", max_step, f64::NAN)?;
    if !max_step.is_nan() {
        c.max_step = Some(max_step);
    }
    let method = config.string("method", method.map(str::to_string), "adaptive-rk")?;
    c.method = match method.as_str() {
        "adaptive-rk" => IvpMethod::AdaptiveRk,
        "picard" => IvpMethod::Picard,
        other => {
            return Err(CliError::validation(format!(
                "unknown method '{other}' (adaptive-rk | picard)"
            )))
        }
    };
    c.validate().map_err(|e| CliError::validation(e.to_string()))?;
    Ok(c)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::LimitCircle => "lcc",
        Verdict::LimitPoint => "lpc",
    }
}

// ---------------------------------------------------------------------------
// classify

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ClassifyArgs {
    #[command(flatten)]
    potential: PotentialArgs,
    /// Spectral parameter of the homogeneous equation (classification is
    /// E-independent; the default 0 is used throughout).
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<f64>,
    /// Skip registered closed-form verdicts and run the windowed test.
    #[arg(long)]
    numerical: bool,
    /// Interior anchor for the windowed test.
    #[arg(long, allow_hyphen_values = true)]
    anchor: Option<f64>,
}

pub fn run_classify(args: &ClassifyArgs, config: &Config) -> Result<CommandOutput, CliError> {
    let (q, q_echo) = build_potential(&args.potential, config)?;
    let energy = config.f64("energy", args.energy, 0.0)?;
    let controls = ClassifyControls {
        anchor: args.anchor,
        force_numerical: args.numerical,
        ..ClassifyControls::default()
    };

    let classify = |side: EndpointSide| -> Result<_, CliError> {
        classify_endpoint(&q, energy, side, &controls).map_err(|e| match e {
            ClassifyError::Inconclusive { .. } => CliError::inconclusive(e.to_string()),
            other => CliError::validation(other.to_string()),
        })
    };
    let left = classify(EndpointSide::Left)?;
    let right = classify(EndpointSide::Right)?;
    let structure = extension_structure(&q, &controls).map_err(|e| match e {
        ClassifyError::Inconclusive { .. } => CliError::inconclusive(e.to_string()),
        other => CliError::validation(other.to_string()),
    })?;

    let inputs = json!({
        "potential": q_echo,
        "energy": energy,
        "numerical": args.numerical,
        "anchor": args.anchor,
    });
    let results = json!({
        "left": {"verdict": verdict_name(left.verdict), "method": left.method},
        "right": {"verdict": verdict_name(right.verdict), "method": right.method},
        "structure": structure,
    });
    let diagnostics = json!({
        "left_windows": left.diagnostics,
        "right_windows": right.diagnostics,
    });

    let csv = CsvTable {
        header: vec!["endpoint", "verdict", "method"],
        rows: vec![
            vec![
                "left".into(),
                verdict_name(left.verdict).into(),
                format!("{:?}", left.method).to_lowercase(),
            ],
            vec![
                "right".into(),
                verdict_name(right.verdict).into(),
                format!("{:?}", right.method).to_lowercase(),
            ],
        ],
    };
    Ok(CommandOutput {
        report: Report::new("classify", inputs, results, diagnostics),
        csv,
        exit_code: 0,
    })
}

// ---------------------------------------------------------------------------
// solve-ivp

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveIvpArgs {
    #[command(flatten)]
    potential: PotentialArgs,
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    u0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    du0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    target: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    max_step: Option<f64>,
    /// adaptive-rk | picard
    #[arg(long)]
    method: Option<String>,
}

pub fn run_solve_ivp(args: &SolveIvpArgs, config: &Config) -> Result<CommandOutput, CliError> {
    let (q, q_echo) = build_potential(&args.potential, config)?;
    let energy = config.f64("energy", args.energy, 0.0)?;
    let x0 = require(config.f64("x0", args.x0, f64::NAN)?, "--x0")?;
    let u0 = require(config.f64("u0", args.u0, f64::NAN)?, "--u0")?;
    let du0 = require(config.f64("du0", args.du0, f64::NAN)?, "--du0")?;
    let target = require(config.f64("target", args.target, f64::NAN)?, "--target")?;
    let controls = ivp_controls(
        config,
        args.rel_tol,
        args.abs_tol,
        args.max_step,
        args.method.as_deref(),
    )?;

    let traj = solve_ivp(&q, energy, x0, u0, du0, target, &controls)
        .map_err(|e| CliError::inconclusive(e.to_string()))?;
    let end = traj.last().1;

    let inputs = json!({
        "potential": q_echo,
        "energy": energy,
        "x0": x0, "u0": u0, "du0": du0, "target": target,
        "controls": controls,
    });
    let results = json!({
        "samples": traj.xs().len(),
        "end": {"x": traj.last().0, "u": end.u, "du": end.du},
        "xs": traj.xs(),
        "us": traj.us(),
        "dus": traj.dus(),
    });
    let csv = CsvTable {
        header: vec!["x", "u", "du"],
        rows: traj
            .xs()
            .iter()
            .zip(traj.us())
            .zip(traj.dus())
            .map(|((x, u), du)| vec![csv_num(*x), csv_num(*u), csv_num(*du)])
            .collect(),
    };
    Ok(CommandOutput {
        report: Report::new("solve-ivp", inputs, results, json!({})),
        csv,
        exit_code: 0,
    })
}

fn require(v: f64, flag: &str) -> Result<f64, CliError> {
    if v.is_nan() {
        Err(CliError::validation(format!("{flag} is required")))
    } else {
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// eigen

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct EigenArgs {
    /// Channel coupling kappa; |kappa| < 1 selects a boundary-parametrized
    /// realization, |kappa| >= 1 the closure.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Boundary angle in [0, pi); valid only for |kappa| < 1.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    emin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    emax: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    mesh_per_decade: Option<usize>,
    #[arg(long)]
    cutoff_factor: Option<f64>,
    #[arg(long)]
    seed_factor: Option<f64>,
    /// Include the sampled eigenfunctions in the JSON report.
    #[arg(long)]
    emit_eigenfunctions: bool,
}

fn spectral_controls(
    config: &Config,
    rel: Option<f64>,
    mesh: Option<usize>,
    cutoff: Option<f64>,
    seed: Option<f64>,
) -> Result<SpectralControls, CliError> {
    let mut c = SpectralControls::default();
    c.ivp.rel_tol = config.f64("rel-tol", rel, c.ivp.rel_tol)?;
    c.mesh_per_decade = config.usize("mesh-per-decade", mesh, c.mesh_per_decade)?;
    c.cutoff_factor = config.f64("cutoff-factor", cutoff, c.cutoff_factor)?;
    c.seed_factor = config.f64("seed-factor", seed, c.seed_factor)?;
    if !(c.cutoff_factor >= 5.0) || !(c.seed_factor > 0.0) || c.mesh_per_decade < 2 {
        return Err(CliError::validation(
            "spectral controls out of range (cutoff-factor >= 5, seed-factor > 0, mesh >= 2)"
                .into(),
        ));
    }
    Ok(c)
}

fn channel_descriptor(kappa: f64, theta: Option<f64>) -> Result<ExtensionDescriptor, CliError> {
    if !kappa.is_finite() {
        return Err(CliError::validation("kappa must be finite".into()));
    }
    let q = Potential::inverse_square(kappa);
    match theta {
        Some(t) if kappa.abs() < 1.0 => {
            let theta = BoundaryParameter::new(t)
                .map_err(|e| CliError::validation(e.to_string()))?;
            extension_from_theta(&q, theta, Frame::Frobenius { kappa })
                .map_err(|e| CliError::validation(e.to_string()))
        }
        Some(_) => Err(CliError::validation(format!(
            "theta is invalid for |kappa| = {} >= 1: the channel is essentially self-adjoint \
             and admits only the closure",
            kappa.abs()
        ))),
        None if kappa.abs() < 1.0 => Err(CliError::validation(
            "a boundary angle --theta is required for |kappa| < 1".into(),
        )),
        None => Ok(ExtensionDescriptor::closure(q)),
    }
}

pub fn run_eigen(args: &EigenArgs, config: &Config) -> Result<CommandOutput, CliError> {
    let kappa = require(config.f64("kappa", args.kappa, f64::NAN)?, "--kappa")?;
    let theta = match args.theta {
        Some(t) => Some(t),
        None => {
            let v = config.f64("theta", None, f64::NAN)?;
            if v.is_nan() {
                None
            } else {
                Some(v)
            }
        }
    };
    let e_min = config.f64("emin", args.emin, -40.0)?;
    let e_max = config.f64("emax", args.emax, -1e-8)?;
    let controls = spectral_controls(
        config,
        args.rel_tol,
        args.mesh_per_decade,
        args.cutoff_factor,
        args.seed_factor,
    )?;
    let descriptor = channel_descriptor(kappa, theta)?;
    let window =
        EnergyWindow::new(e_min, e_max).map_err(|e| CliError::validation(e.to_string()))?;
    if window.e_max > 0.0 {
        return Err(CliError::validation(
            "the discrete search window requires emax <= 0".into(),
        ));
    }

    let scan = eigenvalues_below(&descriptor, &window, &controls)
        .map_err(|e| CliError::validation(e.to_string()))?;

    let eigenvalues: Vec<Value> = scan
        .results
        .iter()
        .map(|r| {
            let mismatch = shoot_mismatch(&descriptor, r.energy, &controls).ok();
            let mut entry = json!({
                "energy": r.energy,
                "residual": r.residual,
                "mismatch_at_root": mismatch,
                "refinement_steps": r.mismatch_history.len(),
            });
            if args.emit_eigenfunctions {
                entry["eigenfunction"] = json!({
                    "xs": r.eigenfunction.xs(),
                    "us": r.eigenfunction.us(),
                });
            }
            entry
        })
        .collect();
    let failures: Vec<Value> = scan
        .failures
        .iter()
        .map(|f| json!({"bracket": f.bracket, "reason": f.reason}))
        .collect();

    let exit_code = if scan.results.is_empty() && !scan.failures.is_empty() {
        3
    } else {
        0
    };

    let inputs = json!({
        "kappa": kappa,
        "theta": theta,
        "emin": e_min,
        "emax": e_max,
        "controls": controls,
    });
    let results = json!({"eigenvalues": eigenvalues, "count": scan.results.len()});
    let diagnostics = json!({
        "mesh_size": scan.mesh_size,
        "scanned": scan.scanned,
        "failures": failures,
    });
    let csv = CsvTable {
        header: vec!["index", "energy", "residual"],
        rows: scan
            .results
            .iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), csv_num(r.energy), csv_num(r.residual)])
            .collect(),
    };
    Ok(CommandOutput {
        report: Report::new("eigen", inputs, results, diagnostics),
        csv,
        exit_code,
    })
}

// ---------------------------------------------------------------------------
// ab spectrum

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct AbSpectrumArgs {
    /// Reduced flux of the solenoid.
    #[arg(long, allow_hyphen_values = true)]
    flux: Option<f64>,
    /// Boundary map for the single singular channel (integer flux only):
    /// const:V | table:PATH | expr:E.
    #[arg(long)]
    tau: Option<String>,
    /// Boundary map for channel m(flux) (non-integer flux).
    #[arg(long)]
    tau1: Option<String>,
    /// Boundary map for channel m(flux) + 1 (non-integer flux).
    #[arg(long)]
    tau2: Option<String>,
    /// Axial momentum grid 'start:end:step'.
    #[arg(long, allow_hyphen_values = true)]
    p_grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    emin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    emax: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    mesh_per_decade: Option<usize>,
    #[arg(long)]
    cutoff_factor: Option<f64>,
    #[arg(long)]
    seed_factor: Option<f64>,
    /// Optional output energy scale factor applied in reports only.
    #[arg(long)]
    energy_scale: Option<f64>,
}

pub fn run_ab_spectrum(args: &AbSpectrumArgs, config: &Config) -> Result<CommandOutput, CliError> {
    let flux_value = require(config.f64("flux", args.flux, f64::NAN)?, "--flux")?;
    let flux = FluxParameter::new(flux_value).map_err(ab_validation)?;
    let p_text = config.string("p-grid", args.p_grid.clone(), "-2:2:0.5")?;
    let p_grid = parse_grid(&p_text)?;
    let e_min = config.f64("emin", args.emin, -40.0)?;
    let e_max = config.f64("emax", args.emax, -1e-8)?;
    let scale = config.f64("energy-scale", args.energy_scale, 1.0)?;
    let controls = spectral_controls(
        config,
        args.rel_tol,
        args.mesh_per_decade,
        args.cutoff_factor,
        args.seed_factor,
    )?;

    let singular = singular_channels(flux);
    let mut taus = BTreeMap::new();
    if flux.is_integer() {
        if args.tau1.is_some() || args.tau2.is_some() || args.tau.is_none() {
            return Err(CliError::validation(
                "integer flux takes exactly one boundary map: --tau".into(),
            ));
        }
        taus.insert(singular[0], parse_tau(args.tau.as_deref().unwrap())?);
    } else {
        if args.tau.is_some() || args.tau1.is_none() || args.tau2.is_none() {
            return Err(CliError::validation(
                "non-integer flux takes exactly two boundary maps: --tau1 (channel m(flux)) \
                 and --tau2 (channel m(flux)+1)"
                    .into(),
            ));
        }
        taus.insert(m_of_phi(flux), parse_tau(args.tau1.as_deref().unwrap())?);
        taus.insert(m_of_phi(flux) + 1, parse_tau(args.tau2.as_deref().unwrap())?);
    }
    let spec = AbFamilySpec::new(flux, taus).map_err(ab_validation)?;
    let window =
        EnergyWindow::new(e_min, e_max).map_err(|e| CliError::validation(e.to_string()))?;

    let report = ab_spectrum(&spec, &p_grid, &window, &controls).map_err(ab_validation)?;

    let total_points: usize = report.channels.iter().map(|c| c.points.len()).sum();
    let exit_code = if report.solver_failures > 0 && 2 * report.solver_failures > total_points {
        3
    } else {
        0
    };

    let mut csv_rows = Vec::new();
    for ch in &report.channels {
        for pt in &ch.points {
            for b in &pt.bound_states {
                csv_rows.push(vec![
                    ch.m.to_string(),
                    csv_num(pt.p),
                    csv_num(scale * b.energy),
                    "bound".to_string(),
                ]);
            }
            csv_rows.push(vec![
                ch.m.to_string(),
                csv_num(pt.p),
                csv_num(scale * pt.essential_bottom),
                "essential_bottom".to_string(),
            ]);
        }
    }

    let inputs = json!({
        "flux": flux_value,
        "taus": spec.taus(),
        "p_grid": p_text,
        "emin": e_min,
        "emax": e_max,
        "energy_scale": scale,
        "controls": controls,
    });
    let results = json!({
        "singular_channels": singular,
        "channels": report.channels,
        "energy_scale": scale,
    });
    let diagnostics = json!({
        "solver_failures": report.solver_failures,
        "p_points": report.p_grid.len(),
    });
    Ok(CommandOutput {
        report: Report::new("ab-spectrum", inputs, results, diagnostics),
        csv: CsvTable {
            header: vec!["m", "p", "E", "kind"],
            rows: csv_rows,
        },
        exit_code,
    })
}

// ---------------------------------------------------------------------------
// ab transform-check

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TransformCheckArgs {
    #[arg(long, allow_hyphen_values = true)]
    flux: Option<f64>,
    /// Built-in test field: two-harmonic | separable.
    #[arg(long)]
    builtin: Option<String>,
    /// Angular index of the separable harmonic (and the second harmonic of
    /// the two-harmonic field).
    #[arg(long, allow_hyphen_values = true)]
    harmonic: Option<i64>,
    #[arg(long)]
    n_ang: Option<usize>,
    #[arg(long)]
    n_z: Option<usize>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    z_half: Option<f64>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    m_window: Option<i64>,
    /// Radial center/half-width and axial half-width of the field profile.
    #[arg(long)]
    r_center: Option<f64>,
    #[arg(long)]
    r_width: Option<f64>,
    #[arg(long)]
    z_width: Option<f64>,
}

pub fn run_transform_check(
    args: &TransformCheckArgs,
    config: &Config,
) -> Result<CommandOutput, CliError> {
    let flux_value = require(config.f64("flux", args.flux, f64::NAN)?, "--flux")?;
    let flux = FluxParameter::new(flux_value).map_err(ab_validation)?;
    let builtin = config.string("builtin", args.builtin.clone(), "two-harmonic")?;
    let harmonic = config.i64("harmonic", args.harmonic, 2)?;
    let n_ang = config.usize("n-ang", args.n_ang, 64)?;
    let n_z = config.usize("n-z", args.n_z, 128)?;
    let n_r = config.usize("n-r", args.n_r, 768)?;
    let z_half = config.f64("z-half", args.z_half, 6.0)?;
    let r_min = config.f64("r-min", args.r_min, 0.05)?;
    let r_max = config.f64("r-max", args.r_max, 6.0)?;
    let m_window = config.i64("m-window", args.m_window, 8)?;
    let r_center = config.f64("r-center", args.r_center, 2.1)?;
    let r_width = config.f64("r-width", args.r_width, 1.5)?;
    let z_width = config.f64("z-width", args.z_width, 4.0)?;

    let rs = CylindricalGrid::geometric_radii(r_min, r_max, n_r).map_err(ab_validation)?;
    let grid = CylindricalGrid::uniform(n_ang, z_half, n_z, rs).map_err(ab_validation)?;

    let mode = |n: i64| HarmonicMode {
        n,
        chi: CosWindow::new(0.0, z_width, 6),
        radial: CosWindow::new(r_center, r_width, 6),
    };
    let field: Box<dyn AnalyticField> = match builtin.as_str() {
        "separable" => Box::new(mode(harmonic)),
        "two-harmonic" => Box::new(ModeSum(vec![mode(0), mode(harmonic)])),
        other => {
            return Err(CliError::validation(format!(
                "unknown builtin field '{other}' (two-harmonic | separable)"
            )))
        }
    };

    let diag = transform_checks(field.as_ref(), flux, &grid, m_window).map_err(ab_validation)?;

    // channel occupation of the sampled field; for the separable harmonic
    // this exhibits the one-channel structure and the off-channel leakage
    let sampled = CylindricalField::from_fn(grid.clone(), |p, z, r| field.value(p, z, r));
    let ms = channel_window(flux, m_window);
    let amp = transform_forward(&sampled, &ms);
    let energies = amp.channel_energies();
    let total: f64 = energies.iter().map(|(_, e)| e).sum();
    let leakage = if builtin == "separable" && total > 0.0 {
        let on: f64 = energies
            .iter()
            .filter(|(m, _)| *m == harmonic)
            .map(|(_, e)| e)
            .sum();
        Some((total - on) / total)
    } else {
        None
    };

    let inputs = json!({
        "flux": flux_value,
        "builtin": builtin,
        "harmonic": harmonic,
        "n_ang": n_ang, "n_z": n_z, "n_r": n_r,
        "z_half": z_half, "r_min": r_min, "r_max": r_max,
        "m_window": m_window,
        "r_center": r_center, "r_width": r_width, "z_width": z_width,
    });
    let results = json!({
        "parseval_defect": diag.parseval_defect,
        "intertwining_defect": diag.intertwining_defect,
        "norm_squared": diag.norm_squared,
        "off_channel_leakage": leakage,
    });
    let diagnostics = json!({
        "channel_energies": energies,
    });
    let mut rows = vec![
        vec!["parseval_defect".to_string(), csv_num(diag.parseval_defect)],
        vec![
            "intertwining_defect".to_string(),
            csv_num(diag.intertwining_defect),
        ],
        vec!["norm_squared".to_string(), csv_num(diag.norm_squared)],
    ];
    if let Some(l) = leakage {
        rows.push(vec!["off_channel_leakage".to_string(), csv_num(l)]);
    }
    Ok(CommandOutput {
        report: Report::new("ab-transform-check", inputs, results, diagnostics),
        csv: CsvTable {
            header: vec!["metric", "value"],
            rows,
        },
        exit_code: 0,
    })
}

// ---------------------------------------------------------------------------
// decompose

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DecomposeArgs {
    /// Channel coupling; |kappa| < 1 required.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Cutoff 'r1:r2': the test function is 1 on (0, r1], 0 on [r2, inf).
    #[arg(long)]
    cutoff: Option<String>,
    /// Angle of the homogeneous factor: g = cutoff * (psi1 cos a + psi2 sin a).
    #[arg(long, allow_hyphen_values = true)]
    g_theta: Option<f64>,
    #[arg(long)]
    tol_sigma: Option<f64>,
}

pub fn run_decompose(args: &DecomposeArgs, config: &Config) -> Result<CommandOutput, CliError> {
    let kappa = require(config.f64("kappa", args.kappa, f64::NAN)?, "--kappa")?;
    if !(kappa.abs() < 1.0) {
        return Err(CliError::validation(
            "decompose operates on limit-circle channels: |kappa| < 1".into(),
        ));
    }
    let cutoff_text = config.string("cutoff", args.cutoff.clone(), "1:2")?;
    let parts: Vec<&str> = cutoff_text.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::validation("cutoff must be 'r1:r2'".into()));
    }
    let r1 = parts[0]
        .parse::<f64>()
        .map_err(|_| CliError::validation("bad cutoff r1".into()))?;
    let r2 = parts[1]
        .parse::<f64>()
        .map_err(|_| CliError::validation("bad cutoff r2".into()))?;
    if !(r1 > 0.0 && r2 > r1) {
        return Err(CliError::validation("cutoff needs 0 < r1 < r2".into()));
    }
    let g_theta = config.f64("g-theta", args.g_theta, std::f64::consts::FRAC_PI_2)?;
    let angle =
        BoundaryParameter::new(g_theta).map_err(|e| CliError::validation(e.to_string()))?;
    let mut controls = ExtControls::default();
    controls.tol_sigma = config.f64("tol-sigma", args.tol_sigma, controls.tol_sigma)?;
    controls.report_hi = Some(2.0 * r2);

    let q = Potential::inverse_square(kappa);
    let frame = Frame::Frobenius { kappa };
    let combo = BoundaryCombination::new(frame.clone(), angle.angle().cos(), angle.angle().sin());
    let g = CutoffTimes {
        tau: SmoothCutoff::new(r1, r2),
        inner: &combo,
    };

    let dec = rho_sigma(&g, &q, &frame, &controls).map_err(|e| CliError::inconclusive(e.to_string()))?;

    let sigma_echo = match &dec.sigma {
        SigmaPart::Trivial => json!({"trivial": true}),
        SigmaPart::Homogeneous { c1, c2, c, theta } => json!({
            "trivial": false,
            "c1": c1, "c2": c2, "c": c,
            "theta": theta.angle(),
        }),
    };
    // consistency of the splitting on the reporting grid
    let mut max_defect: f64 = 0.0;
    let mut csv_rows = Vec::new();
    for (i, &x) in dec.grid.iter().enumerate() {
        let s = dec
            .sigma_at(x)
            .map_err(|e| CliError::inconclusive(e.to_string()))?
            .u;
        max_defect = max_defect.max((dec.rho_values[i] + s - dec.g_values[i]).abs());
        csv_rows.push(vec![
            csv_num(x),
            csv_num(dec.g_values[i]),
            csv_num(dec.rho_values[i]),
            csv_num(s),
        ]);
    }

    let inputs = json!({
        "kappa": kappa,
        "cutoff": cutoff_text,
        "g_theta": g_theta,
        "tol_sigma": controls.tol_sigma,
    });
    let results = json!({
        "sigma": sigma_echo,
        "splitting_defect": max_defect,
        "scale_g": dec.scale_g,
    });
    Ok(CommandOutput {
        report: Report::new("decompose", inputs, results, json!({})),
        csv: CsvTable {
            header: vec!["x", "g", "rho", "sigma"],
            rows: csv_rows,
        },
        exit_code: 0,
    })
}
