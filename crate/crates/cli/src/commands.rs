use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use dominion::builtin::SPRING_INITIAL_CONDITIONS;
use dominion::dynamics::Scope;
use dominion::integrate::{default_step, EQUILIBRIUM_MERGE_RADIUS, EQUILIBRIUM_RESIDUAL, MAX_CSV_ROWS};
use dominion::{
    build_decoupling, certify_sp, detect_convergence, epsilon_star_vertices, find_equilibria, integrate,
    monotone_probe, ProbeOptions, SpDynamics,
};

use crate::config::{Model, SystemConfig, DEFAULT_CONVERGENCE_TOL, DEFAULT_EQUILIBRIUM_GRID};
use crate::error::{CliError, CliResult};
use crate::report::{
    tol, CertifySection, Check, DecoupleSection, DecoupleVertex, EpsilonSection, ProbeSection, Report,
    ReproduceSection, SimulateSection, Stage, Tolerance, TrajectorySection,
};

/// Largest acceptable Chang residuals and block-diagonalization error.
pub const DECOUPLE_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub timestamp: bool,
}

/// `<dir>/<stem>.<command>.json` next to the config unless overridden.
fn report_path(config: &Path, command: &str, explicit: Option<PathBuf>) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into());
        config.with_file_name(format!("{stem}.{command}.json"))
    })
}

fn finish<T: serde::Serialize>(report: &Report<T>, path: &Path) -> CliResult<u8> {
    report.write(path)?;
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!("report written to {}", path.display());
    Ok(report.exit_code())
}

fn certify_tolerances() -> Vec<Tolerance> {
    vec![tol("lmi_feasibility_margin", 0.0), tol("feasibility_slack_reported", dominion::certify::FEASIBILITY_SLACK)]
}

fn certify_section(model: &Model) -> CliResult<CertifySection> {
    let cert = model.certificate()?;
    let poly = model.polytopes()?;
    let r = certify_sp(cert, &poly.slow, &poly.fast)?;
    Ok(CertifySection::new(cert, poly.hull.as_ref(), &poly.slow, &poly.fast, &r))
}

fn certify_checks(s: &CertifySection) -> Vec<Check> {
    vec![
        Check::new(
            "slow LMI",
            s.slow.feasible,
            format!("worst margin {:.6e} at vertex {}", s.slow.worst_margin, s.slow.worst_vertex),
        ),
        Check::new(
            "fast LMI",
            s.fast.feasible,
            format!("worst margin {:.6e} at vertex {}", s.fast.worst_margin, s.fast.worst_vertex),
        ),
    ]
}

fn sampled_hull_warning(s: &CertifySection) -> Option<String> {
    s.hull
        .as_ref()
        .filter(|h| h.sampled)
        .map(|h| format!("hull bounds [{}, {}] were sampled on a grid, not proven", h.lo, h.hi))
}

pub fn certify(ctx: Ctx, config: &Path, out: Option<PathBuf>) -> CliResult<u8> {
    let model = Model::load(config)?;
    let section = certify_section(&model)?;
    println!("slow margins: {:?}", section.slow.margins);
    println!("fast margins: {:?}", section.fast.margins);
    let mut report = Report::new("certify", Some(config), ctx.timestamp, section);
    for c in certify_checks(&report.result) {
        report.check(c);
    }
    report.warnings.extend(sampled_hull_warning(&report.result));
    report.tolerances = certify_tolerances();
    finish(&report, &report_path(config, "certify", out))
}

pub fn decouple(ctx: Ctx, config: &Path, eps: f64, out: Option<PathBuf>) -> CliResult<u8> {
    let model = Model::load(config)?;
    let opts = model.config.epsilon_options().chang;
    // with no hull, a nonlinear system is decoupled at its linearization at the origin
    let vertices = match (&model.system, &model.config.hull) {
        (dominion::SpSystem::Nonlinear(sys), None) => vec![sys.jacobians(&vec![0.0; sys.dim()])?],
        _ => model.polytopes()?.vertices,
    };
    let mut section = DecoupleSection { eps, vertices: Vec::new() };
    for (i, blocks) in vertices.iter().enumerate() {
        let d = build_decoupling(blocks, eps, &opts)?;
        section.vertices.push(DecoupleVertex::new(i, blocks, &d));
    }
    let mut report = Report::new("decouple", Some(config), ctx.timestamp, section);
    let vs = &report.result.vertices;
    let worst = |f: fn(&DecoupleVertex) -> f64| vs.iter().map(f).fold(0.0, f64::max);
    let (rl, rh, bd) = (worst(|v| v.residual_l), worst(|v| v.residual_h), worst(|v| v.block_diag_residual));
    let checks = [
        Check::new("Chang residuals", rl.max(rh) <= DECOUPLE_RESIDUAL_TOL, format!("L {rl:.3e}, H {rh:.3e}")),
        Check::new("block diagonalization", bd <= DECOUPLE_RESIDUAL_TOL, format!("off-diagonal residual {bd:.3e}")),
    ];
    for c in checks {
        report.check(c);
    }
    if let Some(v) = report.result.vertices.first() {
        println!("L = {:?}", v.l);
    }
    report.tolerances = vec![
        tol("chang_update", opts.tol),
        tol("chang_max_iter", opts.max_iter as f64),
        tol("residual_max", DECOUPLE_RESIDUAL_TOL),
    ];
    finish(&report, &report_path(config, "decouple", out))
}

fn epsilon_section(model: &Model) -> CliResult<EpsilonSection> {
    let cert = model.certificate()?;
    let opts = model.config.epsilon_options();
    let vertices = model.polytopes()?.vertices;
    let star = epsilon_star_vertices(&vertices, cert, &opts)?;
    Ok(EpsilonSection::new(
        &star,
        opts.floor,
        opts.bisection_steps,
        opts.coupling_bound,
        vertices.len(),
        model.config.eps,
    ))
}

fn epsilon_tolerances(model: &Model) -> Vec<Tolerance> {
    let o = model.config.epsilon_options();
    vec![
        tol("block_lmi_margin", 0.0),
        tol("eps_floor", o.floor),
        tol("eps_max", o.eps_max),
        tol("chang_update", o.chang.tol),
    ]
}

pub fn epsilon_star(ctx: Ctx, config: &Path, out: Option<PathBuf>) -> CliResult<u8> {
    let model = Model::load(config)?;
    let section = epsilon_section(&model)?;
    println!("certified eps_hat = {:.6e}", section.eps_hat);
    let mut report = Report::new("epsilon-star", Some(config), ctx.timestamp, section);
    let v = &report.result.violations;
    report.check(Check::new(
        "re-check below eps_hat",
        v.is_empty(),
        format!("{} of {} points infeasible", v.len(), report.result.verification.len()),
    ));
    if !report.result.config_eps_certified {
        report.warnings.push(format!("configured eps {} exceeds eps_hat {}", model.config.eps, report.result.eps_hat));
    }
    report.tolerances = epsilon_tolerances(&model);
    finish(&report, &report_path(config, "epsilon-star", out))
}

fn state_names(model: &Model) -> Vec<String> {
    Scope::state(model.config.n_r, model.config.n_f).names().to_vec()
}

fn simulate_section(model: &Model, t_final: f64, step: Option<f64>, out_dir: &Path) -> CliResult<SimulateSection> {
    let sim = model.config.simulation();
    let sys = &model.system;
    let step = step.or(sim.step).unwrap_or_else(|| default_step(sys.eps()));
    let tol_c = sim.convergence_tol.unwrap_or(DEFAULT_CONVERGENCE_TOL);
    let grid = sim.equilibrium_grid.unwrap_or(DEFAULT_EQUILIBRIUM_GRID);
    if model.config.initial_conditions.is_empty() {
        return Err(model.config_error("simulate needs a nonempty \"initial_conditions\" list"));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;

    let equilibria = find_equilibria(sys, &model.omega, grid)?;
    let names = state_names(model);
    let mut trajectories = Vec::new();
    for (i, x0) in model.config.initial_conditions.iter().enumerate() {
        let traj = integrate(sys, x0, (0.0, t_final), Some(step))?;
        let csv = format!("traj_{i}.csv");
        let path = out_dir.join(&csv);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        traj.write_csv(BufWriter::new(file), &names, MAX_CSV_ROWS).map_err(|e| CliError::io(&path, e))?;
        let c = detect_convergence(&traj, &equilibria, tol_c);
        trajectories.push(TrajectorySection::new(i, x0, csv, traj.len() - 1, traj.final_state(), &c));
    }
    let converged = trajectories.iter().filter(|t| t.converged).count();
    Ok(SimulateSection {
        eps: sys.eps(),
        t_final,
        step,
        method: "rk4",
        equilibrium_grid: grid,
        equilibria,
        trajectories,
        converged,
    })
}

fn simulate_tolerances(model: &Model) -> Vec<Tolerance> {
    let sim = model.config.simulation();
    vec![
        tol("convergence", sim.convergence_tol.unwrap_or(DEFAULT_CONVERGENCE_TOL)),
        tol("equilibrium_residual", EQUILIBRIUM_RESIDUAL),
        tol("equilibrium_merge_radius", EQUILIBRIUM_MERGE_RADIUS),
    ]
}

pub fn simulate(ctx: Ctx, config: &Path, t_final: f64, out_dir: &Path, step: Option<f64>) -> CliResult<u8> {
    if t_final.is_nan() || t_final <= 0.0 {
        return Err(CliError::Usage(format!("--t-final must be positive, got {t_final}")));
    }
    let model = Model::load(config)?;
    let section = simulate_section(&model, t_final, step, out_dir)?;
    for t in &section.trajectories {
        let verdict = match t.matched {
            Some(k) => format!("converged to equilibrium {k}"),
            None => "no convergence".to_string(),
        };
        println!("trajectory {}: {verdict} (final distance {:.3e})", t.index, t.final_distance);
    }
    // reaching the end of the run is the success criterion; verdicts are data
    let mut report = Report::new("simulate", Some(config), ctx.timestamp, section);
    report.tolerances = simulate_tolerances(&model);
    let name = report_path(config, "simulate", None);
    finish(&report, &out_dir.join(name.file_name().expect("report file name")))
}

fn probe_section(model: &Model, opts: &ProbeOptions) -> CliResult<ProbeSection> {
    let cert = model.certificate()?;
    let report = monotone_probe(&model.system, &model.omega, cert, opts)?;
    Ok(ProbeSection::from(&report))
}

fn probe_checks(s: &ProbeSection, opts: &ProbeOptions) -> (Check, Option<String>) {
    let check = Check::new(
        "strong monotonicity",
        s.passed,
        format!(
            "{} of {} samples interior, {} boundary, {} outside; worst margin {:.3e}",
            s.interior, s.total, s.boundary, s.outside, s.worst_margin
        ),
    );
    let warning = (s.boundary > 0)
        .then(|| format!("{} samples within the boundary band (allowed share {})", s.boundary, opts.boundary_fraction));
    (check, warning)
}

fn probe_tolerances(opts: &ProbeOptions) -> Vec<Tolerance> {
    vec![tol("cone_band", opts.cone_tol), tol("boundary_fraction", opts.boundary_fraction)]
}

pub fn monotone_probe_cmd(ctx: Ctx, config: &Path, opts: ProbeOptions, out: Option<PathBuf>) -> CliResult<u8> {
    let model = Model::load(config)?;
    let opts = ProbeOptions { step: opts.step.or(model.config.simulation().step), ..opts };
    let section = probe_section(&model, &opts)?;
    let mut report = Report::new("monotone-probe", Some(config), ctx.timestamp, section);
    let (check, warning) = probe_checks(&report.result, &opts);
    report.check(check);
    report.warnings.extend(warning);
    report.tolerances = probe_tolerances(&opts);
    finish(&report, &report_path(config, "monotone-probe", out))
}

#[derive(Debug, Clone)]
pub struct ReproduceOptions {
    pub eps: f64,
    pub sigma_r: f64,
    pub t_final: f64,
    pub probe: ProbeOptions,
}

pub fn reproduce_paper(ctx: Ctx, out_dir: &Path, o: ReproduceOptions) -> CliResult<u8> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let config = SystemConfig::builtin_spring(o.eps, o.sigma_r);
    let config_path = out_dir.join("config.json");
    let text = serde_json::to_string_pretty(&config).expect("config serializes") + "\n";
    std::fs::write(&config_path, text).map_err(|e| CliError::io(&config_path, e))?;
    let model = Model::from_config(config)?;

    let section = ReproduceSection {
        certify: Stage::from_result(certify_section(&model)),
        epsilon_star: Stage::from_result(epsilon_section(&model)),
        simulate: Stage::from_result(simulate_section(&model, o.t_final, None, out_dir)),
        monotone_probe: Stage::from_result(probe_section(&model, &o.probe)),
    };
    let mut report = Report::new("reproduce-paper", Some(Path::new("config.json")), ctx.timestamp, section);
    let mut checks = Vec::new();
    let mut warnings = Vec::new();

    match &report.result.certify {
        Stage::Done(s) => {
            checks.extend(certify_checks(s));
            warnings.extend(sampled_hull_warning(s));
        }
        Stage::Failed { error } => checks.push(Check::new("certificate", false, error.clone())),
    }
    match &report.result.epsilon_star {
        Stage::Done(s) => {
            checks.push(Check::new(
                "eps within certified range",
                s.config_eps_certified,
                format!("eps {} vs eps_hat {:.6e}", o.eps, s.eps_hat),
            ));
            checks.push(Check::new(
                "re-check below eps_hat",
                s.violations.is_empty(),
                format!("{} violations", s.violations.len()),
            ));
        }
        Stage::Failed { error } => checks.push(Check::new("epsilon search", false, error.clone())),
    }
    match &report.result.simulate {
        Stage::Done(s) => {
            checks.push(Check::new(
                "three equilibria",
                s.equilibria.len() == 3,
                format!("found {}", s.equilibria.len()),
            ));
            let n = SPRING_INITIAL_CONDITIONS.len();
            let missed: Vec<usize> = s.trajectories.iter().filter(|t| !t.converged).map(|t| t.index).collect();
            checks.push(Check::new(
                "trajectories converge",
                s.converged == n,
                format!("{} of {n} converged by t = {}; not converged: {missed:?}", s.converged, s.t_final),
            ));
        }
        Stage::Failed { error } => checks.push(Check::new("simulation", false, error.clone())),
    }
    match &report.result.monotone_probe {
        Stage::Done(s) => {
            let (c, w) = probe_checks(s, &o.probe);
            checks.push(c);
            warnings.extend(w);
        }
        Stage::Failed { error } => checks.push(Check::new("strong monotonicity", false, error.clone())),
    }
    for c in checks {
        report.check(c);
    }
    report.warnings = warnings;
    report.tolerances = certify_tolerances()
        .into_iter()
        .chain(epsilon_tolerances(&model))
        .chain(simulate_tolerances(&model))
        .chain(probe_tolerances(&o.probe))
        .collect();
    finish(&report, &out_dir.join("report.json"))
}
