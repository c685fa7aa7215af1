//! Command-line front end: argument handling, human-readable output, run
//! reports and CSV tables.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;

use clap::Parser;
use serde::Serialize;
use serde_json::json;
use zerohopf_core::averaging::{average_quadrature, averaged_zeros, orbit_count, stability_report, AveragedZero, DEFAULT_QUAD_N};
use zerohopf_core::model::{equilibria, jacobian, EquilibriumTag};
use zerohopf_core::ode::integrate;
use zerohopf_core::orbits::{epsilon_sweep, find_periodic_orbit, ShootingConfig};
use zerohopf_core::reduction::{first_order_field_numeric, perturb, UnfoldingSpec};
use zerohopf_core::spectrum::{char_poly, eigenvalues4, is_zero_hopf, zero_hopf_params, ZERO_HOPF_TOL};
use zerohopf_core::verify::{run_criterion, CRITERIA, SUITE_SEED};
use zerohopf_core::{Error, SystemParams};

pub mod args;
pub mod report;

use args::{parse_params, Cli, Command, SpecArgs};
use report::{canonical_json, num, opt_num, to_value, write_atomic, CsvTable, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Header of the trajectory CSV written by `orbit --csv`.
pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "x", "y", "z", "w"];
/// Radius at which axis zeros are checked by quadrature.
pub const AXIS_OFFSET: f64 = 1e-6;
pub const SWEEP_HEADER: [&str; 11] =
    ["eps", "converged", "period", "closure_residual", "r", "z", "w", "distance", "period_error", "rate_error", "verdict_agrees"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 1 for bad input or I/O, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{text}");
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_INPUT } else { EXIT_OK }
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_INPUT
                }
            };
        }
    };
    let mut report = RunReport::new(argv, command_name(&cli.command));
    let result = execute(&cli, &mut report, out);
    let mut code = EXIT_OK;
    if let Err(e) = &result {
        report.fail(e);
        code = e.exit_code();
        let _ = writeln!(err, "error: {e}");
    }
    if let Some(path) = &cli.json {
        match canonical_json(&report).and_then(|s| write_atomic(path, &s)) {
            Ok(p) => {
                let _ = writeln!(err, "report written to {}", p.display());
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                if code == EXIT_OK {
                    code = EXIT_INPUT;
                }
            }
        }
    }
    code
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Equilibria { .. } => "equilibria",
        Command::ZeroHopf { .. } => "zero-hopf",
        Command::Zeros { .. } => "zeros",
        Command::Orbit { .. } => "orbit",
        Command::Sweep { .. } => "sweep",
        Command::Verify { .. } => "verify",
    }
}

/// Rejects global flags that the command does not read.
fn check_globals(cli: &Cli) -> Result<(), CliError> {
    let name = command_name(&cli.command);
    let allowed: &[&str] = match cli.command {
        Command::Equilibria { .. } | Command::Verify { .. } => &[],
        Command::ZeroHopf { .. } => &["tol"],
        Command::Zeros { .. } => &["quad-n"],
        Command::Orbit { .. } => &["tol", "sample-dt", "csv"],
        Command::Sweep { .. } => &["tol", "csv"],
    };
    let given = [("csv", cli.csv.is_some()), ("quad-n", cli.quad_n.is_some()), ("tol", cli.tol.is_some()), ("sample-dt", cli.sample_dt.is_some())];
    for (flag, set) in given {
        if set && !allowed.contains(&flag) {
            return Err(CliError::Input(format!("--{flag} does not apply to {name}")));
        }
    }
    if cli.sample_dt.is_some() && cli.csv.is_none() {
        return Err(CliError::Input("--sample-dt needs --csv".into()));
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Input(format!("--tol must be positive, got {t}")));
        }
    }
    if let Some(dt) = cli.sample_dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Input(format!("--sample-dt must be positive, got {dt}")));
        }
    }
    if let Some(n) = cli.quad_n {
        if n < 8 {
            return Err(CliError::Input(format!("--quad-n must be at least 8, got {n}")));
        }
    }
    Ok(())
}

fn execute(cli: &Cli, report: &mut RunReport, out: &mut dyn Write) -> Result<(), CliError> {
    check_globals(cli)?;
    match &cli.command {
        Command::Equilibria { params, spec, eps } => cmd_equilibria(params.as_deref(), spec, *eps, report, out),
        Command::ZeroHopf { case, c, omega, d, e } => {
            let tol = cli.tol.unwrap_or(ZERO_HOPF_TOL);
            report.invocation.inputs = json!({ "case": case, "c": c, "omega": omega, "d": d, "e": e });
            report.tolerances = json!({ "match": tol });
            cmd_zero_hopf(*case, *c, *omega, *d, *e, tol, report, out)
        }
        Command::Zeros { spec } => {
            let spec = spec_inputs(spec, report)?;
            let n = cli.quad_n.unwrap_or(DEFAULT_QUAD_N);
            report.tolerances = json!({ "quad_n": n });
            cmd_zeros(&spec, n, report, out)
        }
        Command::Orbit { spec, eps, zero } => {
            let spec = spec_inputs(spec, report)?;
            report.invocation.inputs["eps"] = json!(eps);
            report.invocation.inputs["zero"] = json!(zero);
            let cfg = shooting_config(cli.tol, report)?;
            cmd_orbit(&spec, *eps, zero.as_deref(), &cfg, cli, report, out)
        }
        Command::Sweep { spec, eps_list, zero } => {
            let spec = spec_inputs(spec, report)?;
            report.invocation.inputs["eps_list"] = json!(eps_list);
            report.invocation.inputs["zero"] = json!(zero);
            let cfg = shooting_config(cli.tol, report)?;
            cmd_sweep(&spec, eps_list, zero.as_deref(), &cfg, cli, report, out)
        }
        Command::Verify { all, criterion } => cmd_verify(*all, criterion, report, out),
    }
}

fn spec_inputs(args: &SpecArgs, report: &mut RunReport) -> Result<UnfoldingSpec, CliError> {
    let spec = args.build()?;
    report.invocation.inputs = json!({ "spec": to_value(&spec)? });
    Ok(spec)
}

fn shooting_config(tol: Option<f64>, report: &mut RunReport) -> Result<ShootingConfig, CliError> {
    let mut cfg = ShootingConfig::default();
    if let Some(t) = tol {
        cfg.tol = t;
    }
    report.tolerances = to_value(&cfg)?;
    Ok(cfg)
}

fn cmd_equilibria(
    params: Option<&str>,
    spec: &SpecArgs,
    eps: Option<f64>,
    report: &mut RunReport,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let p: SystemParams = match (params, spec.is_empty()) {
        (Some(_), false) => return Err(CliError::Input("--params cannot be combined with unfolding flags".into())),
        (Some(s), true) => {
            if eps.is_some() {
                return Err(CliError::Input("--eps applies to an unfolding, not to --params".into()));
            }
            let p = parse_params(s)?;
            report.invocation.inputs = json!({ "params": to_value(&p)? });
            p
        }
        (None, false) => {
            let s = spec_inputs(spec, report)?;
            let eps = eps.unwrap_or(0.0);
            report.invocation.inputs["eps"] = json!(eps);
            perturb(&s, eps)?
        }
        (None, true) => return Err(CliError::Input("give --params or an unfolding (--case ...)".into())),
    };
    #[derive(Serialize)]
    struct Row {
        tag: EquilibriumTag,
        state: [f64; 4],
        residual: f64,
        char_poly: zerohopf_core::spectrum::QuarticCoeffs,
        eigenvalues: Vec<[f64; 2]>,
        zero_hopf: Option<zerohopf_core::spectrum::ZeroHopfCertificate>,
    }
    #[derive(Serialize)]
    struct Out {
        params: SystemParams,
        delta: f64,
        kind: zerohopf_core::model::EquilibriumKind,
        equilibria: Vec<Row>,
    }
    let res = report.stage("equilibria", || {
        let set = equilibria(&p)?;
        let rows = set
            .points
            .iter()
            .map(|q| Row {
                tag: q.tag,
                state: [q.state[0], q.state[1], q.state[2], q.state[3]],
                residual: q.residual,
                char_poly: char_poly(&p, &q.state).coeffs,
                eigenvalues: eigenvalues4(&jacobian(&p, &q.state)).iter().map(|z| [z.re, z.im]).collect(),
                zero_hopf: is_zero_hopf(&p, &q.state, ZERO_HOPF_TOL),
            })
            .collect();
        Ok(Out { params: p, delta: set.delta, kind: set.kind, equilibria: rows })
    })?;
    writeln!(out, "parameters a={} b={} c={} d={} e={}", p.a, p.b, p.c, p.d, p.e)?;
    writeln!(out, "Delta = {:.9} ({:?})", res.delta, res.kind)?;
    writeln!(out, "{} equilibria", res.equilibria.len())?;
    for r in &res.equilibria {
        writeln!(out, "  {:?}: ({:.9}, {:.9}, {:.9}, {:.9}) residual {:.2e}", r.tag, r.state[0], r.state[1], r.state[2], r.state[3], r.residual)?;
        let c = r.char_poly;
        writeln!(out, "    char poly A={:.9} B={:.9} C={:.9} D={:.9}", c.a3, c.a2, c.a1, c.a0)?;
        let ev: Vec<String> = r.eigenvalues.iter().map(|z| fmt_pair(*z)).collect();
        writeln!(out, "    eigenvalues {}", ev.join(", "))?;
        if let Some(cert) = &r.zero_hopf {
            writeln!(out, "    zero-Hopf point: omega = {:.9}, residual {:.2e}", cert.omega, cert.residual)?;
        }
    }
    Ok(())
}

fn fmt_pair(z: [f64; 2]) -> String {
    if z[1] == 0.0 {
        format!("{:.9}", z[0])
    } else {
        format!("{:.9}{:+.9}i", z[0], z[1])
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_zero_hopf(
    case: zerohopf_core::Case,
    c: f64,
    omega: Option<f64>,
    d: Option<f64>,
    e: Option<f64>,
    tol: f64,
    report: &mut RunReport,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if case == zerohopf_core::Case::I && (d.is_some() || e.is_some()) {
        return Err(CliError::Input("case i derives d and e from c and omega".into()));
    }
    if case == zerohopf_core::Case::III && d.is_some() {
        return Err(CliError::Input("case iii derives d from c and omega".into()));
    }
    let zh = report.stage("parameters", || Ok(zero_hopf_params(case, c, omega, d, e)?))?;
    let cert = report.stage("certificate", || {
        is_zero_hopf(&zh.params, &zh.equilibrium, tol).ok_or_else(|| {
            let ev = eigenvalues4(&jacobian(&zh.params, &zh.equilibrium));
            let list: Vec<String> = ev.iter().map(|z| fmt_pair([z.re, z.im])).collect();
            CliError::Numerical(format!("spectrum {} is not within {tol:e} of {{0, 0, ±iω}}", list.join(", ")))
        })
    })?;
    let p = zh.params;
    writeln!(out, "case {case}: a={:.9} b={} c={} d={:.9} e={:.9} omega={:.9}", p.a, p.b, p.c, p.d, p.e, zh.omega)?;
    let s = zh.equilibrium;
    writeln!(out, "zero-Hopf equilibrium ({}, {}, {}, {:.9})", s[0], s[1], s[2], s[3])?;
    let ev: Vec<String> = cert.eigenvalues.iter().map(|z| fmt_pair([z.re, z.im])).collect();
    writeln!(out, "eigenvalues {}", ev.join(", "))?;
    writeln!(out, "matching residual {:.3e} (tol {tol:e})", cert.residual)?;
    Ok(())
}

fn cmd_zeros(spec: &UnfoldingSpec, quad_n: usize, report: &mut RunReport, out: &mut dyn Write) -> Result<(), CliError> {
    let zeros = report.stage("zeros", || Ok(averaged_zeros(spec)?))?;
    let stab = report.stage("stability", || Ok(stability_report(spec, &zeros)))?;
    #[derive(Serialize)]
    struct Quad {
        label: String,
        at: [f64; 3],
        value: Option<[f64; 3]>,
        max_abs: Option<f64>,
        error: Option<String>,
    }
    let quad = report.stage("quadrature_check", || {
        let field = first_order_field_numeric(spec)?;
        Ok(zeros
            .iter()
            .map(|z| {
                // θ is undefined on the axis: average just off it instead
                let mut at = z.location;
                at[0] = at[0].max(AXIS_OFFSET);
                match average_quadrature(&field, at, quad_n) {
                    Ok(v) => Quad { label: z.label.clone(), at, value: Some(v), max_abs: Some(v.iter().fold(0.0, |m, x| m.max(x.abs()))), error: None },
                    Err(e) => Quad { label: z.label.clone(), at, value: None, max_abs: None, error: Some(e.to_string()) },
                }
            })
            .collect::<Vec<_>>())
    })?;
    writeln!(out, "case {}: {} zeros, {} bifurcating orbits", spec.case, zeros.len(), orbit_count(&zeros))?;
    writeln!(out, "{:<6} {:>14} {:>14} {:>14} {:>14} {:<14} {:>10}", "label", "r", "z", "w", "det J", "verdict", "|avg|")?;
    for (z, q) in zeros.iter().zip(&quad) {
        let [r, zz, w] = z.location;
        let avg = q.max_abs.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "n/a".into());
        let verdict = if z.trivial { "trivial".to_string() } else { format!("{:?}", z.stability.verdict).to_lowercase() };
        writeln!(out, "{:<6} {:>14.9} {:>14.9} {:>14.9} {:>14.6e} {:<14} {:>10}", z.label, r, zz, w, z.jac_det(), verdict, avg)?;
        for pc in z.stability.printed.iter().filter(|p| !p.agrees) {
            writeln!(out, "       printed {} disagrees (error {:.2e})", pc.name, pc.max_error)?;
        }
        if let Some(e) = &q.error {
            writeln!(out, "       quadrature: {e}")?;
        }
    }
    if zeros.iter().any(|z| z.location[0] < AXIS_OFFSET) {
        writeln!(out, "axis zeros are averaged at r = {AXIS_OFFSET:e}, so |avg| there is O(r)")?;
    }
    writeln!(out, "discriminants: {}", serde_json::to_string(&stab.discriminants).map_err(|e| CliError::Io(e.to_string()))?)?;
    Ok(())
}

fn pick_seed(zeros: &[AveragedZero], label: Option<&str>) -> Result<AveragedZero, CliError> {
    match label {
        Some(l) => zeros.iter().find(|z| z.label == l).cloned().ok_or_else(|| {
            let known: Vec<&str> = zeros.iter().map(|z| z.label.as_str()).collect();
            CliError::Input(format!("no zero labelled '{l}' (available: {})", known.join(", ")))
        }),
        None => zeros
            .iter()
            .find(|z| !z.trivial && !z.axis)
            .cloned()
            .ok_or_else(|| CliError::Input("the averaged map has no zero with r > 0; pick one with --zero".into())),
    }
}

fn cmd_orbit(
    spec: &UnfoldingSpec,
    eps: f64,
    label: Option<&str>,
    cfg: &ShootingConfig,
    cli: &Cli,
    report: &mut RunReport,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let zeros = report.stage("zeros", || Ok(averaged_zeros(spec)?))?;
    let seed = pick_seed(&zeros, label)?;
    let orbit = report.stage("shooting", || Ok(find_periodic_orbit(spec, eps, &seed, cfg)?))?;
    writeln!(out, "seed {} at (r, z, w) = ({:.9}, {:.9}, {:.9})", seed.label, seed.location[0], seed.location[1], seed.location[2])?;
    let s = orbit.initial_state;
    writeln!(out, "eps = {eps}: period {:.9} after {} iterations, closure residual {:.2e}", orbit.period, orbit.iterations, orbit.closure_residual)?;
    writeln!(out, "initial state ({:.9}, {:.9}, {:.9}, {:.9})", s[0], s[1], s[2], s[3])?;
    let q = orbit.reduced_section_point;
    writeln!(out, "section point (r, z, w) = ({:.9}, {:.9}, {:.9})", q[0], q[1], q[2])?;
    let mu: Vec<String> = orbit.floquet_multipliers.iter().map(|z| fmt_pair([z.re, z.im])).collect();
    writeln!(out, "Floquet multipliers {}", mu.join(", "))?;
    writeln!(out, "verdict {:?}, averaged verdict {:?}", orbit.verdict(), seed.stability.verdict)?;
    if let Some(path) = &cli.csv {
        let table = report.stage("trajectory", || {
            let traj = integrate(&orbit.params, orbit.initial_state, orbit.period, &cfg.integrator)?;
            let points: Vec<(f64, [f64; 4])> = match cli.sample_dt {
                Some(dt) => traj.sample_uniform(dt)?.into_iter().map(|(t, s)| (t, [s[0], s[1], s[2], s[3]])).collect(),
                None => traj.t.iter().zip(&traj.states).map(|(t, s)| (*t, [s[0], s[1], s[2], s[3]])).collect(),
            };
            let mut table = CsvTable::new(&TRAJECTORY_HEADER);
            for (t, s) in &points {
                table.push(vec![num(*t), num(s[0]), num(s[1]), num(s[2]), num(s[3])]);
            }
            Ok(json!({ "rows": table.rows.len(), "csv": table.render() }))
        })?;
        let p = write_atomic(path, table["csv"].as_str().unwrap_or_default())?;
        writeln!(out, "trajectory ({} rows) written to {}", table["rows"], p.display())?;
        if let Some(stage) = report.stages.last_mut() {
            stage.result = json!({ "rows": table["rows"], "path": p.display().to_string() });
        }
    }
    Ok(())
}

fn cmd_sweep(
    spec: &UnfoldingSpec,
    eps_list: &[f64],
    label: Option<&str>,
    cfg: &ShootingConfig,
    cli: &Cli,
    report: &mut RunReport,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let zeros = report.stage("zeros", || Ok(averaged_zeros(spec)?))?;
    let seed = pick_seed(&zeros, label)?;
    let sweep = report.stage("sweep", || Ok(epsilon_sweep(spec, &seed, eps_list, cfg)?))?;
    let mut table = CsvTable::new(&SWEEP_HEADER);
    for e in &sweep.entries {
        let o = e.orbit.as_ref();
        let q = o.map(|o| o.reduced_section_point);
        table.push(vec![
            num(e.eps),
            o.is_some().to_string(),
            opt_num(o.map(|o| o.period)),
            opt_num(o.map(|o| o.closure_residual)),
            opt_num(q.map(|q| q[0])),
            opt_num(q.map(|q| q[1])),
            opt_num(q.map(|q| q[2])),
            opt_num(e.distance),
            opt_num(e.period_error),
            opt_num(e.rate_error),
            e.verdict_agrees.map(|b| b.to_string()).unwrap_or_default(),
        ]);
    }
    writeln!(out, "seed {} at (r, z, w) = ({:.9}, {:.9}, {:.9})", seed.label, seed.location[0], seed.location[1], seed.location[2])?;
    writeln!(out, "{:>10} {:>14} {:>12} {:>12} {:>12}  verdict", "eps", "period", "distance", "period err", "rate err")?;
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
    for e in &sweep.entries {
        match &e.orbit {
            Some(o) => writeln!(
                out,
                "{:>10} {:>14.9} {:>12} {:>12} {:>12}  {}",
                e.eps,
                o.period,
                fmt(e.distance),
                fmt(e.period_error),
                fmt(e.rate_error),
                match e.verdict_agrees {
                    Some(true) => "agrees",
                    Some(false) => "disagrees",
                    None => "-",
                }
            )?,
            None => writeln!(out, "{:>10} failed: {}", e.eps, e.error.as_deref().unwrap_or("unknown"))?,
        }
    }
    match &sweep.fit {
        Some(f) => writeln!(out, "fitted order {:.4} (rms {:.2e}, {} points), order ok: {:?}", f.order, f.residual, f.points, sweep.order_ok)?,
        None => writeln!(out, "no convergence order (fewer than two converged runs)")?,
    }
    if let Some(path) = &cli.csv {
        let p = write_atomic(path, &table.render())?;
        writeln!(out, "sweep table written to {}", p.display())?;
    }
    let failed = sweep.entries.iter().filter(|e| e.orbit.is_none()).count();
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} of {} shooting runs failed", sweep.entries.len())));
    }
    Ok(())
}

fn cmd_verify(all: bool, criteria: &[u8], report: &mut RunReport, out: &mut dyn Write) -> Result<(), CliError> {
    let ids: Vec<u8> = match (all, criteria.is_empty()) {
        (true, true) => CRITERIA.iter().map(|c| c.0).collect(),
        (false, false) => criteria.to_vec(),
        (true, false) => return Err(CliError::Input("--all cannot be combined with --criterion".into())),
        (false, true) => return Err(CliError::Input("give --all or at least one --criterion".into())),
    };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(CliError::Input(format!("unknown criterion {bad} (1 to {})", CRITERIA.len())));
    }
    report.invocation.inputs = json!({ "criteria": ids });
    report.invocation.seed = Some(SUITE_SEED);
    let mut failed = Vec::new();
    for id in ids {
        let r = report.stage(&format!("criterion_{id}"), || Ok(run_criterion(id).expect("criterion id checked")))?;
        writeln!(out, "{}", r.summary_line())?;
        for c in r.checks.iter().filter(|c| !c.passed) {
            writeln!(out, "    {}: {}", c.name, c.detail)?;
        }
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("criteria {failed:?} failed")))
    }
}
