use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use colehopf::burgers::{self, IdentityCheck};
use colehopf::families::{FamilyKind, FamilyMember, FamilyRegistry};
use colehopf::ode::{self, OdeProblem};
use colehopf::verify::cases::CaseRegistry;
use colehopf::verify::{identity_report, roundtrip_burgers, roundtrip_ode, Equation, ResidualReport, Verdict};
use colehopf::{parse, Expr, Grid1D, ParamEnv};
use serde::Serialize;

use crate::cli::*;
use crate::config::{Plan, ProblemKind, RunConfig, Settings};
use crate::error::{CliError, CliResult, Status};
use crate::output::{self, RunDocument};

pub fn run(cli: Cli) -> CliResult<Status> {
    match cli.command {
        Command::Derive(DeriveCommand::Burgers(a)) => derive_burgers(a),
        Command::Derive(DeriveCommand::Ode(a)) => derive_ode(a),
        Command::Synth(SynthCommand::Ode(a)) => synth_ode(a),
        Command::Solve(SolveCommand::Burgers(a)) => solve_burgers(a),
        Command::Solve(SolveCommand::Ode(a)) => solve_ode(a),
        Command::Verify(a) => verify(a),
        Command::Families(a) => families(a),
    }
}

fn env_of(params: &[(String, f64)]) -> ParamEnv {
    params.iter().map(|(k, v)| (k.clone(), *v)).collect()
}

fn samples(spec: GridSpec) -> CliResult<Vec<f64>> {
    let grid = Grid1D::new(spec.x0, spec.x1, spec.n).map_err(|e| CliError::config(e.to_string()))?;
    Ok(grid.points())
}

fn expr(label: &str, text: &str) -> CliResult<Expr> {
    parse(text).map_err(|e| CliError::config(format!("--{label}: {e}")))
}

/// Expressions printed in a fixed order, with parameters substituted.
struct Derived {
    entries: Vec<(String, String)>,
}

impl Derived {
    fn new() -> Self {
        Derived { entries: Vec::new() }
    }

    fn add(&mut self, name: &str, e: &Expr, env: &ParamEnv) {
        self.entries
            .push((name.to_string(), e.bind(env).simplify().to_string()));
    }

    fn map(&self) -> BTreeMap<String, String> {
        self.entries.iter().cloned().collect()
    }

    fn print(&self) {
        let width = self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.entries {
            out!("{k:<width$} = {v}");
        }
    }
}

fn constraint_line(check: &IdentityCheck) -> String {
    format!(
        "constraint: {} (relative residual {:.3e}, tolerance {:.1e})",
        Verdict::from_bool(check.holds),
        check.relative,
        check.tolerance
    )
}

fn echo(pairs: &[(&str, &str)], params: &ParamEnv) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    for (k, v) in params.iter() {
        out.insert(format!("param.{k}"), v.to_string());
    }
    out
}

fn finish(doc: RunDocument, json: bool, text: impl FnOnce(&RunDocument)) -> Status {
    let status = Status::from_pass(doc.verdict.passed());
    if json {
        out!("{}", output::to_json(&doc));
    } else {
        text(&doc);
    }
    status
}

fn derive_burgers(a: DeriveBurgers) -> CliResult<Status> {
    let m = expr("m", &a.m)?;
    let h = expr("h", &a.h)?;
    let env = env_of(&a.common.params);
    let xs = samples(a.common.domain)?;
    let tol = a.common.tol.unwrap_or(burgers::TOL_SYM);
    let check = burgers::constraint_residual(&m, &h, &env, &xs, tol)?;
    let pair = burgers::derive_transform(&m, &h, &env, &xs)?;
    let coeffs = burgers::derive_coefficients(&m, &h, &env, &xs)?;
    let mut derived = Derived::new();
    derived.add("Q", &pair.q, &env);
    derived.add("P", &pair.p, &env);
    derived.add("W", &coeffs.w, &env);
    derived.add("V", &coeffs.v, &env);
    let mut notes = Vec::new();
    if h.bind(&env).is_const(1.0) {
        notes.push(burgers::H_ONE_FORM_NOTE.to_string());
    }
    let doc = RunDocument {
        command: "derive burgers".into(),
        config: echo(&[("m", &a.m), ("h", &a.h)], &env),
        derived: derived.map(),
        constraint: Some(identity_report(Equation::BurgersConstraint, &check)),
        residual: None,
        verdict: Verdict::from_bool(check.holds),
        degenerate: false,
        notes,
    };
    Ok(finish(doc, a.common.json, |doc| {
        derived.print();
        out!("{}", constraint_line(&check));
        doc.notes.iter().for_each(|n| out!("note: {n}"));
    }))
}

fn derive_ode(a: DeriveOde) -> CliResult<Status> {
    let env = env_of(&a.common.params);
    let spec = a.common.domain;
    let mut problem = OdeProblem::new(
        expr("f", &a.f)?,
        expr("w", &a.w)?,
        expr("v", &a.v)?,
        expr("s", &a.s)?,
        env.clone(),
        (spec.x0, spec.x1),
    );
    if let Some(v1) = &a.v1 {
        problem = problem.with_v1(expr("v1", v1)?);
    }
    let xs = samples(spec)?;
    let tol = a.common.tol.unwrap_or(ode::TOL_CONSTRAINT);
    let mut derived = Derived::new();
    let mut notes = Vec::new();
    let reduced = if problem.v1.is_some() {
        let (p, reduced) = ode::reduce_v1(&problem)?;
        derived.add("p", &p, &env);
        derived.add("F~", &reduced.f, &env);
        derived.add("W~", &reduced.w, &env);
        derived.add("V~", &reduced.v, &env);
        derived.add("S~", &reduced.s, &env);
        notes.push("psi' term removed by xi = p psi; the pair below acts on xi".to_string());
        reduced
    } else {
        problem
    };
    let d = ode::forward_derive(&reduced, &xs, tol)?;
    derived.add("Q", &d.pair.q, &env);
    derived.add("P", &d.pair.p, &env);
    derived.add("g", &d.u_ode.g, &env);
    derived.add("h", &d.u_ode.h, &env);
    notes.push("U solves U' + g U = h".to_string());
    let mut config = echo(&[("f", &a.f), ("w", &a.w), ("v", &a.v), ("s", &a.s)], &env);
    if let Some(v1) = &a.v1 {
        config.insert("v1".into(), v1.clone());
    }
    let doc = RunDocument {
        command: "derive ode".into(),
        config,
        derived: derived.map(),
        constraint: Some(identity_report(Equation::OdeConstraint, &d.constraint)),
        residual: None,
        verdict: Verdict::from_bool(d.constraint.holds),
        degenerate: false,
        notes,
    };
    Ok(finish(doc, a.common.json, |doc| {
        derived.print();
        out!("{}", constraint_line(&d.constraint));
        doc.notes.iter().for_each(|n| out!("note: {n}"));
    }))
}

/// Largest `|a - b|` relative to the largest `|b|` on the samples.
fn relative_gap(a: &Expr, b: &Expr, env: &ParamEnv, xs: &[f64]) -> CliResult<f64> {
    let (mut gap, mut scale) = (0.0f64, 0.0f64);
    for &x in xs {
        let (va, vb) = (a.eval(x, env)?, b.eval(x, env)?);
        gap = gap.max((va - vb).abs());
        scale = scale.max(vb.abs());
    }
    Ok(if scale > 0.0 { gap / scale } else { gap })
}

const SYNTH_PAIR_TOL: f64 = 1e-10;

fn synth_ode(a: SynthOde) -> CliResult<Status> {
    let u = expr("u", &a.u)?;
    let p = expr("p", &a.p)?;
    let q = expr("q", &a.q)?;
    let env = env_of(&a.common.params);
    let spec = a.common.domain;
    let xs = samples(spec)?;
    let tol = a.common.tol.unwrap_or(ode::TOL_CONSTRAINT);
    let problem = ode::reverse_synthesize(&u, &p, &q, &env, (spec.x0, spec.x1), &xs)?;
    let mut derived = Derived::new();
    derived.add("F", &problem.f, &env);
    derived.add("W", &problem.w, &env);
    derived.add("V", &problem.v, &env);
    derived.add("S", &problem.s, &env);

    let back = ode::forward_derive(&problem, &xs, tol)?;
    let q_gap = relative_gap(&back.pair.q, &q, &env, &xs)?;
    let p_gap = relative_gap(&back.pair.p, &p, &env, &xs)?;
    let u_check = back.u_ode.residual(&u, &env, &xs, tol)?;
    let pair_ok = q_gap <= SYNTH_PAIR_TOL && p_gap <= SYNTH_PAIR_TOL;
    let pass = pair_ok && back.constraint.holds && u_check.holds;
    let notes = vec![
        format!("forward derivation recovers Q to {q_gap:.3e} and P to {p_gap:.3e} (relative)"),
        format!(
            "U satisfies the emitted U' + g U = h to {:.3e} relative ({})",
            u_check.relative,
            Verdict::from_bool(u_check.holds)
        ),
    ];
    let doc = RunDocument {
        command: "synth ode".into(),
        config: echo(&[("u", &a.u), ("p", &a.p), ("q", &a.q)], &env),
        derived: derived.map(),
        constraint: Some(identity_report(Equation::OdeConstraint, &back.constraint)),
        residual: None,
        verdict: Verdict::from_bool(pass),
        degenerate: false,
        notes,
    };
    Ok(finish(doc, a.common.json, |doc| {
        derived.print();
        out!("{}", constraint_line(&back.constraint));
        doc.notes.iter().for_each(|n| out!("note: {n}"));
    }))
}

fn base_settings(common: &SolveCommon) -> CliResult<Settings> {
    let mut s = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    for (k, v) in &common.sets {
        s.set(k, v)?;
    }
    for (k, v) in &common.params {
        s.set(&format!("problem.param.{k}"), &v.to_string())?;
    }
    if let Some(g) = common.grid {
        s.set_grid(g)?;
    }
    s.set_opt("solver.tol", common.tol)?;
    s.set_opt("solver.constraint_tol", common.constraint_tol)?;
    s.set_opt("solver.pole_eps", common.pole_eps)?;
    s.set_opt("output.dir", common.out_dir.as_ref().map(|p| p.display()))?;
    Ok(s)
}

fn solve_burgers(a: SolveBurgers) -> CliResult<Status> {
    let mut s = base_settings(&a.common)?;
    s.set_opt("problem.m", a.m)?;
    s.set_opt("problem.h", a.h)?;
    s.set_opt("problem.phi0", a.phi0)?;
    s.set_opt("problem.bc_left", a.bc_left)?;
    s.set_opt("problem.bc_right", a.bc_right)?;
    s.set_opt("time.t_end", a.t_end)?;
    s.set_opt("time.nt", a.nt)?;
    s.set_opt("time.theta", a.theta)?;
    s.set_opt("time.save_every", a.save_every)?;
    solve(ProblemKind::Burgers, s, a.common.json)
}

fn solve_ode(a: SolveOde) -> CliResult<Status> {
    let mut s = base_settings(&a.common)?;
    s.set_opt("problem.f", a.f)?;
    s.set_opt("problem.w", a.w)?;
    s.set_opt("problem.v", a.v)?;
    s.set_opt("problem.s", a.s)?;
    s.set_opt("problem.v1", a.v1)?;
    s.set_opt("problem.u0", a.u0)?;
    s.set_opt("problem.phi0", a.phi0)?;
    s.set_opt("problem.dphi0", a.dphi0)?;
    solve(ProblemKind::Ode, s, a.common.json)
}

fn solve(kind: ProblemKind, settings: Settings, json: bool) -> CliResult<Status> {
    let rc = RunConfig::build(Some(kind), settings)?;
    let doc = execute(&rc, true)?;
    let written: Vec<String> = [&rc.output.field, &rc.output.residual, &rc.output.report]
        .into_iter()
        .filter_map(|f| rc.output.path(f))
        .map(|p| p.display().to_string())
        .collect();
    Ok(finish(doc, json, |doc| print_run(doc, &written)))
}

fn print_run(doc: &RunDocument, written: &[String]) {
    for (k, v) in &doc.derived {
        out!("{k} = {v}");
    }
    if let Some(c) = &doc.constraint {
        out!("{}", output::summary(c));
    }
    if let Some(r) = &doc.residual {
        out!("{}", output::summary(r));
    }
    for n in &doc.notes {
        out!("note: {n}");
    }
    for w in written {
        out!("wrote {w}");
    }
}

/// Runs a resolved configuration. With `write`, the CSV files and the report
/// named in the output section are written.
pub fn execute(rc: &RunConfig, write: bool) -> CliResult<RunDocument> {
    let mut derived = Derived::new();
    let mut notes = rc.notes.clone();
    let (constraint, report, fields) = match &rc.plan {
        Plan::Burgers(run) => {
            let out = roundtrip_burgers(run)?;
            if let (Some(pair), Some(problem)) = (&out.pair, &out.problem) {
                derived.add("Q", &pair.q, &run.env);
                derived.add("P", &pair.p, &run.env);
                derived.add("W", &problem.w, &run.env);
                derived.add("V", &problem.v, &run.env);
            }
            if run.h.bind(&run.env).is_const(1.0) {
                notes.push(burgers::H_ONE_FORM_NOTE.to_string());
            }
            let fields = out.field.zip(out.transformed);
            (out.constraint, out.report, fields)
        }
        Plan::Ode(run) => {
            let out = roundtrip_ode(run)?;
            let env = &run.problem.env;
            if let Some(p) = &out.reduction {
                derived.add("p", p, env);
            }
            derived.add("Q", &out.derivation.pair.q, env);
            derived.add("P", &out.derivation.pair.p, env);
            derived.add("g", &out.derivation.u_ode.g, env);
            derived.add("h", &out.derivation.u_ode.h, env);
            let fields = out.field.zip(out.transformed);
            (out.constraint, out.report, fields)
        }
    };
    if write {
        if let (Some(path), Some((field, psi))) = (rc.output.path(&rc.output.field), &fields) {
            output::write_field(&path, field, psi)?;
        }
        if let Some(path) = rc.output.path(&rc.output.residual) {
            output::write_residual(&path, &report)?;
        }
    }
    if report.degenerate {
        notes.push("degenerate field: no point survived the pole mask".into());
    }
    let doc = RunDocument {
        command: format!("solve {}", rc.kind.name()),
        config: rc.echo.clone(),
        derived: derived.map(),
        verdict: report.verdict,
        degenerate: report.degenerate,
        constraint: Some(constraint),
        residual: Some(report),
        notes,
    };
    if write {
        if let Some(path) = rc.output.path(&rc.output.report) {
            output::write_json(&path, &doc)?;
        }
    }
    Ok(doc)
}

#[derive(Serialize)]
struct CaseResult {
    name: String,
    description: String,
    seconds: f64,
    report: ResidualReport,
}

#[derive(Serialize)]
struct VerifyDocument {
    target: String,
    cases: Vec<CaseResult>,
    verdict: Verdict,
}

fn verify(a: VerifyArgs) -> CliResult<Status> {
    let registry = CaseRegistry::builtin();
    let mut cases = Vec::new();
    let path = Path::new(&a.target);
    if registry.get(&a.target).is_none() && a.target != "all" && path.is_file() {
        let start = Instant::now();
        let rc = RunConfig::build(None, Settings::load(path)?)?;
        let doc = execute(&rc, false)?;
        let mut report = doc.residual.expect("solve always reports a residual");
        report.notes.extend(doc.notes);
        cases.push(CaseResult {
            name: a.target.clone(),
            description: format!("{} problem from a config file", rc.kind.name()),
            seconds: start.elapsed().as_secs_f64(),
            report,
        });
    } else {
        let selected: Vec<_> = if a.target == "all" {
            registry.iter().collect()
        } else {
            let case = registry.get(&a.target).ok_or_else(|| {
                CliError::config(format!(
                    "no bundled case or file named `{}`; cases: {}",
                    a.target,
                    registry.names().join(", ")
                ))
            })?;
            vec![case]
        };
        for case in selected {
            let start = Instant::now();
            let report = case.run()?;
            cases.push(CaseResult {
                name: case.name().to_string(),
                description: case.description().to_string(),
                seconds: start.elapsed().as_secs_f64(),
                report,
            });
        }
    }
    let pass = cases.iter().all(|c| c.report.passed());
    let doc = VerifyDocument {
        target: a.target,
        cases,
        verdict: Verdict::from_bool(pass),
    };
    if let Some(path) = &a.report {
        output::write_json(path, &doc)?;
    }
    if a.json {
        out!("{}", output::to_json(&doc));
    } else {
        for c in &doc.cases {
            out!("{:<24} {}  [{:.2} s]", c.name, output::summary(&c.report), c.seconds);
        }
        out!("overall: {}", doc.verdict);
    }
    Ok(Status::from_pass(pass))
}

fn families(a: FamiliesArgs) -> CliResult<Status> {
    let kind = match a.kind {
        FamilyArg::H => FamilyKind::H,
        FamilyArg::M => FamilyKind::M,
    };
    let registry = FamilyRegistry::builtin();
    let selected: Vec<_> = match &a.name {
        Some(name) => vec![registry.get(kind, name).ok_or_else(|| {
            let known: Vec<_> = registry.of_kind(kind).map(|f| f.name()).collect();
            CliError::config(format!("no {kind}-family named `{name}`; known: {}", known.join(", ")))
        })?],
        None => registry.of_kind(kind).collect(),
    };
    let overrides = env_of(&a.params);
    let mut checks = Vec::new();
    for family in selected {
        let params = family.defaults().merged(&overrides);
        let xs = match a.domain {
            Some(spec) => samples(spec)?,
            None => family.default_samples(&params)?,
        };
        let check = family.check(&params, &xs)?;
        if !a.json {
            let member = match (&check.member, family.realize(&params, &xs)?) {
                (Some(text), _) => text.clone(),
                (None, FamilyMember::Sampled(m)) => format!("sampled on {} points", m.x.len()),
                (None, FamilyMember::Closed(e)) => e.to_string(),
            };
            out!("{} [{}]: {}", check.family, Verdict::from_bool(check.holds), member);
            for c in &check.checks {
                out!(
                    "  {}: relative {:.3e} (tolerance {:.1e})",
                    c.identity,
                    c.check.relative,
                    c.check.tolerance
                );
            }
            for n in &check.notes {
                out!("  note: {n}");
            }
        }
        checks.push(check);
    }
    let pass = checks.iter().all(|c| c.holds);
    if a.json {
        out!("{}", output::to_json(&checks));
    }
    Ok(Status::from_pass(pass))
}
