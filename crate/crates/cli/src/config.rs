//! Run configuration: INI sections `[problem] [grid] [time] [solver]
//! [output]`, overlaid with command-line flags.
//!
//! Values are kept as text under `section.key` until a [`RunConfig`] is
//! built, so that the report can echo exactly what was used.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use colehopf::linsolve::{Boundary, HeatOptions};
use colehopf::ode::OdeProblem;
use colehopf::verify::{BurgersRun, OdeRun};
use colehopf::{parse, Expr, Grid1D, ParamEnv};
use ini::Ini;

use crate::cli::GridSpec;
use crate::error::{CliError, CliResult};

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "problem",
        &[
            "kind", "m", "h", "phi0", "bc_left", "bc_right", "f", "w", "v", "s", "v1", "u0", "u_at", "dphi0", "phi_at",
        ],
    ),
    ("grid", &["x0", "x1", "n", "dx", "spec"]),
    ("time", &["t_end", "nt", "theta", "save_every"]),
    ("solver", &["tol", "constraint_tol", "pole_eps"]),
    ("output", &["dir", "field", "residual", "report"]),
];

const PARAM_PREFIX: &str = "problem.param.";

/// Initial profile used when a Burgers run gives none.
pub const DEFAULT_PHI0: &str = "1 + 0.5*exp(-2*(x-0.5)^2)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Burgers,
    Ode,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Burgers => "burgers",
            ProblemKind::Ode => "ode",
        }
    }
}

/// Largest divisor of `nt` that still leaves about 100 stored intervals.
fn default_stride(nt: usize) -> usize {
    (1..=(nt / 100).max(1))
        .rev()
        .find(|d| nt.is_multiple_of(*d))
        .unwrap_or(1)
}

/// Flat `section.key -> text` store.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn check_key(key: &str) -> CliResult<()> {
    if let Some(name) = key.strip_prefix(PARAM_PREFIX) {
        if name.is_empty() || name == "x" || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(CliError::config(format!("invalid parameter name in `{key}`")));
        }
        return Ok(());
    }
    let (section, name) = key
        .split_once('.')
        .ok_or_else(|| CliError::config(format!("key `{key}` has no section")))?;
    let (_, keys) = SECTIONS
        .iter()
        .find(|(s, _)| *s == section)
        .ok_or_else(|| CliError::config(format!("unknown section [{section}]")))?;
    if !keys.contains(&name) {
        return Err(CliError::config(format!("unknown key `{name}` in [{section}]")));
    }
    Ok(())
}

impl Settings {
    pub fn load(path: &Path) -> CliResult<Settings> {
        let ini = Ini::load_from_file(path).map_err(|e| match e {
            ini::Error::Io(io) => CliError::io(path, io),
            ini::Error::Parse(p) => CliError::config(format!("{}: {p}", path.display())),
        })?;
        Self::from_ini(&ini)
    }

    #[cfg(test)]
    pub fn parse_str(text: &str) -> CliResult<Settings> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        Self::from_ini(&ini)
    }

    fn from_ini(ini: &Ini) -> CliResult<Settings> {
        let mut settings = Settings::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(CliError::config(format!("`{key}` appears before any section")));
                }
                continue;
            };
            for (key, value) in props.iter() {
                settings.set(&format!("{section}.{key}"), value)?;
            }
        }
        Ok(settings)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        check_key(key)?;
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn set_opt(&mut self, key: &str, value: Option<impl ToString>) -> CliResult<()> {
        match value {
            Some(v) => self.set(key, &v.to_string()),
            None => Ok(()),
        }
    }

    fn default_to(&mut self, key: &str, value: &str) -> bool {
        if self.values.contains_key(key) {
            return false;
        }
        self.values.insert(key.to_string(), value.to_string());
        true
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key)
            .ok_or_else(|| CliError::config(format!("missing `{key}`")))
    }

    fn expr(&self, key: &str) -> CliResult<Option<Expr>> {
        self.get(key)
            .map(|text| parse(text).map_err(|e| CliError::config(format!("`{key}`: {e}"))))
            .transpose()
    }

    fn required_expr(&self, key: &str) -> CliResult<Expr> {
        self.require(key)?;
        Ok(self.expr(key)?.expect("present"))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|text| {
                text.parse::<T>()
                    .map_err(|_| CliError::config(format!("`{key}` is not a valid number: `{text}`")))
            })
            .transpose()
    }

    pub fn kind(&self) -> CliResult<Option<ProblemKind>> {
        match self.get("problem.kind") {
            None => Ok(None),
            Some("burgers") => Ok(Some(ProblemKind::Burgers)),
            Some("ode") => Ok(Some(ProblemKind::Ode)),
            Some(other) => Err(CliError::config(format!(
                "problem.kind must be `burgers` or `ode`, got `{other}`"
            ))),
        }
    }

    pub fn params(&self) -> CliResult<ParamEnv> {
        let mut env = ParamEnv::new();
        for (key, text) in self.values.range(PARAM_PREFIX.to_string()..) {
            let Some(name) = key.strip_prefix(PARAM_PREFIX) else {
                break;
            };
            let value: f64 = text
                .parse()
                .map_err(|_| CliError::config(format!("parameter `{name}` needs a number, got `{text}`")))?;
            env.set(name, value);
        }
        Ok(env)
    }

    pub fn set_grid(&mut self, spec: GridSpec) -> CliResult<()> {
        self.values.remove("grid.dx");
        self.values.remove("grid.spec");
        self.set("grid.x0", &spec.x0.to_string())?;
        self.set("grid.x1", &spec.x1.to_string())?;
        self.set("grid.n", &spec.n.to_string())
    }

    fn grid(&self) -> CliResult<Grid1D> {
        if let Some(spec) = self.get("grid.spec") {
            if ["grid.x0", "grid.x1", "grid.n", "grid.dx"]
                .iter()
                .any(|k| self.get(k).is_some())
            {
                return Err(CliError::config("give either grid.spec or x0/x1/n/dx, not both"));
            }
            let g = crate::cli::parse_grid(spec).map_err(CliError::config)?;
            return Grid1D::new(g.x0, g.x1, g.n).map_err(|e| CliError::config(e.to_string()));
        }
        let x0: f64 = self
            .number("grid.x0")?
            .ok_or_else(|| CliError::config("missing `grid.x0`"))?;
        let x1: f64 = self
            .number("grid.x1")?
            .ok_or_else(|| CliError::config("missing `grid.x1`"))?;
        let grid = match (self.number::<usize>("grid.n")?, self.number::<f64>("grid.dx")?) {
            (Some(n), None) => Grid1D::new(x0, x1, n),
            (None, Some(dx)) => Grid1D::with_spacing(x0, x1, dx),
            (Some(_), Some(_)) => return Err(CliError::config("give either grid.n or grid.dx, not both")),
            (None, None) => return Err(CliError::config("missing `grid.n` or `grid.dx`")),
        };
        grid.map_err(|e| CliError::config(e.to_string()))
    }

    fn positive(&self, key: &str) -> CliResult<Option<f64>> {
        match self.number::<f64>(key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => {
                Err(CliError::config(format!("`{key}` must be positive, got {v}")))
            }
            other => Ok(other),
        }
    }
}

/// Where the CSV files and report go. `None` disables a file.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub field: Option<String>,
    pub residual: Option<String>,
    pub report: Option<String>,
}

impl OutputSpec {
    fn from_settings(s: &Settings) -> OutputSpec {
        let name = |key: &str| {
            let v = s.values.get(key).map(String::as_str).unwrap_or("");
            (!v.is_empty() && v != "none").then(|| v.to_string())
        };
        OutputSpec {
            dir: PathBuf::from(s.get("output.dir").unwrap_or(".")),
            field: name("output.field"),
            residual: name("output.residual"),
            report: name("output.report"),
        }
    }

    pub fn path(&self, file: &Option<String>) -> Option<PathBuf> {
        file.as_ref().map(|f| self.dir.join(f))
    }
}

#[derive(Debug, Clone)]
pub enum Plan {
    Burgers(Box<BurgersRun>),
    Ode(Box<OdeRun>),
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: ProblemKind,
    pub plan: Plan,
    pub output: OutputSpec,
    /// Every setting in effect, defaults included.
    pub echo: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

fn constant_at(settings: &Settings, key: &str, x: f64, env: &ParamEnv) -> CliResult<f64> {
    let e = settings.required_expr(key)?;
    Ok(e.eval(x, env)?)
}

impl RunConfig {
    /// Resolves `settings` for `kind` (or `problem.kind` when `kind` is
    /// `None`), filling in defaults.
    pub fn build(kind: Option<ProblemKind>, mut settings: Settings) -> CliResult<RunConfig> {
        let kind = match (kind, settings.kind()?) {
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(CliError::config("missing `problem.kind` (burgers or ode)")),
        };
        settings.values.insert("problem.kind".into(), kind.name().into());
        let mut notes = Vec::new();
        settings.default_to("output.field", "field.csv");
        settings.default_to("output.residual", "residual.csv");
        settings.default_to("output.report", "report.json");
        let has_grid = ["grid.spec", "grid.x0", "grid.x1", "grid.n", "grid.dx"]
            .iter()
            .any(|k| settings.values.contains_key(*k));
        let plan = match kind {
            ProblemKind::Burgers => {
                if !has_grid {
                    settings.set_grid(GridSpec {
                        x0: 0.0,
                        x1: 1.0,
                        n: 257,
                    })?;
                }
                settings.default_to("time.t_end", "0.05");
                settings.default_to("time.nt", "5000");
                settings.default_to("time.theta", "0.5");
                let nt: usize = settings.number("time.nt")?.unwrap_or(1);
                let stride = default_stride(nt);
                if settings.default_to("time.save_every", &stride.to_string()) && stride > 1 {
                    notes.push(format!("storing one time level in {stride} ({nt} steps)"));
                }
                settings.default_to("solver.tol", &format!("{:?}", colehopf::verify::TOL_PDE));
                settings.default_to("solver.constraint_tol", &format!("{:?}", colehopf::burgers::TOL_SYM));
                if settings.default_to("problem.phi0", DEFAULT_PHI0) {
                    notes.push(format!("no initial profile given; using phi0 = {DEFAULT_PHI0}"));
                }
                Plan::Burgers(Box::new(Self::burgers(&settings, &mut notes)?))
            }
            ProblemKind::Ode => {
                if !has_grid {
                    settings.set_grid(GridSpec {
                        x0: 0.0,
                        x1: 3.0,
                        n: 3001,
                    })?;
                }
                settings.default_to("problem.s", "0");
                settings.default_to("problem.phi0", "1");
                settings.default_to("problem.dphi0", "0");
                settings.default_to("solver.tol", &format!("{:?}", colehopf::verify::TOL_ODE));
                settings.default_to("solver.constraint_tol", &format!("{:?}", colehopf::ode::TOL_CONSTRAINT));
                Plan::Ode(Box::new(Self::ode(&settings)?))
            }
        };
        settings.default_to("solver.pole_eps", &format!("{:?}", colehopf::hopf::DEFAULT_POLE_EPS));
        let output = OutputSpec::from_settings(&settings);
        Ok(RunConfig {
            kind,
            plan,
            output,
            echo: settings.values,
            notes,
        })
    }

    fn burgers(s: &Settings, notes: &mut Vec<String>) -> CliResult<BurgersRun> {
        let m = s.required_expr("problem.m")?;
        let h = s.required_expr("problem.h")?;
        let phi0 = s.required_expr("problem.phi0")?;
        let mut env = s.params()?;
        let grid = s.grid()?;
        let boundary = match (s.expr("problem.bc_left")?, s.expr("problem.bc_right")?) {
            (Some(left), Some(right)) => Boundary::Dirichlet { left, right },
            (None, None) => {
                notes.push("no boundary data given; endpoint values of phi0 are held fixed".into());
                Boundary::HoldInitial
            }
            _ => {
                return Err(CliError::config(
                    "give both problem.bc_left and problem.bc_right, or neither",
                ))
            }
        };
        if env.get("t").is_none() && phi0.params().iter().any(|p| p == "t") {
            env.set("t", 0.0);
        }
        let t_end = s.positive("time.t_end")?.expect("defaulted");
        let nt: usize = s.number("time.nt")?.expect("defaulted");
        let theta: f64 = s.number("time.theta")?.expect("defaulted");
        let save_every: usize = s.number("time.save_every")?.expect("defaulted");
        if nt == 0 {
            return Err(CliError::config("`time.nt` must be at least 1"));
        }
        if !(0.5..=1.0).contains(&theta) {
            return Err(CliError::config(format!(
                "`time.theta` must lie in [0.5, 1], got {theta}"
            )));
        }
        if save_every == 0 || !nt.is_multiple_of(save_every) {
            return Err(CliError::config(format!(
                "`time.save_every` = {save_every} must divide `time.nt` = {nt}"
            )));
        }
        let mut run = BurgersRun::new(m, h, env, phi0, grid, t_end, nt);
        run.boundary = boundary;
        run.heat = HeatOptions { theta, save_every };
        run.tolerance = s.positive("solver.tol")?.expect("defaulted");
        run.constraint_tolerance = s.positive("solver.constraint_tol")?.expect("defaulted");
        if let Some(eps) = s.positive("solver.pole_eps")? {
            run.pole_eps = eps;
        }
        Ok(run)
    }

    fn ode(s: &Settings) -> CliResult<OdeRun> {
        let f = s.required_expr("problem.f")?;
        let w = s.required_expr("problem.w")?;
        let v = s.required_expr("problem.v")?;
        let src = s.required_expr("problem.s")?;
        let env = s.params()?;
        let grid = s.grid()?;
        let mut problem = OdeProblem::new(f, w, v, src, env.clone(), (grid.x0(), grid.x1()));
        if let Some(v1) = s.expr("problem.v1")? {
            problem = problem.with_v1(v1);
        }
        let u_at: f64 = s.number("problem.u_at")?.unwrap_or(grid.x0());
        let phi_at: f64 = s.number("problem.phi_at")?.unwrap_or(grid.x0());
        for (key, at) in [("problem.u_at", u_at), ("problem.phi_at", phi_at)] {
            if !(grid.x0()..=grid.x1()).contains(&at) {
                return Err(CliError::config(format!("`{key}` = {at} lies outside the grid")));
            }
        }
        let u0 = constant_at(s, "problem.u0", u_at, &env)?;
        let phi0 = constant_at(s, "problem.phi0", phi_at, &env)?;
        let dphi0 = constant_at(s, "problem.dphi0", phi_at, &env)?;
        let mut run = OdeRun::new(problem, u0, phi0, dphi0, grid);
        run.u_at = u_at;
        run.phi_at = phi_at;
        run.tolerance = s.positive("solver.tol")?.expect("defaulted");
        run.constraint_tolerance = s.positive("solver.constraint_tol")?.expect("defaulted");
        if let Some(eps) = s.positive("solver.pole_eps")? {
            run.pole_eps = eps;
        }
        Ok(run)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_sections_and_keys_are_rejected() {
        assert!(Settings::parse_str("[problem]\nmm = 1\n").is_err());
        assert!(Settings::parse_str("[extra]\na = 1\n").is_err());
        assert!(Settings::parse_str("m = 1\n").is_err());
        assert!(Settings::parse_str("[problem]\nparam.x = 1\n").is_err());
    }

    #[test]
    fn burgers_defaults_fill_in() {
        let s = Settings::parse_str("[problem]\nm = 1\nh = exp(x)\n").unwrap();
        let rc = RunConfig::build(Some(ProblemKind::Burgers), s).unwrap();
        let Plan::Burgers(run) = &rc.plan else { panic!() };
        assert_eq!(run.grid.len(), 257);
        assert_eq!(run.nt, 5000);
        assert_eq!(rc.echo["problem.phi0"], DEFAULT_PHI0);
        assert_eq!(rc.echo["problem.kind"], "burgers");
        assert!(rc.notes.iter().any(|n| n.contains("phi0")));
        assert_eq!(run.heat.save_every, 50);
    }

    #[test]
    fn stride_divides_step_count() {
        assert_eq!(default_stride(5000), 50);
        assert_eq!(default_stride(20), 1);
        assert_eq!(default_stride(1009), 1);
        assert_eq!(default_stride(1200), 12);
    }

    #[test]
    fn grid_by_spacing_and_params() {
        let s = Settings::parse_str(
            "[problem]\nkind = ode\nf = 1\nw = a\nv = 4*a^2\nu0 = 1 + a^2\nparam.a = 1\n[grid]\nx0 = 0\nx1 = 3\ndx = 0.01\n",
        )
        .unwrap();
        let rc = RunConfig::build(None, s).unwrap();
        let Plan::Ode(run) = &rc.plan else { panic!() };
        assert_eq!(run.grid.len(), 301);
        assert_eq!(run.u0, 2.0);
        assert_eq!(run.problem.env.get("a"), Some(1.0));
    }

    #[test]
    fn missing_and_conflicting_entries() {
        let s = Settings::parse_str("[problem]\nm = 1\n").unwrap();
        assert!(RunConfig::build(Some(ProblemKind::Burgers), s).is_err());
        let s = Settings::parse_str("[problem]\nm = 1\nh = 1\n[grid]\nx0=0\nx1=1\nn=10\ndx=0.1\n").unwrap();
        assert!(RunConfig::build(Some(ProblemKind::Burgers), s).is_err());
        let s = Settings::parse_str("[problem]\nm = 1\nh = 1\n[time]\nnt = 10\nsave_every = 3\n").unwrap();
        assert!(RunConfig::build(Some(ProblemKind::Burgers), s).is_err());
        assert!(RunConfig::build(None, Settings::default()).is_err());
    }
}
