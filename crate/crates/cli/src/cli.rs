use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "colehopf",
    version,
    about = "Linearize convective equations through psi = P + Q phi'/phi, solve and verify",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive the transform pair and induced coefficients, and check compatibility
    #[command(subcommand)]
    Derive(DeriveCommand),
    /// Build an equation from a chosen potential and transform pair
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Solve the linear problem, transform and write fields and a report
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Run a bundled case, every bundled case (`all`) or a config file
    Verify(VerifyArgs),
    /// Check the named coefficient families
    Families(FamiliesArgs),
}

#[derive(Debug, Subcommand)]
pub enum DeriveCommand {
    /// psi_t - M psi_xx = H psi psi_x + V psi + W psi^2
    Burgers(DeriveBurgers),
    /// psi'' = S + (V + F psi') psi + W psi^2 (+ V1 psi')
    Ode(DeriveOde),
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Coefficients F, W, V, S from U, P and Q
    Ode(SynthOde),
}

#[derive(Debug, Subcommand)]
pub enum SolveCommand {
    Burgers(SolveBurgers),
    Ode(SolveOde),
}

/// Options shared by the derivation-style commands.
#[derive(Debug, Args)]
pub struct Common {
    /// Parameter binding NAME=VALUE (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_binding)]
    pub params: Vec<(String, f64)>,
    /// Sample grid for the sampled identities, x0:x1:n
    #[arg(long, value_name = "X0:X1:N", value_parser = parse_grid, allow_hyphen_values = true, default_value = "0:1:101")]
    pub domain: GridSpec,
    /// Relative tolerance of the compatibility check
    #[arg(long)]
    pub tol: Option<f64>,
    /// Print a JSON document instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DeriveBurgers {
    #[arg(long, allow_hyphen_values = true)]
    pub m: String,
    #[arg(long, allow_hyphen_values = true)]
    pub h: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DeriveOde {
    #[arg(long, allow_hyphen_values = true)]
    pub f: String,
    #[arg(long, allow_hyphen_values = true)]
    pub w: String,
    #[arg(long, allow_hyphen_values = true)]
    pub v: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub s: String,
    /// Coefficient of an extra psi' term
    #[arg(long, allow_hyphen_values = true)]
    pub v1: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SynthOde {
    #[arg(long, allow_hyphen_values = true)]
    pub u: String,
    #[arg(long, allow_hyphen_values = true)]
    pub p: String,
    #[arg(long, allow_hyphen_values = true)]
    pub q: String,
    #[command(flatten)]
    pub common: Common,
}

/// Options shared by `solve burgers` and `solve ode`. Every flag overrides
/// the corresponding config-file entry.
#[derive(Debug, Args)]
pub struct SolveCommon {
    /// INI file with [problem] [grid] [time] [solver] [output] sections
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Raw override SECTION.KEY=VALUE (repeatable)
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", value_parser = parse_assignment)]
    pub sets: Vec<(String, String)>,
    /// Parameter binding NAME=VALUE (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_binding)]
    pub params: Vec<(String, f64)>,
    /// Grid x0:x1:n
    #[arg(long, value_name = "X0:X1:N", value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    /// Residual pass tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub constraint_tol: Option<f64>,
    #[arg(long)]
    pub pole_eps: Option<f64>,
    /// Directory for the CSV files and the report
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Print the report document on stdout
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SolveBurgers {
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Initial profile phi(x, 0)
    #[arg(long, allow_hyphen_values = true)]
    pub phi0: Option<String>,
    /// Dirichlet data at x0, may use t
    #[arg(long, allow_hyphen_values = true)]
    pub bc_left: Option<String>,
    /// Dirichlet data at x1, may use t
    #[arg(long, allow_hyphen_values = true)]
    pub bc_right: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub save_every: Option<usize>,
    #[command(flatten)]
    pub common: SolveCommon,
}

#[derive(Debug, Args)]
pub struct SolveOde {
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub v1: Option<String>,
    /// U at the left end of the grid (an expression in x, evaluated there)
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub dphi0: Option<String>,
    #[command(flatten)]
    pub common: SolveCommon,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Bundled case name, `all`, or a config file path
    pub target: String,
    /// Write the aggregated report here
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    H,
    M,
}

#[derive(Debug, Args)]
pub struct FamiliesArgs {
    pub kind: FamilyArg,
    /// Check only this family
    #[arg(long, allow_hyphen_values = true)]
    pub name: Option<String>,
    /// Parameter override NAME=VALUE (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_binding)]
    pub params: Vec<(String, f64)>,
    /// Sample grid x0:x1:n instead of the family's default
    #[arg(long, value_name = "X0:X1:N", value_parser = parse_grid, allow_hyphen_values = true)]
    pub domain: Option<GridSpec>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
}

pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [x0, x1, n] = parts[..] else {
        return Err(format!("expected x0:x1:n, got `{s}`"));
    };
    let x0: f64 = x0.parse().map_err(|_| format!("bad x0 `{x0}`"))?;
    let x1: f64 = x1.parse().map_err(|_| format!("bad x1 `{x1}`"))?;
    let n: usize = n.parse().map_err(|_| format!("bad point count `{n}`"))?;
    if !(x0.is_finite() && x1.is_finite()) || x1 <= x0 {
        return Err(format!("grid needs finite x0 < x1, got {x0}:{x1}"));
    }
    if n < 2 {
        return Err(format!("grid needs at least 2 points, got {n}"));
    }
    Ok(GridSpec { x0, x1, n })
}

pub fn parse_binding(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || name == "x" {
        return Err(format!("invalid parameter name `{name}`"));
    }
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("parameter `{name}` needs a number, got `{}`", value.trim()))?;
    Ok((name.to_string(), value))
}

pub fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected SECTION.KEY=VALUE, got `{s}`"))?;
    let key = key.trim();
    if !key.contains('.') {
        return Err(format!("override key `{key}` needs a section, e.g. problem.m"));
    }
    Ok((key.to_string(), value.trim().to_string()))
}
