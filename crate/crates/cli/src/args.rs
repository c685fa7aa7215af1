use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use zerohopf_core::reduction::{Branch, UnfoldingSpec};
use zerohopf_core::{Case, SystemParams};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "zerohopf", version, about = "Zero-Hopf bifurcation analysis of the 4D Lorenz-Haken system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the run report as canonical JSON to this path.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,

    /// Write a plot-ready CSV table (orbit trajectory or sweep table).
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,

    /// Panel count of the averaging quadrature.
    #[arg(long, global = true)]
    pub quad_n: Option<usize>,

    /// Matching tolerance (zero-hopf) or shooting closure tolerance (orbit, sweep).
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Sample the trajectory CSV at this uniform time step instead of at accepted steps.
    #[arg(long, global = true)]
    pub sample_dt: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibria and their spectra for raw parameters or a perturbed unfolding.
    #[command(allow_negative_numbers = true)]
    Equilibria {
        /// Raw parameters, e.g. a=2,b=1,c=1,d=1,e=3.
        #[arg(long)]
        params: Option<String>,
        #[command(flatten)]
        spec: SpecArgs,
        /// Unfolding parameter, used with the unfolding flags.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Parameters placing an equilibrium at a zero-Hopf point, with a spectral certificate.
    #[command(allow_negative_numbers = true)]
    ZeroHopf {
        #[arg(long)]
        case: Case,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        e: Option<f64>,
    },
    /// Zeros of the averaged map with their stability table.
    #[command(allow_negative_numbers = true)]
    Zeros {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Shoot for the periodic orbit born from an averaged zero.
    #[command(allow_negative_numbers = true)]
    Orbit {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        eps: f64,
        /// Label of the seed zero (default: the first r > 0 zero).
        #[arg(long)]
        zero: Option<String>,
    },
    /// Convergence of orbits to the averaged zero over decreasing ε.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        /// Strictly decreasing, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        #[arg(long)]
        zero: Option<String>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Run all eight criteria.
        #[arg(long)]
        all: bool,
        /// Run selected criteria only.
        #[arg(long)]
        criterion: Vec<u8>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Plus,
    Minus,
}

/// Unfolding given by flags and/or a `key=value` list.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SpecArgs {
    #[arg(long)]
    pub case: Option<Case>,
    /// Unfolding as a list, e.g. c=1,omega=1,a1=1,b1=1,e1=1.
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub d1: Option<f64>,
    #[arg(long)]
    pub e1: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub e: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip)]
    pub branch: Option<BranchArg>,
}

fn parse_pairs(s: &str, allowed: &[&str]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| CliError::Input(format!("expected key=value, got '{item}'")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(CliError::Input(format!("unknown key '{k}' (allowed: {})", allowed.join(", "))));
        }
        let v: f64 = v.trim().parse().map_err(|_| CliError::Input(format!("'{v}' is not a number for {k}")))?;
        if out.insert(k.to_string(), v).is_some() {
            return Err(CliError::Input(format!("{k} given twice")));
        }
    }
    Ok(out)
}

pub fn parse_params(s: &str) -> Result<SystemParams, CliError> {
    let m = parse_pairs(s, &["a", "b", "c", "d", "e"])?;
    let get = |k: &str| m.get(k).copied().ok_or_else(|| CliError::Input(format!("--params is missing {k}")));
    let p = SystemParams::new(get("a")?, get("b")?, get("c")?, get("d")?, get("e")?);
    p.validate()?;
    Ok(p)
}

const SPEC_KEYS: [&str; 8] = ["c", "omega", "a1", "b1", "d1", "e1", "d", "e"];

impl SpecArgs {
    pub fn is_empty(&self) -> bool {
        self.case.is_none()
            && self.spec.is_none()
            && [self.c, self.omega, self.a1, self.b1, self.d1, self.e1, self.d, self.e].iter().all(Option::is_none)
            && self.branch.is_none()
    }

    /// All values from flags and the list, rejecting keys given both ways.
    fn values(&self) -> Result<BTreeMap<String, f64>, CliError> {
        let mut m = match &self.spec {
            Some(s) => parse_pairs(s, &SPEC_KEYS)?,
            None => BTreeMap::new(),
        };
        let flags = [self.c, self.omega, self.a1, self.b1, self.d1, self.e1, self.d, self.e];
        for (k, v) in SPEC_KEYS.iter().zip(flags) {
            if let Some(v) = v {
                if m.insert(k.to_string(), v).is_some() {
                    return Err(CliError::Input(format!("{k} given both in --spec and as --{k}")));
                }
            }
        }
        Ok(m)
    }

    pub fn build(&self) -> Result<UnfoldingSpec, CliError> {
        let case = self.case.ok_or_else(|| CliError::Input("--case is required".into()))?;
        let m = self.values()?;
        let need = |k: &str| m.get(k).copied().ok_or_else(|| CliError::Input(format!("case {case} needs {k}")));
        let opt = |k: &str| m.get(k).copied().unwrap_or(0.0);
        let allowed: &[&str] = match case {
            Case::I => &["c", "omega", "a1", "b1", "d1", "e1"],
            Case::II => &["c", "d", "e", "a1", "b1"],
            Case::III => &["c", "omega", "e", "a1", "b1", "d1"],
        };
        if let Some(k) = m.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(CliError::Input(format!("{k} is not a parameter of case {case}")));
        }
        if self.branch.is_some() && case != Case::III {
            return Err(CliError::Input("--branch applies to case iii only".into()));
        }
        let spec = match case {
            Case::I => UnfoldingSpec::case_i(need("c")?, need("omega")?, need("a1")?, need("b1")?, opt("d1"), need("e1")?),
            Case::II => UnfoldingSpec::case_ii(need("c")?, need("d")?, need("e")?, need("a1")?, need("b1")?),
            Case::III => {
                let branch = match self.branch.unwrap_or(BranchArg::Plus) {
                    BranchArg::Plus => Branch::Plus,
                    BranchArg::Minus => Branch::Minus,
                };
                UnfoldingSpec::case_iii(need("c")?, need("omega")?, need("e")?, need("a1")?, need("b1")?, opt("d1"), branch)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}
