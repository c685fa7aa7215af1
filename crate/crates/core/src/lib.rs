//! Zero-Hopf bifurcation analysis of the four-dimensional Lorenz-Haken system.
//!
//! The crate reproduces the closed-form objects of the analysis (equilibria,
//! spectra, reduced and averaged vector fields, their zeros and stability)
//! and checks each against an independent numerical computation: a dense
//! eigensolver, periodic quadrature of a numerically reduced field, and
//! shooting for periodic orbits of the full system with Floquet multipliers.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub mod averaging;
pub mod error;
pub mod model;
pub mod ode;
pub mod orbits;
pub mod reduction;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use model::{State4, SystemParams};

/// The three zero-Hopf families.
///
/// * `I`: the origin is the zero-Hopf equilibrium, `e` is tuned.
/// * `II`: the line representative `(0, 0, 0, Δ)` is zero-Hopf; the unfolding
///   perturbs `a` and `b` with `d` and `e` held fixed.
/// * `III`: as `II` but the unfolding also perturbs `d` and the orbits are
///   followed from the nontrivial branch `p±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    II,
    #[serde(rename = "iii")]
    III,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::I, Case::II, Case::III];

    /// Upper bound on the number of bifurcating periodic orbits, counting
    /// each `r > 0` zero twice (it stands for a ± pair) and each axis zero once.
    pub fn orbit_bound(self) -> usize {
        match self {
            Case::I => 4,
            Case::II => 5,
            Case::III => 2,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::I => "i",
            Case::II => "ii",
            Case::III => "iii",
        })
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Case::I),
            "ii" | "2" => Ok(Case::II),
            "iii" | "3" => Ok(Case::III),
            other => Err(Error::Invalid(format!("unknown case '{other}' (expected i, ii or iii)"))),
        }
    }
}
