//! Which group is sampled and in which basis the outcome is read.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bases::MeasurementBasis;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Unitary,
    Orthogonal,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Unitary => "unitary",
            Group::Orthogonal => "orthogonal",
        })
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unitary" | "u" => Ok(Group::Unitary),
            "orthogonal" | "o" | "real" => Ok(Group::Orthogonal),
            other => Err(Error::InvalidParameter(format!("unknown group {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Global,
    Local,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Global => "global",
            Scope::Local => "local",
        })
    }
}

impl FromStr for Scope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "global" => Ok(Scope::Global),
            "local" => Ok(Scope::Local),
            other => Err(Error::InvalidParameter(format!("unknown scope {other:?}"))),
        }
    }
}

/// A shadow protocol: the sampled group(s) together with the measurement
/// basis. Local ensembles always read every qubit in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleSpec {
    Global { group: Group, basis: MeasurementBasis },
    Local { groups: Vec<Group> },
}

impl EnsembleSpec {
    pub fn global(group: Group, basis: MeasurementBasis) -> Self {
        EnsembleSpec::Global { group, basis }
    }

    /// One group per qubit, qubit 0 first.
    pub fn local(groups: Vec<Group>) -> Self {
        EnsembleSpec::Local { groups }
    }

    pub fn local_uniform(group: Group, n: usize) -> Self {
        EnsembleSpec::Local { groups: vec![group; n] }
    }

    pub fn scope(&self) -> Scope {
        match self {
            EnsembleSpec::Global { .. } => Scope::Global,
            EnsembleSpec::Local { .. } => Scope::Local,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EnsembleSpec::Global { basis, .. } => basis.dim(),
            EnsembleSpec::Local { groups } => 1 << groups.len(),
        }
    }

    /// Qubit count when the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn basis(&self) -> Option<&MeasurementBasis> {
        match self {
            EnsembleSpec::Global { basis, .. } => Some(basis),
            EnsembleSpec::Local { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnsembleSpec::Global { basis, .. } if basis.dim() < 2 => {
                Err(Error::InvalidParameter("global ensembles need d >= 2".into()))
            }
            EnsembleSpec::Local { groups } if groups.is_empty() => {
                Err(Error::InvalidParameter("local ensembles need at least one qubit".into()))
            }
            EnsembleSpec::Local { groups } if groups.len() > 7 => Err(Error::DimensionLimit {
                requested: 1 << groups.len(),
                max: 1 << 7,
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleSpec::Global { group, basis } => {
                write!(f, "global {group} (d = {}, basis {})", basis.dim(), basis.tag())
            }
            EnsembleSpec::Local { groups } => {
                let gs: Vec<String> = groups.iter().map(|g| g.to_string()).collect();
                write!(f, "local [{}]", gs.join(", "))
            }
        }
    }
}
