//! Machine-readable report files.
//!
//! Reports are JSON trees. Every floating-point field is written as a string
//! with 17 significant digits (complex values in matrix-file entry syntax),
//! so values round-trip exactly and infinities survive.

use std::fmt;

use numjcf_core::{Matrix, C64};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::matfile::{format_entry, format_real, parse_entry, parse_matrix, write_matrix};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex(pub C64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_real(self.0))
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(Real).map_err(|_| de::Error::custom(format!("invalid real `{s}`")))
    }
}

impl Serialize for Complex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_entry(self.0))
    }
}

impl<'de> Deserialize<'de> for Complex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_entry(&s).map(Complex).ok_or_else(|| de::Error::custom(format!("invalid complex `{s}`")))
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_entry(self.0))
    }
}

/// A matrix stored as the lines of its matrix file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixBlock(pub Vec<String>);

impl MatrixBlock {
    pub fn new(m: &Matrix) -> Self {
        MatrixBlock(write_matrix(m).lines().map(str::to_owned).collect())
    }

    pub fn to_matrix(&self) -> Result<Matrix, String> {
        parse_matrix(&self.0.join("\n")).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub delta: Real,
    pub gamma: Real,
    pub tau: Real,
    pub rho: Real,
    pub seed: u64,
    pub max_iters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub value: Complex,
    pub segre: Vec<usize>,
    pub weyr: Vec<usize>,
    pub residual: Real,
    pub staircase_cond: Real,
    pub cluster_cond: Option<Real>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureRecord {
    pub value: Complex,
    pub segre: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalRecord {
    /// Staircase residual for `jcf`, triplet residual for `refine`.
    pub residual: Real,
    pub jordan_residual: Option<Real>,
    pub codimension: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    /// `U`, `T` with `A U = U T`.
    Staircase,
    /// `X`, `J` with `A X = X J`.
    Jordan,
    /// `Y`, `lambda I + S` with `A Y = Y (lambda I + S)`.
    Triplet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    pub kind: FactorKind,
    /// Diagonal block orders: one per eigenvalue record followed by the
    /// simple block for staircase factors, Jordan block sizes for Jordan
    /// factors.
    pub blocks: Vec<usize>,
    pub left: MatrixBlock,
    pub right: MatrixBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub dimension: usize,
    pub config: ConfigRecord,
    /// Seed of the run that produced the results.
    pub seed: u64,
    pub attempts: usize,
    pub complete: bool,
    pub eigenvalues: Vec<EigenRecord>,
    pub simple_eigenvalues: Vec<Complex>,
    pub structure: Vec<StructureRecord>,
    pub global: GlobalRecord,
    pub factors: Option<Factors>,
    pub timing: Timing,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report, String> {
        let r: Report = serde_json::from_str(text).map_err(|e| format!("{}:{}: {e}", e.line(), e.column()))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema version {}", r.schema_version));
        }
        Ok(r)
    }

    /// Plain-text eigenvalue table.
    pub fn summary(&self) -> String {
        let mut out = format!("{:<44} {:<16} {:>10} {:>10}\n", "eigenvalue", "segre", "residual", "staircase");
        for e in &self.eigenvalues {
            let segre: Vec<String> = e.segre.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{:<44} {:<16} {:>10.2e} {:>10.2e}\n",
                e.value.to_string(),
                format!("{{{}}}", segre.join(", ")),
                e.residual.0,
                e.staircase_cond.0
            ));
        }
        if !self.simple_eigenvalues.is_empty() {
            out.push_str(&format!("{} deflated simple eigenvalues\n", self.simple_eigenvalues.len()));
        }
        out.push_str(&format!("residual {:.2e}, codimension {}\n", self.global.residual.0, self.global.codimension));
        for w in &self.global.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}
