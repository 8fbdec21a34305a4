//! Machine-readable run reports. Polynomials are stored as canonical
//! strings; certificates are re-checked from those strings on load.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundConfig;
use crate::derivation::DegreeReading;
use crate::error::{Error, Result};
use crate::perturbation::{DivisionCertificate, TargetSlot, Verdict};
use crate::polyring::MPoly;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SystemSummary {
    pub name: Option<String>,
    pub n: usize,
    pub q: usize,
    pub degree: u32,
    pub degree_reading: DegreeReading,
    pub joint_degree: u32,
    pub max_coeff: String,
    /// `M = 0` was raised to 1 inside the growth formulas.
    pub m_floored_for_bounds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigEcho {
    pub bounds: BoundConfig,
    pub tol: f64,
    pub cap: Option<u32>,
    pub residual_max: f64,
    pub seed: u64,
    pub epsilon_samples: Vec<String>,
    pub init: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeneratorRecord {
    pub minor_rows: Vec<usize>,
    pub t_power: usize,
    pub poly: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DerivationSection {
    pub k: usize,
    pub minor_rows: Vec<usize>,
    pub beta: String,
    pub gammas: Vec<String>,
    pub content: String,
    pub equation: String,
    pub degeneracy_generators: Vec<GeneratorRecord>,
    pub exceptional_locus: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessRecord {
    pub coefficient: usize,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PerturbationSection {
    pub verdict: Verdict,
    pub witnesses: Vec<WitnessRecord>,
    pub reduced_denominator_contents: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CertificateKind {
    Bezout,
    Division,
    Probe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateRecord {
    pub kind: CertificateKind,
    pub slot: Option<TargetSlot>,
    pub target: String,
    pub basis: Vec<String>,
    pub cofactors: Vec<String>,
    pub degree_cap: u32,
}

impl CertificateRecord {
    pub fn new(kind: CertificateKind, slot: Option<TargetSlot>, cert: &DivisionCertificate) -> Self {
        CertificateRecord {
            kind,
            slot,
            target: cert.target.to_string(),
            basis: cert.basis.iter().map(ToString::to_string).collect(),
            cofactors: cert.cofactors.iter().map(ToString::to_string).collect(),
            degree_cap: cert.degree_cap,
        }
    }

    pub fn to_certificate(&self, nvars: usize) -> Result<DivisionCertificate> {
        let parse_all = |v: &[String]| v.iter().map(|s| MPoly::parse(s, nvars)).collect::<Result<Vec<_>>>();
        Ok(DivisionCertificate {
            target_index: 0,
            target: MPoly::parse(&self.target, nvars)?,
            basis: parse_all(&self.basis)?,
            cofactors: parse_all(&self.cofactors)?,
            degree_cap: self.degree_cap,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeRecord {
    pub index: usize,
    pub target: String,
    pub basis: Vec<String>,
    pub cap: u32,
    pub expect: String,
    pub found: bool,
    /// No certificate exists and none was expected.
    pub expected_negative: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundRecord {
    pub a_sup: f64,
    pub a_floor: f64,
    pub t_star: f64,
    pub cartan_floor: String,
    pub iy_bound: Option<f64>,
    pub lemma5: Option<f64>,
    pub lemma5_log10: f64,
    pub theorem2: Option<f64>,
    pub theorem2_log10: f64,
    pub lemma3_coeff_bound: String,
    pub lemma9_degree_bound: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleRecord {
    pub epsilon: String,
    pub init: Vec<f64>,
    pub residual: Option<f64>,
    pub residual_passed: bool,
    pub zero_count: Option<usize>,
    pub suspects: Option<usize>,
    pub bounds: Option<BoundRecord>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub command: String,
    pub fingerprint: String,
    pub system: SystemSummary,
    pub config: ConfigEcho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivation: Option<DerivationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSection>,
    #[serde(default)]
    pub certificates: Vec<CertificateRecord>,
    #[serde(default)]
    pub probes: Vec<ProbeRecord>,
    #[serde(default)]
    pub samples: Vec<SampleRecord>,
    #[serde(default)]
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
    pub timing_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<RunReport> {
        serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckRecord {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Re-parses every certificate and checks its identity exactly; returns
    /// how many were checked.
    pub fn reverify(&self) -> Result<usize> {
        let nvars = self.system.q + 1;
        for (i, rec) in self.certificates.iter().enumerate() {
            if !rec.to_certificate(nvars)?.verify() {
                return Err(Error::internal(format!("certificate {i} does not verify")));
            }
        }
        Ok(self.certificates.len())
    }
}

/// JSON has no infinity; infinite values are written as null.
pub(crate) fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
