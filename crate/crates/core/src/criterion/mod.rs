//! Finite-size criterion: thresholds, coverage audits and certificates.

pub mod audit;
pub mod threshold;

use serde::{Deserialize, Serialize};

use crate::eigensolve::SpectralResult;
use crate::error::{Error, Result};

pub use audit::{coverage_audit, pair_coverage_audit, ClassTally, CoverageReport, DisjointMax};
pub use threshold::{
    chain_bound, chain_threshold, chain_threshold_exact, decimal_to_ratio, floor_to, sun_threshold, sun_threshold_exact,
    sun_threshold_minimum, sun_threshold_report, Threshold, COMPARISON_SLACK,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Failed,
}

/// Where a gap value came from and how accurately it is known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverMetadata {
    pub system: String,
    /// `computed`, `cached` or `supplied`.
    pub source: String,
    pub solver: Option<String>,
    pub strategy: Option<String>,
    pub tol: Option<f64>,
    pub kernel_tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub max_residual: Option<f64>,
    pub matvecs: Option<usize>,
    pub restarts: Option<usize>,
    pub sector_dims: Vec<usize>,
    pub cache_key: Option<String>,
}

impl SolverMetadata {
    pub fn supplied(system: &str) -> Self {
        Self {
            system: system.to_string(),
            source: "supplied".into(),
            solver: None,
            strategy: None,
            tol: None,
            kernel_tolerance: None,
            seed: None,
            max_residual: None,
            matvecs: None,
            restarts: None,
            sector_dims: Vec::new(),
            cache_key: None,
        }
    }

    pub fn from_result(system: &str, r: &SpectralResult, source: &str, cache_key: Option<String>) -> Self {
        Self {
            system: system.to_string(),
            source: source.to_string(),
            solver: Some(variant_name(&r.solver)),
            strategy: Some(variant_name(&r.strategy)),
            tol: Some(r.tol),
            kernel_tolerance: Some(r.kernel_tolerance),
            seed: Some(r.seed),
            max_residual: Some(r.max_residual()),
            matvecs: Some(r.sectors.iter().map(|s| s.matvecs).sum()),
            restarts: Some(r.sectors.iter().map(|s| s.restarts).sum()),
            sector_dims: r.sectors.iter().map(|s| s.dim).collect(),
            cache_key,
        }
    }
}

/// Serialized name of a unit enum variant.
fn variant_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// A gap value with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub value: f64,
    pub metadata: SolverMetadata,
}

impl GapEntry {
    pub fn supplied(system: &str, value: f64) -> Self {
        Self { value, metadata: SolverMetadata::supplied(system) }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainGapInputs {
    pub a: Option<GapEntry>,
    pub b: Option<GapEntry>,
    pub c: Option<GapEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ChainGaps {
    pub A: f64,
    pub B: f64,
    pub C: f64,
}

/// Condensed audit totals embedded in a chain certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub n: usize,
    pub edge_totals: std::collections::BTreeMap<String, Vec<u64>>,
    pub pair_totals: std::collections::BTreeMap<String, Vec<u64>>,
    pub max_disjoint: u64,
    pub pass: bool,
}

impl AuditSummary {
    pub fn from_reports(edges: &CoverageReport, pairs: &CoverageReport) -> Self {
        let totals = |r: &CoverageReport| {
            r.classes.iter().filter(|c| c.class != "disjoint").map(|c| (c.class.clone(), c.totals.clone())).collect()
        };
        Self {
            n: edges.n,
            edge_totals: totals(edges),
            pair_totals: totals(pairs),
            max_disjoint: pairs.max_disjoint.as_ref().map_or(0, |d| d.total),
            pass: edges.pass && pairs.pass,
        }
    }
}

/// Verdict of the criterion for one set of gaps; serializes as the certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub model: String,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaps: Option<ChainGaps>,
    #[serde(rename = "gamma_S", default, skip_serializing_if = "Option::is_none")]
    pub gamma_s: Option<f64>,
    pub gamma_min: f64,
    pub gamma_min_system: String,
    pub threshold: Threshold,
    /// `(7/6)(gamma_min - threshold)`; chain only.
    pub bound: Option<f64>,
    pub verdict: Verdict,
    /// The bound rounded down to three decimals; present only when certified.
    pub constant_c: Option<f64>,
    /// `(threshold - gamma) / threshold` when the criterion fails.
    pub shortfall: Option<f64>,
    pub solver_metadata: Vec<SolverMetadata>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSummary>,
    pub applicability: String,
}

fn shortfall(threshold: &Threshold, gamma: f64, verdict: Verdict) -> Option<f64> {
    (verdict == Verdict::Failed).then(|| (threshold.value - gamma) / threshold.value)
}

/// Applies the chain criterion with parameter `K` to the three subsystem gaps.
pub fn certify_chain(k: usize, gaps: &ChainGapInputs) -> Result<CriterionReport> {
    let threshold = chain_threshold(k)?;
    let missing: Vec<&str> =
        [("A", &gaps.a), ("B", &gaps.b), ("C", &gaps.c)].iter().filter(|(_, g)| g.is_none()).map(|(name, _)| *name).collect();
    if !missing.is_empty() {
        return Err(Error::Incomplete(format!("missing gaps for {}", missing.join(", "))));
    }
    let entries = [("A", gaps.a.as_ref().unwrap()), ("B", gaps.b.as_ref().unwrap()), ("C", gaps.c.as_ref().unwrap())];
    if let Some((name, e)) = entries.iter().find(|(_, e)| !(e.value.is_finite() && e.value > 0.0)) {
        return Err(Error::Domain(format!("gap of {name} must be positive and finite, got {}", e.value)));
    }
    let (system, gamma_min) =
        entries
            .iter()
            .map(|(name, e)| (*name, e.value))
            .fold(("", f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let bound = chain_bound(gamma_min, k)?;
    let verdict = if threshold.is_exceeded_by(gamma_min) { Verdict::Certified } else { Verdict::Failed };
    let n0 = 20.max(2 * k + 1);
    let audit = AuditSummary::from_reports(&coverage_audit(n0, k)?, &pair_coverage_audit(n0, k)?);
    Ok(CriterionReport {
        model: "hexagonal_chain".into(),
        k: Some(k),
        a: None,
        gaps: Some(ChainGaps { A: entries[0].1.value, B: entries[1].1.value, C: entries[2].1.value }),
        gamma_s: None,
        gamma_min,
        gamma_min_system: system.to_string(),
        shortfall: shortfall(&threshold, gamma_min, verdict),
        threshold,
        bound: Some(bound),
        verdict,
        constant_c: (verdict == Verdict::Certified).then(|| floor_to(bound, 3)),
        solver_metadata: entries.iter().map(|(_, e)| e.metadata.clone()).collect(),
        audit: Some(audit),
        applicability: format!(
            "lower bound on the gap of H_n for every n >= max(20, 2K+1) = {n0}; \
             an alternative statement of the same result quotes n >= 30"
        ),
    })
}

/// Weighted criterion for the hexagonal sun. Verdict only: no lattice gap value is produced.
pub fn certify_sun(a: f64, gamma_s: GapEntry) -> Result<CriterionReport> {
    let threshold = sun_threshold_report(a)?;
    let gamma = gamma_s.value;
    let verdict = if threshold.is_exceeded_by(gamma) { Verdict::Certified } else { Verdict::Failed };
    Ok(CriterionReport {
        model: "hexagonal_sun".into(),
        k: None,
        a: Some(a),
        gaps: None,
        gamma_s: Some(gamma),
        gamma_min: gamma,
        gamma_min_system: "sun".into(),
        shortfall: shortfall(&threshold, gamma, verdict),
        threshold,
        bound: None,
        verdict,
        constant_c: None,
        solver_metadata: vec![gamma_s.metadata],
        audit: None,
        applicability:
            "two-dimensional hexagonal lattice; a positive verdict implies a gap up to an unspecified positive constant".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(a: f64, b: f64, c: f64) -> ChainGapInputs {
        ChainGapInputs {
            a: Some(GapEntry::supplied("A", a)),
            b: Some(GapEntry::supplied("B", b)),
            c: Some(GapEntry::supplied("C(14)", c)),
        }
    }

    #[test]
    fn chain_certificate_k14() {
        let r = certify_chain(14, &inputs(0.168, 0.175, 0.327)).unwrap();
        assert_eq!(r.verdict, Verdict::Certified);
        assert_eq!(r.gamma_min, 0.168);
        assert_eq!(r.gamma_min_system, "A");
        assert_eq!(r.threshold.fraction.as_deref(), Some("13/84"));
        assert!((r.bound.unwrap() - 0.015444).abs() < 1e-6);
        assert_eq!(r.constant_c, Some(0.015));
        let audit = r.audit.unwrap();
        assert!(audit.pass);
        assert_eq!(audit.edge_totals["diag_up"], vec![85]);
        assert_eq!(audit.edge_totals["horizontal"], vec![84]);
        assert_eq!(audit.pair_totals["wedge_left"], vec![72]);
        assert!(audit.max_disjoint <= 72);
    }

    #[test]
    fn chain_failures() {
        let r = certify_chain(14, &inputs(0.154, 0.175, 0.327)).unwrap();
        assert_eq!(r.verdict, Verdict::Failed);
        assert!(r.bound.unwrap() < 0.0);
        assert_eq!(r.constant_c, None);
        let r = certify_chain(4, &inputs(0.5, 0.5, 3.0 / 14.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Failed);
        assert_eq!(r.gamma_min_system, "C");
    }

    #[test]
    fn missing_gaps_are_incomplete() {
        let mut g = inputs(0.168, 0.175, 0.327);
        g.b = None;
        match certify_chain(14, &g) {
            Err(Error::Incomplete(msg)) => assert!(msg.contains('B')),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sun_verdicts() {
        let r = certify_sun(1.4, GapEntry::supplied("sun", 0.207)).unwrap();
        assert_eq!(r.verdict, Verdict::Failed);
        assert_eq!(r.threshold.fraction.as_deref(), Some("29/120"));
        let s = r.shortfall.unwrap();
        assert!((s - (29.0 / 120.0 - 0.207) / (29.0 / 120.0)).abs() < 1e-12);
        assert!(s < 0.17 && (s - 0.143).abs() < 1e-3);
        assert_eq!(certify_sun(1.4, GapEntry::supplied("sun", 0.25)).unwrap().verdict, Verdict::Certified);
        let edge = certify_sun(1.0, GapEntry::supplied("sun", 0.25)).unwrap();
        assert_eq!(edge.verdict, Verdict::Failed);
        assert!(certify_sun(0.5, GapEntry::supplied("sun", 0.3)).is_err());
    }

    #[test]
    fn certificate_json_keys() {
        let r = certify_chain(14, &inputs(0.168, 0.175, 0.327)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["model", "K", "gaps", "threshold", "bound", "verdict", "constant_c", "solver_metadata", "audit"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["verdict"], "certified");
        assert_eq!(v["gaps"]["A"], 0.168);
        let back: CriterionReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        let sun = serde_json::to_value(certify_sun(1.4, GapEntry::supplied("sun", 0.207)).unwrap()).unwrap();
        assert!(sun.get("gamma_S").is_some() && sun.get("K").is_none());
    }
}
