//! Pass/fail records for inequalities checked on sampled trajectories.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimId {
    Thm1Case1,
    Thm1Case2,
    Thm2,
    GrowthCorollary,
    MonotonicityCorollary,
    Prop6Box,
    ZlambdaBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum CertificateStatus {
    Holds,
    Violated,
    NotApplicable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub claim: ClaimId,
    pub constants: BTreeMap<String, f64>,
    pub interval: [f64; 2],
    pub status: CertificateStatus,
    /// Smallest normalized margin `(rhs - lhs) / max(|lhs|, |rhs|) + slack`
    /// over all checked inequalities; `NaN` when not applicable.
    pub worst_margin: f64,
    /// Abscissa where the worst margin occurred.
    pub worst_at: f64,
    pub samples: usize,
}

impl BoundCertificate {
    pub fn verdict(&self) -> bool {
        self.status == CertificateStatus::Holds
    }

    pub fn not_applicable(
        claim: ClaimId,
        interval: [f64; 2],
        reason: impl Into<String>,
        constants: BTreeMap<String, f64>,
    ) -> Self {
        Self {
            claim,
            constants,
            interval,
            status: CertificateStatus::NotApplicable(reason.into()),
            worst_margin: f64::NAN,
            worst_at: f64::NAN,
            samples: 0,
        }
    }

    pub fn is_applicable(&self) -> bool {
        !matches!(self.status, CertificateStatus::NotApplicable(_))
    }
}

/// Running minimum of normalized margins for `lhs <= rhs` checks.
#[derive(Debug, Clone)]
pub struct MarginTracker {
    slack: f64,
    worst: f64,
    worst_at: f64,
    samples: usize,
}

impl MarginTracker {
    pub fn new(slack: f64) -> Self {
        Self {
            slack,
            worst: f64::INFINITY,
            worst_at: f64::NAN,
            samples: 0,
        }
    }

    /// Records the check `lhs <= rhs` at abscissa `at`.
    pub fn check(&mut self, at: f64, lhs: f64, rhs: f64) {
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        let margin = if lhs.is_finite() && rhs.is_finite() {
            (rhs - lhs) / scale + self.slack
        } else {
            f64::NEG_INFINITY
        };
        self.samples += 1;
        if margin < self.worst || self.worst_at.is_nan() {
            self.worst = margin;
            self.worst_at = at;
        }
    }

    pub fn finish(
        self,
        claim: ClaimId,
        interval: [f64; 2],
        mut constants: BTreeMap<String, f64>,
    ) -> BoundCertificate {
        constants.insert("slack".into(), self.slack);
        let status = if self.worst >= 0.0 {
            CertificateStatus::Holds
        } else {
            CertificateStatus::Violated
        };
        BoundCertificate {
            claim,
            constants,
            interval,
            status,
            worst_margin: self.worst,
            worst_at: self.worst_at,
            samples: self.samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_tracks_sign_of_worst_margin() {
        let mut m = MarginTracker::new(0.0);
        m.check(0.0, 1.0, 2.0);
        m.check(1.0, 1.0, 1.0);
        let c = m.finish(ClaimId::Thm2, [0.0, 1.0], BTreeMap::new());
        assert!(c.verdict());
        assert_eq!(c.worst_margin, 0.0);
        assert_eq!(c.worst_at, 1.0);

        let mut m = MarginTracker::new(1e-9);
        m.check(0.5, 1.0 + 1e-6, 1.0);
        let c = m.finish(ClaimId::Thm2, [0.0, 1.0], BTreeMap::new());
        assert!(!c.verdict());
        assert!(c.worst_margin < 0.0);
    }

    #[test]
    fn slack_absorbs_roundoff() {
        let mut m = MarginTracker::new(1e-12);
        m.check(0.0, 1.0 + 1e-15, 1.0);
        assert!(m
            .finish(ClaimId::ZlambdaBounds, [0.0, 0.0], BTreeMap::new())
            .verdict());
    }

    #[test]
    fn non_finite_sides_fail() {
        let mut m = MarginTracker::new(0.0);
        m.check(0.0, f64::NAN, 1.0);
        assert!(!m
            .finish(ClaimId::Thm2, [0.0, 1.0], BTreeMap::new())
            .verdict());
    }
}
