use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Preferences, ReferenceProfile};
use crate::time::MINUTES_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Hypothesis that is never relied on; reported but harmless.
    Warning,
    /// A type invariant is broken.
    Error,
    /// No finite optimal departure exists.
    Fatal,
}

/// One broken constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub severity: Severity,
    pub detail: String,
}

impl Violation {
    fn new(constraint: &str, severity: Severity, detail: String) -> Self {
        Violation {
            constraint: constraint.to_string(),
            severity,
            detail,
        }
    }

    /// Warnings aside, every violation makes the inputs unusable.
    pub fn is_blocking(&self) -> bool {
        self.severity >= Severity::Error
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
            Severity::Fatal => "fatal",
        };
        write!(f, "{sev}: {}: {}", self.constraint, self.detail)
    }
}

/// Checks every invariant of a profile/preference pair. The result is
/// empty when all hold; violations are data, never panics.
pub fn validate(profile: &ReferenceProfile, prefs: &Preferences) -> Vec<Violation> {
    let mut out = Vec::new();

    let times = [
        ("ndt", profile.ndt),
        ("pae", profile.pae),
        ("pat", profile.pat),
        ("pal", profile.pal),
        ("edt", profile.edt),
    ];
    for (name, t) in times {
        let m = t.minutes();
        if !m.is_finite() {
            out.push(Violation::new("finite", Severity::Error, format!("{name} = {m}")));
        } else if !(0.0..MINUTES_PER_DAY).contains(&m) {
            out.push(Violation::new(
                "time_range",
                Severity::Error,
                format!("{name} = {m} outside [0, {MINUTES_PER_DAY})"),
            ));
        }
    }

    let (pae, pat, pal) = (profile.pae.minutes(), profile.pat.minutes(), profile.pal.minutes());
    if pae > pat {
        out.push(Violation::new(
            "ordering",
            Severity::Error,
            format!("pae > pat ({pae} > {pat})"),
        ));
    }
    if pat > pal {
        out.push(Violation::new(
            "ordering",
            Severity::Error,
            format!("pat > pal ({pat} > {pal})"),
        ));
    }
    if profile.edt.minutes() > pal {
        out.push(Violation::new(
            "window",
            Severity::Error,
            format!("edt > pal ({} > {pal})", profile.edt.minutes()),
        ));
    }
    if !profile.delta.is_finite() || profile.delta > 0.0 {
        out.push(Violation::new(
            "delta",
            Severity::Error,
            format!("delta must be finite and <= 0, got {}", profile.delta),
        ));
    }

    let kappa_names = ["k_phi1", "k_phi2", "k_t", "k_rho1", "k_rho2", "k_psi1", "k_psi2"];
    let mut kappa_ok = true;
    for (name, k) in kappa_names.iter().zip(prefs.kappa()) {
        if !(k.is_finite() && k > 0.0) {
            kappa_ok = false;
            out.push(Violation::new(
                "kappa_positive",
                Severity::Error,
                format!("{name} = {k} must be finite and > 0"),
            ));
        }
    }
    let alpha_names = ["a_phi1", "a_phi2", "a_rho1", "a_rho2", "a_psi1", "a_psi2"];
    for (name, a) in alpha_names.iter().zip(prefs.alpha()) {
        if !(a > 0.0 && a <= 1.0) {
            out.push(Violation::new(
                "alpha_range",
                Severity::Error,
                format!("{name} = {a} outside (0, 1]"),
            ));
        }
    }

    // Ratio checks only make sense with positive weights.
    if kappa_ok {
        let ratios = [
            ("loss_aversion_departure", "k_phi1/k_phi2", prefs.k_phi1, prefs.k_phi2),
            ("loss_aversion_early", "k_rho1/k_rho2", prefs.k_rho1, prefs.k_rho2),
            ("loss_aversion_late", "k_psi2/k_psi1", prefs.k_psi2, prefs.k_psi1),
        ];
        for (constraint, label, num, den) in ratios {
            if num < den {
                out.push(Violation::new(
                    constraint,
                    Severity::Error,
                    format!("{label} = {} < 1", num / den),
                ));
            }
        }
        if prefs.k_psi2 < prefs.k_phi2 {
            out.push(Violation::new(
                "schedulability",
                Severity::Fatal,
                format!(
                    "k_psi2 < k_phi2 ({} < {}): utility grows without bound for late departures",
                    prefs.k_psi2, prefs.k_phi2
                ),
            ));
        }
        if prefs.k_rho2 > prefs.k_psi1 {
            out.push(Violation::new(
                "gain_ordering",
                Severity::Warning,
                format!("k_rho2 > k_psi1 ({} > {})", prefs.k_rho2, prefs.k_psi1),
            ));
        }
    }

    out
}
