//! Congestion sweeps, randomized checks of the closed-form optimum's
//! properties, and side-by-side comparison of the three formulations.

pub mod sampling;
mod verify;

pub use sampling::{Instance, RegimeCase};
pub use verify::{
    run_verifiers, verify, verify_fig4, verify_prop1, verify_prop2, verify_prop3, verify_prop4, Counterexample,
    Proposition, PropositionReport, VerificationSummary, MAX_COUNTEREXAMPLES, ORACLE_STEP,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::{self, SchedulingWindow, SolverError};
use crate::su::{self, Formulation, Preferences, ReferenceProfile, UtilityBreakdown};
use crate::time::{Duration, TimePoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid travel-time range: {0}")]
    InvalidRange(String),
    #[error("no scenarios given")]
    NoScenarios,
}

/// Optimal departures and utilities of both models at one travel time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: Duration,
    pub s_star_mrd: TimePoint,
    pub s_star_dmrd: TimePoint,
    pub gu_star_mrd: f64,
    pub gu_star_dmrd: f64,
    pub regime_case: RegimeCase,
}

const SWEEP_DEDUP_TOL: f64 = 1e-9;

/// Travel times `t_min, t_min + t_step, ..., <= t_max`, plus `PAT - NDT`
/// and `PAL - NDT` when they fall in range.
pub fn sweep_grid(profile: &ReferenceProfile, t_min: f64, t_max: f64, t_step: f64) -> Result<Vec<f64>, AnalysisError> {
    if !(t_min.is_finite() && t_max.is_finite() && t_min > 0.0 && t_min <= t_max) {
        return Err(AnalysisError::InvalidRange(format!(
            "need 0 < t_min <= t_max, got t_min = {t_min}, t_max = {t_max}"
        )));
    }
    if !(t_step.is_finite() && t_step > 0.0) {
        return Err(AnalysisError::InvalidRange(format!("t_step must be > 0, got {t_step}")));
    }
    let n = ((t_max - t_min) / t_step + SWEEP_DEDUP_TOL).floor() as u64;
    let mut ts: Vec<f64> = (0..=n).map(|i| t_min + i as f64 * t_step).collect();
    for boundary in [profile.pat.since(profile.ndt), profile.pal.since(profile.ndt)] {
        if boundary >= t_min && boundary <= t_max {
            ts.push(boundary);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|b, a| (*b - *a).abs() <= SWEEP_DEDUP_TOL);
    Ok(ts)
}

/// Closed-form optima of both models for each travel time on the sweep
/// grid, each in the window `[EDT, PAL - T]`.
pub fn sweep_congestion(
    profile: &ReferenceProfile,
    prefs: &Preferences,
    t_min: f64,
    t_max: f64,
    t_step: f64,
) -> Result<Vec<SweepRow>, AnalysisError> {
    let regime = solver::regime_check(profile, prefs);
    if !regime.satisfied {
        return Err(SolverError::RegimeViolation(regime).into());
    }
    sweep_grid(profile, t_min, t_max, t_step)?
        .into_iter()
        .map(|t| {
            let t = Duration::from_minutes(t);
            let window = SchedulingWindow::for_free_flow(profile, t);
            let mrd = solver::closed_form_optimal(t, profile, prefs, Formulation::Mrd, window)?;
            let dmrd = solver::closed_form_optimal(t, profile, prefs, Formulation::Dmrd, window)?;
            Ok(SweepRow {
                t,
                s_star_mrd: mrd.s_star,
                s_star_dmrd: dmrd.s_star,
                gu_star_mrd: mrd.gu_star,
                gu_star_dmrd: dmrd.gu_star,
                regime_case: RegimeCase::classify(t, profile),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub depart: TimePoint,
    pub travel: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: Scenario,
    /// One breakdown per formulation, in `Formulation::ALL` order.
    pub cells: Vec<UtilityBreakdown>,
}

/// `gu(first) - gu(second)` under one formulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDifference {
    pub formulation: Formulation,
    pub first: String,
    pub second: String,
    pub gu_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub differences: Vec<PairDifference>,
}

impl ComparisonTable {
    pub fn gu(&self, row: usize, formulation: Formulation) -> f64 {
        self.rows[row]
            .cells
            .iter()
            .find(|c| c.formulation == formulation)
            .expect("every formulation is evaluated")
            .gu
    }
}

pub fn compare_formulations(
    scenarios: &[Scenario],
    profile: &ReferenceProfile,
    prefs: &Preferences,
) -> Result<ComparisonTable, AnalysisError> {
    if scenarios.is_empty() {
        return Err(AnalysisError::NoScenarios);
    }
    let rows: Vec<ComparisonRow> = scenarios
        .iter()
        .map(|sc| ComparisonRow {
            scenario: sc.clone(),
            cells: Formulation::ALL
                .iter()
                .map(|&f| su::gross_utility(sc.depart, sc.travel, profile, prefs, f))
                .collect(),
        })
        .collect();

    let mut differences = Vec::new();
    for (fi, &formulation) in Formulation::ALL.iter().enumerate() {
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                differences.push(PairDifference {
                    formulation,
                    first: rows[i].scenario.label.clone(),
                    second: rows[j].scenario.label.clone(),
                    gu_difference: rows[i].cells[fi].gu - rows[j].cells[fi].gu,
                });
            }
        }
    }
    Ok(ComparisonTable { rows, differences })
}

/// Two commutes that both arrive at 08:00: leave 07:30 with 30 minutes of
/// travel, or leave 07:20 with 40.
pub fn case1_scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            label: "day1".into(),
            depart: TimePoint::from_hm(7, 30),
            travel: Duration::from_minutes(30.0),
        },
        Scenario {
            label: "day2".into(),
            depart: TimePoint::from_hm(7, 20),
            travel: Duration::from_minutes(40.0),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su::fixtures::{k0, p0};

    fn row(rows: &[SweepRow], t: f64) -> &SweepRow {
        rows.iter().find(|r| r.t.minutes() == t).unwrap()
    }

    #[test]
    fn sweep_examples() {
        let rows = sweep_congestion(&p0(), &k0(), 5.0, 60.0, 5.0).unwrap();
        assert_eq!(rows.len(), 12);

        let r = row(&rows, 20.0);
        assert_eq!(r.s_star_dmrd.minutes(), 460.0);
        assert_eq!(r.s_star_mrd.minutes(), 460.0);
        assert_eq!(r.regime_case, RegimeCase::Case1);

        let r = row(&rows, 35.0);
        assert_eq!(r.s_star_dmrd.minutes(), 450.0);
        assert_eq!(r.s_star_mrd.minutes(), 445.0);
        assert!((r.gu_star_dmrd - 1.5).abs() < 1e-12);
        assert!((r.gu_star_mrd - 6.5).abs() < 1e-12);
        assert_eq!(r.regime_case, RegimeCase::Case2);

        let r = row(&rows, 50.0);
        assert_eq!(r.s_star_dmrd.minutes(), 440.0);
        assert_eq!(r.s_star_mrd.minutes(), 430.0);
        assert_eq!(r.regime_case, RegimeCase::Case3);
    }

    #[test]
    fn sweep_adds_off_grid_boundaries() {
        let ts = sweep_grid(&p0(), 4.0, 44.0, 8.0).unwrap();
        assert_eq!(ts, vec![4.0, 12.0, 20.0, 28.0, 30.0, 36.0, 40.0, 44.0]);
        let ts = sweep_grid(&p0(), 1.0, 10.0, 3.0).unwrap();
        assert_eq!(ts, vec![1.0, 4.0, 7.0, 10.0]);
    }

    #[test]
    fn sweep_rejects_bad_ranges_and_regime() {
        assert!(matches!(sweep_grid(&p0(), 5.0, 60.0, 0.0), Err(AnalysisError::InvalidRange(_))));
        assert!(matches!(sweep_grid(&p0(), 0.0, 60.0, 1.0), Err(AnalysisError::InvalidRange(_))));
        assert!(matches!(sweep_grid(&p0(), 9.0, 8.0, 1.0), Err(AnalysisError::InvalidRange(_))));
        let mut k = k0();
        k.a_psi2 = 0.9;
        assert!(matches!(
            sweep_congestion(&p0(), &k, 5.0, 60.0, 5.0),
            Err(AnalysisError::Solver(SolverError::RegimeViolation(_)))
        ));
    }

    #[test]
    fn case1_comparison() {
        let table = compare_formulations(&case1_scenarios(), &p0(), &k0()).unwrap();
        assert_eq!(table.gu(0, Formulation::Mrp), 10.0);
        assert_eq!(table.gu(0, Formulation::Mrp), table.gu(1, Formulation::Mrp));
        let diff = |f| {
            table
                .differences
                .iter()
                .find(|d| d.formulation == f)
                .unwrap()
                .gu_difference
        };
        assert_eq!(diff(Formulation::Mrp), 0.0);
        assert!((diff(Formulation::Mrd) - 1.0).abs() < 1e-12);
        assert!((diff(Formulation::Dmrd) - 21.0).abs() < 1e-12);
        assert!((table.gu(0, Formulation::Mrd) - 7.0).abs() < 1e-12);
        assert!((table.gu(1, Formulation::Dmrd) - -14.0).abs() < 1e-12);
    }

    #[test]
    fn comparison_needs_scenarios() {
        assert_eq!(compare_formulations(&[], &p0(), &k0()), Err(AnalysisError::NoScenarios));
    }
}
