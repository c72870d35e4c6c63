//! Randomized checks of the closed-form optimum and its consequences.
//!
//! Each verifier draws `trials` independent instances, trial `i` from
//! `SplitMix64::for_trial(seed, i)`, runs them in parallel and reduces in
//! trial order, so a `(seed, trials)` pair always yields the same report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{self, Instance, RegimeCase};
use crate::rng::SplitMix64;
use crate::solver::{self, ScheduleSolution, SchedulingWindow};
use crate::su::{self, validate, Formulation, Severity};
use crate::time::{Duration, TimePoint};

pub const MAX_COUNTEREXAMPLES: usize = 10;
/// Grid pitch of the brute-force oracle, minutes.
pub const ORACLE_STEP: f64 = 0.001;
const SLOPE_TOL: f64 = 1e-6;
const VALUE_TOL: f64 = 1e-9;
/// Centered finite-difference half width for departure-time slopes.
const DEPART_FD_H: f64 = 0.5;
/// Centered finite-difference half width for travel-time slopes.
const TRAVEL_FD_H: f64 = 0.01;
/// Travel-time grid pitch for the NDT plateau check.
const PLATEAU_STEP: f64 = 0.1;
const PROP4_T_POINTS: usize = 50;
const FIG4_POINTS_PER_CASE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Proposition {
    P1,
    P2,
    P3,
    P4,
    Fig4,
}

impl Proposition {
    pub const ALL: [Proposition; 5] = [
        Proposition::P1,
        Proposition::P2,
        Proposition::P3,
        Proposition::P4,
        Proposition::Fig4,
    ];
}

impl std::str::FromStr for Proposition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1" => Ok(Proposition::P1),
            "p2" => Ok(Proposition::P2),
            "p3" => Ok(Proposition::P3),
            "p4" => Ok(Proposition::P4),
            "fig4" => Ok(Proposition::Fig4),
            other => Err(format!("unknown check `{other}` (expected p1, p2, p3, p4 or fig4)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: usize,
    pub instance: Instance,
    pub travel_time: Option<Duration>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub proposition: Proposition,
    pub trials: usize,
    pub failures: usize,
    /// First failures in trial order, at most [`MAX_COUNTEREXAMPLES`].
    pub counterexamples: Vec<Counterexample>,
    pub notes: Vec<String>,
}

impl PropositionReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub reports: Vec<PropositionReport>,
}

type TrialOutcome = Result<(), Box<Counterexample>>;

fn run_trials(
    proposition: Proposition,
    seed: u64,
    trials: usize,
    notes: Vec<String>,
    trial: impl Fn(usize, &mut SplitMix64) -> TrialOutcome + Sync,
) -> PropositionReport {
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::for_trial(seed, i as u64);
            trial(i, &mut rng)
        })
        .collect();
    let failures: Vec<Counterexample> = outcomes.into_iter().filter_map(|o| o.err().map(|b| *b)).collect();
    PropositionReport {
        proposition,
        trials,
        failures: failures.len(),
        counterexamples: failures.into_iter().take(MAX_COUNTEREXAMPLES).collect(),
        notes,
    }
}

/// Collects failed claims for one trial into a single counterexample.
struct Checker {
    trial: usize,
    instance: Instance,
    travel_time: Option<Duration>,
    problems: Vec<String>,
}

impl Checker {
    fn new(trial: usize, instance: Instance) -> Self {
        Checker {
            trial,
            instance,
            travel_time: None,
            problems: Vec::new(),
        }
    }

    fn at(&mut self, t: Duration) {
        if self.problems.is_empty() {
            self.travel_time = Some(t);
        }
    }

    fn claim(&mut self, holds: bool, what: impl FnOnce() -> String) {
        if !holds {
            self.problems.push(what());
        }
    }

    fn finish(self) -> TrialOutcome {
        if self.problems.is_empty() {
            Ok(())
        } else {
            Err(Box::new(Counterexample {
                trial: self.trial,
                instance: self.instance,
                travel_time: self.travel_time,
                reason: self.problems.join("; "),
            }))
        }
    }
}

fn closed(inst: &Instance, t: Duration, f: Formulation, window: SchedulingWindow) -> Result<ScheduleSolution, String> {
    solver::closed_form_optimal(t, &inst.profile, &inst.preferences, f, window).map_err(|e| e.to_string())
}

fn oracle(inst: &Instance, t: Duration, f: Formulation, window: SchedulingWindow) -> Result<ScheduleSolution, String> {
    solver::grid_oracle(t, &inst.profile, &inst.preferences, f, window, ORACLE_STEP).map_err(|e| e.to_string())
}

/// Worst-case utility change across one oracle step.
fn kappa_step_bound(inst: &Instance) -> f64 {
    inst.preferences.kappa().iter().sum::<f64>() * ORACLE_STEP
}

/// With `k_psi2 < k_phi2`, DMRD utility keeps rising past `max(PAL - T,
/// NDT)` with slope `k_phi2 - k_psi2`, and validation reports the
/// parameters as fatal.
pub fn verify_prop1(seed: u64, trials: usize) -> PropositionReport {
    let notes = vec![
        "slopes are measured past max(PAL - T, NDT); before NDT the departure slope is k_phi1, not k_phi2".into(),
    ];
    run_trials(Proposition::P1, seed, trials, notes, |i, rng| {
        let inst = sampling::unschedulable_instance(rng);
        let t = sampling::travel_time_any(rng, &inst.profile);
        let mut check = Checker::new(i, inst);
        check.at(t);

        let (p, k) = (&inst.profile, &inst.preferences);
        let g = |s: f64| su::gu(TimePoint::from_minutes(s), t, p, k, Formulation::Dmrd);
        let expected = k.k_phi2 - k.k_psi2;
        let start = (p.pal - t).minutes().max(p.ndt.minutes());
        // right of the late-arrival jump
        let mut prev = g(start + DEPART_FD_H);
        for j in 1..=10 {
            let s = start + j as f64;
            let slope = (g(s + DEPART_FD_H) - g(s - DEPART_FD_H)) / (2.0 * DEPART_FD_H);
            check.claim((slope - expected).abs() <= SLOPE_TOL, || {
                format!("slope at s = {s} is {slope}, expected {expected}")
            });
            let v = g(s);
            check.claim(v > prev, || format!("GU not increasing at s = {s}: {v} <= {prev}"));
            prev = v;
        }
        let fatal = validate(p, k)
            .iter()
            .any(|v| v.constraint == "schedulability" && v.severity == Severity::Fatal);
        check.claim(fatal, || "validation did not flag schedulability as fatal".into());
        check.finish()
    })
}

fn case_formula(inst: &Instance, t: Duration, case: RegimeCase) -> TimePoint {
    let p = &inst.profile;
    match case {
        RegimeCase::Case1 => p.pat - t,
        RegimeCase::Case2 => p.ndt,
        RegimeCase::Case3 => p.pal - t,
    }
}

/// DMRD closed form equals the case formula and agrees with the oracle;
/// trials cycle through the three travel-time cases.
pub fn verify_prop2(seed: u64, trials: usize) -> PropositionReport {
    run_trials(Proposition::P2, seed, trials, Vec::new(), |i, rng| {
        let inst = sampling::regime_instance(rng);
        let case = RegimeCase::ALL[i % 3];
        let t = sampling::travel_time_in_case(rng, &inst.profile, case);
        let window = sampling::verification_window(&inst.profile, t);
        let mut check = Checker::new(i, inst);
        check.at(t);
        match (
            closed(&inst, t, Formulation::Dmrd, window),
            oracle(&inst, t, Formulation::Dmrd, window),
        ) {
            (Ok(cf), Ok(or)) => {
                let expected = case_formula(&inst, t, case);
                check.claim(cf.s_star == expected && !cf.clamped, || {
                    format!("{}: s* = {}, formula gives {}", case.name(), cf.s_star.minutes(), expected.minutes())
                });
                let ds = (cf.s_star.minutes() - or.s_star.minutes()).abs();
                check.claim(ds <= ORACLE_STEP, || {
                    format!("closed form {} vs oracle {}", cf.s_star.minutes(), or.s_star.minutes())
                });
                let dg = (cf.gu_star - or.gu_star).abs();
                check.claim(dg <= kappa_step_bound(&inst), || format!("GU* differs from oracle by {dg}"));
            }
            (a, b) => check.claim(false, || format!("solver error: {:?} / {:?}", a.err(), b.err())),
        }
        check.finish()
    })
}

/// MRD closed form is exactly `PAT - T`, agrees with the oracle, and moves
/// one-for-one earlier as travel time grows.
pub fn verify_prop3(seed: u64, trials: usize) -> PropositionReport {
    run_trials(Proposition::P3, seed, trials, Vec::new(), |i, rng| {
        let inst = sampling::regime_instance(rng);
        let case = RegimeCase::ALL[i % 3];
        let t = sampling::travel_time_in_case(rng, &inst.profile, case);
        let window = sampling::verification_window(&inst.profile, t);
        let mut check = Checker::new(i, inst);
        check.at(t);
        let later = Duration::from_minutes(t.minutes() + 1.0);
        match (
            closed(&inst, t, Formulation::Mrd, window),
            oracle(&inst, t, Formulation::Mrd, window),
            closed(&inst, later, Formulation::Mrd, sampling::verification_window(&inst.profile, later)),
        ) {
            (Ok(cf), Ok(or), Ok(next)) => {
                let expected = inst.profile.pat - t;
                check.claim(cf.s_star == expected, || {
                    format!("s* = {}, PAT - T = {}", cf.s_star.minutes(), expected.minutes())
                });
                let ds = (cf.s_star.minutes() - or.s_star.minutes()).abs();
                check.claim(ds <= ORACLE_STEP, || {
                    format!("closed form {} vs oracle {}", cf.s_star.minutes(), or.s_star.minutes())
                });
                let dg = (cf.gu_star - or.gu_star).abs();
                check.claim(dg <= kappa_step_bound(&inst), || format!("GU* differs from oracle by {dg}"));
                let shift = next.s_star.since(cf.s_star);
                check.claim((shift + 1.0).abs() <= VALUE_TOL, || {
                    format!("one more minute of travel moved s* by {shift}, expected -1")
                });
            }
            (a, b, c) => check.claim(false, || {
                format!("solver error: {:?} / {:?} / {:?}", a.err(), b.err(), c.err())
            }),
        }
        check.finish()
    })
}

/// DMRD never departs earlier than MRD; the gap is zero under light
/// congestion and `PAL - PAT` under heavy congestion; the DMRD optimum
/// sits on NDT exactly for `T` in `[PAT - NDT, PAL - NDT]`.
pub fn verify_prop4(seed: u64, trials: usize) -> PropositionReport {
    let notes = vec!["heavy-congestion gap is checked as PAL - PAT, the offset between the two case-3 optima".into()];
    run_trials(Proposition::P4, seed, trials, notes, |i, rng| {
        let inst = sampling::regime_instance(rng);
        let p = inst.profile;
        let mut check = Checker::new(i, inst);
        let both = |t: Duration| -> Result<(ScheduleSolution, ScheduleSolution), String> {
            let w = sampling::verification_window(&p, t);
            Ok((closed(&inst, t, Formulation::Mrd, w)?, closed(&inst, t, Formulation::Dmrd, w)?))
        };
        let (lower, upper) = (p.pat.since(p.ndt), p.pal.since(p.ndt));
        let t_max = sampling::max_travel_time(&p);

        for j in 1..=PROP4_T_POINTS {
            let t = Duration::from_minutes(t_max * j as f64 / PROP4_T_POINTS as f64);
            check.at(t);
            let (mrd, dmrd) = match both(t) {
                Ok(v) => v,
                Err(e) => {
                    check.claim(false, || e);
                    continue;
                }
            };
            let gap = dmrd.s_star.since(mrd.s_star);
            let tm = t.minutes();
            check.claim(gap >= 0.0, || format!("T = {tm}: DMRD departs {} min earlier", -gap));
            if tm < lower {
                check.claim(gap == 0.0, || format!("T = {tm}: light-congestion gap {gap}"));
            } else if tm > upper {
                let expected = p.pal.since(p.pat);
                check.claim((gap - expected).abs() <= VALUE_TOL, || {
                    format!("T = {tm}: heavy-congestion gap {gap}, expected {expected}")
                });
            }
        }

        let n = (t_max / PLATEAU_STEP).floor() as usize;
        for k in 1..=n {
            let t = Duration::from_minutes(k as f64 * PLATEAU_STEP);
            let tm = t.minutes();
            match both(t) {
                Ok((_, dmrd)) => {
                    let on_plateau = dmrd.s_star == p.ndt;
                    let expected = tm >= lower && tm <= upper;
                    if on_plateau != expected {
                        check.at(t);
                    }
                    check.claim(on_plateau == expected, || {
                        format!("T = {tm}: departs at NDT = {on_plateau}, expected {expected}")
                    });
                }
                Err(e) => check.claim(false, || e),
            }
        }
        check.finish()
    })
}

fn expected_dmrd_slope(inst: &Instance, case: RegimeCase) -> f64 {
    let k = &inst.preferences;
    match case {
        RegimeCase::Case1 => -(k.k_t + k.k_phi2),
        RegimeCase::Case2 => -(k.k_t + k.k_psi1),
        RegimeCase::Case3 => -(k.k_t + k.k_phi1),
    }
}

/// Optimal-utility curves against travel time: DMRD above MRD before
/// `PAT - NDT`, equal there, below after; slopes per case as derived from
/// the closed form, each steeper than MRD's `-k_t`.
pub fn verify_fig4(seed: u64, trials: usize) -> PropositionReport {
    let notes = vec!["optimal utility can be positive under light congestion; only ordering and slopes are checked".into()];
    run_trials(Proposition::Fig4, seed, trials, notes, |i, rng| {
        let inst = sampling::regime_instance(rng);
        let p = inst.profile;
        let k = inst.preferences;
        let mut check = Checker::new(i, inst);
        let gu_pair = |t: f64| -> Result<(f64, f64), String> {
            let t = Duration::from_minutes(t);
            let w = sampling::verification_window(&p, t);
            Ok((
                closed(&inst, t, Formulation::Mrd, w)?.gu_star,
                closed(&inst, t, Formulation::Dmrd, w)?.gu_star,
            ))
        };
        let (lower, upper) = (p.pat.since(p.ndt), p.pal.since(p.ndt));
        let margin = 2.0 * TRAVEL_FD_H;
        let ranges = [
            (RegimeCase::Case1, margin, lower - margin),
            (RegimeCase::Case2, lower + margin, upper - margin),
            (RegimeCase::Case3, upper + margin, upper + sampling::TRAVEL_TAIL),
        ];

        let mut body = || -> Result<(), String> {
            let (mrd, dmrd) = gu_pair(lower)?;
            check.at(Duration::from_minutes(lower));
            check.claim((dmrd - mrd).abs() <= VALUE_TOL, || {
                format!("T = PAT - NDT: GU* differ by {}", dmrd - mrd)
            });
            for (case, lo, hi) in ranges {
                for _ in 0..FIG4_POINTS_PER_CASE {
                    let t = rng.uniform(lo, hi);
                    check.at(Duration::from_minutes(t));
                    let (mrd, dmrd) = gu_pair(t)?;
                    if case == RegimeCase::Case1 {
                        check.claim(dmrd > mrd, || format!("T = {t}: DMRD GU* {dmrd} <= MRD {mrd}"));
                    } else {
                        check.claim(dmrd < mrd, || format!("T = {t}: DMRD GU* {dmrd} >= MRD {mrd}"));
                    }
                    let (mrd_hi, dmrd_hi) = gu_pair(t + TRAVEL_FD_H)?;
                    let (mrd_lo, dmrd_lo) = gu_pair(t - TRAVEL_FD_H)?;
                    let slope_mrd = (mrd_hi - mrd_lo) / (2.0 * TRAVEL_FD_H);
                    let slope_dmrd = (dmrd_hi - dmrd_lo) / (2.0 * TRAVEL_FD_H);
                    check.claim((slope_mrd + k.k_t).abs() <= SLOPE_TOL, || {
                        format!("T = {t}: MRD slope {slope_mrd}, expected {}", -k.k_t)
                    });
                    let expected = expected_dmrd_slope(&inst, case);
                    check.claim((slope_dmrd - expected).abs() <= SLOPE_TOL, || {
                        format!("T = {t}: DMRD slope {slope_dmrd}, expected {expected}")
                    });
                    check.claim(slope_dmrd < slope_mrd, || {
                        format!("T = {t}: DMRD slope {slope_dmrd} not steeper than MRD {slope_mrd}")
                    });
                }
            }
            Ok(())
        };
        if let Err(e) = body() {
            check.claim(false, || e);
        }
        check.finish()
    })
}

pub fn verify(proposition: Proposition, seed: u64, trials: usize) -> PropositionReport {
    match proposition {
        Proposition::P1 => verify_prop1(seed, trials),
        Proposition::P2 => verify_prop2(seed, trials),
        Proposition::P3 => verify_prop3(seed, trials),
        Proposition::P4 => verify_prop4(seed, trials),
        Proposition::Fig4 => verify_fig4(seed, trials),
    }
}

pub fn run_verifiers(propositions: &[Proposition], seed: u64, trials: usize) -> VerificationSummary {
    let reports: Vec<PropositionReport> = propositions.iter().map(|&p| verify(p, seed, trials)).collect();
    VerificationSummary {
        seed,
        trials,
        passed: reports.iter().all(PropositionReport::passed),
        reports,
    }
}
