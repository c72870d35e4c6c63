//! Single-route departure-time optimization: maximize gross utility over
//! `s` in `[EDT, LDT]` for a fixed travel time.
//!
//! Three solvers share one result type:
//!
//! * [`closed_form_optimal`] computes the exact optimum for linear preferences with
//!   `k_psi2 > k_phi1 > k_psi1 > k_phi2`, arrival utility continuous at PAT
//!   and `delta <= 0` (see [`regime_check`]).
//! * [`numeric_optimal`] does a breakpoint-aware grid search with ternary
//!   refinement; works for any parameters.
//! * [`grid_oracle`] is a dense brute force, used to check the other two.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::su::{self, Formulation, Preferences, ReferenceProfile, UtilityBreakdown};
use crate::time::{Duration, TimePoint};

/// Relative tolerance for the continuity-at-PAT condition.
pub const CONTINUITY_RTOL: f64 = 1e-9;

/// Number of sampled local maxima the numeric solver refines.
const REFINE_CANDIDATES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulingWindow {
    pub edt: TimePoint,
    pub ldt: TimePoint,
}

impl SchedulingWindow {
    pub fn new(edt: TimePoint, ldt: TimePoint) -> Self {
        SchedulingWindow { edt, ldt }
    }

    /// `[profile.edt, PAL - t_free]`.
    pub fn for_free_flow(profile: &ReferenceProfile, t_free: Duration) -> Self {
        SchedulingWindow::new(profile.edt, profile.pal - t_free)
    }

    pub fn is_empty(&self) -> bool {
        let (lo, hi) = (self.edt.minutes(), self.ldt.minutes());
        lo.is_nan() || hi.is_nan() || lo > hi
    }

    fn check(&self) -> Result<(), SolverError> {
        if self.is_empty() {
            Err(SolverError::EmptyWindow {
                edt: self.edt.minutes(),
                ldt: self.ldt.minutes(),
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCondition {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

/// Whether the closed-form optimum applies, condition by condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub satisfied: bool,
    pub conditions: Vec<RegimeCondition>,
}

impl RegimeReport {
    pub fn condition(&self, name: &str) -> Option<&RegimeCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    fn failing(&self) -> String {
        let names: Vec<_> = self
            .conditions
            .iter()
            .filter(|c| !c.holds)
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        names.join("; ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    ClosedForm,
    Numeric,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub s_star: TimePoint,
    pub gu_star: f64,
    pub breakdown: UtilityBreakdown,
    pub solver: SolverKind,
    /// The unconstrained optimum lay outside the window.
    pub clamped: bool,
    pub regime: RegimeReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    #[default]
    Auto,
    Closed,
    Numeric,
}

impl std::str::FromStr for SolveMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(SolveMode::Auto),
            "closed" | "closed_form" => Ok(SolveMode::Closed),
            "numeric" => Ok(SolveMode::Numeric),
            other => Err(format!("unknown solver `{other}` (expected auto, closed or numeric)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericOptions {
    pub grid_step: f64,
    pub refine_tol: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            grid_step: 0.01,
            refine_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("closed-form solution does not apply: {}", .0.failing())]
    RegimeViolation(RegimeReport),
    #[error("empty scheduling window [{edt}, {ldt}]")]
    EmptyWindow { edt: f64, ldt: f64 },
    #[error("no closed-form solution for formulation {0}; use the numeric solver")]
    UnsupportedFormulation(Formulation),
    #[error("step must be finite and > 0, got {0}")]
    InvalidStep(f64),
}

pub fn regime_check(profile: &ReferenceProfile, prefs: &Preferences) -> RegimeReport {
    let alpha = prefs.alpha();
    let unit = alpha.iter().all(|&a| a == 1.0);
    let r1 = RegimeCondition {
        name: "unit_exponents".into(),
        holds: unit,
        detail: format!("alpha = {alpha:?}"),
    };

    let ordered = prefs.k_psi2 > prefs.k_phi1 && prefs.k_phi1 > prefs.k_psi1 && prefs.k_psi1 > prefs.k_phi2;
    let r2 = RegimeCondition {
        name: "kappa_ordering".into(),
        holds: ordered,
        detail: format!(
            "k_psi2 > k_phi1 > k_psi1 > k_phi2: {} > {} > {} > {}",
            prefs.k_psi2, prefs.k_phi1, prefs.k_psi1, prefs.k_phi2
        ),
    };

    let early_side = prefs.k_rho2 * profile.pat.since(profile.pae);
    let late_side = prefs.k_psi1 * profile.pal.since(profile.pat);
    let scale = early_side.abs().max(late_side.abs());
    let continuous = (early_side - late_side).abs() <= CONTINUITY_RTOL * scale;
    let r3 = RegimeCondition {
        name: "continuity_at_pat".into(),
        holds: continuous,
        detail: format!("k_rho2*(PAT-PAE) = {early_side}, k_psi1*(PAL-PAT) = {late_side}"),
    };

    let r4 = RegimeCondition {
        name: "nonpositive_delta".into(),
        holds: profile.delta <= 0.0,
        detail: format!("delta = {}", profile.delta),
    };

    let conditions = vec![r1, r2, r3, r4];
    RegimeReport {
        satisfied: conditions.iter().all(|c| c.holds),
        conditions,
    }
}

fn solution(
    s: TimePoint,
    t: Duration,
    profile: &ReferenceProfile,
    prefs: &Preferences,
    formulation: Formulation,
    solver: SolverKind,
    clamped: bool,
) -> ScheduleSolution {
    let breakdown = su::gross_utility(s, t, profile, prefs, formulation);
    ScheduleSolution {
        s_star: s,
        gu_star: breakdown.gu,
        breakdown,
        solver,
        clamped,
        regime: regime_check(profile, prefs),
    }
}

/// Unconstrained optimum inside the regime, before clamping.
pub fn unconstrained_optimum(
    t: Duration,
    profile: &ReferenceProfile,
    formulation: Formulation,
) -> Option<TimePoint> {
    let t_min = t.minutes();
    match formulation {
        Formulation::Mrp => None,
        Formulation::Mrd => Some(profile.pat - t),
        Formulation::Dmrd => {
            let ndt = profile.ndt;
            Some(if t_min < profile.pat.since(ndt) {
                profile.pat - t
            } else if t_min <= profile.pal.since(ndt) {
                ndt
            } else {
                profile.pal - t
            })
        }
    }
}

pub fn closed_form_optimal(
    t: Duration,
    profile: &ReferenceProfile,
    prefs: &Preferences,
    formulation: Formulation,
    window: SchedulingWindow,
) -> Result<ScheduleSolution, SolverError> {
    let regime = regime_check(profile, prefs);
    if !regime.satisfied {
        return Err(SolverError::RegimeViolation(regime));
    }
    window.check()?;
    let free = unconstrained_optimum(t, profile, formulation)
        .ok_or(SolverError::UnsupportedFormulation(formulation))?;
    // GU is unimodal in the regime, so the nearest bound is optimal.
    let s = free.clamp(window.edt, window.ldt);
    let clamped = s != free;
    Ok(solution(s, t, profile, prefs, formulation, SolverKind::ClosedForm, clamped))
}

/// Returns true when `(v, s)` should replace `(best_v, best_s)`: higher
/// utility, or equal utility and later departure.
#[inline]
fn improves(v: f64, s: f64, best_v: f64, best_s: f64) -> bool {
    v > best_v || (v == best_v && s > best_s)
}

fn check_step(step: f64) -> Result<(), SolverError> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(SolverError::InvalidStep(step))
    }
}

/// Sample positions: both window ends, every breakpoint inside the
/// window, and an even grid of pitch at most `step` between them.
fn sample_positions(t: Duration, profile: &ReferenceProfile, window: SchedulingWindow, step: f64) -> Vec<f64> {
    let (lo, hi) = (window.edt.minutes(), window.ldt.minutes());
    let mut knots = vec![lo];
    knots.extend(
        su::breakpoints(t, profile)
            .into_iter()
            .map(TimePoint::minutes)
            .filter(|&b| b > lo && b < hi),
    );
    if hi > lo {
        knots.push(hi);
    }

    let mut xs = Vec::new();
    for seg in knots.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let n = ((b - a) / step).ceil().max(1.0) as usize;
        xs.extend((0..n).map(|i| a + (b - a) * i as f64 / n as f64));
    }
    xs.push(*knots.last().expect("window has at least one knot"));
    xs
}

/// Maximizes `f` on `[lo, hi]` by ternary search, preferring later points.
fn ternary_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    while hi - lo > tol {
        let third = (hi - lo) / 3.0;
        let (m1, m2) = (lo + third, hi - third);
        if f(m1) <= f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let mut best = (lo, f(lo));
    for x in [0.5 * (lo + hi), hi] {
        let v = f(x);
        if improves(v, x, best.1, best.0) {
            best = (x, v);
        }
    }
    best
}

pub fn numeric_optimal(
    t: Duration,
    profile: &ReferenceProfile,
    prefs: &Preferences,
    formulation: Formulation,
    window: SchedulingWindow,
    options: NumericOptions,
) -> Result<ScheduleSolution, SolverError> {
    window.check()?;
    check_step(options.grid_step)?;
    check_step(options.refine_tol)?;

    let f = |s: f64| su::gu(TimePoint::from_minutes(s), t, profile, prefs, formulation);
    let xs = sample_positions(t, profile, window, options.grid_step);
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();

    let mut peaks: Vec<usize> = (0..xs.len())
        .filter(|&i| {
            let left = i == 0 || vs[i] >= vs[i - 1];
            let right = i + 1 == xs.len() || vs[i] >= vs[i + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&a, &b| vs[b].total_cmp(&vs[a]).then(b.cmp(&a)));
    peaks.truncate(REFINE_CANDIDATES);

    let mut best = (xs[0], vs[0]);
    for (&x, &v) in xs.iter().zip(&vs) {
        if improves(v, x, best.1, best.0) {
            best = (x, v);
        }
    }
    for i in peaks {
        let mut brackets = Vec::with_capacity(2);
        if i > 0 {
            brackets.push((xs[i - 1], xs[i]));
        }
        if i + 1 < xs.len() {
            brackets.push((xs[i], xs[i + 1]));
        }
        for (lo, hi) in brackets {
            let (x, v) = ternary_max(f, lo, hi, options.refine_tol);
            if improves(v, x, best.1, best.0) {
                best = (x, v);
            }
        }
    }

    Ok(solution(
        TimePoint::from_minutes(best.0),
        t,
        profile,
        prefs,
        formulation,
        SolverKind::Numeric,
        false,
    ))
}

/// Exhaustive evaluation on `edt + i * step`, the window end and every
/// breakpoint; highest utility wins, later departure breaks ties.
pub fn grid_oracle(
    t: Duration,
    profile: &ReferenceProfile,
    prefs: &Preferences,
    formulation: Formulation,
    window: SchedulingWindow,
    step: f64,
) -> Result<ScheduleSolution, SolverError> {
    window.check()?;
    check_step(step)?;
    let (lo, hi) = (window.edt.minutes(), window.ldt.minutes());
    let f = |s: f64| su::gu(TimePoint::from_minutes(s), t, profile, prefs, formulation);

    let mut best = (lo, f(lo));
    let mut visit = |s: f64| {
        let v = f(s);
        if improves(v, s, best.1, best.0) {
            best = (s, v);
        }
    };
    let n = ((hi - lo) / step).floor() as u64;
    for i in 1..=n {
        let s = lo + i as f64 * step;
        if s <= hi {
            visit(s);
        }
    }
    visit(hi);
    for b in su::breakpoints(t, profile) {
        let b = b.minutes();
        if b >= lo && b <= hi {
            visit(b);
        }
    }

    Ok(solution(
        TimePoint::from_minutes(best.0),
        t,
        profile,
        prefs,
        formulation,
        SolverKind::Oracle,
        false,
    ))
}

/// Dispatches to the closed form when it applies (`Auto`), or to the
/// requested solver.
pub fn optimal(
    t: Duration,
    profile: &ReferenceProfile,
    prefs: &Preferences,
    formulation: Formulation,
    window: SchedulingWindow,
    mode: SolveMode,
    options: NumericOptions,
) -> Result<ScheduleSolution, SolverError> {
    match mode {
        SolveMode::Closed => closed_form_optimal(t, profile, prefs, formulation, window),
        SolveMode::Numeric => numeric_optimal(t, profile, prefs, formulation, window, options),
        SolveMode::Auto => {
            if formulation != Formulation::Mrp && regime_check(profile, prefs).satisfied {
                closed_form_optimal(t, profile, prefs, formulation, window)
            } else {
                numeric_optimal(t, profile, prefs, formulation, window, options)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su::fixtures::{k0, p0};

    fn d(m: f64) -> Duration {
        Duration::from_minutes(m)
    }

    fn window(lo: f64, hi: f64) -> SchedulingWindow {
        SchedulingWindow::new(TimePoint::from_minutes(lo), TimePoint::from_minutes(hi))
    }

    fn w0() -> SchedulingWindow {
        window(360.0, 490.0)
    }

    #[test]
    fn regime_examples() {
        let r = regime_check(&p0(), &k0());
        assert!(r.satisfied);
        assert_eq!(r.conditions.len(), 4);

        let mut k = k0();
        k.a_phi1 = 0.8;
        let r = regime_check(&p0(), &k);
        assert!(!r.satisfied);
        assert!(!r.condition("unit_exponents").unwrap().holds);

        let mut k = k0();
        k.k_rho2 = 0.6;
        let r = regime_check(&p0(), &k);
        assert!(!r.condition("continuity_at_pat").unwrap().holds);
        assert!(r.condition("continuity_at_pat").unwrap().detail.contains("12"));
        assert!(r.condition("kappa_ordering").unwrap().holds);
    }

    #[test]
    fn closed_form_examples() {
        let (p, k) = (p0(), k0());
        let s = |t: f64, f| {
            closed_form_optimal(d(t), &p, &k, f, w0())
                .unwrap()
                .s_star
                .minutes()
        };
        assert_eq!(s(20.0, Formulation::Dmrd), 460.0);
        assert_eq!(s(35.0, Formulation::Dmrd), 450.0);
        assert_eq!(s(50.0, Formulation::Dmrd), 440.0);
        assert_eq!(s(50.0, Formulation::Mrd), 430.0);

        let sol = closed_form_optimal(d(35.0), &p, &k, Formulation::Dmrd, w0()).unwrap();
        assert!((sol.gu_star - 1.5).abs() < 1e-12);
        assert_eq!(sol.solver, SolverKind::ClosedForm);
        assert!(!sol.clamped);
    }

    #[test]
    fn closed_form_errors() {
        let (p, mut k) = (p0(), k0());
        assert!(matches!(
            closed_form_optimal(d(35.0), &p, &k, Formulation::Mrp, w0()),
            Err(SolverError::UnsupportedFormulation(Formulation::Mrp))
        ));
        assert!(matches!(
            closed_form_optimal(d(35.0), &p, &k, Formulation::Dmrd, window(400.0, 390.0)),
            Err(SolverError::EmptyWindow { .. })
        ));
        k.a_phi1 = 0.8;
        assert!(matches!(
            closed_form_optimal(d(35.0), &p, &k, Formulation::Dmrd, w0()),
            Err(SolverError::RegimeViolation(_))
        ));
    }

    #[test]
    fn closed_form_clamps_to_window() {
        let (p, k) = (p0(), k0());
        let sol = closed_form_optimal(d(35.0), &p, &k, Formulation::Dmrd, window(455.0, 470.0)).unwrap();
        assert_eq!(sol.s_star.minutes(), 455.0);
        assert!(sol.clamped);
        let sol = closed_form_optimal(d(35.0), &p, &k, Formulation::Dmrd, window(360.0, 440.0)).unwrap();
        assert_eq!(sol.s_star.minutes(), 440.0);
        assert!(sol.clamped);
        let oracle = grid_oracle(d(35.0), &p, &k, Formulation::Dmrd, window(360.0, 440.0), 0.01).unwrap();
        assert_eq!(oracle.s_star, sol.s_star);
    }

    #[test]
    fn numeric_examples() {
        let (p, k) = (p0(), k0());
        let opts = NumericOptions::default();
        let sol = numeric_optimal(d(35.0), &p, &k, Formulation::Dmrd, w0(), opts).unwrap();
        assert!((sol.s_star.minutes() - 450.0).abs() <= opts.refine_tol);
        assert!((sol.gu_star - 1.5).abs() <= 1e-6);
        assert_eq!(sol.solver, SolverKind::Numeric);

        let sol = numeric_optimal(d(20.0), &p, &k, Formulation::Mrp, w0(), opts).unwrap();
        assert!((sol.s_star.minutes() - 460.0).abs() <= opts.refine_tol);

        for f in Formulation::ALL {
            let sol = numeric_optimal(d(0.0), &p, &k, f, window(480.0, 480.0), opts).unwrap();
            assert_eq!(sol.s_star.minutes(), 480.0);
        }
    }

    #[test]
    fn numeric_rejects_bad_inputs() {
        let (p, k) = (p0(), k0());
        let bad = NumericOptions { grid_step: 0.0, ..Default::default() };
        assert!(matches!(
            numeric_optimal(d(35.0), &p, &k, Formulation::Dmrd, w0(), bad),
            Err(SolverError::InvalidStep(_))
        ));
        assert!(matches!(
            numeric_optimal(d(35.0), &p, &k, Formulation::Dmrd, window(1.0, 0.0), Default::default()),
            Err(SolverError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn numeric_finds_interior_optimum_for_concave_gain() {
        // With a square-root late gain and linear departure gain the optimum
        // sits strictly inside a segment.
        let p = p0();
        let mut k = k0();
        k.a_psi1 = 0.5;
        let t = d(35.0);
        let sol = numeric_optimal(t, &p, &k, Formulation::Dmrd, w0(), Default::default()).unwrap();
        let oracle = grid_oracle(t, &p, &k, Formulation::Dmrd, w0(), 0.001).unwrap();
        assert!(sol.gu_star >= oracle.gu_star - 1e-9);
        // d/ds [0.5 (s-450) + sqrt(455 - s)] = 0 at s = 454
        assert!((sol.s_star.minutes() - 454.0).abs() < 1e-3, "{}", sol.s_star.minutes());
    }

    #[test]
    fn oracle_examples() {
        let (p, k) = (p0(), k0());
        let sol = grid_oracle(d(35.0), &p, &k, Formulation::Dmrd, w0(), 0.001).unwrap();
        assert_eq!(sol.s_star.minutes(), 450.0);
        let at = |s: f64| su::gu(TimePoint::from_minutes(s), d(35.0), &p, &k, Formulation::Dmrd);
        for (s, expected) in [(425.0, -53.5), (445.0, -3.5), (450.0, 1.5), (455.0, -1.0)] {
            assert!((at(s) - expected).abs() < 1e-12, "gu({s}) = {}", at(s));
        }

        let sol = grid_oracle(d(20.0), &p, &k, Formulation::Dmrd, w0(), 0.001).unwrap();
        assert_eq!(sol.s_star.minutes(), 460.0);
        assert!((sol.gu_star - 13.0).abs() < 1e-12);
        assert_eq!(sol.breakdown.ud, 5.0);
        assert_eq!(sol.breakdown.uae, 10.0);
        assert!((sol.breakdown.ut - -2.0).abs() < 1e-12);

        assert!(matches!(
            grid_oracle(d(20.0), &p, &k, Formulation::Dmrd, window(10.0, 5.0), 0.001),
            Err(SolverError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn oracle_prefers_later_departure_on_ties() {
        // k_phi2 == k_psi2: DMRD utility is flat at 10 for s in [PAL - T, ..]
        let p = p0();
        let k = Preferences::linear(1.0, 1.0, 0.1, 1.0, 0.5, 1.0, 1.0);
        let w = window(460.0, 480.0);
        let sol = grid_oracle(d(30.0), &p, &k, Formulation::Dmrd, w, 0.5).unwrap();
        assert_eq!(sol.s_star.minutes(), 480.0);
        let num = numeric_optimal(d(30.0), &p, &k, Formulation::Dmrd, w, Default::default()).unwrap();
        assert!((num.gu_star - sol.gu_star).abs() < 1e-9);
    }

    #[test]
    fn dispatch() {
        let (p, k) = (p0(), k0());
        let opts = NumericOptions::default();
        let sol = optimal(d(35.0), &p, &k, Formulation::Dmrd, w0(), SolveMode::Auto, opts).unwrap();
        assert_eq!(sol.solver, SolverKind::ClosedForm);
        assert_eq!(sol.s_star.minutes(), 450.0);

        let mut p4 = p0();
        p4.delta = -4.0;
        let mut k8 = k0();
        k8.a_phi1 = 0.8;
        let sol = optimal(d(35.0), &p4, &k8, Formulation::Dmrd, w0(), SolveMode::Auto, opts).unwrap();
        assert_eq!(sol.solver, SolverKind::Numeric);
        assert!(sol.regime.condition("nonpositive_delta").unwrap().holds);

        assert!(matches!(
            optimal(d(35.0), &p, &k8, Formulation::Dmrd, w0(), SolveMode::Closed, opts),
            Err(SolverError::RegimeViolation(_))
        ));
        let sol = optimal(d(35.0), &p, &k, Formulation::Mrp, w0(), SolveMode::Auto, opts).unwrap();
        assert_eq!(sol.solver, SolverKind::Numeric);
    }

    #[test]
    fn ternary_search_on_parabola() {
        let (x, v) = ternary_max(|x| -(x - 1.25) * (x - 1.25), 0.0, 3.0, 1e-9);
        assert!((x - 1.25).abs() < 1e-8);
        assert!(v <= 0.0 && v > -1e-15);
    }
}
