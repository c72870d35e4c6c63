//! Joint route and departure-time choice over a small set of routes that
//! share one reference profile.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::{self, NumericOptions, ScheduleSolution, SchedulingWindow, SolveMode, SolverError, SolverKind};
use crate::su::{self, Formulation, Preferences, ReferenceProfile};
use crate::time::{Duration, TimePoint};

/// Travel time as a function of departure time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TravelTimeProfile {
    Constant(Duration),
    /// `(from, T)` entries with strictly increasing `from`; `T(s)` is the
    /// value of the last entry with `from <= s`, or the first entry's value
    /// before the table starts.
    Steps(Vec<(TimePoint, Duration)>),
}

impl TravelTimeProfile {
    pub fn travel_time(&self, s: TimePoint) -> Duration {
        match self {
            TravelTimeProfile::Constant(t) => *t,
            TravelTimeProfile::Steps(steps) => {
                let idx = steps.partition_point(|(from, _)| *from <= s);
                steps[idx.saturating_sub(1)].1
            }
        }
    }

    fn values(&self) -> Vec<Duration> {
        match self {
            TravelTimeProfile::Constant(t) => vec![*t],
            TravelTimeProfile::Steps(steps) => steps.iter().map(|(_, t)| *t).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub id: String,
    /// Free-flow (minimum) travel time; fixes the latest departure.
    pub t_free: Duration,
    pub profile: TravelTimeProfile,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("route `{id}`: travel time {value} is below the free-flow time {t_free}")]
    BelowFreeFlow { id: String, value: f64, t_free: f64 },
    #[error("route `{0}`: step table is empty")]
    EmptySteps(String),
    #[error("route `{0}`: step table times must be strictly increasing")]
    UnsortedSteps(String),
    #[error("route `{0}`: non-finite step time")]
    NonFiniteStep(String),
}

impl Route {
    pub fn constant(id: impl Into<String>, t_free: f64, t: f64) -> Self {
        Route {
            id: id.into(),
            t_free: Duration::from_minutes(t_free),
            profile: TravelTimeProfile::Constant(Duration::from_minutes(t)),
        }
    }

    pub fn validate(&self) -> Result<(), RouteError> {
        if let TravelTimeProfile::Steps(steps) = &self.profile {
            if steps.is_empty() {
                return Err(RouteError::EmptySteps(self.id.clone()));
            }
            if steps.iter().any(|(from, _)| !from.is_finite()) {
                return Err(RouteError::NonFiniteStep(self.id.clone()));
            }
            if steps.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(RouteError::UnsortedSteps(self.id.clone()));
            }
        }
        for v in self.profile.values() {
            if v < self.t_free {
                return Err(RouteError::BelowFreeFlow {
                    id: self.id.clone(),
                    value: v.minutes(),
                    t_free: self.t_free.minutes(),
                });
            }
        }
        Ok(())
    }
}

/// `PAL - t_free`.
pub fn latest_departure(route: &Route, profile: &ReferenceProfile) -> TimePoint {
    profile.pal - route.t_free
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOutcome {
    pub route_id: String,
    pub window: SchedulingWindow,
    /// `None` when the window is empty.
    pub solution: Option<ScheduleSolution>,
}

impl RouteOutcome {
    pub fn feasible(&self) -> bool {
        self.solution.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSolution {
    pub route_id: String,
    pub per_route: Vec<RouteOutcome>,
    pub best: ScheduleSolution,
}

impl RouteSolution {
    pub fn best_outcome(&self) -> &RouteOutcome {
        self.per_route
            .iter()
            .find(|o| o.route_id == self.route_id)
            .expect("selected route is listed")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("no routes given")]
    NoRoutes,
    #[error("no feasible route: every scheduling window is empty")]
    NoFeasibleRoute,
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub struct TripOptions {
    pub numeric: NumericOptions,
    /// Departure grid pitch for time-dependent travel times.
    pub depart_grid: f64,
}

impl Default for TripOptions {
    fn default() -> Self {
        TripOptions {
            numeric: NumericOptions::default(),
            depart_grid: 0.1,
        }
    }
}

/// Evaluates a step-table route on the departure grid plus every point
/// where either the travel time or a utility branch changes.
fn solve_steps(
    steps: &[(TimePoint, Duration)],
    profile: &ReferenceProfile,
    prefs: &Preferences,
    formulation: Formulation,
    window: SchedulingWindow,
    pitch: f64,
) -> Result<ScheduleSolution, SolverError> {
    if !(pitch.is_finite() && pitch > 0.0) {
        return Err(SolverError::InvalidStep(pitch));
    }
    let (lo, hi) = (window.edt.minutes(), window.ldt.minutes());
    let route = TravelTimeProfile::Steps(steps.to_vec());

    let mut candidates: Vec<f64> = Vec::new();
    let n = ((hi - lo) / pitch).floor() as u64;
    candidates.extend((0..=n).map(|i| lo + i as f64 * pitch).filter(|&s| s <= hi));
    candidates.push(hi);
    for (i, (from, t)) in steps.iter().enumerate() {
        let start = if i == 0 { f64::NEG_INFINITY } else { from.minutes() };
        let end = steps.get(i + 1).map_or(f64::INFINITY, |(next, _)| next.minutes());
        if start >= lo && start <= hi {
            candidates.push(start);
        }
        candidates.extend(
            su::breakpoints(*t, profile)
                .into_iter()
                .map(TimePoint::minutes)
                .filter(|&b| b >= lo && b <= hi && b >= start && b < end),
        );
    }

    let mut best: Option<(f64, f64)> = None;
    for s in candidates {
        let at = TimePoint::from_minutes(s);
        let v = su::gu(at, route.travel_time(at), profile, prefs, formulation);
        if best.is_none_or(|(bs, bv)| v > bv || (v == bv && s > bs)) {
            best = Some((s, v));
        }
    }
    let (s, _) = best.expect("window holds at least one candidate");
    let s = TimePoint::from_minutes(s);
    let breakdown = su::gross_utility(s, route.travel_time(s), profile, prefs, formulation);
    Ok(ScheduleSolution {
        s_star: s,
        gu_star: breakdown.gu,
        breakdown,
        solver: SolverKind::Numeric,
        clamped: false,
        regime: solver::regime_check(profile, prefs),
    })
}

/// Picks the route and departure time with the highest gross utility.
/// Routes whose window `[EDT, PAL - t_free]` is empty are kept in the
/// result without a solution. Ties between routes go to the one listed
/// first.
pub fn schedule_trip(
    routes: &[Route],
    profile: &ReferenceProfile,
    prefs: &Preferences,
    formulation: Formulation,
    options: &TripOptions,
) -> Result<RouteSolution, NetworkError> {
    if routes.is_empty() {
        return Err(NetworkError::NoRoutes);
    }
    let mut per_route = Vec::with_capacity(routes.len());
    let mut best: Option<(usize, f64)> = None;
    for route in routes {
        route.validate()?;
        let window = SchedulingWindow::new(profile.edt, latest_departure(route, profile));
        let solution = if window.is_empty() {
            None
        } else {
            Some(match &route.profile {
                TravelTimeProfile::Constant(t) => solver::optimal(
                    *t,
                    profile,
                    prefs,
                    formulation,
                    window,
                    SolveMode::Auto,
                    options.numeric,
                )?,
                TravelTimeProfile::Steps(steps) => {
                    solve_steps(steps, profile, prefs, formulation, window, options.depart_grid)?
                }
            })
        };
        if let Some(sol) = &solution {
            if best.is_none_or(|(_, gu)| sol.gu_star > gu) {
                best = Some((per_route.len(), sol.gu_star));
            }
        }
        per_route.push(RouteOutcome {
            route_id: route.id.clone(),
            window,
            solution,
        });
    }
    let (idx, _) = best.ok_or(NetworkError::NoFeasibleRoute)?;
    let chosen = &per_route[idx];
    Ok(RouteSolution {
        route_id: chosen.route_id.clone(),
        best: chosen.solution.clone().expect("best route is feasible"),
        per_route,
    })
}
