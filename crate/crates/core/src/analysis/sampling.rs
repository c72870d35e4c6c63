//! Random parameter draws for the verifiers.
//!
//! Every draw is made from a [`SplitMix64`] in the order written here, so
//! a `(seed, trial)` pair always reproduces the same instance.

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;
use crate::solver::SchedulingWindow;
use crate::su::{Formulation, Preferences, ReferenceProfile};
use crate::time::{Duration, TimePoint};

pub const SAMPLE_NDT: f64 = 450.0;
/// EDT sits this far before NDT, which keeps every unconstrained optimum
/// for the sampled travel times inside the window.
pub const SAMPLE_EDT_LEAD: f64 = 180.0;
/// Travel times are drawn up to `PAL - NDT + TRAVEL_TAIL`.
pub const TRAVEL_TAIL: f64 = 60.0;
const KAPPA_LO: f64 = 0.05;
const KAPPA_HI: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub profile: ReferenceProfile,
    pub preferences: Preferences,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeCase {
    /// `T < PAT - NDT`
    Case1,
    /// `PAT - NDT <= T <= PAL - NDT`
    Case2,
    /// `T > PAL - NDT`
    Case3,
}

impl RegimeCase {
    pub const ALL: [RegimeCase; 3] = [RegimeCase::Case1, RegimeCase::Case2, RegimeCase::Case3];

    pub fn classify(t: Duration, profile: &ReferenceProfile) -> Self {
        let t = t.minutes();
        if t < profile.pat.since(profile.ndt) {
            RegimeCase::Case1
        } else if t <= profile.pal.since(profile.ndt) {
            RegimeCase::Case2
        } else {
            RegimeCase::Case3
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegimeCase::Case1 => "case1",
            RegimeCase::Case2 => "case2",
            RegimeCase::Case3 => "case3",
        }
    }
}

/// NDT fixed at 07:30; `PAT - NDT ~ U[10, 60)`, `PAT - PAE ~ U[5, 60)`,
/// `PAL - PAT ~ U[5, 60)`, EDT three hours before NDT.
fn sample_times(rng: &mut SplitMix64) -> ReferenceProfile {
    let ndt = SAMPLE_NDT;
    let pat = ndt + rng.uniform(10.0, 60.0);
    let pae = pat - rng.uniform(5.0, 60.0);
    let pal = pat + rng.uniform(5.0, 60.0);
    ReferenceProfile {
        ndt: TimePoint::from_minutes(ndt),
        pae: TimePoint::from_minutes(pae),
        pat: TimePoint::from_minutes(pat),
        pal: TimePoint::from_minutes(pal),
        edt: TimePoint::from_minutes(ndt - SAMPLE_EDT_LEAD),
        delta: 0.0,
    }
}

fn kappa(rng: &mut SplitMix64) -> f64 {
    rng.log_uniform(KAPPA_LO, KAPPA_HI)
}

/// Linear preferences satisfying the closed-form regime.
///
/// Draw order: times, then `(k_phi1, k_phi2, k_psi1, k_psi2)` log-uniform
/// on `[0.05, 5)` redrawn together until `k_psi2 > k_phi1 > k_psi1 >
/// k_phi2`, then `k_t`, then a `k_rho1` candidate. `k_rho2` is set so the
/// arrival utility is continuous at PAT and `k_rho1` is raised to `k_rho2`
/// if needed. `delta = 0`.
pub fn regime_instance(rng: &mut SplitMix64) -> Instance {
    let profile = sample_times(rng);
    let (k_phi1, k_phi2, k_psi1, k_psi2) = loop {
        let draw = (kappa(rng), kappa(rng), kappa(rng), kappa(rng));
        let (phi1, phi2, psi1, psi2) = draw;
        if psi2 > phi1 && phi1 > psi1 && psi1 > phi2 {
            break draw;
        }
    };
    let k_t = kappa(rng);
    let k_rho1_draw = kappa(rng);
    let k_rho2 = k_psi1 * profile.pal.since(profile.pat) / profile.pat.since(profile.pae);
    let k_rho1 = k_rho1_draw.max(k_rho2);
    Instance {
        profile,
        preferences: Preferences::linear(k_phi1, k_phi2, k_t, k_rho1, k_rho2, k_psi1, k_psi2),
    }
}

/// Valid but otherwise unrestricted parameters: loss aversion and
/// `k_psi2 >= k_phi2` hold; half the draws have concave/convex exponents
/// in `[0.3, 1)`, half have a negative late jump.
pub fn general_instance(rng: &mut SplitMix64) -> Instance {
    let mut profile = sample_times(rng);
    let k_phi2 = kappa(rng);
    let k_phi1 = k_phi2 * rng.uniform(1.0, 4.0);
    let k_psi1 = kappa(rng);
    let k_psi2 = (k_psi1 * rng.uniform(1.0, 4.0)).max(k_phi2 * rng.uniform(1.0, 2.0));
    let k_rho2 = kappa(rng);
    let k_rho1 = k_rho2 * rng.uniform(1.0, 4.0);
    let k_t = kappa(rng);
    let mut preferences = Preferences::linear(k_phi1, k_phi2, k_t, k_rho1, k_rho2, k_psi1, k_psi2);
    if rng.chance(0.5) {
        preferences.a_phi1 = rng.uniform(0.3, 1.0);
        preferences.a_phi2 = rng.uniform(0.3, 1.0);
        preferences.a_rho1 = rng.uniform(0.3, 1.0);
        preferences.a_rho2 = rng.uniform(0.3, 1.0);
        preferences.a_psi1 = rng.uniform(0.3, 1.0);
        preferences.a_psi2 = rng.uniform(0.3, 1.0);
    }
    if rng.chance(0.5) {
        profile.delta = -rng.uniform(0.0, 5.0);
    }
    Instance { profile, preferences }
}

/// Linear preferences with `k_psi2 < k_phi2`; every other constraint
/// holds.
pub fn unschedulable_instance(rng: &mut SplitMix64) -> Instance {
    let mut profile = sample_times(rng);
    let k_phi2 = kappa(rng);
    let k_psi2 = k_phi2 * rng.uniform(0.05, 0.95);
    let k_psi1 = k_psi2 * rng.uniform(0.2, 1.0);
    let k_phi1 = k_phi2 * rng.uniform(1.0, 4.0);
    let k_rho2 = kappa(rng);
    let k_rho1 = k_rho2 * rng.uniform(1.0, 4.0);
    let k_t = kappa(rng);
    profile.delta = -rng.uniform(0.0, 5.0);
    Instance {
        profile,
        preferences: Preferences::linear(k_phi1, k_phi2, k_t, k_rho1, k_rho2, k_psi1, k_psi2),
    }
}

pub fn max_travel_time(profile: &ReferenceProfile) -> f64 {
    profile.pal.since(profile.ndt) + TRAVEL_TAIL
}

/// Travel time drawn uniformly within one case's interval.
pub fn travel_time_in_case(rng: &mut SplitMix64, profile: &ReferenceProfile, case: RegimeCase) -> Duration {
    let lower = profile.pat.since(profile.ndt);
    let upper = profile.pal.since(profile.ndt);
    let t = match case {
        RegimeCase::Case1 => rng.uniform_open(0.0, lower),
        RegimeCase::Case2 => rng.uniform(lower, upper),
        RegimeCase::Case3 => rng.uniform_open(upper, upper + TRAVEL_TAIL),
    };
    Duration::from_minutes(t)
}

pub fn travel_time_any(rng: &mut SplitMix64, profile: &ReferenceProfile) -> Duration {
    Duration::from_minutes(rng.uniform_open(0.0, max_travel_time(profile)))
}

pub fn formulation_any(rng: &mut SplitMix64) -> Formulation {
    Formulation::ALL[rng.below(Formulation::ALL.len())]
}

/// `[EDT, PAL - T/2]`: a route whose free-flow time is half the
/// experienced travel time.
pub fn verification_window(profile: &ReferenceProfile, t: Duration) -> SchedulingWindow {
    SchedulingWindow::for_free_flow(profile, Duration::from_minutes(0.5 * t.minutes()))
}
