//! Scheduling utility: the departure, travel-time, early-arrival and
//! late-arrival components and their sum for each formulation.
//!
//! All branch tests are carried out in departure coordinates: an arrival
//! `s + T <= PAE` is tested as `s <= PAE - T`, and the power-function base
//! is `(PAE - T) - s`. The two readings agree in exact arithmetic; the
//! departure form guarantees that a departure placed exactly on a
//! breakpoint (e.g. `s = PAL - T`) lands on the intended side of it.

mod validate;

pub use validate::{validate, Severity, Violation};

use serde::{Deserialize, Serialize};

use crate::time::{Duration, TimePoint};

/// Reference points for one traveler plus the earliest departure time and
/// the extra penalty applied once arrival passes PAL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceProfile {
    /// Normal departure time.
    pub ndt: TimePoint,
    /// Preferred earliest arrival.
    pub pae: TimePoint,
    /// Preferred arrival.
    pub pat: TimePoint,
    /// Preferred latest arrival.
    pub pal: TimePoint,
    /// Earliest departure time.
    pub edt: TimePoint,
    /// Jump applied to late-arrival utility past PAL; `<= 0`.
    #[serde(default)]
    pub delta: f64,
}

impl ReferenceProfile {
    /// Every time point moved by `minutes`.
    pub fn shifted(&self, minutes: f64) -> Self {
        ReferenceProfile {
            ndt: self.ndt.shifted(minutes),
            pae: self.pae.shifted(minutes),
            pat: self.pat.shifted(minutes),
            pal: self.pal.shifted(minutes),
            edt: self.edt.shifted(minutes),
            delta: self.delta,
        }
    }

    /// Arrival-utility jump at PAT: the `UAE + UAL` value just after minus
    /// just before arrival reaches PAT.
    pub fn pat_jump(&self, prefs: &Preferences) -> f64 {
        let late_side = prefs.k_psi1 * power(self.pal.since(self.pat), prefs.a_psi1);
        let early_side = prefs.k_rho2 * power(self.pat.since(self.pae), prefs.a_rho2);
        late_side - early_side
    }
}

/// Preference weights (`k_*`) and curvature exponents (`a_*`).
///
/// `phi` is the departure component, `rho` early arrival, `psi` late
/// arrival; index 1 is the branch before the reference point and 2 the
/// branch after it. In JSON the six exponents form one `alpha` array in
/// the order `[a_phi1, a_phi2, a_rho1, a_rho2, a_psi1, a_psi2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PreferencesRepr", into = "PreferencesRepr")]
pub struct Preferences {
    pub k_phi1: f64,
    pub k_phi2: f64,
    pub k_t: f64,
    pub k_rho1: f64,
    pub k_rho2: f64,
    pub k_psi1: f64,
    pub k_psi2: f64,
    pub a_phi1: f64,
    pub a_phi2: f64,
    pub a_rho1: f64,
    pub a_rho2: f64,
    pub a_psi1: f64,
    pub a_psi2: f64,
}

impl Preferences {
    /// Linear preferences (every exponent equal to one).
    pub fn linear(
        k_phi1: f64,
        k_phi2: f64,
        k_t: f64,
        k_rho1: f64,
        k_rho2: f64,
        k_psi1: f64,
        k_psi2: f64,
    ) -> Self {
        Preferences {
            k_phi1,
            k_phi2,
            k_t,
            k_rho1,
            k_rho2,
            k_psi1,
            k_psi2,
            a_phi1: 1.0,
            a_phi2: 1.0,
            a_rho1: 1.0,
            a_rho2: 1.0,
            a_psi1: 1.0,
            a_psi2: 1.0,
        }
    }

    pub fn alpha(&self) -> [f64; 6] {
        [
            self.a_phi1,
            self.a_phi2,
            self.a_rho1,
            self.a_rho2,
            self.a_psi1,
            self.a_psi2,
        ]
    }

    pub fn kappa(&self) -> [f64; 7] {
        [
            self.k_phi1,
            self.k_phi2,
            self.k_t,
            self.k_rho1,
            self.k_rho2,
            self.k_psi1,
            self.k_psi2,
        ]
    }

    /// All weights multiplied by `factor`; exponents untouched.
    pub fn scaled(&self, factor: f64) -> Self {
        Preferences {
            k_phi1: self.k_phi1 * factor,
            k_phi2: self.k_phi2 * factor,
            k_t: self.k_t * factor,
            k_rho1: self.k_rho1 * factor,
            k_rho2: self.k_rho2 * factor,
            k_psi1: self.k_psi1 * factor,
            k_psi2: self.k_psi2 * factor,
            ..*self
        }
    }
}

fn default_alpha() -> [f64; 6] {
    [1.0; 6]
}

#[derive(Serialize, Deserialize)]
struct PreferencesRepr {
    k_phi1: f64,
    k_phi2: f64,
    k_t: f64,
    k_rho1: f64,
    k_rho2: f64,
    k_psi1: f64,
    k_psi2: f64,
    #[serde(default = "default_alpha")]
    alpha: [f64; 6],
}

impl From<PreferencesRepr> for Preferences {
    fn from(r: PreferencesRepr) -> Self {
        let [a_phi1, a_phi2, a_rho1, a_rho2, a_psi1, a_psi2] = r.alpha;
        Preferences {
            k_phi1: r.k_phi1,
            k_phi2: r.k_phi2,
            k_t: r.k_t,
            k_rho1: r.k_rho1,
            k_rho2: r.k_rho2,
            k_psi1: r.k_psi1,
            k_psi2: r.k_psi2,
            a_phi1,
            a_phi2,
            a_rho1,
            a_rho2,
            a_psi1,
            a_psi2,
        }
    }
}

impl From<Preferences> for PreferencesRepr {
    fn from(p: Preferences) -> Self {
        PreferencesRepr {
            k_phi1: p.k_phi1,
            k_phi2: p.k_phi2,
            k_t: p.k_t,
            k_rho1: p.k_rho1,
            k_rho2: p.k_rho2,
            k_psi1: p.k_psi1,
            k_psi2: p.k_psi2,
            alpha: p.alpha(),
        }
    }
}

/// Utility components of a scheduled trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Ud,
    Ut,
    Uae,
    Ual,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::Ud, Component::Ut, Component::Uae, Component::Ual];

    pub fn name(self) -> &'static str {
        match self {
            Component::Ud => "ud",
            Component::Ut => "ut",
            Component::Uae => "uae",
            Component::Ual => "ual",
        }
    }
}

/// Which components a scheduling utility sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// Arrival components only.
    Mrp,
    /// Travel time plus arrival.
    Mrd,
    /// Departure, travel time and arrival.
    #[default]
    Dmrd,
}

impl Formulation {
    pub const ALL: [Formulation; 3] = [Formulation::Mrp, Formulation::Mrd, Formulation::Dmrd];

    pub fn includes(self, component: Component) -> bool {
        match (self, component) {
            (_, Component::Uae | Component::Ual) => true,
            (Formulation::Mrp, _) => false,
            (Formulation::Mrd, Component::Ut) => true,
            (Formulation::Mrd, Component::Ud) => false,
            (Formulation::Dmrd, _) => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Mrp => "mrp",
            Formulation::Mrd => "mrd",
            Formulation::Dmrd => "dmrd",
        }
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mrp" => Ok(Formulation::Mrp),
            "mrd" => Ok(Formulation::Mrd),
            "dmrd" => Ok(Formulation::Dmrd),
            other => Err(format!("unknown formulation `{other}` (expected mrp, mrd or dmrd)")),
        }
    }
}

/// Per-component utilities of one `(s, T)` pair. Components the
/// formulation leaves out are stored as zero and listed in `excluded`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityBreakdown {
    pub formulation: Formulation,
    pub ud: f64,
    pub ut: f64,
    pub uae: f64,
    pub ual: f64,
    pub gu: f64,
    pub excluded: Vec<Component>,
}

impl UtilityBreakdown {
    pub fn component(&self, c: Component) -> f64 {
        match c {
            Component::Ud => self.ud,
            Component::Ut => self.ut,
            Component::Uae => self.uae,
            Component::Ual => self.ual,
        }
    }
}

/// `base^exponent` for a non-negative base, exact for `exponent == 1`.
#[inline]
pub(crate) fn power(base: f64, exponent: f64) -> f64 {
    debug_assert!(base >= 0.0 || base.is_nan(), "negative power base {base}");
    if exponent == 1.0 {
        base
    } else {
        base.powf(exponent)
    }
}

// `-k * 0` yields -0.0; adding +0.0 folds it back to +0.0.
#[inline]
fn unsigned_zero(v: f64) -> f64 {
    v + 0.0
}

/// Departure utility: loss for leaving before NDT, gain for leaving after.
pub fn departure_utility(s: TimePoint, profile: &ReferenceProfile, prefs: &Preferences) -> f64 {
    let ndt = profile.ndt.minutes();
    let s = s.minutes();
    let v = if s <= ndt {
        -prefs.k_phi1 * power(ndt - s, prefs.a_phi1)
    } else {
        prefs.k_phi2 * power(s - ndt, prefs.a_phi2)
    };
    unsigned_zero(v)
}

pub fn travel_time_utility(t: Duration, prefs: &Preferences) -> f64 {
    unsigned_zero(-prefs.k_t * t.minutes())
}

/// Early-arrival utility: loss before PAE, gain on `(PAE, PAT]`, zero after.
pub fn early_arrival_utility(
    s: TimePoint,
    t: Duration,
    profile: &ReferenceProfile,
    prefs: &Preferences,
) -> f64 {
    let s = s.minutes();
    let pae = profile.pae.minutes() - t.minutes();
    let pat = profile.pat.minutes() - t.minutes();
    let v = if s <= pae {
        -prefs.k_rho1 * power(pae - s, prefs.a_rho1)
    } else if s <= pat {
        prefs.k_rho2 * power(s - pae, prefs.a_rho2)
    } else {
        0.0
    };
    unsigned_zero(v)
}

/// Late-arrival utility: gain on `(PAT, PAL]`, loss plus `delta` after PAL,
/// zero up to PAT.
pub fn late_arrival_utility(
    s: TimePoint,
    t: Duration,
    profile: &ReferenceProfile,
    prefs: &Preferences,
) -> f64 {
    let s = s.minutes();
    let pat = profile.pat.minutes() - t.minutes();
    let pal = profile.pal.minutes() - t.minutes();
    let v = if s <= pat {
        0.0
    } else if s <= pal {
        prefs.k_psi1 * power(pal - s, prefs.a_psi1)
    } else {
        -prefs.k_psi2 * power(s - pal, prefs.a_psi2) + profile.delta
    };
    unsigned_zero(v)
}

pub fn gross_utility(
    s: TimePoint,
    t: Duration,
    profile: &ReferenceProfile,
    prefs: &Preferences,
    formulation: Formulation,
) -> UtilityBreakdown {
    let pick = |c: Component, f: &dyn Fn() -> f64| if formulation.includes(c) { f() } else { 0.0 };
    let ud = pick(Component::Ud, &|| departure_utility(s, profile, prefs));
    let ut = pick(Component::Ut, &|| travel_time_utility(t, prefs));
    let uae = pick(Component::Uae, &|| early_arrival_utility(s, t, profile, prefs));
    let ual = pick(Component::Ual, &|| late_arrival_utility(s, t, profile, prefs));
    let excluded = Component::ALL
        .into_iter()
        .filter(|c| !formulation.includes(*c))
        .collect();
    UtilityBreakdown {
        formulation,
        ud,
        ut,
        uae,
        ual,
        gu: ud + ut + uae + ual,
        excluded,
    }
}

/// Gross utility only, without building a breakdown.
#[inline]
pub fn gu(
    s: TimePoint,
    t: Duration,
    profile: &ReferenceProfile,
    prefs: &Preferences,
    formulation: Formulation,
) -> f64 {
    let ud = if formulation.includes(Component::Ud) {
        departure_utility(s, profile, prefs)
    } else {
        0.0
    };
    let ut = if formulation.includes(Component::Ut) {
        travel_time_utility(t, prefs)
    } else {
        0.0
    };
    ud + ut + early_arrival_utility(s, t, profile, prefs) + late_arrival_utility(s, t, profile, prefs)
}

/// Departure times at which some component switches branch for travel
/// time `t`: NDT, PAE−T, PAT−T and PAL−T, sorted and deduplicated.
pub fn breakpoints(t: Duration, profile: &ReferenceProfile) -> Vec<TimePoint> {
    let mut points = vec![
        profile.ndt,
        profile.pae - t,
        profile.pat - t,
        profile.pal - t,
    ];
    points.sort_by(|a, b| a.minutes().total_cmp(&b.minutes()));
    points.dedup();
    points
}
