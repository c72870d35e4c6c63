use depart_sched::analysis::sampling::{self, Instance};
use depart_sched::analysis::{sweep_congestion, SweepRow};
use depart_sched::cli::{sweep_csv, SWEEP_HEADER};
use depart_sched::network::{schedule_trip, Route, TripOptions};
use depart_sched::rng::SplitMix64;
use depart_sched::solver::{
    self, grid_oracle, numeric_optimal, NumericOptions, SchedulingWindow, SolveMode,
};
use depart_sched::su::{self, Component, Formulation, Preferences, ReferenceProfile, UtilityBreakdown};
use depart_sched::time::{Duration, TimePoint};
use proptest::prelude::*;

fn regime(seed: u64) -> Instance {
    sampling::regime_instance(&mut SplitMix64::new(seed))
}

fn general(seed: u64) -> Instance {
    sampling::general_instance(&mut SplitMix64::new(seed))
}

fn formulation() -> impl Strategy<Value = Formulation> {
    prop_oneof![Just(Formulation::Mrp), Just(Formulation::Mrd), Just(Formulation::Dmrd)]
}

fn tp(m: f64) -> TimePoint {
    TimePoint::from_minutes(m)
}

fn d(m: f64) -> Duration {
    Duration::from_minutes(m)
}

/// Written from the component definitions in arrival time `a = s + T`.
fn reference_gu(s: f64, t: f64, p: &ReferenceProfile, k: &Preferences, f: Formulation) -> f64 {
    let (ndt, pae, pat, pal) = (p.ndt.minutes(), p.pae.minutes(), p.pat.minutes(), p.pal.minutes());
    let a = s + t;
    let ud = if s <= ndt {
        -k.k_phi1 * (ndt - s).powf(k.a_phi1)
    } else {
        k.k_phi2 * (s - ndt).powf(k.a_phi2)
    };
    let ut = -k.k_t * t;
    let uae = if a <= pae {
        -k.k_rho1 * (pae - a).powf(k.a_rho1)
    } else if a <= pat {
        k.k_rho2 * (a - pae).powf(k.a_rho2)
    } else {
        0.0
    };
    let ual = if a <= pat {
        0.0
    } else if a <= pal {
        k.k_psi1 * (pal - a).powf(k.a_psi1)
    } else {
        -k.k_psi2 * (a - pal).powf(k.a_psi2) + p.delta
    };
    match f {
        Formulation::Mrp => uae + ual,
        Formulation::Mrd => ut + uae + ual,
        Formulation::Dmrd => ud + ut + uae + ual,
    }
}

fn min_distance_to_breakpoints(s: f64, t: f64, p: &ReferenceProfile) -> f64 {
    su::breakpoints(d(t), p)
        .into_iter()
        .map(|b| (b.minutes() - s).abs())
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn matches_reference_away_from_breakpoints(seed in any::<u64>(), s in 270.0f64..560.0, t in 0.0f64..150.0, f in formulation()) {
        let inst = general(seed);
        let (p, k) = (&inst.profile, &inst.preferences);
        prop_assume!(min_distance_to_breakpoints(s, t, p) > 1e-6);
        let got = su::gu(tp(s), d(t), p, k, f);
        let want = reference_gu(s, t, p, k, f);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{got} vs {want}");
    }

    #[test]
    fn gu_is_sum_of_included_components(seed in any::<u64>(), s in 270.0f64..560.0, t in 0.0f64..150.0, f in formulation()) {
        let inst = general(seed);
        let b = su::gross_utility(tp(s), d(t), &inst.profile, &inst.preferences, f);
        let sum: f64 = Component::ALL.iter().filter(|c| f.includes(**c)).map(|c| b.component(*c)).sum();
        prop_assert!((b.gu - sum).abs() <= 1e-12);
        for c in &b.excluded {
            prop_assert!(!f.includes(*c));
            prop_assert_eq!(b.component(*c), 0.0);
        }
        prop_assert_eq!(b.gu, su::gu(tp(s), d(t), &inst.profile, &inst.preferences, f));
    }

    #[test]
    fn time_shift_invariance(seed in any::<u64>(), s in 270.0f64..560.0, t in 0.0f64..150.0, shift in -250.0f64..250.0, f in formulation()) {
        let inst = general(seed);
        let p = &inst.profile;
        prop_assume!(min_distance_to_breakpoints(s, t, p) > 1e-3);
        let base = su::gu(tp(s), d(t), p, &inst.preferences, f);
        let moved = su::gu(tp(s + shift), d(t), &p.shifted(shift), &inst.preferences, f);
        prop_assert!((base - moved).abs() <= 1e-9, "{base} vs {moved}");
    }

    #[test]
    fn sign_structure(seed in any::<u64>(), s in 270.0f64..560.0, t in 0.0f64..150.0) {
        let inst = general(seed);
        let (p, k) = (&inst.profile, &inst.preferences);
        let a = s + t;
        let ud = su::departure_utility(tp(s), p, k);
        let ut = su::travel_time_utility(d(t), k);
        let uae = su::early_arrival_utility(tp(s), d(t), p, k);
        let ual = su::late_arrival_utility(tp(s), d(t), p, k);
        prop_assert!(ut <= 0.0);
        if s < p.ndt.minutes() { prop_assert!(ud < 0.0) } else { prop_assert!(ud >= 0.0) }
        let (pae, pat, pal) = (p.pae.minutes(), p.pat.minutes(), p.pal.minutes());
        if a < pae - 1e-9 {
            prop_assert!(uae < 0.0 && ual == 0.0);
        } else if a > pae + 1e-9 && a < pat - 1e-9 {
            prop_assert!(uae > 0.0 && ual == 0.0);
        } else if a > pat + 1e-9 && a < pal - 1e-9 {
            prop_assert!(uae == 0.0 && ual > 0.0);
        } else if a > pal + 1e-9 {
            prop_assert!(uae == 0.0 && ual < 0.0);
        }
    }

    #[test]
    fn continuity_and_jumps_at_breakpoints(seed in any::<u64>(), t in 0.5f64..150.0, delta in -5.0f64..0.0, break_r3 in any::<bool>()) {
        let mut inst = regime(seed);
        inst.profile.delta = delta;
        if break_r3 {
            inst.preferences.k_rho2 *= 0.5;
        }
        let (p, k) = (&inst.profile, &inst.preferences);
        let eps = 1e-11;
        let g = |s: f64| su::gu(tp(s), d(t), p, k, Formulation::Dmrd);
        let pal_s = (p.pal - d(t)).minutes();
        let pat_s = (p.pat - d(t)).minutes();
        for b in su::breakpoints(d(t), p) {
            let b = b.minutes();
            let jump = g(b + eps) - g(b - eps);
            let mut expected = 0.0;
            if b == pal_s {
                expected += delta;
            }
            if b == pat_s {
                expected += p.pat_jump(k);
            }
            prop_assert!((jump - expected).abs() <= 1e-9, "b = {b}: jump {jump}, expected {expected}");
            // right-continuous everywhere except the late jump
            if b != pal_s && b != pat_s {
                prop_assert!((g(b) - g(b + eps)).abs() <= 1e-9);
            }
        }
        // in the regime the only jump is the late-arrival one, of size |delta|
        if !break_r3 && (pal_s - p.ndt.minutes()).abs() > 1e-6 {
            let jump = g(pal_s + eps) - g(pal_s - eps);
            prop_assert!((jump.abs() - delta.abs()).abs() <= 1e-9);
        }
    }

    #[test]
    fn unimodal_in_regime(seed in any::<u64>(), t in 0.5f64..150.0, f in prop_oneof![Just(Formulation::Mrd), Just(Formulation::Dmrd)]) {
        let inst = regime(seed);
        let (p, k) = (&inst.profile, &inst.preferences);
        let w = sampling::verification_window(p, d(t));
        prop_assume!(!w.is_empty());
        let (lo, hi) = (w.edt.minutes(), w.ldt.minutes());
        let step = 0.05;
        let n = ((hi - lo) / step) as usize;
        let values: Vec<f64> = (0..=n).map(|i| su::gu(tp(lo + i as f64 * step), d(t), p, k, f)).collect();
        let tol = 1e-9;
        let peak = values.iter().enumerate().fold(0, |best, (i, v)| if *v > values[best] + tol { i } else { best });
        for i in 1..=peak {
            prop_assert!(values[i] >= values[i - 1] - tol, "decrease before peak at {}", lo + i as f64 * step);
        }
        for i in peak + 1..values.len() {
            prop_assert!(values[i] <= values[i - 1] + tol, "increase after peak at {}", lo + i as f64 * step);
        }
    }

    #[test]
    fn numeric_dominates_coarse_oracle(seed in any::<u64>(), tf in 0.0f64..1.0, f in formulation()) {
        let inst = general(seed);
        let (p, k) = (&inst.profile, &inst.preferences);
        let t = d(tf * sampling::max_travel_time(p));
        let w = sampling::verification_window(p, t);
        let num = numeric_optimal(t, p, k, f, w, NumericOptions::default()).unwrap();
        let orc = grid_oracle(t, p, k, f, w, 0.01).unwrap();
        prop_assert!(num.gu_star >= orc.gu_star - 1e-9, "{} < {}", num.gu_star, orc.gu_star);
        prop_assert!(num.s_star >= w.edt && num.s_star <= w.ldt);
        prop_assert!((su::gu(num.s_star, t, p, k, f) - num.gu_star).abs() <= 1e-9);
    }

    #[test]
    fn scaling_keeps_the_argmax(seed in any::<u64>(), tf in 0.0f64..1.0, c in 0.01f64..100.0, f in formulation()) {
        let inst = general(seed);
        let (p, k) = (&inst.profile, &inst.preferences);
        let t = d(tf * sampling::max_travel_time(p));
        let w = sampling::verification_window(p, t);
        let base = grid_oracle(t, p, k, f, w, 0.05).unwrap();
        // delta is a utility, so it scales with the weights
        let scaled_profile = ReferenceProfile { delta: p.delta * c, ..*p };
        let scaled = grid_oracle(t, &scaled_profile, &k.scaled(c), f, w, 0.05).unwrap();
        // same point, or an exact tie under the original weights
        let at = su::gu(scaled.s_star, t, p, k, f);
        prop_assert!(scaled.s_star == base.s_star || (at - base.gu_star).abs() <= 1e-9 * (1.0 + base.gu_star.abs()));
        prop_assert!((scaled.gu_star - c * base.gu_star).abs() <= 1e-9 * (1.0 + (c * base.gu_star).abs()));
    }

    #[test]
    fn network_picks_the_best_route(seed in any::<u64>(), ts in prop::collection::vec((1.0f64..60.0, 0.0f64..1.0), 1..5), f in formulation()) {
        let inst = general(seed);
        let (p, k) = (&inst.profile, &inst.preferences);
        let routes: Vec<Route> = ts
            .iter()
            .enumerate()
            .map(|(i, &(t, r))| Route::constant(format!("r{i}"), t * r, t))
            .collect();
        let options = TripOptions::default();
        let sol = schedule_trip(&routes, p, k, f, &options).unwrap();
        for outcome in &sol.per_route {
            let s = outcome.solution.as_ref().unwrap();
            prop_assert!(sol.best.gu_star >= s.gu_star);
        }
        for route in &routes {
            let single = schedule_trip(std::slice::from_ref(route), p, k, f, &options).unwrap();
            let w = SchedulingWindow::new(p.edt, p.pal - route.t_free);
            let t = match route.profile {
                depart_sched::network::TravelTimeProfile::Constant(t) => t,
                _ => unreachable!(),
            };
            let direct = solver::optimal(t, p, k, f, w, SolveMode::Auto, options.numeric).unwrap();
            prop_assert_eq!(&single.best, &direct);
        }
    }

    #[test]
    fn breakdown_json_round_trip(seed in any::<u64>(), s in 270.0f64..560.0, t in 0.0f64..150.0, f in formulation()) {
        let inst = general(seed);
        let b = su::gross_utility(tp(s), d(t), &inst.profile, &inst.preferences, f);
        let back: UtilityBreakdown = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        prop_assert_eq!(back, b);
        let inst_back: Instance = serde_json::from_str(&serde_json::to_string(&inst).unwrap()).unwrap();
        prop_assert_eq!(inst_back, inst);
    }

    #[test]
    fn sweep_csv_is_rectangular(t_min in 1.0f64..20.0, span in 0.0f64..80.0, step in 0.5f64..10.0) {
        let inst = depart_sched::cli::Config::load(None).unwrap().config;
        let rows = sweep_congestion(&inst.profile, &inst.preferences, t_min, t_min + span, step).unwrap();
        let csv = sweep_csv(&rows).unwrap();
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        prop_assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), SWEEP_HEADER.to_vec());
        let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        prop_assert_eq!(records.len(), rows.len());
        for (rec, row) in records.iter().zip(&rows) {
            prop_assert_eq!(rec.len(), SWEEP_HEADER.len());
            let t: f64 = rec[0].parse().unwrap();
            prop_assert!((t - row.t.minutes()).abs() <= 5e-7);
        }
        let json = serde_json::to_string(&rows).unwrap();
        let back: Vec<SweepRow> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, rows);
    }
}
