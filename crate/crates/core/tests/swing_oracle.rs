//! The closed-form swing solution against a fixed-step RK4 integration.

use freqsec::model::{FrServiceSpec, FrequencyLimits, SystemState};
use freqsec::swing::{check_security, frequency_deviation, nadir, FrTrajectory};
use proptest::prelude::*;

const DT: f64 = 1e-3;

/// FR(t) written directly from the ramp definition.
fn ramp_sum(services: &[FrServiceSpec], amounts: &[f64], t: f64) -> f64 {
    services
        .iter()
        .zip(amounts)
        .map(|(s, &r)| {
            if t <= s.delay {
                0.0
            } else if t >= s.delay + s.delivery_time {
                r
            } else {
                r * (t - s.delay) / s.delivery_time
            }
        })
        .sum()
}

/// Max deviation and its time over [0, t_end] by RK4 on
/// dΔf/dt = f0/(2H)·(P_L − FR(t)).
fn rk4_nadir(
    state: &SystemState,
    lim: &FrequencyLimits,
    services: &[FrServiceSpec],
    t_end: f64,
) -> (f64, f64, Vec<f64>) {
    let k = lim.f0 / (2.0 * state.inertia);
    let rhs = |t: f64| k * (state.loss_size - ramp_sum(services, &state.fr_amounts, t));
    let steps = (t_end / DT).ceil() as usize;
    let (mut t, mut x) = (0.0, 0.0);
    let (mut best, mut t_best) = (0.0, 0.0);
    let mut path = vec![0.0];
    for _ in 0..steps {
        let k1 = rhs(t);
        let k2 = rhs(t + DT / 2.0);
        let k4 = rhs(t + DT);
        // the right-hand side does not depend on x, so k3 = k2
        x += DT / 6.0 * (k1 + 4.0 * k2 + k4);
        t += DT;
        path.push(x);
        if x > best {
            best = x;
            t_best = t;
        }
    }
    (best, t_best, path)
}

fn service_set() -> impl Strategy<Value = (Vec<FrServiceSpec>, Vec<f64>)> {
    prop::collection::vec((1.0f64..15.0, prop_oneof![Just(0.0), 0.0f64..2.0], 10.0f64..400.0), 1..4).prop_map(|v| {
        let services = v.iter().enumerate().map(|(i, &(t, d, _))| FrServiceSpec::new(format!("S{i}"), t, d)).collect();
        (services, v.iter().map(|x| x.2).collect())
    })
}

fn lim() -> FrequencyLimits {
    FrequencyLimits::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_nadir_matches_rk4((services, amounts) in service_set(), h in 1000.0f64..20000.0, frac in 0.2f64..0.95) {
        let total: f64 = amounts.iter().sum();
        let state = SystemState { inertia: h, loss_size: frac * total, fr_amounts: amounts.clone() };
        let traj = FrTrajectory::from_services(&services, &amounts);
        let (t_n, dev) = nadir(&state, &lim(), &traj).unwrap();
        let (best, t_best, path) = rk4_nadir(&state, &lim(), &services, traj.completion_time() + 1.0);
        prop_assert!((best - dev).abs() <= 1e-6 * (1.0 + dev), "rk4 {best} closed {dev}");
        // time of the sampled maximum is within a step or so of the exact one,
        // unless the deviation is flat there
        let flat = (frequency_deviation(&state, &lim(), &traj, t_best) - dev).abs() <= 1e-6;
        prop_assert!((t_best - t_n).abs() <= 2.0 * DT || flat);
        prop_assert!(t_n <= traj.completion_time() + 1e-12);
        // the closed form agrees with the integrator along the whole path
        for (k, x) in path.iter().enumerate().step_by(97) {
            let t = k as f64 * DT;
            prop_assert!((frequency_deviation(&state, &lim(), &traj, t) - x).abs() <= 1e-6 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn deviation_rises_until_nadir((services, amounts) in service_set(), h in 1000.0f64..20000.0, frac in 0.2f64..1.0) {
        let total: f64 = amounts.iter().sum();
        let state = SystemState { inertia: h, loss_size: frac * total, fr_amounts: amounts.clone() };
        let traj = FrTrajectory::from_services(&services, &amounts);
        let (t_n, _) = nadir(&state, &lim(), &traj).unwrap();
        let mut prev = 0.0;
        for k in 1..=200 {
            let t = t_n * k as f64 / 200.0;
            let d = frequency_deviation(&state, &lim(), &traj, t);
            prop_assert!(d >= prev - 1e-12);
            prev = d;
        }
        // and never exceeds the nadir afterwards
        for k in 1..=100 {
            let t = t_n + (traj.completion_time() + 5.0 - t_n) * k as f64 / 100.0;
            prop_assert!(frequency_deviation(&state, &lim(), &traj, t) <= prev + 1e-9);
        }
    }

    #[test]
    fn more_inertia_never_deepens_the_nadir((services, amounts) in service_set(), h in 1000.0f64..20000.0, extra in 1.0f64..5000.0) {
        let total: f64 = amounts.iter().sum();
        let traj = FrTrajectory::from_services(&services, &amounts);
        let at = |h: f64| {
            let st = SystemState { inertia: h, loss_size: 0.7 * total, fr_amounts: amounts.clone() };
            nadir(&st, &lim(), &traj).unwrap().1
        };
        prop_assert!(at(h + extra) <= at(h));
    }

    #[test]
    fn more_fr_never_deepens_the_nadir((services, amounts) in service_set(), h in 1000.0f64..20000.0, which in 0usize..3, extra in 1.0f64..200.0) {
        let total: f64 = amounts.iter().sum();
        let state = SystemState { inertia: h, loss_size: 0.7 * total, fr_amounts: amounts.clone() };
        let base = nadir(&state, &lim(), &FrTrajectory::from_services(&services, &amounts)).unwrap().1;
        let mut more = amounts.clone();
        let i = which % more.len();
        more[i] += extra;
        let st2 = SystemState { fr_amounts: more.clone(), ..state };
        prop_assert!(nadir(&st2, &lim(), &FrTrajectory::from_services(&services, &more)).unwrap().1 <= base + 1e-12);
    }
}

#[test]
fn insufficient_fr_is_reported_as_collapse() {
    let services = [FrServiceSpec::new("PFR", 10.0, 0.0)];
    let state = SystemState { inertia: 4200.0, loss_size: 100.0, fr_amounts: vec![80.0] };
    let traj = FrTrajectory::from_services(&services, &state.fr_amounts);
    assert!(nadir(&state, &lim(), &traj).is_err());
    let report = check_security(&state, &lim(), &traj);
    assert!(!report.qss_ok && !report.all_ok && report.nadir_dev.is_none());
}

#[test]
fn single_service_threshold_is_tight() {
    // H = 4200, P_L = 100, T = 10: R = P_L²·T·f0/(4·Δf·H) ≈ 372 MW
    let r = 100.0f64.powi(2) * 10.0 * 50.0 / (4.0 * 0.8 * 4200.0);
    let services = [FrServiceSpec::new("PFR", 10.0, 0.0)];
    let state = SystemState { inertia: 4200.0, loss_size: 100.0, fr_amounts: vec![r] };
    let traj = FrTrajectory::from_services(&services, &state.fr_amounts);
    let (_, dev) = nadir(&state, &lim(), &traj).unwrap();
    assert!((dev - 0.8).abs() <= 1e-12);
    let (best, _, _) = rk4_nadir(&state, &lim(), &services, 12.0);
    assert!((best - 0.8).abs() <= 1e-6);
}
