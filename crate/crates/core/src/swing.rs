//! Closed-form post-fault frequency dynamics.
//!
//! With load damping neglected the swing equation reads
//! `(2H/f0)·dΔf/dt = FR(t) − P_L`, where FR(t) is the sum of linear ramps.
//! FR(t) is piecewise linear, so the deviation is piecewise quadratic and
//! every quantity here is evaluated exactly, without time stepping.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{FrServiceSpec, FrequencyLimits, SystemState};

/// Absolute slack used when screening a solved dispatch against the limits,
/// in Hz, Hz/s and MW respectively.
pub const SECURITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwingError {
    #[error("frequency collapse: total FR {total} MW is below the loss of {loss} MW")]
    FrequencyCollapse { total: f64, loss: f64 },
}

/// One service's contribution: ramps from 0 to `amount` over
/// `(delay, delay + delivery_time]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrRamp {
    pub amount: f64,
    pub delivery_time: f64,
    pub delay: f64,
}

impl FrRamp {
    pub fn new(amount: f64, delivery_time: f64, delay: f64) -> Self {
        FrRamp { amount, delivery_time, delay }
    }

    fn end(&self) -> f64 {
        self.delay + self.delivery_time
    }

    fn value(&self, t: f64) -> f64 {
        if t <= self.delay {
            0.0
        } else if t <= self.end() {
            self.amount * (t - self.delay) / self.delivery_time
        } else {
            self.amount
        }
    }

    /// ∫₀ᵗ of the ramp.
    fn integral(&self, t: f64) -> f64 {
        if t <= self.delay {
            0.0
        } else if t <= self.end() {
            let d = t - self.delay;
            self.amount * d * d / (2.0 * self.delivery_time)
        } else {
            self.amount * (t - self.delay - self.delivery_time / 2.0)
        }
    }
}

/// Aggregate system FR as a sum of ramps, with the times at which its slope
/// changes.
#[derive(Debug, Clone, PartialEq)]
pub struct FrTrajectory {
    ramps: Vec<FrRamp>,
    breakpoints: Vec<f64>,
}

impl FrTrajectory {
    pub fn new(ramps: Vec<FrRamp>) -> Self {
        let mut breakpoints = vec![0.0];
        for r in &ramps {
            breakpoints.push(r.delay);
            breakpoints.push(r.end());
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        FrTrajectory { ramps, breakpoints }
    }

    /// Pairs each service with its FR amount.
    pub fn from_services(services: &[FrServiceSpec], amounts: &[f64]) -> Self {
        assert_eq!(services.len(), amounts.len(), "one FR amount per service");
        FrTrajectory::new(
            services.iter().zip(amounts).map(|(s, &r)| FrRamp::new(r, s.delivery_time, s.delay)).collect(),
        )
    }

    pub fn ramps(&self) -> &[FrRamp] {
        &self.ramps
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn total(&self) -> f64 {
        self.ramps.iter().map(|r| r.amount).sum()
    }

    /// Time after which FR(t) is constant.
    pub fn completion_time(&self) -> f64 {
        *self.breakpoints.last().unwrap_or(&0.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.ramps.iter().map(|r| r.value(t)).sum()
    }

    pub fn integral(&self, t: f64) -> f64 {
        self.ramps.iter().map(|r| r.integral(t)).sum()
    }
}

/// Security screening of one post-fault state.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityReport {
    /// RoCoF magnitude at the outage instant (Hz/s).
    pub rocof_at_0: f64,
    /// Nadir time, absent when frequency collapses.
    pub t_nadir: Option<f64>,
    /// Deviation at the nadir (Hz), absent when frequency collapses.
    pub nadir_dev: Option<f64>,
    pub rocof_ok: bool,
    pub nadir_ok: bool,
    pub qss_ok: bool,
    pub all_ok: bool,
}

/// Aggregate FR injection at time `t` (MW).
pub fn fr_profile(traj: &FrTrajectory, t: f64) -> f64 {
    traj.value(t)
}

/// Frequency drop below nominal at time `t`,
/// `(f0/2H)·(P_L·t − ∫₀ᵗ FR)` in Hz. Positive while frequency is below f0.
pub fn frequency_deviation(state: &SystemState, limits: &FrequencyLimits, traj: &FrTrajectory, t: f64) -> f64 {
    debug_assert!(state.inertia > 0.0);
    limits.f0 / (2.0 * state.inertia) * (state.loss_size * t - traj.integral(t))
}

/// Earliest time at which FR(t) = P_L, and the deviation there, which is the
/// maximum deviation over the whole transient.
pub fn nadir(state: &SystemState, limits: &FrequencyLimits, traj: &FrTrajectory) -> Result<(f64, f64), SwingError> {
    let loss = state.loss_size;
    let total = traj.total();
    if total < loss {
        return Err(SwingError::FrequencyCollapse { total, loss });
    }
    let t = equilibrium_time(traj, loss);
    Ok((t, frequency_deviation(state, limits, traj, t)))
}

fn equilibrium_time(traj: &FrTrajectory, loss: f64) -> f64 {
    if loss <= 0.0 {
        return 0.0;
    }
    for w in traj.breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let fa = traj.value(a);
        if fa >= loss {
            return a;
        }
        let fb = traj.value(b);
        if fb >= loss {
            return a + (loss - fa) * (b - a) / (fb - fa);
        }
    }
    traj.completion_time()
}

pub fn check_security(state: &SystemState, limits: &FrequencyLimits, traj: &FrTrajectory) -> SecurityReport {
    let rocof_at_0 = state.loss_size * limits.f0 / (2.0 * state.inertia);
    let rocof_ok = rocof_at_0.abs() <= limits.rocof_max + SECURITY_TOL;
    let qss_ok = traj.total() >= state.loss_size - SECURITY_TOL;
    let (t_nadir, nadir_dev) = if traj.total() >= state.loss_size {
        let (t, d) = nadir(state, limits, traj).expect("equilibrium exists");
        (Some(t), Some(d))
    } else if qss_ok {
        // Within tolerance of the q-s-s bound: evaluate at full delivery.
        let t = traj.completion_time();
        (Some(t), Some(frequency_deviation(state, limits, traj, t)))
    } else {
        (None, None)
    };
    let nadir_ok = nadir_dev.is_some_and(|d| d.abs() <= limits.delta_f_max + SECURITY_TOL);
    SecurityReport {
        rocof_at_0,
        t_nadir,
        nadir_dev,
        rocof_ok,
        nadir_ok,
        qss_ok,
        all_ok: rocof_ok && nadir_ok && qss_ok,
    }
}

/// Samples the transient as CSV (`t_s,freq_dev_hz,fr_mw`), from 0 to
/// `t_end` inclusive.
pub fn trajectory_csv(
    state: &SystemState,
    limits: &FrequencyLimits,
    traj: &FrTrajectory,
    step: f64,
    t_end: f64,
) -> String {
    assert!(step > 0.0, "sampling step must be positive");
    let mut out = String::from("t_s,freq_dev_hz,fr_mw\n");
    let n = (t_end / step + 1e-9).floor() as usize;
    for k in 0..=n {
        let t = k as f64 * step;
        let _ = writeln!(out, "{:.4},{:.9},{:.6}", t, frequency_deviation(state, limits, traj, t), traj.value(t));
    }
    out
}
