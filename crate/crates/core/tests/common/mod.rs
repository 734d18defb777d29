//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use freqsec::branch::MisocpProblem;
use freqsec::conic::{Cone, ConicBlock, ConicProgram, Mat};
use freqsec::constraints::{FrequencyVars, RotatedSocConstraint};
use freqsec::expr::VarId;
use freqsec::model::{FrServiceSpec, FrequencyLimits, SystemState};
use freqsec::swing::{nadir, FrTrajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-2.0..2.0) }).collect()
}

fn mat_vec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Cone rows with `h − G·x0` strictly inside the cone.
fn cone_rows_around(rng: &mut ChaCha8Rng, cone: Cone, n: usize, x0: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d = cone.dim();
    let g: Vec<Vec<f64>> = (0..d).map(|_| row(rng, n)).collect();
    let gx = mat_vec(&g, x0);
    let mut s: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    match cone {
        Cone::Nonneg(_) => s.iter_mut().for_each(|v| *v = v.abs() + 0.1),
        Cone::Soc(_) => {
            let tail: f64 = s[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            s[0] = tail + rng.gen_range(0.1..1.0);
        }
        Cone::RotatedSoc(_) => {
            let tail: f64 = s[2..].iter().map(|v| v * v).sum::<f64>();
            s[0] = rng.gen_range(0.5..2.0);
            s[1] = tail / s[0] + rng.gen_range(0.1..1.0);
        }
    }
    let h = (0..d).map(|i| gx[i] + s[i]).collect();
    (g, h)
}

fn random_cone(rng: &mut ChaCha8Rng) -> Cone {
    match rng.gen_range(0..3) {
        0 => Cone::Nonneg(rng.gen_range(1..4)),
        1 => Cone::Soc(rng.gen_range(2..5)),
        _ => Cone::RotatedSoc(rng.gen_range(3..5)),
    }
}

fn add_box(p: &mut ConicProgram, n: usize, vars: std::ops::Range<usize>, lim: f64) {
    for v in vars {
        let mut r = vec![0.0; n];
        r[v] = 1.0;
        p.add_le(&r, lim);
        r[v] = -1.0;
        p.add_le(&r, lim);
    }
}

/// Feasible, bounded program over a mix of all three cone types.
pub fn random_program(rng: &mut ChaCha8Rng) -> (ConicProgram, Vec<f64>) {
    let n = rng.gen_range(2..7);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut p = ConicProgram::new(n);
    p.c = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    for _ in 0..rng.gen_range(0..n.min(3)) {
        let r = row(rng, n);
        let b = mat_vec(std::slice::from_ref(&r), &x0)[0];
        if r.iter().any(|v| *v != 0.0) {
            p.add_equality(&r, b);
        }
    }
    for _ in 0..rng.gen_range(1..4) {
        let cone = random_cone(rng);
        let (g, h) = cone_rows_around(rng, cone, n, &x0);
        p.add_cone(cone, &g, &h);
    }
    add_box(&mut p, n, 0..n, 5.0);
    (p, x0)
}

/// Two variables, one rotated cone and a box: small enough to grid-search.
pub fn random_rotated_2d(rng: &mut ChaCha8Rng) -> ConicProgram {
    let mut p = ConicProgram::new(2);
    p.c = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let x0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let (g, h) = cone_rows_around(rng, Cone::RotatedSoc(3), 2, &x0);
    p.add_cone(Cone::RotatedSoc(3), &g, &h);
    add_box(&mut p, 2, 0..2, 3.0);
    p
}

/// Mixed-integer instance with `k` integer variables in small boxes, up to
/// two continuous ones, and one or two alternative blocks, the first of
/// which contains a known integer point.
pub fn random_misocp(rng: &mut ChaCha8Rng, k: usize, max_points: u64) -> MisocpProblem {
    let nc = rng.gen_range(1..3);
    let n = k + nc;
    let mut widths = vec![0i64; k];
    let mut points: u64 = 1;
    for w in widths.iter_mut() {
        let mut want = rng.gen_range(1..=2i64);
        while want > 0 && points * (want as u64 + 1) > max_points {
            want -= 1;
        }
        *w = want;
        points *= want as u64 + 1;
    }
    let lo: Vec<i64> = (0..k).map(|_| rng.gen_range(-2..=1)).collect();
    let mut x0: Vec<f64> = (0..k).map(|i| (lo[i] + rng.gen_range(0..=widths[i])) as f64).collect();
    x0.extend((0..nc).map(|_| rng.gen_range(-1.0..1.0)));

    let mut p = ConicProgram::new(n);
    p.c = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    for _ in 0..rng.gen_range(1..3) {
        let cone = random_cone(rng);
        let (g, h) = cone_rows_around(rng, cone, n, &x0);
        p.add_cone(cone, &g, &h);
    }
    add_box(&mut p, n, k..n, 4.0);
    p.integer_marks = (0..k).collect();
    let bounds = (0..k).map(|i| (lo[i] as f64, (lo[i] + widths[i]) as f64)).collect();

    let mut alternatives = Vec::new();
    for a in 0..rng.gen_range(0..3) {
        let cone = random_cone(rng);
        let (g, mut h) = cone_rows_around(rng, cone, n, &x0);
        if a > 0 {
            // later alternatives may exclude x0
            for v in h.iter_mut() {
                *v -= rng.gen_range(0.0..1.5);
            }
        }
        let mut gm = Mat::zeros(0, n);
        for r in &g {
            gm.push_row(r);
        }
        alternatives.push(ConicBlock { g: gm, h, cones: vec![cone] });
    }
    let mut prob = MisocpProblem::new(p, bounds, alternatives);
    prob.priority = (0..k).map(|_| rng.gen_range(0.0..10.0)).collect();
    prob
}

/// Best objective over a uniform grid of the feasible set of a 2-D program,
/// by direct membership checks.
pub fn grid_optimum(p: &ConicProgram, steps: usize, lim: f64) -> f64 {
    let mut best = f64::INFINITY;
    let h = 2.0 * lim / steps as f64;
    for i in 0..=steps {
        for j in 0..=steps {
            let x = [-lim + i as f64 * h, -lim + j as f64 * h];
            if feasible(p, &x, 0.0) {
                best = best.min(p.c[0] * x[0] + p.c[1] * x[1]);
            }
        }
    }
    best
}

pub fn feasible(p: &ConicProgram, x: &[f64], tol: f64) -> bool {
    let ax = p.a.mul_vec(x);
    if ax.iter().zip(&p.b).any(|(a, b)| (a - b).abs() > tol.max(1e-9)) {
        return false;
    }
    let gx = p.g.mul_vec(x);
    let s: Vec<f64> = (0..gx.len()).map(|i| p.h[i] - gx[i]).collect();
    let mut start = 0;
    for &c in &p.cones {
        let d = c.dim();
        if freqsec::conic::cone_margin(c, &s[start..start + d], false) < -tol {
            return false;
        }
        start += d;
    }
    true
}

// Frequency-constraint instances

pub struct Instance {
    pub services: Vec<FrServiceSpec>,
    pub limits: FrequencyLimits,
    /// H, P_L, then one R per service.
    pub x: Vec<f64>,
}

impl Instance {
    pub fn vars(&self) -> FrequencyVars {
        FrequencyVars {
            inertia: VarId(0),
            loss: VarId(1),
            fr: (0..self.services.len()).map(|i| VarId(2 + i)).collect(),
        }
    }

    pub fn state(&self) -> SystemState {
        SystemState { inertia: self.x[0], loss_size: self.x[1], fr_amounts: self.x[2..].to_vec() }
    }

    pub fn simulated(&self) -> (f64, f64) {
        let st = self.state();
        nadir(&st, &self.limits, &FrTrajectory::from_services(&self.services, &st.fr_amounts)).unwrap()
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(1..=3);
    let mut services: Vec<FrServiceSpec> = Vec::new();
    while services.len() < n {
        let t = rng.gen_range(1.0..15.0);
        let d = if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(0.0..2.0) };
        services.push(FrServiceSpec::new(format!("S{}", services.len()), t, d));
    }
    let limits = FrequencyLimits { f0: 50.0, rocof_max: rng.gen_range(0.5..2.0), delta_f_max: rng.gen_range(0.2..1.0) };
    let amounts: Vec<f64> = (0..n).map(|_| rng.gen_range(5.0..500.0)).collect();
    let total: f64 = amounts.iter().sum();
    let loss = rng.gen_range(0.05..1.0) * total;
    let mut x = vec![rng.gen_range(300.0..20000.0), loss];
    x.extend(amounts);
    Instance { services, limits, x }
}

/// H that makes the cone `soc` tight at `x`.
pub fn binding_inertia(soc: &RotatedSocConstraint, x: &[f64], f0: f64) -> f64 {
    let (u, v, w) = (soc.u.eval(x), soc.v.eval(x), soc.w.eval(x));
    let rest = u - x[0] / f0;
    f0 * (w * w / v - rest)
}
