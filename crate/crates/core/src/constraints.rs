//! Frequency-security constraints: RoCoF and q-s-s rows, and one rotated-SOC
//! nadir constraint per FR(t) segment with positive slope.
//!
//! For a segment `[a, b]` with services `F` finished by `a` and `A` ramping
//! throughout, the nadir condition is `u·v ≥ w²` with
//!
//! ```text
//! u = H/f0 − Σ_F R_i(T_i + 2d_i)/(4Δf) + Σ_A R_i d_i²/(4Δf T_i)
//! v = Σ_A R_i/T_i
//! w = (P_L − Σ_F R_i + Σ_A R_i d_i/T_i) / (2√Δf)
//! ```
//!
//! valid only when the equilibrium `FR(t) = P_L` falls in the segment.

use std::fmt;

use thiserror::Error;

use crate::expr::{fmt_num, AffineExpr, VarId};
use crate::model::{FrServiceSpec, FrequencyLimits};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("no FR services: nadir constraints need at least one")]
    NoServices,
    #[error("services {0} and {1} have identical delay and delivery time")]
    DuplicateTiming(String, String),
    #[error("FR variable count {got} does not match {expected} services")]
    VariableCount { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

/// `Σ coefficients·x  sense  rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coefficients: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    /// `lhs sense rhs`, moving the constant of `lhs` across.
    pub fn new(lhs: AffineExpr, sense: Sense, rhs: f64) -> Self {
        let lhs = lhs.normalized();
        LinearConstraint { coefficients: lhs.terms, sense, rhs: rhs - lhs.constant }
    }

    pub fn lhs(&self) -> AffineExpr {
        AffineExpr { terms: self.coefficients.clone(), constant: 0.0 }
    }

    /// Signed distance to violation; non-negative when satisfied.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let l = self.lhs().eval(x);
        match self.sense {
            Sense::Le => self.rhs - l,
            Sense::Ge => l - self.rhs,
            Sense::Eq => -(l - self.rhs).abs(),
        }
    }

    pub fn holds(&self, x: &[f64], tol: f64) -> bool {
        self.margin(x) >= -tol
    }

    /// Fixes `v` to `value`, folding its term into the right-hand side.
    pub fn fix(&self, v: VarId, value: f64) -> LinearConstraint {
        LinearConstraint::new(self.lhs().substitute(v, value), self.sense, self.rhs)
    }

    /// The same constraint in `expr ≥ 0` form (`Eq` maps to `expr = 0`).
    pub fn as_nonnegative(&self) -> AffineExpr {
        let l = self.lhs();
        match self.sense {
            Sense::Le => AffineExpr::constant(self.rhs).minus(&l),
            Sense::Ge | Sense::Eq => l.minus(&AffineExpr::constant(self.rhs)),
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        format!("{} {} {}", self.lhs().render(names), self.sense, fmt_num(self.rhs))
    }
}

/// `u·v ≥ w²` with `u, v ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedSocConstraint {
    pub u: AffineExpr,
    pub v: AffineExpr,
    pub w: AffineExpr,
}

impl RotatedSocConstraint {
    /// `min(u, v, u·v − w²)` style margin: non-negative iff the point is in
    /// the cone.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let (u, v, w) = (self.u.eval(x), self.v.eval(x), self.w.eval(x));
        (u * v - w * w).min(u).min(v)
    }

    pub fn holds(&self, x: &[f64], tol: f64) -> bool {
        self.margin(x) >= -tol
    }

    pub fn render(&self, names: &[String]) -> String {
        format!("({}) * ({}) >= ({})^2", self.u.render(names), self.v.render(names), self.w.render(names))
    }
}

/// `‖rows‖₂ ≤ t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardSoc {
    pub t: AffineExpr,
    pub rows: Vec<AffineExpr>,
}

impl StandardSoc {
    pub fn margin(&self, x: &[f64]) -> f64 {
        let norm = self.rows.iter().map(|r| r.eval(x).powi(2)).sum::<f64>().sqrt();
        self.t.eval(x) - norm
    }

    pub fn holds(&self, x: &[f64], tol: f64) -> bool {
        self.margin(x) >= -tol
    }
}

/// `u·v ≥ w²` as `‖(u − v, 2w)‖ ≤ u + v`. The first row carries the inertia
/// coefficient, the second the loss coefficient.
pub fn to_standard_soc(rsoc: &RotatedSocConstraint) -> StandardSoc {
    StandardSoc {
        t: rsoc.u.plus(&rsoc.v).normalized(),
        rows: vec![rsoc.u.minus(&rsoc.v).normalized(), rsoc.w.scaled(2.0).normalized()],
    }
}

/// Variables the frequency constraints are written over.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVars {
    pub inertia: VarId,
    pub loss: VarId,
    /// One per service, in service order.
    pub fr: Vec<VarId>,
}

/// One candidate nadir interval.
#[derive(Debug, Clone, PartialEq)]
pub struct NadirConstraint {
    pub interval_id: usize,
    pub start: f64,
    pub end: f64,
    /// Services that completed delivery by `start`.
    pub finished: Vec<usize>,
    /// Services ramping over the whole segment.
    pub active: Vec<usize>,
    pub soc: RotatedSocConstraint,
    /// Equilibrium inside the segment: `FR(end) ≥ P_L`, and `P_L ≥ FR(start)`
    /// unless FR(start) is identically zero.
    pub guard: Vec<LinearConstraint>,
}

impl NadirConstraint {
    pub fn guard_holds(&self, x: &[f64], tol: f64) -> bool {
        self.guard.iter().all(|g| g.holds(x, tol))
    }

    pub fn render(&self, names: &[String]) -> String {
        let guards: Vec<_> = self.guard.iter().map(|g| g.render(names)).collect();
        format!(
            "nadir[{}] t in [{}, {}]: {}  if  {}",
            self.interval_id,
            fmt_num(self.start),
            fmt_num(self.end),
            self.soc.render(names),
            guards.join(" and ")
        )
    }
}

/// `2H − P_L·f0/RoCoF_max ≥ 0`
pub fn rocof_constraint(vars: &FrequencyVars, limits: &FrequencyLimits) -> LinearConstraint {
    let mut e = AffineExpr::term(vars.inertia, 2.0);
    e.add_term(vars.loss, -limits.f0 / limits.rocof_max);
    LinearConstraint::new(e, Sense::Ge, 0.0)
}

/// `Σ R_i − P_L ≥ 0`
pub fn qss_constraint(vars: &FrequencyVars) -> LinearConstraint {
    let mut e = AffineExpr::term(vars.loss, -1.0);
    for &r in &vars.fr {
        e.add_term(r, 1.0);
    }
    LinearConstraint::new(e, Sense::Ge, 0.0)
}

/// FR(t) as a linear expression in the service amounts.
fn fr_at(vars: &FrequencyVars, services: &[FrServiceSpec], t: f64) -> AffineExpr {
    let mut e = AffineExpr::zero();
    for (s, &r) in services.iter().zip(&vars.fr) {
        let frac = ((t - s.delay) / s.delivery_time).clamp(0.0, 1.0);
        if frac > 0.0 {
            e.add_term(r, frac);
        }
    }
    e
}

pub fn nadir_constraints(
    vars: &FrequencyVars,
    services: &[FrServiceSpec],
    limits: &FrequencyLimits,
) -> Result<Vec<NadirConstraint>, ConstraintError> {
    if services.is_empty() {
        return Err(ConstraintError::NoServices);
    }
    if vars.fr.len() != services.len() {
        return Err(ConstraintError::VariableCount { got: vars.fr.len(), expected: services.len() });
    }
    for (i, a) in services.iter().enumerate() {
        for b in &services[i + 1..] {
            if a.delay == b.delay && a.delivery_time == b.delivery_time {
                return Err(ConstraintError::DuplicateTiming(a.name.clone(), b.name.clone()));
            }
        }
    }

    let mut times = vec![0.0];
    for s in services {
        times.push(s.delay);
        times.push(s.completion_time());
    }
    times.sort_by(f64::total_cmp);
    times.dedup();

    let four_df = 4.0 * limits.delta_f_max;
    let two_sqrt_df = 2.0 * limits.delta_f_max.sqrt();
    let mut out = Vec::new();
    for seg in times.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let active: Vec<usize> =
            (0..services.len()).filter(|&i| services[i].delay <= a && services[i].completion_time() >= b).collect();
        if active.is_empty() {
            continue;
        }
        let finished: Vec<usize> = (0..services.len()).filter(|&i| services[i].completion_time() <= a).collect();

        let mut u = AffineExpr::term(vars.inertia, 1.0 / limits.f0);
        let mut v = AffineExpr::zero();
        let mut w = AffineExpr::term(vars.loss, 1.0 / two_sqrt_df);
        for &i in &finished {
            let s = &services[i];
            u.add_term(vars.fr[i], -(s.delivery_time + 2.0 * s.delay) / four_df);
            w.add_term(vars.fr[i], -1.0 / two_sqrt_df);
        }
        for &i in &active {
            let (t, d) = (services[i].delivery_time, services[i].delay);
            if d != 0.0 {
                u.add_term(vars.fr[i], d * d / (t * four_df));
                w.add_term(vars.fr[i], d / t / two_sqrt_df);
            }
            v.add_term(vars.fr[i], 1.0 / t);
        }

        let mut guard =
            vec![LinearConstraint::new(fr_at(vars, services, b).minus(&AffineExpr::var(vars.loss)), Sense::Ge, 0.0)];
        let fr_a = fr_at(vars, services, a);
        if !fr_a.is_constant() {
            guard.push(LinearConstraint::new(AffineExpr::var(vars.loss).minus(&fr_a), Sense::Ge, 0.0));
        }

        out.push(NadirConstraint {
            interval_id: out.len(),
            start: a,
            end: b,
            finished,
            active,
            soc: RotatedSocConstraint { u: u.normalized(), v: v.normalized(), w: w.normalized() },
            guard,
        });
    }
    Ok(out)
}

/// Index of the alternative whose guard holds at `x`, earliest on ties.
pub fn select_alternative(alternatives: &[NadirConstraint], x: &[f64], tol: f64) -> Option<usize> {
    alternatives.iter().position(|n| n.guard_holds(x, tol))
}

/// Human-readable dump, one constraint per line.
pub fn dump(rocof: &LinearConstraint, qss: &LinearConstraint, nadir: &[NadirConstraint], names: &[String]) -> String {
    let mut s = format!("rocof: {}\nqss: {}\n", rocof.render(names), qss.render(names));
    for n in nadir {
        s.push_str(&n.render(names));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const H: VarId = VarId(0);
    const PL: VarId = VarId(1);

    fn vars(n: usize) -> FrequencyVars {
        FrequencyVars { inertia: H, loss: PL, fr: (0..n).map(|i| VarId(2 + i)).collect() }
    }

    fn svc(name: &str, t: f64, d: f64) -> FrServiceSpec {
        FrServiceSpec { name: name.into(), delivery_time: t, delay: d }
    }

    fn three_services() -> Vec<FrServiceSpec> {
        vec![svc("a", 1.0, 0.0), svc("b", 5.0, 0.0), svc("c", 10.0, 0.0)]
    }

    fn limits() -> FrequencyLimits {
        FrequencyLimits::default()
    }

    /// Checks `u·v − w²` against an expected pair `(lhs_u·lhs_v, rhs)` as
    /// polynomials by evaluating at several points.
    fn same_inequality(n: &NadirConstraint, f: impl Fn(&[f64]) -> f64, vars_len: usize) {
        let mut seed = 1.0_f64;
        for _ in 0..20 {
            let x: Vec<f64> = (0..vars_len)
                .map(|_| {
                    seed = (seed * 7919.0 + 13.0) % 1009.0;
                    seed
                })
                .collect();
            let (u, v, w) = (n.soc.u.eval(&x), n.soc.v.eval(&x), n.soc.w.eval(&x));
            assert_abs_diff_eq!(u * v - w * w, f(&x), epsilon = 1e-6 * (1.0 + f(&x).abs()));
        }
    }

    #[test]
    fn rocof_with_fixed_loss() {
        let c = rocof_constraint(&vars(1), &limits()).fix(PL, 100.0);
        assert_eq!(c.coefficients, vec![(H, 2.0)]);
        assert_eq!(c.sense, Sense::Ge);
        assert_abs_diff_eq!(c.rhs, 5000.0);
    }

    #[test]
    fn rocof_vacuous_for_loose_limit() {
        let l = FrequencyLimits { rocof_max: 1e12, ..limits() };
        let c = rocof_constraint(&vars(1), &l);
        assert!(c.lhs().coeff(PL).abs() < 1e-9);
    }

    #[test]
    fn rocof_slack_in_low_res_system() {
        let c = rocof_constraint(&vars(1), &limits()).fix(PL, 1800.0);
        assert_abs_diff_eq!(c.rhs, 90000.0);
        let mut x = vec![0.0; 3];
        x[H.0] = 82500.0;
        assert!(c.margin(&x) > 0.0);
    }

    #[test]
    fn qss_sums_services() {
        let c = qss_constraint(&vars(2));
        let x = [0.0, 100.0, 197.0, 175.0];
        assert_abs_diff_eq!(c.margin(&x), 272.0);
        let none = qss_constraint(&vars(0));
        assert!(!none.holds(&[0.0, 1.0], 0.0));
    }

    #[test]
    fn first_three_service_constraint() {
        let ss = three_services();
        let alts = nadir_constraints(&vars(3), &ss, &limits()).unwrap();
        assert_eq!(alts.len(), 3);
        let n0 = &alts[0];
        assert_eq!(n0.active, vec![0, 1, 2]);
        assert!(n0.finished.is_empty());
        // (H/f0)(R1/T1+R2/T2+R3/T3) ≥ P_L²/(4Δf)
        same_inequality(n0, |x| x[0] / 50.0 * (x[2] / 1.0 + x[3] / 5.0 + x[4] / 10.0) - x[1] * x[1] / 3.2, 5);
        // guard R1 + R2·T1/T2 + R3·T1/T3 ≥ P_L
        assert_eq!(n0.guard.len(), 1);
        let g = n0.guard[0].lhs();
        assert_abs_diff_eq!(g.coeff(VarId(2)), 1.0);
        assert_abs_diff_eq!(g.coeff(VarId(3)), 0.2);
        assert_abs_diff_eq!(g.coeff(VarId(4)), 0.1);
        assert_abs_diff_eq!(g.coeff(PL), -1.0);
    }

    #[test]
    fn second_and_third_three_service_constraints() {
        let ss = three_services();
        let alts = nadir_constraints(&vars(3), &ss, &limits()).unwrap();
        // (H/f0 − R1T1/(4Δf))(R2/T2 + R3/T3) ≥ (P_L − R1)²/(4Δf)
        same_inequality(
            &alts[1],
            |x| (x[0] / 50.0 - x[2] / 3.2) * (x[3] / 5.0 + x[4] / 10.0) - (x[1] - x[2]).powi(2) / 3.2,
            5,
        );
        // (H/f0 − (R1T1 + R2T2)/(4Δf))(R3/T3) ≥ (P_L − R1 − R2)²/(4Δf)
        same_inequality(
            &alts[2],
            |x| (x[0] / 50.0 - (x[2] + 5.0 * x[3]) / 3.2) * (x[4] / 10.0) - (x[1] - x[2] - x[3]).powi(2) / 3.2,
            5,
        );
        assert_eq!(alts[2].finished, vec![0, 1]);
        assert_eq!(alts[2].guard.len(), 2);
    }

    #[test]
    fn two_service_specialization_with_one_finished() {
        let ss = vec![svc("a", 2.0, 0.0), svc("b", 10.0, 0.0)];
        let alts = nadir_constraints(&vars(2), &ss, &limits()).unwrap();
        same_inequality(
            &alts[1],
            |x| (x[0] / 50.0 - x[2] * 2.0 / 3.2) * (x[3] / 10.0) - (x[1] - x[2]).powi(2) / 3.2,
            4,
        );
    }

    #[test]
    fn delayed_constraints() {
        // service 1 delayed 0.4 s with T1 = 1, service 2 undelayed with T2 = 10;
        // segments [0,0.4], [0.4,1.4], [1.4,10]
        let (t1, d1, t2) = (1.0, 0.4, 10.0);
        let ss = vec![svc("a", t1, d1), svc("b", t2, 0.0)];
        let alts = nadir_constraints(&vars(2), &ss, &limits()).unwrap();
        assert_eq!(alts.len(), 3);
        assert_eq!(alts[1].active, vec![0, 1]);
        same_inequality(
            &alts[1],
            move |x| {
                (x[0] / 50.0 + x[2] * d1 * d1 / (3.2 * t1)) * (x[2] / t1 + x[3] / t2)
                    - (x[1] + x[2] * d1 / t1).powi(2) / 3.2
            },
            4,
        );
        // after service 1 completes: u picks up −R1(T1 + 2·d1)/(4Δf)
        same_inequality(
            &alts[2],
            move |x| (x[0] / 50.0 - x[2] * (t1 + 2.0 * d1) / 3.2) * (x[3] / t2) - (x[1] - x[2]).powi(2) / 3.2,
            4,
        );
    }

    #[test]
    fn single_delayed_service_in_its_ramp() {
        // (H/f0 + R1·d1²/(4Δf·T1))(R1/T1) ≥ (P_L + R1·d1/T1)²/(4Δf), guard R1 ≥ P_L
        let ss = vec![svc("a", 7.0, 0.4)];
        let alts = nadir_constraints(&vars(1), &ss, &limits()).unwrap();
        assert_eq!(alts.len(), 1);
        same_inequality(
            &alts[0],
            |x| (x[0] / 50.0 + x[2] * 0.16 / (3.2 * 7.0)) * (x[2] / 7.0) - (x[1] + x[2] * 0.4 / 7.0).powi(2) / 3.2,
            3,
        );
        assert_eq!(alts[0].guard.len(), 1);
        let g = alts[0].guard[0].lhs();
        assert_abs_diff_eq!(g.coeff(VarId(2)), 1.0);
    }

    #[test]
    fn binding_delayed_case_closes_at_3980() {
        let ss = vec![svc("FR1", 7.0, 0.4), svc("FR2", 10.0, 0.0)];
        let alts = nadir_constraints(&vars(2), &ss, &limits()).unwrap();
        let x = [4200.0, 100.0, 225.0, 0.0];
        let n = &alts[1];
        let w = n.soc.w.eval(&x);
        assert_abs_diff_eq!(w * w, 3980.2, epsilon = 0.05);
    }

    #[test]
    fn rejects_empty_and_duplicate() {
        assert_eq!(nadir_constraints(&vars(0), &[], &limits()), Err(ConstraintError::NoServices));
        let ss = vec![svc("a", 5.0, 0.0), svc("b", 5.0, 0.0)];
        assert!(matches!(nadir_constraints(&vars(2), &ss, &limits()), Err(ConstraintError::DuplicateTiming(..))));
    }

    #[test]
    fn flat_gap_generates_nothing() {
        let ss = vec![svc("a", 1.0, 0.0), svc("b", 1.0, 3.0)];
        let alts = nadir_constraints(&vars(2), &ss, &limits()).unwrap();
        assert_eq!(alts.len(), 2);
        assert_eq!((alts[1].start, alts[1].end), (3.0, 4.0));
    }

    #[test]
    fn standard_form_rows() {
        let ss = vec![svc("a", 10.0, 0.0)];
        let alts = nadir_constraints(&vars(1), &ss, &limits()).unwrap();
        let soc = to_standard_soc(&alts[0].soc);
        assert_abs_diff_eq!(soc.rows[0].coeff(H), 1.0 / 50.0);
        assert_abs_diff_eq!(soc.rows[1].coeff(PL), 1.0 / 0.8_f64.sqrt());
        assert_abs_diff_eq!(soc.t.coeff(VarId(2)), 0.1);
    }

    #[test]
    fn degenerate_standard_form() {
        let r =
            RotatedSocConstraint { u: AffineExpr::var(VarId(0)), v: AffineExpr::var(VarId(1)), w: AffineExpr::zero() };
        let soc = to_standard_soc(&r);
        for x in [[1.0, 2.0], [-1.0, 2.0], [0.0, 0.0], [3.0, -0.5]] {
            assert_eq!(soc.holds(&x, 0.0), x[0] >= 0.0 && x[1] >= 0.0);
        }
    }

    #[test]
    fn dump_is_one_line_each() {
        let names: Vec<String> = ["H", "P_L", "R_a", "R_b"].iter().map(|s| s.to_string()).collect();
        let v = vars(2);
        let ss = vec![svc("a", 7.0, 0.0), svc("b", 10.0, 0.0)];
        let alts = nadir_constraints(&v, &ss, &limits()).unwrap();
        let text = dump(&rocof_constraint(&v, &limits()), &qss_constraint(&v), &alts, &names);
        assert_eq!(text.lines().count(), 2 + alts.len());
        assert!(text.starts_with("rocof: 2*H - 50*P_L >= 0"));
    }
}
