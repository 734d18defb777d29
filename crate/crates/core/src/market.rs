//! Clearing problems, two-step pricing and settlement.
//!
//! Step 1 solves the mixed-integer problem for a physically secure dispatch
//! and picks the nadir interval. Step 2 rebuilds the problem with only that
//! nadir cone and continuous commitment, and reads prices off its duals.

use std::fmt::Write as _;

use thiserror::Error;

use crate::branch::{solve_misocp, BranchError, BranchSettings, MisocpProblem};
use crate::conic::{self, Compiled, ConicSolution, ConstraintId, Model, Status};
use crate::constraints::{
    nadir_constraints, qss_constraint, rocof_constraint, to_standard_soc, ConstraintError, FrequencyVars,
    NadirConstraint,
};
use crate::expr::{AffineExpr, VarId};
use crate::model::{FrServiceSpec, FrequencyLimits, Mode, ModelError, Scenario, SystemState};
use crate::swing::{check_security, FrTrajectory, SecurityReport};

/// Largest allowed gap between generic and closed-form prices.
pub const PRICE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Branch(#[from] BranchError),
    #[error("scenario mode is {got:?}, expected {expected:?}")]
    WrongMode { got: Mode, expected: Mode },
    #[error("demand {demand} MW cannot be met: feasible range is [{min}, {max}] MW")]
    InfeasibleDemand { demand: f64, min: f64, max: f64 },
    #[error("no secure dispatch exists ({0:?})")]
    Infeasible(Status),
    #[error("pricing solve failed with status {0:?}")]
    PricingFailed(Status),
    #[error("price of {quantity}: generic {generic} vs closed form {closed_form}")]
    PriceMismatch { quantity: String, generic: f64, closed_form: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClearingVariables {
    pub power: Vec<VarId>,
    /// FR of each type; `None` for types outside every service.
    pub fr: Vec<Option<VarId>>,
    /// Online units per type (UC only).
    pub commitment: Vec<Option<VarId>>,
    pub loss: VarId,
    pub inertia: VarId,
    pub curtailment: Option<VarId>,
    /// Aggregate R_i per service.
    pub service_fr: Vec<VarId>,
}

impl ClearingVariables {
    pub fn frequency(&self) -> FrequencyVars {
        FrequencyVars { inertia: self.inertia, loss: self.loss, fr: self.service_fr.clone() }
    }
}

/// A clearing problem before any nadir cone is attached.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub model: Model,
    pub vars: ClearingVariables,
    pub balance: ConstraintId,
    pub rocof: ConstraintId,
    pub qss: ConstraintId,
    /// Labelled bound rows whose duals are reported.
    pub bounds: Vec<ConstraintId>,
    pub nadir: Vec<NadirConstraint>,
    pub integer_bounds: Vec<(f64, f64)>,
    pub priority: Vec<f64>,
}

impl Assembly {
    /// Step-1 problem: one alternative per nadir interval, each carrying its
    /// guards.
    pub fn misocp(&self) -> (Compiled, MisocpProblem) {
        let compiled = self.model.compile();
        let alternatives = self.nadir.iter().map(|n| self.model.block(&n.guard, &[to_standard_soc(&n.soc)])).collect();
        let mut problem = MisocpProblem::new(compiled.program.clone(), self.integer_bounds.clone(), alternatives);
        problem.priority = self.priority.clone();
        (compiled, problem)
    }
}

pub fn assemble_ed(scenario: &Scenario) -> Result<Assembly, MarketError> {
    expect_mode(scenario, Mode::EconomicDispatch)?;
    assemble(scenario, false)
}

pub fn assemble_uc(scenario: &Scenario) -> Result<Assembly, MarketError> {
    expect_mode(scenario, Mode::UnitCommitment)?;
    assemble(scenario, false)
}

fn expect_mode(scenario: &Scenario, expected: Mode) -> Result<(), MarketError> {
    if scenario.mode != expected {
        return Err(MarketError::WrongMode { got: scenario.mode, expected });
    }
    Ok(())
}

fn assemble(scenario: &Scenario, relaxed: bool) -> Result<Assembly, MarketError> {
    scenario.validate()?;
    let uc = scenario.mode == Mode::UnitCommitment;
    let fleet = &scenario.fleet;

    let max_supply: f64 = fleet.iter().map(|g| g.capacity()).sum::<f64>() + scenario.res_available;
    let min_supply = if uc { 0.0 } else { fleet.iter().map(|g| g.min_output()).sum::<f64>() };
    if scenario.demand > max_supply + 1e-9 || scenario.demand < min_supply - 1e-9 {
        return Err(MarketError::InfeasibleDemand { demand: scenario.demand, min: min_supply, max: max_supply });
    }

    let mut m = Model::new();
    let power: Vec<VarId> = fleet.iter().map(|g| m.add_var(format!("P_{}", g.name))).collect();
    let fr: Vec<Option<VarId>> =
        (0..fleet.len()).map(|g| scenario.service_of(g).map(|_| m.add_var(format!("R_{}", fleet[g].name)))).collect();
    let commitment: Vec<Option<VarId>> = fleet.iter().map(|g| uc.then(|| m.add_var(format!("y_{}", g.name)))).collect();
    let inertia = m.add_var("H");
    let loss = m.add_var("P_L");
    let curtailment = (scenario.res_available > 0.0).then(|| m.add_var("P_curt"));
    let service_fr: Vec<VarId> = scenario.services.iter().map(|s| m.add_var(format!("R_{}", s.name))).collect();

    let mut objective = AffineExpr::zero();
    let mut bounds = Vec::new();
    for (g, gen) in fleet.iter().enumerate() {
        let p = power[g];
        objective.add_term(p, gen.marginal_cost);
        match commitment[g] {
            Some(y) => {
                objective.add_term(y, gen.no_load_cost);
                let mut lo = AffineExpr::var(p);
                lo.add_term(y, -gen.p_min);
                bounds.push(m.add_ge(format!("msg_{}", gen.name), lo, 0.0));
                let mut hi = AffineExpr::var(p);
                hi.add_term(y, -gen.p_max);
                bounds.push(m.add_le(format!("pmax_{}", gen.name), hi, 0.0));
                m.add_ge(format!("ymin_{}", gen.name), AffineExpr::var(y), 0.0);
                m.add_le(format!("ymax_{}", gen.name), AffineExpr::var(y), f64::from(gen.unit_count));
                if !relaxed {
                    m.mark_integer(y);
                }
            }
            None => {
                bounds.push(m.add_ge(format!("msg_{}", gen.name), AffineExpr::var(p), gen.min_output()));
                bounds.push(m.add_le(format!("pmax_{}", gen.name), AffineExpr::var(p), gen.capacity()));
            }
        }
        if let Some(r) = fr[g] {
            m.add_ge(format!("rmin_{}", gen.name), AffineExpr::var(r), 0.0);
            let mut cap = AffineExpr::var(r);
            let mut head = AffineExpr::var(r);
            head.add_term(p, 1.0);
            match commitment[g] {
                Some(y) => {
                    cap.add_term(y, -gen.fr_capacity_per_unit());
                    bounds.push(m.add_le(format!("rmax_{}", gen.name), cap, 0.0));
                    head.add_term(y, -gen.p_max);
                    bounds.push(m.add_le(format!("headroom_{}", gen.name), head, 0.0));
                }
                None => {
                    bounds.push(m.add_le(format!("rmax_{}", gen.name), cap, gen.fr_capacity));
                    bounds.push(m.add_le(format!("headroom_{}", gen.name), head, gen.capacity()));
                }
            }
        }
    }
    m.set_objective(objective);

    let mut supply = AffineExpr::zero();
    for &p in &power {
        supply.add_term(p, 1.0);
    }
    if let Some(c) = curtailment {
        supply.add_term(c, -1.0);
        m.add_ge("curt_min", AffineExpr::var(c), 0.0);
        m.add_le("curt_max", AffineExpr::var(c), scenario.res_available);
    }
    let balance = m.add_eq("balance", supply, scenario.demand - scenario.res_available);

    for (i, s) in scenario.services.iter().enumerate() {
        let mut e = AffineExpr::var(service_fr[i]);
        for g in 0..fleet.len() {
            if scenario.service_of(g) == Some(i) {
                e.add_term(fr[g].expect("service members have FR"), -1.0);
            }
        }
        m.add_eq(format!("aggregate_{}", s.name), e, 0.0);
    }

    let loss_offset = scenario.loss.p_loss_max * scenario.loss.inertia_const_loss;
    let mut h = AffineExpr::var(inertia);
    if uc {
        for (g, gen) in fleet.iter().enumerate() {
            h.add_term(commitment[g].expect("UC commits"), -gen.unit_inertia());
        }
        m.add_eq("inertia", h, -loss_offset);
    } else {
        let full: f64 = fleet.iter().map(|g| g.unit_inertia() * f64::from(g.unit_count)).sum();
        m.add_eq("inertia", h, full - loss_offset);
    }

    match scenario.largest_infeed().filter(|_| scenario.loss.tracks_unit) {
        Some(g) => {
            let mut e = AffineExpr::var(loss);
            e.add_term(power[g], -1.0 / f64::from(fleet[g].unit_count));
            m.add_eq("loss_link", e, 0.0);
            bounds.push(m.add_le("loss_max", AffineExpr::var(loss), scenario.loss.p_loss_max));
        }
        None => {
            m.add_eq("loss_fixed", AffineExpr::var(loss), scenario.loss.p_loss_max);
        }
    }

    let vars = ClearingVariables { power, fr, commitment, loss, inertia, curtailment, service_fr };
    let fv = vars.frequency();
    let rocof = m.add_linear("rocof", &rocof_constraint(&fv, &scenario.limits));
    let qss = m.add_linear("qss", &qss_constraint(&fv));
    let nadir = nadir_constraints(&fv, &scenario.services, &scenario.limits)?;

    let integer_bounds =
        if relaxed || !uc { Vec::new() } else { fleet.iter().map(|g| (0.0, f64::from(g.unit_count))).collect() };
    let priority = if relaxed || !uc { Vec::new() } else { fleet.iter().map(|g| g.p_max).collect() };
    Ok(Assembly { model: m, vars, balance, rocof, qss, bounds, nadir, integer_bounds, priority })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualBundle {
    pub energy_dual: f64,
    pub lambda_rocof: f64,
    pub lambda_qss: f64,
    pub mu: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub bounds: Vec<(String, f64)>,
}

impl DualBundle {
    pub fn zero() -> Self {
        DualBundle {
            energy_dual: 0.0,
            lambda_rocof: 0.0,
            lambda_qss: 0.0,
            mu: 0.0,
            lambda1: 0.0,
            lambda2: 0.0,
            bounds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceReport {
    pub energy_price: f64,
    pub inertia_price: f64,
    pub fr_price: Vec<f64>,
    /// Marginal value of a larger loss; non-positive.
    pub loss_price: f64,
    /// Largest generic vs closed-form difference seen.
    pub discrepancy: f64,
}

impl PriceReport {
    /// Value of shrinking the largest loss by 1 MW.
    pub fn reduced_loss_value(&self) -> f64 {
        -self.loss_price
    }
}

/// Closed-form prices of H, P_L and each service.
pub fn closed_form_prices(
    duals: &DualBundle,
    enforced: &NadirConstraint,
    services: &[FrServiceSpec],
    limits: &FrequencyLimits,
) -> (f64, f64, Vec<f64>) {
    let DualBundle { mu, lambda1: l1, lambda2: l2, lambda_rocof: lr, lambda_qss: lq, .. } = *duals;
    let four_df = 4.0 * limits.delta_f_max;
    let sqrt_df = limits.delta_f_max.sqrt();
    let h = (mu - l1) / limits.f0 + 2.0 * lr;
    let loss = -l2 / sqrt_df - lr * limits.f0 / limits.rocof_max - lq;
    let fr = (0..services.len())
        .map(|i| {
            let (t, d) = (services[i].delivery_time, services[i].delay);
            if enforced.finished.contains(&i) {
                finished_service_price(duals, t, d, limits)
            } else if enforced.active.contains(&i) {
                (mu + l1) / t + (mu - l1) * d * d / (t * four_df) - l2 * (d / t) / sqrt_df + lq
            } else {
                lq
            }
        })
        .collect();
    (h, loss, fr)
}

/// Price of a service that has finished ramping before the nadir.
pub fn finished_service_price(duals: &DualBundle, delivery_time: f64, delay: f64, limits: &FrequencyLimits) -> f64 {
    let four_df = 4.0 * limits.delta_f_max;
    duals.lambda2 / limits.delta_f_max.sqrt() - (duals.mu - duals.lambda1) * (delivery_time + 2.0 * delay) / four_df
        + duals.lambda_qss
}

/// Prices from the duals, computed generically from the constraint
/// coefficients and checked against the closed forms.
pub fn compose_prices(
    duals: &DualBundle,
    vars: &FrequencyVars,
    enforced: &NadirConstraint,
    services: &[FrServiceSpec],
    limits: &FrequencyLimits,
) -> Result<PriceReport, MarketError> {
    let rocof = rocof_constraint(vars, limits).as_nonnegative();
    let qss = qss_constraint(vars).as_nonnegative();
    let soc = to_standard_soc(&enforced.soc);
    // standard-form multipliers of the rows (u−v, 2w)
    let (z1, z2) = (-duals.lambda1, -duals.lambda2);
    let generic = |v: VarId| {
        duals.lambda_rocof * rocof.coeff(v)
            + duals.lambda_qss * qss.coeff(v)
            + duals.mu * soc.t.coeff(v)
            + z1 * soc.rows[0].coeff(v)
            + z2 * soc.rows[1].coeff(v)
    };
    let (h_cf, loss_cf, fr_cf) = closed_form_prices(duals, enforced, services, limits);

    let mut discrepancy: f64 = 0.0;
    let mut check = |quantity: String, g: f64, c: f64| {
        let d = (g - c).abs();
        discrepancy = discrepancy.max(d);
        if d > PRICE_TOL {
            return Err(MarketError::PriceMismatch { quantity, generic: g, closed_form: c });
        }
        Ok(g)
    };
    let inertia_price = check("H".into(), generic(vars.inertia), h_cf)?;
    let loss_price = check("P_L".into(), generic(vars.loss), loss_cf)?;
    let mut fr_price = Vec::with_capacity(services.len());
    for (i, s) in services.iter().enumerate() {
        fr_price.push(check(s.name.clone(), generic(vars.fr[i]), fr_cf[i])?);
    }
    Ok(PriceReport { energy_price: duals.energy_dual, inertia_price, fr_price, loss_price, discrepancy })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub commitment: Vec<f64>,
    pub power: Vec<f64>,
    pub fr: Vec<f64>,
    pub service_fr: Vec<f64>,
    pub inertia: f64,
    pub loss: f64,
    pub curtailment: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettlementLine {
    pub name: String,
    pub energy_revenue: f64,
    pub fr_revenue: f64,
    pub inertia_revenue: f64,
    pub loss_payment: f64,
    pub operating_cost: f64,
    pub profit: f64,
    pub make_whole: f64,
}

impl SettlementLine {
    pub fn total_revenue(&self) -> f64 {
        self.energy_revenue + self.fr_revenue + self.inertia_revenue + self.loss_payment
    }

    pub fn energy_profit(&self) -> f64 {
        self.energy_revenue - self.operating_cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossPayment {
    /// Paid at most the unit's energy-market opportunity cost.
    #[default]
    Capped,
    /// Paid the full marginal value of the reduced loss.
    Uncapped,
}

#[derive(Debug, Clone, Default)]
pub struct ClearOptions {
    pub loss_payment: LossPayment,
    pub branch: BranchSettings,
}

#[derive(Debug, Clone)]
pub struct ClearingResult {
    pub dispatch: Dispatch,
    pub prices: PriceReport,
    pub duals: DualBundle,
    pub settlement: Vec<SettlementLine>,
    pub enforced: NadirConstraint,
    pub security: SecurityReport,
    pub nodes: usize,
    /// Step-2 solve quality.
    pub pricing_gap: f64,
    pub pricing_kkt: f64,
    pub warnings: Vec<String>,
    pub node_log: Option<String>,
}

pub fn clear_and_price(scenario: &Scenario, opts: &ClearOptions) -> Result<ClearingResult, MarketError> {
    let asm = assemble(scenario, false)?;
    let mut warnings = Vec::new();

    let (compiled, problem) = asm.misocp();
    let mip = solve_misocp(&problem, &opts.branch)?;
    let (Status::Optimal, Some(sol), Some(alt)) = (mip.status, mip.solution.as_ref(), mip.alternative) else {
        return Err(MarketError::Infeasible(mip.status));
    };
    let x = match polish(&asm, &compiled, &problem, &mip.integers, alt, sol, &opts.branch.conic) {
        Some(x) => x,
        None => {
            warnings.push("tie-break solve failed; using the unpolished dispatch".into());
            sol.x.clone()
        }
    };
    let dispatch = read_dispatch(&asm, scenario, &x, &compiled);
    let enforced = asm.nadir[alt].clone();

    let state =
        SystemState { inertia: dispatch.inertia, loss_size: dispatch.loss, fr_amounts: dispatch.service_fr.clone() };
    let security = check_security(
        &state,
        &scenario.limits,
        &FrTrajectory::from_services(&scenario.services, &dispatch.service_fr),
    );
    if !security.all_ok {
        warnings.push(format!("step-1 dispatch fails the swing check: {security:?}"));
    }

    // Step 2
    let mut relaxed = assemble(scenario, true)?;
    let nadir_id = relaxed.model.add_soc("nadir", to_standard_soc(&relaxed.nadir[alt].soc));
    let priced = relaxed.model.compile();
    let sol2 = conic::solve(&priced.program, &opts.branch.conic);
    if sol2.status != Status::Optimal {
        return Err(MarketError::PricingFailed(sol2.status));
    }
    if !relaxed.nadir[alt].guard_holds(&sol2.x, 1e-6) {
        warnings.push(format!("nadir interval {alt} guard does not hold at the pricing solution"));
    }
    let nz = priced.dual(&sol2, nadir_id);
    let duals = DualBundle {
        energy_dual: priced.dual(&sol2, relaxed.balance)[0],
        lambda_rocof: priced.dual(&sol2, relaxed.rocof)[0],
        lambda_qss: priced.dual(&sol2, relaxed.qss)[0],
        mu: nz[0],
        lambda1: -nz[1],
        lambda2: -nz[2],
        bounds: relaxed
            .bounds
            .iter()
            .map(|&id| (relaxed.model.label(id).to_string(), priced.dual(&sol2, id)[0]))
            .collect(),
    };
    let fv = relaxed.vars.frequency();
    let prices = compose_prices(&duals, &fv, &relaxed.nadir[alt], &scenario.services, &scenario.limits)?;

    // The same prices read straight off the compiled rows.
    let ids = [relaxed.rocof, relaxed.qss, nadir_id];
    let mut pairs =
        vec![("H".to_string(), fv.inertia, prices.inertia_price), ("P_L".into(), fv.loss, prices.loss_price)];
    for (i, s) in scenario.services.iter().enumerate() {
        pairs.push((s.name.clone(), fv.fr[i], prices.fr_price[i]));
    }
    for (quantity, v, p) in pairs {
        let g = priced.dual_weighted_coefficient(&sol2, &ids, v);
        if (g - p).abs() > PRICE_TOL {
            return Err(MarketError::PriceMismatch { quantity, generic: g, closed_form: p });
        }
    }

    let mut result = ClearingResult {
        dispatch,
        prices,
        duals,
        settlement: Vec::new(),
        enforced,
        security,
        nodes: mip.nodes,
        pricing_gap: sol2.gap,
        pricing_kkt: sol2.kkt_residual,
        warnings,
        node_log: mip.node_log,
    };
    result.settlement = settle(&result, scenario, opts.loss_payment);
    Ok(result)
}

/// Among the optimal dispatches, prefers FR from the dearest providers,
/// which leaves cheap headroom free. Integers and the nadir interval stay as
/// step 1 chose them.
fn polish(
    asm: &Assembly,
    compiled: &Compiled,
    problem: &MisocpProblem,
    integers: &[f64],
    alt: usize,
    sol: &ConicSolution,
    st: &conic::Settings,
) -> Option<Vec<f64>> {
    let fr: Vec<(VarId, usize)> = asm.vars.fr.iter().enumerate().filter_map(|(g, r)| r.map(|r| (r, g))).collect();
    if fr.is_empty() {
        return Some(sol.x.clone());
    }
    let mut p = compiled.program.with_block(&problem.alternatives[alt]);
    let n = p.num_vars();
    for (&var, &value) in p.integer_marks.clone().iter().zip(integers) {
        let mut row = vec![0.0; n];
        row[var] = 1.0;
        p.add_equality(&row, value.round());
    }
    let opt = p.objective(&sol.x);
    let c = std::mem::replace(&mut p.c, vec![0.0; n]);
    p.add_le(&c, opt + 1e-9 * opt.abs().max(1.0));
    let cost = |g: usize| compiled.program.c[asm.vars.power[g].0];
    let c_max = fr.iter().map(|&(_, g)| cost(g)).fold(f64::NEG_INFINITY, f64::max);
    for &(r, g) in &fr {
        p.c[r.0] = 1.0 + c_max - cost(g);
    }
    let out = conic::solve(&p, st);
    (out.status == Status::Optimal).then_some(out.x)
}

fn read_dispatch(asm: &Assembly, scenario: &Scenario, x: &[f64], compiled: &Compiled) -> Dispatch {
    let v = &asm.vars;
    let commitment = scenario
        .fleet
        .iter()
        .zip(&v.commitment)
        .map(|(g, y)| match y {
            Some(y) => x[y.0].round(),
            None => f64::from(g.unit_count),
        })
        .collect();
    Dispatch {
        commitment,
        power: v.power.iter().map(|p| x[p.0]).collect(),
        fr: v.fr.iter().map(|r| r.map_or(0.0, |r| x[r.0])).collect(),
        service_fr: v.service_fr.iter().map(|r| x[r.0]).collect(),
        inertia: x[v.inertia.0],
        loss: x[v.loss.0],
        curtailment: v.curtailment.map_or(0.0, |c| x[c.0]),
        cost: compiled.program.objective(x) + compiled.objective_offset,
    }
}

/// Revenues and profits per generator type at the step-2 prices.
pub fn settle(result: &ClearingResult, scenario: &Scenario, payment: LossPayment) -> Vec<SettlementLine> {
    let d = &result.dispatch;
    let p = &result.prices;
    let tracked = scenario.largest_infeed().filter(|_| scenario.loss.tracks_unit);
    scenario
        .fleet
        .iter()
        .enumerate()
        .map(|(g, gen)| {
            let y = d.commitment[g];
            let energy_revenue = p.energy_price * d.power[g];
            let fr_revenue = scenario.service_of(g).map_or(0.0, |i| p.fr_price[i] * d.fr[g]);
            let inertia_revenue = match scenario.mode {
                Mode::UnitCommitment => p.inertia_price * gen.unit_inertia() * y,
                Mode::EconomicDispatch => 0.0,
            };
            let loss_payment = if tracked == Some(g) {
                let reduction = gen.p_max - d.loss;
                let rate = match payment {
                    LossPayment::Capped => p.reduced_loss_value().min((p.energy_price - gen.marginal_cost).max(0.0)),
                    LossPayment::Uncapped => p.reduced_loss_value(),
                };
                rate * reduction
            } else {
                0.0
            };
            let operating_cost = gen.no_load_cost * y + gen.marginal_cost * d.power[g];
            let profit = energy_revenue + fr_revenue + inertia_revenue + loss_payment - operating_cost;
            SettlementLine {
                name: gen.name.clone(),
                energy_revenue,
                fr_revenue,
                inertia_revenue,
                loss_payment,
                operating_cost,
                profit,
                make_whole: (-profit).max(0.0),
            }
        })
        .collect()
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Long-format CSV `section,item,name,value` covering dispatch, prices and
/// settlement.
pub fn results_csv(result: &ClearingResult, scenario: &Scenario) -> String {
    let mut out = String::from("section,item,name,value\n");
    let mut row = |section: &str, item: &str, name: &str, v: f64| {
        let _ = writeln!(out, "{section},{item},{name},{}", num(v));
    };
    let d = &result.dispatch;
    for (g, gen) in scenario.fleet.iter().enumerate() {
        row("dispatch", "online_units", &gen.name, d.commitment[g]);
        row("dispatch", "power_mw", &gen.name, d.power[g]);
        row("dispatch", "fr_mw", &gen.name, d.fr[g]);
    }
    for (i, s) in scenario.services.iter().enumerate() {
        row("dispatch", "service_fr_mw", &s.name, d.service_fr[i]);
    }
    row("dispatch", "inertia_mws", "system", d.inertia);
    row("dispatch", "loss_mw", "system", d.loss);
    row("dispatch", "res_curtailed_mw", "system", d.curtailment);
    row("dispatch", "nadir_interval", "system", result.enforced.interval_id as f64);
    row("dispatch", "total_cost", "system", d.cost);

    let p = &result.prices;
    row("prices", "energy", "system", p.energy_price);
    row("prices", "inertia", "system", p.inertia_price);
    row("prices", "reduced_loss", "system", p.reduced_loss_value());
    for (i, s) in scenario.services.iter().enumerate() {
        row("prices", "fr", &s.name, p.fr_price[i]);
    }

    for l in &result.settlement {
        row("settlement", "operating_cost", &l.name, l.operating_cost);
        row("settlement", "energy_revenue", &l.name, l.energy_revenue);
        row("settlement", "fr_revenue", &l.name, l.fr_revenue);
        row("settlement", "inertia_revenue", &l.name, l.inertia_revenue);
        row("settlement", "reduced_loss_revenue", &l.name, l.loss_payment);
        row("settlement", "total_revenue", &l.name, l.total_revenue());
        row("settlement", "energy_profit", &l.name, l.energy_profit());
        row("settlement", "profit", &l.name, l.profit);
        row("settlement", "make_whole", &l.name, l.make_whole);
    }
    out
}
