use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use freqsec::branch::BranchSettings;
use freqsec::market::{clear_and_price, results_csv, ClearOptions, ClearingResult, LossPayment, MarketError};
use freqsec::model::{parse_scenario, FrServiceSpec, FrequencyLimits, Scenario, SystemState};
use freqsec::swing::{check_security, trajectory_csv, FrTrajectory, SecurityReport, SwingError};

use crate::{Exit, RunConfig};

type Failure = (Exit, String);

pub fn load_scenario(cfg: &RunConfig) -> Result<Scenario, Failure> {
    let path = cfg.scenario.as_ref().ok_or((Exit::Usage, "--scenario is required".to_string()))?;
    let text = fs::read_to_string(path).map_err(|e| (Exit::Usage, format!("cannot read {}: {e}", path.display())))?;
    let mut s = parse_scenario(&text).map_err(|e| (Exit::Usage, format!("{}: {e}", path.display())))?;
    if let Some(d) = cfg.demand {
        s.demand = d;
    }
    if let Some(r) = cfg.res {
        s.res_available = r;
    }
    if let Some(m) = cfg.mode {
        s.mode = m;
    }
    s.validate().map_err(|e| (Exit::Usage, format!("{}: {e}", path.display())))?;
    Ok(s)
}

pub fn options(uncapped: bool, verbose: bool) -> ClearOptions {
    ClearOptions {
        loss_payment: if uncapped { LossPayment::Uncapped } else { LossPayment::Capped },
        branch: BranchSettings { node_log: verbose, ..BranchSettings::default() },
    }
}

pub fn market_failure(e: MarketError) -> Failure {
    let code = match e {
        MarketError::Infeasible(_) | MarketError::InfeasibleDemand { .. } => Exit::Infeasible,
        _ => Exit::Usage,
    };
    (code, e.to_string())
}

fn report(r: Result<Exit, Failure>) -> Exit {
    match r {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| (Exit::Usage, format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| (Exit::Usage, format!("cannot write {}: {e}", path.display())))
}

/// Splits the long-format results into one file per section.
fn write_results(dir: &Path, csv: &str) -> Result<(), Failure> {
    for section in ["dispatch", "prices", "settlement"] {
        let mut body = String::from("item,name,value\n");
        let prefix = format!("{section},");
        for line in csv.lines().filter_map(|l| l.strip_prefix(&prefix)) {
            body.push_str(line);
            body.push('\n');
        }
        write_file(dir, &format!("{section}.csv"), &body)?;
    }
    Ok(())
}

pub fn summary(r: &ClearingResult, s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>8} {:>12} {:>12} {:>14} {:>14}",
        "generator", "online", "power_mw", "fr_mw", "revenue", "profit"
    );
    for (g, gen) in s.fleet.iter().enumerate() {
        let l = &r.settlement[g];
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>12.3} {:>12.3} {:>14.2} {:>14.2}",
            gen.name,
            r.dispatch.commitment[g],
            r.dispatch.power[g],
            r.dispatch.fr[g],
            l.total_revenue(),
            l.profit
        );
    }
    let p = &r.prices;
    let _ = writeln!(out, "energy price        {:.4}", p.energy_price);
    let _ = writeln!(out, "inertia price       {:.5}", p.inertia_price);
    let _ = writeln!(out, "reduced-loss value  {:.4}", p.reduced_loss_value());
    for (svc, v) in s.services.iter().zip(&p.fr_price) {
        let _ = writeln!(out, "{:<19} {:.4}", format!("{} price", svc.name), v);
    }
    let _ = writeln!(out, "inertia             {:.1} MW·s", r.dispatch.inertia);
    let _ = writeln!(out, "largest loss        {:.3} MW", r.dispatch.loss);
    let _ = writeln!(out, "curtailment         {:.1} MW", r.dispatch.curtailment);
    let _ = writeln!(out, "total cost          {:.2}", r.dispatch.cost);
    let _ = writeln!(out, "{}", security_line(&r.security));
    out
}

fn security_line(sec: &SecurityReport) -> String {
    match (sec.nadir_dev, sec.t_nadir) {
        (Some(d), Some(t)) => format!(
            "rocof {:.4} Hz/s, nadir {:.6} Hz at {:.4} s, {}",
            sec.rocof_at_0,
            d,
            t,
            if sec.all_ok { "secure" } else { "INSECURE" }
        ),
        _ => format!("rocof {:.4} Hz/s, frequency collapse", sec.rocof_at_0),
    }
}

pub fn clear(cfg: &RunConfig) -> Exit {
    report(run_clear(cfg))
}

fn run_clear(cfg: &RunConfig) -> Result<Exit, Failure> {
    let s = load_scenario(cfg)?;
    let r = clear_and_price(&s, &options(cfg.uncapped_loss_payment, cfg.verbose)).map_err(market_failure)?;
    if cfg.verbose {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        eprintln!("nodes: {}, pricing gap {:.2e}, pricing kkt {:.2e}", r.nodes, r.pricing_gap, r.pricing_kkt);
        if let Some(log) = &r.node_log {
            eprint!("{log}");
        }
    }
    print!("{}", summary(&r, &s));
    write_results(&cfg.out, &results_csv(&r, &s))?;
    Ok(if r.security.all_ok { Exit::Ok } else { Exit::Infeasible })
}

/// `AMOUNT@DELIVERY[+DELAY]`
fn parse_fr(spec: &str) -> Result<(f64, f64, f64), String> {
    let bad = || format!("bad FR spec `{spec}`, expected AMOUNT@DELIVERY or AMOUNT@DELIVERY+DELAY");
    let (amount, timing) = spec.split_once('@').ok_or_else(bad)?;
    let (t, d) = timing.split_once('+').unwrap_or((timing, "0"));
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
    let (a, t, d) = (num(amount)?, num(t)?, num(d)?);
    if !(a >= 0.0 && t > 0.0 && d >= 0.0) {
        return Err(bad());
    }
    Ok((a, t, d))
}

pub fn simulate(cfg: &RunConfig, inertia: Option<f64>, loss: Option<f64>, fr: &[String]) -> Exit {
    report(run_simulate(cfg, inertia, loss, fr))
}

fn run_simulate(cfg: &RunConfig, inertia: Option<f64>, loss: Option<f64>, fr: &[String]) -> Result<Exit, Failure> {
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err((Exit::Usage, "--step must be positive".into()));
    }
    let (state, limits, traj) = if fr.is_empty() {
        let s = load_scenario(cfg)?;
        let r = clear_and_price(&s, &options(cfg.uncapped_loss_payment, false)).map_err(market_failure)?;
        let state = SystemState {
            inertia: inertia.unwrap_or(r.dispatch.inertia),
            loss_size: loss.unwrap_or(r.dispatch.loss),
            fr_amounts: r.dispatch.service_fr.clone(),
        };
        let traj = FrTrajectory::from_services(&s.services, &state.fr_amounts);
        (state, s.limits, traj)
    } else {
        let limits = match &cfg.scenario {
            Some(_) => load_scenario(cfg)?.limits,
            None => FrequencyLimits::default(),
        };
        let mut services = Vec::new();
        let mut amounts = Vec::new();
        for (i, spec) in fr.iter().enumerate() {
            let (a, t, d) = parse_fr(spec).map_err(|m| (Exit::Usage, m))?;
            services.push(FrServiceSpec::new(format!("FR{}", i + 1), t, d));
            amounts.push(a);
        }
        let (Some(h), Some(pl)) = (inertia, loss) else {
            return Err((Exit::Usage, "--inertia and --loss are required with --fr".into()));
        };
        let state = SystemState { inertia: h, loss_size: pl, fr_amounts: amounts };
        (state.clone(), limits, FrTrajectory::from_services(&services, &state.fr_amounts))
    };
    if !(state.inertia > 0.0 && state.loss_size >= 0.0) {
        return Err((Exit::Usage, "inertia must be positive and the loss nonnegative".into()));
    }

    let sec = check_security(&state, &limits, &traj);
    let t_end = traj.completion_time().max(sec.t_nadir.unwrap_or(0.0)) + 5.0;
    write_file(&cfg.out, "trajectory.csv", &trajectory_csv(&state, &limits, &traj, cfg.step, t_end))?;
    let mut body = String::from("quantity,value\n");
    let opt = |v: Option<f64>| v.map_or_else(|| "collapse".to_string(), |x| format!("{x:.9}"));
    let _ = writeln!(body, "rocof_hz_per_s,{:.9}", sec.rocof_at_0);
    let _ = writeln!(body, "t_nadir_s,{}", opt(sec.t_nadir));
    let _ = writeln!(body, "nadir_dev_hz,{}", opt(sec.nadir_dev));
    let _ = writeln!(body, "rocof_ok,{}", sec.rocof_ok);
    let _ = writeln!(body, "nadir_ok,{}", sec.nadir_ok);
    let _ = writeln!(body, "qss_ok,{}", sec.qss_ok);
    write_file(&cfg.out, "security.csv", &body)?;

    println!("inertia {:.3} MW·s, loss {:.3} MW, FR {:.3} MW", state.inertia, state.loss_size, traj.total());
    if sec.nadir_dev.is_none() {
        let e = SwingError::FrequencyCollapse { total: traj.total(), loss: state.loss_size };
        println!("{e}");
        return Ok(Exit::Infeasible);
    }
    println!("{}", security_line(&sec));
    if let Some(t) = sec.t_nadir {
        let ramping: Vec<String> = traj
            .ramps()
            .iter()
            .zip(1..)
            .filter(|(r, _)| r.delay < t && t < r.delay + r.delivery_time)
            .map(|(_, i)| format!("FR{i}"))
            .collect();
        println!("ramping at the nadir: {}", if ramping.is_empty() { "none".to_string() } else { ramping.join(" ") });
    }
    Ok(if sec.all_ok { Exit::Ok } else { Exit::Infeasible })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fr_specs() {
        assert_eq!(parse_fr("372@10"), Ok((372.0, 10.0, 0.0)));
        assert_eq!(parse_fr("225@7+0.4"), Ok((225.0, 7.0, 0.4)));
        assert!(parse_fr("372").is_err());
        assert!(parse_fr("372@0").is_err());
        assert!(parse_fr("x@1").is_err());
    }
}
