//! Bundled case-study tables: each one reruns its scenario and compares the
//! printed cells with the computed ones.

use std::fmt::Write as _;

use freqsec::market::{clear_and_price, ClearingResult};
use freqsec::model::{parse_scenario, Scenario};

use crate::commands::{market_failure, options};
use crate::Exit;

const ED_TABLE2: &str = include_str!("../../core/scenarios/ed_table2.json");
const ED_TABLE5: &str = include_str!("../../core/scenarios/ed_table5.json");
const ED_TABLE5_DELAY: &str = include_str!("../../core/scenarios/ed_table5_delay.json");
const ED_TABLE8: &str = include_str!("../../core/scenarios/ed_table8.json");
const ED_TABLE10: &str = include_str!("../../core/scenarios/ed_table10.json");
const UC_TABLE12: &str = include_str!("../../core/scenarios/uc_table12.json");
const UC_TABLE12_H6: &str = include_str!("../../core/scenarios/uc_table12_h6.json");

pub const SUPPORTED: [u32; 10] = [3, 4, 6, 7, 9, 11, 13, 14, 15, 16];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    Abs(f64),
    Band(f64, f64),
    /// Shown for comparison only.
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub published: f64,
    pub computed: f64,
    pub check: Check,
}

impl Cell {
    pub fn passes(&self) -> bool {
        match self.check {
            Check::Abs(tol) => (self.computed - self.published).abs() <= tol,
            Check::Band(lo, hi) => (lo..=hi).contains(&self.computed),
            Check::Info => true,
        }
    }

    fn tolerance(&self) -> String {
        match self.check {
            Check::Abs(t) => format!("±{t}"),
            Check::Band(lo, hi) => format!("[{lo}, {hi}]"),
            Check::Info => "ref".into(),
        }
    }
}

struct Cells(Vec<Cell>);

impl Cells {
    fn add(&mut self, label: impl Into<String>, published: f64, computed: f64, check: Check) {
        self.0.push(Cell { label: label.into(), published, computed, check });
    }

    fn per_unit(&mut self, what: &str, published: [f64; 3], computed: impl Fn(usize) -> f64, check: Check) {
        for (g, p) in published.into_iter().enumerate() {
            self.add(format!("{what} [{}]", ["nuclear", "type1", "type2"][g]), p, computed(g), check);
        }
    }
}

type Failure = (Exit, String);

/// Scenario text plus demand and renewable overrides.
fn scenario(text: &str, demand: Option<f64>, res: Option<f64>) -> Scenario {
    let mut s = parse_scenario(text).expect("bundled scenario parses");
    if let Some(d) = demand {
        s.demand = d;
    }
    if let Some(r) = res {
        s.res_available = r;
    }
    s
}

fn run(s: &Scenario, uncapped: bool) -> Result<ClearingResult, Failure> {
    clear_and_price(s, &options(uncapped, false)).map_err(market_failure)
}

fn ed_single(demand: f64) -> Result<(Scenario, ClearingResult), Failure> {
    let s = scenario(ED_TABLE2, Some(demand), None);
    let r = run(&s, false)?;
    Ok((s, r))
}

pub fn cells(table: u32) -> Result<Vec<Cell>, Failure> {
    use Check::{Abs, Band, Info};
    let mut c = Cells(Vec::new());
    match table {
        3 => {
            let (_, r) = ed_single(250.0)?;
            c.per_unit("power MW", [100.0, 150.0, 0.0], |g| r.dispatch.power[g], Abs(0.1));
            c.per_unit("FR MW", [0.0, 197.0, 175.0], |g| r.dispatch.fr[g], Abs(1.0));
            c.per_unit("energy revenue", [1700.0, 2550.0, 0.0], |g| r.settlement[g].energy_revenue, Abs(1.0));
            c.per_unit("FR revenue", [0.0; 3], |g| r.settlement[g].fr_revenue, Abs(1.0));
            c.per_unit("profit", [200.0, 0.0, 0.0], |g| r.settlement[g].profit, Abs(0.5));
            c.add("energy price", 17.0, r.prices.energy_price, Abs(0.01));
            c.add("FR price", 0.0, r.prices.fr_price[0], Abs(0.01));
        }
        4 => {
            let (s, r) = ed_single(400.0)?;
            c.per_unit("power MW", [100.0, 203.0, 97.0], |g| r.dispatch.power[g], Abs(0.5));
            c.per_unit("FR MW", [0.0, 197.0, 175.0], |g| r.dispatch.fr[g], Abs(1.0));
            // dispatch is printed to the MW, so revenue carries ±0.5 MW at 18
            c.per_unit("energy revenue", [1800.0, 3654.0, 1746.0], |g| r.settlement[g].energy_revenue, Abs(9.0));
            c.per_unit("FR revenue", [0.0, 197.0, 175.0], |g| r.settlement[g].fr_revenue, Abs(1.0));
            c.per_unit("profit", [300.0, 400.0, 175.0], |g| r.settlement[g].profit, Abs(0.5));
            c.add("energy price", 18.0, r.prices.energy_price, Abs(0.01));
            c.add("FR price", 1.0, r.prices.fr_price[0], Abs(0.01));
            let opportunity = r.prices.energy_price - s.fleet[1].marginal_cost;
            c.add("FR price minus type1 opportunity cost", 0.0, r.prices.fr_price[0] - opportunity, Abs(1e-6));
        }
        6 => {
            let s = scenario(ED_TABLE5, None, None);
            let r = run(&s, false)?;
            c.per_unit("power MW", [100.0, 50.6, 249.4], |g| r.dispatch.power[g], Abs(0.1));
            c.per_unit("FR MW", [0.0, 225.0, 50.6], |g| r.dispatch.fr[g], Abs(0.1));
            // printed FR1 revenue uses the rounded price 1.4 on 225 MW
            c.per_unit("FR revenue", [0.0, 315.0, 50.6], |g| r.settlement[g].fr_revenue, Abs(0.05 * 225.0));
            c.per_unit("profit", [400.0, 315.0, 300.0], |g| r.settlement[g].profit, Abs(0.05 * 225.0));
            c.add("energy price", 19.0, r.prices.energy_price, Abs(0.01));
            c.add("FR1 price", 1.4, r.prices.fr_price[0], Abs(0.05));
            c.add("FR2 price", 1.0, r.prices.fr_price[1], Abs(0.01));
            c.add("FR1/FR2 price ratio", 10.0 / 7.0, r.prices.fr_price[0] / r.prices.fr_price[1], Abs(1e-6));
        }
        7 => {
            let s = scenario(ED_TABLE5_DELAY, None, None);
            let r = run(&s, false)?;
            c.per_unit("power MW", [100.0, 143.5, 156.5], |g| r.dispatch.power[g], Abs(0.2));
            c.per_unit("FR MW", [0.0, 225.0, 143.5], |g| r.dispatch.fr[g], Abs(0.2));
            c.per_unit("FR revenue", [0.0, 222.7, 143.5], |g| r.settlement[g].fr_revenue, Abs(0.01 * 225.0 + 0.2));
            c.per_unit("profit", [400.0, 222.7, 300.0], |g| r.settlement[g].profit, Abs(0.01 * 225.0 + 0.2));
            c.add("energy price", 19.0, r.prices.energy_price, Abs(0.01));
            c.add("FR1 price", 0.99, r.prices.fr_price[0], Abs(0.01));
            c.add("FR2 price", 1.0, r.prices.fr_price[1], Abs(0.01));
            c.add("FR2 price minus FR1 price", 0.01, r.prices.fr_price[1] - r.prices.fr_price[0], Band(1e-9, 0.02));
        }
        9 => {
            let s = scenario(ED_TABLE8, None, None);
            let r = run(&s, false)?;
            c.add("nuclear power MW (exact 92.95)", 93.0, r.dispatch.power[0], Abs(0.2));
            c.add("type1 power MW", 7.0, r.dispatch.power[1], Abs(0.2));
            c.add("type2 power MW", 300.0, r.dispatch.power[2], Abs(0.2));
            c.add("type1 FR MW", 225.0, r.dispatch.fr[1], Abs(0.1));
            c.add("nuclear reduced-loss revenue", 28.0, r.settlement[0].loss_payment, Abs(1.0));
            c.add("type1 FR revenue", 186.8, r.settlement[1].fr_revenue, Abs(0.02 * 225.0));
            c.per_unit("profit", [400.0, 186.8, 300.0], |g| r.settlement[g].profit, Abs(0.02 * 225.0));
            c.add("energy price", 19.0, r.prices.energy_price, Abs(0.01));
            c.add("reduced-loss price", 4.0, r.prices.reduced_loss_value(), Abs(0.05));
            c.add("FR1 price", 0.83, r.prices.fr_price[0], Abs(0.02));
            c.add("FR2 price", 0.58, r.prices.fr_price[1], Abs(0.02));
        }
        11 => {
            let s = scenario(ED_TABLE10, None, None);
            let r = run(&s, true)?;
            c.add("nuclear power MW", 95.0, r.dispatch.power[0], Abs(1e-6));
            c.add("type1 power MW", 19.3, r.dispatch.power[1], Abs(0.2));
            c.add("type2 power MW", 285.7, r.dispatch.power[2], Abs(0.2));
            c.add("type1 FR MW", 225.0, r.dispatch.fr[1], Abs(0.1));
            c.add("type2 FR MW", 14.3, r.dispatch.fr[2], Abs(0.2));
            c.add("nuclear reduced-loss revenue (uncapped)", 35.5, r.settlement[0].loss_payment, Abs(0.5));
            c.add("nuclear profit (uncapped)", 415.5, r.settlement[0].profit, Abs(0.5));
            c.add("type1 FR revenue", 315.0, r.settlement[1].fr_revenue, Abs(0.05 * 225.0));
            c.add("energy price", 19.0, r.prices.energy_price, Abs(0.01));
            c.add("reduced-loss price", 7.1, r.prices.reduced_loss_value(), Abs(0.1));
            c.add("FR1 price", 1.4, r.prices.fr_price[0], Abs(0.05));
            c.add("FR2 price", 1.0, r.prices.fr_price[1], Abs(0.01));
        }
        13 | 14 => {
            let s = scenario(if table == 13 { UC_TABLE12 } else { UC_TABLE12_H6 }, None, None);
            let r = run(&s, false)?;
            let k = |v: f64| v / 1000.0;
            c.per_unit("online units", [1.0, 24.0, 30.0], |g| r.dispatch.commitment[g], Abs(0.0));
            c.per_unit("power GW", [1.8, 7.7, 4.5], |g| k(r.dispatch.power[g]), Abs(0.05));
            let fr1 = if table == 13 { 4.3 } else { 4.1 };
            c.per_unit("FR GW", [0.0, fr1, 0.0], |g| k(r.dispatch.fr[g]), Abs(0.05));
            c.per_unit("operating cost £k", [18.0, 743.5, 240.0], |g| k(r.settlement[g].operating_cost), Abs(0.05));
            let energy = if table == 13 { [172.4, 737.6, 431.0] } else { [172.4, 737.7, 431.1] };
            c.per_unit("energy revenue £k", energy, |g| k(r.settlement[g].energy_revenue), Abs(0.5));
            let (total, profit) = if table == 13 {
                ([172.8, 743.4, 431.9], [154.8, -0.1, 191.9])
            } else {
                ([172.8, 743.4, 432.2], [154.8, -0.1, 192.2])
            };
            c.per_unit("total revenue £k", total, |g| k(r.settlement[g].total_revenue()), Info);
            c.per_unit("total profit £k", profit, |g| k(r.settlement[g].profit), Info);
            let (e, h, f1, f2) = if table == 13 { (95.79, 0.041, 0.79, 0.55) } else { (95.80, 0.039, 0.81, 0.56) };
            c.add("energy price", e, r.prices.energy_price, Abs(0.05));
            c.add("inertia price", h, r.prices.inertia_price, Abs(0.002));
            c.add("FR1 price", f1, r.prices.fr_price[0], Abs(0.02));
            c.add("FR2 price", f2, r.prices.fr_price[1], Abs(0.02));
            c.add("RES curtailed GW", 0.0, k(r.dispatch.curtailment), Abs(0.05));
        }
        15 | 16 => {
            let base = scenario(UC_TABLE12, None, Some(18000.0));
            let rb = run(&base, false)?;
            let r = if table == 15 { rb.clone() } else { run(&scenario(UC_TABLE12_H6, None, Some(18000.0)), false)? };
            let k = |v: f64| v / 1000.0;
            let p = if table == 15 {
                ([1.0, 17.0, 27.0], [1.8, 4.25, 2.05], [0.0, 4.25, 2.0], [18.0, 412.2, 116.0])
            } else {
                ([1.0, 16.0, 28.0], [1.8, 4.0, 2.1], [0.0, 4.0, 2.1], [18.0, 388.0, 119.0])
            };
            c.per_unit("online units", p.0, |g| r.dispatch.commitment[g], Abs(0.0));
            c.per_unit("power GW", p.1, |g| k(r.dispatch.power[g]), Abs(0.05));
            c.per_unit("FR GW", p.2, |g| k(r.dispatch.fr[g]), Abs(0.05));
            // derived from generation printed to 0.05 GW; 27 type-2 units at MSG give 2.025 GW
            c.per_unit("operating cost £k", p.3, |g| k(r.settlement[g].operating_cost), Info);
            c.per_unit("energy revenue £k", [0.0; 3], |g| k(r.settlement[g].energy_revenue), Abs(0.05));
            let (total, profit) = if table == 15 {
                ([41.4, 413.1, 166.7], [23.4, 0.9, 50.7])
            } else {
                ([39.6, 388.4, 188.8], [21.6, 0.4, 69.8])
            };
            c.per_unit("total revenue £k", total, |g| k(r.settlement[g].total_revenue()), Info);
            c.per_unit("total profit £k", profit, |g| k(r.settlement[g].profit), Info);
            let (h, f1, f2, curt) = if table == 15 { (4.6, 51.2, 35.9, 2.1) } else { (4.4, 53.1, 37.1, 1.9) };
            c.add("energy price", 0.0, r.prices.energy_price, Abs(0.01));
            c.add("inertia price", h, r.prices.inertia_price, Abs(0.1));
            c.add("FR1 price", f1, r.prices.fr_price[0], Abs(0.5));
            c.add("FR2 price", f2, r.prices.fr_price[1], Abs(0.5));
            c.add("RES curtailed GW", curt, k(r.dispatch.curtailment), Abs(0.05));
            if table == 16 {
                let gain = 100.0 * (r.settlement[2].profit / rb.settlement[2].profit - 1.0);
                c.add("type2 profit increase over table 15 %", 38.0, gain, Band(35.0, 42.0));
            }
        }
        _ => {
            let list: Vec<String> = SUPPORTED.iter().map(u32::to_string).collect();
            return Err((Exit::Usage, format!("unknown table {table}; supported: {}", list.join(", "))));
        }
    }
    Ok(c.0)
}

pub fn render(table: u32, cells: &[Cell]) -> String {
    let mut out = format!("table {table}\n");
    let _ = writeln!(out, "{:<44} {:>12} {:>14} {:>12}  status", "cell", "published", "computed", "tolerance");
    for cell in cells {
        let status = match (cell.check, cell.passes()) {
            (Check::Info, _) => "info",
            (_, true) => "ok",
            (_, false) => "FAIL",
        };
        let _ = writeln!(
            out,
            "{:<44} {:>12} {:>14.6} {:>12}  {status}",
            cell.label,
            cell.published,
            cell.computed,
            cell.tolerance()
        );
    }
    out
}

pub fn reproduce(table: u32, verbose: bool) -> Exit {
    let cells = match cells(table) {
        Ok(c) => c,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return code;
        }
    };
    print!("{}", render(table, &cells));
    let failed: Vec<&Cell> = cells.iter().filter(|c| !c.passes()).collect();
    if failed.is_empty() {
        println!("all {} checked cells within tolerance", cells.iter().filter(|c| c.check != Check::Info).count());
        return Exit::Ok;
    }
    eprintln!("{} cell(s) out of tolerance:", failed.len());
    for c in failed {
        eprintln!("  {}: published {} computed {:.6} ({})", c.label, c.published, c.computed, c.tolerance());
    }
    if verbose {
        eprintln!("rerun `freqsec clear` on the bundled scenario with --verbose for solver details");
    }
    Exit::Mismatch
}
