//! Branch-and-bound over integer-marked variables and a one-of-N choice of
//! conic blocks (the nadir interval), plus an exhaustive oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::conic::{solve, ConicBlock, ConicProgram, ConicSolution, Settings, Status};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BranchError {
    #[error("enumeration needs {0} convex solves, above the 2^20 guard")]
    TooLarge(u128),
    #[error("integer variable {0} has no finite bounds")]
    UnboundedInteger(usize),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

/// A conic program whose integer-marked variables must take integral values
/// and, when `alternatives` is non-empty, exactly one of the blocks must be
/// appended.
#[derive(Debug, Clone)]
pub struct MisocpProblem {
    pub base: ConicProgram,
    /// Box for each entry of `base.integer_marks`, in the same order.
    pub integer_bounds: Vec<(f64, f64)>,
    pub alternatives: Vec<ConicBlock>,
    /// Branching priority per integer mark; larger wins ties on
    /// fractionality.
    pub priority: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSettings {
    pub conic: Settings,
    pub mip_gap: f64,
    pub int_tol: f64,
    pub max_nodes: usize,
    pub node_log: bool,
}

impl Default for BranchSettings {
    fn default() -> Self {
        BranchSettings { conic: Settings::default(), mip_gap: 1e-6, int_tol: 1e-6, max_nodes: 200_000, node_log: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisocpSolution {
    pub status: Status,
    /// Final solve with integers fixed and the chosen block appended.
    pub solution: Option<ConicSolution>,
    pub alternative: Option<usize>,
    pub integers: Vec<f64>,
    pub objective: f64,
    pub nodes: usize,
    /// Children whose bound fell below their parent's beyond tolerance.
    pub bound_violations: usize,
    /// CSV `node,parent,depth,bound,incumbent,status,decision` when requested.
    pub node_log: Option<String>,
}

impl MisocpSolution {
    fn infeasible(nodes: usize, log: Option<String>) -> Self {
        MisocpSolution {
            status: Status::Infeasible,
            solution: None,
            alternative: None,
            integers: Vec::new(),
            objective: f64::INFINITY,
            nodes,
            bound_violations: 0,
            node_log: log,
        }
    }
}

impl MisocpProblem {
    pub fn new(base: ConicProgram, integer_bounds: Vec<(f64, f64)>, alternatives: Vec<ConicBlock>) -> Self {
        let priority = vec![0.0; base.integer_marks.len()];
        MisocpProblem { base, integer_bounds, alternatives, priority }
    }

    fn check(&self) -> Result<(), BranchError> {
        self.base.validate().map_err(BranchError::Malformed)?;
        if self.integer_bounds.len() != self.base.integer_marks.len() {
            return Err(BranchError::Malformed("one bound pair per integer mark".into()));
        }
        if self.priority.len() != self.base.integer_marks.len() {
            return Err(BranchError::Malformed("one priority per integer mark".into()));
        }
        for b in &self.alternatives {
            if b.g.cols != self.base.num_vars() {
                return Err(BranchError::Malformed("alternative block width".into()));
            }
        }
        Ok(())
    }

    /// Base program with the node's box and block.
    fn node_program(&self, bounds: &[(f64, f64)], alternative: Option<usize>) -> ConicProgram {
        let mut p = self.base.clone();
        let n = p.num_vars();
        for (k, &var) in self.base.integer_marks.iter().enumerate() {
            let (lo, hi) = bounds[k];
            let mut row = vec![0.0; n];
            if lo == hi {
                row[var] = 1.0;
                p.add_equality(&row, lo);
                continue;
            }
            if hi.is_finite() {
                row[var] = 1.0;
                p.add_le(&row, hi);
            }
            if lo.is_finite() {
                row[var] = -1.0;
                p.add_le(&row, -lo);
            }
        }
        if let Some(a) = alternative {
            p.append(&self.alternatives[a]);
        }
        p
    }

    fn solve_node(&self, bounds: &[(f64, f64)], alternative: Option<usize>, st: &Settings) -> ConicSolution {
        solve(&self.node_program(bounds, alternative), st)
    }

    fn integer_values(&self, x: &[f64]) -> Vec<f64> {
        self.base.integer_marks.iter().map(|&i| x[i]).collect()
    }
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    bounds: Vec<(f64, f64)>,
    /// `None` while the block choice is open.
    alternative: Option<usize>,
    solution: ConicSolution,
}

impl Node {
    fn key(&self) -> (usize, Vec<(f64, f64)>) {
        (self.alternative.map_or(0, |a| a + 1), self.bounds.clone())
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    /// Max-heap order: the node to expand next compares greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        let key_cmp = |a: &Node, b: &Node| {
            let (ka, kb) = (a.key(), b.key());
            ka.0.cmp(&kb.0).then_with(|| {
                for (x, y) in ka.1.iter().zip(&kb.1) {
                    let c = x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1));
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                Ordering::Equal
            })
        };
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.depth.cmp(&self.depth))
            .then_with(|| key_cmp(other, self))
            .then(other.id.cmp(&self.id))
    }
}

struct Incumbent {
    objective: f64,
    solution: ConicSolution,
    alternative: Option<usize>,
    integers: Vec<f64>,
}

fn prunable(bound: f64, inc: &Option<Incumbent>, gap: f64) -> bool {
    match inc {
        Some(i) => bound >= i.objective - gap * 1f64.max(i.objective.abs()),
        None => false,
    }
}

struct Search<'a> {
    problem: &'a MisocpProblem,
    settings: &'a BranchSettings,
    next_id: usize,
    nodes: usize,
    violations: usize,
    failure: bool,
}

impl Search<'_> {
    #[allow(clippy::too_many_arguments)]
    fn create(
        &mut self,
        bounds: Vec<(f64, f64)>,
        alternative: Option<usize>,
        depth: usize,
        parent: Option<(usize, f64)>,
        decision: String,
        heap: &mut BinaryHeap<Node>,
        inc: &Option<Incumbent>,
        log: &mut Option<String>,
    ) {
        let sol = self.problem.solve_node(&bounds, alternative, &self.settings.conic);
        let id = self.next_id;
        self.next_id += 1;
        self.nodes += 1;
        let bound = match sol.status {
            Status::Optimal => sol.objective_value,
            Status::Infeasible => f64::INFINITY,
            Status::Unbounded => f64::NEG_INFINITY,
            Status::NumericalFailure => {
                self.failure = true;
                f64::INFINITY
            }
        };
        if let Some((_, pb)) = parent {
            if bound < pb - 1e-7 * 1f64.max(pb.abs()) {
                self.violations += 1;
            }
        }
        if let Some(l) = log.as_mut() {
            let inc_s = inc.as_ref().map_or(String::new(), |i| format!("{:.9}", i.objective));
            let par = parent.map_or(String::new(), |(p, _)| p.to_string());
            let _ = writeln!(l, "{id},{par},{depth},{bound:.9},{inc_s},{:?},{decision}", sol.status);
        }
        if bound.is_finite() {
            heap.push(Node { id, depth, bound, bounds, alternative, solution: sol });
        }
    }
}

/// Global optimum over integer assignments and block choices, best-first.
pub fn solve_misocp(problem: &MisocpProblem, st: &BranchSettings) -> Result<MisocpSolution, BranchError> {
    problem.check()?;
    let mut log = st.node_log.then(|| String::from("node,parent,depth,bound,incumbent,status,decision\n"));
    let open_choice = !problem.alternatives.is_empty();
    let mut search = Search { problem, settings: st, next_id: 0, nodes: 0, violations: 0, failure: false };
    let mut heap = BinaryHeap::new();
    let mut incumbent: Option<Incumbent> = None;

    search.create(problem.integer_bounds.clone(), None, 0, None, "root".into(), &mut heap, &incumbent, &mut log);

    while let Some(node) = heap.pop() {
        if prunable(node.bound, &incumbent, st.mip_gap) {
            continue;
        }
        if search.nodes >= st.max_nodes {
            break;
        }
        if open_choice && node.alternative.is_none() {
            for a in 0..problem.alternatives.len() {
                search.create(
                    node.bounds.clone(),
                    Some(a),
                    node.depth + 1,
                    Some((node.id, node.bound)),
                    format!("alternative={a}"),
                    &mut heap,
                    &incumbent,
                    &mut log,
                );
            }
            continue;
        }
        let vals = problem.integer_values(&node.solution.x);
        let frac = |v: f64| (v - v.round()).abs();
        let mut pick: Option<usize> = None;
        for k in 0..vals.len() {
            if frac(vals[k]) <= st.int_tol {
                continue;
            }
            pick = match pick {
                None => Some(k),
                Some(j) => {
                    let (fk, fj) = (frac(vals[k]), frac(vals[j]));
                    if fk > fj + 1e-12 || ((fk - fj).abs() <= 1e-12 && problem.priority[k] > problem.priority[j]) {
                        Some(k)
                    } else {
                        Some(j)
                    }
                }
            };
        }
        match pick {
            None => {
                // Integral: fix and re-solve for a clean incumbent.
                let fixed: Vec<(f64, f64)> = vals.iter().map(|v| (v.round(), v.round())).collect();
                let sol = problem.solve_node(&fixed, node.alternative, &st.conic);
                if sol.status == Status::Optimal {
                    let better = incumbent.as_ref().is_none_or(|i| sol.objective_value < i.objective);
                    if better {
                        incumbent = Some(Incumbent {
                            objective: sol.objective_value,
                            integers: fixed.iter().map(|b| b.0).collect(),
                            solution: sol,
                            alternative: node.alternative,
                        });
                    }
                }
            }
            Some(k) => {
                let v = vals[k];
                let mut down = node.bounds.clone();
                down[k].1 = v.floor();
                let mut up = node.bounds.clone();
                up[k].0 = v.ceil();
                for (b, dir) in [(down, "<="), (up, ">=")] {
                    if b[k].0 > b[k].1 {
                        continue;
                    }
                    let bound_val = if dir == "<=" { b[k].1 } else { b[k].0 };
                    search.create(
                        b,
                        node.alternative,
                        node.depth + 1,
                        Some((node.id, node.bound)),
                        format!("x{} {dir} {bound_val}", problem.base.integer_marks[k]),
                        &mut heap,
                        &incumbent,
                        &mut log,
                    );
                }
            }
        }
    }

    Ok(match incumbent {
        None => {
            let mut out = MisocpSolution::infeasible(search.nodes, log);
            if search.failure {
                out.status = Status::NumericalFailure;
            }
            out.bound_violations = search.violations;
            out
        }
        Some(i) => MisocpSolution {
            status: Status::Optimal,
            objective: i.objective,
            solution: Some(i.solution),
            alternative: i.alternative,
            integers: i.integers,
            nodes: search.nodes,
            bound_violations: search.violations,
            node_log: log,
        },
    })
}

/// Exhaustive search over every integer assignment in the box and every
/// block choice.
pub fn enumerate_oracle(problem: &MisocpProblem, st: &BranchSettings) -> Result<MisocpSolution, BranchError> {
    problem.check()?;
    let mut ranges = Vec::new();
    let mut count: u128 = 1;
    for (k, &(lo, hi)) in problem.integer_bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(BranchError::UnboundedInteger(problem.base.integer_marks[k]));
        }
        let (lo, hi) = (lo.ceil() as i64, hi.floor() as i64);
        count = count.saturating_mul((hi - lo + 1).max(0) as u128);
        ranges.push((lo, hi));
    }
    let n_alt = problem.alternatives.len().max(1);
    count = count.saturating_mul(n_alt as u128);
    if count > 1 << 20 {
        return Err(BranchError::TooLarge(count));
    }
    let alts: Vec<Option<usize>> =
        if problem.alternatives.is_empty() { vec![None] } else { (0..n_alt).map(Some).collect() };

    let mut best: Option<Incumbent> = None;
    let mut solves = 0;
    let mut current: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return Ok(MisocpSolution::infeasible(0, None));
    }
    'outer: loop {
        let fixed: Vec<(f64, f64)> = current.iter().map(|&v| (v as f64, v as f64)).collect();
        for &a in &alts {
            let sol = problem.solve_node(&fixed, a, &st.conic);
            solves += 1;
            if sol.status == Status::Optimal
                && best.as_ref().is_none_or(|b| sol.objective_value < b.objective - 1e-12 * 1f64.max(b.objective.abs()))
            {
                best = Some(Incumbent {
                    objective: sol.objective_value,
                    integers: fixed.iter().map(|b| b.0).collect(),
                    solution: sol,
                    alternative: a,
                });
            }
        }
        // odometer increment, last index fastest
        let mut k = current.len();
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            if current[k] < ranges[k].1 {
                current[k] += 1;
                for j in k + 1..current.len() {
                    current[j] = ranges[j].0;
                }
                break;
            }
        }
    }
    Ok(match best {
        None => MisocpSolution::infeasible(solves, None),
        Some(i) => MisocpSolution {
            status: Status::Optimal,
            objective: i.objective,
            solution: Some(i.solution),
            alternative: i.alternative,
            integers: i.integers,
            nodes: solves,
            bound_violations: 0,
            node_log: None,
        },
    })
}
