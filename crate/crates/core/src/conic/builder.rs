//! Labelled constraint model compiled to a [`ConicProgram`], with dual
//! lookup by constraint handle.

use super::{Cone, ConicProgram, ConicSolution, Mat};
use crate::constraints::{LinearConstraint, RotatedSocConstraint, Sense, StandardSoc};
use crate::expr::{AffineExpr, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintId(pub usize);

#[derive(Debug, Clone, PartialEq)]
enum Row {
    /// `expr = 0`
    Eq(AffineExpr),
    /// `expr ≥ 0`
    Ge(AffineExpr),
    Soc(StandardSoc),
    Rotated(RotatedSocConstraint),
}

/// Where a constraint landed in the compiled program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSet {
    Equality(usize),
    /// Rows `start..start + len` of `G`.
    Cone {
        start: usize,
        len: usize,
    },
}

#[derive(Debug, Clone, Default)]
pub struct Model {
    names: Vec<String>,
    objective: AffineExpr,
    rows: Vec<(String, Row)>,
    integers: Vec<VarId>,
}

/// Extra `G` rows and cones appended to a base program.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicBlock {
    pub g: Mat,
    pub h: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicBlock {
    pub fn empty(n: usize) -> Self {
        ConicBlock { g: Mat::zeros(0, n), h: Vec::new(), cones: Vec::new() }
    }

    fn push_ge(&mut self, e: &AffineExpr) {
        // s = e(x) = h − G·x
        let mut row = vec![0.0; self.g.cols];
        for &(v, c) in &e.terms {
            row[v.0] -= c;
        }
        self.g.push_row(&row);
        self.h.push(e.constant);
    }

    fn push_row(&mut self, row: &Row) {
        match row {
            Row::Eq(_) => unreachable!("equalities live in A"),
            Row::Ge(e) => {
                self.push_ge(e);
                self.cones.push(Cone::Nonneg(1));
            }
            Row::Soc(soc) => {
                self.push_ge(&soc.t);
                for r in &soc.rows {
                    self.push_ge(r);
                }
                self.cones.push(Cone::Soc(1 + soc.rows.len()));
            }
            Row::Rotated(r) => {
                self.push_ge(&r.u);
                self.push_ge(&r.v);
                self.push_ge(&r.w);
                self.cones.push(Cone::RotatedSoc(3));
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub program: ConicProgram,
    pub objective_offset: f64,
    rows: Vec<RowSet>,
}

impl Compiled {
    pub fn rows(&self, id: ConstraintId) -> RowSet {
        self.rows[id.0]
    }

    /// Shadow prices of a constraint: the equality dual, or the cone dual
    /// block.
    pub fn dual(&self, sol: &ConicSolution, id: ConstraintId) -> Vec<f64> {
        match self.rows[id.0] {
            RowSet::Equality(i) => vec![sol.y[i]],
            RowSet::Cone { start, len } => sol.z[start..start + len].to_vec(),
        }
    }

    pub fn slack(&self, sol: &ConicSolution, id: ConstraintId) -> Vec<f64> {
        match self.rows[id.0] {
            RowSet::Equality(_) => vec![0.0],
            RowSet::Cone { start, len } => sol.s[start..start + len].to_vec(),
        }
    }

    pub fn objective(&self, sol: &ConicSolution) -> f64 {
        sol.objective_value + self.objective_offset
    }

    /// `Σ_r z_r·∂s_r/∂x_v` over the cone rows of `ids`: the marginal value of
    /// one more unit of `v` inside those constraints.
    pub fn dual_weighted_coefficient(&self, sol: &ConicSolution, ids: &[ConstraintId], v: VarId) -> f64 {
        let mut total = 0.0;
        for &id in ids {
            if let RowSet::Cone { start, len } = self.rows[id.0] {
                for r in start..start + len {
                    total -= sol.z[r] * self.program.g[(r, v.0)];
                }
            }
        }
        total
    }
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> VarId {
        self.names.push(name.into());
        VarId(self.names.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn set_objective(&mut self, obj: AffineExpr) {
        self.objective = obj;
    }

    pub fn mark_integer(&mut self, v: VarId) {
        if !self.integers.contains(&v) {
            self.integers.push(v);
        }
    }

    fn push(&mut self, label: impl Into<String>, row: Row) -> ConstraintId {
        self.rows.push((label.into(), row));
        ConstraintId(self.rows.len() - 1)
    }

    pub fn label(&self, id: ConstraintId) -> &str {
        &self.rows[id.0].0
    }

    /// `lhs = rhs`
    pub fn add_eq(&mut self, label: impl Into<String>, lhs: AffineExpr, rhs: f64) -> ConstraintId {
        self.push(label, Row::Eq(lhs.minus(&AffineExpr::constant(rhs))))
    }

    /// `lhs ≥ rhs`
    pub fn add_ge(&mut self, label: impl Into<String>, lhs: AffineExpr, rhs: f64) -> ConstraintId {
        self.push(label, Row::Ge(lhs.minus(&AffineExpr::constant(rhs))))
    }

    /// `lhs ≤ rhs`
    pub fn add_le(&mut self, label: impl Into<String>, lhs: AffineExpr, rhs: f64) -> ConstraintId {
        self.push(label, Row::Ge(AffineExpr::constant(rhs).minus(&lhs)))
    }

    pub fn add_linear(&mut self, label: impl Into<String>, c: &LinearConstraint) -> ConstraintId {
        match c.sense {
            Sense::Eq => self.add_eq(label, c.lhs(), c.rhs),
            Sense::Ge => self.add_ge(label, c.lhs(), c.rhs),
            Sense::Le => self.add_le(label, c.lhs(), c.rhs),
        }
    }

    pub fn add_soc(&mut self, label: impl Into<String>, soc: StandardSoc) -> ConstraintId {
        self.push(label, Row::Soc(soc))
    }

    pub fn add_rotated_soc(&mut self, label: impl Into<String>, r: RotatedSocConstraint) -> ConstraintId {
        self.push(label, Row::Rotated(r))
    }

    pub fn compile(&self) -> Compiled {
        let n = self.num_vars();
        let mut p = ConicProgram::new(n);
        for &(v, coef) in &self.objective.terms {
            p.c[v.0] += coef;
        }
        let mut block = ConicBlock::empty(n);
        let mut rows = Vec::with_capacity(self.rows.len());
        for (_, row) in &self.rows {
            match row {
                Row::Eq(e) => {
                    let mut r = vec![0.0; n];
                    for &(v, c) in &e.terms {
                        r[v.0] += c;
                    }
                    p.add_equality(&r, -e.constant);
                    rows.push(RowSet::Equality(p.b.len() - 1));
                }
                other => {
                    let start = block.h.len();
                    block.push_row(other);
                    rows.push(RowSet::Cone { start, len: block.h.len() - start });
                }
            }
        }
        p.append(&block);
        p.integer_marks = self.integers.iter().map(|v| v.0).collect();
        Compiled { program: p, objective_offset: self.objective.constant, rows }
    }

    /// Cone rows for constraints that are not part of the model, to be
    /// appended to a compiled program.
    pub fn block(&self, linear: &[LinearConstraint], socs: &[StandardSoc]) -> ConicBlock {
        let mut b = ConicBlock::empty(self.num_vars());
        for c in linear {
            assert!(c.sense != Sense::Eq, "equalities cannot be appended as cone rows");
            b.push_row(&Row::Ge(c.as_nonnegative()));
        }
        for s in socs {
            b.push_row(&Row::Soc(s.clone()));
        }
        b
    }
}
