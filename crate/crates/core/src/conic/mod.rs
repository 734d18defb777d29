//! Standard-form conic programs and a primal-dual interior-point solver.
//!
//! ```text
//! minimize    cᵀx
//! subject to  A·x = b
//!             G·x + s = h,   s ∈ K = K₁ × … × K_q
//! ```
//!
//! `x` is free; the cone blocks partition the rows of `G`. Returned duals
//! follow the shadow-price convention `c − Aᵀy + Gᵀz = 0`, `z ∈ K*`, so `y`
//! is ∂(optimal value)/∂b and `−z` is ∂(optimal value)/∂h.

mod builder;
mod cones;
mod ipm;
pub mod linalg;

pub use builder::{Compiled, ConicBlock, ConstraintId, Model, RowSet};
pub use cones::{cone_margin, Cone};
pub use ipm::solve;
pub use linalg::Mat;

use linalg::{dot, norm_inf};

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub c: Vec<f64>,
    pub a: Mat,
    pub b: Vec<f64>,
    pub g: Mat,
    pub h: Vec<f64>,
    pub cones: Vec<Cone>,
    /// Variables required to be integral by the branch module; ignored by
    /// [`solve`].
    pub integer_marks: Vec<usize>,
}

impl ConicProgram {
    pub fn new(n: usize) -> Self {
        ConicProgram {
            c: vec![0.0; n],
            a: Mat::zeros(0, n),
            b: Vec::new(),
            g: Mat::zeros(0, n),
            h: Vec::new(),
            cones: Vec::new(),
            integer_marks: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_cone_rows(&self) -> usize {
        self.g.rows
    }

    pub fn add_equality(&mut self, row: &[f64], rhs: f64) {
        self.a.push_row(row);
        self.b.push(rhs);
    }

    /// Appends `rows.len()` rows of `G` as one cone block.
    pub fn add_cone(&mut self, cone: Cone, rows: &[Vec<f64>], h: &[f64]) {
        assert_eq!(rows.len(), cone.dim());
        assert_eq!(h.len(), cone.dim());
        for r in rows {
            self.g.push_row(r);
        }
        self.h.extend_from_slice(h);
        self.cones.push(cone);
    }

    /// `row·x ≤ rhs` as a one-row nonnegative block.
    pub fn add_le(&mut self, row: &[f64], rhs: f64) {
        self.add_cone(Cone::Nonneg(1), &[row.to_vec()], &[rhs]);
    }

    /// Appends every row and cone of `block`.
    pub fn append(&mut self, block: &ConicBlock) {
        for k in 0..block.g.rows {
            self.g.push_row(block.g.row(k));
        }
        self.h.extend_from_slice(&block.h);
        self.cones.extend_from_slice(&block.cones);
    }

    pub fn with_block(&self, block: &ConicBlock) -> ConicProgram {
        let mut p = self.clone();
        p.append(block);
        p
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.num_vars();
        if self.a.cols != n || self.g.cols != n {
            return Err(format!("matrix widths {}/{} differ from {n} variables", self.a.cols, self.g.cols));
        }
        if self.a.rows != self.b.len() {
            return Err("A and b row counts differ".into());
        }
        if self.g.rows != self.h.len() {
            return Err("G and h row counts differ".into());
        }
        let total: usize = self.cones.iter().map(Cone::dim).sum();
        if total != self.g.rows {
            return Err(format!("cone dimensions sum to {total}, G has {} rows", self.g.rows));
        }
        if let Some(c) = self.cones.iter().find(|c| c.dim() < c.min_dim()) {
            return Err(format!("cone {c:?} below minimum dimension"));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.c) && finite(&self.a.data) && finite(&self.b) && finite(&self.g.data) && finite(&self.h)) {
            return Err("non-finite data".into());
        }
        if let Some(&i) = self.integer_marks.iter().find(|&&i| i >= n) {
            return Err(format!("integer mark {i} out of range"));
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    pub static_reg: f64,
    /// Absolute target for max |c − Aᵀy + Gᵀz|, pursued for a few extra
    /// iterations once the relative criteria hold.
    pub stationarity_tol: f64,
    pub verbose: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            static_reg: 1e-10,
            stationarity_tol: 1e-8,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Per-iterate bookkeeping, normalized by τ.
#[derive(Debug, Clone, PartialEq)]
pub struct IterInfo {
    pub pcost: f64,
    pub dcost: f64,
    /// `ŝᵀẑ`
    pub complementarity: f64,
    /// `rdᵀx̂ − ŷᵀr_A − ẑᵀr_G`; `pcost − dcost = complementarity + residual_term`.
    pub residual_term: f64,
    pub pres: f64,
    pub dres: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub objective_value: f64,
    /// Relative duality gap.
    pub gap: f64,
    /// Max-norm of `c − Aᵀy + Gᵀz`.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub trace: Vec<IterInfo>,
    /// One line per iteration when `Settings::verbose` is set.
    pub log: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// max |c − Aᵀy + Gᵀz|
    pub stationarity: f64,
    /// max(‖Ax − b‖∞, ‖Gx + s − h‖∞)
    pub primal: f64,
    /// |sᵀz|
    pub complementarity: f64,
    /// Smallest margin of `s` in K and of `z` in K* over all blocks.
    pub cone_margin: f64,
}

pub fn kkt_report(p: &ConicProgram, sol: &ConicSolution) -> KktReport {
    let mut r = p.c.clone();
    let aty = p.a.tmul_vec(&sol.y);
    let gtz = p.g.tmul_vec(&sol.z);
    for i in 0..r.len() {
        r[i] += gtz[i] - aty[i];
    }
    let mut ra = p.a.mul_vec(&sol.x);
    for (v, b) in ra.iter_mut().zip(&p.b) {
        *v -= b;
    }
    let mut rg = p.g.mul_vec(&sol.x);
    for i in 0..rg.len() {
        rg[i] += sol.s[i] - p.h[i];
    }
    let mut margin = f64::INFINITY;
    let mut start = 0;
    for &cone in &p.cones {
        let d = cone.dim();
        margin = margin.min(cone_margin(cone, &sol.s[start..start + d], false)).min(cone_margin(
            cone,
            &sol.z[start..start + d],
            true,
        ));
        start += d;
    }
    KktReport {
        stationarity: norm_inf(&r),
        primal: norm_inf(&ra).max(norm_inf(&rg)),
        complementarity: dot(&sol.s, &sol.z).abs(),
        cone_margin: margin,
    }
}
