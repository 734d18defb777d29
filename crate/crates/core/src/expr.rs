//! Affine expressions over indexed decision variables.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        AffineExpr::default()
    }

    pub fn constant(c: f64) -> Self {
        AffineExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(v: VarId) -> Self {
        AffineExpr::term(v, 1.0)
    }

    pub fn term(v: VarId, coef: f64) -> Self {
        AffineExpr { terms: vec![(v, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, v: VarId, coef: f64) -> &mut Self {
        match self.terms.iter_mut().find(|(id, _)| *id == v) {
            Some((_, c)) => *c += coef,
            None => self.terms.push((v, coef)),
        }
        self
    }

    pub fn add_const(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn plus(&self, other: &AffineExpr) -> AffineExpr {
        self.axpy(1.0, other)
    }

    pub fn minus(&self, other: &AffineExpr) -> AffineExpr {
        self.axpy(-1.0, other)
    }

    /// `self + alpha·other`
    pub fn axpy(&self, alpha: f64, other: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        for &(v, c) in &other.terms {
            out.add_term(v, alpha * c);
        }
        out.constant += alpha * other.constant;
        out
    }

    pub fn scaled(&self, alpha: f64) -> AffineExpr {
        AffineExpr::zero().axpy(alpha, self)
    }

    pub fn coeff(&self, v: VarId) -> f64 {
        self.terms.iter().filter(|(id, _)| *id == v).map(|(_, c)| c).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>()
    }

    /// Replaces `v` by the constant `value`.
    pub fn substitute(&self, v: VarId, value: f64) -> AffineExpr {
        let mut out = AffineExpr { terms: Vec::new(), constant: self.constant };
        for &(id, c) in &self.terms {
            if id == v {
                out.constant += c * value;
            } else {
                out.add_term(id, c);
            }
        }
        out
    }

    /// Merges duplicates, drops zero coefficients and sorts by variable.
    pub fn normalized(&self) -> AffineExpr {
        let mut out = AffineExpr::constant(self.constant);
        for &(v, c) in &self.terms {
            out.add_term(v, c);
        }
        out.terms.retain(|&(_, c)| c != 0.0);
        out.terms.sort_by_key(|&(v, _)| v);
        out
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn render(&self, names: &[String]) -> String {
        let e = self.normalized();
        let mut s = String::new();
        for (k, &(v, c)) in e.terms.iter().enumerate() {
            let name = names.get(v.0).cloned().unwrap_or_else(|| format!("x{}", v.0));
            let sign = if c < 0.0 {
                "-"
            } else if k == 0 {
                ""
            } else {
                "+"
            };
            if k > 0 {
                s.push(' ');
            }
            let mag = c.abs();
            if mag == 1.0 {
                let _ = write!(s, "{sign}{}{name}", if k > 0 { " " } else { "" });
            } else {
                let _ = write!(s, "{sign}{}{}*{name}", if k > 0 { " " } else { "" }, fmt_num(mag));
            }
        }
        if e.constant != 0.0 || s.is_empty() {
            if s.is_empty() {
                s = fmt_num(e.constant);
            } else {
                let sign = if e.constant < 0.0 { "-" } else { "+" };
                let _ = write!(s, " {sign} {}", fmt_num(e.constant.abs()));
            }
        }
        s
    }
}

pub(crate) fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}
