//! Nonnegative orthant and second-order cone: Jordan algebra, Nesterov–Todd
//! scaling and boundary step lengths.

use super::linalg::{dot, norm, Mat};

/// A cone block over consecutive rows of `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Cone {
    /// `s ≥ 0` componentwise.
    Nonneg(usize),
    /// `s0 ≥ ‖s[1..]‖₂`, dimension ≥ 2.
    Soc(usize),
    /// `s0·s1 ≥ ‖s[2..]‖₂²`, `s0, s1 ≥ 0`, dimension ≥ 3.
    RotatedSoc(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonneg(d) | Cone::Soc(d) | Cone::RotatedSoc(d) => d,
        }
    }

    /// Barrier degree contributed to the complementarity measure.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg(d) => d,
            Cone::Soc(_) | Cone::RotatedSoc(_) => 1,
        }
    }

    pub(crate) fn min_dim(&self) -> usize {
        match self {
            Cone::Nonneg(_) => 1,
            Cone::Soc(_) => 2,
            Cone::RotatedSoc(_) => 3,
        }
    }
}

/// Signed distance-like margin of `s` to the boundary of `cone`
/// (non-negative iff `s` is in the cone). Rotated cones are self-dual up to
/// a factor, so the same test serves their dual with `dual = true`.
pub fn cone_margin(cone: Cone, s: &[f64], dual: bool) -> f64 {
    match cone {
        Cone::Nonneg(_) => s.iter().cloned().fold(f64::INFINITY, f64::min),
        Cone::Soc(_) => s[0] - norm(&s[1..]),
        Cone::RotatedSoc(_) => {
            // primal: s0·s1 ≥ ‖w‖²     ⇔  ‖(s0 − s1, 2w)‖ ≤ s0 + s1
            // dual:   4·z0·z1 ≥ ‖w‖²   ⇔  ‖(z0 − z1, w)‖ ≤ z0 + z1
            let k = if dual { 1.0 } else { 2.0 };
            let mut v = vec![s[0] - s[1]];
            v.extend(s[2..].iter().map(|w| k * w));
            s[0] + s[1] - norm(&v)
        }
    }
}

/// Internal (rotated cones already mapped to SOC) block layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Block {
    Nonneg { start: usize, len: usize },
    Soc { start: usize, len: usize },
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        match *self {
            Block::Nonneg { start, len } | Block::Soc { start, len } => start..start + len,
        }
    }
}

pub(crate) fn identity(blocks: &[Block], m: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    for b in blocks {
        match *b {
            Block::Nonneg { start, len } => e[start..start + len].iter_mut().for_each(|v| *v = 1.0),
            Block::Soc { start, .. } => e[start] = 1.0,
        }
    }
    e
}

/// `a ∘ b`
pub(crate) fn jordan(blocks: &[Block], a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for blk in blocks {
        let r = blk.range();
        match blk {
            Block::Nonneg { .. } => {
                for i in r {
                    out[i] = a[i] * b[i];
                }
            }
            Block::Soc { start, .. } => {
                let s = *start;
                out[s] = dot(&a[r.clone()], &b[r.clone()]);
                for i in s + 1..r.end {
                    out[i] = a[s] * b[i] + b[s] * a[i];
                }
            }
        }
    }
    out
}

/// Solves `λ ∘ x = ξ` for `x` (λ in the interior).
pub(crate) fn jordan_div(blocks: &[Block], lambda: &[f64], xi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; xi.len()];
    for blk in blocks {
        let r = blk.range();
        match blk {
            Block::Nonneg { .. } => {
                for i in r {
                    out[i] = xi[i] / lambda[i];
                }
            }
            Block::Soc { start, .. } => {
                let s = *start;
                let (l0, l1) = (lambda[s], &lambda[s + 1..r.end]);
                let (x0, x1) = (xi[s], &xi[s + 1..r.end]);
                let rho = l0 * l0 - dot(l1, l1);
                let o0 = (l0 * x0 - dot(l1, x1)) / rho;
                out[s] = o0;
                for k in 0..l1.len() {
                    out[s + 1 + k] = (x1[k] - o0 * l1[k]) / l0;
                }
            }
        }
    }
    out
}

/// Per-block NT scaling `W` with `W·z = W⁻¹·s = λ`.
#[derive(Debug, Clone)]
pub(crate) enum BlockScaling {
    Nonneg { w: Vec<f64> },
    Soc { w: Mat, winv: Mat },
}

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub blocks: Vec<(Block, BlockScaling)>,
}

fn soc_residual(v: &[f64]) -> f64 {
    v[0] * v[0] - dot(&v[1..], &v[1..])
}

impl Scaling {
    /// `None` when `s` or `z` left the interior.
    pub fn new(blocks: &[Block], s: &[f64], z: &[f64]) -> Option<Scaling> {
        let mut out = Vec::with_capacity(blocks.len());
        for blk in blocks {
            let r = blk.range();
            match blk {
                Block::Nonneg { .. } => {
                    let mut w = Vec::with_capacity(r.len());
                    for i in r {
                        if !(s[i] > 0.0 && z[i] > 0.0) {
                            return None;
                        }
                        w.push((s[i] / z[i]).sqrt());
                    }
                    out.push((*blk, BlockScaling::Nonneg { w }));
                }
                Block::Soc { len, .. } => {
                    let (sb, zb) = (&s[r.clone()], &z[r.clone()]);
                    let (sr, zr) = (soc_residual(sb), soc_residual(zb));
                    if !(sr > 0.0 && zr > 0.0 && sb[0] > 0.0 && zb[0] > 0.0) {
                        return None;
                    }
                    let (ss, zs) = (sr.sqrt(), zr.sqrt());
                    let sbar: Vec<f64> = sb.iter().map(|v| v / ss).collect();
                    let zbar: Vec<f64> = zb.iter().map(|v| v / zs).collect();
                    let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                    let mut wbar = vec![0.0; *len];
                    wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                    for k in 1..*len {
                        wbar[k] = (sbar[k] - zbar[k]) / (2.0 * gamma);
                    }
                    let eta = (sr / zr).powf(0.25);
                    let (w, winv) = soc_scaling_matrices(&wbar, eta);
                    out.push((*blk, BlockScaling::Soc { w, winv }));
                }
            }
        }
        Some(Scaling { blocks: out })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.apply_impl(v, false)
    }

    pub fn apply_inv(&self, v: &[f64]) -> Vec<f64> {
        self.apply_impl(v, true)
    }

    fn apply_impl(&self, v: &[f64], inverse: bool) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (blk, sc) in &self.blocks {
            let r = blk.range();
            match sc {
                BlockScaling::Nonneg { w } => {
                    for (k, i) in r.enumerate() {
                        out[i] = if inverse { v[i] / w[k] } else { v[i] * w[k] };
                    }
                }
                BlockScaling::Soc { w, winv } => {
                    let m = if inverse { winv } else { w };
                    let res = m.mul_vec(&v[r.clone()]);
                    out[r].copy_from_slice(&res);
                }
            }
        }
        out
    }

    /// Writes `−W²` into the `z`-block of the KKT matrix at offset 0.
    pub fn write_neg_w2(&self, k: &mut Mat) {
        for (blk, sc) in &self.blocks {
            let r = blk.range();
            match sc {
                BlockScaling::Nonneg { w } => {
                    for (j, i) in r.enumerate() {
                        k[(i, i)] = -w[j] * w[j];
                    }
                }
                BlockScaling::Soc { w, .. } => {
                    let w2 = w.matmul(w);
                    for a in 0..w2.rows {
                        for b in 0..w2.cols {
                            k[(r.start + a, r.start + b)] = -w2[(a, b)];
                        }
                    }
                }
            }
        }
    }
}

fn soc_scaling_matrices(wbar: &[f64], eta: f64) -> (Mat, Mat) {
    let n = wbar.len();
    let (w0, w1) = (wbar[0], &wbar[1..]);
    let mut w = Mat::zeros(n, n);
    let mut winv = Mat::zeros(n, n);
    w[(0, 0)] = eta * w0;
    winv[(0, 0)] = w0 / eta;
    for a in 0..n - 1 {
        w[(0, a + 1)] = eta * w1[a];
        w[(a + 1, 0)] = eta * w1[a];
        winv[(0, a + 1)] = -w1[a] / eta;
        winv[(a + 1, 0)] = -w1[a] / eta;
        for b in 0..n - 1 {
            let v = if a == b { 1.0 } else { 0.0 } + w1[a] * w1[b] / (1.0 + w0);
            w[(a + 1, b + 1)] = eta * v;
            winv[(a + 1, b + 1)] = v / eta;
        }
    }
    (w, winv)
}

/// Largest `α ≥ 0` (capped at `cap`) with `v + α·dv` in the cone product.
pub(crate) fn max_step(blocks: &[Block], v: &[f64], dv: &[f64], cap: f64) -> f64 {
    let mut alpha = cap;
    for blk in blocks {
        let r = blk.range();
        match blk {
            Block::Nonneg { .. } => {
                for i in r {
                    if dv[i] < 0.0 {
                        alpha = alpha.min(-v[i] / dv[i]);
                    }
                }
            }
            Block::Soc { .. } => {
                let (x, d) = (&v[r.clone()], &dv[r.clone()]);
                alpha = alpha.min(soc_step(x, d));
            }
        }
    }
    alpha.max(0.0)
}

/// First positive root of `(x0 + αd0)² − ‖x1 + αd1‖²`.
fn soc_step(x: &[f64], d: &[f64]) -> f64 {
    let a = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let b = x[0] * d[0] - dot(&x[1..], &d[1..]);
    let c = soc_residual(x).max(0.0);
    let mut alpha = f64::INFINITY;
    // the affine first component must stay non-negative as well
    if d[0] < 0.0 {
        alpha = -x[0] / d[0];
    }
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return alpha;
    }
    if a.abs() <= 1e-14 * scale {
        if b < 0.0 {
            alpha = alpha.min(-c / (2.0 * b));
        }
        return alpha;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return alpha;
    }
    let sq = disc.sqrt();
    let q = -(b + b.signum() * sq);
    let roots = [q / a, if q != 0.0 { c / q } else { f64::INFINITY }];
    for r in roots {
        if r > 0.0 {
            alpha = alpha.min(r);
        }
    }
    alpha
}
