//! Homogeneous self-dual embedding, Nesterov–Todd scaling, Mehrotra
//! predictor-corrector.
//!
//! Internally the dual uses `c + Aᵀy + Gᵀz = 0`; the public `y` is negated on
//! the way out.

use super::cones::{identity, jordan, jordan_div, max_step, Block, Scaling};
use super::linalg::{axpy, dot, norm, norm_inf, Ldl, Mat};
use super::{Cone, ConicProgram, ConicSolution, IterInfo, Settings, Status};

const STEP_FRACTION: f64 = 0.99;
const REFINE_STEPS: usize = 8;
const DYN_EPS: f64 = 1e-13;
const DYN_REG: f64 = 1e-7;
const EXTRA_ITERATIONS: usize = 10;

/// `G`, `h` with rotated blocks mapped to SOC by
/// `(s0, s1, w) ↦ (s0 + s1, s0 − s1, 2w)`.
fn internal_form(p: &ConicProgram) -> (Mat, Vec<f64>, Vec<Block>) {
    let mut g = p.g.clone();
    let mut h = p.h.clone();
    let mut blocks = Vec::with_capacity(p.cones.len());
    let mut start = 0;
    for &cone in &p.cones {
        let len = cone.dim();
        match cone {
            Cone::Nonneg(_) => blocks.push(Block::Nonneg { start, len }),
            Cone::Soc(_) => blocks.push(Block::Soc { start, len }),
            Cone::RotatedSoc(_) => {
                let (r0, r1) = (start, start + 1);
                for j in 0..g.cols {
                    let (a, b) = (g[(r0, j)], g[(r1, j)]);
                    g[(r0, j)] = a + b;
                    g[(r1, j)] = a - b;
                }
                let (a, b) = (h[r0], h[r1]);
                h[r0] = a + b;
                h[r1] = a - b;
                for r in start + 2..start + len {
                    for j in 0..g.cols {
                        g[(r, j)] *= 2.0;
                    }
                    h[r] *= 2.0;
                }
                blocks.push(Block::Soc { start, len });
            }
        }
        start += len;
    }
    (g, h, blocks)
}

/// Maps internal `s` and `z` back to the caller's rotated coordinates.
fn external_form(p: &ConicProgram, s: &mut [f64], z: &mut [f64]) {
    let mut start = 0;
    for &cone in &p.cones {
        let len = cone.dim();
        if let Cone::RotatedSoc(_) = cone {
            let (a, b) = (s[start], s[start + 1]);
            s[start] = (a + b) / 2.0;
            s[start + 1] = (a - b) / 2.0;
            let (a, b) = (z[start], z[start + 1]);
            z[start] = a + b;
            z[start + 1] = a - b;
            for r in start + 2..start + len {
                s[r] /= 2.0;
                z[r] *= 2.0;
            }
        }
        start += len;
    }
}

struct Kkt<'a> {
    a: &'a Mat,
    g: &'a Mat,
    scaling: &'a Scaling,
    ldl: Ldl,
    n: usize,
    m: usize,
    p: usize,
}

impl<'a> Kkt<'a> {
    fn new(a: &'a Mat, g: &'a Mat, scaling: &'a Scaling, reg: f64) -> Self {
        let (n, m, p) = (g.cols, g.rows, a.rows);
        let dim = m + n + p;
        let mut k = Mat::zeros(dim, dim);
        scaling.write_neg_w2(&mut k);
        for i in 0..m {
            k[(i, i)] -= reg;
            for j in 0..n {
                let v = g[(i, j)];
                k[(i, m + j)] = v;
                k[(m + j, i)] = v;
            }
        }
        for j in 0..n {
            k[(m + j, m + j)] = reg;
        }
        for i in 0..p {
            for j in 0..n {
                let v = a[(i, j)];
                k[(m + n + i, m + j)] = v;
                k[(m + j, m + n + i)] = v;
            }
            k[(m + n + i, m + n + i)] = -reg;
        }
        let mut signs = vec![-1.0; dim];
        signs[m..m + n].iter_mut().for_each(|s| *s = 1.0);
        let ldl = Ldl::factor(k, &signs, DYN_EPS, DYN_REG);
        Kkt { a, g, scaling, ldl, n, m, p }
    }

    /// Unregularized product, packed as `[z, x, y]`.
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let (dz, dx, dy) = (&u[..m], &u[m..m + n], &u[m + n..]);
        let mut out = Vec::with_capacity(u.len());
        let gx = self.g.mul_vec(dx);
        let w2z = self.scaling.apply(&self.scaling.apply(dz));
        out.extend(gx.iter().zip(&w2z).map(|(a, b)| a - b));
        let mut xr = self.g.tmul_vec(dz);
        axpy(1.0, &self.a.tmul_vec(dy), &mut xr);
        out.extend(xr);
        out.extend(self.a.mul_vec(dx));
        out
    }

    /// Solves for `(dx, dy, dz)` given the three right-hand-side blocks.
    fn solve(&self, rx: &[f64], ry: &[f64], rz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rhs = Vec::with_capacity(self.m + self.n + self.p);
        rhs.extend_from_slice(rz);
        rhs.extend_from_slice(rx);
        rhs.extend_from_slice(ry);
        let mut u = rhs.clone();
        self.ldl.solve_in_place(&mut u);
        let bnorm = norm_inf(&rhs);
        for _ in 0..REFINE_STEPS {
            let ku = self.apply(&u);
            let mut r: Vec<f64> = rhs.iter().zip(&ku).map(|(a, b)| a - b).collect();
            if norm_inf(&r) <= 1e-14 * (1.0 + bnorm) {
                break;
            }
            self.ldl.solve_in_place(&mut r);
            axpy(1.0, &r, &mut u);
        }
        let (m, n) = (self.m, self.n);
        (u[m..m + n].to_vec(), u[m + n..].to_vec(), u[..m].to_vec())
    }
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

pub fn solve(p: &ConicProgram, st: &Settings) -> ConicSolution {
    if let Err(e) = p.validate() {
        panic!("malformed conic program: {e}");
    }
    let (g, h, blocks) = internal_form(p);
    let (a, b, c) = (&p.a, &p.b, &p.c);
    let (n, m, pe) = (c.len(), g.rows, a.rows);
    let degree: usize = p.cones.iter().map(Cone::degree).sum();
    let e = identity(&blocks, m);

    let mut x = vec![0.0; n];
    let mut y = vec![0.0; pe];
    let mut s = e.clone();
    let mut z = e.clone();
    let (mut tau, mut kappa) = (1.0_f64, 1.0_f64);

    let pscale = 1.0 + norm(b).max(norm(&h));
    let dscale = 1.0 + norm(c);
    let mut trace = Vec::new();
    let mut log = Vec::new();
    let mut status = Status::NumericalFailure;
    let mut certificate_scale = None;
    let mut last_step = 0.0;
    let mut iterations = 0;
    let mut gap_rel = f64::INFINITY;
    let mut extra = 0;
    let mut snapshot = None;

    for iter in 0..=st.max_iter {
        iterations = iter;
        let aty = a.tmul_vec(&y);
        let gtz = g.tmul_vec(&z);
        let rx: Vec<f64> = (0..n).map(|i| aty[i] + gtz[i] + c[i] * tau).collect();
        let ax = a.mul_vec(&x);
        let ry: Vec<f64> = (0..pe).map(|i| ax[i] - b[i] * tau).collect();
        let gx = g.mul_vec(&x);
        let rz: Vec<f64> = (0..m).map(|i| s[i] + gx[i] - h[i] * tau).collect();
        let (cx, by, hz) = (dot(c, &x), dot(b, &y), dot(&h, &z));
        let rt = kappa + cx + by + hz;

        let pres = norm(&ry).max(norm(&rz)) / tau / pscale;
        let dres = norm(&rx) / tau / dscale;
        let pcost = cx / tau;
        let dcost = -(by + hz) / tau;
        let sz = dot(&s, &z) / (tau * tau);
        let residual_term = (dot(&rx, &x) - dot(&y, &ry) - dot(&z, &rz)) / (tau * tau);
        gap_rel = sz.max((pcost - dcost).abs()) / 1f64.max(pcost.abs());
        trace.push(IterInfo { pcost, dcost, complementarity: sz, residual_term, pres, dres, step: last_step });
        if st.verbose {
            log.push(format!(
                "{iter:3} pcost {pcost:+.8e} dcost {dcost:+.8e} gap {gap_rel:.2e} pres {pres:.2e} dres {dres:.2e} k/t {:.2e} step {last_step:.3}",
                kappa / tau
            ));
        }

        let converged = pres <= st.feas_tol && dres <= st.feas_tol && gap_rel <= st.gap_tol;
        if converged {
            status = Status::Optimal;
            snapshot = Some((x.clone(), y.clone(), z.clone(), s.clone(), tau, gap_rel));
            // a few extra iterations to push the absolute residual down
            if norm_inf(&rx) / tau <= st.stationarity_tol || extra >= EXTRA_ITERATIONS {
                break;
            }
            extra += 1;
        } else {
            status = Status::NumericalFailure;
        }
        if !converged && by + hz < 0.0 {
            let r = norm(&aty.iter().zip(&gtz).map(|(u, v)| u + v).collect::<Vec<_>>()) / -(by + hz);
            if r <= st.feas_tol {
                status = Status::Infeasible;
                certificate_scale = Some(-(by + hz));
                break;
            }
        }
        if !converged && cx < 0.0 {
            let gxs: Vec<f64> = (0..m).map(|i| gx[i] + s[i]).collect();
            let r = norm(&ax).max(norm(&gxs)) / -cx;
            if r <= st.feas_tol {
                status = Status::Unbounded;
                certificate_scale = Some(-cx);
                break;
            }
        }
        if iter == st.max_iter {
            break;
        }

        let Some(scaling) = Scaling::new(&blocks, &s, &z) else { break };
        let kkt = Kkt::new(a, &g, &scaling, st.static_reg);
        let lambda = scaling.apply(&z);
        let mu = (dot(&s, &z) + tau * kappa) / (degree as f64 + 1.0);

        let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
        let (x2, y2, z2) = kkt.solve(&neg_c, b, &h);
        let q2 = dot(c, &x2) + dot(b, &y2) + dot(&h, &z2);

        let direction = |eta: f64, zeta: &[f64], xi_tau: f64| -> Direction {
            let wz = scaling.apply(zeta);
            let bx: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let byv: Vec<f64> = ry.iter().map(|v| -eta * v).collect();
            let bz: Vec<f64> = (0..m).map(|i| -eta * rz[i] - wz[i]).collect();
            let (mut dx, mut dy, mut dz) = kkt.solve(&bx, &byv, &bz);
            let q1 = dot(c, &dx) + dot(b, &dy) + dot(&h, &dz);
            let dtau = (-eta * rt - q1 - xi_tau / tau) / (q2 - kappa / tau);
            axpy(dtau, &x2, &mut dx);
            axpy(dtau, &y2, &mut dy);
            axpy(dtau, &z2, &mut dz);
            let wdz = scaling.apply(&dz);
            let inner: Vec<f64> = (0..m).map(|i| zeta[i] - wdz[i]).collect();
            let ds = scaling.apply(&inner);
            let dkappa = (xi_tau - kappa * dtau) / tau;
            Direction { dx, dy, dz, ds, dtau, dkappa }
        };
        let step_len = |d: &Direction, cap: f64| -> f64 {
            let mut alpha = max_step(&blocks, &s, &d.ds, cap).min(max_step(&blocks, &z, &d.dz, cap));
            if d.dtau < 0.0 {
                alpha = alpha.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                alpha = alpha.min(-kappa / d.dkappa);
            }
            alpha
        };

        // affine predictor
        let neg_lambda: Vec<f64> = lambda.iter().map(|v| -v).collect();
        let aff = direction(1.0, &neg_lambda, -tau * kappa);
        let alpha_aff = step_len(&aff, 1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // centering + second-order correction
        let ll = jordan(&blocks, &lambda, &lambda);
        let corr = jordan(&blocks, &scaling.apply_inv(&aff.ds), &scaling.apply(&aff.dz));
        let xi: Vec<f64> = (0..m).map(|i| -ll[i] + sigma * mu * e[i] - corr[i]).collect();
        let zeta = jordan_div(&blocks, &lambda, &xi);
        let xi_tau = -tau * kappa + sigma * mu - aff.dtau * aff.dkappa;
        let d = direction(1.0 - sigma, &zeta, xi_tau);
        let alpha = (STEP_FRACTION * step_len(&d, f64::INFINITY)).min(1.0);
        if !(alpha > 1e-12) || !d.dtau.is_finite() {
            break;
        }
        last_step = alpha;

        axpy(alpha, &d.dx, &mut x);
        axpy(alpha, &d.dy, &mut y);
        axpy(alpha, &d.dz, &mut z);
        axpy(alpha, &d.ds, &mut s);
        tau += alpha * d.dtau;
        kappa += alpha * d.dkappa;
    }

    if status != Status::Optimal {
        if let Some((x0, y0, z0, s0, t0, g0)) = snapshot {
            (x, y, z, s, tau, gap_rel) = (x0, y0, z0, s0, t0, g0);
            status = Status::Optimal;
        }
    }
    let scale = match status {
        Status::Infeasible | Status::Unbounded => certificate_scale.unwrap_or(1.0),
        _ => tau,
    };
    let xo: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let yo: Vec<f64> = y.iter().map(|v| -v / scale).collect();
    let mut zo: Vec<f64> = z.iter().map(|v| v / scale).collect();
    let mut so: Vec<f64> = s.iter().map(|v| v / scale).collect();
    external_form(p, &mut so, &mut zo);

    let mut r = c.clone();
    let aty = a.tmul_vec(&yo);
    let gtz = p.g.tmul_vec(&zo);
    for i in 0..n {
        r[i] += gtz[i] - aty[i];
    }
    ConicSolution {
        status,
        objective_value: dot(c, &xo),
        x: xo,
        y: yo,
        z: zo,
        s: so,
        gap: gap_rel,
        kkt_residual: norm_inf(&r),
        iterations,
        trace,
        log,
    }
}
