//! Dense row-major matrices and an LDLᵀ factorization for quasi-definite
//! KKT systems.

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> Self {
        let mut m = Mat::zeros(0, cols);
        for r in rows {
            m.push_row(r);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row width");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `M·x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Mᵀ·y`
    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate().take(self.rows) {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != 0.0 {
                    let (src, dst) = (other.row(k), &mut out.data[i * other.cols..(i + 1) * other.cols]);
                    axpy(a, src, dst);
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `y += alpha·x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `L·D·Lᵀ` of a symmetric matrix with a prescribed sign per pivot. A pivot
/// with the wrong sign, or one lost to cancellation (below `dyn_eps` or
/// below `REL_PIVOT` times the largest update it absorbed), is replaced by
/// `sign·max(dyn_reg, REL_PIVOT·scale)`.
#[derive(Debug, Clone)]
pub struct Ldl {
    n: usize,
    /// Strictly lower part, row-major, unit diagonal implied.
    l: Vec<f64>,
    d: Vec<f64>,
    pub perturbed: usize,
}

const REL_PIVOT: f64 = 1e-13;

impl Ldl {
    pub fn factor(mut m: Mat, signs: &[f64], dyn_eps: f64, dyn_reg: f64) -> Ldl {
        let n = m.rows;
        assert_eq!(m.cols, n);
        assert_eq!(signs.len(), n);
        let mut d = vec![0.0; n];
        let mut scale: Vec<f64> = (0..n).map(|j| m[(j, j)].abs()).collect();
        let mut perturbed = 0;
        // Right-looking elimination on the lower triangle in place.
        for j in 0..n {
            let mut dj = m[(j, j)];
            let floor = dyn_eps.max(REL_PIVOT * scale[j]);
            if dj * signs[j] <= floor || !dj.is_finite() {
                dj = signs[j] * dyn_reg.max(floor);
                perturbed += 1;
            }
            d[j] = dj;
            for i in j + 1..n {
                m[(i, j)] /= dj;
            }
            for i in j + 1..n {
                let lij = m[(i, j)];
                if lij == 0.0 {
                    continue;
                }
                let f = lij * dj;
                scale[i] = scale[i].max((f * lij).abs());
                for k in j + 1..=i {
                    let lkj = m[(k, j)];
                    m[(i, k)] -= f * lkj;
                }
            }
        }
        Ldl { n, l: m.data, d, perturbed }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            b[i] -= dot(row, &b[..i]);
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let bi = b[i];
            if bi != 0.0 {
                for k in 0..i {
                    b[k] -= self.l[i * n + k] * bi;
                }
            }
        }
    }
}
