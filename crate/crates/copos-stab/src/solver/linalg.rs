//! Dense linear algebra kernels for the interior-point solver and the
//! second-order minimizer checks: symmetric eigendecomposition (Householder
//! tridiagonalization + implicit QL), Cholesky, and a statically regularized
//! LDLᵀ for the quasidefinite Newton systems. All loops are fixed-order, so
//! results are bit-identical across runs.

/// Dense row-major matrix. Deliberately minimal: the solver needs speed and
/// determinism, not a general-purpose API.
#[derive(Debug, Clone)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, a: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    /// self · other, accumulated in ikj order for cache friendliness.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = Mat::zeros(m, n);
        for i in 0..m {
            for p in 0..k {
                let aip = self.a[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                let orow = &other.a[p * n..(p + 1) * n];
                let dst = &mut out.a[i * n..(i + 1) * n];
                for j in 0..n {
                    dst[j] += aip * orow[j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.a[j * self.rows + i] = self.a[i * self.cols + j];
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += row[j] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// selfᵀ · x without materializing the transpose.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for j in 0..self.cols {
                out[j] += xi * row[j];
            }
        }
        out
    }
}

/// Eigendecomposition A = V diag(d) Vᵀ of a symmetric matrix given by its
/// full row-major storage. Eigenvalues ascend; V's columns are the
/// corresponding orthonormal eigenvectors. Returns None if the QL iteration
/// fails to converge (practically unreachable for finite symmetric input).
pub fn sym_eig(n: usize, a: &[f64]) -> Option<(Vec<f64>, Mat)> {
    assert_eq!(a.len(), n * n);
    let mut v = Mat { rows: n, cols: n, a: a.to_vec() };
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 0 {
        return Some((d, v));
    }
    tred2(n, &mut v, &mut d, &mut e);
    if !tql2(n, &mut v, &mut d, &mut e) {
        return None;
    }
    Some((d, v))
}

/// Eigenvalues only (still computes vectors internally; n stays small here).
pub fn sym_eigvals(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    sym_eig(n, a).map(|(d, _)| d)
}

/// Householder reduction to tridiagonal form, accumulating the orthogonal
/// transformation in `v`. Classical EISPACK tred2 scheme.
fn tred2(n: usize, v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v.at(n - 1, j);
    }
    for i in (1..n).rev() {
        let mut h = 0.0;
        let mut scale = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.at(i - 1, j);
                v.set(i, j, 0.0);
                v.set(j, i, 0.0);
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v.set(j, i, f);
                let mut g = e[j] + v.at(j, j) * f;
                for k in j + 1..i {
                    g += v.at(k, j) * d[k];
                    e[k] += v.at(k, j) * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    let val = v.at(k, j) - (f * e[k] + g * d[k]);
                    v.set(k, j, val);
                }
                d[j] = v.at(i - 1, j);
                v.set(i, j, 0.0);
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v.set(n - 1, i, v.at(i, i));
        v.set(i, i, 1.0);
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v.at(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v.at(k, i + 1) * v.at(k, j);
                }
                for k in 0..=i {
                    let val = v.at(k, j) - g * d[k];
                    v.set(k, j, val);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, 0.0);
        }
    }
    for j in 0..n {
        d[j] = v.at(n - 1, j);
        v.set(n - 1, j, 0.0);
    }
    v.set(n - 1, n - 1, 1.0);
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on the tridiagonal form, accumulating
/// eigenvectors; sorts the spectrum ascending at the end. Returns false on
/// nonconvergence.
fn tql2(n: usize, v: &mut Mat, d: &mut [f64], e: &mut [f64]) -> bool {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter >= 80 {
                    return false;
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let hk = v.at(k, i + 1);
                        v.set(k, i + 1, s * v.at(k, i) + c * hk);
                        v.set(k, i, c * v.at(k, i) - s * hk);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Selection sort ascending, swapping eigenvector columns along.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in i + 1..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in 0..n {
                let tmp = v.at(row, i);
                v.set(row, i, v.at(row, k));
                v.set(row, k, tmp);
            }
        }
    }
    true
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix
/// (full row-major input). Returns None if a pivot drops below `floor`.
pub fn cholesky_lower(n: usize, a: &[f64], floor: f64) -> Option<Mat> {
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l.at(i, k) * l.at(j, k);
            }
            if i == j {
                if sum <= floor {
                    return None;
                }
                l.set(i, i, sum.sqrt());
            } else {
                l.set(i, j, sum / l.at(j, j));
            }
        }
    }
    Some(l)
}

/// Solves L x = b with L lower triangular.
#[cfg_attr(not(test), allow(dead_code))]
pub fn solve_lower(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = b.to_vec();
    for i in 0..n {
        let mut acc = x[i];
        for k in 0..i {
            acc -= l.at(i, k) * x[k];
        }
        x[i] = acc / l.at(i, i);
    }
    x
}

/// Solves Lᵀ x = b with L lower triangular.
pub fn solve_lower_transpose(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut acc = x[i];
        for k in i + 1..n {
            acc -= l.at(k, i) * x[k];
        }
        x[i] = acc / l.at(i, i);
    }
    x
}

/// LDLᵀ factorization without pivoting. The caller is expected to have added
/// static regularization (+δ on the first `pos` diagonal entries, −δ on the
/// rest) so that the matrix is quasidefinite; refinement against the
/// unperturbed matrix recovers the accuracy.
pub struct LdlFactor {
    n: usize,
    /// Unit lower triangle (strictly lower entries) and D on the diagonal.
    ld: Vec<f64>,
}

pub fn ldl_factor(n: usize, a: &[f64]) -> Option<LdlFactor> {
    let mut ld = a.to_vec();
    for j in 0..n {
        let mut dj = ld[j * n + j];
        for k in 0..j {
            let ljk = ld[j * n + k];
            dj -= ljk * ljk * ld[k * n + k];
        }
        if dj == 0.0 || !dj.is_finite() {
            return None;
        }
        ld[j * n + j] = dj;
        for i in j + 1..n {
            let mut v = ld[i * n + j];
            for k in 0..j {
                v -= ld[i * n + k] * ld[j * n + k] * ld[k * n + k];
            }
            ld[i * n + j] = v / dj;
        }
    }
    Some(LdlFactor { n, ld })
}

/// LDLᵀ for quasidefinite saddle systems whose first `npos` pivots should be
/// positive and the rest negative. Pivots with magnitude below `dyn_eps` are
/// clamped to ±`dyn_eps` (sign by position) so the factorization never breaks
/// down; iterative refinement absorbs the perturbation.
pub fn ldl_factor_dynamic(n: usize, a: &[f64], npos: usize, dyn_eps: f64) -> Option<LdlFactor> {
    let mut ld = a.to_vec();
    for j in 0..n {
        let mut dj = ld[j * n + j];
        for k in 0..j {
            let ljk = ld[j * n + k];
            dj -= ljk * ljk * ld[k * n + k];
        }
        if !dj.is_finite() {
            return None;
        }
        if dj.abs() < dyn_eps {
            dj = if j < npos { dyn_eps } else { -dyn_eps };
        }
        ld[j * n + j] = dj;
        for i in j + 1..n {
            let mut v = ld[i * n + j];
            for k in 0..j {
                v -= ld[i * n + k] * ld[j * n + k] * ld[k * n + k];
            }
            ld[i * n + j] = v / dj;
        }
    }
    Some(LdlFactor { n, ld })
}

impl LdlFactor {
    /// Solves A x = b given A = L D Lᵀ.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.ld[i * n + k] * x[k];
            }
            x[i] = acc;
        }
        for (i, item) in x.iter_mut().enumerate() {
            *item /= self.ld[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in i + 1..n {
                acc -= self.ld[k * n + i] * x[k];
            }
            x[i] = acc;
        }
        x
    }
}

/// Dot product with fixed accumulation order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}
