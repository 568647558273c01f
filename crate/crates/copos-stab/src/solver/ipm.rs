//! The interior-point engine behind [`super::solve`].
//!
//! The program is canonicalized to `min c·x  s.t.  Ax = b, x ∈ K` with
//! K = R^f × R^p₊ × ∏ S₊, PSD blocks stored in scaled svec coordinates
//! (off-diagonal × √2 so that the svec dot product is the trace inner
//! product). The iteration is a Mehrotra predictor-corrector on the
//! homogeneous self-dual embedding
//!
//!   Ax − bτ = 0,   −Aᵀy − s + cτ = 0,   bᵀy − cᵀx − κ = 0,
//!
//! with Nesterov–Todd scaling, so primal or dual infeasibility surfaces as
//! κ-dominance with a clean improving ray instead of residual divergence.
//! Each iteration eliminates (Δs, Δx_cone, Δκ) and factors one quasidefinite
//! matrix [[G, A_f], [A_fᵀ, 0]] with G = A_c W² A_cᵀ by LDLᵀ under static
//! regularization.

use std::collections::BTreeMap;

use super::linalg::{self, LdlFactor, Mat};
use super::{Assignment, Certificate, Residuals, Solution, SolverConfig, SolverError, Status};
use crate::conic::{ConicProgram, Sense, VarRef};
use crate::matrix::SymMatrix;

const SQRT2: f64 = std::f64::consts::SQRT_2;
/// Static regularization of the quasidefinite system (scaled by its norm).
const REG: f64 = 1e-9;
/// Fraction-to-boundary factor for the combined step.
const STEP_FRAC: f64 = 0.99;
/// ∞-norm threshold on normalized improving rays.
const CERT_TOL: f64 = 1e-7;
/// Consecutive step collapses tolerated before giving up.
const STALL_LIMIT: usize = 8;

fn tri(s: usize) -> usize {
    s * (s + 1) / 2
}

fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

fn sparse_dot(row: &[(usize, f64)], v: &[f64]) -> f64 {
    row.iter().map(|&(j, c)| c * v[j]).sum()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Dense symmetric matrix from a √2-scaled svec segment.
fn mat_from_svec(s: usize, v: &[f64]) -> Mat {
    let mut m = Mat::zeros(s, s);
    for j in 0..s {
        for i in 0..=j {
            let val = if i == j { v[svec_index(i, j)] } else { v[svec_index(i, j)] / SQRT2 };
            m.set(i, j, val);
            m.set(j, i, val);
        }
    }
    m
}

fn svec_from_mat(m: &Mat, out: &mut [f64]) {
    let s = m.rows;
    for j in 0..s {
        for i in 0..=j {
            out[svec_index(i, j)] = if i == j {
                m.at(i, i)
            } else {
                // symmetrize for safety against rounding drift
                SQRT2 * 0.5 * (m.at(i, j) + m.at(j, i))
            };
        }
    }
}

/// Canonicalized problem in scaled svec coordinates, after optional Ruiz
/// equilibration. Scale vectors map back: x = D_c x', y = D_r y',
/// s = D_c⁻¹ s'.
struct Canon {
    m: usize,
    nf: usize,
    nn: usize,
    blocks: Vec<usize>,
    /// Offset of each block's svec segment inside the cone vector.
    block_off: Vec<usize>,
    cone_dim: usize,
    /// Barrier degree: nn + Σ block sizes.
    nu: f64,
    rows_cone: Vec<Vec<(usize, f64)>>,
    a_free: Mat,
    b: Vec<f64>,
    c_cone: Vec<f64>,
    c_free: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale_cone: Vec<f64>,
    col_scale_free: Vec<f64>,
}

impl Canon {
    fn build(p: &ConicProgram, scaling: bool) -> Canon {
        let m = p.constraints.len();
        let nf = p.num_free;
        let nn = p.num_nonneg;
        let blocks: Vec<usize> = p.psd_blocks.iter().map(|b| b.size).collect();
        let mut block_off = Vec::with_capacity(blocks.len());
        let mut off = nn;
        for &s in &blocks {
            block_off.push(off);
            off += tri(s);
        }
        let cone_dim = off;
        let nu = (nn + blocks.iter().sum::<usize>()) as f64;

        let flip = if p.sense == Sense::Max { -1.0 } else { 1.0 };
        let cone_col = |v: &VarRef| -> Option<(usize, f64)> {
            match *v {
                VarRef::Nonneg(i) => Some((i, 1.0)),
                VarRef::Psd { block, row, col } => {
                    let scale = if row == col { 1.0 } else { SQRT2 };
                    Some((block_off[block] + svec_index(row, col), scale))
                }
                VarRef::Free(_) => None,
            }
        };

        let mut rows_cone = Vec::with_capacity(m);
        let mut a_free = Mat::zeros(m, nf);
        let mut b = Vec::with_capacity(m);
        for (i, con) in p.constraints.iter().enumerate() {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for (v, c) in &con.terms {
                match cone_col(v) {
                    Some((j, scale)) => *acc.entry(j).or_insert(0.0) += scale * c,
                    None => {
                        if let VarRef::Free(j) = v {
                            a_free.set(i, *j, a_free.at(i, *j) + c);
                        }
                    }
                }
            }
            rows_cone.push(acc.into_iter().filter(|&(_, c)| c != 0.0).collect());
            b.push(con.rhs);
        }
        let mut c_cone = vec![0.0; cone_dim];
        let mut c_free = vec![0.0; nf];
        for (v, c) in &p.objective {
            match cone_col(v) {
                Some((j, scale)) => c_cone[j] += flip * scale * c,
                None => {
                    if let VarRef::Free(j) = v {
                        c_free[*j] += flip * c;
                    }
                }
            }
        }

        let mut canon = Canon {
            m,
            nf,
            nn,
            blocks,
            block_off,
            cone_dim,
            nu,
            rows_cone,
            a_free,
            b,
            c_cone,
            c_free,
            row_scale: vec![1.0; m],
            col_scale_cone: vec![1.0; cone_dim],
            col_scale_free: vec![1.0; nf],
        };
        if scaling {
            canon.ruiz();
        }
        for i in 0..m {
            canon.b[i] *= canon.row_scale[i];
        }
        for j in 0..cone_dim {
            canon.c_cone[j] *= canon.col_scale_cone[j];
        }
        for j in 0..nf {
            canon.c_free[j] *= canon.col_scale_free[j];
        }
        canon
    }

    /// Ruiz equilibration: alternate row and column ∞-norm scaling. PSD
    /// blocks get one uniform factor per block so the cone is preserved.
    fn ruiz(&mut self) {
        let inv_sqrt = |x: f64| if x > 0.0 { 1.0 / x.sqrt() } else { 1.0 };
        for _ in 0..10 {
            for i in 0..self.m {
                let mut mx = norm_inf(self.a_free.row(i));
                for &(_, v) in &self.rows_cone[i] {
                    mx = mx.max(v.abs());
                }
                let d = inv_sqrt(mx);
                for e in self.rows_cone[i].iter_mut() {
                    e.1 *= d;
                }
                for j in 0..self.nf {
                    self.a_free.set(i, j, self.a_free.at(i, j) * d);
                }
                self.row_scale[i] *= d;
            }
            let mut col_max = vec![0.0f64; self.cone_dim];
            for row in &self.rows_cone {
                for &(j, v) in row {
                    col_max[j] = col_max[j].max(v.abs());
                }
            }
            let mut d_col = vec![1.0f64; self.cone_dim];
            for (j, d) in d_col.iter_mut().enumerate().take(self.nn) {
                *d = inv_sqrt(col_max[j]);
            }
            for (bi, &s) in self.blocks.iter().enumerate() {
                let off = self.block_off[bi];
                let mut mx = 0.0f64;
                for k in 0..tri(s) {
                    mx = mx.max(col_max[off + k]);
                }
                let d = inv_sqrt(mx);
                for k in 0..tri(s) {
                    d_col[off + k] = d;
                }
            }
            for row in self.rows_cone.iter_mut() {
                for e in row.iter_mut() {
                    e.1 *= d_col[e.0];
                }
            }
            for j in 0..self.cone_dim {
                self.col_scale_cone[j] *= d_col[j];
            }
            for j in 0..self.nf {
                let mut mx = 0.0f64;
                for i in 0..self.m {
                    mx = mx.max(self.a_free.at(i, j).abs());
                }
                let d = inv_sqrt(mx);
                for i in 0..self.m {
                    self.a_free.set(i, j, self.a_free.at(i, j) * d);
                }
                self.col_scale_free[j] *= d;
            }
        }
    }

    fn a_cone_times(&self, x: &[f64]) -> Vec<f64> {
        self.rows_cone.iter().map(|row| sparse_dot(row, x)).collect()
    }

    fn a_cone_t_times(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cone_dim];
        for (i, row) in self.rows_cone.iter().enumerate() {
            let yi = y[i];
            if yi != 0.0 {
                for &(j, c) in row {
                    out[j] += c * yi;
                }
            }
        }
        out
    }

    fn block_segment<'a>(&self, v: &'a [f64], bi: usize) -> &'a [f64] {
        let off = self.block_off[bi];
        &v[off..off + tri(self.blocks[bi])]
    }
}

/// Nesterov–Todd scaling point: W = R Rᵀ with X̃ = R⁻¹XR⁻ᵀ = S̃ = RᵀSR = Λ.
struct NtBlock {
    r: Mat,
    rt: Mat,
    rinv: Mat,
    rinv_t: Mat,
    lam: Vec<f64>,
}

struct NtScaling {
    w_nn: Vec<f64>,
    lam_nn: Vec<f64>,
    blocks: Vec<NtBlock>,
}

impl NtScaling {
    fn compute(canon: &Canon, x_c: &[f64], s_c: &[f64]) -> Result<NtScaling, SolverError> {
        let mut w_nn = Vec::with_capacity(canon.nn);
        let mut lam_nn = Vec::with_capacity(canon.nn);
        for i in 0..canon.nn {
            let (x, s) = (x_c[i], s_c[i]);
            if !(x > 0.0 && s > 0.0) {
                return Err(SolverError::Numerical(format!(
                    "nonnegative iterate left the cone interior (x={x}, s={s})"
                )));
            }
            w_nn.push((x / s).sqrt());
            lam_nn.push((x * s).sqrt());
        }
        let mut blocks = Vec::with_capacity(canon.blocks.len());
        for (bi, &sdim) in canon.blocks.iter().enumerate() {
            let x_mat = mat_from_svec(sdim, canon.block_segment(x_c, bi));
            let s_mat = mat_from_svec(sdim, canon.block_segment(s_c, bi));
            let l = linalg::cholesky_lower(sdim, &s_mat.a, 0.0).ok_or_else(|| {
                SolverError::Numerical("dual block left the cone interior".into())
            })?;
            // H = Lᵀ X L, eigendecomposed to build R = L⁻ᵀ Q D^{1/4}.
            let lt = l.transpose();
            let h = lt.matmul(&x_mat).matmul(&l);
            let (d, q) = linalg::sym_eig(sdim, &h.a)
                .ok_or_else(|| SolverError::Numerical("eigensolver did not converge".into()))?;
            if d.iter().any(|&v| v <= 0.0) {
                return Err(SolverError::Numerical(
                    "primal block left the cone interior".into(),
                ));
            }
            let d4: Vec<f64> = d.iter().map(|v| v.powf(0.25)).collect();
            // Z = L⁻ᵀ Q column by column.
            let mut r = Mat::zeros(sdim, sdim);
            for k in 0..sdim {
                let col: Vec<f64> = (0..sdim).map(|i| q.at(i, k)).collect();
                let z = linalg::solve_lower_transpose(&l, &col);
                for i in 0..sdim {
                    r.set(i, k, z[i] * d4[k]);
                }
            }
            // R⁻¹ = D^{-1/4} Qᵀ Lᵀ = D^{-1/4} (L Q)ᵀ.
            let lq = l.matmul(&q);
            let mut rinv = Mat::zeros(sdim, sdim);
            for k in 0..sdim {
                for j in 0..sdim {
                    rinv.set(k, j, lq.at(j, k) / d4[k]);
                }
            }
            let rt = r.transpose();
            let rinv_t = rinv.transpose();
            let lam = d.iter().map(|v| v.sqrt()).collect();
            blocks.push(NtBlock { r, rt, rinv, rinv_t, lam });
        }
        Ok(NtScaling { w_nn, lam_nn, blocks })
    }

    /// svec(W · mat(row) · W) for a sparse constraint row, exploiting that
    /// Rᵀ·mat(row)·R is a sum of a few outer products of R's rows.
    fn wsq_sparse(&self, canon: &Canon, row: &[(usize, f64)]) -> Vec<f64> {
        let mut out = vec![0.0; canon.cone_dim];
        let mut touched: Vec<Vec<(usize, usize, f64)>> =
            vec![Vec::new(); canon.blocks.len()];
        for &(j, v) in row {
            if j < canon.nn {
                out[j] = self.w_nn[j] * self.w_nn[j] * v;
            } else {
                // locate the block
                let bi = match canon.block_off.binary_search(&j) {
                    Ok(b) => b,
                    Err(b) => b - 1,
                };
                let local = j - canon.block_off[bi];
                // invert svec_index: find (i ≤ jj) with jj(jj+1)/2 + i = local
                let mut jj = 0usize;
                while tri(jj + 1) <= local {
                    jj += 1;
                }
                let i = local - tri(jj);
                touched[bi].push((i, jj, v));
            }
        }
        for (bi, entries) in touched.iter().enumerate() {
            if entries.is_empty() {
                continue;
            }
            let sdim = canon.blocks[bi];
            let nt = &self.blocks[bi];
            // B = Rᵀ V R from outer products of R's rows.
            let mut bmat = Mat::zeros(sdim, sdim);
            for &(i, j, v) in entries {
                let ri = nt.r.row(i).to_vec();
                if i == j {
                    for a in 0..sdim {
                        let f = v * ri[a];
                        for bcol in 0..sdim {
                            bmat.a[a * sdim + bcol] += f * ri[bcol];
                        }
                    }
                } else {
                    let rj = nt.r.row(j).to_vec();
                    let coeff = v / SQRT2;
                    for a in 0..sdim {
                        let fi = coeff * ri[a];
                        let fj = coeff * rj[a];
                        for bcol in 0..sdim {
                            bmat.a[a * sdim + bcol] += fi * rj[bcol] + fj * ri[bcol];
                        }
                    }
                }
            }
            let m_out = nt.r.matmul(&bmat).matmul(&nt.rt);
            let off = canon.block_off[bi];
            svec_from_mat(&m_out, &mut out[off..off + tri(sdim)]);
        }
        out
    }

    /// svec(W · mat(v) · W) for a dense cone vector.
    fn wsq_dense(&self, canon: &Canon, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; canon.cone_dim];
        for j in 0..canon.nn {
            out[j] = self.w_nn[j] * self.w_nn[j] * v[j];
        }
        for (bi, &sdim) in canon.blocks.iter().enumerate() {
            let nt = &self.blocks[bi];
            let v_mat = mat_from_svec(sdim, canon.block_segment(v, bi));
            let bmat = nt.rt.matmul(&v_mat).matmul(&nt.r);
            let m_out = nt.r.matmul(&bmat).matmul(&nt.rt);
            let off = canon.block_off[bi];
            svec_from_mat(&m_out, &mut out[off..off + tri(sdim)]);
        }
        out
    }
}

struct Direction {
    dx_c: Vec<f64>,
    dx_f: Vec<f64>,
    dy: Vec<f64>,
    ds_c: Vec<f64>,
    dtau: f64,
    dkappa: f64,
    /// NT-scaled block directions, filled by `max_step` and reused by the
    /// corrector.
    dxt: Vec<Mat>,
    dst: Vec<Mat>,
}

/// Per-iteration factorization workspace.
struct Workspace {
    factor: LdlFactor,
    k0: Mat,
    u1: Vec<f64>,
    q: Vec<f64>,
    /// Denominator of the τ update, computed in its cancellation-free form.
    denom: f64,
}

struct State {
    x_c: Vec<f64>,
    x_f: Vec<f64>,
    y: Vec<f64>,
    s_c: Vec<f64>,
    tau: f64,
    kappa: f64,
}

pub(super) fn solve_canonical(
    p: &ConicProgram,
    cfg: &SolverConfig,
) -> Result<Solution, SolverError> {
    let canon = Canon::build(p, cfg.scaling);
    if canon.m == 0 {
        return Err(SolverError::Invalid(crate::conic::ConicError::Invalid(
            "program has no constraints".into(),
        )));
    }

    let mut st = State {
        x_c: init_cone(&canon),
        x_f: vec![0.0; canon.nf],
        y: vec![0.0; canon.m],
        s_c: init_cone(&canon),
        tau: 1.0,
        kappa: 1.0,
    };

    let b_unscaled: Vec<f64> =
        canon.b.iter().zip(&canon.row_scale).map(|(v, d)| v / d).collect();
    let mut c_unscaled_norm = 0.0f64;
    for j in 0..canon.cone_dim {
        c_unscaled_norm = c_unscaled_norm.max((canon.c_cone[j] / canon.col_scale_cone[j]).abs());
    }
    for j in 0..canon.nf {
        c_unscaled_norm = c_unscaled_norm.max((canon.c_free[j] / canon.col_scale_free[j]).abs());
    }
    let b_norm = norm_inf(&b_unscaled);

    let mut stall = 0usize;
    let mut best_score = f64::INFINITY;
    let mut worse_streak = 0usize;
    let mut iterations = 0usize;
    for iter in 0..cfg.max_iter {
        iterations = iter;
        // Residuals of the embedding (scaled space).
        let ax: Vec<f64> = {
            let mut v = canon.a_cone_times(&st.x_c);
            let vf = canon.a_free.matvec(&st.x_f);
            for i in 0..canon.m {
                v[i] += vf[i];
            }
            v
        };
        let r_p: Vec<f64> =
            (0..canon.m).map(|i| canon.b[i] * st.tau - ax[i]).collect();
        let aty = canon.a_cone_t_times(&st.y);
        let r_d_cone: Vec<f64> = (0..canon.cone_dim)
            .map(|j| canon.c_cone[j] * st.tau - aty[j] - st.s_c[j])
            .collect();
        let atyf = canon.a_free.matvec_t(&st.y);
        let r_d_free: Vec<f64> =
            (0..canon.nf).map(|j| canon.c_free[j] * st.tau - atyf[j]).collect();
        let ctx = linalg::dot(&canon.c_cone, &st.x_c) + linalg::dot(&canon.c_free, &st.x_f);
        let bty = linalg::dot(&canon.b, &st.y);
        let r_g = st.kappa + ctx - bty;
        let mu = (linalg::dot(&st.x_c, &st.s_c) + st.tau * st.kappa) / (canon.nu + 1.0);
        if !mu.is_finite() {
            return Err(SolverError::Numerical("iterate became non-finite".into()));
        }

        // Unscaled convergence metrics at (x, y, s)/τ.
        let pres = {
            let mut mx = 0.0f64;
            for i in 0..canon.m {
                mx = mx.max(((ax[i] / st.tau - canon.b[i]) / canon.row_scale[i]).abs());
            }
            mx / (1.0 + b_norm)
        };
        let dres = {
            let mut mx = 0.0f64;
            for j in 0..canon.cone_dim {
                let v = (aty[j] + st.s_c[j] - canon.c_cone[j] * st.tau)
                    / (st.tau * canon.col_scale_cone[j]);
                mx = mx.max(v.abs());
            }
            for j in 0..canon.nf {
                let v = (atyf[j] - canon.c_free[j] * st.tau) / (st.tau * canon.col_scale_free[j]);
                mx = mx.max(v.abs());
            }
            mx / (1.0 + c_unscaled_norm)
        };
        let pobj = ctx / st.tau;
        let dobj = bty / st.tau;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        if cfg.verbose {
            eprintln!(
                "iter {iter:4}  pres {pres:9.3e}  dres {dres:9.3e}  gap {gap:9.3e}  mu {mu:9.3e}  tau {:9.3e}",
                st.tau
            );
        }

        if pres <= cfg.eps_primal && dres <= cfg.eps_dual && gap <= cfg.eps_gap {
            return Ok(extract_optimal(
                &canon, &st, pobj, dobj, pres, dres, gap, iterations,
            ));
        }
        // Once roundoff dominates the steps the residuals can run away
        // instead of stalling; cut the loop rather than follow them.
        let score = pres.max(dres).max(gap);
        if score < best_score {
            best_score = score;
            worse_streak = 0;
        } else if best_score <= 1e-4 && score > 1e4 * best_score {
            worse_streak += 1;
            if worse_streak >= 3 {
                break;
            }
        }
        // Farkas certificates.
        if bty > 0.0 {
            let inv = 1.0 / bty;
            let mut resid = 0.0f64;
            for j in 0..canon.cone_dim {
                resid = resid
                    .max(((aty[j] + st.s_c[j]) * inv / canon.col_scale_cone[j]).abs());
            }
            for j in 0..canon.nf {
                resid = resid.max((atyf[j] * inv / canon.col_scale_free[j]).abs());
            }
            if resid <= CERT_TOL {
                return Ok(extract_primal_infeasible(&canon, &st, inv, resid, iterations));
            }
        }
        if ctx < 0.0 {
            let inv = -1.0 / ctx;
            let mut resid = 0.0f64;
            for i in 0..canon.m {
                resid = resid.max((ax[i] * inv / canon.row_scale[i]).abs());
            }
            if resid <= CERT_TOL {
                return Ok(extract_dual_infeasible(&canon, &st, inv, resid, iterations));
            }
        }

        // NT scaling and the quasidefinite system. A breakdown here means
        // the iterate reached the numerical boundary of the cone; report the
        // best point found rather than erroring out.
        let scaling = match NtScaling::compute(&canon, &st.x_c, &st.s_c) {
            Ok(s) => s,
            Err(_) => break,
        };
        let ws = match build_workspace(&canon, &scaling, &st) {
            Ok(w) => w,
            Err(_) => break,
        };

        // Two late-stage failure modes leave the dual side converged while
        // the primal residual is stuck or polluted: dependent constraint
        // rows pin it on a rounding floor, and near complementarity the
        // recovery Δx = d − W²Δs amplifies roundoff by ‖W²‖. Either way,
        // restore primal feasibility with a least-norm step in the current
        // scaled metric (which suppresses motion along near-boundary
        // directions and so stays inside the cone) and accept iff the
        // corrected point genuinely meets the tolerances. The gap gate is
        // loose because an infeasible x distorts the measured objective;
        // the corrected gap is what must pass.
        if dres <= cfg.eps_dual && gap <= 1e4 * cfg.eps_gap && pres <= 1e4 * cfg.eps_primal {
            if let Some((restored, new_pres, new_pobj)) =
                restore_primal(&canon, &scaling, &ws, &st)
            {
                let new_gap =
                    (new_pobj - dobj).abs() / (1.0 + new_pobj.abs() + dobj.abs());
                if new_pres <= cfg.eps_primal && new_gap <= cfg.eps_gap {
                    let inv_tau = 1.0 / st.tau;
                    return Ok(Solution {
                        status: Status::Optimal,
                        primal_value: new_pobj,
                        dual_value: dobj,
                        primal: restored,
                        dual_y: (0..canon.m)
                            .map(|i| canon.row_scale[i] * st.y[i] * inv_tau)
                            .collect(),
                        dual_slack: slack_unscaled(&canon, &st.s_c, inv_tau),
                        residuals: Residuals { primal: new_pres, dual: dres, gap: new_gap },
                        certificate: None,
                        iterations,
                    });
                }
            }
        }
        // The same floor can pin the dual residual instead: y is non-unique
        // along the left null space of A and the leftover lies outside
        // range(Aᵀ), where no y can reach it. Correct y by least squares in
        // the scaled metric (free rows as hard constraints), fold what
        // remains on the cone rows into the slack — the weighting keeps that
        // fold away from near-boundary slack coordinates — and accept iff
        // the slack stays in the cone and the re-measured residuals pass.
        if pres <= cfg.eps_primal && gap <= 1e4 * cfg.eps_gap && dres <= 1e4 * cfg.eps_dual {
            if let Some((y_bar, s_bar, new_dres, new_dobj)) = restore_dual(&canon, &st)
            {
                let new_gap =
                    (pobj - new_dobj).abs() / (1.0 + pobj.abs() + new_dobj.abs());
                if new_dres <= cfg.eps_dual && new_gap <= cfg.eps_gap {
                    let inv_tau = 1.0 / st.tau;
                    return Ok(Solution {
                        status: Status::Optimal,
                        primal_value: pobj,
                        dual_value: new_dobj,
                        primal: assignment_unscaled(&canon, &st.x_f, &st.x_c, inv_tau),
                        dual_y: (0..canon.m)
                            .map(|i| canon.row_scale[i] * y_bar[i])
                            .collect(),
                        dual_slack: slack_unscaled(&canon, &s_bar, 1.0),
                        residuals: Residuals { primal: pres, dual: new_dres, gap: new_gap },
                        certificate: None,
                        iterations,
                    });
                }
            }
        }

        // Predictor: aim at full residual elimination and zero
        // complementarity.
        let comp_nn: Vec<f64> = scaling.lam_nn.iter().map(|l| -l).collect();
        let comp_blocks: Vec<Mat> = scaling
            .blocks
            .iter()
            .map(|b| {
                let sdim = b.lam.len();
                let mut m = Mat::zeros(sdim, sdim);
                for i in 0..sdim {
                    m.set(i, i, -b.lam[i]);
                }
                m
            })
            .collect();
        let mut aff = compute_direction(
            &canon, &scaling, &ws, &st, &r_p, &r_d_cone, &r_d_free, r_g,
            -st.tau * st.kappa, &comp_nn, &comp_blocks,
        );
        if !direction_is_finite(&aff) {
            break;
        }
        let alpha_aff = max_step(&canon, &scaling, &st, &mut aff).min(1.0);

        let mu_aff = {
            let mut dot_xs = 0.0;
            for j in 0..canon.cone_dim {
                dot_xs += (st.x_c[j] + alpha_aff * aff.dx_c[j])
                    * (st.s_c[j] + alpha_aff * aff.ds_c[j]);
            }
            let tk = (st.tau + alpha_aff * aff.dtau) * (st.kappa + alpha_aff * aff.dkappa);
            (dot_xs + tk) / (canon.nu + 1.0)
        };
        let sigma = (mu_aff / mu).max(0.0).min(1.0).powi(3);

        // Corrector: damped residual targets plus second-order and
        // centering terms in the scaled complementarity.
        let one_minus = 1.0 - sigma;
        let t_p: Vec<f64> = r_p.iter().map(|v| one_minus * v).collect();
        let t_dc: Vec<f64> = r_d_cone.iter().map(|v| -one_minus * v).collect();
        let t_df: Vec<f64> = r_d_free.iter().map(|v| -one_minus * v).collect();
        let t_g = one_minus * r_g;
        let comp_nn: Vec<f64> = (0..canon.nn)
            .map(|i| {
                let dxt = aff.dx_c[i] / scaling.w_nn[i];
                let dst = scaling.w_nn[i] * aff.ds_c[i];
                let lam = scaling.lam_nn[i];
                (sigma * mu - lam * lam - dxt * dst) / lam
            })
            .collect();
        let comp_blocks: Vec<Mat> = scaling
            .blocks
            .iter()
            .enumerate()
            .map(|(bi, ntb)| {
                let sdim = ntb.lam.len();
                let dxt = &aff.dxt[bi];
                let dst = &aff.dst[bi];
                // (ΔX̃ΔS̃ + ΔS̃ΔX̃)/2 — the symmetrized second-order term.
                let prod = dxt.matmul(dst);
                let mut d = Mat::zeros(sdim, sdim);
                for i in 0..sdim {
                    for j in 0..sdim {
                        let jordan = 0.5 * (prod.at(i, j) + prod.at(j, i));
                        let centered = if i == j {
                            sigma * mu - ntb.lam[i] * ntb.lam[i] - jordan
                        } else {
                            -jordan
                        };
                        d.set(i, j, 2.0 * centered / (ntb.lam[i] + ntb.lam[j]));
                    }
                }
                d
            })
            .collect();
        let t_tk = sigma * mu - st.tau * st.kappa - aff.dtau * aff.dkappa;
        let mut dir = compute_direction(
            &canon, &scaling, &ws, &st, &t_p, &t_dc, &t_df, t_g, t_tk, &comp_nn,
            &comp_blocks,
        );
        if !direction_is_finite(&dir) {
            break;
        }
        let alpha = (STEP_FRAC * max_step(&canon, &scaling, &st, &mut dir)).min(1.0);

        for j in 0..canon.cone_dim {
            st.x_c[j] += alpha * dir.dx_c[j];
            st.s_c[j] += alpha * dir.ds_c[j];
        }
        for j in 0..canon.nf {
            st.x_f[j] += alpha * dir.dx_f[j];
        }
        for i in 0..canon.m {
            st.y[i] += alpha * dir.dy[i];
        }
        st.tau += alpha * dir.dtau;
        st.kappa += alpha * dir.dkappa;

        if alpha < 1e-7 {
            stall += 1;
            if stall >= STALL_LIMIT {
                break;
            }
        } else {
            stall = 0;
        }
    }

    // Iteration budget exhausted (or stalled): report the current iterate.
    let ctx = linalg::dot(&canon.c_cone, &st.x_c) + linalg::dot(&canon.c_free, &st.x_f);
    let bty = linalg::dot(&canon.b, &st.y);
    Ok(Solution {
        status: Status::MaxIterReached,
        primal_value: ctx / st.tau,
        dual_value: bty / st.tau,
        primal: assignment_unscaled(&canon, &st.x_f, &st.x_c, 1.0 / st.tau),
        dual_y: (0..canon.m)
            .map(|i| canon.row_scale[i] * st.y[i] / st.tau)
            .collect(),
        dual_slack: slack_unscaled(&canon, &st.s_c, 1.0 / st.tau),
        residuals: Residuals { primal: f64::NAN, dual: f64::NAN, gap: f64::NAN },
        certificate: None,
        iterations,
    })
}

fn direction_is_finite(d: &Direction) -> bool {
    d.dx_c.iter().all(|v| v.is_finite())
        && d.dx_f.iter().all(|v| v.is_finite())
        && d.dy.iter().all(|v| v.is_finite())
        && d.ds_c.iter().all(|v| v.is_finite())
        && d.dtau.is_finite()
        && d.dkappa.is_finite()
}

fn init_cone(canon: &Canon) -> Vec<f64> {
    let mut v = vec![0.0; canon.cone_dim];
    for e in v.iter_mut().take(canon.nn) {
        *e = 1.0;
    }
    for (bi, &s) in canon.blocks.iter().enumerate() {
        let off = canon.block_off[bi];
        for i in 0..s {
            v[off + svec_index(i, i)] = 1.0;
        }
    }
    v
}

fn build_workspace(
    canon: &Canon,
    scaling: &NtScaling,
    st: &State,
) -> Result<Workspace, SolverError> {
    let m = canon.m;
    let nf = canon.nf;
    let dim = m + nf;

    let mut g = Mat::zeros(m, m);
    for l in 0..m {
        let wv = scaling.wsq_sparse(canon, &canon.rows_cone[l]);
        for k in 0..m {
            g.set(k, l, sparse_dot(&canon.rows_cone[k], &wv));
        }
    }
    for k in 0..m {
        for l in k + 1..m {
            let avg = 0.5 * (g.at(k, l) + g.at(l, k));
            g.set(k, l, avg);
            g.set(l, k, avg);
        }
    }

    let mut k0 = Mat::zeros(dim, dim);
    for i in 0..m {
        for j in 0..m {
            k0.set(i, j, g.at(i, j));
        }
        for j in 0..nf {
            k0.set(i, m + j, canon.a_free.at(i, j));
            k0.set(m + j, i, canon.a_free.at(i, j));
        }
    }
    let mut k_reg = k0.clone();
    for i in 0..m {
        k_reg.set(i, i, k_reg.at(i, i) + REG);
    }
    for j in 0..nf {
        k_reg.set(m + j, m + j, k_reg.at(m + j, m + j) - REG);
    }
    let mut diag_max = 0.0f64;
    for i in 0..dim {
        diag_max = diag_max.max(k_reg.at(i, i).abs());
    }
    let dyn_eps = 1e-13 * (1.0 + diag_max);
    let factor = linalg::ldl_factor_dynamic(dim, &k_reg.a, m, dyn_eps)
        .ok_or_else(|| SolverError::Numerical("KKT factorization failed".into()))?;

    let wc = scaling.wsq_dense(canon, &canon.c_cone);
    let awc = canon.a_cone_times(&wc);
    let mut rhs1 = vec![0.0; dim];
    for i in 0..m {
        rhs1[i] = canon.b[i] + awc[i];
    }
    rhs1[m..].copy_from_slice(&canon.c_free);
    let u1 = solve_refined(&factor, &k0, &rhs1);

    let mut q = vec![0.0; dim];
    for i in 0..m {
        q[i] = canon.b[i] - awc[i];
    }
    for j in 0..nf {
        q[m + j] = -canon.c_free[j];
    }
    // The τ-update denominator is qᵀu1 + cᵀW²c + κ/τ on paper, but both
    // dot products grow like ‖W²‖ as μ collapses while their sum stays
    // bounded, and the cancellation can round the denominator to zero.
    // Substituting the system solved by u1 turns the same quantity into
    // κ/τ + ‖W(c − A_cᵀ u1_y)‖², a sum of nonnegative terms; compute that.
    let atv = canon.a_cone_t_times(&u1[..m]);
    let rz: Vec<f64> =
        (0..canon.cone_dim).map(|j| canon.c_cone[j] - atv[j]).collect();
    let wz = scaling.wsq_dense(canon, &rz);
    let denom = st.kappa / st.tau + linalg::dot(&rz, &wz);

    Ok(Workspace { factor, k0, u1, q, denom })
}

/// LDLᵀ solve with iterative refinement against the unregularized system.
/// Refines until the residual stops improving (the factor is both
/// regularized and clamped, so a couple of rounds are usually enough, but
/// ill-conditioned late iterates benefit from more).
fn solve_refined(factor: &LdlFactor, k0: &Mat, rhs: &[f64]) -> Vec<f64> {
    let rhs_norm = norm_inf(rhs);
    let mut u = factor.solve(rhs);
    let mut best = u.clone();
    let mut best_res = f64::INFINITY;
    for _ in 0..8 {
        let ku = k0.matvec(&u);
        let r: Vec<f64> = rhs.iter().zip(&ku).map(|(a, b)| a - b).collect();
        let res = norm_inf(&r);
        if !res.is_finite() {
            break;
        }
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&u);
        }
        if res <= 1e-15 * (1.0 + rhs_norm) {
            break;
        }
        let du = factor.solve(&r);
        for (ui, di) in u.iter_mut().zip(&du) {
            *ui += di;
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn compute_direction(
    canon: &Canon,
    scaling: &NtScaling,
    ws: &Workspace,
    st: &State,
    t_p: &[f64],
    t_dc: &[f64],
    t_df: &[f64],
    t_g: f64,
    t_tk: f64,
    comp_nn: &[f64],
    comp_blocks: &[Mat],
) -> Direction {
    let m = canon.m;
    let nf = canon.nf;

    // d_c = scaled-space complementarity target mapped to x-space.
    let mut d_c = vec![0.0; canon.cone_dim];
    for i in 0..canon.nn {
        d_c[i] = scaling.w_nn[i] * comp_nn[i];
    }
    for (bi, ntb) in scaling.blocks.iter().enumerate() {
        let m_out = ntb.r.matmul(&comp_blocks[bi]).matmul(&ntb.rt);
        let off = canon.block_off[bi];
        let sdim = canon.blocks[bi];
        svec_from_mat(&m_out, &mut d_c[off..off + tri(sdim)]);
    }

    let w_tdc = scaling.wsq_dense(canon, t_dc);
    let a_dc = canon.a_cone_times(&d_c);
    let a_wtdc = canon.a_cone_times(&w_tdc);
    let mut rhs0 = vec![0.0; m + nf];
    for i in 0..m {
        rhs0[i] = t_p[i] - a_dc[i] - a_wtdc[i];
    }
    for j in 0..nf {
        rhs0[m + j] = -t_df[j];
    }
    let u0 = solve_refined(&ws.factor, &ws.k0, &rhs0);

    let r3 = t_g
        + linalg::dot(&canon.c_cone, &d_c)
        + linalg::dot(&canon.c_cone, &w_tdc)
        + t_tk / st.tau;
    let dtau = (r3 - linalg::dot(&ws.q, &u0)) / ws.denom;

    let mut dy = vec![0.0; m];
    let mut dx_f = vec![0.0; nf];
    for i in 0..m {
        dy[i] = u0[i] + dtau * ws.u1[i];
    }
    for j in 0..nf {
        dx_f[j] = u0[m + j] + dtau * ws.u1[m + j];
    }

    let at_dy = canon.a_cone_t_times(&dy);
    let ds_c: Vec<f64> = (0..canon.cone_dim)
        .map(|j| -at_dy[j] + canon.c_cone[j] * dtau - t_dc[j])
        .collect();
    let w_dsc = scaling.wsq_dense(canon, &ds_c);
    let dx_c: Vec<f64> = (0..canon.cone_dim).map(|j| d_c[j] - w_dsc[j]).collect();
    let dkappa = (t_tk - st.kappa * dtau) / st.tau;

    Direction { dx_c, dx_f, dy, ds_c, dtau, dkappa, dxt: Vec::new(), dst: Vec::new() }
}

/// Largest α keeping x, s, τ, κ in the (closed) cone; also caches the
/// NT-scaled block directions on the way.
fn max_step(canon: &Canon, scaling: &NtScaling, st: &State, dir: &mut Direction) -> f64 {
    let mut alpha = f64::INFINITY;
    for i in 0..canon.nn {
        if dir.dx_c[i] < 0.0 {
            alpha = alpha.min(-st.x_c[i] / dir.dx_c[i]);
        }
        if dir.ds_c[i] < 0.0 {
            alpha = alpha.min(-st.s_c[i] / dir.ds_c[i]);
        }
    }
    if dir.dtau < 0.0 {
        alpha = alpha.min(-st.tau / dir.dtau);
    }
    if dir.dkappa < 0.0 {
        alpha = alpha.min(-st.kappa / dir.dkappa);
    }
    dir.dxt.clear();
    dir.dst.clear();
    for (bi, ntb) in scaling.blocks.iter().enumerate() {
        let sdim = canon.blocks[bi];
        let dx_mat = mat_from_svec(sdim, canon.block_segment(&dir.dx_c, bi));
        let ds_mat = mat_from_svec(sdim, canon.block_segment(&dir.ds_c, bi));
        let dxt = ntb.rinv.matmul(&dx_mat).matmul(&ntb.rinv_t);
        let dst = ntb.rt.matmul(&ds_mat).matmul(&ntb.r);
        for (mat, _which) in [(&dxt, 0u8), (&dst, 1u8)] {
            // Λ + αM ⪰ 0 ⟺ I + α Λ^{-1/2} M Λ^{-1/2} ⪰ 0.
            let mut scaled = vec![0.0; sdim * sdim];
            for i in 0..sdim {
                for j in 0..sdim {
                    scaled[i * sdim + j] =
                        mat.at(i, j) / (ntb.lam[i].sqrt() * ntb.lam[j].sqrt());
                }
            }
            if let Some(eigs) = linalg::sym_eigvals(sdim, &scaled) {
                if let Some(&min_eig) = eigs.first() {
                    if min_eig < 0.0 {
                        alpha = alpha.min(-1.0 / min_eig);
                    }
                }
            }
        }
        dir.dxt.push(dxt);
        dir.dst.push(dst);
    }
    alpha
}

fn assignment_unscaled(canon: &Canon, x_f: &[f64], x_c: &[f64], inv_tau: f64) -> Assignment {
    let free: Vec<f64> = (0..canon.nf)
        .map(|j| canon.col_scale_free[j] * x_f[j] * inv_tau)
        .collect();
    let nonneg: Vec<f64> = (0..canon.nn)
        .map(|j| canon.col_scale_cone[j] * x_c[j] * inv_tau)
        .collect();
    let mut psd = Vec::with_capacity(canon.blocks.len());
    for (bi, &sdim) in canon.blocks.iter().enumerate() {
        let off = canon.block_off[bi];
        let mut m = SymMatrix::zeros(sdim);
        for j in 0..sdim {
            for i in 0..=j {
                let raw = x_c[off + svec_index(i, j)] * canon.col_scale_cone[off] * inv_tau;
                let val = if i == j { raw } else { raw / SQRT2 };
                m.set(i, j, val);
            }
        }
        psd.push(m);
    }
    Assignment { free, nonneg, psd }
}

fn slack_unscaled(canon: &Canon, s_c: &[f64], inv_tau: f64) -> Assignment {
    let nonneg: Vec<f64> = (0..canon.nn)
        .map(|j| s_c[j] / canon.col_scale_cone[j] * inv_tau)
        .collect();
    let mut psd = Vec::with_capacity(canon.blocks.len());
    for (bi, &sdim) in canon.blocks.iter().enumerate() {
        let off = canon.block_off[bi];
        let mut m = SymMatrix::zeros(sdim);
        for j in 0..sdim {
            for i in 0..=j {
                let raw = s_c[off + svec_index(i, j)] / canon.col_scale_cone[off] * inv_tau;
                let val = if i == j { raw } else { raw / SQRT2 };
                m.set(i, j, val);
            }
        }
        psd.push(m);
    }
    Assignment { free: Vec::new(), nonneg, psd }
}

#[allow(clippy::too_many_arguments)]
fn extract_optimal(
    canon: &Canon,
    st: &State,
    pobj: f64,
    dobj: f64,
    pres: f64,
    dres: f64,
    gap: f64,
    iterations: usize,
) -> Solution {
    let inv_tau = 1.0 / st.tau;
    let mut primal = assignment_unscaled(canon, &st.x_f, &st.x_c, inv_tau);
    let mut final_pres = pres;
    let mut final_gap = gap;
    let mut final_pobj = pobj;

    // Polish: project the primal point onto the affine constraints and keep
    // the result when it tightens the primal residual without leaving the
    // cone (numerically).
    if let Some((polished, new_pres, new_pobj)) = polish(canon, st) {
        if new_pres < final_pres {
            final_pres = new_pres;
            final_pobj = new_pobj;
            final_gap = (new_pobj - dobj).abs() / (1.0 + new_pobj.abs() + dobj.abs());
            primal = polished;
        }
    }

    Solution {
        status: Status::Optimal,
        primal_value: final_pobj,
        dual_value: dobj,
        primal,
        dual_y: (0..canon.m)
            .map(|i| canon.row_scale[i] * st.y[i] * inv_tau)
            .collect(),
        dual_slack: slack_unscaled(canon, &st.s_c, inv_tau),
        residuals: Residuals { primal: final_pres, dual: dres, gap: final_gap },
        certificate: None,
        iterations,
    }
}

/// Factors the unweighted augmented normal system [A_cA_cᵀ, A_f; A_fᵀ, 0]
/// shared by both restoration paths. Unlike the iteration's NT-scaled
/// system it carries no barrier information, so its conditioning does not
/// degrade as μ collapses.
fn augmented_normal_factor(canon: &Canon) -> Option<(LdlFactor, Mat)> {
    let m = canon.m;
    let nf = canon.nf;
    let dim = m + nf;
    let mut k0 = Mat::zeros(dim, dim);
    for k in 0..m {
        for l in k..m {
            let mut acc = 0.0;
            let (rk, rl) = (&canon.rows_cone[k], &canon.rows_cone[l]);
            let mut ik = 0;
            let mut il = 0;
            while ik < rk.len() && il < rl.len() {
                match rk[ik].0.cmp(&rl[il].0) {
                    std::cmp::Ordering::Less => ik += 1,
                    std::cmp::Ordering::Greater => il += 1,
                    std::cmp::Ordering::Equal => {
                        acc += rk[ik].1 * rl[il].1;
                        ik += 1;
                        il += 1;
                    }
                }
            }
            k0.set(k, l, acc);
            k0.set(l, k, acc);
        }
    }
    for i in 0..m {
        for j in 0..nf {
            k0.set(i, m + j, canon.a_free.at(i, j));
            k0.set(m + j, i, canon.a_free.at(i, j));
        }
    }
    let mut k_reg = k0.clone();
    for i in 0..m {
        k_reg.set(i, i, k_reg.at(i, i) + REG);
    }
    for j in 0..nf {
        k_reg.set(m + j, m + j, k_reg.at(m + j, m + j) - REG);
    }
    let mut diag_max = 0.0f64;
    for i in 0..dim {
        diag_max = diag_max.max(k_reg.at(i, i).abs());
    }
    let factor = linalg::ldl_factor_dynamic(dim, &k_reg.a, m, 1e-13 * (1.0 + diag_max))?;
    Some((factor, k0))
}

/// Projects one PSD block of a cone vector onto the cone by truncating
/// negative eigenvalues. Restoration folds and corrections can leave a
/// block marginally indefinite; projecting instead of rejecting keeps the
/// candidate alive, and the caller re-measures its residual against the
/// projected point, so violations of any size remain visible. Returns None
/// only if the eigendecomposition itself fails.
fn project_block_to_cone(canon: &Canon, bi: usize, v: &mut [f64]) -> Option<()> {
    let sdim = canon.blocks[bi];
    let off = canon.block_off[bi];
    let mat = mat_from_svec(sdim, &v[off..off + tri(sdim)]);
    let (eigs, vecs) = linalg::sym_eig(sdim, &mat.a)?;
    if eigs.first().is_none_or(|&e| e >= 0.0) {
        return Some(());
    }
    let mut proj = Mat::zeros(sdim, sdim);
    for k in 0..sdim {
        let lam = eigs[k].max(0.0);
        if lam == 0.0 {
            continue;
        }
        for i in 0..sdim {
            for j in 0..sdim {
                proj.set(i, j, proj.at(i, j) + lam * vecs.at(i, k) * vecs.at(j, k));
            }
        }
    }
    svec_from_mat(&proj, &mut v[off..off + tri(sdim)]);
    Some(())
}

/// Least-norm correction onto {x : Ax = b}, tried in two metrics. The NT
/// metric (K [z; w] = [b − Ax̄; 0], Δx_c = W²A_cᵀz, Δx_f = w) shrinks the
/// step along directions where x̄ is close to the cone boundary, so its
/// iterates stay conic — but once μ has collapsed the contaminated
/// factorization puts a floor under its progress. Plain least-norm rounds
/// through a fresh unweighted factor then continue from the best point;
/// those corrections are not cone-aware and stand or fall with the
/// membership checks at selection. Returns the unscaled assignment, its
/// unscaled primal residual, and its objective, or None when every
/// candidate leaves the cone.
fn restore_primal(
    canon: &Canon,
    scaling: &NtScaling,
    ws: &Workspace,
    st: &State,
) -> Option<(Assignment, f64, f64)> {
    let m = canon.m;
    let inv_tau = 1.0 / st.tau;

    let measure = |xc: &[f64], xf: &[f64]| -> (f64, Vec<f64>) {
        let mut r = canon.a_cone_times(xc);
        let af = canon.a_free.matvec(xf);
        let mut resid = 0.0f64;
        for i in 0..m {
            r[i] = canon.b[i] - r[i] - af[i];
            resid = resid.max((r[i] / canon.row_scale[i]).abs());
        }
        (resid, r)
    };

    let mut x_new_c: Vec<f64> = st.x_c.iter().map(|v| v * inv_tau).collect();
    let mut x_new_f: Vec<f64> = st.x_f.iter().map(|v| v * inv_tau).collect();
    let mut candidates: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for _round in 0..4 {
        let (resid, mut rhs) = measure(&x_new_c, &x_new_f);
        candidates.push((resid, x_new_c.clone(), x_new_f.clone()));
        rhs.resize(m + canon.nf, 0.0);
        let sol = solve_refined(&ws.factor, &ws.k0, &rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            break;
        }
        let corr_c = scaling.wsq_dense(canon, &canon.a_cone_t_times(&sol[..m]));
        for (x, d) in x_new_c.iter_mut().zip(&corr_c) {
            *x += d;
        }
        for (x, d) in x_new_f.iter_mut().zip(&sol[m..]) {
            *x += d;
        }
    }
    {
        let (resid, _) = measure(&x_new_c, &x_new_f);
        candidates.push((resid, x_new_c.clone(), x_new_f.clone()));
    }

    if let Some((_, bc, bf)) = candidates.iter().min_by(|a, b| a.0.total_cmp(&b.0)) {
        x_new_c = bc.clone();
        x_new_f = bf.clone();
    }
    if let Some((factor, k0)) = augmented_normal_factor(canon) {
        for _round in 0..4 {
            let (resid, mut rhs) = measure(&x_new_c, &x_new_f);
            candidates.push((resid, x_new_c.clone(), x_new_f.clone()));
            rhs.resize(m + canon.nf, 0.0);
            let sol = solve_refined(&factor, &k0, &rhs);
            if sol.iter().any(|v| !v.is_finite()) {
                break;
            }
            let corr_c = canon.a_cone_t_times(&sol[..m]);
            for (x, d) in x_new_c.iter_mut().zip(&corr_c) {
                *x += d;
            }
            for (x, d) in x_new_f.iter_mut().zip(&sol[m..]) {
                *x += d;
            }
        }
        let (resid, _) = measure(&x_new_c, &x_new_f);
        candidates.push((resid, x_new_c, x_new_f));
    }

    // Best-residual candidate that stays (numerically) in the cone wins.
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (xc, xf) = candidates.into_iter().find_map(|(_, mut xc, xf)| {
        // Same projection rule as the dual restore: the returned residual
        // is measured against the projected point.
        for i in 0..canon.nn {
            if xc[i] < 0.0 {
                xc[i] = 0.0;
            }
        }
        for bi in 0..canon.blocks.len() {
            project_block_to_cone(canon, bi, &mut xc)?;
        }
        Some((xc, xf))
    })?;

    let mut new_ax = canon.a_cone_times(&xc);
    let af = canon.a_free.matvec(&xf);
    let b_norm = {
        let mut mx = 0.0f64;
        for i in 0..m {
            mx = mx.max((canon.b[i] / canon.row_scale[i]).abs());
        }
        mx
    };
    let mut new_pres = 0.0f64;
    for i in 0..m {
        new_ax[i] += af[i];
        new_pres = new_pres.max(((new_ax[i] - canon.b[i]) / canon.row_scale[i]).abs());
    }
    new_pres /= 1.0 + b_norm;
    let new_pobj = linalg::dot(&canon.c_cone, &xc) + linalg::dot(&canon.c_free, &xf);
    let assignment = assignment_unscaled(canon, &xf, &xc, 1.0);
    Some((assignment, new_pres, new_pobj))
}

/// Mirror of `restore_primal` for a pinned dual residual. Works at τ = 1
/// normalization throughout: least-squares corrects y against a fresh
/// unweighted system (the iteration's scaled one is too contaminated by the
/// collapsed barrier to make progress), folds the remaining cone-row
/// residual into the slack, and returns (y, s, measured dual residual, dual
/// objective) — or None when the folded slack leaves the cone.
fn restore_dual(canon: &Canon, st: &State) -> Option<(Vec<f64>, Vec<f64>, f64, f64)> {
    let m = canon.m;
    let nf = canon.nf;
    let inv_tau = 1.0 / st.tau;
    let s_bar: Vec<f64> = st.s_c.iter().map(|v| v * inv_tau).collect();
    let mut y_bar: Vec<f64> = st.y.iter().map(|v| v * inv_tau).collect();

    // Augmented normal equations for min ‖r_dc − A_cᵀ Δy‖ subject to
    // A_fᵀ Δy = r_df.
    let (factor, k0) = augmented_normal_factor(canon)?;

    let mut c_norm = 0.0f64;
    for j in 0..canon.cone_dim {
        c_norm = c_norm.max((canon.c_cone[j] / canon.col_scale_cone[j]).abs());
    }
    for j in 0..nf {
        c_norm = c_norm.max((canon.c_free[j] / canon.col_scale_free[j]).abs());
    }

    // Dual residual of the candidate y against the *unfolded* slack; this is
    // what the least-squares rounds drive down, and it bounds both the final
    // free-row residual and the size of the fold into s.
    let unfolded_dres = |y: &[f64]| -> (f64, Vec<f64>, Vec<f64>) {
        let aty = canon.a_cone_t_times(y);
        let r_dc: Vec<f64> =
            (0..canon.cone_dim).map(|j| canon.c_cone[j] - aty[j] - s_bar[j]).collect();
        let atyf = canon.a_free.matvec_t(y);
        let mut mx = 0.0f64;
        for j in 0..canon.cone_dim {
            mx = mx.max((r_dc[j] / canon.col_scale_cone[j]).abs());
        }
        let mut r_df = vec![0.0; nf];
        for j in 0..nf {
            r_df[j] = canon.c_free[j] - atyf[j];
            mx = mx.max((r_df[j] / canon.col_scale_free[j]).abs());
        }
        (mx / (1.0 + c_norm), r_dc, r_df)
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for _round in 0..4 {
        let (resid, r_dc, r_df) = unfolded_dres(&y_bar);
        if best.as_ref().is_none_or(|(b, _)| resid < *b) {
            best = Some((resid, y_bar.clone()));
        }
        let mut rhs = canon.a_cone_times(&r_dc);
        rhs.extend_from_slice(&r_df);
        let sol = solve_refined(&factor, &k0, &rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            break;
        }
        for (y, d) in y_bar.iter_mut().zip(&sol[..m]) {
            *y += d;
        }
    }
    {
        let (resid, _, _) = unfolded_dres(&y_bar);
        if let Some((b, by)) = best {
            if b < resid {
                y_bar = by;
            }
        }
    }

    // Fold the cone-row residual into the slack and require the result to
    // stay (numerically) in the cone.
    let aty = canon.a_cone_t_times(&y_bar);
    let mut s_new: Vec<f64> =
        (0..canon.cone_dim).map(|j| canon.c_cone[j] - aty[j]).collect();
    // Negative orthant coordinates are clipped to the cone rather than
    // rejected: the residual below is measured against the clipped slack,
    // so a large violation simply fails the acceptance test.
    for i in 0..canon.nn {
        if s_new[i] < 0.0 {
            s_new[i] = 0.0;
        }
    }
    for bi in 0..canon.blocks.len() {
        project_block_to_cone(canon, bi, &mut s_new)?;
    }

    let atyf = canon.a_free.matvec_t(&y_bar);
    let mut new_dres = 0.0f64;
    for j in 0..canon.cone_dim {
        new_dres = new_dres
            .max(((aty[j] + s_new[j] - canon.c_cone[j]) / canon.col_scale_cone[j]).abs());
    }
    for j in 0..nf {
        new_dres =
            new_dres.max(((atyf[j] - canon.c_free[j]) / canon.col_scale_free[j]).abs());
    }
    new_dres /= 1.0 + c_norm;
    let new_dobj = linalg::dot(&canon.b, &y_bar);
    Some((y_bar, s_new, new_dres, new_dobj))
}

/// Least-squares correction onto {x : Ax = bτ}/τ in scaled coordinates.
/// Returns the unscaled assignment, its unscaled primal residual, and its
/// objective value, or None when the correction is unusable.
fn polish(canon: &Canon, st: &State) -> Option<(Assignment, f64, f64)> {
    let m = canon.m;
    let inv_tau = 1.0 / st.tau;
    let xbar_c: Vec<f64> = st.x_c.iter().map(|v| v * inv_tau).collect();
    let xbar_f: Vec<f64> = st.x_f.iter().map(|v| v * inv_tau).collect();

    // AAᵀ over both variable groups.
    let mut aat = Mat::zeros(m, m);
    for k in 0..m {
        for l in k..m {
            let mut acc = 0.0;
            let (rk, rl) = (&canon.rows_cone[k], &canon.rows_cone[l]);
            let mut ik = 0;
            let mut il = 0;
            while ik < rk.len() && il < rl.len() {
                match rk[ik].0.cmp(&rl[il].0) {
                    std::cmp::Ordering::Less => ik += 1,
                    std::cmp::Ordering::Greater => il += 1,
                    std::cmp::Ordering::Equal => {
                        acc += rk[ik].1 * rl[il].1;
                        ik += 1;
                        il += 1;
                    }
                }
            }
            for j in 0..canon.nf {
                acc += canon.a_free.at(k, j) * canon.a_free.at(l, j);
            }
            aat.set(k, l, acc);
            aat.set(l, k, acc);
        }
    }
    let mut scale = 0.0f64;
    for i in 0..m {
        scale = scale.max(aat.at(i, i));
    }
    for i in 0..m {
        aat.set(i, i, aat.at(i, i) + REG * (1.0 + scale));
    }
    let factor = linalg::ldl_factor(m, &aat.a)?;

    let mut resid = canon.a_cone_times(&xbar_c);
    let af = canon.a_free.matvec(&xbar_f);
    for i in 0..m {
        resid[i] = canon.b[i] - resid[i] - af[i];
    }
    let z = factor.solve(&resid);
    let corr_c = canon.a_cone_t_times(&z);
    let corr_f = canon.a_free.matvec_t(&z);
    let x_new_c: Vec<f64> = xbar_c.iter().zip(&corr_c).map(|(a, b)| a + b).collect();
    let x_new_f: Vec<f64> = xbar_f.iter().zip(&corr_f).map(|(a, b)| a + b).collect();

    // Cone sanity: tolerate only round-off-level violations.
    for i in 0..canon.nn {
        if x_new_c[i] < -1e-9 {
            return None;
        }
    }
    for (bi, &sdim) in canon.blocks.iter().enumerate() {
        let mat = mat_from_svec(sdim, canon.block_segment(&x_new_c, bi));
        let eigs = linalg::sym_eigvals(sdim, &mat.a)?;
        if let Some(&min_eig) = eigs.first() {
            let norm = eigs.last().map(|v| v.abs()).unwrap_or(1.0).max(1.0);
            if min_eig < -1e-9 * norm {
                return None;
            }
        }
    }

    let mut new_ax = canon.a_cone_times(&x_new_c);
    let af = canon.a_free.matvec(&x_new_f);
    let mut new_pres = 0.0f64;
    let b_norm = {
        let mut mx = 0.0f64;
        for i in 0..m {
            mx = mx.max((canon.b[i] / canon.row_scale[i]).abs());
        }
        mx
    };
    for i in 0..m {
        new_ax[i] += af[i];
        new_pres = new_pres.max(((new_ax[i] - canon.b[i]) / canon.row_scale[i]).abs());
    }
    new_pres /= 1.0 + b_norm;
    let new_pobj =
        linalg::dot(&canon.c_cone, &x_new_c) + linalg::dot(&canon.c_free, &x_new_f);
    let assignment = assignment_unscaled(canon, &x_new_f, &x_new_c, 1.0);
    Some((assignment, new_pres, new_pobj))
}

fn extract_primal_infeasible(
    canon: &Canon,
    st: &State,
    inv: f64,
    residual: f64,
    iterations: usize,
) -> Solution {
    let y: Vec<f64> = (0..canon.m)
        .map(|i| canon.row_scale[i] * st.y[i] * inv)
        .collect();
    let slack = slack_unscaled(canon, &st.s_c, inv);
    Solution {
        status: Status::PrimalInfeasible,
        primal_value: f64::NAN,
        dual_value: f64::NAN,
        primal: Assignment {
            free: vec![0.0; canon.nf],
            nonneg: vec![0.0; canon.nn],
            psd: canon.blocks.iter().map(|&s| SymMatrix::zeros(s)).collect(),
        },
        dual_y: y.clone(),
        dual_slack: slack,
        residuals: Residuals { primal: f64::NAN, dual: f64::NAN, gap: f64::NAN },
        certificate: Some(Certificate::PrimalInfeasible { y, residual }),
        iterations,
    }
}

fn extract_dual_infeasible(
    canon: &Canon,
    st: &State,
    inv: f64,
    residual: f64,
    iterations: usize,
) -> Solution {
    let ray = assignment_unscaled(canon, &st.x_f, &st.x_c, inv);
    Solution {
        status: Status::DualInfeasible,
        primal_value: f64::NAN,
        dual_value: f64::NAN,
        primal: ray.clone(),
        dual_y: vec![0.0; canon.m],
        dual_slack: Assignment {
            free: Vec::new(),
            nonneg: vec![0.0; canon.nn],
            psd: canon.blocks.iter().map(|&s| SymMatrix::zeros(s)).collect(),
        },
        residuals: Residuals { primal: f64::NAN, dual: f64::NAN, gap: f64::NAN },
        certificate: Some(Certificate::DualInfeasible { x: ray, residual }),
        iterations,
    }
}
