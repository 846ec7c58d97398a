//! Self-contained primal-dual interior-point solver for semidefinite
//! programs over Hermitian block variables.
//!
//! Problems are stated in standard primal form
//!
//! ```text
//! minimize    sum_blocks <C, X>
//! subject to  sum_blocks <A_i, X> = b_i     (i = 1..m)
//!             X >= 0 blockwise,
//! ```
//!
//! with `<.,.>` the real trace inner product `Re Tr[A† X]`. Maximization
//! problems are handled by negating the objective at the call site.
//!
//! Complex Hermitian blocks are mapped to real symmetric blocks of twice the
//! side length via the embedding `H = P + iQ  ->  [[P, -Q], [Q, P]] / 2`;
//! the halving compensates the doubled trace so objective values, right-hand
//! sides and dual multipliers all carry over unchanged. The real core runs a
//! path-following method with the HKM search direction and Mehrotra
//! predictor-corrector, a fraction-to-boundary step rule (factor 0.98), and
//! an eigendecomposition-based solve of the Schur complement system that
//! drops near-null directions for stability. Everything is deterministic:
//! fixed iteration order, no randomized pivoting.

use std::io::Write as IoWrite;

use num_complex::Complex64 as C64;

use crate::linalg::{ComplexMatrix, HermitianOperator, SubsystemDims};

/// Default convergence tolerance used by the higher-level modules; chosen so
/// duality gaps land comfortably below 1e-7.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Iteration cap before the solver gives up with `NumericalFailure`.
pub const MAX_ITER: usize = 200;

const FRACTION_TO_BOUNDARY: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// One nonzero of a Hermitian constraint matrix, upper triangle only
/// (`row <= col`); the mirrored entry is implied by Hermiticity, so a
/// constraint built from entries is Hermitian by construction.
#[derive(Debug, Clone)]
pub struct SparseEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: C64,
}

impl SparseEntry {
    pub fn new(block: usize, row: usize, col: usize, value: C64) -> Self {
        Self { block, row, col, value }
    }

    pub fn real(block: usize, row: usize, col: usize, value: f64) -> Self {
        Self::new(block, row, col, C64::new(value, 0.0))
    }
}

/// Standard-form SDP over Hermitian blocks.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    sides: Vec<usize>,
    objective: Vec<ComplexMatrix>,
    constraints: Vec<(Vec<SparseEntry>, f64)>,
}

impl SdpProblem {
    pub fn new(block_sides: Vec<usize>) -> Self {
        assert!(!block_sides.is_empty(), "at least one block required");
        assert!(block_sides.iter().all(|&n| n >= 1));
        let objective = block_sides.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
        Self { sides: block_sides, objective, constraints: Vec::new() }
    }

    pub fn block_sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_objective(&mut self, block: usize, c: &HermitianOperator) {
        self.set_objective_matrix(block, c.mat().clone());
    }

    pub fn set_objective_matrix(&mut self, block: usize, c: ComplexMatrix) {
        assert!(block < self.sides.len(), "objective block out of range");
        assert_eq!(c.rows(), self.sides[block], "objective side mismatch");
        assert!(
            c.hermiticity_deviation() <= 1e-9,
            "objective block must be Hermitian"
        );
        self.objective[block] = c.hermitian_part();
    }

    pub fn objective(&self, block: usize) -> &ComplexMatrix {
        &self.objective[block]
    }

    /// Adds the equality constraint `sum_blocks <A, X> = rhs` from upper
    /// triangle nonzeros of the per-block matrices A.
    pub fn add_constraint_entries(&mut self, entries: Vec<SparseEntry>, rhs: f64) {
        for e in &entries {
            assert!(e.block < self.sides.len(), "constraint block out of range");
            let n = self.sides[e.block];
            assert!(e.row < n && e.col < n, "constraint index out of range");
            assert!(e.row <= e.col, "entries must be upper triangle (row <= col)");
            if e.row == e.col {
                assert!(e.value.im.abs() < 1e-12, "diagonal entries must be real");
            }
        }
        self.constraints.push((entries, rhs));
    }

    /// Dense convenience form of [`add_constraint_entries`]
    /// (Self::add_constraint_entries): drops entries below 1e-14.
    pub fn add_constraint_dense(&mut self, mats: &[(usize, &ComplexMatrix)], rhs: f64) {
        let mut entries = Vec::new();
        for &(block, m) in mats {
            assert_eq!(m.rows(), self.sides[block], "constraint side mismatch");
            assert!(m.hermiticity_deviation() <= 1e-9, "constraint matrix must be Hermitian");
            for r in 0..m.rows() {
                for c in r..m.cols() {
                    let v = if r == c {
                        C64::new(m.get(r, c).re, 0.0)
                    } else {
                        (m.get(r, c) + m.get(c, r).conj()) * 0.5
                    };
                    if v.norm() > 1e-14 {
                        entries.push(SparseEntry::new(block, r, c, v));
                    }
                }
            }
        }
        self.add_constraint_entries(entries, rhs);
    }

    pub fn constraint(&self, i: usize) -> (&[SparseEntry], f64) {
        let (e, b) = &self.constraints[i];
        (e, *b)
    }
}

/// Primal/dual certificate pair returned by [`solve`].
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub x: Vec<HermitianOperator>,
    pub y: Vec<f64>,
    pub s: Vec<HermitianOperator>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// Upper-triangle nonzeros of the real symmetric embedding of one complex
/// Hermitian entry at (r, c), r <= c, already halved.
fn embed_entry(n: usize, r: usize, c: usize, v: C64) -> Vec<(usize, usize, f64)> {
    let x = v.re * 0.5;
    let y = v.im * 0.5;
    let mut out = Vec::with_capacity(4);
    if x.abs() > 0.0 {
        out.push((r, c, x));
        out.push((n + r, n + c, x));
    }
    if y.abs() > 0.0 {
        // top-right block is -Q with Q[r][c] = y, Q[c][r] = -y
        out.push((r, n + c, -y));
        out.push((c, n + r, y));
    }
    out
}

/// Real symmetric embedding of a dense Hermitian matrix, halved.
fn embed_dense(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    ComplexMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (br, ir) = (r / n, r % n);
        let (bc, ic) = (c / n, c % n);
        let z = m.get(ir, ic);
        let v = match (br, bc) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        };
        C64::new(v * 0.5, 0.0)
    })
}

/// Maps every complex Hermitian block to a real symmetric block of twice the
/// side. Objective and constraint matrices are embedded and halved so the
/// optimum, right-hand sides and dual vector of the embedded problem equal
/// those of the original.
pub fn complex_embed(p: &SdpProblem) -> SdpProblem {
    let mut out = SdpProblem::new(p.sides.iter().map(|&n| 2 * n).collect());
    for (k, c) in p.objective.iter().enumerate() {
        out.set_objective_matrix(k, embed_dense(c));
    }
    for (entries, rhs) in &p.constraints {
        let mut emb = Vec::new();
        for e in entries {
            let n = p.sides[e.block];
            for (r, c, v) in embed_entry(n, e.row, e.col, e.value) {
                let (r, c) = if r <= c { (r, c) } else { (c, r) };
                emb.push(SparseEntry::real(e.block, r, c, v));
            }
        }
        out.add_constraint_entries(emb, *rhs);
    }
    out
}

/// Writes the problem (after real embedding) in SDPA sparse ".dat-s" layout
/// for cross-checking against external solvers: `m`, block count, block
/// sizes, right-hand sides, then one `k blk i j v` line per upper-triangle
/// nonzero with `k = 0` for the objective.
pub fn write_sdpa(p: &SdpProblem, path: &std::path::Path) -> std::io::Result<()> {
    let emb = complex_embed(p);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", emb.num_constraints())?;
    writeln!(f, "{}", emb.sides.len())?;
    let sides: Vec<String> = emb.sides.iter().map(|n| n.to_string()).collect();
    writeln!(f, "{}", sides.join(" "))?;
    let rhs: Vec<String> = emb.constraints.iter().map(|(_, b)| format!("{:.16e}", b)).collect();
    writeln!(f, "{}", rhs.join(" "))?;
    for (blk, c) in emb.objective.iter().enumerate() {
        for r in 0..c.rows() {
            for col in r..c.cols() {
                let v = c.get(r, col).re;
                if v.abs() > 1e-14 {
                    writeln!(f, "0 {} {} {} {:.16e}", blk + 1, r + 1, col + 1, v)?;
                }
            }
        }
    }
    for (k, (entries, _)) in emb.constraints.iter().enumerate() {
        for e in entries {
            writeln!(
                f,
                "{} {} {} {} {:.16e}",
                k + 1,
                e.block + 1,
                e.row + 1,
                e.col + 1,
                e.value.re
            )?;
        }
    }
    f.flush()
}

// ---------------------------------------------------------------------------
// Real symmetric core
// ---------------------------------------------------------------------------

/// Dense real square matrix, row-major.
#[derive(Debug, Clone)]
struct RMat {
    n: usize,
    a: Vec<f64>,
}

impl RMat {
    fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    fn identity_scaled(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = s;
        }
        m
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.n + c]
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.n + c] = v;
    }

    fn add_scaled(&mut self, other: &RMat, s: f64) {
        for (a, b) in self.a.iter_mut().zip(&other.a) {
            *a += s * b;
        }
    }

    fn scale(&mut self, s: f64) {
        for a in self.a.iter_mut() {
            *a *= s;
        }
    }

    fn matmul(&self, other: &RMat) -> RMat {
        let n = self.n;
        let mut out = RMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let v = self.a[i * n + k];
                if v == 0.0 {
                    continue;
                }
                let (ro, oo) = (i * n, k * n);
                for j in 0..n {
                    out.a[ro + j] += v * other.a[oo + j];
                }
            }
        }
        out
    }

    /// Entrywise dot; equals Tr[A B] when both are symmetric.
    fn dot(&self, other: &RMat) -> f64 {
        self.a.iter().zip(&other.a).map(|(a, b)| a * b).sum()
    }

    fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i * self.n + i]).sum()
    }

    fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for r in 0..n {
            for c in (r + 1)..n {
                let v = 0.5 * (self.a[r * n + c] + self.a[c * n + r]);
                self.a[r * n + c] = v;
                self.a[c * n + r] = v;
            }
        }
    }

    /// Cholesky factor L (lower) with A = L Lᵀ, or None if not positive
    /// definite.
    fn chol(&self) -> Option<RMat> {
        let n = self.n;
        let mut l = RMat::zeros(n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let dj = d.sqrt();
            l.set(j, j, dj);
            for i in (j + 1)..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, v / dj);
            }
        }
        Some(l)
    }

    /// Inverse from a Cholesky factor: A⁻¹ = L⁻ᵀ L⁻¹.
    fn inverse_from_chol(l: &RMat) -> RMat {
        let n = l.n;
        // Forward-substitute L Z = I  ->  Z = L⁻¹ (lower triangular).
        let mut z = RMat::zeros(n);
        for col in 0..n {
            for i in col..n {
                let mut v = if i == col { 1.0 } else { 0.0 };
                for k in col..i {
                    v -= l.get(i, k) * z.get(k, col);
                }
                z.set(i, col, v / l.get(i, i));
            }
        }
        // A⁻¹ = Zᵀ Z, symmetric.
        let mut inv = RMat::zeros(n);
        for r in 0..n {
            for c in r..n {
                let mut v = 0.0;
                for k in r.max(c)..n {
                    v += z.get(k, r) * z.get(k, c);
                }
                inv.set(r, c, v);
                inv.set(c, r, v);
            }
        }
        inv
    }
}

/// Solver for the symmetric Schur system (positive definite in exact
/// arithmetic, but often severely ill-conditioned near the optimum).
///
/// The matrix is equilibrated by its diagonal, diagonalized with cyclic
/// Jacobi rotations, and eigenvalues below a relative floor are dropped.
/// Near-dependent directions then produce a least-squares solution instead
/// of an explosively wrong one, which keeps late interior-point steps sane.
struct SchurSolver {
    n: usize,
    d: Vec<f64>,
    q: Vec<f64>,
    lam: Vec<f64>,
}

impl SchurSolver {
    fn new(n: usize, b: &[f64]) -> SchurSolver {
        let mut d = vec![1.0f64; n];
        for i in 0..n {
            let v = b[i * n + i].abs();
            if v > 1e-300 && v.is_finite() {
                d[i] = 1.0 / v.sqrt();
            }
        }
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = d[i] * b[i * n + j] * d[j];
            }
        }
        let (q, lam) = jacobi_symmetric(n, a);
        SchurSolver { n, d, q, lam }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let lmax = self
            .lam
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
            .max(1e-300);
        let floor = 1e-14 * lmax;
        // w = Qᵀ D rhs, truncated pseudo-inverse in the eigenbasis, back out.
        let mut w = vec![0.0f64; n];
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += self.q[i * n + k] * self.d[i] * rhs[i];
            }
            w[k] = if self.lam[k].abs() <= floor {
                0.0
            } else {
                acc / self.lam[k]
            };
        }
        let mut x = vec![0.0f64; n];
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.q[i * n + k] * w[k];
            }
            x[i] = self.d[i] * acc;
        }
        x
    }

    /// Solve plus one round of iterative refinement against the original
    /// matrix; refinement is skipped along the truncated directions
    /// automatically because `solve` projects them out.
    fn solve_refined(&self, b_orig: &[f64], rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = self.solve(rhs);
        for _ in 0..2 {
            let mut r = rhs.to_vec();
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += b_orig[i * n + j] * x[j];
                }
                r[i] -= acc;
            }
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        x
    }
}

/// Cyclic Jacobi diagonalization of a dense symmetric matrix. Returns the
/// orthogonal eigenvector matrix (column k is the k-th eigenvector) and the
/// eigenvalues, unsorted.
fn jacobi_symmetric(n: usize, mut a: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut q = vec![0.0f64; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(0.0f64, |acc, (i, j)| acc.max(a[i * n + j].abs()))
        .max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[i * n + j].abs());
            }
        }
        if off <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = a[p * n + r];
                if apr.abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = 0.5 * (2.0 * apr).atan2(a[p * n + p] - a[r * n + r]);
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akr = a[k * n + r];
                    a[k * n + p] = c * akp + s * akr;
                    a[k * n + r] = c * akr - s * akp;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let ark = a[r * n + k];
                    a[p * n + k] = c * apk + s * ark;
                    a[r * n + k] = c * ark - s * apk;
                }
                for k in 0..n {
                    let qkp = q[k * n + p];
                    let qkr = q[k * n + r];
                    q[k * n + p] = c * qkp + s * qkr;
                    q[k * n + r] = c * qkr - s * qkp;
                }
            }
        }
    }
    let lam = (0..n).map(|i| a[i * n + i]).collect();
    (q, lam)
}

/// One constraint's nonzeros within one block: full (mirrored) entry list
/// plus the sorted set of rows it touches.
#[derive(Debug, Clone, Default)]
struct BlockEntries {
    entries: Vec<(usize, usize, f64)>,
    rows: Vec<usize>,
}

struct RealProblem {
    sides: Vec<usize>,
    c: Vec<RMat>,
    cons: Vec<Vec<BlockEntries>>,
    b: Vec<f64>,
    /// Per block, the constraint indices with support there.
    blk_cons: Vec<Vec<usize>>,
}

fn build_real(p: &SdpProblem) -> RealProblem {
    let emb = complex_embed(p);
    let nb = emb.sides.len();
    let c: Vec<RMat> = emb
        .objective
        .iter()
        .map(|m| {
            let n = m.rows();
            let mut r = RMat::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    r.set(i, j, m.get(i, j).re);
                }
            }
            r.symmetrize();
            r
        })
        .collect();
    let mut cons = Vec::with_capacity(emb.constraints.len());
    let mut b = Vec::with_capacity(emb.constraints.len());
    let mut blk_cons = vec![Vec::new(); nb];
    for (ci, (entries, rhs)) in emb.constraints.iter().enumerate() {
        let mut per: Vec<BlockEntries> = (0..nb).map(|_| BlockEntries::default()).collect();
        for e in entries {
            let v = e.value.re;
            per[e.block].entries.push((e.row, e.col, v));
            if e.row != e.col {
                per[e.block].entries.push((e.col, e.row, v));
            }
        }
        for (blk, be) in per.iter_mut().enumerate() {
            if be.entries.is_empty() {
                continue;
            }
            let mut rows: Vec<usize> = be.entries.iter().map(|&(r, _, _)| r).collect();
            rows.sort_unstable();
            rows.dedup();
            be.rows = rows;
            blk_cons[blk].push(ci);
        }
        cons.push(per);
        b.push(*rhs);
    }
    RealProblem { sides: emb.sides.clone(), c, cons, b, blk_cons }
}

/// Tr[A M] for a sparse symmetric A given by its full entry list.
#[inline]
fn sdot(be: &BlockEntries, m: &RMat) -> f64 {
    let n = m.n;
    be.entries.iter().map(|&(r, c, v)| v * m.a[c * n + r]).sum()
}

/// Largest step alpha in (0, 1] keeping every `base + alpha*dir` positive
/// definite, scaled by the fraction-to-boundary factor; found by Cholesky
/// bisection (the feasible alphas form an interval containing 0).
fn max_step(base: &[RMat], dir: &[RMat]) -> f64 {
    let pd_at = |alpha: f64| -> bool {
        base.iter().zip(dir).all(|(m, d)| {
            let mut t = m.clone();
            t.add_scaled(d, alpha);
            t.chol().is_some()
        })
    };
    let cap = 1.0 / FRACTION_TO_BOUNDARY + 0.01;
    if pd_at(cap) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, cap);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if pd_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (FRACTION_TO_BOUNDARY * lo).min(1.0)
}

struct CoreResult {
    status: SolveStatus,
    x: Vec<RMat>,
    y: Vec<f64>,
    s: Vec<RMat>,
    pval: f64,
    dval: f64,
    iterations: usize,
}

fn solve_real(rp: &RealProblem, tol: f64) -> CoreResult {
    let nb = rp.sides.len();
    let m = rp.b.len();
    let nu: f64 = rp.sides.iter().sum::<usize>() as f64;

    let bmax = rp.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let cmax = rp.c.iter().map(|c| c.max_abs()).fold(0.0f64, f64::max);
    let scale = 10.0 * bmax.max(cmax).max(1.0);

    let mut x: Vec<RMat> = rp.sides.iter().map(|&n| RMat::identity_scaled(n, scale)).collect();
    let mut s: Vec<RMat> = rp.sides.iter().map(|&n| RMat::identity_scaled(n, scale)).collect();
    let mut y = vec![0.0f64; m];

    let mut best: Option<(f64, Vec<RMat>, Vec<f64>, Vec<RMat>, f64, f64)> = None;
    let mut status = SolveStatus::NumericalFailure;
    let mut iterations = 0;
    // Once converged, a few pure centering steps (sigma = 1) pull the iterate
    // back toward XS = mu*I so the returned pair is complementary entrywise,
    // not just in trace.
    let mut center_rounds = 0usize;
    let mut force_center;
    // A fully converged iterate was banked in `best`; later centering steps
    // may only refine it, never downgrade the outcome.
    let mut converged_once = false;
    // When the neighborhood safeguard truncated the previous step, bias the
    // next one toward the central path so progress can resume.
    let mut recenter_bias = false;

    for iter in 0..MAX_ITER {
        iterations = iter;
        // Residuals and objective values.
        let pval: f64 = rp.c.iter().zip(&x).map(|(c, xb)| c.dot(xb)).sum();
        let dval: f64 = rp.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let mut prim_res = 0.0f64;
        for i in 0..m {
            let ax: f64 = (0..nb).map(|blk| sdot(&rp.cons[i][blk], &x[blk])).sum();
            prim_res = prim_res.max((ax - rp.b[i]).abs() / (1.0 + rp.b[i].abs()));
        }
        // R_d = C - S - sum y_i A_i
        let mut rd: Vec<RMat> = rp
            .c
            .iter()
            .zip(&s)
            .map(|(c, sb)| {
                let mut r = c.clone();
                r.add_scaled(sb, -1.0);
                r
            })
            .collect();
        for i in 0..m {
            if y[i] == 0.0 {
                continue;
            }
            for blk in 0..nb {
                let n = rp.sides[blk];
                for &(r, c, v) in &rp.cons[i][blk].entries {
                    rd[blk].a[r * n + c] -= y[i] * v;
                }
            }
        }
        let dual_res = rd
            .iter()
            .map(|r| r.max_abs())
            .fold(0.0f64, f64::max)
            / (1.0 + cmax);
        let relgap = (pval - dval).abs() / (1.0 + pval.abs() + dval.abs());
        let merit = prim_res.max(dual_res).max(relgap);

        if std::env::var_os("COMMRES_SDP_TRACE").is_some() {
            eprintln!(
                "iter {iter}: pres {prim_res:.3e} dres {dual_res:.3e} gap {relgap:.3e} pval {pval:.9}"
            );
        }
        let better = best.as_ref().map(|(bm, ..)| merit < *bm).unwrap_or(true);
        if better {
            best = Some((merit, x.clone(), y.clone(), s.clone(), pval, dval));
        }
        force_center = false;
        if prim_res <= tol && dual_res <= tol && relgap <= tol {
            let mu = x.iter().zip(&s).map(|(xb, sb)| xb.dot(sb)).sum::<f64>() / nu;
            let mut dev = 0.0f64;
            let mut xs_scale = 0.0f64;
            for (xb, sb) in x.iter().zip(&s) {
                let mut prod = xb.matmul(sb);
                for i in 0..prod.n {
                    prod.a[i * prod.n + i] -= mu;
                }
                dev = dev.max(prod.max_abs());
                xs_scale = xs_scale.max(xb.max_abs() * sb.max_abs());
            }
            // Entrywise complementarity target; the absolute floor keeps the
            // test meaningful once mu sits at rounding level.
            let target = (0.5 * mu.abs()).max(1e-8 * (1.0 + xs_scale));
            if std::env::var_os("COMMRES_SDP_TRACE").is_some() {
                eprintln!("  converged: dev {dev:.3e} target {target:.3e} mu {mu:.3e}");
            }
            if dev <= target || center_rounds >= 12 {
                status = SolveStatus::Optimal;
                best = Some((0.0, x.clone(), y.clone(), s.clone(), pval, dval));
                break;
            }
            center_rounds += 1;
            force_center = true;
            converged_once = true;
        }
        // Divergence heuristics (best effort; the library's programs are
        // feasible by construction).
        let xtr: f64 = x.iter().map(|b| b.trace()).sum();
        let ymax = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if xtr > 1e10 * scale * nu && dual_res <= 1e-4 {
            status = SolveStatus::Unbounded;
            break;
        }
        if ymax > 1e10 * (1.0 + scale) && prim_res > tol {
            status = SolveStatus::Infeasible;
            break;
        }
        if xtr > 1e12 * scale * nu || ymax > 1e12 * (1.0 + scale) {
            status = SolveStatus::NumericalFailure;
            break;
        }

        // Factor S and form per-block inverses.
        let mut s_inv = Vec::with_capacity(nb);
        let mut factored = true;
        for sb in &s {
            match sb.chol() {
                Some(l) => s_inv.push(RMat::inverse_from_chol(&l)),
                None => {
                    factored = false;
                    break;
                }
            }
        }
        if !factored {
            break;
        }

        let mu = x.iter().zip(&s).map(|(xb, sb)| xb.dot(sb)).sum::<f64>() / nu;

        // G = sym(S⁻¹ R_d X) per block, used by every right-hand side below.
        // The symmetrization matches the symmetrized search direction.
        let g: Vec<RMat> = (0..nb)
            .map(|blk| {
                let mut g = s_inv[blk].matmul(&rd[blk]).matmul(&x[blk]);
                g.symmetrize();
                g
            })
            .collect();
        let sd_g: Vec<f64> = (0..m)
            .map(|i| (0..nb).map(|blk| sdot(&rp.cons[i][blk], &g[blk])).sum())
            .collect();
        let sd_sinv: Vec<f64> = (0..m)
            .map(|i| (0..nb).map(|blk| sdot(&rp.cons[i][blk], &s_inv[blk])).sum())
            .collect();

        // Schur matrix for the symmetrized search direction:
        // B_ij = (Tr[A_i S⁻¹ A_j X] + Tr[A_j S⁻¹ A_i X]) / 2, symmetric and
        // PD for independent constraints; built column by column through the
        // sparse row support of A_j, then symmetrized.
        let mut bmat = vec![0.0f64; m * m];
        for blk in 0..nb {
            let n = rp.sides[blk];
            let idx = &rp.blk_cons[blk];
            if idx.is_empty() {
                continue;
            }
            for &j in idx {
                let ej = &rp.cons[j][blk];
                // Rows of A_j X restricted to the support of A_j.
                let mut ax: Vec<Vec<f64>> = ej.rows.iter().map(|_| vec![0.0; n]).collect();
                for &(r, c, v) in &ej.entries {
                    let pos = ej.rows.binary_search(&r).unwrap();
                    let row = &mut ax[pos];
                    let xo = c * n;
                    for q in 0..n {
                        row[q] += v * x[blk].a[xo + q];
                    }
                }
                // M_j = S⁻¹[:, rows] (A_j X)[rows, :]
                let mut mj = RMat::zeros(n);
                for (pos, &a) in ej.rows.iter().enumerate() {
                    let row = &ax[pos];
                    for p in 0..n {
                        let sp = s_inv[blk].a[p * n + a];
                        if sp == 0.0 {
                            continue;
                        }
                        let mo = p * n;
                        for q in 0..n {
                            mj.a[mo + q] += sp * row[q];
                        }
                    }
                }
                for &i in idx {
                    bmat[i * m + j] += sdot(&rp.cons[i][blk], &mj);
                }
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let v = 0.5 * (bmat[i * m + j] + bmat[j * m + i]);
                bmat[i * m + j] = v;
                bmat[j * m + i] = v;
            }
        }
        let schur = SchurSolver::new(m, &bmat);

        // Predictor (affine scaling, sigma = 0).
        let rhs_aff: Vec<f64> = (0..m).map(|i| rp.b[i] + sd_g[i]).collect();
        let dy_aff = schur.solve_refined(&bmat, &rhs_aff);
        let (dx_aff, ds_aff) = directions(rp, &s_inv, &x, &rd, &dy_aff, None, 0.0, nb);

        let ap_aff = max_step(&x, &dx_aff);
        let ad_aff = max_step(&s, &ds_aff);
        let mut mu_aff = 0.0;
        for blk in 0..nb {
            let mut xa = x[blk].clone();
            xa.add_scaled(&dx_aff[blk], ap_aff);
            let mut sa = s[blk].clone();
            sa.add_scaled(&ds_aff[blk], ad_aff);
            mu_aff += xa.dot(&sa);
        }
        mu_aff /= nu;
        let sigma = if force_center {
            1.0
        } else {
            let base = (mu_aff / mu).powi(3).clamp(1e-8, 1.0);
            if recenter_bias {
                base.max(0.3)
            } else {
                base
            }
        };

        // Corrector.
        let h2: Vec<RMat> = (0..nb)
            .map(|blk| {
                let mut h = s_inv[blk].matmul(&ds_aff[blk]).matmul(&dx_aff[blk]);
                h.symmetrize();
                h
            })
            .collect();
        let rhs_cor: Vec<f64> = (0..m)
            .map(|i| {
                let corr: f64 = (0..nb).map(|blk| sdot(&rp.cons[i][blk], &h2[blk])).sum();
                rp.b[i] + sd_g[i] - sigma * mu * sd_sinv[i] + corr
            })
            .collect();
        let dy = schur.solve_refined(&bmat, &rhs_cor);
        let (dx, ds) = directions(rp, &s_inv, &x, &rd, &dy, Some(&h2), sigma * mu, nb);

        if std::env::var_os("COMMRES_SDP_TRACE").is_some() {
            let mut nr = 0.0f64;
            for i in 0..m {
                let adx: f64 = (0..nb).map(|blk| sdot(&rp.cons[i][blk], &dx[blk])).sum();
                let ax: f64 = (0..nb).map(|blk| sdot(&rp.cons[i][blk], &x[blk])).sum();
                nr = nr.max((adx - (rp.b[i] - ax)).abs());
            }
            let mut lin = 0.0f64;
            for i in 0..m {
                let bdy: f64 = (0..m).map(|j| bmat[i * m + j] * dy[j]).sum();
                lin = lin.max((bdy - rhs_cor[i]).abs());
            }
            eprintln!("  newton residual {nr:.3e} lu residual {lin:.3e} sigma {sigma:.3e}");
        }
        let ap = max_step(&x, &dx);
        let ad = max_step(&s, &ds);
        if ap < 1e-10 && ad < 1e-10 {
            break;
        }
        // Wide-neighborhood safeguard: backtrack the joint step until
        // lambda_min(X'S') >= gamma * mu'. This keeps the Schur matrix well
        // conditioned (its condition number grows with the spread of XS).
        const GAMMA_NEIGHBORHOOD: f64 = 1e-4;
        let mut t = 1.0f64;
        loop {
            let mut xn = Vec::with_capacity(nb);
            let mut sn = Vec::with_capacity(nb);
            for blk in 0..nb {
                let mut xb = x[blk].clone();
                xb.add_scaled(&dx[blk], t * ap);
                let mut sb = s[blk].clone();
                sb.add_scaled(&ds[blk], t * ad);
                xn.push(xb);
                sn.push(sb);
            }
            let mu_new = xn.iter().zip(&sn).map(|(a, b)| a.dot(b)).sum::<f64>() / nu;
            let floor = GAMMA_NEIGHBORHOOD * mu_new;
            let centered = xn.iter().zip(&sn).all(|(xb, sb)| {
                // lambda(XS) = lambda(Lᵀ S L) for X = L Lᵀ.
                match xb.chol() {
                    Some(l) => {
                        let mut w = RMat::zeros(xb.n);
                        // w = Lᵀ S L
                        let sl = sb.matmul(&l);
                        for r in 0..xb.n {
                            for c in 0..xb.n {
                                let mut acc = 0.0;
                                for k in r..xb.n {
                                    acc += l.get(k, r) * sl.get(k, c);
                                }
                                w.set(r, c, acc);
                            }
                        }
                        for i in 0..w.n {
                            w.a[i * w.n + i] -= floor;
                        }
                        w.symmetrize();
                        w.chol().is_some()
                    }
                    None => false,
                }
            });
            if centered || t < 1e-3 {
                x = xn;
                s = sn;
                for i in 0..m {
                    y[i] += t * ad * dy[i];
                }
                recenter_bias = t < 0.99;
                break;
            }
            t *= 0.5;
        }
    }

    if converged_once && status == SolveStatus::NumericalFailure {
        status = SolveStatus::Optimal;
    }
    let (_, bx, by, bs, pval, dval) = best.expect("at least one iterate recorded");
    CoreResult { status, x: bx, y: by, s: bs, pval, dval, iterations }
}

/// HKM direction for a given dy: dS = R_d - sum dy_i A_i and
/// dX = sigma*mu*S⁻¹ - X - S⁻¹ dS X - H2, symmetrized.
fn directions(
    rp: &RealProblem,
    s_inv: &[RMat],
    x: &[RMat],
    rd: &[RMat],
    dy: &[f64],
    h2: Option<&[RMat]>,
    sigma_mu: f64,
    nb: usize,
) -> (Vec<RMat>, Vec<RMat>) {
    let m = dy.len();
    let mut ds: Vec<RMat> = rd.to_vec();
    for i in 0..m {
        if dy[i] == 0.0 {
            continue;
        }
        for blk in 0..nb {
            let n = rp.sides[blk];
            for &(r, c, v) in &rp.cons[i][blk].entries {
                ds[blk].a[r * n + c] -= dy[i] * v;
            }
        }
    }
    let mut dx = Vec::with_capacity(nb);
    for blk in 0..nb {
        ds[blk].symmetrize();
        let mut d = s_inv[blk].matmul(&ds[blk]).matmul(&x[blk]);
        d.scale(-1.0);
        d.add_scaled(&x[blk], -1.0);
        if sigma_mu != 0.0 {
            d.add_scaled(&s_inv[blk], sigma_mu);
        }
        if let Some(h2) = h2 {
            d.add_scaled(&h2[blk], -1.0);
        }
        d.symmetrize();
        dx.push(d);
    }
    (dx, ds)
}

/// Recovers the complex Hermitian block from a real iterate of the embedded
/// problem by averaging with its symplectic conjugate, which preserves
/// feasibility and objective.
fn recover_complex(r: &RMat, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        let p = 0.5 * (r.get(i, j) + r.get(n + i, n + j));
        let q = 0.5 * (r.get(n + i, j) - r.get(i, n + j));
        C64::new(p, q)
    })
    .hermitian_part()
}

/// Solves the problem to the requested tolerance (`1e-10 <= tol <= 1e-4`).
/// Deterministic: identical inputs give bit-identical outputs.
pub fn solve(p: &SdpProblem, tol: f64) -> SdpSolution {
    assert!((1e-10..=1e-4).contains(&tol), "tol out of supported range");
    let rp = build_real(p);
    let core = solve_real(&rp, tol);
    let x = p
        .sides
        .iter()
        .zip(&core.x)
        .map(|(&n, xb)| {
            HermitianOperator::new_symmetrized(recover_complex(xb, n), SubsystemDims::single(n))
                .expect("recovered block is Hermitian")
        })
        .collect();
    // The embedded slack is the halved embedding of the complex slack.
    let s = p
        .sides
        .iter()
        .zip(&core.s)
        .map(|(&n, sb)| {
            HermitianOperator::new_symmetrized(
                recover_complex(sb, n).scale_re(2.0),
                SubsystemDims::single(n),
            )
            .expect("recovered slack is Hermitian")
        })
        .collect();
    SdpSolution {
        status: core.status,
        x,
        y: core.y,
        s,
        primal_value: core.pval,
        dual_value: core.dval,
        gap: (core.pval - core.dval).abs(),
        iterations: core.iterations,
    }
}

/// Upper-triangle entry lists for a basis of the n x n Hermitian matrices:
/// first the n diagonal units, then for each r < c the real pair
/// (E_rc + E_cr) and the imaginary pair i(E_rc - E_cr).
pub fn hermitian_basis_entries(n: usize) -> Vec<Vec<(usize, usize, C64)>> {
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        out.push(vec![(r, r, C64::new(1.0, 0.0))]);
    }
    for r in 0..n {
        for c in (r + 1)..n {
            out.push(vec![(r, c, C64::new(1.0, 0.0))]);
            out.push(vec![(r, c, C64::new(0.0, 1.0))]);
        }
    }
    out
}
