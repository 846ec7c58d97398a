//! Dense complex linear algebra with multi-subsystem bookkeeping.
//!
//! Provides the matrix substrate for states, Choi matrices and SDP data:
//! Kronecker products, partial trace/transpose, subsystem permutation, a
//! cyclic-Jacobi Hermitian eigensolver, operator/trace norms and the
//! canonical quantum objects (maximally entangled operators, Heisenberg-Weyl
//! unitaries).
//!
//! Index convention: subsystem 0 is the most significant tensor factor, i.e.
//! `kron(a, b)` places `a` on the high-order indices. Choi matrices are
//! ordered (input, output).

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Absolute entrywise tolerance for accepting a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Off-diagonal Frobenius target for the Jacobi eigensolver, relative to the
/// matrix norm.
pub const JACOBI_SWEEP_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },
    #[error("matrix is not Hermitian: max deviation {deviation:.3e} exceeds {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("subsystem dims {dims:?} do not multiply to matrix side {side}")]
    DimsProductMismatch { dims: Vec<usize>, side: usize },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major real data.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        Self {
            rows,
            cols,
            data: entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "entry count {} != {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    /// Column vector |k> of dimension `n`.
    pub fn basis_vector(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n, 1);
        v.set(k, 0, C64::new(1.0, 0.0));
        v
    }

    /// Outer product v w† of two column vectors.
    pub fn outer(v: &ComplexMatrix, w: &ComplexMatrix) -> Self {
        assert_eq!(v.cols, 1);
        assert_eq!(w.cols, 1);
        Self::from_fn(v.rows, w.rows, |r, c| v.get(r, 0) * w.get(c, 0).conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row_off = i * out.cols;
                let other_off = k * other.cols;
                for j in 0..other.cols {
                    out.data[row_off + j] += a * other.data[other_off + j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn conj(&self) -> Self {
        let data = self.data.iter().map(|z| z.conj()).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Re Tr[A† B], the real trace inner product.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Deviation from Hermiticity: max |A[r][c] - conj(A[c][r])|.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        dev
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self.get(r, c) + self.get(c, r).conj()) * 0.5
        })
    }

    /// Kronecker product; `self` occupies the most significant indices.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out.set(
                            r1 * other.rows + r2,
                            c1 * other.cols + c2,
                            a * other.get(r2, c2),
                        );
                    }
                }
            }
        }
        out
    }
}

/// Standard Kronecker product with row-major index convention.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Ordered list of subsystem dimensions annotating a square matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemDims {
    dims: Vec<usize>,
}

impl SubsystemDims {
    pub fn new(dims: Vec<usize>) -> Self {
        assert!(dims.iter().all(|&d| d >= 1), "every subsystem dim must be >= 1");
        Self { dims }
    }

    pub fn single(d: usize) -> Self {
        Self::new(vec![d])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides: stride of subsystem 0 is the largest.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut s = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    /// Decomposes a flat index into per-subsystem indices.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut out = Vec::with_capacity(self.dims.len());
        for s in strides {
            out.push(idx / s);
            idx %= s;
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        let strides = self.strides();
        multi.iter().zip(strides).map(|(i, s)| i * s).sum()
    }
}

/// Square complex matrix constrained to be Hermitian, with subsystem
/// dimension metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: ComplexMatrix,
    dims: SubsystemDims,
}

impl HermitianOperator {
    /// Validates Hermiticity at the standard tolerance; symmetrizes noise
    /// below it, rejects anything larger.
    pub fn new(mat: ComplexMatrix, dims: SubsystemDims) -> Result<Self> {
        if !mat.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                mat.rows(),
                mat.cols()
            )));
        }
        if !mat.all_finite() {
            return Err(LinalgError::NonFinite);
        }
        if dims.total() != mat.rows() {
            return Err(LinalgError::DimsProductMismatch {
                dims: dims.dims().to_vec(),
                side: mat.rows(),
            });
        }
        let dev = mat.hermiticity_deviation();
        if dev > HERMITICITY_TOL {
            return Err(LinalgError::NotHermitian { deviation: dev, tol: HERMITICITY_TOL });
        }
        let mat = if dev > 0.0 { mat.hermitian_part() } else { mat };
        Ok(Self { mat, dims })
    }

    /// Like [`new`](Self::new) but symmetrizes regardless of the deviation.
    /// For internal use where the input is known Hermitian up to solver noise.
    pub fn new_symmetrized(mat: ComplexMatrix, dims: SubsystemDims) -> Result<Self> {
        if !mat.is_square() {
            return Err(LinalgError::DimensionMismatch("not square".into()));
        }
        if !mat.all_finite() {
            return Err(LinalgError::NonFinite);
        }
        if dims.total() != mat.rows() {
            return Err(LinalgError::DimsProductMismatch {
                dims: dims.dims().to_vec(),
                side: mat.rows(),
            });
        }
        Ok(Self { mat: mat.hermitian_part(), dims })
    }

    pub fn identity(dims: SubsystemDims) -> Self {
        let n = dims.total();
        Self { mat: ComplexMatrix::identity(n), dims }
    }

    pub fn zeros(dims: SubsystemDims) -> Self {
        let n = dims.total();
        Self { mat: ComplexMatrix::zeros(n, n), dims }
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dims(&self) -> &SubsystemDims {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.mat.rows()
    }

    /// Reinterprets the same matrix with a different subsystem split.
    pub fn with_dims(&self, dims: SubsystemDims) -> Result<Self> {
        if dims.total() != self.side() {
            return Err(LinalgError::DimsProductMismatch {
                dims: dims.dims().to_vec(),
                side: self.side(),
            });
        }
        Ok(Self { mat: self.mat.clone(), dims })
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    fn check_subsystems(&self, idxs: &[usize]) -> Result<()> {
        for &i in idxs {
            if i >= self.dims.len() {
                return Err(LinalgError::SubsystemOutOfRange { index: i, count: self.dims.len() });
            }
        }
        Ok(())
    }
}

/// Reduced operator on the subsystems in `keep` (ascending original order),
/// tracing out the rest. Tracing out everything yields a 1x1 matrix.
pub fn partial_trace(h: &HermitianOperator, keep: &[usize]) -> Result<HermitianOperator> {
    h.check_subsystems(keep)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let dims = h.dims().dims();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();

    let keep_dims = SubsystemDims::new(if keep.is_empty() {
        vec![1]
    } else {
        keep.iter().map(|&i| dims[i]).collect()
    });
    let traced_total: usize = traced.iter().map(|&i| dims[i]).product();
    let full = SubsystemDims::new(dims.to_vec());
    let n_keep = keep_dims.total();

    let mut out = ComplexMatrix::zeros(n_keep, n_keep);
    let keep_side = keep_dims.clone();
    // Enumerate (kept row, kept col, traced diagonal) triples.
    let traced_dims = SubsystemDims::new(if traced.is_empty() {
        vec![1]
    } else {
        traced.iter().map(|&i| dims[i]).collect()
    });
    for kr in 0..n_keep {
        let kr_multi = keep_side.unravel(kr);
        for kc in 0..n_keep {
            let kc_multi = keep_side.unravel(kc);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..traced_total.max(1) {
                let t_multi = traced_dims.unravel(t);
                let mut row_multi = vec![0usize; dims.len()];
                let mut col_multi = vec![0usize; dims.len()];
                for (j, &s) in keep.iter().enumerate() {
                    row_multi[s] = if keep.is_empty() { 0 } else { kr_multi[j] };
                    col_multi[s] = kc_multi[j];
                }
                for (j, &s) in traced.iter().enumerate() {
                    row_multi[s] = t_multi[j];
                    col_multi[s] = t_multi[j];
                }
                acc += h.mat().get(full.ravel(&row_multi), full.ravel(&col_multi));
            }
            out.set(kr, kc, acc);
        }
    }
    HermitianOperator::new_symmetrized(out, keep_dims)
}

/// Entrywise index swap (transpose) on the subsystems in `flip`. Involutive.
pub fn partial_transpose(h: &HermitianOperator, flip: &[usize]) -> Result<HermitianOperator> {
    h.check_subsystems(flip)?;
    let dims = SubsystemDims::new(h.dims().dims().to_vec());
    let n = h.side();
    let out = ComplexMatrix::from_fn(n, n, |r, c| {
        let mut rm = dims.unravel(r);
        let mut cm = dims.unravel(c);
        for &s in flip {
            std::mem::swap(&mut rm[s], &mut cm[s]);
        }
        h.mat().get(dims.ravel(&rm), dims.ravel(&cm))
    });
    HermitianOperator::new_symmetrized(out, dims)
}

/// Reorders subsystems: the result's subsystem `j` is the input's
/// subsystem `perm[j]`.
pub fn permute_subsystems(h: &HermitianOperator, perm: &[usize]) -> Result<HermitianOperator> {
    h.check_subsystems(perm)?;
    assert_eq!(perm.len(), h.dims().len(), "permutation length mismatch");
    let old = h.dims().clone();
    let new = SubsystemDims::new(perm.iter().map(|&p| old.dims()[p]).collect());
    let n = h.side();
    let out = ComplexMatrix::from_fn(n, n, |r, c| {
        let rm = new.unravel(r);
        let cm = new.unravel(c);
        let mut rold = vec![0usize; perm.len()];
        let mut cold = vec![0usize; perm.len()];
        for (j, &p) in perm.iter().enumerate() {
            rold[p] = rm[j];
            cold[p] = cm[j];
        }
        h.mat().get(old.ravel(&rold), old.ravel(&cold))
    });
    HermitianOperator::new_symmetrized(out, new)
}

/// Eigendecomposition of a Hermitian operator by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending and the unitary of eigenvectors as
/// columns, so that `h = V diag(lambda) V†`.
pub fn eig_hermitian(h: &HermitianOperator) -> (Vec<f64>, ComplexMatrix) {
    let (vals, vecs) = jacobi_eig(h.mat());
    (vals, vecs)
}

/// Jacobi eigensolver on a raw matrix known to be Hermitian (symmetrized
/// internally against round-off).
pub fn jacobi_eig(mat: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = mat.rows();
    let mut a = mat.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    if n <= 1 {
        let val = if n == 1 { a.get(0, 0).re } else { 0.0 };
        return (vec![val; n], v);
    }
    let norm = a.frobenius_norm().max(1.0);
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= JACOBI_SWEEP_TOL * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let m = apq.norm();
                if m <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                // Phase rotation makes the pivot real, then a real Givens
                // rotation annihilates it.
                let phase = apq / m;
                let theta = 0.5 * (2.0 * m).atan2(app - aqq);
                let c = theta.cos();
                let s = theta.sin();
                // V2 = diag(1, conj(phase)) * [[c, -s], [s, c]]
                let v11 = C64::new(c, 0.0);
                let v12 = C64::new(-s, 0.0);
                let v21 = phase.conj() * s;
                let v22 = phase.conj() * c;
                // Column update A <- A V2 on columns p, q.
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, aip * v11 + aiq * v21);
                    a.set(i, q, aip * v12 + aiq * v22);
                }
                // Row update A <- V2† A on rows p, q.
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, v11.conj() * apj + v21.conj() * aqj);
                    a.set(q, j, v12.conj() * apj + v22.conj() * aqj);
                }
                a.set(p, q, C64::new(0.0, 0.0));
                a.set(q, p, C64::new(0.0, 0.0));
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, vip * v11 + viq * v21);
                    v.set(i, q, vip * v12 + viq * v22);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = ComplexMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    (sorted_vals, sorted_vecs)
}

/// Largest absolute eigenvalue.
pub fn operator_norm(h: &HermitianOperator) -> f64 {
    let (vals, _) = eig_hermitian(h);
    vals.iter().map(|l| l.abs()).fold(0.0, f64::max)
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(h: &HermitianOperator) -> f64 {
    let (vals, _) = eig_hermitian(h);
    vals.iter().map(|l| l.abs()).sum()
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(h: &HermitianOperator, tol: f64) -> bool {
    let (vals, _) = eig_hermitian(h);
    vals.last().map(|&l| l >= -tol).unwrap_or(true)
}

pub fn min_eigenvalue(h: &HermitianOperator) -> f64 {
    let (vals, _) = eig_hermitian(h);
    *vals.last().unwrap()
}

/// Maximally entangled operator on two copies of a `d`-dimensional system:
/// the unnormalized form is Γ = Σ_ij |ii><jj| with trace d, the normalized
/// form Φ = Γ/d is a rank-one state.
pub fn max_entangled(d: usize, normalized: bool) -> HermitianOperator {
    assert!(d >= 1);
    let n = d * d;
    let dims = SubsystemDims::new(vec![d, d]);
    let scale = if normalized { 1.0 / d as f64 } else { 1.0 };
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            m.set(i * d + i, j * d + j, C64::new(scale, 0.0));
        }
    }
    HermitianOperator::new(m, dims).expect("maximally entangled operator is Hermitian")
}

/// The d² Heisenberg-Weyl (clock-and-shift) unitaries P_{a,b} = X^a Z^b,
/// ordered with `a` most significant. They satisfy the twirling identity
/// (1/d²) Σ_j P_j M P_j† = Tr[M] I/d for every M.
pub fn weyl_operators(d: usize) -> Vec<ComplexMatrix> {
    assert!(d >= 1);
    let mut out = Vec::with_capacity(d * d);
    let tau = 2.0 * std::f64::consts::PI / d as f64;
    for a in 0..d {
        for b in 0..d {
            // (X^a Z^b)|j> = omega^{bj} |j+a mod d>
            let mut p = ComplexMatrix::zeros(d, d);
            for j in 0..d {
                let phase = C64::from_polar(1.0, tau * (b * j) as f64);
                p.set((j + a) % d, j, phase);
            }
            out.push(p);
        }
    }
    out
}

/// (1/d²) Σ_j P_j M P_j† over the Heisenberg-Weyl set.
pub fn weyl_twirl(m: &ComplexMatrix) -> ComplexMatrix {
    let d = m.rows();
    let ops = weyl_operators(d);
    let mut acc = ComplexMatrix::zeros(d, d);
    for p in &ops {
        acc = acc.add(&p.matmul(m).matmul(&p.adjoint()));
    }
    acc.scale_re(1.0 / (d * d) as f64)
}

/// Pauli X (shift) for d = 2; general shift operator otherwise.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(mat: ComplexMatrix, dims: Vec<usize>) -> HermitianOperator {
        HermitianOperator::new(mat, SubsystemDims::new(dims)).unwrap()
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let p0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let p1 = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let k = kron(&p0, &p1);
        let expect = ComplexMatrix::diag(&[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        assert!(k.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn kron_bit_flip_on_both_qubits() {
        let x = pauli_x();
        let xx = kron(&x, &x);
        let ket00 = ComplexMatrix::basis_vector(4, 0);
        let out = xx.matmul(&ket00);
        let ket11 = ComplexMatrix::basis_vector(4, 3);
        assert!(out.max_abs_diff(&ket11) < 1e-15);
    }

    #[test]
    fn partial_trace_of_gamma_is_identity() {
        let gamma = max_entangled(2, false);
        let reduced = partial_trace(&gamma, &[1]).unwrap();
        assert!(reduced.mat().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
        let reduced0 = partial_trace(&gamma, &[0]).unwrap();
        assert!(reduced0.mat().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn partial_trace_product_state() {
        let rho = ComplexMatrix::from_real(2, 2, &[0.7, 0.1, 0.1, 0.3]);
        let sigma = ComplexMatrix::from_real(3, 3, &[
            0.5, 0.0, 0.0, //
            0.0, 0.3, 0.0, //
            0.0, 0.0, 0.2,
        ]);
        let prod = herm(kron(&rho, &sigma), vec![2, 3]);
        let first = partial_trace(&prod, &[0]).unwrap();
        // Tr[sigma] = 1 here, so the reduction is rho itself.
        assert!(first.mat().max_abs_diff(&rho) < 1e-12);
        // Trace over everything gives [Tr h].
        let all = partial_trace(&prod, &[]).unwrap();
        assert_eq!(all.side(), 1);
        assert!((all.mat().get(0, 0).re - 1.0).abs() < 1e-12);
        // Trace preservation for a partial reduction.
        assert!((first.trace() - prod.trace()).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_product_and_involution() {
        let rho = ComplexMatrix::from_fn(2, 2, |r, c| {
            if (r, c) == (0, 1) {
                C64::new(0.1, 0.2)
            } else if (r, c) == (1, 0) {
                C64::new(0.1, -0.2)
            } else {
                C64::new(0.4, 0.0)
            }
        });
        let sigma = ComplexMatrix::from_fn(2, 2, |r, c| {
            if (r, c) == (0, 1) {
                C64::new(0.05, -0.3)
            } else if (r, c) == (1, 0) {
                C64::new(0.05, 0.3)
            } else {
                C64::new(0.5, 0.0)
            }
        });
        let prod = herm(kron(&rho, &sigma), vec![2, 2]);
        let pt = partial_transpose(&prod, &[1]).unwrap();
        let expect = kron(&rho, &sigma.transpose());
        assert!(pt.mat().max_abs_diff(&expect) < 1e-12);
        let back = partial_transpose(&pt, &[1]).unwrap();
        assert!(back.mat().max_abs_diff(prod.mat()) < 1e-14);
    }

    #[test]
    fn partial_transpose_gamma_gives_swap() {
        // Direct 4x4 computation: Gamma^{T_B} = sum |ij><ji| = SWAP.
        let gamma = max_entangled(2, false);
        let pt = partial_transpose(&gamma, &[1]).unwrap();
        let mut swap = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap.set(i * 2 + j, j * 2 + i, C64::new(1.0, 0.0));
            }
        }
        assert!(pt.mat().max_abs_diff(&swap) < 1e-14);
    }

    #[test]
    fn permute_subsystems_swaps_factors() {
        let a = ComplexMatrix::from_real(2, 2, &[0.9, 0.0, 0.0, 0.1]);
        let b = ComplexMatrix::from_real(3, 3, &[
            0.2, 0.0, 0.0, //
            0.0, 0.5, 0.0, //
            0.0, 0.0, 0.3,
        ]);
        let ab = herm(kron(&a, &b), vec![2, 3]);
        let ba = permute_subsystems(&ab, &[1, 0]).unwrap();
        assert_eq!(ba.dims().dims(), &[3, 2]);
        assert!(ba.mat().max_abs_diff(&kron(&b, &a)) < 1e-14);
    }

    #[test]
    fn eig_pauli_z_and_identity() {
        let z = herm(pauli_z(), vec![2]);
        let (vals, _) = eig_hermitian(&z);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] + 1.0).abs() < 1e-12);
        let i3 = HermitianOperator::identity(SubsystemDims::single(3));
        let (vals, _) = eig_hermitian(&i3);
        for v in vals {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_gamma_rank_one() {
        for d in [2usize, 3] {
            let gamma = max_entangled(d, false);
            let (vals, _) = eig_hermitian(&gamma);
            assert!((vals[0] - d as f64).abs() < 1e-10);
            for &v in &vals[1..] {
                assert!(v.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eig_reconstruction() {
        let mut rng = crate::rng::seeded(7);
        for n in [3usize, 8, 17] {
            let h = crate::rng::random_hermitian(&mut rng, n);
            let (vals, v) = eig_hermitian(&h);
            let lambda = ComplexMatrix::diag(
                &vals.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>(),
            );
            let recon = v.matmul(&lambda).matmul(&v.adjoint());
            let scale = h.mat().max_abs().max(1.0);
            assert!(recon.max_abs_diff(h.mat()) < 1e-9 * scale);
            // V unitary
            let vtv = v.adjoint().matmul(&v);
            assert!(vtv.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-9);
        }
    }

    #[test]
    fn norms_and_psd() {
        let idn = HermitianOperator::identity(SubsystemDims::single(5));
        assert!((operator_norm(&idn) - 1.0).abs() < 1e-12);
        let x = herm(pauli_x(), vec![2]);
        assert!((trace_norm(&x) - 2.0).abs() < 1e-12);
        let near = herm(
            ComplexMatrix::diag(&[C64::new(1.0, 0.0), C64::new(-1e-12, 0.0)]),
            vec![2],
        );
        assert!(is_psd(&near, 1e-9));
        assert!(!is_psd(&herm(pauli_z(), vec![2]), 1e-9));
    }

    #[test]
    fn max_entangled_cases() {
        let one = max_entangled(1, false);
        assert_eq!(one.side(), 1);
        assert!((one.mat().get(0, 0).re - 1.0).abs() < 1e-15);

        let phi = max_entangled(2, true);
        assert!((phi.trace() - 1.0).abs() < 1e-12);
        let (vals, _) = eig_hermitian(&phi);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        let red = partial_trace(&phi, &[0]).unwrap();
        assert!(red.mat().max_abs_diff(&ComplexMatrix::identity(2).scale_re(0.5)) < 1e-12);

        let g3 = max_entangled(3, false);
        assert!((g3.trace() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn weyl_twirl_identity() {
        // Traceless input twirls to zero.
        let z = pauli_z();
        assert!(weyl_twirl(&z).max_abs() < 1e-12);
        // diag(1,0) twirls to I/2.
        let p0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(weyl_twirl(&p0).max_abs_diff(&ComplexMatrix::identity(2).scale_re(0.5)) < 1e-12);
    }

    #[test]
    fn weyl_d3_trace_orthogonal() {
        let ops = weyl_operators(3);
        assert_eq!(ops.len(), 9);
        for (j, pj) in ops.iter().enumerate() {
            for (k, pk) in ops.iter().enumerate() {
                let t = pj.adjoint().matmul(pk).trace();
                let expect = if j == k { 3.0 } else { 0.0 };
                assert!((t.re - expect).abs() < 1e-12 && t.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weyl_twirl_random_dims() {
        let mut rng = crate::rng::seeded(11);
        for d in [2usize, 3, 4] {
            let m = crate::rng::random_complex_matrix(&mut rng, d, d);
            let tw = weyl_twirl(&m);
            let expect = ComplexMatrix::identity(d).scale(m.trace() / d as f64);
            assert!(tw.max_abs_diff(&expect) < 1e-10);
        }
    }

    #[test]
    fn trace_norm_dominates_operator_norm() {
        let mut rng = crate::rng::seeded(3);
        for _ in 0..20 {
            let h = crate::rng::random_hermitian(&mut rng, 4);
            assert!(trace_norm(&h) >= operator_norm(&h) - 1e-12);
        }
        // Equality for rank one.
        let v = crate::rng::random_state_vector(&mut rng, 4);
        let proj = HermitianOperator::new(
            ComplexMatrix::outer(&v, &v),
            SubsystemDims::single(4),
        )
        .unwrap();
        assert!((trace_norm(&proj) - operator_norm(&proj)).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(HermitianOperator::new(m, SubsystemDims::single(2)).is_err());
    }

    #[test]
    fn kron_partial_trace_consistency_random() {
        let mut rng = crate::rng::seeded(42);
        for _ in 0..100 {
            let da = 2 + (crate::rng::uniform_usize(&mut rng, 3));
            let db = 2 + (crate::rng::uniform_usize(&mut rng, 3));
            let a = crate::rng::random_hermitian(&mut rng, da);
            let b = crate::rng::random_hermitian(&mut rng, db);
            let prod = herm(kron(a.mat(), b.mat()), vec![da, db]);
            let reduced = partial_trace(&prod, &[0]).unwrap();
            let expect = a.mat().scale_re(b.trace());
            assert!(reduced.mat().max_abs_diff(&expect) < 1e-12);
        }
    }
}
