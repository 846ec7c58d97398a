//! Quantum channels represented by their Choi matrices.
//!
//! A channel N from a d_in- to a d_out-dimensional system is stored as
//! J_N = (id ⊗ N)(Γ) with Γ the unnormalized maximally entangled operator
//! (so Tr J_N = d_in). The Choi matrix lives on input ⊗ output with the
//! input as the most significant tensor factor.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    self, max_entangled, min_eigenvalue, operator_norm, partial_trace, partial_transpose,
    permute_subsystems, trace_norm, ComplexMatrix, HermitianOperator, SubsystemDims,
};
use crate::sdp::{self, SdpProblem, SolveStatus, SparseEntry};

const CP_TOL: f64 = 1e-8;
const TP_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("Kraus operators not trace preserving: deviation {0:.3e}")]
    KrausCompleteness(f64),
    #[error("Choi matrix not completely positive: min eigenvalue {0:.3e}")]
    NotCompletelyPositive(f64),
    #[error("Choi matrix not trace preserving: deviation {0:.3e}")]
    NotTracePreserving(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("channel specification: {0}")]
    Spec(String),
    #[error("SDP solver failed with status {0:?}")]
    Solver(SolveStatus),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// Completely positive trace-preserving map, validated on construction.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    d_in: usize,
    d_out: usize,
    choi: HermitianOperator,
}

impl QuantumChannel {
    /// Builds a channel from its Choi matrix on input ⊗ output, checking
    /// complete positivity (eigenvalue floor −1e-8) and trace preservation
    /// (Tr_out J = I entrywise within 1e-8). Tiny non-Hermitian noise is
    /// symmetrized away.
    pub fn from_choi(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Result<Self> {
        if choi.rows() != d_in * d_out || choi.cols() != d_in * d_out {
            return Err(ChannelError::DimensionMismatch(format!(
                "Choi side {} does not match d_in*d_out = {}",
                choi.rows(),
                d_in * d_out
            )));
        }
        let dims = SubsystemDims::new(vec![d_in, d_out]);
        let choi = HermitianOperator::new(choi, dims)?;
        let lam = min_eigenvalue(&choi);
        if lam < -CP_TOL {
            return Err(ChannelError::NotCompletelyPositive(lam));
        }
        let reduced = partial_trace(&choi, &[0])?;
        let dev = reduced.mat().max_abs_diff(&ComplexMatrix::identity(d_in));
        if dev > TP_TOL {
            return Err(ChannelError::NotTracePreserving(dev));
        }
        Ok(Self { d_in, d_out, choi })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &HermitianOperator {
        &self.choi
    }

    /// Channel from Kraus operators (each d_out × d_in) with Σ K†K = I.
    pub fn from_kraus(ops: &[ComplexMatrix]) -> Result<Self> {
        if ops.is_empty() {
            return Err(ChannelError::Spec("no Kraus operators given".into()));
        }
        let d_out = ops[0].rows();
        let d_in = ops[0].cols();
        let mut complete = ComplexMatrix::zeros(d_in, d_in);
        for k in ops {
            if k.rows() != d_out || k.cols() != d_in {
                return Err(ChannelError::DimensionMismatch(
                    "Kraus operators must share one shape".into(),
                ));
            }
            complete = complete.add(&k.adjoint().matmul(k));
        }
        let dev = complete.max_abs_diff(&ComplexMatrix::identity(d_in));
        if dev > TP_TOL {
            return Err(ChannelError::KrausCompleteness(dev));
        }
        // J[(i,a),(j,b)] = Σ_k K_k[a,i] conj(K_k[b,j])
        let side = d_in * d_out;
        let mut j = ComplexMatrix::zeros(side, side);
        for k in ops {
            for i in 0..d_in {
                for a in 0..d_out {
                    let left = k.get(a, i);
                    if left.norm_sqr() == 0.0 {
                        continue;
                    }
                    for jj in 0..d_in {
                        for b in 0..d_out {
                            j.add_at(i * d_out + a, jj * d_out + b, left * k.get(b, jj).conj());
                        }
                    }
                }
            }
        }
        Self::from_choi(d_in, d_out, j)
    }

    /// Identity channel on a d-dimensional system; Choi matrix Γ.
    pub fn identity(d: usize) -> Self {
        let gamma = max_entangled(d, false);
        Self { d_in: d, d_out: d, choi: gamma }
    }

    /// Channel mapping every input to the fixed state σ; Choi I_{d_in} ⊗ σ.
    pub fn constant(sigma: &HermitianOperator, d_in: usize) -> Result<Self> {
        let d_out = sigma.side();
        if (sigma.trace() - 1.0).abs() > 1e-9 || min_eigenvalue(sigma) < -1e-9 {
            return Err(ChannelError::InvalidState(
                "constant channel target must be a density matrix".into(),
            ));
        }
        let j = ComplexMatrix::identity(d_in).kron(sigma.mat());
        Self::from_choi(d_in, d_out, j)
    }

    /// Depolarizing channel ρ → (1−p)ρ + p I/d.
    pub fn depolarizing(p: f64, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ChannelError::ParamOutOfRange(format!(
                "depolarizing parameter {p} outside [0, 1]"
            )));
        }
        let gamma = max_entangled(d, false);
        let j = gamma
            .mat()
            .scale_re(1.0 - p)
            .add(&ComplexMatrix::identity(d * d).scale_re(p / d as f64));
        Self::from_choi(d, d, j)
    }

    /// Dephasing channel ρ → (1−p)ρ + p diag(ρ); Choi (1−p)Γ + p Σ_i |ii⟩⟨ii|.
    pub fn dephasing(p: f64, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ChannelError::ParamOutOfRange(format!(
                "dephasing parameter {p} outside [0, 1]"
            )));
        }
        let gamma = max_entangled(d, false);
        let mut j = gamma.mat().scale_re(1.0 - p);
        for i in 0..d {
            j.add_at(i * d + i, i * d + i, C64::new(p, 0.0));
        }
        Self::from_choi(d, d, j)
    }

    /// Random channel from a Haar-ish isometry V: in → out ⊗ env followed by
    /// tracing out the environment. Deterministic per seed.
    pub fn from_random_isometry(d_in: usize, d_out: usize, d_env: usize, seed: u64) -> Result<Self> {
        if d_env < 1 {
            return Err(ChannelError::ParamOutOfRange("d_env must be >= 1".into()));
        }
        if d_out * d_env < d_in {
            return Err(ChannelError::DimensionMismatch(
                "need d_out * d_env >= d_in for an isometry".into(),
            ));
        }
        let mut rng = crate::rng::seeded(seed);
        let v = crate::rng::random_isometry(&mut rng, d_out * d_env, d_in);
        // Kraus operator per environment level e: K_e[a, i] = V[(a, e), i].
        let ops: Vec<ComplexMatrix> = (0..d_env)
            .map(|e| ComplexMatrix::from_fn(d_out, d_in, |a, i| v.get(a * d_env + e, i)))
            .collect();
        Self::from_kraus(&ops)
    }

    /// True iff the channel ignores its input: the Choi matrix equals
    /// I ⊗ σ with σ the average output, within `tol` in operator norm.
    pub fn is_constant(&self, tol: f64) -> bool {
        let avg = partial_trace(&self.choi, &[1]).expect("choi has two subsystems");
        let target = ComplexMatrix::identity(self.d_in)
            .kron(&avg.mat().scale_re(1.0 / self.d_in as f64));
        let diff = HermitianOperator::new_symmetrized(
            self.choi.mat().sub(&target),
            self.choi.dims().clone(),
        )
        .expect("difference of Hermitian matrices");
        operator_norm(&diff) <= tol
    }

    /// Applies id_E ⊗ N to a density matrix on ancilla ⊗ input via the Choi
    /// contraction Tr_in[(ρ^{T_in} ⊗ I_out)(I_E ⊗ J_N)]. `ancilla_dims` are
    /// the leading subsystem dimensions of ρ that the channel leaves alone.
    pub fn apply(&self, rho: &HermitianOperator, ancilla_dims: &[usize]) -> Result<HermitianOperator> {
        let d_e: usize = ancilla_dims.iter().product();
        if rho.side() != d_e * self.d_in {
            return Err(ChannelError::DimensionMismatch(format!(
                "state side {} does not match ancilla*input = {}",
                rho.side(),
                d_e * self.d_in
            )));
        }
        let grouped = rho.with_dims(SubsystemDims::new(vec![d_e, self.d_in]))?;
        let rho_t = partial_transpose(&grouped, &[1])?;
        let left = rho_t.mat().kron(&ComplexMatrix::identity(self.d_out));
        let right = ComplexMatrix::identity(d_e).kron(self.choi.mat());
        let full = left.matmul(&right);
        let contracted = trace_out_middle(&full, d_e, self.d_in, self.d_out);
        let mut dims = ancilla_dims.to_vec();
        dims.push(self.d_out);
        Ok(HermitianOperator::new_symmetrized(
            contracted,
            SubsystemDims::new(dims),
        )?)
    }

    /// Tensor product channel; Choi subsystems reordered to keep the
    /// (input ⊗ output) convention: (in₁ in₂ ⊗ out₁ out₂).
    pub fn tensor(&self, other: &QuantumChannel) -> QuantumChannel {
        let raw = self.choi.mat().kron(other.choi.mat());
        let h = HermitianOperator::new_symmetrized(
            raw,
            SubsystemDims::new(vec![self.d_in, self.d_out, other.d_in, other.d_out]),
        )
        .expect("Kronecker product of Hermitian matrices");
        let perm = permute_subsystems(&h, &[0, 2, 1, 3]).expect("valid permutation");
        QuantumChannel::from_choi(
            self.d_in * other.d_in,
            self.d_out * other.d_out,
            perm.mat().clone(),
        )
        .expect("tensor of channels is a channel")
    }

    /// Composition late ∘ early via the link product over the intermediate
    /// system: J = Tr_B[(J_early^{T_B} ⊗ I_C)(I_A ⊗ J_late)].
    pub fn compose(late: &QuantumChannel, early: &QuantumChannel) -> Result<QuantumChannel> {
        if early.d_out != late.d_in {
            return Err(ChannelError::DimensionMismatch(format!(
                "cannot compose: early output {} vs late input {}",
                early.d_out, late.d_in
            )));
        }
        let (a, b, c) = (early.d_in, early.d_out, late.d_out);
        let j1t = partial_transpose(&early.choi, &[1])?;
        let left = j1t.mat().kron(&ComplexMatrix::identity(c));
        let right = ComplexMatrix::identity(a).kron(late.choi.mat());
        let full = left.matmul(&right);
        let contracted = trace_out_middle(&full, a, b, c);
        QuantumChannel::from_choi(a, c, contracted)
    }
}

/// Builds a channel from a numerically noisy Choi candidate (e.g. an SDP
/// iterate): clips negative eigenvalues, then restores trace preservation
/// exactly via J → (R^{-1/2} ⊗ I) J (R^{-1/2} ⊗ I) with R = Tr_out J.
pub fn repair_choi(d_in: usize, d_out: usize, j: &ComplexMatrix) -> Result<QuantumChannel> {
    let dims = SubsystemDims::new(vec![d_in, d_out]);
    let h = HermitianOperator::new_symmetrized(j.clone(), dims.clone())?;
    let (vals, vecs) = linalg::eig_hermitian(&h);
    let mut clipped = ComplexMatrix::zeros(h.side(), h.side());
    for (k, &v) in vals.iter().enumerate() {
        if v <= 0.0 {
            continue;
        }
        let col = ComplexMatrix::from_fn(h.side(), 1, |r, _| vecs.get(r, k));
        clipped = clipped.add(&ComplexMatrix::outer(&col, &col).scale_re(v));
    }
    let psd = HermitianOperator::new_symmetrized(clipped, dims)?;
    let reduced = partial_trace(&psd, &[0])?;
    let (rv, rvec) = linalg::eig_hermitian(&reduced);
    let inv_sqrt = ComplexMatrix::from_fn(d_in, d_in, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..d_in {
            let lam = rv[k].max(1e-12);
            acc += rvec.get(r, k) * rvec.get(c, k).conj() / lam.sqrt();
        }
        acc
    });
    let scaler = inv_sqrt.kron(&ComplexMatrix::identity(d_out));
    let fixed = scaler.matmul(psd.mat()).matmul(&scaler);
    QuantumChannel::from_choi(d_in, d_out, fixed)
}

/// Partial trace over the middle factor of a matrix on A ⊗ B ⊗ C.
pub(crate) fn trace_out_middle(m: &ComplexMatrix, da: usize, db: usize, dc: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(da * dc, da * dc);
    for ea in 0..da {
        for eb in 0..da {
            for oa in 0..dc {
                for ob in 0..dc {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..db {
                        acc += m.get((ea * db + i) * dc + oa, (eb * db + i) * dc + ob);
                    }
                    out.set(ea * dc + oa, eb * dc + ob, acc);
                }
            }
        }
    }
    out
}

/// Diamond-norm distance ‖N − M‖_◇, computed from the difference-of-channels
/// program 2·max{ Re Tr[J_Δ W] : 0 ⪯ W ⪯ ρ ⊗ I_out, ρ ⪰ 0, Tr ρ = 1 }.
pub fn diamond_dist(n: &QuantumChannel, m: &QuantumChannel) -> Result<f64> {
    if n.d_in != m.d_in || n.d_out != m.d_out {
        return Err(ChannelError::DimensionMismatch(
            "diamond distance needs matching channel dimensions".into(),
        ));
    }
    let (d_in, d_out) = (n.d_in, n.d_out);
    let side = d_in * d_out;
    let delta = n.choi.mat().sub(m.choi.mat());
    if delta.max_abs() < 1e-14 {
        return Ok(0.0);
    }
    // Blocks: 0 = W, 1 = slack Z with W + Z = ρ ⊗ I_out, 2 = ρ.
    let mut p = SdpProblem::new(vec![side, side, d_in]);
    p.set_objective_matrix(0, delta.scale_re(-1.0));
    for basis in sdp::hermitian_basis_entries(side) {
        let mut entries = Vec::new();
        for &(r, c, v) in &basis {
            entries.push(SparseEntry::new(0, r, c, v));
            entries.push(SparseEntry::new(1, r, c, v));
            // ⟨B, ρ ⊗ I⟩ keeps only entries diagonal in the output factor.
            let (ri, ro) = (r / d_out, r % d_out);
            let (ci, co) = (c / d_out, c % d_out);
            if ro == co {
                entries.push(SparseEntry::new(2, ri, ci, -v));
            }
        }
        p.add_constraint_entries(entries, 0.0);
    }
    let trace_entries = (0..d_in).map(|i| SparseEntry::real(2, i, i, 1.0)).collect();
    p.add_constraint_entries(trace_entries, 1.0);
    let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
    if sol.status != SolveStatus::Optimal {
        return Err(ChannelError::Solver(sol.status));
    }
    Ok((-(sol.primal_value + sol.dual_value)).max(0.0))
}

/// Serialized channel description accepted by the command-line tools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// "kraus", "choi" or "named".
    pub kind: String,
    pub d_in: usize,
    pub d_out: usize,
    /// Row-major [re, im] pairs: one inner list per Kraus operator, a single
    /// inner list for a Choi matrix or a constant-channel target state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<Vec<[f64; 2]>>>,
    /// For kind "named": "identity", "constant", "depolarizing", "dephasing"
    /// or "random".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

impl ChannelSpec {
    pub fn to_channel(&self) -> Result<QuantumChannel> {
        match self.kind.as_str() {
            "kraus" => {
                let data = self
                    .data
                    .as_ref()
                    .ok_or_else(|| ChannelError::Spec("kraus spec requires data".into()))?;
                let ops = data
                    .iter()
                    .map(|m| parse_matrix(m, self.d_out, self.d_in))
                    .collect::<Result<Vec<_>>>()?;
                QuantumChannel::from_kraus(&ops)
            }
            "choi" => {
                let data = self
                    .data
                    .as_ref()
                    .filter(|d| d.len() == 1)
                    .ok_or_else(|| ChannelError::Spec("choi spec requires one matrix".into()))?;
                let side = self.d_in * self.d_out;
                let j = parse_matrix(&data[0], side, side)?;
                QuantumChannel::from_choi(self.d_in, self.d_out, j)
            }
            "named" => self.named_channel(),
            other => Err(ChannelError::Spec(format!("unknown channel kind {other:?}"))),
        }
    }

    fn named_channel(&self) -> Result<QuantumChannel> {
        let name = self
            .name
            .as_deref()
            .ok_or_else(|| ChannelError::Spec("named spec requires a name".into()))?;
        let param = |key: &str| -> Option<f64> {
            self.params.as_ref()?.get(key)?.as_f64()
        };
        match name {
            "identity" => {
                if self.d_in != self.d_out {
                    return Err(ChannelError::Spec("identity needs d_in = d_out".into()));
                }
                Ok(QuantumChannel::identity(self.d_in))
            }
            "constant" => {
                let data = self
                    .data
                    .as_ref()
                    .filter(|d| d.len() == 1)
                    .ok_or_else(|| {
                        ChannelError::Spec("constant spec requires the target state".into())
                    })?;
                let sigma = parse_matrix(&data[0], self.d_out, self.d_out)?;
                let sigma = HermitianOperator::new_symmetrized(
                    sigma,
                    SubsystemDims::single(self.d_out),
                )?;
                QuantumChannel::constant(&sigma, self.d_in)
            }
            "depolarizing" => {
                let p = param("p")
                    .ok_or_else(|| ChannelError::Spec("depolarizing requires params.p".into()))?;
                QuantumChannel::depolarizing(p, self.d_in)
            }
            "dephasing" => {
                let p = param("p")
                    .ok_or_else(|| ChannelError::Spec("dephasing requires params.p".into()))?;
                QuantumChannel::dephasing(p, self.d_in)
            }
            "random" => {
                let seed = param("seed").unwrap_or(0.0) as u64;
                let d_env = param("d_env").map(|v| v as usize).unwrap_or(self.d_in * self.d_out);
                QuantumChannel::from_random_isometry(self.d_in, self.d_out, d_env, seed)
            }
            other => Err(ChannelError::Spec(format!("unknown named channel {other:?}"))),
        }
    }
}

fn parse_matrix(flat: &[[f64; 2]], rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if flat.len() != rows * cols {
        return Err(ChannelError::Spec(format!(
            "expected {}x{} = {} entries, got {}",
            rows,
            cols,
            rows * cols,
            flat.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        let [re, im] = flat[r * cols + c];
        C64::new(re, im)
    }))
}

/// Convenience: trace distance between two states, ‖σ − τ‖₁.
pub fn state_trace_distance(sigma: &HermitianOperator, tau: &HermitianOperator) -> f64 {
    let diff = HermitianOperator::new_symmetrized(
        sigma.mat().sub(tau.mat()),
        sigma.dims().clone(),
    )
    .expect("difference of Hermitian matrices");
    trace_norm(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, is_psd};
    use crate::rng;

    fn phi_plus() -> HermitianOperator {
        max_entangled(2, true)
    }

    #[test]
    fn identity_choi_is_gamma() {
        let id = QuantumChannel::identity(2);
        let (vals, _) = eig_hermitian(&id.choi);
        assert!((vals[0] - 2.0).abs() < 1e-10);
        assert!(vals[1].abs() < 1e-10);
        assert!((id.choi.trace() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn kraus_unitary_is_rank_one() {
        let mut r = rng::seeded(11);
        let u = rng::random_unitary(&mut r, 3);
        let n = QuantumChannel::from_kraus(&[u]).unwrap();
        let (vals, _) = eig_hermitian(n.choi());
        assert!((vals[0] - 3.0).abs() < 1e-9);
        assert!(vals[1].abs() < 1e-9);
    }

    #[test]
    fn kraus_reset_channel_is_constant() {
        let mut k0 = ComplexMatrix::zeros(2, 2);
        k0.set(0, 0, C64::new(1.0, 0.0));
        let mut k1 = ComplexMatrix::zeros(2, 2);
        k1.set(0, 1, C64::new(1.0, 0.0));
        let n = QuantumChannel::from_kraus(&[k0, k1]).unwrap();
        assert!(n.is_constant(1e-10));
        let rho = crate::rng::random_density(&mut rng::seeded(5), 2);
        let out = n.apply(&rho, &[]).unwrap();
        assert!((out.mat().get(0, 0).re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn depolarizing_from_pauli_kraus() {
        let p = 0.3f64;
        let i2 = ComplexMatrix::identity(2);
        let x = linalg::pauli_x();
        let z = linalg::pauli_z();
        let y = x.matmul(&z).scale(C64::new(0.0, 1.0));
        let ops = [
            i2.scale_re((1.0 - 3.0 * p / 4.0).sqrt()),
            x.scale_re((p / 4.0).sqrt()),
            y.scale_re((p / 4.0).sqrt()),
            z.scale_re((p / 4.0).sqrt()),
        ];
        let n = QuantumChannel::from_kraus(&ops).unwrap();
        let reference = QuantumChannel::depolarizing(p, 2).unwrap();
        assert!(n.choi().mat().max_abs_diff(reference.choi().mat()) < 1e-10);
    }

    #[test]
    fn constant_and_fully_depolarizing() {
        let half = HermitianOperator::new(
            ComplexMatrix::identity(2).scale_re(0.5),
            SubsystemDims::single(2),
        )
        .unwrap();
        let c = QuantumChannel::constant(&half, 2).unwrap();
        let expect = ComplexMatrix::identity(2).kron(&ComplexMatrix::identity(2).scale_re(0.5));
        assert!(c.choi().mat().max_abs_diff(&expect) < 1e-12);
        let full = QuantumChannel::depolarizing(1.0, 3).unwrap();
        let expect3 =
            ComplexMatrix::identity(3).kron(&ComplexMatrix::identity(3).scale_re(1.0 / 3.0));
        assert!(full.choi().mat().max_abs_diff(&expect3) < 1e-12);
        assert!(full.is_constant(1e-10));
    }

    #[test]
    fn constancy_threshold_scales_with_noise() {
        let n = QuantumChannel::depolarizing(0.999, 2).unwrap();
        assert!(!n.is_constant(1e-6));
        assert!(n.is_constant(1e-2));
        assert!(!QuantumChannel::identity(2).is_constant(0.5));
    }

    #[test]
    fn apply_matches_direct_formulas() {
        let mut r = rng::seeded(21);
        let rho = rng::random_density(&mut r, 2);
        let id = QuantumChannel::identity(2);
        let out = id.apply(&rho, &[]).unwrap();
        assert!(out.mat().max_abs_diff(rho.mat()) < 1e-10);

        let sigma = rng::random_density(&mut r, 2);
        let c = QuantumChannel::constant(&sigma, 2).unwrap();
        let out = c.apply(&rho, &[]).unwrap();
        assert!(out.mat().max_abs_diff(sigma.mat()) < 1e-10);

        // id ⊗ depolarizing(p) on the maximally entangled state.
        let p = 0.4;
        let dep = QuantumChannel::depolarizing(p, 2).unwrap();
        let out = dep.apply(&phi_plus(), &[2]).unwrap();
        let expect = phi_plus()
            .mat()
            .scale_re(1.0 - p)
            .add(&ComplexMatrix::identity(4).scale_re(p / 4.0));
        assert!(out.mat().max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn apply_preserves_trace_and_positivity() {
        let mut r = rng::seeded(33);
        let channels = [
            QuantumChannel::identity(2),
            QuantumChannel::depolarizing(0.35, 2).unwrap(),
            QuantumChannel::dephasing(0.6, 3).unwrap(),
            QuantumChannel::from_random_isometry(2, 3, 4, 7).unwrap(),
        ];
        for n in &channels {
            let rho = rng::random_density(&mut r, 2 * n.d_in());
            let out = n.apply(&rho, &[2]).unwrap();
            assert!((out.trace() - 1.0).abs() < 1e-8);
            assert!(is_psd(&out, 1e-8));
        }
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let t = QuantumChannel::identity(2).tensor(&QuantumChannel::identity(2));
        let id4 = QuantumChannel::identity(4);
        assert!(t.choi().mat().max_abs_diff(id4.choi().mat()) < 1e-10);
    }

    #[test]
    fn composition_rules() {
        let mut r = rng::seeded(44);
        let sigma = rng::random_density(&mut r, 2);
        let c = QuantumChannel::constant(&sigma, 2).unwrap();
        let n = QuantumChannel::from_random_isometry(2, 2, 2, 3).unwrap();
        let cn = QuantumChannel::compose(&c, &n).unwrap();
        assert!(cn.choi().mat().max_abs_diff(c.choi().mat()) < 1e-9);

        let (p, q) = (0.3, 0.5);
        let dp = QuantumChannel::depolarizing(p, 2).unwrap();
        let dq = QuantumChannel::depolarizing(q, 2).unwrap();
        let both = QuantumChannel::compose(&dp, &dq).unwrap();
        let expect = QuantumChannel::depolarizing(p + q - p * q, 2).unwrap();
        assert!(both.choi().mat().max_abs_diff(expect.choi().mat()) < 1e-10);
    }

    #[test]
    fn diamond_distance_examples() {
        let n = QuantumChannel::from_random_isometry(2, 2, 2, 9).unwrap();
        assert!(diamond_dist(&n, &n).unwrap() < 1e-9);

        let mut r = rng::seeded(55);
        let sigma = rng::random_density(&mut r, 2);
        let tau = rng::random_density(&mut r, 2);
        let cs = QuantumChannel::constant(&sigma, 2).unwrap();
        let ct = QuantumChannel::constant(&tau, 2).unwrap();
        let d = diamond_dist(&cs, &ct).unwrap();
        assert!((d - state_trace_distance(&sigma, &tau)).abs() < 1e-6);

        for p in [0.2, 0.7] {
            let dep = QuantumChannel::depolarizing(p, 2).unwrap();
            let d = diamond_dist(&QuantumChannel::identity(2), &dep).unwrap();
            assert!((d - 1.5 * p).abs() < 1e-6, "p = {p}: got {d}");
        }
    }

    #[test]
    fn diamond_distance_is_a_metric_and_contracts() {
        let a = QuantumChannel::from_random_isometry(2, 2, 2, 101).unwrap();
        let b = QuantumChannel::from_random_isometry(2, 2, 4, 102).unwrap();
        let c = QuantumChannel::depolarizing(0.4, 2).unwrap();
        let dab = diamond_dist(&a, &b).unwrap();
        let dba = diamond_dist(&b, &a).unwrap();
        let dac = diamond_dist(&a, &c).unwrap();
        let dcb = diamond_dist(&c, &b).unwrap();
        assert!((dab - dba).abs() < 1e-6);
        assert!(dab <= dac + dcb + 1e-6);

        let pre = QuantumChannel::from_random_isometry(2, 2, 2, 103).unwrap();
        let post = QuantumChannel::from_random_isometry(2, 2, 2, 104).unwrap();
        let wrap = |n: &QuantumChannel| {
            QuantumChannel::compose(&post, &QuantumChannel::compose(n, &pre).unwrap()).unwrap()
        };
        let wrapped = diamond_dist(&wrap(&a), &wrap(&b)).unwrap();
        assert!(wrapped <= dab + 1e-6);
    }

    #[test]
    fn constancy_agrees_with_output_independence() {
        // A channel is constant iff its output does not depend on the input;
        // probe with random state pairs and compare against is_constant.
        let mut r = rng::seeded(400);
        for seed in 0..10u64 {
            let n = if seed % 2 == 0 {
                let sigma = rng::random_density(&mut r, 2);
                QuantumChannel::constant(&sigma, 2).unwrap()
            } else {
                QuantumChannel::from_random_isometry(2, 2, 4, 500 + seed).unwrap()
            };
            let mut spread = 0.0f64;
            let reference = n.apply(&rng::random_density(&mut r, 2), &[]).unwrap();
            for _ in 0..5 {
                let rho = rng::random_density(&mut r, 2);
                let out = n.apply(&rho, &[]).unwrap();
                spread = spread.max(state_trace_distance(&out, &reference));
            }
            assert_eq!(n.is_constant(1e-6), spread <= 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn channel_spec_round_trip() {
        let spec = ChannelSpec {
            kind: "named".into(),
            d_in: 2,
            d_out: 2,
            data: None,
            name: Some("depolarizing".into()),
            params: Some(serde_json::json!({"p": 0.25})),
        };
        let text = serde_json::to_string(&spec).unwrap();
        let parsed: ChannelSpec = serde_json::from_str(&text).unwrap();
        let n = parsed.to_channel().unwrap();
        let reference = QuantumChannel::depolarizing(0.25, 2).unwrap();
        assert!(n.choi().mat().max_abs_diff(reference.choi().mat()) < 1e-12);

        let kraus = ChannelSpec {
            kind: "kraus".into(),
            d_in: 2,
            d_out: 2,
            data: Some(vec![vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]]),
            name: None,
            params: None,
        };
        let n = kraus.to_channel().unwrap();
        assert!(n
            .choi()
            .mat()
            .max_abs_diff(QuantumChannel::identity(2).choi().mat())
            < 1e-12);
    }
}
