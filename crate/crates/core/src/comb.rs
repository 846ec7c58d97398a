//! Bipartite non-signalling operations and superchannels as quantum combs.
//!
//! A comb is a bipartite channel Π: A_i ⊗ B_i → A_o ⊗ B_o stored by its Choi
//! matrix with subsystem order (A_i, B_i, A_o, B_o). Feeding a channel
//! N: A_o → B_i into the middle wires turns the comb into a superchannel
//! Θ[N]: A_i → B_o. Combs that signal in neither direction are exactly the
//! superchannels that preserve constant channels.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channels::{self, ChannelError, QuantumChannel, Result};
use crate::linalg::{
    max_entangled, min_eigenvalue, operator_norm, partial_trace, permute_subsystems, trace_norm,
    weyl_operators, ComplexMatrix, HermitianOperator, SubsystemDims,
};
use crate::rng;
use crate::sdp::{self, SdpProblem, SolveStatus};

const COMB_TOL: f64 = 1e-8;
const NS_TOL: f64 = 1e-7;

/// Bipartite operation with one input and one output wire on each side.
#[derive(Debug, Clone)]
pub struct NsComb {
    d_ai: usize,
    d_ao: usize,
    d_bi: usize,
    d_bo: usize,
    choi: HermitianOperator,
}

impl NsComb {
    /// Wraps a Choi matrix on (A_i, B_i, A_o, B_o); `dims` is
    /// (d_Ai, d_Ao, d_Bi, d_Bo).
    pub fn new(dims: (usize, usize, usize, usize), choi: HermitianOperator) -> Result<Self> {
        let (d_ai, d_ao, d_bi, d_bo) = dims;
        let side = d_ai * d_bi * d_ao * d_bo;
        if choi.side() != side {
            return Err(ChannelError::DimensionMismatch(format!(
                "comb Choi side {} does not match dims product {side}",
                choi.side()
            )));
        }
        let choi = choi.with_dims(SubsystemDims::new(vec![d_ai, d_bi, d_ao, d_bo]))?;
        if min_eigenvalue(&choi) < -COMB_TOL {
            return Err(ChannelError::NotCompletelyPositive(min_eigenvalue(&choi)));
        }
        let marginal = partial_trace(&choi, &[0, 1])?;
        let dev = marginal
            .mat()
            .max_abs_diff(&ComplexMatrix::identity(d_ai * d_bi));
        if dev > COMB_TOL {
            return Err(ChannelError::NotTracePreserving(dev));
        }
        Ok(Self { d_ai, d_ao, d_bi, d_bo, choi })
    }

    /// (d_Ai, d_Ao, d_Bi, d_Bo).
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.d_ai, self.d_ao, self.d_bi, self.d_bo)
    }

    pub fn choi(&self) -> &HermitianOperator {
        &self.choi
    }

    /// Comb from a channel on A_i ⊗ B_i → A_o ⊗ B_o.
    pub fn from_bipartite_channel(
        ch: &QuantumChannel,
        dims: (usize, usize, usize, usize),
    ) -> Result<Self> {
        let (d_ai, d_ao, d_bi, d_bo) = dims;
        if ch.d_in() != d_ai * d_bi || ch.d_out() != d_ao * d_bo {
            return Err(ChannelError::DimensionMismatch(
                "bipartite channel does not match the comb dims".into(),
            ));
        }
        Self::new(dims, ch.choi().clone())
    }

    /// Product comb running `a`: A_i → A_o and `b`: B_i → B_o independently.
    pub fn from_local_channels(a: &QuantumChannel, b: &QuantumChannel) -> Result<Self> {
        let dims = (a.d_in(), a.d_out(), b.d_in(), b.d_out());
        Self::from_bipartite_channel(&a.tensor(b), dims)
    }

    /// Comb wiring A_i straight to A_o and B_i straight to B_o.
    pub fn identity_comb(d_a: usize, d_b: usize) -> Self {
        Self::from_local_channels(&QuantumChannel::identity(d_a), &QuantumChannel::identity(d_b))
            .expect("identity wires form a valid comb")
    }

    /// Linear action on an operator J on A_o ⊗ B_i (Choi slot of the plugged
    /// channel): Tr_{A_oB_i}[(I ⊗ Jᵀ ⊗ I) · choi] on A_i ⊗ B_o.
    fn contract(&self, j: &ComplexMatrix) -> Result<ComplexMatrix> {
        let ordered = permute_subsystems(&self.choi, &[0, 2, 1, 3])?;
        let mid = self.d_ao * self.d_bi;
        let sandwich = ComplexMatrix::identity(self.d_ai)
            .kron(&j.transpose())
            .kron(&ComplexMatrix::identity(self.d_bo));
        let prod = sandwich.matmul(ordered.mat());
        Ok(channels::trace_out_middle(&prod, self.d_ai, mid, self.d_bo))
    }
}

/// True iff the A side cannot signal to the B side: tracing A_o from the comb
/// leaves I_{A_i}/d ⊗ (B-side marginal).
pub fn is_ns_a_to_b(c: &NsComb, tol: f64) -> bool {
    let lhs = partial_trace(&c.choi, &[0, 1, 3]).expect("valid subsystems");
    let b_marg = partial_trace(&c.choi, &[1, 3]).expect("valid subsystems");
    let rhs = ComplexMatrix::identity(c.d_ai)
        .scale_re(1.0 / c.d_ai as f64)
        .kron(b_marg.mat());
    lhs.mat().max_abs_diff(&rhs) <= tol
}

/// True iff the B side cannot signal to the A side.
pub fn is_ns_b_to_a(c: &NsComb, tol: f64) -> bool {
    let lhs = partial_trace(&c.choi, &[0, 1, 2]).expect("valid subsystems");
    let a_marg = partial_trace(&c.choi, &[0, 2]).expect("valid subsystems");
    let padded = HermitianOperator::new_symmetrized(
        a_marg
            .mat()
            .kron(&ComplexMatrix::identity(c.d_bi).scale_re(1.0 / c.d_bi as f64)),
        SubsystemDims::new(vec![c.d_ai, c.d_ao, c.d_bi]),
    )
    .expect("padded marginal is Hermitian");
    let rhs = permute_subsystems(&padded, &[0, 2, 1]).expect("valid permutation");
    lhs.mat().max_abs_diff(rhs.mat()) <= tol
}

/// Runs a channel N: A_o → B_i through the comb, producing Θ[N]: A_i → B_o.
pub fn apply_comb(c: &NsComb, n: &QuantumChannel) -> Result<QuantumChannel> {
    if n.d_in() != c.d_ao || n.d_out() != c.d_bi {
        return Err(ChannelError::DimensionMismatch(format!(
            "channel {}→{} does not fit comb wires {}→{}",
            n.d_in(),
            n.d_out(),
            c.d_ao,
            c.d_bi
        )));
    }
    if !is_ns_b_to_a(c, 1e-6) {
        eprintln!(
            "warning: comb signals B→A; the plugged channel has no causal slot \
             and the result may not be a valid channel"
        );
    }
    let j = c.contract(n.choi().mat())?;
    channels::repair_choi(c.d_ai, c.d_bo, &j)
}

/// True iff the comb maps every constant channel to a constant channel,
/// checked on a Hermitian operator basis of B_i (sufficient by linearity).
pub fn is_free_superchannel(c: &NsComb, tol: f64) -> bool {
    let id_ao = ComplexMatrix::identity(c.d_ao);
    for gen in sdp::hermitian_basis_entries(c.d_bi) {
        let sigma = dense_generator(c.d_bi, &gen);
        let img = c
            .contract(&id_ao.kron(&sigma))
            .expect("contract keeps dims");
        if constancy_deviation(&img, c.d_ai, c.d_bo) > tol {
            return false;
        }
    }
    true
}

/// Distance of a Choi-slot operator on A_i ⊗ B_o from constant form
/// I_{A_i} ⊗ ω.
fn constancy_deviation(j: &ComplexMatrix, d_ai: usize, d_bo: usize) -> f64 {
    let h = HermitianOperator::new_symmetrized(
        j.hermitian_part(),
        SubsystemDims::new(vec![d_ai, d_bo]),
    )
    .expect("square operator");
    let omega = partial_trace(&h, &[1])
        .expect("valid subsystems")
        .mat()
        .scale_re(1.0 / d_ai as f64);
    j.max_abs_diff(&ComplexMatrix::identity(d_ai).kron(&omega))
}

fn dense_generator(n: usize, entries: &[(usize, usize, C64)]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for &(r, c, v) in entries {
        m.add_at(r, c, v);
        if r != c {
            m.add_at(c, r, v.conj());
        }
    }
    m
}

/// Pure states |r⟩, (|r⟩+|c⟩)/√2, (|r⟩+i|c⟩)/√2 — a frame spanning the
/// Hermitian operators on dimension `d`.
fn state_frame(d: usize) -> Vec<HermitianOperator> {
    let mut out = Vec::new();
    let mut push = |v: &ComplexMatrix| {
        out.push(
            HermitianOperator::new_symmetrized(
                ComplexMatrix::outer(v, v),
                SubsystemDims::single(d),
            )
            .expect("pure state"),
        );
    };
    for r in 0..d {
        push(&ComplexMatrix::basis_vector(d, r));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for r in 0..d {
        for c in (r + 1)..d {
            let mut v = ComplexMatrix::zeros(d, 1);
            v.set(r, 0, C64::new(s, 0.0));
            v.set(c, 0, C64::new(s, 0.0));
            push(&v);
            let mut w = ComplexMatrix::zeros(d, 1);
            w.set(r, 0, C64::new(s, 0.0));
            w.set(c, 0, C64::new(0.0, s));
            push(&w);
        }
    }
    out
}

/// Orthogonal state pairs (ρ⁰, ρ¹) whose differences span the traceless
/// Hermitian operators on dimension `d`.
fn state_pairs(d: usize) -> Vec<(HermitianOperator, HermitianOperator)> {
    let mut out = Vec::new();
    let pure = |v: &ComplexMatrix| {
        HermitianOperator::new_symmetrized(ComplexMatrix::outer(v, v), SubsystemDims::single(d))
            .expect("pure state")
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for r in 0..d {
        for c in (r + 1)..d {
            let er = ComplexMatrix::basis_vector(d, r);
            let ec = ComplexMatrix::basis_vector(d, c);
            out.push((pure(&er), pure(&ec)));
            let mut plus = ComplexMatrix::zeros(d, 1);
            plus.set(r, 0, C64::new(s, 0.0));
            plus.set(c, 0, C64::new(s, 0.0));
            let mut minus = ComplexMatrix::zeros(d, 1);
            minus.set(r, 0, C64::new(s, 0.0));
            minus.set(c, 0, C64::new(-s, 0.0));
            out.push((pure(&plus), pure(&minus)));
            let mut iplus = ComplexMatrix::zeros(d, 1);
            iplus.set(r, 0, C64::new(s, 0.0));
            iplus.set(c, 0, C64::new(0.0, s));
            let mut iminus = ComplexMatrix::zeros(d, 1);
            iminus.set(r, 0, C64::new(s, 0.0));
            iminus.set(c, 0, C64::new(0.0, -s));
            out.push((pure(&iplus), pure(&iminus)));
        }
    }
    out
}

/// Operational witness of A→B signalling.
#[derive(Debug, Clone)]
pub struct SignallingWitness {
    /// Output of the constant channel plugged into the comb.
    pub sigma: HermitianOperator,
    /// Input states the image channel tells apart.
    pub rho0: HermitianOperator,
    pub rho1: HermitianOperator,
    /// Trace distance ½‖N′(ρ⁰) − N′(ρ¹)‖₁ of the image outputs.
    pub separation: f64,
}

/// When the comb signals A→B (its no-signalling residual exceeds 1e-7),
/// produces a constant channel Ξ_σ and two inputs that the image Θ[Ξ_σ]
/// maps to distinguishable outputs; `None` for non-signalling combs.
///
/// The search sweeps tomographic state frames on B_i and input-pair frames
/// on A_i and keeps the pair with the largest output trace distance.
pub fn signalling_witness(c: &NsComb) -> Result<Option<SignallingWitness>> {
    let lhs = partial_trace(&c.choi, &[0, 1, 3])?;
    let b_marg = partial_trace(&c.choi, &[1, 3])?;
    let rhs = ComplexMatrix::identity(c.d_ai)
        .scale_re(1.0 / c.d_ai as f64)
        .kron(b_marg.mat());
    let residual = HermitianOperator::new_symmetrized(
        lhs.mat().sub(&rhs),
        SubsystemDims::new(vec![c.d_ai, c.d_bi, c.d_bo]),
    )?;
    if operator_norm(&residual) <= NS_TOL {
        return Ok(None);
    }
    let id_ao = ComplexMatrix::identity(c.d_ao);
    let mut best: Option<SignallingWitness> = None;
    for sigma in state_frame(c.d_bi) {
        let img = c.contract(&id_ao.kron(sigma.mat()))?;
        for (rho0, rho1) in state_pairs(c.d_ai) {
            let diff = rho0.mat().sub(rho1.mat());
            let lifted = diff
                .transpose()
                .kron(&ComplexMatrix::identity(c.d_bo));
            let out_diff = channels::trace_out_middle(
                &lifted.matmul(&img),
                1,
                c.d_ai,
                c.d_bo,
            );
            let sep = 0.5
                * trace_norm(&HermitianOperator::new_symmetrized(
                    out_diff.hermitian_part(),
                    SubsystemDims::single(c.d_bo),
                )?);
            if best.as_ref().map_or(true, |b| sep > b.separation) {
                best = Some(SignallingWitness {
                    sigma: sigma.clone(),
                    rho0,
                    rho1,
                    separation: sep,
                });
            }
        }
    }
    Ok(best)
}

/// Pre-processing, memory, and post-processing realizing a one-slot comb.
#[derive(Debug, Clone)]
pub struct SandwichSuperchannel {
    /// A_i → A_o ⊗ E.
    pub pre: QuantumChannel,
    /// B_i ⊗ E → B_o.
    pub post: QuantumChannel,
    pub mem_dim: usize,
}

impl SandwichSuperchannel {
    pub fn new(pre: QuantumChannel, post: QuantumChannel, mem_dim: usize) -> Result<Self> {
        if mem_dim == 0 || pre.d_out() % mem_dim != 0 || post.d_in() % mem_dim != 0 {
            return Err(ChannelError::DimensionMismatch(
                "memory dimension must divide the pre output and post input".into(),
            ));
        }
        Ok(Self { pre, post, mem_dim })
    }

    pub fn d_ao(&self) -> usize {
        self.pre.d_out() / self.mem_dim
    }

    pub fn d_bi(&self) -> usize {
        self.post.d_in() / self.mem_dim
    }

    /// Assembles the comb Choi by composing pre ⊗ id, a wire reshuffle, and
    /// id ⊗ post.
    pub fn to_comb(&self) -> Result<NsComb> {
        let (d_ai, d_ao) = (self.pre.d_in(), self.d_ao());
        let (d_bi, d_bo) = (self.d_bi(), self.post.d_out());
        let e = self.mem_dim;
        let step = self.pre.tensor(&QuantumChannel::identity(d_bi));
        // Outputs of `step` are ordered (A_o, E, B_i); move E last so the
        // second stage sees (A_o, B_i, E) = A_o ⊗ (post input).
        let reshuffled = permute_subsystems(
            &step
                .choi()
                .with_dims(SubsystemDims::new(vec![d_ai, d_bi, d_ao, e, d_bi]))?,
            &[0, 1, 2, 4, 3],
        )?;
        let first = QuantumChannel::from_choi(d_ai * d_bi, d_ao * d_bi * e, reshuffled.mat().clone())?;
        let second = QuantumChannel::identity(d_ao).tensor(&self.post);
        let joint = QuantumChannel::compose(&second, &first)?;
        NsComb::from_bipartite_channel(&joint, (d_ai, d_ao, d_bi, d_bo))
    }
}

/// Comb that measures A_i in the computational basis, prepares |0⟩ at A_o,
/// discards B_i, and re-prepares the measured label at B_o. It signals A→B
/// and nothing else.
pub fn measure_and_forward(d: usize) -> NsComb {
    let mut kraus = Vec::new();
    for m in 0..d {
        for j in 0..d {
            let out = ComplexMatrix::basis_vector(d, 0).kron(&ComplexMatrix::basis_vector(d, m));
            let inp = ComplexMatrix::basis_vector(d, m).kron(&ComplexMatrix::basis_vector(d, j));
            kraus.push(out.matmul(&inp.adjoint()));
        }
    }
    let ch = QuantumChannel::from_kraus(&kraus).expect("projective relay is CPTP");
    NsComb::from_bipartite_channel(&ch, (d, d, d, d)).expect("valid comb")
}

/// Dense-coding comb: A holds half of a shared maximally entangled pair,
/// Weyl-rotates it according to the classical message on A_i (dimension d²),
/// and sends it through the plugged channel; B decodes with the generalized
/// Bell measurement against the other half and announces the outcome at B_o.
pub fn dense_coding_comb(d: usize) -> NsComb {
    let m = d * d;
    let phi = max_entangled(d, true);
    let (_, vecs) = crate::linalg::eig_hermitian(&phi);
    // Top eigenvector of the rank-one projector is the entangled vector.
    let phi_vec = ComplexMatrix::from_fn(m, 1, |r, _| vecs.get(r, 0));
    let ops = weyl_operators(d);
    let id = ComplexMatrix::identity(d);
    let rotated: Vec<ComplexMatrix> = ops
        .iter()
        .map(|p| p.kron(&id).matmul(&phi_vec))
        .collect();
    let pre_kraus: Vec<ComplexMatrix> = rotated
        .iter()
        .enumerate()
        .map(|(k, v)| v.matmul(&ComplexMatrix::basis_vector(m, k).adjoint()))
        .collect();
    let post_kraus: Vec<ComplexMatrix> = rotated
        .iter()
        .enumerate()
        .map(|(k, v)| ComplexMatrix::basis_vector(m, k).matmul(&v.adjoint()))
        .collect();
    let pre = QuantumChannel::from_kraus(&pre_kraus).expect("encoder is CPTP");
    let post = QuantumChannel::from_kraus(&post_kraus).expect("decoder is CPTP");
    SandwichSuperchannel::new(pre, post, d)
        .and_then(|s| s.to_comb())
        .expect("dense-coding comb is valid")
}

/// Equality rows ⟨A, J⟩ = b over the comb Choi: trace preservation always,
/// plus both no-signalling conditions when `ns` is set. Rows are mutually
/// orthonormalized with dependent rows dropped.
pub(crate) fn comb_constraint_rows(
    dims: (usize, usize, usize, usize),
    ns: bool,
) -> Vec<(ComplexMatrix, f64)> {
    let (d_ai, d_ao, d_bi, d_bo) = dims;
    let mut rows = Vec::new();
    // Tr_{A_oB_o}[J] = I on A_i ⊗ B_i.
    let s_in = d_ai * d_bi;
    let id_out = ComplexMatrix::identity(d_ao * d_bo);
    for gen in sdp::hermitian_basis_entries(s_in) {
        let e = dense_generator(s_in, &gen);
        let rhs = if gen[0].0 == gen[0].1 { 1.0 } else { 0.0 };
        rows.push((e.kron(&id_out), rhs));
    }
    if ns {
        // A↛B: Tr_{A_o}[J] − I/d_ai ⊗ Tr_{A_iA_o}[J] = 0, one row per basis
        // element of A_i ⊗ B_i ⊗ B_o.
        let s5 = d_ai * d_bi * d_bo;
        for gen in sdp::hermitian_basis_entries(s5) {
            let e = HermitianOperator::new_symmetrized(
                dense_generator(s5, &gen),
                SubsystemDims::new(vec![d_ai, d_bi, d_bo]),
            )
            .expect("generator is Hermitian");
            let lift1 = reorder_to_comb(
                &e.mat().kron(&ComplexMatrix::identity(d_ao)),
                &[d_ai, d_bi, d_bo, d_ao],
                &[0, 1, 3, 2],
            );
            let f = partial_trace(&e, &[1, 2]).expect("valid subsystems");
            let lift2 = reorder_to_comb(
                &ComplexMatrix::identity(d_ai)
                    .kron(f.mat())
                    .kron(&ComplexMatrix::identity(d_ao)),
                &[d_ai, d_bi, d_bo, d_ao],
                &[0, 1, 3, 2],
            );
            rows.push((lift1.sub(&lift2.scale_re(1.0 / d_ai as f64)), 0.0));
        }
        // B↛A: Tr_{B_o}[J] − Tr_{B_iB_o}[J] ⊗ I/d_bi = 0 on A_i ⊗ B_i ⊗ A_o.
        let s6 = d_ai * d_bi * d_ao;
        for gen in sdp::hermitian_basis_entries(s6) {
            let e = HermitianOperator::new_symmetrized(
                dense_generator(s6, &gen),
                SubsystemDims::new(vec![d_ai, d_bi, d_ao]),
            )
            .expect("generator is Hermitian");
            let lift1 = e.mat().kron(&ComplexMatrix::identity(d_bo));
            let f = partial_trace(&e, &[0, 2]).expect("valid subsystems");
            let lift2 = reorder_to_comb(
                &f.mat().kron(&ComplexMatrix::identity(d_bi * d_bo)),
                &[d_ai, d_ao, d_bi, d_bo],
                &[0, 2, 1, 3],
            );
            rows.push((lift1.sub(&lift2.scale_re(1.0 / d_bi as f64)), 0.0));
        }
    }
    orthonormal_rows(rows)
}

fn reorder_to_comb(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> ComplexMatrix {
    let h = HermitianOperator::new_symmetrized(m.clone(), SubsystemDims::new(dims.to_vec()))
        .expect("row matrix is Hermitian");
    permute_subsystems(&h, perm)
        .expect("valid permutation")
        .mat()
        .clone()
}

/// Modified Gram–Schmidt over the rows (with right-hand sides carried along);
/// dependent rows are dropped.
fn orthonormal_rows(rows: Vec<(ComplexMatrix, f64)>) -> Vec<(ComplexMatrix, f64)> {
    let mut kept: Vec<(ComplexMatrix, f64)> = Vec::new();
    for (mut a, mut b) in rows {
        for (q, qb) in &kept {
            let coef = q.inner(&a);
            a = a.sub(&q.scale_re(coef));
            b -= coef * qb;
        }
        let norm = a.frobenius_norm();
        if norm > 1e-9 {
            kept.push((a.scale_re(1.0 / norm), b / norm));
        }
    }
    kept
}

/// Extremal non-signalling comb maximizing a seeded random objective.
pub fn random_ns_comb(dims: (usize, usize, usize, usize), seed: u64) -> Result<NsComb> {
    let (d_ai, d_ao, d_bi, d_bo) = dims;
    let side = d_ai * d_bi * d_ao * d_bo;
    assert!(side <= 64, "comb Choi side must stay small");
    let mut r = rng::seeded(seed);
    let objective = rng::random_hermitian(&mut r, side);
    let mut p = SdpProblem::new(vec![side]);
    p.set_objective_matrix(0, objective.mat().scale_re(-1.0));
    for (a, b) in comb_constraint_rows(dims, true) {
        p.add_constraint_dense(&[(0, &a)], b);
    }
    let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
    if sol.status != SolveStatus::Optimal {
        return Err(ChannelError::Solver(sol.status));
    }
    let repaired = channels::repair_choi(d_ai * d_bi, d_ao * d_bo, sol.x[0].mat())?;
    NsComb::from_bipartite_channel(&repaired, dims)
}

/// Comb that signals A→B: a random mixture of [`measure_and_forward`] with a
/// random product comb on matching wires.
pub fn random_signalling_comb(d: usize, seed: u64) -> NsComb {
    let mut r = rng::seeded(seed);
    let lambda = 0.3 + 0.7 * rng::uniform_usize(&mut r, 1000) as f64 / 999.0;
    let local_a = QuantumChannel::from_random_isometry(d, d, 2, seed.wrapping_mul(31).wrapping_add(1))
        .expect("valid dims");
    let local_b = QuantumChannel::from_random_isometry(d, d, 2, seed.wrapping_mul(31).wrapping_add(2))
        .expect("valid dims");
    let product = NsComb::from_local_channels(&local_a, &local_b).expect("valid comb");
    let mixed = measure_and_forward(d)
        .choi()
        .mat()
        .scale_re(lambda)
        .add(&product.choi().mat().scale_re(1.0 - lambda));
    NsComb::new(
        (d, d, d, d),
        HermitianOperator::new_symmetrized(mixed, SubsystemDims::new(vec![d, d, d, d]))
            .expect("mixture is Hermitian"),
    )
    .expect("mixture of combs is a comb")
}

/// Random memoryless sandwich superchannel (independent pre and post).
pub fn random_free_sandwich(
    dims: (usize, usize, usize, usize),
    seed: u64,
) -> Result<SandwichSuperchannel> {
    let (d_ai, d_ao, d_bi, d_bo) = dims;
    let pre = QuantumChannel::from_random_isometry(d_ai, d_ao, 2, seed.wrapping_mul(977).wrapping_add(3))?;
    let post = QuantumChannel::from_random_isometry(d_bi, d_bo, 2, seed.wrapping_mul(977).wrapping_add(4))?;
    SandwichSuperchannel::new(pre, post, 1)
}

/// Serialized comb accepted by the command-line tools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombSpec {
    /// [d_Ai, d_Ao, d_Bi, d_Bo]
    pub dims: [usize; 4],
    /// Row-major [re, im] Choi matrix on (A_i, B_i, A_o, B_o).
    pub choi: Vec<[f64; 2]>,
}

impl CombSpec {
    pub fn to_comb(&self) -> Result<NsComb> {
        let [d_ai, d_ao, d_bi, d_bo] = self.dims;
        let side = d_ai * d_bi * d_ao * d_bo;
        if self.choi.len() != side * side {
            return Err(ChannelError::Spec(format!(
                "comb Choi needs {} entries, got {}",
                side * side,
                self.choi.len()
            )));
        }
        let m = ComplexMatrix::from_fn(side, side, |r, c| {
            let [re, im] = self.choi[r * side + c];
            C64::new(re, im)
        });
        NsComb::new(
            (d_ai, d_ao, d_bi, d_bo),
            HermitianOperator::new_symmetrized(m, SubsystemDims::new(vec![d_ai, d_bi, d_ao, d_bo]))?,
        )
    }

    pub fn from_comb(c: &NsComb) -> Self {
        let (d_ai, d_ao, d_bi, d_bo) = c.dims();
        Self {
            dims: [d_ai, d_ao, d_bi, d_bo],
            choi: c.choi().mat().data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::diamond_dist;
    use crate::resource;

    #[test]
    fn product_combs_signal_neither_way() {
        for seed in 0..3u64 {
            let a = QuantumChannel::from_random_isometry(2, 2, 2, 100 + seed).unwrap();
            let b = QuantumChannel::from_random_isometry(2, 2, 2, 200 + seed).unwrap();
            let c = NsComb::from_local_channels(&a, &b).unwrap();
            assert!(is_ns_a_to_b(&c, 1e-9), "seed {seed}");
            assert!(is_ns_b_to_a(&c, 1e-9), "seed {seed}");
            assert!(is_free_superchannel(&c, 1e-9), "seed {seed}");
        }
    }

    #[test]
    fn measure_and_forward_signals_one_way() {
        let c = measure_and_forward(2);
        assert!(is_ns_b_to_a(&c, 1e-9));
        assert!(!is_ns_a_to_b(&c, 1e-7));
        assert!(!is_free_superchannel(&c, 1e-7));
    }

    #[test]
    fn dense_coding_comb_is_non_signalling() {
        let c = dense_coding_comb(2);
        assert!(is_ns_a_to_b(&c, 1e-8));
        assert!(is_ns_b_to_a(&c, 1e-8));
        assert!(is_free_superchannel(&c, 1e-8));
    }

    #[test]
    fn dense_coding_through_identity_is_a_perfect_relay() {
        let c = dense_coding_comb(2);
        let relayed = apply_comb(&c, &QuantumChannel::identity(2)).unwrap();
        // Each of the four messages passes through undisturbed.
        for m in 0..4 {
            let state = HermitianOperator::new_symmetrized(
                ComplexMatrix::outer(
                    &ComplexMatrix::basis_vector(4, m),
                    &ComplexMatrix::basis_vector(4, m),
                ),
                SubsystemDims::single(4),
            )
            .unwrap();
            let out = relayed.apply(&state, &[]).unwrap();
            assert!((out.mat().get(m, m).re - 1.0).abs() < 1e-7, "message {m}");
        }
    }

    #[test]
    fn identity_comb_returns_the_channel() {
        let c = NsComb::identity_comb(2, 2);
        for seed in 0..3u64 {
            let n = QuantumChannel::from_random_isometry(2, 2, 2, 300 + seed).unwrap();
            let out = apply_comb(&c, &n).unwrap();
            assert!(out.choi().mat().max_abs_diff(n.choi().mat()) < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn sandwich_comb_matches_direct_composition() {
        for seed in 0..3u64 {
            let sand = random_free_sandwich((2, 2, 2, 2), 400 + seed).unwrap();
            let comb = sand.to_comb().unwrap();
            assert!(is_free_superchannel(&comb, 1e-8), "seed {seed}");
            let n = QuantumChannel::from_random_isometry(2, 2, 2, 500 + seed).unwrap();
            let via_comb = apply_comb(&comb, &n).unwrap();
            let direct = QuantumChannel::compose(
                &sand.post,
                &QuantumChannel::compose(&n, &sand.pre).unwrap(),
            )
            .unwrap();
            assert!(
                via_comb.choi().mat().max_abs_diff(direct.choi().mat()) < 1e-8,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn sampled_ns_combs_preserve_constancy() {
        let mut r = rng::seeded(11);
        for seed in 0..6u64 {
            let c = random_ns_comb((2, 2, 2, 2), 600 + seed).unwrap();
            assert!(is_ns_a_to_b(&c, 1e-7), "seed {seed}");
            assert!(is_ns_b_to_a(&c, 1e-7), "seed {seed}");
            assert!(is_free_superchannel(&c, 1e-7), "seed {seed}");
            let sigma = rng::random_density(&mut r, 2);
            let constant = QuantumChannel::constant(&sigma, 2).unwrap();
            let image = apply_comb(&c, &constant).unwrap();
            assert!(image.is_constant(1e-7), "seed {seed}");
        }
    }

    #[test]
    fn signalling_combs_admit_witnesses() {
        assert!(signalling_witness(&NsComb::identity_comb(2, 2)).unwrap().is_none());
        assert!(signalling_witness(&random_ns_comb((2, 2, 2, 2), 42).unwrap())
            .unwrap()
            .is_none());

        let w = signalling_witness(&measure_and_forward(2)).unwrap().unwrap();
        assert!((w.separation - 1.0).abs() < 1e-9);
        assert!((w.rho0.mat().get(0, 0).re - 1.0).abs() < 1e-9);
        assert!((w.rho1.mat().get(1, 1).re - 1.0).abs() < 1e-9);

        for seed in 0..5u64 {
            let c = random_signalling_comb(2, 700 + seed);
            let lhs = partial_trace(c.choi(), &[0, 1, 3]).unwrap();
            let marg = partial_trace(c.choi(), &[1, 3]).unwrap();
            let residual = HermitianOperator::new_symmetrized(
                lhs.mat().sub(
                    &ComplexMatrix::identity(2)
                        .scale_re(0.5)
                        .kron(marg.mat()),
                ),
                SubsystemDims::new(vec![2, 2, 2]),
            )
            .unwrap();
            let r = operator_norm(&residual);
            let w = signalling_witness(&c).unwrap().unwrap();
            assert!(w.separation >= r / 2.0, "seed {seed}: {} vs {}", w.separation, r);
        }
    }

    #[test]
    fn comb_action_is_linear() {
        let c = random_ns_comb((2, 2, 2, 2), 55).unwrap();
        let n = QuantumChannel::from_random_isometry(2, 2, 2, 800).unwrap();
        let m = QuantumChannel::from_random_isometry(2, 2, 4, 801).unwrap();
        let alpha = 0.35;
        let blended = c
            .contract(
                &n.choi()
                    .mat()
                    .scale_re(alpha)
                    .add(&m.choi().mat().scale_re(1.0 - alpha)),
            )
            .unwrap();
        let separate = c
            .contract(n.choi().mat())
            .unwrap()
            .scale_re(alpha)
            .add(&c.contract(m.choi().mat()).unwrap().scale_re(1.0 - alpha));
        assert!(blended.max_abs_diff(&separate) < 1e-10);
    }

    #[test]
    fn comb_action_contracts_diamond_distance() {
        for seed in 0..3u64 {
            let c = random_ns_comb((2, 2, 2, 2), 900 + seed).unwrap();
            let n = QuantumChannel::from_random_isometry(2, 2, 2, 910 + seed).unwrap();
            let m = QuantumChannel::from_random_isometry(2, 2, 4, 920 + seed).unwrap();
            let before = diamond_dist(&n, &m).unwrap();
            let after = diamond_dist(&apply_comb(&c, &n).unwrap(), &apply_comb(&c, &m).unwrap())
                .unwrap();
            assert!(after <= before + 1e-6, "seed {seed}: {after} vs {before}");
        }
    }

    #[test]
    fn free_superchannels_do_not_increase_the_measure() {
        for seed in 0..4u64 {
            let n = QuantumChannel::from_random_isometry(2, 2, 2, 1000 + seed).unwrap();
            let before = resource::dmax(&n).unwrap().dmax_bits;
            let comb = if seed % 2 == 0 {
                random_ns_comb((2, 2, 2, 2), 1100 + seed).unwrap()
            } else {
                random_free_sandwich((2, 2, 2, 2), 1100 + seed)
                    .unwrap()
                    .to_comb()
                    .unwrap()
            };
            let after = resource::dmax(&apply_comb(&comb, &n).unwrap())
                .unwrap()
                .dmax_bits;
            assert!(after <= before + 1e-6, "seed {seed}: {after} vs {before}");
        }
    }

    #[test]
    fn comb_spec_round_trip() {
        let c = dense_coding_comb(2);
        let spec = CombSpec::from_comb(&c);
        let text = serde_json::to_string(&spec).unwrap();
        let parsed: CombSpec = serde_json::from_str(&text).unwrap();
        let back = parsed.to_comb().unwrap();
        assert_eq!(back.dims(), c.dims());
        assert!(back.choi().mat().max_abs_diff(c.choi().mat()) < 1e-12);
    }
}
