//! Resource measures of a channel's communication value.
//!
//! The central quantity is the max-relative entropy of communication: the
//! smallest D_max divergence from the channel to any constant (input-ignoring)
//! channel. It equals log₂(1 + R) with R the generalized robustness, and it
//! coincides with the max-information of the channel's Choi state. This module
//! computes the plain and diamond-norm-smoothed variants, the recovery-overlap
//! form, and additivity checks, all through the interior-point solver.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::channels::{self, ChannelError, QuantumChannel, Result};
use crate::linalg::{
    max_entangled, ComplexMatrix, HermitianOperator, SubsystemDims,
};
use crate::sdp::{self, SdpProblem, SolveStatus, SparseEntry};

/// Gap threshold above which a solve is treated as failed.
const GAP_TOL: f64 = 1e-6;

/// Outcome of a resource-measure computation.
#[derive(Debug, Clone, Serialize)]
pub struct ResourceReport {
    /// log₂ of the optimal value (bits).
    pub dmax_bits: f64,
    /// Generalized robustness, 2^dmax − 1.
    pub robustness: f64,
    /// Smoothing radius in diamond norm (0 for the plain measure).
    pub eps: f64,
    /// Primal/dual agreement of the underlying solve.
    pub gap: f64,
    /// Optimal T with J ⪯ I ⊗ T (for the plain measure the witness of the
    /// primal program; for the smoothed one, of the achieving channel).
    #[serde(skip)]
    pub primal_t: HermitianOperator,
    /// Optimal dual Y with Tr_A Y ⪯ I_B (plain measure only).
    #[serde(skip)]
    pub dual_y: Option<HermitianOperator>,
    /// Channel within the smoothing ball attaining the optimum.
    #[serde(skip)]
    pub achieving: Option<QuantumChannel>,
}

/// Dense Hermitian matrix from one generator of [`sdp::hermitian_basis_entries`].
fn basis_matrix(n: usize, entries: &[(usize, usize, C64)]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for &(r, c, v) in entries {
        m.add_at(r, c, v);
        if r != c {
            m.add_at(c, r, v.conj());
        }
    }
    m
}

/// Max-relative entropy of communication.
///
/// Solved in the compact maximization form
/// max{ Tr[Y J_N] : Y ⪰ 0, Tr_A Y + Q = I_B, Q ⪰ 0 }, whose SDP dual
/// multipliers reassemble into the minimal T of
/// min{ Tr T : J_N ⪯ I_A ⊗ T, T ⪰ 0 }.
pub fn dmax(n: &QuantumChannel) -> Result<ResourceReport> {
    let (d_a, d_b) = (n.d_in(), n.d_out());
    let side = d_a * d_b;
    let mut p = SdpProblem::new(vec![side, d_b]);
    p.set_objective_matrix(0, n.choi().mat().scale_re(-1.0));
    let basis = sdp::hermitian_basis_entries(d_b);
    for gen in &basis {
        let mut entries = Vec::new();
        for &(r, c, v) in gen {
            for a in 0..d_a {
                entries.push(SparseEntry::new(0, a * d_b + r, a * d_b + c, v));
            }
            entries.push(SparseEntry::new(1, r, c, v));
        }
        let rhs = if gen[0].0 == gen[0].1 { 1.0 } else { 0.0 };
        p.add_constraint_entries(entries, rhs);
    }
    let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
    if sol.status != SolveStatus::Optimal || sol.gap > GAP_TOL {
        return Err(ChannelError::Solver(sol.status));
    }
    let value = -(sol.primal_value + sol.dual_value) * 0.5;
    // T = −Σ y_k H_k: the dual constraint on the Q block is Σ y_k H_k ⪯ 0.
    let mut t = ComplexMatrix::zeros(d_b, d_b);
    for (gen, &yk) in basis.iter().zip(&sol.y) {
        t = t.add(&basis_matrix(d_b, gen).scale_re(-yk));
    }
    let primal_t = HermitianOperator::new_symmetrized(t, SubsystemDims::single(d_b))?;
    Ok(ResourceReport {
        dmax_bits: value.max(1.0).log2(),
        robustness: (value - 1.0).max(0.0),
        eps: 0.0,
        gap: sol.gap,
        primal_t: primal_t,
        dual_y: Some(sol.x[0].clone()),
        achieving: None,
    })
}

/// Smoothed max-relative entropy: the smallest value of the plain measure
/// over channels within diamond-norm distance `eps` of `n`.
///
/// One joint SDP over (T, J′, Z): minimize Tr T subject to
/// J′ ⪰ 0, Tr_out J′ = I, J′ ⪯ I ⊗ T, and the diamond-ball certificate
/// Z ⪰ 0, Z ⪰ J′ − J_N, Tr_out Z ⪯ (eps/2)·I.
pub fn dmax_smoothed(n: &QuantumChannel, eps: f64) -> Result<ResourceReport> {
    if eps < 0.0 {
        return Err(ChannelError::ParamOutOfRange("eps must be nonnegative".into()));
    }
    if eps < 1e-12 {
        return dmax(n);
    }
    let (d_a, d_b) = (n.d_in(), n.d_out());
    let side = d_a * d_b;
    // Blocks: 0 = T, 1 = J′, 2 = Z, 3 = G1 (I⊗T − J′), 4 = G2 (Z − J′ + J_N),
    // 5 = G3 ((eps/2)I − Tr_out Z).
    let mut p = SdpProblem::new(vec![d_b, side, side, side, side, d_a]);
    p.set_objective_matrix(0, ComplexMatrix::identity(d_b));
    let j_n = n.choi().mat();

    // G1 + J′ − I ⊗ T = 0
    for gen in sdp::hermitian_basis_entries(side) {
        let mut entries = Vec::new();
        for &(r, c, v) in &gen {
            entries.push(SparseEntry::new(3, r, c, v));
            entries.push(SparseEntry::new(1, r, c, v));
            let (ra, ro) = (r / d_b, r % d_b);
            let (ca, co) = (c / d_b, c % d_b);
            if ra == ca {
                entries.push(SparseEntry::new(0, ro, co, -v));
            }
        }
        p.add_constraint_entries(entries, 0.0);
    }
    // G2 − Z + J′ = J_N
    for gen in sdp::hermitian_basis_entries(side) {
        let mut entries = Vec::new();
        let mut rhs = 0.0;
        for &(r, c, v) in &gen {
            entries.push(SparseEntry::new(4, r, c, v));
            entries.push(SparseEntry::new(2, r, c, -v));
            entries.push(SparseEntry::new(1, r, c, v));
            let z = j_n.get(r, c);
            rhs += if r == c { v.re * z.re } else { 2.0 * (v.conj() * z).re };
        }
        p.add_constraint_entries(entries, rhs);
    }
    // G3 + Tr_out Z = (eps/2) I_A  and  Tr_out J′ = I_A
    for gen in sdp::hermitian_basis_entries(d_a) {
        let diag = gen[0].0 == gen[0].1;
        let mut entries = Vec::new();
        for &(r, c, v) in &gen {
            entries.push(SparseEntry::new(5, r, c, v));
            for o in 0..d_b {
                entries.push(SparseEntry::new(2, r * d_b + o, c * d_b + o, v));
            }
        }
        p.add_constraint_entries(entries, if diag { eps / 2.0 } else { 0.0 });
        let mut tp = Vec::new();
        for &(r, c, v) in &gen {
            for o in 0..d_b {
                tp.push(SparseEntry::new(1, r * d_b + o, c * d_b + o, v));
            }
        }
        p.add_constraint_entries(tp, if diag { 1.0 } else { 0.0 });
    }

    let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
    if sol.status != SolveStatus::Optimal || sol.gap > GAP_TOL {
        return Err(ChannelError::Solver(sol.status));
    }
    let value = (sol.primal_value + sol.dual_value) * 0.5;
    let achieving = channels::repair_choi(d_a, d_b, sol.x[1].mat())?;
    Ok(ResourceReport {
        dmax_bits: value.max(1.0).log2(),
        robustness: (value - 1.0).max(0.0),
        eps,
        gap: sol.gap,
        primal_t: sol.x[0].clone(),
        dual_y: None,
        achieving: Some(achieving),
    })
}

/// Max-information of the Choi state ρ_AB = (id ⊗ N)(Φ):
/// log₂ min{ Tr S : ρ_AB ⪯ ρ_A ⊗ S, S ⪰ 0 } with ρ_A the maximally mixed
/// marginal. Coincides with [`dmax`] but is solved through an independent
/// primal formulation.
pub fn imax(n: &QuantumChannel) -> Result<f64> {
    let (d_a, d_b) = (n.d_in(), n.d_out());
    let side = d_a * d_b;
    let phi = max_entangled(d_a, true);
    let rho = n.apply(&phi, &[d_a])?;
    // Blocks: 0 = slack G = ρ_A ⊗ S − ρ_AB, 1 = S.
    let mut p = SdpProblem::new(vec![side, d_b]);
    p.set_objective_matrix(1, ComplexMatrix::identity(d_b));
    for gen in sdp::hermitian_basis_entries(side) {
        let mut entries = Vec::new();
        let mut rhs = 0.0;
        for &(r, c, v) in &gen {
            entries.push(SparseEntry::new(0, r, c, v));
            let (ra, ro) = (r / d_b, r % d_b);
            let (ca, co) = (c / d_b, c % d_b);
            if ra == ca {
                entries.push(SparseEntry::new(1, ro, co, v * (-1.0 / d_a as f64)));
            }
            let z = rho.mat().get(r, c);
            rhs -= if r == c { v.re * z.re } else { 2.0 * (v.conj() * z).re };
        }
        p.add_constraint_entries(entries, rhs);
    }
    let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
    if sol.status != SolveStatus::Optimal || sol.gap > GAP_TOL {
        return Err(ChannelError::Solver(sol.status));
    }
    let value = (sol.primal_value + sol.dual_value) * 0.5;
    Ok(value.max(1.0).log2())
}

/// Best overlap of a recovered maximally entangled state:
/// d² · max_F ⟨Φ| (id ⊗ F∘N)(Φ) |Φ⟩ over recovery channels F. Equals
/// 1 + robustness; the optimizing F is returned alongside the value.
pub fn recovery_overlap(n: &QuantumChannel) -> Result<(f64, QuantumChannel)> {
    let (d_a, d_b) = (n.d_in(), n.d_out());
    let side = d_b * d_a; // recovery Choi lives on B ⊗ A
    let j_n = n.choi().mat();
    // d_A² ⟨Φ|(id ⊗ F)(ρ_out)|Φ⟩ = ⟨K, J_F⟩ with
    // K[(b,a″),(b̄,a′)] = J_N[(a′,b̄),(a″,b)].
    let k = ComplexMatrix::from_fn(side, side, |r, c| {
        let (b, a2) = (r / d_a, r % d_a);
        let (bb, a1) = (c / d_a, c % d_a);
        j_n.get(a1 * d_b + bb, a2 * d_b + b)
    });
    let mut p = SdpProblem::new(vec![side]);
    p.set_objective_matrix(0, k.hermitian_part().scale_re(-1.0));
    for gen in sdp::hermitian_basis_entries(d_b) {
        let diag = gen[0].0 == gen[0].1;
        let mut entries = Vec::new();
        for &(r, c, v) in &gen {
            for o in 0..d_a {
                entries.push(SparseEntry::new(0, r * d_a + o, c * d_a + o, v));
            }
        }
        p.add_constraint_entries(entries, if diag { 1.0 } else { 0.0 });
    }
    let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
    if sol.status != SolveStatus::Optimal || sol.gap > GAP_TOL {
        return Err(ChannelError::Solver(sol.status));
    }
    let value = -(sol.primal_value + sol.dual_value) * 0.5;
    let recovery = channels::repair_choi(d_b, d_a, sol.x[0].mat())?;
    Ok((value, recovery))
}

/// Deviation from additivity |dmax(n₁ ⊗ n₂) − dmax(n₁) − dmax(n₂)| in bits.
pub fn check_additivity(n1: &QuantumChannel, n2: &QuantumChannel) -> Result<f64> {
    let joint = dmax(&n1.tensor(n2))?;
    let a = dmax(n1)?;
    let b = dmax(n2)?;
    Ok((joint.dmax_bits - a.dmax_bits - b.dmax_bits).abs())
}
