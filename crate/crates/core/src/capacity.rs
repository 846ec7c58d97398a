//! One-shot classical coding with non-signalling assistance and one-shot
//! channel simulation from noiseless identities.
//!
//! The coding side maximizes the average success probability of sending M
//! classical messages through one use of a channel inside a non-signalling
//! bipartite operation; the optimum reduces to a small SDP over an effect
//! E and an input state ρ, from which an explicit optimal comb is rebuilt.
//! The simulation side inverts the question: how large an identity channel
//! must be fed into a free (constancy-preserving) superchannel to reproduce
//! the target within a given diamond-norm error.

use serde::Serialize;

use crate::channels::{self, ChannelError, QuantumChannel, Result};
use crate::comb::{self, NsComb};
use crate::linalg::{
    max_entangled, min_eigenvalue, ComplexMatrix, HermitianOperator, SubsystemDims,
};
use crate::resource;
use crate::sdp::{self, SdpProblem, SolveStatus, SparseEntry};

/// Outcome of the one-shot coding SDP for a fixed message count.
#[derive(Debug, Clone, Serialize)]
pub struct CodingResult {
    /// Number of classical messages.
    #[serde(rename = "M")]
    pub m: usize,
    /// Optimal average success probability over non-signalling codes.
    pub success: f64,
    /// 1 − success.
    pub error: f64,
    /// Converse ceiling in bits at the achieved error and zero smoothing.
    #[serde(rename = "bound_bits")]
    pub bound_rhs_bits: f64,
    /// Optimal code as an explicit comb.
    #[serde(skip)]
    pub comb: NsComb,
}

/// Outcome of a channel-simulation query.
#[derive(Debug, Clone, Serialize)]
pub struct DilutionResult {
    /// Identity-channel dimension consumed by the simulation.
    pub k: usize,
    /// Diamond distance between the simulation and the target.
    pub achieved_error: f64,
    /// Free superchannel turning id_k into the simulation.
    #[serde(skip)]
    pub superchannel: NsComb,
}

/// Best average success probability for M messages through `n` with a
/// non-signalling assisted code.
///
/// Reduced program: max Tr[J_N E] over 0 ⪯ E ⪯ ρ ⊗ I_B, Tr ρ = 1,
/// Tr_A E = I_B/M; the maximizing pair (E, ρ) is lifted back to a comb that
/// is classical on the message wires.
pub fn ns_success(n: &QuantumChannel, m_count: usize) -> Result<CodingResult> {
    if m_count < 1 {
        return Err(ChannelError::ParamOutOfRange("need at least one message".into()));
    }
    let (d_a, d_b) = (n.d_in(), n.d_out());
    let side = d_a * d_b;
    if m_count * m_count * side > 256 {
        return Err(ChannelError::ParamOutOfRange(format!(
            "comb Choi side {} exceeds the supported 256",
            m_count * m_count * side
        )));
    }
    // Blocks: 0 = E, 1 = ρ⊗I − E, 2 = ρ.
    let mut p = SdpProblem::new(vec![side, side, d_a]);
    p.set_objective_matrix(0, n.choi().mat().scale_re(-1.0));
    // E + F − ρ ⊗ I = 0.
    for gen in sdp::hermitian_basis_entries(side) {
        let mut entries = Vec::new();
        for &(r, c, v) in &gen {
            entries.push(SparseEntry::new(0, r, c, v));
            entries.push(SparseEntry::new(1, r, c, v));
            let (ra, rb) = (r / d_b, r % d_b);
            let (ca, cb) = (c / d_b, c % d_b);
            if rb == cb {
                entries.push(SparseEntry::new(2, ra, ca, -v));
            }
        }
        p.add_constraint_entries(entries, 0.0);
    }
    // Tr ρ = 1.
    let trace_row: Vec<SparseEntry> = (0..d_a)
        .map(|i| SparseEntry::new(2, i, i, num_complex::Complex64::new(1.0, 0.0)))
        .collect();
    p.add_constraint_entries(trace_row, 1.0);
    // Tr_A E = I_B / M.
    for gen in sdp::hermitian_basis_entries(d_b) {
        let diag = gen[0].0 == gen[0].1;
        let mut entries = Vec::new();
        for &(r, c, v) in &gen {
            for a in 0..d_a {
                entries.push(SparseEntry::new(0, a * d_b + r, a * d_b + c, v));
            }
        }
        p.add_constraint_entries(entries, if diag { 1.0 / m_count as f64 } else { 0.0 });
    }
    let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
    if sol.status != SolveStatus::Optimal {
        return Err(ChannelError::Solver(sol.status));
    }
    let success = (-(sol.primal_value + sol.dual_value) * 0.5).clamp(1.0 / m_count as f64, 1.0);
    let comb = code_comb(n, m_count, &sol.x[0], &sol.x[2])?;
    let error = 1.0 - success;
    let bound_rhs_bits = theorem2_bound(n, error.min(1.0 - 1e-12), 0.0)?;
    Ok(CodingResult { m: m_count, success, error, bound_rhs_bits, comb })
}

/// Rebuilds an optimal non-signalling code comb from the reduced-SDP
/// optimizer: the comb is classical on the message wires, sends E (up to
/// transposition) when the decoded message matches the sent one and an equal
/// share of the remainder ρ ⊗ I − E otherwise.
fn code_comb(
    n: &QuantumChannel,
    m_count: usize,
    e: &HermitianOperator,
    rho: &HermitianOperator,
) -> Result<NsComb> {
    let (d_a, d_b) = (n.d_in(), n.d_out());
    let e_t = e.mat().transpose();
    let rest = rho
        .mat()
        .transpose()
        .kron(&ComplexMatrix::identity(d_b))
        .sub(&e_t);
    let side = m_count * d_b * d_a * m_count;
    let dims = SubsystemDims::new(vec![m_count, d_b, d_a, m_count]);
    let mut j = ComplexMatrix::zeros(side, side);
    for m in 0..m_count {
        for mh in 0..m_count {
            let block = if m == mh {
                e_t.clone()
            } else {
                rest.scale_re(1.0 / (m_count.max(2) - 1) as f64)
            };
            // `block` lives on (A_o, B_i); the comb orders its middle wires
            // (B_i, A_o).
            for bi in 0..d_b {
                for ao in 0..d_a {
                    for bi2 in 0..d_b {
                        for ao2 in 0..d_a {
                            let r = ((m * d_b + bi) * d_a + ao) * m_count + mh;
                            let c = ((m * d_b + bi2) * d_a + ao2) * m_count + mh;
                            j.set(r, c, block.get(ao * d_b + bi, ao2 * d_b + bi2));
                        }
                    }
                }
            }
        }
    }
    // Clear tiny solver negativity before validating the comb.
    let h = HermitianOperator::new_symmetrized(j.hermitian_part(), dims.clone())?;
    if min_eigenvalue(&h) < -1e-7 {
        return Err(ChannelError::Solver(SolveStatus::NumericalFailure));
    }
    let repaired = channels::repair_choi(m_count * d_b, d_a * m_count, h.mat())?;
    NsComb::from_bipartite_channel(&repaired, (m_count, d_a, d_b, m_count))
}

/// Same optimum computed directly as an SDP over the full comb Choi; used to
/// cross-check the reduced formulation.
#[allow(dead_code)]
pub(crate) fn ns_success_direct(n: &QuantumChannel, m_count: usize) -> Result<f64> {
    let (d_a, d_b) = (n.d_in(), n.d_out());
    let dims = (m_count, d_a, d_b, m_count);
    let side = m_count * d_b * d_a * m_count;
    // Objective in comb ordering (A_i, B_i, A_o, B_o): success is linear in
    // the comb Choi with weight (1/M) Σ_m |m⟩⟨m| ⊗ J_Nᵀ ⊗ |m⟩⟨m|.
    let j_t = n.choi().mat().transpose();
    let mut w = ComplexMatrix::zeros(side, side);
    for m in 0..m_count {
        for bi in 0..d_b {
            for ao in 0..d_a {
                for bi2 in 0..d_b {
                    for ao2 in 0..d_a {
                        let r = ((m * d_b + bi) * d_a + ao) * m_count + m;
                        let c = ((m * d_b + bi2) * d_a + ao2) * m_count + m;
                        w.set(
                            r,
                            c,
                            j_t.get(ao * d_b + bi, ao2 * d_b + bi2) / m_count as f64,
                        );
                    }
                }
            }
        }
    }
    let mut p = SdpProblem::new(vec![side]);
    p.set_objective_matrix(0, w.scale_re(-1.0));
    for (a, b) in comb::comb_constraint_rows(dims, true) {
        p.add_constraint_dense(&[(0, &a)], b);
    }
    let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
    if sol.status != SolveStatus::Optimal {
        return Err(ChannelError::Solver(sol.status));
    }
    Ok(-(sol.primal_value + sol.dual_value) * 0.5)
}

/// Largest message count M ≤ `m_max` whose optimal coding error stays within
/// `eps`. The success probability is non-increasing in M, so a linear scan
/// with early exit is exact.
pub fn ns_oneshot_capacity(n: &QuantumChannel, eps: f64, m_max: usize) -> Result<usize> {
    if !(0.0..1.0).contains(&eps) {
        return Err(ChannelError::ParamOutOfRange("eps must lie in [0, 1)".into()));
    }
    let mut best = 1;
    for m in 2..=m_max.max(1) {
        let r = ns_success(n, m)?;
        if r.error <= eps + 1e-8 {
            best = m;
        } else {
            break;
        }
    }
    Ok(best)
}

/// Converse ceiling on one-shot non-signalling capacity in bits:
/// smoothed measure at radius `delta` plus log₂ 1/(1 − eps − delta/2).
pub fn theorem2_bound(n: &QuantumChannel, eps: f64, delta: f64) -> Result<f64> {
    if delta < 0.0 || eps < 0.0 {
        return Err(ChannelError::ParamOutOfRange("eps and delta must be nonnegative".into()));
    }
    if eps + delta / 2.0 >= 1.0 {
        return Err(ChannelError::ParamOutOfRange(
            "eps + delta/2 must stay below 1".into(),
        ));
    }
    let rep = resource::dmax_smoothed(n, delta)?;
    Ok(rep.dmax_bits + (1.0 / (1.0 - eps - delta / 2.0)).log2())
}

/// Smallest identity dimension from which a free superchannel reproduces `n`
/// within diamond error `eps`, together with the explicit superchannel.
///
/// The cost is ⌈2^{smoothed-measure/2}⌉; the superchannel first performs the
/// entangled test {Φ, I − Φ} on the plugged channel and then emits either the
/// measure-achieving channel N′ or the complementary free mixture
/// L = (k²·Ξ_σ − N′)/(k² − 1).
pub fn simulation_cost(n: &QuantumChannel, eps: f64) -> Result<DilutionResult> {
    let rep = resource::dmax_smoothed(n, eps)?;
    let k = cost_from_bits(rep.dmax_bits);
    let n_prime = rep.achieving.clone().unwrap_or_else(|| n.clone());
    let (d_a, d_b) = (n.d_in(), n.d_out());
    let kk = (k * k) as f64;

    let tr_t = rep.primal_t.trace();
    let sigma = HermitianOperator::new_symmetrized(
        rep.primal_t.mat().scale_re(1.0 / tr_t),
        SubsystemDims::single(d_b),
    )?;
    let l = if k > 1 {
        let raw = ComplexMatrix::identity(d_a)
            .kron(sigma.mat())
            .scale_re(kk)
            .sub(n_prime.choi().mat())
            .scale_re(1.0 / (kk - 1.0));
        let raw_h = HermitianOperator::new_symmetrized(raw, SubsystemDims::new(vec![d_a, d_b]))?;
        if min_eigenvalue(&raw_h) < -1e-7 {
            return Err(ChannelError::Solver(SolveStatus::NumericalFailure));
        }
        channels::repair_choi(d_a, d_b, raw_h.mat())?
    } else {
        // k = 1: the complementary branch has weight zero for every input.
        QuantumChannel::constant(&sigma, d_a)?
    };

    let superchannel = measure_and_prepare_comb(k, &n_prime, &l)?;
    let simulated = comb::apply_comb(&superchannel, &QuantumChannel::identity(k))?;
    let achieved_error = channels::diamond_dist(&simulated, n)?;
    if achieved_error > eps + 1e-6 {
        return Err(ChannelError::Solver(SolveStatus::NumericalFailure));
    }
    Ok(DilutionResult { k, achieved_error, superchannel })
}

fn cost_from_bits(bits: f64) -> usize {
    let v = (0.5 * bits).exp2();
    let rounded = v.round();
    let k = if (v - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded
    } else {
        v.ceil()
    };
    k.max(1.0) as usize
}

/// Comb whose superchannel action on a k → k channel Λ is
/// (Tr[Γ J_Λ]/k²)·N′ + (Tr[(kI − Γ)J_Λ]/k²)·L with Γ the unnormalized
/// maximally entangled projector; the coefficients sum to one for every
/// trace-preserving Λ and equal (1/k², 1 − 1/k²) for every constant one.
fn measure_and_prepare_comb(
    k: usize,
    n_prime: &QuantumChannel,
    l: &QuantumChannel,
) -> Result<NsComb> {
    let (d_a, d_b) = (n_prime.d_in(), n_prime.d_out());
    let gamma = max_entangled(k, false);
    let kk = (k * k) as f64;
    let complement = ComplexMatrix::identity(k * k)
        .scale_re(k as f64)
        .sub(gamma.mat());
    let mid = k * k;
    let side = d_a * mid * d_b;
    // Ordering (A_i, A_o, B_i, B_o): outer factors carry the emitted channel,
    // the middle (A_o, B_i) factor carries the test effect (Γ or kI − Γ are
    // symmetric, so no transpose is needed).
    let mut c = ComplexMatrix::zeros(side, side);
    for (test, emit) in [(gamma.mat(), n_prime.choi()), (&complement, l.choi())] {
        for ai in 0..d_a {
            for ai2 in 0..d_a {
                for bo in 0..d_b {
                    for bo2 in 0..d_b {
                        let kv = emit.mat().get(ai * d_b + bo, ai2 * d_b + bo2);
                        if kv.norm() < 1e-300 {
                            continue;
                        }
                        for mm in 0..mid {
                            for mm2 in 0..mid {
                                let mv = test.get(mm, mm2);
                                if mv.norm() < 1e-300 {
                                    continue;
                                }
                                let r = (ai * mid + mm) * d_b + bo;
                                let cidx = (ai2 * mid + mm2) * d_b + bo2;
                                let old = c.get(r, cidx);
                                c.set(r, cidx, old + kv * mv / kk);
                            }
                        }
                    }
                }
            }
        }
    }
    let ordered = HermitianOperator::new_symmetrized(
        c.hermitian_part(),
        SubsystemDims::new(vec![d_a, k, k, d_b]),
    )?;
    let comb_choi = crate::linalg::permute_subsystems(&ordered, &[0, 2, 1, 3])?;
    NsComb::new((d_a, k, k, d_b), comb_choi)
}

/// True iff a claimed simulation cost `k` is not undercut by the converse:
/// 2^{smoothed-measure/2} ≤ k up to 1e-9 relative slack.
pub fn cost_lower_bound_check(n: &QuantumChannel, eps: f64, k: usize) -> Result<bool> {
    let rep = resource::dmax_smoothed(n, eps)?;
    Ok((0.5 * rep.dmax_bits).exp2() <= k as f64 * (1.0 + 1e-9))
}

/// Per-copy smoothed measure of tensor powers N^⊗n for n = 1..n_max,
/// illustrating the regularized trend.
pub fn tensor_power_trend(
    n: &QuantumChannel,
    n_max: usize,
    delta: f64,
) -> Result<Vec<(usize, f64)>> {
    if n_max == 0 || n_max > 3 {
        return Err(ChannelError::ParamOutOfRange("n_max must lie in 1..=3".into()));
    }
    let top = (n.d_in() * n.d_out()).pow(n_max as u32);
    if top > 64 {
        return Err(ChannelError::ParamOutOfRange(format!(
            "tensor power Choi side {top} exceeds the supported 64"
        )));
    }
    let mut out = Vec::new();
    let mut power = n.clone();
    for copies in 1..=n_max {
        let rep = resource::dmax_smoothed(&power, delta)?;
        out.push((copies, rep.dmax_bits / copies as f64));
        if copies < n_max {
            power = power.tensor(n);
        }
    }
    Ok(out)
}
