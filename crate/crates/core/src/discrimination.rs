//! State-ensemble discrimination through a channel.
//!
//! An ensemble {p_i, σ_i} on ancilla ⊗ input is sent through id ⊗ N and the
//! receiver measures with a POVM to identify the index. The best success
//! probability is an SDP over the measurement; its advantage over blind
//! guessing is bounded by (and, for the Weyl-rotated maximally entangled
//! ensemble with the dual-witness measurement, exactly equals) one plus the
//! robustness of the channel.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channels::{diamond_dist, ChannelError, QuantumChannel, Result};
use crate::linalg::{
    max_entangled, min_eigenvalue, partial_trace, weyl_operators, ComplexMatrix,
    HermitianOperator, SubsystemDims,
};
use crate::resource;
use crate::sdp::{self, SdpProblem, SolveStatus, SparseEntry};

/// Labelled states {p_i, σ_i} on E ⊗ A (ancilla ⊗ channel input).
#[derive(Debug, Clone)]
pub struct StateEnsemble {
    weights: Vec<f64>,
    states: Vec<HermitianOperator>,
    dims: SubsystemDims,
}

impl StateEnsemble {
    pub fn new(
        weights: Vec<f64>,
        states: Vec<HermitianOperator>,
        dims: SubsystemDims,
    ) -> Result<Self> {
        if weights.len() != states.len() || weights.is_empty() {
            return Err(ChannelError::Spec(
                "ensemble needs matching, nonempty weights and states".into(),
            ));
        }
        if dims.len() != 2 {
            return Err(ChannelError::Spec("ensemble dims must be (E, A)".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 || weights.iter().any(|&w| w < 0.0) {
            return Err(ChannelError::Spec("weights must form a distribution".into()));
        }
        for s in &states {
            if s.side() != dims.total() {
                return Err(ChannelError::DimensionMismatch(
                    "ensemble state side does not match dims".into(),
                ));
            }
            if (s.trace() - 1.0).abs() > 1e-9 || min_eigenvalue(s) < -1e-9 {
                return Err(ChannelError::InvalidState(
                    "ensemble members must be density matrices".into(),
                ));
            }
        }
        Ok(Self { weights, states, dims })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[HermitianOperator] {
        &self.states
    }

    pub fn d_e(&self) -> usize {
        self.dims.dims()[0]
    }

    pub fn d_a(&self) -> usize {
        self.dims.dims()[1]
    }
}

/// Measurement: PSD effects summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    effects: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(effects: Vec<HermitianOperator>) -> Result<Self> {
        if effects.is_empty() {
            return Err(ChannelError::Spec("POVM needs at least one effect".into()));
        }
        let side = effects[0].side();
        let mut sum = ComplexMatrix::zeros(side, side);
        for e in &effects {
            if e.side() != side {
                return Err(ChannelError::DimensionMismatch(
                    "POVM effects must share one side".into(),
                ));
            }
            if min_eigenvalue(e) < -1e-9 {
                return Err(ChannelError::InvalidState("POVM effect not PSD".into()));
            }
            sum = sum.add(e.mat());
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(side));
        if dev > 1e-8 {
            return Err(ChannelError::InvalidState(format!(
                "POVM effects sum deviates from identity by {dev:.3e}"
            )));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }
}

/// Best blind guess: max_i p_i.
pub fn p_guess(a: &StateEnsemble) -> f64 {
    a.weights.iter().cloned().fold(0.0, f64::max)
}

/// Success probability of a fixed measurement on the channel outputs.
pub fn p_succ_with(a: &StateEnsemble, n: &QuantumChannel, povm: &Povm) -> Result<f64> {
    let mut total = 0.0;
    for ((w, s), m) in a.weights.iter().zip(&a.states).zip(&povm.effects) {
        let out = n.apply(s, &[a.d_e()])?;
        total += w * out.mat().inner(m.mat());
    }
    Ok(total)
}

/// Optimal discrimination of the ensemble through id_E ⊗ N: one SDP with a
/// block per effect and the completeness constraint Σ M_i = I as equality
/// rows. With `ancilla` unset the ensemble must have a trivial E part.
pub fn p_succ_optimal(
    a: &StateEnsemble,
    n: &QuantumChannel,
    ancilla: bool,
) -> Result<(f64, Povm)> {
    if !ancilla && a.d_e() != 1 {
        return Err(ChannelError::DimensionMismatch(
            "ensemble carries an ancilla but the flag forbids it".into(),
        ));
    }
    if a.d_a() != n.d_in() {
        return Err(ChannelError::DimensionMismatch(
            "ensemble A part does not match channel input".into(),
        ));
    }
    let side = a.d_e() * n.d_out();
    let outputs: Vec<HermitianOperator> = a
        .states
        .iter()
        .map(|s| n.apply(s, &[a.d_e()]))
        .collect::<Result<_>>()?;
    let mut p = SdpProblem::new(vec![side; a.len()]);
    for (i, (w, out)) in a.weights.iter().zip(&outputs).enumerate() {
        p.set_objective_matrix(i, out.mat().scale_re(-w));
    }
    for gen in sdp::hermitian_basis_entries(side) {
        let diag = gen[0].0 == gen[0].1;
        let mut entries = Vec::new();
        for &(r, c, v) in &gen {
            for blk in 0..a.len() {
                entries.push(SparseEntry::new(blk, r, c, v));
            }
        }
        p.add_constraint_entries(entries, if diag { 1.0 } else { 0.0 });
    }
    let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
    if sol.status != SolveStatus::Optimal {
        return Err(ChannelError::Solver(sol.status));
    }
    let value = -(sol.primal_value + sol.dual_value) * 0.5;
    let povm = Povm::new(sol.x)?;
    Ok((value.clamp(0.0, 1.0), povm))
}

/// True iff every member has the same ancilla marginal Tr_A σ_i (entrywise
/// within 1e-8) — the ensemble class for which the discrimination advantage
/// is fully characterized by the robustness.
pub fn in_class_e(a: &StateEnsemble) -> Result<bool> {
    let mut reference: Option<HermitianOperator> = None;
    for s in &a.states {
        let marginal = partial_trace(s, &[0])?;
        match &reference {
            None => reference = Some(marginal),
            Some(r) => {
                if marginal.mat().max_abs_diff(r.mat()) > 1e-8 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The d² equiprobable states (P_j ⊗ I)Φ(P_j ⊗ I)† with P_j the Weyl
/// operators acting on the ancilla: all marginals are I/d and blind guessing
/// succeeds with probability 1/d².
pub fn pauli_ensemble(d: usize) -> StateEnsemble {
    assert!(d >= 2, "need dimension at least 2");
    let phi = max_entangled(d, true);
    let ops = weyl_operators(d);
    let id = ComplexMatrix::identity(d);
    let states: Vec<HermitianOperator> = ops
        .iter()
        .map(|p| {
            let u = p.kron(&id);
            HermitianOperator::new_symmetrized(
                u.matmul(phi.mat()).matmul(&u.adjoint()),
                SubsystemDims::new(vec![d, d]),
            )
            .expect("rotated maximally entangled state is Hermitian")
        })
        .collect();
    let m = states.len();
    StateEnsemble::new(vec![1.0 / m as f64; m], states, SubsystemDims::new(vec![d, d]))
        .expect("construction satisfies the ensemble invariants")
}

/// Discrimination certificate achieving the robustness bound: the Weyl
/// ensemble together with the measurement M_j = (P_j ⊗ I) Y′ (P_j ⊗ I)†/d
/// built from the completed dual witness Y′ of the robustness program.
/// Returns (ratio, ensemble, measurement) with ratio = p_succ/p_guess.
pub fn theorem1_certificate(n: &QuantumChannel) -> Result<(f64, StateEnsemble, Povm)> {
    let (d_a, d_b) = (n.d_in(), n.d_out());
    let rep = resource::dmax(n)?;
    let y = rep
        .dual_y
        .as_ref()
        .expect("plain measure always carries the dual witness")
        .with_dims(SubsystemDims::new(vec![d_a, d_b]))?;
    // Complete the witness so Tr_A Y′ = I_B exactly: pad with (I/d) ⊗ Q,
    // Q = I − Tr_A Y, which must be PSD up to solver tolerance.
    let y_b = partial_trace(&y, &[1])?;
    let q = ComplexMatrix::identity(d_b).sub(y_b.mat());
    let q_h = HermitianOperator::new_symmetrized(q, SubsystemDims::single(d_b))?;
    if min_eigenvalue(&q_h) < -1e-6 {
        return Err(ChannelError::InvalidState(
            "dual witness marginal exceeds the identity".into(),
        ));
    }
    let pad = ComplexMatrix::identity(d_a)
        .scale_re(1.0 / d_a as f64)
        .kron(q_h.mat());
    let y_prime = y.mat().add(&pad);

    let ensemble = pauli_ensemble(d_a);
    let ops = weyl_operators(d_a);
    let id_b = ComplexMatrix::identity(d_b);
    let effects: Vec<HermitianOperator> = ops
        .iter()
        .map(|p| {
            let u = p.kron(&id_b);
            let mut m = u.matmul(&y_prime).matmul(&u.adjoint()).scale_re(1.0 / d_a as f64);
            // Clear residual solver negativity so the POVM revalidates.
            let h = HermitianOperator::new_symmetrized(
                m.clone(),
                SubsystemDims::new(vec![d_a, d_b]),
            )
            .expect("conjugated witness is Hermitian");
            let lam = min_eigenvalue(&h);
            if lam < 0.0 && lam > -1e-9 {
                m = m.add(&ComplexMatrix::identity(d_a * d_b).scale_re(-lam));
            }
            HermitianOperator::new_symmetrized(m, SubsystemDims::new(vec![d_a, d_b]))
                .expect("effect is Hermitian")
        })
        .collect();
    // Σ_j (P_j ⊗ I) Y′ (P_j ⊗ I)†/d = I ⊗ Tr_A Y′ = I, so only tiny clipping
    // offsets can disturb completeness; renormalize them away.
    let mut sum = ComplexMatrix::zeros(d_a * d_b, d_a * d_b);
    for e in &effects {
        sum = sum.add(e.mat());
    }
    let correction = ComplexMatrix::identity(d_a * d_b)
        .sub(&sum)
        .scale_re(1.0 / effects.len() as f64);
    let effects = effects
        .into_iter()
        .map(|e| {
            HermitianOperator::new_symmetrized(
                e.mat().add(&correction),
                SubsystemDims::new(vec![d_a, d_b]),
            )
            .expect("corrected effect is Hermitian")
        })
        .collect();
    let povm = Povm::new(effects)?;
    let succ = p_succ_with(&ensemble, n, &povm)?;
    let ratio = succ / p_guess(&ensemble);
    Ok((ratio, ensemble, povm))
}

/// Slack in the diamond-norm Lipschitz bound for discrimination:
/// |p_succ(a, n) − p_succ(a, m)| − ‖n − m‖_◇ / 2, never above zero (up to
/// solver tolerance).
pub fn lipschitz_check(a: &StateEnsemble, n: &QuantumChannel, m: &QuantumChannel) -> Result<f64> {
    let ancilla = a.d_e() > 1;
    let (pn, _) = p_succ_optimal(a, n, ancilla)?;
    let (pm, _) = p_succ_optimal(a, m, ancilla)?;
    Ok((pn - pm).abs() - 0.5 * diamond_dist(n, m)?)
}

/// Serialized ensemble accepted by the command-line tools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub weights: Vec<f64>,
    /// (d_E, d_A)
    pub dims: [usize; 2],
    /// One row-major [re, im] matrix per state.
    pub states: Vec<Vec<[f64; 2]>>,
}

impl EnsembleSpec {
    pub fn to_ensemble(&self) -> Result<StateEnsemble> {
        let side = self.dims[0] * self.dims[1];
        let states = self
            .states
            .iter()
            .map(|flat| {
                if flat.len() != side * side {
                    return Err(ChannelError::Spec(format!(
                        "state needs {} entries, got {}",
                        side * side,
                        flat.len()
                    )));
                }
                let m = ComplexMatrix::from_fn(side, side, |r, c| {
                    let [re, im] = flat[r * side + c];
                    C64::new(re, im)
                });
                Ok(HermitianOperator::new_symmetrized(
                    m,
                    SubsystemDims::new(self.dims.to_vec()),
                )?)
            })
            .collect::<Result<Vec<_>>>()?;
        StateEnsemble::new(
            self.weights.clone(),
            states,
            SubsystemDims::new(self.dims.to_vec()),
        )
    }

    pub fn from_ensemble(a: &StateEnsemble) -> Self {
        Self {
            weights: a.weights.clone(),
            dims: [a.d_e(), a.d_a()],
            states: a
                .states
                .iter()
                .map(|s| s.mat().data().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}
