//! Verification suites: numerical property sweeps runnable from the command
//! line. Each check records a pass flag and a short diagnostic; any failing
//! check turns into exit code 3.

use commres_core::channels::{diamond_dist, ChannelError};
use commres_core::linalg::{
    eig_hermitian, partial_trace, ComplexMatrix, HermitianOperator, SubsystemDims,
};
use commres_core::{capacity, comb, discrimination, resource, rng, sdp};
use commres_core::{QuantumChannel, SdpProblem, SolveStatus};

use crate::Failure;

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), pass, detail: detail.into() }
}

pub fn run_suite(suite: &str, seeds: u64) -> Result<Vec<Check>, Failure> {
    let runner: fn(u64) -> Result<Vec<Check>, ChannelError> = match suite {
        "linalg" => linalg_suite,
        "sdp" => sdp_suite,
        "channels" => channels_suite,
        "resource" => resource_suite,
        "discrimination" => discrimination_suite,
        "prop1" => prop1_suite,
        "theorem1" => theorem1_suite,
        "theorem2" => theorem2_suite,
        "theorem5" => theorem5_suite,
        "lemma1" => lemma1_suite,
        "lemma3" => lemma3_suite,
        "all" => all_suites,
        other => {
            return Err(Failure::invalid(format!("unknown suite {other:?}")));
        }
    };
    runner(seeds).map_err(Failure::from)
}

fn all_suites(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    for suite in [
        linalg_suite,
        sdp_suite,
        channels_suite,
        resource_suite,
        discrimination_suite,
        prop1_suite,
        theorem1_suite,
        theorem2_suite,
        theorem5_suite,
        lemma1_suite,
        lemma3_suite,
    ] {
        out.extend(suite(seeds)?);
    }
    Ok(out)
}

fn linalg_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    for seed in 0..seeds {
        let mut r = rng::seeded(seed);
        let a = rng::random_density(&mut r, 2);
        let b = rng::random_density(&mut r, 3);
        let joint = HermitianOperator::new_symmetrized(
            a.mat().kron(b.mat()),
            SubsystemDims::new(vec![2, 3]),
        )?;
        let dev_a = partial_trace(&joint, &[0])?.mat().max_abs_diff(a.mat());
        let dev_b = partial_trace(&joint, &[1])?.mat().max_abs_diff(b.mat());
        let h = rng::random_hermitian(&mut r, 5);
        let (vals, vecs) = eig_hermitian(&h);
        let mut rebuilt = ComplexMatrix::zeros(5, 5);
        for (k, lam) in vals.iter().enumerate() {
            let col = ComplexMatrix::from_fn(5, 1, |i, _| vecs.get(i, k));
            rebuilt = rebuilt.add(&ComplexMatrix::outer(&col, &col).scale_re(*lam));
        }
        let dev_e = rebuilt.max_abs_diff(h.mat());
        let pass = dev_a < 1e-10 && dev_b < 1e-10 && dev_e < 1e-9;
        out.push(check(
            format!("linalg/seed{seed}"),
            pass,
            format!("partial-trace dev {dev_a:.2e}/{dev_b:.2e}, eig dev {dev_e:.2e}"),
        ));
    }
    Ok(out)
}

fn sdp_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    for seed in 0..seeds {
        let mut r = rng::seeded(1000 + seed);
        let n = 3 + rng::uniform_usize(&mut r, 3);
        let m = 2 + rng::uniform_usize(&mut r, 3);
        let mut p = SdpProblem::new(vec![n]);
        // Interior primal point X0 ≻ 0 fixes feasible right-hand sides; the
        // objective C = S0 + Σ yᵢAᵢ with S0 ≻ 0 keeps the dual strictly
        // feasible, so a bounded optimum exists.
        let x0 = rng::random_density(&mut r, n)
            .mat()
            .add(&ComplexMatrix::identity(n).scale_re(0.1));
        let mut c = rng::random_density(&mut r, n)
            .mat()
            .add(&ComplexMatrix::identity(n).scale_re(0.2));
        let mut rows = Vec::new();
        for _ in 0..m {
            let a = rng::random_hermitian(&mut r, n);
            let b = a.mat().inner(&x0);
            let y0 = rng::uniform_usize(&mut r, 2001) as f64 / 1000.0 - 1.0;
            c = c.add(&a.mat().scale_re(y0));
            rows.push((a, b));
        }
        p.set_objective_matrix(0, c);
        for (a, b) in &rows {
            p.add_constraint_dense(&[(0, a.mat())], *b);
        }
        let sol = sdp::solve(&p, 1e-9);
        let mut resid = 0.0f64;
        for (a, b) in &rows {
            let got = a.mat().inner(sol.x[0].mat());
            resid = resid.max((got - b).abs() / (1.0 + b.abs()));
        }
        let pass = sol.status == SolveStatus::Optimal
            && sol.gap <= 1e-7 * (1.0 + sol.primal_value.abs())
            && resid <= 1e-7;
        out.push(check(
            format!("sdp/seed{seed}"),
            pass,
            format!("status {:?}, gap {:.2e}, residual {resid:.2e}", sol.status, sol.gap),
        ));
    }
    Ok(out)
}

fn channels_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    let id2 = QuantumChannel::identity(2);
    for k in 1..=4u32 {
        let p = 0.2 * k as f64;
        let dep = QuantumChannel::depolarizing(p, 2)?;
        let dist = diamond_dist(&id2, &dep)?;
        let dev = (dist - 1.5 * p).abs();
        out.push(check(
            format!("channels/diamond-depol-p{p:.1}"),
            dev < 1e-6,
            format!("distance {dist:.9} vs {:.9}", 1.5 * p),
        ));
    }
    for seed in 0..seeds {
        let mut r = rng::seeded(2000 + seed);
        let p = rng::uniform_usize(&mut r, 1000) as f64 / 1000.0;
        let q = rng::uniform_usize(&mut r, 1000) as f64 / 1000.0;
        let combined = QuantumChannel::compose(
            &QuantumChannel::depolarizing(q, 2)?,
            &QuantumChannel::depolarizing(p, 2)?,
        )?;
        let expected = QuantumChannel::depolarizing(p + q - p * q, 2)?;
        let dev = combined.choi().mat().max_abs_diff(expected.choi().mat());
        out.push(check(
            format!("channels/compose-seed{seed}"),
            dev < 1e-10,
            format!("Choi deviation {dev:.2e}"),
        ));
    }
    Ok(out)
}

fn resource_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    for d in [2usize, 3] {
        let bits = resource::dmax(&QuantumChannel::identity(d))?.dmax_bits;
        let expected = 2.0 * (d as f64).log2();
        out.push(check(
            format!("resource/identity-d{d}"),
            (bits - expected).abs() < 1e-7,
            format!("{bits:.9} vs {expected:.9}"),
        ));
    }
    for p in [0.25, 0.5, 0.75] {
        let bits = resource::dmax(&QuantumChannel::depolarizing(p, 2)?)?.dmax_bits;
        let expected = ((1.0 - p) * 4.0 + p).log2();
        out.push(check(
            format!("resource/depol-p{p}"),
            (bits - expected).abs() < 1e-6,
            format!("{bits:.9} vs {expected:.9}"),
        ));
    }
    for seed in 0..seeds {
        let n = QuantumChannel::from_random_isometry(2, 2, 2, 3000 + seed)?;
        let d = resource::dmax(&n)?.dmax_bits;
        let i = resource::imax(&n)?;
        out.push(check(
            format!("resource/imax-seed{seed}"),
            (d - i).abs() < 1e-6,
            format!("dmax {d:.9} vs imax {i:.9}"),
        ));
    }
    Ok(out)
}

fn discrimination_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    let basis = {
        let pure = |k: usize| {
            HermitianOperator::new_symmetrized(
                ComplexMatrix::outer(
                    &ComplexMatrix::basis_vector(2, k),
                    &ComplexMatrix::basis_vector(2, k),
                ),
                SubsystemDims::new(vec![1, 2]),
            )
            .expect("pure state")
        };
        discrimination::StateEnsemble::new(
            vec![0.5, 0.5],
            vec![pure(0), pure(1)],
            SubsystemDims::new(vec![1, 2]),
        )?
    };
    for p in [0.2, 0.6, 1.0] {
        let dep = QuantumChannel::depolarizing(p, 2)?;
        let (v, povm) = discrimination::p_succ_optimal(&basis, &dep, false)?;
        let ok = (v - (1.0 - p / 2.0)).abs() < 1e-6
            && discrimination::Povm::new(povm.effects().to_vec()).is_ok();
        out.push(check(
            format!("discrimination/helstrom-p{p}"),
            ok,
            format!("p_succ {v:.9} vs {:.9}", 1.0 - p / 2.0),
        ));
    }
    for seed in 0..seeds.min(8) {
        let mut r = rng::seeded(4000 + seed);
        let sigma = rng::random_density(&mut r, 2);
        let c = QuantumChannel::constant(&sigma, 2)?;
        let a = discrimination::pauli_ensemble(2);
        let (v, _) = discrimination::p_succ_optimal(&a, &c, true)?;
        out.push(check(
            format!("discrimination/constant-seed{seed}"),
            (v - discrimination::p_guess(&a)).abs() < 1e-7,
            format!("p_succ {v:.9}"),
        ));
    }
    Ok(out)
}

fn prop1_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    for seed in 0..seeds {
        let c = comb::random_ns_comb((2, 2, 2, 2), 5000 + seed)?;
        let ns = comb::is_ns_a_to_b(&c, 1e-7) && comb::is_ns_b_to_a(&c, 1e-7);
        let free = comb::is_free_superchannel(&c, 1e-7);
        out.push(check(
            format!("prop1/ns-comb-seed{seed}"),
            ns && free,
            format!("non-signalling {ns}, constancy-preserving {free}"),
        ));

        let s = comb::random_signalling_comb(2, 6000 + seed);
        let witness = comb::signalling_witness(&s)?;
        let (pass, detail) = match witness {
            Some(w) => (w.separation > 1e-4, format!("separation {:.3e}", w.separation)),
            None => (false, "no witness found".into()),
        };
        out.push(check(format!("prop1/witness-seed{seed}"), pass, detail));
    }
    Ok(out)
}

fn theorem1_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    let named: Vec<(String, QuantumChannel)> = vec![
        ("identity2".into(), QuantumChannel::identity(2)),
        ("depol-half".into(), QuantumChannel::depolarizing(0.5, 2)?),
    ];
    for (label, n) in named {
        let (ratio, _, _) = discrimination::theorem1_certificate(&n)?;
        let expected = 1.0 + resource::dmax(&n)?.robustness;
        out.push(check(
            format!("theorem1/{label}"),
            (ratio - expected).abs() <= 1e-6,
            format!("ratio {ratio:.9} vs {expected:.9}"),
        ));
    }
    for seed in 0..seeds {
        let n = QuantumChannel::from_random_isometry(2, 2, 4, 7000 + seed)?;
        let (ratio, _, _) = discrimination::theorem1_certificate(&n)?;
        let expected = 1.0 + resource::dmax(&n)?.robustness;
        out.push(check(
            format!("theorem1/seed{seed}"),
            (ratio - expected).abs() <= 1e-6,
            format!("ratio {ratio:.9} vs {expected:.9}"),
        ));
    }
    Ok(out)
}

fn theorem2_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    let id2 = QuantumChannel::identity(2);
    let m = capacity::ns_oneshot_capacity(&id2, 0.0, 6)?;
    out.push(check(
        "theorem2/identity2-capacity",
        m == 4,
        format!("capacity M = {m}"),
    ));
    for seed in 0..seeds {
        let n = QuantumChannel::from_random_isometry(2, 2, 2, 8000 + seed)?;
        let mut worst: f64 = f64::NEG_INFINITY;
        for (eps, delta) in [(0.0, 0.0), (0.2, 0.0), (0.2, 0.1)] {
            let m = capacity::ns_oneshot_capacity(&n, eps, 4)?;
            let bound = capacity::theorem2_bound(&n, eps, delta)?;
            worst = worst.max((m as f64).log2() - bound);
        }
        out.push(check(
            format!("theorem2/seed{seed}"),
            worst <= 1e-6,
            format!("worst slack {worst:.3e}"),
        ));
    }
    Ok(out)
}

fn theorem5_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    for (label, n, expected) in [
        ("identity2", QuantumChannel::identity(2), 2usize),
        ("identity3", QuantumChannel::identity(3), 3),
        ("depol-half", QuantumChannel::depolarizing(0.5, 2)?, 2),
    ] {
        let r = capacity::simulation_cost(&n, 0.0)?;
        let ok = r.k == expected
            && r.achieved_error <= 1e-6
            && comb::is_free_superchannel(&r.superchannel, 1e-7);
        out.push(check(
            format!("theorem5/{label}"),
            ok,
            format!("k {} (expected {expected}), error {:.3e}", r.k, r.achieved_error),
        ));
    }
    for seed in 0..seeds.min(10) {
        let n = QuantumChannel::from_random_isometry(2, 2, 2, 9000 + seed)?;
        let mut pass = true;
        let mut detail = String::new();
        for eps in [0.0, 0.1] {
            let r = capacity::simulation_cost(&n, eps)?;
            let free = comb::is_free_superchannel(&r.superchannel, 1e-7);
            let converse =
                r.k == 1 || !capacity::cost_lower_bound_check(&n, eps, r.k - 1)?;
            pass &= r.achieved_error <= eps + 1e-6 && free && converse;
            detail = format!("{detail}eps {eps}: k {}, error {:.3e}; ", r.k, r.achieved_error);
        }
        out.push(check(format!("theorem5/seed{seed}"), pass, detail));
    }
    Ok(out)
}

fn lemma1_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    let eps = 0.1;
    for seed in 0..seeds {
        let n = QuantumChannel::from_random_isometry(2, 2, 2, 10_000 + seed)?;
        let free = if seed % 2 == 0 {
            comb::random_ns_comb((2, 2, 2, 2), 11_000 + seed)?
        } else {
            comb::random_free_sandwich((2, 2, 2, 2), 11_000 + seed)?.to_comb()?
        };
        let before = resource::dmax_smoothed(&n, eps)?.dmax_bits;
        let image = comb::apply_comb(&free, &n)?;
        let after = resource::dmax_smoothed(&image, eps)?.dmax_bits;
        out.push(check(
            format!("lemma1/seed{seed}"),
            after <= before + 1e-6,
            format!("before {before:.9}, after {after:.9}"),
        ));
    }
    Ok(out)
}

fn lemma3_suite(seeds: u64) -> Result<Vec<Check>, ChannelError> {
    let mut out = Vec::new();
    for seed in 0..seeds {
        let n = QuantumChannel::from_random_isometry(2, 2, 2, 12_000 + seed)?;
        let m = QuantumChannel::from_random_isometry(2, 2, 4, 13_000 + seed)?;
        let a = discrimination::pauli_ensemble(2);
        let slack = discrimination::lipschitz_check(&a, &n, &m)?;
        out.push(check(
            format!("lemma3/seed{seed}"),
            slack <= 1e-6,
            format!("slack {slack:.3e}"),
        ));
    }
    Ok(out)
}
