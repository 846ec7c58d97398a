//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single pass/fail line; a failed assertion marks the criterion failed.

use commres_core::linalg::{ComplexMatrix, HermitianOperator, SubsystemDims};
use commres_core::{capacity, channels, comb, discrimination, resource, rng, sdp};
use commres_core::{QuantumChannel, SdpProblem, SolveStatus};

struct Criterion {
    label: &'static str,
    failed: bool,
}

impl Criterion {
    fn new(label: &'static str) -> Self {
        Self { label, failed: false }
    }

    fn expect(&mut self, ok: bool, what: &str) {
        if !ok {
            self.failed = true;
            println!("  FAILED: {what}");
        }
    }
}

impl Drop for Criterion {
    fn drop(&mut self) {
        let verdict = if self.failed { "fail" } else { "pass" };
        println!("acceptance: {} ... {verdict}", self.label);
        if self.failed && !std::thread::panicking() {
            panic!("criterion failed: {}", self.label);
        }
    }
}

fn random_qubit_channel(seed: u64) -> QuantumChannel {
    let d_env = 2 + (seed % 3) as usize;
    QuantumChannel::from_random_isometry(2, 2, d_env, seed).expect("valid dims")
}

#[test]
fn criterion_1_resource_measure_exactness() {
    let mut c = Criterion::new("1 resource-measure exactness");
    let mut r = rng::seeded(101);
    for d in [2usize, 3, 4] {
        let bits = resource::dmax(&QuantumChannel::identity(d)).unwrap().dmax_bits;
        c.expect(
            (bits - 2.0 * (d as f64).log2()).abs() < 1e-7,
            &format!("identity({d}) measure {bits}"),
        );
        let sigma = rng::random_density(&mut r, d);
        let constant = QuantumChannel::constant(&sigma, d).unwrap();
        let bits = resource::dmax(&constant).unwrap().dmax_bits;
        c.expect(bits.abs() < 1e-7, &format!("constant({d}) measure {bits}"));
    }
    for d in [2usize, 3] {
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let n = QuantumChannel::depolarizing(p, d).unwrap();
            let bits = resource::dmax(&n).unwrap().dmax_bits;
            let expected = ((1.0 - p) * (d * d) as f64 + p).log2();
            c.expect(
                (bits - expected).abs() < 1e-6,
                &format!("depolarizing({p}, {d}): {bits} vs {expected}"),
            );
        }
    }
}

#[test]
fn criterion_2_duality_and_cross_formulations() {
    let mut c = Criterion::new("2 duality and cross-formulation agreement");
    for seed in 0..50u64 {
        let n = random_qubit_channel(200 + seed);
        let rep = resource::dmax(&n).unwrap();
        c.expect(rep.gap <= 1e-7, &format!("seed {seed}: gap {}", rep.gap));
        let imax = resource::imax(&n).unwrap();
        c.expect(
            (imax - rep.dmax_bits).abs() <= 1e-6,
            &format!("seed {seed}: imax {imax} vs {}", rep.dmax_bits),
        );
        let (overlap, _) = resource::recovery_overlap(&n).unwrap();
        c.expect(
            (overlap - (1.0 + rep.robustness)).abs() <= 1e-6,
            &format!("seed {seed}: overlap {overlap} vs {}", 1.0 + rep.robustness),
        );
    }
}

#[test]
fn criterion_3_additivity() {
    let mut c = Criterion::new("3 additivity under tensor products");
    for seed in 0..10u64 {
        let n1 = random_qubit_channel(300 + seed);
        let n2 = random_qubit_channel(350 + seed);
        let dev = resource::check_additivity(&n1, &n2).unwrap();
        c.expect(dev <= 1e-6, &format!("seed {seed}: deviation {dev}"));
    }
    let id2 = QuantumChannel::identity(2);
    let joint = resource::dmax(&id2.tensor(&id2)).unwrap().dmax_bits;
    c.expect((joint - 4.0).abs() < 1e-6, &format!("id⊗id bits {joint}"));
    let dep1 = QuantumChannel::depolarizing(0.5, 2).unwrap();
    let dep2 = QuantumChannel::depolarizing(0.25, 2).unwrap();
    let joint = resource::dmax(&dep1.tensor(&dep2)).unwrap().dmax_bits;
    let expected = (2.5f64 * 3.25).log2();
    c.expect(
        (joint - expected).abs() < 1e-6,
        &format!("depolarizing pair bits {joint} vs {expected}"),
    );
}

#[test]
fn criterion_4_discrimination_certificate() {
    let mut c = Criterion::new("4 discrimination advantage equals one plus robustness");
    let mut fixed = vec![
        QuantumChannel::identity(2),
        QuantumChannel::identity(3),
        QuantumChannel::depolarizing(0.5, 2).unwrap(),
    ];
    let mut channels: Vec<QuantumChannel> = (0..20u64).map(|s| random_qubit_channel(400 + s)).collect();
    channels.append(&mut fixed);
    let mut r = rng::seeded(404);
    for (i, n) in channels.iter().enumerate() {
        let (ratio, _, _) = discrimination::theorem1_certificate(n).unwrap();
        let expected = 1.0 + resource::dmax(n).unwrap().robustness;
        c.expect(
            (ratio - expected).abs() <= 1e-6,
            &format!("channel {i}: ratio {ratio} vs {expected}"),
        );
        if i == 22 {
            c.expect((ratio - 2.5).abs() <= 1e-6, &format!("depolarizing ratio {ratio}"));
        }
        // The advantage bound for ensembles without ancilla.
        if n.d_in() != 2 {
            continue;
        }
        for t in 0..500 {
            let k = 2 + rng::uniform_usize(&mut r, 3);
            let mut weights: Vec<f64> = (0..k)
                .map(|_| 0.05 + rng::uniform_usize(&mut r, 1000) as f64)
                .collect();
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            let states: Vec<HermitianOperator> = (0..k)
                .map(|_| {
                    rng::random_density(&mut r, 2)
                        .with_dims(SubsystemDims::new(vec![1, 2]))
                        .unwrap()
                })
                .collect();
            let a = discrimination::StateEnsemble::new(
                weights,
                states,
                SubsystemDims::new(vec![1, 2]),
            )
            .unwrap();
            let (succ, _) = discrimination::p_succ_optimal(&a, n, false).unwrap();
            let advantage = succ / discrimination::p_guess(&a);
            c.expect(
                advantage <= expected + 1e-6,
                &format!("channel {i}, ensemble {t}: advantage {advantage} vs {expected}"),
            );
        }
    }
}

#[test]
fn criterion_5_ns_combs_and_signalling_witnesses() {
    let mut c = Criterion::new("5 non-signalling combs preserve constancy; signalling is witnessed");
    for seed in 0..20u64 {
        let ns = comb::random_ns_comb((2, 2, 2, 2), 500 + seed).unwrap();
        c.expect(
            comb::is_free_superchannel(&ns, 1e-7),
            &format!("seed {seed}: sampled comb not constancy-preserving"),
        );
        let sig = comb::random_signalling_comb(2, 550 + seed);
        match comb::signalling_witness(&sig).unwrap() {
            Some(w) => c.expect(
                w.separation > 1e-4,
                &format!("seed {seed}: separation {}", w.separation),
            ),
            None => c.expect(false, &format!("seed {seed}: no witness found")),
        }
    }
}

#[test]
fn criterion_6_coding_converse() {
    let mut c = Criterion::new("6 one-shot coding against the converse bound");
    let id2 = QuantumChannel::identity(2);
    let m = capacity::ns_oneshot_capacity(&id2, 0.0, 6).unwrap();
    c.expect(m == 4, &format!("identity(2) capacity {m}"));
    let r = capacity::ns_success(&id2, 5).unwrap();
    c.expect((r.success - 0.8).abs() <= 1e-6, &format!("identity(2) M=5 success {}", r.success));
    for seed in 0..30u64 {
        let n = random_qubit_channel(600 + seed);
        for (eps, delta) in [(0.0, 0.0), (0.2, 0.0), (0.2, 0.1)] {
            let m = capacity::ns_oneshot_capacity(&n, eps, 4).unwrap();
            let bound = capacity::theorem2_bound(&n, eps, delta).unwrap();
            c.expect(
                (m as f64).log2() <= bound + 1e-6,
                &format!("seed {seed}, eps {eps}, delta {delta}: log2 {m} vs {bound}"),
            );
        }
    }
}

#[test]
fn criterion_7_simulation_cost() {
    let mut c = Criterion::new("7 simulation cost with validated construction");
    for (n, expected) in [
        (QuantumChannel::identity(2), 2usize),
        (QuantumChannel::identity(3), 3),
        (QuantumChannel::identity(4), 4),
        (QuantumChannel::depolarizing(0.5, 2).unwrap(), 2),
    ] {
        let r = capacity::simulation_cost(&n, 0.0).unwrap();
        c.expect(r.k == expected, &format!("cost {} vs {expected}", r.k));
        c.expect(r.achieved_error <= 1e-6, &format!("error {}", r.achieved_error));
        c.expect(
            comb::is_free_superchannel(&r.superchannel, 1e-7),
            "construction not free",
        );
    }
    for seed in 0..10u64 {
        let n = random_qubit_channel(700 + seed);
        for eps in [0.0, 0.1] {
            let r = capacity::simulation_cost(&n, eps).unwrap();
            let bits = resource::dmax_smoothed(&n, eps).unwrap().dmax_bits;
            let target = (0.5 * bits).exp2();
            c.expect(
                (r.k as f64) + 1e-6 >= target && ((r.k as f64) - 1.0) < target * (1.0 + 1e-9),
                &format!("seed {seed}, eps {eps}: k {} vs 2^(bits/2) {target}", r.k),
            );
            c.expect(
                r.achieved_error <= eps + 1e-6,
                &format!("seed {seed}, eps {eps}: error {}", r.achieved_error),
            );
            c.expect(
                comb::is_free_superchannel(&r.superchannel, 1e-7),
                &format!("seed {seed}, eps {eps}: construction not free"),
            );
            if r.k >= 2 {
                c.expect(
                    !capacity::cost_lower_bound_check(&n, eps, r.k - 1).unwrap(),
                    &format!("seed {seed}, eps {eps}: cost undercut at {}", r.k - 1),
                );
            }
        }
    }
}

#[test]
fn criterion_8_monotonicity_and_lipschitz() {
    let mut c = Criterion::new("8 smoothed-measure monotonicity and diamond Lipschitz bound");
    let eps = 0.1;
    for seed in 0..100u64 {
        let n = random_qubit_channel(800 + seed);
        let free = if seed % 5 == 0 {
            comb::random_ns_comb((2, 2, 2, 2), 850 + seed).unwrap()
        } else {
            comb::random_free_sandwich((2, 2, 2, 2), 850 + seed)
                .unwrap()
                .to_comb()
                .unwrap()
        };
        let before = resource::dmax_smoothed(&n, eps).unwrap().dmax_bits;
        let image = comb::apply_comb(&free, &n).unwrap();
        let after = resource::dmax_smoothed(&image, eps).unwrap().dmax_bits;
        c.expect(
            after <= before + 1e-6,
            &format!("seed {seed}: {after} vs {before}"),
        );
    }
    for seed in 0..50u64 {
        let n = random_qubit_channel(900 + seed);
        let m = random_qubit_channel(950 + seed);
        let a = if seed % 2 == 0 {
            discrimination::pauli_ensemble(2)
        } else {
            let mut r = rng::seeded(seed);
            let states: Vec<HermitianOperator> = (0..2)
                .map(|_| {
                    rng::random_density(&mut r, 2)
                        .with_dims(SubsystemDims::new(vec![1, 2]))
                        .unwrap()
                })
                .collect();
            discrimination::StateEnsemble::new(
                vec![0.5, 0.5],
                states,
                SubsystemDims::new(vec![1, 2]),
            )
            .unwrap()
        };
        let slack = discrimination::lipschitz_check(&a, &n, &m).unwrap();
        c.expect(slack <= 1e-6, &format!("seed {seed}: slack {slack}"));
    }
}

#[test]
fn criterion_9_solver_health() {
    let mut c = Criterion::new("9 solver health on random feasible programs");
    let mut r = rng::seeded(999);
    for trial in 0..50 {
        let n = 3 + rng::uniform_usize(&mut r, 3);
        let mut p = SdpProblem::new(vec![n]);
        let x0 = rng::random_density(&mut r, n)
            .mat()
            .add(&ComplexMatrix::identity(n).scale_re(0.15));
        let mut obj = rng::random_density(&mut r, n)
            .mat()
            .add(&ComplexMatrix::identity(n).scale_re(0.2));
        let mut rows = Vec::new();
        for _ in 0..(2 + trial % 4) {
            let a = rng::random_hermitian(&mut r, n);
            let b = a.mat().inner(&x0);
            let y0 = rng::gaussian(&mut r);
            obj = obj.add(&a.mat().scale_re(y0));
            rows.push((a, b));
        }
        p.set_objective_matrix(0, obj);
        for (a, b) in &rows {
            p.add_constraint_dense(&[(0, a.mat())], *b);
        }
        let sol = sdp::solve(&p, sdp::DEFAULT_TOL);
        c.expect(
            sol.status == SolveStatus::Optimal,
            &format!("trial {trial}: status {:?}", sol.status),
        );
        c.expect(
            sol.gap <= 1e-7 * (1.0 + sol.primal_value.abs()),
            &format!("trial {trial}: gap {}", sol.gap),
        );
        let mut resid = 0.0f64;
        for (a, b) in &rows {
            resid = resid.max((a.mat().inner(sol.x[0].mat()) - b).abs() / (1.0 + b.abs()));
        }
        c.expect(resid <= 1e-7, &format!("trial {trial}: residual {resid}"));
    }
    let id2 = QuantumChannel::identity(2);
    for k in 1..=9u32 {
        let p = 0.1 * k as f64;
        let dep = QuantumChannel::depolarizing(p, 2).unwrap();
        let dist = channels::diamond_dist(&id2, &dep).unwrap();
        c.expect(
            (dist - 1.5 * p).abs() <= 1e-6,
            &format!("p {p}: diamond {dist} vs {}", 1.5 * p),
        );
    }
}
