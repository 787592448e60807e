//! Randomized invariants of the generator, measurements, manifold and
//! retrieval sampler.

use std::f64::consts::PI;
use std::sync::OnceLock;

use ndarray::Array2;
use proptest::prelude::*;

use qamem::dynamics::geometric_times;
use qamem::fockspace::{coherent_state, lobe_states, CoherentAmplitude, DensityMatrix, FockOperator};
use qamem::harness::build_liouvillian;
use qamem::lindblad::{build_liouvillian_general, lobe_amplitude, LiouvillianForm, ModelParams};
use qamem::memory::retrieval::trial_amplitude;
use qamem::memory::{
    ambiguous_povm_numerical, ambiguous_povm_theoretical, retrieval_experiment, unambiguous_povm, RetrievalOptions,
    Strategy as Readout,
};
use qamem::metastable::{build_phases, quasiprobabilities, MetastableManifold};
use qamem::spectral::{decompose, eigenvalues, SpectralDecomposition};
use qamem::C64;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() }
}

fn params() -> impl Strategy<Value = ModelParams> {
    (1u32..=4, 1u32..=4, -1.0..1.0f64, 0.0..2.0f64, -PI..PI, 0.0..1.5f64, 0.0..0.5f64, 4usize..=9)
        .prop_filter("n < 2m", |(n, m, ..)| n < &(2 * m))
        .prop_map(|(n, m, delta, eta, theta, gamma1, gamma_m, dim)| ModelParams { n, m, delta, eta, theta, gamma1, gamma_m, dim })
}

fn matrix(dim: usize) -> impl Strategy<Value = Array2<C64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim)
        .prop_map(move |v| Array2::from_shape_fn((dim, dim), |(k, l)| C64::new(v[k * dim + l].0, v[k * dim + l].1)))
}

fn density(dim: usize) -> impl Strategy<Value = DensityMatrix> {
    matrix(dim).prop_map(|g| {
        let rho = g.dot(&g.t().mapv(|z| z.conj()));
        let tr = rho.diag().sum();
        DensityMatrix::new(FockOperator::from_array(rho / tr).unwrap()).unwrap()
    })
}

fn params_and_state() -> impl Strategy<Value = (ModelParams, DensityMatrix)> {
    params().prop_flat_map(|p| {
        let d = p.dim;
        (Just(p), density(d))
    })
}

fn small_params_and_state() -> impl Strategy<Value = (ModelParams, DensityMatrix)> {
    params().prop_flat_map(|p| {
        let p = ModelParams { dim: p.dim.min(6), ..p };
        let d = p.dim;
        (Just(p), density(d))
    })
}

fn params_and_matrix() -> impl Strategy<Value = (ModelParams, Array2<C64>)> {
    params().prop_flat_map(|p| {
        let d = p.dim;
        (Just(p), matrix(d))
    })
}

fn memory() -> &'static (SpectralDecomposition, MetastableManifold, Vec<DensityMatrix>) {
    static CELL: OnceLock<(SpectralDecomposition, MetastableManifold, Vec<DensityMatrix>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = ModelParams::symmetric(4, 1.14, 0.1, 26);
        let dec = decompose(&build_liouvillian_general(&p).unwrap(), None).unwrap();
        let man = build_phases(&dec, 4).unwrap();
        let lobes = lobe_states(p.dim, lobe_amplitude(&p).unwrap(), p.n, p.lobe_offset()).unwrap();
        (dec, man, lobes)
    })
}

fn sorted_close(a: &[C64], b: &[C64], tol: f64) -> bool {
    // Greedy multiset matching; eigenvalues are well separated relative to tol here.
    let mut used = vec![false; b.len()];
    a.len() == b.len()
        && a.iter().all(|x| {
            let best = b
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .min_by(|(_, u), (_, v)| (*u - x).norm().total_cmp(&(*v - x).norm()));
            match best {
                Some((i, y)) if (y - x).norm() < tol * x.norm().max(1.0) => {
                    used[i] = true;
                    true
                }
                _ => false,
            }
        })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn generator_output_is_traceless((p, rho) in params_and_state(), form in prop_oneof![Just(LiouvillianForm::General), Just(LiouvillianForm::Shifted)]) {
        // The shifted form exists only for equal orders.
        let p = if form == LiouvillianForm::Shifted { ModelParams { m: p.n, ..p } } else { p };
        let l = build_liouvillian(&p, form).unwrap();
        let out = l.apply(rho.operator());
        let scale = l.frobenius_norm().max(1.0);
        prop_assert!(out.trace().norm() < 1e-10 * scale);
    }

    #[test]
    fn evolution_preserves_trace_and_hermiticity((p, rho) in small_params_and_state()) {
        let dec = decompose(&build_liouvillian_general(&p).unwrap(), None);
        prop_assume!(dec.is_ok());
        let traj = qamem::dynamics::evolve_spectral(&dec.unwrap(), rho.operator(), &[0.0, 0.3, 2.0], true);
        prop_assume!(traj.is_ok());
        for s in traj.unwrap().states.unwrap() {
            prop_assert!((s.trace() - 1.0).norm() < 1e-7);
            prop_assert!(s.hermiticity_error() < 1e-7);
        }
    }

    #[test]
    fn generator_commutes_with_adjoint((p, x) in params_and_matrix()) {
        let l = build_liouvillian_general(&p).unwrap();
        let x = FockOperator::from_array(x).unwrap();
        let lhs = l.apply(&x.adjoint());
        let rhs = l.apply(&x).adjoint();
        prop_assert!((&lhs - &rhs).max_abs() < 1e-10 * l.frobenius_norm().max(1.0));
    }

    #[test]
    fn generator_is_rotation_covariant((p, x) in params_and_matrix()) {
        let l = build_liouvillian_general(&p).unwrap();
        let x = FockOperator::from_array(x).unwrap();
        let angle = 2.0 * PI / p.n as f64;
        let lhs = l.apply(&x.rotated(angle));
        let rhs = l.apply(&x).rotated(angle);
        prop_assert!((&lhs - &rhs).max_abs() < 1e-10 * l.frobenius_norm().max(1.0));
    }

    #[test]
    fn blocked_spectrum_matches_unblocked(p in params()) {
        let p = ModelParams { dim: p.dim.min(6), ..p };
        let l = build_liouvillian_general(&p).unwrap();
        let blocked = eigenvalues(&l).unwrap();
        let full = eigenvalues(&l.with_symmetry_order(1).unwrap()).unwrap();
        prop_assert!(sorted_close(&blocked, &full, 1e-7));
    }

    #[test]
    fn spectrum_is_invariant_under_drive_phase_steps(p in params(), k in 1u32..4) {
        let p = ModelParams { dim: p.dim.min(6), ..p };
        let shifted = ModelParams { theta: p.theta + 2.0 * PI * k as f64 / p.n as f64, ..p.clone() };
        let a = eigenvalues(&build_liouvillian_general(&p).unwrap()).unwrap();
        let b = eigenvalues(&build_liouvillian_general(&shifted).unwrap()).unwrap();
        prop_assert!(sorted_close(&a, &b, 1e-7));
    }

    #[test]
    fn sector_measurements_are_complete(dim in 2usize..30, n in 1u32..9, theta in -PI..PI) {
        let povm = ambiguous_povm_theoretical(dim, n, theta).unwrap();
        prop_assert!(povm.completeness_error() < 1e-10);
        let cut = povm.truncate((dim / 2).max(2).min(dim)).unwrap();
        prop_assert!(cut.completeness_error() < 1e-10);
    }

    #[test]
    fn unambiguous_measurement_is_complete(n in 2u32..6, beta in 2.5..4.0f64, theta in -PI..PI) {
        let dim = 45;
        let lobes = lobe_states(dim, beta, n, theta).unwrap();
        match unambiguous_povm(&lobes) {
            Ok(povm) => {
                prop_assert!(povm.completeness_error() < 1e-10);
                let inc = povm.inconclusive().unwrap();
                let min = inc.hermitian_eigen().unwrap().0[0];
                prop_assert!(min > -1e-10);
            }
            Err(e) => prop_assert!(matches!(e, qamem::Error::OverlappingLobes(_))),
        }
    }

    #[test]
    fn numerical_measurement_probabilities_sum_to_one(re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let (dec, man, _) = memory();
        let povm = ambiguous_povm_numerical(man).unwrap();
        let rho = coherent_state(dec.dim(), CoherentAmplitude::new(C64::new(re, im)).unwrap()).unwrap();
        let probs = povm.probabilities(rho.operator());
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(probs.iter().all(|p| *p > -1e-9 && *p < 1.0 + 1e-9));
    }

    #[test]
    fn quasiprobabilities_are_normalized(re in -2.5..2.5f64, im in -2.5..2.5f64) {
        let (dec, man, _) = memory();
        let rho = coherent_state(dec.dim(), CoherentAmplitude::new(C64::new(re, im)).unwrap()).unwrap();
        let p = quasiprobabilities(man, rho.operator()).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        // Rotating the input by one lobe spacing cycles the weights.
        let q = quasiprobabilities(man, &rho.operator().rotated(PI / 2.0)).unwrap();
        for l in 0..4 {
            prop_assert!((q[(l + 1) % 4] - p[l]).abs() < 1e-6);
        }
    }

    #[test]
    fn trial_amplitudes_are_reproducible(seed in any::<u64>(), trial in 0usize..10_000, max in 0.0..5.0f64) {
        let a = trial_amplitude(seed, trial, max);
        prop_assert_eq!(a, trial_amplitude(seed, trial, max));
        prop_assert!(a.norm() <= max + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn retrieval_is_reproducible_and_thread_independent(seed in any::<u64>()) {
        let (dec, man, lobes) = memory();
        let strategies = vec![
            Readout { name: "ambiguous".into(), povm: ambiguous_povm_numerical(man).unwrap() },
        ];
        let times = geometric_times(0.1, 50.0, 4).unwrap();
        let opts = RetrievalOptions { trials: 6, times, seed, max_amplitude: 4.0 };
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
                .install(|| retrieval_experiment(dec, lobes, &strategies, &opts).unwrap())
        };
        let a = run(1);
        let b = run(3);
        prop_assert_eq!(&a.summary.success, &b.summary.success);
        for (x, y) in a.records.iter().zip(&b.records) {
            prop_assert_eq!(x.alpha0, y.alpha0);
            prop_assert_eq!(&x.p_click, &y.p_click);
            prop_assert_eq!(&x.k_hat, &y.k_hat);
        }
    }
}
