mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stprobe::analysis::{concurrence, trace_distance};
use stprobe::eigen::{
    first_excited_singlet, full_spectrum, ground_state, lowest_k_states, thermal_state,
    total_spin_sq,
};
use stprobe::hamiltonians::{build_model, HamiltonianOp, ModelParams, ModelSpec, ModelVariant};
use stprobe::noisekit::{perturbed_model, DisorderConfig, DisorderKind};
use stprobe::spinspace::{partial_trace, DenseMatrix, DensityOp, SpinBasis, StateVector};
use stprobe::stmeasure::{
    bell_localize, herald_all_singlet, middle_layout, outcome_probability, triplet_profile,
    OutcomeString, PairingLayout,
};
use stprobe::Scalar;

fn to_na<S: Scalar>(m: &DenseMatrix<S>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.dim(), m.dim(), |r, c| m.get(r, c).to_complex())
}

fn variants(n: usize) -> Vec<ModelSpec> {
    vec![
        build_model(ModelVariant::Ring, n, &ModelParams::default()).unwrap(),
        build_model(ModelVariant::Open, n, &ModelParams::default()).unwrap(),
        build_model(ModelVariant::J1J2Ring, n, &ModelParams::j2(0.3)).unwrap(),
        build_model(ModelVariant::EndWeakened, n, &ModelParams::je(0.5)).unwrap(),
        build_model(ModelVariant::Alternating, n, &ModelParams::delta(0.1)).unwrap(),
    ]
}

fn ring(n: usize) -> ModelSpec {
    build_model(ModelVariant::Ring, n, &ModelParams::default()).unwrap()
}

#[test]
fn matvec_columns_match_kronecker_ring_of_four() {
    let model = ring(4);
    let op = HamiltonianOp::<f64>::new(&model, SpinBasis::full(4).unwrap()).unwrap();
    let ours = to_na(&op.to_dense().unwrap());
    let oracle = common::hamiltonian(&model);
    assert!(common::max_abs(&(ours - oracle)) < 1e-13);
}

#[test]
fn complex_fields_match_kronecker() {
    let model = ring(6)
        .with_fields(vec![
            [0.3, -0.2, 0.1],
            [0.0, 0.4, 0.0],
            [0.2, 0.0, -0.5],
            [0.0; 3],
            [0.1, 0.1, 0.1],
            [-0.3, 0.2, 0.0],
        ])
        .unwrap();
    let op = HamiltonianOp::<Complex64>::new(&model, SpinBasis::full(6).unwrap()).unwrap();
    let ours = to_na(&op.to_dense().unwrap());
    assert!(common::max_abs(&(ours - common::hamiltonian(&model))) < 1e-13);
}

#[test]
fn single_site_field_on_two_sites() {
    let model = build_model(ModelVariant::Open, 2, &ModelParams::default())
        .unwrap()
        .with_fields(vec![[0.0, 0.0, 0.7], [0.0; 3]])
        .unwrap();
    let ours: Vec<f64> = full_spectrum::<f64>(&model)
        .unwrap()
        .iter()
        .map(|p| p.energy)
        .collect();
    let oracle = common::eigenvalues(&common::hamiltonian(&model));
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12, "{ours:?} vs {oracle:?}");
    }
}

#[test]
fn ground_energies_and_gaps_for_every_variant() {
    for n in [4, 6, 8] {
        for model in variants(n) {
            let oracle = common::eigenvalues(&common::hamiltonian(&model));
            let e0 = ground_state::<f64>(&model).unwrap().energy;
            assert!((e0 - oracle[0]).abs() < 1e-9, "{} n={n}", model.label);
            let low = lowest_k_states::<f64>(&model, 2).unwrap();
            assert!(
                (low[1].energy - oracle[1]).abs() < 1e-9,
                "{} n={n}",
                model.label
            );
        }
    }
}

#[test]
fn full_spectrum_of_eight_site_ring() {
    let model = ring(8);
    let ours: Vec<f64> = full_spectrum::<f64>(&model)
        .unwrap()
        .iter()
        .map(|p| p.energy)
        .collect();
    let oracle = common::eigenvalues(&common::hamiltonian(&model));
    assert_eq!(ours.len(), 256);
    let dev = ours
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(dev < 1e-10, "{dev}");
    assert!(ours.iter().sum::<f64>().abs() < 1e-9);
}

#[test]
fn excited_singlet_of_four_site_ring() {
    let model = ring(4);
    let shifted =
        common::hamiltonian(&model) + common::total_spin_sq(4) * Complex64::new(100.0, 0.0);
    let singlet_levels: Vec<f64> = common::eigenvalues(&shifted)
        .into_iter()
        .filter(|e| *e < 50.0)
        .collect();
    let exc = first_excited_singlet::<f64>(&model).unwrap();
    assert!(
        (exc.energy - singlet_levels[1]).abs() < 1e-9,
        "{} vs {singlet_levels:?}",
        exc.energy
    );
    assert!(total_spin_sq(&exc.vector).unwrap() < 1e-6);
}

#[test]
fn total_spin_matches_dense_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = StateVector::<Complex64>::random(SpinBasis::full(6).unwrap(), &mut rng);
    let x = common::embed(&v);
    let oracle = (x.adjoint() * common::total_spin_sq(6) * &x)[(0, 0)].re;
    assert!((total_spin_sq(&v).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn profiles_match_projector_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let layouts = [
        PairingLayout::standard(6).unwrap(),
        PairingLayout::custom(6, vec![(1, 4), (2, 6), (3, 5)]).unwrap(),
        PairingLayout::custom(6, vec![(2, 5)]).unwrap(),
    ];
    let gs = ground_state::<f64>(&ring(6)).unwrap().vector;
    let rand = StateVector::<Complex64>::random(SpinBasis::full(6).unwrap(), &mut rng);
    let thermal = thermal_state::<f64>(&ring(6), 0.7).unwrap();
    for layout in &layouts {
        let cases = [
            (
                triplet_profile(&gs, layout).unwrap().probs,
                common::projector(&common::embed(&gs)),
            ),
            (
                triplet_profile(&rand, layout).unwrap().probs,
                common::projector(&common::embed(&rand)),
            ),
            (
                triplet_profile(&thermal, layout).unwrap().probs,
                common::density(&thermal),
            ),
        ];
        for (ours, rho) in cases {
            let oracle = common::profile(&rho, layout.pairs(), 6);
            for (a, b) in ours.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "{ours:?} vs {oracle:?}");
            }
        }
    }
}

#[test]
fn single_outcome_string_on_eight_site_ring() {
    let gs = ground_state::<f64>(&ring(8)).unwrap().vector;
    let layout = PairingLayout::standard(8).unwrap();
    let x: OutcomeString = "stts".parse().unwrap();
    let ours = outcome_probability(&gs, &layout, &x).unwrap();
    let psi = common::projector(&common::embed(&gs));
    let id = DMatrix::<Complex64>::identity(256, 256);
    let mut pi = id.clone();
    for (k, &(a, b)) in layout.pairs().iter().enumerate() {
        let ps = common::singlet_projector(a, b, 8);
        pi *= if k == 0 || k == 3 { ps } else { &id - ps };
    }
    assert!((ours - (psi * pi).trace().re).abs() < 1e-12);
}

#[test]
fn pair_marginals_match_partial_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = StateVector::<Complex64>::random(SpinBasis::full(6).unwrap(), &mut rng);
    let rho = common::projector(&common::embed(&v));
    for keep in [vec![1, 2], vec![5, 2], vec![3, 6, 1]] {
        let ours = common::density(&partial_trace(&v, &keep).unwrap());
        let oracle = common::partial_trace(&rho, &keep, 6);
        assert!(common::max_abs(&(ours - oracle)) < 1e-12);
    }
}

#[test]
fn concurrence_matches_wootters_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let v = StateVector::<Complex64>::random(SpinBasis::full(5).unwrap(), &mut rng);
        let pair = partial_trace(&v, &[2, 4]).unwrap();
        let oracle = common::concurrence(&common::density(&pair));
        assert!((concurrence(&pair).unwrap() - oracle).abs() < 1e-9);
    }
}

#[test]
fn trace_distance_matches_dense_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let basis = SpinBasis::sector(6, 3).unwrap();
    let mk = |rng: &mut ChaCha8Rng, k: usize| {
        let comps = (0..k)
            .map(|i| {
                (
                    1.0 + i as f64,
                    StateVector::<f64>::random(basis.clone(), rng),
                )
            })
            .collect::<Vec<_>>();
        let gram_free = orthonormalize(comps);
        DensityOp::from_spectral(gram_free).unwrap()
    };
    for k in 1..4 {
        let a = mk(&mut rng, k);
        let b = mk(&mut rng, 2);
        let oracle = common::trace_distance(&common::density(&a), &common::density(&b));
        assert!((trace_distance(&a, &b).unwrap() - oracle).abs() < 1e-10);
        let mm = DensityOp::<f64>::maximally_mixed(6).unwrap();
        let oracle = common::trace_distance(&common::density(&a), &common::density(&mm));
        assert!((trace_distance(&a, &mm).unwrap() - oracle).abs() < 1e-10);
    }
}

fn orthonormalize(comps: Vec<(f64, StateVector<f64>)>) -> Vec<(f64, StateVector<f64>)> {
    let total: f64 = comps.iter().map(|c| c.0).sum();
    let mut done: Vec<(f64, StateVector<f64>)> = Vec::new();
    for (w, v) in comps {
        let mut amps = v.amplitudes().to_vec();
        for (_, u) in &done {
            let p = u.inner(&v).unwrap();
            for (a, b) in amps.iter_mut().zip(u.amplitudes()) {
                *a -= p * b;
            }
        }
        done.push((
            w / total,
            StateVector::new(v.basis().clone(), amps).unwrap(),
        ));
    }
    done
}

#[test]
fn heralded_end_pair_matches_dense_projection() {
    for n in [4, 6, 8] {
        let model = build_model(ModelVariant::Open, n, &ModelParams::default()).unwrap();
        let gs = ground_state::<f64>(&model).unwrap().vector;
        let layout = middle_layout(n).unwrap();
        let h = herald_all_singlet(&gs, &layout).unwrap();
        let x = common::embed(&gs);
        let mut pi = DMatrix::<Complex64>::identity(1 << n, 1 << n);
        for &(a, b) in layout.pairs() {
            pi *= common::singlet_projector(a, b, n);
        }
        let projected = &pi * &x;
        let q0 = projected.norm_squared();
        assert!((h.q0 - q0).abs() < 1e-12);
        let end = common::partial_trace(&common::projector(&projected), &[1, n], n)
            / Complex64::new(q0, 0.0);
        let ours = common::density(h.end_state.as_ref().unwrap());
        assert!(common::max_abs(&(ours - &end)) < 1e-10);
        assert!((concurrence(h.end_state.as_ref().unwrap()).unwrap() - 1.0).abs() < 1e-9);
        assert!((common::concurrence(&end) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn heralding_under_nuclear_fields_matches_dense_projection() {
    let n = 8;
    let base = build_model(ModelVariant::Open, n, &ModelParams::default()).unwrap();
    let cfg = DisorderConfig::new(DisorderKind::NuclearFields, 0.3, 4, 3);
    let layout = middle_layout(n).unwrap();
    for index in 0..4 {
        let model = perturbed_model(&cfg, &base, index).unwrap();
        let (_, vecs) = common::eigh(&common::hamiltonian(&model));
        let x = vecs.column(0).into_owned();
        let mut pi = DMatrix::<Complex64>::identity(1 << n, 1 << n);
        for &(a, b) in layout.pairs() {
            pi *= common::singlet_projector(a, b, n);
        }
        let projected = &pi * &x;
        let q0 = projected.norm_squared();
        let end = common::partial_trace(&common::projector(&projected), &[1, n], n)
            / Complex64::new(q0, 0.0);

        let gs = ground_state::<Complex64>(&model).unwrap().vector;
        let h = herald_all_singlet(&gs, &layout).unwrap();
        assert!((h.q0 - q0).abs() < 1e-9, "{} vs {q0}", h.q0);
        let ours = common::density(h.end_state.as_ref().unwrap());
        assert!(common::max_abs(&(ours - &end)) < 1e-8);
    }
}

#[test]
fn bell_outcomes_match_dense_projection() {
    let model = build_model(ModelVariant::Open, 6, &ModelParams::default()).unwrap();
    let gs = ground_state::<f64>(&model).unwrap().vector;
    let layout = middle_layout(6).unwrap();
    let outcomes = bell_localize(&gs, &layout).unwrap();
    let x = common::embed(&gs);
    let total: f64 = outcomes.iter().map(|o| o.probability).sum();
    assert!((total - 1.0).abs() < 1e-10);
    for o in &outcomes {
        let mut v = x.clone();
        for (&(a, b), bell) in layout.pairs().iter().zip(&o.outcomes) {
            let amps = bell.amplitudes();
            let proj = bell_pair_projector(a, b, 6, amps);
            v = proj * v;
        }
        assert!(
            (v.norm_squared() - o.probability).abs() < 1e-12,
            "{}",
            o.label()
        );
        let end = common::partial_trace(&common::projector(&v), &[1, 6], 6)
            / Complex64::new(o.probability, 0.0);
        assert!(common::max_abs(&(common::density(&o.end_state) - end)) < 1e-10);
    }
}

/// |b><b| on sites `(a, b)` with amplitudes indexed by `bit_a + 2 bit_b`.
fn bell_pair_projector(a: usize, b: usize, n: usize, amps: [f64; 4]) -> DMatrix<Complex64> {
    let d = 1 << n;
    DMatrix::from_fn(d, d, |r, c| {
        let rest = !((1 << (a - 1)) | (1 << (b - 1)));
        if r & rest != c & rest {
            return Complex64::new(0.0, 0.0);
        }
        let loc = |x: usize| (x >> (a - 1) & 1) + 2 * (x >> (b - 1) & 1);
        Complex64::new(amps[loc(r)] * amps[loc(c)], 0.0)
    })
}
