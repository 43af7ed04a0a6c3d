use majorana_core::decoherence::{gamma_low_dephasing, gamma_low_dissipation};
use majorana_core::jw::{dephasing_matrix_elements, dissipative_matrix_elements, number_operator};
use majorana_core::lindblad::{apply_lindblad_generator, DensityMatrix, JumpChannel, Level, TruncatedModel};
use majorana_core::model::{build_hamiltonian, build_hamiltonian_xyz, parity_operator};
use majorana_core::{solve_chain, ChainParams, LevelId, NoiseKind, ParitySector, SolverChoice, SpectrumOptions, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ChainParams> {
    (2usize..=7, -4.0..4.0f64, -4.0..4.0f64, -6.0..6.0f64)
        .prop_map(|(n, delta, mu, u)| ChainParams::dimensionless(n, delta, mu, u).unwrap())
}

fn full_levels(p: &ChainParams) -> Vec<f64> {
    let s = solve_chain(p, &SpectrumOptions::for_params(p).with_k(p.dim() / 2).with_solver(SolverChoice::Dense)).unwrap();
    let mut v: Vec<f64> = s.merged_levels().into_iter().map(|l| l.2).collect();
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_parity(p in params()) {
        let h = build_hamiltonian(&p).unwrap();
        prop_assert!(h.hermitian_defect() <= 1e-12);
        let par = parity_operator(p.n_sites).unwrap();
        prop_assert!((&(&h * &par) - &(&par * &h)).max_abs() <= 1e-12);
    }

    #[test]
    fn pair_and_xyz_forms_agree(p in params()) {
        let d = (&build_hamiltonian(&p).unwrap() - &build_hamiltonian_xyz(&p).unwrap()).max_abs();
        prop_assert!(d <= 1e-12);
    }

    #[test]
    fn spectrum_is_even_in_mu(p in params()) {
        let a = full_levels(&p);
        let b = full_levels(&ChainParams { mu: -p.mu, ..p });
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn spectrum_is_even_in_delta(p in params()) {
        let a = full_levels(&p);
        let b = full_levels(&ChainParams { delta: -p.delta, ..p });
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn trace_of_number_operators(p in params()) {
        // Σ_j Tr n_j = N 2^(N-1).
        let n = p.n_sites;
        let total: f64 = (1..=n)
            .map(|j| {
                let op = number_operator(j, n).unwrap().to_dense();
                (0..op.nrows()).map(|i| op[(i, i)].re).sum::<f64>()
            })
            .sum();
        prop_assert!((total - (n << (n - 1)) as f64).abs() < 1e-9);
    }

    #[test]
    fn low_frequency_parameters_are_gauge_invariant(p in params(), phases in proptest::collection::vec(0.0..std::f64::consts::TAU, 2)) {
        let mut s = solve_chain(&p, &SpectrumOptions::for_params(&p)).unwrap();
        let eval = |s: &majorana_core::ChainSpectrum| {
            let c = dissipative_matrix_elements(&s.even, &s.odd, 1).unwrap();
            let de = dephasing_matrix_elements(&s.even, 1).unwrap();
            let dodd = dephasing_matrix_elements(&s.odd, 1).unwrap();
            (gamma_low_dissipation(&c, 1.0).unwrap(), gamma_low_dephasing(&de, &dodd, 1.0).unwrap())
        };
        let before = eval(&s);
        s.even.rephase(1, C64::from_polar(1.0, phases[0]));
        s.odd.rephase(1, C64::from_polar(1.0, phases[1]));
        let after = eval(&s);
        prop_assert!((before.0 - after.0).abs() <= 1e-12);
        prop_assert!((before.1 - after.1).abs() <= 1e-12);
    }

    #[test]
    fn generator_is_traceless_and_hermitian(
        energies in proptest::collection::vec(-3.0..3.0f64, 4),
        rates in proptest::collection::vec(0.0..2.0f64, 4),
        re in proptest::collection::vec(-1.0..1.0f64, 16),
        im in proptest::collection::vec(-1.0..1.0f64, 16),
    ) {
        let ids = [
            LevelId::new(ParitySector::Even, 1),
            LevelId::new(ParitySector::Odd, 1),
            LevelId::new(ParitySector::Even, 2),
            LevelId::new(ParitySector::Odd, 2),
        ];
        let levels = ids.iter().zip(&energies).map(|(&id, &energy)| Level { id, energy }).collect();
        let channels = vec![
            JumpChannel { from: 2, to: 1, rate: rates[0], noise: NoiseKind::Dissipation },
            JumpChannel { from: 1, to: 2, rate: rates[1], noise: NoiseKind::Dissipation },
            JumpChannel { from: 3, to: 0, rate: rates[2], noise: NoiseKind::Dissipation },
            JumpChannel { from: 2, to: 0, rate: rates[3], noise: NoiseKind::Dephasing },
        ];
        let model = TruncatedModel::new(levels, channels).unwrap();
        // ρ = A A† / Tr.
        let a = DMatrix::from_fn(4, 4, |i, j| C64::new(re[4 * i + j], im[4 * i + j]));
        let mut rho = &a * a.adjoint();
        let tr = rho.trace();
        prop_assume!(tr.re > 1e-3);
        rho /= tr;
        let rho = DensityMatrix::new(rho).unwrap();
        let d = apply_lindblad_generator(&model, &rho).unwrap();
        prop_assert!(d.trace().norm() <= 1e-12);
        prop_assert!((&d - d.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-12);
    }
}
