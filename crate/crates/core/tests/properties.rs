use proptest::prelude::*;

use spin1_pxp::dynamics::{evolve_z2, Method, QuenchOptions};
use spin1_pxp::fragmentation::decompose;
use spin1_pxp::fsa::{forward_scatter, split_hamiltonian, FsaOptions, Z2Phase};
use spin1_pxp::spectral::{dense_support, schmidt_spectrum, von_neumann, GibbsEnsemble, ProductExpansion};
use spin1_pxp::symmetry::{momentum_sector_dim, verify_anticommutation, Inversion, SymmetrySector};
use spin1_pxp::{build_hamiltonian, count_dimension, Boundary, ConstrainedBasis, ConstraintSet, Preset, Spin, SpinConfig, StateSpace};

fn constraint_from_mask(mask: u16) -> ConstraintSet {
    let pairs: Vec<(Spin, Spin)> = (0..9)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| (Spin::from_digit(b / 3), Spin::from_digit(b % 3)))
        .collect();
    ConstraintSet::from_pairs(&pairs)
}

fn mirror_symmetric(c: &ConstraintSet) -> bool {
    Spin::ALL
        .iter()
        .all(|&a| Spin::ALL.iter().all(|&b| c.forbids(a, b) == c.forbids(b, a)))
}

fn boundary(periodic: bool) -> Boundary {
    if periodic {
        Boundary::Periodic
    } else {
        Boundary::Open
    }
}

fn preset(i: usize) -> Preset {
    [Preset::ModelI, Preset::ModelII, Preset::ModelIII][i]
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    raw.into_iter().map(|x| x / n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn config_string_round_trip(len in 1usize..12, seed in any::<u64>(), shift in 0usize..12) {
        let code = seed % 3u64.pow(len as u32);
        let c = SpinConfig::new(code, len);
        let parsed: SpinConfig = c.to_string().parse().unwrap();
        prop_assert_eq!(parsed, c);
        prop_assert_eq!(c.reflect().reflect(), c);
        prop_assert_eq!(c.translate(shift).translate(len - shift % len), c);
        prop_assert_eq!(c.translate(shift).magnetization(), c.magnetization());
    }

    #[test]
    fn counts_agree_with_enumeration(mask in 0u16..512, len in 1usize..8, periodic in any::<bool>()) {
        let c = constraint_from_mask(mask);
        let bc = boundary(periodic);
        let b = ConstrainedBasis::enumerate(c.clone(), len, bc).unwrap();
        let brute = (0..3u64.pow(len as u32))
            .filter(|&code| {
                let s = SpinConfig::new(code, len);
                bc.bonds(len).iter().all(|&(i, j)| !c.forbids(s.get(i), s.get(j)))
            })
            .count();
        prop_assert_eq!(b.dim(), brute);
        prop_assert_eq!(count_dimension(&c, len, bc), (brute as u64).into());
    }

    #[test]
    fn hamiltonian_is_symmetric_and_chiral(mask in 0u16..512, len in 1usize..7, periodic in any::<bool>()) {
        let b = ConstrainedBasis::enumerate(constraint_from_mask(mask), len, boundary(periodic)).unwrap();
        let h = build_hamiltonian(&b);
        prop_assert_eq!(h.symmetry_defect(), 0.0);
        prop_assert!(h.triplets().all(|(_, _, v)| (v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15));
        prop_assert_eq!(verify_anticommutation(&h, &b).unwrap(), 0.0);
    }

    #[test]
    fn sectors_partition_the_basis(mask in 0u16..512, len in 3usize..9) {
        let c = constraint_from_mask(mask);
        prop_assume!(mirror_symmetric(&c));
        let b = ConstrainedBasis::enumerate(c, len, Boundary::Periodic).unwrap();
        let mut total = 0;
        for k in 0..len {
            let dk = momentum_sector_dim(&b, k).unwrap();
            total += dk;
            if 2 * k % len == 0 {
                let even = SymmetrySector::build(&b, k, Inversion::Even).unwrap().dim();
                let odd = SymmetrySector::build(&b, k, Inversion::Odd).unwrap().dim();
                prop_assert_eq!(even + odd, dk);
            }
        }
        prop_assert_eq!(total, b.dim());
    }

    #[test]
    fn sector_hamiltonian_commutes_with_lift(which in 0usize..3, len in 4usize..10, coeffs in prop::collection::vec(-1.0f64..1.0, 1..200)) {
        let b = ConstrainedBasis::enumerate(ConstraintSet::preset(preset(which)), len, Boundary::Periodic).unwrap();
        let sector = SymmetrySector::build(&b, 0, Inversion::Even).unwrap();
        let c: Vec<f64> = (0..sector.dim()).map(|i| coeffs[i % coeffs.len()]).collect();
        let lhs = sector.lift(&sector.hamiltonian().apply(&c)).unwrap();
        let rhs = build_hamiltonian(&b).apply(&sector.lift(&c).unwrap());
        let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "err {}", err);
    }

    #[test]
    fn schmidt_values_are_a_distribution(which in 0usize..3, len in 2usize..9, cut in 0usize..9, raw in prop::collection::vec(-1.0f64..1.0, 1..400)) {
        let cut = 1 + cut % (len - 1);
        let b = ConstrainedBasis::enumerate(ConstraintSet::preset(preset(which)), len, Boundary::Open).unwrap();
        let v = normalized((0..b.dim()).map(|i| raw[i % raw.len()] + 1e-3 * i as f64).collect());
        let entries = b.expand(&dense_support(&v));
        let p = schmidt_spectrum(&entries, len, cut).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(p.iter().all(|&x| x >= -1e-14));
        // the same bipartition read from the other side
        let mirrored: Vec<(u64, f64)> = entries
            .iter()
            .map(|&(code, a)| (SpinConfig::new(code, len).reflect().code(), a))
            .collect();
        let q = schmidt_spectrum(&mirrored, len, len - cut).unwrap();
        prop_assert!((von_neumann(&p) - von_neumann(&q)).abs() < 1e-10);
    }

    #[test]
    fn model1_fragments_do_not_leak(len in 4usize..11, pick in any::<prop::sample::Index>(), raw in prop::collection::vec(-1.0f64..1.0, 1..64)) {
        let b = ConstrainedBasis::enumerate(ConstraintSet::model_i(), len, Boundary::Periodic).unwrap();
        let h = build_hamiltonian(&b);
        let d = decompose(&h, &b).unwrap();
        let fragment = &d.fragments[pick.index(d.len())];
        let mut v = vec![0.0; b.dim()];
        for (k, &i) in fragment.states.iter().enumerate() {
            v[i] = raw[k % raw.len()];
        }
        let inside: std::collections::HashSet<usize> = fragment.states.iter().copied().collect();
        let hv = h.apply(&v);
        prop_assert!(hv.iter().enumerate().all(|(i, x)| *x == 0.0 || inside.contains(&i)));
    }

    #[test]
    fn gibbs_energy_decreases_with_beta(energies in prop::collection::vec(-5.0f64..5.0, 2..40), b1 in -3.0f64..3.0, db in 0.01f64..2.0) {
        let spread = energies.iter().cloned().fold(f64::MIN, f64::max) - energies.iter().cloned().fold(f64::MAX, f64::min);
        prop_assume!(spread > 1e-3);
        let obs = energies.clone();
        let g = GibbsEnsemble::new(energies, obs).unwrap();
        let (e1, _) = g.averages(b1);
        let (e2, _) = g.averages(b1 + db);
        prop_assert!(e2 <= e1 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn krylov_matches_spectral(which in 0usize..3, half in 2usize..5) {
        let len = 2 * half;
        let b = ConstrainedBasis::enumerate(ConstraintSet::preset(preset(which)), len, Boundary::Periodic).unwrap();
        let h = build_hamiltonian(&b);
        let opts = |method| QuenchOptions { t_max: 4.0, method, ..QuenchOptions::default() };
        let a = evolve_z2(&h, &b, opts(Method::KrylovStep)).unwrap();
        let s = evolve_z2(&h, &b, opts(Method::Spectral)).unwrap();
        for (x, y) in a.fidelity.iter().zip(&s.fidelity) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in a.s_half.iter().zip(&s.s_half) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }
}

#[test]
fn fsa_is_independent_of_z2_phase() {
    for p in [Preset::ModelI, Preset::ModelII, Preset::ModelIII] {
        for len in [6, 8, 10] {
            let b = ConstrainedBasis::enumerate(ConstraintSet::preset(p), len, Boundary::Periodic).unwrap();
            let run = |phase| forward_scatter(&split_hamiltonian(&b, phase).unwrap(), FsaOptions::default()).unwrap();
            let (a, c) = (run(Z2Phase::PlusOnOdd), run(Z2Phase::PlusOnEven));
            for n in 0..2 * len {
                assert!((a.beta[n] - c.beta[n]).abs() < 1e-12, "{p} L={len}");
                assert!((a.delta[n] - c.delta[n]).abs() < 1e-12, "{p} L={len}");
            }
        }
    }
}
