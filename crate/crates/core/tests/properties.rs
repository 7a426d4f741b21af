use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tqm::arrangement::{
    build_arrangement, coarse_grain, induced_partition, marginal_intensities, power_of_action,
    transform_arrangement, BasisChange, DetectorBasis, Factorization,
};
use tqm::contextuality::{
    context_sums, count_binary_valuations, find_binary_valuation, intensive_valuation_table,
    ContextFamily,
};
use tqm::isa::{clamp_unit, intensity, make_isa, mix, power_graph, IntensiveState, Power};
use tqm::lab::{BasisSpec, FamilySpec, LabFile, StateSpec};
use tqm::random;
use tqm::tensor::{is_projector, kron, nu_embed, partial_trace, ComplexMatrix, UnitVector};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_isa(d: usize, r: &mut ChaCha8Rng) -> IntensiveState {
    make_isa(random::density(d, r)).unwrap()
}

fn random_basis(dims: &[usize], r: &mut ChaCha8Rng) -> DetectorBasis {
    let us = dims.iter().map(|&d| random::unitary(d, r)).collect();
    DetectorBasis::new(Factorization::new(dims.to_vec()).unwrap(), us).unwrap()
}

fn shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=3, 1..=3)
}

fn random_power(d: usize, r: &mut ChaCha8Rng) -> Power {
    let family = random::orthogonal_family(d, false, r);
    Power::new(family[0].clone()).unwrap()
}

fn eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    m.hermitian_eigen().unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(seed: u64, p in 1usize..4, q in 1usize..4, s in 1usize..4) {
        let mut r = rng(seed);
        let a = random::ginibre(p, q, &mut r);
        let b = random::ginibre(q, s, &mut r);
        let c = random::ginibre(s, p, &mut r);
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12);
    }

    #[test]
    fn partial_trace_is_linear_and_trace_preserving(seed: u64, dims in shape(), x in -2.0f64..2.0) {
        let mut r = rng(seed);
        let n: usize = dims.iter().product();
        let a = random::ginibre(n, n, &mut r);
        let b = random::ginibre(n, n, &mut r);
        let traced: Vec<usize> = (0..dims.len()).filter(|_| r.random_bool(0.5)).collect();
        let combo = &a.scale_real(x) + &b;
        let lhs = partial_trace(&combo, &dims, &traced).unwrap();
        let rhs = &partial_trace(&a, &dims, &traced).unwrap().scale_real(x) + &partial_trace(&b, &dims, &traced).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-10);
        prop_assert!((lhs.trace() - combo.trace()).norm() <= 1e-10);
    }

    #[test]
    fn nu_gives_rank_one_projectors_up_to_phase(seed: u64, d in 1usize..=8, theta in 0.0f64..std::f64::consts::TAU) {
        let mut r = rng(seed);
        let x = random::unit_vector(d, &mut r);
        let p = nu_embed(&x);
        prop_assert!(is_projector(&p, 1e-10));
        prop_assert_eq!(p.rank(), 1);
        prop_assert!(nu_embed(&x.with_phase(theta)).max_abs_diff(&p).unwrap() <= 1e-12);
    }

    #[test]
    fn intensities_lie_in_the_unit_interval(seed: u64, d in 1usize..=6) {
        let mut r = rng(seed);
        let isa = random_isa(d, &mut r);
        let value = intensity(&isa, &random_power(d, &mut r)).unwrap();
        prop_assert!((0.0..=1.0).contains(&value));
        prop_assert_eq!(intensity(&isa, &Power::identity(d)).unwrap(), 1.0);
        prop_assert_eq!(intensity(&isa, &Power::zero(d)).unwrap(), 0.0);
        prop_assert_eq!(clamp_unit(value), value);
    }

    #[test]
    fn intensity_is_affine_in_mixtures(seed: u64, d in 1usize..=5, k in 1usize..=4) {
        let mut r = rng(seed);
        let states: Vec<IntensiveState> = (0..k).map(|_| random_isa(d, &mut r)).collect();
        let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        // Normalization can leave the sum a few ulps off 1; mix accepts that.
        let mixed = mix(&states, &weights).unwrap();
        let p = random_power(d, &mut r);
        let expected: f64 = states.iter().zip(&weights).map(|(s, w)| w * intensity(s, &p).unwrap()).sum();
        prop_assert!((intensity(&mixed, &p).unwrap() - expected).abs() <= 1e-10);
    }

    #[test]
    fn power_graph_is_symmetric_loop_free_and_permutation_invariant(seed: u64, d in 2usize..=4, n in 0usize..8) {
        let mut r = rng(seed);
        // Draw from a few bases so that both edges and non-edges occur.
        let bases: Vec<ComplexMatrix> = (0..2).map(|_| random::unitary(d, &mut r)).collect();
        let powers: Vec<Power> = (0..n)
            .map(|_| {
                let u = &bases[r.random_range(0..2)];
                let v = UnitVector::new(u.column(r.random_range(0..d))).unwrap();
                Power::from_vector(&v)
            })
            .collect();
        let g = power_graph(&powers, 1e-9).unwrap();
        for i in 0..n {
            prop_assert!(!g.has_edge(i, i));
            for j in 0..n {
                prop_assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
            }
        }
        prop_assert!(g.edges().all(|(i, j)| i < j));

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let shuffled: Vec<Power> = perm.iter().map(|&i| powers[i].clone()).collect();
        let h = power_graph(&shuffled, 1e-9).unwrap();
        prop_assert_eq!(g.edge_count(), h.edge_count());
        for a in 0..n {
            for b in a + 1..n {
                prop_assert_eq!(h.has_edge(a, b), g.has_edge(perm[a], perm[b]));
            }
        }
    }

    #[test]
    fn arrangement_diagonal_matches_power_intensities(seed: u64, dims in shape()) {
        let mut r = rng(seed);
        let d: usize = dims.iter().product();
        let isa = random_isa(d, &mut r);
        let basis = random_basis(&dims, &mut r);
        let ea = build_arrangement(&isa, &basis).unwrap();
        for (k, p) in ea.potentia_table() {
            let direct = intensity(&isa, &power_of_action(&basis, &k).unwrap()).unwrap();
            prop_assert!((p - direct).abs() <= 1e-10);
        }
    }

    #[test]
    fn transport_preserves_hermiticity_trace_and_spectrum(seed: u64, dims in shape()) {
        let mut r = rng(seed);
        let d: usize = dims.iter().product();
        let isa = random_isa(d, &mut r);
        let source = random_basis(&dims, &mut r);
        let target = random_basis(&dims, &mut r);
        let ea = build_arrangement(&isa, &source).unwrap();
        let moved = transform_arrangement(&ea, &BasisChange::between(&source, &target).unwrap()).unwrap();
        let alpha = moved.coefficient_matrix();
        prop_assert!(alpha.hermiticity_deviation() <= 1e-9);
        prop_assert!((alpha.trace().re - 1.0).abs() <= 1e-9);
        let before = eigenvalues(&ea.coefficient_matrix());
        let after = eigenvalues(&alpha);
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        // Transport rebuilds the arrangement over the target basis.
        let direct = build_arrangement(&isa, &target).unwrap();
        prop_assert!(moved.coefficients().max_abs_diff(direct.coefficients()).unwrap() <= 1e-9);
    }

    #[test]
    fn composed_changes_agree(seed: u64, dims in shape()) {
        let mut r = rng(seed);
        let d: usize = dims.iter().product();
        let isa = random_isa(d, &mut r);
        let (b0, b1, b2) = (random_basis(&dims, &mut r), random_basis(&dims, &mut r), random_basis(&dims, &mut r));
        let l1 = BasisChange::between(&b0, &b1).unwrap();
        let l2 = BasisChange::between(&b1, &b2).unwrap();
        let ea = build_arrangement(&isa, &b0).unwrap();
        let stepwise = transform_arrangement(&transform_arrangement(&ea, &l1).unwrap(), &l2).unwrap();
        let direct = transform_arrangement(&ea, &l1.then(&l2).unwrap()).unwrap();
        prop_assert!(stepwise.coefficients().max_abs_diff(direct.coefficients()).unwrap() <= 1e-10);
    }

    #[test]
    fn coarse_graining_sums_to_one_and_matches_marginals(seed: u64, dims in shape()) {
        let mut r = rng(seed);
        let d: usize = dims.iter().product();
        let isa = random_isa(d, &mut r);
        let basis = random_basis(&dims, &mut r);
        let ea = build_arrangement(&isa, &basis).unwrap();

        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut r);
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for k in order {
            match groups.last_mut() {
                Some(g) if r.random_bool(0.5) => g.push(k),
                _ => groups.push(vec![k]),
            }
        }
        let table = coarse_grain(&ea, &groups).unwrap();
        prop_assert!((table.total() - 1.0).abs() <= 1e-9);
        prop_assert!(table.powers().iter().all(|p| is_projector(p.matrix(), 1e-9)));

        let mut kept: Vec<usize> = (0..dims.len()).filter(|_| r.random_bool(0.5)).collect();
        if kept.is_empty() {
            kept.push(0);
        }
        let marginal = marginal_intensities(&ea, &kept).unwrap();
        let grained = coarse_grain(&ea, &induced_partition(&basis, &kept).unwrap()).unwrap();
        prop_assert_eq!(marginal.len(), grained.len());
        for (a, b) in marginal.intensities().iter().zip(grained.intensities()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn cabello_context_sums_are_one_for_any_state(seed: u64) {
        let mut r = rng(seed);
        let family = ContextFamily::cabello_18();
        let isa = random_isa(4, &mut r);
        let table = intensive_valuation_table(&family, &isa).unwrap();
        for s in context_sums(&family, &table) {
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn rotation_preserves_satisfiability_and_context_sums(seed: u64) {
        let mut r = rng(seed);
        let u = random::unitary(4, &mut r);
        let family = ContextFamily::cabello_18();
        let rotated = family.rotated(&u).unwrap();
        prop_assert!(find_binary_valuation(&rotated).valuation().is_none());

        let rho = random::density(4, &mut r);
        let isa = make_isa(rho.clone()).unwrap();
        let moved = make_isa(&(&u * &rho) * &u.adjoint()).unwrap();
        let before = context_sums(&family, &intensive_valuation_table(&family, &isa).unwrap());
        let after = context_sums(&rotated, &intensive_valuation_table(&rotated, &moved).unwrap());
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        let table_a = intensive_valuation_table(&family, &isa).unwrap();
        let table_b = intensive_valuation_table(&rotated, &moved).unwrap();
        for (a, b) in table_a.intensities().iter().zip(table_b.intensities()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn found_valuations_are_global_and_counts_match_brute_force(seed: u64, n in 1usize..4) {
        // Random bases of C^d; a basis cut short leaves free vectors and
        // repeats the first context instead.
        let mut r = rng(seed);
        let d = r.random_range(2..=3);
        let mut vectors = Vec::new();
        let mut contexts = Vec::new();
        for _ in 0..n {
            let u = random::unitary(d, &mut r);
            let mut ctx = Vec::new();
            for c in 0..d {
                if !vectors.is_empty() && r.random_bool(0.2) {
                    // Reuse the basis of an earlier context wholesale.
                    break;
                }
                ctx.push(vectors.len());
                vectors.push(UnitVector::new(u.column(c)).unwrap());
            }
            if ctx.len() == d {
                contexts.push(ctx);
            } else {
                let first = contexts.first().cloned().unwrap_or_default();
                if !first.is_empty() {
                    contexts.push(first);
                }
            }
        }
        let family = ContextFamily::new(d, vectors, contexts).unwrap();
        let search = find_binary_valuation(&family);
        let again = find_binary_valuation(&family);
        prop_assert_eq!(&search, &again);
        if let Some(v) = search.valuation() {
            prop_assert!(v.satisfies(&family));
        }
        let n_vec = family.vectors().len();
        let brute = (0u64..1 << n_vec)
            .filter(|mask| {
                family.contexts().iter().all(|ctx| ctx.iter().filter(|&&i| mask >> i & 1 == 1).count() == 1)
            })
            .count() as u128;
        prop_assert_eq!(count_binary_valuations(&family), brute);
        prop_assert_eq!(search.valuation().is_some(), brute > 0);
    }

    #[test]
    fn lab_files_round_trip_bit_exactly(
        entries in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 8),
        dims in prop::collection::vec(2usize..5, 1..3),
        contexts in prop::collection::vec(prop::collection::vec(1usize..5, 1..4), 0..3),
    ) {
        let c = |i: usize| Complex64::new(entries[i], entries[(i + 1) % 8]);
        let file = LabFile {
            dim: 2,
            state: StateSpec::Density(vec![vec![c(0), c(2)], vec![c(4), c(6)]]),
            factorizations: vec![("f".into(), dims)],
            bases: vec![("b".into(), BasisSpec { factorization: "f".into(), unitaries: Some(vec![vec![vec![c(1), c(3)], vec![c(5), c(7)]]]) })],
            context_families: vec![("k".into(), FamilySpec { vectors: vec![vec![c(0), c(1)]; 4], contexts })],
            embeddings: vec![],
        };
        let text = file.emit();
        let back = LabFile::parse(&text).unwrap();
        prop_assert_eq!(back.emit(), text);
        let (StateSpec::Density(a), StateSpec::Density(b)) = (&file.state, &back.state) else { unreachable!() };
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
            prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        prop_assert_eq!(back, file);
    }
}

#[test]
fn maximally_mixed_qubit_is_not_a_projector() {
    let half = ComplexMatrix::diag_real(&[0.5, 0.5]);
    assert!(!is_projector(&half, 1e-9));
    assert_eq!(half.rank(), 2);
}

#[test]
fn transport_is_not_trivially_the_identity() {
    let mut r = rng(11);
    let isa = random_isa(4, &mut r);
    let source = random_basis(&[2, 2], &mut r);
    let target = random_basis(&[2, 2], &mut r);
    let ea = build_arrangement(&isa, &source).unwrap();
    let moved =
        transform_arrangement(&ea, &BasisChange::between(&source, &target).unwrap()).unwrap();
    assert!(
        moved
            .coefficients()
            .max_abs_diff(ea.coefficients())
            .unwrap()
            > 1e-3
    );
}
