use std::sync::OnceLock;

use bohrlab::dirichlet::{bohr_lift, bohr_push, monomial_abs_sum, DirichletPoly};
use bohrlab::inequalities::{
    check_weighted_monomial_bound, cotype_sides, main_proposition_sides, projection_sides, random_poly, select_k0,
    weighted_analysis, Constants,
};
use bohrlab::multiindex::{enumerate_homogeneous, factorize, index_of, MultiIndex, PrimeTable};
use bohrlab::polys::{polarize, PolarizationMethod, VectorPoly};
use bohrlab::rng;
use bohrlab::spaces::{
    estimate_cotype_constant, estimate_kahane_constant, random_family, Exponent, SpaceDescriptor, Vector,
};
use bohrlab::torus::{fourier_coefficient, grid_quadrature, mc_quadrature, GridSpec, Quadrature, SampleSpec};
use bohrlab::C64;
use proptest::prelude::*;
use rand::Rng;

fn table() -> &'static PrimeTable {
    static TABLE: OnceLock<PrimeTable> = OnceLock::new();
    TABLE.get_or_init(PrimeTable::default)
}

fn space_strategy() -> impl Strategy<Value = SpaceDescriptor> {
    let exponent =
        prop_oneof![(1.0f64..8.0).prop_map(Exponent::Finite), Just(Exponent::Finite(2.0)), Just(Exponent::Infinite),];
    (1usize..=4, exponent).prop_map(|(d, e)| SpaceDescriptor::new(d, e).unwrap())
}

fn hilbert(dim: usize) -> SpaceDescriptor {
    SpaceDescriptor::lq(2.0, dim).unwrap()
}

/// Σ_α Σ_i |c_{α,i}|².
fn coefficient_energy(p: &VectorPoly) -> f64 {
    p.coeffs().values().flat_map(|v| v.entries().iter().map(|c| c.norm_sqr())).sum()
}

fn linear_poly(space: SpaceDescriptor, vectors: &[Vector]) -> VectorPoly {
    VectorPoly::from_terms(
        space,
        vectors.len(),
        vectors.iter().enumerate().map(|(k, x)| (MultiIndex::monomial(k + 1, 1).unwrap(), x.clone())),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // ---------------------------------------------------------- multiindex

    #[test]
    fn factorize_roundtrip(n in 1u64..1_000_000) {
        let alpha = factorize(n, table()).unwrap();
        prop_assert_eq!(index_of(&alpha, table()).unwrap(), n);
    }

    #[test]
    fn factorize_is_additive(m in 1u64..1_000_000, n in 1u64..1_000_000) {
        let lhs = factorize(m * n, table()).unwrap();
        let rhs = &factorize(m, table()).unwrap() + &factorize(n, table()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn enumeration_is_distinct_and_homogeneous(vars in 1usize..=5, m in 0u32..=5) {
        let list = enumerate_homogeneous(vars, m).unwrap();
        let mut sorted = list.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), list.len());
        prop_assert!(list.iter().all(|a| a.degree() == m && a.max_position() <= vars));
    }

    // -------------------------------------------------------------- spaces

    #[test]
    fn norm_is_homogeneous_and_subadditive(space in space_strategy(), seed in any::<u64>()) {
        let mut r = rng::stream(seed, 0);
        let x = Vector::random_disc(&mut r, space.dim);
        let y = Vector::random_disc(&mut r, space.dim);
        let lambda = rng::unit_disc(&mut r) * 3.0;
        let nx = space.norm(x.entries());
        prop_assert!((space.norm(x.scaled(lambda).entries()) - lambda.norm() * nx).abs() <= 1e-12 * (1.0 + nx));
        let sum = &x + &y;
        prop_assert!(space.norm(sum.entries()) <= nx + space.norm(y.entries()) + 1e-12);
    }

    #[test]
    fn scalar_cotype_two_ratio_is_one(count in 1usize..=6, seed in any::<u64>()) {
        let space = SpaceDescriptor::scalar();
        let vectors = random_family(&space, count, seed, 0);
        let quad = Quadrature::Grid { points_per_axis: 2 };
        let sides = cotype_sides(&space, &vectors, 2.0, 1.0, &quad).unwrap();
        prop_assert!((sides.raw_ratio() - 1.0).abs() <= 1e-10);
    }

    // --------------------------------------------------------------- torus

    #[test]
    fn grid_matches_parseval(dim in 1usize..=3, vars in 1usize..=3, degree in 0u32..=3, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 1);
        let p = random_poly(&mut r, hilbert(dim), vars, degree).unwrap();
        let m = 2 * p.max_axis_degree() as usize + 1;
        let value = grid_quadrature(|z| p.norm_at(z).powi(2), GridSpec::new(vars, m).unwrap()).unwrap();
        let energy = coefficient_energy(&p);
        prop_assert!((value - energy).abs() <= 1e-10 * energy.max(1.0));
    }

    #[test]
    fn fourier_recovers_coefficients(dim in 1usize..=2, vars in 1usize..=3, degree in 0u32..=3, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 2);
        let p = random_poly(&mut r, hilbert(dim), vars, degree).unwrap();
        let spec = GridSpec::new(vars, p.max_axis_degree() as usize + 1).unwrap();
        for (alpha, c) in p.coeffs() {
            let dense: Vec<i64> = alpha.to_dense(vars).into_iter().map(i64::from).collect();
            let got = fourier_coefficient(|z| p.evaluate(z).unwrap().0, dim, &dense, spec).unwrap();
            prop_assert!(Vector(got).max_abs_diff(c) <= 1e-12);
        }
    }

    // --------------------------------------------------------------- polys

    #[test]
    fn homogeneous_parts_sum_to_f(vars in 1usize..=3, degree in 0u32..=4, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 3);
        let f = random_poly(&mut r, hilbert(2), vars, degree).unwrap();
        let mut total = VectorPoly::zero(*f.space(), vars);
        for m in 0..=degree {
            for (alpha, c) in f.homogeneous_projection(m).coeffs() {
                total.add_term(alpha.clone(), c).unwrap();
            }
        }
        prop_assert_eq!(total, f);
    }

    #[test]
    fn polarization_methods_agree(vars in 1usize..=4, m in 1u32..=4, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 4);
        let p = VectorPoly::random_homogeneous(&mut r, hilbert(2), vars, m).unwrap();
        let fast = polarize(&p, PolarizationMethod::Coefficient).unwrap();
        let slow = polarize(&p, PolarizationMethod::SignSum).unwrap();
        for alpha in enumerate_homogeneous(vars, m).unwrap() {
            let t = alpha.to_tuple();
            prop_assert!(fast.entry(&t).max_abs_diff(&slow.entry(&t)) <= 1e-10);
        }
        let z: Vec<C64> = (0..vars).map(|_| rng::unit_disc(&mut r)).collect();
        let diagonal = fast.evaluate(&vec![z.clone(); m as usize]).unwrap();
        prop_assert!(diagonal.max_abs_diff(&p.evaluate(&z).unwrap()) <= 1e-10);
    }

    #[test]
    fn lp_norm_is_rotation_invariant(vars in 1usize..=2, degree in 1u32..=3, p in prop_oneof![Just(1.0), Just(2.0), Just(3.0)], seed in any::<u64>()) {
        let mut r = rng::stream(seed, 5);
        let f = random_poly(&mut r, hilbert(2), vars, degree).unwrap();
        let w: Vec<C64> = (0..vars).map(|_| rng::unimodular(&mut r)).collect();
        let quad = Quadrature::Grid { points_per_axis: 64 };
        let a = f.lp_norm(p, &quad).unwrap();
        let b = f.rotate(&w).unwrap().lp_norm(p, &quad).unwrap();
        prop_assert!((a - b).abs() <= 1e-3 * a.max(1e-12));
    }

    #[test]
    fn projection_contracts(vars in 1usize..=2, degree in 1u32..=3, p in prop_oneof![Just(1.0), Just(2.0)], seed in any::<u64>()) {
        let mut r = rng::stream(seed, 6);
        let f = random_poly(&mut r, hilbert(2), vars, degree).unwrap();
        let m = r.gen_range(0..=degree);
        let (sides, preserved) = projection_sides(&f, m, p, &f.default_quadrature(p)).unwrap();
        prop_assert!(preserved);
        prop_assert!(sides.raw_ratio() <= 1.0 + 1e-3);
    }

    // ----------------------------------------------------------- dirichlet

    #[test]
    fn bohr_roundtrip(support in prop::collection::btree_set(1u64..1_000_000, 1..12), seed in any::<u64>()) {
        let mut r = rng::stream(seed, 7);
        let support: Vec<u64> = support.into_iter().collect();
        let d = DirichletPoly::random(&mut r, hilbert(2), &support).unwrap();
        prop_assert_eq!(bohr_push(&bohr_lift(&d, table()).unwrap(), table()).unwrap(), d);
    }

    #[test]
    fn lift_is_multiplicative(m in 1u64..1000, n in 1u64..1000) {
        prop_assume!(gcd(m, n) == 1);
        let d = DirichletPoly::scalar(&[(m * n, C64::new(1.0, 0.0))]).unwrap();
        let lifted = bohr_lift(&d, table()).unwrap();
        let expected = &factorize(m, table()).unwrap() + &factorize(n, table()).unwrap();
        prop_assert_eq!(lifted.coeffs().keys().cloned().collect::<Vec<_>>(), vec![expected]);
    }

    #[test]
    fn monomial_sum_is_rearrangement_invariant(vars in 2usize..=4, degree in 1u32..=3, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 8);
        let f = random_poly(&mut r, hilbert(2), vars, degree).unwrap();
        let z: Vec<C64> = (0..vars).map(|_| rng::unit_disc(&mut r) * 0.9).collect();
        let mut perm: Vec<usize> = (1..=vars).collect();
        for i in (1..vars).rev() {
            perm.swap(i, r.gen_range(0..=i));
        }
        // variable j of f moves to position perm[j-1], and so does z_j
        let g = f.permute_vars(&perm).unwrap();
        let mut w = vec![C64::new(0.0, 0.0); vars];
        for (j, &target) in perm.iter().enumerate() {
            w[target - 1] = z[j];
        }
        let a = monomial_abs_sum(&f, &z, degree).unwrap();
        let b = monomial_abs_sum(&g, &w, degree).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn monomial_sum_is_monotone(vars in 1usize..=3, degree in 1u32..=4, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 9);
        let support: Vec<MultiIndex> = (0..=degree).flat_map(|d| enumerate_homogeneous(vars, d).unwrap()).collect();
        let f = VectorPoly::from_terms(
            SpaceDescriptor::scalar(),
            vars,
            support.into_iter().map(|a| (a, Vector::from_real(&[r.gen_range(0.0..1.0)]))),
        ).unwrap();
        let small: Vec<C64> = (0..vars).map(|_| rng::unit_disc(&mut r) * 0.95).collect();
        let large: Vec<C64> = small.iter().map(|z| {
            let grow: f64 = r.gen_range(1.0..1.5);
            C64::from_polar((z.norm() * grow).min(0.97), r.gen_range(0.0..std::f64::consts::TAU))
        }).collect();
        let a = monomial_abs_sum(&f, &small, degree).unwrap();
        let b = monomial_abs_sum(&f, &large, degree).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn estimates_grow_with_trials(q in prop_oneof![Just(2.0), Just(3.0)], seed in any::<u64>(), t in 1usize..20, extra in 1usize..20) {
        let space = SpaceDescriptor::lq(q, 2).unwrap();
        let few = estimate_cotype_constant(&space, q, 3, t, seed).unwrap();
        let many = estimate_cotype_constant(&space, q, 3, t + extra, seed).unwrap();
        prop_assert!(few.value <= many.value);
        let few = estimate_kahane_constant(&space, 3, t, seed).unwrap();
        let many = estimate_kahane_constant(&space, 3, t + extra, seed).unwrap();
        prop_assert!(few.value <= many.value);
    }

    #[test]
    fn mc_is_thread_count_independent(vars in 1usize..=4, samples in 1usize..20_000, seed in any::<u64>()) {
        let integrand = |z: &[C64]| z.iter().map(|w| (w + 0.5).norm()).product::<f64>();
        let spec = SampleSpec { vars, samples, seed };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
                .install(|| mc_quadrature(integrand, spec).unwrap())
        };
        let (a, b) = (run(1), run(3));
        prop_assert_eq!(a.0.to_bits(), b.0.to_bits());
        prop_assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn select_k0_is_monotone(ck in 0.5f64..4.0, grow in 1.0f64..3.0, eps in 0.3f64..2.0, shrink in 0.5f64..1.0) {
        // no admissible prime in the table reads as k₀ = ∞
        let k0 = |ck: f64, eps: f64| select_k0(2.0, eps, ck, 1.0, table(), 1000).map_or(usize::MAX, |s| s.k0);
        let base = k0(ck, eps);
        prop_assert!(k0(ck * grow, eps) >= base);
        prop_assert!(k0(ck, eps * shrink) >= base);
    }

    // Steinhaus sums in a Hilbert space have fourth moment at most twice the
    // squared second moment, which gives L_2 ≤ √2 L_1 by log-convexity.
    #[test]
    fn first_degree_polarization_matches_cotype_up_to_k(count in 1usize..=4, seed in any::<u64>()) {
        let space = hilbert(2);
        let k = std::f64::consts::SQRT_2;
        let vectors = random_family(&space, count, seed, 0);
        let p = linear_poly(space, &vectors);
        let quad = Quadrature::default();
        let main = main_proposition_sides(&p, 2.0, 1.0, k, &quad).unwrap().raw_ratio();
        let cotype = cotype_sides(&space, &vectors, 2.0, 1.0, &quad).unwrap().raw_ratio();
        let r = main / cotype;
        prop_assert!(r >= (1.0 / k) * (1.0 - 2e-3) && r <= 1.0 + 2e-3, "ratio of ratios {}", r);
    }

    #[test]
    fn weighted_terms_are_geometrically_dominated(vars in 1usize..=3, degree in 0u32..=3, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 10);
        let f = random_poly(&mut r, hilbert(2), vars, degree).unwrap();
        let constants = Constants::supplied(1.05, 1.2);
        let quad = Quadrature::default();
        let analysis = weighted_analysis(&f, 2.0, &constants, 1.0, table(), &quad).unwrap();
        prop_assert!(analysis.rho <= 1.0);
        for term in &analysis.degrees {
            prop_assert!(term.term <= term.geometric_bound * (1.0 + 2e-3), "degree {} term {} bound {}", term.m, term.term, term.geometric_bound);
        }
        prop_assert!(check_weighted_monomial_bound(&f, 2.0, &constants, 1.0, table(), &quad).unwrap().pass);
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
