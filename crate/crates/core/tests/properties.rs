//! Property tests for the algebraic invariants of each module.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use normforge::characterize::{characterize, reproduce_defect, CharacterizeConfig, Verdict};
use normforge::rate_function::RateFunction;
use normforge::rvalg::{
    bernoulli, embed, independent_product, lp_norm_rv, same_distribution, SimpleRV,
};
use normforge::sandwich::{build_grid, geometric_mean_term, PowerCounts};
use normforge::schatten::{
    kron, random_orthogonal, schatten_norm, singular_values, svd_right, Matrix, SchattenDiag,
};
use normforge::seqcore::{
    canonical, lp_norm, tensor, Exponent, FiniteSequence, KyFanNorm, LpNorm, NormOracle,
};
use normforge::tensor_stats::{empirical_rate, LogAtomMeasure};

const EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];

fn exponent(p: f64) -> Exponent {
    Exponent::finite(p).unwrap()
}

fn signed_seq(max_len: usize) -> impl Strategy<Value = FiniteSequence> {
    prop::collection::vec(-100.0f64..100.0, 1..=max_len).prop_map(FiniteSequence::new)
}

fn positive_seq(max_len: usize) -> impl Strategy<Value = FiniteSequence> {
    prop::collection::vec(0.05f64..20.0, 1..=max_len).prop_map(FiniteSequence::new)
}

/// Small integer sequences, so tensor powers stay exact.
fn integer_seq() -> impl Strategy<Value = FiniteSequence> {
    prop::collection::vec(1u32..=5, 1..=4)
        .prop_map(|v| FiniteSequence::new(v.into_iter().map(f64::from).collect()))
}

fn rational_rv() -> impl Strategy<Value = SimpleRV> {
    (1u64..=12)
        .prop_flat_map(|slots| prop::collection::vec(-12i64..=12, slots as usize))
        .prop_map(|vals| {
            let n = vals.len() as i64;
            SimpleRV::new(vals.into_iter().map(|v| {
                (
                    BigRational::new(BigInt::from(v), BigInt::from(4)),
                    BigRational::new(BigInt::from(1), BigInt::from(n)),
                )
            }))
            .unwrap()
        })
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tensor_commutes_up_to_canonical_form(x in signed_seq(6), y in signed_seq(6)) {
        prop_assert_eq!(canonical(&tensor(&x, &y)), canonical(&tensor(&y, &x)));
    }

    #[test]
    fn tensor_associates_on_integers(x in integer_seq(), y in integer_seq(), z in integer_seq()) {
        prop_assert_eq!(tensor(&tensor(&x, &y), &z), tensor(&x, &tensor(&y, &z)));
    }

    #[test]
    fn lp_norm_is_multiplicative(x in signed_seq(6), y in signed_seq(6)) {
        for p in EXPONENTS {
            let e = exponent(p);
            let lhs = lp_norm(&tensor(&x, &y), e);
            let rhs = lp_norm(&x, e) * lp_norm(&y, e);
            prop_assert!(rel(lhs, rhs) <= 1e-12, "p={} {} vs {}", p, lhs, rhs);
        }
    }

    #[test]
    fn lp_norm_is_unconditional(x in signed_seq(8)) {
        for p in EXPONENTS {
            prop_assert_eq!(lp_norm(&canonical(&x), exponent(p)), lp_norm(&x, exponent(p)));
        }
    }

    #[test]
    fn lp_norm_is_monotone(a in prop::collection::vec(0.0f64..50.0, 1..8),
                           bumps in prop::collection::vec(0.0f64..5.0, 8)) {
        let b: Vec<f64> = a.iter().zip(&bumps).map(|(x, d)| x + d).collect();
        let (a, b) = (FiniteSequence::new(a), FiniteSequence::new(b));
        for p in EXPONENTS {
            prop_assert!(lp_norm(&a, exponent(p)) <= lp_norm(&b, exponent(p)));
        }
    }

    #[test]
    fn mass_is_conserved(x in integer_seq(), n in 1usize..12) {
        let m = LogAtomMeasure::from_sequence(&x).unwrap();
        let k = BigUint::from(x.len());
        prop_assert_eq!(m.power(n).unwrap().total_mass(), k.pow(n as u32));
    }

    #[test]
    fn power_splits_as_convolution(x in integer_seq(), a in 1usize..6, b in 1usize..6) {
        let m = LogAtomMeasure::from_sequence(&x).unwrap();
        let direct = m.power(a + b).unwrap();
        let split = m.power(a).unwrap().convolve(&m.power(b).unwrap());
        prop_assert_eq!(direct.len(), split.len());
        for (u, v) in direct.atoms().iter().zip(split.atoms()) {
            prop_assert_eq!(&u.count, &v.count);
            prop_assert!((u.logv - v.logv).abs() <= 1e-12 * u.logv.abs().max(1.0));
        }
    }

    #[test]
    fn count_geq_is_non_increasing(x in integer_seq(), n in 1usize..10,
                                   mut ts in prop::collection::vec(-1.0f64..20.0, 2..10)) {
        let m = LogAtomMeasure::from_sequence(&x).unwrap().power(n).unwrap();
        ts.sort_by(f64::total_cmp);
        for w in ts.windows(2) {
            prop_assert!(m.count_geq(w[0]) >= m.count_geq(w[1]));
        }
    }

    #[test]
    fn empirical_rate_bounded_by_ln_k(x in positive_seq(5), n in 1usize..20, t in -4.0f64..4.0) {
        let r = empirical_rate(&x, t, n).unwrap();
        prop_assert!(r <= (x.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn lambda_is_convex(x in positive_seq(5), l1 in -20.0f64..20.0, l2 in -20.0f64..20.0,
                        theta in 0.01f64..0.99) {
        let rf = RateFunction::from_sequence(&x).unwrap();
        let mid = rf.lambda(theta * l1 + (1.0 - theta) * l2);
        prop_assert!(mid <= theta * rf.lambda(l1) + (1.0 - theta) * rf.lambda(l2) + 1e-12);
    }

    #[test]
    fn lambda_prime_matches_finite_differences(x in positive_seq(5), l in -10.0f64..10.0) {
        let rf = RateFunction::from_sequence(&x).unwrap();
        let h = 1e-6;
        let fd = (rf.lambda(l + h) - rf.lambda(l - h)) / (2.0 * h);
        prop_assert!((rf.lambda_prime(l) - fd).abs() <= 1e-6);
    }

    #[test]
    fn conjugate_bounded_below_by_minus_ln_k(x in positive_seq(5), s in -0.2f64..1.2) {
        let rf = RateFunction::from_sequence(&x).unwrap();
        let t = rf.t_min() + s * (rf.t_max() - rf.t_min());
        prop_assert!(rf.conjugate(t).to_f64() >= -(rf.k() as f64).ln());
    }

    #[test]
    fn young_fenchel(x in positive_seq(5), l in -30.0f64..30.0, s in 0.0f64..=1.0) {
        let rf = RateFunction::from_sequence(&x).unwrap();
        let t = rf.t_min() + s * (rf.t_max() - rf.t_min());
        if let Some(c) = rf.conjugate(t).finite() {
            prop_assert!(l * t <= rf.lambda(l) + c + 1e-10);
        }
    }

    #[test]
    fn conjugate_shifts_under_scaling(x in positive_seq(5), c in 0.1f64..10.0, s in 0.0f64..=1.0) {
        let rf = RateFunction::from_sequence(&x).unwrap();
        let ry = RateFunction::from_sequence(&x.scale(c)).unwrap();
        let t = rf.t_min() + s * (rf.t_max() - rf.t_min());
        let ty = ry.t_min() + s * (ry.t_max() - ry.t_min());
        prop_assert!((ty - (t + c.ln())).abs() <= 1e-12);
        let (a, b) = (rf.conjugate(t).to_f64(), ry.conjugate(ty).to_f64());
        prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
    }

    #[test]
    fn lambda_recovers_lp_norm(x in positive_seq(6), p in 1.0f64..6.0) {
        let rf = RateFunction::from_sequence(&x).unwrap();
        let via = rf.lp_norm_via_lambda(p);
        prop_assert!(rel(via, lp_norm(&x, exponent(p))) <= 1e-12);
    }

    #[test]
    fn sandwich_holds_at_finite_n(x in integer_seq(), n in 1usize..30, pi in 0usize..4,
                                  s in 0.0f64..=1.0, eps in 0.02f64..0.5) {
        let p = [1.0, 1.5, 2.0, 3.0][pi];
        // on flat sequences both bounds equal the norm, so exp/ln rounding
        // may cross it by a few ulps
        let ulps = 4.0 * f64::EPSILON;
        let norm = lp_norm(&x, exponent(p));
        let pc = PowerCounts::new(&x, n).unwrap();
        let rf = pc.rate_function();
        let t = rf.t_min() + s * (rf.t_max() - rf.t_min());
        prop_assert!(pc.lower_bound(p, t).unwrap() <= norm * (1.0 + ulps));
        let grid = build_grid(&x, eps).unwrap();
        prop_assert!(norm <= pc.upper_bound(p, &grid).unwrap() * (1.0 + ulps));
    }

    #[test]
    fn geometric_mean_term_below_norm(x in positive_seq(6), p in 1.0f64..5.0) {
        let g = geometric_mean_term(&x, p).unwrap();
        prop_assert!(g <= lp_norm(&x, exponent(p)) * (1.0 + 1e-12));
    }

    #[test]
    fn unconditionality_of_reference_oracles(x in signed_seq(6)) {
        for p in EXPONENTS {
            let o = LpNorm(exponent(p));
            let (a, b) = (o.eval(&x), o.eval(&x.abs()));
            prop_assert!((a - b).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn rv_norm_is_multiplicative(x in rational_rv(), y in rational_rv()) {
        for p in EXPONENTS {
            let e = exponent(p);
            let lhs = lp_norm_rv(&independent_product(&x, &y), e);
            let rhs = lp_norm_rv(&x, e) * lp_norm_rv(&y, e);
            prop_assert!(rel(lhs, rhs) <= 1e-12, "p={}", p);
        }
    }

    #[test]
    fn rv_norm_matches_embedding(x in rational_rv()) {
        let (seq, n) = embed(&x).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0] {
            let via = lp_norm(&seq, exponent(p)) / (n as f64).powf(1.0 / p);
            prop_assert!(rel(lp_norm_rv(&x, exponent(p)), via) <= 1e-12);
        }
    }

    #[test]
    fn rv_norm_sign_invariant(x in rational_rv()) {
        for p in EXPONENTS {
            prop_assert_eq!(lp_norm_rv(&x, exponent(p)), lp_norm_rv(&x.abs(), exponent(p)));
        }
    }

    #[test]
    fn rv_norm_depends_only_on_distribution(vals in prop::collection::vec(-8i64..=8, 1..8),
                                             seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let n = vals.len() as i64;
        let build = |v: &[i64]| SimpleRV::new(v.iter().map(|&a| (
            BigRational::from_integer(BigInt::from(a)),
            BigRational::new(BigInt::from(1), BigInt::from(n)),
        ))).unwrap();
        let mut shuffled = vals.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (x, y) = (build(&vals), build(&shuffled));
        prop_assert!(same_distribution(&x, &y));
        for p in EXPONENTS {
            prop_assert_eq!(lp_norm_rv(&x, exponent(p)), lp_norm_rv(&y, exponent(p)));
        }
    }

    #[test]
    fn rv_domination(vals in prop::collection::vec((0i64..=16, 0i64..=8), 1..10)) {
        let n = vals.len() as i64;
        let slot = |v: i64| (
            BigRational::new(BigInt::from(v), BigInt::from(8)),
            BigRational::new(BigInt::from(1), BigInt::from(n)),
        );
        let x = SimpleRV::new(vals.iter().map(|&(a, _)| slot(a))).unwrap();
        let y = SimpleRV::new(vals.iter().map(|&(a, d)| slot(a + d))).unwrap();
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            prop_assert!(lp_norm_rv(&x, exponent(p)) <= lp_norm_rv(&y, exponent(p)));
        }
    }

    #[test]
    fn kron_spectrum_is_outer_product(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let a = Matrix::random_gaussian(rng.random_range(1..=4), rng.random_range(1..=4), &mut rng).unwrap();
        let b = Matrix::random_gaussian(rng.random_range(1..=4), rng.random_range(1..=4), &mut rng).unwrap();
        let (sa, sb) = (singular_values(&a), singular_values(&b));
        let mut outer: Vec<f64> = sa.values().iter()
            .flat_map(|u| sb.values().iter().map(move |v| u * v)).collect();
        outer.sort_by(|u, v| v.total_cmp(u));
        let sk = singular_values(&kron(&a, &b).unwrap());
        // rank is at most the outer-product length; the rest of the spectrum is zero
        outer.resize(sk.values().len().max(outer.len()), 0.0);
        prop_assert_eq!(sk.values().len(), outer.len());
        for (u, v) in sk.values().iter().zip(&outer) {
            prop_assert!((u - v).abs() <= 1e-9);
        }
        for p in [1.0, 2.0, f64::INFINITY] {
            let lhs = schatten_norm(&kron(&a, &b).unwrap(), exponent(p)).unwrap();
            let rhs = schatten_norm(&a, exponent(p)).unwrap() * schatten_norm(&b, exponent(p)).unwrap();
            prop_assert!(rel(lhs, rhs) <= 1e-9);
        }
    }

    #[test]
    fn schatten_is_unitarily_invariant(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, c) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let a = Matrix::random_gaussian(r, c, &mut rng).unwrap();
        let u = random_orthogonal(r, &mut rng).unwrap();
        let v = random_orthogonal(c, &mut rng).unwrap();
        let uav = u.matmul(&a).unwrap().matmul(&v).unwrap();
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            let d = schatten_norm(&uav, exponent(p)).unwrap() - schatten_norm(&a, exponent(p)).unwrap();
            prop_assert!(d.abs() <= 1e-10);
        }
    }

    #[test]
    fn svd_residuals_are_small(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = rng.random_range(1..=6);
        let r = rng.random_range(c..=6);
        let a = Matrix::random_gaussian(r, c, &mut rng).unwrap();
        let ata = a.transpose().matmul(&a).unwrap();
        for (sigma, v) in svd_right(&a).unwrap() {
            let av = ata.matmul(&Matrix::new(c, 1, v.clone()).unwrap()).unwrap();
            let res = av.entries().iter().zip(&v)
                .map(|(x, vi)| (x - sigma * sigma * vi).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-10);
        }
    }
}

#[test]
fn characterize_is_deterministic() {
    let cfg = CharacterizeConfig {
        samples: 100,
        ..CharacterizeConfig::default()
    };
    for o in [
        Box::new(LpNorm(exponent(3.0))) as Box<dyn NormOracle>,
        Box::new(KyFanNorm::new(2).unwrap()),
    ] {
        assert_eq!(characterize(&o, &cfg).unwrap(), characterize(&o, &cfg).unwrap());
    }
}

#[test]
fn witnesses_are_sound() {
    let cfg = CharacterizeConfig {
        samples: 200,
        ..CharacterizeConfig::default()
    };
    let oracles: Vec<Box<dyn NormOracle>> = vec![
        Box::new(KyFanNorm::new(2).unwrap()),
        Box::new(KyFanNorm::new(3).unwrap()),
        Box::new(normforge::seqcore::FnOracle::new("half-l1", |x: &FiniteSequence| {
            0.5 * lp_norm(x, exponent(1.0))
        })),
        Box::new(normforge::seqcore::FnOracle::new("l2-squared", |x: &FiniteSequence| {
            lp_norm(x, exponent(2.0)).powi(2)
        })),
    ];
    for o in &oracles {
        let r = characterize(o, &cfg).unwrap();
        assert!(r.verdict.is_violation(), "{}", o.label());
        let w = r.witness.clone().unwrap();
        let fresh = reproduce_defect(o, r.check.unwrap(), &w);
        assert!(fresh > cfg.tolerance, "{}: {fresh}", o.label());
    }
}

#[test]
fn diagonal_embedding_recovers_p() {
    let cfg = CharacterizeConfig {
        samples: 150,
        ..CharacterizeConfig::default()
    };
    for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
        let r = characterize(&SchattenDiag(exponent(p)), &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::ConsistentLp);
        let est = r.p_estimate.unwrap();
        if p.is_infinite() {
            assert!(est.is_infinite());
        } else {
            assert!((est.value() - p).abs() <= 1e-6);
        }
    }
}

#[test]
fn bernoulli_semigroup_small() {
    for n in 1..=12u64 {
        for m in 1..=12u64 {
            let prod = independent_product(&bernoulli(n).unwrap(), &bernoulli(m).unwrap());
            assert!(same_distribution(&prod, &bernoulli(n * m).unwrap()));
        }
    }
}
