use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

use addsys::density::{
    chi_inf, chi_p, count_mod, count_mod_naive, predicted_constant, singular_series, ChiInfMethod, DepthPolicy,
};
use addsys::{parse_system, AdditiveSystem};

fn small_system() -> impl Strategy<Value = AdditiveSystem> {
    (2usize..=4, 1usize..=2).prop_flat_map(|(s, r)| {
        (
            prop::collection::vec(1u32..=3, r),
            prop::collection::vec(prop::collection::vec(prop::sample::select(vec![-3i64, -2, -1, 1, 2, 3, 6]), s), r),
        )
            .prop_map(|(d, c)| AdditiveSystem::new(d, c).unwrap())
    })
}

fn prime_power() -> impl Strategy<Value = (u64, u32)> {
    prop::sample::select(vec![(2u64, 1u32), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3), (3, 4), (5, 1), (5, 2), (7, 2)])
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(60) })]

    #[test]
    fn residue_counts_match_enumeration(sys in small_system(), (p, i) in prime_power()) {
        prop_assume!(p.pow(i) <= 81);
        prop_assert_eq!(count_mod(&sys, p, i).unwrap(), count_mod_naive(&sys, p, i).unwrap());
    }

    #[test]
    fn densities_telescope(sys in small_system(), p in prop::sample::select(vec![2u64, 3, 5])) {
        let policy = DepthPolicy { max_depth: 3, min_depth: 3, ..DepthPolicy::default() };
        let d = chi_p(&sys, p, &policy).unwrap();
        let mut acc = BigRational::one();
        for (chi, a) in d.chi_estimates.iter().zip(&d.a_values) {
            acc += a;
            prop_assert_eq!(&acc, chi);
        }
        let q = BigRational::from_integer(p.into());
        let scale = q.pow(-(d.depth as i32 * (sys.s() - sys.r()) as i32));
        let m = BigRational::from_integer(d.m_values.last().unwrap().clone().into());
        prop_assert_eq!(d.chi_estimates.last().unwrap(), &(m * scale));
    }
}

#[test]
fn certified_linear_densities_are_constant() {
    for text in ["1: 1 -1 1", "1: 2 -3 5 1\n1: 1 1 -1 -1"] {
        let sys = parse_system(text).unwrap();
        for p in [2u64, 3, 5, 7] {
            let policy = DepthPolicy { max_depth: 4, min_depth: 3, ..DepthPolicy::default() };
            let d = chi_p(&sys, p, &policy).unwrap();
            assert!(d.depth >= 3);
            if d.hensel_certified {
                assert!(d.a_values[1..].iter().all(Zero::is_zero), "{text} at {p}");
                assert!(d.stabilized, "{text} at {p}: depth {} {:?}", d.depth, d.note);
            }
        }
    }
}

#[test]
fn certified_quadratic_corrections_decay() {
    // the origin is always singular, so A(p^j) shrinks without vanishing
    let sys = parse_system("2: 1 1 1 1 1 -1").unwrap();
    for p in [3u64, 5] {
        let policy = DepthPolicy { max_depth: 4, min_depth: 4, ..DepthPolicy::default() };
        let d = chi_p(&sys, p, &policy).unwrap();
        assert!(d.hensel_certified);
        let mags: Vec<f64> = d.a_values.iter().map(|a| a.abs().to_f64().unwrap()).collect();
        for w in mags[1..].windows(2) {
            assert!(w[1] <= w[0] / p as f64, "p={p}: {mags:?}");
        }
    }
}

#[test]
fn large_primes_have_density_near_one() {
    let sys = parse_system("2: 1 1 1 1 1 -1").unwrap();
    for p in [101u64, 103] {
        let policy = DepthPolicy { max_depth: 2, ..DepthPolicy::default() };
        let chi = chi_p(&sys, p, &policy).unwrap().chi_f64();
        assert!((0.5..=2.0).contains(&chi), "p={p}: {chi}");
    }
}

#[test]
fn volume_and_fourier_agree() {
    let sys = parse_system("2: 1 1 -1 -1").unwrap();
    let four = chi_inf(&sys, &ChiInfMethod::fourier(50.0)).unwrap();
    for seed in 0..4 {
        let vol = chi_inf(&sys, &ChiInfMethod::volume(1_000_000, seed)).unwrap();
        let tol = vol.error() + four.error();
        println!("seed {seed}: volume {} +- {}, fourier {} +- {}", vol.value, vol.error(), four.value, four.error());
        assert!((vol.value - four.value).abs() < tol, "seed {seed}: {} vs {} (tol {tol})", vol.value, four.value);
    }
}

#[test]
fn halving_the_slab_is_stable() {
    let sys = parse_system("3: 1 2 -2 -1").unwrap();
    for seed in 0..4 {
        let at = |eps0: f64| {
            let method = ChiInfMethod::Volume { eps0, levels: 3, samples: 1_000_000, batches: 64, seed };
            chi_inf(&sys, &method).unwrap()
        };
        let a = at(0.1);
        let b = at(0.05);
        println!("seed {seed}: eps0 0.1 {} +- {}, eps0 0.05 {} +- {}", a.value, a.error(), b.value, b.error());
        assert!((a.value - b.value).abs() < a.error() + b.error(), "seed {seed}: {} vs {}", a.value, b.value);
    }
}

#[test]
fn constant_ignores_row_scaling() {
    let sys = parse_system("1: 1 -1 1").unwrap();
    let scaled = sys.scale_row(0, 6).unwrap();
    let policy = DepthPolicy::default();
    let method = ChiInfMethod::volume(1_000_000, 3);
    let c = |s: &AdditiveSystem| {
        let inf = chi_inf(s, &method).unwrap();
        predicted_constant(&inf, &singular_series(s, 23, &policy).unwrap())
    };
    let (a, b) = (c(&sys), c(&scaled));
    assert!((a.c - 0.5).abs() < 3.0 * a.error + 0.01, "{a:?}");
    assert!((a.c - b.c).abs() < 3.0 * (a.error + b.error) + 0.01, "{} vs {}", a.c, b.c);
}
