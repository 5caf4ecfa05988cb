use proptest::prelude::*;

use addsys::bounds::{default_bounds, maincor_bound, theorem1_bounds, MeanValuePlugin, PluginKind, PluginRegistry};
use addsys::DegreeProfile;

fn ktilde_plugins(prof: &DegreeProfile) -> Vec<MeanValuePlugin> {
    (0..prof.t)
        .map(|h| {
            let kt = prof.k_tilde[h] as u64;
            MeanValuePlugin {
                kind: PluginKind::V0,
                degrees: prof.degree_set(h),
                value: kt * (kt - 1),
                source: "test".into(),
                applicable: String::new(),
                asymptotic: false,
                caveats: Vec::new(),
            }
        })
        .collect()
}

/// `2 mu k(k-1) + 2 sum_{h<t} (mu_h - mu_{h+1}) max(k~_h(k~_h-1), k(1+varpi_h)/2) + 1`
fn corollary_formula(prof: &DegreeProfile) -> u64 {
    let k = prof.k as u64;
    let mut total = 2 * prof.mu_min as u64 * k * (k - 1) + 1;
    for h in 0..prof.t - 1 {
        let kt = prof.k_tilde[h] as u64;
        let drop = (prof.mu[h] - prof.mu[h + 1]) as u64;
        total += drop * (2 * kt * (kt - 1)).max(k * (1 + prof.varpi[h] as u64));
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]

    #[test]
    fn theorem1_reproduces_corollary(degrees in prop::collection::vec(3u32..=9, 1..=10)) {
        let prof = DegreeProfile::from_degrees(&degrees).unwrap();
        let want = corollary_formula(&prof);
        let via_theorem = theorem1_bounds(&prof, None, Some(&ktilde_plugins(&prof))).unwrap();
        prop_assert_eq!(via_theorem.tg_star_upper, Some(want));
        prop_assert_eq!(maincor_bound(&prof).unwrap().tg_star_upper, Some(want));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(500) })]

    #[test]
    fn adding_an_equation_never_lowers_bounds(
        degrees in prop::collection::vec(2u32..=8, 1..=8),
        extra in 2u32..=8,
    ) {
        let reg = PluginRegistry::default();
        let before = default_bounds(&DegreeProfile::from_degrees(&degrees).unwrap(), &reg).unwrap();
        let mut more = degrees.clone();
        more.push(extra);
        let after = default_bounds(&DegreeProfile::from_degrees(&more).unwrap(), &reg).unwrap();
        prop_assert!(after.tg_star_upper >= before.tg_star_upper, "{:?} -> {:?}", degrees, more);
        prop_assert!(after.g_star_upper >= before.g_star_upper, "{:?} -> {:?}", degrees, more);
    }

    /// `G~* - 1` is twice a sum of integers and half-integers; it is even
    /// exactly when the half-integer barriers occur an even number of times.
    #[test]
    fn full_range_bound_parity(degrees in prop::collection::vec(1u32..=10, 1..=10)) {
        let rep = default_bounds(&DegreeProfile::from_degrees(&degrees).unwrap(), &PluginRegistry::default()).unwrap();
        let odd_terms: u64 = rep
            .per_level
            .iter()
            .filter(|lb| lb.plugin.kind == PluginKind::V0 && lb.s_twice % 2 == 1)
            .map(|lb| lb.multiplicity_drop as u64)
            .sum();
        prop_assert_eq!(rep.tg_star_upper.unwrap() % 2, (1 + odd_terms) % 2);
        if odd_terms == 0 {
            prop_assert_eq!(rep.tg_star_upper.unwrap() % 2, 1);
        }
    }

    #[test]
    fn totals_recompute_from_levels(degrees in prop::collection::vec(1u32..=10, 1..=10)) {
        let prof = DegreeProfile::from_degrees(&degrees).unwrap();
        let rep = default_bounds(&prof, &PluginRegistry::default()).unwrap();
        let mut g = prof.m as u64;
        let mut tg = 1;
        for lb in &rep.per_level {
            prop_assert_eq!(lb.s_twice, (2 * lb.plugin.value).max(lb.barrier_twice));
            match lb.plugin.kind {
                PluginKind::U0 => g += lb.multiplicity_drop as u64 * lb.s_twice,
                PluginKind::V0 => tg += lb.multiplicity_drop as u64 * lb.s_twice,
            }
        }
        prop_assert_eq!(rep.g_star_upper, Some(g));
        prop_assert_eq!(rep.tg_star_upper, Some(tg));
    }
}

#[test]
fn theorem_examples() {
    let reg = PluginRegistry::default();
    let tg = |d: &[u32]| default_bounds(&DegreeProfile::from_degrees(d).unwrap(), &reg).unwrap().tg_star_upper;
    assert_eq!(tg(&[3, 3, 2]), Some(25));
    assert_eq!(tg(&[6, 3, 3]), Some(73));
    assert_eq!(tg(&[4, 3, 3]), Some(37));
    assert_eq!(tg(&[7, 2, 2]), Some(99));
    // level {1,4} has barrier 9 * 3 / 2 = 13.5 above v_0 = 12, so the total is even
    assert_eq!(tg(&[4, 1, 4, 1, 9]), Some(172));
}
