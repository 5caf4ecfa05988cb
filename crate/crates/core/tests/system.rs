use proptest::prelude::*;

use addsys::system::{check_highly_nonsingular, derive_profile, CheckMode, DegreeProfile};
use addsys::{parse_system, AdditiveSystem};

fn system_strategy(s_max: usize, r_max: usize, d_max: u32, coeffs: &'static [i64]) -> impl Strategy<Value = AdditiveSystem> {
    (1..=s_max, 1..=r_max).prop_flat_map(move |(s, r)| {
        (
            prop::collection::vec(1..=d_max, r),
            prop::collection::vec(prop::collection::vec(prop::sample::select(coeffs), s), r),
        )
            .prop_map(|(d, c)| AdditiveSystem::new(d, c).unwrap())
    })
}

fn det(m: &[Vec<i64>]) -> i128 {
    match m.len() {
        1 => m[0][0] as i128,
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[0][j] as i128 * det(&minor)
            })
            .sum(),
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Every degree shared by `mu` equations needs all `mu x mu` column minors of
/// those equations to be nonzero.
fn naive_highly_nonsingular(sys: &AdditiveSystem) -> bool {
    let mut degrees = sys.degrees().to_vec();
    degrees.dedup();
    degrees.iter().all(|&d| {
        let rows: Vec<usize> = (0..sys.r()).filter(|&i| sys.degrees()[i] == d).collect();
        subsets(sys.s(), rows.len()).iter().all(|cols| {
            let m: Vec<Vec<i64>> = rows.iter().map(|&i| cols.iter().map(|&j| sys.coeff(i, j)).collect()).collect();
            det(&m) != 0
        })
    })
}

fn profile_order_degrees(prof: &DegreeProfile) -> Vec<u32> {
    let mut out = Vec::new();
    for (l, ks) in prof.k_table.iter().enumerate() {
        for &k in ks {
            out.extend(std::iter::repeat(k).take(prof.mu[l]));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(1000) })]

    #[test]
    fn profile_identities(degrees in prop::collection::vec(1u32..=9, 1..=12)) {
        let prof = DegreeProfile::from_degrees(&degrees).unwrap();
        let r: usize = prof.mu.iter().zip(&prof.nu).map(|(m, n)| m * n).sum();
        prop_assert_eq!(r, degrees.len());
        prop_assert_eq!(*prof.r_index.last().unwrap().last().unwrap(), degrees.len());
        let k: u64 = prof.mu.iter().zip(&prof.k_partial).map(|(&m, &kl)| m as u64 * kl).sum();
        prop_assert_eq!(k, prof.total_degree);
        prop_assert_eq!(k, degrees.iter().map(|&d| d as u64).sum::<u64>());
        prop_assert!(prof.mu.windows(2).all(|w| w[0] > w[1]));
        let mut all: Vec<u32> = prof.k_table.iter().flatten().copied().collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(prof.m, prof.mu[0]);
        prop_assert_eq!(prof.k, *degrees.iter().max().unwrap());
        for h in 0..prof.t {
            prop_assert_eq!(prof.varpi[h], prof.nu[..=h].iter().sum::<usize>());
            prop_assert!(prof.k_table[h].windows(2).all(|w| w[0] < w[1]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(300) })]

    #[test]
    fn row_order_reproduces_system(sys in system_strategy(5, 6, 6, &[-3, -2, -1, 1, 2, 3])) {
        let prof = derive_profile(&sys);
        let via_order: Vec<u32> = prof.row_order.iter().map(|&i| sys.degrees()[i]).collect();
        prop_assert_eq!(&via_order, &profile_order_degrees(&prof));
        let mut back = via_order.clone();
        back.sort_unstable_by(|a, b| b.cmp(a));
        prop_assert_eq!(back, sys.degrees().to_vec());
        let mut input = sys.input_order().to_vec();
        input.sort_unstable();
        prop_assert_eq!(input, (0..sys.r()).collect::<Vec<_>>());
    }

    #[test]
    fn canonical_text_round_trips(sys in system_strategy(7, 4, 5, &[-9, -4, -1, 1, 2, 7, 100])) {
        let text = sys.to_canonical_text();
        let again = parse_system(&text).unwrap();
        prop_assert_eq!(again.degrees(), sys.degrees());
        prop_assert_eq!(again.coeffs(), sys.coeffs());
        prop_assert_eq!(again.to_canonical_text(), text);
        let from_json = AdditiveSystem::from_json(&sys.to_json()).unwrap();
        prop_assert_eq!(from_json.coeffs(), sys.coeffs());
    }

    #[test]
    fn exhaustive_check_matches_naive(sys in system_strategy(8, 3, 3, &[-2, -1, 1, 2])) {
        let prof = derive_profile(&sys);
        let rep = check_highly_nonsingular(&sys, &prof, CheckMode::default()).unwrap();
        prop_assert_eq!(rep.holds, naive_highly_nonsingular(&sys));
        prop_assert!(rep.certified);
        prop_assert_eq!(rep.witness.is_none(), rep.holds);
        if let Some(w) = &rep.witness {
            prop_assert_eq!(w.determinant(&sys), 0.into());
        }
    }

    #[test]
    fn verdict_survives_row_scaling(
        sys in system_strategy(6, 3, 3, &[-2, -1, 1, 2]),
        row in 0usize..3,
        factor in prop::sample::select(vec![-7i64, -2, 3, 5]),
    ) {
        let row = row % sys.r();
        let scaled = sys.scale_row(row, factor).unwrap();
        let prof = derive_profile(&sys);
        let a = check_highly_nonsingular(&sys, &prof, CheckMode::default()).unwrap();
        let b = check_highly_nonsingular(&scaled, &derive_profile(&scaled), CheckMode::default()).unwrap();
        prop_assert_eq!(a.holds, b.holds);
    }
}

#[test]
fn documented_examples() {
    let sys = parse_system("2 | 3: 1 1 1 ; 2: 1 1 -2").unwrap();
    assert_eq!(sys.degrees(), &[3, 2]);
    assert_eq!(sys.coeffs(), &[vec![1, 1, 1], vec![1, 1, -2]]);

    let err = parse_system("2: 1 0 1").unwrap_err().to_string();
    assert!(err.contains("zero coefficient at (1,2)"), "{err}");

    let sys = parse_system("2: 1 1 1\n2: 1 1 2").unwrap();
    let rep = check_highly_nonsingular(&sys, &derive_profile(&sys), CheckMode::default()).unwrap();
    assert!(!rep.holds);
    assert_eq!(rep.witness.unwrap().columns, vec![0, 1]);
}

#[test]
fn random_wide_matrices_hold() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let coeffs: Vec<Vec<i64>> = (0..2).map(|_| (0..6).map(|_| rng.gen_range(1..=100)).collect()).collect();
        let sys = AdditiveSystem::new(vec![3, 3], coeffs).unwrap();
        let rep = check_highly_nonsingular(&sys, &derive_profile(&sys), CheckMode::default()).unwrap();
        assert_eq!(rep.holds, naive_highly_nonsingular(&sys));
    }
}
