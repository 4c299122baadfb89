use permfsk_core::permcode::{
    cardinality_bound, even_permutation_code, hamming_distance, min_distance, perm, search_max_code, Budget,
    CodeBook, Codeword, TABLE3,
};
use proptest::prelude::*;

fn arb_perm(m: usize) -> impl Strategy<Value = Codeword> {
    Just((1..=m as u8).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|v| Codeword::new(v).unwrap())
}

proptest! {
    #[test]
    fn hamming_is_a_metric(
        (a, b, c) in (2usize..10).prop_flat_map(|m| (arb_perm(m), arb_perm(m), arb_perm(m)))
    ) {
        let ab = hamming_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, hamming_distance(&b, &a).unwrap());
        prop_assert_eq!(ab == 0, a == b);
        prop_assert!(ab != 1);
        let ac = hamming_distance(&a, &c).unwrap();
        let cb = hamming_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb);
    }

    #[test]
    fn codebook_text_round_trips(words in (2usize..8).prop_flat_map(|m| prop::collection::vec(arb_perm(m), 1..20))) {
        let m = words[0].len();
        let mut uniq = words.clone();
        uniq.sort();
        uniq.dedup();
        let book = CodeBook::with_order(m, uniq).unwrap();
        let text = book.to_text();
        let back = CodeBook::from_text(&text).unwrap();
        prop_assert_eq!(&back, &book);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn cached_distance_is_exact(words in (3usize..7).prop_flat_map(|m| prop::collection::vec(arb_perm(m), 2..12))) {
        let m = words[0].len();
        let mut uniq = words.clone();
        uniq.sort();
        uniq.dedup();
        prop_assume!(uniq.len() >= 2);
        let book = CodeBook::new(m, uniq).unwrap();
        let d = min_distance(&book).unwrap();
        prop_assert_eq!(book.d_min(), Some(d));
        prop_assert!(d >= 2);
        prop_assert!(book.words().windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn table3_sizes_are_certified() {
    for (m, d, size) in TABLE3 {
        let r = search_max_code(m, d, Budget::unlimited()).unwrap();
        assert!(r.proven_optimal, "M={m} d={d}");
        assert_eq!(r.size, size, "M={m} d={d}");
        assert!(min_distance(&r.best_code).unwrap() >= d);
    }
}

#[test]
fn distance_two_meets_the_bound() {
    for m in 2..=7 {
        let r = search_max_code(m, 2, Budget::unlimited()).unwrap();
        assert!(r.proven_optimal);
        assert_eq!(r.size as u64, perm::factorial(m).unwrap());
        assert_eq!(r.size as u128, cardinality_bound(m, 2).unwrap());
    }
}

#[test]
fn searched_codes_are_valid() {
    for m in 2..=6 {
        for d in 2..=m {
            let r = search_max_code(m, d, Budget::nodes(200_000)).unwrap();
            assert!(r.best_code.words().iter().all(|w| w.len() == m));
            if r.size >= 2 {
                assert!(min_distance(&r.best_code).unwrap() >= d);
            }
            assert!(r.size as u128 <= cardinality_bound(m, d).unwrap());
            assert_eq!(r.best_code.words()[0], Codeword::identity(m));
        }
    }
}

#[test]
fn even_permutation_code_distance() {
    for m in 3..=6 {
        let c = even_permutation_code(m).unwrap();
        assert_eq!(c.len() as u64, perm::factorial(m).unwrap() / 2);
        assert_eq!(min_distance(&c).unwrap(), 3);
    }
}
