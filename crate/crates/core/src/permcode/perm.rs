//! Small permutation utilities on 0-based index slices.
//!
//! Permutations are stored as `Vec<u8>` of 0-based images; the public
//! [`Codeword`](super::Codeword) type adds the 1-based symbol convention on top.

/// Number of permutations of `m` letters, `None` on `u64` overflow.
pub fn factorial(m: usize) -> Option<u64> {
    (1..=m as u64).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

/// All permutations of `0..m` in lexicographic order.
pub fn all_permutations(m: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut p: Vec<u8> = (0..m as u8).collect();
    loop {
        out.push(p.clone());
        if !next_permutation(&mut p) {
            break;
        }
    }
    out
}

/// Advances `p` to its lexicographic successor; returns false when `p` was last.
pub fn next_permutation(p: &mut [u8]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Lexicographic rank of a permutation of `0..p.len()` (Lehmer code).
pub fn rank(p: &[u8]) -> u64 {
    let m = p.len();
    let mut r = 0u64;
    for i in 0..m {
        let smaller = p[i + 1..].iter().filter(|&&x| x < p[i]).count() as u64;
        r = r * (m - i) as u64 + smaller;
    }
    r
}

/// Inverse of [`rank`].
pub fn unrank(m: usize, mut r: u64) -> Vec<u8> {
    let mut digits = vec![0usize; m];
    for i in (0..m).rev() {
        let base = (m - i) as u64;
        digits[i] = (r % base) as usize;
        r /= base;
    }
    let mut pool: Vec<u8> = (0..m as u8).collect();
    digits.into_iter().map(|d| pool.remove(d)).collect()
}

pub fn inverse(p: &[u8]) -> Vec<u8> {
    let mut inv = vec![0u8; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x as usize] = i as u8;
    }
    inv
}

/// `(a ∘ b)[i] = a[b[i]]`.
pub fn compose(a: &[u8], b: &[u8]) -> Vec<u8> {
    b.iter().map(|&x| a[x as usize]).collect()
}

/// Sorted (descending) cycle lengths, fixed points included.
pub fn cycle_type(p: &[u8]) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut lens = Vec::new();
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = p[x] as usize;
            len += 1;
        }
        lens.push(len);
    }
    lens.sort_unstable_by(|a, b| b.cmp(a));
    lens
}

pub fn is_even(p: &[u8]) -> bool {
    let cycles = cycle_type(p);
    // a k-cycle is a product of k-1 transpositions
    cycles.iter().map(|&k| k - 1).sum::<usize>() % 2 == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_unrank_inverse() {
        for m in 1..=6 {
            for (i, p) in all_permutations(m).iter().enumerate() {
                assert_eq!(rank(p), i as u64);
                assert_eq!(&unrank(m, i as u64), p);
            }
        }
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), Some(1));
        assert_eq!(factorial(5), Some(120));
        assert_eq!(factorial(20), Some(2_432_902_008_176_640_000));
        assert_eq!(factorial(21), None);
    }

    #[test]
    fn parity_and_cycles() {
        assert!(is_even(&[0, 1, 2]));
        assert!(!is_even(&[1, 0, 2]));
        assert!(is_even(&[1, 2, 0]));
        assert_eq!(cycle_type(&[1, 0, 3, 2, 4]), vec![2, 2, 1]);
        let p = [2u8, 0, 3, 1];
        assert_eq!(compose(&p, &inverse(&p)), vec![0, 1, 2, 3]);
    }
}
