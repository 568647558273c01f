//! Monomial exponent bookkeeping: the sets `I(n,d)` of nonnegative integer
//! vectors of length `n` summing to `d`, enumerated in a fixed graded
//! reverse-lexicographic order, plus indexed bases for Gram-matrix assembly.
//!
//! The order is the one anchor every compiler and enumeration shares; all
//! constraint indexing is derived from it, so it must be total and stable.

use std::collections::HashMap;

/// Binomial coefficient as `u128`; saturates are not needed at our sizes
/// (n + d stays far below 128) but overflow is checked in debug builds.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `|I(n,d)| = C(n+d−1, d)`.
pub fn count_exact_monomials(n: usize, d: usize) -> u128 {
    if n == 0 {
        return if d == 0 { 1 } else { 0 };
    }
    binomial((n + d - 1) as u64, d as u64)
}

/// Number of monomials of degree at most `d`: `C(n+d, d)`.
pub fn count_monomials_up_to(n: usize, d: usize) -> u128 {
    binomial((n + d) as u64, d as u64)
}

/// Visits every exponent vector in `I(n,d)` exactly once, in descending
/// graded reverse-lexicographic order: the exponent of the last variable
/// increases outermost. For n=3, d=2 the sequence is
/// (2,0,0), (1,1,0), (0,2,0), (1,0,1), (0,1,1), (0,0,2).
pub fn for_each_exact_degree(n: usize, d: usize, mut f: impl FnMut(&[u8])) {
    if n == 0 {
        if d == 0 {
            f(&[]);
        }
        return;
    }
    let mut buf = vec![0u8; n];
    // The exponent of the last variable ascends outermost; the prefix is
    // enumerated recursively in the same order.
    fn rec(buf: &mut Vec<u8>, prefix_len: usize, rem: u8, f: &mut impl FnMut(&[u8])) {
        if prefix_len == 1 {
            buf[0] = rem;
            f(buf);
            return;
        }
        for k in 0..=rem {
            buf[prefix_len - 1] = k;
            rec(buf, prefix_len - 1, rem - k, f);
        }
    }
    rec(&mut buf, n, d as u8, &mut f);
}

/// An ordered monomial basis with O(1) index lookup.
///
/// `Exact` holds `I(n,d)`; `UpTo` holds all monomials of degree ≤ d, graded
/// by ascending degree with the same in-degree order as `for_each_exact_degree`.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n: usize,
    d: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl MonomialBasis {
    pub fn exact(n: usize, d: usize) -> Self {
        let mut monomials = Vec::new();
        for_each_exact_degree(n, d, |m| monomials.push(m.to_vec()));
        Self::from_list(n, d, monomials)
    }

    pub fn up_to(n: usize, d: usize) -> Self {
        let mut monomials = Vec::new();
        for deg in 0..=d {
            for_each_exact_degree(n, deg, |m| monomials.push(m.to_vec()));
        }
        Self::from_list(n, d, monomials)
    }

    fn from_list(n: usize, d: usize, monomials: Vec<Vec<u8>>) -> Self {
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        MonomialBasis { n, d, monomials, index }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn mono(&self, i: usize) -> &[u8] {
        &self.monomials[i]
    }

    pub fn index_of(&self, m: &[u8]) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.monomials.iter().map(|m| m.as_slice())
    }
}

/// Sum of two exponent vectors.
pub fn mono_mul(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Componentwise difference `a - b` if `a ≥ b` pointwise.
pub fn mono_div(a: &[u8], b: &[u8]) -> Option<Vec<u8>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.checked_sub(*y))
        .collect()
}

pub fn mono_degree(a: &[u8]) -> usize {
    a.iter().map(|&e| e as usize).sum()
}

/// `d! / (a_1! a_2! ... a_n!)` as f64 (exact for the small degrees used here).
pub fn multinomial(a: &[u8]) -> f64 {
    let d = mono_degree(a);
    let mut acc = 1.0f64;
    let mut seen = 0usize;
    for &e in a {
        for j in 1..=(e as usize) {
            seen += 1;
            acc = acc * seen as f64 / j as f64;
        }
    }
    debug_assert_eq!(seen, d);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_order_matches_grevlex() {
        let mut seen = Vec::new();
        for_each_exact_degree(3, 2, |m| seen.push(m.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![0, 2, 0],
                vec![1, 0, 1],
                vec![0, 1, 1],
                vec![0, 0, 2],
            ]
        );
    }

    #[test]
    fn counts_match_binomials() {
        for n in 1..6 {
            for d in 0..6 {
                let mut count = 0u128;
                for_each_exact_degree(n, d, |_| count += 1);
                assert_eq!(count, count_exact_monomials(n, d), "n={n} d={d}");
            }
        }
        assert_eq!(count_monomials_up_to(3, 2), 10);
    }

    #[test]
    fn basis_round_trips_indices() {
        let b = MonomialBasis::exact(4, 3);
        assert_eq!(b.len(), 20);
        for i in 0..b.len() {
            assert_eq!(b.index_of(b.mono(i)), Some(i));
        }
        let up = MonomialBasis::up_to(3, 2);
        assert_eq!(up.len(), 10);
        assert_eq!(up.mono(0), &[0, 0, 0]);
        assert_eq!(up.index_of(&[0, 1, 1]), Some(8));
    }

    #[test]
    fn multinomial_small_cases() {
        assert_eq!(multinomial(&[2, 0]), 1.0);
        assert_eq!(multinomial(&[1, 1]), 2.0);
        assert_eq!(multinomial(&[1, 1, 1]), 6.0);
        assert_eq!(multinomial(&[2, 1]), 3.0);
        assert_eq!(multinomial(&[0, 4]), 1.0);
    }

    #[test]
    fn mono_arithmetic() {
        assert_eq!(mono_mul(&[1, 0, 2], &[0, 1, 1]), vec![1, 1, 3]);
        assert_eq!(mono_div(&[1, 1, 3], &[0, 1, 1]), Some(vec![1, 0, 2]));
        assert_eq!(mono_div(&[1, 0, 0], &[0, 1, 0]), None);
        assert_eq!(mono_degree(&[2, 1, 0]), 3);
    }
}
