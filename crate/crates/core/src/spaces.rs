//! Candidate quantizer families: exhaustive composition/partition spaces,
//! counting helpers, and the structured one-big-bin family.

use crate::error::{Error, Result};
use crate::quantizer::Quantizer;

/// Compositions of `l` grow as `2^(l−1)`; enumeration refuses beyond this.
pub const COMPOSITION_ENUM_CAP: usize = 24;

/// Partitions grow subexponentially; this cap keeps memory within reason.
pub const PARTITION_ENUM_CAP: usize = 80;

/// All `2^(l−1)` compositions of `l` (ordered bin tuples), first part
/// descending. Includes the single-bin `(l)`.
pub fn enumerate_compositions(l: usize) -> Result<Vec<Quantizer>> {
    enumerate_compositions_capped(l, COMPOSITION_ENUM_CAP)
}

pub fn enumerate_compositions_capped(l: usize, cap: usize) -> Result<Vec<Quantizer>> {
    if l == 0 {
        return Err(Error::InvalidParameter("support size must be >= 1".into()));
    }
    if l > cap {
        return Err(Error::CapacityExceeded(format!(
            "compositions of {l} requested, cap is {cap} (2^{} tuples)",
            l - 1
        )));
    }
    let mut out = Vec::with_capacity(1 << (l - 1));
    let mut prefix = Vec::new();
    fn rec(remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Quantizer>) {
        if remaining == 0 {
            out.push(Quantizer::new(prefix.clone()).expect("parts are positive"));
            return;
        }
        for first in (1..=remaining).rev() {
            prefix.push(first);
            rec(remaining - first, prefix, out);
            prefix.pop();
        }
    }
    rec(l, &mut prefix, &mut out);
    Ok(out)
}

/// All partitions of `l` in canonical non-increasing part order, largest
/// first part descending. Includes the single-bin `(l)`.
pub fn enumerate_partitions(l: usize) -> Result<Vec<Quantizer>> {
    enumerate_partitions_capped(l, PARTITION_ENUM_CAP)
}

pub fn enumerate_partitions_capped(l: usize, cap: usize) -> Result<Vec<Quantizer>> {
    if l == 0 {
        return Err(Error::InvalidParameter("support size must be >= 1".into()));
    }
    if l > cap {
        return Err(Error::CapacityExceeded(format!(
            "partitions of {l} requested, cap is {cap}"
        )));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    fn rec(remaining: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Quantizer>) {
        if remaining == 0 {
            out.push(Quantizer::new(prefix.clone()).expect("parts are positive"));
            return;
        }
        for part in (1..=remaining.min(max_part)).rev() {
            prefix.push(part);
            rec(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    rec(l, l, &mut prefix, &mut out);
    Ok(out)
}

/// Exact number of partitions of `l`, via Euler's pentagonal-number
/// recurrence.
pub fn partition_count(l: usize) -> u64 {
    let mut p = vec![0i128; l + 1];
    p[0] = 1;
    for n in 1..=l {
        let mut total = 0i128;
        let mut k = 1usize;
        loop {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > n {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            total += sign * p[n - g1];
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= n {
                total += sign * p[n - g2];
            }
            k += 1;
        }
        p[n] = total;
    }
    p[l] as u64
}

/// Hardy–Ramanujan asymptotic for the partition count:
/// `exp(π √(2l/3)) / (4 l √3)`.
pub fn hardy_ramanujan_estimate(l: usize) -> f64 {
    assert!(l >= 1);
    let lf = l as f64;
    (std::f64::consts::PI * (2.0 * lf / 3.0).sqrt()).exp() / (4.0 * lf * 3.0f64.sqrt())
}

/// The one-big-bin family: for each `k = 2 … l`, the quantizer
/// `(l−k+1, 1, …, 1)` with `k−1` unit bins at the top. `l−1` members, all in
/// canonical partition order.
pub fn extended_max_search_family(l: usize) -> Result<Vec<Quantizer>> {
    if l == 0 {
        return Err(Error::InvalidParameter("support size must be >= 1".into()));
    }
    (2..=l)
        .map(|k| {
            let mut bins = vec![l - k + 1];
            bins.resize(k, 1);
            Quantizer::new(bins)
        })
        .collect()
}

/// Halving split `(⌈l/2⌉, ⌊l/2⌋)`.
pub fn binary_split_quantizer(l: usize) -> Result<Quantizer> {
    if l < 2 {
        return Err(Error::InvalidParameter(
            "binary split needs at least two values".into(),
        ));
    }
    Quantizer::new(vec![l - l / 2, l / 2])
}

/// A rule for generating the candidate quantizers the solver may pick from at
/// a state with a given support size.
#[derive(Debug, Clone, PartialEq)]
pub enum SearchSpace {
    /// Every ordered bin tuple (exact but exponential).
    Compositions,
    /// Every non-increasing bin tuple (exact under bin-reordering symmetry).
    Partitions,
    /// The one-big-bin family.
    ExtendedMaxSearch,
    /// The one-big-bin family plus the halving split.
    BinaryPlusExtended,
    /// A fixed list; candidates for a support are the members covering it.
    Explicit(Vec<Quantizer>),
}

impl SearchSpace {
    /// Candidate quantizers for a support of size `l`. Single-bin candidates
    /// are kept here; the solver skips them at non-terminal states.
    pub fn candidates(&self, l: usize) -> Result<Vec<Quantizer>> {
        match self {
            SearchSpace::Compositions => enumerate_compositions(l),
            SearchSpace::Partitions => enumerate_partitions(l),
            SearchSpace::ExtendedMaxSearch => extended_max_search_family(l),
            SearchSpace::BinaryPlusExtended => {
                let mut family = extended_max_search_family(l)?;
                if l >= 2 {
                    let split = binary_split_quantizer(l)?;
                    if !family.contains(&split) {
                        family.push(split);
                    }
                }
                Ok(family)
            }
            SearchSpace::Explicit(list) => {
                Ok(list.iter().filter(|q| q.total() == l).cloned().collect())
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SearchSpace::Compositions => "compositions",
            SearchSpace::Partitions => "partitions",
            SearchSpace::ExtendedMaxSearch => "extended-max-search",
            SearchSpace::BinaryPlusExtended => "binary-plus-extended",
            SearchSpace::Explicit(_) => "explicit",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn bins(list: &[Quantizer]) -> Vec<Vec<usize>> {
        list.iter().map(|q| q.bins().to_vec()).collect()
    }

    #[test]
    fn compositions_of_three() {
        let c = enumerate_compositions(3).unwrap();
        assert_eq!(
            bins(&c),
            vec![vec![3], vec![2, 1], vec![1, 2], vec![1, 1, 1]]
        );
    }

    #[test]
    fn composition_counts_and_cap() {
        assert_eq!(enumerate_compositions(1).unwrap().len(), 1);
        for l in 1..=12 {
            assert_eq!(enumerate_compositions(l).unwrap().len(), 1 << (l - 1));
        }
        assert_eq!(enumerate_compositions(16).unwrap().len(), 32768);
        assert!(matches!(
            enumerate_compositions(COMPOSITION_ENUM_CAP + 1),
            Err(Error::CapacityExceeded(_))
        ));
        assert!(enumerate_compositions_capped(6, 5).is_err());
        assert!(enumerate_compositions(0).is_err());
    }

    #[test]
    fn partitions_of_four() {
        let p = enumerate_partitions(4).unwrap();
        assert_eq!(
            bins(&p),
            vec![
                vec![4],
                vec![3, 1],
                vec![2, 2],
                vec![2, 1, 1],
                vec![1, 1, 1, 1]
            ]
        );
    }

    #[test]
    fn partitions_are_canonical_and_counted() {
        for l in 1..=14 {
            let parts = enumerate_partitions(l).unwrap();
            assert_eq!(parts.len() as u64, partition_count(l), "l = {l}");
            for q in &parts {
                assert!(q.bins().windows(2).all(|w| w[0] >= w[1]), "{q}");
                assert_eq!(q.total(), l);
            }
            let unique: HashSet<_> = parts.iter().map(|q| q.bins().to_vec()).collect();
            assert_eq!(unique.len(), parts.len());
        }
        assert!(matches!(
            enumerate_partitions(PARTITION_ENUM_CAP + 1),
            Err(Error::CapacityExceeded(_))
        ));
    }

    #[test]
    fn partitions_are_the_sorted_compositions() {
        for l in 1..=9 {
            let sorted_comps: HashSet<Vec<usize>> = enumerate_compositions(l)
                .unwrap()
                .iter()
                .map(|q| {
                    let mut b = q.bins().to_vec();
                    b.sort_unstable_by(|a, b| b.cmp(a));
                    b
                })
                .collect();
            let parts: HashSet<Vec<usize>> = enumerate_partitions(l)
                .unwrap()
                .iter()
                .map(|q| q.bins().to_vec())
                .collect();
            assert_eq!(sorted_comps, parts, "l = {l}");
        }
    }

    #[test]
    fn partition_count_known_values() {
        let known = [1u64, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42];
        for (l, &want) in known.iter().enumerate() {
            assert_eq!(partition_count(l), want, "p({l})");
        }
        assert_eq!(partition_count(46), 105558);
        assert_eq!(partition_count(100), 190569292);
    }

    #[test]
    fn hardy_ramanujan_is_in_the_right_ballpark() {
        for l in [10usize, 50, 100] {
            let ratio = hardy_ramanujan_estimate(l) / partition_count(l) as f64;
            assert!((0.9..=1.2).contains(&ratio), "l = {l}: ratio {ratio}");
        }
    }

    #[test]
    fn one_big_bin_family() {
        let fam = extended_max_search_family(4).unwrap();
        assert_eq!(
            bins(&fam),
            vec![vec![3, 1], vec![2, 1, 1], vec![1, 1, 1, 1]]
        );

        let fam5 = extended_max_search_family(5).unwrap();
        assert!(fam5.iter().any(|q| q.bins() == [2, 1, 1, 1]));

        for l in 2..=64 {
            let fam = extended_max_search_family(l).unwrap();
            assert_eq!(fam.len(), l - 1, "l = {l}");
            let parts: HashSet<Vec<usize>> = if l <= 14 {
                enumerate_partitions(l)
                    .unwrap()
                    .iter()
                    .map(|q| q.bins().to_vec())
                    .collect()
            } else {
                continue;
            };
            for q in &fam {
                assert!(parts.contains(q.bins()), "{q} not a partition");
            }
        }
    }

    #[test]
    fn binary_splits() {
        assert_eq!(binary_split_quantizer(16).unwrap().bins(), [8, 8]);
        assert_eq!(binary_split_quantizer(2).unwrap().bins(), [1, 1]);
        assert_eq!(binary_split_quantizer(5).unwrap().bins(), [3, 2]);
        assert!(binary_split_quantizer(1).is_err());
    }

    #[test]
    fn search_space_candidates() {
        assert_eq!(SearchSpace::Compositions.candidates(3).unwrap().len(), 4);
        assert_eq!(SearchSpace::Partitions.candidates(4).unwrap().len(), 5);

        // (2,2) is not in the one-big-bin family of 4, so it is appended…
        let b4 = SearchSpace::BinaryPlusExtended.candidates(4).unwrap();
        assert_eq!(b4.len(), 4);
        assert!(b4.iter().any(|q| q.bins() == [2, 2]));
        // …while (1,1) already is for l = 2.
        let b2 = SearchSpace::BinaryPlusExtended.candidates(2).unwrap();
        assert_eq!(bins(&b2), vec![vec![1, 1]]);

        let list = vec![
            Quantizer::new(vec![2, 2]).unwrap(),
            Quantizer::new(vec![3, 1]).unwrap(),
            Quantizer::new(vec![2, 1]).unwrap(),
        ];
        let explicit = SearchSpace::Explicit(list);
        assert_eq!(explicit.candidates(4).unwrap().len(), 2);
        assert_eq!(explicit.candidates(3).unwrap().len(), 1);
        assert_eq!(explicit.candidates(7).unwrap().len(), 0);
    }
}
