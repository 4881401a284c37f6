//! Subset enumeration, combinadic ranking and subpacketization counts.
//!
//! Users are numbered from 0 internally and printed from 1. A [`Subset`] is a
//! bitmask over at most 32 users.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub const MAX_USERS: usize = 32;

/// C(n, k), zero when `k > n`.
pub fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial overflows u64")
}

/// C(n, k) for signed arguments; zero outside `0 <= k <= n`.
pub fn binom_i(n: i64, k: i64) -> u64 {
    if n < 0 || k < 0 || k > n {
        0
    } else {
        binom(n as usize, k as usize)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(k: usize) -> Subset {
        assert!(k <= MAX_USERS);
        if k == MAX_USERS {
            Subset(u32::MAX)
        } else {
            Subset((1u32 << k) - 1)
        }
    }

    pub fn singleton(user: usize) -> Subset {
        Subset(1 << user)
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Subset {
        Subset(members.into_iter().fold(0, |m, u| m | (1 << u)))
    }

    /// Builds from 1-based user labels.
    pub fn from_labels(labels: &[usize]) -> Subset {
        Subset::from_members(labels.iter().map(|&l| l - 1))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, user: usize) -> bool {
        user < MAX_USERS && self.0 >> user & 1 == 1
    }

    pub fn with(self, user: usize) -> Subset {
        Subset(self.0 | 1 << user)
    }

    pub fn without(self, user: usize) -> Subset {
        Subset(self.0 & !(1 << user))
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn minus(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    pub fn intersect(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Subset) -> bool {
        self.0 & other.0 == 0
    }

    /// Members in increasing order.
    pub fn members(self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let u = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(u)
            }
        })
    }

    /// Position of `user` among the members, if present.
    pub fn index_of(self, user: usize) -> Option<usize> {
        self.contains(user)
            .then(|| (self.0 & ((1u32 << user) - 1)).count_ones() as usize)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.iter().map(|u| (u + 1).to_string()).collect();
        write!(f, "{{{}}}", labels.join(","))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// All `k`-subsets of `0..n` in lexicographic order of their member lists.
pub fn enumerate_subsets(n: usize, k: usize) -> Vec<Subset> {
    assert!(n <= MAX_USERS);
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(binom(n, k) as usize);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(Subset::from_members(idx.iter().copied()));
        // rightmost position that can still advance
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            break;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// `k`-subsets of an arbitrary ground set, lexicographic in the ground order.
pub fn subsets_of(ground: Subset, k: usize) -> Vec<Subset> {
    let members = ground.members();
    enumerate_subsets(members.len(), k)
        .into_iter()
        .map(|s| Subset::from_members(s.iter().map(|i| members[i])))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SubsetRank {
    pub rank: u64,
    pub universe: usize,
    pub size: usize,
}

pub fn subset_rank(s: Subset, universe: usize) -> SubsetRank {
    let size = s.len();
    let mut rank = 0;
    let mut prev: Option<usize> = None;
    for (i, c) in s.iter().enumerate() {
        let start = prev.map_or(0, |p| p + 1);
        for j in start..c {
            rank += binom(universe - 1 - j, size - 1 - i);
        }
        prev = Some(c);
    }
    SubsetRank {
        rank,
        universe,
        size,
    }
}

pub fn subset_unrank(r: SubsetRank) -> Result<Subset> {
    let SubsetRank {
        rank,
        universe,
        size,
    } = r;
    if size > universe || rank >= binom(universe, size) {
        return Err(Error::RankOutOfRange {
            rank,
            universe,
            size,
        });
    }
    let mut left = rank;
    let mut out = Subset::EMPTY;
    let mut next = 0;
    for i in 0..size {
        let mut c = next;
        loop {
            let block = binom(universe - 1 - c, size - 1 - i);
            if left < block {
                break;
            }
            left -= block;
            c += 1;
        }
        out = out.with(c);
        next = c + 1;
    }
    Ok(out)
}

/// Rank of a subset of `ground` among the same-size subsets of `ground`.
pub fn rank_within(s: Subset, ground: Subset) -> u64 {
    let relabeled =
        Subset::from_members(s.iter().map(|u| ground.index_of(u).expect("not a subset")));
    subset_rank(relabeled, ground.len()).rank
}

/// Cache parameter that controls a scheme's subpacketization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Profile {
    Mt { t: usize },
    Grouped { t: usize },
    Feedback { t: usize },
    Decentralized { cache_prob: BigRational },
}

/// Fraction of a file held in each piece of the level-`s` sub-files under
/// the equal-size decentralized placement.
pub fn decentralized_piece_fraction(k: usize, l: usize, q: &BigRational, s: usize) -> BigRational {
    let d = (s + l - 1).min(k);
    let one = BigRational::one();
    let sub = pow(q, s - 1) * pow(&(&one - q), k - s + 1);
    sub / BigRational::from_integer(BigInt::from(binom(k - s, d - s)))
}

pub(crate) fn pow(x: &BigRational, e: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// Smallest file length whose every mandated fragment is a whole number of
/// symbols.
pub fn min_valid_f(profile: &Profile, k: usize, l: usize) -> Result<u64> {
    if l == 0 || k < l {
        return Err(Error::InvalidParams(format!(
            "need K >= L >= 1, got K={k}, L={l}"
        )));
    }
    match *profile {
        Profile::Mt { t } => {
            if t == k {
                return Ok(1);
            }
            if t + l > k {
                return Err(Error::InvalidParams(format!(
                    "t={t} needs t <= K-L={} or t = K",
                    k - l
                )));
            }
            Ok(binom(k, t) * binom(k - t - 1, l - 1))
        }
        Profile::Grouped { t } => {
            if !k.is_multiple_of(l) || !t.is_multiple_of(l) || t > k {
                return Err(Error::InvalidParams(format!(
                    "grouping needs L | K and L | t with t <= K (K={k}, L={l}, t={t})"
                )));
            }
            Ok(binom(k / l, t / l))
        }
        Profile::Feedback { t } => {
            if t == k {
                return Ok(1);
            }
            if t % l != 0 || t + l > k {
                return Err(Error::InvalidParams(format!(
                    "need L | t and t <= K-L, or t = K (K={k}, L={l}, t={t})"
                )));
            }
            Ok(binom(k, t) * binom(k - t - 1, l - 1) * (l + t) as u64)
        }
        Profile::Decentralized { ref cache_prob } => {
            if !cache_prob.is_positive() || *cache_prob >= BigRational::one() {
                return Err(Error::InvalidParams(format!(
                    "cache probability {cache_prob} outside (0,1)"
                )));
            }
            // sub-files cached by everyone are never split
            let mut lcm = pow(cache_prob, k).denom().clone();
            for s in 1..=k {
                let frac = decentralized_piece_fraction(k, l, cache_prob, s);
                if !frac.is_zero() {
                    lcm = lcm.lcm(frac.denom());
                }
            }
            lcm.to_u64().ok_or_else(|| {
                Error::InvalidParams(format!("minimum file length {lcm} is too large"))
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pascal(n: usize, k: usize) -> u64 {
        let mut row = vec![1u64];
        for _ in 0..n {
            let mut next = vec![1u64; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        row.get(k).copied().unwrap_or(0)
    }

    fn brute_force(n: usize, k: usize) -> Vec<Subset> {
        let mut all: Vec<Subset> = (0u32..1 << n)
            .map(Subset)
            .filter(|s| s.len() == k)
            .collect();
        all.sort_by_key(|s| s.members());
        all
    }

    #[test]
    fn binom_examples() {
        assert_eq!(binom(4, 0), 1);
        assert_eq!(binom(4, 2), 6);
        assert_eq!(binom(8, 3), 56);
        assert_eq!(binom(3, 5), 0);
        assert_eq!(binom_i(3, -1), 0);
        assert_eq!(binom_i(-1, 0), 0);
        for n in 0..30 {
            for k in 0..=n + 1 {
                assert_eq!(binom(n, k), pascal(n, k), "C({n},{k})");
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        let show = |v: Vec<Subset>| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(show(enumerate_subsets(3, 3)), ["{1,2,3}"]);
        assert_eq!(show(enumerate_subsets(3, 2)), ["{1,2}", "{1,3}", "{2,3}"]);
        assert_eq!(show(enumerate_subsets(3, 0)), ["{}"]);
        assert!(enumerate_subsets(2, 3).is_empty());
    }

    #[test]
    fn enumeration_matches_bitmask_oracle() {
        for n in 0..=12 {
            for k in 0..=n {
                let got = enumerate_subsets(n, k);
                assert_eq!(got.len() as u64, binom(n, k));
                assert_eq!(got, brute_force(n, k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(subset_rank(Subset::from_labels(&[1, 2]), 3).rank, 0);
        assert_eq!(subset_rank(Subset::from_labels(&[2, 3]), 3).rank, 2);
        let bad = SubsetRank {
            rank: 3,
            universe: 3,
            size: 2,
        };
        assert!(matches!(
            subset_unrank(bad),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn rank_roundtrip_exhaustive() {
        for n in 0..=12 {
            for k in 0..=n {
                for (i, s) in enumerate_subsets(n, k).into_iter().enumerate() {
                    let r = subset_rank(s, n);
                    assert_eq!(r.rank, i as u64);
                    assert_eq!(subset_unrank(r).unwrap(), s);
                }
            }
        }
    }

    #[test]
    fn subsets_of_ground_and_rank_within() {
        let ground = Subset::from_labels(&[2, 4, 5]);
        let got = subsets_of(ground, 2);
        assert_eq!(
            got.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            ["{2,4}", "{2,5}", "{4,5}"]
        );
        for (i, s) in got.iter().enumerate() {
            assert_eq!(rank_within(*s, ground), i as u64);
        }
        assert_eq!(ground.index_of(4), Some(2));
        assert_eq!(ground.index_of(0), None);
    }

    #[test]
    fn min_valid_f_examples() {
        assert_eq!(min_valid_f(&Profile::Mt { t: 1 }, 3, 2).unwrap(), 3);
        assert_eq!(min_valid_f(&Profile::Feedback { t: 2 }, 4, 2).unwrap(), 24);
        assert_eq!(min_valid_f(&Profile::Grouped { t: 2 }, 4, 2).unwrap(), 2);
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(
            min_valid_f(&Profile::Decentralized { cache_prob: half }, 3, 2).unwrap(),
            16
        );
        assert!(min_valid_f(&Profile::Mt { t: 2 }, 3, 2).is_err());
        assert_eq!(min_valid_f(&Profile::Mt { t: 3 }, 3, 2).unwrap(), 1);
        assert!(min_valid_f(&Profile::Grouped { t: 1 }, 4, 2).is_err());
    }

    proptest! {
        #[test]
        fn unrank_rank_roundtrip(n in 1usize..=30, seed in any::<u64>()) {
            let k = (seed as usize) % (n + 1);
            let total = binom(n, k);
            let rank = (seed >> 8) % total;
            let s = subset_unrank(SubsetRank { rank, universe: n, size: k }).unwrap();
            prop_assert_eq!(s.len(), k);
            prop_assert_eq!(subset_rank(s, n).rank, rank);
        }

        #[test]
        fn set_algebra(a in any::<u16>(), b in any::<u16>()) {
            let (a, b) = (Subset(a as u32), Subset(b as u32));
            prop_assert_eq!(a.union(b).len() + a.intersect(b).len(), a.len() + b.len());
            prop_assert!(a.minus(b).is_disjoint(b));
            prop_assert!(a.intersect(b).is_subset_of(a));
        }
    }
}
