//! Characteristic root sets, their block structure, pairings and interlacing.

use crate::error::{Error, Result};
use crate::exppoly::DiffOp;
use crate::rational::qi;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub roots: Vec<i64>,
    pub multiplicity: u32,
}

impl Block {
    fn stepped(from: i64, to: i64, multiplicity: u32) -> Self {
        let roots = if from > to {
            vec![]
        } else {
            (0..=(to - from) / 2).map(|i| from + 2 * i).collect()
        };
        Block { roots, multiplicity }
    }

    fn consecutive(from: i64, to: i64) -> Self {
        Block {
            roots: (from..=to).collect(),
            multiplicity: 1,
        }
    }

    fn expand(&self) -> impl Iterator<Item = i64> + '_ {
        self.roots
            .iter()
            .flat_map(move |&r| std::iter::repeat(r).take(self.multiplicity as usize))
    }
}

/// Paired negative and nonnegative roots. Pair `i` is the interval `[negatives[i], nonnegatives[i]]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootPairing {
    pub negatives: Vec<i64>,
    pub nonnegatives: Vec<i64>,
    pub lateral_negative: Block,
    pub center: Block,
    pub lateral_positive: Block,
    /// Whether the leading pair is the zero pair `[0, 0]` of a double root.
    pub zero_pair: bool,
}

impl RootPairing {
    pub fn pairs(&self) -> Vec<(i64, i64)> {
        self.negatives
            .iter()
            .zip(&self.nonnegatives)
            .map(|(&b, &a)| (b, a))
            .collect()
    }

    /// The full root multiset, sorted ascending.
    pub fn multiset(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self
            .lateral_negative
            .expand()
            .chain(self.center.expand())
            .chain(self.lateral_positive.expand())
            .collect();
        v.sort();
        v
    }

    /// Root multiset recovered from the pairing itself.
    pub fn multiset_from_pairs(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.negatives.iter().chain(&self.nonnegatives).copied().collect();
        v.sort();
        v
    }

    /// The pairing without the `[0, 0]` pair (for operators with `∂²` factored out).
    pub fn stripped(&self) -> RootPairing {
        let mut r = self.clone();
        if self.zero_pair {
            r.negatives.remove(0);
            r.nonnegatives.remove(0);
            r.zero_pair = false;
        }
        r
    }

    pub fn to_diffop(&self, sign: i8) -> DiffOp {
        DiffOp::new(sign, self.multiset_from_pairs().into_iter().map(qi).collect())
    }
}

fn split(mut all: Vec<i64>, zero_pair: bool, blocks: [Block; 3]) -> RootPairing {
    all.sort();
    let mut negatives: Vec<i64> = all.iter().copied().filter(|&r| r < 0).rev().collect();
    let mut nonnegatives: Vec<i64> = all.iter().copied().filter(|&r| r >= 0).collect();
    if zero_pair {
        // one copy of the double root 0 moves to the negative list
        nonnegatives.remove(0);
        negatives.insert(0, 0);
    }
    let [lateral_negative, center, lateral_positive] = blocks;
    RootPairing {
        negatives,
        nonnegatives,
        lateral_negative,
        center,
        lateral_positive,
        zero_pair,
    }
}

/// `k = m - (n-1)/2` for odd n.
pub fn odd_k(m: u32, n: u32) -> Result<i64> {
    if n % 2 == 0 || n < 3 || n > 2 * m + 1 {
        return Err(Error::Parity(format!("n = {n} must be odd in [3, {}]", 2 * m + 1)));
    }
    Ok(m as i64 - (n as i64 - 1) / 2)
}

/// Root set `{c_j + p} ∪ {-c_j - 1 - p}` with `c_j = 2j - k`.
pub fn roots_odd(m: u32, n: u32, p: u32) -> Result<RootPairing> {
    let k = odd_k(m, n)?;
    let p = p as i64;
    if p > k {
        return Err(Error::Range(format!("p = {p} outside [0, {k}]")));
    }
    let mi = m as i64;
    let mut all = vec![];
    for j in 0..mi {
        let c = 2 * j - k;
        all.push(c + p);
        all.push(-c - 1 - p);
    }
    let blocks = [
        Block::stepped(-2 * (mi - 1) + k - p - 1, -k + p - 3, 1),
        Block::consecutive(-k + p - 1, k - p),
        Block::stepped(k - p + 2, 2 * (mi - 1) - k + p, 1),
    ];
    Ok(split(all, false, blocks))
}

/// Even-dimension root set `±(p + n/2 + m - 2j - 2)`.
pub fn roots_even(m: u32, n: u32, p: u32) -> Result<RootPairing> {
    if n % 2 == 1 || n < 2 || n > 2 * m {
        return Err(Error::Parity(format!("n = {n} must be even in [2, {}]", 2 * m)));
    }
    let (mi, h, p) = (m as i64, n as i64 / 2, p as i64);
    let k = mi - h;
    if p > k {
        return Err(Error::Range(format!("p = {p} outside [0, {k}]")));
    }
    if (p - k).rem_euclid(2) != 0 {
        return Err(Error::Parity(format!("p = {p} must have the parity of m - n/2 = {k}")));
    }
    let mut all = vec![];
    for j in 0..mi {
        let b = p + h + mi - 2 * j - 2;
        all.push(b);
        all.push(-b);
    }
    let blocks = [
        Block::stepped(-p - mi - h + 2, p - mi + h - 2, 1),
        Block::stepped(p - mi + h, -p + mi - h, 2),
        Block::stepped(-p + mi - h + 2, p + mi + h - 2, 1),
    ];
    Ok(split(all, true, blocks))
}

/// Smallest admissible p for the even branch (0 or 1 by parity of `m - n/2`).
pub fn even_base_p(m: u32, n: u32) -> u32 {
    ((m as i64 - n as i64 / 2).rem_euclid(2)) as u32
}

/// Roots `±(m + n/2 - 2j - 1)` of the operator used when `m - n/2` is odd.
pub fn shifted_even_roots(m: u32, n: u32) -> Vec<i64> {
    let (mi, h) = (m as i64, n as i64 / 2);
    let mut v: Vec<i64> = (0..mi)
        .flat_map(|j| {
            let b = mi + h - 2 * j - 1;
            [b, -b]
        })
        .collect();
    v.sort();
    v
}

/// True iff every inner interval lies inside the matching outer interval.
pub fn interlace(inner: &RootPairing, outer: &RootPairing) -> Result<bool> {
    let (pi, po) = (inner.pairs(), outer.pairs());
    if pi.len() != po.len() {
        return Err(Error::PairCountMismatch {
            inner: pi.len(),
            outer: po.len(),
        });
    }
    Ok(pi
        .iter()
        .zip(&po)
        .all(|(&(b, a), &(d, c))| d <= b && a <= c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_examples() {
        let r = roots_odd(2, 3, 0).unwrap();
        assert_eq!(r.multiset(), vec![-2, -1, 0, 1]);
        assert_eq!(r.negatives, vec![-1, -2]);
        assert_eq!(r.nonnegatives, vec![0, 1]);
        let s = roots_odd(2, 3, 1).unwrap();
        assert_eq!(s.negatives, vec![-1, -3]);
        assert_eq!(s.nonnegatives, vec![0, 2]);
        assert!(interlace(&r, &s).unwrap());
        assert!(interlace(&r, &r).unwrap());
        assert!(!interlace(&s, &r).unwrap());
        assert!(matches!(roots_odd(2, 3, 2), Err(Error::Range(_))));
    }

    #[test]
    fn odd_blocks_match_root_set() {
        for m in 1..=6 {
            for n in (3..=2 * m + 1).step_by(2) {
                let k = odd_k(m, n).unwrap();
                for p in 0..=k as u32 {
                    let r = roots_odd(m, n, p).unwrap();
                    assert_eq!(r.multiset(), r.multiset_from_pairs(), "m={m} n={n} p={p}");
                    assert_eq!(r.negatives.len(), m as usize);
                    assert_eq!(r.negatives[0], -1);
                    assert_eq!(r.nonnegatives[0], 0);
                    assert!(r.center.roots.contains(&-1) && r.center.roots.contains(&0));
                }
            }
        }
    }

    #[test]
    fn even_examples() {
        let r = roots_even(2, 4, 0).unwrap();
        assert_eq!(r.multiset(), vec![-2, 0, 0, 2]);
        assert_eq!(r.lateral_negative.roots, vec![-2]);
        assert_eq!(r.center, Block { roots: vec![0], multiplicity: 2 });
        assert_eq!(r.lateral_positive.roots, vec![2]);
        let r = roots_even(3, 4, 1).unwrap();
        assert_eq!(r.multiset(), vec![-4, -2, 0, 0, 2, 4]);
        assert_eq!(r.stripped().pairs(), vec![(-2, 2), (-4, 4)]);
        assert!(roots_even(3, 4, 0).is_err());
    }

    #[test]
    fn even_blocks_match_root_set() {
        for m in 1..=6 {
            for n in (2..=2 * m).step_by(2) {
                let base = even_base_p(m, n);
                let k = m - n / 2;
                for p in (base..=k).step_by(2) {
                    let r = roots_even(m, n, p).unwrap();
                    assert_eq!(r.multiset(), r.multiset_from_pairs(), "m={m} n={n} p={p}");
                    let neg: Vec<i64> = r.multiset().iter().map(|x| -x).rev().collect();
                    assert_eq!(neg, r.multiset());
                }
            }
        }
    }
}
