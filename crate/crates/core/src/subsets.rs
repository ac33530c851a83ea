//! Lexicographic ranking of sorted variable subsets and the flat
//! "subset then assignment" layout shared by pseudodistributions and the LP.
//!
//! Assignments to a sorted subset `S = (s_0 < s_1 < ...)` are encoded as an
//! integer whose most significant bit is the value of `s_0`.

/// Binomial coefficient, saturating at `usize::MAX`.
pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Number of `(S, α)` slots with `|S| ≤ d`, i.e. `Σ_j C(n,j)·2^j`, saturating.
pub fn slot_count(n: usize, d: usize) -> usize {
    let mut total: usize = 0;
    for j in 0..=d.min(n) {
        let c = binom(n, j);
        let slots = if j >= usize::BITS as usize {
            usize::MAX
        } else {
            c.saturating_mul(1usize << j)
        };
        total = total.saturating_add(slots);
    }
    total
}

/// Precomputed binomials and per-size offsets for subsets of `[n]` up to size `max_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetIndex {
    n: usize,
    max_k: usize,
    binom: Vec<usize>,
    offsets: Vec<usize>,
}

impl SubsetIndex {
    pub fn new(n: usize, max_k: usize) -> Self {
        let max_k = max_k.min(n);
        let width = max_k + 1;
        let mut table = vec![0usize; (n + 1) * width];
        for a in 0..=n {
            table[a * width] = 1;
            for b in 1..=max_k.min(a) {
                let left = table[(a - 1) * width + b - 1];
                let right = if b < a { table[(a - 1) * width + b] } else { 0 };
                table[a * width + b] = left.saturating_add(right);
            }
        }
        let mut offsets = Vec::with_capacity(width + 1);
        let mut acc = 0usize;
        for k in 0..=max_k {
            offsets.push(acc);
            acc = acc.saturating_add(table[n * width + k].saturating_mul(1 << k));
        }
        offsets.push(acc);
        SubsetIndex { n, max_k, binom: table, offsets }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_k(&self) -> usize {
        self.max_k
    }

    #[inline]
    pub fn binom(&self, a: usize, b: usize) -> usize {
        if b > a || b > self.max_k {
            return binom(a, b);
        }
        self.binom[a * (self.max_k + 1) + b]
    }

    /// Number of subsets of size `k`.
    pub fn count(&self, k: usize) -> usize {
        self.binom(self.n, k)
    }

    /// Lexicographic rank of a strictly increasing subset.
    #[inline]
    pub fn rank(&self, s: &[usize]) -> usize {
        let k = s.len();
        let mut colex = 0usize;
        for (i, &x) in s.iter().enumerate() {
            colex += self.binom(self.n - 1 - x, k - i);
        }
        self.count(k) - 1 - colex
    }

    /// Inverse of [`SubsetIndex::rank`].
    pub fn unrank(&self, k: usize, rank: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        let mut r = rank;
        let mut x = 0usize;
        for i in 0..k {
            loop {
                let below = self.binom(self.n - 1 - x, k - i - 1);
                if r < below {
                    break;
                }
                r -= below;
                x += 1;
            }
            out.push(x);
            x += 1;
        }
        out
    }

    /// Total slot count of the layout (`Σ_{k ≤ max_k} C(n,k)·2^k`).
    pub fn slots(&self) -> usize {
        self.offsets[self.max_k + 1]
    }

    /// First slot of subsets of size `k`.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// Slot of `(S, α)`.
    #[inline]
    pub fn slot(&self, s: &[usize], alpha: usize) -> usize {
        self.offsets[s.len()] + (self.rank(s) << s.len()) + alpha
    }

    /// Base slot of subset `S` (its assignments follow contiguously).
    #[inline]
    pub fn base(&self, s: &[usize]) -> usize {
        self.offsets[s.len()] + (self.rank(s) << s.len())
    }
}

/// Iterator over the `k`-subsets of `[n]` in lexicographic order.
pub struct Combinations {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations { n, cur: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let k = self.cur.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.cur[i] < self.n - k + i {
                self.cur[i] += 1;
                for j in i + 1..k {
                    self.cur[j] = self.cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// All `k`-subsets of the given sorted ground set, in lexicographic order.
pub fn combinations_of(ground: &[usize], k: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
    Combinations::new(ground.len(), k).map(move |c| c.iter().map(|&i| ground[i]).collect())
}

/// Bit of position `i` (0 = first element) in an assignment over a `k`-subset.
#[inline]
pub fn bit(alpha: usize, k: usize, i: usize) -> bool {
    (alpha >> (k - 1 - i)) & 1 == 1
}

/// Encode bits (first element most significant).
pub fn encode(bits: impl IntoIterator<Item = bool>) -> usize {
    bits.into_iter().fold(0usize, |acc, b| (acc << 1) | b as usize)
}

/// Sorted union of two sorted sets.
pub fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
            j += 1;
        }
    }
    out
}

/// Positions of the elements of `sub` inside the sorted superset `sup`.
pub fn positions(sub: &[usize], sup: &[usize]) -> Option<Vec<usize>> {
    sub.iter().map(|x| sup.binary_search(x).ok()).collect()
}

/// Project an assignment over `sup` (size `k`) onto the positions `pos`.
#[inline]
pub fn project(alpha: usize, k: usize, pos: &[usize]) -> usize {
    let mut out = 0usize;
    for &p in pos {
        out = (out << 1) | ((alpha >> (k - 1 - p)) & 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_matches_enumeration_order() {
        for n in 0..9 {
            for k in 0..=n {
                let idx = SubsetIndex::new(n, k);
                for (r, s) in Combinations::new(n, k).enumerate() {
                    assert_eq!(idx.rank(&s), r, "n={n} k={k} s={s:?}");
                    assert_eq!(idx.unrank(k, r), s);
                }
                assert_eq!(Combinations::new(n, k).count(), binom(n, k));
            }
        }
    }

    #[test]
    fn slot_layout_is_dense() {
        let idx = SubsetIndex::new(3, 3);
        assert_eq!(idx.slots(), 27);
        assert_eq!(slot_count(3, 3), 27);
        let mut seen = vec![false; idx.slots()];
        for k in 0..=3 {
            for s in Combinations::new(3, k) {
                for a in 0..1 << k {
                    let slot = idx.slot(&s, a);
                    assert!(!seen[slot]);
                    seen[slot] = true;
                }
            }
        }
        assert!(seen.into_iter().all(|x| x));
    }

    #[test]
    fn projection_and_union() {
        assert_eq!(union(&[1, 4, 7], &[2, 4, 9]), vec![1, 2, 4, 7, 9]);
        let pos = positions(&[2, 9], &[1, 2, 4, 7, 9]).unwrap();
        assert_eq!(pos, vec![1, 4]);
        // bits over (1,2,4,7,9) = 0 1 0 0 1
        assert_eq!(project(0b01001, 5, &pos), 0b11);
        assert!(positions(&[3], &[1, 2]).is_none());
        assert_eq!(binom(40, 6), 3_838_380);
        assert_eq!(binom(5, 7), 0);
    }
}
