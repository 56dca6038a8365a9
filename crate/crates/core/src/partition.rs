//! Integer partitions and their conjugates.

use crate::error::{bail, Result};

/// A nonincreasing sequence of positive integers; trailing zeros are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            bail!(InvalidArgument, "partition {parts:?} is not nonincreasing");
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Self { parts })
    }

    /// Nonzero parts.
    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of nonzero parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Parts padded with zeros to length `n` (errors if there are more than `n` parts).
    pub fn padded(&self, n: usize) -> Result<Vec<usize>> {
        if self.parts.len() > n {
            bail!(InvalidArgument, "partition {:?} has more than {n} parts", self.parts);
        }
        let mut v = self.parts.clone();
        v.resize(n, 0);
        Ok(v)
    }

    /// Column heights of the Young diagram.
    pub fn conjugate(&self) -> Partition {
        let width = self.parts.first().copied().unwrap_or(0);
        let parts = (1..=width)
            .map(|c| self.parts.iter().filter(|&&p| p >= c).count())
            .collect();
        Partition { parts }
    }

    /// All partitions of `k` with at most `max_parts` parts, in decreasing
    /// lexicographic order.
    pub fn all_of(k: usize, max_parts: usize) -> Vec<Partition> {
        fn rec(rest: usize, cap: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if rest == 0 {
                out.push(Partition { parts: cur.clone() });
                return;
            }
            if slots == 0 {
                return;
            }
            for part in (1..=cap.min(rest)).rev() {
                cur.push(part);
                rec(rest - part, part, slots - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(k, k, max_parts, &mut Vec::new(), &mut out);
        out
    }
}
