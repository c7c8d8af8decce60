//! Sparse Gaussian elimination over `Q`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::algebra::Q;
use crate::error::{Error, Result};

pub type SparseRow = BTreeMap<usize, Q>;

/// Affine solution set `particular + span(kernel)` of `A c = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSpace {
    pub unknowns: usize,
    pub rank: usize,
    pub particular: Vec<Q>,
    pub kernel: Vec<Vec<Q>>,
}

impl SolutionSpace {
    pub fn dimension(&self) -> usize {
        self.kernel.len()
    }
}

/// Row-echelon accumulator; rows are reduced on insertion.
#[derive(Debug, Default)]
pub struct Eliminator {
    unknowns: usize,
    pivots: BTreeMap<usize, (SparseRow, Q)>,
    inconsistent: bool,
}

impl Eliminator {
    pub fn new(unknowns: usize) -> Self {
        Self {
            unknowns,
            pivots: BTreeMap::new(),
            inconsistent: false,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Adds the equation `Σ row[j] c_j = rhs`.
    pub fn push(&mut self, mut row: SparseRow, mut rhs: Q) {
        row.retain(|_, v| !v.is_zero());
        loop {
            let Some((&j, _)) = row.first_key_value() else {
                if !rhs.is_zero() {
                    self.inconsistent = true;
                }
                return;
            };
            debug_assert!(j < self.unknowns);
            match self.pivots.get(&j) {
                Some((prow, prhs)) => {
                    let f = row.remove(&j).expect("present");
                    for (k, v) in prow.iter().skip(1) {
                        let nv = row.get(k).cloned().unwrap_or_else(Q::zero) - &f * v;
                        if nv.is_zero() {
                            row.remove(k);
                        } else {
                            row.insert(*k, nv);
                        }
                    }
                    rhs -= &f * prhs;
                }
                None => {
                    let f = row[&j].clone();
                    if !f.is_one() {
                        let inv = f.recip();
                        for v in row.values_mut() {
                            *v *= &inv;
                        }
                        rhs *= &inv;
                    }
                    self.pivots.insert(j, (row, rhs));
                    return;
                }
            }
        }
    }

    /// Back substitution with free unknowns set to zero, plus one kernel
    /// vector per free unknown.
    pub fn solve(&self) -> Result<SolutionSpace> {
        if self.inconsistent {
            return Err(Error::Inconsistent);
        }
        let n = self.unknowns;
        let back = |seed: &mut Vec<Q>, homogeneous: bool| {
            for (&j, (row, rhs)) in self.pivots.iter().rev() {
                let mut v = if homogeneous { Q::zero() } else { rhs.clone() };
                for (k, c) in row.iter().skip(1) {
                    if !seed[*k].is_zero() {
                        v -= c * &seed[*k];
                    }
                }
                seed[j] = v;
            }
        };
        let mut particular = vec![Q::zero(); n];
        back(&mut particular, false);
        let mut kernel = Vec::new();
        for f in (0..n).filter(|j| !self.pivots.contains_key(j)) {
            let mut v = vec![Q::zero(); n];
            v[f] = Q::one();
            back(&mut v, true);
            kernel.push(v);
        }
        Ok(SolutionSpace {
            unknowns: n,
            rank: self.rank(),
            particular,
            kernel,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::q;

    fn row(entries: &[(usize, i64)]) -> SparseRow {
        entries.iter().map(|&(j, v)| (j, q(v, 1))).collect()
    }

    #[test]
    fn solves_small_system_with_kernel() {
        // c0 + c1 = 3, c1 - c2 = 1
        let mut e = Eliminator::new(3);
        e.push(row(&[(0, 1), (1, 1)]), q(3, 1));
        e.push(row(&[(1, 1), (2, -1)]), q(1, 1));
        e.push(row(&[(0, 2), (1, 2)]), q(6, 1));
        let s = e.solve().unwrap();
        assert_eq!(s.rank, 2);
        assert_eq!(s.particular, vec![q(2, 1), q(1, 1), q(0, 1)]);
        assert_eq!(s.kernel, vec![vec![q(-1, 1), q(1, 1), q(1, 1)]]);
    }

    #[test]
    fn detects_inconsistency() {
        let mut e = Eliminator::new(2);
        e.push(row(&[(0, 1), (1, 1)]), q(1, 1));
        e.push(row(&[(0, 1), (1, 1)]), q(2, 1));
        assert_eq!(e.solve(), Err(Error::Inconsistent));
    }

    #[test]
    fn no_equations_gives_full_space() {
        let s = Eliminator::new(4).solve().unwrap();
        assert_eq!(s.dimension(), 4);
        assert!(s.particular.iter().all(Q::is_zero));
    }
}
