//! Sublattices of `Z^d` generated by finitely many integer vectors.
//!
//! Used to decide whether a set of "open" translations connects all
//! inclusions of a periodic array, and how many classes of inclusions remain
//! when it does not.

use crate::{LatticeIndex, MAX_DIM};

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 { (-a, -1, 0) } else { (a, 1, 0) }
    } else {
        let (g, s, t) = ext_gcd(b, a % b);
        (g, t, s - (a / b) * t)
    }
}

/// Echelon basis of the lattice spanned by the inserted vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntLattice {
    dim: usize,
    pivots: [Option<LatticeIndex>; MAX_DIM],
}

impl IntLattice {
    pub fn new(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Self { dim, pivots: [None; MAX_DIM] }
    }

    pub fn generated_by<'a, I: IntoIterator<Item = &'a LatticeIndex>>(dim: usize, gens: I) -> Self {
        let mut l = Self::new(dim);
        for g in gens {
            l.insert(*g);
        }
        l
    }

    pub fn insert(&mut self, mut v: LatticeIndex) {
        for c in 0..self.dim {
            if v[c] == 0 {
                continue;
            }
            match self.pivots[c] {
                None => {
                    if v[c] < 0 {
                        for x in v.iter_mut() {
                            *x = -*x;
                        }
                    }
                    self.pivots[c] = Some(v);
                    return;
                }
                Some(p) => {
                    let (g, s, t) = ext_gcd(p[c], v[c]);
                    let (pa, va) = (p[c] / g, v[c] / g);
                    let mut pivot = [0; MAX_DIM];
                    let mut rest = [0; MAX_DIM];
                    for i in 0..self.dim {
                        pivot[i] = s * p[i] + t * v[i];
                        rest[i] = va * p[i] - pa * v[i];
                    }
                    if pivot[c] < 0 {
                        for x in pivot.iter_mut() {
                            *x = -*x;
                        }
                    }
                    self.pivots[c] = Some(pivot);
                    v = rest;
                }
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots[..self.dim].iter().filter(|p| p.is_some()).count()
    }

    /// `[Z^d : Λ]`, or `None` when the lattice is not of full rank.
    pub fn index(&self) -> Option<u64> {
        let mut prod: u64 = 1;
        for (c, p) in self.pivots[..self.dim].iter().enumerate() {
            prod *= p.as_ref()?[c].unsigned_abs();
        }
        Some(prod)
    }

    pub fn contains(&self, v: &LatticeIndex) -> bool {
        let mut v = *v;
        for c in 0..self.dim {
            if v[c] == 0 {
                continue;
            }
            let Some(p) = self.pivots[c] else { return false };
            if v[c] % p[c] != 0 {
                return false;
            }
            let q = v[c] / p[c];
            for i in 0..self.dim {
                v[i] -= q * p[i];
            }
        }
        v[..self.dim].iter().all(|&x| x == 0)
    }

    /// Whether `v` lies in the real span of the lattice.
    pub fn spans(&self, v: &LatticeIndex) -> bool {
        let mut l = self.clone();
        l.insert(*v);
        l.rank() == self.rank()
    }

    pub fn is_full(&self) -> bool {
        self.index() == Some(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vectors_generate() {
        let l = IntLattice::generated_by(2, &[[1, 0, 0], [0, 1, 0]]);
        assert!(l.is_full());
        assert_eq!(l.rank(), 2);
    }

    #[test]
    fn diagonals_have_index_two() {
        let l = IntLattice::generated_by(2, &[[1, 1, 0], [1, -1, 0]]);
        assert_eq!(l.index(), Some(2));
        assert!(l.contains(&[2, 0, 0]));
        assert!(!l.contains(&[1, 0, 0]));
    }

    #[test]
    fn coprime_combination() {
        let l = IntLattice::generated_by(2, &[[2, 0, 0], [3, 0, 0], [0, 1, 0]]);
        assert!(l.is_full());
    }

    #[test]
    fn rank_deficient() {
        let l = IntLattice::generated_by(2, &[[1, 0, 0], [-1, 0, 0]]);
        assert_eq!(l.rank(), 1);
        assert_eq!(l.index(), None);
        assert!(l.spans(&[5, 0, 0]));
        assert!(!l.spans(&[0, 1, 0]));
        assert!(!l.contains(&[0, 2, 0]));
    }
}
