use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, ONE, ZERO};
use crate::error::{ConcordiaError, Result};
use crate::rng;

/// A bijection on `0..dim`. As a matrix it sends `|i⟩` to `|map[i]⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let dim = map.len();
        let mut seen = vec![false; dim];
        for &m in &map {
            if m >= dim || seen[m] {
                return Err(ConcordiaError::NonBijective { dim });
            }
            seen[m] = true;
        }
        if dim == 0 {
            return Err(ConcordiaError::NonBijective { dim });
        }
        Ok(Self { map })
    }

    pub fn identity(dim: usize) -> Self {
        Self { map: (0..dim).collect() }
    }

    /// Exchanges basis states `a` and `b`.
    pub fn transposition(dim: usize, a: usize, b: usize) -> Result<Self> {
        if a >= dim || b >= dim {
            return Err(ConcordiaError::NonBijective { dim });
        }
        let mut map: Vec<usize> = (0..dim).collect();
        map.swap(a, b);
        Ok(Self { map })
    }

    /// Uniform random permutation (Fisher–Yates shuffle).
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut map: Vec<usize> = (0..dim).collect();
        map.shuffle(&mut rng::seeded(seed));
        Self { map }
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.dim()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Self { map: inv }
    }

    /// `self` followed by `next`: the matrix `next · self`.
    pub fn then(&self, next: &Self) -> Self {
        Self { map: self.map.iter().map(|&m| next.map[m]).collect() }
    }

    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), |r, c| if self.map[c] == r { ONE } else { ZERO })
    }

    /// Diagonal of `P · diag(table) · P†`.
    pub fn permute_table(&self, table: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; table.len()];
        for (i, &p) in table.iter().enumerate() {
            out[self.map[i]] = p;
        }
        out
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = ConcordiaError;
    fn try_from(map: Vec<usize>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map
    }
}

/// Dense matrix of a permutation.
pub fn permutation_matrix(p: &Permutation) -> ComplexMatrix {
    p.matrix()
}

pub fn random_permutation(dim: usize, seed: u64) -> Permutation {
    Permutation::random(dim, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::gates_std::cnot;

    #[test]
    fn identity_and_cnot() {
        assert_eq!(Permutation::identity(4).matrix(), ComplexMatrix::identity(4));
        let swap = Permutation::transposition(4, 2, 3).unwrap();
        assert_eq!(swap.matrix(), cnot());
    }

    #[test]
    fn inverse_cancels() {
        for seed in 0..10 {
            let p = Permutation::random(8, seed);
            let prod = &p.matrix() * &p.inverse().matrix();
            assert_eq!(prod, ComplexMatrix::identity(8));
            assert!(p.then(&p.inverse()).is_identity());
        }
    }

    #[test]
    fn then_matches_matrix_product() {
        let a = Permutation::random(6, 1);
        let b = Permutation::random(6, 2);
        assert_eq!(a.then(&b).matrix(), &b.matrix() * &a.matrix());
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3]).is_err());
        assert!(serde_json::from_str::<Permutation>("[1,1]").is_err());
    }

    #[test]
    fn permute_table_matches_conjugation() {
        let p = Permutation::random(5, 9);
        let t = [0.1, 0.2, 0.3, 0.15, 0.25];
        let conj = ComplexMatrix::from_diagonal(&t).conjugate_by(&p.matrix());
        assert_eq!(conj.diagonal_real(), p.permute_table(&t));
    }

    #[test]
    fn random_is_roughly_uniform() {
        // each of the 6 permutations of 3 elements should appear ~1/6 of the time
        let mut counts = std::collections::HashMap::new();
        for seed in 0..6000 {
            *counts.entry(Permutation::random(3, seed).map().to_vec()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 6);
        assert!(counts.values().all(|&c| (850..1150).contains(&c)));
    }
}
