use serde::{Deserialize, Serialize};

use crate::error::{ConcordiaError, Result};

/// Ordered per-subsystem dimensions. Subsystem 0 is the most significant
/// tensor factor: the flat index of digits `(k0, k1, .., k_{n-1})` is
/// `((k0 * d1 + k1) * d2 + k2) ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(ConcordiaError::InvalidShape("no subsystems".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(ConcordiaError::InvalidShape(format!(
                "subsystem dimension {d} < 2"
            )));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| ConcordiaError::InvalidShape("total dimension overflows".into()))?;
        if total > 1 << 24 {
            return Err(ConcordiaError::InvalidShape(format!(
                "total dimension {total} is beyond dense range"
            )));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self::new(vec![2; n]).expect("qubit shape with n >= 1")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim(&self, subsystem: usize) -> usize {
        self.dims[subsystem]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_qubits(&self) -> bool {
        self.dims.iter().all(|&d| d == 2)
    }

    pub fn check_subsystem(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(ConcordiaError::SubsystemOutOfRange { index, len: self.len() })
        }
    }

    /// Validates a subset of subsystems: in range and without repeats.
    pub fn check_subset(&self, subset: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.len()];
        for &s in subset {
            self.check_subsystem(s)?;
            if seen[s] {
                return Err(ConcordiaError::InvalidInput(format!(
                    "subsystem {s} listed twice"
                )));
            }
            seen[s] = true;
        }
        Ok(())
    }

    /// Subsystems not in `subset`, ascending.
    pub fn complement(&self, subset: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|s| !subset.contains(s)).collect()
    }

    /// Shape of the listed subsystems in the listed order.
    pub fn sub_shape(&self, subset: &[usize]) -> Result<Self> {
        self.check_subset(subset)?;
        Self::new(subset.iter().map(|&s| self.dims[s]).collect())
    }

    /// Place value of each subsystem in the flat index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for j in (0..self.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.dims[j + 1];
        }
        strides
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for j in (0..self.len()).rev() {
            out[j] = index % self.dims[j];
            index /= self.dims[j];
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&k, &d)| acc * d + k)
    }

    /// For each multi-index over `subset` (enumerated with `subset[0]` most
    /// significant), the contribution it makes to the flat full index.
    /// Full index = `offsets(a)[i] + offsets(complement)[j]`.
    pub fn offsets(&self, subset: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &s in subset {
            let d = self.dims[s];
            let mut next = Vec::with_capacity(out.len() * d);
            for &base in &out {
                for k in 0..d {
                    next.push(base + k * strides[s]);
                }
            }
            out = next;
        }
        out
    }

    /// Label of a flat index: one digit per subsystem, e.g. `"010"`.
    pub fn label(&self, index: usize) -> String {
        self.digits(index)
            .into_iter()
            .map(|k| std::char::from_digit(k as u32, 36).unwrap_or('?'))
            .collect()
    }

    pub fn parse_label(&self, label: &str) -> Result<usize> {
        let digits: Vec<usize> = label
            .chars()
            .map(|c| c.to_digit(36).map(|d| d as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| ConcordiaError::InvalidInput(format!("bad index label {label:?}")))?;
        if digits.len() != self.len() || digits.iter().zip(&self.dims).any(|(&k, &d)| k >= d) {
            return Err(ConcordiaError::InvalidInput(format!(
                "label {label:?} does not fit shape {:?}",
                self.dims
            )));
        }
        Ok(self.index(&digits))
    }
}

impl TryFrom<Vec<usize>> for SubsystemShape {
    type Error = ConcordiaError;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<SubsystemShape> for Vec<usize> {
    fn from(s: SubsystemShape) -> Self {
        s.dims
    }
}
