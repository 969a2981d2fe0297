use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor-product structure of a finite Hilbert space.
///
/// Factor 0 is the leftmost tensor factor and the most significant digit of
/// a basis index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct HilbertSpace {
    factor_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::DimensionMismatch("a space needs at least one factor".into()));
        }
        if let Some(&d) = factor_dims.iter().find(|&&d| d < 2) {
            return Err(Error::DimensionMismatch(format!("factor dimension {d} < 2")));
        }
        Ok(Self { factor_dims })
    }

    pub fn qubits(n: usize) -> Self {
        assert!(n >= 1, "at least one qubit");
        Self {
            factor_dims: vec![2; n],
        }
    }

    pub fn qudit(d: usize) -> Self {
        assert!(d >= 2, "qudit dimension must be at least 2");
        Self {
            factor_dims: vec![d],
        }
    }

    pub fn dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    /// Number of qubits when every factor is two-dimensional.
    pub fn qubit_count(&self) -> Option<usize> {
        self.factor_dims
            .iter()
            .all(|&d| d == 2)
            .then_some(self.factor_dims.len())
    }

    pub fn concat(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut factor_dims = self.factor_dims.clone();
        factor_dims.extend_from_slice(&other.factor_dims);
        HilbertSpace { factor_dims }
    }

    pub fn subspace(&self, factors: &[usize]) -> Result<HilbertSpace> {
        let dims = factors
            .iter()
            .map(|&k| {
                self.factor_dims
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::BadSubsystem(format!("factor {k} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        HilbertSpace::new(dims)
    }

    /// Mixed-radix digits of a basis index, most significant first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.factor_dims.len()];
        for (k, &d) in self.factor_dims.iter().enumerate().rev() {
            digits[k] = index % d;
            index /= d;
        }
        digits
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.factor_dims)
            .fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub(crate) fn ensure_same(&self, other: &HilbertSpace) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch(format!(
                "spaces {:?} and {:?} differ",
                self.factor_dims, other.factor_dims
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for HilbertSpace {
    type Error = Error;
    fn try_from(value: Vec<usize>) -> Result<Self> {
        HilbertSpace::new(value)
    }
}

impl From<HilbertSpace> for Vec<usize> {
    fn from(value: HilbertSpace) -> Self {
        value.factor_dims
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_round_trip() {
        let s = HilbertSpace::new(vec![2, 3, 2]).unwrap();
        assert_eq!(s.dim(), 12);
        for i in 0..12 {
            assert_eq!(s.index_of(&s.digits(i)), i);
        }
        assert_eq!(s.digits(7), vec![1, 0, 1]);
    }

    #[test]
    fn rejects_trivial_factor() {
        assert!(HilbertSpace::new(vec![2, 1]).is_err());
        assert!(HilbertSpace::new(vec![]).is_err());
    }
}
