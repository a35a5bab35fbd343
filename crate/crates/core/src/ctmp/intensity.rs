use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Intensity (generator) matrix of a finite-state Markov process.
///
/// Off-diagonal entries are transition rates; each diagonal entry is minus
/// the sum of the off-diagonal entries of its row.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMatrix {
    q: DMatrix<f64>,
}

impl IntensityMatrix {
    /// Validates an explicit matrix. Row sums must vanish to within
    /// `1e-9 · (1 + max |q_ii|)`.
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        let dim = q.nrows();
        if dim < 2 || q.ncols() != dim {
            return Err(Error::InvalidGenerator(format!(
                "expected square matrix of dim >= 2, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        for r in 0..dim {
            let mut sum = 0.0;
            for c in 0..dim {
                let v = q[(r, c)];
                if !v.is_finite() {
                    return Err(Error::InvalidGenerator(format!("entry ({r},{c}) = {v}")));
                }
                if r != c && v < 0.0 {
                    return Err(Error::InvalidGenerator(format!("negative rate at ({r},{c})")));
                }
                sum += v;
            }
            let scale = 1.0 + q[(r, r)].abs();
            if sum.abs() > 1e-9 * scale {
                return Err(Error::InvalidGenerator(format!("row {r} sums to {sum}")));
            }
        }
        Ok(Self { q })
    }

    /// Builds the generator from off-diagonal rates; the diagonal is filled in.
    pub fn from_rates<F: FnMut(usize, usize) -> f64>(dim: usize, mut rate: F) -> Result<Self> {
        let mut q = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            let mut exit = 0.0;
            for c in 0..dim {
                if r != c {
                    let v = rate(r, c);
                    q[(r, c)] = v;
                    exit += v;
                }
            }
            q[(r, r)] = -exit;
        }
        Self::new(q)
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.q[(from, to)]
    }

    /// Total exit rate `q_x` of state `x`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        -self.q[(x, x)]
    }

    /// Embedded-chain probability `θ_{x x'} = q_{x x'} / q_x`.
    pub fn jump_probability(&self, from: usize, to: usize) -> f64 {
        let exit = self.exit_rate(from);
        if exit > 0.0 {
            self.q[(from, to)] / exit
        } else {
            0.0
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_generators() {
        assert!(IntensityMatrix::new(DMatrix::from_row_slice(1, 1, &[0.0])).is_err());
        assert!(IntensityMatrix::new(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -1.0, 1.0])).is_err());
        assert!(IntensityMatrix::new(DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 1.0, -1.0])).is_err());
    }

    #[test]
    fn diagonal_is_negative_exit_rate() {
        let q = IntensityMatrix::from_rates(3, |r, c| (r + 2 * c) as f64 * 0.1).unwrap();
        for r in 0..3 {
            let s: f64 = (0..3).map(|c| q.rate(r, c)).sum();
            assert!(s.abs() < 1e-15);
        }
        assert!((q.jump_probability(0, 1) - 0.2 / 0.6).abs() < 1e-15);
    }
}
