use num_complex::Complex64;

use crate::error::{Error, Result};

/// Deviation from Hermiticity tolerated (and then removed) on construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex Hermitian matrix, row-major.
///
/// Every constructor leaves `entries[i][j] == conj(entries[j][i])` bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds from a full row-major array, rejecting anything further than
    /// [`HERMITIAN_TOL`] from Hermitian and symmetrizing the remainder.
    pub fn from_entries(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Argument(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        let m = HermitianMatrix { dim, data };
        if let Some((row, col, deviation)) = m.worst_deviation() {
            if !(deviation <= HERMITIAN_TOL) {
                return Err(Error::NotHermitian { row, col, deviation });
            }
        }
        Ok(m.symmetrized_from_upper())
    }

    /// Builds from the upper triangle (diagonal included) of `data`; the
    /// strictly lower part is overwritten with conjugates and the diagonal
    /// made real.
    pub fn from_upper(dim: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), dim * dim, "matrix data has the wrong length");
        HermitianMatrix { dim, data }.symmetrized_from_upper()
    }

    fn symmetrized_from_upper(mut self) -> Self {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                self.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        self
    }

    fn worst_deviation(&self) -> Option<(usize, usize, f64)> {
        let n = self.dim;
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                let d = if d.is_nan() { f64::INFINITY } else { d };
                if worst.is_none_or(|w| d > w.2) {
                    worst = Some((i, j, d));
                }
            }
        }
        worst
    }

    /// max |H - H^H| over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        self.worst_deviation().map_or(0.0, |w| w.2)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.dim.max(1))
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Real shift of the diagonal, `H - σI`.
    pub fn shifted(&self, sigma: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i].re -= sigma;
        }
        m
    }
}
