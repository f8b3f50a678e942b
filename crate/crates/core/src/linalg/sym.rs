use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Upper triangle, row-major: row `i` holds entries `(i, i..n)`.
    Packed(Vec<f64>),
    /// First row of a symmetric Toeplitz matrix.
    Toeplitz(Vec<f64>),
}

/// A real symmetric `n × n` matrix.
///
/// Symmetry holds by construction: only the upper triangle (or the first row
/// for Toeplitz matrices) is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    storage: Storage,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            storage: Storage::Packed(vec![0.0; n * (n + 1) / 2]),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Builds the matrix from a function evaluated on the upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                data.push(f(i, j));
            }
        }
        Self {
            n,
            storage: Storage::Packed(data),
        }
    }

    /// Builds the matrix from full rows; the lower triangle must mirror the
    /// upper one exactly.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            check_dim(n, row.len())?;
        }
        for i in 0..n {
            for j in 0..n {
                if !rows[i][j].is_finite() {
                    return Err(Error::NonFinite(i * n + j));
                }
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Inconsistent(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    /// Symmetric Toeplitz matrix with entry `(i, j) = first_row[|i − j|]`.
    pub fn toeplitz(first_row: Vec<f64>) -> Result<Self> {
        if let Some(i) = first_row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            n: first_row.len(),
            storage: Storage::Toeplitz(first_row),
        })
    }

    /// Symmetric part `(A + Aᵀ)/2` of a dense nalgebra matrix.
    pub fn from_dmatrix(a: &DMatrix<f64>) -> Result<Self> {
        check_dim(a.nrows(), a.ncols())?;
        Ok(Self::from_fn(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)])))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_toeplitz(&self) -> bool {
        matches!(self.storage, Storage::Toeplitz(_))
    }

    pub fn first_row(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Toeplitz(r) => Some(r),
            Storage::Packed(_) => None,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Packed(d) => d[packed_index(self.n, i, j)],
            Storage::Toeplitz(r) => r[i.abs_diff(j)],
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `y = A x`, naive `O(n²)` in both storage modes.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        match &self.storage {
            Storage::Toeplitz(r) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, xj) in x.iter().enumerate() {
                        acc += r[i.abs_diff(j)] * xj;
                    }
                    *yi = acc;
                }
            }
            Storage::Packed(d) => {
                y.iter_mut().for_each(|v| *v = 0.0);
                let mut k = 0;
                for i in 0..n {
                    let xi = x[i];
                    let mut acc = d[k] * xi;
                    k += 1;
                    for j in (i + 1)..n {
                        let a = d[k];
                        acc += a * x[j];
                        y[j] += a * xi;
                        k += 1;
                    }
                    y[i] += acc;
                }
            }
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let ax = self.matvec(x)?;
        Ok(super::dot(x, &ax))
    }

    /// Dense copy with the Toeplitz structure expanded.
    pub fn to_dense(&self) -> SymMatrix {
        let n = self.n;
        SymMatrix::from_fn(n, |i, j| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub(crate) fn packed_mut(&mut self) -> Option<&mut [f64]> {
        match &mut self.storage {
            Storage::Packed(d) => Some(d),
            Storage::Toeplitz(_) => None,
        }
    }

    pub(crate) fn toeplitz_mut(&mut self) -> Option<&mut [f64]> {
        match &mut self.storage {
            Storage::Toeplitz(r) => Some(r),
            Storage::Packed(_) => None,
        }
    }
}
