use nalgebra::DMatrix;

use super::{axpy, dot, norm, DenseVector};
use crate::error::{check_dim, Error, Result};
use crate::tolerances;

/// An `N × D_eff` matrix with orthonormal columns.
///
/// Stored column-major. `build_tag` records which iteration produced the
/// basis so that consecutive bases `S_k`, `S_{k+1}` can be told apart.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    n: usize,
    rank: usize,
    data: Vec<f64>,
    build_tag: u64,
}

impl BasisMatrix {
    /// Wraps columns that are already orthonormal to
    /// [`tolerances::ORTHONORMALITY`].
    pub fn from_columns(n: usize, columns: &[Vec<f64>], build_tag: u64) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::param("columns", "a basis needs at least one column"));
        }
        let mut data = Vec::with_capacity(n * columns.len());
        for c in columns {
            check_dim(n, c.len())?;
            data.extend_from_slice(c);
        }
        let basis = Self {
            n,
            rank: columns.len(),
            data,
            build_tag,
        };
        let dev = basis.orthonormality_error();
        if dev > tolerances::ORTHONORMALITY {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(basis)
    }

    /// Orthonormalizes `vectors` (Gram-Schmidt applied twice), dropping
    /// vectors that are dependent on earlier ones.
    pub fn orthonormalize(n: usize, vectors: &[Vec<f64>], build_tag: u64) -> Result<Self> {
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for v in vectors {
            check_dim(n, v.len())?;
            let scale = norm(v);
            let mut w = v.clone();
            for _ in 0..2 {
                for c in &cols {
                    let coef = dot(c, &w);
                    axpy(-coef, c, &mut w);
                }
            }
            let nw = norm(&w);
            if scale > 0.0 && nw > tolerances::KRYLOV_BREAKDOWN_REL * scale {
                w.iter_mut().for_each(|x| *x /= nw);
                cols.push(w);
            }
        }
        Self::from_columns(n, &cols, build_tag)
    }

    pub(crate) fn from_raw(n: usize, rank: usize, data: Vec<f64>, build_tag: u64) -> Self {
        debug_assert_eq!(data.len(), n * rank);
        Self {
            n,
            rank,
            data,
            build_tag,
        }
    }

    /// Ambient dimension `N`.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Effective rank `D_eff` (number of columns).
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn build_tag(&self) -> u64 {
        self.build_tag
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    /// `Sᵀ x`
    pub fn project_down(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        Ok(self.columns().map(|c| dot(c, x)).collect())
    }

    /// `S z`
    pub fn lift(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rank, z.len())?;
        let mut out = vec![0.0; self.n];
        for (c, &zj) in self.columns().zip(z) {
            axpy(zj, c, &mut out);
        }
        Ok(out)
    }

    /// `S Sᵀ x`
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.project_down(x)?;
        self.lift(&z)
    }

    /// `max |SᵀS − I|` over all entries.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rank {
            for j in i..self.rank {
                let g = dot(self.column(i), self.column(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// `S_selfᵀ S_other` as a `D × D'` matrix.
    pub fn cross_gram(&self, other: &BasisMatrix) -> Result<DMatrix<f64>> {
        check_dim(self.n, other.n)?;
        Ok(DMatrix::from_fn(self.rank, other.rank, |i, j| {
            dot(self.column(i), other.column(j))
        }))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.rank, &self.data)
    }

    /// Columns as dense vectors.
    pub fn to_vectors(&self) -> Vec<DenseVector> {
        self.columns()
            .map(|c| DenseVector::from_vec_unchecked(c.to_vec()))
            .collect()
    }

    /// True when both bases have identical entries.
    pub fn same_as(&self, other: &BasisMatrix) -> bool {
        self.n == other.n && self.rank == other.rank && self.data == other.data
    }
}
