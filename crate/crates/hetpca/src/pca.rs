//! Truncated PCA of `Y/√n` through the Gram matrix of the smaller dimension.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Top-`k` singular triples of `Y/√n`.
#[derive(Debug, Clone)]
pub struct PcaResult<T: Scalar> {
    /// `d × k` left singular vectors `û_i`.
    pub components: Mat<T>,
    /// Squared singular values `θ̂_i²`, nonincreasing.
    pub amplitudes_sq: Vec<f64>,
    /// `n × k` unit-norm right singular vectors `ẑ⁽ⁱ⁾/√n`.
    pub scores: Mat<T>,
}

impl<T: Scalar> PcaResult<T> {
    pub fn k(&self) -> usize {
        self.amplitudes_sq.len()
    }

    /// Largest `‖(Y/√n) v_i - θ̂_i û_i‖` over the retained triples.
    pub fn residual(&self, y: MatRef<'_, T>) -> f64 {
        let n = y.ncols() as f64;
        let mut yv = Mat::<T>::zeros(y.nrows(), self.k());
        matmul(yv.as_mut(), Accum::Replace, y, self.scores.as_ref(), T::from_re(1.0 / n.sqrt()), Par::Seq);
        (0..self.k())
            .map(|i| {
                let s = self.amplitudes_sq[i].sqrt();
                (0..y.nrows())
                    .map(|r| (yv[(r, i)] - self.components[(r, i)].scale(s)).modulus_sq())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

pub fn pca<T: Scalar>(y: MatRef<'_, T>, k: usize) -> Result<PcaResult<T>> {
    let (d, n) = (y.nrows(), y.ncols());
    if k == 0 || k > d.min(n) {
        return Err(Error::Domain(format!("rank {k} must lie in 1..={} for a {d} × {n} matrix", d.min(n))));
    }
    let scale = T::from_re(1.0 / n as f64);

    // eigenvectors of the smaller Gram matrix give one side, a product gives the other
    let left_side = d <= n;
    let m = if left_side { d } else { n };
    let mut gram = Mat::<T>::zeros(m, m);
    if left_side {
        matmul(gram.as_mut(), Accum::Replace, y, y.adjoint(), scale, Par::Seq);
    } else {
        matmul(gram.as_mut(), Accum::Replace, y.adjoint(), y, scale, Par::Seq);
    }
    let evd = gram
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Internal(format!("eigendecomposition failed: {e:?}")))?;
    let values = evd.S().column_vector();
    let vectors = evd.U();

    let mut amplitudes_sq = Vec::with_capacity(k);
    let mut near = Mat::<T>::zeros(m, k);
    for i in 0..k {
        let src = m - 1 - i;
        amplitudes_sq.push(values[src].re().max(0.0));
        for r in 0..m {
            near[(r, i)] = vectors[(r, src)];
        }
    }

    // far side: Yᴴ u or Y v, normalized
    let far_dim = if left_side { n } else { d };
    let mut far = Mat::<T>::zeros(far_dim, k);
    if left_side {
        matmul(far.as_mut(), Accum::Replace, y.adjoint(), near.as_ref(), T::from_re(1.0), Par::Seq);
    } else {
        matmul(far.as_mut(), Accum::Replace, y, near.as_ref(), T::from_re(1.0), Par::Seq);
    }
    let y_norm = (0..n)
        .flat_map(|i| (0..d).map(move |r| (r, i)))
        .map(|(r, i)| y[(r, i)].modulus_sq())
        .sum::<f64>()
        .sqrt();
    complete_columns(&mut far, y_norm * 1e-13)?;

    let (components, scores) = if left_side { (near, far) } else { (far, near) };
    Ok(PcaResult { components, amplitudes_sq, scores })
}

/// Normalizes each column; columns whose norm is below `floor` (zero singular values)
/// are replaced by unit vectors orthogonal to the previous columns.
fn complete_columns<T: Scalar>(m: &mut Mat<T>, floor: f64) -> Result<()> {
    let rows = m.nrows();
    for j in 0..m.ncols() {
        let norm = (0..rows).map(|r| m[(r, j)].modulus_sq()).sum::<f64>().sqrt();
        if norm > floor && norm > 0.0 {
            for r in 0..rows {
                m[(r, j)] = m[(r, j)].scale(1.0 / norm);
            }
            continue;
        }
        let mut filled = false;
        for e in 0..rows {
            for r in 0..rows {
                m[(r, j)] = T::from_re(if r == e { 1.0 } else { 0.0 });
            }
            for _ in 0..2 {
                for i in 0..j {
                    let mut dot = T::from_re(0.0);
                    for r in 0..rows {
                        dot += m[(r, i)].conjugate() * m[(r, j)];
                    }
                    for r in 0..rows {
                        let v = m[(r, i)] * dot;
                        m[(r, j)] = m[(r, j)] - v;
                    }
                }
            }
            let norm = (0..rows).map(|r| m[(r, j)].modulus_sq()).sum::<f64>().sqrt();
            if norm > 0.5 {
                for r in 0..rows {
                    m[(r, j)] = m[(r, j)].scale(1.0 / norm);
                }
                filled = true;
                break;
            }
        }
        if !filled {
            return Err(Error::Internal(format!("could not complete singular vector {j}")));
        }
    }
    Ok(())
}
