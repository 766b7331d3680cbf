//! Empirical counterparts of the asymptotic limits, measured against ground truth.
//!
//! Inner products are `⟨a, b⟩ = bᴴa`. Components are grouped by exact equality of their
//! amplitudes `θ_j`, and recovery is measured against the span of each group.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use serde::{Deserialize, Serialize};

use crate::datagen::{orthonormalize, Dataset};
use crate::error::{Error, Result};
use crate::pca::PcaResult;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMetrics {
    pub subspace_sq_cos: f64,
    pub subspace_sq_cos_other: f64,
    pub coeff_sq_cos: f64,
    pub coeff_sq_cos_other: f64,
    pub mixed_real: f64,
    /// Magnitude of the imaginary part of the mixed sum; zero for real data.
    pub mixed_imag_abs: f64,
    pub amplitude_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMetrics {
    pub components: Vec<ComponentMetrics>,
    pub mse: f64,
    pub overall_subspace: f64,
}

/// Indices with amplitude equal to component `i`'s, and the rest.
fn groups(amplitudes: &[f64], i: usize) -> (Vec<usize>, Vec<usize>) {
    (0..amplitudes.len()).partition(|&j| amplitudes[j] == amplitudes[i])
}

fn dot<T: Scalar>(a: impl Iterator<Item = T>, b: impl Iterator<Item = T>) -> T {
    let mut acc = T::from_re(0.0);
    for (x, y) in a.zip(b) {
        acc += y.conjugate() * x;
    }
    acc
}

fn check<T: Scalar>(pca: &PcaResult<T>, truth: &Dataset<T>, i: usize) -> Result<()> {
    if pca.components.nrows() != truth.u.nrows() || pca.scores.nrows() != truth.z.nrows() {
        return Err(Error::Domain("PCA result and dataset have different shapes".into()));
    }
    if i >= pca.k() || i >= truth.u.ncols() {
        return Err(Error::Domain(format!("component index {i} out of range")));
    }
    Ok(())
}

/// Squared norm of the projection of `û_i` onto the span of its amplitude group, and
/// onto the span of the remaining components.
pub fn subspace_metric<T: Scalar>(pca: &PcaResult<T>, truth: &Dataset<T>, i: usize) -> Result<(f64, f64)> {
    check(pca, truth, i)?;
    let (same, other) = groups(&truth.spec.amplitudes, i);
    let cos2 = |j: usize| dot(pca.components.col(i).iter().copied(), truth.u.col(j).iter().copied()).modulus_sq();
    Ok((same.iter().map(|&j| cos2(j)).sum(), other.iter().map(|&j| cos2(j)).sum()))
}

/// Squared projections of `v` onto the span of `cols[same]` and onto the part of the span
/// of `cols[other]` orthogonal to it.
fn split_projection_sq<T: Scalar>(v: &[T], cols: &Mat<T>, same: &[usize], other: &[usize]) -> Result<(f64, f64)> {
    let order: Vec<usize> = same.iter().chain(other).copied().collect();
    let picked = Mat::from_fn(cols.nrows(), order.len(), |r, c| cols[(r, order[c])]);
    let basis = orthonormalize(picked.as_ref())?;
    let sq = |c: usize| dot(v.iter().copied(), basis.col(c).iter().copied()).modulus_sq();
    Ok(((0..same.len()).map(sq).sum(), (same.len()..order.len()).map(sq).sum()))
}

/// Squared cosines of the score vector against the orthonormalized coefficient vectors of
/// the same amplitude group, and against the remaining coefficient directions.
pub fn coefficient_metric<T: Scalar>(pca: &PcaResult<T>, truth: &Dataset<T>, i: usize) -> Result<(f64, f64)> {
    check(pca, truth, i)?;
    let (same, other) = groups(&truth.spec.amplitudes, i);
    let v: Vec<T> = pca.scores.col(i).iter().copied().collect();
    split_projection_sq(&v, &truth.z, &same, &other)
}

/// `Σ_j ⟨û_i, u_j⟩ ⟨ẑ⁽ⁱ⁾/√n, z⁽ʲ⁾/‖z⁽ʲ⁾‖⟩*` over the amplitude group of `i`, as
/// `(real part, |imaginary part|)`.
pub fn mixed_metric<T: Scalar>(pca: &PcaResult<T>, truth: &Dataset<T>, i: usize) -> Result<(f64, f64)> {
    check(pca, truth, i)?;
    let (same, _) = groups(&truth.spec.amplitudes, i);
    let mut sum = T::from_re(0.0);
    for j in same {
        let zj = truth.z.col(j);
        let norm = zj.iter().map(|x| x.modulus_sq()).sum::<f64>().sqrt();
        let left = dot(pca.components.col(i).iter().copied(), truth.u.col(j).iter().copied());
        let right = dot(pca.scores.col(i).iter().copied(), zj.iter().copied()).scale(1.0 / norm);
        sum += left * right.conjugate();
    }
    Ok((sum.re(), sum.im().abs()))
}

/// `(1/n) Σ_i ‖U Θ z_i - Û Θ̂ ẑ_i‖²`, expanded into `k × k` products.
pub fn mse_metric<T: Scalar>(pca: &PcaResult<T>, truth: &Dataset<T>) -> Result<f64> {
    check(pca, truth, 0)?;
    let n = truth.z.nrows() as f64;
    let theta = &truth.spec.amplitudes;
    let k_true = theta.len();
    let k_hat = pca.k();
    let one = T::from_re(1.0);

    let mut utu = Mat::<T>::zeros(k_true, k_true);
    matmul(utu.as_mut(), Accum::Replace, truth.u.adjoint(), truth.u.as_ref(), one, Par::Seq);
    let mut ztz = Mat::<T>::zeros(k_true, k_true);
    matmul(ztz.as_mut(), Accum::Replace, truth.z.adjoint(), truth.z.as_ref(), one, Par::Seq);
    let mut uhat_u = Mat::<T>::zeros(k_hat, k_true);
    matmul(uhat_u.as_mut(), Accum::Replace, pca.components.adjoint(), truth.u.as_ref(), one, Par::Seq);
    let mut v_z = Mat::<T>::zeros(k_hat, k_true);
    matmul(v_z.as_mut(), Accum::Replace, pca.scores.adjoint(), truth.z.as_ref(), one, Par::Seq);

    // ‖UΘZᴴ‖² = tr(Θ UᴴU Θ ZᴴZ)
    let mut signal = 0.0;
    for a in 0..k_true {
        for b in 0..k_true {
            signal += (utu[(a, b)] * ztz[(b, a)]).re() * theta[a] * theta[b];
        }
    }
    let estimate: f64 = pca.amplitudes_sq.iter().sum();
    // Re tr(ZΘUᴴ Û Θ̂ Vᴴ) = Σ θ_j θ̂_i Re[(ÛᴴU)_ij* (VᴴZ)_ij]
    let mut cross = 0.0;
    for i in 0..k_hat {
        let s = pca.amplitudes_sq[i].sqrt();
        for j in 0..k_true {
            cross += (uhat_u[(i, j)].conjugate() * v_z[(i, j)]).re() * theta[j] * s;
        }
    }
    Ok(signal / n + estimate - 2.0 * cross / n.sqrt())
}

/// `(1/k) ‖Ûᴴ U‖_F²`.
pub fn overall_subspace_metric<T: Scalar>(pca: &PcaResult<T>, truth: &Dataset<T>) -> Result<f64> {
    check(pca, truth, 0)?;
    let k = truth.u.ncols();
    let mut total = 0.0;
    for i in 0..pca.k() {
        for j in 0..k {
            total += dot(pca.components.col(i).iter().copied(), truth.u.col(j).iter().copied()).modulus_sq();
        }
    }
    Ok(total / k as f64)
}

pub fn evaluate<T: Scalar>(pca: &PcaResult<T>, truth: &Dataset<T>) -> Result<EmpiricalMetrics> {
    let k = truth.spec.k();
    if pca.k() != k {
        return Err(Error::Domain(format!("PCA rank {} differs from the dataset rank {k}", pca.k())));
    }
    let mut components = Vec::with_capacity(k);
    for i in 0..k {
        let (subspace_sq_cos, subspace_sq_cos_other) = subspace_metric(pca, truth, i)?;
        let (coeff_sq_cos, coeff_sq_cos_other) = coefficient_metric(pca, truth, i)?;
        let (mixed_real, mixed_imag_abs) = mixed_metric(pca, truth, i)?;
        let theta = truth.spec.amplitudes[i];
        components.push(ComponentMetrics {
            subspace_sq_cos,
            subspace_sq_cos_other,
            coeff_sq_cos,
            coeff_sq_cos_other,
            mixed_real,
            mixed_imag_abs,
            amplitude_ratio: pca.amplitudes_sq[i] / (theta * theta),
        });
    }
    Ok(EmpiricalMetrics {
        components,
        mse: mse_metric(pca, truth)?,
        overall_subspace: overall_subspace_metric(pca, truth)?,
    })
}
