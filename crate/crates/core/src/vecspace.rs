//! Dense vectors, orthonormal bases and the random sampling every other
//! module builds on.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for `|<b_i, b_j> - δ_ij|` in an [`OrthonormalBasis`].
pub const ORTHO_TOL: f64 = 1e-10;

/// Residual norm at or below which Gram-Schmidt declares a vector dependent.
pub const DROP_TOL: f64 = 1e-10;

/// A finite vector in `R^d`, `d >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::arg("vector must have at least one component"));
        }
        if let Some(i) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::arg(format!(
                "component {i} is not finite ({})",
                components[i]
            )));
        }
        Ok(DenseVector(components))
    }

    /// Callers guarantee non-empty, finite components.
    pub(crate) fn from_vec_unchecked(components: Vec<f64>) -> Self {
        debug_assert!(!components.is_empty());
        debug_assert!(components.iter().all(|c| c.is_finite()));
        DenseVector(components)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        DenseVector(vec![0.0; dim])
    }

    /// Standard basis vector `e_index` (zero-based index).
    pub fn unit(dim: usize, index: usize) -> Self {
        assert!(index < dim, "index {index} out of range for dimension {dim}");
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        DenseVector(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    #[inline]
    pub fn dot(&self, other: &DenseVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        dot(&self.0, &other.0)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> DenseVector {
        DenseVector(self.0.iter().map(|x| alpha * x).collect())
    }

    pub fn scale_in_place(&mut self, alpha: f64) {
        self.0.iter_mut().for_each(|x| *x *= alpha);
    }

    /// `self += alpha * other`.
    #[inline]
    pub fn axpy(&mut self, alpha: f64, other: &DenseVector) {
        debug_assert_eq!(self.dim(), other.dim());
        axpy(&mut self.0, alpha, &other.0);
    }

    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.dim(), other.dim());
        DenseVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.dim(), other.dim());
        DenseVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Radial projection onto the closed ball of radius `radius`.
    pub fn project_to_ball(&mut self, radius: f64) {
        let n = self.norm();
        if n > radius {
            self.scale_in_place(radius / n);
        }
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::arg(format!(
                "dimension mismatch: expected {dim}, got {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        DenseVector::new(v)
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Four-lane dot product. The summation order is fixed, so results are
/// bitwise reproducible.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// An ordered orthonormal set of vectors sharing one dimension.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    dim: usize,
    vectors: Vec<DenseVector>,
    ortho_tol: f64,
}

impl OrthonormalBasis {
    pub fn empty(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        OrthonormalBasis {
            dim,
            vectors: Vec::new(),
            ortho_tol: ORTHO_TOL,
        }
    }

    /// Wraps already-orthonormal vectors, checking the Gram matrix.
    pub fn from_vectors(dim: usize, vectors: Vec<DenseVector>, ortho_tol: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("dimension must be positive"));
        }
        if vectors.len() > dim {
            return Err(Error::arg(format!(
                "{} vectors cannot be orthonormal in dimension {dim}",
                vectors.len()
            )));
        }
        for v in &vectors {
            v.check_dim(dim)?;
        }
        let basis = OrthonormalBasis {
            dim,
            vectors,
            ortho_tol,
        };
        let err = basis.gram_error();
        if err > ortho_tol {
            return Err(Error::arg(format!(
                "vectors are not orthonormal: Gram error {err:e} exceeds {ortho_tol:e}"
            )));
        }
        Ok(basis)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn ortho_tol(&self) -> f64 {
        self.ortho_tol
    }

    pub fn vectors(&self) -> &[DenseVector] {
        &self.vectors
    }

    /// Zero-based access.
    pub fn get(&self, i: usize) -> &DenseVector {
        &self.vectors[i]
    }

    /// `max_{i,j} |<b_i, b_j> - δ_ij|`.
    pub fn gram_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }

    /// `v - P v`, computed by classical Gram-Schmidt applied twice.
    fn orthogonal_component(&self, v: &DenseVector) -> DenseVector {
        let mut r = v.clone();
        for _ in 0..2 {
            let coeffs: Vec<f64> = self.vectors.iter().map(|b| b.dot(&r)).collect();
            for (b, a) in self.vectors.iter().zip(coeffs) {
                r.axpy(-a, b);
            }
        }
        r
    }

    /// Normalized component of `v` orthogonal to the basis, or `None` when
    /// that component has norm at most `drop_tol`.
    pub fn gram_schmidt_residual(
        &self,
        v: &DenseVector,
        drop_tol: f64,
    ) -> Result<Option<DenseVector>> {
        v.check_dim(self.dim)?;
        let mut r = self.orthogonal_component(v);
        let n = r.norm();
        if n <= drop_tol {
            return Ok(None);
        }
        r.scale_in_place(1.0 / n);
        Ok(Some(r))
    }

    /// Appends the residual of `v` if it is non-null. Returns whether the
    /// basis grew.
    pub fn extend(&mut self, v: &DenseVector, drop_tol: f64) -> Result<bool> {
        if self.vectors.len() == self.dim {
            v.check_dim(self.dim)?;
            return Ok(false);
        }
        match self.gram_schmidt_residual(v, drop_tol)? {
            Some(r) => {
                self.vectors.push(r);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Appends a vector without any orthogonality check.
    pub(crate) fn push_unchecked(&mut self, v: DenseVector) {
        debug_assert_eq!(v.dim(), self.dim);
        self.vectors.push(v);
    }

    /// `sum_i <x, b_i> b_i`; the zero vector for an empty basis.
    pub fn project(&self, x: &DenseVector) -> Result<DenseVector> {
        x.check_dim(self.dim)?;
        let mut p = DenseVector::zeros(self.dim);
        for b in &self.vectors {
            p.axpy(b.dot(x), b);
        }
        Ok(p)
    }

    /// `x - project(x)`.
    pub fn project_perp(&self, x: &DenseVector) -> Result<DenseVector> {
        let p = self.project(x)?;
        Ok(x.sub(&p))
    }

    /// `||P x||^2 = sum_i <x, b_i>^2`.
    pub fn projected_norm_sq(&self, x: &DenseVector) -> Result<f64> {
        x.check_dim(self.dim)?;
        Ok(self.vectors.iter().map(|b| b.dot(x).powi(2)).sum())
    }
}

pub(crate) fn standard_normal_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseVector {
    DenseVector::from_vec_unchecked((0..d).map(|_| rng.sample(StandardNormal)).collect())
}

/// Draws `m` orthonormal vectors in `R^d` from the Haar measure on the
/// Stiefel manifold: Gaussian vectors orthonormalized in order.
pub fn sample_haar_orthonormal<R: Rng + ?Sized>(
    d: usize,
    m: usize,
    rng: &mut R,
) -> Result<OrthonormalBasis> {
    if d == 0 || m == 0 {
        return Err(Error::arg("dimension and vector count must be positive"));
    }
    if m > d {
        return Err(Error::arg(format!(
            "cannot draw {m} orthonormal vectors in dimension {d}"
        )));
    }
    let mut basis = OrthonormalBasis::empty(d);
    while basis.len() < m {
        let g = standard_normal_vector(d, rng);
        // A Gaussian vector lands in a proper subspace with probability zero;
        // redraw if roundoff says otherwise.
        basis.extend(&g, DROP_TOL)?;
    }
    Ok(basis)
}

/// A uniform point on the unit sphere `S^{d-1}`.
///
/// # Panics
///
/// Panics if `d == 0`.
pub fn sample_unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseVector {
    assert!(d >= 1, "dimension must be positive");
    loop {
        let mut g = standard_normal_vector(d, rng);
        let n = g.norm();
        if n > 0.0 && n.is_finite() {
            g.scale_in_place(1.0 / n);
            return g;
        }
    }
}

/// A point in the closed ball of radius `radius`: a uniform direction times
/// a radius drawn uniformly from `[0, radius]`.
pub fn sample_in_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> DenseVector {
    let mut u = sample_unit_sphere(d, rng);
    let r: f64 = rng.random_range(0.0..=1.0);
    u.scale_in_place(radius * r);
    u
}
