//! The hard function family `f(x) = L B max_j (<x/B, v_j> - j c)`, its
//! reference point `x̂`, and the non-suboptimality certificate.

mod io;

pub use io::{load_instance, save_instance, InstanceMetadata, StorageFormat, FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::seeds;
use crate::vecspace::{sample_haar_orthonormal, DenseVector, OrthonormalBasis, ORTHO_TOL};

/// Relative slack on `||x|| <= B` accepted by every evaluation entry point.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Inline vector storage is permitted up to this many stored values (`d k`).
pub const INLINE_MAX_VALUES: usize = 100_000;

/// One member of the hard family.
///
/// Construction is parametrized by the integer piece count `k`; the unit
/// accuracy is then `eps_unit = 1/(2 sqrt(k))` and the piece offset is
/// `c = eps_unit / k`. For general `L, B` the function is
/// `f(x) = L B f_unit(x / B)`, so subgradients scale by `L` and the domain
/// by `B`.
#[derive(Clone, Debug)]
pub struct HardInstance {
    k: usize,
    d: usize,
    eps_unit: f64,
    c: f64,
    lipschitz: f64,
    radius: f64,
    vectors: OrthonormalBasis,
    seed: u64,
}

/// The explicit point `x̂ = -(B / sqrt(k)) sum_j v_j` and the bracket it
/// gives on the unknown minimum.
#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub x_hat: DenseVector,
    pub f_x_hat: f64,
    /// `-3 L B eps_unit`; no feasible point is lower.
    pub optimum_lower: f64,
    /// `f(x̂)`.
    pub optimum_upper: f64,
}

/// Outcome of [`HardInstance::certify_not_suboptimal`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// `<x/B, v_witness> > -c/2`, so `f(x) > f(x*) + eps`. One-based index.
    NotSuboptimal { witness: usize },
    /// Every inner product is at most `-c/2`; nothing can be concluded.
    Inconclusive,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certificate::NotSuboptimal { .. })
    }

    pub fn witness(&self) -> Option<usize> {
        match *self {
            Certificate::NotSuboptimal { witness } => Some(witness),
            Certificate::Inconclusive => None,
        }
    }
}

pub fn eps_unit_for(k: usize) -> f64 {
    1.0 / (2.0 * (k as f64).sqrt())
}

pub fn offset_for(k: usize) -> f64 {
    let kf = k as f64;
    1.0 / (2.0 * kf * kf.sqrt())
}

fn validate(k: usize, d: usize, lipschitz: f64, radius: f64) -> Result<()> {
    if k == 0 || d == 0 {
        return Err(Error::arg(format!("k and d must be positive (k={k}, d={d})")));
    }
    if d < 2 * k {
        return Err(Error::arg(format!("dimension d={d} must be at least 2k={}", 2 * k)));
    }
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(Error::arg(format!("Lipschitz scale must be positive, got {lipschitz}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::arg(format!("domain radius must be positive, got {radius}")));
    }
    Ok(())
}

impl HardInstance {
    /// Draws the `k` construction vectors from the Haar measure using the
    /// stream seeded by `seed`.
    pub fn build(k: usize, d: usize, lipschitz: f64, radius: f64, seed: u64) -> Result<Self> {
        validate(k, d, lipschitz, radius)?;
        let mut rng = seeds::stream(seed);
        let vectors = sample_haar_orthonormal(d, k, &mut rng)?;
        Self::from_basis(vectors, lipschitz, radius, seed)
    }

    /// An instance over caller-supplied orthonormal vectors; `k` is the
    /// number of vectors.
    pub fn from_basis(
        vectors: OrthonormalBasis,
        lipschitz: f64,
        radius: f64,
        seed: u64,
    ) -> Result<Self> {
        let k = vectors.len();
        let d = vectors.dim();
        validate(k, d, lipschitz, radius)?;
        let err = vectors.gram_error();
        if err > ORTHO_TOL {
            return Err(Error::arg(format!("construction vectors not orthonormal ({err:e})")));
        }
        Ok(HardInstance {
            k,
            d,
            eps_unit: eps_unit_for(k),
            c: offset_for(k),
            lipschitz,
            radius,
            vectors,
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eps_unit(&self) -> f64 {
        self.eps_unit
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vectors(&self) -> &OrthonormalBasis {
        &self.vectors
    }

    /// `v_j`, one-based.
    pub fn v(&self, j: usize) -> &DenseVector {
        assert!((1..=self.k).contains(&j), "piece index {j} outside 1..={}", self.k);
        self.vectors.get(j - 1)
    }

    /// The advertised accuracy `eps = L B eps_unit`.
    pub fn target_eps(&self) -> f64 {
        self.lipschitz * self.radius * self.eps_unit
    }

    fn scale(&self) -> f64 {
        self.lipschitz * self.radius
    }

    /// Returns `||x||` if `x` is in the (slightly inflated) feasible ball.
    pub fn check_feasible(&self, x: &DenseVector) -> Result<f64> {
        x.check_dim(self.d)?;
        let norm = x.norm();
        if norm > self.radius * (1.0 + FEASIBILITY_TOL) {
            return Err(Error::Domain {
                norm,
                radius: self.radius,
            });
        }
        Ok(norm)
    }

    /// `<x/B, v_j>` for `j = 1..=k`. No feasibility check.
    pub fn unit_inner_products(&self, x: &DenseVector) -> Vec<f64> {
        self.vectors
            .vectors()
            .iter()
            .map(|v| x.dot(v) / self.radius)
            .collect()
    }

    /// Unit-scale piece values `p_j = <x/B, v_j> - j c`.
    pub fn piece_values(&self, x: &DenseVector) -> Result<Vec<f64>> {
        self.check_feasible(x)?;
        Ok(self.pieces_unchecked(x))
    }

    fn pieces_unchecked(&self, x: &DenseVector) -> Vec<f64> {
        self.unit_inner_products(x)
            .into_iter()
            .enumerate()
            .map(|(i, ip)| ip - (i + 1) as f64 * self.c)
            .collect()
    }

    /// Smallest one-based index attaining `max_j p_j` under exact comparison,
    /// together with that maximum.
    pub(crate) fn active_piece(&self, x: &DenseVector) -> (usize, f64) {
        let mut best = (1usize, f64::NEG_INFINITY);
        for (i, p) in self.pieces_unchecked(x).into_iter().enumerate() {
            if p > best.1 {
                best = (i + 1, p);
            }
        }
        best
    }

    /// `f(x)`; errors with [`Error::Domain`] when `||x|| > B (1 + 1e-9)`.
    pub fn evaluate(&self, x: &DenseVector) -> Result<f64> {
        self.check_feasible(x)?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &DenseVector) -> f64 {
        self.scale() * self.active_piece(x).1
    }

    pub fn reference_solution(&self) -> ReferenceSolution {
        let mut x_hat = DenseVector::zeros(self.d);
        for v in self.vectors.vectors() {
            x_hat.axpy(1.0, v);
        }
        x_hat.scale_in_place(-self.radius / (self.k as f64).sqrt());
        let f_x_hat = self.value_unchecked(&x_hat);
        ReferenceSolution {
            x_hat,
            f_x_hat,
            optimum_lower: -3.0 * self.scale() * self.eps_unit,
            optimum_upper: f_x_hat,
        }
    }

    /// `-L B (2 eps_unit + c)`, the closed form of `f(x̂)`.
    pub fn reference_value(&self) -> f64 {
        -self.scale() * (2.0 * self.eps_unit + self.c)
    }

    /// Certifies that `x` is not `eps`-suboptimal when some
    /// `<x/B, v_j> > -c/2`. `eps` must be the advertised target.
    pub fn certify_not_suboptimal(&self, x: &DenseVector, eps: f64) -> Result<Certificate> {
        let target = self.target_eps();
        if !((eps - target).abs() <= 1e-12 * target) {
            return Err(Error::arg(format!(
                "certificate only holds at the advertised eps={target}, got {eps}"
            )));
        }
        self.check_feasible(x)?;
        Ok(self.certificate_unchecked(x))
    }

    pub(crate) fn certificate_unchecked(&self, x: &DenseVector) -> Certificate {
        let half_c = -0.5 * self.c;
        self.unit_inner_products(x)
            .into_iter()
            .position(|ip| ip > half_c)
            .map_or(Certificate::Inconclusive, |i| Certificate::NotSuboptimal {
                witness: i + 1,
            })
    }
}
