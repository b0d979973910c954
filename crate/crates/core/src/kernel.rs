//! Gaussian similarity between points and against a support-vector set.
//!
//! `K(x, y) = exp(-‖x - y‖² / (2σ²))`. Values are never clamped: a pair of
//! nearly coincident points yields something like `1 - 1e-18`, and it is up to
//! the learner's near-duplicate filter to decide what to do with it.

use std::fmt;

use crate::error::{FisvddError, Result};

/// Gaussian kernel bandwidth `σ`. Always finite and strictly positive.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(Bandwidth(sigma))
        } else {
            Err(FisvddError::InvalidParameter(format!(
                "bandwidth must be finite and positive, got {sigma}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 / (2σ²)`, the factor applied to squared distances.
    #[inline]
    pub(crate) fn gamma(self) -> f64 {
        0.5 / (self.0 * self.0)
    }
}

impl fmt::Debug for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bandwidth({})", self.0)
    }
}

/// Similarities between one point and every current support vector, in
/// support-vector order.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelVector(Vec<f64>);

impl KernelVector {
    pub fn new(values: Vec<f64>) -> Self {
        KernelVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest similarity, or `0.0` for an empty vector.
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for KernelVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Checks that every coordinate is finite.
pub fn check_finite(point: &[f64]) -> Result<()> {
    match point.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(FisvddError::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_dimension(expected: usize, point: &[f64]) -> Result<()> {
    if point.len() != expected {
        return Err(FisvddError::DimensionMismatch {
            expected,
            actual: point.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

/// Unchecked kernel evaluation for points already validated by the caller.
#[inline]
pub(crate) fn similarity(x: &[f64], y: &[f64], sigma: Bandwidth) -> f64 {
    (-squared_distance(x, y) * sigma.gamma()).exp()
}

/// Gaussian similarity of two points.
///
/// ```
/// use fisvdd::kernel::{gaussian_similarity, Bandwidth};
///
/// let sigma = Bandwidth::new(1.0).unwrap();
/// let k = gaussian_similarity(&[0.0, 0.0], &[2.0, 0.0], sigma).unwrap();
/// assert!((k - (-2.0f64).exp()).abs() < 1e-15);
/// ```
pub fn gaussian_similarity(x: &[f64], y: &[f64], sigma: Bandwidth) -> Result<f64> {
    check_dimension(x.len(), y)?;
    check_finite(x)?;
    check_finite(y)?;
    Ok(similarity(x, y, sigma))
}

/// Similarities between `z` and each of `support_vectors`, in order.
pub fn similarity_vector<P: AsRef<[f64]>>(
    z: &[f64],
    support_vectors: &[P],
    sigma: Bandwidth,
) -> Result<KernelVector> {
    if support_vectors.is_empty() {
        return Err(FisvddError::EmptyInput("support vector set"));
    }
    check_finite(z)?;
    for sv in support_vectors {
        check_dimension(z.len(), sv.as_ref())?;
    }
    Ok(similarity_vector_unchecked(z, support_vectors, sigma))
}

pub(crate) fn similarity_vector_unchecked<P: AsRef<[f64]>>(
    z: &[f64],
    support_vectors: &[P],
    sigma: Bandwidth,
) -> KernelVector {
    KernelVector(
        support_vectors
            .iter()
            .map(|sv| similarity(z, sv.as_ref(), sigma))
            .collect(),
    )
}

/// Dense similarity matrix of a point set, row-major.
pub(crate) fn similarity_matrix<P: AsRef<[f64]>>(points: &[P], sigma: Bandwidth) -> Vec<f64> {
    let n = points.len();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = 1.0;
        for j in 0..i {
            let k = similarity(points[i].as_ref(), points[j].as_ref(), sigma);
            a[i * n + j] = k;
            a[j * n + i] = k;
        }
    }
    a
}
