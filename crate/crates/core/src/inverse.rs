//! Inverse of the support vectors' similarity matrix under one-point growth
//! and removal.
//!
//! Appending a point with similarity column `v` to a set whose inverse is
//! known costs one matrix-vector product: with `p = A⁻¹v` and the Schur
//! complement `β = 1 - vᵀp`,
//!
//! ```text
//!          ┌ A⁻¹ + ppᵀ/β   -p/β ┐
//! A'⁻¹  =  │                    │
//!          └   -pᵀ/β        1/β ┘
//! ```
//!
//! Removing a point reverses this. Writing the current inverse with the
//! departing row and column moved last as `[[P, u], [uᵀ, λ]]`, the inverse of
//! the remaining set is `P - uuᵀ/λ`. Both directions are `O(k²)`.

use nalgebra::DMatrix;

use crate::error::{FisvddError, Result};
use crate::kernel::{similarity_matrix, Bandwidth, KernelVector};

/// Expansions whose Schur complement is at or below this are rejected.
pub const BETA_MIN: f64 = 1e-12;

/// Removals whose corner entry magnitude is below this signal corrupted state.
pub const LAMBDA_MIN: f64 = 1e-14;

/// Dense symmetric inverse of a Gaussian similarity matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelInverse {
    order: usize,
    entries: Vec<f64>,
}

impl KernelInverse {
    /// Inverse of the 1×1 similarity matrix `[1]`.
    pub fn singleton() -> Self {
        KernelInverse {
            order: 1,
            entries: vec![1.0],
        }
    }

    /// Wraps a row-major square matrix. The caller vouches that it is the
    /// inverse of some similarity matrix; only shape and symmetry are checked.
    pub fn from_row_major(order: usize, entries: Vec<f64>) -> Result<Self> {
        if order == 0 || entries.len() != order * order {
            return Err(FisvddError::InvalidParameter(format!(
                "expected {order}x{order} entries, got {}",
                entries.len()
            )));
        }
        for i in 0..order {
            for j in 0..i {
                if (entries[i * order + j] - entries[j * order + i]).abs() > 1e-10 {
                    return Err(FisvddError::InvalidParameter(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(KernelInverse { order, entries })
    }

    /// Builds and inverts the similarity matrix of `points` directly through a
    /// Cholesky factorization.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P], sigma: Bandwidth) -> Result<Self> {
        if points.is_empty() {
            return Err(FisvddError::EmptyInput("point set"));
        }
        let n = points.len();
        let a = DMatrix::from_row_slice(n, n, &similarity_matrix(points, sigma));
        let inv = a
            .cholesky()
            .ok_or(FisvddError::NotPositiveDefinite)?
            .inverse();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                entries[i * n + j] = x;
                entries[j * n + i] = x;
            }
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(FisvddError::NotPositiveDefinite);
        }
        Ok(KernelInverse { order: n, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.entries
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.order..(i + 1) * self.order]
    }

    /// `A⁻¹x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.order);
        (0..self.order)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Computes `p = A⁻¹v` and the Schur complement `β = 1 - vᵀp` for a
    /// prospective new point, rejecting it if `β ≤ BETA_MIN`.
    pub fn schur_step(&self, v: &KernelVector) -> Result<SchurStep> {
        let k = self.order;
        if v.len() != k {
            return Err(FisvddError::DimensionMismatch {
                expected: k,
                actual: v.len(),
            });
        }
        let p = self.mul_vec(v);
        let beta = 1.0 - v.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>();
        if !(beta > BETA_MIN) {
            return Err(FisvddError::IllConditionedExpansion { beta });
        }
        Ok(SchurStep { p, beta })
    }

    /// Builds the grown inverse from a step computed by [`schur_step`](Self::schur_step).
    pub fn apply(&self, step: &SchurStep) -> KernelInverse {
        let k = self.order;
        assert_eq!(step.p.len(), k, "step computed for a different inverse");
        let n = k + 1;
        let p = &step.p;
        let inv_beta = 1.0 / step.beta;
        let scaled: Vec<f64> = p.iter().map(|x| x * inv_beta).collect();
        let mut entries = vec![0.0; n * n];
        for i in 0..k {
            let old = self.row(i);
            let row = &mut entries[i * n..i * n + k];
            let pi = p[i];
            for ((dst, &a), &s) in row.iter_mut().zip(old).zip(&scaled) {
                *dst = a + pi * s;
            }
            entries[i * n + k] = -scaled[i];
            entries[k * n + i] = -scaled[i];
        }
        entries[k * n + k] = inv_beta;
        // pi * (pj / β) and pj * (pi / β) can differ in the last bit.
        for i in 0..k {
            for j in 0..i {
                entries[j * n + i] = entries[i * n + j];
            }
        }
        KernelInverse { order: n, entries }
    }

    /// Inverse of the similarity matrix grown by one point whose similarities
    /// to the current points are `v`. The new point takes the last index.
    /// Also returns the Schur complement `β`.
    pub fn expand(&self, v: &KernelVector) -> Result<(KernelInverse, f64)> {
        let step = self.schur_step(v)?;
        Ok((self.apply(&step), step.beta))
    }

    /// Inverse of the similarity matrix with point `index` removed. The
    /// remaining points keep their relative order.
    pub fn shrink(&self, index: usize) -> Result<KernelInverse> {
        let k = self.order;
        if k < 2 {
            return Err(FisvddError::CannotShrink);
        }
        if index >= k {
            return Err(FisvddError::IndexOutOfRange { index, order: k });
        }
        let lambda = self.get(index, index);
        if !(lambda.abs() >= LAMBDA_MIN) {
            return Err(FisvddError::IllConditionedShrink { lambda });
        }
        let n = k - 1;
        let u: Vec<f64> = (0..k)
            .filter(|&i| i != index)
            .map(|i| self.get(i, index))
            .collect();
        let scaled: Vec<f64> = u.iter().map(|x| x / lambda).collect();
        let mut entries = Vec::with_capacity(n * n);
        for (ui, i) in (0..k).filter(|&i| i != index).enumerate() {
            let row = self.row(i);
            let ci = u[ui];
            entries.extend(
                row.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != index)
                    .zip(&scaled)
                    .map(|((_, &a), &s)| a - ci * s),
            );
        }
        for i in 0..n {
            for j in 0..i {
                entries[j * n + i] = entries[i * n + j];
            }
        }
        Ok(KernelInverse { order: n, entries })
    }

    /// Row sums `A⁻¹e`, the unnormalized multipliers solving `Aα = e`.
    pub fn row_sums(&self) -> RowSums {
        RowSums((0..self.order).map(|i| self.row(i).iter().sum()).collect())
    }

    /// `max |A⁻¹A - I|` with `A` rebuilt from `points`.
    pub fn identity_residual<P: AsRef<[f64]>>(&self, points: &[P], sigma: Bandwidth) -> f64 {
        let n = self.order;
        assert_eq!(points.len(), n, "point count must match inverse order");
        let a = similarity_matrix(points, sigma);
        let mut worst = 0.0f64;
        for i in 0..n {
            let row = self.row(i);
            for j in 0..n {
                let x: f64 = (0..n).map(|l| row[l] * a[l * n + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((x - target).abs());
            }
        }
        worst
    }
}

/// The `O(k²)` part of an expansion, before the grown inverse is materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurStep {
    /// `A⁻¹v`
    pub p: Vec<f64>,
    /// `1 - vᵀA⁻¹v`
    pub beta: f64,
}

impl SchurStep {
    /// Row sums of the grown inverse, derived in `O(k)` from the current ones:
    /// entry `i < k` becomes `rᵢ + pᵢ(Σp - 1)/β` and the new entry is `(1 - Σp)/β`.
    pub fn row_sums_after(&self, current: &RowSums) -> RowSums {
        assert_eq!(current.len(), self.p.len());
        let excess = (self.p.iter().sum::<f64>() - 1.0) / self.beta;
        let mut values: Vec<f64> = current
            .iter()
            .zip(&self.p)
            .map(|(r, p)| r + p * excess)
            .collect();
        values.push(-excess);
        RowSums(values)
    }
}

/// Unnormalized multipliers `α₀ = A⁻¹e`. On a valid support-vector set every
/// entry is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSums(Vec<f64>);

impl RowSums {
    pub fn new(values: Vec<f64>) -> Self {
        RowSums(values)
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

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    pub fn all_positive(&self) -> bool {
        self.0.iter().all(|&x| x > 0.0)
    }

    /// Index of the smallest entry; the lowest index wins ties.
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &x) in self.0.iter().enumerate() {
            match best {
                Some((_, b)) if x >= b => {}
                _ => best = Some((i, x)),
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn last(&self) -> Option<f64> {
        self.0.last().copied()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for RowSums {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
