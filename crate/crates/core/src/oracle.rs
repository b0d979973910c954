//! Exact reference solutions for small instances.
//!
//! The SVDD dual with `C = 1` minimizes `αᵀAα` over the probability simplex.
//! Its optimum is characterized by a support set `S` on which `A_S α₀ = e` has
//! a strictly positive solution and against which every other point scores
//! `Q ≤ 0`. [`batch_solve`] finds that set by trying every nonempty subset,
//! which is exact but exponential, so it refuses more than
//! [`MAX_ORACLE_POINTS`] points.
//!
//! [`projected_gradient`] solves the same problem by a completely different
//! route and is used to cross-check the enumeration.

use nalgebra::{DMatrix, DVector};

use crate::error::{FisvddError, Result};
use crate::kernel::{check_finite, similarity_matrix, Bandwidth};

pub const MAX_ORACLE_POINTS: usize = 20;

/// Score tolerance for points outside the support set.
pub const KKT_OUTSIDE_TOLERANCE: f64 = 1e-10;

/// Tolerance on `|Q|` for points inside the support set.
pub const KKT_SUPPORT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Indices into the input points, ascending.
    pub support_indices: Vec<usize>,
    /// Normalized multipliers, aligned with `support_indices`.
    pub alpha: Vec<f64>,
    /// Optimal objective `L*`.
    pub objective: f64,
}

fn validate_points<P: AsRef<[f64]>>(points: &[P]) -> Result<()> {
    let first = points.first().ok_or(FisvddError::EmptyInput("point set"))?;
    let d = first.as_ref().len();
    for p in points {
        let p = p.as_ref();
        if p.len() != d {
            return Err(FisvddError::DimensionMismatch {
                expected: d,
                actual: p.len(),
            });
        }
        check_finite(p)?;
    }
    Ok(())
}

/// Globally optimal SVDD dual solution by subset enumeration.
///
/// ```
/// use fisvdd::{oracle::batch_solve, Bandwidth};
///
/// let sigma = Bandwidth::new(1.0).unwrap();
/// let sol = batch_solve(&[[0.0, 0.0], [2.0, 0.0]], sigma).unwrap();
/// let s = (-2.0f64).exp();
/// assert_eq!(sol.support_indices, vec![0, 1]);
/// assert!((sol.objective - (1.0 + s) / 2.0).abs() < 1e-12);
/// ```
pub fn batch_solve<P: AsRef<[f64]>>(points: &[P], sigma: Bandwidth) -> Result<OracleSolution> {
    validate_points(points)?;
    let n = points.len();
    if n > MAX_ORACLE_POINTS {
        return Err(FisvddError::TooManyPoints {
            n,
            limit: MAX_ORACLE_POINTS,
        });
    }
    let k = similarity_matrix(points, sigma);
    let e_tol = 1e-9;

    let mut keepers: Vec<OracleSolution> = Vec::new();
    let mut members = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        members.clear();
        members.extend((0..n).filter(|i| mask & (1 << i) != 0));
        let m = members.len();
        let a = DMatrix::from_fn(m, m, |r, c| k[members[r] * n + members[c]]);
        let Some(chol) = a.cholesky() else { continue };
        let alpha_raw = chol.solve(&DVector::from_element(m, 1.0));
        if !alpha_raw.iter().all(|&x| x > 0.0 && x.is_finite()) {
            continue;
        }
        let norm: f64 = alpha_raw.iter().sum();
        let objective = 1.0 / norm;
        let alpha: Vec<f64> = alpha_raw.iter().map(|x| x / norm).collect();
        let violates = (0..n).filter(|j| mask & (1 << j) == 0).any(|j| {
            let s: f64 = members
                .iter()
                .zip(&alpha)
                .map(|(&i, a)| a * k[j * n + i])
                .sum();
            objective - s > KKT_OUTSIDE_TOLERANCE
        });
        if !violates {
            keepers.push(OracleSolution {
                support_indices: members.clone(),
                alpha,
                objective,
            });
        }
    }

    let best = keepers
        .iter()
        .min_by(|a, b| {
            a.objective
                .total_cmp(&b.objective)
                .then(a.support_indices.len().cmp(&b.support_indices.len()))
        })
        .cloned()
        .ok_or_else(|| {
            FisvddError::OracleFailure("no subset satisfies the KKT conditions".into())
        })?;
    // Strict convexity leaves a single optimum; distinct keepers may only
    // differ by points sitting on the boundary with vanishing multipliers.
    if let Some(other) = keepers
        .iter()
        .find(|s| (s.objective - best.objective).abs() > e_tol * best.objective)
    {
        return Err(FisvddError::OracleFailure(format!(
            "inconsistent KKT subsets {:?} (L = {}) and {:?} (L = {})",
            best.support_indices, best.objective, other.support_indices, other.objective
        )));
    }
    // Prefer the smallest support set among numerical ties.
    let best = keepers
        .into_iter()
        .filter(|s| (s.objective - best.objective).abs() <= 1e-12 * best.objective.max(1.0))
        .min_by(|a, b| {
            a.support_indices
                .len()
                .cmp(&b.support_indices.len())
                .then(a.objective.total_cmp(&b.objective))
        })
        .expect("best is among keepers");
    Ok(best)
}

/// Checks a candidate solution against the optimality conditions: support
/// points must score `|Q| ≤ 1e-8`, all others `Q ≤ 1e-10`. Multipliers must
/// be positive and sum to one.
pub fn kkt_verify<P: AsRef<[f64]>>(
    points: &[P],
    solution: &OracleSolution,
    sigma: Bandwidth,
) -> bool {
    let n = points.len();
    let sup = &solution.support_indices;
    if sup.is_empty()
        || sup.len() != solution.alpha.len()
        || sup.iter().any(|&i| i >= n)
        || solution.alpha.iter().any(|&a| !(a > 0.0))
        || (solution.alpha.iter().sum::<f64>() - 1.0).abs() > 1e-12
    {
        return false;
    }
    let k = similarity_matrix(points, sigma);
    let pull: Vec<f64> = (0..n)
        .map(|j| {
            sup.iter()
                .zip(&solution.alpha)
                .map(|(&i, a)| a * k[j * n + i])
                .sum()
        })
        .collect();
    let objective: f64 = sup
        .iter()
        .zip(&solution.alpha)
        .map(|(&i, a)| a * pull[i])
        .sum();
    (0..n).all(|j| {
        let q = objective - pull[j];
        if sup.contains(&j) {
            q.abs() <= KKT_SUPPORT_TOLERANCE
        } else {
            q <= KKT_OUTSIDE_TOLERANCE
        }
    })
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `αᵀAα` over the simplex by projected gradient descent with step
/// `1 / (2·ρ)`, where `ρ` bounds the spectral radius of `A` (largest row
/// sum). Stops when an iteration moves no entry by more than `tolerance`.
pub fn projected_gradient<P: AsRef<[f64]>>(
    points: &[P],
    sigma: Bandwidth,
    tolerance: f64,
    max_iterations: usize,
) -> Result<GradientSolution> {
    validate_points(points)?;
    let n = points.len();
    let a = similarity_matrix(points, sigma);
    let spectral_bound = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / (2.0 * spectral_bound);

    let mut alpha = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        for i in 0..n {
            let grad: f64 = 2.0
                * a[i * n..(i + 1) * n]
                    .iter()
                    .zip(&alpha)
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
            next[i] = alpha[i] - step * grad;
        }
        project_to_simplex(&mut next);
        let moved = alpha
            .iter()
            .zip(&next)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut alpha, &mut next);
        if moved < tolerance {
            converged = true;
            break;
        }
    }
    let objective = (0..n)
        .map(|i| {
            alpha[i]
                * a[i * n..(i + 1) * n]
                    .iter()
                    .zip(&alpha)
                    .map(|(x, y)| x * y)
                    .sum::<f64>()
        })
        .sum();
    Ok(GradientSolution {
        alpha,
        objective,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn sigma(s: f64) -> Bandwidth {
        Bandwidth::new(s).unwrap()
    }

    fn square() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [0.0, 2.0], [2.0, 0.0], [2.0, 2.0]]
    }

    #[test]
    fn square_is_all_support_with_uniform_alpha() {
        let sol = batch_solve(&square(), sigma(1.0)).unwrap();
        assert_eq!(sol.support_indices, vec![0, 1, 2, 3]);
        for a in &sol.alpha {
            assert!((a - 0.25).abs() < 1e-12);
        }
        // L = α·Aα with one row: 0.25 (1 + 2e⁻² + e⁻⁴)
        let s = (-2.0f64).exp();
        let expected = 0.25 * (1.0 + 2.0 * s + s * s);
        assert!((sol.objective - expected).abs() < 1e-12);

        let mut with_center = square();
        with_center.push([1.0, 1.0]);
        let sol = batch_solve(&with_center, sigma(1.0)).unwrap();
        assert_eq!(sol.support_indices, vec![0, 1, 2, 3]);
        assert!(kkt_verify(&with_center, &sol, sigma(1.0)));
    }

    #[test]
    fn single_point() {
        let sol = batch_solve(&[[3.0]], sigma(1.0)).unwrap();
        assert_eq!(sol.support_indices, vec![0]);
        assert_eq!(sol.alpha, vec![1.0]);
        assert_eq!(sol.objective, 1.0);
    }

    #[test]
    fn size_limits() {
        let many: Vec<[f64; 1]> = (0..21).map(|i| [i as f64]).collect();
        assert!(matches!(
            batch_solve(&many, sigma(1.0)),
            Err(FisvddError::TooManyPoints { n: 21, limit: 20 })
        ));
        let none: Vec<[f64; 1]> = vec![];
        assert!(batch_solve(&none, sigma(1.0)).is_err());
    }

    #[test]
    fn perturbed_solution_fails_verification() {
        let mut rng = StdRng::seed_from_u64(5);
        let pts: Vec<[f64; 2]> = (0..8).map(|_| [rng.random(), rng.random()]).collect();
        let sol = batch_solve(&pts, sigma(0.5)).unwrap();
        assert!(kkt_verify(&pts, &sol, sigma(0.5)));
        let mut bad = sol.clone();
        bad.alpha[0] += 0.1;
        let sum: f64 = bad.alpha.iter().sum();
        bad.alpha.iter_mut().for_each(|a| *a /= sum);
        assert!(!kkt_verify(&pts, &bad, sigma(0.5)));
        let mut out_of_range = sol;
        out_of_range.support_indices[0] = 99;
        assert!(!kkt_verify(&pts, &out_of_range, sigma(0.5)));
    }

    #[test]
    fn enumeration_agrees_with_projected_gradient() {
        let mut rng = StdRng::seed_from_u64(2024);
        for _ in 0..10 {
            let n = rng.random_range(3..=8);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            let s = sigma(rng.random_range(0.3..0.8));
            let exact = batch_solve(&pts, s).unwrap();
            let pg = projected_gradient(&pts, s, 1e-12, 1_000_000).unwrap();
            assert!(pg.converged, "projected gradient stalled");
            assert!(
                (pg.objective - exact.objective).abs() <= 1e-9,
                "{} vs {}",
                pg.objective,
                exact.objective
            );
            // Gradient iterates are feasible, so they cannot beat the optimum.
            assert!(pg.objective >= exact.objective - 1e-10);
        }
    }

    #[test]
    fn order_independent() {
        let mut rng = StdRng::seed_from_u64(99);
        let pts: Vec<[f64; 2]> = (0..9).map(|_| [rng.random(), rng.random()]).collect();
        let base = batch_solve(&pts, sigma(0.5)).unwrap();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.shuffle(&mut rng);
        let shuffled: Vec<[f64; 2]> = order.iter().map(|&i| pts[i]).collect();
        let other = batch_solve(&shuffled, sigma(0.5)).unwrap();
        let mut mapped: Vec<usize> = other.support_indices.iter().map(|&i| order[i]).collect();
        mapped.sort_unstable();
        assert_eq!(mapped, base.support_indices);
        assert!((other.objective - base.objective).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.5, 0.5];
        project_to_simplex(&mut v);
        assert_eq!(v, vec![0.5, 0.5]);
        let mut v = vec![2.0, 0.0, -1.0];
        project_to_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
        let mut v = vec![0.0, 0.0];
        project_to_simplex(&mut v);
        assert_eq!(v, vec![0.5, 0.5]);
    }
}
