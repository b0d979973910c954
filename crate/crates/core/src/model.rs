//! The incremental SVDD learner.
//!
//! A model keeps only its support vectors, the inverse of their similarity
//! matrix `A`, and the row sums `α₀ = A⁻¹e`. With the Gaussian kernel every
//! support vector lies at the same feature-space distance from the center, so
//! a set of points is a valid support set exactly when `Aα₀ = e` has a
//! strictly positive solution. The normalized multipliers are
//! `α = α₀ / ‖α₀‖₁` and the dual objective `αᵀAα` collapses to
//! `1 / ‖α₀‖₁`, which doubles as the scoring threshold:
//!
//! ```text
//! Q(z) = L - Σᵢ αᵢ K(z, xᵢ)        inside  ⟺  Q(z) ≤ 0
//! ```
//!
//! Each incoming point that scores outside is appended (an `O(k²)` inverse
//! expansion). If that drives some multipliers nonpositive, the smallest one
//! is removed repeatedly until the rest are positive, and the removed points
//! are rescored once, first in first out, against the resulting boundary.

use std::collections::VecDeque;

use crate::error::{FisvddError, Result};
use crate::inverse::{KernelInverse, RowSums, SchurStep};
use crate::kernel::{check_finite, similarity_vector_unchecked, squared_distance, KernelVector};
use crate::params::HyperParams;

/// Points with `Q(z)` at or below this are treated as inside the boundary.
///
/// Support vectors score `Q = 0` analytically; this absorbs the rounding in
/// `L - Σ αᵢKᵢ` so that they are not reported as outside.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

/// Where a scored point falls relative to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Inside,
    Outside,
    /// Every similarity to the support vectors is below ε₁.
    FarOutlier,
    /// Some similarity exceeds `1 - ε₂`.
    NearDuplicate,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Inside => "inside",
            Label::Outside => "outside",
            Label::FarOutlier => "far_outlier",
            Label::NearDuplicate => "near_duplicate",
        }
    }

    /// Whether the label counts as an outlier prediction.
    pub fn is_outlier(self) -> bool {
        matches!(self, Label::Outside | Label::FarOutlier)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOutcome {
    pub q: f64,
    pub label: Label,
    pub max_similarity: f64,
}

/// What `process_point` did with a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    DiscardedInterior,
    DiscardedFarOutlier,
    DiscardedNearDuplicate,
    /// The model was full and the point would have been the weakest support vector.
    DiscardedAtCap,
    AbsorbedAsSv,
    AbsorbedWithShrink,
    ReplacedUnderCap,
    /// The update raised the objective and was undone.
    Reverted,
}

impl Action {
    pub const ALL: [Action; 8] = [
        Action::DiscardedInterior,
        Action::DiscardedFarOutlier,
        Action::DiscardedNearDuplicate,
        Action::DiscardedAtCap,
        Action::AbsorbedAsSv,
        Action::AbsorbedWithShrink,
        Action::ReplacedUnderCap,
        Action::Reverted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::DiscardedInterior => "discarded_interior",
            Action::DiscardedFarOutlier => "discarded_far_outlier",
            Action::DiscardedNearDuplicate => "discarded_near_duplicate",
            Action::DiscardedAtCap => "discarded_at_cap",
            Action::AbsorbedAsSv => "absorbed_as_sv",
            Action::AbsorbedWithShrink => "absorbed_with_shrink",
            Action::ReplacedUnderCap => "replaced_under_cap",
            Action::Reverted => "reverted",
        }
    }

    /// True when the model may have changed.
    pub fn modified_model(self) -> bool {
        matches!(
            self,
            Action::AbsorbedAsSv | Action::AbsorbedWithShrink | Action::ReplacedUnderCap
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub action: Action,
    pub sv_count: usize,
    pub objective: f64,
}

/// Result of a single expansion step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    /// The new point's multiplier came out nonpositive; nothing changed.
    Rejected,
    /// The point was appended. Other multipliers may now be nonpositive.
    Admitted,
}

/// Support vectors removed during shrinking, in removal order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackupSet {
    points: VecDeque<Vec<f64>>,
}

impl BackupSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, point: Vec<f64>) {
        self.points.push_back(point);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&[f64]> {
        self.points.get(i).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(Vec::as_slice)
    }

    pub fn clear(&mut self) {
        self.points.clear();
    }
}

/// Measured deviations from the model's invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    pub sv_count: usize,
    pub max_sv: usize,
    pub min_alpha_raw: f64,
    /// `|Σα - 1|`
    pub alpha_sum_error: f64,
    /// `|L - 1/‖α₀‖₁|`
    pub threshold_error: f64,
    /// `max |Aα₀ - e|` with `A` rebuilt from the support vectors.
    pub linear_residual: f64,
    /// `max |Q(x)|` over the support vectors.
    pub max_sv_score: f64,
    /// `max |A⁻¹A - I|`. Reported for diagnosis only: it grows with the
    /// condition number of `A` even when the multipliers are accurate.
    pub inverse_residual: f64,
}

impl InvariantReport {
    pub fn check(&self) -> Result<()> {
        let fail = |what: String| Err(FisvddError::InvariantViolation(what));
        if self.sv_count > self.max_sv {
            return fail(format!(
                "{} support vectors exceed cap {}",
                self.sv_count, self.max_sv
            ));
        }
        if !(self.min_alpha_raw > 0.0) {
            return fail(format!("nonpositive multiplier {}", self.min_alpha_raw));
        }
        if !(self.alpha_sum_error <= 1e-12) {
            return fail(format!("multipliers sum off by {:e}", self.alpha_sum_error));
        }
        if !(self.threshold_error <= 1e-12) {
            return fail(format!("threshold off by {:e}", self.threshold_error));
        }
        if !(self.linear_residual <= 1e-8) {
            return fail(format!("A·α₀ - e residual {:e}", self.linear_residual));
        }
        if !(self.max_sv_score <= 1e-8) {
            return fail(format!(
                "support vector scores up to {:e}",
                self.max_sv_score
            ));
        }
        Ok(())
    }
}

/// Incremental SVDD model: support vectors plus the inverse of their
/// similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvddModel {
    params: HyperParams,
    dimension: usize,
    support_vectors: Vec<Vec<f64>>,
    inverse: KernelInverse,
    alpha_raw: RowSums,
    alpha: Vec<f64>,
    threshold: f64,
    updates_since_refresh: usize,
}

impl SvddModel {
    /// Builds the first model from a burn-in batch.
    ///
    /// Near duplicates (similarity above `1 - ε₂`, or exact repeats) are
    /// dropped, the similarity matrix of the rest is inverted directly, and
    /// interior points are shrunk away.
    ///
    /// ```
    /// use fisvdd::{Bandwidth, HyperParams, SvddModel};
    ///
    /// let params = HyperParams::new(Bandwidth::new(1.0).unwrap());
    /// let square = [[0.0, 0.0], [0.0, 2.0], [2.0, 0.0], [2.0, 2.0]];
    /// let model = SvddModel::initialize(&square, params).unwrap();
    /// assert_eq!(model.len(), 4);
    /// for a in model.alpha() {
    ///     assert!((a - 0.25).abs() < 1e-12);
    /// }
    /// ```
    pub fn initialize<P: AsRef<[f64]>>(burn_in: &[P], params: HyperParams) -> Result<Self> {
        params.validate()?;
        let first = burn_in
            .first()
            .ok_or(FisvddError::EmptyInput("burn-in set"))?
            .as_ref();
        let dimension = first.len();
        if dimension == 0 {
            return Err(FisvddError::EmptyInput("feature vector"));
        }

        let mut kept: Vec<Vec<f64>> = Vec::new();
        for p in burn_in {
            let p = p.as_ref();
            check_point(dimension, p)?;
            let duplicate = kept.iter().any(|q| {
                let k = crate::kernel::similarity(p, q, params.sigma);
                k == 1.0 || k > 1.0 - params.eps_near
            });
            if !duplicate {
                kept.push(p.to_vec());
            }
        }

        let inverse = KernelInverse::from_points(&kept, params.sigma)?;
        let alpha_raw = inverse.row_sums();
        let mut model = SvddModel {
            params,
            dimension,
            support_vectors: kept,
            inverse,
            alpha_raw,
            alpha: Vec::new(),
            threshold: f64::NAN,
            updates_since_refresh: 0,
        };
        let mut discarded = BackupSet::new();
        model.shrink(&mut discarded)?;
        while model.len() > model.params.max_sv {
            let weakest = model.alpha_raw.argmin().expect("nonempty");
            model.remove_support_vector(weakest)?;
            model.shrink(&mut discarded)?;
        }
        if !discarded.is_empty() {
            // Downdating through many removed burn-in points loses accuracy
            // when they sat close together; start the stream from a clean inverse.
            model.refresh()?;
        }
        model.renormalize();
        Ok(model)
    }

    /// Rebuilds a model from stored support vectors and their unnormalized
    /// multipliers. The inverse is recomputed and checked against `α₀`.
    pub fn from_parts(
        params: HyperParams,
        dimension: usize,
        support_vectors: Vec<Vec<f64>>,
        alpha_raw: Vec<f64>,
    ) -> Result<Self> {
        params.validate()?;
        let corrupt = |m: String| Err(FisvddError::CorruptModel(m));
        if support_vectors.is_empty() {
            return corrupt("no support vectors".into());
        }
        if alpha_raw.len() != support_vectors.len() {
            return corrupt(format!(
                "{} multipliers for {} support vectors",
                alpha_raw.len(),
                support_vectors.len()
            ));
        }
        for sv in &support_vectors {
            check_point(dimension, sv).map_err(|e| FisvddError::CorruptModel(e.to_string()))?;
        }
        let alpha_raw = RowSums::new(alpha_raw);
        if !alpha_raw.all_positive() {
            return corrupt("nonpositive multiplier".into());
        }
        let inverse = KernelInverse::from_points(&support_vectors, params.sigma)
            .map_err(|e| FisvddError::CorruptModel(e.to_string()))?;
        let mut model = SvddModel {
            params,
            dimension,
            support_vectors,
            inverse,
            alpha_raw,
            alpha: Vec::new(),
            threshold: f64::NAN,
            updates_since_refresh: 0,
        };
        let residual = model.linear_residual();
        if !(residual < 1e-6) {
            return corrupt(format!("stored multipliers leave residual {residual:e}"));
        }
        model.renormalize();
        Ok(model)
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of support vectors.
    pub fn len(&self) -> usize {
        self.support_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support_vectors.is_empty()
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn inverse(&self) -> &KernelInverse {
        &self.inverse
    }

    pub fn alpha_raw(&self) -> &RowSums {
        &self.alpha_raw
    }

    /// Normalized multipliers. Only meaningful when every `α₀` entry is positive.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Scoring threshold `L`, equal to the objective value.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Dual objective `αᵀAα`, computed as `1 / ‖α₀‖₁`.
    pub fn objective_value(&self) -> f64 {
        1.0 / self.alpha_raw.l1_norm()
    }

    /// Scores `z` against the current boundary. Never mutates the model.
    ///
    /// The ε₁ far-outlier test takes precedence over the ε₂ near-duplicate
    /// test; only when neither fires does the sign of `Q(z)` decide.
    pub fn score(&self, z: &[f64]) -> Result<ScoreOutcome> {
        check_point(self.dimension, z)?;
        Ok(self.classify(&self.kernel_vector(z)))
    }

    /// Similarities between `z` and the support vectors. `z` is not validated.
    pub fn kernel_vector(&self, z: &[f64]) -> KernelVector {
        similarity_vector_unchecked(z, &self.support_vectors, self.params.sigma)
    }

    fn q_value(&self, v: &KernelVector) -> f64 {
        let dot: f64 = self.alpha.iter().zip(v.iter()).map(|(a, k)| a * k).sum();
        self.threshold - dot
    }

    fn classify(&self, v: &KernelVector) -> ScoreOutcome {
        let q = self.q_value(v);
        let max_similarity = v.max();
        let label = if max_similarity < self.params.eps_far {
            Label::FarOutlier
        } else if max_similarity > 1.0 - self.params.eps_near {
            Label::NearDuplicate
        } else if q <= BOUNDARY_TOLERANCE {
            Label::Inside
        } else {
            Label::Outside
        };
        ScoreOutcome {
            q,
            label,
            max_similarity,
        }
    }

    /// Appends `z` to the support set.
    ///
    /// `v` must be the similarity vector of `z` against the current support
    /// vectors. If the new point's multiplier comes out nonpositive it is an
    /// interior point and the model is left untouched. When `Admitted` is
    /// returned other multipliers may be nonpositive; follow with
    /// [`shrink`](Self::shrink) before scoring again.
    pub fn expand(&mut self, z: &[f64], v: &KernelVector) -> Result<Expansion> {
        check_point(self.dimension, z)?;
        let step = self.inverse.schur_step(v)?;
        let preview = step.row_sums_after(&self.alpha_raw);
        if !(preview.last().expect("nonempty") > 0.0) {
            return Ok(Expansion::Rejected);
        }
        self.commit_expansion(z, &step);
        Ok(Expansion::Admitted)
    }

    fn commit_expansion(&mut self, z: &[f64], step: &SchurStep) {
        self.inverse = self.inverse.apply(step);
        self.alpha_raw = self.inverse.row_sums();
        self.support_vectors.push(z.to_vec());
        self.updates_since_refresh += 1;
        if self.alpha_raw.all_positive() {
            self.renormalize();
        }
    }

    /// Removes the support vector with the smallest multiplier (lowest index
    /// on ties) until every multiplier is positive, pushing each removed point
    /// onto `backup`. Does nothing if the multipliers are already positive.
    pub fn shrink(&mut self, backup: &mut BackupSet) -> Result<()> {
        while !self.alpha_raw.all_positive() {
            if self.len() < 2 {
                return Err(FisvddError::InvariantViolation(
                    "single support vector with nonpositive multiplier".into(),
                ));
            }
            let p = self.alpha_raw.argmin().expect("nonempty");
            let removed = self.remove_support_vector(p)?;
            backup.push(removed);
        }
        self.renormalize();
        Ok(())
    }

    fn remove_support_vector(&mut self, index: usize) -> Result<Vec<f64>> {
        let inverse = self.inverse.shrink(index).map_err(|e| match e {
            FisvddError::IllConditionedShrink { lambda } => FisvddError::InvariantViolation(
                format!("inverse corner entry {lambda:e} while removing support vector {index}"),
            ),
            other => other,
        })?;
        self.alpha_raw = inverse.row_sums();
        self.inverse = inverse;
        self.updates_since_refresh += 1;
        if self.alpha_raw.all_positive() {
            self.renormalize();
        }
        Ok(self.support_vectors.remove(index))
    }

    fn renormalize(&mut self) {
        let norm = self.alpha_raw.l1_norm();
        self.alpha = self.alpha_raw.iter().map(|a| a / norm).collect();
        self.threshold = 1.0 / norm;
    }

    /// Feeds one stream point through the learner.
    ///
    /// On error the model is left exactly as it was before the call.
    pub fn process_point(&mut self, z: &[f64]) -> Result<UpdateOutcome> {
        check_point(self.dimension, z)?;
        let v = self.kernel_vector(z);
        let action = match self.classify(&v).label {
            Label::Inside => Action::DiscardedInterior,
            Label::FarOutlier => Action::DiscardedFarOutlier,
            Label::NearDuplicate => Action::DiscardedNearDuplicate,
            Label::Outside => self.absorb(z, &v)?,
        };
        Ok(UpdateOutcome {
            action,
            sv_count: self.len(),
            objective: self.threshold,
        })
    }

    /// Handles a point that scored outside. The grown multipliers are
    /// previewed first, so interior points and cap discards never touch the
    /// inverse.
    fn absorb(&mut self, z: &[f64], v: &KernelVector) -> Result<Action> {
        let step = match self.inverse.schur_step(v) {
            Ok(step) => step,
            Err(FisvddError::IllConditionedExpansion { .. }) => {
                return Ok(Action::DiscardedNearDuplicate)
            }
            Err(e) => return Err(e),
        };
        let preview = step.row_sums_after(&self.alpha_raw);
        let newest = preview.len() - 1;
        if !(preview[newest] > 0.0) {
            return Ok(Action::DiscardedInterior);
        }
        let at_cap = self.len() >= self.params.max_sv;
        if at_cap && preview.all_positive() && preview.argmin() == Some(newest) {
            return Ok(Action::DiscardedAtCap);
        }

        let snapshot = self.clone();
        match self.absorb_committed(z, &step, at_cap, &snapshot) {
            Ok(action) => Ok(action),
            Err(e) => {
                *self = snapshot;
                Err(e)
            }
        }
    }

    fn absorb_committed(
        &mut self,
        z: &[f64],
        step: &SchurStep,
        at_cap: bool,
        snapshot: &SvddModel,
    ) -> Result<Action> {
        self.commit_expansion(z, step);
        let mut backup = BackupSet::new();
        let action = if at_cap && self.alpha_raw.all_positive() {
            let weakest = self.alpha_raw.argmin().expect("nonempty");
            if weakest == self.len() - 1 {
                *self = snapshot.clone();
                return Ok(Action::DiscardedAtCap);
            }
            self.remove_support_vector(weakest)?;
            if !(self.alpha_raw.last().expect("nonempty") > 0.0) {
                *self = snapshot.clone();
                return Ok(Action::DiscardedAtCap);
            }
            if !self.alpha_raw.all_positive() {
                self.shrink(&mut backup)?;
                self.rescan(&mut backup)?;
            }
            Action::ReplacedUnderCap
        } else if !self.alpha_raw.all_positive() {
            self.shrink(&mut backup)?;
            self.rescan(&mut backup)?;
            Action::AbsorbedWithShrink
        } else {
            Action::AbsorbedAsSv
        };
        self.renormalize();

        // A replacement under the cap may legitimately raise the objective.
        if action != Action::ReplacedUnderCap
            && self.alpha_raw.l1_norm() < snapshot.alpha_raw.l1_norm()
        {
            *self = snapshot.clone();
            return Ok(Action::Reverted);
        }
        self.maybe_refresh()?;
        Ok(action)
    }

    /// One FIFO pass over the points removed while shrinking. Any that now
    /// score outside are expanded back in. A point is readmitted at most once
    /// per pass, and readmission never grows the model past its cap.
    fn rescan(&mut self, backup: &mut BackupSet) -> Result<()> {
        if backup.len() <= 1 {
            return Ok(());
        }
        let mut readmitted: Vec<Vec<f64>> = Vec::new();
        let mut cursor = 0;
        while let Some(p) = backup.get(cursor).map(<[f64]>::to_vec) {
            cursor += 1;
            if self.len() >= self.params.max_sv || readmitted.contains(&p) {
                continue;
            }
            let v = self.kernel_vector(&p);
            if self.q_value(&v) <= BOUNDARY_TOLERANCE {
                continue;
            }
            match self.expand(&p, &v) {
                Ok(Expansion::Admitted) => {
                    readmitted.push(p);
                    self.shrink(backup)?;
                }
                Ok(Expansion::Rejected) | Err(FisvddError::IllConditionedExpansion { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn maybe_refresh(&mut self) -> Result<()> {
        match self.params.refresh_every {
            Some(every) if self.updates_since_refresh >= every => self.refresh(),
            _ => Ok(()),
        }
    }

    /// Recomputes the inverse and multipliers directly from the support
    /// vectors, discarding accumulated rounding drift.
    pub fn refresh(&mut self) -> Result<()> {
        self.inverse = KernelInverse::from_points(&self.support_vectors, self.params.sigma)?;
        self.alpha_raw = self.inverse.row_sums();
        self.shrink(&mut BackupSet::new())?;
        self.updates_since_refresh = 0;
        Ok(())
    }

    fn linear_residual(&self) -> f64 {
        let sigma = self.params.sigma;
        self.support_vectors
            .iter()
            .map(|x| {
                let row: f64 = self
                    .support_vectors
                    .iter()
                    .zip(self.alpha_raw.iter())
                    .map(|(y, a)| a * (-squared_distance(x, y) * sigma.gamma()).exp())
                    .sum();
                (row - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Recomputes every model invariant from the stored support vectors.
    /// This is `O(k³)`; meant for tests and diagnostics.
    pub fn invariant_report(&self) -> InvariantReport {
        let min_alpha_raw = self.alpha_raw.iter().copied().fold(f64::INFINITY, f64::min);
        let alpha_sum: f64 = self.alpha.iter().sum();
        let max_sv_score = self
            .support_vectors
            .iter()
            .map(|x| self.q_value(&self.kernel_vector(x)).abs())
            .fold(0.0, f64::max);
        InvariantReport {
            sv_count: self.len(),
            max_sv: self.params.max_sv,
            min_alpha_raw,
            alpha_sum_error: (alpha_sum - 1.0).abs(),
            threshold_error: (self.threshold - 1.0 / self.alpha_raw.l1_norm()).abs(),
            linear_residual: self.linear_residual(),
            max_sv_score,
            inverse_residual: self
                .inverse
                .identity_residual(&self.support_vectors, self.params.sigma),
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        self.invariant_report().check()
    }
}

fn check_point(dimension: usize, z: &[f64]) -> Result<()> {
    if z.len() != dimension {
        return Err(FisvddError::DimensionMismatch {
            expected: dimension,
            actual: z.len(),
        });
    }
    check_finite(z)
}

#[cfg(test)]
mod tests;
