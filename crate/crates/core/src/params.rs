use crate::error::{FisvddError, Result};
use crate::kernel::Bandwidth;

pub const DEFAULT_MAX_SV: usize = 1024;
pub const DEFAULT_EPS_FAR: f64 = 1e-6;
pub const DEFAULT_EPS_NEAR: f64 = 1e-9;

/// Learner configuration.
///
/// `eps_far` (ε₁) flags a point as a far outlier when its largest similarity
/// to the support vectors is below it; `eps_near` (ε₂) flags a near duplicate
/// when the largest similarity exceeds `1 - ε₂`. Either may be set to zero to
/// disable the corresponding filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub sigma: Bandwidth,
    pub max_sv: usize,
    pub eps_far: f64,
    pub eps_near: f64,
    /// Recompute the inverse from scratch after this many incremental updates.
    pub refresh_every: Option<usize>,
}

impl HyperParams {
    pub fn new(sigma: Bandwidth) -> Self {
        HyperParams {
            sigma,
            max_sv: DEFAULT_MAX_SV,
            eps_far: DEFAULT_EPS_FAR,
            eps_near: DEFAULT_EPS_NEAR,
            refresh_every: None,
        }
    }

    pub fn with_max_sv(mut self, max_sv: usize) -> Self {
        self.max_sv = max_sv;
        self
    }

    pub fn with_eps_far(mut self, eps_far: f64) -> Self {
        self.eps_far = eps_far;
        self
    }

    pub fn with_eps_near(mut self, eps_near: f64) -> Self {
        self.eps_near = eps_near;
        self
    }

    pub fn with_refresh_every(mut self, every: Option<usize>) -> Self {
        self.refresh_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FisvddError::InvalidParameter(msg));
        if self.max_sv == 0 {
            return bad("max_sv must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.eps_far) {
            return bad(format!("eps_far must lie in [0, 1), got {}", self.eps_far));
        }
        if !(0.0..1.0).contains(&self.eps_near) {
            return bad(format!(
                "eps_near must lie in [0, 1), got {}",
                self.eps_near
            ));
        }
        if self.eps_far >= 1.0 - self.eps_near {
            return bad(format!(
                "eps_far ({}) must be below 1 - eps_near ({})",
                self.eps_far,
                1.0 - self.eps_near
            ));
        }
        if self.refresh_every == Some(0) {
            return bad("refresh_every must be at least 1".into());
        }
        Ok(())
    }
}
