//! Confusion counts and F1 for outlier detection, with outliers as the
//! positive class.

use crate::model::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl Confusion {
    /// Records one labeled prediction. `Outside` and `FarOutlier` predict an
    /// outlier; `Inside` and `NearDuplicate` predict normal.
    pub fn record(&mut self, predicted: Label, is_outlier: bool) {
        match (predicted.is_outlier(), is_outlier) {
            (true, true) => self.true_pos += 1,
            (true, false) => self.false_pos += 1,
            (false, false) => self.true_neg += 1,
            (false, true) => self.false_neg += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    /// `tp / (tp + fp)`, or 0 when nothing was flagged.
    pub fn precision(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_pos)
    }

    /// `tp / (tp + fn)`, or 0 when there are no outliers.
    pub fn recall(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_neg)
    }

    /// Harmonic mean of precision and recall, or 0 when both vanish.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub objective: f64,
    pub sv_count: usize,
    /// Wall time spent training, when the model was trained in the same run.
    pub train_seconds: Option<f64>,
}

impl EvalReport {
    pub fn new(
        confusion: Confusion,
        objective: f64,
        sv_count: usize,
        train_seconds: Option<f64>,
    ) -> Self {
        EvalReport {
            confusion,
            precision: confusion.precision(),
            recall: confusion.recall(),
            f1: confusion.f1(),
            objective,
            sv_count,
            train_seconds,
        }
    }

    /// `key=value` lines in a fixed order.
    pub fn to_lines(&self) -> Vec<String> {
        let c = &self.confusion;
        let mut lines = vec![
            format!("true_pos={}", c.true_pos),
            format!("false_pos={}", c.false_pos),
            format!("true_neg={}", c.true_neg),
            format!("false_neg={}", c.false_neg),
            format!("precision={}", self.precision),
            format!("recall={}", self.recall),
            format!("f1={}", self.f1),
            format!("objective={}", self.objective),
            format!("sv_count={}", self.sv_count),
        ];
        if let Some(t) = self.train_seconds {
            lines.push(format!("train_seconds={t}"));
        }
        lines
    }
}
