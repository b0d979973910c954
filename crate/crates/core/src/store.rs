//! Plain-text model files.
//!
//! One `key: value` pair per line in a fixed order. Support vectors follow
//! the `support_vectors:` line, one row per line. Reals are written with 17
//! significant digits so they survive a round trip exactly.
//!
//! ```text
//! format_version: 1
//! sigma: 1.0000000000000000e0
//! eps_far: 9.9999999999999995e-7
//! eps_near: 1.0000000000000001e-9
//! max_sv: 1024
//! dimension: 2
//! k: 2
//! support_vectors:
//! 0.0000000000000000e0 0.0000000000000000e0
//! 2.0000000000000000e0 0.0000000000000000e0
//! alpha_raw: 8.8079707797788243e-1 8.8079707797788243e-1
//! threshold: 5.6766764161830641e-1
//! ```
//!
//! The inverse is not stored: loading rebuilds it from the support vectors,
//! checks `Aα₀ = e`, and recomputes the threshold.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{FisvddError, Result};
use crate::kernel::Bandwidth;
use crate::model::SvddModel;
use crate::params::HyperParams;

pub const FORMAT_VERSION: u32 = 1;

fn real(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("writing to a String cannot fail");
}

/// Serializes a model to its canonical text form.
pub fn to_text(model: &SvddModel) -> String {
    let p = model.params();
    let mut out = String::new();
    let mut line = |key: &str, value: &dyn Fn(&mut String)| {
        out.push_str(key);
        out.push_str(": ");
        value(&mut out);
        out.push('\n');
    };
    line("format_version", &|o| {
        o.push_str(&FORMAT_VERSION.to_string())
    });
    line("sigma", &|o| real(o, p.sigma.get()));
    line("eps_far", &|o| real(o, p.eps_far));
    line("eps_near", &|o| real(o, p.eps_near));
    line("max_sv", &|o| o.push_str(&p.max_sv.to_string()));
    line("dimension", &|o| o.push_str(&model.dimension().to_string()));
    line("k", &|o| o.push_str(&model.len().to_string()));
    out.push_str("support_vectors:\n");
    for sv in model.support_vectors() {
        for (i, &x) in sv.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            real(&mut out, x);
        }
        out.push('\n');
    }
    out.push_str("alpha_raw:");
    for &a in model.alpha_raw().iter() {
        out.push(' ');
        real(&mut out, a);
    }
    out.push('\n');
    out.push_str("threshold: ");
    real(&mut out, model.threshold());
    out.push('\n');
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> FisvddError {
        FisvddError::Parse {
            line: self.last,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l)
            }
            None => {
                self.last += 1;
                Err(self.error("unexpected end of file"))
            }
        }
    }

    /// Reads `key: value` and returns the trimmed value.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| self.error(format!("expected `{key}: ...`")))?;
        if k.trim() != key {
            return Err(self.error(format!("expected key `{key}`, found `{}`", k.trim())));
        }
        Ok(v.trim())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| self.error(format!("invalid value for `{key}`: `{value}`")))
    }

    fn reals(&self, key: &str, value: &str) -> Result<Vec<f64>> {
        value
            .split_whitespace()
            .map(|tok| {
                let x: f64 = self.parse(key, tok)?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(self.error(format!("non-finite value in `{key}`")))
                }
            })
            .collect()
    }
}

/// Parses a model from its text form, rebuilding and validating the inverse.
pub fn from_text(text: &str) -> Result<SvddModel> {
    let mut lines = Lines::new(text);
    let version: u32 = {
        let v = lines.field("format_version")?;
        lines.parse("format_version", v)?
    };
    if version != FORMAT_VERSION {
        return Err(FisvddError::UnsupportedVersion(version));
    }
    let sigma: f64 = {
        let v = lines.field("sigma")?;
        lines.parse("sigma", v)?
    };
    let sigma = Bandwidth::new(sigma).map_err(|e| lines.error(e.to_string()))?;
    let eps_far: f64 = {
        let v = lines.field("eps_far")?;
        lines.parse("eps_far", v)?
    };
    let eps_near: f64 = {
        let v = lines.field("eps_near")?;
        lines.parse("eps_near", v)?
    };
    let max_sv: usize = {
        let v = lines.field("max_sv")?;
        lines.parse("max_sv", v)?
    };
    let dimension: usize = {
        let v = lines.field("dimension")?;
        lines.parse("dimension", v)?
    };
    let k: usize = {
        let v = lines.field("k")?;
        lines.parse("k", v)?
    };
    if !lines.field("support_vectors")?.is_empty() {
        return Err(lines.error("`support_vectors:` must stand alone on its line"));
    }
    let mut support_vectors = Vec::with_capacity(k);
    for _ in 0..k {
        let row = lines.next_line()?;
        let values = lines.reals("support_vectors", row)?;
        if values.len() != dimension {
            return Err(lines.error(format!(
                "support vector has {} values, expected {dimension}",
                values.len()
            )));
        }
        support_vectors.push(values);
    }
    let alpha_raw = {
        let v = lines.field("alpha_raw")?;
        lines.reals("alpha_raw", v)?
    };
    if alpha_raw.len() != k {
        return Err(lines.error(format!(
            "alpha_raw has {} values, expected {k}",
            alpha_raw.len()
        )));
    }
    let stored_threshold: f64 = {
        let v = lines.field("threshold")?;
        lines.parse("threshold", v)?
    };
    for (i, rest) in lines.inner {
        if !rest.trim().is_empty() {
            return Err(FisvddError::Parse {
                line: i + 1,
                message: "trailing content".into(),
            });
        }
    }

    let params = HyperParams::new(sigma)
        .with_max_sv(max_sv)
        .with_eps_far(eps_far)
        .with_eps_near(eps_near);
    params
        .validate()
        .map_err(|e| FisvddError::CorruptModel(e.to_string()))?;
    let model = SvddModel::from_parts(params, dimension, support_vectors, alpha_raw)?;
    if !((model.threshold() - stored_threshold).abs() <= 1e-9) {
        return Err(FisvddError::CorruptModel(format!(
            "stored threshold {stored_threshold} disagrees with recomputed {}",
            model.threshold()
        )));
    }
    Ok(model)
}

pub fn save(model: &SvddModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(model)).map_err(|source| FisvddError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<SvddModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FisvddError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_text(&text)
}
