use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use fisvdd::{store, Action, Bandwidth, Confusion, EvalReport, HyperParams, SvddModel};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::CliError;
use crate::table;

#[derive(Debug, Clone, Copy)]
pub struct TrainSettings {
    pub sigma: f64,
    pub burn_in: usize,
    pub max_sv: usize,
    pub eps_far: f64,
    pub eps_near: f64,
    pub refresh_every: Option<usize>,
}

impl TrainSettings {
    fn params(&self) -> Result<HyperParams, CliError> {
        if self.burn_in == 0 {
            return Err(CliError::Input("--burn-in must be at least 1".into()));
        }
        let sigma = Bandwidth::new(self.sigma).map_err(|e| CliError::Input(e.to_string()))?;
        let params = HyperParams::new(sigma)
            .with_max_sv(self.max_sv)
            .with_eps_far(self.eps_far)
            .with_eps_near(self.eps_near)
            .with_refresh_every(self.refresh_every);
        params
            .validate()
            .map_err(|e| CliError::Input(e.to_string()))?;
        Ok(params)
    }
}

struct Trained {
    model: SvddModel,
    actions: BTreeMap<Action, usize>,
    rows: usize,
    seconds: f64,
}

fn fit(input: &Path, settings: &TrainSettings) -> Result<Trained, CliError> {
    let params = settings.params()?;
    let rows = table::read(input)?.rows;
    let burn_in = settings.burn_in.min(rows.len());
    if burn_in < settings.burn_in {
        eprintln!(
            "warning: only {} rows available, using all of them as burn-in",
            rows.len()
        );
    }

    let start = Instant::now();
    let mut model = SvddModel::initialize(&rows[..burn_in], params)?;
    let mut actions = BTreeMap::new();
    for row in &rows[burn_in..] {
        let outcome = model.process_point(row)?;
        *actions.entry(outcome.action).or_insert(0) += 1;
    }
    let seconds = start.elapsed().as_secs_f64();
    model.check_invariants()?;
    Ok(Trained {
        model,
        actions,
        rows: rows.len(),
        seconds,
    })
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("cannot write {}: {e}", path.display()))
}

fn stdout_error(e: std::io::Error) -> CliError {
    CliError::Input(format!("cannot write to standard output: {e}"))
}

fn load(path: &Path) -> Result<SvddModel, CliError> {
    Ok(store::load(path)?)
}

pub fn train(
    input: &Path,
    settings: &TrainSettings,
    out: &Path,
    stdout: &mut impl Write,
) -> Result<(), CliError> {
    let trained = fit(input, settings)?;
    store::save(&trained.model, out)?;
    let model = &trained.model;
    let mut lines = vec![
        format!("rows={}", trained.rows),
        format!("objective={}", model.objective_value()),
        format!("sv_count={}", model.len()),
    ];
    for action in Action::ALL {
        let n = trained.actions.get(&action).copied().unwrap_or(0);
        lines.push(format!("{}={n}", action.as_str()));
    }
    lines.push(format!("train_seconds={}", trained.seconds));
    for line in lines {
        writeln!(stdout, "{line}").map_err(stdout_error)?;
    }
    Ok(())
}

pub fn score(
    model: &Path,
    input: &Path,
    out: Option<&Path>,
    labeled: bool,
    stdout: &mut impl Write,
) -> Result<(), CliError> {
    let model = load(model)?;
    let mut rows = table::read(input)?.rows;
    if labeled {
        if rows[0].len() < 2 {
            return Err(CliError::Input(
                "--labeled needs a label column after the features".into(),
            ));
        }
        rows.iter_mut().for_each(|r| {
            r.pop();
        });
    }
    if rows[0].len() != model.dimension() {
        return Err(CliError::Input(format!(
            "model expects {} features, input has {}",
            model.dimension(),
            rows[0].len()
        )));
    }

    let mut text = String::from("q,label\n");
    let mut outside = 0;
    for row in &rows {
        let s = model.score(row)?;
        if s.label.is_outlier() {
            outside += 1;
        }
        text.push_str(&format!("{},{}\n", s.q, s.label.as_str()));
    }
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| io_error(path, e))?;
            writeln!(stdout, "rows={}\nflagged={outside}", rows.len()).map_err(stdout_error)
        }
        None => stdout.write_all(text.as_bytes()).map_err(stdout_error),
    }
}

pub enum ModelSource {
    File(PathBuf),
    Train(PathBuf, TrainSettings),
}

pub fn eval(source: &ModelSource, labeled: &Path, stdout: &mut impl Write) -> Result<(), CliError> {
    let (model, train_seconds) = match source {
        ModelSource::File(path) => (load(path)?, None),
        ModelSource::Train(path, settings) => {
            let trained = fit(path, settings)?;
            (trained.model, Some(trained.seconds))
        }
    };
    let data = table::read(labeled)?.into_labeled()?;
    if data[0].0.len() != model.dimension() {
        return Err(CliError::Input(format!(
            "model expects {} features, labeled input has {} (plus the label column)",
            model.dimension(),
            data[0].0.len()
        )));
    }
    let mut confusion = Confusion::default();
    for (x, is_outlier) in &data {
        confusion.record(model.score(x)?.label, *is_outlier);
    }
    let report = EvalReport::new(
        confusion,
        model.objective_value(),
        model.len(),
        train_seconds,
    );
    for line in report.to_lines() {
        writeln!(stdout, "{line}").map_err(stdout_error)?;
    }
    Ok(())
}

pub fn inspect(path: &Path, stdout: &mut impl Write) -> Result<(), CliError> {
    let model = load(path)?;
    let p = model.params();
    let r = model.invariant_report();
    let alpha = model.alpha();
    let lines = [
        format!("format_version={}", store::FORMAT_VERSION),
        format!("dimension={}", model.dimension()),
        format!("sv_count={}", model.len()),
        format!("sigma={}", p.sigma.get()),
        format!("max_sv={}", p.max_sv),
        format!("eps_far={:e}", p.eps_far),
        format!("eps_near={:e}", p.eps_near),
        format!("objective={}", model.objective_value()),
        format!(
            "alpha_min={}",
            alpha.iter().copied().fold(f64::INFINITY, f64::min)
        ),
        format!("alpha_max={}", alpha.iter().copied().fold(0.0, f64::max)),
        format!("linear_residual={:e}", r.linear_residual),
        format!("inverse_residual={:e}", r.inverse_residual),
        format!("max_sv_score={:e}", r.max_sv_score),
        format!(
            "invariants={}",
            if r.check().is_ok() { "ok" } else { "violated" }
        ),
    ];
    for line in lines {
        writeln!(stdout, "{line}").map_err(stdout_error)?;
    }
    Ok(())
}

pub struct SynthSpec {
    pub seed: u64,
    pub normals: usize,
    pub outliers: usize,
    pub radius: f64,
}

pub fn synth(
    spec: &SynthSpec,
    train_out: &Path,
    test_out: &Path,
    stdout: &mut impl Write,
) -> Result<(), CliError> {
    if spec.normals < 5 {
        return Err(CliError::Input("--normals must be at least 5".into()));
    }
    if !(spec.radius.is_finite() && spec.radius > 0.0) {
        return Err(CliError::Input("--radius must be positive".into()));
    }
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let normals: Vec<[f64; 2]> = (0..spec.normals)
        .map(|_| {
            [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ]
        })
        .collect();
    let outliers: Vec<[f64; 2]> = (0..spec.outliers)
        .map(|_| {
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            [spec.radius * t.cos(), spec.radius * t.sin()]
        })
        .collect();
    let n_train = spec.normals * 4 / 5;

    let write = |path: &Path, header: &str, rows: &mut dyn Iterator<Item = String>| {
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{header}").map_err(|e| io_error(path, e))?;
        for row in rows {
            writeln!(w, "{row}").map_err(|e| io_error(path, e))?;
        }
        w.flush().map_err(|e| io_error(path, e))
    };
    write(
        train_out,
        "x1,x2",
        &mut normals[..n_train]
            .iter()
            .map(|p| format!("{},{}", p[0], p[1])),
    )?;
    write(
        test_out,
        "x1,x2,label",
        &mut normals[n_train..]
            .iter()
            .map(|p| format!("{},{},0", p[0], p[1]))
            .chain(outliers.iter().map(|p| format!("{},{},1", p[0], p[1]))),
    )?;
    writeln!(
        stdout,
        "train_rows={n_train}\ntest_rows={}",
        spec.normals - n_train + spec.outliers
    )
    .map_err(stdout_error)
}
