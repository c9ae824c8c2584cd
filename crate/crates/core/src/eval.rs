//! 1-NN evaluation, cross-validation and the repeated-split benchmark.
//!
//! Seeds: split `s` of a benchmark with master seed `S` draws its train/test
//! split from `derive_seed(S, 2s)` and its cross-validation folds from
//! `derive_seed(S, 2s + 1)`.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{fit_lda, fit_pca, PcaSpec};
use crate::dataset::{stratified_folds, train_test_split, LabeledDataset};
use crate::error::{Error, Result};
use crate::model_io::SavedModel;
use crate::mpda::{
    fit_mpda, fit_pmpda, patch_charts, pmpda_charts, prepare, MpdaParams, NeighborScope, PmpdaParams,
};
use crate::partition::PartitionParams;
use crate::rng::derive_seed;
use crate::scalar::Real;
use crate::Algorithm;

/// Label of the nearest training row for every test row; ties go to the
/// lowest training index.
pub fn nn_classify<T: Real>(train_emb: &DMatrix<T>, train_labels: &[usize], test_emb: &DMatrix<T>) -> Result<Vec<usize>> {
    if train_emb.nrows() == 0 {
        return Err(Error::EmptyTrainSet);
    }
    if train_labels.len() != train_emb.nrows() {
        return Err(Error::LengthMismatch(train_labels.len(), train_emb.nrows()));
    }
    if train_emb.ncols() != test_emb.ncols() {
        return Err(Error::DimensionMismatch {
            expected: train_emb.ncols(),
            got: test_emb.ncols(),
        });
    }
    let m = train_emb.ncols();
    Ok((0..test_emb.nrows())
        .map(|q| {
            let mut best = (0, T::max_value().expect("real has a maximum"));
            for i in 0..train_emb.nrows() {
                let mut d = T::zero();
                for c in 0..m {
                    let diff = test_emb[(q, c)] - train_emb[(i, c)];
                    d += diff * diff;
                }
                if d < best.1 {
                    best = (i, d);
                }
            }
            train_labels[best.0]
        })
        .collect())
}

pub fn error_rate(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let wrong = pred.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / pred.len() as f64)
}

/// 1-NN test error using only the first `m` columns, for every `m` in `ms`.
/// Distances are accumulated column by column, which gives exactly the same
/// numbers as [`nn_classify`] on the truncated embeddings.
pub fn prefix_errors<T: Real>(
    train_emb: &DMatrix<T>,
    train_labels: &[usize],
    test_emb: &DMatrix<T>,
    test_labels: &[usize],
    ms: &[usize],
) -> Result<Vec<f64>> {
    if train_emb.nrows() == 0 {
        return Err(Error::EmptyTrainSet);
    }
    let top = ms.iter().copied().max().unwrap_or(0);
    let cols = train_emb.ncols().min(test_emb.ncols());
    let (n, q) = (train_emb.nrows(), test_emb.nrows());
    let mut dist = vec![T::zero(); n * q];
    let mut err_at = vec![0.0; top + 1];
    for (m, slot) in err_at.iter_mut().enumerate().skip(1) {
        let c = m - 1;
        if c < cols {
            for t in 0..q {
                let row = &mut dist[t * n..(t + 1) * n];
                let x = test_emb[(t, c)];
                for (i, d) in row.iter_mut().enumerate() {
                    let diff = x - train_emb[(i, c)];
                    *d += diff * diff;
                }
            }
        }
        let mut wrong = 0;
        for t in 0..q {
            let row = &dist[t * n..(t + 1) * n];
            let mut best = 0;
            for i in 1..n {
                if row[i] < row[best] {
                    best = i;
                }
            }
            if train_labels[best] != test_labels[t] {
                wrong += 1;
            }
        }
        *slot = if q == 0 { 0.0 } else { wrong as f64 / q as f64 };
    }
    Ok(ms.iter().map(|&m| err_at[m]).collect())
}

/// Hyperparameter grids searched by cross-validation, plus the settings that
/// stay fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub k: Vec<usize>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Empty: the algorithm's default range.
    pub m: Vec<usize>,
    pub partition: PartitionParams,
    pub energy: f64,
    pub scope: NeighborScope,
    pub max_total: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            k: vec![3, 5, 7, 10],
            gamma: vec![1e-2, 1e-1, 1.0, 1e1, 1e2],
            alpha: vec![1e-4, 1e-3, 1e-2],
            m: Vec::new(),
            partition: PartitionParams::default(),
            energy: 0.95,
            scope: NeighborScope::default(),
            max_total: PmpdaParams::default().max_total,
        }
    }
}

/// Largest default embedding dimensionality considered.
pub const DEFAULT_MAX_M: usize = 60;

impl SearchSpace {
    /// Single-point grids at the library defaults.
    pub fn fixed() -> Self {
        let p = MpdaParams::default();
        Self {
            k: vec![p.k],
            gamma: vec![p.gamma],
            alpha: vec![p.alpha],
            ..Self::default()
        }
    }

    /// Dimensionalities to try for `algo` on `d` features and `c` classes.
    pub fn dims(&self, algo: Algorithm, d: usize, c: usize) -> Result<Vec<usize>> {
        if algo == Algorithm::Baseline {
            return Ok(vec![d]);
        }
        let ms: Vec<usize> = if self.m.is_empty() {
            match algo {
                Algorithm::Lda => vec![c.saturating_sub(1).clamp(1, d)],
                _ => (1..=d.min(DEFAULT_MAX_M)).collect(),
            }
        } else {
            self.m.iter().copied().filter(|&m| m >= 1 && m <= d).collect()
        };
        if ms.is_empty() {
            return Err(Error::InvalidParameter(format!("no dimensionality in the grid fits d = {d}")));
        }
        Ok(ms)
    }

    fn points(&self, algo: Algorithm) -> Vec<(Option<usize>, Option<f64>, Option<f64>)> {
        match algo {
            Algorithm::Mpda | Algorithm::Pmpda => {
                let mut out = Vec::new();
                for &k in &self.k {
                    for &g in &self.gamma {
                        for &a in &self.alpha {
                            out.push((Some(k), Some(g), Some(a)));
                        }
                    }
                }
                out
            }
            _ => vec![(None, None, None)],
        }
    }

    /// All candidates in grid order: k, then γ, then α, then m.
    pub fn candidates(&self, algo: Algorithm, ms: &[usize]) -> Vec<Candidate> {
        self.points(algo)
            .into_iter()
            .flat_map(|(k, gamma, alpha)| ms.iter().map(move |&m| Candidate { k, gamma, alpha, m }))
            .collect()
    }

    fn mpda_params(&self, c: &Candidate) -> MpdaParams {
        MpdaParams {
            k: c.k.unwrap_or(5),
            partition: self.partition,
            gamma: c.gamma.unwrap_or(1.0),
            alpha: c.alpha.unwrap_or(1e-3),
            energy: self.energy,
            m: c.m,
            scope: self.scope,
        }
    }

    fn pmpda_params(&self, c: &Candidate) -> PmpdaParams {
        PmpdaParams {
            k: c.k.unwrap_or(5),
            gamma: c.gamma.unwrap_or(1.0),
            alpha: c.alpha.unwrap_or(1e-3),
            energy: self.energy,
            m: c.m,
            scope: self.scope,
            max_total: self.max_total,
        }
    }
}

/// One point of the joint grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub k: Option<usize>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub m: usize,
}

impl Candidate {
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::from([("m".to_string(), self.m as f64)]);
        if let Some(k) = self.k {
            out.insert("k".into(), k as f64);
        }
        if let Some(g) = self.gamma {
            out.insert("gamma".into(), g);
        }
        if let Some(a) = self.alpha {
            out.insert("alpha".into(), a);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvRow {
    #[serde(flatten)]
    pub candidate: Candidate,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub best: Candidate,
    pub table: Vec<CvRow>,
}

/// Validation errors of every candidate (grid order) for one train/validation pair.
fn fold_errors<T: Real>(
    algo: Algorithm,
    train: &LabeledDataset<T>,
    val: &LabeledDataset<T>,
    space: &SearchSpace,
    ms: &[usize],
) -> Result<Vec<f64>> {
    let top = ms.iter().copied().max().unwrap_or(1);
    let score = |proj: &DMatrix<T>, mean: Option<&nalgebra::DVector<T>>| -> Result<Vec<f64>> {
        let center = |x: &DMatrix<T>| match mean {
            Some(mu) => {
                let mut c = x.clone();
                let mt = mu.transpose();
                for mut row in c.row_iter_mut() {
                    row -= &mt;
                }
                c
            }
            None => x.clone(),
        };
        let a = center(train.features()) * proj;
        let b = center(val.features()) * proj;
        prefix_errors(&a, train.labels(), &b, val.labels(), ms)
    };
    match algo {
        Algorithm::Baseline => {
            let pred = nn_classify(train.features(), train.labels(), val.features())?;
            Ok(vec![error_rate(&pred, val.labels())?; ms.len()])
        }
        Algorithm::Pca => {
            let model = fit_pca(train.features(), PcaSpec::Components(top))?;
            score(&model.projection, model.mean.as_ref())
        }
        Algorithm::Lda => {
            let model = fit_lda(train, top)?;
            score(&model.projection, None)
        }
        Algorithm::Mpda | Algorithm::Pmpda => {
            let d = train.dim();
            let mut out = Vec::new();
            let shared = if algo == Algorithm::Mpda {
                Some(patch_charts(train, &space.partition, space.energy)?)
            } else {
                None
            };
            for &k in &space.k {
                let charts = match &shared {
                    Some(c) => c.clone(),
                    None => pmpda_charts(
                        train,
                        &space.pmpda_params(&Candidate {
                            k: Some(k),
                            gamma: None,
                            alpha: None,
                            m: top,
                        }),
                    )?,
                };
                let problem = prepare(train, charts, k, space.scope)?;
                for &g in &space.gamma {
                    for &a in &space.alpha {
                        let sol = problem.solve(g, a, top)?;
                        let proj = sol.vectors.rows(0, d).into_owned();
                        out.extend(score(&proj, None)?);
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Stratified k-fold selection over the joint grid of hyperparameters and
/// dimensionality. The highest mean validation accuracy wins; ties go to the
/// first candidate in grid order.
pub fn cross_validate<T: Real>(
    train: &LabeledDataset<T>,
    algo: Algorithm,
    space: &SearchSpace,
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    let ms = space.dims(algo, train.dim(), train.n_classes())?;
    let candidates = space.candidates(algo, &ms);
    let fold_of = stratified_folds(train.labels(), train.n_classes(), folds, seed)?;
    let mut acc = vec![0.0; candidates.len()];
    for f in 0..folds {
        let tr: Vec<usize> = (0..train.n()).filter(|&i| fold_of[i] != f).collect();
        let va: Vec<usize> = (0..train.n()).filter(|&i| fold_of[i] == f).collect();
        let errs = fold_errors(algo, &train.subset(&tr), &train.subset(&va), space, &ms)?;
        for (a, e) in acc.iter_mut().zip(errs) {
            *a += 1.0 - e;
        }
    }
    for a in acc.iter_mut() {
        *a /= folds as f64;
    }
    let mut best = 0;
    for i in 1..acc.len() {
        if acc[i] > acc[best] {
            best = i;
        }
    }
    Ok(CvResult {
        best: candidates[best],
        table: candidates
            .into_iter()
            .zip(acc)
            .map(|(candidate, accuracy)| CvRow { candidate, accuracy })
            .collect(),
    })
}

/// A fitted reduction; `None` is the identity.
pub type Reduction<T> = Option<SavedModel<T>>;

/// Fit `algo` on `train` at one grid point.
pub fn fit_candidate<T: Real>(
    algo: Algorithm,
    train: &LabeledDataset<T>,
    candidate: &Candidate,
    space: &SearchSpace,
) -> Result<Reduction<T>> {
    Ok(match algo {
        Algorithm::Baseline => None,
        Algorithm::Pca => Some((&fit_pca(train.features(), PcaSpec::Components(candidate.m))?).into()),
        Algorithm::Lda => Some((&fit_lda(train, candidate.m)?).into()),
        Algorithm::Mpda => Some((&fit_mpda(train, &space.mpda_params(candidate))?).into()),
        Algorithm::Pmpda => Some((&fit_pmpda(train, &space.pmpda_params(candidate))?).into()),
    })
}

fn apply<T: Real>(r: &Reduction<T>, x: &DMatrix<T>) -> Result<DMatrix<T>> {
    match r {
        Some(model) => model.transform(x),
        None => Ok(x.clone()),
    }
}

/// Settings of the repeated-split protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub train_fraction: f64,
    pub splits: usize,
    pub folds: usize,
    pub seed: u64,
    /// Reduce inputs wider than this with energy-preserving PCA first.
    pub preprocess_above: Option<usize>,
    pub preprocess_energy: f64,
    pub jobs: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
            splits: 20,
            folds: 4,
            seed: 0,
            preprocess_above: Some(100),
            preprocess_energy: 0.95,
            jobs: 1,
        }
    }
}

/// Seconds spent per stage, summed over splits.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub preprocess: f64,
    pub cross_validation: f64,
    pub fit: f64,
    pub test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitOutcome {
    pub split: usize,
    pub seed: u64,
    pub error: f64,
    pub m: usize,
    pub input_dim: usize,
    pub hyperparams: BTreeMap<String, f64>,
    #[serde(skip)]
    timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub algorithm: Algorithm,
    pub splits: usize,
    pub train_fraction: f64,
    pub folds: usize,
    pub seed: u64,
    pub errors: Vec<f64>,
    pub mean_error: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_error: f64,
    /// Mean of the per-split chosen dimensionalities.
    pub mean_m: f64,
    pub per_split: Vec<SplitOutcome>,
    pub timings: Timings,
}

impl BenchmarkReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Io(e.into()))
    }

    /// One row per split: `split,seed,error,m,input_dim`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["split", "seed", "error", "m", "input_dim"]).map_err(csv_err)?;
        for s in &self.per_split {
            w.write_record([
                s.split.to_string(),
                s.seed.to_string(),
                s.error.to_string(),
                s.m.to_string(),
                s.input_dim.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Split, optionally PCA-preprocess the training part, return both parts.
fn prepared_split<T: Real>(
    ds: &LabeledDataset<T>,
    algo: Algorithm,
    protocol: &Protocol,
    seed: u64,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    let (tr, te) = train_test_split(ds, protocol.train_fraction, seed)?;
    match protocol.preprocess_above {
        Some(limit) if algo != Algorithm::Baseline && ds.dim() > limit => {
            let pca = fit_pca(tr.features(), PcaSpec::Energy(protocol.preprocess_energy))?;
            let a = tr.with_features(pca.transform(tr.features())?)?;
            let b = te.with_features(pca.transform(te.features())?)?;
            Ok((a, b))
        }
        _ => Ok((tr, te)),
    }
}

fn run_split<T: Real>(
    ds: &LabeledDataset<T>,
    algo: Algorithm,
    space: &SearchSpace,
    protocol: &Protocol,
    s: usize,
) -> Result<SplitOutcome> {
    let split_seed = derive_seed(protocol.seed, 2 * s as u64);
    let fold_seed = derive_seed(protocol.seed, 2 * s as u64 + 1);
    let mut timings = Timings::default();

    let clock = Instant::now();
    let (tr, te) = prepared_split(ds, algo, protocol, split_seed)?;
    timings.preprocess = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let ms = space.dims(algo, tr.dim(), tr.n_classes())?;
    let candidates = space.candidates(algo, &ms);
    let best = if candidates.len() == 1 {
        candidates[0]
    } else {
        cross_validate(&tr, algo, space, protocol.folds, fold_seed)?.best
    };
    timings.cross_validation = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let model = fit_candidate(algo, &tr, &best, space)?;
    timings.fit = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let a = apply(&model, tr.features())?;
    let b = apply(&model, te.features())?;
    let pred = nn_classify(&a, tr.labels(), &b)?;
    let error = error_rate(&pred, te.labels())?;
    timings.test = clock.elapsed().as_secs_f64();

    Ok(SplitOutcome {
        split: s,
        seed: split_seed,
        error,
        m: a.ncols(),
        input_dim: tr.dim(),
        hyperparams: best.to_map(),
        timings,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Repeated random splits: split, optional PCA preprocessing, CV, fit, 1-NN test.
/// Splits run on `protocol.jobs` workers; results do not depend on it.
pub fn benchmark<T: Real>(
    ds: &LabeledDataset<T>,
    algo: Algorithm,
    space: &SearchSpace,
    protocol: &Protocol,
) -> Result<BenchmarkReport> {
    if protocol.splits == 0 {
        return Err(Error::InvalidParameter("need at least one split".into()));
    }
    let per_split = pool(protocol.jobs)?.install(|| {
        (0..protocol.splits)
            .into_par_iter()
            .map(|s| run_split(ds, algo, space, protocol, s))
            .collect::<Result<Vec<_>>>()
    })?;
    let errors: Vec<f64> = per_split.iter().map(|s| s.error).collect();
    let (mean_error, std_error) = mean_std(&errors);
    let mean_m = per_split.iter().map(|s| s.m as f64).sum::<f64>() / per_split.len() as f64;
    let mut timings = Timings::default();
    for s in &per_split {
        timings.preprocess += s.timings.preprocess;
        timings.cross_validation += s.timings.cross_validation;
        timings.fit += s.timings.fit;
        timings.test += s.timings.test;
    }
    Ok(BenchmarkReport {
        algorithm: algo,
        splits: protocol.splits,
        train_fraction: protocol.train_fraction,
        folds: protocol.folds,
        seed: protocol.seed,
        errors,
        mean_error,
        std_error,
        mean_m,
        per_split,
        timings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Test accuracy against dimensionality. Hyperparameters are held at the
/// first entry of each grid; every split is fitted once at the largest `m`
/// and scored on each prefix.
pub fn dimension_sweep<T: Real>(
    ds: &LabeledDataset<T>,
    algo: Algorithm,
    ms: &[usize],
    space: &SearchSpace,
    protocol: &Protocol,
) -> Result<Vec<SweepRow>> {
    let mut ms = ms.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let top = *ms.last().ok_or_else(|| Error::InvalidParameter("empty dimensionality range".into()))?;
    if ms[0] == 0 {
        return Err(Error::InvalidParameter("dimensionality must be at least 1".into()));
    }
    let head = Candidate {
        k: space.k.first().copied(),
        gamma: space.gamma.first().copied(),
        alpha: space.alpha.first().copied(),
        m: top,
    };
    let per_split = pool(protocol.jobs)?.install(|| {
        (0..protocol.splits)
            .into_par_iter()
            .map(|s| -> Result<Vec<f64>> {
                let (tr, te) = prepared_split(ds, algo, protocol, derive_seed(protocol.seed, 2 * s as u64))?;
                if top > tr.dim() {
                    return Err(Error::InvalidParameter(format!("m = {top} exceeds d = {}", tr.dim())));
                }
                let model = fit_candidate(algo, &tr, &head, space)?;
                let a = apply(&model, tr.features())?;
                let b = apply(&model, te.features())?;
                let errs = prefix_errors(&a, tr.labels(), &b, te.labels(), &ms)?;
                Ok(errs.into_iter().map(|e| 1.0 - e).collect())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ms
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let accs: Vec<f64> = per_split.iter().map(|row| row[i]).collect();
            let (mean_accuracy, std_accuracy) = mean_std(&accs);
            SweepRow {
                m,
                mean_accuracy,
                std_accuracy,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweptParam {
    K,
    Gamma,
    Alpha,
}

impl std::str::FromStr for SweptParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "k" => Ok(SweptParam::K),
            "gamma" => Ok(SweptParam::Gamma),
            "alpha" => Ok(SweptParam::Alpha),
            _ => Err(format!("cannot sweep '{s}' (expected k, gamma or alpha)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamRow {
    pub value: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_m: f64,
}

/// One benchmark per value of `param`, with that grid pinned to the value and
/// every other grid as given in `space`.
pub fn param_sweep<T: Real>(
    ds: &LabeledDataset<T>,
    algo: Algorithm,
    param: SweptParam,
    values: &[f64],
    space: &SearchSpace,
    protocol: &Protocol,
) -> Result<Vec<ParamRow>> {
    values
        .iter()
        .map(|&value| {
            let mut s = space.clone();
            match param {
                SweptParam::K => {
                    if value < 1.0 || value.fract() != 0.0 {
                        return Err(Error::InvalidParameter(format!("k = {value} is not a positive integer")));
                    }
                    s.k = vec![value as usize];
                }
                SweptParam::Gamma => s.gamma = vec![value],
                SweptParam::Alpha => s.alpha = vec![value],
            }
            let report = benchmark(ds, algo, &s, protocol)?;
            let accs: Vec<f64> = report.errors.iter().map(|e| 1.0 - e).collect();
            let (mean_accuracy, std_accuracy) = mean_std(&accs);
            Ok(ParamRow {
                value,
                mean_accuracy,
                std_accuracy,
                mean_m: report.mean_m,
            })
        })
        .collect()
}

/// Write serializable rows as CSV with a header.
pub fn write_rows_csv<W: Write, R: Serialize>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
