//! Manifold partition discriminant analysis and its pairwise variant.
//!
//! The unknowns are stacked as `f = (t; v_1; …; v_P)`: a projection direction
//! `t ∈ R^d` and one tangent vector `v_p ∈ R^{m_p}` per patch. For every
//! ordered within-class edge `(i, j)` with `d_ij = x_i − x_j`, `P = π_j`,
//! `Q = π_i` the within objective accumulates
//!
//! ```text
//! W_ij [ (tᵀd_ij − v_Pᵀ T_Pᵀ d_ij)² + γ ‖v_Q − T_Qᵀ T_P v_P‖² ]
//! ```
//!
//! into a symmetric PSD matrix `S`. The between objective only touches `t`,
//! giving `S′ = diag(2 Xᵀ L′ X, 0)`. Directions are the top eigenvectors of
//! `S′ f = λ (S + αI) f`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::{
    between_class_graph, knn_neighbors, knn_within_class, laplacian, within_class_graph, NeighborLists,
    WeightMatrix,
};
use crate::linalg::{solve_block_numerator, solve_symmetric_definite, GepSolution};
use crate::partition::{partition_class, Partition, PartitionParams};
use crate::scalar::Real;
use crate::tangent::{fit_tangent_basis, TangentBasis};
use crate::Algorithm;

/// Offsets of the per-patch tangent blocks inside `f = (t; v)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    d: usize,
    /// `(start, len)` of each patch's block, starts absolute (≥ d).
    blocks: Vec<(usize, usize)>,
}

impl BlockLayout {
    pub fn new(d: usize, dims: impl IntoIterator<Item = usize>) -> Self {
        let mut start = d;
        let blocks = dims
            .into_iter()
            .map(|m| {
                let b = (start, m);
                start += m;
                b
            })
            .collect();
        Self { d, blocks }
    }

    pub fn ambient(&self) -> usize {
        self.d
    }

    pub fn patches(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, p: usize) -> (usize, usize) {
        self.blocks[p]
    }

    /// `d + Σ_p m_p`.
    pub fn total(&self) -> usize {
        self.blocks.last().map_or(self.d, |&(s, m)| s + m)
    }

    pub fn tangent_len(&self) -> usize {
        self.total() - self.d
    }
}

/// Where whole-class k-NN searches look for within-class neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NeighborScope {
    /// k-NN over all points, then keep same-class pairs.
    #[default]
    GlobalThenFilter,
    /// k-NN among same-class points only.
    ClassRestricted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpdaParams {
    pub k: usize,
    pub partition: PartitionParams,
    pub gamma: f64,
    pub alpha: f64,
    pub energy: f64,
    pub m: usize,
    pub scope: NeighborScope,
}

impl Default for MpdaParams {
    fn default() -> Self {
        Self {
            k: 5,
            partition: PartitionParams::default(),
            gamma: 1.0,
            alpha: 1e-3,
            energy: 0.95,
            m: 1,
            scope: NeighborScope::default(),
        }
    }
}

impl MpdaParams {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.partition.max_patch == 0 || self.partition.k_prime == 0 {
            return Err(Error::InvalidParameter("k' and M must be at least 1".into()));
        }
        validate_common(self.gamma, self.alpha, self.energy, self.m, d)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("k".to_string(), self.k as f64),
            ("k_prime".to_string(), self.partition.k_prime as f64),
            ("max_patch".to_string(), self.partition.max_patch as f64),
            ("gamma".to_string(), self.gamma),
            ("alpha".to_string(), self.alpha),
            ("energy".to_string(), self.energy),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmpdaParams {
    pub k: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub energy: f64,
    pub m: usize,
    pub scope: NeighborScope,
    /// Upper bound on `d + Σ_i m_i`.
    pub max_total: usize,
}

impl Default for PmpdaParams {
    fn default() -> Self {
        Self {
            k: 5,
            gamma: 1.0,
            alpha: 1e-3,
            energy: 0.95,
            m: 1,
            scope: NeighborScope::default(),
            max_total: 8000,
        }
    }
}

impl PmpdaParams {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        validate_common(self.gamma, self.alpha, self.energy, self.m, d)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("k".to_string(), self.k as f64),
            ("gamma".to_string(), self.gamma),
            ("alpha".to_string(), self.alpha),
            ("energy".to_string(), self.energy),
        ])
    }
}

fn validate_common(gamma: f64, alpha: f64, energy: f64, m: usize, d: usize) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be ≥ 0")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be > 0")));
    }
    if !(energy > 0.0 && energy <= 1.0) {
        return Err(Error::InvalidParameter(format!("energy = {energy} outside (0, 1]")));
    }
    if m == 0 || m > d {
        return Err(Error::InvalidParameter(format!("m = {m} outside 1..={d}")));
    }
    Ok(())
}

/// Tangent charts: which chart every point belongs to and each chart's basis.
#[derive(Debug, Clone)]
pub struct Charts<T: Real> {
    pub chart_of: Vec<usize>,
    pub bases: Vec<TangentBasis<T>>,
    pub layout: BlockLayout,
}

impl<T: Real> Charts<T> {
    pub fn new(d: usize, chart_of: Vec<usize>, bases: Vec<TangentBasis<T>>) -> Result<Self> {
        if let Some(bad) = bases.iter().find(|b| b.ambient() != d) {
            return Err(Error::LayoutMismatch(format!(
                "basis has {} rows, data has {d} columns",
                bad.ambient()
            )));
        }
        if let Some(&p) = chart_of.iter().find(|&&p| p >= bases.len()) {
            return Err(Error::LayoutMismatch(format!(
                "point assigned to chart {p} of {}",
                bases.len()
            )));
        }
        let layout = BlockLayout::new(d, bases.iter().map(TangentBasis::dim));
        Ok(Self {
            chart_of,
            bases,
            layout,
        })
    }
}

/// Per-class partitions, with patch ids numbered class by class.
#[derive(Debug, Clone, Serialize)]
pub struct ClassPartitions {
    /// Global point indices of each patch.
    pub patches: Vec<Vec<usize>>,
    pub class_of_patch: Vec<usize>,
    pub linearity: Vec<f64>,
}

pub fn partition_dataset<T: Real>(ds: &LabeledDataset<T>, params: &PartitionParams) -> Result<ClassPartitions> {
    let mut out = ClassPartitions {
        patches: Vec::new(),
        class_of_patch: Vec::new(),
        linearity: Vec::new(),
    };
    for (c, members) in ds.class_indices().into_iter().enumerate() {
        let xc = ds.features().select_rows(members.iter());
        let Partition { patches, linearity } = partition_class(&xc, params)?;
        for (patch, r) in patches.into_iter().zip(linearity) {
            out.patches.push(patch.into_iter().map(|local| members[local]).collect());
            out.class_of_patch.push(c + 1);
            out.linearity.push(r);
        }
    }
    Ok(out)
}

/// Patch charts: partition each class, then fit one tangent basis per patch.
pub fn patch_charts<T: Real>(ds: &LabeledDataset<T>, params: &PartitionParams, energy: f64) -> Result<Charts<T>> {
    let parts = partition_dataset(ds, params)?;
    let mut chart_of = vec![usize::MAX; ds.n()];
    let mut bases = Vec::with_capacity(parts.patches.len());
    for (p, members) in parts.patches.iter().enumerate() {
        for &i in members {
            chart_of[i] = p;
        }
        let pts = ds.features().select_rows(members.iter());
        bases.push(fit_tangent_basis(&pts, energy, None)?);
    }
    Charts::new(ds.dim(), chart_of, bases)
}

/// Per-point charts: each point's basis comes from PCA on the point and its
/// `k` nearest same-class neighbors, at most `k` directions.
pub fn pointwise_charts<T: Real>(ds: &LabeledDataset<T>, k: usize, energy: f64) -> Result<Charts<T>> {
    let x = ds.features();
    let nb = knn_within_class(x, ds.labels(), k)?;
    let bases = (0..ds.n())
        .map(|i| {
            let idx: Vec<usize> = std::iter::once(i).chain(nb.of(i).iter().map(|&(j, _)| j)).collect();
            fit_tangent_basis(&x.select_rows(idx.iter()), energy, Some(k))
        })
        .collect::<Result<Vec<_>>>()?;
    Charts::new(ds.dim(), (0..ds.n()).collect(), bases)
}

/// The within quadratic form split as `S = pair + γ · smooth`.
#[derive(Debug, Clone)]
pub struct WithinForm<T: Real> {
    pub pair: DMatrix<T>,
    pub smooth: DMatrix<T>,
}

impl<T: Real> WithinForm<T> {
    pub fn combine(&self, gamma: T) -> DMatrix<T> {
        &self.pair + &self.smooth * gamma
    }
}

/// Accumulate the within form edge by edge over the ordered nonzero entries
/// of `w` (row-major), so the result is bit-stable.
pub fn within_form<T: Real>(x: &DMatrix<T>, w: &WeightMatrix<T>, charts: &Charts<T>) -> Result<WithinForm<T>> {
    let (n, d) = x.shape();
    let layout = &charts.layout;
    if w.n() != n || charts.chart_of.len() != n {
        return Err(Error::LayoutMismatch(format!(
            "{n} points, {} graph nodes, {} chart assignments",
            w.n(),
            charts.chart_of.len()
        )));
    }
    if layout.ambient() != d {
        return Err(Error::LayoutMismatch(format!("layout for d = {}, data d = {d}", layout.ambient())));
    }
    let total = layout.total();
    let mut pair = DMatrix::zeros(total, total);
    let mut smooth = DMatrix::zeros(total, total);
    for (i, j, wij) in w.ordered_entries() {
        let diff: DVector<T> = (x.row(i) - x.row(j)).transpose();
        let p = charts.chart_of[j];
        let q = charts.chart_of[i];
        let (sp, mp) = layout.block(p);
        let tp = &charts.bases[p].basis;

        pair.view_mut((0, 0), (d, d)).ger(wij, &diff, &diff, T::one());
        if mp > 0 {
            let u = tp.tr_mul(&diff);
            pair.view_mut((0, sp), (d, mp)).ger(-wij, &diff, &u, T::one());
            pair.view_mut((sp, 0), (mp, d)).ger(-wij, &u, &diff, T::one());
            pair.view_mut((sp, sp), (mp, mp)).ger(wij, &u, &u, T::one());
        }

        if p != q {
            let (sq, mq) = layout.block(q);
            if mq == 0 {
                continue;
            }
            let tq = &charts.bases[q].basis;
            let g = tq.tr_mul(tp);
            for a in 0..mq {
                smooth[(sq + a, sq + a)] += wij;
            }
            if mp > 0 {
                let mut qp = smooth.view_mut((sq, sp), (mq, mp));
                qp -= &g * wij;
                let mut pq = smooth.view_mut((sp, sq), (mp, mq));
                pq -= g.transpose() * wij;
                let mut pp = smooth.view_mut((sp, sp), (mp, mp));
                pp += g.tr_mul(&g) * wij;
            }
        }
    }
    Ok(WithinForm { pair, smooth })
}

/// `S` for trade-off `γ`.
pub fn assemble_within<T: Real>(x: &DMatrix<T>, w: &WeightMatrix<T>, charts: &Charts<T>, gamma: T) -> Result<DMatrix<T>> {
    if gamma < T::zero() {
        return Err(Error::InvalidParameter("gamma must be ≥ 0".into()));
    }
    Ok(within_form(x, w, charts)?.combine(gamma))
}

/// `2 Xᵀ L′ X` for row-major points: the only nonzero block of `S′`.
pub fn between_block<T: Real>(x: &DMatrix<T>, w_between: &WeightMatrix<T>) -> DMatrix<T> {
    laplacian(w_between).scatter(x) * T::of(2.0)
}

/// Full `S′` over the layout: `2 Xᵀ L′ X` in the t-block, zero elsewhere.
pub fn assemble_between<T: Real>(x: &DMatrix<T>, w_between: &WeightMatrix<T>, layout: &BlockLayout) -> Result<DMatrix<T>> {
    let d = x.ncols();
    if layout.ambient() != d || w_between.n() != x.nrows() {
        return Err(Error::LayoutMismatch(format!(
            "layout d = {}, data {}x{d}, graph n = {}",
            layout.ambient(),
            x.nrows(),
            w_between.n()
        )));
    }
    let total = layout.total();
    let mut s = DMatrix::zeros(total, total);
    s.view_mut((0, 0), (d, d)).copy_from(&between_block(x, w_between));
    Ok(s)
}

/// Top `m` eigenpairs of `S′ f = λ (S + αI) f`, eigenvalues descending, each
/// `f` scaled so its leading `t_dim` entries have unit norm.
pub fn solve_gep<T: Real>(
    s_between: &DMatrix<T>,
    s_within: &DMatrix<T>,
    alpha: T,
    m: usize,
    t_dim: usize,
) -> Result<GepSolution<T>> {
    if alpha <= T::zero() {
        return Err(Error::InvalidParameter("alpha must be > 0".into()));
    }
    let mut sol = solve_symmetric_definite(s_between, s_within, alpha, m)?;
    sol.normalize_leading(t_dim);
    Ok(sol)
}

/// Same pencil, exploiting that `S′` vanishes outside its leading `d×d` block.
pub fn solve_gep_reduced<T: Real>(between_tt: &DMatrix<T>, s_within: &DMatrix<T>, alpha: T, m: usize) -> Result<GepSolution<T>> {
    if alpha <= T::zero() {
        return Err(Error::InvalidParameter("alpha must be > 0".into()));
    }
    let mut sol = solve_block_numerator(between_tt, s_within, alpha, m)?;
    sol.normalize_leading(between_tt.nrows());
    Ok(sol)
}

/// Fitted linear embedding plus tangent diagnostics.
#[derive(Debug, Clone)]
pub struct EmbeddingModel<T: Real> {
    pub algorithm: Algorithm,
    /// d×m, columns `t_1..t_m`.
    pub projection: DMatrix<T>,
    /// Descending.
    pub eigenvalues: Vec<T>,
    /// Stacked tangent vectors, one column per retained eigenvector.
    pub tangent_vectors: DMatrix<T>,
    pub layout: BlockLayout,
    pub charts: Charts<T>,
    pub hyperparams: BTreeMap<String, f64>,
}

impl<T: Real> EmbeddingModel<T> {
    pub fn dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn m(&self) -> usize {
        self.projection.ncols()
    }

    /// Tangent vector of patch `p` for eigenvector `k`.
    pub fn tangent_vector(&self, p: usize, k: usize) -> DVector<T> {
        let (start, len) = self.layout.block(p);
        let off = start - self.layout.ambient();
        self.tangent_vectors.view((off, k), (len, 1)).column(0).into_owned()
    }

    /// `B = X T`; rows of `x` are points.
    pub fn transform(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        transform_with(&self.projection, x)
    }

    /// Per-edge first-order residual `(tᵀd_ij − v_Pᵀ T_Pᵀ d_ij)²` for
    /// eigenvector `k` over the ordered entries of `w`.
    pub fn edge_residuals(&self, x: &DMatrix<T>, w: &WeightMatrix<T>, k: usize) -> Vec<(usize, usize, T)> {
        let t = self.projection.column(k);
        w.ordered_entries()
            .into_iter()
            .map(|(i, j, _)| {
                let diff: DVector<T> = (x.row(i) - x.row(j)).transpose();
                let p = self.charts.chart_of[j];
                let v = self.tangent_vector(p, k);
                let tangent = if v.is_empty() {
                    T::zero()
                } else {
                    v.dot(&self.charts.bases[p].basis.tr_mul(&diff))
                };
                let r = t.dot(&diff) - tangent;
                (i, j, r * r)
            })
            .collect()
    }
}

pub(crate) fn transform_with<T: Real>(projection: &DMatrix<T>, x: &DMatrix<T>) -> Result<DMatrix<T>> {
    if x.ncols() != projection.nrows() {
        return Err(Error::DimensionMismatch {
            expected: projection.nrows(),
            got: x.ncols(),
        });
    }
    Ok(x * projection)
}

/// Everything a fit needs that does not depend on `γ`, `α` or `m`; shared by
/// cross-validation across those parameters.
#[derive(Debug, Clone)]
pub struct PreparedProblem<T: Real> {
    pub charts: Charts<T>,
    pub within: WithinForm<T>,
    pub between_tt: DMatrix<T>,
}

impl<T: Real> PreparedProblem<T> {
    /// Solve for the top `m` directions.
    pub fn solve(&self, gamma: f64, alpha: f64, m: usize) -> Result<GepSolution<T>> {
        let s = self.within.combine(T::of(gamma));
        solve_gep_reduced(&self.between_tt, &s, T::of(alpha), m)
    }
}

fn graphs<T: Real>(
    ds: &LabeledDataset<T>,
    k: usize,
    scope: NeighborScope,
) -> Result<(NeighborLists<T>, WeightMatrix<T>, WeightMatrix<T>)> {
    let x = ds.features();
    let nb = knn_neighbors(x, k)?;
    let w = match scope {
        NeighborScope::GlobalThenFilter => within_class_graph(&nb, ds.labels())?,
        NeighborScope::ClassRestricted => within_class_graph(&knn_within_class(x, ds.labels(), k)?, ds.labels())?,
    };
    let wb = between_class_graph(x, ds.labels(), &nb)?;
    Ok((nb, w, wb))
}

/// Graph construction and quadratic forms for given charts and `k`.
pub fn prepare<T: Real>(ds: &LabeledDataset<T>, charts: Charts<T>, k: usize, scope: NeighborScope) -> Result<PreparedProblem<T>> {
    let (_, w, wb) = graphs(ds, k, scope)?;
    let within = within_form(ds.features(), &w, &charts)?;
    let between_tt = between_block(ds.features(), &wb);
    Ok(PreparedProblem {
        charts,
        within,
        between_tt,
    })
}

pub(crate) fn model_from_solution<T: Real>(
    algorithm: Algorithm,
    problem: &PreparedProblem<T>,
    sol: GepSolution<T>,
    hyperparams: BTreeMap<String, f64>,
) -> EmbeddingModel<T> {
    let layout = problem.charts.layout.clone();
    let d = layout.ambient();
    let nv = layout.tangent_len();
    let m = sol.values.len();
    EmbeddingModel {
        algorithm,
        projection: sol.vectors.view((0, 0), (d, m)).into_owned(),
        eigenvalues: sol.values.iter().copied().collect(),
        tangent_vectors: sol.vectors.view((d, 0), (nv, m)).into_owned(),
        layout,
        charts: problem.charts.clone(),
        hyperparams,
    }
}

pub fn fit_mpda<T: Real>(train: &LabeledDataset<T>, params: &MpdaParams) -> Result<EmbeddingModel<T>> {
    params.validate(train.dim())?;
    let charts = patch_charts(train, &params.partition, params.energy)?;
    let problem = prepare(train, charts, params.k, params.scope)?;
    let sol = problem.solve(params.gamma, params.alpha, params.m)?;
    Ok(model_from_solution(Algorithm::Mpda, &problem, sol, params.to_map()))
}

/// Per-point tangent charts for PMPDA, checking the resource cap first.
pub fn pmpda_charts<T: Real>(train: &LabeledDataset<T>, params: &PmpdaParams) -> Result<Charts<T>> {
    let worst = train.dim() + train.n() * params.k.min(train.dim());
    let charts = pointwise_charts(train, params.k, params.energy)?;
    let total = charts.layout.total();
    if total > params.max_total {
        return Err(Error::ResourceLimit(format!(
            "pencil size {total} exceeds the cap {} (worst case {worst})",
            params.max_total
        )));
    }
    Ok(charts)
}

pub fn fit_pmpda<T: Real>(train: &LabeledDataset<T>, params: &PmpdaParams) -> Result<EmbeddingModel<T>> {
    params.validate(train.dim())?;
    let charts = pmpda_charts(train, params)?;
    let problem = prepare(train, charts, params.k, params.scope)?;
    let sol = problem.solve(params.gamma, params.alpha, params.m)?;
    Ok(model_from_solution(Algorithm::Pmpda, &problem, sol, params.to_map()))
}

/// Generic entry point used by the transform path.
pub fn transform<T: Real>(model: &EmbeddingModel<T>, x: &DMatrix<T>) -> Result<DMatrix<T>> {
    model.transform(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_arithmetic() {
        let l = BlockLayout::new(4, [2, 0, 3]);
        assert_eq!(l.total(), 9);
        assert_eq!(l.block(1), (6, 0));
        assert_eq!(l.block(2), (6, 3));
        assert_eq!(l.tangent_len(), 5);
        assert_eq!(BlockLayout::new(3, []).total(), 3);
    }

    #[test]
    fn same_patch_pairs_have_no_smoothness_term() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.1, 2.0, -0.1]);
        let basis = fit_tangent_basis(&x, 0.95, None).unwrap();
        let charts = Charts::new(2, vec![0, 0, 0], vec![basis]).unwrap();
        let w = WeightMatrix::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        let form = within_form(&x, &w, &charts).unwrap();
        assert!(form.smooth.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_source_block_penalizes_target_only() {
        // point 0 in a 1-D chart, point 1 alone in an empty chart
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let t0 = TangentBasis {
            basis: DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        };
        let charts = Charts::new(2, vec![0, 1], vec![t0, TangentBasis::empty(2)]).unwrap();
        let w = WeightMatrix::from_edges(2, [(0, 1, 1.0)]);
        let form = within_form(&x, &w, &charts).unwrap();
        // edge (0,1): Q = chart 0 (m=1), P = chart 1 (m=0) → γ‖v_0‖²
        // edge (1,0): Q = chart 1 (m=0) → nothing
        assert_eq!(form.smooth[(2, 2)], 1.0);
        assert_eq!(form.smooth.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn transform_checks_dimension() {
        let t = DMatrix::<f64>::identity(3, 2);
        let x = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        assert_eq!(transform_with(&t, &x).unwrap(), DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
        assert!(matches!(
            transform_with(&t, &DMatrix::zeros(1, 2)),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }
}
