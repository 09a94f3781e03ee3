//! Orthogonal Procrustes alignment of per-period embedding models.
//!
//! Rows are vectors. For matched rows `S` (source) and `T` (target) the
//! rotation `R = argmin_Q ‖S·Qᵀ − T‖_F` with `QᵀQ = I` is `U·Vᵀ`, where
//! `U·Σ·Vᵀ` is the SVD of `Tᵀ·S`.

use thiserror::Error;

use crate::linalg::{svd_jacobi, Matrix};
use crate::sgns::EmbeddingModel;
use crate::vocab::Vocabulary;

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("periods {from} and {to} share no vocabulary")]
    EmptyIntersection { from: i32, to: i32 },
    #[error("vocabularies share no token")]
    NoSharedTokens,
    #[error("need at least two models to align")]
    TooFewModels,
    #[error("periods must be consecutive years: {prev} is followed by {next}")]
    NotConsecutive { prev: i32, next: i32 },
    #[error("model for {period} is not aligned to the frame of {frame}")]
    NotAligned { period: i32, frame: i32 },
}

/// An orthogonal `d×d` matrix applied as `x ↦ R·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    pub matrix: Matrix,
    /// The cross-covariance was rank deficient, so the minimizer is not
    /// unique; this is one valid choice.
    pub rank_deficient: bool,
}

impl Rotation {
    pub fn identity(d: usize) -> Self {
        Self { matrix: Matrix::identity(d), rank_deficient: false }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.apply(x)
    }

    /// `max |RᵀR − I|`
    pub fn orthogonality_error(&self) -> f64 {
        self.matrix.t_matmul(&self.matrix).sub(&Matrix::identity(self.dim())).max_abs()
    }
}

/// Closed-form orthogonal Procrustes between matched row sets.
pub fn procrustes(source: &Matrix, target: &Matrix) -> Result<Rotation, AlignError> {
    if source.rows() != target.rows() || source.cols() != target.cols() {
        return Err(AlignError::DimMismatch(format!(
            "source is {}x{}, target is {}x{}",
            source.rows(),
            source.cols(),
            target.rows(),
            target.cols()
        )));
    }
    if source.rows() == 0 || source.cols() == 0 {
        return Err(AlignError::DimMismatch("empty matrices".into()));
    }
    let cross = target.t_matmul(source);
    let svd = svd_jacobi(&cross);
    Ok(Rotation { matrix: svd.u.matmul_t(&svd.v), rank_deficient: svd.null_dims > 0 })
}

/// `‖source·Rᵀ − target‖_F`
pub fn residual(source: &Matrix, target: &Matrix, rotation: &Matrix) -> f64 {
    source.matmul_t(rotation).sub(target).frobenius_norm()
}

/// Ids of tokens present (with the same kind) in both vocabularies, in
/// lexicographic surface order.
pub fn shared_rows(a: &Vocabulary, b: &Vocabulary) -> Result<Vec<(usize, usize)>, AlignError> {
    shared_rows_filtered(a, b, 1).ok_or(AlignError::NoSharedTokens)
}

fn shared_rows_filtered(a: &Vocabulary, b: &Vocabulary, min_count: u64) -> Option<Vec<(usize, usize)>> {
    let mut pairs: Vec<(&str, usize, usize)> = a
        .entries()
        .iter()
        .enumerate()
        .filter_map(|(ia, e)| {
            let ib = b.id(&e.surface)?;
            let other = b.entry(ib);
            (other.kind == e.kind && e.count >= min_count && other.count >= min_count)
                .then_some((e.surface.as_str(), ia, ib))
        })
        .collect();
    if pairs.is_empty() {
        return None;
    }
    pairs.sort_by(|x, y| x.0.cmp(y.0));
    Some(pairs.into_iter().map(|(_, ia, ib)| (ia, ib)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignOptions {
    /// Subtract shared-row means before fitting and add the target's back.
    pub centering: bool,
    /// Only tokens with at least this count in both periods anchor the fit.
    pub anchor_min_count: u64,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self { centering: true, anchor_min_count: 1 }
    }
}

/// Every row `x` of a period becomes `R·(x − source_mean) + target_mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignStep {
    pub rotation: Rotation,
    pub source_mean: Vec<f64>,
    pub target_mean: Vec<f64>,
}

impl AlignStep {
    pub fn identity(d: usize) -> Self {
        Self { rotation: Rotation::identity(d), source_mean: vec![0.0; d], target_mean: vec![0.0; d] }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.source_mean).map(|(a, m)| a - m).collect();
        let mut y = self.rotation.apply(&centered);
        for (v, m) in y.iter_mut().zip(&self.target_mean) {
            *v += m;
        }
        y
    }
}

/// Yearly models expressed in the frame of the last period.
#[derive(Debug, Clone)]
pub struct AlignedSeries {
    pub periods: Vec<i32>,
    pub models: Vec<EmbeddingModel>,
    pub steps: Vec<AlignStep>,
}

impl AlignedSeries {
    /// Wraps already-aligned models, checking the yearly sequence.
    pub fn from_parts(models: Vec<EmbeddingModel>, steps: Vec<AlignStep>) -> Result<Self, AlignError> {
        check_periods(&models)?;
        if steps.len() != models.len() {
            return Err(AlignError::DimMismatch("one alignment step per model required".into()));
        }
        let periods = models.iter().map(|m| m.period).collect();
        Ok(Self { periods, models, steps })
    }

    /// Wraps models loaded back from aligned files. The transforms are not
    /// persisted in the models, so the steps are identities.
    pub fn from_aligned(models: Vec<EmbeddingModel>) -> Result<Self, AlignError> {
        let d = models.first().map_or(0, EmbeddingModel::dim);
        let steps = vec![AlignStep::identity(d); models.len()];
        let series = Self::from_parts(models, steps)?;
        let frame = series.frame();
        if let Some(m) = series.models.iter().find(|m| m.aligned_frame != Some(frame)) {
            return Err(AlignError::NotAligned { period: m.period, frame });
        }
        Ok(series)
    }

    pub fn frame(&self) -> i32 {
        *self.periods.last().expect("series is never empty")
    }

    pub fn model(&self, period: i32) -> Option<&EmbeddingModel> {
        self.periods.iter().position(|&p| p == period).map(|i| &self.models[i])
    }

    pub fn rotations(&self) -> impl Iterator<Item = &Rotation> {
        self.steps.iter().map(|s| &s.rotation)
    }
}

fn check_periods(models: &[EmbeddingModel]) -> Result<(), AlignError> {
    if models.len() < 2 {
        return Err(AlignError::TooFewModels);
    }
    let d = models[0].dim();
    for w in models.windows(2) {
        if w[1].period != w[0].period + 1 {
            return Err(AlignError::NotConsecutive { prev: w[0].period, next: w[1].period });
        }
        if w[1].dim() != d {
            return Err(AlignError::DimMismatch(format!("period {} has d={}, expected {d}", w[1].period, w[1].dim())));
        }
    }
    Ok(())
}

fn gather_rows(model: &EmbeddingModel, ids: impl Iterator<Item = usize>) -> Matrix {
    let rows: Vec<Vec<f64>> = ids.map(|i| model.input_vectors.row_f64(i)).collect();
    Matrix::from_rows(&rows)
}

/// Aligns yearly models into the frame of the latest one by backward
/// chaining: period `t` is fitted to the already-aligned period `t+1`, and
/// the fitted transform is applied to all of its rows.
pub fn align_series(models: Vec<EmbeddingModel>, opts: &AlignOptions) -> Result<AlignedSeries, AlignError> {
    check_periods(&models)?;
    let n = models.len();
    let d = models[0].dim();
    let mut aligned: Vec<Option<EmbeddingModel>> = models.into_iter().map(Some).collect();
    let mut steps: Vec<AlignStep> = vec![AlignStep::identity(d); n];
    let frame = aligned[n - 1].as_ref().unwrap().period;
    let last = aligned[n - 1].as_mut().unwrap();
    last.aligned_frame = Some(frame);
    last.output_vectors = None;

    for t in (0..n - 1).rev() {
        let mut model = aligned[t].take().unwrap();
        let next = aligned[t + 1].as_ref().unwrap();
        let pairs = shared_rows_filtered(&model.vocab, &next.vocab, opts.anchor_min_count.max(1))
            .ok_or(AlignError::EmptyIntersection { from: model.period, to: next.period })?;
        let source = gather_rows(&model, pairs.iter().map(|p| p.0));
        let target = gather_rows(next, pairs.iter().map(|p| p.1));
        let (source_mean, target_mean) = if opts.centering {
            (source.column_means(), target.column_means())
        } else {
            (vec![0.0; d], vec![0.0; d])
        };
        let rotation = procrustes(&source.sub_row_vector(&source_mean), &target.sub_row_vector(&target_mean))?;
        let step = AlignStep { rotation, source_mean, target_mean };
        for i in 0..model.vocab.len() {
            let y = step.apply(&model.input_vectors.row_f64(i));
            for (dst, v) in model.input_vectors.row_mut(i).iter_mut().zip(y) {
                *dst = v as f32;
            }
        }
        model.output_vectors = None;
        model.aligned_frame = Some(frame);
        steps[t] = step;
        aligned[t] = Some(model);
    }

    let models: Vec<EmbeddingModel> = aligned.into_iter().map(Option::unwrap).collect();
    let periods = models.iter().map(|m| m.period).collect();
    Ok(AlignedSeries { periods, models, steps })
}
