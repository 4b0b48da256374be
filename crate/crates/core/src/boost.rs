//! Two-axis ridge-regression boosting.
//!
//! Training runs `levels` outer rounds of `t_steps` ridge fits each. Every
//! fit `(ℓ, t)` encodes the samples with a fresh projection `R_t^ℓ` and
//! regresses onto what is still unexplained:
//!
//! ```text
//! G ← Y
//! for ℓ in 0..L:
//!     A ← 0
//!     for t in 0..T:
//!         H ← h(X R_t^ℓᵀ)
//!         W_t^ℓ ← ridge(H, G − α·A, λ)
//!         A ← A + H W_t^ℓ
//!     G ← G − α·A
//! ```
//!
//! Prediction sums `α · h(X̃ R_t^ℓᵀ) W_t^ℓ` over all fitted terms (or over the
//! levels up to a cut-off) and takes the row-wise argmax. Projections are
//! regenerated from the seed; the model stores only the weights.

use alloc::vec::Vec;

use crate::dataset::TargetMatrix;
use crate::linalg::{self, LinalgError, Matrix, Shape};
use crate::projection::{
    self, generate_projection, Activation, GeneratorId, ProjectionError, ProjectionSpec,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoostError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(&'static str),
    #[error("{samples} samples but {targets} target rows")]
    TargetRows { samples: usize, targets: usize },
    #[error("input width {found} does not match the model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("level {level} requested but the model has {levels} levels")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("weight matrix {index} is {found}, expected {expected}")]
    WeightShape {
        index: usize,
        expected: Shape,
        found: Shape,
    },
    #[error("expected {expected} weight matrices, got {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("{predicted} predictions for {truth} labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("accuracy of an empty prediction set is undefined")]
    EmptyEvaluation,
    #[error("ridge solve failed at level {level}, step {step}: {source}")]
    Step {
        level: usize,
        step: usize,
        #[source]
        source: LinalgError,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

/// Everything that determines a training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    /// Ridge penalty λ ≥ 0.
    pub lambda: f64,
    /// Discount α ∈ (0, 1]; α = 1 with one level and one step is a plain ELM.
    pub alpha: f64,
    /// Ridge fits per level (T).
    pub t_steps: usize,
    /// Boosting levels (L).
    pub levels: usize,
    /// Hidden width (J).
    pub hidden: usize,
    pub activation: Activation,
    pub master_seed: u64,
}

impl Default for HyperParams {
    /// λ = 1, α = 1/2, T = 50, L = 8, J = 784, tanh.
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha: 0.5,
            t_steps: 50,
            levels: 8,
            hidden: 784,
            activation: Activation::Tanh,
            master_seed: 1,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), BoostError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(BoostError::InvalidHyper("alpha must lie in (0, 1]"));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(BoostError::InvalidHyper("lambda must be finite and non-negative"));
        }
        if self.t_steps == 0 || self.levels == 0 || self.hidden == 0 {
            return Err(BoostError::InvalidHyper("t_steps, levels and hidden must be at least 1"));
        }
        Ok(())
    }
}

/// Trained ensemble: hyperparameters plus the `levels × t_steps` output
/// weights, each `hidden × classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    hyper: HyperParams,
    generator: GeneratorId,
    inputs: usize,
    classes: usize,
    weights: Vec<Matrix>,
}

impl BoostedModel {
    /// Assembles a model from stored parts. `weights` is level-major.
    pub fn from_parts(
        hyper: HyperParams,
        generator: GeneratorId,
        inputs: usize,
        classes: usize,
        weights: Vec<Matrix>,
    ) -> Result<Self, BoostError> {
        hyper.validate()?;
        if inputs == 0 {
            return Err(BoostError::InvalidHyper("input width must be at least 1"));
        }
        let expected = hyper.levels * hyper.t_steps;
        if weights.len() != expected {
            return Err(BoostError::WeightCount {
                expected,
                found: weights.len(),
            });
        }
        let shape = Shape(hyper.hidden, classes);
        if let Some((index, w)) = weights.iter().enumerate().find(|(_, w)| w.shape() != shape) {
            return Err(BoostError::WeightShape {
                index,
                expected: shape,
                found: w.shape(),
            });
        }
        Ok(Self {
            hyper,
            generator,
            inputs,
            classes,
            weights,
        })
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn generator(&self) -> GeneratorId {
        self.generator
    }

    /// Input width (M).
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn weight(&self, level: usize, step: usize) -> &Matrix {
        &self.weights[level * self.hyper.t_steps + step]
    }

    /// All weights, level-major.
    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn projection_spec(&self) -> ProjectionSpec {
        ProjectionSpec::with_generator(
            self.hyper.master_seed,
            self.hyper.hidden,
            self.inputs,
            self.generator,
        )
        .expect("validated at construction")
    }
}

/// Per-step training residuals and, with an evaluation set, per-level
/// accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// `‖Y‖_F`, the residual before the first fit.
    pub initial_norm: f64,
    /// Residual Frobenius norm after each fit, level-major.
    pub residual_norms: Vec<f64>,
    /// Accuracy on the evaluation set using levels `0..=ℓ`.
    pub level_accuracy: Option<Vec<f64>>,
    /// Training residual `Y − fit` after the last fit.
    pub final_residual: Matrix,
    t_steps: usize,
}

impl TrainReport {
    pub fn residual_norm(&self, level: usize, step: usize) -> f64 {
        self.residual_norms[level * self.t_steps + step]
    }

    pub fn t_steps(&self) -> usize {
        self.t_steps
    }
}

/// Held-out samples scored after every level.
#[derive(Debug, Clone, Copy)]
pub struct EvalSet<'a> {
    pub x: &'a Matrix,
    pub labels: &'a [usize],
}

/// Emitted after each fit while training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub level: usize,
    pub step: usize,
    pub residual_norm: f64,
    /// Set on the last step of a level when an evaluation set is present.
    pub level_accuracy: Option<f64>,
}

pub fn train(
    x: &Matrix,
    targets: &TargetMatrix,
    hyper: &HyperParams,
    eval: Option<EvalSet<'_>>,
) -> Result<(BoostedModel, TrainReport), BoostError> {
    train_with_progress(x, targets, hyper, eval, |_| {})
}

/// [`train`], reporting each fit to `progress` as it completes.
pub fn train_with_progress(
    x: &Matrix,
    targets: &TargetMatrix,
    hyper: &HyperParams,
    eval: Option<EvalSet<'_>>,
    mut progress: impl FnMut(&Progress),
) -> Result<(BoostedModel, TrainReport), BoostError> {
    hyper.validate()?;
    let y = targets.as_matrix();
    if x.rows() != y.rows() {
        return Err(BoostError::TargetRows {
            samples: x.rows(),
            targets: y.rows(),
        });
    }
    if let Some(e) = eval {
        if e.x.cols() != x.cols() {
            return Err(BoostError::WidthMismatch {
                expected: x.cols(),
                found: e.x.cols(),
            });
        }
        if e.x.rows() != e.labels.len() {
            return Err(BoostError::LengthMismatch {
                predicted: e.x.rows(),
                truth: e.labels.len(),
            });
        }
    }
    let spec = ProjectionSpec::new(hyper.master_seed, hyper.hidden, x.cols())?;
    let (n, k) = (y.rows(), y.cols());
    let alpha = hyper.alpha;

    let mut weights = Vec::with_capacity(hyper.levels * hyper.t_steps);
    let mut residual_norms = Vec::with_capacity(hyper.levels * hyper.t_steps);
    let mut level_accuracy = eval.map(|_| Vec::with_capacity(hyper.levels));
    let mut eval_scores = eval.map(|e| Matrix::zeros(e.x.rows(), k));

    // Residual left by the completed levels.
    let mut level_residual = y.clone();
    for level in 0..hyper.levels {
        let mut level_fit = Matrix::zeros(n, k);
        let mut target = level_residual.clone();
        for step in 0..hyper.t_steps {
            let r = generate_projection(&spec, level, step);
            let h = projection::encode(x, &r, hyper.activation)?;
            let w = linalg::ridge_solve(&h, &target, hyper.lambda)
                .map_err(|source| BoostError::Step { level, step, source })?;
            linalg::add_scaled_in_place(&mut level_fit, &linalg::matmul(&h, &w)?, 1.0)?;
            drop(h);

            target = linalg::add_scaled(&level_residual, &level_fit, -alpha)?;
            let residual_norm = linalg::frobenius_norm(&target);
            residual_norms.push(residual_norm);

            let mut accuracy_now = None;
            if let (Some(e), Some(scores)) = (eval, eval_scores.as_mut()) {
                let he = projection::encode(e.x, &r, hyper.activation)?;
                linalg::add_scaled_in_place(scores, &linalg::matmul(&he, &w)?, alpha)?;
                if step + 1 == hyper.t_steps {
                    let eta = accuracy(&classify(scores), e.labels)?;
                    if let Some(acc) = level_accuracy.as_mut() {
                        acc.push(eta);
                    }
                    accuracy_now = Some(eta);
                }
            }
            weights.push(w);
            progress(&Progress {
                level,
                step,
                residual_norm,
                level_accuracy: accuracy_now,
            });
        }
        level_residual = target;
    }

    let model = BoostedModel {
        hyper: *hyper,
        generator: spec.generator(),
        inputs: x.cols(),
        classes: k,
        weights,
    };
    let report = TrainReport {
        initial_norm: linalg::frobenius_norm(y),
        residual_norms,
        level_accuracy,
        final_residual: level_residual,
        t_steps: hyper.t_steps,
    };
    Ok((model, report))
}

fn check_width(model: &BoostedModel, x: &Matrix) -> Result<(), BoostError> {
    if x.cols() != model.inputs {
        return Err(BoostError::WidthMismatch {
            expected: model.inputs,
            found: x.cols(),
        });
    }
    Ok(())
}

/// Scores `α Σ_{ℓ ≤ up_to} Σ_t h(x R_t^ℓᵀ) W_t^ℓ`; `None` uses every level.
pub fn predict_scores(
    model: &BoostedModel,
    x: &Matrix,
    up_to_level: Option<usize>,
) -> Result<Matrix, BoostError> {
    check_width(model, x)?;
    let levels = model.hyper.levels;
    let last = up_to_level.unwrap_or(levels - 1);
    if last >= levels {
        return Err(BoostError::LevelOutOfRange {
            level: last,
            levels,
        });
    }
    let mut scores = Matrix::zeros(x.rows(), model.classes);
    for level in 0..=last {
        accumulate_level(model, x, level, &mut scores)?;
    }
    Ok(scores)
}

/// Scores after each level: entry `ℓ` equals `predict_scores(model, x, Some(ℓ))`
/// bit for bit, at the cost of a single pass.
pub fn cumulative_level_scores(model: &BoostedModel, x: &Matrix) -> Result<Vec<Matrix>, BoostError> {
    check_width(model, x)?;
    let mut scores = Matrix::zeros(x.rows(), model.classes);
    let mut out = Vec::with_capacity(model.hyper.levels);
    for level in 0..model.hyper.levels {
        accumulate_level(model, x, level, &mut scores)?;
        out.push(scores.clone());
    }
    Ok(out)
}

fn accumulate_level(
    model: &BoostedModel,
    x: &Matrix,
    level: usize,
    scores: &mut Matrix,
) -> Result<(), BoostError> {
    let spec = model.projection_spec();
    for step in 0..model.hyper.t_steps {
        let r = generate_projection(&spec, level, step);
        let h = projection::encode(x, &r, model.hyper.activation)?;
        let contribution = linalg::matmul(&h, model.weight(level, step))?;
        linalg::add_scaled_in_place(scores, &contribution, model.hyper.alpha)?;
    }
    Ok(())
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn classify(scores: &Matrix) -> Vec<usize> {
    scores
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Fraction of exact matches.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64, BoostError> {
    if predicted.len() != truth.len() {
        return Err(BoostError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(BoostError::EmptyEvaluation);
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::one_hot_encode;
    use crate::projection::SplitMix64;
    use alloc::vec;
    use proptest::prelude::*;

    /// Three noisy Gaussian clusters on the unit sphere.
    fn toy_problem(n: usize, m: usize, seed: u64) -> (Matrix, Vec<usize>) {
        let mut rng = SplitMix64::new(seed);
        let mut centers = vec![0.0; 3 * m];
        rng.fill_standard_normal(&mut centers);
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let mut x = Matrix::zeros(n, m);
        let mut noise = vec![0.0; m];
        for (i, &label) in labels.iter().enumerate() {
            rng.fill_standard_normal(&mut noise);
            let row = x.row_mut(i);
            for c in 0..m {
                row[c] = centers[label * m + c] + 0.8 * noise[c];
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter_mut().for_each(|v| *v /= norm);
        }
        (x, labels)
    }

    fn small_hyper(alpha: f64) -> HyperParams {
        HyperParams {
            lambda: 1.0,
            alpha,
            t_steps: 4,
            levels: 3,
            hidden: 12,
            activation: Activation::Tanh,
            master_seed: 5,
        }
    }

    fn rel_diff(a: &Matrix, b: &Matrix) -> f64 {
        let d = linalg::add_scaled(a, b, -1.0).unwrap();
        linalg::frobenius_norm(&d) / linalg::frobenius_norm(b)
    }

    #[test]
    fn hyper_validation() {
        assert!(HyperParams::default().validate().is_ok());
        for bad in [
            HyperParams { alpha: 0.0, ..Default::default() },
            HyperParams { alpha: 1.5, ..Default::default() },
            HyperParams { lambda: -1.0, ..Default::default() },
            HyperParams { t_steps: 0, ..Default::default() },
            HyperParams { levels: 0, ..Default::default() },
            HyperParams { hidden: 0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(BoostError::InvalidHyper(_))));
        }
    }

    #[test]
    fn single_fit_is_plain_elm() {
        let (x, labels) = toy_problem(60, 10, 1);
        let y = one_hot_encode(&labels, 3).unwrap();
        let hyper = HyperParams { alpha: 1.0, t_steps: 1, levels: 1, ..small_hyper(1.0) };
        let (model, _) = train(&x, &y, &hyper, None).unwrap();

        let spec = ProjectionSpec::new(hyper.master_seed, hyper.hidden, 10).unwrap();
        let h = projection::encode(&x, &generate_projection(&spec, 0, 0), hyper.activation).unwrap();
        let w = linalg::ridge_solve(&h, y.as_matrix(), hyper.lambda).unwrap();
        assert_eq!(model.weight(0, 0), &w);
        assert_eq!(predict_scores(&model, &x, None).unwrap(), linalg::matmul(&h, &w).unwrap());
    }

    #[test]
    fn residuals_never_increase() {
        let (x, labels) = toy_problem(90, 8, 2);
        let y = one_hot_encode(&labels, 3).unwrap();
        let (_, report) = train(&x, &y, &small_hyper(0.5), None).unwrap();
        assert_eq!(report.residual_norms.len(), 12);
        let tol = 1e-9 * report.initial_norm;
        let mut prev = report.initial_norm;
        for &r in &report.residual_norms {
            assert!(r <= prev + tol, "{r} > {prev}");
            prev = r;
        }
        assert!(report.residual_norm(2, 3) < report.initial_norm);
    }

    #[test]
    fn residual_decrease_matches_normal_equation_identity() {
        // ‖G_after‖² = ‖G_before‖² − (2α − α²)‖HW‖² − 2αλ‖W‖² for one step.
        let (x, labels) = toy_problem(50, 6, 3);
        let y = one_hot_encode(&labels, 3).unwrap();
        let hyper = HyperParams { t_steps: 1, levels: 1, ..small_hyper(0.5) };
        let (model, report) = train(&x, &y, &hyper, None).unwrap();
        let spec = model.projection_spec();
        let h = projection::encode(&x, &generate_projection(&spec, 0, 0), hyper.activation).unwrap();
        let w = model.weight(0, 0);
        let hw = linalg::frobenius_norm(&linalg::matmul(&h, w).unwrap());
        let wn = linalg::frobenius_norm(w);
        let a = hyper.alpha;
        let expected = report.initial_norm.powi(2) - (2.0 * a - a * a) * hw * hw - 2.0 * a * hyper.lambda * wn * wn;
        assert!((report.residual_norms[0].powi(2) - expected).abs() < 1e-9 * report.initial_norm.powi(2));
    }

    #[test]
    fn prediction_reproduces_training_fit() {
        let (x, labels) = toy_problem(80, 9, 4);
        let y = one_hot_encode(&labels, 3).unwrap();
        let (model, report) = train(&x, &y, &small_hyper(0.5), None).unwrap();
        let fit = linalg::add_scaled(y.as_matrix(), &report.final_residual, -1.0).unwrap();
        let scores = predict_scores(&model, &x, Some(2)).unwrap();
        assert!(rel_diff(&scores, &fit) < 1e-9);
    }

    #[test]
    fn level_scores_match_partial_prediction() {
        let (x, labels) = toy_problem(40, 7, 5);
        let y = one_hot_encode(&labels, 3).unwrap();
        let (model, _) = train(&x, &y, &small_hyper(0.5), None).unwrap();
        let per_level = cumulative_level_scores(&model, &x).unwrap();
        for (level, scores) in per_level.iter().enumerate() {
            assert_eq!(scores, &predict_scores(&model, &x, Some(level)).unwrap());
        }
    }

    #[test]
    fn eval_accuracy_matches_partial_prediction() {
        let (x, labels) = toy_problem(120, 8, 6);
        let (xt, lt) = toy_problem(60, 8, 6);
        let y = one_hot_encode(&labels, 3).unwrap();
        let eval = EvalSet { x: &xt, labels: &lt };
        let mut seen = Vec::new();
        let (model, report) =
            train_with_progress(&x, &y, &small_hyper(0.5), Some(eval), |p| seen.push(*p)).unwrap();
        let acc = report.level_accuracy.unwrap();
        assert_eq!(acc.len(), 3);
        for (level, &eta) in acc.iter().enumerate() {
            let pred = classify(&predict_scores(&model, &xt, Some(level)).unwrap());
            assert_eq!(eta, accuracy(&pred, &lt).unwrap());
        }
        assert_eq!(seen.len(), 12);
        assert_eq!(seen.iter().filter(|p| p.level_accuracy.is_some()).count(), 3);
        assert!(acc[2] > 0.9, "{acc:?}");
    }

    #[test]
    fn zero_weights_give_zero_scores() {
        let hyper = small_hyper(0.5);
        let weights = vec![Matrix::zeros(12, 3); 12];
        let model = BoostedModel::from_parts(hyper, GeneratorId::SplitMixBoxMuller, 5, 3, weights).unwrap();
        let x = Matrix::from_fn(4, 5, |r, c| (r + c) as f64);
        assert_eq!(predict_scores(&model, &x, None).unwrap(), Matrix::zeros(4, 3));
    }

    #[test]
    fn model_and_prediction_errors() {
        let hyper = small_hyper(0.5);
        let gen = GeneratorId::SplitMixBoxMuller;
        assert!(matches!(
            BoostedModel::from_parts(hyper, gen, 5, 3, vec![Matrix::zeros(12, 3); 11]),
            Err(BoostError::WeightCount { expected: 12, found: 11 })
        ));
        let mut weights = vec![Matrix::zeros(12, 3); 12];
        weights[7] = Matrix::zeros(12, 2);
        assert!(matches!(
            BoostedModel::from_parts(hyper, gen, 5, 3, weights),
            Err(BoostError::WeightShape { index: 7, .. })
        ));
        let model = BoostedModel::from_parts(hyper, gen, 5, 3, vec![Matrix::zeros(12, 3); 12]).unwrap();
        assert_eq!(
            predict_scores(&model, &Matrix::zeros(2, 4), None).unwrap_err(),
            BoostError::WidthMismatch { expected: 5, found: 4 }
        );
        assert_eq!(
            predict_scores(&model, &Matrix::zeros(2, 5), Some(3)).unwrap_err(),
            BoostError::LevelOutOfRange { level: 3, levels: 3 }
        );
        let y = one_hot_encode(&[0, 1], 3).unwrap();
        assert!(matches!(
            train(&Matrix::zeros(3, 5), &y, &hyper, None),
            Err(BoostError::TargetRows { samples: 3, targets: 2 })
        ));
    }

    #[test]
    fn singular_step_reports_its_position() {
        let x = Matrix::zeros(4, 3);
        let y = one_hot_encode(&[0, 1, 0, 1], 2).unwrap();
        let hyper = HyperParams { lambda: 0.0, ..small_hyper(0.5) };
        let err = train(&x, &y, &hyper, None).unwrap_err();
        assert!(matches!(err, BoostError::Step { level: 0, step: 0, .. }), "{err:?}");
    }

    #[test]
    fn classify_examples() {
        let s = Matrix::from_rows(&[vec![0.1, 0.9, 0.2]]).unwrap();
        assert_eq!(classify(&s), vec![1]);
        let tie = Matrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert_eq!(classify(&tie), vec![0]);
        let labels = vec![3, 0, 2, 2, 1];
        assert_eq!(classify(one_hot_encode(&labels, 4).unwrap().as_matrix()), labels);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        let truth: Vec<usize> = (0..10).collect();
        let mut pred = truth.clone();
        pred[4] = 9;
        assert_eq!(accuracy(&pred, &truth).unwrap(), 0.9);
        assert!(matches!(accuracy(&[1], &[1, 2]), Err(BoostError::LengthMismatch { .. })));
        assert_eq!(accuracy(&[], &[]).unwrap_err(), BoostError::EmptyEvaluation);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn classify_ignores_positive_affine_maps(
            rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 5), 1..20),
            shift in -100.0f64..100.0,
            scale in 0.01f64..100.0,
        ) {
            let s = Matrix::from_rows(&rows).unwrap();
            let mut t = s.clone();
            t.map_in_place(|v| v * scale + shift);
            // the affine map may merge nearly equal scores; compare only rows
            // whose top two scores are well separated
            let base = classify(&s);
            let moved = classify(&t);
            for (i, row) in rows.iter().enumerate() {
                let mut sorted = row.clone();
                sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
                if sorted[0] - sorted[1] > 1e-9 {
                    prop_assert_eq!(base[i], moved[i]);
                }
            }
        }

        #[test]
        fn row_permutation_leaves_weights_unchanged(seed: u64) {
            let (x, labels) = toy_problem(30, 5, seed);
            let y = one_hot_encode(&labels, 3).unwrap();
            let hyper = HyperParams { t_steps: 2, levels: 2, hidden: 6, ..small_hyper(0.5) };
            let (model, _) = train(&x, &y, &hyper, None).unwrap();

            let mut order: Vec<usize> = (0..30).collect();
            let mut rng = SplitMix64::new(seed ^ 0x55);
            for i in (1..30).rev() {
                order.swap(i, rng.next_below(i as u64 + 1) as usize);
            }
            let xp = Matrix::from_fn(30, 5, |r, c| x[(order[r], c)]);
            let lp: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
            let yp = one_hot_encode(&lp, 3).unwrap();
            let (permuted, _) = train(&xp, &yp, &hyper, None).unwrap();
            for (a, b) in permuted.weights().iter().zip(model.weights()) {
                prop_assert!(rel_diff(a, b) < 1e-9);
            }
        }
    }
}
