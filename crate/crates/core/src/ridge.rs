//! One-vs-all ridge regression head trained on PPV features.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Default regularization grid, 10^-3 ..= 10^3.
pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];

/// Linear head: `scores = t · W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    /// Row-major `T × K`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub class_labels: Vec<String>,
    pub lambda: f64,
}

/// Class decision plus the raw per-class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<S> {
    pub class: usize,
    pub scores: Vec<S>,
}

impl LinearClassifier {
    pub fn feature_count(&self) -> usize {
        self.weights.len() / self.class_count().max(1)
    }

    pub fn class_count(&self) -> usize {
        self.biases.len()
    }

    pub fn weight(&self, feature: usize, class: usize) -> f64 {
        self.weights[feature * self.class_count() + class]
    }

    /// Column `class` of `W`.
    pub fn class_weights(&self, class: usize) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .skip(class)
            .step_by(self.class_count())
            .copied()
    }

    pub fn scores(&self, features: &[f32]) -> Result<Vec<f64>> {
        let k = self.class_count();
        if features.len() != self.feature_count() {
            return Err(Error::FeatureDimension {
                expected: self.feature_count(),
                found: features.len(),
            });
        }
        let mut scores = self.biases.clone();
        for (i, &t) in features.iter().enumerate() {
            let row = &self.weights[i * k..(i + 1) * k];
            for (s, &w) in scores.iter_mut().zip(row) {
                *s += t as f64 * w;
            }
        }
        Ok(scores)
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax<S: PartialOrd + Copy>(scores: &[S]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Float prediction with lowest-index tie-break.
pub fn predict_float(features: &[f32], model: &LinearClassifier) -> Result<Prediction<f64>> {
    let scores = model.scores(features)?;
    Ok(Prediction {
        class: argmax(&scores),
        scores,
    })
}

/// Generalized cross-validation score of every λ in `grid`.
pub fn gcv_scores(features: &[Vec<f32>], labels: &[usize], classes: usize, grid: &[f64]) -> Result<Vec<f64>> {
    let problem = Centered::new(features, labels, classes)?;
    problem.gcv(grid)
}

/// Trains a ridge classifier against ±1 one-vs-all targets.
///
/// The intercept is left unpenalized, which is done by centering features and
/// targets before the solve. When `lambda_grid` holds more than one value the
/// one with the lowest GCV score wins (first on ties).
pub fn train_ridge(
    features: &[Vec<f32>],
    labels: &[usize],
    class_labels: &[String],
    lambda_grid: &[f64],
) -> Result<LinearClassifier> {
    let classes = class_labels.len();
    if classes < 2 {
        return Err(Error::InvalidTrainingData("need at least two classes".into()));
    }
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidTrainingData("λ grid must be non-empty and non-negative".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::InvalidTrainingData(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidTrainingData(format!("label {bad} out of range")));
    }
    for (k, name) in class_labels.iter().enumerate() {
        if !labels.contains(&k) {
            return Err(Error::ClassAbsent(name.clone()));
        }
    }
    let problem = Centered::new(features, labels, classes)?;
    let lambda = if lambda_grid.len() == 1 {
        lambda_grid[0]
    } else {
        let scores = problem.gcv(lambda_grid)?;
        lambda_grid[argmin(&scores)]
    };
    let (weights, biases) = problem.solve(lambda)?;
    Ok(LinearClassifier {
        weights,
        biases,
        class_labels: class_labels.to_vec(),
        lambda,
    })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

struct Centered {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    x_mean: DVector<f64>,
    y_mean: DVector<f64>,
}

impl Centered {
    fn new(features: &[Vec<f32>], labels: &[usize], classes: usize) -> Result<Self> {
        let n = features.len();
        if n < classes {
            return Err(Error::InvalidTrainingData(format!("{n} rows for {classes} classes")));
        }
        let t = features[0].len();
        if t == 0 || features.iter().any(|r| r.len() != t) {
            return Err(Error::InvalidTrainingData("ragged or empty feature rows".into()));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrainingData("non-finite feature".into()));
        }
        let mut x = DMatrix::from_fn(n, t, |r, c| features[r][c] as f64);
        let mut y = DMatrix::from_fn(n, classes, |r, c| if labels[r] == c { 1.0 } else { -1.0 });
        let x_mean = DVector::from_fn(t, |c, _| x.column(c).mean());
        let y_mean = DVector::from_fn(classes, |c, _| y.column(c).mean());
        for c in 0..t {
            x.column_mut(c).add_scalar_mut(-x_mean[c]);
        }
        for c in 0..classes {
            y.column_mut(c).add_scalar_mut(-y_mean[c]);
        }
        Ok(Self { x, y, x_mean, y_mean })
    }

    fn gcv(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let n = self.x.nrows() as f64;
        let gram = self.x.transpose() * &self.x;
        let eig = SymmetricEigen::new(gram);
        let projected = &self.x * &eig.eigenvectors;
        let z = projected.transpose() * &self.y;
        let eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|&e| e.max(0.0)).collect();
        let mut scores = Vec::with_capacity(grid.len());
        for &lambda in grid {
            let mut shrunk = z.clone();
            let mut dof = 1.0; // intercept
            for (j, &e) in eigenvalues.iter().enumerate() {
                let denom = e + lambda;
                let factor = if denom > 0.0 { 1.0 / denom } else { 0.0 };
                shrunk.row_mut(j).scale_mut(factor);
                dof += e * factor;
            }
            let fitted = &projected * shrunk;
            let rss = (&self.y - fitted).norm_squared();
            let denom = 1.0 - dof / n;
            scores.push(if denom > 0.0 {
                (rss / n) / (denom * denom)
            } else {
                f64::INFINITY
            });
        }
        Ok(scores)
    }

    fn solve(&self, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let t = self.x.ncols();
        let mut lhs = self.x.transpose() * &self.x;
        let scale = lhs.diagonal().max().max(1.0);
        for i in 0..t {
            lhs[(i, i)] += lambda;
        }
        let rhs = self.x.transpose() * &self.y;
        let chol = lhs.cholesky().ok_or(Error::IllConditioned)?;
        let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, &v| m.min(v * v));
        if !(min_pivot > scale * 1e-12) {
            return Err(Error::IllConditioned);
        }
        let w = chol.solve(&rhs);
        let b = &self.y_mean - w.transpose() * &self.x_mean;
        let classes = self.y.ncols();
        let mut weights = Vec::with_capacity(t * classes);
        for r in 0..t {
            for c in 0..classes {
                weights.push(w[(r, c)]);
            }
        }
        Ok((weights, b.iter().copied().collect()))
    }
}
