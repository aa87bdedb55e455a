//! Mean squared error, linear scaling and the hit criterion.

use serde::Serialize;

use crate::dataset::Dataset;
use crate::expr::Expr;
use crate::scalar::Scalar;

/// A solution is a hit when its reported MSE is strictly below this value.
pub const HIT_THRESHOLD: f64 = 1e-9;

/// Error of a model on a data set.
///
/// `mse` is measured against `a + b * T` where `T` are the raw outputs; without
/// scaling `a = 0` and `b = 1`. Invalid models carry `mse = +inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitnessValue<T> {
    pub mse: T,
    pub a: T,
    pub b: T,
    pub scaled: bool,
}

impl<T: Scalar> FitnessValue<T> {
    pub fn invalid(scaled: bool) -> Self {
        FitnessValue {
            mse: T::infinity(),
            a: T::zero(),
            b: T::one(),
            scaled,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.mse.is_finite()
    }

    /// Strictly lower error.
    pub fn improves_on(&self, other: &Self) -> bool {
        self.mse < other.mse
    }

    pub fn is_hit(&self) -> bool {
        is_hit(self)
    }
}

pub fn is_hit<T: Scalar>(f: &FitnessValue<T>) -> bool {
    f.mse < T::lit(HIT_THRESHOLD)
}

/// Raw mean squared error of `outputs` against `targets`.
pub fn raw_mse<T: Scalar>(outputs: &[T], targets: &[T]) -> T {
    let n = T::from_usize(targets.len()).expect("row count representable");
    let sum: T = outputs.iter().zip(targets).map(|(t, y)| (*t - *y) * (*t - *y)).sum();
    let mse = sum / n;
    if mse.is_nan() {
        T::infinity()
    } else {
        mse
    }
}

/// Least-squares fit of `targets ≈ a + b * outputs`.
///
/// A constant regressor yields `b = 0, a = mean(targets)`. The identity fit
/// `(0, 1)` is returned whenever round-off would make the fitted error exceed
/// the raw error, so the scaled error never exceeds the raw one.
pub fn scaled_fit<T: Scalar>(outputs: &[T], targets: &[T]) -> FitnessValue<T> {
    let n = T::from_usize(targets.len()).expect("row count representable");
    let mean_t = outputs.iter().copied().sum::<T>() / n;
    let mean_y = targets.iter().copied().sum::<T>() / n;
    let mut stt = T::zero();
    let mut sty = T::zero();
    for (t, y) in outputs.iter().zip(targets) {
        let dt = *t - mean_t;
        stt = stt + dt * dt;
        sty = sty + dt * (*y - mean_y);
    }
    let b = if stt == T::zero() { T::zero() } else { sty / stt };
    let a = mean_y - b * mean_t;
    let sum: T = outputs
        .iter()
        .zip(targets)
        .map(|(t, y)| {
            let r = *y - (a + b * *t);
            r * r
        })
        .sum();
    let fitted = sum / n;
    let raw = raw_mse(outputs, targets);
    if fitted.is_finite() && a.is_finite() && b.is_finite() && fitted <= raw {
        FitnessValue {
            mse: fitted,
            a,
            b,
            scaled: true,
        }
    } else {
        FitnessValue {
            mse: raw,
            a: T::zero(),
            b: T::one(),
            scaled: true,
        }
    }
}

/// Scores already-computed model outputs; `None` means the model hit a
/// non-finite value somewhere.
pub fn score_outputs<T: Scalar>(outputs: Option<&[T]>, targets: &[T], scaled: bool) -> FitnessValue<T> {
    match outputs {
        None => FitnessValue::invalid(scaled),
        Some(out) if scaled => scaled_fit(out, targets),
        Some(out) => FitnessValue {
            mse: raw_mse(out, targets),
            a: T::zero(),
            b: T::one(),
            scaled: false,
        },
    }
}

pub fn evaluate_fitness<T: Scalar>(e: &Expr, d: &Dataset<T>, scaled: bool) -> FitnessValue<T> {
    let out = e.evaluate_columns(d.columns(), d.len());
    score_outputs(out.as_deref(), d.targets(), scaled)
}

pub fn mse<T: Scalar>(e: &Expr, d: &Dataset<T>) -> FitnessValue<T> {
    evaluate_fitness(e, d, false)
}

pub fn linear_scale<T: Scalar>(e: &Expr, d: &Dataset<T>) -> FitnessValue<T> {
    evaluate_fitness(e, d, true)
}
