//! The per-record objective: a weighted least-squares fit of `log X_ij`,
//! plus an optional anchoring penalty on the concept dimensions of both
//! vectors.

use std::f64::consts::E;

use crate::cooccur::CooccurrenceRecord;
use crate::error::{Error, Result};
use crate::lexicon::ConceptAssignment;
use crate::trainer::ModelParameters;

/// `min((x / x_max)^alpha, 1)`.
pub fn discount(x: f64, x_max: f64, alpha: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("discount needs a positive weight, got {x}")));
    }
    Ok(discount_unchecked(x, x_max, alpha))
}

#[inline]
pub(crate) fn discount_unchecked(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x < x_max {
        (x / x_max).powf(alpha)
    } else {
        1.0
    }
}

/// Switch point between the exponential and reciprocal branches of the penalty.
pub const PENALTY_SEAM: f64 = 0.5;

/// Anchoring penalty: `exp(-2x) / 2` below the seam, `1 / (4e x)` above it.
/// Strictly decreasing and continuously differentiable.
#[inline]
pub fn concept_penalty(x: f64) -> f64 {
    if x < PENALTY_SEAM {
        0.5 * (-2.0 * x).exp()
    } else {
        1.0 / (4.0 * E * x)
    }
}

#[inline]
pub fn concept_penalty_grad(x: f64) -> f64 {
    if x < PENALTY_SEAM {
        -(-2.0 * x).exp()
    } else {
        -1.0 / (4.0 * E * x * x)
    }
}

/// Scalar hyperparameters of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub x_max: f64,
    pub alpha: f64,
    /// Weight of the anchoring penalty; zero recovers the plain objective.
    pub k: f64,
}

/// Gradient of one record's cost with respect to the four parameter blocks it
/// touches.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordGrad {
    pub word: Vec<f64>,
    pub context: Vec<f64>,
    pub word_bias: f64,
    pub context_bias: f64,
}

fn check_record(rec: &CooccurrenceRecord, params: &ModelParameters) -> Result<()> {
    if !(rec.x > 0.0) {
        return Err(Error::Domain(format!("log undefined for X = {}", rec.x)));
    }
    let v = params.vocab_len();
    if rec.i as usize >= v || rec.j as usize >= v {
        return Err(Error::Bounds(format!(
            "record ({}, {}) outside vocabulary of {v}",
            rec.i, rec.j
        )));
    }
    Ok(())
}

fn anchored_dims(assignment: Option<&ConceptAssignment>, idx: u32) -> &[u32] {
    assignment.map_or(&[], |a| a.dims_of(idx as usize))
}

/// Cost of a single record:
/// `f(X) * [ (w_i . c_j + b_i + c_b_j - log X)^2 + k * (sum_l g(w_il) + sum_l g(c_jl)) ]`
/// where the sums run over the dimensions anchored for `i` and `j` respectively.
pub fn record_cost(
    rec: &CooccurrenceRecord,
    params: &ModelParameters,
    objective: &Objective,
    assignment: Option<&ConceptAssignment>,
) -> Result<f64> {
    check_record(rec, params)?;
    let w = params.word_row(rec.i as usize);
    let c = params.context_row(rec.j as usize);
    let (cost, _) = evaluate(
        rec.x,
        w,
        c,
        params.word_bias[rec.i as usize],
        params.context_bias[rec.j as usize],
        objective,
        anchored_dims(assignment, rec.i),
        anchored_dims(assignment, rec.j),
        None,
    );
    Ok(cost)
}

/// Exact analytic gradient of [`record_cost`].
pub fn record_grad(
    rec: &CooccurrenceRecord,
    params: &ModelParameters,
    objective: &Objective,
    assignment: Option<&ConceptAssignment>,
) -> Result<RecordGrad> {
    check_record(rec, params)?;
    let d = params.dims();
    let mut word = vec![0.0; d];
    let mut context = vec![0.0; d];
    let (_, bias_grad) = evaluate(
        rec.x,
        params.word_row(rec.i as usize),
        params.context_row(rec.j as usize),
        params.word_bias[rec.i as usize],
        params.context_bias[rec.j as usize],
        objective,
        anchored_dims(assignment, rec.i),
        anchored_dims(assignment, rec.j),
        Some((&mut word, &mut context)),
    );
    Ok(RecordGrad {
        word,
        context,
        word_bias: bias_grad,
        context_bias: bias_grad,
    })
}

/// Shared cost/gradient kernel used by both the public helpers and the
/// training loop. Returns `(cost, bias gradient)` and, when `grads` is given,
/// writes the vector gradients into it.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn evaluate(
    x: f64,
    w: &[f64],
    c: &[f64],
    bw: f64,
    bc: f64,
    objective: &Objective,
    word_dims: &[u32],
    context_dims: &[u32],
    grads: Option<(&mut [f64], &mut [f64])>,
) -> (f64, f64) {
    let dot: f64 = w.iter().zip(c).map(|(a, b)| a * b).sum();
    let diff = dot + bw + bc - x.ln();
    let weight = discount_unchecked(x, objective.x_max, objective.alpha);

    let mut penalty = 0.0;
    for &l in word_dims {
        penalty += concept_penalty(w[l as usize]);
    }
    for &l in context_dims {
        penalty += concept_penalty(c[l as usize]);
    }
    let cost = weight * (diff * diff + objective.k * penalty);

    let common = 2.0 * weight * diff;
    if let Some((gw, gc)) = grads {
        for ((gw, gc), (wv, cv)) in gw.iter_mut().zip(gc.iter_mut()).zip(w.iter().zip(c)) {
            *gw = common * cv;
            *gc = common * wv;
        }
        let anchor = objective.k * weight;
        for &l in word_dims {
            gw[l as usize] += anchor * concept_penalty_grad(w[l as usize]);
        }
        for &l in context_dims {
            gc[l as usize] += anchor * concept_penalty_grad(c[l as usize]);
        }
    }
    (cost, common)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discount_cap_and_curve() {
        assert_eq!(discount(75.0, 75.0, 0.75).unwrap(), 1.0);
        assert_eq!(discount(1000.0, 75.0, 0.75).unwrap(), 1.0);
        // 0.5^0.75 = 2^-0.75
        let expected = 0.594_603_557_501_360_5;
        assert!((discount(37.5, 75.0, 0.75).unwrap() - expected).abs() < 1e-15);
        assert!(discount(0.0, 75.0, 0.75).is_err());
        assert!(discount(-1.0, 75.0, 0.75).is_err());
    }

    #[test]
    fn penalty_closed_forms() {
        assert_eq!(concept_penalty(0.0), 0.5);
        let at_seam = 1.0 / (2.0 * E);
        assert!((concept_penalty(0.5) - at_seam).abs() < 1e-15);
        assert!((0.5 * (-1.0f64).exp() - at_seam).abs() < 1e-15);
        assert!((concept_penalty(1.0) - 0.091_969_860_292_860_6).abs() < 1e-15);
        assert_eq!(concept_penalty_grad(0.0), -1.0);
        assert!((concept_penalty_grad(0.5) + 1.0 / E).abs() < 1e-15);
        assert!((-(-1.0f64).exp() + 1.0 / E).abs() < 1e-15);
    }
}
