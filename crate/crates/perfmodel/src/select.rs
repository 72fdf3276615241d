//! AIC and stepwise first-order model selection.
//!
//! AIC here is `n ln(RSS/n) + 2 (k + 1)` with `k` estimated coefficients and
//! one extra parameter for the error variance. The Gaussian constant
//! `n ln(2 pi) + n` is omitted; it cancels in every comparison.

use crate::error::{ModelError, Result};
use crate::ols::{ols_fit, LinearModelFit};
use crate::table::{FactorTable, ResponseSpec};

pub fn aic_from_parts(n: usize, rss: f64, n_coef: usize) -> Result<f64> {
    if rss.is_nan() || rss <= 0.0 {
        return Err(ModelError::Numeric(format!(
            "AIC undefined for residual sum of squares {rss} (perfect or invalid fit)"
        )));
    }
    let n = n as f64;
    Ok(n * (rss / n).ln() + 2.0 * (n_coef as f64 + 1.0))
}

pub fn aic(fit: &LinearModelFit) -> Result<f64> {
    aic_from_parts(fit.n, fit.rss, fit.n_coef())
}

/// Stepwise search in both directions starting from the model with every
/// candidate. Each round evaluates dropping each included term and adding
/// each excluded one, and applies the move with the lowest AIC if it beats
/// the current model. Ties go to the term whose name sorts first.
pub fn stepwise_aic(table: &FactorTable, response: &ResponseSpec, candidates: &[String]) -> Result<LinearModelFit> {
    let mut included: Vec<String> = candidates.to_vec();
    let mut current = ols_fit(table, response, &included)?;
    let mut current_aic = aic(&current)?;

    let mut order: Vec<&String> = candidates.iter().collect();
    order.sort();
    order.dedup();

    loop {
        let mut best: Option<(f64, Vec<String>, LinearModelFit)> = None;
        for term in &order {
            let trial: Vec<String> = if included.contains(term) {
                included.iter().filter(|t| t != term).cloned().collect()
            } else {
                // keep candidate order so formulas read consistently
                candidates.iter().filter(|t| included.contains(t) || t == term).cloned().collect()
            };
            let fit = ols_fit(table, response, &trial)?;
            let a = aic(&fit)?;
            if best.as_ref().is_none_or(|(b, _, _)| a < *b) {
                best = Some((a, trial, fit));
            }
        }
        match best {
            Some((a, trial, fit)) if a < current_aic => {
                included = trial;
                current = fit;
                current_aic = a;
            }
            _ => return Ok(current),
        }
    }
}
