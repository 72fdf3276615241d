use std::fmt;

use crate::dist::f_pvalue;
use crate::error::{ModelError, Result};
use crate::ols::{ols_fit, LinearModelFit};
use crate::table::FactorTable;

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow {
    pub term: String,
    pub sum_sq: f64,
    pub df: usize,
    pub f_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub residual_sum_sq: f64,
    pub residual_df: usize,
}

/// Drop-one ANOVA: each term's sum of squares is the increase in RSS when
/// that term alone is removed from `fit`.
pub fn anova(fit: &LinearModelFit, table: &FactorTable) -> Result<AnovaTable> {
    if fit.terms.is_empty() {
        return Err(ModelError::Argument("ANOVA needs at least one non-intercept term".into()));
    }
    let mse = fit.rss / fit.df_resid as f64;
    let mut rows = Vec::with_capacity(fit.terms.len());
    for (term, &df) in fit.terms.iter().zip(&fit.term_df) {
        let reduced: Vec<String> = fit.terms.iter().filter(|t| *t != term).cloned().collect();
        let sub = ols_fit(table, &fit.response, &reduced)?;
        // RSS can only grow when a term is removed; clamp roundoff
        let sum_sq = (sub.rss - fit.rss).max(0.0);
        let f_value = if mse > 0.0 { (sum_sq / df as f64) / mse } else { f64::INFINITY };
        let p_value = if f_value.is_finite() { f_pvalue(f_value, df, fit.df_resid)? } else { 0.0 };
        rows.push(AnovaRow { term: term.clone(), sum_sq, df, f_value, p_value });
    }
    Ok(AnovaTable { rows, residual_sum_sq: fit.rss, residual_df: fit.df_resid })
}

impl fmt::Display for AnovaTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.rows.iter().map(|r| r.term.len()).chain(std::iter::once("Residuals".len())).max().unwrap_or(0);
        writeln!(f, "{:<w$} {:>12} {:>5} {:>10} {:>8}", "Term", "Sum Sq", "Df", "F value", "Pr(>F)")?;
        for r in &self.rows {
            writeln!(f, "{:<w$} {:>12.2} {:>5} {:>10.2} {:>8.4}", r.term, r.sum_sq, r.df, r.f_value, r.p_value)?;
        }
        writeln!(f, "{:<w$} {:>12.2} {:>5}", "Residuals", self.residual_sum_sq, self.residual_df)
    }
}
