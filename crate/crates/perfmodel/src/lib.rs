//! Statistical models of benchmark throughput: least-squares fits over
//! categorical and numeric factors, stepwise AIC selection over first-order
//! terms, and drop-one ANOVA tables with F tests.

mod anova;
mod dist;
mod error;
mod ols;
mod select;
mod table;

pub use anova::{anova, AnovaRow, AnovaTable};
pub use dist::{f_pvalue, ln_gamma, regularized_incomplete_beta};
pub use error::{ModelError, Result};
pub use ols::{ols_fit, LinearModelFit};
pub use select::{aic, aic_from_parts, stepwise_aic};
pub use table::{Column, ColumnData, FactorTable, ResponseSpec};

use std::fmt::Write;

/// Human-readable summary of a fit: formula, coefficients, then ANOVA.
pub fn render_report(fit: &LinearModelFit, table: &FactorTable) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "Selected model: {}", fit.formula());
    let _ = writeln!(out, "n = {}, residual df = {}, AIC = {:.4}", fit.n, fit.df_resid, aic(fit)?);
    let _ = writeln!(out);
    let w = fit.coef_names.iter().map(String::len).max().unwrap_or(0).max(4);
    let _ = writeln!(out, "{:<w$} {:>14}", "Coef", "Estimate");
    for (name, b) in fit.coef_names.iter().zip(&fit.coefficients) {
        let _ = writeln!(out, "{name:<w$} {b:>14.6}");
    }
    if !fit.terms.is_empty() {
        let _ = writeln!(out);
        let _ = write!(out, "{}", anova(fit, table)?);
    }
    Ok(out)
}
