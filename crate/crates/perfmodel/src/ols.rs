use crate::error::{ModelError, Result};
use crate::table::{term_columns, FactorTable, ResponseSpec};

/// Relative column norm below which a design column is considered aliased.
const ALIAS_TOL: f64 = 1e-10;

/// An ordinary-least-squares fit with an intercept plus the listed terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelFit {
    pub response: ResponseSpec,
    /// Included terms, in the order they were requested.
    pub terms: Vec<String>,
    /// Degrees of freedom contributed by each entry of `terms`.
    pub term_df: Vec<usize>,
    /// Coefficient labels; the first is `(Intercept)`.
    pub coef_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub df_resid: usize,
    pub n: usize,
}

impl LinearModelFit {
    /// Number of estimated regression coefficients, intercept included.
    pub fn n_coef(&self) -> usize {
        self.coefficients.len()
    }

    pub fn formula(&self) -> String {
        let rhs = if self.terms.is_empty() { "1".to_owned() } else { self.terms.join(" + ") };
        format!("{} ~ {}", self.response.label(), rhs)
    }
}

/// Dense column-major design matrix plus the owning term of each column.
pub(crate) struct Design {
    pub columns: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub owner: Vec<Option<usize>>,
    pub term_df: Vec<usize>,
}

pub(crate) fn build_design(table: &FactorTable, terms: &[String]) -> Result<Design> {
    let n = table.nrows();
    let mut d = Design {
        columns: vec![vec![1.0; n]],
        names: vec!["(Intercept)".to_owned()],
        owner: vec![None],
        term_df: Vec::with_capacity(terms.len()),
    };
    for (ti, term) in terms.iter().enumerate() {
        if terms[..ti].contains(term) {
            return Err(ModelError::Argument(format!("term `{term}` listed twice")));
        }
        let tc = term_columns(table, term)?;
        if tc.columns.is_empty() {
            // a single-level factor is indistinguishable from the intercept
            return Err(ModelError::RankDeficient { term: term.clone() });
        }
        d.term_df.push(tc.columns.len());
        for (name, col) in tc.names.into_iter().zip(tc.columns) {
            d.columns.push(col);
            d.names.push(name);
            d.owner.push(Some(ti));
        }
    }
    Ok(d)
}

/// Least-squares solve by Householder QR. Returns the coefficient vector,
/// or the index of the first column found to be linearly dependent.
pub(crate) fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> std::result::Result<Vec<f64>, usize> {
    let n = y.len();
    let p = columns.len();
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qty = y.to_vec();
    let orig_norm: Vec<f64> = a.iter().map(|c| norm(c)).collect();

    for j in 0..p {
        let tail_norm = norm(&a[j][j..]);
        if j >= n || tail_norm <= ALIAS_TOL * orig_norm[j].max(f64::MIN_POSITIVE) {
            return Err(j);
        }
        // Householder vector v = x + sign(x0)|x| e0, applied as I - 2vv'/v'v
        let alpha = if a[j][j] >= 0.0 { -tail_norm } else { tail_norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm2;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        };
        for col in a.iter_mut().skip(j) {
            reflect(&mut col[j..]);
        }
        reflect(&mut qty[j..]);
    }
    // back substitution on the upper triangle R (a[col][row])
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for k in i + 1..p {
            s -= a[k][i] * beta[k];
        }
        beta[i] = s / a[i][i];
    }
    Ok(beta)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fits `response ~ 1 + terms` by least squares.
pub fn ols_fit(table: &FactorTable, response: &ResponseSpec, terms: &[String]) -> Result<LinearModelFit> {
    let y = response.values(table)?;
    let design = build_design(table, terms)?;
    let n = y.len();
    let p = design.columns.len();
    if n <= p {
        return Err(ModelError::Argument(format!(
            "{n} observations cannot support {p} coefficients with positive residual df"
        )));
    }
    let beta = least_squares(&design.columns, &y).map_err(|j| match design.owner[j] {
        Some(t) => ModelError::RankDeficient { term: terms[t].clone() },
        None => ModelError::RankDeficient { term: "(Intercept)".to_owned() },
    })?;
    let residuals: Vec<f64> =
        (0..n).map(|i| y[i] - design.columns.iter().zip(&beta).map(|(c, b)| c[i] * b).sum::<f64>()).collect();
    let rss = residuals.iter().map(|r| r * r).sum();
    Ok(LinearModelFit {
        response: response.clone(),
        terms: terms.to_vec(),
        term_df: design.term_df,
        coef_names: design.names,
        coefficients: beta,
        residuals,
        rss,
        df_resid: n - p,
        n,
    })
}
