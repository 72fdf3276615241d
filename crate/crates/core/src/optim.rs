//! Derivative-free minimisation with the Nelder–Mead simplex method.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmParams {
    /// Reflection coefficient.
    pub alpha: f64,
    /// Expansion coefficient.
    pub gamma: f64,
    /// Contraction coefficient.
    pub rho: f64,
    /// Shrink coefficient.
    pub sigma: f64,
    /// Displacement of each initial vertex from the start point along one axis.
    pub simplex_step: f64,
}

impl Default for NmParams {
    fn default() -> Self {
        Self { alpha: 1.0, gamma: 2.0, rho: 0.5, sigma: 0.5, simplex_step: 0.1 }
    }
}

impl NmParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.gamma > 1.0
            && self.rho > 0.0
            && self.rho < 1.0
            && self.sigma > 0.0
            && self.sigma < 1.0
            && self.simplex_step != 0.0
            && self.simplex_step.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("invalid Nelder-Mead coefficients {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmOutcome {
    pub x: Vec<f64>,
    pub fval: f64,
    /// Best objective value after each iteration.
    pub best_history: Vec<f64>,
}

// NaN sorts after everything so it is never chosen as best
fn key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Runs exactly `iters` Nelder–Mead iterations from the simplex
/// `{x0, x0 + step * e_i}` and returns the best vertex found.
///
/// One iteration is one simplex update: a reflection, possibly followed by
/// an expansion or a contraction, or a shrink of every vertex toward the
/// best one. Vertices are kept ordered by objective value with ties broken
/// by age, so the best value never increases.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], iters: usize, params: &NmParams) -> Result<NmOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    params.validate()?;
    if iters == 0 {
        return Err(Error::arg("Nelder-Mead needs at least one iteration"));
    }
    let d = x0.len();
    if d == 0 {
        return Err(Error::arg("cannot optimise over an empty vector"));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    for i in 0..=d {
        let mut v = x0.to_vec();
        if i > 0 {
            v[i - 1] += params.simplex_step;
        }
        let fv = f(&v)?;
        if !fv.is_finite() {
            return Err(Error::Numeric(format!("objective is {fv} at initial simplex vertex {i}")));
        }
        simplex.push((v, fv));
    }

    let mut history = Vec::with_capacity(iters);
    for _ in 0..iters {
        // stable sort keeps the older vertex first among equals
        simplex.sort_by(|a, b| key(a.1).total_cmp(&key(b.1)));
        let best = simplex[0].1;
        let second_worst = simplex[d - 1].1;
        let worst = simplex[d].1;

        let mut centroid = vec![0.0; d];
        for (v, _) in &simplex[..d] {
            centroid.iter_mut().zip(v).for_each(|(c, x)| *c += x);
        }
        centroid.iter_mut().for_each(|c| *c /= d as f64);
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            // c + t (from - c)
            centroid.iter().zip(from).map(|(c, x)| c + t * (x - c)).collect()
        };

        let xr = along(-params.alpha, &simplex[d].0);
        let fr = f(&xr)?;
        let mut shrink = false;
        if key(fr) < key(best) {
            let xe = along(-params.alpha * params.gamma, &simplex[d].0);
            let fe = f(&xe)?;
            simplex[d] = if key(fe) < key(fr) { (xe, fe) } else { (xr, fr) };
        } else if key(fr) < key(second_worst) {
            simplex[d] = (xr, fr);
        } else if key(fr) < key(worst) {
            // outside contraction
            let xc = along(params.rho, &xr);
            let fc = f(&xc)?;
            if key(fc) <= key(fr) {
                simplex[d] = (xc, fc);
            } else {
                shrink = true;
            }
        } else {
            // inside contraction
            let xc = along(params.rho, &simplex[d].0);
            let fc = f(&xc)?;
            if key(fc) < key(worst) {
                simplex[d] = (xc, fc);
            } else {
                shrink = true;
            }
        }
        if shrink {
            let x_best = simplex[0].0.clone();
            for (v, fv) in simplex.iter_mut().skip(1) {
                v.iter_mut().zip(&x_best).for_each(|(x, b)| *x = b + params.sigma * (*x - b));
                *fv = f(v)?;
            }
        }
        let current = simplex.iter().map(|(_, fv)| key(*fv)).fold(f64::INFINITY, f64::min);
        history.push(current);
    }
    simplex.sort_by(|a, b| key(a.1).total_cmp(&key(b.1)));
    let (x, fval) = simplex.swap_remove(0);
    Ok(NmOutcome { x, fval, best_history: history })
}
