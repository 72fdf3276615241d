use bdabench_perfmodel::{aic, anova, f_pvalue, ols_fit, stepwise_aic, FactorTable, LinearModelFit, ResponseSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

const LEVELS: [&str; 3] = ["a", "b", "c"];

/// n rows, four factors: two numeric, two categorical (3 and 2 levels).
fn random_table(seed: u64, n: usize) -> (FactorTable, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let x2: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    // every level appears: cycle first, then shuffle-free random tail
    let f1: Vec<&str> = (0..n).map(|i| if i < 3 { LEVELS[i] } else { LEVELS[rng.random_range(0..3)] }).collect();
    let f2: Vec<&str> = (0..n).map(|i| if i < 2 { LEVELS[i] } else { LEVELS[rng.random_range(0..2)] }).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let lvl = match f1[i] {
                "a" => 0.0,
                "b" => 1.0,
                _ => -0.5,
            };
            let noise: f64 = StandardNormal.sample(&mut rng);
            2.0 + 0.3 * x1[i] - 0.7 * x2[i] + lvl + noise
        })
        .collect();
    let mut t = FactorTable::new();
    t.push_numeric("y", y).unwrap();
    t.push_numeric("x1", x1).unwrap();
    t.push_numeric("x2", x2).unwrap();
    t.push_categorical("f1", f1).unwrap();
    t.push_categorical("f2", f2).unwrap();
    (t, vec!["x1".into(), "x2".into(), "f1".into(), "f2".into()])
}

/// Explicit design matrix rows for the oracle, built independently of the
/// library's coding helpers.
fn oracle_design(t: &FactorTable, terms: &[String]) -> Vec<Vec<f64>> {
    use bdabench_perfmodel::ColumnData;
    let n = t.nrows();
    let mut rows = vec![vec![1.0]; n];
    for term in terms {
        match &t.column(term).unwrap().data {
            ColumnData::Numeric(v) => rows.iter_mut().zip(v).for_each(|(r, x)| r.push(*x)),
            ColumnData::Categorical(v) => {
                let mut levels: Vec<&String> = v.iter().collect();
                levels.sort();
                levels.dedup();
                for lvl in &levels[1..] {
                    rows.iter_mut().zip(v).for_each(|(r, x)| r.push(if x == *lvl { 1.0 } else { 0.0 }));
                }
            }
        }
    }
    rows
}

/// Solves XᵀX b = Xᵀy with Gaussian elimination and partial pivoting.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, yi) in x.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

fn oracle_rss(t: &FactorTable, terms: &[String]) -> f64 {
    let y = ResponseSpec::raw("y").values(t).unwrap();
    let x = oracle_design(t, terms);
    let b = normal_equations(&x, &y);
    x.iter()
        .zip(&y)
        .map(|(row, yi)| {
            let fitted: f64 = row.iter().zip(&b).map(|(a, c)| a * c).sum();
            (yi - fitted).powi(2)
        })
        .sum()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn ols_matches_normal_equations_on_random_tables() {
    for seed in 0..50 {
        let (t, terms) = random_table(seed, 60);
        let fit = ols_fit(&t, &ResponseSpec::raw("y"), &terms).unwrap();
        let y = ResponseSpec::raw("y").values(&t).unwrap();
        let want = normal_equations(&oracle_design(&t, &terms), &y);
        assert_eq!(fit.coefficients.len(), want.len());
        for (got, want) in fit.coefficients.iter().zip(&want) {
            assert!(rel_close(*got, *want, 1e-8), "seed {seed}: {got} vs {want}");
        }
    }
}

#[test]
fn anova_matches_drop_one_refits() {
    for seed in 0..50 {
        let (t, terms) = random_table(seed, 60);
        let fit = ols_fit(&t, &ResponseSpec::raw("y"), &terms).unwrap();
        let full_rss = oracle_rss(&t, &terms);
        assert!(rel_close(fit.rss, full_rss, 1e-8));
        let tab = anova(&fit, &t).unwrap();
        for row in &tab.rows {
            let reduced: Vec<String> = terms.iter().filter(|x| **x != row.term).cloned().collect();
            let want = oracle_rss(&t, &reduced) - full_rss;
            assert!(rel_close(row.sum_sq, want, 1e-8), "seed {seed} term {}: {} vs {want}", row.term, row.sum_sq);
            let f = (want / row.df as f64) / (full_rss / tab.residual_df as f64);
            assert!(rel_close(row.f_value, f, 1e-8));
        }
        assert_eq!(tab.residual_df, 60 - 1 - 1 - 1 - 2 - 1);
    }
}

#[test]
fn residuals_are_orthogonal_to_design() {
    for seed in 100..110 {
        let (t, terms) = random_table(seed, 60);
        let fit = ols_fit(&t, &ResponseSpec::raw("y"), &terms).unwrap();
        let x = oracle_design(&t, &terms);
        let rnorm = fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
        for j in 0..x[0].len() {
            let col_norm = x.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
            let dot: f64 = x.iter().zip(&fit.residuals).map(|(r, e)| r[j] * e).sum();
            assert!(dot.abs() < 1e-8 * col_norm * rnorm, "seed {seed} col {j}: {dot}");
        }
    }
}

#[test]
fn aic_matches_reimplemented_formula() {
    let (t, terms) = random_table(7, 40);
    let fit = ols_fit(&t, &ResponseSpec::raw("y"), &terms).unwrap();
    let n = 40.0_f64;
    let k = fit.coefficients.len() as f64;
    let want = n * (oracle_rss(&t, &terms) / n).ln() + 2.0 * (k + 1.0);
    assert!((aic(&fit).unwrap() - want).abs() < 1e-9);
}

#[test]
fn f_pvalue_matches_statrs() {
    for &(f, d1, d2) in
        &[(0.3, 1, 1), (1.7, 2, 30), (36.91, 1, 30), (107.78, 2, 30), (12.56, 1, 162), (4.0, 5, 12), (0.9, 20, 7)]
    {
        let want = 1.0 - FisherSnedecor::new(d1 as f64, d2 as f64).unwrap().cdf(f);
        let got = f_pvalue(f, d1, d2).unwrap();
        // statrs' own accuracy bounds the comparison for tiny tails
        assert!((got - want).abs() < 1e-10, "F({d1},{d2}) at {f}: {got} vs {want}");
    }
}

#[test]
fn intel_table_shape() {
    // 34 observations; size numeric (df 1), workload with three levels (df 2)
    let mut rng = ChaCha8Rng::seed_from_u64(2018);
    let workloads = ["PCA", "KMEANS", "SVM"];
    let w: Vec<&str> = (0..34).map(|i| workloads[i % 3]).collect();
    let size: Vec<f64> = (0..34).map(|i| if i % 2 == 0 { 8.0 } else { 32.0 }).collect();
    let perf: Vec<f64> = (0..34)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            (0.5 + 0.05 * size[i] + [0.0, 1.0, -1.5][i % 3] + 0.3 * e).exp()
        })
        .collect();
    let mut t = FactorTable::new();
    t.push_numeric("throughput", perf).unwrap();
    t.push_numeric("size", size).unwrap();
    t.push_categorical("workload", w).unwrap();
    let fit = ols_fit(&t, &ResponseSpec::parse("log-throughput"), &["size".into(), "workload".into()]).unwrap();
    let tab = anova(&fit, &t).unwrap();
    let dfs: Vec<usize> = tab.rows.iter().map(|r| r.df).collect();
    assert_eq!(dfs, vec![1, 2]);
    assert_eq!(tab.residual_df, 30);
}

/// y depends on `workload` only; three two-level nuisance factors.
fn planted_table(rng: &mut ChaCha8Rng, n: usize, effect: bool) -> FactorTable {
    let workloads = ["KMEANS", "PCA", "SVM"];
    let w: Vec<&str> = (0..n).map(|i| workloads[i % 3]).collect();
    let mut t = FactorTable::new();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(rng);
            let mu = if effect { [0.0, 1.5, 3.0][i % 3] } else { 0.0 };
            mu + e
        })
        .collect();
    t.push_numeric("y", y).unwrap();
    t.push_categorical("workload", w).unwrap();
    for name in ["architecture", "library", "version"] {
        let col: Vec<&str> =
            (0..n).map(|i| if i < 2 { ["x", "y"][i] } else { ["x", "y"][rng.random_range(0..2)] }).collect();
        t.push_categorical(name, col).unwrap();
    }
    t
}

fn candidates() -> Vec<String> {
    ["architecture", "library", "version", "workload"].iter().map(|s| s.to_string()).collect()
}

#[test]
fn stepwise_keeps_planted_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let mut contains = 0;
    let mut exact = 0;
    for _ in 0..100 {
        let t = planted_table(&mut rng, 60, true);
        let full = ols_fit(&t, &ResponseSpec::raw("y"), &candidates()).unwrap();
        let fit = stepwise_aic(&t, &ResponseSpec::raw("y"), &candidates()).unwrap();
        assert!(aic(&fit).unwrap() <= aic(&full).unwrap());
        contains += fit.terms.iter().any(|x| x == "workload") as usize;
        exact += (fit.terms == ["workload"]) as usize;
    }
    println!("planted factor retained in {contains}/100, exact model in {exact}/100");
    assert!(contains >= 95);
}

#[test]
fn stepwise_prefers_intercept_under_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut empty = 0;
    for _ in 0..100 {
        let t = planted_table(&mut rng, 60, false);
        let nuisance: Vec<String> = candidates().into_iter().filter(|c| c != "workload").collect();
        let fit = stepwise_aic(&t, &ResponseSpec::raw("y"), &nuisance).unwrap();
        empty += fit.terms.is_empty() as usize;
    }
    println!("intercept-only selected in {empty}/100");
    assert!(empty > 50);
}

fn fit_rescaled(t: &FactorTable, scale: f64) -> (FactorTable, LinearModelFit) {
    let y = ResponseSpec::raw("y").values(t).unwrap();
    let mut t2 = FactorTable::new();
    t2.push_numeric("y", y.iter().map(|v| v * scale).collect()).unwrap();
    for c in t.columns().iter().filter(|c| c.name != "y") {
        match &c.data {
            bdabench_perfmodel::ColumnData::Numeric(v) => t2.push_numeric(c.name.clone(), v.clone()).unwrap(),
            bdabench_perfmodel::ColumnData::Categorical(v) => t2.push_categorical(c.name.clone(), v.clone()).unwrap(),
        }
    }
    let terms = ["x1", "x2", "f1", "f2"].map(String::from);
    let fit = ols_fit(&t2, &ResponseSpec::raw("y"), &terms).unwrap();
    (t2, fit)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 32,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn anova_scales_with_response(seed in 0u64..1000, scale in 0.01f64..100.0) {
        let (t, _) = random_table(seed, 30);
        let (t1, f1) = fit_rescaled(&t, 1.0);
        let (t2, f2) = fit_rescaled(&t, scale);
        let a1 = anova(&f1, &t1).unwrap();
        let a2 = anova(&f2, &t2).unwrap();
        for (r1, r2) in a1.rows.iter().zip(&a2.rows) {
            prop_assert!(rel_close(r2.sum_sq, r1.sum_sq * scale * scale, 1e-8));
            prop_assert!(rel_close(r2.f_value, r1.f_value, 1e-8));
            prop_assert!((r2.p_value - r1.p_value).abs() < 1e-10);
        }
    }

    #[test]
    fn f_pvalue_decreases_in_f(a in 0.0f64..50.0, b in 0.0f64..50.0, d1 in 1usize..40, d2 in 1usize..200) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(f_pvalue(lo, d1, d2).unwrap() >= f_pvalue(hi, d1, d2).unwrap());
    }
}
