use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{estimate, estimator_stats, values, Batch, EstimatorOptions, EstimatorStats, Method};
use crate::program::StochasticProgram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradRow {
    pub method: Method,
    pub theta: f64,
    pub stats: EstimatorStats,
}

/// One row of gradient statistics per method at a fixed parameter value.
pub fn grad_table<P: StochasticProgram + ?Sized>(
    program: &P,
    theta: f64,
    n: usize,
    methods: &[Method],
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<Vec<GradRow>> {
    let batch = Batch::new(seed, n);
    methods
        .iter()
        .map(|&method| {
            let samples = estimate(method, program, theta, batch, opts)?;
            Ok(GradRow { method, theta, stats: estimator_stats(&values(&samples))? })
        })
        .collect()
}

/// Checks the expected variance ordering of a gradient table holding all
/// four methods: `std(numeric) > std(score) > std(score-baseline)`,
/// `std(stochad) <= 2 * std(score-baseline)`, and every pair of means within
/// three combined standard errors. Returns the violated conditions.
pub fn ordering_violations(rows: &[GradRow]) -> Vec<String> {
    let find = |m: Method| rows.iter().find(|r| r.method == m).map(|r| r.stats);
    let (Some(num), Some(score), Some(base), Some(ad)) =
        (find(Method::Numeric), find(Method::Score), find(Method::ScoreBaseline), find(Method::StochAd))
    else {
        return vec!["table must contain all four methods".to_string()];
    };
    let mut out = Vec::new();
    if !(num.std > score.std) {
        out.push(format!("std(numeric) {:.4} <= std(score) {:.4}", num.std, score.std));
    }
    if !(score.std > base.std) {
        out.push(format!("std(score) {:.4} <= std(score-baseline) {:.4}", score.std, base.std));
    }
    if !(ad.std <= 2.0 * base.std) {
        out.push(format!("std(stochad) {:.4} > 2 * std(score-baseline) {:.4}", ad.std, base.std));
    }
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            let se = a.stats.sem().hypot(b.stats.sem());
            let gap = (a.stats.mean - b.stats.mean).abs();
            if !(gap <= 3.0 * se) {
                out.push(format!(
                    "means of {} and {} differ by {gap:.4} > 3 * {se:.4}",
                    a.method, b.method
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: Method, mean: f64, std: f64) -> GradRow {
        let stats = EstimatorStats { mean, std, q25: mean, q50: mean, q75: mean, n: 100 };
        GradRow { method, theta: 2.5, stats }
    }

    #[test]
    fn ordering_accepts_a_well_ordered_table() {
        let rows = [
            row(Method::Numeric, 3.0, 100.0),
            row(Method::Score, 2.0, 20.0),
            row(Method::ScoreBaseline, 2.5, 5.0),
            row(Method::StochAd, 2.4, 8.0),
        ];
        assert!(ordering_violations(&rows).is_empty());
    }

    #[test]
    fn ordering_reports_each_problem() {
        let rows = [
            row(Method::Numeric, 3.0, 10.0),
            row(Method::Score, 2.0, 20.0),
            row(Method::ScoreBaseline, 2.5, 5.0),
            row(Method::StochAd, 9.0, 11.0),
        ];
        let v = ordering_violations(&rows);
        assert!(v.iter().any(|s| s.starts_with("std(numeric)")));
        assert!(v.iter().any(|s| s.starts_with("std(stochad)")));
        assert!(v.iter().any(|s| s.contains("stochad") && s.starts_with("means")));
        assert_eq!(ordering_violations(&rows[..3]).len(), 1);
    }
}
