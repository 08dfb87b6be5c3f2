use super::{BenchError, Metric, MetricsReport, Result};
use std::collections::{BTreeMap, BTreeSet};

/// Per-category metric ranks, their mean `r` and the cross-category mean
/// `arc` for every method.
#[derive(Clone, Debug, PartialEq)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub categories: Vec<String>,
    /// `(method, category)` -> rank per metric, in [`Metric::ALL`] order.
    pub ranks: BTreeMap<(String, String), [f64; 8]>,
    pub r: BTreeMap<(String, String), f64>,
    pub arc: BTreeMap<String, f64>,
}

impl RankTable {
    pub fn rank(&self, method: &str, category: &str, metric: Metric) -> Option<f64> {
        let idx = Metric::ALL.iter().position(|&m| m == metric)?;
        self.ranks
            .get(&(method.to_string(), category.to_string()))
            .map(|r| r[idx])
    }

    pub fn r_of(&self, method: &str, category: &str) -> Option<f64> {
        self.r
            .get(&(method.to_string(), category.to_string()))
            .copied()
    }
}

/// 1-based ranks with ties sharing the mean of the positions they span.
pub fn mean_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let key = |i: usize| {
        if higher_is_better {
            -values[i]
        } else {
            values[i]
        }
    };
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && key(order[end]) == key(order[start]) {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

pub fn rank_methods(reports: &[MetricsReport]) -> Result<RankTable> {
    let methods: BTreeSet<&str> = reports.iter().map(|r| r.method.as_str()).collect();
    let categories: BTreeSet<&str> = reports.iter().map(|r| r.category.as_str()).collect();
    let mut grid: BTreeMap<(&str, &str), &MetricsReport> = BTreeMap::new();
    for r in reports {
        if grid.insert((&r.method, &r.category), r).is_some() {
            return Err(BenchError::Ragged(format!(
                "duplicate report for {} / {}",
                r.method, r.category
            )));
        }
    }
    if grid.len() != methods.len() * categories.len() {
        for m in &methods {
            for c in &categories {
                if !grid.contains_key(&(*m, *c)) {
                    return Err(BenchError::Ragged(format!("no report for {m} / {c}")));
                }
            }
        }
    }

    let mut table = RankTable {
        methods: methods.iter().map(|s| s.to_string()).collect(),
        categories: categories.iter().map(|s| s.to_string()).collect(),
        ranks: BTreeMap::new(),
        r: BTreeMap::new(),
        arc: BTreeMap::new(),
    };
    for c in &categories {
        let rows: Vec<&MetricsReport> = methods.iter().map(|m| grid[&(*m, *c)]).collect();
        let mut per_method = vec![[0.0; 8]; rows.len()];
        for (k, metric) in Metric::ALL.into_iter().enumerate() {
            let values: Vec<f64> = rows.iter().map(|r| r.get(metric)).collect();
            for (i, rank) in mean_ranks(&values, metric.higher_is_better())
                .into_iter()
                .enumerate()
            {
                per_method[i][k] = rank;
            }
        }
        for (m, ranks) in methods.iter().zip(per_method) {
            let key = (m.to_string(), c.to_string());
            table.r.insert(key.clone(), ranks.iter().sum::<f64>() / 8.0);
            table.ranks.insert(key, ranks);
        }
    }
    for m in &methods {
        let total: f64 = categories
            .iter()
            .map(|c| table.r[&(m.to_string(), c.to_string())])
            .sum();
        table
            .arc
            .insert(m.to_string(), total / categories.len() as f64);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::super::{compute_metrics, ConfusionCounts};
    use super::*;

    fn report(method: &str, category: &str, c: ConfusionCounts) -> MetricsReport {
        compute_metrics(&c).with_labels(method, category)
    }

    #[test]
    fn dominant_method_ranks_first() {
        let good = ConfusionCounts {
            tp: 90,
            tn: 90,
            fp: 5,
            fn_: 10,
        };
        let bad = ConfusionCounts {
            tp: 50,
            tn: 80,
            fp: 15,
            fn_: 50,
        };
        let t = rank_methods(&[report("a", "x", good), report("b", "x", bad)]).unwrap();
        assert_eq!(t.r_of("a", "x"), Some(1.0));
        assert_eq!(t.r_of("b", "x"), Some(2.0));
        assert_eq!(t.arc["a"], 1.0);
    }

    #[test]
    fn identical_reports_tie() {
        let c = ConfusionCounts {
            tp: 3,
            tn: 4,
            fp: 1,
            fn_: 2,
        };
        let t = rank_methods(&[report("a", "x", c), report("b", "x", c)]).unwrap();
        assert!(t.ranks.values().all(|r| r.iter().all(|&v| v == 1.5)));
    }

    #[test]
    fn ragged_rejected() {
        let c = ConfusionCounts {
            tp: 3,
            tn: 4,
            fp: 1,
            fn_: 2,
        };
        let err = rank_methods(&[
            report("a", "x", c),
            report("b", "x", c),
            report("a", "y", c),
        ]);
        assert!(matches!(err, Err(BenchError::Ragged(_))));
        let dup = rank_methods(&[report("a", "x", c), report("a", "x", c)]);
        assert!(matches!(dup, Err(BenchError::Ragged(_))));
    }

    #[test]
    fn mean_ranks_ties() {
        assert_eq!(
            mean_ranks(&[0.5, 0.9, 0.5, 0.1], true),
            vec![2.5, 1.0, 2.5, 4.0]
        );
        assert_eq!(
            mean_ranks(&[0.5, 0.9, 0.5, 0.1], false),
            vec![2.5, 4.0, 2.5, 1.0]
        );
    }
}
