//! Plain floating-point recomputations used to cross-check the library in reproduce-paper.
//! Nothing here calls into the library's math.

use std::collections::BTreeMap;

pub fn fail_weight(perf: &str) -> f64 {
    perf.chars().filter(|&c| c == 'F').count() as f64 / perf.len() as f64
}

/// `(1/G)(fails_g/N)` normalized over groups; returns the posterior of group `target`.
pub fn uniform_posterior(groups: &[&str], target: usize) -> f64 {
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let w: Vec<f64> =
        groups.iter().map(|g| g.chars().filter(|&c| c == 'F').count() as f64 / n as f64 / groups.len() as f64).collect();
    w[target] / w.iter().sum::<f64>()
}

pub struct CountsTable {
    /// (parent, leaf, pass, fail)
    pub rows: Vec<(String, String, f64, f64)>,
}

pub fn read_counts(text: &str) -> CountsTable {
    let rows = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            (f[0].to_string(), f[1].to_string(), f[2].parse().unwrap_or(f64::NAN), f[3].parse().unwrap_or(f64::NAN))
        })
        .collect();
    CountsTable { rows }
}

impl CountsTable {
    pub fn totals(&self) -> (f64, f64) {
        self.rows.iter().fold((0.0, 0.0), |(p, f), r| (p + r.2, f + r.3))
    }

    /// The published aggregate posterior for `leaf`.
    pub fn paper_posterior(&self, leaf: &str) -> f64 {
        let (pass, fail) = self.totals();
        let grand = pass + fail;
        let mut groups: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for r in &self.rows {
            let e = groups.entry(&r.0).or_default();
            e.0 += r.2 + r.3;
            e.1 += r.3;
        }
        let Some(row) = self.rows.iter().find(|r| r.1 == leaf) else { return f64::NAN };
        let (t_g, f_g) = groups[row.0.as_str()];
        let numerator = t_g / grand * (row.3 / f_g);
        let denominator: f64 = groups.values().map(|(t, f)| t / grand * (f / fail)).sum();
        numerator / denominator
    }
}

pub struct Episodes {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_episodes(text: &str) -> Episodes {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let split = |l: &str| l.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>();
    let header = lines.next().map(split).unwrap_or_default();
    Episodes { header, rows: lines.map(split).collect() }
}

fn entropy(labels: &[&str]) -> f64 {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *freq.entry(l).or_default() += 1;
    }
    let n = labels.len() as f64;
    freq.values().map(|&c| c as f64 / n).map(|p| p * (1.0 / p).log2()).sum()
}

impl Episodes {
    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or(usize::MAX)
    }

    fn labels(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.last().map_or("", String::as_str)).collect()
    }

    pub fn label_entropy(&self) -> f64 {
        entropy(&self.labels())
    }

    pub fn weighted_entropy(&self, attr: &str, value: &str) -> f64 {
        let c = self.col(attr);
        let sub: Vec<&str> =
            self.rows.iter().filter(|r| r.get(c).is_some_and(|v| v == value)).map(|r| r.last().unwrap().as_str()).collect();
        if sub.is_empty() {
            return 0.0;
        }
        sub.len() as f64 / self.rows.len() as f64 * entropy(&sub)
    }

    pub fn info_gain(&self, attr: &str) -> f64 {
        let c = self.col(attr);
        let mut values: Vec<&str> = self.rows.iter().filter_map(|r| r.get(c).map(String::as_str)).collect();
        values.sort_unstable();
        values.dedup();
        self.label_entropy() - values.iter().map(|v| self.weighted_entropy(attr, v)).sum::<f64>()
    }

    /// Correct and incorrect counts for the one-split tree `attr == fail_value → Fail, else Pass`.
    pub fn one_split_accuracy(&self, attr: &str, fail_value: &str) -> (usize, usize) {
        let c = self.col(attr);
        let correct = self
            .rows
            .iter()
            .filter(|r| {
                let predicted = if r[c] == fail_value { "Fail" } else { "Pass" };
                r.last().is_some_and(|l| l == predicted)
            })
            .count();
        (correct, self.rows.len() - correct)
    }
}
