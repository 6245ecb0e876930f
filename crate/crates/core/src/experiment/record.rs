use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ExperimentError;

pub const CSV_HEADER: &str = "experiment,seed,trial,method,L,N,K,T,metric_kind,metric_value,wall_s";

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub seed: u64,
    pub trial: u64,
    pub method: String,
    pub num_irs: usize,
    pub n: usize,
    /// Phase levels, `4` or `4/6` when they differ per IRS.
    pub k: String,
    /// Samples per IRS (budget for joint methods, 0 for methods that do not
    /// sample).
    pub t: usize,
    /// `boost_linear`, `power_watts`, `satisfied`, `deviation_rad`,
    /// `match_fraction`.
    pub metric_kind: String,
    pub metric_value: f64,
    pub wall_s: Option<f64>,
}

impl RunRecord {
    pub fn csv_line(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},",
            self.experiment,
            self.seed,
            self.trial,
            self.method,
            self.num_irs,
            self.n,
            self.k,
            self.t,
            self.metric_kind,
            self.metric_value
        )
        .expect("writing to a string");
        if let Some(w) = self.wall_s {
            write!(s, "{w:.6}").expect("writing to a string");
        }
        s
    }
}

/// Stable sort by trial, method, then `N`.
pub fn sort_records(rows: &mut [RunRecord]) {
    rows.sort_by(|a, b| (a.trial, &a.method, a.n).cmp(&(b.trial, &b.method, b.n)));
}

/// Header, rows and `#`-prefixed summary lines.
pub fn render_csv(rows: &[RunRecord], summary: &[String]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    for line in summary {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Parses rows written by [`render_csv`], skipping the header and comments.
pub fn parse_csv(text: &str) -> Result<Vec<RunRecord>, ExperimentError> {
    let bad = |i: usize, m: &str| ExperimentError::Config(format!("csv line {}: {m}", i + 1));
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') || line == CSV_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(bad(i, "expected 11 fields"));
        }
        let num = |j: usize| f[j].parse::<u64>().map_err(|_| bad(i, "bad integer"));
        rows.push(RunRecord {
            experiment: f[0].to_string(),
            seed: num(1)?,
            trial: num(2)?,
            method: f[3].to_string(),
            num_irs: num(4)? as usize,
            n: num(5)? as usize,
            k: f[6].to_string(),
            t: num(7)? as usize,
            metric_kind: f[8].to_string(),
            metric_value: f[9].parse().map_err(|_| bad(i, "bad metric value"))?,
            wall_s: match f[10] {
                "" => None,
                w => Some(w.parse().map_err(|_| bad(i, "bad wall time"))?),
            },
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line through `(log10 N, log10 value)`.
pub fn fit_loglog_slope(points: &[(usize, f64)]) -> Result<SlopeFit, ExperimentError> {
    if let Some(&(n, v)) = points.iter().find(|(n, v)| !(*v > 0.0 && v.is_finite()) || *n == 0) {
        return Err(ExperimentError::Fit(format!("nonpositive point (N = {n}, value = {v})")));
    }
    let mut distinct: Vec<usize> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(ExperimentError::Fit(format!("need at least 3 distinct N, got {}", distinct.len())));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        points: points.len(),
    })
}

/// Slope fit over the rows of one method.
pub fn fit_rows(rows: &[RunRecord], method: &str) -> Result<SlopeFit, ExperimentError> {
    let pts: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.method == method)
        .map(|r| (r.n, r.metric_value))
        .collect();
    fit_loglog_slope(&pts)
}

/// Wilson score interval for `successes / trials` at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}
