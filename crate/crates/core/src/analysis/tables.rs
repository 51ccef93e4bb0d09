//! Aggregation of a trajectory store into success tables, quartile curves and
//! worst-case hitting times, and their CSV export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::estimators::{first_hitting_time, gap_at, max_first_hitting_time, MaxHittingTime};
use super::quantiles::{quantile_curves, QuantileCurve};
use super::registry::ReferenceRegistry;
use super::wilcoxon::{significance_matrix, wilcoxon_signed_rank, Alternative};
use crate::error::{Error, Result};
use crate::runner::{RunRecord, RunStatus};
use crate::solvers::Trajectory;

/// Default quality levels, from coarse to exact.
pub const DEFAULT_ALPHAS: [f64; 11] = [
    0.5, 0.1, 0.05, 0.01, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5, 0.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub alphas: Vec<f64>,
    /// Explicit curve grid; when absent a log grid up to the cutoff is used.
    pub time_grid_ms: Option<Vec<u64>>,
    pub time_points: usize,
    pub time_min_ms: u64,
    /// Budgets for the success table; empty means the cutoff only.
    pub checkpoints_ms: Vec<u64>,
    /// Instance groups to include; empty means all.
    pub groups: Vec<String>,
    pub level: f64,
    pub alternative: Alternative,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alphas: DEFAULT_ALPHAS.to_vec(),
            time_grid_ms: None,
            time_points: 100,
            time_min_ms: 10,
            checkpoints_ms: Vec::new(),
            groups: Vec::new(),
            level: 0.05,
            alternative: Alternative::Greater,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.alphas.is_empty() {
            return bad("alpha grid is empty".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return bad(format!("alpha {a} is not a finite nonnegative number"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("significance level {} outside (0, 1)", self.level));
        }
        match &self.time_grid_ms {
            Some(g) if g.is_empty() || g.windows(2).any(|w| w[0] >= w[1]) => {
                bad("time grid must be non-empty and strictly ascending".into())
            }
            None if self.time_points < 2 || self.time_min_ms == 0 => {
                bad("log time grid needs at least 2 points and a positive start".into())
            }
            _ => Ok(()),
        }
    }

    fn grid(&self, cutoff_ms: u64) -> Result<Vec<u64>> {
        match &self.time_grid_ms {
            Some(g) => {
                if let Some(&t) = g.iter().find(|&&t| t > cutoff_ms) {
                    return Err(Error::OutOfRange {
                        requested_ms: t,
                        cutoff_ms,
                    });
                }
                Ok(g.clone())
            }
            None => Ok(log_time_grid(self.time_min_ms, cutoff_ms, self.time_points)),
        }
    }
}

/// About `points` log-spaced integer times from `min_ms` to `max_ms`.
///
/// Values that collide after rounding are merged, so the result is strictly
/// ascending and may be shorter. It always ends at `max_ms`.
pub fn log_time_grid(min_ms: u64, max_ms: u64, points: usize) -> Vec<u64> {
    if max_ms <= min_ms || points < 2 {
        return vec![max_ms];
    }
    let ratio = (max_ms as f64 / min_ms as f64).ln();
    let mut grid: Vec<u64> = (0..points)
        .map(|i| (min_ms as f64 * (ratio * i as f64 / (points - 1) as f64).exp()).round() as u64)
        .collect();
    *grid.last_mut().expect("points >= 2") = max_ms;
    grid.dedup();
    grid
}

/// Fraction of `runs` that reached `(1 + alpha) * reference` by each grid time.
pub fn success_curve(
    runs: &[Trajectory],
    alpha: f64,
    reference: f64,
    grid: &[u64],
) -> Result<Vec<f64>> {
    if runs.is_empty() {
        return Err(Error::InvalidInput(
            "success curve of an empty run set".into(),
        ));
    }
    let cutoff = runs.iter().map(|r| r.cutoff_ms).min().expect("non-empty");
    if let Some(&t) = grid.iter().find(|&&t| t > cutoff) {
        return Err(Error::OutOfRange {
            requested_ms: t,
            cutoff_ms: cutoff,
        });
    }
    let mut hits = runs
        .iter()
        .map(|r| first_hitting_time(r, alpha, reference))
        .collect::<Result<Vec<_>>>()?;
    hits.sort_unstable_by_key(|h| h.unwrap_or(u64::MAX));
    let m = runs.len() as f64;
    Ok(grid
        .iter()
        .map(|&t| hits.iter().filter(|h| h.is_some_and(|x| x <= t)).count() as f64 / m)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub group: String,
    pub n: usize,
    pub alpha: f64,
    pub t_ms: u64,
    pub solver: String,
    /// Worst relative gap at `t_ms` over instances and runs.
    pub max_gap: f64,
    pub mean: f64,
    /// Sample standard deviation of the per-instance probabilities.
    pub std: f64,
    /// Solvers this one beats significantly.
    pub marks: Vec<String>,
    /// Per-instance probabilities in instance-id order.
    pub per_instance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingRow {
    pub group: String,
    pub n: usize,
    pub solver: String,
    pub alpha: f64,
    pub max_fht: MaxHittingTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub group: String,
    pub n: usize,
    pub curves: Vec<QuantileCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub registry_revision: u64,
    pub success: Vec<SuccessRow>,
    pub curves: Vec<CurveSet>,
    pub hitting: Vec<HittingRow>,
}

/// Runs per instance, per solver, per (group, n) cell, all in key order.
type Cells = BTreeMap<(String, usize), BTreeMap<String, BTreeMap<String, Vec<Trajectory>>>>;

fn sample_std(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Significance marks under the configured sidedness.
///
/// For the two-sided alternative a mark still needs the winner's values to be
/// larger in total, so marks never point both ways.
fn marks_for(
    per_solver: &BTreeMap<String, Vec<f64>>,
    cfg: &AnalysisConfig,
) -> Result<BTreeMap<String, Vec<String>>> {
    match cfg.alternative {
        Alternative::Greater => significance_matrix(per_solver, cfg.level),
        Alternative::TwoSided => {
            let mut out = BTreeMap::new();
            for (s, xs) in per_solver {
                let mut beaten = Vec::new();
                for (x, ys) in per_solver {
                    if x != s
                        && xs.iter().sum::<f64>() > ys.iter().sum::<f64>()
                        && wilcoxon_signed_rank(xs, ys, Alternative::TwoSided)?.p_value < cfg.level
                    {
                        beaten.push(x.clone());
                    }
                }
                out.insert(s.clone(), beaten);
            }
            Ok(out)
        }
    }
}

/// Computes every table of the report. Crashed runs are left out.
pub fn analyze(
    records: &[RunRecord],
    registry: &ReferenceRegistry,
    cfg: &AnalysisConfig,
) -> Result<AnalysisReport> {
    cfg.validate()?;
    let wanted: BTreeSet<&str> = cfg.groups.iter().map(String::as_str).collect();
    let mut cells: Cells = BTreeMap::new();
    let mut crashed = 0;
    for r in records {
        if !wanted.is_empty() && !wanted.contains(r.group.as_str()) {
            continue;
        }
        if r.status != RunStatus::Completed {
            crashed += 1;
            continue;
        }
        cells
            .entry((r.group.as_str().to_owned(), r.n))
            .or_default()
            .entry(r.solver.clone())
            .or_default()
            .entry(r.instance.clone())
            .or_default()
            .push(r.trajectory());
    }
    if crashed > 0 {
        log::warn!("{crashed} crashed runs excluded from analysis");
    }
    if cells.is_empty() {
        return Err(Error::InvalidInput("no completed runs to analyze".into()));
    }
    registry.require(
        cells
            .values()
            .flat_map(|s| s.values())
            .flat_map(|i| i.keys())
            .map(String::as_str),
    )?;

    let mut report = AnalysisReport {
        registry_revision: registry.revision(),
        success: Vec::new(),
        curves: Vec::new(),
        hitting: Vec::new(),
    };
    for ((group, n), solvers) in &cells {
        let instance_set: Vec<&String> = solvers
            .values()
            .next()
            .expect("cell non-empty")
            .keys()
            .collect();
        if let Some((s, _)) = solvers
            .iter()
            .find(|(_, i)| i.keys().ne(instance_set.iter().copied()))
        {
            return Err(Error::InvalidInput(format!(
                "solver `{s}` was run on a different instance set in cell {group}/{n}"
            )));
        }
        let cutoff = solvers
            .values()
            .flat_map(|i| i.values().flatten())
            .map(|t| t.cutoff_ms)
            .min()
            .expect("cell has runs");
        let checkpoints = if cfg.checkpoints_ms.is_empty() {
            vec![cutoff]
        } else {
            cfg.checkpoints_ms.clone()
        };
        if let Some(&t) = checkpoints.iter().find(|&&t| t > cutoff) {
            return Err(Error::OutOfRange {
                requested_ms: t,
                cutoff_ms: cutoff,
            });
        }
        let grid = cfg.grid(cutoff)?;

        for &alpha in &cfg.alphas {
            for &t in &checkpoints {
                let mut per_solver = BTreeMap::new();
                let mut gaps = BTreeMap::new();
                for (s, insts) in solvers {
                    let mut ps = Vec::with_capacity(insts.len());
                    let mut worst = f64::NEG_INFINITY;
                    for (id, runs) in insts {
                        let reference = registry.length(id)?;
                        ps.push(success_curve(runs, alpha, reference, &[t])?[0]);
                        for r in runs {
                            worst = worst.max(gap_at(r, t, reference));
                        }
                    }
                    per_solver.insert(s.clone(), ps);
                    gaps.insert(s.clone(), worst);
                }
                let marks = marks_for(&per_solver, cfg)?;
                for (s, ps) in per_solver {
                    let mean = ps.iter().sum::<f64>() / ps.len() as f64;
                    report.success.push(SuccessRow {
                        group: group.clone(),
                        n: *n,
                        alpha,
                        t_ms: t,
                        max_gap: gaps[&s],
                        mean,
                        std: sample_std(&ps, mean),
                        marks: marks[&s].clone(),
                        solver: s,
                        per_instance: ps,
                    });
                }
            }
        }

        let mut set = CurveSet {
            group: group.clone(),
            n: *n,
            curves: Vec::new(),
        };
        for (s, insts) in solvers {
            for &alpha in &cfg.alphas {
                let per_instance = insts
                    .iter()
                    .map(|(id, runs)| success_curve(runs, alpha, registry.length(id)?, &grid))
                    .collect::<Result<Vec<_>>>()?;
                set.curves
                    .push(quantile_curves(s, alpha, &grid, &per_instance)?);
                let pairs = insts
                    .iter()
                    .flat_map(|(id, runs)| runs.iter().map(move |r| (r, id)))
                    .map(|(r, id)| Ok((r, registry.length(id)?)))
                    .collect::<Result<Vec<_>>>()?;
                report.hitting.push(HittingRow {
                    group: group.clone(),
                    n: *n,
                    solver: s.clone(),
                    alpha,
                    max_fht: max_first_hitting_time(pairs, alpha)?,
                });
            }
        }
        report.curves.push(set);
    }
    Ok(report)
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{x}")
    }
}

/// Writes `success.csv`, `fht.csv` and one `curves_<group>_n<n>.csv` per cell.
///
/// Each file opens with a `#` comment line carrying `provenance`.
pub fn write_csvs(report: &AnalysisReport, dir: &Path, provenance: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let head = format!(
        "# {provenance} registry_revision={}\n",
        report.registry_revision
    );
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };

    let mut s = head.clone() + "group,n,alpha,T,solver,max_gap,mean,std,marks\n";
    for r in &report.success {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.group,
            r.n,
            fmt_f64(r.alpha),
            r.t_ms,
            r.solver,
            fmt_f64(r.max_gap),
            fmt_f64(r.mean),
            fmt_f64(r.std),
            r.marks.join("|")
        );
    }
    put("success.csv".into(), s)?;

    let mut s = head.clone() + "group,n,solver,alpha,max_fht_ms,censored\n";
    for r in &report.hitting {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.group,
            r.n,
            r.solver,
            fmt_f64(r.alpha),
            r.max_fht.value_ms,
            r.max_fht.censored
        );
    }
    put("fht.csv".into(), s)?;

    for set in &report.curves {
        let mut s = head.clone() + "solver,alpha,t_ms,q25,q50,q75\n";
        for c in &set.curves {
            for j in 0..c.times_ms.len() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    c.solver,
                    fmt_f64(c.alpha),
                    c.times_ms[j],
                    fmt_f64(c.q25[j]),
                    fmt_f64(c.q50[j]),
                    fmt_f64(c.q75[j])
                );
            }
        }
        put(format!("curves_{}_n{}.csv", set.group, set.n), s)?;
    }
    Ok(written)
}
