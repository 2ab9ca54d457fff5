//! Scenario grids. Each cell turns observed effect sizes into test statistics
//! and computes the replication Bayes factor, so tables carry no data-level
//! simulation noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::marginal::{Estimator, MIN_ESS_FRACTION};
use crate::posterior::{FTestStudy, TTestStudy};
use crate::repbf::{
    convert_effect_size, repbf_f_estimators, repbf_t_estimators, EffectSize, EffectSizeKind, RepBfConfig, RepBfResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    TTwoSample,
    FOneway,
}

impl Design {
    pub fn as_str(&self) -> &'static str {
        match self {
            Design::TTwoSample => "t_two_sample",
            Design::FOneway => "f_oneway",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" | "t_two_sample" => Ok(Design::TTwoSample),
            "f" | "f_oneway" => Ok(Design::FOneway),
            _ => domain(format!("unknown design '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Study {
    T(TTestStudy),
    F(FTestStudy),
}

/// The test statistic a study with the given group sizes would report for
/// an observed effect size. t designs take two groups and d (f squared and
/// eta squared are converted, giving a positive d); F designs take any
/// number of groups and f squared.
pub fn statistic_from_effect_size(design: Design, es: EffectSize, group_sizes: &[u64]) -> Result<Study> {
    if let Some(n) = group_sizes.iter().find(|&&n| n < 2) {
        return domain(format!("every group needs at least 2 observations, got {n}"));
    }
    match design {
        Design::TTwoSample => {
            let &[n1, n2] = group_sizes else {
                return domain(format!("a two-sample t design needs 2 groups, got {}", group_sizes.len()));
            };
            let d = convert_effect_size(es, EffectSizeKind::CohensD)?.value;
            let (a, b) = (n1 as f64, n2 as f64);
            let t = d * (a * b / (a + b)).sqrt();
            Ok(Study::T(TTestStudy::new(t, a + b - 2.0, n1, n2)?))
        }
        Design::FOneway => {
            if group_sizes.len() < 2 {
                return domain(format!("a one-way design needs at least 2 groups, got {}", group_sizes.len()));
            }
            let f2 = convert_effect_size(es, EffectSizeKind::CohensF2)?.value;
            let n: u64 = group_sizes.iter().sum();
            let k = group_sizes.len() as f64;
            let (df1, df2) = (k - 1.0, n as f64 - k);
            Ok(Study::F(FTestStudy::new(f2 * df2 / df1, df1, df2, n)?))
        }
    }
}

/// Every combination of the listed values is one cell. Effect sizes are d
/// for t designs and f squared for F designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    pub design: Design,
    pub n_groups: Vec<usize>,
    pub n_orig_per_group: Vec<u64>,
    pub n_rep_per_group: Vec<u64>,
    pub es_orig: Vec<f64>,
    pub es_rep: Vec<f64>,
    pub estimators: Vec<Estimator>,
    /// Drop cells whose replication groups are smaller than the original's.
    pub rep_at_least_orig: bool,
    /// Master seed; cell `i` uses `seed + i`.
    pub seed: u64,
    pub n_draws: usize,
}

impl ScenarioGrid {
    /// F-tests across group counts, sizes and effect sizes.
    pub fn simulation_1() -> Self {
        ScenarioGrid {
            design: Design::FOneway,
            n_groups: vec![2, 3, 4],
            n_orig_per_group: vec![15, 50],
            n_rep_per_group: vec![15, 50, 100],
            es_orig: vec![0.02, 0.15, 0.35],
            es_rep: vec![0.001, 0.02, 0.05, 0.10, 0.15, 0.25, 0.35],
            estimators: vec![Estimator::Quadrature],
            rep_at_least_orig: false,
            seed: 42,
            n_draws: 100_000,
        }
    }

    /// Monte Carlo against importance sampling for t-tests.
    pub fn simulation_2() -> Self {
        ScenarioGrid {
            design: Design::TTwoSample,
            n_groups: vec![2],
            n_orig_per_group: vec![15],
            n_rep_per_group: vec![50, 100],
            es_orig: vec![1.0, 2.0, 5.0],
            es_rep: vec![0.0, 0.3, 0.5],
            estimators: vec![Estimator::MonteCarlo, Estimator::Importance, Estimator::Quadrature],
            rep_at_least_orig: false,
            seed: 42,
            n_draws: 100_000,
        }
    }

    /// Two-group t-tests against the equivalent F-tests.
    pub fn simulation_3() -> Self {
        ScenarioGrid {
            design: Design::TTwoSample,
            n_groups: vec![2],
            n_orig_per_group: vec![15, 50],
            n_rep_per_group: vec![15, 30, 50, 100],
            es_orig: vec![0.2, 0.4, 0.6, 0.8, 1.0, 2.0],
            es_rep: vec![1e-5, 0.2, 0.4, 0.6, 0.8, 1.0, 2.0],
            estimators: vec![Estimator::Quadrature],
            rep_at_least_orig: true,
            seed: 42,
            n_draws: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("n_groups", self.n_groups.is_empty()),
            ("n_orig_per_group", self.n_orig_per_group.is_empty()),
            ("n_rep_per_group", self.n_rep_per_group.is_empty()),
            ("es_orig", self.es_orig.is_empty()),
            ("es_rep", self.es_rep.is_empty()),
            ("estimators", self.estimators.is_empty()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, empty)| *empty) {
            return domain(format!("{name} is empty"));
        }
        if let Some(k) = self.n_groups.iter().find(|&&k| k < 2) {
            return domain(format!("n_groups must be at least 2, got {k}"));
        }
        if self.design == Design::TTwoSample && self.n_groups.iter().any(|&k| k != 2) {
            return domain("a two-sample t design has exactly 2 groups");
        }
        if let Some(n) = self.n_orig_per_group.iter().chain(&self.n_rep_per_group).find(|&&n| n < 2) {
            return domain(format!("group sizes must be at least 2, got {n}"));
        }
        let mut es = self.es_orig.iter().chain(&self.es_rep);
        match self.design {
            Design::TTwoSample => {
                if let Some(d) = es.find(|d| !d.is_finite()) {
                    return domain(format!("effect sizes must be finite, got {d}"));
                }
            }
            Design::FOneway => {
                if let Some(f2) = es.find(|f2| !(**f2 >= 0.0 && f2.is_finite())) {
                    return domain(format!("f squared must be non-negative, got {f2}"));
                }
            }
        }
        if self.n_draws < 2 {
            return domain(format!("n_draws must be at least 2, got {}", self.n_draws));
        }
        Ok(())
    }

    /// Cells in grid order: groups, original size, replication size,
    /// original effect, replication effect.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut cells = Vec::new();
        for &k in &self.n_groups {
            for &n_orig in &self.n_orig_per_group {
                for &n_rep in &self.n_rep_per_group {
                    if self.rep_at_least_orig && n_rep < n_orig {
                        continue;
                    }
                    for &es_orig in &self.es_orig {
                        for &es_rep in &self.es_rep {
                            cells.push(Scenario {
                                index: cells.len(),
                                n_groups: k,
                                n_orig,
                                n_rep,
                                es_orig,
                                es_rep,
                                seed: self.seed.wrapping_add(cells.len() as u64),
                            });
                        }
                    }
                }
            }
        }
        cells
    }

    fn config(&self, seed: u64) -> RepBfConfig {
        RepBfConfig {
            seed,
            n_draws: self.n_draws,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub index: usize,
    pub n_groups: usize,
    pub n_orig: u64,
    pub n_rep: u64,
    pub es_orig: f64,
    pub es_rep: f64,
    pub seed: u64,
}

impl Scenario {
    fn studies(&self, design: Design) -> Result<(Study, Study)> {
        let es = |v: f64| match design {
            Design::TTwoSample => EffectSize::cohens_d(v),
            Design::FOneway => EffectSize::cohens_f2(v),
        };
        Ok((
            statistic_from_effect_size(design, es(self.es_orig)?, &vec![self.n_orig; self.n_groups])?,
            statistic_from_effect_size(design, es(self.es_rep)?, &vec![self.n_rep; self.n_groups])?,
        ))
    }
}

fn estimate(
    orig: &Study,
    rep: &Study,
    config: &RepBfConfig,
    estimators: &[Estimator],
) -> Result<Vec<Result<RepBfResult>>> {
    match (orig, rep) {
        (Study::T(o), Study::T(r)) => repbf_t_estimators(o, r, config, estimators),
        (Study::F(o), Study::F(r)) => repbf_f_estimators(o, r, config, estimators),
        _ => domain("original and replication use different tests"),
    }
}

fn status<T>(r: &Result<T>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => format!("error: {e}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim1Row {
    pub index: usize,
    pub n_groups: usize,
    pub n_orig: u64,
    pub n_rep: u64,
    pub es_orig: f64,
    pub es_rep: f64,
    pub estimator: Estimator,
    pub br0: Option<f64>,
    pub log10_br0: Option<f64>,
    pub mc_se_log: Option<f64>,
    pub status: String,
}

/// One row per cell and estimator, in grid order. A failed cell is flagged
/// in `status` and the run continues.
pub fn run_simulation_1(grid: &ScenarioGrid) -> Result<Vec<Sim1Row>> {
    grid.validate()?;
    let rows: Vec<Vec<Sim1Row>> = grid
        .scenarios()
        .par_iter()
        .map(|s| {
            let results = s
                .studies(grid.design)
                .and_then(|(o, r)| estimate(&o, &r, &grid.config(s.seed), &grid.estimators));
            grid.estimators
                .iter()
                .enumerate()
                .map(|(i, &estimator)| {
                    let r = match &results {
                        Ok(rs) => rs[i].clone(),
                        Err(e) => Err(e.clone()),
                    };
                    Sim1Row {
                        index: s.index,
                        n_groups: s.n_groups,
                        n_orig: s.n_orig,
                        n_rep: s.n_rep,
                        es_orig: s.es_orig,
                        es_rep: s.es_rep,
                        estimator,
                        br0: r.as_ref().ok().map(|r| r.br0),
                        log10_br0: r.as_ref().ok().map(|r| r.log10_br0),
                        mc_se_log: r.as_ref().ok().map(|r| r.mc_se_log),
                        status: status(&r),
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim2Row {
    pub index: usize,
    pub n_orig: u64,
    pub n_rep: u64,
    pub es_orig: f64,
    pub es_rep: f64,
    pub br0_mc: Option<f64>,
    pub se_mc: Option<f64>,
    pub br0_is: Option<f64>,
    pub se_is: Option<f64>,
    pub ess_is: Option<f64>,
    /// Present when the grid lists the quadrature estimator.
    pub br0_quad: Option<f64>,
    pub status: String,
}

/// Monte Carlo and importance estimates from the same posterior draws.
///
/// The importance estimate is reported even when its weights degenerate;
/// such rows have status `low_ess`.
pub fn run_simulation_2(grid: &ScenarioGrid) -> Result<Vec<Sim2Row>> {
    grid.validate()?;
    for needed in [Estimator::MonteCarlo, Estimator::Importance] {
        if !grid.estimators.contains(&needed) {
            return domain(format!("simulation 2 needs the {needed} estimator"));
        }
    }
    let estimators = [Estimator::MonteCarlo, Estimator::Importance, Estimator::Quadrature];
    let with_quad = grid.estimators.contains(&Estimator::Quadrature);
    let used = if with_quad { &estimators[..] } else { &estimators[..2] };
    Ok(grid
        .scenarios()
        .par_iter()
        .map(|s| {
            let config = RepBfConfig {
                min_ess_fraction: 0.0,
                ..grid.config(s.seed)
            };
            let results = s.studies(grid.design).and_then(|(o, r)| estimate(&o, &r, &config, used));
            let mut row = Sim2Row {
                index: s.index,
                n_orig: s.n_orig,
                n_rep: s.n_rep,
                es_orig: s.es_orig,
                es_rep: s.es_rep,
                br0_mc: None,
                se_mc: None,
                br0_is: None,
                se_is: None,
                ess_is: None,
                br0_quad: None,
                status: "ok".into(),
            };
            let results = match results {
                Ok(rs) => rs,
                Err(e) => {
                    row.status = format!("error: {e}");
                    return row;
                }
            };
            let mut failures = Vec::new();
            for r in &results {
                match r {
                    Ok(r) => match r.estimator {
                        Estimator::MonteCarlo => (row.br0_mc, row.se_mc) = (Some(r.br0), Some(r.mc_se_log)),
                        Estimator::Importance => {
                            (row.br0_is, row.se_is, row.ess_is) = (Some(r.br0), Some(r.mc_se_log), r.ess)
                        }
                        Estimator::Quadrature => row.br0_quad = Some(r.br0),
                    },
                    Err(e) => failures.push(format!("error: {e}")),
                }
            }
            if !failures.is_empty() {
                row.status = failures.join("; ");
            } else if row.ess_is.is_some_and(|ess| ess < MIN_ESS_FRACTION * grid.n_draws as f64) {
                row.status = "low_ess".into();
            }
            row
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim3Row {
    pub index: usize,
    pub n_orig: u64,
    pub n_rep: u64,
    pub es_orig: f64,
    pub es_rep: f64,
    pub br0_t: Option<f64>,
    pub br0_f: Option<f64>,
    pub ratio: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sim3Summary {
    /// Cells where both factors were computed.
    pub n_cells: usize,
    /// Pearson correlation of the log10 factors.
    pub correlation: f64,
    /// Pearson correlation of the factors themselves.
    pub correlation_raw: f64,
    /// Mean of `br0_t / br0_f`.
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim3Table {
    pub rows: Vec<Sim3Row>,
    pub summary: Sim3Summary,
}

/// The t-test factor against the F-test factor for `F = t^2` with df
/// `(1, 2n - 2)`, using the grid's first estimator for both.
pub fn run_simulation_3(grid: &ScenarioGrid) -> Result<Sim3Table> {
    grid.validate()?;
    if grid.design != Design::TTwoSample {
        return domain("simulation 3 needs a two-sample t design");
    }
    let estimator = [grid.estimators[0]];
    let rows: Vec<Sim3Row> = grid
        .scenarios()
        .par_iter()
        .map(|s| {
            let config = grid.config(s.seed);
            let pair = s.studies(Design::TTwoSample).and_then(|pair| match pair {
                (Study::T(o), Study::T(r)) => {
                    let as_f = |t: &TTestStudy| FTestStudy::new(t.t_value * t.t_value, 1.0, t.df, t.n1 + t.n2);
                    let t_bf = estimate(&Study::T(o), &Study::T(r), &config, &estimator)?.remove(0);
                    let f_bf = estimate(&Study::F(as_f(&o)?), &Study::F(as_f(&r)?), &config, &estimator)?.remove(0);
                    Ok((t_bf, f_bf))
                }
                _ => unreachable!("t design yields t studies"),
            });
            let (t_bf, f_bf) = match pair {
                Ok(p) => p,
                Err(e) => (Err(e.clone()), Err(e)),
            };
            let (br0_t, br0_f) = (t_bf.as_ref().ok().map(|r| r.br0), f_bf.as_ref().ok().map(|r| r.br0));
            let status = match (&t_bf, &f_bf) {
                (Ok(_), Ok(_)) => "ok".into(),
                (Err(e), _) => format!("error (t): {e}"),
                (_, Err(e)) => format!("error (F): {e}"),
            };
            Sim3Row {
                index: s.index,
                n_orig: s.n_orig,
                n_rep: s.n_rep,
                es_orig: s.es_orig,
                es_rep: s.es_rep,
                br0_t,
                br0_f,
                ratio: br0_t.zip(br0_f).map(|(t, f)| t / f),
                status,
            }
        })
        .collect();
    let summary = summarize(&rows);
    Ok(Sim3Table { rows, summary })
}

fn summarize(rows: &[Sim3Row]) -> Sim3Summary {
    let pairs: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.br0_t.zip(r.br0_f)).collect();
    let (t, f): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let (lt, lf): (Vec<f64>, Vec<f64>) = pairs.iter().map(|(t, f)| (t.log10(), f.log10())).unzip();
    let n = pairs.len();
    Sim3Summary {
        n_cells: n,
        correlation: pearson(&lt, &lf),
        correlation_raw: pearson(&t, &f),
        mean_ratio: pairs.iter().map(|(t, f)| t / f).sum::<f64>() / n as f64,
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
