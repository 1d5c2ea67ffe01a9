//! Run records, multi-run studies and their CSV/JSON reports.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocator::{resolve_conflicts, RepairTrace};
use crate::error::{Error, Result};
use crate::fairness::{
    assigned_capacity_percent, assigned_importance_percent, FairnessConfig, IndexKind,
};
use crate::ga::{self, Chromosome, EpochHistory, GaConfig, Metrics, RunOutcome};
use crate::model::{Allocation, Scenario};
use crate::scenarios::{make_scenario, ScenarioKind, ScenarioParams};

/// One optimization run, as reported in the per-run result tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index_kind: IndexKind,
    pub alpha: f64,
    pub run_number: usize,
    pub seed: u64,
    pub inequity_percent: f64,
    pub revenue: f64,
    pub scheduled_train_count: usize,
    /// Granted importance of each undertaking, in percent.
    pub importance_percents: Vec<f64>,
    pub assigned_importance_percent: f64,
    pub assigned_capacity_percent: f64,
}

impl RunRecord {
    pub fn from_metrics(
        s: &Scenario,
        cfg: &FairnessConfig,
        run_number: usize,
        seed: u64,
        m: &Metrics,
    ) -> Result<Self> {
        Ok(Self {
            index_kind: cfg.index_kind,
            alpha: cfg.alpha,
            run_number,
            seed,
            inequity_percent: m.inequity_percent,
            revenue: m.revenue,
            scheduled_train_count: m.scheduled,
            importance_percents: m.importance_sums.iter().map(|i| 100.0 * i).collect(),
            assigned_importance_percent: assigned_importance_percent(&m.importance_sums),
            assigned_capacity_percent: assigned_capacity_percent(
                &m.importance_sums,
                &s.capacities(),
            )?,
        })
    }
}

const FIXED_LEADING: [&str; 7] = [
    "index_kind",
    "alpha",
    "run",
    "seed",
    "inequity_percent",
    "revenue",
    "scheduled_trains",
];
const FIXED_TRAILING: [&str; 2] = ["assigned_importance_percent", "assigned_capacity_percent"];

fn records_header(n_ru: usize) -> Vec<String> {
    FIXED_LEADING
        .iter()
        .map(|s| s.to_string())
        .chain((1..=n_ru).map(|i| format!("I_{i}")))
        .chain(FIXED_TRAILING.iter().map(|s| s.to_string()))
        .collect()
}

/// Writes records as CSV. All records must cover the same number of undertakings.
pub fn write_records_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let n_ru = records.first().map_or(0, |r| r.importance_percents.len());
    if records.iter().any(|r| r.importance_percents.len() != n_ru) {
        return Err(Error::Shape(
            "records cover different numbers of undertakings".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(records_header(n_ru))?;
    for r in records {
        let mut row = vec![
            r.index_kind.to_string(),
            r.alpha.to_string(),
            r.run_number.to_string(),
            r.seed.to_string(),
            r.inequity_percent.to_string(),
            r.revenue.to_string(),
            r.scheduled_train_count.to_string(),
        ];
        row.extend(r.importance_percents.iter().map(f64::to_string));
        row.push(r.assigned_importance_percent.to_string());
        row.push(r.assigned_capacity_percent.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let n_ru = header
        .len()
        .checked_sub(FIXED_LEADING.len() + FIXED_TRAILING.len())
        .ok_or_else(|| Error::Parse(format!("header has only {} columns", header.len())))?;
    let expected = records_header(n_ru);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }

    fn num<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T> {
        row[i]
            .parse()
            .map_err(|_| Error::Parse(format!("column {i}: cannot parse '{}'", &row[i])))
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let base = FIXED_LEADING.len();
        out.push(RunRecord {
            index_kind: row[0].parse()?,
            alpha: num(&row, 1)?,
            run_number: num(&row, 2)?,
            seed: num(&row, 3)?,
            inequity_percent: num(&row, 4)?,
            revenue: num(&row, 5)?,
            scheduled_train_count: num(&row, 6)?,
            importance_percents: (base..base + n_ru)
                .map(|i| num(&row, i))
                .collect::<Result<_>>()?,
            assigned_importance_percent: num(&row, base + n_ru)?,
            assigned_capacity_percent: num(&row, base + n_ru + 1)?,
        });
    }
    Ok(out)
}

pub fn save_records(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    write_records_csv(std::fs::File::create(path)?, records)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    read_records_csv(std::fs::File::open(path)?)
}

/// Per-epoch series of one run, written next to its record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochSeries {
    pub index_kind: IndexKind,
    pub alpha: f64,
    pub seed: u64,
    pub history: EpochHistory,
}

/// Best timetable of a run with the repair decisions that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestSolution {
    pub chromosome: Chromosome,
    pub allocation: Allocation,
    pub metrics: Metrics,
    pub repair: RepairTrace,
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Everything produced by one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub record: RunRecord,
    pub series: EpochSeries,
    pub best: BestSolution,
}

pub fn run_once(
    s: &Scenario,
    cfg: &FairnessConfig,
    ga_cfg: &GaConfig,
    run_number: usize,
) -> Result<RunReport> {
    let RunOutcome {
        best_chromosome,
        best,
        history,
    } = ga::run(s, ga_cfg, cfg)?;
    let (_, repair) = resolve_conflicts(s, &best_chromosome.decode(s)?, cfg)?;
    Ok(RunReport {
        record: RunRecord::from_metrics(s, cfg, run_number, ga_cfg.seed, &best.metrics)?,
        series: EpochSeries {
            index_kind: cfg.index_kind,
            alpha: cfg.alpha,
            seed: ga_cfg.seed,
            history,
        },
        best: BestSolution {
            chromosome: best_chromosome,
            allocation: best.allocation,
            metrics: best.metrics,
            repair,
        },
    })
}

/// Runs `runs` seeds `base_seed + r`, so every mode sees the same seeds.
pub fn run_many(
    s: &Scenario,
    cfg: &FairnessConfig,
    ga_cfg: &GaConfig,
    runs: usize,
) -> Result<Vec<RunReport>> {
    (0..runs)
        .map(|r| {
            let ga_r = GaConfig {
                seed: ga_cfg.seed.wrapping_add(r as u64),
                ..ga_cfg.clone()
            };
            run_once(s, cfg, &ga_r, r + 1)
        })
        .collect()
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Mean and spread of one value across runs, per epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub epoch: usize,
    pub mean: f64,
    pub std: f64,
}

/// Aggregates the best-inequity trajectory of several runs.
pub fn inequity_band(reports: &[RunReport]) -> Vec<SeriesPoint> {
    let epochs = reports
        .iter()
        .map(|r| r.series.history.len())
        .min()
        .unwrap_or(0);
    (0..epochs)
        .map(|e| {
            let v: Vec<f64> = reports
                .iter()
                .map(|r| r.series.history.records[e].best_inequity_percent)
                .collect();
            let st = Stat::of(&v);
            SeriesPoint {
                epoch: e + 1,
                mean: st.mean,
                std: st.std,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub index_kind: IndexKind,
    pub alpha: f64,
    pub runs: usize,
    pub inequity: Stat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaStudy {
    pub rows: Vec<AlphaRow>,
    pub records: Vec<RunRecord>,
    /// Inequity band over epochs for each α, in row order.
    pub bands: Vec<Vec<SeriesPoint>>,
}

pub const STUDY_ALPHAS: [f64; 5] = [1.0, 5.0, 10.0, 25.0, 50.0];

pub fn alpha_study(
    s: &Scenario,
    index_kind: IndexKind,
    epsilon: f64,
    alphas: &[f64],
    runs: usize,
    ga_cfg: &GaConfig,
) -> Result<AlphaStudy> {
    let mut study = AlphaStudy {
        rows: Vec::new(),
        records: Vec::new(),
        bands: Vec::new(),
    };
    for &alpha in alphas {
        let cfg = FairnessConfig {
            index_kind,
            alpha,
            epsilon,
        };
        let reports = run_many(s, &cfg, ga_cfg, runs)?;
        let inequity: Vec<f64> = reports.iter().map(|r| r.record.inequity_percent).collect();
        study.rows.push(AlphaRow {
            index_kind,
            alpha,
            runs,
            inequity: Stat::of(&inequity),
        });
        study.bands.push(inequity_band(&reports));
        study.records.extend(reports.into_iter().map(|r| r.record));
    }
    Ok(study)
}

pub fn write_alpha_rows_csv<W: Write>(out: W, rows: &[AlphaRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "index_kind",
        "alpha",
        "runs",
        "inequity_mean",
        "inequity_std",
    ])?;
    for r in rows {
        w.write_record([
            r.index_kind.to_string(),
            r.alpha.to_string(),
            r.runs.to_string(),
            r.inequity.mean.to_string(),
            r.inequity.std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_alpha_rows_csv<R: Read>(input: R) -> Result<Vec<AlphaRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let f = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::Parse(format!("cannot parse '{}'", &row[i])))
        };
        out.push(AlphaRow {
            index_kind: row[0].parse()?,
            alpha: f(1)?,
            runs: row[2]
                .parse()
                .map_err(|_| Error::Parse(format!("cannot parse '{}'", &row[2])))?,
            inequity: Stat {
                mean: f(3)?,
                std: f(4)?,
            },
        });
    }
    Ok(out)
}

/// Plot-ready `alpha,epoch,mean,std` rows.
pub fn write_bands_csv<W: Write>(out: W, alphas: &[f64], bands: &[Vec<SeriesPoint>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "epoch", "inequity_mean", "inequity_std"])?;
    for (alpha, band) in alphas.iter().zip(bands) {
        for p in band {
            w.write_record([
                alpha.to_string(),
                p.epoch.to_string(),
                p.mean.to_string(),
                p.std.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Summary of one (scenario, mode) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareCell {
    pub scenario: ScenarioKind,
    pub mode: IndexKind,
    pub alpha: f64,
    pub runs: usize,
    pub inequity: Stat,
    pub revenue: Stat,
    pub importance: Vec<Stat>,
    pub total_importance: Stat,
    pub assigned_capacity: Stat,
}

impl CompareCell {
    pub fn from_records(
        scenario: ScenarioKind,
        mode: IndexKind,
        alpha: f64,
        records: &[RunRecord],
    ) -> Self {
        let col =
            |f: &dyn Fn(&RunRecord) -> f64| Stat::of(&records.iter().map(f).collect::<Vec<_>>());
        let n_ru = records.first().map_or(0, |r| r.importance_percents.len());
        Self {
            scenario,
            mode,
            alpha,
            runs: records.len(),
            inequity: col(&|r| r.inequity_percent),
            revenue: col(&|r| r.revenue),
            importance: (0..n_ru)
                .map(|i| col(&|r| r.importance_percents[i]))
                .collect(),
            total_importance: col(&|r| r.assigned_importance_percent),
            assigned_capacity: col(&|r| r.assigned_capacity_percent),
        }
    }

    /// `(metric, stat)` pairs in table order.
    pub fn metrics(&self) -> Vec<(String, Stat)> {
        let mut v = vec![
            ("inequity".to_string(), self.inequity),
            ("revenue".to_string(), self.revenue),
        ];
        v.extend(
            self.importance
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("I_{}", i + 1), *s)),
        );
        v.push(("total_importance".into(), self.total_importance));
        v.push(("assigned_capacity".into(), self.assigned_capacity));
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub cells: Vec<CompareCell>,
    pub records: Vec<(ScenarioKind, RunRecord)>,
}

impl Comparison {
    pub fn cell(&self, scenario: ScenarioKind, mode: IndexKind) -> Option<&CompareCell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.mode == mode)
    }
}

/// Runs every mode on every scenario kind with shared seeds.
///
/// Each kind is generated once from `scenario_seed`; each mode uses its
/// default α unless `alpha` overrides it.
pub fn compare(
    kinds: &[ScenarioKind],
    modes: &[IndexKind],
    runs: usize,
    scenario_seed: u64,
    params: &ScenarioParams,
    ga_cfg: &GaConfig,
    epsilon: f64,
) -> Result<Comparison> {
    let mut out = Comparison {
        cells: Vec::new(),
        records: Vec::new(),
    };
    for &kind in kinds {
        let s = make_scenario(kind, scenario_seed, params);
        for &mode in modes {
            let cfg = FairnessConfig {
                epsilon,
                ..FairnessConfig::with_defaults(mode)
            };
            let records: Vec<RunRecord> = run_many(&s, &cfg, ga_cfg, runs)?
                .into_iter()
                .map(|r| r.record)
                .collect();
            out.cells
                .push(CompareCell::from_records(kind, mode, cfg.alpha, &records));
            out.records.extend(records.into_iter().map(|r| (kind, r)));
        }
    }
    Ok(out)
}

/// Long-form `scenario,mode,alpha,metric,mean,std` rows.
pub fn write_comparison_csv<W: Write>(out: W, cmp: &Comparison) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "mode", "alpha", "metric", "mean", "std"])?;
    for c in &cmp.cells {
        for (metric, st) in c.metrics() {
            w.write_record([
                c.scenario.to_string(),
                c.mode.to_string(),
                c.alpha.to_string(),
                metric,
                st.mean.to_string(),
                st.std.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
