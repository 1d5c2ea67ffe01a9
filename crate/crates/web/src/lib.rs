//! Browser bindings for the demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; the report
//! builders underneath are ordinary Rust so they can be tested natively.

use railfair::experiment::{alpha_study, Stat};
use railfair::fairness::{
    alpha_transform, atkinson_fairness, gini_fairness, inequity_percent, jain,
};
use railfair::ga::{self, GaConfig};
use railfair::infrastructure::occupancy;
use railfair::{make_scenario, FairnessConfig, IndexKind, Scenario, ScenarioKind, ScenarioParams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct IndexReport {
    pub transformed: Vec<f64>,
    pub jain: f64,
    pub gini: f64,
    pub atkinson: f64,
    pub inequity_percent: f64,
}

pub fn index_report(
    importance_sums: &[f64],
    alpha: f64,
    epsilon: f64,
) -> railfair::Result<IndexReport> {
    let x = alpha_transform(importance_sums, alpha)?;
    Ok(IndexReport {
        jain: jain(&x)?,
        gini: gini_fairness(&x)?,
        atkinson: atkinson_fairness(&x, epsilon)?,
        inequity_percent: if importance_sums.len() >= 2 {
            inequity_percent(importance_sums)?
        } else {
            0.0
        },
        transformed: x,
    })
}

#[derive(Debug, Serialize)]
pub struct Block {
    pub segment: u32,
    pub enter: u32,
    pub exit: u32,
}

#[derive(Debug, Serialize)]
pub struct Train {
    pub ru_id: u32,
    pub service_id: u32,
    pub desired: u32,
    /// `None` when the service was not granted.
    pub departure: Option<u32>,
    /// Track blocks at the granted departure, or at the desired one otherwise.
    pub blocks: Vec<Block>,
}

#[derive(Debug, Serialize)]
pub struct EpochPoint {
    pub epoch: usize,
    pub fitness: f64,
    pub revenue: f64,
    pub inequity_percent: f64,
}

#[derive(Debug, Serialize)]
pub struct OptimizeReport {
    pub segments: Vec<u32>,
    pub horizon: u32,
    pub capacities: Vec<f64>,
    pub requested: Vec<usize>,
    pub importance_percents: Vec<f64>,
    pub inequity_percent: f64,
    pub revenue: f64,
    pub fitness: f64,
    pub scheduled: usize,
    pub trains: Vec<Train>,
    pub history: Vec<EpochPoint>,
}

fn trains(s: &Scenario, alloc: &railfair::Allocation) -> Vec<Train> {
    s.service_refs()
        .map(|at| {
            let req = s.request(at);
            let departure = alloc.departure(at);
            let blocks = occupancy(
                req,
                departure.unwrap_or(req.desired_departure) as i64,
                s.horizon_minutes,
            )
            .map(|ws| {
                ws.iter()
                    .map(|w| Block {
                        segment: w.segment_id,
                        enter: w.enter_minute,
                        exit: w.exit_minute,
                    })
                    .collect()
            })
            .unwrap_or_default();
            Train {
                ru_id: req.ru_id,
                service_id: req.service_id,
                desired: req.desired_departure,
                departure,
                blocks,
            }
        })
        .collect()
}

pub fn optimize_report(
    kind: ScenarioKind,
    scenario_seed: u64,
    cfg: &FairnessConfig,
    ga_cfg: &GaConfig,
) -> railfair::Result<OptimizeReport> {
    let s = make_scenario(kind, scenario_seed, &ScenarioParams::default());
    let out = ga::run(&s, ga_cfg, cfg)?;
    let m = &out.best.metrics;
    Ok(OptimizeReport {
        segments: s.line.segment_ids.clone(),
        horizon: s.horizon_minutes,
        capacities: s.capacities(),
        requested: s.request_counts(),
        importance_percents: m.importance_sums.iter().map(|i| 100.0 * i).collect(),
        inequity_percent: m.inequity_percent,
        revenue: m.revenue,
        fitness: m.fitness,
        scheduled: m.scheduled,
        trains: trains(&s, &out.best.allocation),
        history: out
            .history
            .records
            .iter()
            .map(|r| EpochPoint {
                epoch: r.epoch,
                fitness: r.best_fitness,
                revenue: r.best_revenue,
                inequity_percent: r.best_inequity_percent,
            })
            .collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub inequity: Stat,
}

pub fn sweep_report(
    kind: ScenarioKind,
    scenario_seed: u64,
    index: IndexKind,
    alphas: &[f64],
    runs: usize,
    ga_cfg: &GaConfig,
) -> railfair::Result<Vec<SweepRow>> {
    let s = make_scenario(kind, scenario_seed, &ScenarioParams::default());
    let study = alpha_study(
        &s,
        index,
        railfair::fairness::DEFAULT_EPSILON,
        alphas,
        runs,
        ga_cfg,
    )?;
    Ok(study
        .rows
        .into_iter()
        .map(|r| SweepRow {
            alpha: r.alpha,
            inequity: r.inequity,
        })
        .collect())
}

fn to_json<T: Serialize>(r: railfair::Result<T>) -> Result<String, String> {
    r.and_then(|v| Ok(serde_json::to_string(&v)?))
        .map_err(|e| e.to_string())
}

fn ga_config(epochs: usize, pop: usize, seed: u64) -> GaConfig {
    GaConfig {
        epochs,
        population_size: pop,
        seed,
        ..GaConfig::default()
    }
}

/// Jain, Gini and Atkinson values plus inequity for the given sums.
#[wasm_bindgen]
pub fn indices(importance_sums: &[f64], alpha: f64, epsilon: f64) -> Result<String, String> {
    to_json(index_report(importance_sums, alpha, epsilon))
}

/// One GA run on a generated scenario.
#[wasm_bindgen]
pub fn optimize(
    kind: &str,
    scenario_seed: u32,
    index: &str,
    alpha: f64,
    epochs: usize,
    pop: usize,
    seed: u32,
) -> Result<String, String> {
    let kind: ScenarioKind = kind.parse().map_err(|e: railfair::Error| e.to_string())?;
    let index: IndexKind = index.parse().map_err(|e: railfair::Error| e.to_string())?;
    let cfg = FairnessConfig::new(index, alpha);
    to_json(optimize_report(
        kind,
        scenario_seed.into(),
        &cfg,
        &ga_config(epochs, pop, seed.into()),
    ))
}

/// Mean inequity per sensitivity value over `runs` seeds.
#[wasm_bindgen]
pub fn alpha_sweep(
    kind: &str,
    scenario_seed: u32,
    index: &str,
    alphas: &[f64],
    runs: usize,
    epochs: usize,
    pop: usize,
    seed: u32,
) -> Result<String, String> {
    let kind: ScenarioKind = kind.parse().map_err(|e: railfair::Error| e.to_string())?;
    let index: IndexKind = index.parse().map_err(|e: railfair::Error| e.to_string())?;
    to_json(sweep_report(
        kind,
        scenario_seed.into(),
        index,
        alphas,
        runs,
        &ga_config(epochs, pop, seed.into()),
    ))
}
