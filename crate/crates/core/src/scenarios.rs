//! Seeded generators for the three framework-capacity markets.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::infrastructure::LineTopology;
use crate::model::{RailwayUndertaking, RequestSet, Scenario, ServiceRequest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Balanced,
    #[serde(rename = "semi")]
    SemiBalanced,
    Unbalanced,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::Balanced,
        ScenarioKind::SemiBalanced,
        ScenarioKind::Unbalanced,
    ];

    pub fn capacities(self) -> [f64; 5] {
        match self {
            ScenarioKind::Balanced => [0.20; 5],
            ScenarioKind::SemiBalanced => [0.30, 0.25, 0.20, 0.15, 0.10],
            ScenarioKind::Unbalanced => [0.55, 0.25, 0.10, 0.05, 0.05],
        }
    }

    /// Requests per undertaking, out of 100 schedulable slots.
    pub fn request_counts(self) -> [usize; 5] {
        match self {
            ScenarioKind::Balanced => [10, 10, 10, 10, 10],
            ScenarioKind::SemiBalanced => [15, 12, 10, 8, 5],
            ScenarioKind::Unbalanced => [28, 12, 5, 2, 2],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Balanced => "balanced",
            ScenarioKind::SemiBalanced => "semi",
            ScenarioKind::Unbalanced => "unbalanced",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "balanced" => Ok(ScenarioKind::Balanced),
            "semi" | "semi-balanced" | "semibalanced" => Ok(ScenarioKind::SemiBalanced),
            "unbalanced" => Ok(ScenarioKind::Unbalanced),
            other => Err(Error::Parse(format!("unknown scenario kind '{other}'"))),
        }
    }
}

/// Knobs of the generated line and timetable requests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub line_segments: u32,
    pub horizon_minutes: u32,
    pub max_services: u32,
    pub headway_minutes: u32,
    pub max_shift_minutes: u32,
    pub penalty_per_minute: f64,
    /// Inclusive range of minutes spent on one segment.
    pub travel_minutes: (u32, u32),
    /// Half-open range of base revenue per service.
    pub base_revenue: (f64, f64),
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            line_segments: 4,
            horizon_minutes: 300,
            max_services: 100,
            headway_minutes: 5,
            max_shift_minutes: 60,
            penalty_per_minute: 0.01,
            travel_minutes: (10, 30),
            base_revenue: (50.0, 150.0),
        }
    }
}

/// Builds one market. Capacities and request counts are fixed by `kind`;
/// routes, departures and revenues are drawn from `seed`.
pub fn make_scenario(kind: ScenarioKind, seed: u64, params: &ScenarioParams) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let capacities = kind.capacities();
    let counts = kind.request_counts();

    let undertakings: Vec<RailwayUndertaking> = capacities
        .iter()
        .enumerate()
        .map(|(i, &c)| RailwayUndertaking {
            id: i as u32 + 1,
            framework_capacity: c,
        })
        .collect();

    let request_sets = undertakings
        .iter()
        .zip(counts)
        .map(|(u, n)| RequestSet {
            ru_id: u.id,
            requests: (0..n)
                .map(|k| random_request(&mut rng, u.id, k as u32 + 1, 1.0 / n as f64, params))
                .collect(),
        })
        .collect();

    Scenario {
        undertakings,
        request_sets,
        line: LineTopology::with_segments(params.line_segments),
        horizon_minutes: params.horizon_minutes,
        max_services: params.max_services,
        headway_minutes: params.headway_minutes,
        max_shift_minutes: params.max_shift_minutes,
        penalty_per_minute: params.penalty_per_minute,
    }
}

fn random_request(
    rng: &mut ChaCha8Rng,
    ru_id: u32,
    service_id: u32,
    importance: f64,
    p: &ScenarioParams,
) -> ServiceRequest {
    let first = rng.gen_range(1..=p.line_segments);
    let last = rng.gen_range(first..=p.line_segments);
    let route: Vec<u32> = (first..=last).collect();
    let segment_travel_times: Vec<u32> = route
        .iter()
        .map(|_| rng.gen_range(p.travel_minutes.0..=p.travel_minutes.1))
        .collect();
    let running: u32 = segment_travel_times.iter().sum();
    let latest = p.horizon_minutes.saturating_sub(running);
    let desired_departure = rng
        .gen_range(0..=latest)
        .min(p.horizon_minutes.saturating_sub(1));
    let base_revenue = rng.gen_range(p.base_revenue.0..p.base_revenue.1);
    ServiceRequest {
        ru_id,
        service_id,
        route,
        desired_departure,
        segment_travel_times,
        importance,
        base_revenue,
    }
}
