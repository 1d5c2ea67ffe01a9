//! Market formulation: undertakings, their service requests and the
//! allocation the infrastructure manager hands back.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infrastructure::LineTopology;

/// Importance weights of one undertaking must sum to one within this bound.
pub const IMPORTANCE_SUM_TOLERANCE: f64 = 1e-9;

/// Requests may oversubscribe the schedulable capacity, but not without limit.
pub const MAX_OVERSUBSCRIPTION: usize = 4;

pub type RuId = u32;
pub type ServiceId = u32;
pub type SegmentId = u32;

/// A competitor requesting track access.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RailwayUndertaking {
    /// 1-based.
    pub id: RuId,
    /// Agreed share of the total infrastructure capacity, in (0, 1].
    pub framework_capacity: f64,
}

/// One requested train path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub ru_id: RuId,
    pub service_id: ServiceId,
    pub route: Vec<SegmentId>,
    /// Minutes from the start of the horizon.
    pub desired_departure: u32,
    /// Minutes spent on each segment of `route`.
    pub segment_travel_times: Vec<u32>,
    /// Weight the undertaking attaches to this service, in [0, 1].
    pub importance: f64,
    /// What the infrastructure manager earns if the service runs on time.
    pub base_revenue: f64,
}

impl ServiceRequest {
    pub fn running_time(&self) -> u32 {
        self.segment_travel_times.iter().sum()
    }
}

/// All requests filed by one undertaking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestSet {
    pub ru_id: RuId,
    pub requests: Vec<ServiceRequest>,
}

impl RequestSet {
    pub fn importance_sum(&self) -> f64 {
        self.requests.iter().map(|r| r.importance).sum()
    }
}

/// A complete problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub undertakings: Vec<RailwayUndertaking>,
    /// One set per undertaking, in the same order as `undertakings`.
    pub request_sets: Vec<RequestSet>,
    pub line: LineTopology,
    pub horizon_minutes: u32,
    /// Maximum number of services the manager will plan.
    pub max_services: u32,
    pub headway_minutes: u32,
    /// Half-width of the departure window around each desired departure.
    pub max_shift_minutes: u32,
    /// Fraction of a service's base revenue lost per minute of deviation.
    pub penalty_per_minute: f64,
}

/// Handle to one request: undertaking position and position within its set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ServiceRef {
    pub ru: usize,
    pub k: usize,
}

impl Scenario {
    pub fn n_undertakings(&self) -> usize {
        self.undertakings.len()
    }

    pub fn total_requests(&self) -> usize {
        self.request_sets.iter().map(|s| s.requests.len()).sum()
    }

    pub fn request(&self, at: ServiceRef) -> &ServiceRequest {
        &self.request_sets[at.ru].requests[at.k]
    }

    pub fn request_counts(&self) -> Vec<usize> {
        self.request_sets.iter().map(|s| s.requests.len()).collect()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.undertakings
            .iter()
            .map(|u| u.framework_capacity)
            .collect()
    }

    /// Every request in flat order: undertakings first, then service order.
    pub fn service_refs(&self) -> impl Iterator<Item = ServiceRef> + '_ {
        self.request_sets
            .iter()
            .enumerate()
            .flat_map(|(ru, set)| (0..set.requests.len()).map(move |k| ServiceRef { ru, k }))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Fails with every violation when the scenario is not usable.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = validate_scenario(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }
}

/// A single broken invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub detail: String,
}

impl Violation {
    fn new(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.detail)
    }
}

/// Services granted to each undertaking and when they depart.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    departures: Vec<Vec<Option<u32>>>,
}

impl Allocation {
    /// Nothing granted, shaped after `s`.
    pub fn empty(s: &Scenario) -> Self {
        Self::with_shape(&s.request_counts())
    }

    pub fn with_shape(counts: &[usize]) -> Self {
        Self {
            departures: counts.iter().map(|&n| vec![None; n]).collect(),
        }
    }

    pub fn grant(&mut self, at: ServiceRef, departure: u32) {
        self.departures[at.ru][at.k] = Some(departure);
    }

    pub fn revoke(&mut self, at: ServiceRef) {
        self.departures[at.ru][at.k] = None;
    }

    pub fn departure(&self, at: ServiceRef) -> Option<u32> {
        self.departures[at.ru][at.k]
    }

    pub fn is_granted(&self, at: ServiceRef) -> bool {
        self.departure(at).is_some()
    }

    /// Per-undertaking bit vectors over their requests.
    pub fn granted(&self) -> Vec<Vec<bool>> {
        self.departures
            .iter()
            .map(|row| row.iter().map(Option::is_some).collect())
            .collect()
    }

    pub fn departures(&self) -> &[Vec<Option<u32>>] {
        &self.departures
    }

    /// Granted services with their departures, in flat request order.
    pub fn scheduled(&self) -> impl Iterator<Item = (ServiceRef, u32)> + '_ {
        self.departures.iter().enumerate().flat_map(|(ru, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(k, d)| d.map(|d| (ServiceRef { ru, k }, d)))
        })
    }

    pub fn scheduled_count(&self) -> usize {
        self.departures
            .iter()
            .flatten()
            .filter(|d| d.is_some())
            .count()
    }

    pub fn check_shape(&self, s: &Scenario) -> Result<()> {
        let expected = s.request_counts();
        let got: Vec<usize> = self.departures.iter().map(Vec::len).collect();
        if expected != got {
            return Err(Error::Shape(format!(
                "allocation shape {got:?} does not match request counts {expected:?}"
            )));
        }
        Ok(())
    }

    /// Granted departures that fall outside their allowed window.
    pub fn window_violations(&self, s: &Scenario) -> Vec<ServiceRef> {
        self.scheduled()
            .filter(|&(at, dep)| {
                let desired = s.request(at).desired_departure;
                dep.abs_diff(desired) > s.max_shift_minutes
            })
            .map(|(at, _)| at)
            .collect()
    }
}

/// Lists every broken invariant of `s`. An empty list means the scenario is usable.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if s.undertakings.is_empty() {
        out.push(Violation::new("undertakings", "no undertakings"));
    }
    let mut ids = HashSet::new();
    for u in &s.undertakings {
        if !(u.framework_capacity > 0.0 && u.framework_capacity <= 1.0) {
            out.push(Violation::new(
                format!("undertakings[RU{}].framework_capacity", u.id),
                format!("{} is outside (0, 1]", u.framework_capacity),
            ));
        }
        if !ids.insert(u.id) {
            out.push(Violation::new(
                "undertakings.id",
                format!("duplicate undertaking id {}", u.id),
            ));
        }
    }
    let cap_sum: f64 = s.undertakings.iter().map(|u| u.framework_capacity).sum();
    if cap_sum > 1.0 + 1e-9 {
        out.push(Violation::new(
            "undertakings.framework_capacity",
            format!("capacities sum to {cap_sum}, more than 1"),
        ));
    }

    out.extend(s.line.violations());
    let segments: HashSet<SegmentId> = s.line.segment_ids.iter().copied().collect();

    if s.horizon_minutes == 0 {
        out.push(Violation::new("horizon_minutes", "must be positive"));
    }
    if s.max_services == 0 {
        out.push(Violation::new("max_services", "must be positive"));
    }
    if s.headway_minutes == 0 {
        out.push(Violation::new("headway_minutes", "must be positive"));
    }
    if !(s.penalty_per_minute >= 0.0 && s.penalty_per_minute.is_finite()) {
        out.push(Violation::new(
            "penalty_per_minute",
            format!("{} is not a finite non-negative rate", s.penalty_per_minute),
        ));
    }

    if s.request_sets.len() != s.undertakings.len() {
        out.push(Violation::new(
            "request_sets",
            format!(
                "{} request sets for {} undertakings",
                s.request_sets.len(),
                s.undertakings.len()
            ),
        ));
    }
    for (u, set) in s.undertakings.iter().zip(&s.request_sets) {
        if set.ru_id != u.id {
            out.push(Violation::new(
                format!("request_sets[RU{}].ru_id", u.id),
                format!(
                    "set belongs to RU{} but is listed under RU{}",
                    set.ru_id, u.id
                ),
            ));
        }
        let sum = set.importance_sum();
        if (sum - 1.0).abs() > IMPORTANCE_SUM_TOLERANCE {
            out.push(Violation::new(
                format!("request_sets[RU{}].importance", set.ru_id),
                format!("importances sum to {sum}, expected 1"),
            ));
        }
        let mut service_ids = HashSet::new();
        for r in &set.requests {
            let field = |name: &str| format!("request[RU{}/{}].{name}", set.ru_id, r.service_id);
            if r.ru_id != set.ru_id {
                out.push(Violation::new(
                    field("ru_id"),
                    format!("{} inside the set of RU{}", r.ru_id, set.ru_id),
                ));
            }
            if !service_ids.insert(r.service_id) {
                out.push(Violation::new(field("service_id"), "duplicate service id"));
            }
            if r.route.is_empty() {
                out.push(Violation::new(field("route"), "empty route"));
            }
            if r.route.len() != r.segment_travel_times.len() {
                out.push(Violation::new(
                    field("segment_travel_times"),
                    format!(
                        "{} travel times for {} segments",
                        r.segment_travel_times.len(),
                        r.route.len()
                    ),
                ));
            }
            if r.segment_travel_times.contains(&0) {
                out.push(Violation::new(
                    field("segment_travel_times"),
                    format!("{:?} contains a zero", r.segment_travel_times),
                ));
            }
            for seg in &r.route {
                if !segments.contains(seg) {
                    out.push(Violation::new(
                        field("route"),
                        format!("segment {seg} is not on the line"),
                    ));
                }
            }
            if r.desired_departure >= s.horizon_minutes {
                out.push(Violation::new(
                    field("desired_departure"),
                    format!(
                        "{} is outside horizon {}",
                        r.desired_departure, s.horizon_minutes
                    ),
                ));
            }
            if !(0.0..=1.0).contains(&r.importance) {
                out.push(Violation::new(
                    field("importance"),
                    format!("{} is outside [0, 1]", r.importance),
                ));
            }
            if !(r.base_revenue >= 0.0 && r.base_revenue.is_finite()) {
                out.push(Violation::new(
                    field("base_revenue"),
                    format!("{} is not a finite non-negative amount", r.base_revenue),
                ));
            }
        }
    }

    let total = s.total_requests();
    if total > MAX_OVERSUBSCRIPTION * s.max_services as usize {
        out.push(Violation::new(
            "request_sets",
            format!(
                "{total} requests exceed {MAX_OVERSUBSCRIPTION} x max_services ({})",
                s.max_services
            ),
        ));
    }
    out
}

/// Sum of granted importance for each undertaking.
pub fn granted_importance_sums(s: &Scenario, a: &Allocation) -> Result<Vec<f64>> {
    a.check_shape(s)?;
    Ok(s.request_sets
        .iter()
        .enumerate()
        .map(|(ru, set)| {
            set.requests
                .iter()
                .enumerate()
                .filter(|&(k, _)| a.is_granted(ServiceRef { ru, k }))
                .map(|(_, r)| r.importance)
                .sum::<f64>()
                .clamp(0.0, 1.0)
        })
        .collect())
}
