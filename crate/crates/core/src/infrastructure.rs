//! The shared line, track occupancy, and conflicts between train paths.
//!
//! All services run in the same direction. A service blocks each segment of
//! its route from the minute it enters until it leaves. Two services conflict
//! when they use a common segment and either their blocks overlap or they
//! enter it less than one headway apart.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Allocation, RuId, Scenario, SegmentId, ServiceId, ServiceRef, ServiceRequest, Violation,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineTopology {
    pub segment_ids: Vec<SegmentId>,
}

impl LineTopology {
    pub fn new(segment_ids: Vec<SegmentId>) -> Self {
        Self { segment_ids }
    }

    /// Segments numbered `1..=count`.
    pub fn with_segments(count: u32) -> Self {
        Self::new((1..=count).collect())
    }

    pub fn station_count(&self) -> usize {
        self.segment_ids.len() + 1
    }

    pub(crate) fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.segment_ids.is_empty() {
            out.push(Violation {
                field: "line.segment_ids".into(),
                detail: "line has no segments".into(),
            });
        }
        let mut seen = HashSet::new();
        for id in &self.segment_ids {
            if !seen.insert(id) {
                out.push(Violation {
                    field: "line.segment_ids".into(),
                    detail: format!("duplicate segment id {id}"),
                });
            }
        }
        out
    }
}

/// Time a service holds one segment, `[enter_minute, exit_minute)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyWindow {
    pub segment_id: SegmentId,
    pub enter_minute: u32,
    pub exit_minute: u32,
    pub ru_id: RuId,
    pub service_id: ServiceId,
}

impl OccupancyWindow {
    /// Whether two windows on the same segment violate separation.
    pub fn clashes_with(&self, other: &OccupancyWindow, headway: u32) -> bool {
        self.segment_id == other.segment_id
            && (self.enter_minute.abs_diff(other.enter_minute) < headway
                || (self.enter_minute < other.exit_minute && other.enter_minute < self.exit_minute))
    }
}

/// Blocks held by `req` when it departs at `departure`.
pub fn occupancy(
    req: &ServiceRequest,
    departure: i64,
    horizon: u32,
) -> Result<Vec<OccupancyWindow>> {
    if departure < 0 || departure >= horizon as i64 {
        return Err(Error::DepartureOutsideHorizon { departure, horizon });
    }
    let mut t = departure as u32;
    let mut windows = Vec::with_capacity(req.route.len());
    for (&segment_id, &travel) in req.route.iter().zip(&req.segment_travel_times) {
        let exit = t.saturating_add(travel);
        if exit > horizon {
            return Err(Error::HorizonExceeded {
                ru_id: req.ru_id,
                service_id: req.service_id,
                segment_id,
                exit_minute: exit,
                horizon,
            });
        }
        windows.push(OccupancyWindow {
            segment_id,
            enter_minute: t,
            exit_minute: exit,
            ru_id: req.ru_id,
            service_id: req.service_id,
        });
        t = exit;
    }
    Ok(windows)
}

/// Candidate services and the pairs among them that cannot both run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictGraph {
    /// Sorted neighbour lists, indexed like the candidate list.
    adjacency: Vec<Vec<usize>>,
}

impl ConflictGraph {
    /// Builds the graph from precomputed occupancy, one window list per node.
    pub fn from_windows(windows: &[Vec<OccupancyWindow>], headway: u32) -> Self {
        let mut per_segment: BTreeMap<SegmentId, Vec<(u32, u32, usize)>> = BTreeMap::new();
        for (node, ws) in windows.iter().enumerate() {
            for w in ws {
                per_segment.entry(w.segment_id).or_default().push((
                    w.enter_minute,
                    w.exit_minute,
                    node,
                ));
            }
        }

        let mut edges = BTreeSet::new();
        for list in per_segment.values_mut() {
            list.sort_unstable();
            for (i, &(enter, exit, a)) in list.iter().enumerate() {
                // Sorted by entry: a later window clashes iff it enters before
                // this one is released, or within one headway of its entry.
                let bound = exit.max(enter.saturating_add(headway));
                for &(other_enter, _, b) in &list[i + 1..] {
                    if other_enter >= bound {
                        break;
                    }
                    if a != b {
                        edges.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }

        let mut adjacency = vec![Vec::new(); windows.len()];
        for (a, b) in edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for n in &mut adjacency {
            n.sort_unstable();
        }
        Self { adjacency }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbours(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Unordered edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Conflict graph over `(request, departure)` candidates.
pub fn build_conflict_graph(
    candidates: &[(&ServiceRequest, u32)],
    headway: u32,
    horizon: u32,
) -> Result<ConflictGraph> {
    let windows = candidates
        .iter()
        .map(|&(req, dep)| occupancy(req, dep as i64, horizon))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConflictGraph::from_windows(&windows, headway))
}

/// Whether every granted service in `a` can run as scheduled.
pub fn is_conflict_free(s: &Scenario, a: &Allocation) -> Result<bool> {
    a.check_shape(s)?;
    let scheduled: Vec<(ServiceRef, u32)> = a.scheduled().collect();
    let candidates: Vec<(&ServiceRequest, u32)> = scheduled
        .iter()
        .map(|&(at, d)| (s.request(at), d))
        .collect();
    let graph = build_conflict_graph(&candidates, s.headway_minutes, s.horizon_minutes)?;
    Ok(graph.edge_count() == 0)
}
