//! Equity-greedy conflict repair and the revenue-times-fairness objective.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fairness::FairnessConfig;
use crate::infrastructure::{occupancy, ConflictGraph};
use crate::model::{granted_importance_sums, Allocation, RuId, Scenario, ServiceRef};

/// A service proposed for scheduling at a given departure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub service: ServiceRef,
    pub departure: u32,
}

/// One pass of the repair loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairStep {
    pub most_affected_ru: RuId,
    pub chosen: ServiceRef,
    /// Equity of the partial allocation right after granting `chosen`.
    pub equity_after: f64,
    pub discarded: Vec<ServiceRef>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RepairTrace {
    pub scheduled_without_conflict: Vec<ServiceRef>,
    pub iterations: Vec<RepairStep>,
    /// Candidates left out because `max_services` was reached.
    pub dropped_over_capacity: Vec<ServiceRef>,
}

/// Turns a candidate timetable into a conflict-free allocation.
///
/// Services without conflicts are granted first. Then, while conflicted
/// candidates remain, the undertaking with the lowest granted importance
/// (ties: lowest id) gets the one pending service that maximizes the equity
/// index of the partial allocation (ties: higher importance, then lower
/// service id), and every pending candidate clashing with it is discarded.
/// Granting stops once `max_services` services are scheduled.
pub fn resolve_conflicts(
    s: &Scenario,
    candidates: &[Candidate],
    fairness: &FairnessConfig,
) -> Result<(Allocation, RepairTrace)> {
    let windows = candidates
        .iter()
        .map(|c| occupancy(s.request(c.service), c.departure as i64, s.horizon_minutes))
        .collect::<Result<Vec<_>>>()?;
    let graph = ConflictGraph::from_windows(&windows, s.headway_minutes);
    let cap = s.max_services as usize;

    let mut alloc = Allocation::empty(s);
    let mut sums = vec![0.0; s.n_undertakings()];
    let mut trace = RepairTrace::default();
    let mut granted = 0usize;

    let mut pending = BTreeSet::new();
    for (node, c) in candidates.iter().enumerate() {
        if graph.degree(node) > 0 {
            pending.insert(node);
        } else if granted < cap {
            alloc.grant(c.service, c.departure);
            sums[c.service.ru] += s.request(c.service).importance;
            granted += 1;
            trace.scheduled_without_conflict.push(c.service);
        } else {
            trace.dropped_over_capacity.push(c.service);
        }
    }

    while !pending.is_empty() {
        if granted >= cap {
            trace
                .dropped_over_capacity
                .extend(pending.iter().map(|&n| candidates[n].service));
            break;
        }

        let affected = pending
            .iter()
            .map(|&n| candidates[n].service.ru)
            .min_by(|&a, &b| {
                sums[a]
                    .total_cmp(&sums[b])
                    .then(s.undertakings[a].id.cmp(&s.undertakings[b].id))
            })
            .expect("pending is non-empty");

        let mut best: Option<(usize, f64)> = None;
        for &node in pending
            .iter()
            .filter(|&&n| candidates[n].service.ru == affected)
        {
            let req = s.request(candidates[node].service);
            let mut trial = sums.clone();
            trial[affected] += req.importance;
            let equity = fairness.equity(&trial)?;
            let better = match best {
                None => true,
                Some((cur, cur_eq)) => {
                    let cur_req = s.request(candidates[cur].service);
                    equity
                        .total_cmp(&cur_eq)
                        .then(req.importance.total_cmp(&cur_req.importance))
                        .then(cur_req.service_id.cmp(&req.service_id))
                        .is_gt()
                }
            };
            if better {
                best = Some((node, equity));
            }
        }
        let (chosen, equity_after) = best.expect("affected undertaking owns a pending service");

        let c = candidates[chosen];
        alloc.grant(c.service, c.departure);
        sums[affected] += s.request(c.service).importance;
        granted += 1;
        pending.remove(&chosen);

        let discarded: Vec<ServiceRef> = graph
            .neighbours(chosen)
            .iter()
            .filter(|n| pending.remove(n))
            .map(|&n| candidates[n].service)
            .collect();
        trace.iterations.push(RepairStep {
            most_affected_ru: s.undertakings[affected].id,
            chosen: c.service,
            equity_after,
            discarded,
        });
    }

    Ok((alloc, trace))
}

/// Revenue of one service departing `deviation` minutes off its request.
pub fn service_revenue(base_revenue: f64, penalty_per_minute: f64, deviation: u32) -> f64 {
    (base_revenue * (1.0 - penalty_per_minute * deviation as f64)).max(0.0)
}

/// Manager revenue: base revenue of each scheduled service, reduced linearly
/// per minute of deviation and floored at zero.
pub fn revenue(s: &Scenario, a: &Allocation) -> Result<f64> {
    a.check_shape(s)?;
    Ok(a.scheduled()
        .map(|(at, dep)| {
            let r = s.request(at);
            service_revenue(
                r.base_revenue,
                s.penalty_per_minute,
                dep.abs_diff(r.desired_departure),
            )
        })
        .sum())
}

/// `revenue · fairness`; plain revenue in revenue-only mode.
pub fn fitness(s: &Scenario, a: &Allocation, cfg: &FairnessConfig) -> Result<f64> {
    let sums = granted_importance_sums(s, a)?;
    Ok(revenue(s, a)? * cfg.fitness_factor(&sums)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::IndexKind;
    use crate::infrastructure::{is_conflict_free, LineTopology};
    use crate::model::tests::{allocation_from_bits, worked_example};
    use crate::model::{RailwayUndertaking, RequestSet, ServiceRequest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn jain25() -> FairnessConfig {
        FairnessConfig::with_defaults(IndexKind::Jain)
    }

    fn at_desired(s: &Scenario) -> Vec<Candidate> {
        s.service_refs()
            .map(|service| Candidate {
                service,
                departure: s.request(service).desired_departure,
            })
            .collect()
    }

    /// Random instance: up to `max_ru` undertakings, up to `max_services`
    /// requests on a three-segment line with a crowded horizon.
    fn random_instance(
        rng: &mut ChaCha8Rng,
        max_ru: usize,
        max_services: usize,
    ) -> (Scenario, Vec<Candidate>) {
        let n_ru = rng.gen_range(2..=max_ru);
        let n_services = rng.gen_range(n_ru..=max_services);
        let mut counts = vec![1usize; n_ru];
        for _ in n_ru..n_services {
            counts[rng.gen_range(0..n_ru)] += 1;
        }
        let request_sets = counts
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let ru_id = i as u32 + 1;
                RequestSet {
                    ru_id,
                    requests: raw
                        .iter()
                        .enumerate()
                        .map(|(k, w)| {
                            let first = rng.gen_range(1..=3u32);
                            let last = rng.gen_range(first..=3u32);
                            let route: Vec<u32> = (first..=last).collect();
                            let travel = route.iter().map(|_| rng.gen_range(5..=20)).collect();
                            ServiceRequest {
                                ru_id,
                                service_id: k as u32 + 1,
                                route,
                                desired_departure: rng.gen_range(0..90),
                                segment_travel_times: travel,
                                importance: w / total,
                                base_revenue: rng.gen_range(50.0..150.0),
                            }
                        })
                        .collect(),
                }
            })
            .collect();
        let s = Scenario {
            undertakings: (0..n_ru)
                .map(|i| RailwayUndertaking {
                    id: i as u32 + 1,
                    framework_capacity: 1.0 / n_ru as f64,
                })
                .collect(),
            request_sets,
            line: LineTopology::with_segments(3),
            horizon_minutes: 200,
            max_services: 100,
            headway_minutes: 5,
            max_shift_minutes: 0,
            penalty_per_minute: 0.01,
        };
        let c = at_desired(&s);
        (s, c)
    }

    fn mutually_conflicting_pair() -> Scenario {
        let mk = |ru_id: u32, w: f64| RequestSet {
            ru_id,
            requests: vec![ServiceRequest {
                ru_id,
                service_id: 1,
                route: vec![1],
                desired_departure: 10,
                segment_travel_times: vec![10],
                importance: w,
                base_revenue: 100.0,
            }],
        };
        Scenario {
            undertakings: vec![
                RailwayUndertaking {
                    id: 1,
                    framework_capacity: 0.5,
                },
                RailwayUndertaking {
                    id: 2,
                    framework_capacity: 0.5,
                },
            ],
            request_sets: vec![mk(1, 0.6), mk(2, 0.4)],
            line: LineTopology::with_segments(1),
            horizon_minutes: 100,
            max_services: 10,
            headway_minutes: 5,
            max_shift_minutes: 0,
            penalty_per_minute: 0.01,
        }
    }

    #[test]
    fn conflict_free_candidates_are_all_scheduled() {
        let s = worked_example();
        let c = at_desired(&s);
        let (a, trace) = resolve_conflicts(&s, &c, &jain25()).unwrap();
        assert_eq!(a.scheduled_count(), 7);
        assert!(trace.iterations.is_empty());
        assert_eq!(trace.scheduled_without_conflict.len(), 7);
    }

    #[test]
    fn single_contested_slot_follows_exhaustive_choice() {
        // Importances in this instance don't sum to one per undertaking,
        // which the repair itself does not require.
        let s = mutually_conflicting_pair();
        let c = at_desired(&s);
        for kind in [IndexKind::Jain, IndexKind::Gini, IndexKind::Atkinson] {
            let cfg = FairnessConfig::new(kind, 1.0);
            let (a, trace) = resolve_conflicts(&s, &c, &cfg).unwrap();
            assert_eq!(trace.iterations.len(), 1);
            assert_eq!(a.scheduled_count(), 1);
            // Exhaustive search over both outcomes; they tie, and the lower
            // undertaking id wins.
            let options = [[0.6, 0.0], [0.0, 0.4]];
            let best = options
                .iter()
                .map(|o| cfg.equity(o).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(trace.iterations[0].most_affected_ru, 1);
            assert_eq!(trace.iterations[0].equity_after, best);
            assert!(a.is_granted(ServiceRef { ru: 0, k: 0 }));
            assert_eq!(
                trace.iterations[0].discarded,
                vec![ServiceRef { ru: 1, k: 0 }]
            );
        }
    }

    #[test]
    fn random_repairs_are_feasible_maximal_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (s, c) = random_instance(&mut rng, 4, 10);
            let cfg = jain25();
            let (a, trace) = resolve_conflicts(&s, &c, &cfg).unwrap();
            assert!(is_conflict_free(&s, &a).unwrap());

            // Every unscheduled candidate clashes with something scheduled.
            for cand in &c {
                if a.is_granted(cand.service) {
                    continue;
                }
                let mut extended = a.clone();
                extended.grant(cand.service, cand.departure);
                assert!(!is_conflict_free(&s, &extended).unwrap());
            }

            // Each candidate is accounted for exactly once.
            let mut seen: Vec<ServiceRef> = trace.scheduled_without_conflict.clone();
            for step in &trace.iterations {
                seen.push(step.chosen);
                seen.extend(&step.discarded);
            }
            seen.extend(&trace.dropped_over_capacity);
            seen.sort();
            let mut all: Vec<ServiceRef> = c.iter().map(|x| x.service).collect();
            all.sort();
            assert_eq!(seen, all);

            assert_eq!(resolve_conflicts(&s, &c, &cfg).unwrap(), (a, trace));
        }
    }

    #[test]
    fn capacity_cap_limits_granted_services() {
        let mut s = worked_example();
        s.max_services = 4;
        let (a, trace) = resolve_conflicts(&s, &at_desired(&s), &jain25()).unwrap();
        assert_eq!(a.scheduled_count(), 4);
        assert_eq!(trace.dropped_over_capacity.len(), 3);
    }

    #[test]
    fn revenue_and_penalties() {
        assert!((service_revenue(100.0, 0.01, 30) - 70.0).abs() < 1e-12);
        assert_eq!(service_revenue(100.0, 0.01, 150), 0.0);

        let s = worked_example();
        assert_eq!(revenue(&s, &Allocation::empty(&s)).unwrap(), 0.0);
        let all = allocation_from_bits(&s, &[&[1, 1, 1], &[1, 1, 1, 1]]);
        assert!((revenue(&s, &all).unwrap() - 700.0).abs() < 1e-9);

        let mut shifted = Allocation::empty(&s);
        shifted.grant(ServiceRef { ru: 0, k: 1 }, 120 + 30);
        assert!((revenue(&s, &shifted).unwrap() - 70.0).abs() < 1e-9);
    }

    #[test]
    fn fitness_composition() {
        let s = worked_example();
        let a = allocation_from_bits(&s, &[&[1, 0, 1], &[1, 1, 1, 0]]);
        let r = revenue(&s, &a).unwrap();
        let f = fitness(&s, &a, &FairnessConfig::new(IndexKind::Jain, 10.0)).unwrap();
        let expected_jain = {
            let (x1, x2) = (0.7f64.powi(10), 0.9f64.powi(10));
            (x1 + x2).powi(2) / (2.0 * (x1 * x1 + x2 * x2))
        };
        assert!((f - expected_jain * r).abs() < 1e-9);

        let all = allocation_from_bits(&s, &[&[1, 1, 1], &[1, 1, 1, 1]]);
        let r_all = revenue(&s, &all).unwrap();
        assert!((fitness(&s, &all, &jain25()).unwrap() - r_all).abs() < 1e-9);
        assert_eq!(fitness(&s, &Allocation::empty(&s), &jain25()).unwrap(), 0.0);

        let rev = FairnessConfig::with_defaults(IndexKind::RevenueOnly);
        assert_eq!(fitness(&s, &a, &rev).unwrap(), r);
    }
}
