//! Independent oracles and instance builders shared by the integration tests
//! and the acceptance harness. Nothing here calls the library's metric,
//! conflict or repair code.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use railfair::allocator::Candidate;
use railfair::infrastructure::LineTopology;
use railfair::model::{RailwayUndertaking, RequestSet, ServiceRequest};
use railfair::{Scenario, ServiceRef};

// ---- metrics ----

pub fn jain_oracle(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s: f64 = x.iter().sum();
    let sq: f64 = x.iter().map(|v| v * v).sum();
    if sq == 0.0 {
        1.0
    } else {
        s * s / (n * sq)
    }
}

/// Gini coefficient as one minus twice the area under the Lorenz curve.
pub fn gini_lorenz(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let total: f64 = v.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut prev = 0.0;
    let mut cum = 0.0;
    let mut area = 0.0;
    for xi in &v {
        cum += xi / total;
        area += (prev + cum) / (2.0 * n);
        prev = cum;
    }
    1.0 - 2.0 * area
}

pub fn atkinson_oracle(x: &[f64], eps: f64) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ede = if eps == 1.0 {
        (x.iter().map(|v| v.ln()).sum::<f64>() / n).exp()
    } else {
        (x.iter().map(|v| v.powf(1.0 - eps)).sum::<f64>() / n).powf(1.0 / (1.0 - eps))
    };
    1.0 - ede / mean
}

pub fn inequity_oracle(sums: &[f64]) -> f64 {
    let n = sums.len();
    let mut pd = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pd += (sums[i] - sums[j]).abs();
        }
    }
    let iv_max = (n * n / 4) as f64;
    100.0 * pd / iv_max
}

// ---- conflicts ----

/// `(segment, enter, exit)` blocks of a request departing at `dep`.
pub fn blocks(r: &ServiceRequest, dep: u32) -> Vec<(u32, u32, u32)> {
    let mut t = dep;
    r.route
        .iter()
        .zip(&r.segment_travel_times)
        .map(|(&seg, &tt)| {
            let b = (seg, t, t + tt);
            t += tt;
            b
        })
        .collect()
}

/// Pairwise comparison of every block of `a` with every block of `b`.
pub fn clash(a: &[(u32, u32, u32)], b: &[(u32, u32, u32)], headway: u32) -> bool {
    a.iter().any(|&(sa, ea, xa)| {
        b.iter().any(|&(sb, eb, xb)| {
            sa == sb && ((ea as i64 - eb as i64).abs() < headway as i64 || (ea < xb && eb < xa))
        })
    })
}

/// All conflicting index pairs `(i, j)`, `i < j`.
pub fn brute_force_edges(s: &Scenario, cands: &[Candidate]) -> Vec<(usize, usize)> {
    let b: Vec<_> = cands
        .iter()
        .map(|c| blocks(s.request(c.service), c.departure))
        .collect();
    let mut out = Vec::new();
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            if clash(&b[i], &b[j], s.headway_minutes) {
                out.push((i, j));
            }
        }
    }
    out
}

// ---- instances ----

fn normalized_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// A small line with up to 4 undertakings and 10 services, all candidates
/// placed at their desired departure.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (Scenario, Vec<Candidate>) {
    let segments = 3u32;
    let horizon = 200u32;
    let n_ru = rng.gen_range(1..=4usize);
    let total = rng.gen_range(n_ru..=10usize);
    let mut counts = vec![1usize; n_ru];
    for _ in n_ru..total {
        counts[rng.gen_range(0..n_ru)] += 1;
    }

    let mut undertakings = Vec::new();
    let mut request_sets = Vec::new();
    for (i, &n) in counts.iter().enumerate() {
        let id = i as u32 + 1;
        undertakings.push(RailwayUndertaking {
            id,
            framework_capacity: 1.0 / n_ru as f64,
        });
        let weights = normalized_weights(rng, n);
        let requests = (0..n)
            .map(|k| {
                let first = rng.gen_range(1..=segments);
                let last = rng.gen_range(first..=segments);
                let route: Vec<u32> = (first..=last).collect();
                let travel: Vec<u32> = route.iter().map(|_| rng.gen_range(3..=15)).collect();
                let running: u32 = travel.iter().sum();
                ServiceRequest {
                    ru_id: id,
                    service_id: k as u32 + 1,
                    route,
                    desired_departure: rng.gen_range(0..=60.min(horizon - running)),
                    segment_travel_times: travel,
                    importance: weights[k],
                    base_revenue: rng.gen_range(50.0..150.0),
                }
            })
            .collect();
        request_sets.push(RequestSet {
            ru_id: id,
            requests,
        });
    }
    let s = Scenario {
        undertakings,
        request_sets,
        line: LineTopology::with_segments(segments),
        horizon_minutes: horizon,
        max_services: 10,
        headway_minutes: 5,
        max_shift_minutes: 10,
        penalty_per_minute: 0.01,
    };
    s.ensure_valid().expect("generated instance is valid");
    let mut cands: Vec<Candidate> = s
        .service_refs()
        .map(|at| Candidate {
            service: at,
            departure: s.request(at).desired_departure,
        })
        .collect();
    cands.shuffle(rng);
    (s, cands)
}

/// Four single-segment services from two undertakings, packed so that
/// several of them clash at their desired times.
pub fn toy_instance() -> Scenario {
    let req = |ru_id, service_id, dep, importance, base_revenue| ServiceRequest {
        ru_id,
        service_id,
        route: vec![1],
        desired_departure: dep,
        segment_travel_times: vec![4],
        importance,
        base_revenue,
    };
    Scenario {
        undertakings: vec![
            RailwayUndertaking {
                id: 1,
                framework_capacity: 0.6,
            },
            RailwayUndertaking {
                id: 2,
                framework_capacity: 0.4,
            },
        ],
        request_sets: vec![
            RequestSet {
                ru_id: 1,
                requests: vec![req(1, 1, 10, 0.7, 120.0), req(1, 2, 12, 0.3, 80.0)],
            },
            RequestSet {
                ru_id: 2,
                requests: vec![req(2, 1, 11, 0.5, 100.0), req(2, 2, 16, 0.5, 90.0)],
            },
        ],
        line: LineTopology::with_segments(1),
        horizon_minutes: 40,
        max_services: 4,
        headway_minutes: 3,
        max_shift_minutes: 2,
        penalty_per_minute: 0.05,
    }
}

/// Index of a service in flat request order.
pub fn flat_index(s: &Scenario, at: ServiceRef) -> usize {
    s.request_sets[..at.ru]
        .iter()
        .map(|r| r.requests.len())
        .sum::<usize>()
        + at.k
}

// ---- repair ----

pub fn equity_oracle(cfg: &railfair::FairnessConfig, sums: &[f64]) -> f64 {
    use railfair::IndexKind;
    let x: Vec<f64> = sums.iter().map(|v| v.powf(cfg.alpha)).collect();
    match cfg.index_kind {
        IndexKind::Jain | IndexKind::RevenueOnly => jain_oracle(&x),
        IndexKind::Gini => 1.0 - gini_lorenz(&x),
        IndexKind::Atkinson => {
            if x.iter().all(|&v| v == 0.0) {
                1.0
            } else {
                1.0 - atkinson_oracle(&x, cfg.epsilon).clamp(0.0, 1.0)
            }
        }
    }
}

/// Checks a repaired allocation against brute-force conflicts, maximality and
/// a replay of every greedy step in which each pick is compared with every
/// alternative the same undertaking had pending.
pub fn check_repair(
    s: &Scenario,
    cands: &[Candidate],
    cfg: &railfair::FairnessConfig,
    alloc: &railfair::Allocation,
    trace: &railfair::allocator::RepairTrace,
) -> Result<(), String> {
    use std::collections::BTreeSet;
    let edges = brute_force_edges(s, cands);
    let adj = |i: usize, j: usize| edges.contains(&(i.min(j), i.max(j)));
    let cap = s.max_services as usize;
    let granted: Vec<usize> = (0..cands.len())
        .filter(|&i| alloc.departure(cands[i].service) == Some(cands[i].departure))
        .collect();
    if granted.len() != alloc.scheduled_count() {
        return Err("allocation holds departures that were never proposed".into());
    }
    for (a, &i) in granted.iter().enumerate() {
        for &j in &granted[a + 1..] {
            if adj(i, j) {
                return Err(format!("granted candidates {i} and {j} clash"));
            }
        }
    }
    if granted.len() < cap {
        for i in 0..cands.len() {
            if !granted.contains(&i) && !granted.iter().any(|&g| adj(i, g)) {
                return Err(format!("candidate {i} could be added without conflict"));
            }
        }
    }

    let mut sums = vec![0.0; s.n_undertakings()];
    let mut pending: BTreeSet<usize> = BTreeSet::new();
    let mut free = Vec::new();
    for i in 0..cands.len() {
        if (0..cands.len()).any(|j| j != i && adj(i, j)) {
            pending.insert(i);
        } else if free.len() < cap {
            free.push(cands[i].service);
            sums[cands[i].service.ru] += s.request(cands[i].service).importance;
        }
    }
    if free != trace.scheduled_without_conflict {
        return Err("conflict-free phase differs".into());
    }
    let mut count = free.len();
    for (step_no, step) in trace.iterations.iter().enumerate() {
        if count >= cap {
            return Err(format!("step {step_no} exceeds max_services"));
        }
        let owners: BTreeSet<usize> = pending.iter().map(|&i| cands[i].service.ru).collect();
        let low = owners
            .iter()
            .map(|&r| sums[r])
            .fold(f64::INFINITY, f64::min);
        let expected_ru = owners.iter().copied().find(|&r| sums[r] == low).unwrap();
        if step.most_affected_ru != s.undertakings[expected_ru].id {
            return Err(format!(
                "step {step_no}: served RU{} but RU{} was worst off",
                step.most_affected_ru, s.undertakings[expected_ru].id
            ));
        }
        let chosen = *pending
            .iter()
            .find(|&&i| cands[i].service == step.chosen)
            .ok_or(format!("step {step_no}: chosen service was not pending"))?;
        if cands[chosen].service.ru != expected_ru {
            return Err(format!(
                "step {step_no}: chosen service belongs to another RU"
            ));
        }
        let equity_with = |i: usize| {
            let mut t = sums.clone();
            t[expected_ru] += s.request(cands[i].service).importance;
            equity_oracle(cfg, &t)
        };
        let e = equity_with(chosen);
        if (e - step.equity_after).abs() > 1e-9 {
            return Err(format!(
                "step {step_no}: reported equity {} vs {e}",
                step.equity_after
            ));
        }
        for &alt in pending
            .iter()
            .filter(|&&i| cands[i].service.ru == expected_ru)
        {
            if equity_with(alt) > e + 1e-12 {
                return Err(format!(
                    "step {step_no}: swapping in candidate {alt} raises equity"
                ));
            }
        }
        sums[expected_ru] += s.request(cands[chosen].service).importance;
        pending.remove(&chosen);
        count += 1;
        let mut dropped: Vec<ServiceRef> = pending
            .iter()
            .copied()
            .filter(|&i| adj(chosen, i))
            .map(|i| cands[i].service)
            .collect();
        pending.retain(|&i| !adj(chosen, i));
        let mut reported = step.discarded.clone();
        dropped.sort();
        reported.sort();
        if dropped != reported {
            return Err(format!("step {step_no}: discarded set differs"));
        }
    }
    if count < cap && !pending.is_empty() {
        return Err("repair stopped with pending candidates".into());
    }
    Ok(())
}

/// Four services from two undertakings on a two-segment line, drawn from
/// `seed`, with a narrow shift window so the whole genotype space can be
/// enumerated.
pub fn random_toy(seed: u64) -> Scenario {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut request_sets = Vec::new();
    for id in 1..=2u32 {
        let weights = normalized_weights(&mut rng, 2);
        let requests = (0..2)
            .map(|k| {
                let first = rng.gen_range(1..=2u32);
                let route: Vec<u32> = (first..=2).collect();
                ServiceRequest {
                    ru_id: id,
                    service_id: k + 1,
                    segment_travel_times: route.iter().map(|_| rng.gen_range(3..=8)).collect(),
                    route,
                    desired_departure: rng.gen_range(2..=16),
                    importance: weights[k as usize],
                    base_revenue: rng.gen_range(50.0..150.0),
                }
            })
            .collect();
        request_sets.push(RequestSet {
            ru_id: id,
            requests,
        });
    }
    let s = Scenario {
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
        request_sets,
        line: LineTopology::with_segments(2),
        horizon_minutes: 60,
        max_services: 4,
        headway_minutes: 3,
        max_shift_minutes: 2,
        penalty_per_minute: 0.05,
    };
    s.ensure_valid().expect("toy is valid");
    s
}

/// Best fitness over every genotype of a four-gene scenario.
pub fn exhaustive_optimum(s: &Scenario, cfg: &railfair::FairnessConfig) -> f64 {
    use railfair::ga::{evaluate, Chromosome};
    let hi = 2 * s.max_shift_minutes as i32;
    let n = s.total_requests();
    let mut best = f64::NEG_INFINITY;
    let mut genes = vec![-1i32; n];
    loop {
        let c = Chromosome {
            genes: genes.clone(),
        };
        best = best.max(evaluate(s, &c, cfg).unwrap().fitness());
        let mut pos = 0;
        while pos < n && genes[pos] == hi {
            genes[pos] = -1;
            pos += 1;
        }
        if pos == n {
            return best;
        }
        genes[pos] += 1;
    }
}

/// Seeds out of `seeds` whose 200-epoch run reaches `optimum`.
pub fn optimum_hits(
    s: &Scenario,
    cfg: &railfair::FairnessConfig,
    optimum: f64,
    seeds: std::ops::Range<u64>,
) -> usize {
    use railfair::ga::{run, GaConfig};
    seeds
        .filter(|&seed| {
            let ga_cfg = GaConfig {
                epochs: 200,
                seed,
                ..GaConfig::default()
            };
            run(s, &ga_cfg, cfg).unwrap().best.fitness() >= optimum - 1e-9
        })
        .count()
}

/// Straight-line evaluation of a genotype: decode, greedy repair over the
/// brute-force conflicts, then revenue times fairness.
pub fn reference_fitness(s: &Scenario, genes: &[i32], cfg: &railfair::FairnessConfig) -> f64 {
    let refs: Vec<ServiceRef> = s.service_refs().collect();
    let mut cands = Vec::new();
    for (at, &g) in refs.iter().zip(genes) {
        if g < 0 {
            continue;
        }
        let r = s.request(*at);
        let dep = r.desired_departure as i64 - s.max_shift_minutes as i64 + g as i64;
        if dep < 0
            || dep >= s.horizon_minutes as i64
            || dep as u32 + r.running_time() > s.horizon_minutes
        {
            continue;
        }
        cands.push(Candidate {
            service: *at,
            departure: dep as u32,
        });
    }
    let edges = brute_force_edges(s, &cands);
    let adj = |i: usize, j: usize| edges.contains(&(i.min(j), i.max(j)));
    let cap = s.max_services as usize;
    let n_ru = s.n_undertakings();
    let mut sums = vec![0.0; n_ru];
    let mut granted = Vec::new();
    let mut pending = Vec::new();
    for i in 0..cands.len() {
        if (0..cands.len()).any(|j| j != i && adj(i, j)) {
            pending.push(i);
        } else if granted.len() < cap {
            granted.push(i);
            sums[cands[i].service.ru] += s.request(cands[i].service).importance;
        }
    }
    while !pending.is_empty() && granted.len() < cap {
        let mut ru = usize::MAX;
        for &i in &pending {
            let r = cands[i].service.ru;
            if ru == usize::MAX || sums[r] < sums[ru] || (sums[r] == sums[ru] && r < ru) {
                ru = r;
            }
        }
        let mut pick = usize::MAX;
        let mut pick_eq = f64::NEG_INFINITY;
        for &i in pending.iter().filter(|&&i| cands[i].service.ru == ru) {
            let mut t = sums.clone();
            let req = s.request(cands[i].service);
            t[ru] += req.importance;
            let e = equity_oracle(cfg, &t);
            let better = pick == usize::MAX
                || e > pick_eq
                || (e == pick_eq && {
                    let cur = s.request(cands[pick].service);
                    req.importance > cur.importance
                        || (req.importance == cur.importance && req.service_id < cur.service_id)
                });
            if better {
                pick = i;
                pick_eq = e;
            }
        }
        granted.push(pick);
        sums[ru] += s.request(cands[pick].service).importance;
        pending.retain(|&i| i != pick && !adj(i, pick));
    }
    let revenue: f64 = granted
        .iter()
        .map(|&i| {
            let r = s.request(cands[i].service);
            let dev = (cands[i].departure as f64 - r.desired_departure as f64).abs();
            (r.base_revenue * (1.0 - s.penalty_per_minute * dev)).max(0.0)
        })
        .sum();
    match cfg.index_kind {
        railfair::IndexKind::RevenueOnly => revenue,
        _ => revenue * equity_oracle(cfg, &sums),
    }
}
