//! Seeded genetic algorithm over departure-time genotypes.
//!
//! A chromosome holds one gene per requested service, in flat request order.
//! Gene `-1` leaves the service out; gene `g >= 0` proposes a departure at
//! `desired - max_shift + g`. Decoded candidates go through conflict repair
//! and are scored with the configured objective.
//!
//! The variation operators draw from a single ChaCha8 stream in a fixed
//! order, so a run is reproducible from its seed regardless of whether
//! fitness evaluation runs in parallel:
//!
//! 1. initialization, per individual and gene: one `f64` (skip if `< 0.25`),
//!    then a uniform window offset when not skipped;
//! 2. per offspring pair: two tournaments (`tournament_size` uniform index
//!    draws each), one `f64` against `crossover_prob`, a cut point in
//!    `1..len` when crossing over, then for each child and gene one `f64`
//!    against `mutation_prob` followed by a uniform reset over `-1..=2·shift`
//!    when it mutates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocator::{resolve_conflicts, revenue, Candidate};
use crate::error::{Error, Result};
use crate::fairness::{inequity_percent, FairnessConfig};
use crate::infrastructure::occupancy;
use crate::model::{granted_importance_sums, Allocation, Scenario};

pub const SKIP: i32 = -1;

/// Probability that an initial gene leaves its service out.
pub const INIT_SKIP_PROB: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<i32>,
}

impl Chromosome {
    pub fn all_skipped(len: usize) -> Self {
        Self {
            genes: vec![SKIP; len],
        }
    }

    /// Every service requested at its desired departure.
    pub fn at_desired(s: &Scenario) -> Self {
        Self {
            genes: vec![s.max_shift_minutes as i32; s.total_requests()],
        }
    }

    pub fn check(&self, s: &Scenario) -> Result<()> {
        if self.genes.len() != s.total_requests() {
            return Err(Error::Shape(format!(
                "chromosome has {} genes for {} requests",
                self.genes.len(),
                s.total_requests()
            )));
        }
        let hi = gene_max(s);
        if let Some(g) = self.genes.iter().find(|&&g| g < SKIP || g > hi) {
            return Err(Error::Shape(format!("gene {g} outside [-1, {hi}]")));
        }
        Ok(())
    }

    /// Feasible candidates encoded by the genes; out-of-horizon ones are dropped.
    pub fn decode(&self, s: &Scenario) -> Result<Vec<Candidate>> {
        self.check(s)?;
        Ok(s.service_refs()
            .zip(&self.genes)
            .filter(|&(_, &g)| g != SKIP)
            .filter_map(|(service, &g)| {
                let req = s.request(service);
                let dep = req.desired_departure as i64 - s.max_shift_minutes as i64 + g as i64;
                occupancy(req, dep, s.horizon_minutes)
                    .ok()
                    .map(|_| Candidate {
                        service,
                        departure: dep as u32,
                    })
            })
            .collect())
    }
}

fn gene_max(s: &Scenario) -> i32 {
    2 * s.max_shift_minutes as i32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub epochs: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 64,
            epochs: 100,
            crossover_prob: 0.95,
            mutation_prob: 0.025,
            tournament_size: 2,
            elitism_count: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if self.population_size == 0 || self.epochs == 0 || self.tournament_size == 0 {
            return bad("population_size, epochs and tournament_size must be positive".into());
        }
        if self.elitism_count > self.population_size {
            return bad(format!(
                "elitism_count {} exceeds population_size {}",
                self.elitism_count, self.population_size
            ));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        Ok(())
    }
}

/// Metrics of one decoded, repaired timetable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub fitness: f64,
    pub revenue: f64,
    /// Equity index of the α-transformed importance sums.
    pub fairness: f64,
    pub inequity_percent: f64,
    /// Granted importance per undertaking, untransformed.
    pub importance_sums: Vec<f64>,
    pub scheduled: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub allocation: Allocation,
    pub metrics: Metrics,
}

impl Evaluation {
    pub fn fitness(&self) -> f64 {
        self.metrics.fitness
    }
}

/// Decode, repair and score one chromosome.
pub fn evaluate(s: &Scenario, chrom: &Chromosome, cfg: &FairnessConfig) -> Result<Evaluation> {
    let candidates = chrom.decode(s)?;
    let (allocation, _) = resolve_conflicts(s, &candidates, cfg)?;
    let importance_sums = granted_importance_sums(s, &allocation)?;
    let revenue = revenue(s, &allocation)?;
    let fairness = cfg.equity(&importance_sums)?;
    let factor = cfg.fitness_factor(&importance_sums)?;
    let inequity = if importance_sums.len() >= 2 {
        inequity_percent(&importance_sums)?
    } else {
        0.0
    };
    Ok(Evaluation {
        metrics: Metrics {
            fitness: revenue * factor,
            revenue,
            fairness,
            inequity_percent: inequity,
            scheduled: allocation.scheduled_count(),
            importance_sums,
        },
        allocation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub best_fitness: f64,
    pub best_revenue: f64,
    pub best_fairness: f64,
    pub best_inequity_percent: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochHistory {
    pub records: Vec<EpochRecord>,
}

impl EpochHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn best_fitness(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_fitness).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub best_chromosome: Chromosome,
    pub best: Evaluation,
    pub history: EpochHistory,
}

struct Individual {
    chromosome: Chromosome,
    evaluation: Evaluation,
}

fn evaluate_all(
    s: &Scenario,
    pop: Vec<Chromosome>,
    cfg: &FairnessConfig,
) -> Result<Vec<Individual>> {
    let eval = |c: Chromosome| -> Result<Individual> {
        let evaluation = evaluate(s, &c, cfg)?;
        Ok(Individual {
            chromosome: c,
            evaluation,
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pop.into_par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        pop.into_iter().map(eval).collect()
    }
}

/// Index of the fittest individual; the first one wins ties.
fn fittest(pop: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate().skip(1) {
        if ind.evaluation.fitness() > pop[best].evaluation.fitness() {
            best = i;
        }
    }
    best
}

fn tournament(pop: &[Individual], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut winner = rng.gen_range(0..pop.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..pop.len());
        if pop[challenger].evaluation.fitness() > pop[winner].evaluation.fitness() {
            winner = challenger;
        }
    }
    winner
}

fn mutate(genes: &mut [i32], prob: f64, hi: i32, rng: &mut ChaCha8Rng) {
    for g in genes {
        if rng.gen::<f64>() < prob {
            *g = rng.gen_range(SKIP..=hi);
        }
    }
}

pub fn random_chromosome(s: &Scenario, rng: &mut ChaCha8Rng) -> Chromosome {
    let hi = gene_max(s);
    Chromosome {
        genes: (0..s.total_requests())
            .map(|_| {
                if rng.gen::<f64>() < INIT_SKIP_PROB {
                    SKIP
                } else {
                    rng.gen_range(0..=hi)
                }
            })
            .collect(),
    }
}

/// Evolves a population for `ga.epochs` generations and returns the best
/// individual ever seen together with per-epoch statistics.
pub fn run(s: &Scenario, ga: &GaConfig, cfg: &FairnessConfig) -> Result<RunOutcome> {
    s.ensure_valid()?;
    ga.validate()?;
    cfg.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let hi = gene_max(s);
    let n_genes = s.total_requests();

    let initial = (0..ga.population_size)
        .map(|_| random_chromosome(s, &mut rng))
        .collect();
    let mut pop = evaluate_all(s, initial, cfg)?;
    let first = fittest(&pop);
    let mut best_chromosome = pop[first].chromosome.clone();
    let mut best = pop[first].evaluation.clone();
    let mut history = EpochHistory::default();

    for epoch in 1..=ga.epochs {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| {
            pop[b]
                .evaluation
                .fitness()
                .total_cmp(&pop[a].evaluation.fitness())
        });
        let mut next: Vec<Chromosome> = order[..ga.elitism_count]
            .iter()
            .map(|&i| pop[i].chromosome.clone())
            .collect();

        while next.len() < ga.population_size {
            let a = &pop[tournament(&pop, ga.tournament_size, &mut rng)]
                .chromosome
                .genes;
            let b = &pop[tournament(&pop, ga.tournament_size, &mut rng)]
                .chromosome
                .genes;
            let (mut c1, mut c2) = (a.clone(), b.clone());
            if rng.gen::<f64>() < ga.crossover_prob && n_genes >= 2 {
                let cut = rng.gen_range(1..n_genes);
                c1[cut..].copy_from_slice(&b[cut..]);
                c2[cut..].copy_from_slice(&a[cut..]);
            }
            mutate(&mut c1, ga.mutation_prob, hi, &mut rng);
            mutate(&mut c2, ga.mutation_prob, hi, &mut rng);
            next.push(Chromosome { genes: c1 });
            if next.len() < ga.population_size {
                next.push(Chromosome { genes: c2 });
            }
        }

        pop = evaluate_all(s, next, cfg)?;
        let top = fittest(&pop);
        let gen_best = &pop[top].evaluation;
        if gen_best.fitness() > best.fitness() {
            best = gen_best.clone();
            best_chromosome = pop[top].chromosome.clone();
        }
        history.records.push(EpochRecord {
            epoch,
            best_fitness: gen_best.metrics.fitness,
            best_revenue: gen_best.metrics.revenue,
            best_fairness: gen_best.metrics.fairness,
            best_inequity_percent: gen_best.metrics.inequity_percent,
        });
    }

    Ok(RunOutcome {
        best_chromosome,
        best,
        history,
    })
}
