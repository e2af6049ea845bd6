//! Simsat: shuffle the passengers, insert each greedily into the vehicle
//! that raises total satisfaction most, repeat, keep the best restart.
//!
//! Restart `i` draws its shuffle from its own ChaCha stream, so the first
//! `r` restarts are identical whatever the total budget. More restarts can
//! therefore only improve the returned objective.

use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::{Assignment, Instance, VEHICLE_CAPACITY};
use crate::satisfaction::SatisfactionModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InsertionRule {
    /// Join the best vehicle only if that beats opening a new vehicle, whose
    /// value is the passenger's solo score.
    #[default]
    Baseline,
    /// Join the best vehicle whenever its insertion delta is non-negative
    /// (delta floor -1, threshold 0). Opening a new vehicle adds nothing to
    /// the running sum, and a restart is kept only if that sum beats the
    /// best so far, starting from 0.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimsatConfig {
    /// `None` means `n * n`.
    pub restarts: Option<usize>,
    pub seed: u64,
    pub rule: InsertionRule,
    pub parallel: bool,
}

impl Default for SimsatConfig {
    fn default() -> Self {
        SimsatConfig {
            restarts: None,
            seed: 0,
            rule: InsertionRule::Baseline,
            parallel: true,
        }
    }
}

/// Sorted member indices packed 16 bits apiece; unused slots are 0xFFFF.
type GroupKey = u64;

const EMPTY_SLOT: u64 = 0xFFFF;

#[derive(Clone, Copy)]
struct Cab {
    members: [u16; VEHICLE_CAPACITY],
    len: usize,
    sat: f64,
}

impl Cab {
    fn key_with(&self, extra: Option<u16>) -> GroupKey {
        let mut buf = [u16::MAX; VEHICLE_CAPACITY];
        buf[..self.len].copy_from_slice(&self.members[..self.len]);
        let mut len = self.len;
        if let Some(p) = extra {
            buf[len] = p;
            len += 1;
        }
        buf[..len].sort_unstable();
        buf.iter().fold(0u64, |acc, &m| {
            (acc << 16) | if m == u16::MAX { EMPTY_SLOT } else { m as u64 }
        })
    }
}

fn key_members(key: GroupKey) -> Vec<usize> {
    (0..VEHICLE_CAPACITY)
        .map(|slot| (key >> (16 * (VEHICLE_CAPACITY - 1 - slot))) & 0xFFFF)
        .filter(|&m| m != EMPTY_SLOT)
        .map(|m| m as usize)
        .collect()
}

struct Scorer<'i, 'a, M: ?Sized> {
    instance: &'i Instance<'a>,
    model: &'i M,
}

impl<M: SatisfactionModel + ?Sized> Scorer<'_, '_, M> {
    /// Nearest-neighbour satisfaction of a group, memoised per worker. The
    /// value depends only on the member set, so caching never changes results.
    fn group(&self, cache: &mut FxHashMap<GroupKey, f64>, key: GroupKey) -> f64 {
        *cache.entry(key).or_insert_with(|| {
            let members = key_members(key);
            self.instance
                .route_score(&self.instance.nn_route(&members), self.model)
        })
    }
}

struct RestartOutcome {
    index: usize,
    /// Baseline: total satisfaction. Literal: the running sum.
    value: f64,
    /// Literal only: whether the restart beat the initial maximum of 0.
    eligible: bool,
    groups: Vec<Vec<usize>>,
}

fn run_restart<M: SatisfactionModel + ?Sized>(
    scorer: &Scorer<'_, '_, M>,
    cache: &mut FxHashMap<GroupKey, f64>,
    config: &SimsatConfig,
    index: usize,
) -> RestartOutcome {
    let n = scorer.instance.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let mut order: Vec<u16> = (0..n as u16).collect();
    order.shuffle(&mut rng);

    let mut cabs: Vec<Cab> = Vec::with_capacity(n);
    let mut running = 0.0;
    for &p in &order {
        let mut best: Option<(usize, f64, f64)> = None;
        for (ci, cab) in cabs.iter().enumerate() {
            if cab.len == VEHICLE_CAPACITY {
                continue;
            }
            let with = scorer.group(cache, cab.key_with(Some(p)));
            let delta = with - cab.sat;
            if best.is_none_or(|(_, d, _)| delta > d) {
                best = Some((ci, delta, with));
            }
        }
        let solo = Cab {
            members: [p, 0, 0, 0],
            len: 1,
            sat: 0.0,
        };
        let join = match config.rule {
            InsertionRule::Baseline => {
                let solo_sat = scorer.group(cache, solo.key_with(None));
                best.filter(|&(_, delta, _)| delta > solo_sat)
                    .ok_or(solo_sat)
            }
            InsertionRule::Literal => best
                .filter(|&(_, delta, _)| delta >= 0.0)
                .ok_or_else(|| scorer.group(cache, solo.key_with(None))),
        };
        match join {
            Ok((ci, delta, with)) => {
                let cab = &mut cabs[ci];
                cab.members[cab.len] = p;
                cab.len += 1;
                cab.sat = with;
                running += delta;
            }
            Err(solo_sat) => cabs.push(Cab {
                sat: solo_sat,
                ..solo
            }),
        }
    }

    let groups = cabs
        .iter()
        .map(|c| c.members[..c.len].iter().map(|&m| m as usize).collect())
        .collect();
    match config.rule {
        InsertionRule::Baseline => RestartOutcome {
            index,
            value: cabs.iter().map(|c| c.sat).sum(),
            eligible: true,
            groups,
        },
        InsertionRule::Literal => RestartOutcome {
            index,
            value: running,
            eligible: running > 0.0,
            groups,
        },
    }
}

/// Deterministic preference between two restarts: higher value wins, then
/// the lower restart index.
fn better(a: RestartOutcome, b: RestartOutcome) -> RestartOutcome {
    let a_first = match (a.eligible, b.eligible) {
        (true, false) => true,
        (false, true) => false,
        _ => {
            if a.eligible && a.value != b.value {
                a.value > b.value
            } else {
                a.index < b.index
            }
        }
    };
    if a_first {
        a
    } else {
        b
    }
}

/// Runs Simsat and returns the best restart's assignment, with each vehicle
/// driven in nearest-neighbour order and scored by `model`.
pub fn simsat<M: SatisfactionModel + ?Sized>(
    instance: &Instance<'_>,
    model: &M,
    config: &SimsatConfig,
) -> Assignment {
    let n = instance.len();
    let restarts = config.restarts.unwrap_or(n * n).max(1);
    let scorer = Scorer { instance, model };

    let winner = if config.parallel {
        // One cache per worker thread, kept across rayon's splits. Locks are
        // uncontended: a restart never yields to other work mid-run.
        let caches: Vec<Mutex<FxHashMap<GroupKey, f64>>> = (0..rayon::current_num_threads())
            .map(|_| Mutex::default())
            .collect();
        (0..restarts)
            .into_par_iter()
            .map(|i| {
                let slot = rayon::current_thread_index().unwrap_or(0) % caches.len();
                let mut cache = caches[slot].lock().unwrap_or_else(|e| e.into_inner());
                run_restart(&scorer, &mut cache, config, i)
            })
            .reduce_with(better)
            .unwrap()
    } else {
        let mut cache = FxHashMap::default();
        (0..restarts)
            .map(|i| run_restart(&scorer, &mut cache, config, i))
            .reduce(better)
            .unwrap()
    };

    let routes = winner.groups.iter().map(|g| instance.nn_route(g)).collect();
    instance.assignment_from_routes(routes, model)
}
