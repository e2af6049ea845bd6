//! Exact assignment by enumerating vehicle-size partitions.
//!
//! The multisets of vehicle loads summing to `n` come from a coin-change
//! style enumeration. For each multiset the passengers are split into groups
//! of those sizes, with equal-size groups treated as unordered (their
//! smallest members must increase). Every group's best drop-off order is
//! found once, over all permutations, and looked up during the search.

use rustc_hash::FxHashMap;

use super::{Assignment, Instance, VEHICLE_CAPACITY};
use crate::error::{Error, Result};
use crate::satisfaction::SatisfactionModel;

pub const DEFAULT_EXACT_LIMIT: usize = 10;

/// All multisets of integers in `1..=cap` summing to `n`, each listed in
/// descending order, the whole list in descending lexicographic order.
pub fn enumerate_capacity_partitions(n: usize, cap: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, max_part: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(current.clone());
            return;
        }
        for part in (1..=max_part.min(left)).rev() {
            current.push(part);
            rec(left - part, part, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 && cap > 0 {
        rec(n, cap, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Clone, Copy)]
struct BestRoute {
    score: f64,
    route: [u8; VEHICLE_CAPACITY],
    len: u8,
}

fn next_permutation(xs: &mut [u8]) -> bool {
    let Some(i) = xs.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = xs.iter().rposition(|&x| x > xs[i]).unwrap();
    xs.swap(i, j);
    xs[i + 1..].reverse();
    true
}

fn best_routes<M: SatisfactionModel + ?Sized>(
    instance: &Instance<'_>,
    model: &M,
) -> FxHashMap<u32, BestRoute> {
    let n = instance.len();
    let mut table = FxHashMap::default();
    let mut route = Vec::with_capacity(VEHICLE_CAPACITY);
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size > VEHICLE_CAPACITY {
            continue;
        }
        let mut perm: Vec<u8> = (0..n as u8).filter(|&i| mask & (1 << i) != 0).collect();
        let mut best: Option<BestRoute> = None;
        loop {
            route.clear();
            route.extend(perm.iter().map(|&i| i as usize));
            let score = instance.route_score(&route, model);
            if best.is_none_or(|b| score > b.score) {
                let mut r = [0u8; VEHICLE_CAPACITY];
                r[..size].copy_from_slice(&perm);
                best = Some(BestRoute {
                    score,
                    route: r,
                    len: size as u8,
                });
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        table.insert(mask, best.unwrap());
    }
    table
}

struct Search<'t> {
    table: &'t FxHashMap<u32, BestRoute>,
    chosen: Vec<u32>,
    best_score: f64,
    best_groups: Vec<u32>,
}

impl Search<'_> {
    /// Places groups of `sizes[0]`, `sizes[1]`, ... from `remaining`. When the
    /// previous group had the same size, this group's smallest member must
    /// exceed `floor`.
    fn run(&mut self, sizes: &[usize], remaining: u32, floor: Option<u32>, acc: f64) {
        let Some((&size, rest)) = sizes.split_first() else {
            if acc > self.best_score {
                self.best_score = acc;
                self.best_groups = self.chosen.clone();
            }
            return;
        };
        let same_next = rest.first() == Some(&size);
        let members: Vec<u32> = (0..32).filter(|&i| remaining & (1 << i) != 0).collect();
        let mut pick = Vec::with_capacity(size);
        self.combinations(&members, 0, size, &mut pick, &mut |this, group| {
            let min = group.trailing_zeros();
            if floor.is_some_and(|f| min <= f) {
                return;
            }
            let score = this.table[&group].score;
            this.chosen.push(group);
            this.run(
                rest,
                remaining & !group,
                same_next.then_some(min),
                acc + score,
            );
            this.chosen.pop();
        });
    }

    fn combinations(
        &mut self,
        members: &[u32],
        start: usize,
        size: usize,
        pick: &mut Vec<u32>,
        visit: &mut dyn FnMut(&mut Self, u32),
    ) {
        if pick.len() == size {
            let mask = pick.iter().fold(0u32, |m, &i| m | (1 << i));
            visit(self, mask);
            return;
        }
        let need = size - pick.len();
        for k in start..=members.len().saturating_sub(need) {
            pick.push(members[k]);
            self.combinations(members, k + 1, size, pick, visit);
            pick.pop();
        }
    }
}

/// Globally optimal assignment under `model`, for at most `limit`
/// passengers.
///
/// Load multisets are explored from most vehicles to fewest, and a later
/// candidate replaces the incumbent only when strictly better, so ties go to
/// the grouping with more vehicles.
pub fn optimal_assign<M: SatisfactionModel + ?Sized>(
    instance: &Instance<'_>,
    model: &M,
    limit: usize,
) -> Result<Assignment> {
    let n = instance.len();
    if n > limit {
        return Err(Error::Capacity { n, limit });
    }
    if n > 24 {
        return Err(Error::Capacity { n, limit: 24 });
    }
    let table = best_routes(instance, model);

    let mut partitions = enumerate_capacity_partitions(n, VEHICLE_CAPACITY);
    partitions.reverse();
    partitions.sort_by_key(|p| std::cmp::Reverse(p.len()));

    let mut search = Search {
        table: &table,
        chosen: Vec::new(),
        best_score: f64::NEG_INFINITY,
        best_groups: Vec::new(),
    };
    let everyone = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for sizes in &partitions {
        search.run(sizes, everyone, None, 0.0);
    }

    let routes = search
        .best_groups
        .iter()
        .map(|g| {
            let b = table[g];
            b.route[..b.len as usize]
                .iter()
                .map(|&i| i as usize)
                .collect()
        })
        .collect();
    Ok(instance.assignment_from_routes(routes, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;
    use crate::satisfaction::{EconParams, ProxyKind, ProxyObjective};
    use crate::solvers::tests::{flat_model, matrix_from, passengers};

    fn brute_partition_count(n: usize, cap: usize) -> usize {
        // Count multisets by checking every non-increasing sequence directly.
        fn count(left: usize, max_part: usize) -> usize {
            if left == 0 {
                return 1;
            }
            (1..=max_part.min(left)).map(|p| count(left - p, p)).sum()
        }
        count(n, cap)
    }

    #[test]
    fn partitions_of_five() {
        let p = enumerate_capacity_partitions(5, 4);
        assert_eq!(
            p,
            vec![
                vec![4, 1],
                vec![3, 2],
                vec![3, 1, 1],
                vec![2, 2, 1],
                vec![2, 1, 1, 1],
                vec![1, 1, 1, 1, 1]
            ]
        );
        assert_eq!(enumerate_capacity_partitions(1, 4), vec![vec![1]]);
    }

    #[test]
    fn partitions_of_ten_include_examples() {
        let p = enumerate_capacity_partitions(10, 4);
        for want in [vec![3, 3, 3, 1], vec![2, 2, 2, 2, 2], vec![4, 4, 2]] {
            assert!(p.contains(&want));
        }
        for part in &p {
            assert_eq!(part.iter().sum::<usize>(), 10);
            assert!(part.windows(2).all(|w| w[0] >= w[1]));
            assert!(part.iter().all(|&x| (1..=4).contains(&x)));
        }
        let mut dedup = p.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), p.len());
        for n in 1..=12 {
            assert_eq!(
                enumerate_capacity_partitions(n, 4).len(),
                brute_partition_count(n, 4)
            );
        }
    }

    #[test]
    fn next_permutation_visits_all() {
        let mut xs = [0u8, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut xs) {
            count += 1;
        }
        assert_eq!(count, 24);
    }

    #[test]
    fn single_passenger_is_solo() {
        let m = matrix_from(&[(0, 1, 5.0)], 2);
        let inst = Instance::new(&m, NodeId(0), &passengers(&[1]), EconParams::default()).unwrap();
        let a = optimal_assign(&inst, &flat_model(), 10).unwrap();
        assert_eq!(a.vehicle_count(), 1);
        assert_eq!(a.objective, 4.0);
    }

    #[test]
    fn identical_far_destinations_share_under_gain() {
        let m = matrix_from(&[(0, 1, 40.0)], 2);
        let params = EconParams::default();
        let inst = Instance::new(&m, NodeId(0), &passengers(&[1, 1]), params).unwrap();
        let gain = ProxyObjective::new(ProxyKind::Gain, params);
        let a = optimal_assign(&inst, &gain, 10).unwrap();
        assert_eq!(a.vehicle_count(), 1);
        // Each saves half the 40-dollar ride.
        assert!((a.objective - 40.0).abs() < 1e-9);
    }

    #[test]
    fn time_only_ties_go_to_more_vehicles() {
        // Everyone shares a destination, so sharing costs no time either.
        let m = matrix_from(&[(0, 1, 10.0)], 2);
        let params = EconParams::default();
        let inst = Instance::new(&m, NodeId(0), &passengers(&[1; 6]), params).unwrap();
        let time = ProxyObjective::new(ProxyKind::TimeOnly, params);
        let a = optimal_assign(&inst, &time, 10).unwrap();
        assert_eq!(a.vehicle_count(), 6);
        assert_eq!(a.objective, 0.0);
    }

    #[test]
    fn over_limit_is_refused() {
        let m = matrix_from(&[(0, 1, 10.0)], 2);
        let inst =
            Instance::new(&m, NodeId(0), &passengers(&[1; 5]), EconParams::default()).unwrap();
        assert!(matches!(
            optimal_assign(&inst, &flat_model(), 4),
            Err(Error::Capacity { n: 5, limit: 4 })
        ));
    }

    #[test]
    fn picks_best_drop_off_order() {
        // Dropping the near passenger first costs the far one little; the
        // reverse order drags the near one across the map and back.
        let m = matrix_from(&[(0, 1, 5.0), (1, 2, 30.0)], 3);
        let params = EconParams::default();
        let inst = Instance::new(&m, NodeId(0), &passengers(&[2, 1]), params).unwrap();
        let gain = ProxyObjective::new(ProxyKind::Gain, params);
        let a = optimal_assign(&inst, &gain, 10).unwrap();
        if a.vehicle_count() == 1 {
            assert_eq!(
                a.routes()[0],
                vec![
                    crate::solvers::PassengerId(1),
                    crate::solvers::PassengerId(0)
                ]
            );
        }
    }
}
