//! Exhaustive reference solver for tiny instances.
//!
//! Walks every set partition of the passengers (as restricted growth
//! strings), and for every block every drop-off order (Heap's algorithm).
//! Deliberately shares no search code with the exact solver so the two can
//! check each other.

use super::{Assignment, Instance, VEHICLE_CAPACITY};
use crate::error::{Error, Result};
use crate::satisfaction::SatisfactionModel;

pub const ORACLE_LIMIT: usize = 7;

/// Calls `visit` with every restricted growth string of length `n` whose
/// blocks hold at most `cap` elements.
fn for_each_partition(n: usize, cap: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(
        pos: usize,
        labels: &mut Vec<usize>,
        sizes: &mut Vec<usize>,
        cap: usize,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if pos == labels.len() {
            visit(labels);
            return;
        }
        for b in 0..=sizes.len() {
            if b == sizes.len() {
                sizes.push(0);
            }
            if sizes[b] < cap {
                sizes[b] += 1;
                labels[pos] = b;
                rec(pos + 1, labels, sizes, cap, visit);
                sizes[b] -= 1;
            }
            if sizes[b] == 0 {
                sizes.pop();
            }
        }
    }
    rec(0, &mut vec![0; n], &mut Vec::new(), cap, visit);
}

/// Heap's algorithm, iterative form.
fn for_each_permutation(items: &mut [usize], visit: &mut dyn FnMut(&[usize])) {
    let n = items.len();
    let mut c = vec![0; n];
    visit(items);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Best assignment found by trying everything. Refuses more than
/// [`ORACLE_LIMIT`] passengers.
pub fn brute_force_oracle<M: SatisfactionModel + ?Sized>(
    instance: &Instance<'_>,
    model: &M,
) -> Result<Assignment> {
    let n = instance.len();
    if n > ORACLE_LIMIT {
        return Err(Error::Capacity {
            n,
            limit: ORACLE_LIMIT,
        });
    }
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    for_each_partition(n, VEHICLE_CAPACITY, &mut |labels| {
        let blocks = labels.iter().max().map_or(0, |m| m + 1);
        let mut total = 0.0;
        let mut routes = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == b).collect();
            let mut block_best: Option<(f64, Vec<usize>)> = None;
            for_each_permutation(&mut members, &mut |perm| {
                let s = instance.route_score(perm, model);
                if block_best.as_ref().is_none_or(|(bs, _)| s > *bs) {
                    block_best = Some((s, perm.to_vec()));
                }
            });
            let (s, r) = block_best.unwrap();
            total += s;
            routes.push(r);
        }
        if best.as_ref().is_none_or(|(bt, _)| total > *bt) {
            best = Some((total, routes));
        }
    });
    let (_, routes) = best.expect("at least one passenger");
    Ok(instance.assignment_from_routes(routes, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;
    use crate::satisfaction::{EconParams, ProxyKind, ProxyObjective};
    use crate::solvers::tests::{matrix_from, passengers};

    /// Stirling-style recurrence for partitions with bounded block size:
    /// choose the block holding the first element.
    fn bounded_bell(n: usize, cap: usize) -> usize {
        fn binom(n: usize, k: usize) -> usize {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        if n == 0 {
            return 1;
        }
        (0..cap.min(n))
            .map(|k| binom(n - 1, k) * bounded_bell(n - 1 - k, cap))
            .sum()
    }

    #[test]
    fn partition_counts() {
        let mut count = 0;
        for_each_partition(5, 4, &mut |_| count += 1);
        assert_eq!(count, 51);
        for n in 1..=8 {
            let mut c = 0;
            for_each_partition(n, 4, &mut |_| c += 1);
            assert_eq!(c, bounded_bell(n, 4), "n={n}");
        }
    }

    #[test]
    fn permutations_are_distinct_and_complete() {
        let mut seen = Vec::new();
        for_each_permutation(&mut [0, 1, 2, 3], &mut |p| seen.push(p.to_vec()));
        assert_eq!(seen.len(), 24);
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn refuses_large_instances() {
        let m = matrix_from(&[(0, 1, 10.0)], 2);
        let inst =
            Instance::new(&m, NodeId(0), &passengers(&[1; 8]), EconParams::default()).unwrap();
        let gain = ProxyObjective::new(ProxyKind::Gain, EconParams::default());
        assert!(matches!(
            brute_force_oracle(&inst, &gain),
            Err(Error::Capacity { n: 8, limit: 7 })
        ));
    }

    #[test]
    fn pair_to_same_far_place_shares() {
        let m = matrix_from(&[(0, 1, 40.0)], 2);
        let params = EconParams::default();
        let inst = Instance::new(&m, NodeId(0), &passengers(&[1, 1]), params).unwrap();
        let gain = ProxyObjective::new(ProxyKind::Gain, params);
        let a = brute_force_oracle(&inst, &gain).unwrap();
        assert_eq!(a.vehicle_count(), 1);
    }
}
