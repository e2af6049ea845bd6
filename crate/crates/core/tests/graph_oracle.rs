use proptest::prelude::*;

use rideshare::graph::{
    generate_grid_graph, generate_random_graph, NodeId, RoadGraph, TravelTimeMatrix,
};

/// Textbook Floyd-Warshall over the public edge list.
fn all_pairs(g: &RoadGraph) -> Vec<Vec<f64>> {
    let ids: Vec<NodeId> = g.nodes().iter().map(|n| n.id).collect();
    let at = |id: NodeId| ids.iter().position(|&x| x == id).unwrap();
    let n = ids.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        let (u, v) = (at(e.u), at(e.v));
        d[u][v] = d[u][v].min(e.time);
        d[v][u] = d[v][u].min(e.time);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn ids(g: &RoadGraph) -> Vec<NodeId> {
    g.nodes().iter().map(|n| n.id).collect()
}

#[test]
fn both_matrix_routes_match_independent_all_pairs() {
    for seed in 0..50 {
        let g = generate_random_graph(15 + (seed as usize % 4) * 10, seed);
        let want = all_pairs(&g);
        let nodes = ids(&g);
        for threshold in [usize::MAX, 0] {
            let m = TravelTimeMatrix::build_with_threshold(&g, &nodes, threshold).unwrap();
            for (i, row) in want.iter().enumerate() {
                for (j, &w) in row.iter().enumerate() {
                    assert!((m.time_at(i, j) - w).abs() <= 1e-9, "seed {seed} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn single_source_times_match_all_pairs_row() {
    let g = generate_grid_graph(6, 5, 2);
    let want = all_pairs(&g);
    let nodes = ids(&g);
    let o = nodes.iter().position(|&x| x == g.origin()).unwrap();
    let got = g.shortest_times_from(g.origin()).unwrap();
    assert_eq!(got.len(), nodes.len());
    for (j, id) in nodes.iter().enumerate() {
        assert!((got[id] - want[o][j]).abs() <= 1e-9);
    }
}

#[test]
fn terminal_matrix_is_symmetric_with_zero_diagonal() {
    let g = generate_random_graph(35, 9);
    let nodes = ids(&g);
    let m = TravelTimeMatrix::build(&g, &nodes[..10]).unwrap();
    for i in 0..10 {
        assert_eq!(m.time_at(i, i), 0.0);
        for j in 0..10 {
            assert!((m.time_at(i, j) - m.time_at(j, i)).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn crop_keeps_the_k_nearest_and_their_times(seed in 0u64..10_000, k in 1usize..60) {
        let g = generate_random_graph(60, seed);
        let before = g.shortest_times_from(g.origin()).unwrap();
        let cropped = g.crop_to_k_nearest(k);
        prop_assert_eq!(cropped.node_count(), k.min(before.len()));
        prop_assert!(cropped.is_connected());
        prop_assert_eq!(cropped.origin(), g.origin());
        let after = cropped.shortest_times_from(cropped.origin()).unwrap();
        let mut sorted: Vec<f64> = before.values().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let cutoff = sorted[cropped.node_count() - 1];
        for (id, t) in &after {
            prop_assert!((t - before[id]).abs() <= 1e-9);
            prop_assert!(*t <= cutoff);
        }
    }

    #[test]
    fn triangle_inequality_holds(seed in 0u64..10_000) {
        let g = generate_random_graph(25, seed);
        let nodes = ids(&g);
        let m = TravelTimeMatrix::build(&g, &nodes).unwrap();
        let n = nodes.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(m.time_at(i, j) <= m.time_at(i, k) + m.time_at(k, j) + 1e-9);
                }
            }
        }
    }
}
