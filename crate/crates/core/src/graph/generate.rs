use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Edge, Node, NodeId, RoadGraph};

/// Side of the square on which random-graph vertices are placed.
pub const RANDOM_GRAPH_SIDE_KM: f64 = 30.0;

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // Lower index becomes the root, keeping the structure seed-independent.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

fn air_distance(a: &Node, b: &Node) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Random planar graph with `n_vertices` uniform on a 30 km square.
///
/// Each vertex pair is joined with probability `d / d_max`, where `d` is the
/// pair's air distance. Travel time is `d * U(1, 2)` minutes at 1 km/min.
/// Disconnected results are repaired by adding the shortest air-distance
/// edges that join components (Kruskal order). The origin is a uniformly
/// drawn vertex. Node ids are `0..n_vertices`.
pub fn generate_random_graph(n_vertices: usize, seed: u64) -> RoadGraph {
    let n = n_vertices.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            id: NodeId(i as u64),
            x: rng.random::<f64>() * RANDOM_GRAPH_SIDE_KM,
            y: rng.random::<f64>() * RANDOM_GRAPH_SIDE_KM,
        })
        .collect();
    let origin = NodeId(rng.random_range(0..n) as u64);

    let mut d_max: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            d_max = d_max.max(air_distance(&nodes[i], &nodes[j]));
        }
    }

    let mut sets = DisjointSets::new(n);
    let mut edges = Vec::new();
    let mut absent = Vec::new();
    let travel_time = |d: f64, rng: &mut ChaCha8Rng| (d * rng.random_range(1.0..2.0)).max(1e-12);
    for i in 0..n {
        for j in i + 1..n {
            let d = air_distance(&nodes[i], &nodes[j]);
            if d_max > 0.0 && rng.random::<f64>() < d / d_max {
                edges.push(Edge {
                    u: nodes[i].id,
                    v: nodes[j].id,
                    time: travel_time(d, &mut rng),
                });
                sets.union(i, j);
            } else {
                absent.push((d, i, j));
            }
        }
    }

    absent.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    for (d, i, j) in absent {
        if sets.union(i, j) {
            edges.push(Edge {
                u: nodes[i].id,
                v: nodes[j].id,
                time: travel_time(d, &mut rng),
            });
        }
    }

    RoadGraph::new(nodes, edges, origin).expect("generated graph is valid")
}

/// Street-grid stand-in for a large city map.
///
/// Vertices sit on a jittered `width x height` lattice with 100 m spacing.
/// Each lattice street is present with probability 0.9 and costs
/// `d * U(1, 2)` minutes. Missing streets leave some vertices unreachable,
/// which is what a raw map import looks like before cropping. The origin is
/// the vertex nearest the lattice centre.
pub fn generate_grid_graph(width: usize, height: usize, seed: u64) -> RoadGraph {
    const SPACING_KM: f64 = 0.1;
    let (w, h) = (width.max(1), height.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |r: usize, c: usize| (r * w + c) as u64;

    let nodes: Vec<Node> = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .map(|(r, c)| Node {
            id: NodeId(id(r, c)),
            x: c as f64 * SPACING_KM + rng.random_range(-0.3..0.3) * SPACING_KM,
            y: r as f64 * SPACING_KM + rng.random_range(-0.3..0.3) * SPACING_KM,
        })
        .collect();

    let mut edges = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let a = id(r, c) as usize;
            let mut neighbours = Vec::with_capacity(2);
            if c + 1 < w {
                neighbours.push(id(r, c + 1) as usize);
            }
            if r + 1 < h {
                neighbours.push(id(r + 1, c) as usize);
            }
            for b in neighbours {
                if rng.random::<f64>() < 0.9 {
                    let d = air_distance(&nodes[a], &nodes[b]).max(1e-6);
                    edges.push(Edge {
                        u: nodes[a].id,
                        v: nodes[b].id,
                        time: d * rng.random_range(1.0..2.0),
                    });
                }
            }
        }
    }

    let origin = NodeId(id(h / 2, w / 2));
    RoadGraph::new(nodes, edges, origin).expect("generated grid is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_vertex_graph() {
        let g = generate_random_graph(1, 3);
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert!(g.is_connected());
    }

    #[test]
    fn deterministic_and_connected() {
        for seed in 0..20 {
            let a = generate_random_graph(35, seed);
            assert_eq!(a, generate_random_graph(35, seed));
            assert!(a.is_connected());
            assert_eq!(a.node_count(), 35);
        }
        assert_ne!(generate_random_graph(35, 1), generate_random_graph(35, 2));
    }

    #[test]
    fn edge_weights_within_air_distance_bounds() {
        for seed in 0..20 {
            let g = generate_random_graph(35, seed);
            for e in g.edges() {
                let a = g.nodes()[g.index_of(e.u).unwrap()];
                let b = g.nodes()[g.index_of(e.v).unwrap()];
                let d = air_distance(&a, &b);
                assert!(e.time >= d && e.time <= 2.0 * d, "{e:?} vs air {d}");
            }
            for n in g.nodes() {
                assert!((0.0..=RANDOM_GRAPH_SIDE_KM).contains(&n.x));
                assert!((0.0..=RANDOM_GRAPH_SIDE_KM).contains(&n.y));
            }
        }
    }

    #[test]
    fn longer_pairs_more_likely_joined() {
        // p = d / d_max: pairs in the top distance quartile should be joined far
        // more often than pairs in the bottom quartile.
        let mut short = (0usize, 0usize);
        let mut long = (0usize, 0usize);
        for seed in 0..10 {
            let g = generate_random_graph(60, seed);
            let nodes = g.nodes();
            let mut pairs = Vec::new();
            for i in 0..nodes.len() {
                for j in i + 1..nodes.len() {
                    pairs.push((air_distance(&nodes[i], &nodes[j]), nodes[i].id, nodes[j].id));
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let present: std::collections::HashSet<_> =
                g.edges().iter().map(|e| (e.u, e.v)).collect();
            let q = pairs.len() / 4;
            for (k, p) in pairs.iter().enumerate() {
                let hit = present.contains(&(p.1, p.2)) as usize;
                if k < q {
                    short = (short.0 + hit, short.1 + 1);
                } else if k >= pairs.len() - q {
                    long = (long.0 + hit, long.1 + 1);
                }
            }
        }
        let short_rate = short.0 as f64 / short.1 as f64;
        let long_rate = long.0 as f64 / long.1 as f64;
        assert!(long_rate > 3.0 * short_rate, "{short_rate} vs {long_rate}");
    }

    #[test]
    fn grid_is_deterministic_and_partially_disconnected() {
        let g = generate_grid_graph(40, 40, 5);
        assert_eq!(g, generate_grid_graph(40, 40, 5));
        assert_eq!(g.node_count(), 1600);
        assert!(g.contains(g.origin()));
        let reachable = g.shortest_times_from(g.origin()).unwrap().len();
        assert!(reachable > 1000 && reachable <= 1600);
    }
}
