//! Undirected road graphs with travel-time edge weights.
//!
//! A [`RoadGraph`] is immutable once built. Nodes are kept sorted by id and
//! every edge is stored once with `u < v`, so two graphs built from the same
//! nodes and edges compare equal regardless of input order.

mod generate;
mod io;
mod shortest;

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

pub use generate::{generate_grid_graph, generate_random_graph, RANDOM_GRAPH_SIDE_KM};
pub use io::{read_graph, read_node_edge_files, write_graph};
pub use shortest::{TravelTimeMatrix, DEFAULT_DENSE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Kilometres.
    pub x: f64,
    /// Kilometres.
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    /// Minutes, strictly positive.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    origin: NodeId,
    // Neighbour lists by node index, sorted by neighbour index.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl RoadGraph {
    /// Validates and normalises a graph.
    ///
    /// Rejects duplicate node ids, self-loops, parallel edges, edges touching
    /// unknown nodes, non-positive or non-finite travel times, and a missing
    /// origin. Reachability from the origin is not required here; see
    /// [`RoadGraph::is_connected`] and [`RoadGraph::crop_to_k_nearest`].
    pub fn new(mut nodes: Vec<Node>, edges: Vec<Edge>, origin: NodeId) -> Result<Self> {
        nodes.sort_by_key(|n| n.id);
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::input(format!("duplicate node id {}", w[0].id)));
        }
        for n in &nodes {
            if !n.x.is_finite() || !n.y.is_finite() {
                return Err(Error::input(format!(
                    "node {} has non-finite coordinates",
                    n.id
                )));
            }
        }
        let index_of = |id: NodeId| nodes.binary_search_by_key(&id, |n| n.id).ok();
        if index_of(origin).is_none() {
            return Err(Error::input(format!("origin {origin} is not a node")));
        }

        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            if e.u == e.v {
                return Err(Error::input(format!("self-loop on node {}", e.u)));
            }
            if !(e.time.is_finite() && e.time > 0.0) {
                return Err(Error::input(format!(
                    "edge {}-{} has invalid travel time {}",
                    e.u, e.v, e.time
                )));
            }
            for end in [e.u, e.v] {
                if index_of(end).is_none() {
                    return Err(Error::input(format!("edge references unknown node {end}")));
                }
            }
            let (u, v) = if e.u < e.v { (e.u, e.v) } else { (e.v, e.u) };
            if !seen.insert((u, v)) {
                return Err(Error::input(format!("duplicate edge {u}-{v}")));
            }
            normalized.push(Edge { u, v, time: e.time });
        }
        normalized.sort_by_key(|e| (e.u, e.v));

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in &normalized {
            let (a, b) = (index_of(e.u).unwrap(), index_of(e.v).unwrap());
            adjacency[a].push((b, e.time));
            adjacency[b].push((a, e.time));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(j, _)| j);
        }

        Ok(RoadGraph {
            nodes,
            edges: normalized,
            origin,
            adjacency,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn origin(&self) -> NodeId {
        self.origin
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index_of(id).is_some()
    }

    pub(crate) fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub(crate) fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adjacency
    }

    /// True when every node is reachable from the origin.
    pub fn is_connected(&self) -> bool {
        let start = self.index_of(self.origin).unwrap();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(j, _) in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.nodes.len()
    }

    /// Keeps the `k` nodes closest to the origin by travel time.
    ///
    /// Unreachable nodes are always dropped. Equal times are ordered by node
    /// id. The retained set is closed under shortest-path predecessors, so
    /// every retained node keeps its shortest time from the origin and the
    /// result is connected.
    pub fn crop_to_k_nearest(&self, k: usize) -> RoadGraph {
        let k = k.max(1);
        let origin = self.index_of(self.origin).unwrap();
        let (dist, pred) = shortest::dijkstra_with_predecessors(self, origin);

        let mut reachable: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| dist[i].is_finite())
            .collect();
        reachable.sort_by(|&a, &b| {
            dist[a]
                .total_cmp(&dist[b])
                .then(self.nodes[a].id.cmp(&self.nodes[b].id))
        });

        let mut keep = vec![false; self.nodes.len()];
        for &i in reachable.iter().take(k) {
            let mut cur = i;
            while !keep[cur] {
                keep[cur] = true;
                match pred[cur] {
                    Some(p) => cur = p,
                    None => break,
                }
            }
        }

        let nodes: Vec<Node> = self
            .nodes
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(n, _)| *n)
            .collect();
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| keep[self.index_of(e.u).unwrap()] && keep[self.index_of(e.v).unwrap()])
            .copied()
            .collect();
        RoadGraph::new(nodes, edges, self.origin).expect("subgraph of a valid graph is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph(nodes: &[u64], edges: &[(u64, u64, f64)], origin: u64) -> RoadGraph {
        RoadGraph::new(
            nodes
                .iter()
                .map(|&id| Node {
                    id: NodeId(id),
                    x: id as f64,
                    y: 0.0,
                })
                .collect(),
            edges
                .iter()
                .map(|&(u, v, time)| Edge {
                    u: NodeId(u),
                    v: NodeId(v),
                    time,
                })
                .collect(),
            NodeId(origin),
        )
        .unwrap()
    }

    #[test]
    fn rejects_self_loop_and_duplicate_edges() {
        let n = |id| Node {
            id: NodeId(id),
            x: 0.0,
            y: 0.0,
        };
        let e = |u, v| Edge {
            u: NodeId(u),
            v: NodeId(v),
            time: 1.0,
        };
        assert!(RoadGraph::new(vec![n(0), n(1)], vec![e(0, 0)], NodeId(0)).is_err());
        assert!(RoadGraph::new(vec![n(0), n(1)], vec![e(0, 1), e(1, 0)], NodeId(0)).is_err());
        assert!(RoadGraph::new(vec![n(0), n(0)], vec![], NodeId(0)).is_err());
        assert!(RoadGraph::new(vec![n(0)], vec![], NodeId(3)).is_err());
        let bad = Edge {
            u: NodeId(0),
            v: NodeId(1),
            time: 0.0,
        };
        assert!(RoadGraph::new(vec![n(0), n(1)], vec![bad], NodeId(0)).is_err());
    }

    #[test]
    fn normalises_edge_direction_and_order() {
        let a = graph(&[0, 1, 2], &[(2, 1, 1.0), (1, 0, 2.0)], 0);
        let b = graph(&[2, 0, 1], &[(0, 1, 2.0), (1, 2, 1.0)], 0);
        assert_eq!(a, b);
        assert_eq!(a.edges()[0].u, NodeId(0));
    }

    #[test]
    fn crop_identity_when_k_covers_graph() {
        let g = graph(&[0, 1, 2, 3], &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], 0);
        assert_eq!(g.crop_to_k_nearest(10), g);
    }

    #[test]
    fn crop_star_keeps_nearest_leaf() {
        let g = graph(&[0, 1, 2, 3], &[(0, 1, 1.0), (0, 2, 2.0), (0, 3, 3.0)], 0);
        let c = g.crop_to_k_nearest(2);
        let ids: Vec<_> = c.nodes().iter().map(|n| n.id.0).collect();
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(c.edge_count(), 1);
    }

    #[test]
    fn crop_drops_unreachable_nodes() {
        let g = graph(&[0, 1, 2, 3], &[(0, 1, 1.0), (2, 3, 1.0)], 0);
        assert!(!g.is_connected());
        let c = g.crop_to_k_nearest(100);
        assert_eq!(c.node_count(), 2);
        assert!(c.is_connected());
    }

    #[test]
    fn crop_ties_break_by_node_id() {
        let g = graph(&[0, 5, 3], &[(0, 5, 1.0), (0, 3, 1.0)], 0);
        let c = g.crop_to_k_nearest(2);
        assert!(c.contains(NodeId(3)));
        assert!(!c.contains(NodeId(5)));
    }
}
