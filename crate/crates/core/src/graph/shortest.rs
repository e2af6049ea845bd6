use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use super::{NodeId, RoadGraph};
use crate::error::{Error, Result};

/// Largest node count for which the matrix is built with dense
/// Floyd-Warshall. Bigger graphs run one Dijkstra per terminal instead.
pub const DEFAULT_DENSE_THRESHOLD: usize = 2_000;

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    time: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on time, then node index.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn dijkstra_with_predecessors(
    graph: &RoadGraph,
    source: usize,
) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = graph.node_count();
    let adjacency = graph.adjacency();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        time: 0.0,
        node: source,
    });
    while let Some(HeapEntry { time, node }) = heap.pop() {
        if time > dist[node] {
            continue;
        }
        for &(next, w) in &adjacency[node] {
            let candidate = time + w;
            if candidate < dist[next] {
                dist[next] = candidate;
                pred[next] = Some(node);
                heap.push(HeapEntry {
                    time: candidate,
                    node: next,
                });
            }
        }
    }
    (dist, pred)
}

pub(crate) fn dijkstra(graph: &RoadGraph, source: usize) -> Vec<f64> {
    dijkstra_with_predecessors(graph, source).0
}

/// Dense all-pairs shortest times, row-major by node index.
pub(crate) fn floyd_warshall(graph: &RoadGraph) -> Vec<f64> {
    let n = graph.node_count();
    let mut d = vec![f64::INFINITY; n * n];
    for i in 0..n {
        d[i * n + i] = 0.0;
        for &(j, w) in &graph.adjacency()[i] {
            if w < d[i * n + j] {
                d[i * n + j] = w;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let through = dik + d[k * n + j];
                if through < d[i * n + j] {
                    d[i * n + j] = through;
                }
            }
        }
    }
    d
}

impl RoadGraph {
    /// Shortest travel time from `source` to every reachable node.
    pub fn shortest_times_from(&self, source: NodeId) -> Result<BTreeMap<NodeId, f64>> {
        let s = self
            .index_of(source)
            .ok_or_else(|| Error::input(format!("unknown source node {source}")))?;
        let dist = dijkstra(self, s);
        Ok(self
            .nodes()
            .iter()
            .zip(dist)
            .filter(|(_, d)| d.is_finite())
            .map(|(n, d)| (n.id, d))
            .collect())
    }
}

/// Shortest travel times between the vertices of a terminal set.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeMatrix {
    terminals: Vec<NodeId>,
    position: HashMap<NodeId, usize>,
    times: Vec<f64>,
}

impl TravelTimeMatrix {
    /// Builds the matrix with [`DEFAULT_DENSE_THRESHOLD`].
    ///
    /// Repeated terminal ids are collapsed to their first occurrence.
    pub fn build(graph: &RoadGraph, terminals: &[NodeId]) -> Result<Self> {
        Self::build_with_threshold(graph, terminals, DEFAULT_DENSE_THRESHOLD)
    }

    pub fn build_with_threshold(
        graph: &RoadGraph,
        terminals: &[NodeId],
        dense_threshold: usize,
    ) -> Result<Self> {
        if terminals.is_empty() {
            return Err(Error::input("terminal set is empty"));
        }
        let mut unique = Vec::with_capacity(terminals.len());
        let mut position = HashMap::with_capacity(terminals.len());
        let mut indices = Vec::with_capacity(terminals.len());
        for &t in terminals {
            let idx = graph
                .index_of(t)
                .ok_or_else(|| Error::input(format!("unknown terminal node {t}")))?;
            if let std::collections::hash_map::Entry::Vacant(slot) = position.entry(t) {
                slot.insert(unique.len());
                unique.push(t);
                indices.push(idx);
            }
        }

        let m = unique.len();
        let mut times = vec![0.0; m * m];
        if graph.node_count() <= dense_threshold {
            let n = graph.node_count();
            let all = floyd_warshall(graph);
            for (a, &ia) in indices.iter().enumerate() {
                for (b, &ib) in indices.iter().enumerate() {
                    times[a * m + b] = all[ia * n + ib];
                }
            }
        } else {
            for (a, &ia) in indices.iter().enumerate() {
                let dist = dijkstra(graph, ia);
                for (b, &ib) in indices.iter().enumerate() {
                    times[a * m + b] = dist[ib];
                }
            }
        }

        if let Some(bad) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::Connectivity(format!(
                "no path between terminals {} and {}",
                unique[bad / m],
                unique[bad % m]
            )));
        }

        Ok(TravelTimeMatrix {
            terminals: unique,
            position,
            times,
        })
    }

    pub fn terminals(&self) -> &[NodeId] {
        &self.terminals
    }

    pub fn len(&self) -> usize {
        self.terminals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminals.is_empty()
    }

    /// Index of a node in the terminal set.
    pub fn position(&self, id: NodeId) -> Option<usize> {
        self.position.get(&id).copied()
    }

    #[inline]
    pub fn time_at(&self, i: usize, j: usize) -> f64 {
        self.times[i * self.terminals.len() + j]
    }

    pub fn time(&self, from: NodeId, to: NodeId) -> Option<f64> {
        Some(self.time_at(self.position(from)?, self.position(to)?))
    }
}
