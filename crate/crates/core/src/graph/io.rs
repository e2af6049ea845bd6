//! Text formats for road graphs.
//!
//! Combined graph file:
//!
//! ```text
//! #origin 0
//! N 0 1.5 2.25
//! N 1 3 4
//! E 0 1 2.5
//! ```
//!
//! Separate import files are `id,x_km,y_km` lines for nodes and
//! `u,v,time_min` lines for edges. Blank lines are ignored everywhere; other
//! lines starting with `#` are comments. Floats are written with Rust's
//! shortest round-trip formatting, so write-then-read is lossless.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{Edge, Node, NodeId, RoadGraph};
use crate::error::{Error, Result};

fn field<T: FromStr>(raw: Option<&str>, line: usize, what: &str) -> Result<T> {
    let raw = raw.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{raw}`")))
}

fn no_trailing<'a>(mut rest: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match rest.next() {
        Some(extra) => Err(Error::parse(line, format!("unexpected field `{extra}`"))),
        None => Ok(()),
    }
}

struct EdgeCollector {
    edges: Vec<Edge>,
    seen: HashSet<(NodeId, NodeId)>,
}

impl EdgeCollector {
    fn new() -> Self {
        EdgeCollector {
            edges: Vec::new(),
            seen: HashSet::new(),
        }
    }

    fn push(&mut self, edge: Edge, line: usize) -> Result<()> {
        let key = if edge.u < edge.v {
            (edge.u, edge.v)
        } else {
            (edge.v, edge.u)
        };
        if !self.seen.insert(key) {
            return Err(Error::input(format!(
                "line {line}: duplicate edge {}-{}",
                key.0, key.1
            )));
        }
        self.edges.push(edge);
        Ok(())
    }
}

impl RoadGraph {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "#origin {}", self.origin()).unwrap();
        for n in self.nodes() {
            writeln!(out, "N {} {} {}", n.id, n.x, n.y).unwrap();
        }
        for e in self.edges() {
            writeln!(out, "E {} {} {}", e.u, e.v, e.time).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut origin = None;
        let mut nodes = Vec::new();
        let mut edges = EdgeCollector::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("#origin") {
                if origin.is_some() {
                    return Err(Error::parse(line, "second #origin header"));
                }
                let mut parts = rest.split_whitespace();
                origin = Some(NodeId(field(parts.next(), line, "origin id")?));
                no_trailing(parts, line)?;
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            match parts.next() {
                Some("N") => {
                    nodes.push(Node {
                        id: NodeId(field(parts.next(), line, "node id")?),
                        x: field(parts.next(), line, "x coordinate")?,
                        y: field(parts.next(), line, "y coordinate")?,
                    });
                    no_trailing(parts, line)?;
                }
                Some("E") => {
                    let edge = Edge {
                        u: NodeId(field(parts.next(), line, "edge endpoint")?),
                        v: NodeId(field(parts.next(), line, "edge endpoint")?),
                        time: field(parts.next(), line, "travel time")?,
                    };
                    no_trailing(parts, line)?;
                    edges.push(edge, line)?;
                }
                Some(tag) => return Err(Error::parse(line, format!("unknown record `{tag}`"))),
                None => unreachable!(),
            }
        }
        let origin = origin.ok_or_else(|| Error::input("missing #origin header"))?;
        RoadGraph::new(nodes, edges.edges, origin)
    }
}

pub fn write_graph(graph: &RoadGraph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, graph.to_text())?;
    Ok(())
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<RoadGraph> {
    RoadGraph::parse(&fs::read_to_string(path)?)
}

fn csv_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_node_csv(text: &str) -> Result<Vec<Node>> {
    csv_lines(text)
        .map(|(line, l)| {
            let mut parts = l.split(',');
            let node = Node {
                id: NodeId(field(parts.next(), line, "node id")?),
                x: field(parts.next(), line, "x_km")?,
                y: field(parts.next(), line, "y_km")?,
            };
            no_trailing(parts, line)?;
            Ok(node)
        })
        .collect()
}

fn parse_edge_csv(text: &str) -> Result<Vec<Edge>> {
    let mut edges = EdgeCollector::new();
    for (line, l) in csv_lines(text) {
        let mut parts = l.split(',');
        let edge = Edge {
            u: NodeId(field(parts.next(), line, "u")?),
            v: NodeId(field(parts.next(), line, "v")?),
            time: field(parts.next(), line, "time_min")?,
        };
        no_trailing(parts, line)?;
        edges.push(edge, line)?;
    }
    Ok(edges.edges)
}

/// Imports a map from separate node and edge files.
///
/// The result may contain vertices unreachable from `origin`; crop it with
/// [`RoadGraph::crop_to_k_nearest`] before solving.
pub fn read_node_edge_files(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    origin: NodeId,
) -> Result<RoadGraph> {
    let nodes = parse_node_csv(&fs::read_to_string(nodes_path)?)?;
    let edges = parse_edge_csv(&fs::read_to_string(edges_path)?)?;
    RoadGraph::new(nodes, edges, origin)
}
