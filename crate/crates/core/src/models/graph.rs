use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

const DEFAULT10: &str = include_str!("../../data/default10.edges");

/// Undirected, unweighted simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Build from unordered pairs. Reversed and repeated pairs collapse;
    /// self-loops and out-of-range nodes are rejected.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("graph needs at least one node".into()));
        }
        let mut edges = BTreeSet::new();
        for (i, j) in pairs {
            if i == j {
                return Err(Error::InvalidInput(format!("self-loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("edge ({i}, {j}) outside 0..{n}")));
            }
            edges.insert((i.min(j), i.max(j)));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        Ok(Self { n, edges, neighbors })
    }

    /// Parse the edge-list format: one pair of 0-based node indices per
    /// line, `#` starts a comment. The node count is the largest index plus one
    /// unless `n` is given.
    pub fn parse(text: &str, n: Option<usize>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let mut next = |what: &str| -> Result<usize> {
                let tok = fields.next().ok_or_else(|| Error::GraphParse {
                    line: lineno + 1,
                    message: format!("missing {what} node"),
                })?;
                tok.parse().map_err(|_| Error::GraphParse {
                    line: lineno + 1,
                    message: format!("`{tok}` is not a node index"),
                })
            };
            let i = next("first")?;
            let j = next("second")?;
            if fields.next().is_some() {
                return Err(Error::GraphParse {
                    line: lineno + 1,
                    message: "expected exactly two fields".into(),
                });
            }
            if i == j {
                return Err(Error::GraphParse {
                    line: lineno + 1,
                    message: format!("self-loop at node {i}"),
                });
            }
            pairs.push((i, j));
        }
        let inferred = pairs.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
        let n = n.unwrap_or(inferred);
        if inferred > n {
            return Err(Error::InvalidInput(format!(
                "edge list references node {} but graph has {n} nodes",
                inferred - 1
            )));
        }
        Self::new(n, pairs)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, None)
    }

    /// The shipped 10-node test graph.
    pub fn default10() -> Self {
        Self::parse(DEFAULT10, Some(10)).expect("bundled graph is valid")
    }

    /// Ring `0 - 1 - ... - (n-1) - 0`.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput("ring needs at least 3 nodes".into()));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_dedups_and_skips_comments() {
        let g = Graph::parse("# header\n0 1\n1 0\n\n1 2\n  # indented comment\n0 1\n", None).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(2, 1));
    }

    #[test]
    fn parse_errors_carry_line() {
        match Graph::parse("0 1\n1 x\n", None) {
            Err(Error::GraphParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Graph::parse("3 3\n", None), Err(Error::GraphParse { line: 1, .. })));
        assert!(matches!(Graph::parse("0 1 2\n", None), Err(Error::GraphParse { .. })));
    }

    #[test]
    fn default_graph_is_connected() {
        let g = Graph::default10();
        assert_eq!(g.node_count(), 10);
        assert_eq!(g.edge_count(), 22);
        assert!(g.is_connected());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::default10();
        let back = Graph::parse(&g.to_edge_list(), Some(10)).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn disconnected_detected() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(!g.is_connected());
    }
}
