use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{BarwError, Result};

/// Finite graph on which particles move.
///
/// With `allow_self`, every vertex is also a legal target of its own
/// offspring; on the complete graph this is the mean-field convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSpec {
    vertex_count: usize,
    adjacency: Vec<Vec<usize>>,
    allow_self: bool,
    targets: Vec<Vec<usize>>,
}

impl GraphSpec {
    /// Builds a graph from undirected edges `(a, b)` with `a ≠ b`.
    pub fn new(vertex_count: usize, edges: &[(usize, usize)], allow_self: bool) -> Result<Self> {
        if vertex_count == 0 {
            return Err(BarwError::domain("graph needs at least one vertex"));
        }
        let mut seen = HashSet::new();
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(a, b) in edges {
            if a >= vertex_count || b >= vertex_count {
                return Err(BarwError::domain(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if a == b {
                return Err(BarwError::domain(format!(
                    "edge ({a}, {a}) is a loop; use self_loops=1 instead"
                )));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(BarwError::domain(format!("duplicate edge ({a}, {b})")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        Self::from_adjacency(adjacency, allow_self)
    }

    fn from_adjacency(mut adjacency: Vec<Vec<usize>>, allow_self: bool) -> Result<Self> {
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let targets: Vec<Vec<usize>> = adjacency
            .iter()
            .enumerate()
            .map(|(v, nbrs)| {
                let mut t = nbrs.clone();
                if allow_self {
                    let pos = t.partition_point(|&w| w < v);
                    t.insert(pos, v);
                }
                t
            })
            .collect();
        if let Some(v) = targets.iter().position(Vec::is_empty) {
            return Err(BarwError::domain(format!(
                "vertex {v} has no legal move target"
            )));
        }
        Ok(GraphSpec {
            vertex_count: adjacency.len(),
            adjacency,
            allow_self,
            targets,
        })
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize, allow_self: bool) -> Result<Self> {
        if n == 0 {
            return Err(BarwError::domain("graph needs at least one vertex"));
        }
        let adjacency = (0..n)
            .map(|v| (0..n).filter(|&w| w != v).collect())
            .collect();
        Self::from_adjacency(adjacency, allow_self)
    }

    /// Parses the text format: a header `vertices=<count> self_loops=<0|1>`
    /// followed by one `a b` edge per line. Blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| BarwError::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header".into()))?;
        let mut vertices = None;
        let mut self_loops = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("vertices", v)) => {
                    vertices = Some(
                        v.parse::<usize>()
                            .map_err(|e| err(hline, format!("vertices: {e}")))?,
                    )
                }
                Some(("self_loops", "0")) => self_loops = Some(false),
                Some(("self_loops", "1")) => self_loops = Some(true),
                _ => return Err(err(hline, format!("unexpected header field `{field}`"))),
            }
        }
        let vertices = vertices.ok_or_else(|| err(hline, "header lacks vertices=".into()))?;
        let self_loops =
            self_loops.ok_or_else(|| err(hline, "header lacks self_loops=<0|1>".into()))?;
        let mut edges = Vec::new();
        for (ln, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [a, b] = parts[..] else {
                return Err(err(ln, format!("expected `a b`, got `{line}`")));
            };
            let a = a
                .parse::<usize>()
                .map_err(|e| err(ln, format!("{a}: {e}")))?;
            let b = b
                .parse::<usize>()
                .map_err(|e| err(ln, format!("{b}: {e}")))?;
            edges.push((a, b));
        }
        Self::new(vertices, &edges, self_loops).map_err(|e| match e {
            BarwError::Domain(m) => err(0, m),
            other => other,
        })
    }

    /// `complete:<n>` builds `K_n` with the given self-loop flag; anything
    /// else is read as a graph file.
    pub fn from_arg(arg: &str, complete_self_loops: bool) -> Result<Self> {
        if let Some(n) = arg.strip_prefix("complete:") {
            let n = n
                .parse::<usize>()
                .map_err(|e| BarwError::domain(format!("bad vertex count in `{arg}`: {e}")))?;
            return Self::complete(n, complete_self_loops);
        }
        let path = Path::new(arg);
        Self::parse(&fs::read_to_string(path)?, path)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn allow_self(&self) -> bool {
        self.allow_self
    }

    /// Neighbors of `v`, excluding `v` itself.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Legal offspring targets of `v`.
    pub fn targets(&self, v: usize) -> &[usize] {
        &self.targets[v]
    }
}
