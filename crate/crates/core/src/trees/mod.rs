//! Graphs with an integer Busemann level on vertices: regular trees, the
//! Bass–Serre tree of the lamplighter family, and millefeuille fiber products.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::{FocalError, Result};
use crate::metric::DistanceMatrix;

mod bass_serre;

pub use bass_serre::{
    tree_act, tree_ball, tree_distance, tree_qi_probe, tree_transitivity_witness, TreeVertex,
};

/// Finite graph with a level `b` on vertices; every edge changes `b` by ±1.
#[derive(Clone, Debug)]
pub struct BusemannGraph {
    ids: Vec<String>,
    level: Vec<i64>,
    adj: Vec<Vec<usize>>,
    /// Vertices whose full neighbourhood in the ambient graph is present.
    interior: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub vertices: usize,
    pub edges: usize,
    pub connected: bool,
    pub level_range: (i64, i64),
    /// `(degree, count)` over interior vertices.
    pub interior_degrees: Vec<(usize, usize)>,
}

impl BusemannGraph {
    pub fn new(
        ids: Vec<String>,
        level: Vec<i64>,
        edges: &[(usize, usize)],
        interior: Vec<bool>,
    ) -> Result<Self> {
        let n = ids.len();
        if level.len() != n || interior.len() != n {
            return Err(FocalError::InvalidArgument(
                "ids, levels and interior flags differ in length".into(),
            ));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(FocalError::InvalidArgument(format!(
                    "edge ({u}, {v}) out of range"
                )));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        let g = BusemannGraph {
            ids,
            level,
            adj,
            interior,
        };
        if let Some((u, v)) = g.level_violation() {
            return Err(FocalError::InvalidArgument(format!(
                "edge {} -- {} changes the level by {}",
                g.ids[u],
                g.ids[v],
                g.level[v] - g.level[u]
            )));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn level(&self, v: usize) -> i64 {
        self.level[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.interior[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// First edge whose endpoints do not differ in level by exactly one.
    pub fn level_violation(&self) -> Option<(usize, usize)> {
        (0..self.len()).find_map(|u| {
            self.adj[u]
                .iter()
                .find(|&&v| (self.level[u] - self.level[v]).abs() != 1)
                .map(|&v| (u, v))
        })
    }

    pub fn level_range(&self) -> Option<(i64, i64)> {
        Some((*self.level.iter().min()?, *self.level.iter().max()?))
    }

    fn bfs(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        dist[src] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.bfs(0).iter().all(|&d| d != u32::MAX)
    }

    /// All-pairs graph distances. Fails on a disconnected graph.
    pub fn distance_matrix(&self) -> Result<DistanceMatrix> {
        let rows: Vec<Vec<u32>> = (0..self.len()).map(|s| self.bfs(s)).collect();
        if rows.iter().flatten().any(|&d| d == u32::MAX) {
            return Err(FocalError::InvalidArgument("graph is disconnected".into()));
        }
        DistanceMatrix::new(self.ids.clone(), rows)
    }

    pub fn stats(&self) -> GraphStats {
        let mut hist: HashMap<usize, usize> = HashMap::new();
        for v in 0..self.len() {
            if self.interior[v] {
                *hist.entry(self.degree(v)).or_default() += 1;
            }
        }
        let mut interior_degrees: Vec<(usize, usize)> = hist.into_iter().collect();
        interior_degrees.sort_unstable();
        GraphStats {
            vertices: self.len(),
            edges: self.edge_count(),
            connected: self.is_connected(),
            level_range: self.level_range().unwrap_or((0, 0)),
            interior_degrees,
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph busemann {\n");
        for (i, id) in self.ids.iter().enumerate() {
            let _ = writeln!(
                s,
                "  n{i} [label=\"{}\", level={}];",
                id.replace('"', "\\\""),
                self.level[i]
            );
        }
        for u in 0..self.len() {
            for &v in &self.adj[u] {
                if u < v {
                    let _ = writeln!(s, "  n{u} -- n{v};");
                }
            }
        }
        s.push_str("}\n");
        s
    }

    /// Adjacency list as CSV: `id,level,interior,neighbors` with neighbours
    /// separated by `;`.
    pub fn write_adjacency_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["id", "level", "interior", "neighbors"])?;
        for u in 0..self.len() {
            let nbrs: Vec<&str> = self.adj[u].iter().map(|&v| self.ids[v].as_str()).collect();
            out.write_record([
                self.ids[u].as_str(),
                &self.level[u].to_string(),
                &self.interior[u].to_string(),
                &nbrs.join(";"),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Ball of radius `levels` in the `(k+1)`-regular tree, labelled by the
/// Busemann function of a fixed end.
///
/// Vertices are coded as `(n, c)` with `c` a `Z_k`-valued configuration on
/// positions `< n`; the neighbour toward the end is `(n-1, c|<n-1)` and the
/// other `k` neighbours are `(n+1, c + x·δ_n)`. The level is `b = -n`.
pub fn regular_tree_ball(k: u32, levels: u32) -> Result<BusemannGraph> {
    if k == 0 {
        return Err(FocalError::InvalidArgument(
            "branching k must be ≥ 1".into(),
        ));
    }
    Ok(bass_serre::coded_ball(k, &TreeVertex::root(), levels))
}

/// Fiber product `{(x, y) : b(x) = b'(y)}` with an edge when both
/// coordinates move along an edge in the same level direction. The level of
/// `(x, y)` is `b(x)`; a vertex is interior when both coordinates are.
pub fn millefeuille(x: &BusemannGraph, t: &BusemannGraph) -> Result<BusemannGraph> {
    for (name, g) in [("X", x), ("T", t)] {
        if let Some((u, v)) = g.level_violation() {
            return Err(FocalError::InvalidArgument(format!(
                "{name}: edge {} -- {} breaks the ±1 level rule",
                g.ids[u], g.ids[v]
            )));
        }
    }
    let (rx, rt) = match (x.level_range(), t.level_range()) {
        (Some(a), Some(b)) => (a, b),
        (a, b) => {
            return Err(FocalError::EmptyFiber(
                a.unwrap_or((0, -1)),
                b.unwrap_or((0, -1)),
            ))
        }
    };
    let mut by_level: HashMap<i64, Vec<usize>> = HashMap::new();
    for v in 0..t.len() {
        by_level.entry(t.level[v]).or_default().push(v);
    }
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let (mut ids, mut level, mut interior) = (Vec::new(), Vec::new(), Vec::new());
    for u in 0..x.len() {
        for &v in by_level.get(&x.level[u]).map_or(&[][..], Vec::as_slice) {
            index.insert((u, v), ids.len());
            ids.push(format!("({}, {})", x.ids[u], t.ids[v]));
            level.push(x.level[u]);
            interior.push(x.interior[u] && t.interior[v]);
        }
    }
    if ids.is_empty() {
        return Err(FocalError::EmptyFiber(rx, rt));
    }
    let mut edges = Vec::new();
    for (&(u, v), &i) in &index {
        for &u2 in &x.adj[u] {
            let s = x.level[u2] - x.level[u];
            for &v2 in &t.adj[v] {
                if t.level[v2] - t.level[v] == s {
                    if let Some(&j) = index.get(&(u2, v2)) {
                        if i < j {
                            edges.push((i, j));
                        }
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    BusemannGraph::new(ids, level, &edges, interior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::four_point_delta;

    #[test]
    fn line_segment() {
        let g = regular_tree_ball(1, 5).unwrap();
        assert_eq!(g.len(), 11);
        let s = g.stats();
        assert!(s.connected);
        assert_eq!(s.interior_degrees, vec![(2, 9)]);
        assert_eq!(s.level_range, (-5, 5));
    }

    #[test]
    fn trivalent_ball() {
        let g = regular_tree_ball(2, 4).unwrap();
        assert_eq!(g.len(), 1 + 3 * (16 - 1));
        assert_eq!(g.stats().interior_degrees, vec![(3, 1 + 3 * 7)]);
        assert_eq!(
            four_point_delta(&g.distance_matrix().unwrap())
                .delta
                .twice(),
            0
        );
        assert_eq!(regular_tree_ball(3, 0).unwrap().len(), 1);
    }

    #[test]
    fn invalid_level_edges_rejected() {
        let r = BusemannGraph::new(
            vec!["a".into(), "b".into()],
            vec![0, 0],
            &[(0, 1)],
            vec![true, true],
        );
        assert!(r.is_err());
    }

    #[test]
    fn disjoint_levels_give_empty_fiber() {
        let x = BusemannGraph::new(vec!["a".into()], vec![0], &[], vec![true]).unwrap();
        let t = BusemannGraph::new(vec!["b".into()], vec![3], &[], vec![true]).unwrap();
        assert!(matches!(
            millefeuille(&x, &t),
            Err(FocalError::EmptyFiber((0, 0), (3, 3)))
        ));
    }

    #[test]
    fn millefeuille_of_trees() {
        let t3 = regular_tree_ball(2, 3).unwrap();
        let m = millefeuille(&t3, &t3).unwrap();
        let s = m.stats();
        assert!(s.connected);
        assert_eq!(s.interior_degrees.len(), 1);
        assert_eq!(s.interior_degrees[0].0, 5);
        assert!(m.level_violation().is_none());
        assert_eq!(
            four_point_delta(&m.distance_matrix().unwrap())
                .delta
                .twice(),
            0
        );
    }

    #[test]
    fn exports() {
        let g = regular_tree_ball(2, 1).unwrap();
        assert!(g.to_dot().contains("level=-1"));
        let mut buf = Vec::new();
        g.write_adjacency_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4);
    }
}
