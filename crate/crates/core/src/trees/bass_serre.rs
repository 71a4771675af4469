use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::BusemannGraph;
use crate::error::Result;
use crate::groups::{ConfinedGroup, LampConfig, Lamplighter};
use crate::metric::{qi_embedding_check, QIReport};
use crate::word::{GroupPoint, WordMetric};

/// Vertex of the Bass–Serre tree of `Z_q ≀ Z`: the coset `(c, n)·A`, coded
/// by its level `n` and the lamps of `c` at positions `< n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeVertex {
    pub n: i64,
    pub c: LampConfig,
}

impl TreeVertex {
    /// Builds `(n, c)`, dropping lamps at positions `≥ n`.
    pub fn new(n: i64, c: LampConfig) -> Self {
        TreeVertex { n, c: c.below(n) }
    }

    /// The base vertex `A`, fixed by `A`.
    pub fn root() -> Self {
        TreeVertex {
            n: 0,
            c: LampConfig::empty(),
        }
    }

    /// Busemann level `b'(v) = -n`.
    pub fn level(&self) -> i64 {
        -self.n
    }

    /// The neighbour toward the fixed end.
    pub fn parent(&self) -> Self {
        TreeVertex::new(self.n - 1, self.c.clone())
    }

    /// The `q` neighbours away from the fixed end, indexed by the lamp value
    /// at position `n`.
    pub fn children(&self, q: u32) -> Vec<Self> {
        (0..q).map(|x| self.child(q, x)).collect()
    }

    pub fn child(&self, q: u32, x: u32) -> Self {
        TreeVertex {
            n: self.n + 1,
            c: self
                .c
                .add(&LampConfig::from_pairs(q, [(self.n, x as i64)]), q),
        }
    }

    pub fn neighbors(&self, q: u32) -> Vec<Self> {
        let mut out = vec![self.parent()];
        out.extend(self.children(q));
        out
    }
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self
            .c
            .lamps()
            .iter()
            .map(|(p, v)| format!("{p}:{v}"))
            .collect();
        write!(f, "{}|{{{}}}", self.n, body.join(","))
    }
}

/// `(h, m)·(n, c) = (n + m, (h + shift_m c)|<n+m)`.
pub fn tree_act(g: &Lamplighter, x: &GroupPoint<LampConfig>, v: &TreeVertex) -> TreeVertex {
    let moved = g.multiply(&x.h, &g.alpha_pow(&v.c, x.m));
    TreeVertex::new(v.n + x.m, moved)
}

/// Path length through the deepest common ancestor. Ancestors of `(n, c)` are
/// `(l, c|<l)`, so `v` and `w` share the ancestor at level `l` exactly when
/// `l ≤ min(n_v, n_w)` and their lamps agree below `l`.
pub fn tree_distance(v: &TreeVertex, w: &TreeVertex) -> u64 {
    let mut l = v.n.min(w.n);
    let (a, b) = (v.c.lamps(), w.c.lamps());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let pa = a.get(i).map(|x| x.0);
        let pb = b.get(j).map(|x| x.0);
        let pos = match (pa, pb) {
            (Some(x), Some(y)) if x == y => {
                if a[i].1 != b[j].1 {
                    Some(x)
                } else {
                    i += 1;
                    j += 1;
                    None
                }
            }
            (Some(x), Some(y)) => Some(x.min(y)),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        };
        if let Some(p) = pos {
            l = l.min(p);
            break;
        }
    }
    ((v.n - l) + (w.n - l)) as u64
}

/// `g` with `g·v = w`: `m = n_w - n_v`, then `h = c_w - shift_m c_v`.
pub fn tree_transitivity_witness(
    g: &Lamplighter,
    v: &TreeVertex,
    w: &TreeVertex,
) -> GroupPoint<LampConfig> {
    let m = w.n - v.n;
    let h = g.multiply(&w.c, &g.invert(&g.alpha_pow(&v.c, m)));
    GroupPoint::new(h, m)
}

/// Ball of radius `radius` around `center` in the `(q+1)`-regular tree.
pub fn tree_ball(g: &Lamplighter, center: &TreeVertex, radius: u32) -> BusemannGraph {
    coded_ball(g.q(), center, radius)
}

pub(super) fn coded_ball(q: u32, center: &TreeVertex, radius: u32) -> BusemannGraph {
    let mut index: HashMap<TreeVertex, usize> = HashMap::from([(center.clone(), 0)]);
    let mut verts = vec![(center.clone(), 0u32)];
    let mut queue = VecDeque::from([0usize]);
    let mut edges = Vec::new();
    while let Some(i) = queue.pop_front() {
        let (v, d) = verts[i].clone();
        if d == radius {
            continue;
        }
        for w in v.neighbors(q) {
            let j = match index.get(&w) {
                Some(&j) => j,
                None => {
                    let j = verts.len();
                    index.insert(w.clone(), j);
                    verts.push((w, d + 1));
                    queue.push_back(j);
                    j
                }
            };
            if i < j {
                edges.push((i, j));
            }
        }
    }
    let ids = verts.iter().map(|(v, _)| v.to_string()).collect();
    let level = verts.iter().map(|(v, _)| v.level()).collect();
    let interior = verts.iter().map(|&(_, d)| d < radius).collect();
    BusemannGraph::new(ids, level, &edges, interior)
        .expect("tree coding keeps every edge between adjacent levels")
}

/// Compares `d_S(1, g)` with `d_T(v₀, g·v₀)` over the samples.
pub fn tree_qi_probe(
    metric: &WordMetric<Lamplighter>,
    samples: &[GroupPoint<LampConfig>],
) -> Result<QIReport> {
    let g = metric.group();
    let root = TreeVertex::root();
    let pairs = samples
        .iter()
        .map(|x| {
            let t = tree_distance(&root, &tree_act(g, x, &root));
            Ok((metric.word_length(x)?, t))
        })
        .collect::<Result<Vec<_>>>()?;
    qi_embedding_check(&pairs)
}
