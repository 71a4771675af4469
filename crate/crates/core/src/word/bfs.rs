//! Breadth-first search on a windowed Cayley graph, independent of the
//! closed-form word length.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::GroupPoint;
use crate::error::Result;
use crate::groups::{ConfinedGroup, Window, MAX_WINDOW_ELEMENTS};

/// A reached point with its BFS distance.
pub type Reached<E> = (GroupPoint<E>, u32);

/// Distances from the identity in the subgraph of the Cayley graph induced
/// on `{(h, m) : h ∈ window, |m| ≤ radius}`, explored up to `radius`.
///
/// Elements are hashed through `canonical_bytes`. Returns the reached
/// points with their distances and whether `max_vertices` cut the search.
pub fn windowed_bfs<G: ConfinedGroup>(
    g: &G,
    window: &Window,
    radius: u32,
    max_vertices: usize,
) -> Result<(Vec<Reached<G::Elem>>, bool)> {
    let r = radius as i64;
    let id = g.identity();
    let base = g.shift_generators(window, radius)?;
    // α^m(a) for every admissible level m, computed once.
    let shifted: Vec<Vec<G::Elem>> = (-r..=r)
        .map(|m| {
            base.iter()
                .filter(|a| **a != id)
                .map(|a| g.alpha_pow(a, m))
                .collect()
        })
        .collect();

    let key = |p: &GroupPoint<G::Elem>| (g.canonical_bytes(&p.h), p.m);
    let start = GroupPoint::new(id.clone(), 0);
    let mut seen: HashMap<(Vec<u8>, i64), u32> = HashMap::new();
    seen.insert(key(&start), 0);
    let mut out = vec![(start.clone(), 0)];
    let mut queue = VecDeque::from([(start, 0u32)]);
    let mut truncated = false;

    while let Some((p, d)) = queue.pop_front() {
        if d == radius {
            continue;
        }
        let mut next = Vec::new();
        for dm in [-1i64, 1] {
            if (p.m + dm).abs() <= r {
                next.push(GroupPoint::new(p.h.clone(), p.m + dm));
            }
        }
        for s in &shifted[(p.m + r) as usize] {
            let h = g.multiply(&p.h, s);
            if g.in_window(&h, window) {
                next.push(GroupPoint::new(h, p.m));
            }
        }
        for q in next {
            let k = key(&q);
            if seen.contains_key(&k) {
                continue;
            }
            if seen.len() >= max_vertices {
                truncated = true;
                continue;
            }
            seen.insert(k, d + 1);
            out.push((q.clone(), d + 1));
            queue.push_back((q, d + 1));
        }
    }
    Ok((out, truncated))
}

#[derive(Clone, Debug, Serialize)]
pub struct BfsEntry<E> {
    #[serde(skip)]
    pub point: GroupPoint<E>,
    pub distance: u32,
    /// The distance is unchanged when the window grows by one on each side.
    pub trusted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BfsReport<E> {
    pub family: String,
    pub window: Window,
    pub radius: u32,
    pub truncated: bool,
    pub trusted: usize,
    pub entries: Vec<BfsEntry<E>>,
}

/// Windowed BFS distances from the identity, each flagged as trusted when a
/// second search on the window enlarged by one unit agrees.
///
/// Safe-radius rule: in both built-in families every geodesic normal form
/// `α^{-i} g₁…g_k α^j` of an element of the window stays in the window (the
/// lamplighter has `k ≤ 1`, and n-adic partial sums are monotone), so all
/// elements within `radius` are reached. Elements whose distance changes
/// with the window are reported untrusted rather than guessed.
pub fn bfs_oracle<G: ConfinedGroup>(
    g: &G,
    window: &Window,
    radius: u32,
) -> Result<BfsReport<G::Elem>> {
    let (inner, t1) = windowed_bfs(g, window, radius, MAX_WINDOW_ELEMENTS)?;
    let (outer, t2) = windowed_bfs(g, &window.enlarged(1), radius, MAX_WINDOW_ELEMENTS)?;
    let outer: HashMap<GroupPoint<G::Elem>, u32> = outer.into_iter().collect();
    let truncated = t1 || t2;
    let entries: Vec<BfsEntry<G::Elem>> = inner
        .into_iter()
        .map(|(point, distance)| {
            let trusted = !truncated && outer.get(&point) == Some(&distance);
            BfsEntry {
                point,
                distance,
                trusted,
            }
        })
        .collect();
    Ok(BfsReport {
        family: g.name(),
        window: *window,
        radius,
        truncated,
        trusted: entries.iter().filter(|e| e.trusted).count(),
        entries,
    })
}
