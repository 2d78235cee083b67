//! Induced odd holes and antiholes, perfectness verdicts, family scans and
//! small-graph isomorphism.
//!
//! Holes are enumerated by depth-first search over induced paths in
//! canonical form: the path starts at the smallest vertex of the cycle and
//! its second vertex is smaller than its last, so every chordless cycle is
//! produced exactly once.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{LinearInequality, Provenance};
use crate::graph::{build_graph, ExclusivityGraph, Graph};
use crate::scenario::CausalScenario;
use crate::{Error, Result};

/// Default cap on DFS nodes per start vertex.
pub const DEFAULT_NODE_BUDGET: u64 = 200_000_000;
/// Largest graph accepted by [`are_isomorphic`].
pub const ISOMORPHISM_MAX_VERTICES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HoleKind {
    Hole,
    Antihole,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Hole {
    pub length: usize,
    /// Vertices in cycle order, starting at the smallest.
    pub vertices: Vec<usize>,
    pub kind: HoleKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HoleReport {
    pub holes: Vec<Hole>,
    pub max_len: usize,
    /// True when the search finished without hitting the node budget.
    pub exhaustive: bool,
    pub nodes: u64,
}

impl HoleReport {
    pub fn lengths(&self) -> Vec<usize> {
        let mut l: Vec<usize> = self.holes.iter().map(|h| h.length).collect();
        l.dedup();
        l
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Every hole.
    All,
    /// At most one hole per length and start vertex.
    FirstPerLength,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HoleSearch {
    pub min_len: usize,
    pub max_len: usize,
    pub node_budget: u64,
    pub mode: SearchMode,
}

impl HoleSearch {
    pub fn new(max_len: usize) -> Self {
        Self {
            min_len: 5,
            max_len,
            node_budget: DEFAULT_NODE_BUDGET,
            mode: SearchMode::All,
        }
    }
}

pub fn find_odd_holes<G: AsRef<Graph> + ?Sized>(g: &G, max_len: usize) -> HoleReport {
    search_holes(g.as_ref(), &HoleSearch::new(max_len), HoleKind::Hole)
}

/// Odd holes of the complement, reported in the original vertex labels.
pub fn find_odd_antiholes<G: AsRef<Graph> + ?Sized>(g: &G, max_len: usize) -> HoleReport {
    search_holes(&g.as_ref().complement(), &HoleSearch::new(max_len), HoleKind::Antihole)
}

pub fn find_odd_holes_with<G: AsRef<Graph> + ?Sized>(g: &G, opts: &HoleSearch) -> HoleReport {
    search_holes(g.as_ref(), opts, HoleKind::Hole)
}

pub fn find_odd_antiholes_with<G: AsRef<Graph> + ?Sized>(g: &G, opts: &HoleSearch) -> HoleReport {
    search_holes(&g.as_ref().complement(), opts, HoleKind::Antihole)
}

fn is_bipartite(g: &Graph) -> bool {
    let n = g.len();
    let mut side = vec![u8::MAX; n];
    for root in 0..n {
        if side[root] != u8::MAX {
            continue;
        }
        side[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for u in g.neighbors(v) {
                if side[u] == u8::MAX {
                    side[u] = 1 - side[v];
                    queue.push_back(u);
                } else if side[u] == side[v] {
                    return false;
                }
            }
        }
    }
    true
}

fn search_holes(g: &Graph, opts: &HoleSearch, kind: HoleKind) -> HoleReport {
    let n = g.len();
    let max_len = opts.max_len.min(n);
    let min_len = opts.min_len.max(5) | 1;
    if max_len < min_len || is_bipartite(g) {
        return HoleReport {
            holes: vec![],
            max_len: opts.max_len,
            exhaustive: true,
            nodes: 0,
        };
    }
    let per_start: Vec<(Vec<Hole>, bool, u64)> = (0..n)
        .into_par_iter()
        .map(|v0| {
            let mut dfs = Dfs::new(g, v0, min_len, max_len, opts, kind);
            dfs.run();
            (dfs.found, !dfs.exhausted, dfs.nodes)
        })
        .collect();
    let mut holes = Vec::new();
    let mut exhaustive = true;
    let mut nodes = 0;
    for (h, ok, k) in per_start {
        holes.extend(h);
        exhaustive &= ok;
        nodes += k;
    }
    holes.sort();
    HoleReport {
        holes,
        max_len: opts.max_len,
        exhaustive,
        nodes,
    }
}

struct Dfs<'a> {
    g: &'a Graph,
    v0: usize,
    min_len: usize,
    max_len: usize,
    mode: SearchMode,
    kind: HoleKind,
    budget: u64,
    /// Distance to `v0` inside the subgraph on vertices `≥ v0`.
    dist: Vec<usize>,
    path: Vec<usize>,
    /// Vertices adjacent to some path vertex other than the last (and `v0`).
    blocked: Vec<u32>,
    found: Vec<Hole>,
    found_lengths: FixedBitSet,
    nodes: u64,
    exhausted: bool,
}

impl<'a> Dfs<'a> {
    fn new(
        g: &'a Graph,
        v0: usize,
        min_len: usize,
        max_len: usize,
        opts: &HoleSearch,
        kind: HoleKind,
    ) -> Self {
        let n = g.len();
        let mut dist = vec![usize::MAX; n];
        dist[v0] = 0;
        let mut queue = VecDeque::from([v0]);
        while let Some(v) = queue.pop_front() {
            for u in g.neighbors(v).filter(|&u| u > v0) {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        Self {
            g,
            v0,
            min_len,
            max_len,
            mode: opts.mode,
            kind,
            budget: opts.node_budget,
            dist,
            path: Vec::with_capacity(max_len),
            blocked: vec![0; n],
            found: Vec::new(),
            found_lengths: FixedBitSet::with_capacity(max_len + 1),
            nodes: 0,
            exhausted: false,
        }
    }

    fn done(&self) -> bool {
        self.exhausted
            || (self.mode == SearchMode::FirstPerLength
                && (self.min_len..=self.max_len)
                    .step_by(2)
                    .all(|l| l % 2 == 0 || self.found_lengths.contains(l)))
    }

    fn run(&mut self) {
        let v0 = self.v0;
        self.path.push(v0);
        let firsts: Vec<usize> = self.g.neighbors(v0).filter(|&u| u > v0).collect();
        for v1 in firsts {
            self.path.push(v1);
            self.extend();
            self.path.pop();
            if self.done() {
                break;
            }
        }
    }

    fn block(&mut self, v: usize, delta: i32) {
        for u in self.g.neighbors(v) {
            self.blocked[u] = (self.blocked[u] as i32 + delta) as u32;
        }
    }

    /// Extends a path `v0, v1, …, last` whose interior is chordless.
    fn extend(&mut self) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let len = self.path.len();
        let last = *self.path.last().expect("non-empty path");
        // `blocked` counts adjacency to the interior path[1..len-1]; v0 is handled separately.
        let candidates: Vec<usize> = self
            .g
            .neighbors(last)
            .filter(|&u| u > self.v0 && self.blocked[u] == 0 && !self.path.contains(&u))
            .collect();
        for u in candidates {
            if self.g.has_edge(u, self.v0) {
                if len < 2 {
                    continue;
                }
                let cycle_len = len + 1;
                if cycle_len % 2 == 1
                    && cycle_len >= self.min_len
                    && self.path[1] < u
                    && (self.mode == SearchMode::All || !self.found_lengths.contains(cycle_len))
                {
                    let mut vertices = self.path.clone();
                    vertices.push(u);
                    debug_assert!(verify_cycle(self.g, &vertices));
                    self.found_lengths.insert(cycle_len);
                    self.found.push(Hole {
                        length: cycle_len,
                        vertices,
                        kind: self.kind,
                    });
                    if self.done() {
                        return;
                    }
                }
                continue;
            }
            // u joins as an interior vertex; the cycle needs at least dist[u] more edges.
            if self.dist[u] == usize::MAX || len + self.dist[u] > self.max_len {
                continue;
            }
            if len + 1 >= self.max_len {
                continue;
            }
            self.block(last, 1);
            self.path.push(u);
            self.extend();
            self.path.pop();
            self.block(last, -1);
            if self.done() {
                return;
            }
        }
    }
}

/// Whether `vertices` (in order) form a chordless cycle of length ≥ 4 in `g`.
pub fn verify_cycle(g: &Graph, vertices: &[usize]) -> bool {
    let n = vertices.len();
    if n < 4 || vertices.iter().any(|&v| v >= g.len()) {
        return false;
    }
    let mut distinct = vertices.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != n {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            let consecutive = j == i + 1 || (i == 0 && j == n - 1);
            if g.has_edge(vertices[i], vertices[j]) != consecutive {
                return false;
            }
        }
    }
    true
}

/// Re-checks a reported hole or antihole against `g`.
pub fn verify_hole(g: &Graph, hole: &Hole) -> bool {
    hole.length == hole.vertices.len()
        && hole.length % 2 == 1
        && hole.length >= 5
        && match hole.kind {
            HoleKind::Hole => verify_cycle(g, &hole.vertices),
            HoleKind::Antihole => verify_cycle(&g.complement(), &hole.vertices),
        }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PerfectVerdict {
    Perfect,
    Imperfect { witness: Hole },
    Unknown { reason: String },
}

/// Strong-perfect-graph verdict from bounded hole and antihole searches.
///
/// `Perfect` is returned only when both searches were exhaustive and
/// `max_len ≥ |V|`.
pub fn perfect_verdict<G: AsRef<Graph> + ?Sized>(g: &G, max_len: usize) -> PerfectVerdict {
    let g = g.as_ref();
    let opts = HoleSearch {
        mode: SearchMode::FirstPerLength,
        ..HoleSearch::new(max_len)
    };
    let holes = find_odd_holes_with(g, &opts);
    let antiholes = find_odd_antiholes_with(g, &opts);
    let witness = holes
        .holes
        .iter()
        .chain(&antiholes.holes)
        .min_by_key(|h| (h.length, h.kind, h.vertices.clone()))
        .cloned();
    if let Some(witness) = witness {
        return PerfectVerdict::Imperfect { witness };
    }
    if !holes.exhaustive || !antiholes.exhaustive {
        PerfectVerdict::Unknown {
            reason: "node budget exhausted".into(),
        }
    } else if max_len < g.len() {
        PerfectVerdict::Unknown {
            reason: format!("searched lengths up to {max_len} on {} vertices", g.len()),
        }
    } else {
        PerfectVerdict::Perfect
    }
}

/// Unit-weight inequality supported on a verified odd hole, bounded by `⌊n/2⌋`.
pub fn hole_to_inequality(hole: &[usize], g: &ExclusivityGraph) -> Result<LinearInequality> {
    if hole.len() < 5 || hole.len() % 2 == 0 || !verify_cycle(g, hole) {
        return Err(Error::UnverifiedHole(format!(
            "{hole:?} is not an induced odd cycle of length ≥ 5"
        )));
    }
    let terms = hole.iter().map(|&v| (g.events()[v].clone(), 1.0)).collect();
    LinearInequality::new(
        g.scenario().clone(),
        terms,
        (hole.len() / 2) as f64,
        Provenance {
            tag: "mined".into(),
            citation: format!("induced C{} in {}", hole.len(), g.scenario().label()),
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstAppearance {
    pub cycle_length: usize,
    /// `(l, m, n)` of the first grid point containing the hole.
    pub point: Option<(usize, usize, usize)>,
    pub witness: Vec<usize>,
    pub witness_events: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub rows: Vec<FirstAppearance>,
    /// Grid points visited, in order.
    pub visited: Vec<(usize, usize, usize)>,
    /// False if any search stopped on its node budget.
    pub exhaustive: bool,
}

/// Instrumental grid `l ∈ 2..=l_max`, `m ∈ 2..=m_max`, `n ∈ 2..=n_max`
/// (or `n = m`), in lexicographic order.
pub fn instrumental_grid(
    l_max: usize,
    m_max: usize,
    n_max: usize,
    n_equals_m: bool,
) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for l in 2..=l_max {
        for m in 2..=m_max {
            if n_equals_m {
                out.push((l, m, m));
            } else {
                for n in 2..=n_max {
                    out.push((l, m, n));
                }
            }
        }
    }
    out
}

/// First grid point (in the given order) whose instrumental graph contains an
/// induced odd hole of each length in `5..=max_len`.
pub fn scan_family(points: &[(usize, usize, usize)], max_len: usize) -> Result<ScanReport> {
    let lengths: Vec<usize> = (5..=max_len).step_by(2).collect();
    let mut rows: Vec<FirstAppearance> = lengths
        .iter()
        .map(|&l| FirstAppearance {
            cycle_length: l,
            point: None,
            witness: vec![],
            witness_events: vec![],
        })
        .collect();
    let mut visited = Vec::new();
    let mut exhaustive = true;
    for &(l, m, n) in points {
        let missing: Vec<usize> = rows
            .iter()
            .filter(|r| r.point.is_none())
            .map(|r| r.cycle_length)
            .collect();
        let (Some(&lo), Some(&hi)) = (missing.first(), missing.last()) else {
            break;
        };
        let s = CausalScenario::instrumental(l, m, n)?;
        let g = build_graph(&s, None)?;
        visited.push((l, m, n));
        let report = find_odd_holes_with(
            &g,
            &HoleSearch {
                min_len: lo,
                max_len: hi,
                node_budget: DEFAULT_NODE_BUDGET,
                mode: SearchMode::FirstPerLength,
            },
        );
        exhaustive &= report.exhaustive;
        for row in rows.iter_mut().filter(|r| r.point.is_none()) {
            if let Some(h) = report.holes.iter().find(|h| h.length == row.cycle_length) {
                row.point = Some((l, m, n));
                row.witness_events = h.vertices.iter().map(|&v| g.events()[v].to_string()).collect();
                row.witness = h.vertices.clone();
            }
        }
    }
    Ok(ScanReport {
        rows,
        visited,
        exhaustive,
    })
}

/// Exact isomorphism test for graphs with at most 16 vertices; weights are
/// ignored. Returns `mapping[v1] = v2` when isomorphic.
pub fn are_isomorphic<G1, G2>(g1: &G1, g2: &G2) -> Result<Option<Vec<usize>>>
where
    G1: AsRef<Graph> + ?Sized,
    G2: AsRef<Graph> + ?Sized,
{
    let (g1, g2) = (g1.as_ref(), g2.as_ref());
    let n = g1.len();
    if n.max(g2.len()) > ISOMORPHISM_MAX_VERTICES {
        return Err(Error::TooLarge(format!(
            "isomorphism test limited to {ISOMORPHISM_MAX_VERTICES} vertices"
        )));
    }
    if n != g2.len() || g1.edge_count() != g2.edge_count() {
        return Ok(None);
    }
    let deg1: Vec<usize> = (0..n).map(|v| g1.degree(v)).collect();
    let deg2: Vec<usize> = (0..n).map(|v| g2.degree(v)).collect();
    let (mut s1, mut s2) = (deg1.clone(), deg2.clone());
    s1.sort_unstable();
    s2.sort_unstable();
    if s1 != s2 {
        return Ok(None);
    }
    let mut mapping = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn assign(
        v: usize,
        g1: &Graph,
        g2: &Graph,
        deg1: &[usize],
        deg2: &[usize],
        mapping: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if v == g1.len() {
            return true;
        }
        for w in 0..g2.len() {
            if used[w] || deg1[v] != deg2[w] {
                continue;
            }
            if (0..v).any(|u| g1.has_edge(u, v) != g2.has_edge(mapping[u], w)) {
                continue;
            }
            mapping[v] = w;
            used[w] = true;
            if assign(v + 1, g1, g2, deg1, deg2, mapping, used) {
                return true;
            }
            used[w] = false;
        }
        false
    }
    Ok(assign(0, g1, g2, &deg1, &deg2, &mut mapping, &mut used).then_some(mapping))
}
