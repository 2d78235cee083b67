//! Exclusivity graphs.
//!
//! Two events are exclusive when some observed variable sees identical
//! (non-latent) parent values in both events yet takes different values: no
//! single response function can produce both. The variables for which this
//! happens are the witnesses; grouping edges by witness gives the colored
//! multigraph with one layer per observed variable.

use std::collections::VecDeque;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scenario::{CausalScenario, Event};
use crate::{Error, Result};

/// Undirected vertex-weighted simple graph backed by bitset adjacency rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    weights: Vec<f64>,
    adj: Vec<FixedBitSet>,
}

impl Graph {
    /// Edgeless graph on `n` unit-weight vertices.
    pub fn new(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
            adj: vec![FixedBitSet::with_capacity(n); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::new(n);
        if n >= 3 {
            for i in 0..n {
                g.add_edge(i, (i + 1) % n).expect("valid cycle edge");
            }
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.add_edge(i, j).expect("valid edge");
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.len() {
            return Err(Error::InvalidGraph(format!(
                "{} weights for {} vertices",
                weights.len(),
                self.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidGraph(format!("weight {w} is not finite and non-negative")));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.set_weights(weights)?;
        Ok(self)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.len();
        if u >= n || v >= n {
            return Err(Error::IndexOutOfRange { index: u.max(v), len: n });
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at {u}")));
        }
        self.adj[u].insert(v);
        self.adj[v].insert(u);
        Ok(())
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    #[inline]
    pub fn neighborhood(&self, v: usize) -> &FixedBitSet {
        &self.adj[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].ones()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones(..)
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|u| self.adj[u].ones().filter(move |&v| v > u).map(move |v| (u, v)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones(..)).sum::<usize>() / 2
    }

    pub fn complement(&self) -> Self {
        let n = self.len();
        let adj = (0..n)
            .map(|v| {
                let mut row = self.adj[v].clone();
                row.toggle_range(..);
                row.set(v, false);
                row
            })
            .collect();
        Self {
            weights: self.weights.clone(),
            adj,
        }
    }

    pub fn induced_subgraph(&self, idxs: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = FixedBitSet::with_capacity(n);
        for &i in idxs {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            if seen.put(i) {
                return Err(Error::InvalidGraph(format!("vertex {i} selected twice")));
            }
        }
        let mut g = Self::new(idxs.len());
        g.weights = idxs.iter().map(|&i| self.weights[i]).collect();
        for (a, &u) in idxs.iter().enumerate() {
            for (b, &v) in idxs.iter().enumerate().skip(a + 1) {
                if self.has_edge(u, v) {
                    g.adj[a].insert(b);
                    g.adj[b].insert(a);
                }
            }
        }
        Ok(g)
    }
}

impl AsRef<Graph> for Graph {
    fn as_ref(&self) -> &Graph {
        self
    }
}

/// Outcome of the pairwise exclusivity test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exclusivity {
    pub exclusive: bool,
    /// Observed variables (by index) whose response function would have to
    /// map equal parent values to different outcomes.
    pub witnesses: Vec<usize>,
}

pub fn are_exclusive(e1: &Event, e2: &Event, s: &CausalScenario) -> Result<Exclusivity> {
    s.check_event(e1)?;
    s.check_event(e2)?;
    let witnesses = witnesses_unchecked(e1, e2, s);
    Ok(Exclusivity {
        exclusive: !witnesses.is_empty(),
        witnesses,
    })
}

fn witnesses_unchecked(e1: &Event, e2: &Event, s: &CausalScenario) -> Vec<usize> {
    s.observed()
        .iter()
        .enumerate()
        .filter(|(i, var)| {
            e1.outcomes[*i] != e2.outcomes[*i]
                && var
                    .parents
                    .iter()
                    .all(|&p| s.node_value(e1, p) == s.node_value(e2, p))
        })
        .map(|(i, _)| i)
        .collect()
}

fn exclusive_unchecked(e1: &Event, e2: &Event, s: &CausalScenario) -> bool {
    s.observed().iter().enumerate().any(|(i, var)| {
        e1.outcomes[i] != e2.outcomes[i]
            && var
                .parents
                .iter()
                .all(|&p| s.node_value(e1, p) == s.node_value(e2, p))
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BuildStrategy {
    /// Test every vertex pair.
    #[default]
    Pairwise,
    /// Breadth-first exploration from the first unvisited event; each dequeued
    /// vertex is tested against every other vertex, so the edge set is the
    /// same as for [`BuildStrategy::Pairwise`].
    BreadthFirst,
}

/// Graph over events together with the scenario they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ExclusivityGraph {
    scenario: CausalScenario,
    events: Vec<Event>,
    graph: Graph,
}

impl AsRef<Graph> for ExclusivityGraph {
    fn as_ref(&self) -> &Graph {
        &self.graph
    }
}

impl std::ops::Deref for ExclusivityGraph {
    type Target = Graph;

    fn deref(&self) -> &Graph {
        &self.graph
    }
}

pub fn build_graph(s: &CausalScenario, events: Option<&[Event]>) -> Result<ExclusivityGraph> {
    build_graph_with(s, events, BuildStrategy::Pairwise)
}

pub fn build_graph_with(
    s: &CausalScenario,
    events: Option<&[Event]>,
    strategy: BuildStrategy,
) -> Result<ExclusivityGraph> {
    let events = match events {
        Some(ev) => {
            for e in ev {
                s.check_event(e)?;
            }
            ev.to_vec()
        }
        None => s.enumerate_events(),
    };
    let n = events.len();
    let mut graph = Graph::new(n);
    match strategy {
        BuildStrategy::Pairwise => {
            graph.adj = (0..n)
                .into_par_iter()
                .map(|u| {
                    let mut row = FixedBitSet::with_capacity(n);
                    for v in 0..n {
                        if v != u && exclusive_unchecked(&events[u], &events[v], s) {
                            row.insert(v);
                        }
                    }
                    row
                })
                .collect();
        }
        BuildStrategy::BreadthFirst => {
            let mut visited = FixedBitSet::with_capacity(n);
            let mut queue = VecDeque::new();
            for root in 0..n {
                if visited.put(root) {
                    continue;
                }
                queue.push_back(root);
                while let Some(v) = queue.pop_front() {
                    for u in 0..n {
                        if u != v && exclusive_unchecked(&events[v], &events[u], s) {
                            graph.adj[v].insert(u);
                            graph.adj[u].insert(v);
                            if !visited.put(u) {
                                queue.push_back(u);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ExclusivityGraph {
        scenario: s.clone(),
        events,
        graph,
    })
}

impl ExclusivityGraph {
    pub fn scenario(&self) -> &CausalScenario {
        &self.scenario
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn index_of(&self, event: &Event) -> Option<usize> {
        self.events.iter().position(|e| e == event)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.graph.set_weights(weights)?;
        Ok(self)
    }

    pub fn induced_subgraph(&self, idxs: &[usize]) -> Result<Self> {
        Ok(Self {
            scenario: self.scenario.clone(),
            graph: self.graph.induced_subgraph(idxs)?,
            events: idxs.iter().map(|&i| self.events[i].clone()).collect(),
        })
    }

    /// Complement graph over the same events. Its edges no longer mean exclusivity.
    pub fn complement(&self) -> Self {
        Self {
            scenario: self.scenario.clone(),
            events: self.events.clone(),
            graph: self.graph.complement(),
        }
    }

    pub fn colored_layers(&self) -> ColoredMultigraph {
        colored_layers(&self.scenario, self).expect("graph built from its own scenario")
    }

    pub fn to_dot(&self) -> String {
        dot(&self.graph, Some(&self.events), &[])
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.events.iter().map(|e| e.to_string()).collect(),
            weights: self.graph.weights.clone(),
            edges: self.graph.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            layers: None,
        }
    }
}

/// Exclusivity graph with one edge layer per observed variable.
#[derive(Clone, Debug, PartialEq)]
pub struct ColoredMultigraph {
    pub base: ExclusivityGraph,
    /// `(variable name, edges witnessed by it)` in observed-variable order.
    pub layers: Vec<(String, Vec<(usize, usize)>)>,
}

pub fn colored_layers(s: &CausalScenario, g: &ExclusivityGraph) -> Result<ColoredMultigraph> {
    if *s != g.scenario {
        return Err(Error::EventMismatch(
            "graph was built from a different scenario".into(),
        ));
    }
    let mut layers: Vec<(String, Vec<(usize, usize)>)> = s
        .observed()
        .iter()
        .map(|v| (v.name.clone(), Vec::new()))
        .collect();
    for (u, v) in g.edges() {
        for w in witnesses_unchecked(&g.events[u], &g.events[v], s) {
            layers[w].1.push((u, v));
        }
    }
    Ok(ColoredMultigraph {
        base: g.clone(),
        layers,
    })
}

impl ColoredMultigraph {
    pub fn layer(&self, name: &str) -> Option<&[(usize, usize)]> {
        self.layers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e.as_slice())
    }

    pub fn to_dot(&self) -> String {
        dot(&self.base.graph, Some(&self.base.events), &self.layers)
    }

    pub fn to_json(&self) -> GraphJson {
        let mut json = self.base.to_json();
        json.layers = Some(
            self.layers
                .iter()
                .map(|(n, e)| (n.clone(), e.iter().map(|&(u, v)| [u, v]).collect()))
                .collect(),
        );
        json
    }
}

const PALETTE: [&str; 8] = [
    "red", "blue", "darkgreen", "orange", "purple", "brown", "magenta", "gray40",
];

/// Graphviz text for a plain graph.
pub fn export_dot(g: &Graph) -> String {
    dot(g, None, &[])
}

fn dot(g: &Graph, events: Option<&[Event]>, layers: &[(String, Vec<(usize, usize)>)]) -> String {
    let mut out = String::from("graph G {\n");
    for v in 0..g.len() {
        let label = events.map_or_else(|| v.to_string(), |ev| ev[v].to_string());
        let _ = writeln!(out, "  {v} [label=\"{label}\", weight={}];", g.weights[v]);
    }
    if layers.is_empty() {
        for (u, v) in g.edges() {
            let _ = writeln!(out, "  {u} -- {v};");
        }
    } else {
        for (k, (name, edges)) in layers.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            for &(u, v) in edges {
                let _ = writeln!(out, "  {u} -- {v} [color={color}, label=\"{name}\"];");
            }
        }
    }
    out.push_str("}\n");
    out
}

/// JSON dump of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<String>,
    pub weights: Vec<f64>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<std::collections::BTreeMap<String, Vec<[usize; 2]>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;
    use proptest::prelude::*;

    fn ev(a: usize, b: usize, x: usize) -> Event {
        Event::new(vec![a, b], vec![x])
    }

    #[test]
    fn same_setting_different_a() {
        let s = CausalScenario::instrumental(3, 2, 2).unwrap();
        let r = are_exclusive(&ev(0, 0, 0), &ev(1, 1, 0), &s).unwrap();
        assert!(r.exclusive);
        assert_eq!(r.witnesses, vec![0]);
    }

    #[test]
    fn different_setting_different_a() {
        let s = CausalScenario::instrumental(3, 2, 2).unwrap();
        let r = are_exclusive(&ev(0, 0, 1), &ev(1, 0, 0), &s).unwrap();
        assert!(!r.exclusive);
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn b_witness_across_settings() {
        let s = CausalScenario::instrumental(3, 2, 2).unwrap();
        let r = are_exclusive(&ev(0, 0, 0), &ev(0, 1, 2), &s).unwrap();
        assert!(r.exclusive);
        assert_eq!(r.witnesses, vec![1]);
    }

    #[test]
    fn mismatched_event_is_an_error() {
        let s = CausalScenario::instrumental(3, 2, 2).unwrap();
        let bell_event = Event::new(vec![0, 0], vec![0, 0]);
        assert!(matches!(
            are_exclusive(&bell_event, &ev(0, 0, 0), &s),
            Err(Error::EventMismatch(_))
        ));
    }

    #[test]
    fn two_two_two_structure() {
        let s = CausalScenario::instrumental(2, 2, 2).unwrap();
        let g = build_graph(&s, None).unwrap();
        // per-setting 4-cliques
        for x in 0..2 {
            for i in 4 * x..4 * x + 4 {
                for j in i + 1..4 * x + 4 {
                    assert!(g.has_edge(i, j));
                }
            }
        }
        // 12 clique edges + cross edges with equal a and different b: 2 per a
        assert_eq!(g.edge_count(), 12 + 4);
        let m = g.colored_layers();
        let a_layer = m.layer("A").unwrap();
        let b_layer = m.layer("B").unwrap();
        for &(u, v) in a_layer {
            let (e, f) = (&g.events()[u], &g.events()[v]);
            assert!(e.settings == f.settings && e.outcomes[0] != f.outcomes[0]);
        }
        for &(u, v) in b_layer {
            let (e, f) = (&g.events()[u], &g.events()[v]);
            assert!(e.outcomes[0] == f.outcomes[0] && e.outcomes[1] != f.outcomes[1]);
        }
        assert_eq!(a_layer.len(), 8);
        assert_eq!(b_layer.len(), 8);
    }

    #[test]
    fn empty_event_list() {
        let s = CausalScenario::instrumental(2, 2, 2).unwrap();
        let g = build_graph(&s, Some(&[])).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.to_dot(), "graph G {\n}\n");
    }

    #[test]
    fn complement_involution_and_views() {
        let k4 = Graph::complete(4);
        assert_eq!(k4.complement().edge_count(), 0);
        assert_eq!(k4.complement().complement(), k4);
        let c5 = Graph::cycle(5);
        assert_eq!(c5.induced_subgraph(&[0, 1, 2, 3, 4]).unwrap(), c5);
        assert_eq!(c5.induced_subgraph(&[3]).unwrap().edge_count(), 0);
        assert!(matches!(
            c5.induced_subgraph(&[0, 7]),
            Err(Error::IndexOutOfRange { index: 7, len: 5 })
        ));
        assert!(c5.induced_subgraph(&[1, 1]).is_err());
    }

    #[test]
    fn dot_output() {
        let text = export_dot(&Graph::cycle(5));
        assert_eq!(text.matches(" -- ").count(), 5);
        assert_eq!(text.matches("[label=").count(), 5);
        assert_eq!(text, export_dot(&Graph::cycle(5)));
    }

    #[test]
    fn chsh_layers() {
        let s = parse_scenario("bell:2,2,2").unwrap();
        let g = build_graph(&s, None).unwrap();
        let m = g.colored_layers();
        for (u, v) in g.edges() {
            let (e, f) = (&g.events()[u], &g.events()[v]);
            let a_rule = e.settings[0] == f.settings[0] && e.outcomes[0] != f.outcomes[0];
            let b_rule = e.settings[1] == f.settings[1] && e.outcomes[1] != f.outcomes[1];
            assert_eq!(m.layer("A").unwrap().contains(&(u, v)), a_rule);
            assert_eq!(m.layer("B").unwrap().contains(&(u, v)), b_rule);
        }
    }

    #[test]
    fn json_dump_shape() {
        let s = CausalScenario::instrumental(2, 2, 2).unwrap();
        let g = build_graph(&s, None).unwrap();
        let json = serde_json::to_value(g.colored_layers().to_json()).unwrap();
        assert_eq!(json["vertices"][0], "00|0");
        assert_eq!(json["edges"].as_array().unwrap().len(), 16);
        assert!(json["layers"]["A"].is_array());
    }

    fn arb_scenario() -> impl Strategy<Value = CausalScenario> {
        prop_oneof![
            (2usize..8, 2usize..5, 2usize..5)
                .prop_map(|(l, m, n)| CausalScenario::instrumental(l, m, n).unwrap()),
            (2usize..4, 2usize..4, 2usize..4, 2usize..4)
                .prop_map(|(a, b, m, n)| CausalScenario::bell(a, b, m, n).unwrap()),
        ]
        .prop_filter("at most 200 events", |s| s.event_count() <= 200)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bfs_matches_pairwise_and_rules(s in arb_scenario()) {
            let pair = build_graph_with(&s, None, BuildStrategy::Pairwise).unwrap();
            let bfs = build_graph_with(&s, None, BuildStrategy::BreadthFirst).unwrap();
            prop_assert_eq!(&pair, &bfs);
            let ev = pair.events();
            let is_bell = s.instruments().len() == 2;
            for u in 0..ev.len() {
                for v in 0..ev.len() {
                    if u == v { continue; }
                    let r = are_exclusive(&ev[u], &ev[v], &s).unwrap();
                    prop_assert_eq!(r.exclusive, pair.has_edge(u, v));
                    prop_assert_eq!(&r, &are_exclusive(&ev[v], &ev[u], &s).unwrap());
                    let (e, f) = (&ev[u], &ev[v]);
                    let expected = if is_bell {
                        (e.settings[0] == f.settings[0] && e.outcomes[0] != f.outcomes[0])
                            || (e.settings[1] == f.settings[1] && e.outcomes[1] != f.outcomes[1])
                    } else {
                        e.settings == f.settings
                            || (e.outcomes[0] == f.outcomes[0] && e.outcomes[1] != f.outcomes[1])
                    };
                    prop_assert_eq!(r.exclusive, expected);
                }
            }
            let m = pair.colored_layers();
            let mut union: Vec<(usize, usize)> =
                m.layers.iter().flat_map(|(_, e)| e.iter().copied()).collect();
            union.sort_unstable();
            union.dedup();
            prop_assert_eq!(union, pair.edges());
        }
    }
}
