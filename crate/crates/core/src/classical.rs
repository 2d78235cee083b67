//! Classical bounds.
//!
//! The classical value of an inequality is attained by a deterministic
//! strategy: one response function per observed variable, from joint
//! (non-latent) parent values to an outcome. Two routes to that value are
//! provided and are expected to agree exactly:
//!
//! * [`alpha`], the weighted independence number of the support graph, by
//!   branch-and-bound with a greedy clique-cover bound;
//! * [`classical_max_oracle`], brute force over deterministic strategies.

use fixedbitset::FixedBitSet;

use crate::catalog::LinearInequality;
use crate::graph::Graph;
use crate::scenario::{CausalScenario, Distribution, Event};
use crate::{Error, Result};

/// Default cap on the number of strategies the oracle may enumerate.
pub const DEFAULT_STRATEGY_CAP: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchStats {
    pub nodes: u64,
    /// Clique-cover bound at the root.
    pub root_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StableSetResult {
    pub value: f64,
    /// Sorted vertex indices of an optimal independent set.
    pub vertices: Vec<usize>,
    pub stats: SearchStats,
}

/// Maximum-weight independent set.
///
/// Vertices are branched on in index order, include-branch first, and only
/// strict improvements replace the incumbent, so among optimal sets the one
/// preferring lower indices is returned.
pub fn alpha<G: AsRef<Graph> + ?Sized>(g: &G) -> StableSetResult {
    let g = g.as_ref();
    let n = g.len();
    let mut cand = FixedBitSet::with_capacity(n);
    cand.insert_range(..);
    let mut search = Search {
        g,
        best: 0.0,
        best_set: Vec::new(),
        current: Vec::new(),
        nodes: 0,
    };
    let root_bound = search.clique_cover_bound(&cand);
    search.expand(cand, 0.0);
    StableSetResult {
        value: search.best,
        vertices: search.best_set,
        stats: SearchStats {
            nodes: search.nodes,
            root_bound,
        },
    }
}

struct Search<'a> {
    g: &'a Graph,
    best: f64,
    best_set: Vec<usize>,
    current: Vec<usize>,
    nodes: u64,
}

impl Search<'_> {
    fn clique_cover_bound(&self, cand: &FixedBitSet) -> f64 {
        // Greedy partition into cliques; an independent set meets each clique at most once.
        let mut cliques: Vec<(FixedBitSet, f64)> = Vec::new();
        for v in cand.ones() {
            let w = self.g.weight(v);
            match cliques.iter_mut().find(|(common, _)| common.contains(v)) {
                Some((common, max_w)) => {
                    common.intersect_with(self.g.neighborhood(v));
                    *max_w = max_w.max(w);
                }
                None => {
                    let mut common = self.g.neighborhood(v).clone();
                    common.intersect_with(cand);
                    cliques.push((common, w));
                }
            }
        }
        cliques.iter().map(|(_, w)| w).sum()
    }

    fn expand(&mut self, mut cand: FixedBitSet, weight: f64) {
        self.nodes += 1;
        let Some(v) = cand.minimum() else {
            if weight > self.best {
                self.best = weight;
                self.best_set = self.current.clone();
            }
            return;
        };
        let slack = 1e-12 * (1.0 + self.best.abs());
        if weight + self.clique_cover_bound(&cand) <= self.best + slack {
            return;
        }
        cand.set(v, false);

        let mut with_v = cand.clone();
        with_v.difference_with(self.g.neighborhood(v));
        self.current.push(v);
        self.expand(with_v, weight + self.g.weight(v));
        self.current.pop();

        self.expand(cand, weight);
    }
}

/// Brute-force maximum-weight independent set for small graphs (test oracle).
pub fn alpha_brute_force(g: &Graph) -> f64 {
    let n = g.len();
    assert!(n <= 24, "brute force limited to 24 vertices");
    let masks: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).fold(0u32, |m, u| m | (1 << u)))
        .collect();
    let mut best = 0.0f64;
    for set in 0u32..(1u32 << n) {
        let mut ok = true;
        let mut w = 0.0;
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if masks[v] & set != 0 {
                ok = false;
                break;
            }
            w += g.weight(v);
        }
        if ok {
            best = best.max(w);
        }
    }
    best
}

/// One response function per observed variable.
///
/// `responses[i][p]` is the outcome of observed variable `i` when its
/// non-latent parents take the joint value with mixed-radix index `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicStrategy {
    pub responses: Vec<Vec<usize>>,
}

impl DeterministicStrategy {
    pub fn validate(&self, s: &CausalScenario) -> Result<()> {
        if self.responses.len() != s.observed().len() {
            return Err(Error::InvalidStrategy(format!(
                "{} response functions for {} observed variables",
                self.responses.len(),
                s.observed().len()
            )));
        }
        for (i, (table, var)) in self.responses.iter().zip(s.observed()).enumerate() {
            if table.len() != s.parent_space(i) || table.iter().any(|&o| o >= var.card) {
                return Err(Error::InvalidStrategy(format!(
                    "response table for `{}` is not a total function into 0..{}",
                    var.name, var.card
                )));
            }
        }
        Ok(())
    }

    /// Whether the strategy produces `event` (given its settings) with certainty.
    pub fn produces(&self, s: &CausalScenario, event: &Event) -> bool {
        self.responses
            .iter()
            .enumerate()
            .all(|(i, table)| table[s.parent_index(event, i)] == event.outcomes[i])
    }

    /// Completes the partial assignment implied by a set of pairwise
    /// non-exclusive events; unconstrained entries default to outcome 0.
    pub fn from_events(s: &CausalScenario, events: &[Event]) -> Result<Self> {
        let mut partial: Vec<Vec<Option<usize>>> = (0..s.observed().len())
            .map(|i| vec![None; s.parent_space(i)])
            .collect();
        for e in events {
            s.check_event(e)?;
            for (i, table) in partial.iter_mut().enumerate() {
                let p = s.parent_index(e, i);
                match table[p] {
                    Some(o) if o != e.outcomes[i] => {
                        return Err(Error::InvalidStrategy(format!(
                            "events are mutually exclusive on `{}`",
                            s.observed()[i].name
                        )))
                    }
                    _ => table[p] = Some(e.outcomes[i]),
                }
            }
        }
        Ok(Self {
            responses: partial
                .into_iter()
                .map(|t| t.into_iter().map(|o| o.unwrap_or(0)).collect())
                .collect(),
        })
    }
}

/// `Π_i card_i^(parent space_i)`, or `None` on overflow.
pub fn strategy_count(s: &CausalScenario) -> Option<u128> {
    (0..s.observed().len()).try_fold(1u128, |acc, i| {
        let per = (s.observed()[i].card as u128).checked_pow(s.parent_space(i) as u32)?;
        acc.checked_mul(per)
    })
}

/// Odometer over all deterministic strategies (last table entry fastest).
pub struct StrategyIter {
    radices: Vec<usize>,
    shape: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for StrategyIter {
    type Item = DeterministicStrategy;

    fn next(&mut self) -> Option<DeterministicStrategy> {
        if self.done {
            return None;
        }
        let mut responses = Vec::with_capacity(self.shape.len());
        let mut offset = 0;
        for &len in &self.shape {
            responses.push(self.digits[offset..offset + len].to_vec());
            offset += len;
        }
        self.done = !advance(&mut self.digits, &self.radices);
        Some(DeterministicStrategy { responses })
    }
}

fn advance(digits: &mut [usize], radices: &[usize]) -> bool {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < radices[k] {
            return true;
        }
        digits[k] = 0;
    }
    false
}

pub fn enumerate_strategies(s: &CausalScenario, cap: u64) -> Result<StrategyIter> {
    let count = strategy_count(s);
    match count {
        Some(c) if c <= cap as u128 => {}
        _ => {
            return Err(Error::StrategyCapExceeded {
                count: count.map_or_else(|| "overflow".to_string(), |c| c.to_string()),
                cap,
            })
        }
    }
    let mut radices = Vec::new();
    let mut shape = Vec::new();
    for (i, var) in s.observed().iter().enumerate() {
        let len = s.parent_space(i);
        shape.push(len);
        radices.extend(std::iter::repeat_n(var.card, len));
    }
    Ok(StrategyIter {
        digits: vec![0; radices.len()],
        radices,
        shape,
        done: false,
    })
}

/// The 0/1 distribution produced by a deterministic strategy.
pub fn evaluate_strategy(st: &DeterministicStrategy, s: &CausalScenario) -> Result<Distribution> {
    st.validate(s)?;
    Ok(Distribution::from_fn(s, |e| {
        if st.produces(s, e) {
            1.0
        } else {
            0.0
        }
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub strategy: DeterministicStrategy,
    /// Number of strategies actually enumerated.
    pub enumerated: u64,
}

/// Maximum of the inequality over all deterministic strategies.
///
/// Only response-table entries that some term depends on are enumerated; the
/// remaining entries cannot change the value and are fixed to 0. The cap
/// applies to that reduced enumeration.
pub fn classical_max_oracle(
    ineq: &LinearInequality,
    s: &CausalScenario,
    cap: u64,
) -> Result<OracleResult> {
    for (e, _) in ineq.terms() {
        s.check_event(e)?;
    }
    // Flat position of each (variable, parent value) table entry.
    let offsets: Vec<usize> = (0..s.observed().len())
        .scan(0, |acc, i| {
            let o = *acc;
            *acc += s.parent_space(i);
            Some(o)
        })
        .collect();
    let mut relevant: Vec<usize> = Vec::new();
    let mut radices: Vec<usize> = Vec::new();
    let mut slot_of = std::collections::HashMap::new();
    let mut requirements: Vec<(Vec<(usize, usize)>, f64)> = Vec::new();
    for (e, w) in ineq.terms() {
        let mut req = Vec::new();
        for i in 0..s.observed().len() {
            let flat = offsets[i] + s.parent_index(e, i);
            let slot = *slot_of.entry(flat).or_insert_with(|| {
                relevant.push(flat);
                radices.push(s.observed()[i].card);
                relevant.len() - 1
            });
            req.push((slot, e.outcomes[i]));
        }
        requirements.push((req, *w));
    }
    let count = radices
        .iter()
        .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128));
    match count {
        Some(c) if c <= cap as u128 => {}
        _ => {
            return Err(Error::StrategyCapExceeded {
                count: count.map_or_else(|| "overflow".to_string(), |c| c.to_string()),
                cap,
            })
        }
    }

    let mut digits = vec![0usize; radices.len()];
    let mut best = f64::NEG_INFINITY;
    let mut best_digits = digits.clone();
    let mut enumerated = 0u64;
    loop {
        enumerated += 1;
        let value: f64 = requirements
            .iter()
            .filter(|(req, _)| req.iter().all(|&(slot, o)| digits[slot] == o))
            .map(|(_, w)| w)
            .sum();
        if value > best {
            best = value;
            best_digits.clone_from(&digits);
        }
        if !advance(&mut digits, &radices) {
            break;
        }
    }

    let mut responses: Vec<Vec<usize>> = (0..s.observed().len())
        .map(|i| vec![0; s.parent_space(i)])
        .collect();
    for (slot, &flat) in relevant.iter().enumerate() {
        let i = offsets.iter().rposition(|&o| o <= flat).expect("offset");
        responses[i][flat - offsets[i]] = best_digits[slot];
    }
    Ok(OracleResult {
        value: best.max(0.0),
        strategy: DeterministicStrategy { responses },
        enumerated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use proptest::prelude::*;

    #[test]
    fn cycles() {
        assert_eq!(alpha(&Graph::cycle(5)).value, 2.0);
        assert_eq!(alpha(&Graph::cycle(7)).value, 3.0);
        for n in 3..=15 {
            assert_eq!(alpha(&Graph::cycle(n)).value, (n / 2) as f64, "C{n}");
        }
        for n in 4..=15 {
            assert_eq!(alpha(&Graph::cycle(n).complement()).value, 2.0, "co-C{n}");
        }
    }

    #[test]
    fn trivial_graphs() {
        let g = Graph::new(1).with_weights(vec![2.5]).unwrap();
        assert_eq!(alpha(&g).value, 2.5);
        let r = alpha(&Graph::new(0));
        assert_eq!(r.value, 0.0);
        assert!(r.vertices.is_empty());
    }

    #[test]
    fn witness_prefers_low_indices() {
        let r = alpha(&Graph::cycle(5));
        assert_eq!(r.vertices, vec![0, 2]);
        let r = alpha(&Graph::cycle(6));
        assert_eq!(r.vertices, vec![0, 2, 4]);
    }

    #[test]
    fn strategy_counts() {
        let count = |t: &str| {
            enumerate_strategies(&t.parse().unwrap(), DEFAULT_STRATEGY_CAP)
                .unwrap()
                .count()
        };
        assert_eq!(count("instrumental:3,2,2"), 32);
        assert_eq!(count("bell:2,2,2,2"), 16);
        assert_eq!(count("instrumental:2,2,2"), 16);
        let big: CausalScenario = "instrumental:30,4,4".parse().unwrap();
        assert!(matches!(
            enumerate_strategies(&big, DEFAULT_STRATEGY_CAP),
            Err(Error::StrategyCapExceeded { .. })
        ));
    }

    #[test]
    fn constant_strategy() {
        let s: CausalScenario = "instrumental:3,2,2".parse().unwrap();
        let st = DeterministicStrategy {
            responses: vec![vec![0; 3], vec![0; 2]],
        };
        let p = evaluate_strategy(&st, &s).unwrap();
        for x in 0..3 {
            assert_eq!(p.get(&Event::new(vec![0, 0], vec![x])), Some(1.0));
        }
        p.check_normalized(&s, 1e-12).unwrap();
    }

    #[test]
    fn parity_strategy() {
        let s: CausalScenario = "instrumental:3,2,2".parse().unwrap();
        let st = DeterministicStrategy {
            responses: vec![vec![0, 1, 0], vec![0, 1]],
        };
        let p = evaluate_strategy(&st, &s).unwrap();
        for e in s.enumerate_events() {
            let (a, b, x) = (e.outcomes[0], e.outcomes[1], e.settings[0]);
            let expected = if a == x % 2 && b == a { 1.0 } else { 0.0 };
            assert_eq!(p.get(&e), Some(expected));
        }
    }

    #[test]
    fn strategy_support_is_independent() {
        let s: CausalScenario = "instrumental:3,3,2".parse().unwrap();
        let g = build_graph(&s, None).unwrap();
        for st in enumerate_strategies(&s, DEFAULT_STRATEGY_CAP).unwrap().step_by(7) {
            let support: Vec<usize> = (0..g.len())
                .filter(|&v| st.produces(&s, &g.events()[v]))
                .collect();
            for &u in &support {
                for &v in &support {
                    assert!(!g.has_edge(u, v));
                }
            }
        }
    }

    #[test]
    fn malformed_strategy() {
        let s: CausalScenario = "instrumental:3,2,2".parse().unwrap();
        let st = DeterministicStrategy {
            responses: vec![vec![0; 2], vec![0; 2]],
        };
        assert!(evaluate_strategy(&st, &s).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (1usize..=20).prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n * (n - 1) / 2),
                prop::collection::vec(prop_oneof![Just(1.0), 0.0f64..3.0], n),
                Just(n),
            )
                .prop_map(|(bits, weights, n)| {
                    let mut g = Graph::new(n);
                    let mut k = 0;
                    for i in 0..n {
                        for j in i + 1..n {
                            if bits[k] {
                                g.add_edge(i, j).unwrap();
                            }
                            k += 1;
                        }
                    }
                    g.with_weights(weights).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn branch_and_bound_matches_brute_force(g in arb_graph()) {
            let r = alpha(&g);
            prop_assert!((r.value - alpha_brute_force(&g)).abs() < 1e-9);
            let sum: f64 = r.vertices.iter().map(|&v| g.weight(v)).sum();
            prop_assert!((sum - r.value).abs() < 1e-9);
            for &u in &r.vertices {
                for &v in &r.vertices {
                    prop_assert!(!g.has_edge(u, v));
                }
            }
        }

        #[test]
        fn induced_subgraph_monotone(g in arb_graph(), keep in prop::collection::vec(any::<bool>(), 20)) {
            let unit = g.clone().with_weights(vec![1.0; g.len()]).unwrap();
            let idxs: Vec<usize> = (0..unit.len()).filter(|&i| keep[i]).collect();
            let sub = unit.induced_subgraph(&idxs).unwrap();
            prop_assert!(alpha(&sub).value <= alpha(&unit).value);
        }
    }
}
