//! Single-latent causal scenarios and their event spaces.
//!
//! A scenario has observed variables (each with a cardinality and a list of
//! observed/instrument parents), parentless instruments, and one latent node
//! that is a common parent of every observed variable. The latent is purely
//! structural: it never carries a distribution, and it is excluded from the
//! parent tuples used by the exclusivity rule and by response functions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index of a non-latent node in a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Observed(usize),
    Instrument(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservedVar {
    pub name: String,
    pub card: usize,
    /// Non-latent parents in declaration order.
    pub parents: Vec<NodeRef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instrument {
    pub name: String,
    pub card: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalScenario {
    observed: Vec<ObservedVar>,
    instruments: Vec<Instrument>,
    latent: String,
}

/// A joint assignment of every observed variable and every instrument.
///
/// Values are positional: `outcomes[i]` belongs to the `i`-th observed
/// variable and `settings[k]` to the `k`-th instrument of the scenario.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub outcomes: Vec<usize>,
    pub settings: Vec<usize>,
}

impl Event {
    pub fn new(outcomes: Vec<usize>, settings: Vec<usize>) -> Self {
        Self { outcomes, settings }
    }
}

impl fmt::Display for Event {
    /// `ab|x` when every value is a single digit, `a,b|x` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let compact = self.outcomes.iter().chain(&self.settings).all(|&v| v < 10);
        let sep = if compact { "" } else { "," };
        let join = |vals: &[usize]| {
            vals.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(sep)
        };
        write!(f, "{}|{}", join(&self.outcomes), join(&self.settings))
    }
}

// --- serialized form -------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObserved {
    name: String,
    card: usize,
    #[serde(default)]
    parents: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstrument {
    name: String,
    card: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    parents: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawLatent {
    One(String),
    Many(Vec<String>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    observed: Vec<RawObserved>,
    #[serde(default)]
    instruments: Vec<RawInstrument>,
    latent: RawLatent,
}

/// Parses a scenario from JSON text or from a shorthand string.
///
/// Shorthands: `instrumental:l,m,n` (X→A→B with X of cardinality `l`),
/// `bell:k,m,n` (both parties with `k` settings) and `bell:lx,ly,m,n`.
/// A JSON string literal holding a shorthand is accepted as well.
pub fn parse_scenario(text: &str) -> Result<CausalScenario> {
    let text = text.trim();
    if text.starts_with('{') {
        let raw: RawScenario =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        return CausalScenario::from_raw(raw);
    }
    if text.starts_with('"') {
        let inner: String = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        return parse_shorthand(&inner);
    }
    parse_shorthand(text)
}

fn parse_shorthand(text: &str) -> Result<CausalScenario> {
    let (kind, args) = text
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("unrecognized scenario `{text}`")))?;
    let nums = args
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad cardinality `{s}` in `{text}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    match (kind.trim(), nums.as_slice()) {
        ("instrumental", &[l, m, n]) => CausalScenario::instrumental(l, m, n),
        ("bell", &[k, m, n]) => CausalScenario::bell(k, k, m, n),
        ("bell", &[lx, ly, m, n]) => CausalScenario::bell(lx, ly, m, n),
        _ => Err(Error::Parse(format!("unrecognized scenario `{text}`"))),
    }
}

impl CausalScenario {
    /// X → A → B with latent Λ → A, Λ → B.
    pub fn instrumental(l: usize, m: usize, n: usize) -> Result<Self> {
        Self::from_raw(RawScenario {
            observed: vec![
                RawObserved {
                    name: "A".into(),
                    card: m,
                    parents: vec!["X".into(), "L".into()],
                },
                RawObserved {
                    name: "B".into(),
                    card: n,
                    parents: vec!["A".into(), "L".into()],
                },
            ],
            instruments: vec![RawInstrument {
                name: "X".into(),
                card: l,
                parents: vec![],
            }],
            latent: RawLatent::One("L".into()),
        })
    }

    /// X → A, Y → B with latent Λ → A, Λ → B.
    pub fn bell(lx: usize, ly: usize, m: usize, n: usize) -> Result<Self> {
        Self::from_raw(RawScenario {
            observed: vec![
                RawObserved {
                    name: "A".into(),
                    card: m,
                    parents: vec!["X".into(), "L".into()],
                },
                RawObserved {
                    name: "B".into(),
                    card: n,
                    parents: vec!["Y".into(), "L".into()],
                },
            ],
            instruments: vec![
                RawInstrument {
                    name: "X".into(),
                    card: lx,
                    parents: vec![],
                },
                RawInstrument {
                    name: "Y".into(),
                    card: ly,
                    parents: vec![],
                },
            ],
            latent: RawLatent::One("L".into()),
        })
    }

    fn from_raw(raw: RawScenario) -> Result<Self> {
        let latent = match raw.latent {
            RawLatent::One(name) => name,
            RawLatent::Many(mut names) => {
                if names.len() != 1 {
                    return Err(Error::InvalidScenario(format!(
                        "exactly one latent node is supported, found {}",
                        names.len()
                    )));
                }
                names.pop().unwrap()
            }
        };
        if raw.observed.is_empty() {
            return Err(Error::InvalidScenario("no observed variables".into()));
        }

        let mut index: HashMap<String, NodeRef> = HashMap::new();
        let mut claim = |name: &str, node: Option<NodeRef>| -> Result<()> {
            if name.is_empty() {
                return Err(Error::InvalidScenario("empty variable name".into()));
            }
            let clash = match node {
                Some(node) => index.insert(name.to_string(), node).is_some() || name == latent,
                None => index.contains_key(name),
            };
            if clash {
                return Err(Error::InvalidScenario(format!("duplicate variable `{name}`")));
            }
            Ok(())
        };
        for (k, inst) in raw.instruments.iter().enumerate() {
            claim(&inst.name, Some(NodeRef::Instrument(k)))?;
        }
        for (i, obs) in raw.observed.iter().enumerate() {
            claim(&obs.name, Some(NodeRef::Observed(i)))?;
        }
        claim(&latent, None)?;

        let instruments = raw
            .instruments
            .iter()
            .map(|inst| {
                if !inst.parents.is_empty() {
                    return Err(Error::InvalidScenario(format!(
                        "instrument `{}` has parents; instruments must be parentless",
                        inst.name
                    )));
                }
                check_card(&inst.name, inst.card)?;
                Ok(Instrument {
                    name: inst.name.clone(),
                    card: inst.card,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut observed = Vec::with_capacity(raw.observed.len());
        for obs in &raw.observed {
            check_card(&obs.name, obs.card)?;
            let mut parents = Vec::new();
            for p in &obs.parents {
                if *p == latent {
                    continue;
                }
                let node = *index.get(p.as_str()).ok_or_else(|| {
                    Error::InvalidScenario(format!(
                        "unknown parent `{p}` of `{}` (only one latent, `{latent}`, is allowed)",
                        obs.name
                    ))
                })?;
                if parents.contains(&node) {
                    return Err(Error::InvalidScenario(format!(
                        "parent `{p}` listed twice for `{}`",
                        obs.name
                    )));
                }
                parents.push(node);
            }
            observed.push(ObservedVar {
                name: obs.name.clone(),
                card: obs.card,
                parents,
            });
        }

        let scenario = Self {
            observed,
            instruments,
            latent,
        };
        scenario.check_acyclic()?;
        Ok(scenario)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn's algorithm over observed variables; instruments are sources.
        let n = self.observed.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, var) in self.observed.iter().enumerate() {
            for p in &var.parents {
                if let NodeRef::Observed(j) = *p {
                    indegree[i] += 1;
                    children[j].push(i);
                }
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    stack.push(c);
                }
            }
        }
        if seen != n {
            let on_cycle: Vec<&str> = (0..n)
                .filter(|&i| indegree[i] > 0)
                .map(|i| self.observed[i].name.as_str())
                .collect();
            return Err(Error::Cycle(on_cycle.join(", ")));
        }
        Ok(())
    }

    pub fn observed(&self) -> &[ObservedVar] {
        &self.observed
    }

    pub fn instruments(&self) -> &[Instrument] {
        &self.instruments
    }

    pub fn latent(&self) -> &str {
        &self.latent
    }

    pub fn node_name(&self, node: NodeRef) -> &str {
        match node {
            NodeRef::Observed(i) => &self.observed[i].name,
            NodeRef::Instrument(k) => &self.instruments[k].name,
        }
    }

    pub fn node_card(&self, node: NodeRef) -> usize {
        match node {
            NodeRef::Observed(i) => self.observed[i].card,
            NodeRef::Instrument(k) => self.instruments[k].card,
        }
    }

    /// All directed edges, latent ones included, as `(from, to)` names.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for var in &self.observed {
            for &p in &var.parents {
                out.push((self.node_name(p).to_string(), var.name.clone()));
            }
            out.push((self.latent.clone(), var.name.clone()));
        }
        out
    }

    /// `Some("instrumental:l,m,n")` or `Some("bell:...")` when the scenario has
    /// one of the canonical shapes.
    pub fn shorthand(&self) -> Option<String> {
        if let Ok(s) = Self::instrumental(
            self.instruments.first()?.card,
            self.observed[0].card,
            self.observed.get(1)?.card,
        ) {
            if s == *self {
                return Some(format!(
                    "instrumental:{},{},{}",
                    self.instruments[0].card, self.observed[0].card, self.observed[1].card
                ));
            }
        }
        if self.instruments.len() == 2 && self.observed.len() == 2 {
            let (lx, ly) = (self.instruments[0].card, self.instruments[1].card);
            let (m, n) = (self.observed[0].card, self.observed[1].card);
            if Self::bell(lx, ly, m, n).ok().as_ref() == Some(self) {
                return Some(if lx == ly {
                    format!("bell:{lx},{m},{n}")
                } else {
                    format!("bell:{lx},{ly},{m},{n}")
                });
            }
        }
        None
    }

    /// Human-readable label: the shorthand when available, JSON otherwise.
    pub fn label(&self) -> String {
        self.shorthand().unwrap_or_else(|| self.to_json())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("scenario serializes")
    }

    fn to_raw(&self) -> RawScenario {
        RawScenario {
            observed: self
                .observed
                .iter()
                .map(|v| RawObserved {
                    name: v.name.clone(),
                    card: v.card,
                    parents: v
                        .parents
                        .iter()
                        .map(|&p| self.node_name(p).to_string())
                        .chain(std::iter::once(self.latent.clone()))
                        .collect(),
                })
                .collect(),
            instruments: self
                .instruments
                .iter()
                .map(|i| RawInstrument {
                    name: i.name.clone(),
                    card: i.card,
                    parents: vec![],
                })
                .collect(),
            latent: RawLatent::One(self.latent.clone()),
        }
    }

    // --- event space -------------------------------------------------------

    pub fn outcome_space(&self) -> usize {
        self.observed.iter().map(|v| v.card).product()
    }

    pub fn setting_space(&self) -> usize {
        self.instruments.iter().map(|i| i.card).product()
    }

    pub fn event_count(&self) -> usize {
        self.outcome_space() * self.setting_space()
    }

    /// Events in lexicographic order, settings outer and outcomes inner.
    pub fn enumerate_events(&self) -> Vec<Event> {
        (0..self.event_count()).map(|i| self.event_at(i)).collect()
    }

    pub fn event_at(&self, index: usize) -> Event {
        let outcome_space = self.outcome_space();
        let settings = unrank(
            index / outcome_space,
            self.instruments.iter().map(|i| i.card),
        );
        let outcomes = unrank(index % outcome_space, self.observed.iter().map(|v| v.card));
        Event { outcomes, settings }
    }

    pub fn index_of(&self, event: &Event) -> Result<usize> {
        self.check_event(event)?;
        let s = rank(&event.settings, self.instruments.iter().map(|i| i.card));
        let o = rank(&event.outcomes, self.observed.iter().map(|v| v.card));
        Ok(s * self.outcome_space() + o)
    }

    pub fn check_event(&self, event: &Event) -> Result<()> {
        if event.outcomes.len() != self.observed.len()
            || event.settings.len() != self.instruments.len()
        {
            return Err(Error::EventMismatch(format!(
                "event {event} has shape ({}, {}), scenario expects ({}, {})",
                event.outcomes.len(),
                event.settings.len(),
                self.observed.len(),
                self.instruments.len()
            )));
        }
        let in_range = event
            .outcomes
            .iter()
            .zip(&self.observed)
            .all(|(&v, var)| v < var.card)
            && event
                .settings
                .iter()
                .zip(&self.instruments)
                .all(|(&v, inst)| v < inst.card);
        if !in_range {
            return Err(Error::EventMismatch(format!(
                "event {event} has a value outside its cardinality"
            )));
        }
        Ok(())
    }

    /// Parses an event written as `ab|x` (single digits) or `a,b|x`.
    pub fn parse_event(&self, text: &str) -> Result<Event> {
        let (outs, sets) = text
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("event `{text}` lacks `|`")))?;
        let values = |part: &str, expected: usize| -> Result<Vec<usize>> {
            let part = part.trim();
            if part.is_empty() {
                return Ok(vec![]);
            }
            let pieces: Vec<&str> = if part.contains(',') {
                part.split(',').collect()
            } else if part.len() == expected {
                (0..part.len()).map(|i| &part[i..i + 1]).collect()
            } else {
                vec![part]
            };
            pieces
                .iter()
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad value `{p}` in event `{text}`")))
                })
                .collect()
        };
        let event = Event {
            outcomes: values(outs, self.observed.len())?,
            settings: values(sets, self.instruments.len())?,
        };
        self.check_event(&event)?;
        Ok(event)
    }

    /// Value of a (non-latent) node within an event.
    #[inline]
    pub fn node_value(&self, event: &Event, node: NodeRef) -> usize {
        match node {
            NodeRef::Observed(i) => event.outcomes[i],
            NodeRef::Instrument(k) => event.settings[k],
        }
    }

    /// Number of joint values of the non-latent parents of observed variable `i`.
    pub fn parent_space(&self, i: usize) -> usize {
        self.observed[i]
            .parents
            .iter()
            .map(|&p| self.node_card(p))
            .product()
    }

    /// Mixed-radix index of the parent values of observed variable `i` in `event`
    /// (first parent most significant).
    pub fn parent_index(&self, event: &Event, i: usize) -> usize {
        self.observed[i]
            .parents
            .iter()
            .fold(0, |acc, &p| acc * self.node_card(p) + self.node_value(event, p))
    }
}

impl std::str::FromStr for CausalScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_scenario(s)
    }
}

fn check_card(name: &str, card: usize) -> Result<()> {
    if card < 2 {
        return Err(Error::InvalidScenario(format!(
            "variable `{name}` has cardinality {card}; at least 2 is required"
        )));
    }
    Ok(())
}

fn unrank(mut index: usize, cards: impl DoubleEndedIterator<Item = usize>) -> Vec<usize> {
    let mut out: Vec<usize> = cards
        .rev()
        .map(|c| {
            let v = index % c;
            index /= c;
            v
        })
        .collect();
    out.reverse();
    out
}

fn rank(values: &[usize], cards: impl Iterator<Item = usize>) -> usize {
    values.iter().zip(cards).fold(0, |acc, (&v, c)| acc * c + v)
}

/// A (possibly partial) table of event probabilities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Distribution {
    table: BTreeMap<Event, f64>,
}

impl Distribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_fn(scenario: &CausalScenario, mut f: impl FnMut(&Event) -> f64) -> Self {
        let table = scenario
            .enumerate_events()
            .into_iter()
            .map(|e| {
                let p = f(&e);
                (e, p)
            })
            .collect();
        Self { table }
    }

    pub fn uniform(scenario: &CausalScenario) -> Self {
        let p = 1.0 / scenario.outcome_space() as f64;
        Self::from_fn(scenario, |_| p)
    }

    pub fn insert(&mut self, event: Event, p: f64) {
        self.table.insert(event, p);
    }

    pub fn get(&self, event: &Event) -> Option<f64> {
        self.table.get(event).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Event, f64)> {
        self.table.iter().map(|(e, &p)| (e, p))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Checks coverage, non-negativity and `Σ_a p(a|x) = 1` for every setting.
    pub fn check_normalized(&self, scenario: &CausalScenario, tol: f64) -> Result<()> {
        let mut sums: BTreeMap<&[usize], f64> = BTreeMap::new();
        for (e, &p) in &self.table {
            scenario.check_event(e)?;
            if !(p >= -tol) || !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("p({e}) = {p}")));
            }
            *sums.entry(e.settings.as_slice()).or_default() += p;
        }
        if self.table.len() != scenario.event_count() {
            return Err(Error::InvalidDistribution(format!(
                "{} of {} events present",
                self.table.len(),
                scenario.event_count()
            )));
        }
        for (x, s) in sums {
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidDistribution(format!(
                    "probabilities for setting {x:?} sum to {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Covariance-ratio estimate `Cov(X,B) / Cov(X,A)` from `(x, a, b)` samples.
pub fn estimate_iv_strength(samples: &[(f64, f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples(samples.len()));
    }
    let n = samples.len() as f64;
    let (mut mx, mut ma, mut mb) = (0.0, 0.0, 0.0);
    for &(x, a, b) in samples {
        mx += x;
        ma += a;
        mb += b;
    }
    mx /= n;
    ma /= n;
    mb /= n;
    let (mut cxa, mut cxb) = (0.0, 0.0);
    for &(x, a, b) in samples {
        cxa += (x - mx) * (a - ma);
        cxb += (x - mx) * (b - mb);
    }
    cxa /= n - 1.0;
    cxb /= n - 1.0;
    if cxa.abs() <= 1e-12 || !cxa.is_finite() {
        return Err(Error::WeakInstrument(cxa));
    }
    Ok(cxb / cxa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn instrumental_shorthand() {
        let s = parse_scenario("instrumental:3,2,2").unwrap();
        assert_eq!(s.instruments().len(), 1);
        assert_eq!(s.instruments()[0].card, 3);
        assert_eq!(s.observed()[0].name, "A");
        assert_eq!(s.observed()[0].parents, vec![NodeRef::Instrument(0)]);
        assert_eq!(s.observed()[1].parents, vec![NodeRef::Observed(0)]);
        let edges = s.edges();
        for e in [("X", "A"), ("A", "B"), ("L", "A"), ("L", "B")] {
            assert!(edges.contains(&(e.0.to_string(), e.1.to_string())));
        }
        assert_eq!(edges.len(), 4);
    }

    #[test]
    fn bell_shorthand_has_no_signalling_edge() {
        let s = parse_scenario("bell:2,2,2").unwrap();
        assert_eq!(s.instruments().len(), 2);
        assert_eq!(s.observed()[1].parents, vec![NodeRef::Instrument(1)]);
        assert!(!s.edges().contains(&("A".into(), "B".into())));
        assert_eq!(parse_scenario("bell:2,2,2,2").unwrap(), s);
        assert_eq!(s.shorthand().as_deref(), Some("bell:2,2,2"));
        let asym = parse_scenario("bell:2,3,2,2").unwrap();
        assert_eq!(asym.shorthand().as_deref(), Some("bell:2,3,2,2"));
    }

    #[test]
    fn cycle_is_rejected() {
        let text = r#"{"observed":[{"name":"A","card":2,"parents":["X","B","L"]},
            {"name":"B","card":2,"parents":["A","L"]}],
            "instruments":[{"name":"X","card":3}],"latent":"L"}"#;
        assert!(matches!(parse_scenario(text), Err(Error::Cycle(_))));
    }

    #[test]
    fn structural_errors() {
        let two_latents = r#"{"observed":[{"name":"A","card":2,"parents":[]}],"latent":["L","M"]}"#;
        assert!(matches!(parse_scenario(two_latents), Err(Error::InvalidScenario(_))));
        let hidden_second_latent =
            r#"{"observed":[{"name":"A","card":2,"parents":["M"]}],"latent":"L"}"#;
        assert!(matches!(parse_scenario(hidden_second_latent), Err(Error::InvalidScenario(_))));
        let inst_parent = r#"{"observed":[{"name":"A","card":2,"parents":["X"]}],
            "instruments":[{"name":"X","card":2,"parents":["A"]}],"latent":"L"}"#;
        assert!(matches!(parse_scenario(inst_parent), Err(Error::InvalidScenario(_))));
        assert!(matches!(
            parse_scenario("instrumental:1,2,2"),
            Err(Error::InvalidScenario(_))
        ));
        assert!(matches!(parse_scenario("triangle:2,2"), Err(Error::Parse(_))));
    }

    #[test]
    fn json_and_quoted_shorthand() {
        let json = r#"{"observed":[{"name":"A","card":2,"parents":["X","L"]},
            {"name":"B","card":2,"parents":["A","L"]}],
            "instruments":[{"name":"X","card":2}],"latent":"L"}"#;
        let s = parse_scenario(json).unwrap();
        assert_eq!(s, CausalScenario::instrumental(2, 2, 2).unwrap());
        assert_eq!(parse_scenario("\"instrumental:2,2,2\"").unwrap(), s);
    }

    #[test]
    fn event_counts() {
        assert_eq!(parse_scenario("instrumental:3,2,2").unwrap().enumerate_events().len(), 12);
        assert_eq!(parse_scenario("bell:2,2,2").unwrap().enumerate_events().len(), 16);
        assert_eq!(parse_scenario("instrumental:2,2,2").unwrap().enumerate_events().len(), 8);
    }

    #[test]
    fn settings_outer_outcomes_inner() {
        let s = CausalScenario::instrumental(3, 2, 2).unwrap();
        let ev = s.enumerate_events();
        assert_eq!(ev[0], Event::new(vec![0, 0], vec![0]));
        assert_eq!(ev[1], Event::new(vec![0, 1], vec![0]));
        assert_eq!(ev[4], Event::new(vec![0, 0], vec![1]));
        assert_eq!(ev[11], Event::new(vec![1, 1], vec![2]));
    }

    #[test]
    fn event_text() {
        let s = CausalScenario::instrumental(12, 2, 2).unwrap();
        let e = Event::new(vec![1, 0], vec![11]);
        assert_eq!(e.to_string(), "1,0|11");
        assert_eq!(s.parse_event("1,0|11").unwrap(), e);
        let e = Event::new(vec![1, 0], vec![2]);
        assert_eq!(e.to_string(), "10|2");
        assert_eq!(s.parse_event("10|2").unwrap(), e);
        assert!(s.parse_event("12|2").is_err());
    }

    #[test]
    fn iv_degenerate_cases() {
        let const_b: Vec<_> = (0..10).map(|i| (i as f64, 2.0 * i as f64, 7.0)).collect();
        assert_eq!(estimate_iv_strength(&const_b).unwrap(), 0.0);
        let const_x: Vec<_> = (0..10).map(|i| (1.0, i as f64, i as f64)).collect();
        assert!(matches!(estimate_iv_strength(&const_x), Err(Error::WeakInstrument(_))));
        assert!(matches!(
            estimate_iv_strength(&[(0.0, 0.0, 0.0)]),
            Err(Error::InsufficientSamples(1))
        ));
    }

    #[test]
    fn uniform_is_normalized() {
        let s = CausalScenario::bell(2, 3, 2, 4).unwrap();
        Distribution::uniform(&s).check_normalized(&s, 1e-12).unwrap();
        assert!(Distribution::new().check_normalized(&s, 1e-12).is_err());
    }

    fn arb_scenario() -> impl Strategy<Value = CausalScenario> {
        prop_oneof![
            (2usize..6, 2usize..5, 2usize..5)
                .prop_map(|(l, m, n)| CausalScenario::instrumental(l, m, n).unwrap()),
            (2usize..4, 2usize..4, 2usize..4, 2usize..4)
                .prop_map(|(a, b, m, n)| CausalScenario::bell(a, b, m, n).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn serialization_roundtrips(s in arb_scenario()) {
            prop_assert_eq!(parse_scenario(&s.to_json()).unwrap(), s.clone());
            prop_assert_eq!(parse_scenario(&s.label()).unwrap(), s);
        }

        #[test]
        fn index_event_bijection(s in arb_scenario()) {
            for i in 0..s.event_count() {
                prop_assert_eq!(s.index_of(&s.event_at(i)).unwrap(), i);
            }
        }

        #[test]
        fn iv_offset_invariance(
            rows in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 3..40),
            offset in -100.0f64..100.0,
        ) {
            let shifted: Vec<_> = rows.iter().map(|&(x, a, b)| (x, a, b + offset)).collect();
            match (estimate_iv_strength(&rows), estimate_iv_strength(&shifted)) {
                (Ok(g1), Ok(g2)) => prop_assert!((g1 - g2).abs() <= 1e-6 * (1.0 + g1.abs())),
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "mismatch {:?}", other),
            }
        }
    }
}
