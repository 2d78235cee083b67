//! Named inequalities and the Pearl and CGLMP families.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{build_graph, ExclusivityGraph};
use crate::scenario::{parse_scenario, CausalScenario, Distribution, Event};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Short family tag: `pearl`, `bonet`, `c7`, `chsh`, `cglmp` or `mined`.
    pub tag: String,
    pub citation: String,
}

/// A quoted reference value for the quantum maximum. Never computed here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ceiling {
    pub value: f64,
    pub source: String,
}

/// `Σ w_e p(e) ≤ classical_bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearInequality {
    scenario: CausalScenario,
    terms: Vec<(Event, f64)>,
    classical_bound: f64,
    provenance: Provenance,
    ceiling: Option<Ceiling>,
}

impl LinearInequality {
    pub fn new(
        scenario: CausalScenario,
        terms: Vec<(Event, f64)>,
        classical_bound: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInequality("empty support".into()));
        }
        let mut seen = BTreeSet::new();
        for (e, w) in &terms {
            scenario.check_event(e)?;
            if !w.is_finite() {
                return Err(Error::InvalidInequality(format!("weight {w} on {e}")));
            }
            if !seen.insert(e) {
                return Err(Error::InvalidInequality(format!("event {e} appears twice")));
            }
        }
        if !classical_bound.is_finite() {
            return Err(Error::InvalidInequality("non-finite bound".into()));
        }
        Ok(Self {
            scenario,
            terms,
            classical_bound,
            provenance,
            ceiling: None,
        })
    }

    pub fn with_ceiling(mut self, value: f64, source: &str) -> Self {
        self.ceiling = Some(Ceiling {
            value,
            source: source.to_string(),
        });
        self
    }

    pub fn scenario(&self) -> &CausalScenario {
        &self.scenario
    }

    pub fn terms(&self) -> &[(Event, f64)] {
        &self.terms
    }

    pub fn events(&self) -> Vec<Event> {
        self.terms.iter().map(|(e, _)| e.clone()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|(_, w)| *w).collect()
    }

    pub fn classical_bound(&self) -> f64 {
        self.classical_bound
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn ceiling(&self) -> Option<&Ceiling> {
        self.ceiling.as_ref()
    }

    /// `Σ w p`.
    pub fn evaluate(&self, p: &Distribution) -> Result<f64> {
        self.terms.iter().try_fold(0.0, |acc, (e, w)| {
            p.get(e)
                .map(|pe| acc + w * pe)
                .ok_or_else(|| Error::MissingProbability(e.to_string()))
        })
    }

    /// Induced subgraph of the scenario's exclusivity graph on the support,
    /// weighted by the coefficients.
    pub fn support_graph(&self) -> Result<ExclusivityGraph> {
        build_graph(&self.scenario, Some(&self.events()))?.with_weights(self.weights())
    }

    /// The same inequality read in a scenario of the same shape with larger
    /// cardinalities. Exclusivity between the support events, and hence the
    /// classical bound, does not change.
    pub fn embed(&self, target: &CausalScenario) -> Result<Self> {
        let same_shape = target.observed().len() == self.scenario.observed().len()
            && target.instruments().len() == self.scenario.instruments().len()
            && target
                .observed()
                .iter()
                .zip(self.scenario.observed())
                .all(|(a, b)| a.name == b.name && a.parents == b.parents);
        if !same_shape {
            return Err(Error::EventMismatch(format!(
                "cannot embed an inequality on {} into {}",
                self.scenario.label(),
                target.label()
            )));
        }
        let mut out = Self::new(
            target.clone(),
            self.terms.clone(),
            self.classical_bound,
            self.provenance.clone(),
        )?;
        out.ceiling = self.ceiling.clone();
        Ok(out)
    }

    pub fn to_json(&self) -> InequalityJson {
        let scenario = match self.scenario.shorthand() {
            Some(s) => serde_json::Value::String(s),
            None => serde_json::from_str(&self.scenario.to_json()).expect("valid JSON"),
        };
        InequalityJson {
            scenario,
            terms: self
                .terms
                .iter()
                .map(|(e, w)| TermJson {
                    event: e.to_string(),
                    weight: *w,
                })
                .collect(),
            classical_bound: self.classical_bound,
            provenance: self.provenance.clone(),
            ceiling: self.ceiling.clone(),
        }
    }

    pub fn from_json(json: &InequalityJson) -> Result<Self> {
        let scenario = match &json.scenario {
            serde_json::Value::String(s) => parse_scenario(s)?,
            other => parse_scenario(&other.to_string())?,
        };
        let terms = json
            .terms
            .iter()
            .map(|t| Ok((scenario.parse_event(&t.event)?, t.weight)))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Self::new(
            scenario,
            terms,
            json.classical_bound,
            json.provenance.clone(),
        )?;
        out.ceiling = json.ceiling.clone();
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let json: InequalityJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&json)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub event: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityJson {
    pub scenario: serde_json::Value,
    pub terms: Vec<TermJson>,
    pub classical_bound: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<Ceiling>,
}

fn provenance(tag: &str, citation: &str) -> Provenance {
    Provenance {
        tag: tag.into(),
        citation: citation.into(),
    }
}

fn inst(a: usize, b: usize, x: usize) -> (Event, f64) {
    (Event::new(vec![a, b], vec![x]), 1.0)
}

fn bell(a: usize, b: usize, x: usize, y: usize) -> (Event, f64) {
    (Event::new(vec![a, b], vec![x, y]), 1.0)
}

/// Pearl's instrumental inequalities `Σ_j P(i j | k(j)) ≤ 1`.
///
/// One member per outcome `i` of A and per map `k` from B's outcomes to
/// settings, so `m·l^n` in total, ordered by `i` and then by `k` read as a
/// base-`l` number with `k(0)` most significant.
pub fn pearl_family(l: usize, m: usize, n: usize) -> Result<Vec<LinearInequality>> {
    let s = CausalScenario::instrumental(l, m, n)?;
    let count = (l as u128).checked_pow(n as u32).map(|c| c * m as u128);
    if count.is_none_or(|c| c > 1_000_000) {
        return Err(Error::TooLarge(format!("pearl family for ({l},{m},{n})")));
    }
    let mut out = Vec::new();
    for i in 0..m {
        let mut k = vec![0usize; n];
        loop {
            let terms = (0..n).map(|j| inst(i, j, k[j])).collect();
            let citation = format!(
                "outcome {i} of A, settings map {:?}; j runs over the {n} outcomes of B, 0-based",
                k
            );
            out.push(LinearInequality::new(
                s.clone(),
                terms,
                1.0,
                provenance("pearl", &citation),
            )?);
            let mut pos = n;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                k[pos] += 1;
                if k[pos] < l {
                    break;
                }
                k[pos] = 0;
            }
            if k.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
    Ok(out)
}

/// Names accepted by [`catalog_get`] besides the parameterized
/// `cglmp:d,k` and `cglmp_full:d`.
pub fn catalog_names() -> &'static [&'static str] {
    &["bonet", "c7_433", "inst_chsh_422", "chsh_bell"]
}

pub fn catalog_get(name: &str) -> Result<LinearInequality> {
    let name = name.trim();
    match name {
        "bonet" => Ok(LinearInequality::new(
            CausalScenario::instrumental(3, 2, 2)?,
            vec![inst(0, 0, 0), inst(1, 1, 0), inst(0, 0, 1), inst(1, 0, 1), inst(0, 1, 2)],
            2.0,
            provenance("bonet", "Bonet's inequality on instrumental:3,2,2, 0-based labels"),
        )?
        .with_ceiling((3.0 + 2f64.sqrt()) / 2.0, "quoted quantum maximum (3+√2)/2")),
        "c7_433" => Ok(LinearInequality::new(
            CausalScenario::instrumental(4, 3, 3)?,
            vec![
                inst(0, 0, 2),
                inst(0, 2, 3),
                inst(0, 0, 0),
                inst(1, 2, 0),
                inst(1, 0, 1),
                inst(2, 1, 1),
                inst(2, 2, 2),
            ],
            3.0,
            provenance("c7", "heptagon inequality on instrumental:4,3,3, 0-based labels"),
        )?
        .with_ceiling(3.2990, "quoted second-level NPA bound")),
        "inst_chsh_422" => LinearInequality::new(
            CausalScenario::instrumental(4, 2, 2)?,
            vec![
                inst(0, 1, 2),
                inst(1, 1, 2),
                inst(1, 0, 3),
                inst(0, 1, 3),
                inst(0, 0, 0),
                inst(1, 0, 0),
                inst(1, 1, 1),
                inst(0, 0, 1),
            ],
            3.0,
            provenance("chsh", "CHSH-like instrumental inequality on instrumental:4,2,2"),
        ),
        "chsh_bell" => LinearInequality::new(
            CausalScenario::bell(2, 2, 2, 2)?,
            vec![
                bell(0, 0, 0, 0),
                bell(1, 1, 0, 0),
                bell(0, 0, 0, 1),
                bell(1, 1, 0, 1),
                bell(0, 1, 1, 0),
                bell(1, 0, 1, 0),
                bell(0, 0, 1, 1),
                bell(1, 1, 1, 1),
            ],
            3.0,
            provenance("chsh", "CHSH in probability form on bell:2,2,2"),
        ),
        _ => parse_parameterized(name),
    }
}

fn parse_parameterized(name: &str) -> Result<LinearInequality> {
    let unknown = || Error::UnknownInequality(name.to_string());
    let (kind, args) = name.split_once(':').ok_or_else(unknown)?;
    let nums: Vec<usize> = args
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| unknown()))
        .collect::<Result<_>>()?;
    match (kind, nums.as_slice()) {
        ("cglmp", &[d, k]) => cglmp_s(d, k),
        ("cglmp_full", &[d]) => cglmp_full(d),
        _ => Err(unknown()),
    }
}

fn cglmp_terms(d: usize, k: usize, weight: f64) -> Vec<(Event, f64)> {
    let mut terms = Vec::with_capacity(4 * d);
    for b in 0..d {
        terms.push((Event::new(vec![(b + k) % d, b], vec![0, 0]), weight));
    }
    for b in 0..d {
        terms.push((Event::new(vec![(b + k) % d, b], vec![1, 1]), weight));
    }
    for a in 0..d {
        terms.push((Event::new(vec![a, (a + k + 1) % d], vec![1, 0]), weight));
    }
    for a in 0..d {
        terms.push((Event::new(vec![a, (a + k) % d], vec![0, 1]), weight));
    }
    terms
}

fn check_d(d: usize) -> Result<()> {
    if !(2..=64).contains(&d) {
        return Err(Error::OutOfRange(format!("d = {d} must lie in 2..=64")));
    }
    Ok(())
}

/// The block `S^d_k` of the CGLMP expression.
pub fn cglmp_s(d: usize, k: usize) -> Result<LinearInequality> {
    check_d(d)?;
    if k >= d {
        return Err(Error::OutOfRange(format!("k = {k} must be below d = {d}")));
    }
    LinearInequality::new(
        CausalScenario::bell(2, 2, d, d)?,
        cglmp_terms(d, k, 1.0),
        cglmp_alpha(d, k)? as f64,
        provenance("cglmp", &format!("S^{d}_{k} block, outcomes mod {d}")),
    )
}

/// `Σ_k (d−1−k) S^d_k ≤ 3(d−1)`.
pub fn cglmp_full(d: usize) -> Result<LinearInequality> {
    check_d(d)?;
    let terms = (0..d)
        .flat_map(|k| cglmp_terms(d, k, (d - 1 - k) as f64))
        .collect();
    LinearInequality::new(
        CausalScenario::bell(2, 2, d, d)?,
        terms,
        3.0 * (d - 1) as f64,
        provenance("cglmp", &format!("full CGLMP expression for d = {d}")),
    )
}

/// Independence number of the `S^d_k` support graph: 4 when `d` divides
/// `4k + 1`, 3 otherwise.
pub fn cglmp_alpha(d: usize, k: usize) -> Result<u32> {
    check_d(d)?;
    if k >= d {
        return Err(Error::OutOfRange(format!("k = {k} must be below d = {d}")));
    }
    Ok(if (4 * k + 1) % d == 0 { 4 } else { 3 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonet_terms() {
        let b = catalog_get("bonet").unwrap();
        let text: Vec<String> = b.terms().iter().map(|(e, _)| e.to_string()).collect();
        assert_eq!(text, ["00|0", "11|0", "00|1", "10|1", "01|2"]);
        assert_eq!(b.classical_bound(), 2.0);
        assert!((b.ceiling().unwrap().value - 2.2071).abs() < 1e-4);
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(catalog_get("nope"), Err(Error::UnknownInequality(_))));
        assert!(matches!(catalog_get("cglmp:3"), Err(Error::UnknownInequality(_))));
        assert!(matches!(catalog_get("cglmp:3,3"), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn pearl_counts() {
        assert_eq!(pearl_family(2, 2, 2).unwrap().len(), 8);
        assert_eq!(pearl_family(3, 2, 2).unwrap().len(), 18);
        assert_eq!(pearl_family(2, 3, 4).unwrap().len(), 48);
        let cross: Vec<_> = pearl_family(2, 2, 2)
            .unwrap()
            .into_iter()
            .filter(|q| q.terms()[0].0.settings != q.terms()[1].0.settings)
            .collect();
        assert_eq!(cross.len(), 4);
        for q in &cross {
            let (e0, e1) = (&q.terms()[0].0, &q.terms()[1].0);
            assert_eq!(e0.outcomes[0], e1.outcomes[0]);
            assert_eq!((e0.outcomes[1], e1.outcomes[1]), (0, 1));
        }
    }

    #[test]
    fn pearl_on_uniform() {
        let s = CausalScenario::instrumental(2, 2, 2).unwrap();
        let p = Distribution::uniform(&s);
        for q in pearl_family(2, 2, 2).unwrap() {
            assert_eq!(q.evaluate(&p).unwrap(), 0.5);
        }
    }

    #[test]
    fn evaluate_cases() {
        let s = CausalScenario::bell(2, 2, 2, 2).unwrap();
        let chsh = catalog_get("chsh_bell").unwrap();
        assert_eq!(chsh.evaluate(&Distribution::uniform(&s)).unwrap(), 2.0);
        assert!(matches!(
            chsh.evaluate(&Distribution::new()),
            Err(Error::MissingProbability(_))
        ));
        let bonet = catalog_get("bonet").unwrap();
        let s = bonet.scenario().clone();
        let p = Distribution::from_fn(&s, |e| if e.outcomes == [0, 0] { 1.0 } else { 0.0 });
        assert_eq!(bonet.evaluate(&p).unwrap(), 2.0);
    }

    #[test]
    fn cglmp_shapes() {
        assert_eq!(cglmp_s(3, 0).unwrap().classical_bound(), 3.0);
        assert_eq!(cglmp_s(5, 1).unwrap().classical_bound(), 4.0);
        assert_eq!(cglmp_s(4, 1).unwrap().classical_bound(), 3.0);
        assert_eq!(cglmp_alpha(13, 3).unwrap(), 4);
        assert_eq!(cglmp_s(4, 2).unwrap().terms().len(), 16);
        assert_eq!(cglmp_full(2).unwrap().classical_bound(), 3.0);
        let full = cglmp_full(3).unwrap();
        assert_eq!(full.classical_bound(), 6.0);
        let w: Vec<f64> = full.weights().chunks(12).map(|c| c[0]).collect();
        assert_eq!(w, [2.0, 1.0, 0.0]);
    }

    #[test]
    fn duplicate_event_rejected() {
        let s = CausalScenario::instrumental(2, 2, 2).unwrap();
        let r = LinearInequality::new(
            s,
            vec![inst(0, 0, 0), inst(0, 0, 0)],
            1.0,
            provenance("mined", ""),
        );
        assert!(matches!(r, Err(Error::InvalidInequality(_))));
    }

    #[test]
    fn json_roundtrip() {
        let mut all: Vec<_> = catalog_names().iter().map(|n| catalog_get(n).unwrap()).collect();
        all.push(cglmp_full(3).unwrap());
        all.extend(pearl_family(2, 2, 2).unwrap());
        for q in all {
            let text = serde_json::to_string(&q.to_json()).unwrap();
            assert_eq!(LinearInequality::parse(&text).unwrap(), q);
        }
    }

    #[test]
    fn embedding() {
        let b = catalog_get("bonet").unwrap();
        let big = CausalScenario::instrumental(4, 3, 3).unwrap();
        let e = b.embed(&big).unwrap();
        assert_eq!(e.scenario(), &big);
        assert!(b.embed(&CausalScenario::instrumental(2, 2, 2).unwrap()).is_err());
        assert!(b.embed(&CausalScenario::bell(3, 3, 2, 2).unwrap()).is_err());
    }
}
