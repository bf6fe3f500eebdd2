//! Typed place/transition nets, the token game, reachability and safety.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::multiset::Multiset;

/// An action name. Synchronisation in parallel composition is driven by
/// action identity, so actions are plain interned strings.
pub type Action = String;

/// A finite set of actions: the type of a net or the alphabet of a term.
pub type Alphabet = BTreeSet<Action>;

/// Index of a place within its owning [`Net`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PlaceId(pub u32);

/// Index of a transition within its owning [`Net`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TransId(pub u32);

/// A marking: a multiset of places, one count per token.
pub type Marking = Multiset<PlaceId>;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Place {
    pub name: String,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transition {
    pub name: String,
    pub label: Action,
    pub pre: Marking,
    pub post: Marking,
}

/// A typed Petri net `(S, T, F, M0, A, ℓ)` with arc weights.
///
/// The flow relation is stored as the preset and postset multisets of each
/// transition; an absent entry is weight 0. All supports are finite by
/// construction, which discharges the bounded-parallelism assumption for
/// every net this library can represent.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Net {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    initial: Marking,
    alphabet: Alphabet,
    place_index: BTreeMap<String, PlaceId>,
    trans_index: BTreeMap<String, TransId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("label `{label}` of transition `{trans}` is not in the net's alphabet")]
    LabelOutsideAlphabet { trans: String, label: Action },
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
}

impl Net {
    pub fn new(alphabet: Alphabet) -> Self {
        Net {
            places: Vec::new(),
            transitions: Vec::new(),
            initial: Multiset::new(),
            alphabet,
            place_index: BTreeMap::new(),
            trans_index: BTreeMap::new(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn places(&self) -> impl Iterator<Item = (PlaceId, &Place)> {
        self.places
            .iter()
            .enumerate()
            .map(|(i, p)| (PlaceId(i as u32), p))
    }

    pub fn transitions(&self) -> impl Iterator<Item = (TransId, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .map(|(i, t)| (TransId(i as u32), t))
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn place(&self, id: PlaceId) -> &Place {
        &self.places[id.0 as usize]
    }

    pub fn transition(&self, id: TransId) -> &Transition {
        &self.transitions[id.0 as usize]
    }

    pub fn place_by_name(&self, name: &str) -> Option<PlaceId> {
        self.place_index.get(name).copied()
    }

    pub fn transition_by_name(&self, name: &str) -> Option<TransId> {
        self.trans_index.get(name).copied()
    }

    /// Adds a place. Place and transition ids share one namespace.
    pub fn add_place(&mut self, name: impl Into<String>) -> Result<PlaceId, NetError> {
        let name = name.into();
        if self.place_index.contains_key(&name) || self.trans_index.contains_key(&name) {
            return Err(NetError::DuplicateId(name));
        }
        let id = PlaceId(self.places.len() as u32);
        self.place_index.insert(name.clone(), id);
        self.places.push(Place { name });
        Ok(id)
    }

    pub fn add_transition(
        &mut self,
        name: impl Into<String>,
        label: impl Into<Action>,
        pre: Marking,
        post: Marking,
    ) -> Result<TransId, NetError> {
        let name = name.into();
        let label = label.into();
        if self.trans_index.contains_key(&name) || self.place_index.contains_key(&name) {
            return Err(NetError::DuplicateId(name));
        }
        if !self.alphabet.contains(&label) {
            return Err(NetError::LabelOutsideAlphabet { trans: name, label });
        }
        for p in pre.support().chain(post.support()) {
            if p.0 as usize >= self.places.len() {
                return Err(NetError::UnknownPlace(format!("#{}", p.0)));
            }
        }
        let id = TransId(self.transitions.len() as u32);
        self.trans_index.insert(name.clone(), id);
        self.transitions.push(Transition { name, label, pre, post });
        Ok(id)
    }

    pub fn set_initial(&mut self, marking: Marking) -> Result<(), NetError> {
        for p in marking.support() {
            if p.0 as usize >= self.places.len() {
                return Err(NetError::UnknownPlace(format!("#{}", p.0)));
            }
        }
        self.initial = marking;
        Ok(())
    }

    pub fn mark(&mut self, place: PlaceId, count: u64) {
        self.initial.insert(place, count);
    }

    /// Replaces the pre- and postset of an existing transition. Used by
    /// constructions that create a node before all of its arc targets exist.
    pub(crate) fn replace_transition_arcs(&mut self, t: TransId, pre: Marking, post: Marking) {
        let tr = &mut self.transitions[t.0 as usize];
        tr.pre = pre;
        tr.post = post;
    }

    /// Whether `t` is enabled at `m`, i.e. `preset(t) <= m`.
    pub fn enabled(&self, m: &Marking, t: TransId) -> Result<bool, NetError> {
        let tr = self
            .transitions
            .get(t.0 as usize)
            .ok_or_else(|| NetError::UnknownTransition(format!("#{}", t.0)))?;
        Ok(tr.pre.leq(m))
    }

    /// Fires `t` at `m`, yielding `m - preset(t) + postset(t)`.
    pub fn fire(&self, m: &Marking, t: TransId) -> Result<Marking, NetError> {
        let tr = self
            .transitions
            .get(t.0 as usize)
            .ok_or_else(|| NetError::UnknownTransition(format!("#{}", t.0)))?;
        let after = m
            .checked_sub(&tr.pre)
            .map_err(|_| NetError::NotEnabled(tr.name.clone()))?;
        Ok(after.sum(&tr.post))
    }

    /// Transitions enabled at `m`, in id order.
    pub fn enabled_at(&self, m: &Marking) -> Vec<TransId> {
        self.transitions()
            .filter(|(_, tr)| tr.pre.leq(m))
            .map(|(id, _)| id)
            .collect()
    }

    /// Whether the flow relation is acyclic (ignoring weights).
    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm over the bipartite place/transition graph.
        let np = self.places.len();
        let nt = self.transitions.len();
        let n = np + nt;
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for (tid, tr) in self.transitions() {
            let t = np + tid.0 as usize;
            for s in tr.pre.support() {
                out[s.0 as usize].push(t);
                indeg[t] += 1;
            }
            for s in tr.post.support() {
                out[t].push(s.0 as usize);
                indeg[s.0 as usize] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &w in &out[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        seen == n
    }
}

/// The interleaving case graph: the reachable markings of a net together
/// with the firing relation between them.
#[derive(Clone, Debug)]
pub struct CaseGraph {
    pub nodes: Vec<Marking>,
    pub edges: Vec<(usize, TransId, usize)>,
    pub initial: usize,
    /// True when the exploration bound was hit before closure.
    pub truncated: bool,
}

impl CaseGraph {
    pub fn node_index(&self, m: &Marking) -> Option<usize> {
        self.nodes.iter().position(|n| n == m)
    }

    pub fn node_set(&self) -> BTreeSet<Marking> {
        self.nodes.iter().cloned().collect()
    }
}

/// Breadth-first closure of the firing relation from the initial marking.
///
/// Markings are discovered layer by layer; within a layer new markings are
/// admitted in lexicographic order, so a truncated exploration is
/// deterministic. Edges are kept only between retained nodes.
pub fn case_graph(net: &Net, max_markings: usize) -> CaseGraph {
    assert!(max_markings >= 1, "max_markings must be at least 1");
    let mut index: BTreeMap<Marking, usize> = BTreeMap::new();
    let mut nodes: Vec<Marking> = Vec::new();
    let mut truncated = false;

    index.insert(net.initial_marking().clone(), 0);
    nodes.push(net.initial_marking().clone());

    let mut layer: Vec<usize> = vec![0];
    while !layer.is_empty() {
        let mut discovered: BTreeSet<Marking> = BTreeSet::new();
        for &i in &layer {
            let m = nodes[i].clone();
            for t in net.enabled_at(&m) {
                let m2 = net.fire(&m, t).expect("enabled transition fires");
                if !index.contains_key(&m2) {
                    discovered.insert(m2);
                }
            }
        }
        let mut next_layer = Vec::new();
        for m2 in discovered {
            if nodes.len() >= max_markings {
                truncated = true;
                break;
            }
            let ix = nodes.len();
            index.insert(m2.clone(), ix);
            nodes.push(m2);
            next_layer.push(ix);
        }
        layer = next_layer;
    }

    let mut edges = Vec::new();
    for (i, m) in nodes.iter().enumerate() {
        for t in net.enabled_at(m) {
            let m2 = net.fire(m, t).expect("enabled transition fires");
            match index.get(&m2) {
                Some(&j) => edges.push((i, t, j)),
                None => truncated = true,
            }
        }
    }

    CaseGraph { nodes, edges, initial: 0, truncated }
}

/// Outcome of a bounded safety check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Safety {
    Safe,
    Unsafe(Marking),
    Unknown,
}

/// Checks whether all explored reachable markings are plain sets.
pub fn is_safe(net: &Net, max_markings: usize) -> Safety {
    let cg = case_graph(net, max_markings);
    for m in &cg.nodes {
        if !m.is_set() {
            return Safety::Unsafe(m.clone());
        }
    }
    if cg.truncated {
        Safety::Unknown
    } else {
        Safety::Safe
    }
}

impl fmt::Display for Net {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "net with {} places, {} transitions, {} initial tokens",
            self.places.len(),
            self.transitions.len(),
            self.initial.total()
        )
    }
}

/// Renders a marking with place names, e.g. `{s, u:2}`.
pub fn format_marking(net: &Net, m: &Marking) -> String {
    let mut parts = Vec::new();
    for (p, n) in m.iter() {
        if n == 1 {
            parts.push(net.place(*p).name.clone());
        } else {
            parts.push(format!("{}:{}", net.place(*p).name, n));
        }
    }
    format!("{{{}}}", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_net() -> (Net, PlaceId, PlaceId, TransId) {
        let mut net = Net::new(["a".to_string()].into_iter().collect());
        let s = net.add_place("s").unwrap();
        let u = net.add_place("u").unwrap();
        let t = net
            .add_transition("t", "a", Multiset::singleton(s), Multiset::singleton(u))
            .unwrap();
        net.mark(s, 1);
        (net, s, u, t)
    }

    #[test]
    fn enabled_examples() {
        let (net, s, _, t) = simple_net();
        assert!(net.enabled(&Multiset::singleton(s), t).unwrap());
        assert!(!net.enabled(&Multiset::new(), t).unwrap());

        // Arc weight 2: preset {s:2} not covered by one token.
        let mut net2 = Net::new(["a".to_string()].into_iter().collect());
        let s2 = net2.add_place("s").unwrap();
        let t2 = net2
            .add_transition("t", "a", [(s2, 2)].into_iter().collect(), Multiset::new())
            .unwrap();
        assert!(!net2.enabled(&Multiset::singleton(s2), t2).unwrap());
        assert!(net2
            .enabled(&[(s2, 2)].into_iter().collect(), t2)
            .unwrap());
    }

    #[test]
    fn fire_examples() {
        let (net, s, u, t) = simple_net();
        assert_eq!(net.fire(&Multiset::singleton(s), t).unwrap(), Multiset::singleton(u));

        // Self loop preserves the marking.
        let mut net2 = Net::new(["a".to_string()].into_iter().collect());
        let s2 = net2.add_place("s").unwrap();
        let t2 = net2
            .add_transition("t", "a", Multiset::singleton(s2), Multiset::singleton(s2))
            .unwrap();
        assert_eq!(net2.fire(&Multiset::singleton(s2), t2).unwrap(), Multiset::singleton(s2));

        // F(s,t)=1, F(t,u)=2, m={s:1,v:1} -> {u:2,v:1}; expected value from
        // evaluating m - preset + postset by hand.
        let mut net3 = Net::new(["a".to_string()].into_iter().collect());
        let s3 = net3.add_place("s").unwrap();
        let u3 = net3.add_place("u").unwrap();
        let v3 = net3.add_place("v").unwrap();
        let t3 = net3
            .add_transition("t", "a", Multiset::singleton(s3), [(u3, 2)].into_iter().collect())
            .unwrap();
        let m: Marking = [(s3, 1), (v3, 1)].into_iter().collect();
        let expected: Marking = [(u3, 2), (v3, 1)].into_iter().collect();
        assert_eq!(net3.fire(&m, t3).unwrap(), expected);

        assert_eq!(
            net3.fire(&Multiset::new(), t3),
            Err(NetError::NotEnabled("t".to_string()))
        );
    }

    #[test]
    fn case_graph_token_move() {
        let (net, _, _, _) = simple_net();
        let cg = case_graph(&net, 100);
        assert_eq!(cg.nodes.len(), 2);
        assert_eq!(cg.edges.len(), 1);
        assert!(!cg.truncated);
    }

    #[test]
    fn case_graph_no_transitions() {
        let mut net = Net::new(Alphabet::new());
        let s = net.add_place("s").unwrap();
        net.mark(s, 1);
        let cg = case_graph(&net, 10);
        assert_eq!(cg.nodes.len(), 1);
        assert_eq!(cg.edges.len(), 0);
    }

    #[test]
    fn case_graph_is_closed_when_untruncated() {
        let (net, _, _, _) = simple_net();
        let cg = case_graph(&net, 100);
        assert!(!cg.truncated);
        for (i, m) in cg.nodes.iter().enumerate() {
            for t in net.enabled_at(m) {
                let m2 = net.fire(m, t).unwrap();
                let j = cg.node_index(&m2).unwrap();
                assert!(cg.edges.contains(&(i, t, j)));
            }
        }
    }

    #[test]
    fn safety_examples() {
        let (net, _, _, _) = simple_net();
        assert_eq!(is_safe(&net, 100), Safety::Safe);

        let mut unsafe_net = Net::new(Alphabet::new());
        let s = unsafe_net.add_place("s").unwrap();
        unsafe_net.mark(s, 2);
        assert_eq!(
            is_safe(&unsafe_net, 100),
            Safety::Unsafe([(s, 2)].into_iter().collect())
        );
    }

    #[test]
    fn truncation_yields_unknown() {
        // An unbounded counter: t puts two tokens back for every one consumed.
        let mut net = Net::new(["a".to_string()].into_iter().collect());
        let s = net.add_place("s").unwrap();
        net.add_transition("t", "a", Multiset::singleton(s), [(s, 2)].into_iter().collect())
            .unwrap();
        net.mark(s, 1);
        let cg = case_graph(&net, 1);
        assert!(cg.truncated);
        assert_eq!(is_safe(&net, 1), Safety::Unknown);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut net = Net::new(["a".to_string()].into_iter().collect());
        net.add_place("x").unwrap();
        assert!(matches!(net.add_place("x"), Err(NetError::DuplicateId(_))));
        assert!(matches!(
            net.add_transition("x", "a", Multiset::new(), Multiset::new()),
            Err(NetError::DuplicateId(_))
        ));
        assert!(matches!(
            net.add_transition("t", "b", Multiset::new(), Multiset::new()),
            Err(NetError::LabelOutsideAlphabet { .. })
        ));
    }

    #[test]
    fn acyclicity() {
        let (net, _, _, _) = simple_net();
        assert!(net.is_acyclic());

        let mut cyclic = Net::new(["a".to_string()].into_iter().collect());
        let s = cyclic.add_place("s").unwrap();
        cyclic
            .add_transition("t", "a", Multiset::singleton(s), Multiset::singleton(s))
            .unwrap();
        assert!(!cyclic.is_acyclic());
    }
}
