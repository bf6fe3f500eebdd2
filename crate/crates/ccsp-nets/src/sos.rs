//! Structural operational interleaving semantics: one-step derivation for
//! closed terms, bounded LTS construction, and strong bisimilarity of
//! labelled transition systems by partition refinement.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use thiserror::Error;

use crate::ccsp::{alphabet, check_process_term, unfold, Term, TermError};
use crate::net::{Action, Net};
use crate::net::{CaseGraph, Marking};

/// A labelled transition system with an initial state.
#[derive(Clone, Debug)]
pub struct Lts<S> {
    pub states: Vec<S>,
    pub edges: BTreeSet<(usize, Action, usize)>,
    pub initial: usize,
    pub truncated: bool,
}

impl<S> Lts<S> {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// The transitions of a closed term derivable in one step.
///
/// Guardedness makes the recursion rule terminate: unfolding substitutes
/// recursive calls under action prefixes only.
pub fn term_steps(p: &Term) -> Result<BTreeSet<(Action, Term)>, TermError> {
    check_process_term(p)?;
    Ok(steps(p))
}

fn steps(p: &Term) -> BTreeSet<(Action, Term)> {
    match p {
        Term::Inaction(_) | Term::Var(_) => BTreeSet::new(),
        Term::Prefix(a, q) => [(a.clone(), (**q).clone())].into_iter().collect(),
        Term::Choice(l, r) => {
            let mut out = steps(l);
            out.extend(steps(r));
            out
        }
        Term::Parallel(l, r) => {
            let sync: BTreeSet<Action> = alphabet(l).intersection(&alphabet(r)).cloned().collect();
            let ls = steps(l);
            let rs = steps(r);
            let mut out = BTreeSet::new();
            for (a, l2) in &ls {
                if !sync.contains(a) {
                    out.insert((a.clone(), Term::Parallel(Rc::new(l2.clone()), r.clone())));
                }
            }
            for (a, r2) in &rs {
                if !sync.contains(a) {
                    out.insert((a.clone(), Term::Parallel(l.clone(), Rc::new(r2.clone()))));
                }
            }
            for (a, l2) in &ls {
                if sync.contains(a) {
                    for (b, r2) in &rs {
                        if b == a {
                            out.insert((
                                a.clone(),
                                Term::parallel(l2.clone(), r2.clone()),
                            ));
                        }
                    }
                }
            }
            out
        }
        Term::Rename(ren, q) => {
            let mut out = BTreeSet::new();
            for (a, q2) in steps(q) {
                for b in ren.targets(&a) {
                    out.insert((b.clone(), Term::Rename(ren.clone(), Rc::new(q2.clone()))));
                }
            }
            out
        }
        Term::Rec(v, spec) => {
            let unfolded = unfold(v, spec).expect("closed term unfolds");
            steps(&unfolded)
        }
    }
}

/// Breadth-first closure of [`term_steps`] from `p`, with the same
/// deterministic truncation discipline as the case graph.
pub fn build_lts(p: &Term, max_states: usize) -> Result<Lts<Term>, TermError> {
    check_process_term(p)?;
    assert!(max_states >= 1);
    let mut index: BTreeMap<Term, usize> = BTreeMap::new();
    let mut states = vec![p.clone()];
    index.insert(p.clone(), 0);
    let mut truncated = false;

    let mut layer = vec![0usize];
    while !layer.is_empty() {
        let mut discovered: BTreeSet<Term> = BTreeSet::new();
        for &i in &layer {
            for (_, q) in steps(&states[i].clone()) {
                if !index.contains_key(&q) {
                    discovered.insert(q);
                }
            }
        }
        let mut next = Vec::new();
        for q in discovered {
            if states.len() >= max_states {
                truncated = true;
                break;
            }
            index.insert(q.clone(), states.len());
            next.push(states.len());
            states.push(q);
        }
        layer = next;
    }

    let mut edges = BTreeSet::new();
    for (i, s) in states.iter().enumerate() {
        for (a, q) in steps(s) {
            match index.get(&q) {
                Some(&j) => {
                    edges.insert((i, a, j));
                }
                None => truncated = true,
            }
        }
    }
    Ok(Lts { states, edges, initial: 0, truncated })
}

impl CaseGraph {
    /// Views the case graph as an LTS over markings, labelling each edge
    /// with the fired transition's action.
    pub fn to_lts(&self, net: &Net) -> Lts<Marking> {
        let edges = self
            .edges
            .iter()
            .map(|&(i, t, j)| (i, net.transition(t).label.clone(), j))
            .collect();
        Lts { states: self.nodes.clone(), edges, initial: self.initial, truncated: self.truncated }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bisimilarity on a truncated LTS would be unsound")]
pub struct TruncatedLts;

/// Strong bisimilarity of the initial states of two finite LTSs, by
/// partition refinement on the disjoint union.
pub fn ib_check<S, T>(l1: &Lts<S>, l2: &Lts<T>) -> Result<bool, TruncatedLts> {
    if l1.truncated || l2.truncated {
        return Err(TruncatedLts);
    }
    let n1 = l1.states.len();
    let n = n1 + l2.states.len();
    let mut succ: Vec<BTreeSet<(Action, usize)>> = vec![BTreeSet::new(); n];
    for &(i, ref a, j) in &l1.edges {
        succ[i].insert((a.clone(), j));
    }
    for &(i, ref a, j) in &l2.edges {
        succ[n1 + i].insert((a.clone(), n1 + j));
    }

    // Iterated refinement: states are in the same block iff they carry the
    // same multiset of (action, target block) signatures.
    let mut block = vec![0usize; n];
    loop {
        let mut sig_index: BTreeMap<(usize, BTreeSet<(Action, usize)>), usize> = BTreeMap::new();
        let mut next = vec![0usize; n];
        for v in 0..n {
            let sig: BTreeSet<(Action, usize)> =
                succ[v].iter().map(|(a, w)| (a.clone(), block[*w])).collect();
            let key = (block[v], sig);
            let fresh = sig_index.len();
            let b = *sig_index.entry(key).or_insert(fresh);
            next[v] = b;
        }
        if next == block {
            break;
        }
        block = next;
    }
    Ok(block[l1.initial] == block[n1 + l2.initial])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccsp::parse_term;

    fn parsed(src: &str) -> Term {
        parse_term(src).unwrap()
    }

    #[test]
    fn prefix_axiom() {
        let t = parsed("a.0{a}");
        let steps = term_steps(&t).unwrap();
        assert_eq!(steps.len(), 1);
        let (a, q) = steps.into_iter().next().unwrap();
        assert_eq!(a, "a");
        assert_eq!(q, parsed("0{a}"));
    }

    #[test]
    fn recursion_rule() {
        let t = parsed("rec X{a} { X = a.X }");
        let steps = term_steps(&t).unwrap();
        assert_eq!(steps.len(), 1);
        let (a, q) = steps.into_iter().next().unwrap();
        assert_eq!(a, "a");
        assert_eq!(q, t);
    }

    #[test]
    fn synchronisation() {
        // Renamed customer and clerk must synchronise on the joint action.
        let t = parsed(
            "R{enter->enter, buy->serves, leave->leave}(buy.0{enter,buy,leave}) \
             || R{serve->serves}(serve.0{serve})",
        );
        let steps = term_steps(&t).unwrap();
        assert_eq!(steps.len(), 1);
        let (a, _) = steps.iter().next().unwrap();
        assert_eq!(a, "serves");
    }

    #[test]
    fn no_steps_for_inaction() {
        let lts = build_lts(&parsed("0{a}"), 10).unwrap();
        assert_eq!(lts.state_count(), 1);
        assert_eq!(lts.edge_count(), 0);
        assert!(!lts.truncated);
    }

    #[test]
    fn interleaving_diamond() {
        let lts = build_lts(&parsed("a.0{a} || b.0{b}"), 100).unwrap();
        assert_eq!(lts.state_count(), 4);
        assert_eq!(lts.edge_count(), 4);
    }

    #[test]
    fn truncation_is_flagged() {
        let lts = build_lts(&parsed("a.b.0{a,b}"), 2).unwrap();
        assert!(lts.truncated);
        assert_eq!(lts.state_count(), 2);
    }

    /// Naive greatest-fixpoint bisimilarity over state pairs, used as an
    /// independent oracle for `ib_check`.
    fn naive_bisim<S, T>(l1: &Lts<S>, l2: &Lts<T>) -> bool {
        let mut rel: BTreeSet<(usize, usize)> = (0..l1.states.len())
            .flat_map(|i| (0..l2.states.len()).map(move |j| (i, j)))
            .collect();
        let succ1 = |i: usize| -> Vec<(Action, usize)> {
            l1.edges
                .iter()
                .filter(|(s, _, _)| *s == i)
                .map(|(_, a, t)| (a.clone(), *t))
                .collect()
        };
        let succ2 = |j: usize| -> Vec<(Action, usize)> {
            l2.edges
                .iter()
                .filter(|(s, _, _)| *s == j)
                .map(|(_, a, t)| (a.clone(), *t))
                .collect()
        };
        loop {
            let keep: BTreeSet<(usize, usize)> = rel
                .iter()
                .filter(|&&(i, j)| {
                    succ1(i).into_iter().all(|(a, i2)| {
                        succ2(j).into_iter().any(|(b, j2)| a == b && rel.contains(&(i2, j2)))
                    }) && succ2(j).into_iter().all(|(b, j2)| {
                        succ1(i).into_iter().any(|(a, i2)| a == b && rel.contains(&(i2, j2)))
                    })
                })
                .copied()
                .collect();
            if keep == rel {
                break;
            }
            rel = keep;
        }
        rel.contains(&(l1.initial, l2.initial))
    }

    #[test]
    fn ib_check_examples() {
        let l = build_lts(&parsed("a.b.0{a,b}"), 100).unwrap();
        assert!(ib_check(&l, &l).unwrap());

        // a.0 + a.0 is interleaving bisimilar to a.0.
        let double = build_lts(&parsed("a.0{a} + a.0{a}"), 100).unwrap();
        let single = build_lts(&parsed("a.0{a}"), 100).unwrap();
        assert!(ib_check(&double, &single).unwrap());
        assert!(naive_bisim(&double, &single));

        let b = build_lts(&parsed("b.0{b}"), 100).unwrap();
        assert!(!ib_check(&single, &b).unwrap());
        assert!(!naive_bisim(&single, &b));
    }

    #[test]
    fn ib_check_agrees_with_naive_oracle() {
        let sources = [
            "a.0{a}",
            "a.0{a} + a.0{a}",
            "a.b.0{a,b}",
            "a.0{a,b} + b.0{a,b}",
            "a.0{a} || b.0{b}",
            "a.b.0{a,b} + b.a.0{a,b}",
            "rec X{a} { X = a.X }",
            "rec X{a,b} { X = a.X + b.X }",
        ];
        let ltss: Vec<Lts<Term>> =
            sources.iter().map(|s| build_lts(&parsed(s), 1000).unwrap()).collect();
        for l1 in &ltss {
            for l2 in &ltss {
                assert_eq!(ib_check(l1, l2).unwrap(), naive_bisim(l1, l2));
            }
        }
    }

    #[test]
    fn ib_check_rejects_truncated() {
        let l = build_lts(&parsed("a.b.0{a,b}"), 2).unwrap();
        let full = build_lts(&parsed("a.b.0{a,b}"), 100).unwrap();
        assert_eq!(ib_check(&l, &full), Err(TruncatedLts));
    }

    #[test]
    fn emitted_actions_lie_in_alphabet() {
        for src in ["a.0{a,b} + b.0{a,b}", "R{a->x}(a.0{a})", "rec X{a} { X = a.X }"] {
            let t = parsed(src);
            let al = alphabet(&t);
            for (a, _) in term_steps(&t).unwrap() {
                assert!(al.contains(&a), "action {a} outside alphabet of {src}");
            }
        }
    }
}
