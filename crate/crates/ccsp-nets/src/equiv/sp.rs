//! Structure preserving bisimilarity on the linking formulation.
//!
//! The checker plays the token-bundle transfer game lazily from the initial
//! linkings: a linking is refuted iff some challenge (a transition whose
//! preset is matched by a sub-linking) has no surviving response. Refuted
//! linkings are cached absolutely; survival is cached only when it does not
//! lean on an in-progress assumption, which makes the depth-first search
//! compute the greatest fixpoint exactly. Restricting the game to linkings
//! whose projections are reachable markings is sound: the reachable
//! restriction of an sp-bisimulation is itself an sp-bisimulation.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashSet};
use std::ops::ControlFlow;

use crate::net::{case_graph, Marking, Net, TransId};

use super::{
    for_each_matching, matchings, project1, project2, sub_linkings_projecting, AttackStep,
    Certificate, Linking, Refutation, Verdict,
};

struct Challenge {
    side: u8,
    trans: TransId,
    challenge: Linking,
    responses: Vec<Linking>,
}

struct Solver<'a> {
    n1: &'a Net,
    n2: &'a Net,
    reach1: BTreeSet<Marking>,
    reach2: BTreeSet<Marking>,
    dead: RefCell<HashSet<Linking>>,
    alive: RefCell<HashSet<Linking>>,
}

impl<'a> Solver<'a> {
    fn challenges(&self, l: &Linking) -> Vec<Challenge> {
        let m1 = project1(l);
        let m2 = project2(l);
        let mut out = Vec::new();
        for (t1, tr1) in self.n1.transitions() {
            if !tr1.pre.leq(&m1) {
                continue;
            }
            for c in sub_linkings_projecting(l, 1, &tr1.pre) {
                let need = project2(&c);
                let mut responses = Vec::new();
                for (_, tr2) in self.n2.transitions() {
                    if tr2.label != tr1.label || tr2.pre != need {
                        continue;
                    }
                    for cbar in matchings(&tr1.post, &tr2.post) {
                        responses.push(l.checked_sub(&c).unwrap().sum(&cbar));
                    }
                }
                out.push(Challenge { side: 1, trans: t1, challenge: c, responses });
            }
        }
        for (t2, tr2) in self.n2.transitions() {
            if !tr2.pre.leq(&m2) {
                continue;
            }
            for c in sub_linkings_projecting(l, 2, &tr2.pre) {
                let need = project1(&c);
                let mut responses = Vec::new();
                for (_, tr1) in self.n1.transitions() {
                    if tr1.label != tr2.label || tr1.pre != need {
                        continue;
                    }
                    for cbar in matchings(&tr1.post, &tr2.post) {
                        responses.push(l.checked_sub(&c).unwrap().sum(&cbar));
                    }
                }
                out.push(Challenge { side: 2, trans: t2, challenge: c, responses });
            }
        }
        out
    }

    /// Core search. Returns (attacker wins, lowest stack depth the result
    /// leaned on). Cycles count for the defender, matching the greatest
    /// fixpoint.
    fn attacker_wins(&self, l: &Linking, stack: &mut Vec<Linking>) -> (bool, usize) {
        if self.dead.borrow().contains(l) {
            return (true, usize::MAX);
        }
        if self.alive.borrow().contains(l) {
            return (false, usize::MAX);
        }
        if let Some(depth) = stack.iter().position(|x| x == l) {
            return (false, depth);
        }
        let m1 = project1(l);
        let m2 = project2(l);
        if !self.reach1.contains(&m1) || !self.reach2.contains(&m2) {
            self.dead.borrow_mut().insert(l.clone());
            return (true, usize::MAX);
        }
        let challenges = self.challenges(l);
        // Locally unanswerable challenges kill without recursion. Top-level
        // probes are not cached: most initial pairings die here and caching
        // them would only bloat the table.
        for ch in &challenges {
            if ch.responses.is_empty() {
                if !stack.is_empty() {
                    self.dead.borrow_mut().insert(l.clone());
                }
                return (true, usize::MAX);
            }
        }
        stack.push(l.clone());
        let my_depth = stack.len() - 1;
        let mut low = usize::MAX;
        let mut refuted = false;
        'outer: for ch in &challenges {
            let mut answered = false;
            for resp in &ch.responses {
                let (win, leaned) = self.attacker_wins(resp, stack);
                if !win {
                    answered = true;
                    low = low.min(leaned);
                    break;
                }
            }
            if !answered {
                refuted = true;
                break 'outer;
            }
        }
        stack.pop();
        if refuted {
            self.dead.borrow_mut().insert(l.clone());
            (true, usize::MAX)
        } else {
            if low >= my_depth {
                // The surviving strategy never leaves this subtree: it is a
                // self-contained post-fixpoint, so survival is absolute.
                self.alive.borrow_mut().insert(l.clone());
                (false, usize::MAX)
            } else {
                (false, low)
            }
        }
    }

    fn survives(&self, l: &Linking) -> bool {
        let mut stack = Vec::new();
        !self.attacker_wins(l, &mut stack).0
    }

    /// Closes a surviving linking under chosen responses into a full
    /// sp-bisimulation certificate.
    fn certificate(&self, root: Linking) -> BTreeSet<Linking> {
        let mut set: BTreeSet<Linking> = [root.clone()].into_iter().collect();
        let mut queue = vec![root];
        while let Some(l) = queue.pop() {
            for ch in self.challenges(&l) {
                if ch.responses.iter().any(|r| set.contains(r)) {
                    continue;
                }
                let picked = ch
                    .responses
                    .iter()
                    .find(|r| self.survives(r))
                    .expect("a surviving linking answers every challenge")
                    .clone();
                set.insert(picked.clone());
                queue.push(picked);
            }
        }
        set
    }

    /// The first locally decisive attack against a refuted linking: a
    /// challenge whose responses are all refuted.
    fn sample_attack(&self, l: &Linking) -> Option<AttackStep> {
        for ch in self.challenges(l) {
            if ch.responses.iter().all(|r| {
                let mut stack = Vec::new();
                self.attacker_wins(r, &mut stack).0
            }) {
                let name = match ch.side {
                    1 => self.n1.transition(ch.trans).name.clone(),
                    _ => self.n2.transition(ch.trans).name.clone(),
                };
                return Some(AttackStep { side: ch.side, transition: name, challenge: ch.challenge });
            }
        }
        None
    }
}

/// Decides structure preserving bisimilarity of two nets, exploring at most
/// `max_markings` reachable markings per net.
///
/// A surviving initial linking yields `yes` with a replayable certificate
/// (sound even under truncation, because the certificate is validated
/// directly against the definition); exhausting all initial linkings yields
/// `no` only when the exploration was untruncated.
pub fn sp_check(n1: &Net, n2: &Net, max_markings: usize) -> Verdict {
    if n1.alphabet() != n2.alphabet() {
        return Verdict::No(Refutation::AlphabetMismatch);
    }
    let cg1 = case_graph(n1, max_markings);
    let cg2 = case_graph(n2, max_markings);
    let truncated = cg1.truncated || cg2.truncated;
    let solver = Solver {
        n1,
        n2,
        reach1: cg1.node_set(),
        reach2: cg2.node_set(),
        dead: RefCell::new(HashSet::new()),
        alive: RefCell::new(HashSet::new()),
    };

    let mut initials: u64 = 0;
    let mut winner: Option<Linking> = None;
    let mut first: Option<Linking> = None;
    let _ = for_each_matching(n1.initial_marking(), n2.initial_marking(), &mut |l| {
        initials += 1;
        if first.is_none() {
            first = Some(l.clone());
        }
        if solver.survives(&l) {
            winner = Some(l);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });

    match winner {
        Some(root) => {
            let cert = solver.certificate(root);
            debug_assert!(validate_sp_bisimulation(n1, n2, &cert));
            Verdict::Yes(Certificate::SpBisimulation(cert))
        }
        None if truncated => Verdict::Unknown { bound: "max-markings", value: max_markings as u64 },
        None => {
            let sample = first.and_then(|l| solver.sample_attack(&l));
            Verdict::No(Refutation::SpAttack { initials, sample })
        }
    }
}

/// The dumb validator: checks the definition of an sp-bisimulation directly
/// on a set of linkings, including the presence of an initial linking.
pub fn validate_sp_bisimulation(n1: &Net, n2: &Net, set: &BTreeSet<Linking>) -> bool {
    if n1.alphabet() != n2.alphabet() {
        return false;
    }
    let initial_ok = set.iter().any(|l| {
        project1(l) == *n1.initial_marking() && project2(l) == *n2.initial_marking()
    });
    if !initial_ok {
        return false;
    }
    for l in set {
        for (_, tr1) in n1.transitions() {
            for c in sub_linkings_projecting(l, 1, &tr1.pre) {
                let need = project2(&c);
                let answered = n2.transitions().any(|(_, tr2)| {
                    tr2.label == tr1.label
                        && tr2.pre == need
                        && matchings(&tr1.post, &tr2.post)
                            .into_iter()
                            .any(|cbar| set.contains(&l.checked_sub(&c).unwrap().sum(&cbar)))
                });
                if !answered {
                    return false;
                }
            }
        }
        for (_, tr2) in n2.transitions() {
            for c in sub_linkings_projecting(l, 2, &tr2.pre) {
                let need = project1(&c);
                let answered = n1.transitions().any(|(_, tr1)| {
                    tr1.label == tr2.label
                        && tr1.pre == need
                        && matchings(&tr1.post, &tr2.post)
                            .into_iter()
                            .any(|cbar| set.contains(&l.checked_sub(&c).unwrap().sum(&cbar)))
                });
                if !answered {
                    return false;
                }
            }
        }
    }
    true
}
