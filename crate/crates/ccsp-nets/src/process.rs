//! Causal nets, foldings, and the processes (concurrent runs) of a net:
//! validation, one-event extension, prefix order, bounded enumeration up to
//! isomorphism, and Y-completeness.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use thiserror::Error;

use crate::canon::{canonical_code, CanonicalCode, ColoredDigraph};
use crate::multiset::Multiset;
use crate::net::{Marking, Net, PlaceId, TransId};

/// Maps causal-net nodes onto host-net nodes, places to places and
/// transitions to transitions, indexed by causal node position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Folding {
    pub place_map: Vec<PlaceId>,
    pub trans_map: Vec<TransId>,
}

/// A process of a net: a causal net together with a folding into the host.
#[derive(Clone, Debug)]
pub struct Process {
    pub host: Rc<Net>,
    pub causal: Net,
    pub fold: Folding,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CausalNetViolation {
    #[error("place `{0}` has more than one incoming arc")]
    BranchingPre(String),
    #[error("place `{0}` has more than one outgoing arc")]
    BranchingPost(String),
    #[error("place `{place}` has marking {found}, expected {expected}")]
    BadInitialMarking { place: String, found: u64, expected: u64 },
    #[error("the flow relation is cyclic")]
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldingViolation {
    #[error("causal net type differs from the host type")]
    TypeMismatch,
    #[error("event `{event}` is labelled `{found}` but its image is labelled `{expected}`")]
    LabelMismatch { event: String, found: String, expected: String },
    #[error("the folded initial marking differs from the host initial marking")]
    InitialMarkingMismatch,
    #[error("arc multiplicities around event `{event}` do not match its image")]
    ArcCountMismatch { event: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("processes have different hosts")]
    DifferentHosts,
    #[error("chosen tokens do not match the preset of the host transition")]
    TokenMismatch,
    #[error("token `{0}` is not a final place")]
    NotFinal(String),
}

/// Checks the causal-net conditions: unbranched places with the forced
/// initial marking, an acyclic flow relation, and finitely many causes per
/// transition (automatic for the finite nets representable here).
pub fn validate_causal_net(net: &Net) -> Result<(), CausalNetViolation> {
    let mut pre_weight: BTreeMap<PlaceId, u64> = BTreeMap::new();
    let mut post_weight: BTreeMap<PlaceId, u64> = BTreeMap::new();
    for (_, tr) in net.transitions() {
        for (p, w) in tr.post.iter() {
            *pre_weight.entry(*p).or_insert(0) += w;
        }
        for (p, w) in tr.pre.iter() {
            *post_weight.entry(*p).or_insert(0) += w;
        }
    }
    for (id, place) in net.places() {
        let incoming = pre_weight.get(&id).copied().unwrap_or(0);
        let outgoing = post_weight.get(&id).copied().unwrap_or(0);
        if incoming > 1 {
            return Err(CausalNetViolation::BranchingPre(place.name.clone()));
        }
        if outgoing > 1 {
            return Err(CausalNetViolation::BranchingPost(place.name.clone()));
        }
        let expected = if incoming == 0 { 1 } else { 0 };
        let found = net.initial_marking().count(&id);
        if found != expected {
            return Err(CausalNetViolation::BadInitialMarking {
                place: place.name.clone(),
                found,
                expected,
            });
        }
    }
    if !net.is_acyclic() {
        return Err(CausalNetViolation::Cyclic);
    }
    Ok(())
}

impl Process {
    /// Image of a causal marking in the host.
    pub fn fold_marking(&self, m: &Marking) -> Marking {
        m.map(|p| self.fold.place_map[p.0 as usize])
    }

    /// The final places `𝔑°` (empty postset), in id order.
    pub fn final_places(&self) -> Vec<PlaceId> {
        let mut consumed: BTreeSet<PlaceId> = BTreeSet::new();
        for (_, tr) in self.causal.transitions() {
            consumed.extend(tr.pre.support().copied());
        }
        self.causal
            .places()
            .map(|(id, _)| id)
            .filter(|id| !consumed.contains(id))
            .collect()
    }

    /// `ρ(𝔑°)`: the host marking reached by this run.
    pub fn final_marking_image(&self) -> Marking {
        self.final_places().into_iter().map(|p| self.fold.place_map[p.0 as usize]).collect()
    }

    pub fn event_count(&self) -> usize {
        self.causal.transition_count()
    }
}

/// Checks the folding conditions of a process exactly: type and label
/// preservation, the image of the causal initial marking, and the arc-count
/// equations `F(s,ρ(t)) = |ρ⁻¹(s) ∩ •t|`, `F(ρ(t),s) = |ρ⁻¹(s) ∩ t•|`.
pub fn validate_folding(p: &Process) -> Result<(), FoldingViolation> {
    if p.causal.alphabet() != p.host.alphabet() {
        return Err(FoldingViolation::TypeMismatch);
    }
    for (id, tr) in p.causal.transitions() {
        let image = p.host.transition(p.fold.trans_map[id.0 as usize]);
        if tr.label != image.label {
            return Err(FoldingViolation::LabelMismatch {
                event: tr.name.clone(),
                found: tr.label.clone(),
                expected: image.label.clone(),
            });
        }
        if p.fold_marking(&tr.pre) != image.pre || p.fold_marking(&tr.post) != image.post {
            return Err(FoldingViolation::ArcCountMismatch { event: tr.name.clone() });
        }
    }
    if p.fold_marking(p.causal.initial_marking()) != *p.host.initial_marking() {
        return Err(FoldingViolation::InitialMarkingMismatch);
    }
    Ok(())
}

/// The initial process: one isolated causal place per token of the host's
/// initial marking, no events.
pub fn initial_process(host: &Rc<Net>) -> Process {
    let mut causal = Net::new(host.alphabet().clone());
    let mut place_map = Vec::new();
    let mut marking = Multiset::new();
    for (s, count) in host.initial_marking().iter() {
        for _ in 0..count {
            let id = causal.add_place(format!("p{}", place_map.len())).unwrap();
            place_map.push(*s);
            marking.insert(id, 1);
        }
    }
    causal.set_initial(marking).unwrap();
    Process { host: Rc::clone(host), causal, fold: Folding { place_map, trans_map: Vec::new() } }
}

/// Extends a process by one event folded onto host transition `t`,
/// consuming exactly `tokens` (final causal places whose image is the
/// preset of `t`) and producing fresh places folded onto its postset.
pub fn extend_process(p: &Process, t: TransId, tokens: &[PlaceId]) -> Result<Process, ProcessError> {
    let finals: BTreeSet<PlaceId> = p.final_places().into_iter().collect();
    let mut unique = BTreeSet::new();
    for tok in tokens {
        if !finals.contains(tok) {
            return Err(ProcessError::NotFinal(p.causal.place(*tok).name.clone()));
        }
        if !unique.insert(*tok) {
            return Err(ProcessError::TokenMismatch);
        }
    }
    let host_tr = p.host.transition(t);
    let image: Marking = tokens.iter().map(|tok| p.fold.place_map[tok.0 as usize]).collect();
    if image != host_tr.pre {
        return Err(ProcessError::TokenMismatch);
    }

    let mut out = p.clone();
    let event = out
        .causal
        .add_transition(
            format!("e{}", out.causal.transition_count()),
            host_tr.label.clone(),
            tokens.iter().copied().collect::<Marking>(),
            Multiset::new(),
        )
        .unwrap();
    out.fold.trans_map.push(t);

    let mut post: Marking = Multiset::new();
    for (s, w) in host_tr.post.iter() {
        for _ in 0..w {
            let id = out.causal.add_place(format!("p{}", out.fold.place_map.len())).unwrap();
            out.fold.place_map.push(*s);
            post.insert(id, 1);
        }
    }
    // Rewrite the event with its postset now that the places exist.
    let pre: Marking = tokens.iter().copied().collect();
    out.causal.replace_transition_arcs(event, pre, post);
    Ok(out)
}

/// All one-event extensions of `p`: every host transition enabled at the
/// final marking image, with every choice of tokens realising its preset.
pub fn one_step_extensions(p: &Process) -> Vec<(TransId, Vec<PlaceId>)> {
    let finals = p.final_places();
    let mut by_image: BTreeMap<PlaceId, Vec<PlaceId>> = BTreeMap::new();
    for f in finals {
        by_image.entry(p.fold.place_map[f.0 as usize]).or_default().push(f);
    }
    let mut out = Vec::new();
    for (t, tr) in p.host.transitions() {
        let mut choices: Vec<Vec<PlaceId>> = vec![Vec::new()];
        let mut feasible = true;
        for (s, w) in tr.pre.iter() {
            let avail = by_image.get(s).map(|v| v.as_slice()).unwrap_or(&[]);
            if (avail.len() as u64) < w {
                feasible = false;
                break;
            }
            let combos = k_subsets(avail, w as usize);
            let mut next = Vec::with_capacity(choices.len() * combos.len());
            for base in &choices {
                for combo in &combos {
                    let mut c = base.clone();
                    c.extend_from_slice(combo);
                    next.push(c);
                }
            }
            choices = next;
        }
        if !feasible {
            continue;
        }
        for c in choices {
            out.push((t, c));
        }
    }
    out
}

fn k_subsets(items: &[PlaceId], k: usize) -> Vec<Vec<PlaceId>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(items: &[PlaceId], k: usize, start: usize, current: &mut Vec<PlaceId>, out: &mut Vec<Vec<PlaceId>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..items.len() {
            current.push(items[i]);
            rec(items, k, i + 1, current, out);
            current.pop();
        }
    }
    rec(items, k, 0, &mut current, &mut out);
    out
}

/// Prefix order on processes of one host (Def.-style restriction checks,
/// matching nodes by name).
pub fn is_prefix(smaller: &Process, larger: &Process) -> Result<bool, ProcessError> {
    if smaller.host != larger.host {
        return Err(ProcessError::DifferentHosts);
    }
    let mut lplace = BTreeMap::new();
    for (id, pl) in larger.causal.places() {
        lplace.insert(pl.name.clone(), id);
    }
    let mut ltrans = BTreeMap::new();
    for (id, tr) in larger.causal.transitions() {
        ltrans.insert(tr.name.clone(), id);
    }

    // S' ⊆ S with matching folding; initial markings equal.
    let mut place_of: BTreeMap<PlaceId, PlaceId> = BTreeMap::new();
    for (id, pl) in smaller.causal.places() {
        match lplace.get(&pl.name) {
            Some(&lid) => {
                if larger.fold.place_map[lid.0 as usize] != smaller.fold.place_map[id.0 as usize] {
                    return Ok(false);
                }
                place_of.insert(id, lid);
            }
            None => return Ok(false),
        }
    }
    let small_initial: BTreeSet<&str> = smaller
        .causal
        .initial_marking()
        .support()
        .map(|p| smaller.causal.place(*p).name.as_str())
        .collect();
    let large_initial: BTreeSet<&str> = larger
        .causal
        .initial_marking()
        .support()
        .map(|p| larger.causal.place(*p).name.as_str())
        .collect();
    if small_initial != large_initial {
        return Ok(false);
    }

    // T' ⊆ T with matching folding and arcs; the restriction of the larger
    // flow to S'×T' ∪ T'×S' must be exactly the smaller flow.
    let mut trans_of: BTreeMap<TransId, TransId> = BTreeMap::new();
    for (id, tr) in smaller.causal.transitions() {
        match ltrans.get(&tr.name) {
            Some(&lid) => {
                if larger.fold.trans_map[lid.0 as usize] != smaller.fold.trans_map[id.0 as usize] {
                    return Ok(false);
                }
                let limage = larger.causal.transition(lid);
                let mapped_pre = tr.pre.map(|p| place_of[p]);
                let mapped_post = tr.post.map(|p| place_of[p]);
                if mapped_pre != limage.pre || mapped_post != limage.post {
                    return Ok(false);
                }
                trans_of.insert(id, lid);
            }
            None => return Ok(false),
        }
    }
    // No larger-net arc between retained places and retained transitions may
    // be missing from the smaller net.
    let retained_places: BTreeSet<PlaceId> = place_of.values().copied().collect();
    let retained_trans: BTreeMap<TransId, TransId> =
        trans_of.iter().map(|(&s, &l)| (l, s)).collect();
    for (lid, tr) in larger.causal.transitions() {
        if let Some(&sid) = retained_trans.get(&lid) {
            let str_ = smaller.causal.transition(sid);
            for (p, w) in tr.pre.iter() {
                if retained_places.contains(p) {
                    let sname = &larger.causal.place(*p).name;
                    let sp = smaller.causal.place_by_name(sname).unwrap();
                    if str_.pre.count(&sp) != w {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Canonical-code mode: whether node colours respect the folding or only
/// the action labels of events.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CanonMode {
    /// Isomorphism must respect the folding (process identity).
    Process,
    /// Isomorphism respects event labels only (causal-net identity).
    Labels,
}

fn digraph_of(p: &Process, mode: CanonMode) -> ColoredDigraph {
    let np = p.causal.place_count();
    let mut colors = Vec::with_capacity(np + p.causal.transition_count());
    for (id, _) in p.causal.places() {
        match mode {
            CanonMode::Process => {
                colors.push(format!("P{}", p.fold.place_map[id.0 as usize].0))
            }
            CanonMode::Labels => colors.push("P".to_string()),
        }
    }
    for (id, tr) in p.causal.transitions() {
        match mode {
            CanonMode::Process => colors.push(format!(
                "T{}:{}",
                p.fold.trans_map[id.0 as usize].0,
                tr.label
            )),
            CanonMode::Labels => colors.push(format!("T:{}", tr.label)),
        }
    }
    let mut edges = Vec::new();
    for (id, tr) in p.causal.transitions() {
        let t = np + id.0 as usize;
        for s in tr.pre.support() {
            edges.push((s.0 as usize, t));
        }
        for s in tr.post.support() {
            edges.push((t, s.0 as usize));
        }
    }
    ColoredDigraph { colors, edges }
}

/// The canonical form of a process (or, in label mode, of its causal net).
pub fn canonical_form(p: &Process, mode: CanonMode) -> CanonicalCode {
    canonical_code(&digraph_of(p, mode))
}

/// Result of a bounded process enumeration.
pub struct Enumeration {
    /// One representative per isomorphism class, grouped in discovery order.
    pub processes: Vec<Process>,
    /// True iff no process at the event bound still had extensions: every
    /// process of the host has been enumerated.
    pub exhausted: bool,
}

/// Enumerates one representative per isomorphism class of the processes of
/// `host` with at most `max_events` events.
pub fn enumerate_processes(host: &Rc<Net>, max_events: usize) -> Enumeration {
    let mut seen: BTreeSet<CanonicalCode> = BTreeSet::new();
    let mut processes = Vec::new();
    let mut exhausted = true;
    let initial = initial_process(host);
    seen.insert(canonical_form(&initial, CanonMode::Process));
    let mut layer = vec![initial.clone()];
    processes.push(initial);
    for depth in 0..max_events {
        let mut next = Vec::new();
        for p in &layer {
            for (t, tokens) in one_step_extensions(p) {
                if depth + 1 > max_events {
                    continue;
                }
                let q = extend_process(p, t, &tokens).expect("extension is valid");
                let code = canonical_form(&q, CanonMode::Process);
                if seen.insert(code) {
                    next.push(q);
                }
            }
        }
        for q in &next {
            processes.push(q.clone());
        }
        layer = next;
        if layer.is_empty() {
            break;
        }
    }
    // Anything at the bound with a pending extension means the enumeration
    // was cut short.
    for p in &layer {
        if p.event_count() == max_events && !one_step_extensions(p).is_empty() {
            exhausted = false;
            break;
        }
    }
    Enumeration { processes, exhausted }
}

/// True iff every one-step extension of `p` uses a transition labelled in
/// `blocked`. With an empty `blocked` this is maximality.
pub fn is_y_complete(p: &Process, blocked: &BTreeSet<String>) -> bool {
    let reached = p.final_marking_image();
    for (_, tr) in p.host.transitions() {
        if !blocked.contains(&tr.label) && tr.pre.leq(&reached) {
            return false;
        }
    }
    true
}

/// The depth of each event: one more than the maximum depth of its causes.
pub fn event_depths(p: &Process) -> Vec<usize> {
    let nt = p.causal.transition_count();
    let mut producer: BTreeMap<PlaceId, usize> = BTreeMap::new();
    for (id, tr) in p.causal.transitions() {
        for s in tr.post.support() {
            producer.insert(*s, id.0 as usize);
        }
    }
    let mut depth = vec![0usize; nt];
    // Transitions were created in causal order: every cause has a smaller id.
    for (id, tr) in p.causal.transitions() {
        let mut d = 1;
        for s in tr.pre.support() {
            if let Some(&cause) = producer.get(s) {
                d = d.max(depth[cause] + 1);
            }
        }
        depth[id.0 as usize] = d;
    }
    depth
}

/// The prefix of `p` keeping exactly the events of depth at most `i`.
pub fn depth_truncation(p: &Process, i: usize) -> Process {
    let depths = event_depths(p);
    let keep: BTreeSet<TransId> = p
        .causal
        .transitions()
        .map(|(id, _)| id)
        .filter(|id| depths[id.0 as usize] <= i)
        .collect();
    prefix_from_events(p, &keep)
}

/// The prefix determined by a causally downward-closed event set.
pub fn prefix_from_events(p: &Process, keep: &BTreeSet<TransId>) -> Process {
    let mut causal = Net::new(p.host.alphabet().clone());
    let mut place_map = Vec::new();
    let mut trans_map = Vec::new();
    let mut place_of: BTreeMap<PlaceId, PlaceId> = BTreeMap::new();

    // Keep the initial places and every place produced by a kept event.
    let mut kept_places: BTreeSet<PlaceId> =
        p.causal.initial_marking().support().copied().collect();
    for (id, tr) in p.causal.transitions() {
        if keep.contains(&id) {
            kept_places.extend(tr.post.support().copied());
        }
    }
    for pid in &kept_places {
        let name = p.causal.place(*pid).name.clone();
        let new = causal.add_place(name).unwrap();
        place_of.insert(*pid, new);
        place_map.push(p.fold.place_map[pid.0 as usize]);
    }
    for (id, tr) in p.causal.transitions() {
        if keep.contains(&id) {
            causal
                .add_transition(
                    tr.name.clone(),
                    tr.label.clone(),
                    tr.pre.map(|s| place_of[s]),
                    tr.post.map(|s| place_of[s]),
                )
                .unwrap();
            trans_map.push(p.fold.trans_map[id.0 as usize]);
        }
    }
    causal
        .set_initial(p.causal.initial_marking().map(|s| place_of[s]))
        .unwrap();
    Process { host: Rc::clone(&p.host), causal, fold: Folding { place_map, trans_map } }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccsp::parse_term;
    use crate::densem::denote;
    use crate::net::case_graph;
    use crate::opsem::operational_net;

    fn host_of(src: &str) -> Rc<Net> {
        Rc::new(operational_net(&parse_term(src).unwrap(), 1000).unwrap().net)
    }

    #[test]
    fn chain_with_branch_is_a_causal_net() {
        // A short a-chain with one b off the side, like the runs of the
        // inevitability counterexample nets.
        let mut net = Net::new(["a".to_string(), "b".to_string()].into_iter().collect());
        let s0 = net.add_place("s0").unwrap();
        let s1 = net.add_place("s1").unwrap();
        let s2 = net.add_place("s2").unwrap();
        let s3 = net.add_place("s3").unwrap();
        net.add_transition("t1", "a", Multiset::singleton(s0), Multiset::singleton(s1)).unwrap();
        net.add_transition("t2", "b", Multiset::singleton(s2), Multiset::singleton(s3)).unwrap();
        net.mark(s0, 1);
        net.mark(s2, 1);
        assert_eq!(validate_causal_net(&net), Ok(()));
    }

    #[test]
    fn conflict_place_is_rejected() {
        let mut net = Net::new(["a".to_string()].into_iter().collect());
        let s = net.add_place("s").unwrap();
        let u = net.add_place("u").unwrap();
        let v = net.add_place("v").unwrap();
        net.add_transition("t1", "a", Multiset::singleton(s), Multiset::singleton(u)).unwrap();
        net.add_transition("t2", "a", Multiset::singleton(s), Multiset::singleton(v)).unwrap();
        net.mark(s, 1);
        assert!(matches!(
            validate_causal_net(&net),
            Err(CausalNetViolation::BranchingPost(_))
        ));
    }

    #[test]
    fn cycle_is_rejected() {
        let mut net = Net::new(["a".to_string()].into_iter().collect());
        let s = net.add_place("s").unwrap();
        net.add_transition("t", "a", Multiset::singleton(s), Multiset::singleton(s)).unwrap();
        // Initial marking must still satisfy the first condition: s has an
        // incoming arc, so it must be unmarked.
        assert!(matches!(validate_causal_net(&net), Err(_)));
    }

    #[test]
    fn initial_process_is_valid() {
        let host = host_of("a.0{a} || b.0{b}");
        let p = initial_process(&host);
        assert_eq!(validate_causal_net(&p.causal), Ok(()));
        assert_eq!(validate_folding(&p), Ok(()));
        assert_eq!(p.final_marking_image(), *host.initial_marking());
    }

    #[test]
    fn folding_violations_are_detected() {
        let host = host_of("a.b.0{a,b}");
        let p = initial_process(&host);
        let (t_b, _) = host
            .transitions()
            .find(|(_, tr)| tr.label == "b")
            .expect("b transition");
        // Map a fresh a-labelled event onto the b transition: label clash.
        let mut broken = p.clone();
        let token = broken.final_places()[0];
        let ev = broken
            .causal
            .add_transition("e0", "a", Multiset::singleton(token), Multiset::new())
            .unwrap();
        let _ = ev;
        broken.fold.trans_map.push(t_b);
        assert!(matches!(
            validate_folding(&broken),
            Err(FoldingViolation::LabelMismatch { .. })
        ));
    }

    #[test]
    fn arc_multiplicity_must_match_weighted_arcs() {
        // Host with a weight-2 arc: a folding mapping only one token onto it
        // violates |ρ⁻¹(s) ∩ •t| = F(s,t) = 2.
        let mut host = Net::new(["a".to_string()].into_iter().collect());
        let s = host.add_place("s").unwrap();
        let u = host.add_place("u").unwrap();
        let t = host
            .add_transition("t", "a", [(s, 2)].into_iter().collect(), Multiset::singleton(u))
            .unwrap();
        host.mark(s, 2);
        let host = Rc::new(host);

        let p = initial_process(&host);
        let finals = p.final_places();
        assert_eq!(finals.len(), 2);
        let good = extend_process(&p, t, &finals).unwrap();
        assert_eq!(validate_folding(&good), Ok(()));

        // Consuming a single token cannot realise the weight-2 preset.
        assert!(matches!(
            extend_process(&p, t, &finals[..1]),
            Err(ProcessError::TokenMismatch)
        ));
    }

    #[test]
    fn extension_is_a_proper_extension() {
        let host = host_of("a.0{a}");
        let p = initial_process(&host);
        let exts = one_step_extensions(&p);
        assert_eq!(exts.len(), 1);
        let (t, tokens) = &exts[0];
        let q = extend_process(&p, *t, tokens).unwrap();
        assert_eq!(q.event_count(), 1);
        assert_eq!(validate_folding(&q), Ok(()));
        assert!(is_prefix(&p, &q).unwrap());
        assert!(is_prefix(&q, &q).unwrap());
        assert!(!is_prefix(&q, &p).unwrap());
    }

    #[test]
    fn different_hosts_are_an_error() {
        let p = initial_process(&host_of("a.0{a}"));
        let q = initial_process(&host_of("b.0{b}"));
        assert_eq!(is_prefix(&p, &q), Err(ProcessError::DifferentHosts));
    }

    #[test]
    fn symmetric_token_choices_collapse() {
        // Two tokens with the same image: the two extensions are isomorphic.
        let mut host = Net::new(["a".to_string()].into_iter().collect());
        let s = host.add_place("s").unwrap();
        host.add_transition("t", "a", Multiset::singleton(s), Multiset::new()).unwrap();
        host.mark(s, 2);
        let host = Rc::new(host);
        let p = initial_process(&host);
        let exts = one_step_extensions(&p);
        assert_eq!(exts.len(), 2);
        let q1 = extend_process(&p, exts[0].0, &exts[0].1).unwrap();
        let q2 = extend_process(&p, exts[1].0, &exts[1].1).unwrap();
        assert_ne!(exts[0].1, exts[1].1);
        assert_eq!(
            canonical_form(&q1, CanonMode::Process),
            canonical_form(&q2, CanonMode::Process)
        );
    }

    #[test]
    fn enumerate_prefix_host() {
        let host = host_of("a.0{a}");
        let e = enumerate_processes(&host, 1);
        assert_eq!(e.processes.len(), 2);
        assert!(e.exhausted);
    }

    #[test]
    fn enumerate_collapses_isomorphic_branches() {
        let term = parse_term("a.0{a} + a.0{a}").unwrap();
        let op = Rc::new(operational_net(&term, 100).unwrap().net);
        let e = enumerate_processes(&op, 1);
        assert_eq!(e.processes.len(), 2);

        // The denotational net keeps two a-transitions with distinct
        // postsets, so their runs fold differently: two one-event classes.
        // Their causal nets still coincide.
        let den = Rc::new(denote(&term, 100).unwrap().0);
        let e = enumerate_processes(&den, 1);
        assert_eq!(e.processes.len(), 3);
        let causal_codes: BTreeSet<CanonicalCode> = e
            .processes
            .iter()
            .filter(|p| p.event_count() == 1)
            .map(|p| canonical_form(p, CanonMode::Labels))
            .collect();
        assert_eq!(causal_codes.len(), 1);
    }

    #[test]
    fn causal_nets_distinguish_order_from_concurrency() {
        let seq = host_of("a.b.0{a,b}");
        let par = host_of("a.0{a} || b.0{b}");
        let seq_full = enumerate_processes(&seq, 2);
        let par_full = enumerate_processes(&par, 2);
        let codes = |e: &Enumeration| -> BTreeSet<CanonicalCode> {
            e.processes
                .iter()
                .filter(|p| p.event_count() == 2)
                .map(|p| canonical_form(p, CanonMode::Labels))
                .collect()
        };
        assert_ne!(codes(&seq_full), codes(&par_full));
    }

    #[test]
    fn marking_correspondence_on_acyclic_corpus() {
        for src in ["a.0{a} + a.0{a}", "a.b.0{a,b}", "a.0{a} || b.0{b}"] {
            let host = host_of(src);
            let e = enumerate_processes(&host, 10);
            assert!(e.exhausted, "{src} should exhaust");
            let reached: BTreeSet<Marking> =
                e.processes.iter().map(|p| p.final_marking_image()).collect();
            let reachable: BTreeSet<Marking> =
                case_graph(&host, 1000).nodes.into_iter().collect();
            assert_eq!(reached, reachable, "marking duality fails for {src}");
        }
    }

    #[test]
    fn enumeration_matches_depth_truncations() {
        for src in ["a.b.0{a,b}", "a.0{a} || b.0{b}", "a.0{a,b} + b.0{a,b}"] {
            let host = host_of(src);
            let small = enumerate_processes(&host, 1);
            let large = enumerate_processes(&host, 3);
            let mut truncated: BTreeSet<CanonicalCode> = BTreeSet::new();
            for p in &large.processes {
                for i in 0..=3 {
                    let q = depth_truncation(p, i);
                    if q.event_count() <= 1 {
                        truncated.insert(canonical_form(&q, CanonMode::Process));
                    }
                }
            }
            let small_codes: BTreeSet<CanonicalCode> = small
                .processes
                .iter()
                .map(|p| canonical_form(p, CanonMode::Process))
                .collect();
            assert_eq!(small_codes, truncated, "depth truncation mismatch for {src}");
        }
    }

    #[test]
    fn y_completeness() {
        let host = host_of("a.0{a}");
        let e = enumerate_processes(&host, 2);
        let full = e.processes.iter().find(|p| p.event_count() == 1).unwrap();
        let initial = e.processes.iter().find(|p| p.event_count() == 0).unwrap();
        let empty = BTreeSet::new();
        let just_a: BTreeSet<String> = ["a".to_string()].into_iter().collect();
        assert!(is_y_complete(full, &empty));
        assert!(!is_y_complete(initial, &empty));
        assert!(is_y_complete(initial, &just_a));
    }

    #[test]
    fn every_enumerated_process_validates() {
        let host = host_of("rec X{a,b} { X = a.X + b.X }");
        let e = enumerate_processes(&host, 4);
        for p in &e.processes {
            assert_eq!(validate_causal_net(&p.causal), Ok(()));
            assert_eq!(validate_folding(p), Ok(()));
        }
    }
}
