//! The operational Petri net semantics: place expressions, the `dex`
//! decomposition, syntax-directed transition derivation, and extraction of
//! the reachable marked net of a closed term.

use std::collections::BTreeSet;
use std::rc::Rc;

use crate::ccsp::{alphabet, check_process_term, pretty_compact, unfold, Renaming, Term, TermError};
use crate::multiset::Multiset;
use crate::net::{Action, Alphabet, Net};

/// A place of the system-wide net: an element of the place universe.
///
/// The parallel tags are order-significant: `(μ‖_A)‖_B` and `μ‖_A‖_B`
/// groupings are distinct places. Prefix places carry closed terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum PlaceExpr {
    /// `0_A`
    Inaction(Alphabet),
    /// `aE`
    Prefix(Action, Term),
    /// `μ + ν`
    Choice(Rc<PlaceExpr>, Rc<PlaceExpr>),
    /// `μ ‖_A`
    LeftPar(Rc<PlaceExpr>, Alphabet),
    /// `_A ‖ μ`
    RightPar(Alphabet, Rc<PlaceExpr>),
    /// `R(μ)`
    Rename(Renaming, Rc<PlaceExpr>),
}

impl PlaceExpr {
    /// Whitespace-free rendering used as the place id in emitted nets.
    pub fn pretty(&self) -> String {
        match self {
            PlaceExpr::Inaction(a) => pretty_compact(&Term::Inaction(a.clone())),
            PlaceExpr::Prefix(a, e) => {
                pretty_compact(&Term::Prefix(a.clone(), Rc::new(e.clone())))
            }
            PlaceExpr::Choice(l, r) => format!("({}+{})", l.pretty(), r.pretty()),
            PlaceExpr::LeftPar(l, a) => {
                format!("({}||{})", l.pretty(), fmt_alpha(a))
            }
            PlaceExpr::RightPar(a, r) => {
                format!("({}||{})", fmt_alpha(a), r.pretty())
            }
            PlaceExpr::Rename(ren, inner) => {
                let pairs: Vec<String> =
                    ren.pairs().map(|(x, y)| format!("{x}->{y}")).collect();
                format!("R{{{}}}({})", pairs.join(","), inner.pretty())
            }
        }
    }
}

fn fmt_alpha(a: &Alphabet) -> String {
    let items: Vec<&str> = a.iter().map(|s| s.as_str()).collect();
    format!("{{{}}}", items.join(","))
}

/// A derived net transition `H →a→ J` over the place universe.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct NetRule {
    pub pre: Multiset<PlaceExpr>,
    pub action: Action,
    pub post: Multiset<PlaceExpr>,
}

/// `dex`: decomposes and expands a closed term into its set of places.
pub fn dex(p: &Term) -> Result<BTreeSet<PlaceExpr>, TermError> {
    check_process_term(p)?;
    Ok(dex_closed(p))
}

fn dex_closed(p: &Term) -> BTreeSet<PlaceExpr> {
    match p {
        Term::Inaction(a) => [PlaceExpr::Inaction(a.clone())].into_iter().collect(),
        Term::Prefix(a, e) => {
            [PlaceExpr::Prefix(a.clone(), (**e).clone())].into_iter().collect()
        }
        Term::Choice(l, r) => {
            let dl = dex_closed(l);
            let dr = dex_closed(r);
            let mut out = BTreeSet::new();
            for m in &dl {
                for n in &dr {
                    out.insert(PlaceExpr::Choice(Rc::new(m.clone()), Rc::new(n.clone())));
                }
            }
            out
        }
        Term::Parallel(l, r) => {
            let sync: Alphabet = alphabet(l).intersection(&alphabet(r)).cloned().collect();
            let mut out = BTreeSet::new();
            for m in dex_closed(l) {
                out.insert(PlaceExpr::LeftPar(Rc::new(m), sync.clone()));
            }
            for n in dex_closed(r) {
                out.insert(PlaceExpr::RightPar(sync.clone(), Rc::new(n)));
            }
            out
        }
        Term::Rename(ren, inner) => dex_closed(inner)
            .into_iter()
            .map(|m| PlaceExpr::Rename(ren.clone(), Rc::new(m)))
            .collect(),
        Term::Rec(v, spec) => {
            let unfolded = unfold(v, spec).expect("closed term unfolds");
            dex_closed(&unfolded)
        }
        Term::Var(_) => unreachable!("dex is only applied to closed terms"),
    }
}

/// Whether a place set is the image of `dex` for some closed term. The
/// choice rules of the transition table absorb `dex(Q)` summands, so the
/// absorbed set must have this shape.
fn is_dex_image(set: &BTreeSet<PlaceExpr>) -> bool {
    dex_alphabet(set).is_some()
}

/// The alphabet `α(P)` of the term `P` with `dex(P) = set`, if one exists.
/// `dex` determines the alphabet even though it does not determine the term.
fn dex_alphabet(set: &BTreeSet<PlaceExpr>) -> Option<Alphabet> {
    if set.is_empty() {
        return None;
    }
    if set.len() == 1 {
        match set.iter().next().unwrap() {
            PlaceExpr::Inaction(a) => return Some(a.clone()),
            PlaceExpr::Prefix(a, e) => {
                let mut al = alphabet(e);
                al.insert(a.clone());
                return Some(al);
            }
            _ => {}
        }
    }
    if set.iter().all(|p| matches!(p, PlaceExpr::Choice(..))) {
        let mut lefts = BTreeSet::new();
        let mut rights = BTreeSet::new();
        for p in set {
            if let PlaceExpr::Choice(l, r) = p {
                lefts.insert((**l).clone());
                rights.insert((**r).clone());
            }
        }
        // Must be exactly the rectangle lefts × rights.
        if set.len() != lefts.len() * rights.len() {
            return None;
        }
        let la = dex_alphabet(&lefts)?;
        let ra = dex_alphabet(&rights)?;
        return Some(la.union(&ra).cloned().collect());
    }
    if set.iter().all(|p| matches!(p, PlaceExpr::Rename(..))) {
        let mut renamings = BTreeSet::new();
        let mut inner = BTreeSet::new();
        for p in set {
            if let PlaceExpr::Rename(r, m) = p {
                renamings.insert(r.clone());
                inner.insert((**m).clone());
            }
        }
        if renamings.len() != 1 {
            return None;
        }
        let r = renamings.into_iter().next().unwrap();
        let ia = dex_alphabet(&inner)?;
        return Some(r.image(&ia));
    }
    if set
        .iter()
        .all(|p| matches!(p, PlaceExpr::LeftPar(..) | PlaceExpr::RightPar(..)))
    {
        let mut tags = BTreeSet::new();
        let mut lefts = BTreeSet::new();
        let mut rights = BTreeSet::new();
        for p in set {
            match p {
                PlaceExpr::LeftPar(m, a) => {
                    tags.insert(a.clone());
                    lefts.insert((**m).clone());
                }
                PlaceExpr::RightPar(a, m) => {
                    tags.insert(a.clone());
                    rights.insert((**m).clone());
                }
                _ => unreachable!(),
            }
        }
        if tags.len() != 1 || lefts.is_empty() || rights.is_empty() {
            return None;
        }
        let tag = tags.into_iter().next().unwrap();
        let la = dex_alphabet(&lefts)?;
        let ra = dex_alphabet(&rights)?;
        // dex(P‖Q) tags with exactly α(P) ∩ α(Q).
        let expected: Alphabet = la.intersection(&ra).cloned().collect();
        if expected != tag {
            return None;
        }
        return Some(la.union(&ra).cloned().collect());
    }
    None
}

fn lift_places(
    ms: &Multiset<PlaceExpr>,
    f: impl Fn(&PlaceExpr) -> PlaceExpr,
) -> Multiset<PlaceExpr> {
    ms.map(f)
}

fn set_to_marking(set: &BTreeSet<PlaceExpr>) -> Multiset<PlaceExpr> {
    set.iter().cloned().collect()
}

/// All transitions `H →a→ J` derivable from the operational rules whose
/// preset lies within `places`.
///
/// The derivation is syntax-directed: the prefix axiom, the renaming and
/// parallel liftings by structural recursion on the place tags, and a
/// fixpoint for the two choice rules, which replace a nonempty part `K` of
/// a derived preset by the pairwise sums `K + dex(Q)`. The absorbed summand
/// set is recognised by shape ([`is_dex_image`]), keeping the relation
/// exactly the one of the rule table.
pub fn derive_transitions(places: &BTreeSet<PlaceExpr>) -> BTreeSet<NetRule> {
    // Close under choice components: the choice rules need premises over the
    // parts of every available choice place.
    let mut universe = places.clone();
    loop {
        let mut added = Vec::new();
        for p in &universe {
            if let PlaceExpr::Choice(l, r) = p {
                if !universe.contains(l) {
                    added.push((**l).clone());
                }
                if !universe.contains(r) {
                    added.push((**r).clone());
                }
            }
        }
        if added.is_empty() {
            break;
        }
        universe.extend(added);
    }

    let mut rules: BTreeSet<NetRule> = BTreeSet::new();

    // Prefix axiom: {aP} →a→ dex(P).
    for p in &universe {
        if let PlaceExpr::Prefix(a, cont) = p {
            rules.insert(NetRule {
                pre: Multiset::singleton(p.clone()),
                action: a.clone(),
                post: set_to_marking(&dex_closed(cont)),
            });
        }
    }

    // Renaming lifting, grouped by the renaming operator.
    let renamings: BTreeSet<Renaming> = universe
        .iter()
        .filter_map(|p| match p {
            PlaceExpr::Rename(r, _) => Some(r.clone()),
            _ => None,
        })
        .collect();
    for ren in renamings {
        let inner: BTreeSet<PlaceExpr> = universe
            .iter()
            .filter_map(|p| match p {
                PlaceExpr::Rename(r, m) if *r == ren => Some((**m).clone()),
                _ => None,
            })
            .collect();
        for rule in derive_transitions(&inner) {
            for (a, b) in ren.pairs() {
                if *a == rule.action {
                    rules.insert(NetRule {
                        pre: lift_places(&rule.pre, |m| {
                            PlaceExpr::Rename(ren.clone(), Rc::new(m.clone()))
                        }),
                        action: b.clone(),
                        post: lift_places(&rule.post, |m| {
                            PlaceExpr::Rename(ren.clone(), Rc::new(m.clone()))
                        }),
                    });
                }
            }
        }
    }

    // Parallel liftings, grouped by the synchronisation alphabet.
    let tags: BTreeSet<Alphabet> = universe
        .iter()
        .filter_map(|p| match p {
            PlaceExpr::LeftPar(_, a) | PlaceExpr::RightPar(a, _) => Some(a.clone()),
            _ => None,
        })
        .collect();
    for tag in tags {
        let left_inner: BTreeSet<PlaceExpr> = universe
            .iter()
            .filter_map(|p| match p {
                PlaceExpr::LeftPar(m, a) if *a == tag => Some((**m).clone()),
                _ => None,
            })
            .collect();
        let right_inner: BTreeSet<PlaceExpr> = universe
            .iter()
            .filter_map(|p| match p {
                PlaceExpr::RightPar(a, m) if *a == tag => Some((**m).clone()),
                _ => None,
            })
            .collect();
        let left_rules = derive_transitions(&left_inner);
        let right_rules = derive_transitions(&right_inner);
        let tag_left = |m: &PlaceExpr| PlaceExpr::LeftPar(Rc::new(m.clone()), tag.clone());
        let tag_right = |m: &PlaceExpr| PlaceExpr::RightPar(tag.clone(), Rc::new(m.clone()));
        for rule in &left_rules {
            if !tag.contains(&rule.action) {
                rules.insert(NetRule {
                    pre: lift_places(&rule.pre, tag_left),
                    action: rule.action.clone(),
                    post: lift_places(&rule.post, tag_left),
                });
            }
        }
        for rule in &right_rules {
            if !tag.contains(&rule.action) {
                rules.insert(NetRule {
                    pre: lift_places(&rule.pre, tag_right),
                    action: rule.action.clone(),
                    post: lift_places(&rule.post, tag_right),
                });
            }
        }
        for lr in &left_rules {
            if !tag.contains(&lr.action) {
                continue;
            }
            for rr in &right_rules {
                if rr.action == lr.action {
                    rules.insert(NetRule {
                        pre: lift_places(&lr.pre, tag_left).sum(&lift_places(&rr.pre, tag_right)),
                        action: lr.action.clone(),
                        post: lift_places(&lr.post, tag_left)
                            .sum(&lift_places(&rr.post, tag_right)),
                    });
                }
            }
        }
    }

    // Choice absorption fixpoint. Each step replaces a nonempty K ≤ pre by
    // K + D for a dex image D (left rule), or by D + K (right rule).
    let mut work: Vec<NetRule> = rules.iter().cloned().collect();
    while let Some(rule) = work.pop() {
        for k in rule.pre.sub_multisets() {
            if k.is_empty() {
                continue;
            }
            let rest = rule.pre.checked_sub(&k).expect("sub-multiset subtracts");
            // Left absorption: κ becomes κ+δ.
            let mut right_candidates: Option<BTreeSet<PlaceExpr>> = None;
            for kappa in k.support() {
                let cands: BTreeSet<PlaceExpr> = universe
                    .iter()
                    .filter_map(|p| match p {
                        PlaceExpr::Choice(l, r) if **l == *kappa => Some((**r).clone()),
                        _ => None,
                    })
                    .collect();
                right_candidates = Some(match right_candidates {
                    None => cands,
                    Some(prev) => prev.intersection(&cands).cloned().collect(),
                });
            }
            for d in nonempty_subsets(&right_candidates.unwrap_or_default()) {
                if !is_dex_image(&d) {
                    continue;
                }
                let mut pre = rest.clone();
                for (kappa, count) in k.iter() {
                    for delta in &d {
                        pre.insert(
                            PlaceExpr::Choice(Rc::new(kappa.clone()), Rc::new(delta.clone())),
                            count,
                        );
                    }
                }
                let new_rule = NetRule { pre, action: rule.action.clone(), post: rule.post.clone() };
                if rules.insert(new_rule.clone()) {
                    work.push(new_rule);
                }
            }
            // Right absorption: κ becomes δ+κ.
            let mut left_candidates: Option<BTreeSet<PlaceExpr>> = None;
            for kappa in k.support() {
                let cands: BTreeSet<PlaceExpr> = universe
                    .iter()
                    .filter_map(|p| match p {
                        PlaceExpr::Choice(l, r) if **r == *kappa => Some((**l).clone()),
                        _ => None,
                    })
                    .collect();
                left_candidates = Some(match left_candidates {
                    None => cands,
                    Some(prev) => prev.intersection(&cands).cloned().collect(),
                });
            }
            for d in nonempty_subsets(&left_candidates.unwrap_or_default()) {
                if !is_dex_image(&d) {
                    continue;
                }
                let mut pre = rest.clone();
                for (kappa, count) in k.iter() {
                    for delta in &d {
                        pre.insert(
                            PlaceExpr::Choice(Rc::new(delta.clone()), Rc::new(kappa.clone())),
                            count,
                        );
                    }
                }
                let new_rule = NetRule { pre, action: rule.action.clone(), post: rule.post.clone() };
                if rules.insert(new_rule.clone()) {
                    work.push(new_rule);
                }
            }
        }
    }

    rules
        .into_iter()
        .filter(|rule| rule.pre.support().all(|p| places.contains(p)))
        .collect()
}

fn nonempty_subsets(set: &BTreeSet<PlaceExpr>) -> Vec<BTreeSet<PlaceExpr>> {
    let items: Vec<&PlaceExpr> = set.iter().collect();
    assert!(items.len() <= 16, "choice summand candidate set too large");
    let mut out = Vec::new();
    for mask in 1u32..(1 << items.len()) {
        let mut s = BTreeSet::new();
        for (i, item) in items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.insert((*item).clone());
            }
        }
        out.push(s);
    }
    out
}

/// The reachable marked net of a closed term, with its place expressions.
#[derive(Clone, Debug)]
pub struct OperationalNet {
    pub net: Net,
    /// Place expression of each net place, aligned with place ids.
    pub place_exprs: Vec<PlaceExpr>,
    pub truncated: bool,
}

/// Extracts the net of `p`: type `α(p)`, initial marking `dex(p)`, and
/// exactly the places and transitions reachable within the bound.
/// Transition derivation alternates with marking exploration until closure,
/// since new markings bring new places into scope for the rules.
pub fn operational_net(p: &Term, max_markings: usize) -> Result<OperationalNet, TermError> {
    check_process_term(p)?;
    assert!(max_markings >= 1);
    let initial = set_to_marking(&dex_closed(p));
    let mut place_set: BTreeSet<PlaceExpr> = initial.support().cloned().collect();
    let mut truncated;
    let mut fired: BTreeSet<NetRule>;
    let mut markings: BTreeSet<Multiset<PlaceExpr>>;

    loop {
        let rules = derive_transitions(&place_set);
        truncated = false;
        fired = BTreeSet::new();
        markings = [initial.clone()].into_iter().collect();
        let mut layer: Vec<Multiset<PlaceExpr>> = vec![initial.clone()];
        while !layer.is_empty() {
            let mut discovered: BTreeSet<Multiset<PlaceExpr>> = BTreeSet::new();
            for m in &layer {
                for rule in &rules {
                    if rule.pre.leq(m) {
                        fired.insert(rule.clone());
                        let m2 = m
                            .checked_sub(&rule.pre)
                            .expect("enabled rule fires")
                            .sum(&rule.post);
                        if !markings.contains(&m2) {
                            discovered.insert(m2);
                        }
                    }
                }
            }
            let mut next = Vec::new();
            for m2 in discovered {
                if markings.len() >= max_markings {
                    truncated = true;
                    break;
                }
                markings.insert(m2.clone());
                next.push(m2);
            }
            layer = next;
        }
        let mut grown = false;
        for rule in &fired {
            for pl in rule.pre.support().chain(rule.post.support()) {
                if place_set.insert(pl.clone()) {
                    grown = true;
                }
            }
        }
        for m in &markings {
            for pl in m.support() {
                if place_set.insert(pl.clone()) {
                    grown = true;
                }
            }
        }
        if !grown {
            break;
        }
    }

    let mut net = Net::new(alphabet(p));
    let mut ids = std::collections::BTreeMap::new();
    let mut place_exprs = Vec::new();
    for pl in &place_set {
        let id = net.add_place(pl.pretty()).expect("place names are distinct");
        ids.insert(pl.clone(), id);
        place_exprs.push(pl.clone());
    }
    for (i, rule) in fired.iter().enumerate() {
        net.add_transition(
            format!("t{i}"),
            rule.action.clone(),
            rule.pre.map(|pl| ids[pl]),
            rule.post.map(|pl| ids[pl]),
        )
        .expect("derived transition is well-formed");
    }
    net.set_initial(initial.map(|pl| ids[pl])).expect("initial places exist");
    Ok(OperationalNet { net, place_exprs, truncated })
}
