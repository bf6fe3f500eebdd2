//! The denotational net operators and the structural interpretation of
//! closed terms. Each operator is defined up to isomorphism; fresh ids are
//! derived deterministically from the operator and the operand ids, so
//! repeated builds are bit-identical.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ccsp::{check_process_term, Renaming, Term, TermError};
use crate::multiset::Multiset;
use crate::net::{Action, Alphabet, Marking, Net, PlaceId};
use crate::opsem::operational_net;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DenoteError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("choice requires nonempty plain-set initial markings")]
    ChoiceInitialNotPlainSet,
}

/// `0_A`: a single marked place, no transitions.
pub fn den_zero(alphabet: Alphabet) -> Net {
    let mut net = Net::new(alphabet);
    let s = net.add_place("0").unwrap();
    net.mark(s, 1);
    net
}

fn copy_renamed(
    net: &Net,
    target: &mut Net,
    prefix: &str,
) -> (BTreeMap<PlaceId, PlaceId>, Vec<String>) {
    let mut place_map = BTreeMap::new();
    let mut trans_names = Vec::new();
    for (id, place) in net.places() {
        let new = target.add_place(format!("{prefix}{}", place.name)).unwrap();
        place_map.insert(id, new);
    }
    for (_, tr) in net.transitions() {
        trans_names.push(format!("{prefix}{}", tr.name));
    }
    (place_map, trans_names)
}

/// `a_N N`: a fresh marked place and a fresh `a`-transition whose postset is
/// the old initial marking. The type grows to `A ∪ {a}`.
pub fn den_prefix(action: impl Into<Action>, net: &Net) -> Net {
    let action = action.into();
    let mut alphabet = net.alphabet().clone();
    alphabet.insert(action.clone());
    let mut out = Net::new(alphabet);
    let (place_map, _) = copy_renamed(net, &mut out, ".");
    for (_, tr) in net.transitions() {
        out.add_transition(
            format!(".{}", tr.name),
            tr.label.clone(),
            tr.pre.map(|p| place_map[p]),
            tr.post.map(|p| place_map[p]),
        )
        .unwrap();
    }
    let s0 = out.add_place(format!("@pre({action})")).unwrap();
    let old_initial: Marking = net.initial_marking().map(|p| place_map[p]);
    out.add_transition(
        format!("@do({action})"),
        action,
        Multiset::singleton(s0),
        old_initial,
    )
    .unwrap();
    out.set_initial(Multiset::singleton(s0)).unwrap();
    out
}

/// `R_N(N)`: same places and marking; one transition copy `t_b` per
/// `(ℓ(t), b) ∈ R`. The type becomes `R(A)`.
pub fn den_rename(renaming: &Renaming, net: &Net) -> Net {
    let alphabet = renaming.image(net.alphabet());
    let mut out = Net::new(alphabet);
    let mut place_map = BTreeMap::new();
    for (id, place) in net.places() {
        let new = out.add_place(place.name.clone()).unwrap();
        place_map.insert(id, new);
    }
    for (_, tr) in net.transitions() {
        for b in renaming.targets(&tr.label) {
            out.add_transition(
                format!("{}@{b}", tr.name),
                b.clone(),
                tr.pre.map(|p| place_map[p]),
                tr.post.map(|p| place_map[p]),
            )
            .unwrap();
        }
    }
    out.set_initial(net.initial_marking().map(|p| place_map[p])).unwrap();
    out
}

/// `N₁ ‖_N N₂`: disjoint union, dropping all transitions labelled in
/// `A₁ ∩ A₂` and fusing matching pairs with summed pre- and postsets.
pub fn den_par(n1: &Net, n2: &Net) -> Net {
    let sync: Alphabet =
        n1.alphabet().intersection(n2.alphabet()).cloned().collect();
    let alphabet: Alphabet = n1.alphabet().union(n2.alphabet()).cloned().collect();
    let mut out = Net::new(alphabet);
    let (map1, _) = copy_renamed(n1, &mut out, "l.");
    let (map2, _) = copy_renamed(n2, &mut out, "r.");
    for (_, tr) in n1.transitions() {
        if !sync.contains(&tr.label) {
            out.add_transition(
                format!("l.{}", tr.name),
                tr.label.clone(),
                tr.pre.map(|p| map1[p]),
                tr.post.map(|p| map1[p]),
            )
            .unwrap();
        }
    }
    for (_, tr) in n2.transitions() {
        if !sync.contains(&tr.label) {
            out.add_transition(
                format!("r.{}", tr.name),
                tr.label.clone(),
                tr.pre.map(|p| map2[p]),
                tr.post.map(|p| map2[p]),
            )
            .unwrap();
        }
    }
    for (_, t1) in n1.transitions() {
        if !sync.contains(&t1.label) {
            continue;
        }
        for (_, t2) in n2.transitions() {
            if t2.label == t1.label {
                out.add_transition(
                    format!("(l.{}&r.{})", t1.name, t2.name),
                    t1.label.clone(),
                    t1.pre.map(|p| map1[p]).sum(&t2.pre.map(|p| map2[p])),
                    t1.post.map(|p| map1[p]).sum(&t2.post.map(|p| map2[p])),
                )
                .unwrap();
            }
        }
    }
    out.set_initial(
        n1.initial_marking().map(|p| map1[p]).sum(&n2.initial_marking().map(|p| map2[p])),
    )
    .unwrap();
    out
}

/// `N₁ +_N N₂`: disjoint union plus the fresh product places `M₁ × M₂`
/// (the new initial marking) and the rewired transition variants `t_i^K`
/// for every nonempty `K ≤ preset(t_i) ∩ M_i`.
pub fn den_choice(n1: &Net, n2: &Net) -> Result<Net, DenoteError> {
    for n in [n1, n2] {
        let m = n.initial_marking();
        if m.is_empty() || !m.is_set() {
            return Err(DenoteError::ChoiceInitialNotPlainSet);
        }
    }
    let alphabet: Alphabet = n1.alphabet().union(n2.alphabet()).cloned().collect();
    let mut out = Net::new(alphabet);
    let (map1, _) = copy_renamed(n1, &mut out, "l.");
    let (map2, _) = copy_renamed(n2, &mut out, "r.");

    // Fresh product places M₁ × M₂.
    let m1: Vec<PlaceId> = n1.initial_marking().support().copied().collect();
    let m2: Vec<PlaceId> = n2.initial_marking().support().copied().collect();
    let mut product: BTreeMap<(PlaceId, PlaceId), PlaceId> = BTreeMap::new();
    for &s1 in &m1 {
        for &s2 in &m2 {
            let name = format!("(l.{}&r.{})", n1.place(s1).name, n2.place(s2).name);
            product.insert((s1, s2), out.add_place(name).unwrap());
        }
    }

    // The original transitions survive the disjoint union unchanged.
    for (_, tr) in n1.transitions() {
        out.add_transition(
            format!("l.{}", tr.name),
            tr.label.clone(),
            tr.pre.map(|p| map1[p]),
            tr.post.map(|p| map1[p]),
        )
        .unwrap();
    }
    for (_, tr) in n2.transitions() {
        out.add_transition(
            format!("r.{}", tr.name),
            tr.label.clone(),
            tr.pre.map(|p| map2[p]),
            tr.post.map(|p| map2[p]),
        )
        .unwrap();
    }

    // Variants of side-1 transitions: preset(t)^K = preset(t) - K + K×M₂.
    for (_, tr) in n1.transitions() {
        let overlap = tr.pre.intersection(n1.initial_marking());
        for k in overlap.sub_multisets() {
            if k.is_empty() {
                continue;
            }
            let mut pre = tr.pre.checked_sub(&k).unwrap().map(|p| map1[p]);
            for s1 in k.support() {
                for &s2 in &m2 {
                    pre.insert(product[&(*s1, s2)], k.count(s1));
                }
            }
            let kname: Vec<String> =
                k.support().map(|p| n1.place(*p).name.clone()).collect();
            out.add_transition(
                format!("l.{}^({})", tr.name, kname.join(",")),
                tr.label.clone(),
                pre,
                tr.post.map(|p| map1[p]),
            )
            .unwrap();
        }
    }
    for (_, tr) in n2.transitions() {
        let overlap = tr.pre.intersection(n2.initial_marking());
        for k in overlap.sub_multisets() {
            if k.is_empty() {
                continue;
            }
            let mut pre = tr.pre.checked_sub(&k).unwrap().map(|p| map2[p]);
            for s2 in k.support() {
                for &s1 in &m1 {
                    pre.insert(product[&(s1, *s2)], k.count(s2));
                }
            }
            let kname: Vec<String> =
                k.support().map(|p| n2.place(*p).name.clone()).collect();
            out.add_transition(
                format!("r.{}^({})", tr.name, kname.join(",")),
                tr.label.clone(),
                pre,
                tr.post.map(|p| map2[p]),
            )
            .unwrap();
        }
    }

    let initial: Marking = product.values().map(|&p| (p, 1)).collect();
    out.set_initial(initial).unwrap();
    Ok(out)
}

/// Structural denotational interpretation of a closed term. Recursive
/// subterms are interpreted by the operational semantics, which agrees with
/// its own unfolding up to identity.
pub fn denote(p: &Term, max_markings: usize) -> Result<(Net, bool), DenoteError> {
    check_process_term(p)?;
    denote_checked(p, max_markings)
}

fn denote_checked(p: &Term, max_markings: usize) -> Result<(Net, bool), DenoteError> {
    match p {
        Term::Inaction(a) => Ok((den_zero(a.clone()), false)),
        Term::Prefix(a, q) => {
            let (nq, trunc) = denote_checked(q, max_markings)?;
            Ok((den_prefix(a.clone(), &nq), trunc))
        }
        Term::Choice(l, r) => {
            let (nl, tl) = denote_checked(l, max_markings)?;
            let (nr, tr) = denote_checked(r, max_markings)?;
            Ok((den_choice(&nl, &nr)?, tl || tr))
        }
        Term::Parallel(l, r) => {
            let (nl, tl) = denote_checked(l, max_markings)?;
            let (nr, tr) = denote_checked(r, max_markings)?;
            Ok((den_par(&nl, &nr), tl || tr))
        }
        Term::Rename(ren, q) => {
            let (nq, trunc) = denote_checked(q, max_markings)?;
            Ok((den_rename(ren, &nq), trunc))
        }
        Term::Rec(..) => {
            let op = operational_net(p, max_markings)?;
            Ok((op.net, op.truncated))
        }
        Term::Var(_) => unreachable!("denote is only applied to closed terms"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccsp::parse_term;
    use crate::net::{case_graph, is_safe, Safety};

    fn alpha(items: &[&str]) -> Alphabet {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn zero_is_one_marked_place() {
        let n = den_zero(alpha(&["a"]));
        assert_eq!(n.place_count(), 1);
        assert_eq!(n.transition_count(), 0);
        assert_eq!(n.initial_marking().total(), 1);
        assert_eq!(case_graph(&n, 10).nodes.len(), 1);

        let empty = den_zero(alpha(&[]));
        assert_eq!(empty.place_count(), 1);
        assert!(empty.alphabet().is_empty());
    }

    #[test]
    fn prefix_adds_place_and_transition() {
        let n = den_prefix("a", &den_zero(alpha(&["a"])));
        assert_eq!(n.place_count(), 2);
        assert_eq!(n.transition_count(), 1);

        // Type of a_N N is A ∪ {a}.
        let typed = den_prefix("b", &den_zero(alpha(&["a"])));
        assert_eq!(typed.alphabet(), &alpha(&["a", "b"]));

        // Firing the fresh transition yields the old initial marking.
        let zero = den_zero(alpha(&["a"]));
        let n = den_prefix("a", &zero);
        let (t, _) = n.transitions().next().unwrap();
        let m2 = n.fire(n.initial_marking(), t).unwrap();
        assert_eq!(m2.total(), 1);
        let old = n.place_by_name(".0").unwrap();
        assert_eq!(m2.count(&old), 1);
    }

    #[test]
    fn rename_copies_transitions_per_target() {
        let base = den_prefix("a", &den_zero(alpha(&["a"])));
        let split = den_rename(
            &Renaming::new([("a".to_string(), "x".to_string()), ("a".to_string(), "y".to_string())]),
            &base,
        );
        assert_eq!(split.transition_count(), 2);
        assert_eq!(split.alphabet(), &alpha(&["x", "y"]));

        let dropped = den_rename(&Renaming::new([]), &base);
        assert_eq!(dropped.transition_count(), 0);
        assert!(dropped.alphabet().is_empty());

        let same = den_rename(&Renaming::identity(base.alphabet()), &base);
        assert_eq!(same.place_count(), base.place_count());
        assert_eq!(same.transition_count(), base.transition_count());
        assert_eq!(same.alphabet(), base.alphabet());
    }

    #[test]
    fn par_fuses_synchronising_transitions() {
        let a1 = den_prefix("a", &den_zero(alpha(&["a"])));
        let a2 = den_prefix("a", &den_zero(alpha(&["a"])));
        let par = den_par(&a1, &a2);
        assert_eq!(par.transition_count(), 1);
        let t = par.transitions().next().unwrap().1;
        assert_eq!(t.pre.total(), 2);

        // a ∉ A₂: kept unfused.
        let b = den_prefix("b", &den_zero(alpha(&["b"])));
        let mixed = den_par(&a1, &b);
        assert_eq!(mixed.transition_count(), 2);

        // a ∈ A₁ ∩ A₂ but no matching partner: the transition vanishes.
        let silent = den_zero(alpha(&["a"]));
        let gone = den_par(&a1, &silent);
        assert_eq!(gone.transition_count(), 0);
    }

    #[test]
    fn choice_duplicates_transitions() {
        let a1 = den_prefix("a", &den_zero(alpha(&["a"])));
        let a2 = den_prefix("a", &den_zero(alpha(&["a"])));
        let plus = den_choice(&a1, &a2).unwrap();
        // The two original a-transitions plus one variant each; from the new
        // initial marking exactly the two variants are enabled.
        let enabled = plus.enabled_at(plus.initial_marking());
        assert_eq!(enabled.len(), 2);

        // 1×1 product: exactly one fresh place.
        assert_eq!(plus.place_count(), a1.place_count() + a2.place_count() + 1);

        // A transition with preset disjoint from M_i gets no variants: K
        // ranges over nonempty sub-multisets of an empty intersection.
        let ab = den_prefix("a", &den_prefix("b", &den_zero(alpha(&["a", "b"]))));
        let variants = |net: &Net| {
            net.transitions().filter(|(_, t)| t.name.contains('^')).count()
        };
        let sum = den_choice(&ab, &den_prefix("b", &den_zero(alpha(&["a", "b"])))).unwrap();
        // Only the two initial transitions (one per side) have variants.
        assert_eq!(variants(&sum), 2);
    }

    #[test]
    fn choice_requires_plain_nonempty_markings() {
        let mut doubled = Net::new(alpha(&["a"]));
        let s = doubled.add_place("s").unwrap();
        doubled.mark(s, 2);
        let ok = den_prefix("a", &den_zero(alpha(&["a"])));
        assert_eq!(
            den_choice(&doubled, &ok),
            Err(DenoteError::ChoiceInitialNotPlainSet)
        );

        let unmarked = Net::new(alpha(&["a"]));
        assert_eq!(
            den_choice(&unmarked, &ok),
            Err(DenoteError::ChoiceInitialNotPlainSet)
        );
    }

    #[test]
    fn denote_examples() {
        let (zero, _) = denote(&parse_term("0{a}").unwrap(), 100).unwrap();
        assert_eq!(zero.place_count(), 1);
        assert_eq!(zero.transition_count(), 0);

        // The branching collapse: denotational a0+a0 keeps two transitions
        // enabled at the initial marking, the operational one has one.
        let (plus, trunc) = denote(&parse_term("a.0{a} + a.0{a}").unwrap(), 100).unwrap();
        assert!(!trunc);
        assert_eq!(plus.enabled_at(plus.initial_marking()).len(), 2);
        let op = operational_net(&parse_term("a.0{a} + a.0{a}").unwrap(), 100).unwrap();
        assert_eq!(op.net.transition_count(), 1);
    }

    #[test]
    fn denote_builds_are_deterministic() {
        let t = parse_term("R{a->x}(a.0{a}) || x.0{x} + x.0{x}").unwrap();
        let (n1, _) = denote(&t, 100).unwrap();
        let (n2, _) = denote(&t, 100).unwrap();
        assert_eq!(n1, n2);
    }

    #[test]
    fn denoted_corpus_nets_are_safe() {
        for src in [
            "a.0{a} + a.0{a}",
            "a.b.0{a,b} || b.0{b}",
            "R{a->x, a->y}(a.0{a})",
            "rec X{a} { X = a.X } || a.0{a}",
        ] {
            let (net, trunc) = denote(&parse_term(src).unwrap(), 1000).unwrap();
            assert!(!trunc);
            assert_eq!(is_safe(&net, 1000), Safety::Safe, "{src} denotation unsafe");
        }
    }

    #[test]
    fn type_algebra() {
        let na = den_prefix("a", &den_zero(alpha(&["a"])));
        let nb = den_prefix("b", &den_zero(alpha(&["b"])));
        assert_eq!(den_par(&na, &nb).alphabet(), &alpha(&["a", "b"]));
        let r = Renaming::new([("a".to_string(), "z".to_string())]);
        assert_eq!(den_rename(&r, &na).alphabet(), &alpha(&["z"]));
    }
}
