//! Olderog strong bisimilarity and place bisimilarity: both are structure
//! preserving bisimulations of a restricted shape induced by a place
//! relation, decided here by exhaustive search over relations.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::net::{case_graph, is_safe, Marking, Net, PlaceId, Safety};

use super::{
    matchings, project1, project2, sub_linkings_projecting, Certificate, Link, Linking,
    Refutation, Verdict,
};

/// Relations over more atoms than this flip the checkers to `unknown`.
/// These checkers exist for hierarchy validation at desk scale, not for
/// large inputs.
pub const DEFAULT_ATOM_THRESHOLD: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrongCheckError {
    #[error("strong bisimilarity is defined on safe nets; net {side} is unsafe")]
    NotSafe { side: u8 },
}

/// Whether some multiset linking over `relation` has exactly the given
/// projections. Decided by backtracking over the tokens of `m1`.
fn linking_over_exists(relation: &BTreeSet<Link>, m1: &Marking, m2: &Marking) -> bool {
    if m1.total() != m2.total() {
        return false;
    }
    fn go(relation: &BTreeSet<Link>, mut m1: Marking, m2: Marking) -> bool {
        let first = match m1.support().next() {
            None => return true,
            Some(s) => *s,
        };
        m1 = m1.checked_sub(&Marking::singleton(first)).unwrap();
        for s2 in m2.support().copied().collect::<Vec<_>>() {
            if relation.contains(&(first, s2)) {
                let m2 = m2.checked_sub(&Marking::singleton(s2)).unwrap();
                if go(relation, m1.clone(), m2) {
                    return true;
                }
            }
        }
        false
    }
    go(relation, m1.clone(), m2.clone())
}

/// Iterates over all subsets of `atoms` (as bitmasks) that relate every
/// token of both initial markings, the minimal requirement for containing
/// an initial linking.
fn candidate_relations<'a>(
    atoms: &'a [Link],
    m01: &'a Marking,
    m02: &'a Marking,
) -> impl Iterator<Item = BTreeSet<Link>> + 'a {
    let n = atoms.len();
    (0u64..(1u64 << n)).filter_map(move |mask| {
        let rel: BTreeSet<Link> = atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, l)| *l)
            .collect();
        if linking_over_exists(&rel, m01, m02) {
            Some(rel)
        } else {
            None
        }
    })
}

/// Olderog strong bisimilarity: some place relation `B` between safe nets
/// whose induced linking set `B̂` (the plain linkings with reachable
/// projections saturated by `B`) is an sp-bisimulation containing an
/// initial linking.
///
/// Searches all relations over the reachable-place atoms; above the
/// threshold the verdict is `unknown`. Note this relation is reflexive and
/// symmetric but not transitive.
pub fn strong_check(
    n1: &Net,
    n2: &Net,
    max_markings: usize,
    atom_threshold: usize,
) -> Result<Verdict, StrongCheckError> {
    match is_safe(n1, max_markings) {
        Safety::Safe => {}
        Safety::Unsafe(_) => return Err(StrongCheckError::NotSafe { side: 1 }),
        Safety::Unknown => {
            return Ok(Verdict::Unknown { bound: "max-markings", value: max_markings as u64 })
        }
    }
    match is_safe(n2, max_markings) {
        Safety::Safe => {}
        Safety::Unsafe(_) => return Err(StrongCheckError::NotSafe { side: 2 }),
        Safety::Unknown => {
            return Ok(Verdict::Unknown { bound: "max-markings", value: max_markings as u64 })
        }
    }
    if n1.alphabet() != n2.alphabet() {
        return Ok(Verdict::No(Refutation::AlphabetMismatch));
    }
    let cg1 = case_graph(n1, max_markings);
    let cg2 = case_graph(n2, max_markings);
    if cg1.truncated || cg2.truncated {
        return Ok(Verdict::Unknown { bound: "max-markings", value: max_markings as u64 });
    }
    let reach1 = cg1.node_set();
    let reach2 = cg2.node_set();
    let places1: BTreeSet<PlaceId> = reach1.iter().flat_map(|m| m.support().copied()).collect();
    let places2: BTreeSet<PlaceId> = reach2.iter().flat_map(|m| m.support().copied()).collect();
    let atoms: Vec<Link> = places1
        .iter()
        .flat_map(|&a| places2.iter().map(move |&b| (a, b)))
        .collect();
    if atoms.len() > atom_threshold {
        return Ok(Verdict::Unknown { bound: "relation-atoms", value: atoms.len() as u64 });
    }

    for rel in candidate_relations(&atoms, n1.initial_marking(), n2.initial_marking()) {
        if strong_relation_works(n1, n2, &reach1, &reach2, &rel) {
            return Ok(Verdict::Yes(Certificate::PlaceRelation(rel)));
        }
    }
    Ok(Verdict::No(Refutation::NoPlaceRelation { atoms: atoms.len() }))
}

/// Builds `B̂` and checks it is an sp-bisimulation containing an initial
/// linking. Saturation pins each member: the linking over a pair of
/// reachable markings, if any, is exactly `B ∩ (M₁ × M₂)`.
fn strong_relation_works(
    n1: &Net,
    n2: &Net,
    reach1: &BTreeSet<Marking>,
    reach2: &BTreeSet<Marking>,
    rel: &BTreeSet<Link>,
) -> bool {
    let mut induced: BTreeMap<(Marking, Marking), Linking> = BTreeMap::new();
    for m1 in reach1 {
        for m2 in reach2 {
            let l: Linking = rel
                .iter()
                .filter(|(a, b)| m1.contains(a) && m2.contains(b))
                .map(|&link| (link, 1))
                .collect();
            if project1(&l) == *m1 && project2(&l) == *m2 {
                induced.insert((m1.clone(), m2.clone()), l);
            }
        }
    }
    let initial_key = (n1.initial_marking().clone(), n2.initial_marking().clone());
    if !induced.contains_key(&initial_key) {
        return false;
    }
    for l in induced.values() {
        for (_, tr1) in n1.transitions() {
            for c in sub_linkings_projecting(l, 1, &tr1.pre) {
                let need = project2(&c);
                let answered = n2.transitions().any(|(_, tr2)| {
                    tr2.label == tr1.label
                        && tr2.pre == need
                        && matchings(&tr1.post, &tr2.post).into_iter().any(|cbar| {
                            let next = l.checked_sub(&c).unwrap().sum(&cbar);
                            induced.get(&(project1(&next), project2(&next))) == Some(&next)
                        })
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
                        && matchings(&tr1.post, &tr2.post).into_iter().any(|cbar| {
                            let next = l.checked_sub(&c).unwrap().sum(&cbar);
                            induced.get(&(project1(&next), project2(&next))) == Some(&next)
                        })
                });
                if !answered {
                    return false;
                }
            }
        }
    }
    true
}

/// Place bisimilarity: some place relation `B` such that the set of all
/// multiset linkings over `B` is an sp-bisimulation with an initial
/// linking. Unlike [`sp_check`](super::sp_check) this is sensitive to
/// unreachable parts of the nets, so the atoms range over all place pairs.
///
/// Whether greatest place bisimulations admit a refinement algorithm is not
/// settled here; the search is a bounded brute force over relations.
pub fn pb_check(n1: &Net, n2: &Net, atom_threshold: usize) -> Verdict {
    if n1.alphabet() != n2.alphabet() {
        return Verdict::No(Refutation::AlphabetMismatch);
    }
    let atoms: Vec<Link> = n1
        .places()
        .flat_map(|(a, _)| n2.places().map(move |(b, _)| (a, b)))
        .collect();
    if atoms.len() > atom_threshold {
        return Verdict::Unknown { bound: "relation-atoms", value: atoms.len() as u64 };
    }
    for rel in candidate_relations(&atoms, n1.initial_marking(), n2.initial_marking()) {
        if place_relation_works(n1, n2, &rel) {
            return Verdict::Yes(Certificate::PlaceRelation(rel));
        }
    }
    Verdict::No(Refutation::NoPlaceRelation { atoms: atoms.len() })
}

/// Transfer conditions for `B̄`: for every transition and every linking `c`
/// over `B` matching its preset, a same-label partner with matching
/// projections and a postset linking over `B` must exist. Every such `c` is
/// itself a member of `B̄`, and `B̄` is closed under `l - c + c̄`, so this
/// is the whole sp-bisimulation condition.
fn place_relation_works(n1: &Net, n2: &Net, rel: &BTreeSet<Link>) -> bool {
    let partners2: BTreeMap<PlaceId, Vec<PlaceId>> = group_partners(rel, true);
    let partners1: BTreeMap<PlaceId, Vec<PlaceId>> = group_partners(rel, false);
    for (_, tr1) in n1.transitions() {
        for c in linkings_over(rel, &partners2, &tr1.pre, true) {
            let need = project2(&c);
            let answered = n2.transitions().any(|(_, tr2)| {
                tr2.label == tr1.label
                    && tr2.pre == need
                    && linking_over_exists(rel, &tr1.post, &tr2.post)
            });
            if !answered {
                return false;
            }
        }
    }
    for (_, tr2) in n2.transitions() {
        for c in linkings_over(rel, &partners1, &tr2.pre, false) {
            let need = project1(&c);
            let answered = n1.transitions().any(|(_, tr1)| {
                tr1.label == tr2.label
                    && tr1.pre == need
                    && linking_over_exists(rel, &tr1.post, &tr2.post)
            });
            if !answered {
                return false;
            }
        }
    }
    true
}

fn group_partners(rel: &BTreeSet<Link>, by_first: bool) -> BTreeMap<PlaceId, Vec<PlaceId>> {
    let mut out: BTreeMap<PlaceId, Vec<PlaceId>> = BTreeMap::new();
    for &(a, b) in rel {
        if by_first {
            out.entry(a).or_default().push(b);
        } else {
            out.entry(b).or_default().push(a);
        }
    }
    out
}

/// All linkings over `rel` whose projection on the given side equals
/// `target`.
fn linkings_over(
    rel: &BTreeSet<Link>,
    partners: &BTreeMap<PlaceId, Vec<PlaceId>>,
    target: &Marking,
    side_is_first: bool,
) -> Vec<Linking> {
    let _ = rel;
    let mut out: Vec<Linking> = vec![Linking::new()];
    for (s, w) in target.iter() {
        let opts = match partners.get(s) {
            Some(v) => v,
            None => return Vec::new(),
        };
        // Multisets of size w over the partner places.
        let combos = multichoose(opts, w);
        let mut next = Vec::with_capacity(out.len() * combos.len());
        for base in &out {
            for combo in &combos {
                let mut l = base.clone();
                for p in combo {
                    let link = if side_is_first { (*s, *p) } else { (*p, *s) };
                    l.insert(link, 1);
                }
                next.push(l);
            }
        }
        out = next;
    }
    out
}

fn multichoose(items: &[PlaceId], k: u64) -> Vec<Vec<PlaceId>> {
    let mut out = Vec::new();
    fn rec(items: &[PlaceId], k: u64, start: usize, acc: &mut Vec<PlaceId>, out: &mut Vec<Vec<PlaceId>>) {
        if k == 0 {
            out.push(acc.clone());
            return;
        }
        for i in start..items.len() {
            acc.push(items[i]);
            rec(items, k - 1, i, acc, out);
            acc.pop();
        }
    }
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}
