//! The equivalence-checker suite: structure preserving bisimilarity in its
//! linking and process-based formulations, Olderog strong bisimilarity,
//! place bisimilarity, bounded causal equivalence and bounded fully
//! concurrent bisimilarity.

mod causal;
mod games;
mod sp;
mod strong;

pub use causal::caus_check_bounded;
pub use games::{fcb_check_bounded, sp_check_process_based};
pub use sp::{sp_check, validate_sp_bisimulation};
pub use strong::{pb_check, strong_check, StrongCheckError, DEFAULT_ATOM_THRESHOLD};

use std::ops::ControlFlow;

use crate::multiset::Multiset;
use crate::net::{Marking, Net, PlaceId};

/// A link: a pair of places of the two nets under comparison.
pub type Link = (PlaceId, PlaceId);

/// A linking: a multiset of links, i.e. a pair of markings together with a
/// bijection between their tokens.
pub type Linking = Multiset<Link>;

pub fn project1(l: &Linking) -> Marking {
    l.map(|(a, _)| *a)
}

pub fn project2(l: &Linking) -> Marking {
    l.map(|(_, b)| *b)
}

/// Outcome of a check, with a checkable witness on both definite sides.
#[derive(Clone, Debug)]
pub enum Verdict {
    Yes(Certificate),
    No(Refutation),
    Unknown { bound: &'static str, value: u64 },
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Verdict::No(_))
    }

    pub fn is_certain(&self) -> bool {
        !matches!(self, Verdict::Unknown { .. })
    }

    /// 0 = yes, 1 = no, 2 = unknown.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Yes(_) => 0,
            Verdict::No(_) => 1,
            Verdict::Unknown { .. } => 2,
        }
    }

    pub fn answer(&self) -> &'static str {
        match self {
            Verdict::Yes(_) => "yes",
            Verdict::No(_) => "no",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Certificate {
    /// A set of linkings forming a structure preserving bisimulation that
    /// contains an initial linking. Replayable through
    /// [`validate_sp_bisimulation`].
    SpBisimulation(std::collections::BTreeSet<Linking>),
    /// A place relation whose induced linking set is the bisimulation.
    PlaceRelation(std::collections::BTreeSet<Link>),
    /// The bounded game was explored exhaustively and the defender survives.
    ExhaustedGame { states: usize },
    /// Equal canonical causal-net sets.
    MatchingCausalNets { classes: usize },
}

#[derive(Clone, Debug)]
pub enum Refutation {
    /// The type alphabets differ.
    AlphabetMismatch,
    /// Every initial linking is refuted; a sample winning challenge for the
    /// first one.
    SpAttack { initials: u64, sample: Option<AttackStep> },
    /// The attacker wins the bounded game from every start.
    GameAttack { starts: u64 },
    /// A causal net of one net that the other does not have.
    WitnessCausalNet { side: u8, code: String },
    /// No place relation up to the atom threshold induces a bisimulation.
    NoPlaceRelation { atoms: usize },
}

/// One unanswerable challenge: the attacker fires `transition` on `side`
/// moving the tokens of the sub-linking `challenge`.
#[derive(Clone, Debug)]
pub struct AttackStep {
    pub side: u8,
    pub transition: String,
    pub challenge: Linking,
}

/// Streams every linking with the given projections, in lexicographic
/// order. The closure returns `Break` to stop early.
pub fn for_each_matching(
    m1: &Marking,
    m2: &Marking,
    f: &mut impl FnMut(Linking) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if m1.total() != m2.total() {
        return ControlFlow::Continue(());
    }
    let entries: Vec<(PlaceId, u64)> = m1.iter().map(|(p, n)| (*p, n)).collect();
    let mut acc: Linking = Multiset::new();
    matching_rec(&entries, m2.clone(), &mut acc, f)
}

fn matching_rec(
    entries: &[(PlaceId, u64)],
    remaining: Marking,
    acc: &mut Linking,
    f: &mut impl FnMut(Linking) -> ControlFlow<()>,
) -> ControlFlow<()> {
    match entries.split_first() {
        None => f(acc.clone()),
        Some((&(s1, k), rest)) => {
            for c in remaining.sub_multisets() {
                if c.total() != k {
                    continue;
                }
                let next = remaining.checked_sub(&c).unwrap();
                let mut added: Linking = Multiset::new();
                for (s2, w) in c.iter() {
                    added.insert((s1, *s2), w);
                }
                let saved = acc.clone();
                *acc = acc.sum(&added);
                matching_rec(rest, next, acc, f)?;
                *acc = saved;
            }
            ControlFlow::Continue(())
        }
    }
}

/// All linkings with the given projections.
pub fn matchings(m1: &Marking, m2: &Marking) -> Vec<Linking> {
    let mut out = Vec::new();
    let _ = for_each_matching(m1, m2, &mut |l| {
        out.push(l);
        ControlFlow::Continue(())
    });
    out
}

/// All sub-linkings `c ≤ l` whose projection on `side` (1 or 2) equals
/// `target`.
pub fn sub_linkings_projecting(l: &Linking, side: u8, target: &Marking) -> Vec<Linking> {
    let proj = |link: &Link| if side == 1 { link.0 } else { link.1 };
    let mut out: Vec<Linking> = vec![Multiset::new()];
    for (s, w) in target.iter() {
        let local: Linking = l
            .iter()
            .filter(|(link, _)| proj(link) == *s)
            .map(|(link, n)| (*link, n))
            .collect();
        let options: Vec<Linking> = local
            .sub_multisets()
            .into_iter()
            .filter(|c| c.total() == w)
            .collect();
        if options.is_empty() {
            return Vec::new();
        }
        let mut next = Vec::with_capacity(out.len() * options.len());
        for base in &out {
            for opt in &options {
                next.push(base.sum(opt));
            }
        }
        out = next;
    }
    out
}

/// Renders a linking with place names for reports.
pub fn format_linking(n1: &Net, n2: &Net, l: &Linking) -> String {
    let mut parts = Vec::new();
    for ((p1, p2), w) in l.iter() {
        let entry = format!("{}~{}", n1.place(*p1).name, n2.place(*p2).name);
        if w == 1 {
            parts.push(entry);
        } else {
            parts.push(format!("{entry}:{w}"));
        }
    }
    format!("{{{}}}", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pid(n: u32) -> PlaceId {
        PlaceId(n)
    }

    #[test]
    fn matchings_of_distinct_tokens() {
        let m1: Marking = [pid(0), pid(1)].into_iter().collect();
        let m2: Marking = [pid(10), pid(11)].into_iter().collect();
        let ms = matchings(&m1, &m2);
        assert_eq!(ms.len(), 2);
    }

    #[test]
    fn matchings_collapse_duplicate_tokens() {
        let m1: Marking = [(pid(0), 2)].into_iter().collect();
        let m2: Marking = [pid(10), pid(11)].into_iter().collect();
        let ms = matchings(&m1, &m2);
        // Only one multiset of pairs: {(0,10),(0,11)}.
        assert_eq!(ms.len(), 1);
    }

    #[test]
    fn matchings_require_equal_size() {
        let m1: Marking = [pid(0)].into_iter().collect();
        let m2: Marking = [pid(10), pid(11)].into_iter().collect();
        assert!(matchings(&m1, &m2).is_empty());
    }

    #[test]
    fn sub_linkings_by_projection() {
        let l: Linking = [((pid(0), pid(10)), 1), ((pid(0), pid(11)), 1), ((pid(1), pid(12)), 1)]
            .into_iter()
            .collect();
        let target: Marking = [pid(0)].into_iter().collect();
        let subs = sub_linkings_projecting(&l, 1, &target);
        assert_eq!(subs.len(), 2);
        let target2: Marking = [pid(12)].into_iter().collect();
        let subs2 = sub_linkings_projecting(&l, 2, &target2);
        assert_eq!(subs2.len(), 1);
    }
}
