//! CCSP abstract syntax: typed process terms with explicit alphabets,
//! relational renaming and guarded mutual recursion.

mod parse;

pub use parse::{parse_term, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::net::{Action, Alphabet};

/// A relational renaming `R ⊆ Act × Act`. An action may be renamed into
/// several actions, or dropped entirely.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Renaming {
    pairs: BTreeSet<(Action, Action)>,
}

impl Renaming {
    pub fn new(pairs: impl IntoIterator<Item = (Action, Action)>) -> Self {
        Renaming { pairs: pairs.into_iter().collect() }
    }

    /// The identity renaming on `alphabet`.
    pub fn identity(alphabet: &Alphabet) -> Self {
        Renaming { pairs: alphabet.iter().map(|a| (a.clone(), a.clone())).collect() }
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(Action, Action)> {
        self.pairs.iter()
    }

    pub fn targets<'a>(&'a self, a: &'a str) -> impl Iterator<Item = &'a Action> + 'a {
        self.pairs.iter().filter(move |(x, _)| x == a).map(|(_, y)| y)
    }

    /// `R(A) = {b | ∃a ∈ A: (a,b) ∈ R}`.
    pub fn image(&self, alphabet: &Alphabet) -> Alphabet {
        self.pairs
            .iter()
            .filter(|(a, _)| alphabet.contains(a))
            .map(|(_, b)| b.clone())
            .collect()
    }
}

impl fmt::Debug for Renaming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{{")?;
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}->{b}")?;
        }
        write!(f, "}}")
    }
}

/// A recursion variable: a name paired with an alphabet. Two variables with
/// the same name but different alphabets are distinct.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var {
    pub name: String,
    pub alphabet: Alphabet,
}

/// A recursive specification: a set of equations `{Y_B = S_{Y_B}}` whose
/// bodies must have alphabet `B` (checked by [`check_well_typed`]).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RecSpec {
    pub equations: BTreeMap<Var, Term>,
}

impl RecSpec {
    pub fn binds(&self, var: &Var) -> bool {
        self.equations.contains_key(var)
    }

    pub fn body(&self, var: &Var) -> Option<&Term> {
        self.equations.get(var)
    }
}

/// A CCSP term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    /// `0_A`: inaction with alphabet `A`.
    Inaction(Alphabet),
    /// `aP`: action prefix.
    Prefix(Action, Rc<Term>),
    /// `P + Q`: choice.
    Choice(Rc<Term>, Rc<Term>),
    /// `P || Q`: partially synchronous parallel composition.
    Parallel(Rc<Term>, Rc<Term>),
    /// `R(P)`: relational renaming.
    Rename(Renaming, Rc<Term>),
    /// A variable occurrence `X_A`.
    Var(Var),
    /// `⟨X_A | S⟩`: the `X_A`-component of a solution of `S`.
    Rec(Var, Rc<RecSpec>),
}

impl Term {
    pub fn prefix(a: impl Into<Action>, p: Term) -> Term {
        Term::Prefix(a.into(), Rc::new(p))
    }

    pub fn choice(p: Term, q: Term) -> Term {
        Term::Choice(Rc::new(p), Rc::new(q))
    }

    pub fn parallel(p: Term, q: Term) -> Term {
        Term::Parallel(Rc::new(p), Rc::new(q))
    }

    pub fn rename(r: Renaming, p: Term) -> Term {
        Term::Rename(r, Rc::new(p))
    }
}

/// The inductively defined alphabet `α(P)`.
pub fn alphabet(t: &Term) -> Alphabet {
    match t {
        Term::Inaction(a) => a.clone(),
        Term::Prefix(a, p) => {
            let mut al = alphabet(p);
            al.insert(a.clone());
            al
        }
        Term::Choice(p, q) | Term::Parallel(p, q) => {
            let mut al = alphabet(p);
            al.extend(alphabet(q));
            al
        }
        Term::Rename(r, p) => r.image(&alphabet(p)),
        Term::Var(v) => v.alphabet.clone(),
        Term::Rec(v, _) => v.alphabet.clone(),
    }
}

/// The free variables of a term.
pub fn free_vars(t: &Term) -> BTreeSet<Var> {
    match t {
        Term::Inaction(_) => BTreeSet::new(),
        Term::Prefix(_, p) | Term::Rename(_, p) => free_vars(p),
        Term::Choice(p, q) | Term::Parallel(p, q) => {
            let mut out = free_vars(p);
            out.extend(free_vars(q));
            out
        }
        Term::Var(v) => [v.clone()].into_iter().collect(),
        Term::Rec(v, spec) => {
            let mut out: BTreeSet<Var> = [v.clone()].into_iter().collect();
            for body in spec.equations.values() {
                out.extend(free_vars(body));
            }
            for bound in spec.equations.keys() {
                out.remove(bound);
            }
            out
        }
    }
}

pub fn is_closed(t: &Term) -> bool {
    free_vars(t).is_empty()
}

/// A well-typedness violation, pinpointing the offending subterm.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeViolation {
    #[error("prefix action `{action}` is not in the alphabet of `{subterm}`")]
    PrefixOutsideAlphabet { action: Action, subterm: String },
    #[error("choice `{subterm}` has mismatched alphabets {left:?} vs {right:?}")]
    ChoiceAlphabetMismatch { subterm: String, left: Vec<Action>, right: Vec<Action> },
    #[error("equation for `{var}` has body alphabet {body:?} instead of {expected:?}")]
    SpecAlphabetMismatch { var: String, body: Vec<Action>, expected: Vec<Action> },
}

/// Checks that every subterm `aP` has `a ∈ α(P)`, every `P+Q` has
/// `α(P) = α(Q)`, and every recursive specification is syntactically
/// correct (`α(S_{Y_B}) = B`).
pub fn check_well_typed(t: &Term) -> Result<(), TypeViolation> {
    match t {
        Term::Inaction(_) | Term::Var(_) => Ok(()),
        Term::Prefix(a, p) => {
            if !alphabet(p).contains(a) {
                return Err(TypeViolation::PrefixOutsideAlphabet {
                    action: a.clone(),
                    subterm: pretty(p),
                });
            }
            check_well_typed(p)
        }
        Term::Choice(p, q) => {
            let (la, ra) = (alphabet(p), alphabet(q));
            if la != ra {
                return Err(TypeViolation::ChoiceAlphabetMismatch {
                    subterm: pretty(t),
                    left: la.into_iter().collect(),
                    right: ra.into_iter().collect(),
                });
            }
            check_well_typed(p)?;
            check_well_typed(q)
        }
        Term::Parallel(p, q) => {
            check_well_typed(p)?;
            check_well_typed(q)
        }
        Term::Rename(_, p) => check_well_typed(p),
        Term::Rec(_, spec) => {
            for (var, body) in &spec.equations {
                let ba = alphabet(body);
                if ba != var.alphabet {
                    return Err(TypeViolation::SpecAlphabetMismatch {
                        var: var.name.clone(),
                        body: ba.into_iter().collect(),
                        expected: var.alphabet.iter().cloned().collect(),
                    });
                }
                check_well_typed(body)?;
            }
            Ok(())
        }
    }
}

/// A guardedness violation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unguarded occurrence of `{var}` in the equation for `{equation}`")]
pub struct GuardViolation {
    pub var: String,
    pub equation: String,
}

/// Checks that in every recursive specification, each occurrence of a bound
/// variable in each body lies beneath an action prefix of that body.
pub fn check_guarded(t: &Term) -> Result<(), GuardViolation> {
    fn scan_body(
        body: &Term,
        bound: &BTreeSet<Var>,
        equation: &str,
        guarded: bool,
    ) -> Result<(), GuardViolation> {
        match body {
            Term::Inaction(_) => Ok(()),
            Term::Prefix(_, p) => scan_body(p, bound, equation, true),
            Term::Choice(p, q) | Term::Parallel(p, q) => {
                scan_body(p, bound, equation, guarded)?;
                scan_body(q, bound, equation, guarded)
            }
            Term::Rename(_, p) => scan_body(p, bound, equation, guarded),
            Term::Var(v) => {
                if bound.contains(v) && !guarded {
                    Err(GuardViolation { var: v.name.clone(), equation: equation.to_string() })
                } else {
                    Ok(())
                }
            }
            Term::Rec(_, spec) => {
                // Bound variables of the nested spec are renamed apart at
                // parse time, so outer variables keep their identity here.
                for (var, b) in &spec.equations {
                    scan_body(b, bound, equation, guarded)?;
                    let inner: BTreeSet<Var> = spec.equations.keys().cloned().collect();
                    scan_body(b, &inner, &var.name, false)?;
                }
                Ok(())
            }
        }
    }

    match t {
        Term::Inaction(_) | Term::Var(_) => Ok(()),
        Term::Prefix(_, p) | Term::Rename(_, p) => check_guarded(p),
        Term::Choice(p, q) | Term::Parallel(p, q) => {
            check_guarded(p)?;
            check_guarded(q)
        }
        Term::Rec(_, spec) => {
            let bound: BTreeSet<Var> = spec.equations.keys().cloned().collect();
            for (var, body) in &spec.equations {
                scan_body(body, &bound, &var.name, false)?;
                check_guarded(body)?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("variable `{0}` is not bound by the specification")]
    Unbound(String),
    #[error("variable `{0}` is bound with a different alphabet")]
    AlphabetMismatch(String),
}

/// `⟨E|S⟩`: substitutes `rec⟨Y_B|S⟩` for every free `Y_B ∈ V_S` in `e`.
///
/// Every free variable of `e` must be bound by `spec` with a matching
/// alphabet. Capture cannot occur because bound variables of nested
/// specifications are renamed apart at parse time; nested specs that bind
/// one of the substituted variables shadow it.
pub fn subst_rec(e: &Term, spec: &Rc<RecSpec>) -> Result<Term, SubstError> {
    for v in free_vars(e) {
        if !spec.binds(&v) {
            if spec.equations.keys().any(|w| w.name == v.name) {
                return Err(SubstError::AlphabetMismatch(v.name));
            }
            return Err(SubstError::Unbound(v.name));
        }
    }
    Ok(subst(e, spec))
}

fn subst(e: &Term, spec: &Rc<RecSpec>) -> Term {
    match e {
        Term::Inaction(_) => e.clone(),
        Term::Prefix(a, p) => Term::Prefix(a.clone(), Rc::new(subst(p, spec))),
        Term::Choice(p, q) => Term::Choice(Rc::new(subst(p, spec)), Rc::new(subst(q, spec))),
        Term::Parallel(p, q) => Term::Parallel(Rc::new(subst(p, spec)), Rc::new(subst(q, spec))),
        Term::Rename(r, p) => Term::Rename(r.clone(), Rc::new(subst(p, spec))),
        Term::Var(v) => {
            if spec.binds(v) {
                Term::Rec(v.clone(), Rc::clone(spec))
            } else {
                e.clone()
            }
        }
        Term::Rec(v, inner) => {
            if inner.equations.keys().any(|w| spec.binds(w)) {
                // Shadowed: substitute only in bodies for non-shadowed vars.
                let filtered: BTreeMap<Var, Term> = spec
                    .equations
                    .iter()
                    .filter(|(w, _)| !inner.binds(w))
                    .map(|(w, b)| (w.clone(), b.clone()))
                    .collect();
                if filtered.is_empty() {
                    return e.clone();
                }
                let sub = Rc::new(RecSpec { equations: filtered });
                let equations = inner
                    .equations
                    .iter()
                    .map(|(w, b)| (w.clone(), subst(b, &sub)))
                    .collect();
                Term::Rec(v.clone(), Rc::new(RecSpec { equations }))
            } else {
                let equations = inner
                    .equations
                    .iter()
                    .map(|(w, b)| (w.clone(), subst(b, spec)))
                    .collect();
                Term::Rec(v.clone(), Rc::new(RecSpec { equations }))
            }
        }
    }
}

/// One unfolding of `⟨X_A|S⟩` into `⟨S_{X_A}|S⟩`.
pub fn unfold(var: &Var, spec: &Rc<RecSpec>) -> Result<Term, SubstError> {
    let body = spec.body(var).ok_or_else(|| SubstError::Unbound(var.name.clone()))?;
    subst_rec(body, spec)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("term is not closed: free variable `{0}`")]
    NotClosed(String),
    #[error(transparent)]
    IllTyped(#[from] TypeViolation),
    #[error(transparent)]
    Unguarded(#[from] GuardViolation),
}

/// The common precondition of the semantic maps: closed, well-typed,
/// guarded.
pub fn check_process_term(t: &Term) -> Result<(), TermError> {
    if let Some(v) = free_vars(t).into_iter().next() {
        return Err(TermError::NotClosed(v.name));
    }
    check_well_typed(t)?;
    check_guarded(t)?;
    Ok(())
}

fn fmt_alphabet(a: &Alphabet) -> String {
    let items: Vec<&str> = a.iter().map(|s| s.as_str()).collect();
    format!("{{{}}}", items.join(","))
}

fn fmt_renaming(r: &Renaming) -> String {
    let items: Vec<String> = r.pairs().map(|(a, b)| format!("{a}->{b}")).collect();
    format!("R{{{}}}", items.join(","))
}

fn prec(t: &Term) -> u8 {
    match t {
        Term::Parallel(..) => 0,
        Term::Choice(..) => 1,
        Term::Prefix(..) => 2,
        _ => 3,
    }
}

fn pretty_at(t: &Term, spaced: bool) -> String {
    let sep = if spaced { " " } else { "" };
    let wrap = |child: &Term, min: u8| {
        let s = pretty_at(child, spaced);
        if prec(child) < min {
            format!("({s})")
        } else {
            s
        }
    };
    match t {
        Term::Inaction(a) => format!("0{}", fmt_alphabet(a)),
        Term::Prefix(a, p) => format!("{a}.{}", wrap(p, 2)),
        Term::Choice(p, q) => format!("{}{sep}+{sep}{}", wrap(p, 1), wrap(q, 2)),
        Term::Parallel(p, q) => format!("{}{sep}||{sep}{}", wrap(p, 0), wrap(q, 1)),
        Term::Rename(r, p) => format!("{}({})", fmt_renaming(r), pretty_at(p, spaced)),
        Term::Var(v) => format!("{}{}", v.name, fmt_alphabet(&v.alphabet)),
        Term::Rec(v, spec) => {
            let eqs: Vec<String> = spec
                .equations
                .iter()
                .map(|(w, b)| {
                    format!("{}{}{sep}={sep}{}", w.name, fmt_alphabet(&w.alphabet), pretty_at(b, spaced))
                })
                .collect();
            if spaced {
                format!("rec {}{} {{ {} }}", v.name, fmt_alphabet(&v.alphabet), eqs.join("; "))
            } else {
                format!("rec{}{}{{{}}}", v.name, fmt_alphabet(&v.alphabet), eqs.join(";"))
            }
        }
    }
}

/// Human-oriented rendering; `parse(pretty(t))` is structurally `t`.
pub fn pretty(t: &Term) -> String {
    pretty_at(t, true)
}

/// Whitespace-free rendering, used for net place names.
pub fn pretty_compact(t: &Term) -> String {
    pretty_at(t, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(s: &str) -> Action {
        s.to_string()
    }

    fn alpha(items: &[&str]) -> Alphabet {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn alphabet_examples() {
        assert_eq!(alphabet(&Term::Inaction(alpha(&["a", "b"]))), alpha(&["a", "b"]));
        let t = Term::prefix("a", Term::Inaction(alpha(&["a"])));
        assert_eq!(alphabet(&t), alpha(&["a"]));
        let r = Renaming::new([(act("a"), act("x")), (act("a"), act("y"))]);
        assert_eq!(alphabet(&Term::rename(r, t)), alpha(&["x", "y"]));
    }

    #[test]
    fn well_typed_examples() {
        // a0_{a} + b0_{a,b}: alphabets {a} vs {a,b}.
        let bad = Term::choice(
            Term::prefix("a", Term::Inaction(alpha(&["a"]))),
            Term::prefix("b", Term::Inaction(alpha(&["a", "b"]))),
        );
        assert!(matches!(
            check_well_typed(&bad),
            Err(TypeViolation::ChoiceAlphabetMismatch { .. })
        ));

        let good = Term::choice(
            Term::prefix("a", Term::Inaction(alpha(&["a", "b"]))),
            Term::prefix("b", Term::Inaction(alpha(&["a", "b"]))),
        );
        assert!(check_well_typed(&good).is_ok());

        let bad_prefix = Term::prefix("b", Term::Inaction(alpha(&["a"])));
        assert!(matches!(
            check_well_typed(&bad_prefix),
            Err(TypeViolation::PrefixOutsideAlphabet { .. })
        ));
    }

    fn rec1(name: &str, a: Alphabet, body: Term) -> Term {
        let v = Var { name: name.to_string(), alphabet: a };
        let spec = RecSpec { equations: [(v.clone(), body)].into_iter().collect() };
        Term::Rec(v, Rc::new(spec))
    }

    #[test]
    fn guardedness_examples() {
        let v = Var { name: "X".to_string(), alphabet: alpha(&["a"]) };
        let guarded = rec1("X", alpha(&["a"]), Term::prefix("a", Term::Var(v.clone())));
        assert!(check_guarded(&guarded).is_ok());

        let unguarded = rec1("X", alpha(&["a"]), Term::Var(v.clone()));
        assert!(check_guarded(&unguarded).is_err());

        let vab = Var { name: "X".to_string(), alphabet: alpha(&["a", "b"]) };
        let two_way = rec1(
            "X",
            alpha(&["a", "b"]),
            Term::choice(
                Term::prefix("a", Term::Var(vab.clone())),
                Term::prefix("b", Term::Var(vab.clone())),
            ),
        );
        assert!(check_guarded(&two_way).is_ok());
        assert!(check_well_typed(&two_way).is_ok());
    }

    #[test]
    fn subst_examples() {
        let v = Var { name: "X".to_string(), alphabet: alpha(&["a"]) };
        let spec = Rc::new(RecSpec {
            equations: [(v.clone(), Term::prefix("a", Term::Var(v.clone())))]
                .into_iter()
                .collect(),
        });

        // ⟨a.X | X=a.X⟩ → a.rec⟨X|X=a.X⟩
        let e = Term::prefix("a", Term::Var(v.clone()));
        let expected = Term::prefix("a", Term::Rec(v.clone(), Rc::clone(&spec)));
        assert_eq!(subst_rec(&e, &spec).unwrap(), expected);

        // No occurrence: unchanged.
        let zero = Term::Inaction(alpha(&["a"]));
        assert_eq!(subst_rec(&zero, &spec).unwrap(), zero);

        // ⟨X || X | X=a.X⟩ → rec⟨X|..⟩ || rec⟨X|..⟩
        let par = Term::parallel(Term::Var(v.clone()), Term::Var(v.clone()));
        let rec = Term::Rec(v.clone(), Rc::clone(&spec));
        assert_eq!(
            subst_rec(&par, &spec).unwrap(),
            Term::parallel(rec.clone(), rec.clone())
        );

        // Unbound and alphabet-mismatched variables are rejected.
        let w = Var { name: "Y".to_string(), alphabet: alpha(&["a"]) };
        assert_eq!(
            subst_rec(&Term::Var(w), &spec),
            Err(SubstError::Unbound("Y".to_string()))
        );
        let xb = Var { name: "X".to_string(), alphabet: alpha(&["b"]) };
        assert_eq!(
            subst_rec(&Term::Var(xb), &spec),
            Err(SubstError::AlphabetMismatch("X".to_string()))
        );
    }

    #[test]
    fn alphabet_preserved_by_substitution() {
        let v = Var { name: "X".to_string(), alphabet: alpha(&["a", "b"]) };
        let spec = Rc::new(RecSpec {
            equations: [(
                v.clone(),
                Term::choice(
                    Term::prefix("a", Term::Var(v.clone())),
                    Term::prefix("b", Term::Var(v.clone())),
                ),
            )]
            .into_iter()
            .collect(),
        });
        let e = Term::prefix("a", Term::Var(v.clone()));
        assert_eq!(alphabet(&subst_rec(&e, &spec).unwrap()), alphabet(&e));
    }
}
