//! The rewrite engine: strategy, traces, and theory membership.
//!
//! Reduction is leftmost-outermost and position-first:
//!
//! - at each node the rules of the active set are tried in list order,
//!   and the first one whose pattern matches fires;
//! - the root is tried before any child, and children are visited left
//!   to right (for an abstraction, its body is child `0`).
//!
//! [`normalize`] iterates [`step`] under a fuel bound and returns the
//! normal form together with a [`Trace`]; running out of fuel is an
//! error, never a silently truncated result.
//!
//! Theory membership is judged on normal forms of the fold set:
//!
//! - [`is_bad`]: some fold's main argument mentions a variable bound by
//!   an enclosing cycle (the unfolding would never terminate);
//! - [`in_theory`]: not bad, and every fold's structure arguments are
//!   closed terms.

use crate::kernel::Term;
use crate::rules::{match_pattern, RuleSet};
use crate::signature::Signature;
use thiserror::Error;

/// Default step budget for normalization.
pub const DEFAULT_FUEL: usize = 1_000_000;

/// One applied rewrite step: the rule that fired and the path to the
/// redex (child indices from the root; an abstraction body is child 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub rule: &'static str,
    pub path: Vec<usize>,
}

/// The sequence of steps taken by a normalization run.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub steps: Vec<StepRecord>,
}

impl Trace {
    pub fn rule_names(&self) -> Vec<&'static str> {
        self.steps.iter().map(|s| s.rule).collect()
    }
}

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("fuel exhausted after {steps} rewrite steps; latest term: {last}")]
    FuelExhausted { steps: usize, last: Term },
}

/// Try every rule, in order, at the root of `t`.
fn step_at(sig: &Signature, rules: &RuleSet, t: &Term) -> Option<(Term, &'static str)> {
    for rule in &rules.rules {
        if let Some(pair) = rule.instantiate(sig, t) {
            if let Some(theta) = match_pattern(&pair.lhs, t) {
                let out = pair
                    .rhs
                    .subst_meta(&theta)
                    .expect("a matched rule instantiates its replacement");
                return Some((out, rule.name()));
            }
        }
    }
    None
}

/// Perform one leftmost-outermost step. Returns the rewritten term and
/// the step record, or `None` if `t` is a normal form of the rule set.
pub fn step(sig: &Signature, rules: &RuleSet, t: &Term) -> Option<(Term, StepRecord)> {
    fn go(
        sig: &Signature,
        rules: &RuleSet,
        t: &Term,
        path: &mut Vec<usize>,
    ) -> Option<(Term, StepRecord)> {
        if let Some((out, rule)) = step_at(sig, rules, t) {
            return Some((out, StepRecord { rule, path: path.clone() }));
        }
        match t {
            Term::Var(_) | Term::Lit { .. } => None,
            Term::Abs { binders, body } => {
                path.push(0);
                let r = go(sig, rules, body, path).map(|(b, rec)| {
                    (Term::Abs { binders: binders.clone(), body: Box::new(b) }, rec)
                });
                path.pop();
                r
            }
            Term::App { sym, args } => {
                for (i, a) in args.iter().enumerate() {
                    path.push(i);
                    if let Some((a2, rec)) = go(sig, rules, a, path) {
                        let mut args2 = args.clone();
                        args2[i] = a2;
                        path.pop();
                        return Some((Term::App { sym: sym.clone(), args: args2 }, rec));
                    }
                    path.pop();
                }
                None
            }
            Term::Meta { name, args } => {
                for (i, a) in args.iter().enumerate() {
                    path.push(i);
                    if let Some((a2, rec)) = go(sig, rules, a, path) {
                        let mut args2 = args.clone();
                        args2[i] = a2;
                        path.pop();
                        return Some((Term::Meta { name: name.clone(), args: args2 }, rec));
                    }
                    path.pop();
                }
                None
            }
        }
    }
    go(sig, rules, t, &mut Vec::new())
}

/// Reduce `t` to a normal form of the rule set, spending at most `fuel`
/// steps.
pub fn normalize(
    sig: &Signature,
    rules: &RuleSet,
    t: &Term,
    fuel: usize,
) -> Result<(Term, Trace), RewriteError> {
    let mut cur = t.clone();
    let mut trace = Trace::default();
    loop {
        match step(sig, rules, &cur) {
            None => return Ok((cur, trace)),
            Some((next, rec)) => {
                if trace.steps.len() >= fuel {
                    return Err(RewriteError::FuelExhausted { steps: trace.steps.len(), last: cur });
                }
                cur = next;
                trace.steps.push(rec);
            }
        }
    }
}

/// Every step available from `t`: one entry per redex position, each
/// rewritten by the first rule (in list order) that matches there. The
/// list is in leftmost-outermost order, so entry `0` is the step
/// [`step`] would take.
pub fn all_steps(sig: &Signature, rules: &RuleSet, t: &Term) -> Vec<(Term, StepRecord)> {
    fn collect(sig: &Signature, rules: &RuleSet, t: &Term, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if step_at(sig, rules, t).is_some() {
            out.push(path.clone());
        }
        let children: &[Term] = match t {
            Term::Var(_) | Term::Lit { .. } => &[],
            Term::Abs { body, .. } => std::slice::from_ref(body),
            Term::App { args, .. } | Term::Meta { args, .. } => args,
        };
        for (i, c) in children.iter().enumerate() {
            path.push(i);
            collect(sig, rules, c, path, out);
            path.pop();
        }
    }
    fn rewrite_at(sig: &Signature, rules: &RuleSet, t: &Term, path: &[usize]) -> (Term, &'static str) {
        match path.split_first() {
            None => step_at(sig, rules, t).expect("path points at a redex"),
            Some((&i, rest)) => match t {
                Term::Abs { binders, body } => {
                    let (b, rule) = rewrite_at(sig, rules, body, rest);
                    (Term::Abs { binders: binders.clone(), body: Box::new(b) }, rule)
                }
                Term::App { sym, args } => {
                    let (a, rule) = rewrite_at(sig, rules, &args[i], rest);
                    let mut args2 = args.clone();
                    args2[i] = a;
                    (Term::App { sym: sym.clone(), args: args2 }, rule)
                }
                Term::Meta { name, args } => {
                    let (a, rule) = rewrite_at(sig, rules, &args[i], rest);
                    let mut args2 = args.clone();
                    args2[i] = a;
                    (Term::Meta { name: name.clone(), args: args2 }, rule)
                }
                _ => unreachable!("path descends into a leaf"),
            },
        }
    }
    let mut paths = Vec::new();
    collect(sig, rules, t, &mut Vec::new(), &mut paths);
    paths
        .into_iter()
        .map(|path| {
            let (out, rule) = rewrite_at(sig, rules, t, &path);
            (out, StepRecord { rule, path })
        })
        .collect()
}

/// Normalize under a caller-chosen strategy: at each step `pick`
/// receives every available step (see [`all_steps`]) and returns the
/// index to take (reduced modulo the list length). With `|_| 0` this
/// agrees with [`normalize`].
pub fn normalize_with(
    sig: &Signature,
    rules: &RuleSet,
    t: &Term,
    fuel: usize,
    mut pick: impl FnMut(&[(Term, StepRecord)]) -> usize,
) -> Result<(Term, Trace), RewriteError> {
    let mut cur = t.clone();
    let mut trace = Trace::default();
    loop {
        let mut steps = all_steps(sig, rules, &cur);
        if steps.is_empty() {
            return Ok((cur, trace));
        }
        if trace.steps.len() >= fuel {
            return Err(RewriteError::FuelExhausted { steps: trace.steps.len(), last: cur });
        }
        let i = pick(&steps) % steps.len();
        let (next, rec) = steps.swap_remove(i);
        cur = next;
        trace.steps.push(rec);
    }
}

// ---------------------------------------------------------------------
// Theory membership
// ---------------------------------------------------------------------

/// Why a term falls outside the domain the decision procedure covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoryViolation {
    /// A fold's main argument mentions a variable bound by an enclosing
    /// cycle: unfolding the cycle would duplicate the fold forever.
    CycleEscapingFold { var: String, fold: Term },
    /// A fold carries a structure argument with free variables.
    OpenStructure { var: String, fold: Term },
}

impl std::fmt::Display for TheoryViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TheoryViolation::CycleEscapingFold { var, fold } => write!(
                f,
                "a fold's main argument mentions the enclosing cycle variable `{}`: {}",
                var, fold
            ),
            TheoryViolation::OpenStructure { var, fold } => {
                write!(f, "a fold has a structure argument with free variable `{}`: {}", var, fold)
            }
        }
    }
}

/// Binder-kind stack entry for the escape walk.
#[derive(Clone, Copy, PartialEq)]
enum Bind {
    Cycle,
    Plain,
}

fn first_escaping(t: &Term) -> Option<(String, Term)> {
    fn walk(t: &Term, stack: &mut Vec<(String, Bind)>) -> Option<(String, Term)> {
        match t {
            Term::Var(_) | Term::Lit { .. } => None,
            Term::Abs { binders, body } => {
                let d = stack.len();
                stack.extend(binders.iter().map(|b| (b.name.clone(), Bind::Plain)));
                let r = walk(body, stack);
                stack.truncate(d);
                r
            }
            Term::App { sym: crate::kernel::Symbol::Cy, args } => {
                if let Some((binders, body)) = args.first().and_then(|a| a.abs_parts()) {
                    let d = stack.len();
                    stack.extend(binders.iter().map(|b| (b.name.clone(), Bind::Cycle)));
                    let r = walk(body, stack);
                    stack.truncate(d);
                    r
                } else {
                    args.iter().find_map(|a| walk(a, stack))
                }
            }
            Term::App { sym, args } => {
                if matches!(sym, crate::kernel::Symbol::Fold(_)) {
                    if let Some((_, _, main, _)) = t.fold_parts() {
                        for v in main.free_vars() {
                            let hit = stack
                                .iter()
                                .rposition(|(n, _)| *n == v)
                                .map(|i| stack[i].1 == Bind::Cycle)
                                .unwrap_or(false);
                            if hit {
                                return Some((v, t.clone()));
                            }
                        }
                    }
                }
                args.iter().find_map(|a| walk(a, stack))
            }
            Term::Meta { args, .. } => args.iter().find_map(|a| walk(a, stack)),
        }
    }
    walk(t, &mut Vec::new())
}

fn first_open_structure(t: &Term) -> Option<(String, Term)> {
    match t {
        Term::Var(_) | Term::Lit { .. } => None,
        Term::Abs { body, .. } => first_open_structure(body),
        Term::App { args, .. } => {
            if let Some((_, structures, _, _)) = t.fold_parts() {
                for s in structures {
                    if let Some(v) = s.free_vars().into_iter().next() {
                        return Some((v, t.clone()));
                    }
                }
            }
            args.iter().find_map(first_open_structure)
        }
        Term::Meta { args, .. } => args.iter().find_map(first_open_structure),
    }
}

/// A term is bad when some fold's main argument refers to an enclosing
/// cycle binder. Judged syntactically; meaningful on fold-set normal
/// forms.
pub fn is_bad(t: &Term) -> bool {
    first_escaping(t).is_some()
}

/// Check that a (normal-form) term lies inside the decidable fragment:
/// no cycle-escaping fold and only closed structure arguments.
pub fn check_in_theory(t: &Term) -> Result<(), TheoryViolation> {
    if let Some((var, fold)) = first_escaping(t) {
        return Err(TheoryViolation::CycleEscapingFold { var, fold });
    }
    if let Some((var, fold)) = first_open_structure(t) {
        return Err(TheoryViolation::OpenStructure { var, fold });
    }
    Ok(())
}

/// Convenience wrapper around [`check_in_theory`].
pub fn in_theory(t: &Term) -> bool {
    check_in_theory(t).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Binder, FoldInst, Symbol, Term, TypeSeq};
    use crate::rules::{gen_all, gen_foldr, gen_simp};
    use crate::signature::fixtures;

    fn b(name: &str, ty: &str) -> Binder {
        Binder::new(name, ty)
    }
    fn nat(n: u32) -> Term {
        let mut t = Term::ctor("CNat", "0", vec![]);
        for _ in 0..n {
            t = Term::ctor("CNat", "S", vec![t]);
        }
        t
    }
    fn cons(h: Term, t: Term) -> Term {
        Term::ctor("CList", "::", vec![h, t])
    }

    /// Addition as a fold over the first argument's number structure.
    fn plus(m: Term, n: Term) -> Term {
        let fi = FoldInst::new(
            "CNat",
            TypeSeq::single("CNat".into()),
            TypeSeq::single("CNat".into()),
        );
        Term::fold(
            fi,
            vec![
                Term::abs(vec![], n),
                Term::abs(vec![b("w", "CNat")], Term::ctor("CNat", "S", vec![Term::var("w")])),
            ],
            Term::abs(vec![], m),
            vec![],
        )
    }

    /// The list-sum fold applied to `subject`.
    fn sum(subject: Term) -> Term {
        let fi = FoldInst::new(
            "CList",
            TypeSeq::single("CNat".into()),
            TypeSeq::single("CList".into()),
        );
        Term::fold(
            fi,
            vec![
                Term::abs(vec![], nat(0)),
                Term::abs(
                    vec![b("k", "CNat"), b("v", "CNat")],
                    plus(Term::var("k"), Term::var("v")),
                ),
            ],
            Term::abs(vec![], subject),
            vec![],
        )
    }

    #[test]
    fn sum_of_cyclic_list_normalizes_to_cyclic_numeral() {
        let sig = fixtures::nat_list();
        let rules = gen_foldr(&sig);
        let t = sum(Term::cy(vec![b("x", "CList")], cons(nat(2), cons(nat(1), Term::var("x")))));
        let (nf, trace) = normalize(&sig, &rules, &t, DEFAULT_FUEL).expect("terminates");
        let expected = Term::cy(
            vec![b("x", "CNat")],
            Term::ctor(
                "CNat",
                "S",
                vec![Term::ctor("CNat", "S", vec![Term::ctor("CNat", "S", vec![Term::var("x")])])],
            ),
        );
        assert!(nf.alpha_eq(&expected), "got {}", nf);
        // 4r enters the cycle; 5r walks both list cells and both nested
        // additions; 1r finally reads the looped-back parameter.
        assert_eq!(
            trace.rule_names(),
            vec!["4r", "5r", "5r", "5r", "5r", "5r", "5r", "5r", "1r"]
        );
        // Normal form: no further step.
        assert!(step(&sig, &rules, &nf).is_none());
    }

    #[test]
    fn root_fires_before_children_and_leftmost_first() {
        let sig = fixtures::tree_bool();
        let rules = gen_simp(&sig);
        let nil = Term::ctor("CTree", "nil", vec![]);
        let plus = |l: Term, r: Term| Term::ctor("CTree", "+", vec![l, r]);
        // Root redex (left unit) wraps an inner redex.
        let t = plus(nil.clone(), plus(nil.clone(), Term::var("u")));
        let (_, rec) = step(&sig, &rules, &t).expect("redex");
        assert_eq!(rec.path, Vec::<usize>::new());
        assert_eq!(rec.rule, "15r");
        // Two sibling redexes: leftmost first.
        let t = Term::tuple(vec![plus(nil.clone(), Term::var("a")), plus(nil, Term::var("b"))]);
        let (_, rec) = step(&sig, &rules, &t).expect("redex");
        assert_eq!(rec.path, vec![0]);
    }

    #[test]
    fn fuel_exhaustion_is_an_error() {
        let sig = fixtures::nat_list();
        let rules = gen_foldr(&sig);
        let t = sum(Term::cy(vec![b("x", "CList")], cons(nat(2), cons(nat(1), Term::var("x")))));
        let err = normalize(&sig, &rules, &t, 2).unwrap_err();
        let RewriteError::FuelExhausted { steps, .. } = err;
        assert_eq!(steps, 2);
    }

    #[test]
    fn bad_terms_are_detected() {
        // cy(z. 1 :: fold(.. ; (). z ; )) — the fold's main argument
        // mentions the cycle binder.
        let bad = Term::cy(vec![b("z", "CList")], cons(nat(1), sum(Term::var("z"))));
        assert!(is_bad(&bad));
        assert!(!in_theory(&bad));
        // The same fold under a plain abstraction is not bad.
        let ok = Term::at(vec![b("z", "CList")], cons(nat(1), sum(Term::var("z"))), Term::var("w"));
        assert!(!is_bad(&ok));
        // A good normal form is in the theory.
        let good = Term::cy(vec![b("x", "CNat")], Term::ctor("CNat", "S", vec![Term::var("x")]));
        assert!(in_theory(&good));
    }

    #[test]
    fn open_structures_fall_outside_the_theory() {
        let fi = FoldInst::new(
            "CNat",
            TypeSeq::single("CNat".into()),
            TypeSeq::single("CNat".into()),
        );
        // Addition-style fold whose zero-structure is a free variable.
        let open = Term::fold(
            fi.clone(),
            vec![
                Term::abs(vec![], Term::var("n")),
                Term::abs(vec![b("v", "CNat")], Term::ctor("CNat", "S", vec![Term::var("v")])),
            ],
            Term::abs(vec![], Term::var("m")),
            vec![],
        );
        assert!(!is_bad(&open));
        assert!(matches!(
            check_in_theory(&open),
            Err(TheoryViolation::OpenStructure { ref var, .. }) if var == "n"
        ));
        // Closing the structure fixes it.
        let closed = Term::fold(
            fi,
            vec![
                Term::abs(vec![], nat(2)),
                Term::abs(vec![b("v", "CNat")], Term::ctor("CNat", "S", vec![Term::var("v")])),
            ],
            Term::abs(vec![], Term::var("m")),
            vec![],
        );
        assert!(in_theory(&closed));
    }

    #[test]
    fn all_steps_lists_every_redex_and_any_strategy_joins() {
        let sig = fixtures::tree_bool();
        let rules = gen_simp(&sig);
        let nil = Term::ctor("CTree", "nil", vec![]);
        let plus = |l: Term, r: Term| Term::ctor("CTree", "+", vec![l, r]);
        // Two disjoint redexes.
        let t = Term::tuple(vec![plus(nil.clone(), Term::var("a")), plus(nil, Term::var("b"))]);
        let steps = all_steps(&sig, &rules, &t);
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0].1.path, vec![0]);
        assert_eq!(steps[1].1.path, vec![1]);
        // Entry 0 agrees with the leftmost-outermost step.
        let (lmo, rec) = step(&sig, &rules, &t).unwrap();
        assert_eq!(steps[0].0, lmo);
        assert_eq!(steps[0].1, rec);
        // Rightmost-first strategy reaches the same normal form here.
        let sig2 = fixtures::nat_list();
        let rules2 = gen_foldr(&sig2);
        let u = sum(Term::cy(vec![b("x", "CList")], cons(nat(2), cons(nat(1), Term::var("x")))));
        let (nf_l, _) = normalize(&sig2, &rules2, &u, DEFAULT_FUEL).unwrap();
        let (nf_r, _) =
            normalize_with(&sig2, &rules2, &u, DEFAULT_FUEL, |steps| steps.len() - 1).unwrap();
        assert!(nf_l.alpha_eq(&nf_r));
    }

    #[test]
    fn cycle_splitting_computes_head_and_tail_components() {
        // A two-binder cycle cy(v, w. < 2 :: w , 1 :: 2 :: w >) splits
        // (10r), the dead first binder drops (13r), and beta (7r) writes
        // both components in terms of the one real cycle.
        let sig = fixtures::nat_list();
        let rules = gen_all(&sig);
        let t = Term::cy(
            vec![b("v", "CList"), b("w", "CList")],
            Term::app(
                Symbol::Tuple,
                vec![cons(nat(2), Term::var("w")), cons(nat(1), cons(nat(2), Term::var("w")))],
            ),
        );
        let (nf, trace) = normalize(&sig, &rules, &t, DEFAULT_FUEL).expect("terminates");
        assert_eq!(trace.rule_names(), vec!["10r", "13r", "7r", "7r"]);
        let cyc = Term::cy(vec![b("w", "CList")], cons(nat(1), cons(nat(2), Term::var("w"))));
        let expected = Term::tuple(vec![cons(nat(2), cyc.clone()), cyc]);
        assert!(nf.alpha_eq(&expected), "got {}", nf);
    }
}
