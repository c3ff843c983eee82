//! First-class rewrite rules, generated from a signature.
//!
//! Two rule sets drive the engine:
//!
//! - the **fold set** (`gen_foldr`): rules `1r`–`5r` and `7r`, which push a
//!   fold through the body of its main abstraction (parameter lookup,
//!   empty tuple, tuple splitting, cycle interleaving, constructor
//!   unfolding) plus beta for compositions;
//! - the **simplification set** (`gen_simp`): rules `10r`–`16r`, which
//!   split multi-binder cycles (`10r`), cancel trivial branching cycles
//!   (`11r`, `12r`, `14r`), erase dead cycles (`13r`, enabled at every
//!   type), and remove branching units (`15r`, `16r`).
//!
//! A rule is a *descriptor family*: [`RewriteRule::instantiate`] inspects
//! only the root shape of a candidate redex and produces a concrete
//! pattern/replacement pair over metavariables. Applicability is then
//! decided by genuine pattern matching ([`match_pattern`]) in the
//! higher-order pattern fragment — every metavariable is applied to
//! distinct bound variables, so matching is decidable and produces at
//! most one substitution; variables *not* passed to a metavariable are
//! thereby required to be absent, which is what enforces side conditions
//! such as "the bound variable does not occur" (`11r`–`13r`) and the
//! closed-argument condition of constructor unfolding (`5r`).
//!
//! Laws checked by the test suite:
//! - round trip: if `instantiate` + `match_pattern` succeed on a redex,
//!   substituting the match back into the pattern is alpha-equal to the
//!   redex;
//! - representative instances of every rule are type-correct equations.

use crate::kernel::{
    fresh_name, BaseTypeId, Binder, FoldInst, MetaAssign, MetaSubst, Symbol, Term, TypeSeq,
};
use crate::signature::Signature;
use crate::typing::{MetaContext, MetaDecl};
use std::collections::{BTreeMap, BTreeSet};

/// A concrete pattern/replacement pair produced by instantiating a rule
/// at a redex, together with the types of its metavariables.
///
/// When a pair is produced from an untyped redex, result types that are
/// not syntactically determined (the body metavariable of `7r`) are
/// recorded with the placeholder type `?`; representative instances
/// always carry real types.
#[derive(Debug, Clone)]
pub struct RulePair {
    pub metas: MetaContext,
    pub lhs: Term,
    pub rhs: Term,
}

/// A labelled representative instance of a rule (used for display,
/// type checking, and the termination checker).
#[derive(Debug, Clone)]
pub struct RuleInstance {
    pub rule: &'static str,
    pub label: String,
    pub pair: RulePair,
}

/// Identifiers of the generated rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleId {
    /// Fold of a main-binder variable: yields the matching parameter group.
    R1,
    /// Fold of the empty tuple.
    R2,
    /// Fold of a tuple: splits into one fold per component.
    R3,
    /// Fold of a cycle: commutes the fold under the cycle, widening binders.
    R4,
    /// Fold of a constructor: unfolds into the matching structure argument.
    R5,
    /// Beta for compositions.
    R7,
    /// Cycle splitting for multi-binder cycles.
    R10,
    /// Branching cycle with the bound variable on the left of the branch.
    R11,
    /// Branching cycle with the bound variable on the right.
    R12,
    /// Dead cycle: no bound variable occurs in the body (any type).
    R13,
    /// Self cycle at a branching type: the divergent cycle is the unit.
    R14,
    /// Left unit of a branch.
    R15,
    /// Right unit of a branch.
    R16,
}

impl RuleId {
    pub fn name(self) -> &'static str {
        match self {
            RuleId::R1 => "1r",
            RuleId::R2 => "2r",
            RuleId::R3 => "3r",
            RuleId::R4 => "4r",
            RuleId::R5 => "5r",
            RuleId::R7 => "7r",
            RuleId::R10 => "10r",
            RuleId::R11 => "11r",
            RuleId::R12 => "12r",
            RuleId::R13 => "13r",
            RuleId::R14 => "14r",
            RuleId::R15 => "15r",
            RuleId::R16 => "16r",
        }
    }
}

/// One generated rewrite rule.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub id: RuleId,
}

impl RewriteRule {
    pub fn name(&self) -> &'static str {
        self.id.name()
    }

    /// Instantiate the rule at a candidate redex, producing the concrete
    /// pattern pair for its root shape. Returns `None` when the root
    /// shape rules out a match. Only the shape is inspected here;
    /// genuine matching decides applicability.
    pub fn instantiate(&self, sig: &Signature, redex: &Term) -> Option<RulePair> {
        instantiate(self.id, sig, redex, None)
    }

    /// Representative instances of this rule over a signature, one per
    /// relevant (source, target) fold instance / branching type /
    /// binder-width configuration.
    pub fn representatives(&self, sig: &Signature, folds: &[FoldInst]) -> Vec<RuleInstance> {
        representatives(self.id, sig, folds)
    }
}

/// An ordered set of rules; list order breaks ties among rules matching
/// at the same position.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub name: &'static str,
    pub rules: Vec<RewriteRule>,
}

impl RuleSet {
    pub fn representatives(&self, sig: &Signature, folds: &[FoldInst]) -> Vec<RuleInstance> {
        self.rules.iter().flat_map(|r| r.representatives(sig, folds)).collect()
    }
}

/// The fold rule set: `1r`–`5r`, `7r`.
pub fn gen_foldr(_sig: &Signature) -> RuleSet {
    RuleSet {
        name: "fold",
        rules: [RuleId::R1, RuleId::R2, RuleId::R3, RuleId::R4, RuleId::R5, RuleId::R7]
            .into_iter()
            .map(|id| RewriteRule { id })
            .collect(),
    }
}

/// The simplification rule set: `10r`–`16r`.
pub fn gen_simp(_sig: &Signature) -> RuleSet {
    RuleSet {
        name: "simplify",
        rules: [
            RuleId::R10,
            RuleId::R11,
            RuleId::R12,
            RuleId::R13,
            RuleId::R14,
            RuleId::R15,
            RuleId::R16,
        ]
        .into_iter()
        .map(|id| RewriteRule { id })
        .collect(),
    }
}

/// Both sets concatenated: fold rules first.
pub fn gen_all(sig: &Signature) -> RuleSet {
    let mut rules = gen_foldr(sig).rules;
    rules.extend(gen_simp(sig).rules);
    RuleSet { name: "fold+simplify", rules }
}

/// The fixpoint-unfolding fixture `cy(x. m[x]) -> m[cy(x. m[x])]` at a
/// given type: a sound equation whose naive orientation must *fail* the
/// termination check.
pub fn fixpoint_fixture(ty: &BaseTypeId) -> RuleInstance {
    let x = Binder::new("x", ty.clone());
    let lhs = Term::cy(vec![x.clone()], Term::meta("m", vec![Term::var("x")]));
    let rhs = Term::meta("m", vec![lhs.clone()]);
    let mut metas = MetaContext::new();
    metas.insert(
        "m".to_string(),
        MetaDecl { args: vec![ty.clone()], result: TypeSeq::single(ty.clone()) },
    );
    RuleInstance {
        rule: "fix",
        label: format!("fix @ {}", ty),
        pair: RulePair { metas, lhs, rhs },
    }
}

// ---------------------------------------------------------------------
// Pattern matching
// ---------------------------------------------------------------------

fn rpos(stack: &[Binder], name: &str) -> Option<usize> {
    stack.iter().rposition(|b| b.name == name)
}

/// Match a pattern (a term with metavariables, each applied to distinct
/// bound variables) against a subject term. Returns the unique
/// substitution when the subject is an instance, `None` otherwise.
///
/// A bound variable of the subject that is not among a metavariable's
/// arguments may not occur in the corresponding subterm — this is the
/// freshness side of higher-order pattern matching.
pub fn match_pattern(pattern: &Term, subject: &Term) -> Option<MetaSubst> {
    let mut theta = MetaSubst::new();
    if go(pattern, subject, &mut Vec::new(), &mut Vec::new(), &mut theta) {
        Some(theta)
    } else {
        None
    }
}

fn go(
    p: &Term,
    s: &Term,
    pb: &mut Vec<Binder>,
    sb: &mut Vec<Binder>,
    theta: &mut MetaSubst,
) -> bool {
    match (p, s) {
        (Term::Meta { name, args }, _) => {
            // Collect which subject binders may occur, and as what.
            let mut allowed: BTreeMap<usize, Binder> = BTreeMap::new();
            let mut binders: Vec<Binder> = Vec::with_capacity(args.len());
            for a in args {
                let Term::Var(an) = a else {
                    return false; // not a pattern
                };
                let Some(idx) = rpos(pb, an) else {
                    return false;
                };
                let b = Binder { name: an.clone(), ty: pb[idx].ty.clone() };
                if allowed.insert(idx, b.clone()).is_some() {
                    return false; // repeated argument: not a pattern
                }
                binders.push(b);
            }
            let Some(body) = extract(s, sb, &allowed) else {
                return false;
            };
            let cand = MetaAssign { binders, body };
            match theta.get(name) {
                Some(old) => assigns_alpha_eq(old, &cand),
                None => {
                    theta.insert(name.clone(), cand);
                    true
                }
            }
        }
        (Term::Var(x), Term::Var(y)) => match (rpos(pb, x), rpos(sb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Term::Lit { value: v1, ty: t1 }, Term::Lit { value: v2, ty: t2 }) => v1 == v2 && t1 == t2,
        (Term::Abs { binders: b1, body: body1 }, Term::Abs { binders: b2, body: body2 }) => {
            if b1.len() != b2.len() || b1.iter().zip(b2.iter()).any(|(x, y)| x.ty != y.ty) {
                return false;
            }
            let d = pb.len();
            pb.extend(b1.iter().cloned());
            sb.extend(b2.iter().cloned());
            let r = go(body1, body2, pb, sb, theta);
            pb.truncate(d);
            sb.truncate(d);
            r
        }
        (Term::App { sym: s1, args: a1 }, Term::App { sym: s2, args: a2 }) => {
            s1 == s2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| go(x, y, pb, sb, theta))
        }
        _ => false,
    }
}

fn assigns_alpha_eq(a: &MetaAssign, b: &MetaAssign) -> bool {
    if a.binders.len() != b.binders.len() {
        return false;
    }
    let wa = Term::Abs { binders: a.binders.clone(), body: Box::new(a.body.clone()) };
    let wb = Term::Abs { binders: b.binders.clone(), body: Box::new(b.body.clone()) };
    wa.alpha_eq(&wb)
}

/// Rewrite a subject subterm into a metavariable assignment body:
/// occurrences of subject binders listed in `allowed` become the
/// corresponding assignment binder; occurrences of any other subject
/// binder fail the match. Local binders shadow as usual; local binders
/// colliding with assignment binder names are freshened.
fn extract(s: &Term, sb: &[Binder], allowed: &BTreeMap<usize, Binder>) -> Option<Term> {
    let new_names: BTreeSet<String> = allowed.values().map(|b| b.name.clone()).collect();
    fn walk(
        t: &Term,
        sb: &[Binder],
        local: &mut Vec<Binder>,
        allowed: &BTreeMap<usize, Binder>,
        new_names: &BTreeSet<String>,
    ) -> Option<Term> {
        match t {
            Term::Var(x) => {
                if rpos(local, x).is_some() {
                    return Some(t.clone());
                }
                match rpos(sb, x) {
                    Some(i) => allowed.get(&i).map(|b| Term::var(b.name.clone())),
                    None => Some(t.clone()),
                }
            }
            Term::Lit { .. } => Some(t.clone()),
            Term::Meta { name, args } => {
                let args = args
                    .iter()
                    .map(|a| walk(a, sb, local, allowed, new_names))
                    .collect::<Option<Vec<_>>>()?;
                Some(Term::Meta { name: name.clone(), args })
            }
            Term::App { sym, args } => {
                let args = args
                    .iter()
                    .map(|a| walk(a, sb, local, allowed, new_names))
                    .collect::<Option<Vec<_>>>()?;
                Some(Term::App { sym: sym.clone(), args })
            }
            Term::Abs { binders, body } => {
                let needs_rename = binders.iter().any(|b| new_names.contains(&b.name));
                let (bs, body2) = if needs_rename {
                    let mut avoid: BTreeSet<String> = new_names.clone();
                    avoid.extend(body.free_vars());
                    avoid.extend(local.iter().map(|b| b.name.clone()));
                    avoid.extend(binders.iter().map(|b| b.name.clone()));
                    let mut rename: BTreeMap<String, Term> = BTreeMap::new();
                    let mut bs = Vec::with_capacity(binders.len());
                    for b in binders {
                        if new_names.contains(&b.name) {
                            let f = fresh_name(&b.name, &avoid);
                            avoid.insert(f.clone());
                            rename.insert(b.name.clone(), Term::var(f.clone()));
                            bs.push(Binder { name: f, ty: b.ty.clone() });
                        } else {
                            bs.push(b.clone());
                        }
                    }
                    (bs, body.subst_vars_unchecked(&rename))
                } else {
                    (binders.clone(), (**body).clone())
                };
                let d = local.len();
                local.extend(bs.iter().cloned());
                let out = walk(&body2, sb, local, allowed, new_names);
                local.truncate(d);
                out.map(|b| Term::Abs { binders: bs, body: Box::new(b) })
            }
        }
    }
    walk(s, sb, &mut Vec::new(), allowed, &new_names)
}

// ---------------------------------------------------------------------
// Rule instantiation
// ---------------------------------------------------------------------

/// Pattern binder lists: reuse the subject's names when they are usable
/// (pairwise distinct, not colliding with anything reserved), otherwise
/// fall back to `prefix1`, `prefix2`, …. Types are taken from `tys` when
/// given (arity-derived positions) or from the subject binders.
fn canon_binders(
    subject: &[Binder],
    tys: Option<&TypeSeq>,
    prefix: &str,
    taken: &mut BTreeSet<String>,
) -> Vec<Binder> {
    let names_ok = {
        let mut seen = BTreeSet::new();
        subject.iter().all(|b| !taken.contains(&b.name) && seen.insert(b.name.clone()))
    };
    let n = match tys {
        Some(t) => t.width(),
        None => subject.len(),
    };
    debug_assert!(tys.is_none() || subject.len() == n);
    let mut out = Vec::with_capacity(n);
    for (i, sb) in subject.iter().enumerate() {
        let ty = match tys {
            Some(t) => t.0[i].clone(),
            None => sb.ty.clone(),
        };
        let name = if names_ok {
            sb.name.clone()
        } else {
            fresh_name(&format!("{}{}", prefix, i + 1), taken)
        };
        taken.insert(name.clone());
        out.push(Binder { name, ty });
    }
    out
}

fn vars_of(binders: &[Binder]) -> Vec<Term> {
    binders.iter().map(|b| Term::var(b.name.clone())).collect()
}

fn tys_of(binders: &[Binder]) -> Vec<BaseTypeId> {
    binders.iter().map(|b| b.ty.clone()).collect()
}

/// Build the structure-argument patterns `e1 … em` of a fold rule.
fn structure_patterns(
    sig: &Signature,
    fi: &FoldInst,
    structures: &[Term],
    taken: &mut BTreeSet<String>,
    metas: &mut MetaContext,
) -> Option<Vec<Term>> {
    let dt = sig.datatype(&fi.src)?;
    if structures.len() != dt.ctors.len() {
        return None;
    }
    let mut out = Vec::with_capacity(structures.len());
    for (i, (s, ctor)) in structures.iter().zip(&dt.ctors).enumerate() {
        let (subj_binders, _) = s.abs_parts()?;
        let tys = sig.structure_binder_types(fi, ctor);
        if subj_binders.len() != tys.width() {
            return None;
        }
        let mut local_taken = taken.clone();
        let binders = canon_binders(subj_binders, Some(&tys), "b", &mut local_taken);
        let name = format!("e{}", i + 1);
        metas.insert(name.clone(), MetaDecl { args: tys.0.clone(), result: fi.tgt.clone() });
        out.push(Term::abs(binders.clone(), Term::meta(name, vars_of(&binders))));
    }
    Some(out)
}

/// Build the parameter patterns `p1 … pk` of a fold rule.
fn param_patterns(
    fi: &FoldInst,
    main_binders: &[Binder],
    params: &[Term],
    metas: &mut MetaContext,
) -> Option<Vec<Term>> {
    let flat = TypeSeq::concat(main_binders.iter().map(|b| fi.map_base(&b.ty)));
    if params.len() != flat.width() {
        return None;
    }
    let mut out = Vec::with_capacity(params.len());
    for (k, ty) in flat.iter().enumerate() {
        let name = format!("p{}", k + 1);
        metas.insert(name.clone(), MetaDecl { args: vec![], result: TypeSeq::single(ty.clone()) });
        out.push(Term::meta(name, vec![]));
    }
    Some(out)
}

/// Group boundaries of the flat parameter list: parameter group `i`
/// corresponds to main binder `i` and has the binder's interpreted width.
fn param_group(fi: &FoldInst, main_binders: &[Binder], idx: usize) -> (usize, usize) {
    let offset: usize = main_binders[..idx].iter().map(|b| fi.map_width(&b.ty)).sum();
    (offset, fi.map_width(&main_binders[idx].ty))
}

fn instantiate(
    id: RuleId,
    sig: &Signature,
    redex: &Term,
    beta_result: Option<&TypeSeq>,
) -> Option<RulePair> {
    match id {
        RuleId::R1 | RuleId::R2 | RuleId::R3 | RuleId::R4 | RuleId::R5 => {
            instantiate_fold(id, sig, redex)
        }
        RuleId::R7 => instantiate_beta(redex, beta_result),
        RuleId::R10 => instantiate_bekic(redex),
        RuleId::R11 | RuleId::R12 => instantiate_branch_cancel(id, sig, redex),
        RuleId::R13 => instantiate_dead_cy(redex),
        RuleId::R14 => instantiate_self_cy(sig, redex),
        RuleId::R15 | RuleId::R16 => instantiate_branch_unit(id, sig, redex),
    }
}

fn instantiate_fold(id: RuleId, sig: &Signature, redex: &Term) -> Option<RulePair> {
    let (fi, structures, main, params) = redex.fold_parts()?;
    let (main_binders, main_body) = main.abs_parts()?;
    let mut taken: BTreeSet<String> = redex.free_vars();
    let mut metas = MetaContext::new();
    let py = canon_binders(main_binders, None, "y", &mut taken);
    let spat = structure_patterns(sig, fi, structures, &mut taken, &mut metas)?;
    let ppat = param_patterns(fi, main_binders, params, &mut metas)?;

    let mk_lhs = |body: Term| -> Term {
        Term::fold(fi.clone(), spat.clone(), Term::abs(py.clone(), body), ppat.clone())
    };

    match id {
        RuleId::R1 => {
            // Main body is one of the main binders: rewrite to its
            // parameter group.
            let Term::Var(v) = main_body else {
                return None;
            };
            let idx = rpos(main_binders, v)?;
            let (off, w) = param_group(fi, main_binders, idx);
            let lhs = mk_lhs(Term::var(py[idx].name.clone()));
            let rhs = Term::tuple(ppat[off..off + w].to_vec());
            Some(RulePair { metas, lhs, rhs })
        }
        RuleId::R2 => {
            if !matches!(main_body, Term::App { sym: Symbol::Empty, .. }) {
                return None;
            }
            let lhs = mk_lhs(Term::empty());
            Some(RulePair { metas, lhs, rhs: Term::empty() })
        }
        RuleId::R3 => {
            let Term::App { sym: Symbol::Tuple, args: comps } = main_body else {
                return None;
            };
            if comps.len() < 2 {
                return None;
            }
            let widths: Vec<usize> =
                comps.iter().map(|c| c.width()).collect::<Option<Vec<_>>>()?;
            if widths.iter().sum::<usize>() != fi.body_ty.width() {
                return None;
            }
            // Slice the body type by the component widths.
            let mut slices = Vec::with_capacity(comps.len());
            let mut cursor = 0usize;
            for w in &widths {
                slices.push(TypeSeq(fi.body_ty.0[cursor..cursor + w].to_vec()));
                cursor += w;
            }
            let yv = vars_of(&py);
            let ytys = tys_of(&py);
            let mut pat_comps = Vec::with_capacity(comps.len());
            let mut rhs_comps = Vec::with_capacity(comps.len());
            for (j, slice) in slices.iter().enumerate() {
                let name = format!("t{}", j + 1);
                metas.insert(
                    name.clone(),
                    MetaDecl { args: ytys.clone(), result: slice.clone() },
                );
                pat_comps.push(Term::meta(name.clone(), yv.clone()));
                let fj = FoldInst { src: fi.src.clone(), tgt: fi.tgt.clone(), body_ty: slice.clone() };
                rhs_comps.push(Term::fold(
                    fj,
                    spat.clone(),
                    Term::abs(py.clone(), Term::meta(name, yv.clone())),
                    ppat.clone(),
                ));
            }
            let lhs = mk_lhs(Term::app(Symbol::Tuple, pat_comps));
            let rhs = Term::tuple(rhs_comps);
            Some(RulePair { metas, lhs, rhs })
        }
        RuleId::R4 => {
            let Term::App { sym: Symbol::Cy, args } = main_body else {
                return None;
            };
            let (cy_binders, _) = args.first()?.abs_parts()?;
            if cy_binders.is_empty() {
                return None;
            }
            let px = canon_binders(cy_binders, None, "x", &mut taken);
            let yv = vars_of(&py);
            let xv = vars_of(&px);
            let mut targs = yv.clone();
            targs.extend(xv.clone());
            let mut arg_tys = tys_of(&py);
            arg_tys.extend(tys_of(&px));
            metas.insert(
                "t".to_string(),
                MetaDecl { args: arg_tys, result: TypeSeq(tys_of(&px)) },
            );
            let lhs = mk_lhs(Term::app(
                Symbol::Cy,
                vec![Term::abs(px.clone(), Term::meta("t", targs.clone()))],
            ));
            // Fresh outer binders: each cycle binder widens to its
            // interpreted width.
            let mut outer: Vec<Binder> = Vec::new();
            for xb in &px {
                let m = fi.map_base(&xb.ty);
                for (c, ty) in m.iter().enumerate() {
                    let base = if m.width() == 1 {
                        xb.name.clone()
                    } else {
                        format!("{}_{}", xb.name, c + 1)
                    };
                    let name = fresh_name(&base, &taken);
                    taken.insert(name.clone());
                    outer.push(Binder { name, ty: ty.clone() });
                }
            }
            let mut inner_binders = py.clone();
            inner_binders.extend(px.clone());
            let mut inner_params = ppat.clone();
            inner_params.extend(vars_of(&outer));
            let rhs = Term::cy(
                outer,
                Term::fold(
                    fi.clone(),
                    spat.clone(),
                    Term::abs(inner_binders, Term::meta("t", targs)),
                    inner_params,
                ),
            );
            Some(RulePair { metas, lhs, rhs })
        }
        RuleId::R5 => {
            let Term::App { sym: Symbol::Ctor { ty, name: cname }, args: cargs } = main_body
            else {
                return None;
            };
            if *ty != fi.src {
                return None;
            }
            let dt = sig.datatype(&fi.src)?;
            let decl = dt.ctor(cname)?;
            let i = dt.ctor_index(cname)?;
            if cargs.len() != decl.args.len() {
                return None;
            }
            let yv = vars_of(&py);
            let ytys = tys_of(&py);
            let mut pat_args = Vec::with_capacity(cargs.len());
            let mut rhs_args = Vec::with_capacity(cargs.len());
            for (j, aty) in decl.args.iter().enumerate() {
                if *aty == fi.src {
                    // Recursive argument: may use the main binders, and is
                    // folded on the right-hand side.
                    let tname = format!("t{}", j + 1);
                    metas.insert(
                        tname.clone(),
                        MetaDecl { args: ytys.clone(), result: TypeSeq::single(fi.src.clone()) },
                    );
                    pat_args.push(Term::meta(tname.clone(), yv.clone()));
                    let frec = FoldInst {
                        src: fi.src.clone(),
                        tgt: fi.tgt.clone(),
                        body_ty: TypeSeq::single(fi.src.clone()),
                    };
                    rhs_args.push(Term::fold(
                        frec,
                        spat.clone(),
                        Term::abs(py.clone(), Term::meta(tname, yv.clone())),
                        ppat.clone(),
                    ));
                } else {
                    // Non-recursive argument: must not touch the main
                    // binders (the metavariable takes no arguments).
                    let aname = format!("a{}", j + 1);
                    metas.insert(
                        aname.clone(),
                        MetaDecl { args: vec![], result: TypeSeq::single(aty.clone()) },
                    );
                    pat_args.push(Term::meta(aname.clone(), vec![]));
                    rhs_args.push(Term::meta(aname, vec![]));
                }
            }
            let lhs =
                mk_lhs(Term::app(Symbol::Ctor { ty: ty.clone(), name: cname.clone() }, pat_args));
            let rhs = Term::meta(format!("e{}", i + 1), rhs_args);
            Some(RulePair { metas, lhs, rhs })
        }
        _ => unreachable!(),
    }
}

fn instantiate_beta(redex: &Term, result: Option<&TypeSeq>) -> Option<RulePair> {
    let Term::App { sym: Symbol::At, args } = redex else {
        return None;
    };
    let [abs, arg] = args.as_slice() else {
        return None;
    };
    let (binders, body) = abs.abs_parts()?;
    let mut taken: BTreeSet<String> = redex.free_vars();
    let py = canon_binders(binders, None, "y", &mut taken);
    let mut metas = MetaContext::new();
    let result_ty = match result {
        Some(r) => r.clone(),
        None => {
            // Syntactically undetermined: placeholder components.
            let w = body.width().unwrap_or(1);
            TypeSeq(vec![BaseTypeId::new("?"); w])
        }
    };
    metas.insert("t".to_string(), MetaDecl { args: tys_of(&py), result: result_ty });
    let t_of = |args: Vec<Term>| Term::meta("t", args);

    match py.len() {
        1 => {
            metas.insert(
                "s1".to_string(),
                MetaDecl { args: vec![], result: TypeSeq::single(py[0].ty.clone()) },
            );
            let lhs = Term::at(
                py.clone(),
                t_of(vars_of(&py)),
                Term::meta("s1", vec![]),
            );
            let rhs = t_of(vec![Term::meta("s1", vec![])]);
            Some(RulePair { metas, lhs, rhs })
        }
        0 => {
            if !matches!(arg, Term::App { sym: Symbol::Empty, .. }) {
                return None;
            }
            let lhs = Term::at(vec![], t_of(vec![]), Term::empty());
            let rhs = t_of(vec![]);
            Some(RulePair { metas, lhs, rhs })
        }
        n => {
            // Multi-binder composition: the argument must be a literal
            // tuple whose component widths partition the binders.
            let Term::App { sym: Symbol::Tuple, args: comps } = arg else {
                return None;
            };
            let widths: Vec<usize> =
                comps.iter().map(|c| c.width()).collect::<Option<Vec<_>>>()?;
            if widths.iter().sum::<usize>() != n {
                return None;
            }
            let mut pat_comps = Vec::with_capacity(comps.len());
            let mut cursor = 0usize;
            for (k, w) in widths.iter().enumerate() {
                let name = format!("s{}", k + 1);
                let slice = TypeSeq(py[cursor..cursor + w].iter().map(|b| b.ty.clone()).collect());
                metas.insert(name.clone(), MetaDecl { args: vec![], result: slice });
                pat_comps.push(Term::meta(name, vec![]));
                cursor += w;
            }
            let rhs = t_of(pat_comps.clone());
            let lhs = Term::at(py.clone(), t_of(vars_of(&py)), Term::app(Symbol::Tuple, pat_comps));
            Some(RulePair { metas, lhs, rhs })
        }
    }
}

fn instantiate_bekic(redex: &Term) -> Option<RulePair> {
    let Term::App { sym: Symbol::Cy, args } = redex else {
        return None;
    };
    let (binders, body) = args.first()?.abs_parts()?;
    let Term::App { sym: Symbol::Tuple, args: comps } = body else {
        return None;
    };
    if comps.len() < 2 {
        return None;
    }
    let widths: Vec<usize> = comps.iter().map(|c| c.width()).collect::<Option<Vec<_>>>()?;
    let m = widths[0];
    let total = binders.len();
    if m == 0 || m >= total || widths.iter().sum::<usize>() != total {
        return None;
    }
    let mut taken: BTreeSet<String> = redex.free_vars();
    let px = canon_binders(binders, None, "x", &mut taken);
    let x1: Vec<Binder> = px[..m].to_vec();
    let x2: Vec<Binder> = px[m..].to_vec();
    let all_vars = vars_of(&px);
    let all_tys = tys_of(&px);

    let mut metas = MetaContext::new();
    metas.insert(
        "t1".to_string(),
        MetaDecl { args: all_tys.clone(), result: TypeSeq(tys_of(&x1)) },
    );
    let mut pat_comps = vec![Term::meta("t1", all_vars.clone())];
    let mut s_comps = Vec::with_capacity(comps.len() - 1);
    let mut cursor = m;
    for (j, w) in widths.iter().enumerate().skip(1) {
        let name = format!("t{}", j + 1);
        let slice = TypeSeq(all_tys[cursor..cursor + w].to_vec());
        metas.insert(name.clone(), MetaDecl { args: all_tys.clone(), result: slice });
        pat_comps.push(Term::meta(name.clone(), all_vars.clone()));
        s_comps.push(Term::meta(name, all_vars.clone()));
        cursor += w;
    }
    let lhs = Term::cy(px.clone(), Term::app(Symbol::Tuple, pat_comps));

    let t_expr = Term::meta("t1", all_vars.clone());
    let s_expr = Term::tuple(s_comps);
    // inner = cy(x2. S)
    let inner = Term::cy(x2.clone(), s_expr.clone());
    // first = cy(x1. (x2. T) @ inner)
    let first = Term::cy(x1.clone(), Term::at(x2.clone(), t_expr.clone(), inner));
    // second = cy(x2. (x1. S) @ first)
    let second = Term::cy(x2.clone(), Term::at(x1.clone(), s_expr, first.clone()));
    let rhs = Term::tuple(vec![first, second]);
    Some(RulePair { metas, lhs, rhs })
}

fn instantiate_branch_cancel(id: RuleId, sig: &Signature, redex: &Term) -> Option<RulePair> {
    let Term::App { sym: Symbol::Cy, args } = redex else {
        return None;
    };
    let (binders, body) = args.first()?.abs_parts()?;
    let [xb] = binders else {
        return None;
    };
    let br = sig.branching(&xb.ty)?;
    let Term::App { sym: Symbol::Ctor { ty, name }, args: cargs } = body else {
        return None;
    };
    if *ty != xb.ty || *name != br.branch || cargs.len() != 2 {
        return None;
    }
    let var_side = if id == RuleId::R11 { 0 } else { 1 };
    if !matches!(&cargs[var_side], Term::Var(v) if *v == xb.name) {
        return None;
    }
    let mut taken: BTreeSet<String> = redex.free_vars();
    let px = canon_binders(binders, None, "x", &mut taken);
    let mut metas = MetaContext::new();
    metas.insert(
        "t".to_string(),
        MetaDecl { args: vec![], result: TypeSeq::single(xb.ty.clone()) },
    );
    let mut branch_args = vec![Term::var(px[0].name.clone()), Term::meta("t", vec![])];
    if var_side == 1 {
        branch_args.reverse();
    }
    let lhs = Term::cy(
        px,
        Term::app(Symbol::Ctor { ty: ty.clone(), name: name.clone() }, branch_args),
    );
    Some(RulePair { metas, lhs, rhs: Term::meta("t", vec![]) })
}

fn instantiate_dead_cy(redex: &Term) -> Option<RulePair> {
    let Term::App { sym: Symbol::Cy, args } = redex else {
        return None;
    };
    let (binders, _) = args.first()?.abs_parts()?;
    if binders.is_empty() {
        return None;
    }
    let mut taken: BTreeSet<String> = redex.free_vars();
    let px = canon_binders(binders, None, "x", &mut taken);
    let mut metas = MetaContext::new();
    metas.insert("t".to_string(), MetaDecl { args: vec![], result: TypeSeq(tys_of(&px)) });
    let lhs = Term::cy(px, Term::meta("t", vec![]));
    Some(RulePair { metas, lhs, rhs: Term::meta("t", vec![]) })
}

fn instantiate_self_cy(sig: &Signature, redex: &Term) -> Option<RulePair> {
    let Term::App { sym: Symbol::Cy, args } = redex else {
        return None;
    };
    let (binders, body) = args.first()?.abs_parts()?;
    let [xb] = binders else {
        return None;
    };
    let br = sig.branching(&xb.ty)?;
    if !matches!(body, Term::Var(v) if *v == xb.name) {
        return None;
    }
    let lhs = Term::cy(vec![xb.clone()], Term::var(xb.name.clone()));
    let rhs = Term::ctor(xb.ty.clone(), br.unit.clone(), vec![]);
    Some(RulePair { metas: MetaContext::new(), lhs, rhs })
}

fn instantiate_branch_unit(id: RuleId, sig: &Signature, redex: &Term) -> Option<RulePair> {
    let Term::App { sym: Symbol::Ctor { ty, name }, args } = redex else {
        return None;
    };
    let br = sig.branching(ty)?;
    if *name != br.branch || args.len() != 2 {
        return None;
    }
    let unit_side = if id == RuleId::R15 { 0 } else { 1 };
    // Quick shape check: the unit constructor on the unit side.
    if !matches!(&args[unit_side], Term::App { sym: Symbol::Ctor { name: n, .. }, .. } if *n == br.unit)
    {
        return None;
    }
    let mut metas = MetaContext::new();
    metas.insert("t".to_string(), MetaDecl { args: vec![], result: TypeSeq::single(ty.clone()) });
    let unit = Term::ctor(ty.clone(), br.unit.clone(), vec![]);
    let mut branch_args = vec![unit, Term::meta("t", vec![])];
    if unit_side == 1 {
        branch_args.reverse();
    }
    let lhs = Term::app(Symbol::Ctor { ty: ty.clone(), name: name.clone() }, branch_args);
    Some(RulePair { metas, lhs, rhs: Term::meta("t", vec![]) })
}

// ---------------------------------------------------------------------
// Representative instances
// ---------------------------------------------------------------------

/// Default fold instances for a signature: for each datatype `c`, a fold
/// into a single type and a paired (primitive-recursion-shaped) fold.
pub fn default_fold_insts(sig: &Signature) -> Vec<FoldInst> {
    let mut out = Vec::new();
    for dt in sig.datatypes() {
        let c = dt.name.clone();
        out.push(FoldInst::new(c.clone(), TypeSeq::single(c.clone()), TypeSeq::single(c.clone())));
        out.push(FoldInst::new(
            c.clone(),
            TypeSeq(vec![c.clone(), c.clone()]),
            TypeSeq::single(c.clone()),
        ));
    }
    out
}

/// Deduplicated (source, target) keys of fold instances.
fn fold_keys(sig: &Signature, folds: &[FoldInst]) -> Vec<(BaseTypeId, TypeSeq)> {
    let mut keys: Vec<(BaseTypeId, TypeSeq)> = Vec::new();
    for fi in folds {
        if sig.datatype(&fi.src).is_none() {
            continue;
        }
        let key = (fi.src.clone(), fi.tgt.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys
}

/// A synthetic structure argument (binders per arity, placeholder body).
fn synth_structures(sig: &Signature, fi: &FoldInst) -> Vec<Term> {
    let dt = sig.datatype(&fi.src).expect("fold source datatype");
    dt.ctors
        .iter()
        .map(|c| {
            let tys = sig.structure_binder_types(fi, c);
            let binders: Vec<Binder> = tys
                .iter()
                .enumerate()
                .map(|(i, ty)| Binder::new(format!("b{}", i + 1), ty.clone()))
                .collect();
            Term::abs(binders, Term::var("_"))
        })
        .collect()
}

fn synth_params(fi: &FoldInst, main_binders: &[Binder]) -> Vec<Term> {
    let flat = TypeSeq::concat(main_binders.iter().map(|b| fi.map_base(&b.ty)));
    (0..flat.width()).map(|k| Term::var(format!("_p{}", k + 1))).collect()
}

fn fold_redex(sig: &Signature, fi: &FoldInst, main_binders: Vec<Binder>, body: Term) -> Term {
    let params = synth_params(fi, &main_binders);
    Term::fold(fi.clone(), synth_structures(sig, fi), Term::abs(main_binders, body), params)
}

fn inst(
    id: RuleId,
    sig: &Signature,
    label: String,
    redex: &Term,
    beta_result: Option<&TypeSeq>,
) -> RuleInstance {
    let pair = instantiate(id, sig, redex, beta_result)
        .unwrap_or_else(|| panic!("representative redex for {} must instantiate", id.name()));
    RuleInstance { rule: id.name(), label, pair }
}

fn representatives(id: RuleId, sig: &Signature, folds: &[FoldInst]) -> Vec<RuleInstance> {
    let mut out = Vec::new();
    let keys = fold_keys(sig, folds);
    let first_dt = sig.datatypes().next().map(|d| d.name.clone());
    match id {
        RuleId::R1 => {
            for (src, tgt) in &keys {
                let fi = FoldInst::new(src.clone(), tgt.clone(), TypeSeq::single(src.clone()));
                let y = Binder::new("y", src.clone());
                let redex = fold_redex(sig, &fi, vec![y.clone()], Term::var("y"));
                out.push(inst(id, sig, format!("1r @ fold{{{} -> {}}}", src, tgt), &redex, None));
                // Two binders, second selected: exercises parameter groups.
                let y2 = Binder::new("y2", src.clone());
                let redex2 = fold_redex(
                    sig,
                    &fi,
                    vec![Binder::new("y1", src.clone()), y2],
                    Term::var("y2"),
                );
                out.push(inst(
                    id,
                    sig,
                    format!("1r (binder 2 of 2) @ fold{{{} -> {}}}", src, tgt),
                    &redex2,
                    None,
                ));
            }
        }
        RuleId::R2 => {
            for (src, tgt) in &keys {
                let fi = FoldInst::new(src.clone(), tgt.clone(), TypeSeq::unit());
                let redex =
                    fold_redex(sig, &fi, vec![Binder::new("y", src.clone())], Term::empty());
                out.push(inst(id, sig, format!("2r @ fold{{{} -> {}}}", src, tgt), &redex, None));
            }
        }
        RuleId::R3 => {
            for (src, tgt) in &keys {
                let fi = FoldInst::new(
                    src.clone(),
                    tgt.clone(),
                    TypeSeq(vec![src.clone(), src.clone()]),
                );
                let redex = fold_redex(
                    sig,
                    &fi,
                    vec![Binder::new("y", src.clone())],
                    Term::app(Symbol::Tuple, vec![Term::var("u1"), Term::var("u2")]),
                );
                out.push(inst(id, sig, format!("3r @ fold{{{} -> {}}}", src, tgt), &redex, None));
            }
        }
        RuleId::R4 => {
            for (src, tgt) in &keys {
                let fi = FoldInst::new(src.clone(), tgt.clone(), TypeSeq::single(src.clone()));
                let redex = fold_redex(
                    sig,
                    &fi,
                    vec![Binder::new("y", src.clone())],
                    Term::cy(vec![Binder::new("x", src.clone())], Term::var("x")),
                );
                out.push(inst(id, sig, format!("4r @ fold{{{} -> {}}}", src, tgt), &redex, None));
            }
        }
        RuleId::R5 => {
            for (src, tgt) in &keys {
                let dt = sig.datatype(src).expect("fold key datatype");
                for ctor in &dt.ctors {
                    let fi = FoldInst::new(src.clone(), tgt.clone(), TypeSeq::single(src.clone()));
                    let cargs: Vec<Term> =
                        (0..ctor.args.len()).map(|j| Term::var(format!("u{}", j + 1))).collect();
                    let redex = fold_redex(
                        sig,
                        &fi,
                        vec![Binder::new("y", src.clone())],
                        Term::ctor(src.clone(), ctor.name.clone(), cargs),
                    );
                    out.push(inst(
                        id,
                        sig,
                        format!("5r({}) @ fold{{{} -> {}}}", ctor.name, src, tgt),
                        &redex,
                        None,
                    ));
                }
            }
        }
        RuleId::R7 => {
            let Some(c) = first_dt else {
                return out;
            };
            let single = Term::at(
                vec![Binder::new("y", c.clone())],
                Term::var("y"),
                Term::var("u"),
            );
            let result = TypeSeq::single(c.clone());
            out.push(inst(id, sig, "7r (one binder)".to_string(), &single, Some(&result)));
            // Three binders filled by widths [1, 2].
            let multi = Term::at(
                vec![
                    Binder::new("y1", c.clone()),
                    Binder::new("y2", c.clone()),
                    Binder::new("y3", c.clone()),
                ],
                Term::var("y1"),
                Term::app(
                    Symbol::Tuple,
                    vec![
                        Term::var("u1"),
                        Term::app(Symbol::Tuple, vec![Term::var("u2"), Term::var("u3")]),
                    ],
                ),
            );
            out.push(inst(id, sig, "7r (widths [1, 2])".to_string(), &multi, Some(&result)));
        }
        RuleId::R10 => {
            let Some(c) = first_dt else {
                return out;
            };
            let two = Term::cy(
                vec![Binder::new("x", c.clone()), Binder::new("y", c.clone())],
                Term::app(Symbol::Tuple, vec![Term::var("x"), Term::var("y")]),
            );
            out.push(inst(id, sig, "10r (widths 1+1)".to_string(), &two, None));
            let three = Term::cy(
                vec![
                    Binder::new("x", c.clone()),
                    Binder::new("y", c.clone()),
                    Binder::new("z", c.clone()),
                ],
                Term::app(
                    Symbol::Tuple,
                    vec![
                        Term::var("x"),
                        Term::app(Symbol::Tuple, vec![Term::var("y"), Term::var("z")]),
                    ],
                ),
            );
            out.push(inst(id, sig, "10r (widths 1+2)".to_string(), &three, None));
        }
        RuleId::R11 | RuleId::R12 => {
            for (dt, br) in sig.branching_datatypes() {
                let x = Binder::new("x", dt.name.clone());
                let mut args = vec![Term::var("x"), Term::var("u")];
                if id == RuleId::R12 {
                    args.reverse();
                }
                let redex =
                    Term::cy(vec![x], Term::ctor(dt.name.clone(), br.branch.clone(), args));
                out.push(inst(id, sig, format!("{} @ {}", id.name(), dt.name), &redex, None));
            }
        }
        RuleId::R13 => {
            let Some(c) = first_dt else {
                return out;
            };
            let one = Term::cy(vec![Binder::new("x", c.clone())], Term::var("u"));
            out.push(inst(id, sig, "13r (one binder)".to_string(), &one, None));
            let two = Term::cy(
                vec![Binder::new("x", c.clone()), Binder::new("y", c.clone())],
                Term::app(Symbol::Tuple, vec![Term::var("u1"), Term::var("u2")]),
            );
            out.push(inst(id, sig, "13r (two binders)".to_string(), &two, None));
        }
        RuleId::R14 => {
            for (dt, _) in sig.branching_datatypes() {
                let x = Binder::new("x", dt.name.clone());
                let redex = Term::cy(vec![x], Term::var("x"));
                out.push(inst(id, sig, format!("14r @ {}", dt.name), &redex, None));
            }
        }
        RuleId::R15 | RuleId::R16 => {
            for (dt, br) in sig.branching_datatypes() {
                let unit = Term::ctor(dt.name.clone(), br.unit.clone(), vec![]);
                let mut args = vec![unit, Term::var("u")];
                if id == RuleId::R16 {
                    args.reverse();
                }
                let redex = Term::ctor(dt.name.clone(), br.branch.clone(), args);
                out.push(inst(id, sig, format!("{} @ {}", id.name(), dt.name), &redex, None));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::fixtures;
    use crate::typing::check_equation;

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

    fn sum_fold(main_binders: Vec<Binder>, body: Term, params: Vec<Term>) -> Term {
        // fold{CList -> CNat} with sum-like structures and body type CList.
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
                    Term::ctor("CNat", "S", vec![Term::var("v")]),
                ),
            ],
            Term::abs(main_binders, body),
            params,
        )
    }

    #[test]
    fn rule_4r_binds_open_cycle_body() {
        // fold(E, y. cy(x. 2 :: x)) matches 4r with t := (y, x. 2 :: x).
        let sig = fixtures::nat_list();
        let redex = sum_fold(
            vec![b("y", "CList")],
            Term::cy(vec![b("x", "CList")], cons(nat(2), Term::var("x"))),
            vec![Term::var("q")],
        );
        let rule = RewriteRule { id: RuleId::R4 };
        let pair = rule.instantiate(&sig, &redex).expect("shape");
        let theta = match_pattern(&pair.lhs, &redex).expect("match");
        let t = theta.get("t").expect("t bound");
        assert_eq!(t.binders.len(), 2);
        let expected = MetaAssign::new(
            vec![b("y", "CList"), b("x", "CList")],
            cons(nat(2), Term::var("x")),
        );
        assert!(assigns_alpha_eq(t, &expected), "got {:?}", t);
        // Round trip.
        assert!(pair.lhs.subst_meta(&theta).unwrap().alpha_eq(&redex));
    }

    #[test]
    fn rule_13r_requires_absence() {
        let sig = fixtures::nat_list();
        let rule = RewriteRule { id: RuleId::R13 };
        let live = Term::cy(vec![b("x", "CNat")], Term::ctor("CNat", "S", vec![Term::var("x")]));
        let pair = rule.instantiate(&sig, &live).expect("shape applies");
        assert!(match_pattern(&pair.lhs, &live).is_none(), "x occurs: no match");

        let dead = Term::cy(vec![b("x", "CNat")], Term::ctor("CNat", "S", vec![nat(0)]));
        let pair = rule.instantiate(&sig, &dead).expect("shape");
        let theta = match_pattern(&pair.lhs, &dead).expect("match");
        let rhs = pair.rhs.subst_meta(&theta).unwrap();
        assert!(rhs.alpha_eq(&Term::ctor("CNat", "S", vec![nat(0)])));
    }

    #[test]
    fn rule_7r_beta_substitutes() {
        let sig = fixtures::nat_list();
        let rule = RewriteRule { id: RuleId::R7 };
        let redex = Term::at(
            vec![b("y", "CNat")],
            cons(Term::var("y"), Term::ctor("CList", "nil", vec![])),
            nat(1),
        );
        let pair = rule.instantiate(&sig, &redex).expect("shape");
        let theta = match_pattern(&pair.lhs, &redex).expect("match");
        let out = pair.rhs.subst_meta(&theta).unwrap();
        assert!(out.alpha_eq(&cons(nat(1), Term::ctor("CList", "nil", vec![]))));
    }

    #[test]
    fn rule_7r_multi_binder_needs_tuple() {
        let sig = fixtures::nat_list();
        let rule = RewriteRule { id: RuleId::R7 };
        let abs_body = Term::var("y1");
        let binders = vec![b("y1", "CNat"), b("y2", "CNat")];
        // Non-tuple argument: stuck.
        let stuck = Term::at(binders.clone(), abs_body.clone(), Term::var("w"));
        assert!(rule.instantiate(&sig, &stuck).is_none());
        // Tuple argument: reduces componentwise.
        let redex = Term::at(
            binders,
            abs_body,
            Term::tuple(vec![nat(1), nat(2)]),
        );
        let pair = rule.instantiate(&sig, &redex).expect("shape");
        let theta = match_pattern(&pair.lhs, &redex).expect("match");
        let out = pair.rhs.subst_meta(&theta).unwrap();
        assert!(out.alpha_eq(&nat(1)));
    }

    #[test]
    fn rule_5r_rejects_binder_leak_into_nonrecursive_argument() {
        // fold(E, y. (y-dependent head) :: t): the head of :: is
        // non-recursive (CNat), so it must not mention y.
        let sig = fixtures::nat_list();
        let fi = FoldInst::new("CList", TypeSeq::single("CNat".into()), TypeSeq::single("CList".into()));
        let mk = |head: Term| {
            Term::fold(
                fi.clone(),
                vec![
                    Term::abs(vec![], nat(0)),
                    Term::abs(vec![b("k", "CNat"), b("v", "CNat")], Term::var("v")),
                ],
                Term::abs(vec![b("y", "CNat")], cons(head, Term::ctor("CList", "nil", vec![]))),
                vec![Term::var("q")],
            )
        };
        let rule = RewriteRule { id: RuleId::R5 };
        let leaky = mk(Term::var("y"));
        let pair = rule.instantiate(&sig, &leaky).expect("shape");
        assert!(match_pattern(&pair.lhs, &leaky).is_none(), "leaked binder must not match");

        let clean = mk(nat(3));
        let pair = rule.instantiate(&sig, &clean).expect("shape");
        let theta = match_pattern(&pair.lhs, &clean).expect("match");
        assert!(pair.lhs.subst_meta(&theta).unwrap().alpha_eq(&clean));
    }

    #[test]
    fn rule_1r_selects_parameter_group() {
        // Paired fold: binder y2 of source type expands to two parameters.
        let sig = fixtures::nat_list();
        let fi = FoldInst::new(
            "CList",
            TypeSeq(vec!["CNat".into(), "CList".into()]),
            TypeSeq::single("CList".into()),
        );
        let redex = Term::fold(
            fi.clone(),
            synth_structures(&sig, &fi),
            Term::abs(vec![b("y1", "CNat"), b("y2", "CList")], Term::var("y2")),
            vec![Term::var("q1"), Term::var("q2"), Term::var("q3")],
        );
        let rule = RewriteRule { id: RuleId::R1 };
        let pair = rule.instantiate(&sig, &redex).expect("shape");
        let theta = match_pattern(&pair.lhs, &redex).expect("match");
        let out = pair.rhs.subst_meta(&theta).unwrap();
        // y1 : CNat is one slot; y2 : CList expands to slots 2 and 3.
        assert!(out.alpha_eq(&Term::tuple(vec![Term::var("q2"), Term::var("q3")])));
    }

    #[test]
    fn bekic_splits_two_binder_cycle() {
        let sig = fixtures::nat_list();
        let s = |v: &str| Term::ctor("CNat", "S", vec![Term::var(v)]);
        let redex = Term::cy(
            vec![b("x", "CNat"), b("y", "CNat")],
            Term::app(Symbol::Tuple, vec![s("y"), s("x")]),
        );
        let rule = RewriteRule { id: RuleId::R10 };
        let pair = rule.instantiate(&sig, &redex).expect("shape");
        let theta = match_pattern(&pair.lhs, &redex).expect("match");
        let out = pair.rhs.subst_meta(&theta).unwrap();
        // Expected: < cy(x. (y. S(y)) @ cy(y. S(x))),
        //             cy(y. (x. S(x)) @ cy(x. (y. S(y)) @ cy(y. S(x)))) >
        let inner = Term::cy(vec![b("y", "CNat")], s("x"));
        let first = Term::cy(vec![b("x", "CNat")], Term::at(vec![b("y", "CNat")], s("y"), inner));
        let second = Term::cy(
            vec![b("y", "CNat")],
            Term::at(vec![b("x", "CNat")], s("x"), first.clone()),
        );
        let expected = Term::tuple(vec![first, second]);
        assert!(out.alpha_eq(&expected), "got {}", out);
    }

    #[test]
    fn branch_rules_cancel() {
        let sig = fixtures::tree_bool();
        // cy(x. x + u) -> u
        let r11 = RewriteRule { id: RuleId::R11 };
        let redex = Term::cy(
            vec![b("x", "CTree")],
            Term::ctor("CTree", "+", vec![Term::var("x"), Term::var("u")]),
        );
        let pair = r11.instantiate(&sig, &redex).expect("shape");
        let theta = match_pattern(&pair.lhs, &redex).expect("match");
        assert!(pair.rhs.subst_meta(&theta).unwrap().alpha_eq(&Term::var("u")));

        // cy(x. x) -> nil at CTree
        let r14 = RewriteRule { id: RuleId::R14 };
        let self_cy = Term::cy(vec![b("x", "CTree")], Term::var("x"));
        let pair = r14.instantiate(&sig, &self_cy).expect("shape");
        let theta = match_pattern(&pair.lhs, &self_cy).expect("match");
        assert!(pair
            .rhs
            .subst_meta(&theta)
            .unwrap()
            .alpha_eq(&Term::ctor("CTree", "nil", vec![])));

        // nil + u -> u
        let r15 = RewriteRule { id: RuleId::R15 };
        let unit_l = Term::ctor(
            "CTree",
            "+",
            vec![Term::ctor("CTree", "nil", vec![]), Term::var("u")],
        );
        let pair = r15.instantiate(&sig, &unit_l).expect("shape");
        let theta = match_pattern(&pair.lhs, &unit_l).expect("match");
        assert!(pair.rhs.subst_meta(&theta).unwrap().alpha_eq(&Term::var("u")));
    }

    #[test]
    fn representatives_typecheck_everywhere() {
        for sig in [fixtures::nat_list(), fixtures::tree_bool()] {
            let folds = default_fold_insts(&sig);
            for set in [gen_foldr(&sig), gen_simp(&sig)] {
                for ri in set.representatives(&sig, &folds) {
                    let res = check_equation(
                        &sig,
                        &ri.pair.metas,
                        &BTreeMap::new(),
                        &ri.pair.lhs,
                        &ri.pair.rhs,
                    );
                    assert!(
                        res.is_ok(),
                        "{} ({}) must typecheck: {:?}\n  lhs {}\n  rhs {}",
                        ri.rule,
                        ri.label,
                        res.err(),
                        ri.pair.lhs,
                        ri.pair.rhs
                    );
                }
            }
        }
    }

    #[test]
    fn representatives_roundtrip_through_matching() {
        // For every representative: assign each metavariable a canonical
        // body of distinct free variables, instantiate the pattern, and
        // check that shape extraction + matching reproduces the redex.
        for sig in [fixtures::nat_list(), fixtures::tree_bool()] {
            let folds = default_fold_insts(&sig);
            for set in [gen_foldr(&sig), gen_simp(&sig)] {
                for rule in &set.rules {
                    for ri in rule.representatives(&sig, &folds) {
                        let mut theta = MetaSubst::new();
                        for (i, (m, decl)) in ri.pair.metas.iter().enumerate() {
                            let binders: Vec<Binder> = decl
                                .args
                                .iter()
                                .enumerate()
                                .map(|(j, ty)| Binder::new(format!("w{}_{}", i, j), ty.clone()))
                                .collect();
                            let body = Term::tuple(
                                (0..decl.result.width())
                                    .map(|j| Term::var(format!("f{}_{}", i, j)))
                                    .collect(),
                            );
                            theta.insert(m.clone(), MetaAssign::new(binders, body));
                        }
                        let subject = ri.pair.lhs.subst_meta(&theta).unwrap();
                        let pair2 = rule
                            .instantiate(&sig, &subject)
                            .unwrap_or_else(|| panic!("{} ({}): reshape", ri.rule, ri.label));
                        let theta2 = match_pattern(&pair2.lhs, &subject)
                            .unwrap_or_else(|| panic!("{} ({}): rematch", ri.rule, ri.label));
                        let back = pair2.lhs.subst_meta(&theta2).unwrap();
                        assert!(
                            back.alpha_eq(&subject),
                            "{} ({}): round trip\n  subject {}\n  back {}",
                            ri.rule,
                            ri.label,
                            subject,
                            back
                        );
                        // And both replacement sides agree.
                        let out1 = ri.pair.rhs.subst_meta(&theta).unwrap();
                        let out2 = pair2.rhs.subst_meta(&theta2).unwrap();
                        assert!(
                            out1.alpha_eq(&out2),
                            "{} ({}): replacements diverge\n  {}\n  {}",
                            ri.rule,
                            ri.label,
                            out1,
                            out2
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn fixpoint_fixture_shape() {
        let fx = fixpoint_fixture(&"CNat".into());
        assert_eq!(fx.rule, "fix");
        // rhs embeds the lhs as the metavariable argument.
        let Term::Meta { name, args } = &fx.pair.rhs else {
            panic!("rhs is a metavariable application")
        };
        assert_eq!(name, "m");
        assert!(args[0].alpha_eq(&fx.pair.lhs));
        let sig = fixtures::nat_list();
        assert!(check_equation(&sig, &fx.pair.metas, &BTreeMap::new(), &fx.pair.lhs, &fx.pair.rhs)
            .is_ok());
    }
}
