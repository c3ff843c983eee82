//! Seeded term generation and executable equational axiom schemes, the
//! raw material for the property-test suites.
//!
//! [`Gen`] produces closed well-typed terms over a signature from a
//! fixed seed: full-feature terms (constructors, cycles, tuples,
//! compositions, folds) for exercising the rewrite engine, and *value*
//! terms (constructors, literals and cycles only — no folds or
//! compositions) whose normal forms are always chartable. [`Gen::perturb`]
//! applies one bisimilarity-preserving transformation — alpha renaming,
//! cycle unfolding, or a branching axiom — so `(t, perturb(t))` is a
//! ready-made bisimilar pair.
//!
//! [`axiom_schemes`] builds the equational axioms for cycles and for
//! branching as metavariable pairs; [`Gen::instantiate`] closes any such
//! pair (or any generated rewrite rule) under random value assignments,
//! turning each axiom into an executable test schema: normalize both
//! sides, then check bisimilarity.

use crate::kernel::{Binder, BaseTypeId, MetaAssign, MetaSubst, Symbol, Term, TypeSeq};
use crate::rules::RulePair;
use crate::signature::{CtorDecl, DatatypeDecl, Signature};
use crate::typing::{MetaContext, MetaDecl};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Knobs for [`Gen`].
#[derive(Debug, Clone)]
pub struct GenCfg {
    /// Structural depth bound.
    pub max_depth: usize,
    /// Allow fold nodes in [`Gen::term`].
    pub folds: bool,
    /// Allow composition (`@`) nodes in [`Gen::term`].
    pub compositions: bool,
    /// Allow cycles.
    pub cycles: bool,
}

impl Default for GenCfg {
    fn default() -> Self {
        GenCfg { max_depth: 4, folds: true, compositions: true, cycles: true }
    }
}

/// A deterministic, seeded term generator over a signature.
pub struct Gen<'a> {
    sig: &'a Signature,
    pub cfg: GenCfg,
    rng: ChaCha8Rng,
    /// Declared datatype names, in declaration order.
    dts: Vec<BaseTypeId>,
    counter: usize,
}

impl<'a> Gen<'a> {
    pub fn new(sig: &'a Signature, seed: u64) -> Self {
        Self::with_cfg(sig, seed, GenCfg::default())
    }

    pub fn with_cfg(sig: &'a Signature, seed: u64, cfg: GenCfg) -> Self {
        let dts = sig.datatypes().map(|d| d.name.clone()).collect();
        Gen { sig, cfg, rng: ChaCha8Rng::seed_from_u64(seed), dts, counter: 0 }
    }

    fn fresh(&mut self) -> String {
        self.counter += 1;
        format!("g{}", self.counter)
    }

    fn pick<'t, T>(&mut self, items: &'t [T]) -> &'t T {
        &items[self.rng.gen_range(0..items.len())]
    }

    fn random_datatype(&mut self) -> BaseTypeId {
        self.pick(&self.dts.clone()).clone()
    }

    /// A closed well-typed term of the given base type, drawing on the
    /// whole term language admitted by the configuration.
    pub fn term(&mut self, ty: &BaseTypeId) -> Term {
        let depth = self.cfg.max_depth;
        self.term_in(&[], ty, depth)
    }

    /// A closed term of the given type sequence.
    pub fn seq(&mut self, tys: &TypeSeq) -> Term {
        let depth = self.cfg.max_depth;
        self.seq_in(&[], tys, depth)
    }

    /// A closed *value*: constructors, literals and cycles only. Values
    /// contain no folds or compositions, so they are normal forms of the
    /// fold rules and always chartable after simplification.
    pub fn value(&mut self, ty: &BaseTypeId) -> Term {
        let depth = self.cfg.max_depth;
        self.value_in(&[], ty, depth)
    }

    // ---- recursive builders -------------------------------------------

    fn literal(&mut self, ty: &BaseTypeId) -> Term {
        const POOL: [&str; 4] = ["lo", "mi", "hi", "ra"];
        Term::lit(*self.pick(&POOL), ty.clone())
    }

    /// Inhabitant of last resort: the divergent cycle, which exists at
    /// every type.
    fn divergent(&mut self, ty: &BaseTypeId) -> Term {
        let x = self.fresh();
        Term::cy(vec![Binder::new(x.clone(), ty.clone())], Term::var(x))
    }

    fn value_in(&mut self, scope: &[Binder], ty: &BaseTypeId, depth: usize) -> Term {
        if self.sig.is_primitive(ty) {
            return self.literal(ty);
        }
        let Some(decl) = self.sig.datatype(ty).cloned() else {
            return self.divergent(ty);
        };
        let vars: Vec<&Binder> = scope.iter().filter(|b| b.ty == *ty).collect();
        let nullary: Vec<&CtorDecl> = decl.ctors.iter().filter(|c| c.args.is_empty()).collect();
        let deeper: Vec<&CtorDecl> = decl.ctors.iter().filter(|c| !c.args.is_empty()).collect();

        // Weighted menu of applicable shapes.
        let mut menu: Vec<u8> = Vec::new();
        if !vars.is_empty() {
            menu.extend([0, 0]);
        }
        if !nullary.is_empty() {
            menu.push(1);
        }
        if depth > 0 && !deeper.is_empty() {
            menu.extend([2, 2, 2]);
        }
        if depth > 0 && self.cfg.cycles {
            menu.push(3);
        }
        match menu.as_slice() {
            [] => self.divergent(ty),
            m => match *self.pick(m) {
                0 => Term::var(self.pick(&vars).name.clone()),
                1 => {
                    let c = self.pick(&nullary);
                    Term::ctor(ty.clone(), c.name.clone(), vec![])
                }
                2 => {
                    let c: CtorDecl = (**self.pick(&deeper)).clone();
                    let args = c
                        .args
                        .iter()
                        .map(|a| self.value_in(scope, a, depth - 1))
                        .collect();
                    Term::ctor(ty.clone(), c.name.clone(), args)
                }
                _ => {
                    let x = Binder::new(self.fresh(), ty.clone());
                    let mut inner = scope.to_vec();
                    inner.push(x.clone());
                    let body = self.value_in(&inner, ty, depth - 1);
                    Term::cy(vec![x], body)
                }
            },
        }
    }

    fn term_in(&mut self, scope: &[Binder], ty: &BaseTypeId, depth: usize) -> Term {
        if self.sig.is_primitive(ty) {
            return self.literal(ty);
        }
        if self.sig.datatype(ty).is_none() {
            return self.divergent(ty);
        }
        let mut menu: Vec<u8> = vec![0]; // 0 = value shape
        if depth > 0 {
            if self.cfg.folds {
                menu.extend([1, 1]);
            }
            if self.cfg.compositions {
                menu.push(2);
            }
        }
        match *self.pick(&menu.clone()) {
            1 => self.fold_in(scope, ty, depth),
            2 => self.compose_in(scope, ty, depth),
            _ => self.value_shape_in(scope, ty, depth),
        }
    }

    /// One constructor / variable / cycle layer whose children are again
    /// full terms.
    fn value_shape_in(&mut self, scope: &[Binder], ty: &BaseTypeId, depth: usize) -> Term {
        let decl = self.sig.datatype(ty).expect("caller checked").clone();
        let vars: Vec<&Binder> = scope.iter().filter(|b| b.ty == *ty).collect();
        let nullary: Vec<&CtorDecl> = decl.ctors.iter().filter(|c| c.args.is_empty()).collect();
        let deeper: Vec<&CtorDecl> = decl.ctors.iter().filter(|c| !c.args.is_empty()).collect();
        let mut menu: Vec<u8> = Vec::new();
        if !vars.is_empty() {
            menu.extend([0, 0]);
        }
        if !nullary.is_empty() {
            menu.push(1);
        }
        if depth > 0 && !deeper.is_empty() {
            menu.extend([2, 2, 2]);
        }
        if depth > 0 && self.cfg.cycles {
            menu.push(3);
        }
        match menu.as_slice() {
            [] => self.divergent(ty),
            m => match *self.pick(m) {
                0 => Term::var(self.pick(&vars).name.clone()),
                1 => {
                    let c = self.pick(&nullary);
                    Term::ctor(ty.clone(), c.name.clone(), vec![])
                }
                2 => {
                    let c: CtorDecl = (**self.pick(&deeper)).clone();
                    let args =
                        c.args.iter().map(|a| self.term_in(scope, a, depth - 1)).collect();
                    Term::ctor(ty.clone(), c.name.clone(), args)
                }
                _ => {
                    let x = Binder::new(self.fresh(), ty.clone());
                    let mut inner = scope.to_vec();
                    inner.push(x.clone());
                    let body = self.term_in(&inner, ty, depth - 1);
                    Term::cy(vec![x], body)
                }
            },
        }
    }

    fn fold_in(&mut self, scope: &[Binder], ty: &BaseTypeId, depth: usize) -> Term {
        let src = self.random_datatype();
        let decl = self.sig.datatype(&src).expect("datatype list").clone();
        let fi = crate::kernel::FoldInst::new(
            src.clone(),
            TypeSeq::single(ty.clone()),
            TypeSeq::single(src.clone()),
        );
        let mut structures = Vec::new();
        for ctor in &decl.ctors {
            let want = self.sig.structure_binder_types(&fi, ctor);
            let binders: Vec<Binder> =
                want.iter().map(|t| Binder::new(self.fresh(), t.clone())).collect();
            // Structure bodies close over their own binders only, per
            // the decidable-fragment side condition.
            let body = self.term_in(&binders, ty, depth - 1);
            structures.push(Term::abs(binders, body));
        }
        if self.rng.gen_bool(0.5) {
            let main = Term::abs(vec![], self.term_in(scope, &src, depth - 1));
            Term::fold(fi, structures, main, vec![])
        } else {
            // Main binders are interpreted into the target, so the
            // parameter feeding a source-typed binder has target type.
            let z = Binder::new(self.fresh(), src.clone());
            let main = Term::abs(vec![z.clone()], Term::var(z.name.clone()));
            let param = self.term_in(scope, ty, depth - 1);
            Term::fold(fi, structures, main, vec![param])
        }
    }

    fn compose_in(&mut self, scope: &[Binder], ty: &BaseTypeId, depth: usize) -> Term {
        let w = self.rng.gen_range(1..=2);
        let tys: Vec<BaseTypeId> = (0..w).map(|_| self.random_datatype()).collect();
        let binders: Vec<Binder> =
            tys.iter().map(|t| Binder::new(self.fresh(), t.clone())).collect();
        let arg = self.seq_in(scope, &TypeSeq(tys), depth - 1);
        let mut inner = scope.to_vec();
        inner.extend(binders.iter().cloned());
        let body = self.term_in(&inner, ty, depth - 1);
        Term::at(binders, body, arg)
    }

    fn seq_in(&mut self, scope: &[Binder], tys: &TypeSeq, depth: usize) -> Term {
        if let Some(ty) = tys.sole() {
            return self.term_in(scope, &ty.clone(), depth);
        }
        // Occasionally produce a genuine multi-binder cycle; otherwise a
        // tuple of components.
        if depth > 0 && self.cfg.cycles && tys.width() > 0 && self.rng.gen_bool(0.25) {
            let binders: Vec<Binder> =
                tys.iter().map(|t| Binder::new(self.fresh(), t.clone())).collect();
            let mut inner = scope.to_vec();
            inner.extend(binders.iter().cloned());
            let body = self.seq_in(&inner, tys, depth - 1);
            return Term::cy(binders, body);
        }
        let comps = tys
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .iter()
            .map(|t| self.term_in(scope, t, depth.saturating_sub(1)))
            .collect();
        Term::tuple(comps)
    }

    fn value_seq_in(&mut self, scope: &[Binder], tys: &TypeSeq, depth: usize) -> Term {
        if let Some(ty) = tys.sole() {
            return self.value_in(scope, &ty.clone(), depth);
        }
        let comps = tys
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .iter()
            .map(|t| self.value_in(scope, t, depth.saturating_sub(1)))
            .collect();
        Term::tuple(comps)
    }

    // ---- metavariable instantiation ------------------------------------

    /// A random value assignment for one metavariable arity.
    pub fn assign(&mut self, decl: &MetaDecl) -> MetaAssign {
        let binders: Vec<Binder> =
            decl.args.iter().map(|t| Binder::new(self.fresh(), t.clone())).collect();
        let depth = self.cfg.max_depth.min(3);
        let body = self.value_seq_in(&binders, &decl.result, depth);
        MetaAssign::new(binders, body)
    }

    /// Close both sides of a metavariable pair (an axiom scheme or a
    /// rule instance) under one random value assignment per
    /// metavariable.
    pub fn instantiate(&mut self, pair: &RulePair) -> (Term, Term) {
        let mut theta = MetaSubst::new();
        for (name, decl) in &pair.metas {
            let a = self.assign(decl);
            theta.insert(name.clone(), a);
        }
        let lhs = pair.lhs.subst_meta(&theta).expect("assignment arities match the context");
        let rhs = pair.rhs.subst_meta(&theta).expect("assignment arities match the context");
        (lhs, rhs)
    }

    // ---- bisimilarity-preserving perturbation ---------------------------

    /// Apply one random bisimilarity-preserving transformation: alpha
    /// renaming of a cycle binder, unfolding a cycle once, or — at
    /// branching types — swapping, reassociating, duplicating, or
    /// padding a branch with its unit. Returns the term unchanged if no
    /// site applies.
    pub fn perturb(&mut self, t: &Term) -> Term {
        let sites = collect_sites(self.sig, t, &mut Vec::new());
        if sites.is_empty() {
            return t.clone();
        }
        let site = self.pick(&sites).clone();
        let fresh = self.fresh();
        map_at(t, &site.path, |sub| apply_site(self.sig, &site.kind, sub, &fresh))
    }
}

#[derive(Debug, Clone)]
struct Site {
    path: Vec<usize>,
    kind: SiteKind,
}

#[derive(Debug, Clone)]
enum SiteKind {
    /// Rename the binder of a one-binder cycle.
    Alpha,
    /// `cy(x. b) -> b[x := cy(x. b)]`.
    Unfold,
    /// `s + t -> t + s` at a branching type.
    Comm,
    /// `(s + t) + u -> s + (t + u)`.
    Assoc,
    /// `v -> v + v` at a branching type.
    Degen(BaseTypeId),
    /// `v -> unit + v` at a branching type.
    Unit(BaseTypeId),
}

/// The branching type of a subterm, when its root determines one.
fn branching_root(sig: &Signature, t: &Term) -> Option<BaseTypeId> {
    let ty = match t {
        Term::App { sym: Symbol::Ctor { ty, .. }, .. } => ty.clone(),
        Term::App { sym: Symbol::Cy, args } => {
            let (binders, _) = args.first()?.abs_parts()?;
            match binders {
                [b] => b.ty.clone(),
                _ => return None,
            }
        }
        _ => return None,
    };
    sig.branching(&ty).is_some().then_some(ty)
}

fn collect_sites(sig: &Signature, t: &Term, path: &mut Vec<usize>) -> Vec<Site> {
    let mut out = Vec::new();
    if let Term::App { sym: Symbol::Cy, args } = t {
        if let Some((binders, _)) = args.first().and_then(|a| a.abs_parts()) {
            if binders.len() == 1 {
                out.push(Site { path: path.clone(), kind: SiteKind::Alpha });
                out.push(Site { path: path.clone(), kind: SiteKind::Unfold });
            }
        }
    }
    if let Term::App { sym: Symbol::Ctor { ty, name }, args } = t {
        if let Some(br) = sig.branching(ty) {
            if *name == br.branch {
                out.push(Site { path: path.clone(), kind: SiteKind::Comm });
                if matches!(
                    &args[0],
                    Term::App { sym: Symbol::Ctor { ty: t2, name: n2 }, .. }
                        if t2 == ty && *n2 == br.branch
                ) {
                    out.push(Site { path: path.clone(), kind: SiteKind::Assoc });
                }
            }
        }
    }
    if let Some(ty) = branching_root(sig, t) {
        out.push(Site { path: path.clone(), kind: SiteKind::Degen(ty.clone()) });
        out.push(Site { path: path.clone(), kind: SiteKind::Unit(ty) });
    }
    let children: &[Term] = match t {
        Term::Var(_) | Term::Lit { .. } => &[],
        Term::Abs { body, .. } => std::slice::from_ref(body),
        Term::App { args, .. } | Term::Meta { args, .. } => args,
    };
    for (i, c) in children.iter().enumerate() {
        path.push(i);
        out.extend(collect_sites(sig, c, path));
        path.pop();
    }
    out
}

fn map_at(t: &Term, path: &[usize], f: impl FnOnce(&Term) -> Term) -> Term {
    match path.split_first() {
        None => f(t),
        Some((&i, rest)) => match t {
            Term::Abs { binders, body } => {
                Term::Abs { binders: binders.clone(), body: Box::new(map_at(body, rest, f)) }
            }
            Term::App { sym, args } => {
                let mut args2 = args.clone();
                args2[i] = map_at(&args[i], rest, f);
                Term::App { sym: sym.clone(), args: args2 }
            }
            Term::Meta { name, args } => {
                let mut args2 = args.clone();
                args2[i] = map_at(&args[i], rest, f);
                Term::Meta { name: name.clone(), args: args2 }
            }
            _ => unreachable!("path descends into a leaf"),
        },
    }
}

fn apply_site(sig: &Signature, kind: &SiteKind, sub: &Term, fresh: &str) -> Term {
    match kind {
        SiteKind::Alpha => {
            let Some((binders, body)) = cy_parts(sub) else { return sub.clone() };
            let b = &binders[0];
            let renamed = body
                .subst_vars(&[(b.name.clone(), Term::var(fresh))].into_iter().collect())
                .expect("renaming a variable");
            Term::cy(vec![Binder::new(fresh, b.ty.clone())], renamed)
        }
        SiteKind::Unfold => {
            let Some((binders, body)) = cy_parts(sub) else { return sub.clone() };
            let b = &binders[0];
            body.subst_vars(&[(b.name.clone(), sub.clone())].into_iter().collect())
                .expect("unfolding a cycle")
        }
        SiteKind::Comm => {
            let Term::App { sym, args } = sub else { return sub.clone() };
            Term::App { sym: sym.clone(), args: vec![args[1].clone(), args[0].clone()] }
        }
        SiteKind::Assoc => {
            let Term::App { sym, args } = sub else { return sub.clone() };
            let Term::App { sym: inner, args: st } = &args[0] else { return sub.clone() };
            let (s, t_) = (st[0].clone(), st[1].clone());
            let u = args[1].clone();
            Term::App {
                sym: sym.clone(),
                args: vec![s, Term::App { sym: inner.clone(), args: vec![t_, u] }],
            }
        }
        SiteKind::Degen(ty) => {
            let br = sig.branching(ty).expect("site carries a branching type");
            Term::ctor(ty.clone(), br.branch.clone(), vec![sub.clone(), sub.clone()])
        }
        SiteKind::Unit(ty) => {
            let br = sig.branching(ty).expect("site carries a branching type");
            let unit = Term::ctor(ty.clone(), br.unit.clone(), vec![]);
            Term::ctor(ty.clone(), br.branch.clone(), vec![unit, sub.clone()])
        }
    }
}

fn cy_parts(t: &Term) -> Option<(&[Binder], &Term)> {
    match t {
        Term::App { sym: Symbol::Cy, args } => args.first()?.abs_parts(),
        _ => None,
    }
}

// ---------------------------------------------------------------------
// Equational axiom schemes
// ---------------------------------------------------------------------

/// A named equational axiom between metavariable terms.
#[derive(Debug, Clone)]
pub struct AxiomScheme {
    pub name: String,
    pub pair: RulePair,
}

fn decl(args: &[&BaseTypeId], result: &[&BaseTypeId]) -> MetaDecl {
    MetaDecl {
        args: args.iter().map(|t| (*t).clone()).collect(),
        result: TypeSeq(result.iter().map(|t| (*t).clone()).collect()),
    }
}

fn ctx(entries: &[(&str, MetaDecl)]) -> MetaContext {
    entries.iter().map(|(n, d)| (n.to_string(), d.clone())).collect()
}

fn scheme(name: String, metas: MetaContext, lhs: Term, rhs: Term) -> AxiomScheme {
    AxiomScheme { name, pair: RulePair { metas, lhs, rhs } }
}

/// Project component `i` out of a width-2 term.
fn proj2(i: usize, t1: &BaseTypeId, t2: &BaseTypeId, of: Term) -> Term {
    let binders = vec![Binder::new("p1", t1.clone()), Binder::new("p2", t2.clone())];
    Term::at(binders, Term::var(if i == 0 { "p1" } else { "p2" }), of)
}

/// The cycle axioms, instantiated at result type `c` and auxiliary type
/// `a` (small widths: substitution at one and two arguments, pairing at
/// width two, dinaturality at widths one and two, the two-block cycle
/// split, and cycle idempotence at width two under three index
/// selections).
pub fn cycle_axioms(c: &BaseTypeId, a: &BaseTypeId) -> Vec<AxiomScheme> {
    let tag = |base: &str| format!("{}({}, {})", base, c, a);
    let m = |n: &str, args: Vec<Term>| Term::meta(n, args);
    // (sub) at one argument: (y. t[y]) @ s = t[s].
    let mut out = vec![scheme(
        tag("sub1"),
        ctx(&[("t", decl(&[a], &[c])), ("s", decl(&[], &[a]))]),
        Term::at(vec![Binder::new("y", a.clone())], m("t", vec![Term::var("y")]), m("s", vec![])),
        m("t", vec![m("s", vec![])]),
    )];

    // (sub) at two arguments, applied to a tuple.
    out.push(scheme(
        tag("sub2"),
        ctx(&[
            ("t", decl(&[a, a], &[c])),
            ("s1", decl(&[], &[a])),
            ("s2", decl(&[], &[a])),
        ]),
        Term::at(
            vec![Binder::new("y1", a.clone()), Binder::new("y2", a.clone())],
            m("t", vec![Term::var("y1"), Term::var("y2")]),
            Term::tuple(vec![m("s1", vec![]), m("s2", vec![])]),
        ),
        m("t", vec![m("s1", vec![]), m("s2", vec![])]),
    ));

    // (SP): repairing a width-2 term from its projections.
    out.push(scheme(
        tag("sp"),
        ctx(&[("t", decl(&[], &[c, a]))]),
        Term::tuple(vec![
            proj2(0, c, a, m("t", vec![])),
            proj2(1, c, a, m("t", vec![])),
        ]),
        m("t", vec![]),
    ));

    // (dinat) at width one.
    out.push(scheme(
        tag("dinat1"),
        ctx(&[("s", decl(&[a], &[c])), ("t", decl(&[c], &[a]))]),
        Term::cy(
            vec![Binder::new("x", c.clone())],
            m("s", vec![m("t", vec![Term::var("x")])]),
        ),
        m(
            "s",
            vec![Term::cy(
                vec![Binder::new("z", a.clone())],
                m("t", vec![m("s", vec![Term::var("z")])]),
            )],
        ),
    ));

    // (dinat) at width two: composite metas need explicit projections.
    {
        let s_of = |x1: &str, x2: &str| m("s", vec![Term::var(x1), Term::var(x2)]);
        let t_of = |x1: &str, x2: &str| m("t", vec![Term::var(x1), Term::var(x2)]);
        let lhs = Term::cy(
            vec![Binder::new("x1", c.clone()), Binder::new("x2", c.clone())],
            Term::meta(
                "s",
                vec![proj2(0, a, a, t_of("x1", "x2")), proj2(1, a, a, t_of("x1", "x2"))],
            ),
        );
        let rhs = Term::at(
            vec![Binder::new("z1", a.clone()), Binder::new("z2", a.clone())],
            s_of("z1", "z2"),
            Term::cy(
                vec![Binder::new("w1", a.clone()), Binder::new("w2", a.clone())],
                Term::meta(
                    "t",
                    vec![proj2(0, c, c, s_of("w1", "w2")), proj2(1, c, c, s_of("w1", "w2"))],
                ),
            ),
        );
        out.push(scheme(
            tag("dinat2"),
            ctx(&[("s", decl(&[a, a], &[c, c])), ("t", decl(&[c, c], &[a, a]))]),
            lhs,
            rhs,
        ));
    }

    // Two-block cycle split at widths (1, 1).
    {
        let t_ = |x: &str, y: &str| m("t", vec![Term::var(x), Term::var(y)]);
        let s_ = |x: &str, y: &str| m("s", vec![Term::var(x), Term::var(y)]);
        let lhs = Term::cy(
            vec![Binder::new("x", c.clone()), Binder::new("y", a.clone())],
            Term::tuple(vec![t_("x", "y"), s_("x", "y")]),
        );
        let first = Term::cy(
            vec![Binder::new("x", c.clone())],
            Term::at(
                vec![Binder::new("y", a.clone())],
                t_("x", "y"),
                Term::cy(vec![Binder::new("y2", a.clone())], s_("x", "y2")),
            ),
        );
        let second = Term::cy(
            vec![Binder::new("y", a.clone())],
            Term::at(
                vec![Binder::new("x", c.clone())],
                s_("x", "y"),
                Term::cy(
                    vec![Binder::new("x2", c.clone())],
                    Term::at(
                        vec![Binder::new("y3", a.clone())],
                        t_("x2", "y3"),
                        Term::cy(vec![Binder::new("y4", a.clone())], s_("x2", "y4")),
                    ),
                ),
            ),
        );
        out.push(scheme(
            tag("split"),
            ctx(&[("t", decl(&[c, a], &[c])), ("s", decl(&[c, a], &[a]))]),
            lhs,
            Term::tuple(vec![first, second]),
        ));
    }

    // Cycle idempotence at width two: any re-indexing of the bound
    // variables collapses to copies of the one-variable cycle.
    for (label, sel) in [
        ("ci-diag", [[0, 0], [1, 1]]),
        ("ci-swap", [[1, 0], [0, 1]]),
        ("ci-mix", [[0, 1], [1, 1]]),
    ] {
        let ys = ["y1", "y2"];
        let comp = |row: [usize; 2]| m("t", vec![Term::var(ys[row[0]]), Term::var(ys[row[1]])]);
        let lhs = Term::cy(
            vec![Binder::new("y1", c.clone()), Binder::new("y2", c.clone())],
            Term::tuple(vec![comp(sel[0]), comp(sel[1])]),
        );
        let one = Term::cy(
            vec![Binder::new("y", c.clone())],
            m("t", vec![Term::var("y"), Term::var("y")]),
        );
        out.push(scheme(
            tag(label),
            ctx(&[("t", decl(&[c, c], &[c]))]),
            lhs,
            Term::tuple(vec![one.clone(), one]),
        ));
    }

    out
}

/// The branching axioms for a type with declared unit and branch, or
/// an empty list for types without branching.
pub fn branching_axioms(sig: &Signature, c: &BaseTypeId) -> Vec<AxiomScheme> {
    let Some(br) = sig.branching(c) else { return Vec::new() };
    let unit = Term::ctor(c.clone(), br.unit.clone(), vec![]);
    let b = |l: Term, r: Term| Term::ctor(c.clone(), br.branch.clone(), vec![l, r]);
    let m = |n: &str| Term::meta(n, vec![]);
    let one = |n: &str| ctx(&[(n, decl(&[], &[c]))]);
    let tag = |base: &str| format!("{}({})", base, c);
    vec![
        scheme(
            tag("del"),
            one("t"),
            Term::cy(vec![Binder::new("x", c.clone())], b(Term::var("x"), m("t"))),
            m("t"),
        ),
        scheme(tag("unitL"), one("t"), b(unit.clone(), m("t")), m("t")),
        scheme(tag("unitR"), one("t"), b(m("t"), unit), m("t")),
        scheme(
            tag("assoc"),
            ctx(&[
                ("s", decl(&[], &[c])),
                ("t", decl(&[], &[c])),
                ("u", decl(&[], &[c])),
            ]),
            b(b(m("s"), m("t")), m("u")),
            b(m("s"), b(m("t"), m("u"))),
        ),
        scheme(
            tag("comm"),
            ctx(&[("s", decl(&[], &[c])), ("t", decl(&[], &[c]))]),
            b(m("s"), m("t")),
            b(m("t"), m("s")),
        ),
        scheme(tag("degen"), one("t"), b(m("t"), m("t")), m("t")),
    ]
}

/// All axiom schemes over a signature: the cycle axioms at every
/// datatype (paired with itself and, when a second datatype exists,
/// with a neighbour), plus the branching axioms of every branching
/// type.
pub fn axiom_schemes(sig: &Signature) -> Vec<AxiomScheme> {
    let dts: Vec<BaseTypeId> = sig.datatypes().map(|d| d.name.clone()).collect();
    let mut out = Vec::new();
    for (i, c) in dts.iter().enumerate() {
        let partner = if dts.len() > 1 { &dts[(i + 1) % dts.len()] } else { c };
        out.extend(cycle_axioms(c, partner));
    }
    for c in &dts {
        out.extend(branching_axioms(sig, c));
    }
    out
}

/// Datatypes that can appear as value leaves (used by tests to pick
/// generation targets).
pub fn generatable_types(sig: &Signature) -> Vec<&DatatypeDecl> {
    sig.datatypes().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::eq_mod_bisim;
    use crate::rewrite::{normalize, DEFAULT_FUEL};
    use crate::rules::gen_all;
    use crate::signature::fixtures;
    use crate::typing::infer_closed;
    use std::collections::BTreeMap;

    #[test]
    fn generation_is_deterministic_per_seed() {
        let sig = fixtures::nat_list();
        let mk = |seed| {
            let mut g = Gen::new(&sig, seed);
            (0..10).map(|_| g.term(&"CList".into())).collect::<Vec<_>>()
        };
        assert_eq!(mk(7), mk(7));
        assert_ne!(mk(7), mk(8));
    }

    #[test]
    fn generated_terms_are_closed_and_well_typed() {
        for sig in [fixtures::nat_list(), fixtures::tree_bool()] {
            let mut g = Gen::new(&sig, 42);
            let tys: Vec<_> = sig.datatypes().map(|d| d.name.clone()).collect();
            for i in 0..300 {
                let ty = tys[i % tys.len()].clone();
                let t = g.term(&ty);
                assert!(t.free_vars().is_empty(), "open term generated: {}", t);
                let got = infer_closed(&sig, &t).unwrap_or_else(|e| {
                    panic!("ill-typed term generated: {} ({})", t, e)
                });
                assert_eq!(got, TypeSeq::single(ty));
            }
        }
    }

    #[test]
    fn values_contain_no_folds_and_normalize_fast() {
        let sig = fixtures::tree_bool();
        let rules = gen_all(&sig);
        let mut g = Gen::new(&sig, 3);
        for _ in 0..100 {
            let v = g.value(&"CTree".into());
            assert!(v.to_string().find("fold").is_none(), "value with fold: {}", v);
            let (nf, _) = normalize(&sig, &rules, &v, DEFAULT_FUEL).unwrap();
            assert_eq!(infer_closed(&sig, &nf).unwrap(), TypeSeq::single("CTree".into()));
        }
    }

    #[test]
    fn axiom_schemes_typecheck_in_their_declared_contexts() {
        for sig in [fixtures::nat_list(), fixtures::tree_bool()] {
            for ax in axiom_schemes(&sig) {
                crate::typing::check_equation(
                    &sig,
                    &ax.pair.metas,
                    &BTreeMap::new(),
                    &ax.pair.lhs,
                    &ax.pair.rhs,
                )
                .unwrap_or_else(|e| panic!("axiom {} does not typecheck: {}", ax.name, e));
            }
        }
    }

    #[test]
    fn instantiated_axioms_normalize_to_bisimilar_sides() {
        let sig = fixtures::tree_bool();
        let rules = gen_all(&sig);
        let mut g = Gen::new(&sig, 11);
        for ax in axiom_schemes(&sig) {
            for _ in 0..3 {
                let (l, r) = g.instantiate(&ax.pair);
                let (nl, _) = normalize(&sig, &rules, &l, DEFAULT_FUEL)
                    .unwrap_or_else(|e| panic!("axiom {} lhs: {}", ax.name, e));
                let (nr, _) = normalize(&sig, &rules, &r, DEFAULT_FUEL)
                    .unwrap_or_else(|e| panic!("axiom {} rhs: {}", ax.name, e));
                let res = eq_mod_bisim(&sig, &nl, &nr)
                    .unwrap_or_else(|e| panic!("axiom {}: {}", ax.name, e));
                assert!(
                    res.equal,
                    "axiom {} broke: {} vs {} (from {} = {})",
                    ax.name, nl, nr, l, r
                );
            }
        }
    }

    #[test]
    fn perturbation_preserves_bisimilarity() {
        let sig = fixtures::tree_bool();
        let rules = gen_all(&sig);
        let mut g = Gen::new(&sig, 19);
        for _ in 0..60 {
            let v = g.value(&"CTree".into());
            let mut w = v.clone();
            for _ in 0..2 {
                w = g.perturb(&w);
            }
            let (nv, _) = normalize(&sig, &rules, &v, DEFAULT_FUEL).unwrap();
            let (nw, _) = normalize(&sig, &rules, &w, DEFAULT_FUEL).unwrap();
            let res = eq_mod_bisim(&sig, &nv, &nw).unwrap();
            assert!(res.equal, "perturbation broke {} into {}", v, w);
        }
    }
}
