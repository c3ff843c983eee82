//! Kernel term representation: second-order syntax with typed binders.
//!
//! Terms are built from variables, literals, constructor/symbol
//! applications, abstractions (which occur only as arguments of symbols
//! that bind, never as stand-alone terms), and metavariable applications
//! (which occur only in rewrite-rule patterns).
//!
//! Key operations and their laws:
//!
//! - [`Term::alpha_eq`]: equivalence modulo bound-variable renaming;
//!   binder *types* are significant, names are not.
//! - [`Term::free_vars`]: deterministic (ordered) free-variable set;
//!   `subst_vars` and `subst_meta` are capture-avoiding with respect to it.
//! - [`Term::subst_vars`]: simultaneous substitution of width-1 terms for
//!   free variables; binders are freshened deterministically when they
//!   would capture.
//! - [`Term::subst_meta`]: metavariable substitution; an assignment of
//!   width w may be applied to arguments that jointly fill its w binder
//!   slots — a single argument of width w fills w slots, literal tuples
//!   split into components, and other wide arguments are decomposed
//!   through projection compositions.
//! - [`Term::width`]: syntactic width (number of components a term
//!   denotes), computable without a signature for all ground terms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Name of a declared base type (a datatype or a primitive such as `String`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BaseTypeId(pub String);

impl BaseTypeId {
    pub fn new(name: impl Into<String>) -> Self {
        BaseTypeId(name.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BaseTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BaseTypeId {
    fn from(s: &str) -> Self {
        BaseTypeId(s.to_string())
    }
}

/// A sequence of base types: the type of a term of that width.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeSeq(pub Vec<BaseTypeId>);

impl TypeSeq {
    pub fn unit() -> Self {
        TypeSeq(Vec::new())
    }
    pub fn single(ty: BaseTypeId) -> Self {
        TypeSeq(vec![ty])
    }
    pub fn width(&self) -> usize {
        self.0.len()
    }
    pub fn is_single(&self) -> bool {
        self.0.len() == 1
    }
    /// The sole component of a width-1 sequence.
    pub fn sole(&self) -> Option<&BaseTypeId> {
        if self.0.len() == 1 {
            Some(&self.0[0])
        } else {
            None
        }
    }
    pub fn iter(&self) -> impl Iterator<Item = &BaseTypeId> {
        self.0.iter()
    }
    pub fn concat(parts: impl IntoIterator<Item = TypeSeq>) -> Self {
        TypeSeq(parts.into_iter().flat_map(|p| p.0).collect())
    }
}

impl fmt::Display for TypeSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.as_slice() {
            [single] => write!(f, "{}", single),
            comps => {
                write!(f, "(")?;
                for (i, c) in comps.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", c)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl From<BaseTypeId> for TypeSeq {
    fn from(ty: BaseTypeId) -> Self {
        TypeSeq::single(ty)
    }
}

/// A typed binder occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Binder {
    pub name: String,
    pub ty: BaseTypeId,
}

impl Binder {
    pub fn new(name: impl Into<String>, ty: impl Into<BaseTypeId>) -> Self {
        Binder { name: name.into(), ty: ty.into() }
    }
}

/// The instance data of a fold symbol: source datatype, target type
/// sequence, and the type of the recursion body.
///
/// Carrying the instance in the symbol makes the width of every fold
/// application syntactically computable and lets rule matching require
/// exact instance agreement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FoldInst {
    /// Source datatype being folded over.
    pub src: BaseTypeId,
    /// Interpretation of the source datatype in the target.
    pub tgt: TypeSeq,
    /// Type of the recursion body (the abstraction being folded).
    pub body_ty: TypeSeq,
}

impl FoldInst {
    pub fn new(src: impl Into<BaseTypeId>, tgt: TypeSeq, body_ty: TypeSeq) -> Self {
        FoldInst { src: src.into(), tgt, body_ty }
    }

    /// Width of the interpretation of a base type: the target width for
    /// the source datatype, 1 for every other type.
    pub fn map_width(&self, ty: &BaseTypeId) -> usize {
        if *ty == self.src {
            self.tgt.width()
        } else {
            1
        }
    }

    /// Interpretation of a base type as a type sequence.
    pub fn map_base(&self, ty: &BaseTypeId) -> TypeSeq {
        if *ty == self.src {
            self.tgt.clone()
        } else {
            TypeSeq::single(ty.clone())
        }
    }

    /// Interpretation of a type sequence (componentwise, flattened).
    pub fn map_seq(&self, tys: &TypeSeq) -> TypeSeq {
        TypeSeq::concat(tys.iter().map(|t| self.map_base(t)))
    }

    /// Type of the whole fold application: the interpreted body type.
    pub fn result_ty(&self) -> TypeSeq {
        self.map_seq(&self.body_ty)
    }
}

/// Head symbols of applications.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// Declared datatype constructor.
    Ctor { ty: BaseTypeId, name: String },
    /// Empty tuple `<>` (width 0).
    Empty,
    /// Tuple of width ≥ 2 (componentwise concatenation).
    Tuple,
    /// Cycle former `cy(x⃗. t)`: one abstraction argument whose binders
    /// and body have the same type sequence.
    Cy,
    /// Composition `(y⃗. t) @ s`: substitutes the components of `s` for
    /// the binders of the abstraction.
    At,
    /// Structured recursion over a cyclic datatype.
    ///
    /// Argument layout: one abstraction per constructor of the source
    /// datatype (the structure arguments, in declaration order), then the
    /// main abstraction, then the flat parameter list (width-1 terms, one
    /// per interpreted main-binder slot).
    Fold(FoldInst),
}

impl Symbol {
    /// True for symbols that a chart treats as producing a node: declared
    /// constructors only (tuples and cycles are structural).
    pub fn ctor_parts(&self) -> Option<(&BaseTypeId, &str)> {
        match self {
            Symbol::Ctor { ty, name } => Some((ty, name)),
            _ => None,
        }
    }
}

/// Kernel terms.
///
/// Structural `PartialEq`/`Hash` are name-sensitive; use
/// [`Term::alpha_eq`] for equivalence modulo bound-variable renaming.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// Variable occurrence (free or bound).
    Var(String),
    /// Literal of a primitive type.
    Lit { value: String, ty: BaseTypeId },
    /// Abstraction; occurs only as an argument of a binding symbol.
    /// The binder list may be empty (a degenerate abstraction).
    Abs { binders: Vec<Binder>, body: Box<Term> },
    /// Application of a symbol.
    App { sym: Symbol, args: Vec<Term> },
    /// Metavariable application (patterns only); arguments fill the
    /// metavariable's binder slots.
    Meta { name: String, args: Vec<Term> },
}

/// Errors from kernel operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("cannot bind `{var}`: replacement has width {width}, expected width 1")]
    BindingWidth { var: String, width: usize },
    #[error("metavariable `{name}`: argument widths cannot be determined")]
    MetaWidthUnknown { name: String },
    #[error("metavariable `{name}`: arguments fill {got} binder slots, expected {want}")]
    MetaArityMismatch { name: String, got: usize, want: usize },
}

impl Term {
    // ---- constructors ------------------------------------------------

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn lit(value: impl Into<String>, ty: impl Into<BaseTypeId>) -> Term {
        Term::Lit { value: value.into(), ty: ty.into() }
    }

    /// Abstraction node. The body must itself be a term (not an
    /// abstraction); nested binder lists are a single node.
    pub fn abs(binders: Vec<Binder>, body: Term) -> Term {
        debug_assert!(!matches!(body, Term::Abs { .. }), "abstraction body must be a term");
        Term::Abs { binders, body: Box::new(body) }
    }

    pub fn app(sym: Symbol, args: Vec<Term>) -> Term {
        Term::App { sym, args }
    }

    pub fn ctor(ty: impl Into<BaseTypeId>, name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::app(Symbol::Ctor { ty: ty.into(), name: name.into() }, args)
    }

    pub fn empty() -> Term {
        Term::app(Symbol::Empty, Vec::new())
    }

    /// Canonicalizing tuple constructor: drops empty-tuple components,
    /// collapses singletons, and yields `<>` for zero components.
    /// Nested tuples are kept as written.
    pub fn tuple(comps: Vec<Term>) -> Term {
        let comps: Vec<Term> =
            comps.into_iter().filter(|c| !matches!(c, Term::App { sym: Symbol::Empty, .. })).collect();
        match comps.len() {
            0 => Term::empty(),
            1 => comps.into_iter().next().unwrap(),
            _ => Term::app(Symbol::Tuple, comps),
        }
    }

    /// Cycle former; the binder list must be non-empty (a zero-width
    /// cycle would be the empty tuple).
    pub fn cy(binders: Vec<Binder>, body: Term) -> Term {
        assert!(!binders.is_empty(), "cy requires at least one binder");
        Term::app(Symbol::Cy, vec![Term::abs(binders, body)])
    }

    /// Composition of an abstraction with an argument term.
    pub fn at(binders: Vec<Binder>, body: Term, arg: Term) -> Term {
        Term::app(Symbol::At, vec![Term::abs(binders, body), arg])
    }

    /// Fold application from its parts.
    pub fn fold(fi: FoldInst, structures: Vec<Term>, main: Term, params: Vec<Term>) -> Term {
        debug_assert!(structures.iter().all(|s| matches!(s, Term::Abs { .. })));
        debug_assert!(matches!(main, Term::Abs { .. }));
        debug_assert!(params.iter().all(|p| !matches!(p, Term::Abs { .. })));
        let mut args = structures;
        args.push(main);
        args.extend(params);
        Term::app(Symbol::Fold(fi), args)
    }

    pub fn meta(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::Meta { name: name.into(), args }
    }

    // ---- accessors ---------------------------------------------------

    /// Split a fold application into (instance, structures, main, params).
    ///
    /// The argument layout is recoverable without a signature: structure
    /// and main arguments are abstractions, parameters are not, so the
    /// main abstraction is the last one in the leading run.
    pub fn fold_parts(&self) -> Option<(&FoldInst, &[Term], &Term, &[Term])> {
        let Term::App { sym: Symbol::Fold(fi), args } = self else {
            return None;
        };
        let abs_run = args.iter().take_while(|a| matches!(a, Term::Abs { .. })).count();
        if abs_run == 0 || args[abs_run..].iter().any(|a| matches!(a, Term::Abs { .. })) {
            return None;
        }
        let (front, params) = args.split_at(abs_run);
        let (main, structures) = front.split_last().unwrap();
        Some((fi, structures, main, params))
    }

    /// View an abstraction as (binders, body).
    pub fn abs_parts(&self) -> Option<(&[Binder], &Term)> {
        match self {
            Term::Abs { binders, body } => Some((binders, body)),
            _ => None,
        }
    }

    /// Syntactic width of a term: how many base-type components it
    /// denotes. `None` when a metavariable makes it indeterminate.
    pub fn width(&self) -> Option<usize> {
        match self {
            Term::Var(_) | Term::Lit { .. } => Some(1),
            Term::Meta { .. } => None,
            Term::Abs { body, .. } => body.width(),
            Term::App { sym, args } => match sym {
                Symbol::Ctor { .. } => Some(1),
                Symbol::Empty => Some(0),
                Symbol::Tuple => args.iter().map(|a| a.width()).sum(),
                Symbol::Cy => args.first().and_then(|a| match a {
                    Term::Abs { binders, .. } => Some(binders.len()),
                    _ => None,
                }),
                Symbol::At => args.first().and_then(|a| a.width()),
                Symbol::Fold(fi) => Some(fi.body_ty.iter().map(|t| fi.map_width(t)).sum()),
            },
        }
    }

    // ---- free variables ----------------------------------------------

    /// The set of free variables, in sorted order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut acc);
        acc
    }

    fn collect_free(&self, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    acc.insert(x.clone());
                }
            }
            Term::Lit { .. } => {}
            Term::Abs { binders, body } => {
                let depth = bound.len();
                bound.extend(binders.iter().map(|b| b.name.clone()));
                body.collect_free(bound, acc);
                bound.truncate(depth);
            }
            Term::App { args, .. } => {
                for a in args {
                    a.collect_free(bound, acc);
                }
            }
            Term::Meta { args, .. } => {
                for a in args {
                    a.collect_free(bound, acc);
                }
            }
        }
    }

    // ---- alpha equivalence --------------------------------------------

    /// Equivalence modulo renaming of bound variables. Binder types are
    /// significant; metavariable names are compared literally.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        fn resolve(stack: &[String], name: &str) -> Option<usize> {
            stack.iter().rposition(|b| b == name)
        }
        fn go(a: &Term, b: &Term, sa: &mut Vec<String>, sb: &mut Vec<String>) -> bool {
            match (a, b) {
                (Term::Var(x), Term::Var(y)) => match (resolve(sa, x), resolve(sb, y)) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                },
                (Term::Lit { value: v1, ty: t1 }, Term::Lit { value: v2, ty: t2 }) => {
                    v1 == v2 && t1 == t2
                }
                (
                    Term::Abs { binders: b1, body: body1 },
                    Term::Abs { binders: b2, body: body2 },
                ) => {
                    if b1.len() != b2.len() || b1.iter().zip(b2).any(|(x, y)| x.ty != y.ty) {
                        return false;
                    }
                    let d = sa.len();
                    sa.extend(b1.iter().map(|x| x.name.clone()));
                    sb.extend(b2.iter().map(|x| x.name.clone()));
                    let r = go(body1, body2, sa, sb);
                    sa.truncate(d);
                    sb.truncate(d);
                    r
                }
                (Term::App { sym: s1, args: a1 }, Term::App { sym: s2, args: a2 }) => {
                    s1 == s2
                        && a1.len() == a2.len()
                        && a1.iter().zip(a2).all(|(x, y)| go(x, y, sa, sb))
                }
                (Term::Meta { name: n1, args: a1 }, Term::Meta { name: n2, args: a2 }) => {
                    n1 == n2
                        && a1.len() == a2.len()
                        && a1.iter().zip(a2).all(|(x, y)| go(x, y, sa, sb))
                }
                _ => false,
            }
        }
        go(self, other, &mut Vec::new(), &mut Vec::new())
    }

    // ---- substitution -------------------------------------------------

    /// Simultaneous capture-avoiding substitution of terms for free
    /// variables. Every replacement must have width 1 (when computable);
    /// binders are freshened deterministically when a replacement's free
    /// variable would be captured.
    pub fn subst_vars(&self, map: &BTreeMap<String, Term>) -> Result<Term, KernelError> {
        for (var, t) in map {
            if let Some(w) = t.width() {
                if w != 1 {
                    return Err(KernelError::BindingWidth { var: var.clone(), width: w });
                }
            }
        }
        Ok(self.subst_vars_unchecked(map))
    }

    /// `subst_vars` without the width validation; used internally where
    /// replacements are width-1 by construction.
    pub(crate) fn subst_vars_unchecked(&self, map: &BTreeMap<String, Term>) -> Term {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Term::Var(x) => map.get(x).cloned().unwrap_or_else(|| self.clone()),
            Term::Lit { .. } => self.clone(),
            Term::App { sym, args } => Term::App {
                sym: sym.clone(),
                args: args.iter().map(|a| a.subst_vars_unchecked(map)).collect(),
            },
            Term::Meta { name, args } => Term::Meta {
                name: name.clone(),
                args: args.iter().map(|a| a.subst_vars_unchecked(map)).collect(),
            },
            Term::Abs { binders, body } => {
                let body_fv = body.free_vars();
                // Keep only mappings for variables actually free in the
                // body and not shadowed by our binders.
                let live: BTreeMap<String, Term> = map
                    .iter()
                    .filter(|(k, _)| body_fv.contains(*k) && !binders.iter().any(|b| &b.name == *k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                if live.is_empty() {
                    return self.clone();
                }
                // Freshen binders that would capture a replacement's
                // free variable.
                let mut captured: BTreeSet<String> = BTreeSet::new();
                for t in live.values() {
                    captured.extend(t.free_vars());
                }
                let mut avoid: BTreeSet<String> = captured.clone();
                avoid.extend(body_fv.iter().cloned());
                avoid.extend(live.keys().cloned());
                avoid.extend(binders.iter().map(|b| b.name.clone()));
                let mut rename: BTreeMap<String, Term> = BTreeMap::new();
                let mut new_binders = Vec::with_capacity(binders.len());
                for b in binders {
                    if captured.contains(&b.name) {
                        let fresh = fresh_name(&b.name, &avoid);
                        avoid.insert(fresh.clone());
                        rename.insert(b.name.clone(), Term::var(fresh.clone()));
                        new_binders.push(Binder { name: fresh, ty: b.ty.clone() });
                    } else {
                        new_binders.push(b.clone());
                    }
                }
                let renamed = if rename.is_empty() {
                    (**body).clone()
                } else {
                    body.subst_vars_unchecked(&rename)
                };
                Term::Abs { binders: new_binders, body: Box::new(renamed.subst_vars_unchecked(&live)) }
            }
        }
    }

    /// Metavariable substitution. Unassigned metavariables are left in
    /// place; assigned ones have their arguments aligned against the
    /// assignment's binder slots and the instantiated arguments
    /// substituted capture-avoidingly into the assignment body.
    pub fn subst_meta(&self, theta: &MetaSubst) -> Result<Term, KernelError> {
        let mut external = BTreeSet::new();
        for asg in theta.values() {
            let mut fv = asg.body.free_vars();
            for b in &asg.binders {
                fv.remove(&b.name);
            }
            external.extend(fv);
        }
        self.subst_meta_in(theta, &external)
    }

    /// `subst_meta` that errors when any metavariable remains unassigned.
    pub fn subst_meta_strict(&self, theta: &MetaSubst) -> Result<Term, KernelError> {
        let out = self.subst_meta(theta)?;
        debug_assert!(out.metavar_names().is_empty(), "unassigned metavariable after strict substitution");
        Ok(out)
    }

    fn subst_meta_in(
        &self,
        theta: &MetaSubst,
        external: &BTreeSet<String>,
    ) -> Result<Term, KernelError> {
        match self {
            Term::Var(_) | Term::Lit { .. } => Ok(self.clone()),
            Term::App { sym, args } => Ok(Term::App {
                sym: sym.clone(),
                args: args
                    .iter()
                    .map(|a| a.subst_meta_in(theta, external))
                    .collect::<Result<_, _>>()?,
            }),
            Term::Abs { binders, body } => {
                // Freshen binders that collide with free variables of the
                // assignment bodies, so substituted material is not captured.
                let colliding: Vec<&Binder> =
                    binders.iter().filter(|b| external.contains(&b.name)).collect();
                if colliding.is_empty() {
                    return Ok(Term::Abs {
                        binders: binders.clone(),
                        body: Box::new(body.subst_meta_in(theta, external)?),
                    });
                }
                let mut avoid: BTreeSet<String> = external.clone();
                avoid.extend(body.free_vars());
                avoid.extend(binders.iter().map(|b| b.name.clone()));
                let mut rename: BTreeMap<String, Term> = BTreeMap::new();
                let mut new_binders = Vec::with_capacity(binders.len());
                for b in binders {
                    if external.contains(&b.name) {
                        let fresh = fresh_name(&b.name, &avoid);
                        avoid.insert(fresh.clone());
                        rename.insert(b.name.clone(), Term::var(fresh.clone()));
                        new_binders.push(Binder { name: fresh, ty: b.ty.clone() });
                    } else {
                        new_binders.push(b.clone());
                    }
                }
                let renamed = body.subst_vars_unchecked(&rename);
                Ok(Term::Abs {
                    binders: new_binders,
                    body: Box::new(renamed.subst_meta_in(theta, external)?),
                })
            }
            Term::Meta { name, args } => {
                let args: Vec<Term> = args
                    .iter()
                    .map(|a| a.subst_meta_in(theta, external))
                    .collect::<Result<_, _>>()?;
                let Some(asg) = theta.get(name) else {
                    return Ok(Term::Meta { name: name.clone(), args });
                };
                let map = align_args(name, &asg.binders, args)?;
                Ok(asg.body.subst_vars_unchecked(&map))
            }
        }
    }

    /// Names of metavariables occurring in the term, sorted.
    pub fn metavar_names(&self) -> BTreeSet<String> {
        fn go(t: &Term, acc: &mut BTreeSet<String>) {
            match t {
                Term::Meta { name, args } => {
                    acc.insert(name.clone());
                    for a in args {
                        go(a, acc);
                    }
                }
                Term::App { args, .. } => {
                    for a in args {
                        go(a, acc);
                    }
                }
                Term::Abs { body, .. } => go(body, acc),
                _ => {}
            }
        }
        let mut acc = BTreeSet::new();
        go(self, &mut acc);
        acc
    }

    /// Number of nodes, counting abstractions; a cheap size measure.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Lit { .. } => 1,
            Term::Abs { body, .. } => 1 + body.size(),
            Term::App { args, .. } | Term::Meta { args, .. } => {
                1 + args.iter().map(|a| a.size()).sum::<usize>()
            }
        }
    }
}

/// An assignment for one metavariable: binder slots plus a body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaAssign {
    pub binders: Vec<Binder>,
    pub body: Term,
}

impl MetaAssign {
    pub fn new(binders: Vec<Binder>, body: Term) -> Self {
        MetaAssign { binders, body }
    }
    /// Assignment with no binder slots.
    pub fn closed(body: Term) -> Self {
        MetaAssign { binders: Vec::new(), body }
    }
}

/// A metavariable substitution.
pub type MetaSubst = BTreeMap<String, MetaAssign>;

/// Align metavariable arguments against binder slots, producing the
/// variable substitution for the assignment body. A width-w argument
/// fills w consecutive slots: literal tuples are split into components
/// and other wide arguments are decomposed via projection compositions.
fn align_args(
    meta: &str,
    binders: &[Binder],
    args: Vec<Term>,
) -> Result<BTreeMap<String, Term>, KernelError> {
    // Fast path: one argument per slot, each of width 1 (or unknown,
    // which matching only produces for width-1 positions).
    if args.len() == binders.len()
        && args.iter().all(|a| matches!(a.width(), Some(1) | None))
    {
        return Ok(binders
            .iter()
            .zip(args)
            .map(|(b, a)| (b.name.clone(), a))
            .collect());
    }
    let mut map = BTreeMap::new();
    let mut cursor = 0usize;
    for arg in args {
        let w = arg
            .width()
            .ok_or_else(|| KernelError::MetaWidthUnknown { name: meta.to_string() })?;
        if cursor + w > binders.len() {
            return Err(KernelError::MetaArityMismatch {
                name: meta.to_string(),
                got: cursor + w,
                want: binders.len(),
            });
        }
        let slots = &binders[cursor..cursor + w];
        let pieces = splat(arg, slots);
        debug_assert_eq!(pieces.len(), w);
        for (b, piece) in slots.iter().zip(pieces) {
            map.insert(b.name.clone(), piece);
        }
        cursor += w;
    }
    if cursor != binders.len() {
        return Err(KernelError::MetaArityMismatch {
            name: meta.to_string(),
            got: cursor,
            want: binders.len(),
        });
    }
    Ok(map)
}

/// Decompose a term of width `slots.len()` into width-1 pieces: tuples
/// split componentwise, everything else through projection compositions
/// `(z⃗. z_i) @ t`.
fn splat(term: Term, slots: &[Binder]) -> Vec<Term> {
    let w = slots.len();
    if w == 1 {
        return vec![term];
    }
    if w == 0 {
        return Vec::new();
    }
    if let Term::App { sym: Symbol::Tuple, args } = &term {
        let widths: Vec<Option<usize>> = args.iter().map(|a| a.width()).collect();
        if widths.iter().all(|w| w.is_some()) {
            let mut out = Vec::with_capacity(w);
            let mut cursor = 0usize;
            for (comp, cw) in args.iter().zip(widths) {
                let cw = cw.unwrap();
                out.extend(splat(comp.clone(), &slots[cursor..cursor + cw]));
                cursor += cw;
            }
            debug_assert_eq!(cursor, w);
            return out;
        }
    }
    // General case: project each component out of the wide term.
    let avoid = term.free_vars();
    let proj_binders: Vec<Binder> = slots
        .iter()
        .enumerate()
        .map(|(i, s)| Binder { name: fresh_name(&format!("z{}", i + 1), &avoid), ty: s.ty.clone() })
        .collect();
    (0..w)
        .map(|i| {
            Term::at(
                proj_binders.clone(),
                Term::var(proj_binders[i].name.clone()),
                term.clone(),
            )
        })
        .collect()
}

/// Deterministically pick a name based on `base` that avoids `avoid`:
/// the base itself, then primed variants, then numbered ones.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    for primes in 1..=2 {
        let cand = format!("{}{}", base, "'".repeat(primes));
        if !avoid.contains(&cand) {
            return cand;
        }
    }
    for n in 2.. {
        let cand = format!("{}_{}", base, n);
        if !avoid.contains(&cand) {
            return cand;
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(name: &str, ty: &str) -> Binder {
        Binder::new(name, ty)
    }

    /// S^n(0) over a nat-like type.
    fn nat(n: u32) -> Term {
        let mut t = Term::ctor("CNat", "0", vec![]);
        for _ in 0..n {
            t = Term::ctor("CNat", "S", vec![t]);
        }
        t
    }

    fn cons(head: Term, tail: Term) -> Term {
        Term::ctor("CList", "::", vec![head, tail])
    }

    #[test]
    fn free_vars_of_cycle() {
        // fv(cy(x. 2 :: y :: x)) = {y}
        let t = Term::cy(
            vec![b("x", "CList")],
            cons(nat(2), cons(Term::var("y"), Term::var("x"))),
        );
        let fv = t.free_vars();
        assert_eq!(fv.into_iter().collect::<Vec<_>>(), vec!["y".to_string()]);
    }

    #[test]
    fn alpha_ignores_names_not_types() {
        let t1 = Term::cy(vec![b("x", "CNat")], Term::ctor("CNat", "S", vec![Term::var("x")]));
        let t2 = Term::cy(vec![b("z", "CNat")], Term::ctor("CNat", "S", vec![Term::var("z")]));
        let t3 = Term::cy(vec![b("x", "CList")], Term::ctor("CNat", "S", vec![Term::var("x")]));
        let t4 = Term::cy(
            vec![b("x", "CNat")],
            Term::ctor("CNat", "S", vec![Term::ctor("CNat", "S", vec![Term::var("x")])]),
        );
        assert!(t1.alpha_eq(&t2));
        assert!(!t1.alpha_eq(&t3), "binder types are significant");
        assert!(!t1.alpha_eq(&t4));
    }

    #[test]
    fn alpha_distinguishes_free_vars() {
        assert!(Term::var("x").alpha_eq(&Term::var("x")));
        assert!(!Term::var("x").alpha_eq(&Term::var("y")));
        // A bound occurrence is not a free one.
        let bound = Term::cy(vec![b("x", "A")], Term::var("x"));
        let free = Term::cy(vec![b("z", "A")], Term::var("x"));
        assert!(!bound.alpha_eq(&free));
    }

    #[test]
    fn subst_avoids_capture() {
        // (cy(z. p(x, z)))[x := z]  must rename the binder.
        let t = Term::cy(vec![b("z", "A")], Term::ctor("A", "p", vec![Term::var("x"), Term::var("z")]));
        let mut map = BTreeMap::new();
        map.insert("x".to_string(), Term::var("z"));
        let out = t.subst_vars(&map).unwrap();
        assert!(out.free_vars().contains("z"), "the free z must survive: {:?}", out);
        let expected = Term::cy(
            vec![b("w", "A")],
            Term::ctor("A", "p", vec![Term::var("z"), Term::var("w")]),
        );
        assert!(out.alpha_eq(&expected), "got {:?}", out);
    }

    #[test]
    fn subst_shadowed_is_untouched() {
        let t = Term::cy(vec![b("x", "A")], Term::var("x"));
        let mut map = BTreeMap::new();
        map.insert("x".to_string(), Term::var("y"));
        let out = t.subst_vars(&map).unwrap();
        assert!(out.alpha_eq(&t));
    }

    #[test]
    fn subst_rejects_wide_replacement() {
        let mut map = BTreeMap::new();
        map.insert("x".to_string(), Term::tuple(vec![Term::var("a"), Term::var("b")]));
        let err = Term::var("x").subst_vars(&map).unwrap_err();
        assert!(matches!(err, KernelError::BindingWidth { width: 2, .. }));
    }

    #[test]
    fn widths() {
        assert_eq!(Term::var("x").width(), Some(1));
        assert_eq!(Term::empty().width(), Some(0));
        assert_eq!(
            Term::tuple(vec![Term::var("x"), Term::var("y")]).width(),
            Some(2)
        );
        let two_cy = Term::cy(
            vec![b("x", "A"), b("y", "A")],
            Term::tuple(vec![Term::var("y"), Term::var("x")]),
        );
        assert_eq!(two_cy.width(), Some(2));
        // fold over CList with target (B, CList): a body of type (CList)
        // maps to width 2.
        let fi = FoldInst::new(
            "CList",
            TypeSeq(vec!["B".into(), "CList".into()]),
            TypeSeq::single("CList".into()),
        );
        let f = Term::fold(
            fi,
            vec![Term::abs(vec![], nat(0))],
            Term::abs(vec![], Term::var("t")),
            vec![],
        );
        assert_eq!(f.width(), Some(2));
        assert_eq!(Term::meta("m", vec![]).width(), None);
    }

    #[test]
    fn tuple_canonicalization() {
        assert_eq!(Term::tuple(vec![]), Term::empty());
        assert_eq!(Term::tuple(vec![Term::var("x")]), Term::var("x"));
        assert_eq!(
            Term::tuple(vec![Term::empty(), Term::var("x")]),
            Term::var("x")
        );
        let pair = Term::tuple(vec![Term::var("x"), Term::var("y")]);
        assert_eq!(pair.width(), Some(2));
    }

    #[test]
    fn fold_parts_roundtrip() {
        let fi = FoldInst::new("CList", TypeSeq::single("CNat".into()), TypeSeq::single("CNat".into()));
        let structures = vec![
            Term::abs(vec![], nat(0)),
            Term::abs(vec![b("k", "CNat"), b("x", "CNat")], Term::ctor("CNat", "S", vec![Term::var("x")])),
        ];
        let main = Term::abs(vec![b("y", "CList")], Term::var("y"));
        let params = vec![Term::var("p")];
        let t = Term::fold(fi.clone(), structures.clone(), main.clone(), params.clone());
        let (fi2, s2, m2, p2) = t.fold_parts().unwrap();
        assert_eq!(fi2, &fi);
        assert_eq!(s2, structures.as_slice());
        assert_eq!(m2, &main);
        assert_eq!(p2, params.as_slice());
    }

    #[test]
    fn meta_subst_basic() {
        // e[a, f] with e := (k, x. k :: x)
        let pattern = Term::meta("e", vec![Term::var("a"), Term::var("f")]);
        let mut theta = MetaSubst::new();
        theta.insert(
            "e".to_string(),
            MetaAssign::new(
                vec![b("k", "CNat"), b("x", "CList")],
                cons(Term::var("k"), Term::var("x")),
            ),
        );
        let out = pattern.subst_meta(&theta).unwrap();
        assert!(out.alpha_eq(&cons(Term::var("a"), Term::var("f"))));
    }

    #[test]
    fn meta_subst_avoids_capture() {
        // cy(z. m[]) with m := q(z)  — the binder must be freshened.
        let t = Term::cy(vec![b("z", "A")], Term::meta("m", vec![]));
        let mut theta = MetaSubst::new();
        theta.insert("m".to_string(), MetaAssign::closed(Term::ctor("A", "q", vec![Term::var("z")])));
        let out = t.subst_meta(&theta).unwrap();
        assert!(out.free_vars().contains("z"), "free z captured: {:?}", out);
    }

    #[test]
    fn meta_subst_leaves_unassigned() {
        let t = Term::meta("m", vec![Term::var("x")]);
        let out = t.subst_meta(&MetaSubst::new()).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn meta_subst_splits_tuple_argument() {
        // e[<a, b>] with e := (y1, y2. p(y1, y2))
        let pattern = Term::meta("e", vec![Term::tuple(vec![Term::var("a"), Term::var("b")])]);
        let mut theta = MetaSubst::new();
        theta.insert(
            "e".to_string(),
            MetaAssign::new(
                vec![b("y1", "A"), b("y2", "B")],
                Term::ctor("C", "p", vec![Term::var("y1"), Term::var("y2")]),
            ),
        );
        let out = pattern.subst_meta(&theta).unwrap();
        assert!(out.alpha_eq(&Term::ctor("C", "p", vec![Term::var("a"), Term::var("b")])));
    }

    #[test]
    fn meta_subst_projects_wide_nontuple() {
        // e[c] where c is a width-2 cycle: components are projected.
        let wide = Term::cy(
            vec![b("u", "A"), b("v", "B")],
            Term::tuple(vec![Term::var("u"), Term::var("v")]),
        );
        let pattern = Term::meta("e", vec![wide.clone()]);
        let mut theta = MetaSubst::new();
        theta.insert(
            "e".to_string(),
            MetaAssign::new(
                vec![b("y1", "A"), b("y2", "B")],
                Term::ctor("C", "p", vec![Term::var("y2"), Term::var("y1")]),
            ),
        );
        let out = pattern.subst_meta(&theta).unwrap();
        // p((z1,z2.z2) @ c, (z1,z2.z1) @ c) with arguments swapped by the body.
        let proj = |i: usize| {
            Term::at(
                vec![b("z1", "A"), b("z2", "B")],
                Term::var(if i == 0 { "z1" } else { "z2" }),
                wide.clone(),
            )
        };
        let expected = Term::ctor("C", "p", vec![proj(1), proj(0)]);
        assert!(out.alpha_eq(&expected), "got {:?}", out);
    }

    #[test]
    fn meta_subst_arity_mismatch() {
        let pattern = Term::meta("e", vec![Term::var("a")]);
        let mut theta = MetaSubst::new();
        theta.insert(
            "e".to_string(),
            MetaAssign::new(vec![b("y1", "A"), b("y2", "B")], Term::var("y1")),
        );
        // One width-1 argument cannot fill two slots.
        let err = pattern.subst_meta(&theta).unwrap_err();
        assert!(matches!(err, KernelError::MetaArityMismatch { .. }));
    }

    #[test]
    fn fresh_names_are_deterministic() {
        let avoid: BTreeSet<String> =
            ["x", "x'", "x''"].iter().map(|s| s.to_string()).collect();
        assert_eq!(fresh_name("x", &BTreeSet::new()), "x");
        assert_eq!(fresh_name("x", &avoid), "x_2");
        let one: BTreeSet<String> = [String::from("x")].into();
        assert_eq!(fresh_name("x", &one), "x'");
    }
}
