//! Elaboration: resolve names and types, build the signature, compile
//! `fun` definitions to fold templates, and inline function calls.
//!
//! A function definition becomes a *template*: a kernel term whose free
//! variables are the function's parameters. Call sites substitute the
//! elaborated arguments into the template, so elaborated programs
//! contain only kernel syntax — there is no function-symbol indirection.
//!
//! An equation-style definition (`fun f where …`) compiles to a paired
//! fold: each constructor's structure returns the tuple of the
//! equation's right-hand side and a rebuilt copy of the constructor,
//! with recursive calls `f(t)` replaced by the result component and
//! bare `t` by the rebuilt component; the whole fold is projected on
//! the first component.

use super::parse::parse_term_str;
use super::*;
use crate::kernel::{fresh_name, BaseTypeId, Binder, FoldInst, Symbol, Term, TypeSeq};
use crate::signature::{Branching, CtorDecl, DatatypeDecl, Signature};
use crate::typing;
use indexmap::IndexMap;
use std::collections::{BTreeMap, BTreeSet};

/// An elaborated source file.
#[derive(Debug, Clone)]
pub struct Program {
    pub sig: Signature,
    /// Elaborated functions, in declaration order.
    pub funs: IndexMap<String, FunInfo>,
    /// Specification equations, kept as test oracles.
    pub specs: Vec<SpecEquation>,
    /// Directives, in source order.
    pub directives: Vec<Directive>,
}

/// An elaborated function definition.
#[derive(Debug, Clone)]
pub struct FunInfo {
    pub name: String,
    /// Parameter names; these are exactly the free variables of
    /// `template`.
    pub params: Vec<String>,
    pub param_tys: Vec<BaseTypeId>,
    pub result: TypeSeq,
    /// The function body; call sites substitute arguments for the
    /// parameters.
    pub template: Term,
    /// Whether the definition was equation-style (a paired fold).
    pub primrec: bool,
    pub line: usize,
}

/// A typed specification equation with its pattern variables.
#[derive(Debug, Clone)]
pub struct SpecEquation {
    pub fun: String,
    pub vars: Vec<(String, BaseTypeId)>,
    pub lhs: Term,
    pub rhs: Term,
    pub line: usize,
}

/// An elaborated directive.
#[derive(Debug, Clone)]
pub enum Directive {
    Eval { term: Term, line: usize },
    Prove { lhs: Term, rhs: Term, line: usize },
    Bisim { lhs: Term, rhs: Term, line: usize },
    GsCheck { line: usize },
}

impl Directive {
    pub fn line(&self) -> usize {
        match self {
            Directive::Eval { line, .. }
            | Directive::Prove { line, .. }
            | Directive::Bisim { line, .. }
            | Directive::GsCheck { line } => *line,
        }
    }
}

impl Program {
    /// All fold instances occurring in the program's templates, specs
    /// and directives, in first-occurrence order.
    pub fn fold_insts(&self) -> Vec<FoldInst> {
        let mut out: Vec<FoldInst> = Vec::new();
        let mut visit = |t: &Term| collect_folds(t, &mut out);
        for f in self.funs.values() {
            visit(&f.template);
        }
        for s in &self.specs {
            visit(&s.lhs);
            visit(&s.rhs);
        }
        for d in &self.directives {
            match d {
                Directive::Eval { term, .. } => visit(term),
                Directive::Prove { lhs, rhs, .. } | Directive::Bisim { lhs, rhs, .. } => {
                    visit(lhs);
                    visit(rhs);
                }
                Directive::GsCheck { .. } => {}
            }
        }
        out
    }
}

fn collect_folds(t: &Term, out: &mut Vec<FoldInst>) {
    match t {
        Term::Var(_) | Term::Lit { .. } => {}
        Term::Abs { body, .. } => collect_folds(body, out),
        Term::Meta { args, .. } => {
            for a in args {
                collect_folds(a, out);
            }
        }
        Term::App { sym, args } => {
            if let Symbol::Fold(fi) = sym {
                if !out.contains(fi) {
                    out.push(fi.clone());
                }
            }
            for a in args {
                collect_folds(a, out);
            }
        }
    }
}

/// Parse and elaborate a source text.
pub fn load(src: &str) -> Result<Program, SurfaceError> {
    elaborate(&parse(src)?)
}

/// Build the signature declared by a file's `ctype` items.
pub fn elaborate_signature(file: &SourceFile) -> Result<Signature, SurfaceError> {
    let mut sig = Signature::new();
    for item in &file.items {
        if let Item::Ctype(decl) = item {
            add_ctype(&mut sig, decl)?;
        }
    }
    Ok(sig)
}

fn add_ctype(sig: &mut Signature, decl: &CtypeDecl) -> Result<(), SurfaceError> {
    let dt = DatatypeDecl {
        name: BaseTypeId::new(decl.name.clone()),
        ctors: decl
            .ctors
            .iter()
            .map(|c| CtorDecl::new(c.name.clone(), c.args.iter().map(BaseTypeId::new).collect()))
            .collect(),
        branching: decl
            .branching
            .clone()
            .map(|(unit, branch)| Branching { unit, branch }),
    };
    sig.add_datatype(dt).map_err(|e| SurfaceError::at(decl.line, 0, e.to_string()))
}

/// Elaborate a parsed file into a program.
pub fn elaborate(file: &SourceFile) -> Result<Program, SurfaceError> {
    let mut sig = Signature::new();
    let mut sig_lines: IndexMap<String, (Vec<BaseTypeId>, TypeSeq, usize)> = IndexMap::new();
    let mut funs: IndexMap<String, FunInfo> = IndexMap::new();
    let mut specs_ast: Vec<&SpecDef> = Vec::new();
    let mut directives: Vec<Directive> = Vec::new();

    for item in &file.items {
        match item {
            Item::Ctype(decl) => add_ctype(&mut sig, decl)?,
            Item::Sig(s) => {
                if sig_lines.contains_key(&s.name) {
                    return Err(SurfaceError::at(
                        s.line,
                        0,
                        format!("duplicate signature for `{}`", s.name),
                    ));
                }
                let mut params = Vec::new();
                for p in &s.params {
                    params.push(lookup_type(&sig, p, s.line)?);
                }
                let mut result = Vec::new();
                for r in &s.result {
                    result.push(lookup_type(&sig, r, s.line)?);
                }
                sig_lines.insert(s.name.clone(), (params, TypeSeq(result), s.line));
            }
            Item::Fun(def) => {
                if funs.contains_key(&def.name) {
                    return Err(SurfaceError::at(
                        def.line,
                        0,
                        format!("function `{}` is defined twice", def.name),
                    ));
                }
                if !sig.datatypes_with_ctor(&def.name).is_empty() {
                    return Err(SurfaceError::at(
                        def.line,
                        0,
                        format!("`{}` is already a constructor name", def.name),
                    ));
                }
                let Some((param_tys, result, _)) = sig_lines.get(&def.name).cloned() else {
                    return Err(SurfaceError::at(
                        def.line,
                        0,
                        format!(
                            "missing signature line for `{}` (write `{} : a, b -> c` first)",
                            def.name, def.name
                        ),
                    ));
                };
                let elab = Elab { sig: &sig, funs: &funs };
                let info = match &def.body {
                    FunBody::PlainFold { params, structures, subject } => elab.plain_fold(
                        def,
                        &param_tys,
                        &result,
                        params,
                        structures,
                        subject,
                    )?,
                    FunBody::PrimRec { equations } => {
                        elab.prim_rec(def, &param_tys, &result, equations)?
                    }
                };
                // Templates must typecheck at their declared type.
                let vars: typing::VarContext = info
                    .params
                    .iter()
                    .cloned()
                    .zip(info.param_tys.iter().cloned())
                    .collect();
                let got = typing::infer(&sig, &BTreeMap::new(), &vars, &info.template)
                    .map_err(|e| {
                        SurfaceError::at(def.line, 0, format!("in `{}`: {}", def.name, e))
                    })?;
                if got != info.result {
                    return Err(SurfaceError::at(
                        def.line,
                        0,
                        format!(
                            "`{}` elaborates at type {}, but its signature says {}",
                            def.name, got, info.result
                        ),
                    ));
                }
                funs.insert(def.name.clone(), info);
            }
            Item::Spec(s) => specs_ast.push(s),
            Item::Directive(d) => {
                let elab = Elab { sig: &sig, funs: &funs };
                directives.push(elab.directive(d)?);
            }
        }
    }

    // Spec blocks may precede the definitions they specify; elaborate
    // them once every function is known.
    let mut specs = Vec::new();
    let elab = Elab { sig: &sig, funs: &funs };
    for s in &specs_ast {
        for eq in &s.equations {
            specs.push(elab.spec_equation(eq)?);
        }
    }

    Ok(Program { sig, funs, specs, directives })
}

/// Parse a single term and elaborate it against a program's signature
/// and functions (used to read back printed terms and to build expected
/// values in tests).
pub fn parse_term(prog: &Program, src: &str) -> Result<Term, SurfaceError> {
    let ast = parse_term_str(src)?;
    let elab = Elab { sig: &prog.sig, funs: &prog.funs };
    let (t, _) = elab.term(&mut Vec::new(), None, &ast, None, 1)?;
    Ok(t)
}

fn lookup_type(sig: &Signature, name: &str, line: usize) -> Result<BaseTypeId, SurfaceError> {
    let ty = BaseTypeId::new(name);
    if sig.declares(&ty) {
        Ok(ty)
    } else {
        Err(SurfaceError::at(line, 0, format!("unknown type `{}`", name)))
    }
}

/// Equation-style elaboration context: the function being defined and
/// the names standing for the recursive-call results.
struct PrimScope<'a> {
    fun: &'a str,
    /// pattern variable of a recursive argument → result binder name.
    vmap: &'a BTreeMap<String, String>,
    result: &'a BaseTypeId,
}

struct Elab<'a> {
    sig: &'a Signature,
    funs: &'a IndexMap<String, FunInfo>,
}

impl<'a> Elab<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> SurfaceError {
        SurfaceError::at(line, 0, msg)
    }

    // ---- items --------------------------------------------------------

    fn plain_fold(
        &self,
        def: &FunDef,
        param_tys: &[BaseTypeId],
        result: &TypeSeq,
        params: &[String],
        structures: &[StructureAst],
        subject: &str,
    ) -> Result<FunInfo, SurfaceError> {
        let line = def.line;
        if params.len() != param_tys.len() {
            return Err(self.err(
                line,
                format!(
                    "`{}` declares {} parameter type(s) but is defined with {}",
                    def.name,
                    param_tys.len(),
                    params.len()
                ),
            ));
        }
        let mut seen = BTreeSet::new();
        for p in params {
            if !seen.insert(p.clone()) {
                return Err(self.err(line, format!("duplicate parameter `{}`", p)));
            }
        }
        let Some(subj_idx) = params.iter().position(|p| p == subject) else {
            return Err(self.err(
                line,
                format!("fold subject `{}` is not a parameter of `{}`", subject, def.name),
            ));
        };
        let src = param_tys[subj_idx].clone();
        let Some(decl) = self.sig.datatype(&src) else {
            return Err(self.err(
                line,
                format!("fold subject `{}` has type `{}`, which is not a datatype", subject, src),
            ));
        };
        let decl = decl.clone();
        let fi = FoldInst::new(src.clone(), result.clone(), TypeSeq::single(src));
        if structures.len() != decl.ctors.len() {
            return Err(self.err(
                line,
                format!(
                    "`{}` has {} constructors, so the fold needs {} structure arguments \
                     (found {})",
                    decl.name,
                    decl.ctors.len(),
                    decl.ctors.len(),
                    structures.len()
                ),
            ));
        }
        let mut scope: Vec<Binder> =
            params.iter().zip(param_tys).map(|(p, ty)| Binder::new(p.clone(), ty.clone())).collect();
        let mut built = Vec::new();
        for (s, ctor) in structures.iter().zip(&decl.ctors) {
            let want = self.sig.structure_binder_types(&fi, ctor);
            let binders =
                self.binders_from(&s.binders, Some(&want), line, &format!("structure for `{}`", ctor.name))?;
            let depth = scope.len();
            scope.extend(binders.iter().cloned());
            let (body, _) = self.term(&mut scope, None, &s.body, Some(result), line)?;
            scope.truncate(depth);
            built.push(Term::abs(binders, body));
        }
        let template = Term::fold(fi, built, Term::abs(vec![], Term::var(subject)), vec![]);
        Ok(FunInfo {
            name: def.name.clone(),
            params: params.to_vec(),
            param_tys: param_tys.to_vec(),
            result: result.clone(),
            template,
            primrec: false,
            line,
        })
    }

    fn prim_rec(
        &self,
        def: &FunDef,
        param_tys: &[BaseTypeId],
        result: &TypeSeq,
        equations: &[EquationAst],
    ) -> Result<FunInfo, SurfaceError> {
        let line = def.line;
        let [src] = param_tys else {
            return Err(self.err(
                line,
                format!(
                    "`fun {} where` needs a single parameter, but the signature declares {}",
                    def.name,
                    param_tys.len()
                ),
            ));
        };
        let Some(b) = result.sole().cloned() else {
            return Err(self.err(
                line,
                format!("`fun {} where` needs a single result type, not {}", def.name, result),
            ));
        };
        let Some(decl) = self.sig.datatype(src) else {
            return Err(self.err(line, format!("`{}` is not a datatype", src)));
        };
        let decl = decl.clone();
        let pair = TypeSeq(vec![b.clone(), src.clone()]);
        let fi = FoldInst::new(src.clone(), pair, TypeSeq::single(src.clone()));

        // Index the equations by the constructor their pattern matches.
        let mut by_ctor: BTreeMap<String, (&EquationAst, Vec<String>)> = BTreeMap::new();
        for eq in equations {
            let [pattern] = eq.args.as_slice() else {
                return Err(self.err(
                    eq.line,
                    format!("equation for `{}` must match on a single argument", eq.fun),
                ));
            };
            let (ctor_name, vars) = pattern_parts(pattern)
                .ok_or_else(|| {
                    self.err(
                        eq.line,
                        "the pattern must be a constructor applied to distinct variables",
                    )
                })?;
            if decl.ctor(&ctor_name).is_none() {
                return Err(self.err(
                    eq.line,
                    format!("`{}` is not a constructor of `{}`", ctor_name, decl.name),
                ));
            }
            if by_ctor.insert(ctor_name.clone(), (eq, vars)).is_some() {
                return Err(self.err(
                    eq.line,
                    format!("two equations match constructor `{}`", ctor_name),
                ));
            }
        }

        let mut structures = Vec::new();
        for ctor in &decl.ctors {
            let structure = match by_ctor.get(&ctor.name) {
                Some((eq, vars)) => {
                    self.prim_rec_structure(def, &b, &decl.name, ctor, eq, vars)?
                }
                None => self.prim_rec_default(def, &b, &decl, ctor)?,
            };
            structures.push(structure);
        }

        let fold = Term::fold(fi, structures, Term::abs(vec![], Term::var("t")), vec![]);
        let pi_binders =
            vec![Binder::new("v", b.clone()), Binder::new("w", src.clone())];
        let template = Term::at(pi_binders, Term::var("v"), fold);
        Ok(FunInfo {
            name: def.name.clone(),
            params: vec!["t".into()],
            param_tys: vec![src.clone()],
            result: result.clone(),
            template,
            primrec: true,
            line,
        })
    }

    /// The structure for one constructor of an equation-style
    /// definition: `a…, vᵢ, wᵢ…. <rhs', d(a…, w…)>`.
    fn prim_rec_structure(
        &self,
        def: &FunDef,
        b: &BaseTypeId,
        owner: &BaseTypeId,
        ctor: &CtorDecl,
        eq: &EquationAst,
        vars: &[String],
    ) -> Result<Term, SurfaceError> {
        if vars.len() != ctor.args.len() {
            return Err(self.err(
                eq.line,
                format!(
                    "constructor `{}` takes {} argument(s), the pattern names {}",
                    ctor.name,
                    ctor.args.len(),
                    vars.len()
                ),
            ));
        }
        let mut seen = BTreeSet::new();
        for v in vars {
            if !seen.insert(v.clone()) {
                return Err(self.err(eq.line, format!("pattern variable `{}` repeats", v)));
            }
        }
        let mut avoid: BTreeSet<String> = vars.iter().cloned().collect();
        let mut binders = Vec::new();
        let mut vmap = BTreeMap::new();
        for (v, ty) in vars.iter().zip(&ctor.args) {
            if ty == owner {
                let vname = fresh_name("v", &avoid);
                avoid.insert(vname.clone());
                vmap.insert(v.clone(), vname.clone());
                binders.push(Binder::new(vname, b.clone()));
                binders.push(Binder::new(v.clone(), ty.clone()));
            } else {
                binders.push(Binder::new(v.clone(), ty.clone()));
            }
        }
        let mut scope = binders.clone();
        let prim = PrimScope { fun: &def.name, vmap: &vmap, result: b };
        let expected = TypeSeq::single(b.clone());
        let (rhs, _) =
            self.term(&mut scope, Some(&prim), &eq.rhs, Some(&expected), eq.line)?;
        let rebuilt = Term::ctor(
            owner.clone(),
            ctor.name.clone(),
            vars.iter().map(Term::var).collect(),
        );
        Ok(Term::abs(binders, Term::tuple(vec![rhs, rebuilt])))
    }

    /// Default structures for omitted unit/branch equations: map the
    /// source branching onto the result type's branching.
    fn prim_rec_default(
        &self,
        def: &FunDef,
        b: &BaseTypeId,
        decl: &DatatypeDecl,
        ctor: &CtorDecl,
    ) -> Result<Term, SurfaceError> {
        let missing = || {
            self.err(
                def.line,
                format!(
                    "`fun {} where` is missing an equation for constructor `{}`",
                    def.name, ctor.name
                ),
            )
        };
        let Some(src_br) = &decl.branching else { return Err(missing()) };
        let Some(res_br) = self.sig.branching(b) else {
            return Err(self.err(
                def.line,
                format!(
                    "`fun {} where` omits the `{}` equation, but result type `{}` has no \
                     branching to map it to",
                    def.name, ctor.name, b
                ),
            ));
        };
        let res_br = res_br.clone();
        if ctor.name == src_br.unit {
            Ok(Term::abs(
                vec![],
                Term::tuple(vec![
                    Term::ctor(b.clone(), res_br.unit, vec![]),
                    Term::ctor(decl.name.clone(), src_br.unit.clone(), vec![]),
                ]),
            ))
        } else if ctor.name == src_br.branch {
            let binders = vec![
                Binder::new("v1", b.clone()),
                Binder::new("w1", decl.name.clone()),
                Binder::new("v2", b.clone()),
                Binder::new("w2", decl.name.clone()),
            ];
            Ok(Term::abs(
                binders,
                Term::tuple(vec![
                    Term::ctor(b.clone(), res_br.branch, vec![Term::var("v1"), Term::var("v2")]),
                    Term::ctor(
                        decl.name.clone(),
                        src_br.branch.clone(),
                        vec![Term::var("w1"), Term::var("w2")],
                    ),
                ]),
            ))
        } else {
            Err(missing())
        }
    }

    fn spec_equation(&self, eq: &EquationAst) -> Result<SpecEquation, SurfaceError> {
        let Some(info) = self.funs.get(&eq.fun) else {
            return Err(self.err(
                eq.line,
                format!("spec for `{}`, but no `fun {}` is defined", eq.fun, eq.fun),
            ));
        };
        let [param] = info.params.as_slice() else {
            return Err(self.err(
                eq.line,
                format!("spec equations need a single-parameter function, `{}` has {}", eq.fun, info.params.len()),
            ));
        };
        let [pattern] = eq.args.as_slice() else {
            return Err(self.err(
                eq.line,
                format!("spec equation for `{}` must match on a single argument", eq.fun),
            ));
        };
        let src = info.param_tys[0].clone();
        let decl = self
            .sig
            .datatype(&src)
            .cloned()
            .ok_or_else(|| self.err(eq.line, format!("`{}` is not a datatype", src)))?;
        let (ctor_name, vars) = pattern_parts(pattern).ok_or_else(|| {
            self.err(eq.line, "the pattern must be a constructor applied to distinct variables")
        })?;
        let ctor = decl.ctor(&ctor_name).ok_or_else(|| {
            self.err(eq.line, format!("`{}` is not a constructor of `{}`", ctor_name, decl.name))
        })?;
        if vars.len() != ctor.args.len() {
            return Err(self.err(
                eq.line,
                format!(
                    "constructor `{}` takes {} argument(s), the pattern names {}",
                    ctor_name,
                    ctor.args.len(),
                    vars.len()
                ),
            ));
        }
        let mut seen = BTreeSet::new();
        for v in &vars {
            if !seen.insert(v.clone()) {
                return Err(self.err(eq.line, format!("pattern variable `{}` repeats", v)));
            }
        }
        let typed_vars: Vec<(String, BaseTypeId)> =
            vars.iter().cloned().zip(ctor.args.iter().cloned()).collect();
        let pattern_term = Term::ctor(
            decl.name.clone(),
            ctor_name,
            vars.iter().map(Term::var).collect(),
        );
        let lhs = info
            .template
            .subst_vars(&BTreeMap::from([(param.clone(), pattern_term)]))
            .map_err(|e| self.err(eq.line, e.to_string()))?;
        let mut scope: Vec<Binder> =
            typed_vars.iter().map(|(v, ty)| Binder::new(v.clone(), ty.clone())).collect();
        let (rhs, _) =
            self.term(&mut scope, None, &eq.rhs, Some(&info.result), eq.line)?;
        let vars_ctx: typing::VarContext = typed_vars.iter().cloned().collect();
        typing::check_equation(self.sig, &BTreeMap::new(), &vars_ctx, &lhs, &rhs)
            .map_err(|e| self.err(eq.line, format!("in spec for `{}`: {}", eq.fun, e)))?;
        Ok(SpecEquation { fun: eq.fun.clone(), vars: typed_vars, lhs, rhs, line: eq.line })
    }

    fn directive(&self, d: &DirectiveAst) -> Result<Directive, SurfaceError> {
        let line = d.line;
        let mut scope = Vec::new();
        match &d.kind {
            DirectiveKind::Eval(t) => {
                let (term, _) = self.term(&mut scope, None, t, None, line)?;
                Ok(Directive::Eval { term, line })
            }
            DirectiveKind::Prove(l, r) => {
                let (lhs, lty) = self.term(&mut scope, None, l, None, line)?;
                let (rhs, _) = self.term(&mut scope, None, r, Some(&lty), line)?;
                Ok(Directive::Prove { lhs, rhs, line })
            }
            DirectiveKind::Bisim(l, r) => {
                let (lhs, lty) = self.term(&mut scope, None, l, None, line)?;
                let (rhs, _) = self.term(&mut scope, None, r, Some(&lty), line)?;
                Ok(Directive::Bisim { lhs, rhs, line })
            }
            DirectiveKind::GsCheck => Ok(Directive::GsCheck { line }),
        }
    }

    // ---- terms ----------------------------------------------------------

    /// Resolve binder ASTs against expected types (when given), checking
    /// any annotations.
    fn binders_from(
        &self,
        asts: &[BinderAst],
        want: Option<&TypeSeq>,
        line: usize,
        what: &str,
    ) -> Result<Vec<Binder>, SurfaceError> {
        if let Some(want) = want {
            if asts.len() != want.width() {
                return Err(self.err(
                    line,
                    format!("{} needs {} binder(s), found {}", what, want.width(), asts.len()),
                ));
            }
        }
        let mut out = Vec::new();
        for (i, b) in asts.iter().enumerate() {
            let ty = match (&b.ty, want) {
                (Some(t), w) => {
                    let ty = lookup_type(self.sig, t, line)?;
                    if let Some(w) = w {
                        if ty != w.0[i] {
                            return Err(self.err(
                                line,
                                format!(
                                    "binder `{}` is annotated `{}` but {} needs `{}`",
                                    b.name, ty, what, w.0[i]
                                ),
                            ));
                        }
                    }
                    ty
                }
                (None, Some(w)) => w.0[i].clone(),
                (None, None) => {
                    return Err(self.err(
                        line,
                        format!(
                            "cannot infer the type of binder `{}` in {}; annotate it (`{}^T`)",
                            b.name, what, b.name
                        ),
                    ))
                }
            };
            out.push(Binder::new(b.name.clone(), ty));
        }
        Ok(out)
    }

    fn check(
        &self,
        t: Term,
        ty: TypeSeq,
        expected: Option<&TypeSeq>,
        line: usize,
        what: &str,
    ) -> Result<(Term, TypeSeq), SurfaceError> {
        if let Some(e) = expected {
            if *e != ty {
                return Err(self.err(
                    line,
                    format!("{} has type {}, expected {}", what, ty, e),
                ));
            }
        }
        Ok((t, ty))
    }

    fn term(
        &self,
        scope: &mut Vec<Binder>,
        prim: Option<&PrimScope<'_>>,
        ast: &TermAst,
        expected: Option<&TypeSeq>,
        line: usize,
    ) -> Result<(Term, TypeSeq), SurfaceError> {
        match ast {
            TermAst::Var(name) => {
                if let Some(b) = scope.iter().rev().find(|b| b.name == *name) {
                    let ty = TypeSeq::single(b.ty.clone());
                    return self.check(Term::var(name), ty, expected, line, &format!("`{}`", name));
                }
                // A nullary constructor.
                let owner = self.resolve_ctor(name, 0, expected, line)?;
                let ty = TypeSeq::single(owner.clone());
                self.check(
                    Term::ctor(owner, name.clone(), vec![]),
                    ty,
                    expected,
                    line,
                    &format!("`{}`", name),
                )
            }
            TermAst::Num(n) => {
                let owner = self.resolve_numeral(expected, line)?;
                let mut t = Term::ctor(owner.clone(), "0", vec![]);
                for _ in 0..*n {
                    t = Term::ctor(owner.clone(), "S", vec![t]);
                }
                let ty = TypeSeq::single(owner);
                self.check(t, ty, expected, line, "numeral")
            }
            TermAst::Str(s) => {
                let ty = match expected.and_then(|e| e.sole()) {
                    Some(t) if self.sig.is_primitive(t) => t.clone(),
                    _ => BaseTypeId::new("String"),
                };
                let seq = TypeSeq::single(ty.clone());
                self.check(Term::lit(s.clone(), ty), seq, expected, line, "string literal")
            }
            TermAst::Call(name, args) => self.call(scope, prim, name, args, expected, line),
            TermAst::Infix(op, l, r) => {
                let cands: Vec<_> = self
                    .sig
                    .datatypes_with_ctor(op)
                    .into_iter()
                    .filter(|d| d.ctor(op).is_some_and(|c| c.args.len() == 2))
                    .map(|d| d.name.clone())
                    .collect();
                let owner = if let Some(e) =
                    expected.and_then(|e| e.sole()).filter(|e| cands.contains(e))
                {
                    e.clone()
                } else if cands.len() == 1 {
                    cands[0].clone()
                } else if cands.is_empty() {
                    return Err(self.err(
                        line,
                        format!("no declared datatype has a binary constructor `{}`", op),
                    ));
                } else {
                    // Ambiguous: let the left operand decide.
                    let (_, lty) = self.term(scope, prim, l, None, line)?;
                    let first_arg_of = |c: &BaseTypeId| {
                        self.sig.ctor(c, op).map(|ct| ct.args[0].clone())
                    };
                    let pick = lty.sole().and_then(|lt| {
                        cands.iter().find(|c| first_arg_of(c).as_ref() == Some(lt))
                    });
                    match pick {
                        Some(c) => c.clone(),
                        None => {
                            return Err(self.err(
                                line,
                                format!(
                                    "`{}` is a constructor of several types ({}); \
                                     add an annotation to disambiguate",
                                    op,
                                    cands
                                        .iter()
                                        .map(|c| c.to_string())
                                        .collect::<Vec<_>>()
                                        .join(", ")
                                ),
                            ))
                        }
                    }
                };
                let ctor = self.sig.ctor(&owner, op).expect("owner was resolved above").clone();
                let (lt, _) =
                    self.term(scope, prim, l, Some(&TypeSeq::single(ctor.args[0].clone())), line)?;
                let (rt, _) =
                    self.term(scope, prim, r, Some(&TypeSeq::single(ctor.args[1].clone())), line)?;
                let ty = TypeSeq::single(owner.clone());
                self.check(
                    Term::ctor(owner, op.clone(), vec![lt, rt]),
                    ty,
                    expected,
                    line,
                    &format!("`{}`", op),
                )
            }
            TermAst::Tuple(comps) => {
                let mut parts = Vec::new();
                let mut tys = Vec::new();
                if let Some(e) = expected.filter(|e| e.width() == comps.len()) {
                    for (c, ty) in comps.iter().zip(e.iter()) {
                        let want = TypeSeq::single(ty.clone());
                        let (t, got) = self.term(scope, prim, c, Some(&want), line)?;
                        parts.push(t);
                        tys.push(got);
                    }
                } else {
                    for c in comps {
                        let (t, got) = self.term(scope, prim, c, None, line)?;
                        parts.push(t);
                        tys.push(got);
                    }
                }
                let ty = TypeSeq::concat(tys);
                self.check(Term::tuple(parts), ty, expected, line, "tuple")
            }
            TermAst::Cy(binder_asts, body) => {
                // A single unannotated binder with no expected type:
                // find the unique datatype the cycle elaborates at.
                if expected.is_none() && binder_asts.len() == 1 && binder_asts[0].ty.is_none() {
                    let name = &binder_asts[0].name;
                    let mut hits = Vec::new();
                    for d in self.sig.datatypes().map(|d| d.name.clone()).collect::<Vec<_>>() {
                        let want = TypeSeq::single(d.clone());
                        let mut probe = scope.clone();
                        probe.push(Binder::new(name.clone(), d.clone()));
                        if self.term(&mut probe, prim, body, Some(&want), line).is_ok() {
                            hits.push(d);
                        }
                    }
                    match hits.as_slice() {
                        [d] => {
                            let ty = TypeSeq::single(d.clone());
                            let binders = vec![Binder::new(name.clone(), d.clone())];
                            let depth = scope.len();
                            scope.extend(binders.iter().cloned());
                            let (body, _) = self.term(scope, prim, body, Some(&ty), line)?;
                            scope.truncate(depth);
                            return self.check(Term::cy(binders, body), ty, expected, line, "cy");
                        }
                        [] => {
                            return Err(self.err(
                                line,
                                format!("the body of `cy({}. …)` elaborates at no datatype", name),
                            ))
                        }
                        many => {
                            return Err(self.err(
                                line,
                                format!(
                                    "`cy({}. …)` is ambiguous ({}); annotate the binder \
                                     (`{}^T`)",
                                    name,
                                    many.iter()
                                        .map(|c| c.to_string())
                                        .collect::<Vec<_>>()
                                        .join(", "),
                                    name
                                ),
                            ))
                        }
                    }
                }
                let binders =
                    self.binders_from(binder_asts, expected, line, "cy")?;
                let ty = TypeSeq(binders.iter().map(|b| b.ty.clone()).collect());
                let depth = scope.len();
                scope.extend(binders.iter().cloned());
                let (body, _) = self.term(scope, prim, body, Some(&ty), line)?;
                scope.truncate(depth);
                self.check(Term::cy(binders, body), ty, expected, line, "cy")
            }
            TermAst::Compose(binder_asts, body, arg) => {
                let (arg_t, binders) = if binder_asts.iter().all(|b| b.ty.is_some()) {
                    let binders = self.binders_from(binder_asts, None, line, "composition")?;
                    let want = TypeSeq(binders.iter().map(|b| b.ty.clone()).collect());
                    let (arg_t, _) = self.term(scope, prim, arg, Some(&want), line)?;
                    (arg_t, binders)
                } else {
                    let (arg_t, arg_ty) = self.term(scope, prim, arg, None, line)?;
                    let binders =
                        self.binders_from(binder_asts, Some(&arg_ty), line, "composition")?;
                    (arg_t, binders)
                };
                let depth = scope.len();
                scope.extend(binders.iter().cloned());
                let (body_t, body_ty) = self.term(scope, prim, body, expected, line)?;
                scope.truncate(depth);
                Ok((Term::at(binders, body_t, arg_t), body_ty))
            }
            TermAst::FoldGeneral(fg) => self.fold_general(scope, prim, fg, expected, line),
        }
    }

    fn call(
        &self,
        scope: &mut Vec<Binder>,
        prim: Option<&PrimScope<'_>>,
        name: &str,
        args: &[TermAst],
        expected: Option<&TypeSeq>,
        line: usize,
    ) -> Result<(Term, TypeSeq), SurfaceError> {
        // A recursive call of the function being defined by equations.
        if let Some(p) = prim.filter(|p| p.fun == name) {
            let [TermAst::Var(v)] = args else {
                return Err(self.err(
                    line,
                    format!(
                        "in equations, `{}` may only be applied directly to a recursive \
                         argument of the pattern",
                        name
                    ),
                ));
            };
            let Some(vname) = p.vmap.get(v) else {
                return Err(self.err(
                    line,
                    format!(
                        "`{}({})` is not a recursive call: `{}` is not a recursive argument \
                         of the pattern",
                        name, v, v
                    ),
                ));
            };
            let ty = TypeSeq::single(p.result.clone());
            return self.check(Term::var(vname), ty, expected, line, "recursive call");
        }
        // A declared function: inline its template.
        if let Some(info) = self.funs.get(name) {
            if args.len() != info.params.len() {
                return Err(self.err(
                    line,
                    format!(
                        "`{}` takes {} argument(s), found {}",
                        name,
                        info.params.len(),
                        args.len()
                    ),
                ));
            }
            let mut map = BTreeMap::new();
            for ((p, ty), a) in info.params.iter().zip(&info.param_tys).zip(args) {
                let want = TypeSeq::single(ty.clone());
                let (t, _) = self.term(scope, prim, a, Some(&want), line)?;
                map.insert(p.clone(), t);
            }
            let t = info
                .template
                .subst_vars(&map)
                .map_err(|e| self.err(line, e.to_string()))?;
            return self.check(t, info.result.clone(), expected, line, &format!("`{}`", name));
        }
        // A constructor application.
        let owner = self.resolve_ctor(name, args.len(), expected, line)?;
        let ctor = self.sig.ctor(&owner, name).expect("owner was resolved above").clone();
        let mut built = Vec::new();
        for (a, ty) in args.iter().zip(&ctor.args) {
            let want = TypeSeq::single(ty.clone());
            let (t, _) = self.term(scope, prim, a, Some(&want), line)?;
            built.push(t);
        }
        let ty = TypeSeq::single(owner.clone());
        self.check(
            Term::ctor(owner, name.to_string(), built),
            ty,
            expected,
            line,
            &format!("`{}`", name),
        )
    }

    /// Find the datatype owning constructor `name` at the given arity,
    /// preferring the expected type.
    fn resolve_ctor(
        &self,
        name: &str,
        arity: usize,
        expected: Option<&TypeSeq>,
        line: usize,
    ) -> Result<BaseTypeId, SurfaceError> {
        if let Some(e) = expected.and_then(|e| e.sole()) {
            if let Some(c) = self.sig.ctor(e, name) {
                if c.args.len() != arity {
                    return Err(self.err(
                        line,
                        format!(
                            "constructor `{}` of `{}` takes {} argument(s), found {}",
                            name,
                            e,
                            c.args.len(),
                            arity
                        ),
                    ));
                }
                return Ok(e.clone());
            }
        }
        let cands: Vec<_> = self
            .sig
            .datatypes_with_ctor(name)
            .into_iter()
            .filter(|d| d.ctor(name).is_some_and(|c| c.args.len() == arity))
            .map(|d| d.name.clone())
            .collect();
        match cands.as_slice() {
            [one] => Ok(one.clone()),
            [] => Err(self.err(
                line,
                format!("`{}` is not in scope and no datatype declares it at arity {}", name, arity),
            )),
            many => Err(self.err(
                line,
                format!(
                    "`{}` is a constructor of several types ({}); add an annotation",
                    name,
                    many.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
                ),
            )),
        }
    }

    /// The datatype a numeral elaborates at: one with constructors
    /// `0 : c` and `S : c -> c`.
    fn resolve_numeral(
        &self,
        expected: Option<&TypeSeq>,
        line: usize,
    ) -> Result<BaseTypeId, SurfaceError> {
        let supports = |c: &BaseTypeId| {
            self.sig.ctor(c, "0").is_some_and(|d| d.args.is_empty())
                && self.sig.ctor(c, "S").is_some_and(|d| d.args == [c.clone()])
        };
        if let Some(e) = expected.and_then(|e| e.sole()) {
            if supports(e) {
                return Ok(e.clone());
            }
            return Err(self.err(
                line,
                format!("numerals need constructors `0` and `S`, which `{}` lacks", e),
            ));
        }
        let cands: Vec<_> =
            self.sig.datatypes().map(|d| d.name.clone()).filter(|c| supports(c)).collect();
        match cands.as_slice() {
            [one] => Ok(one.clone()),
            [] => Err(self.err(line, "no declared datatype supports numerals (`0`, `S`)")),
            many => Err(self.err(
                line,
                format!(
                    "numerals are ambiguous here ({}); add an annotation",
                    many.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
                ),
            )),
        }
    }

    fn fold_general(
        &self,
        scope: &mut Vec<Binder>,
        prim: Option<&PrimScope<'_>>,
        fg: &FoldGeneralAst,
        expected: Option<&TypeSeq>,
        line: usize,
    ) -> Result<(Term, TypeSeq), SurfaceError> {
        let src = lookup_type(self.sig, &fg.src, line)?;
        let Some(decl) = self.sig.datatype(&src) else {
            return Err(self.err(line, format!("fold source `{}` is not a datatype", src)));
        };
        let decl = decl.clone();
        let mut tgt = Vec::new();
        for t in &fg.tgt {
            tgt.push(lookup_type(self.sig, t, line)?);
        }
        let tgt = TypeSeq(tgt);
        let want_sections = decl.ctors.len() + 2;
        if fg.sections.len() != want_sections {
            return Err(self.err(
                line,
                format!(
                    "fold over `{}` needs {} `;`-separated sections ({} structures, the \
                     main abstraction, and the parameter list), found {}",
                    src,
                    want_sections,
                    decl.ctors.len(),
                    fg.sections.len()
                ),
            ));
        }

        // Main abstraction: binder annotations are required, since the
        // body type cannot be known before the binders are.
        let main_sec = &fg.sections[decl.ctors.len()];
        let (main_binder_asts, main_body_ast) = section_abs(main_sec)
            .ok_or_else(|| self.err(line, "the fold main section must be a single term"))?;
        let mut main_binders = Vec::new();
        for b in main_binder_asts {
            let Some(ty) = &b.ty else {
                return Err(self.err(
                    line,
                    format!("annotate the fold main binder `{}` (`{}^T`)", b.name, b.name),
                ));
            };
            main_binders.push(Binder::new(b.name.clone(), lookup_type(self.sig, ty, line)?));
        }
        let depth = scope.len();
        scope.extend(main_binders.iter().cloned());
        let (main_body, body_ty) = self.term(scope, prim, main_body_ast, None, line)?;
        scope.truncate(depth);
        let fi = FoldInst::new(src.clone(), tgt.clone(), body_ty);

        let mut structures = Vec::new();
        for (sec, ctor) in fg.sections.iter().zip(&decl.ctors) {
            let (binder_asts, body_ast) = section_abs(sec).ok_or_else(|| {
                self.err(
                    line,
                    format!("the structure section for `{}` must be a single term", ctor.name),
                )
            })?;
            let want = self.sig.structure_binder_types(&fi, ctor);
            let binders = self.binders_from(
                binder_asts,
                Some(&want),
                line,
                &format!("structure for `{}`", ctor.name),
            )?;
            let depth = scope.len();
            scope.extend(binders.iter().cloned());
            let (body, _) = self.term(scope, prim, body_ast, Some(&tgt), line)?;
            scope.truncate(depth);
            structures.push(Term::abs(binders, body));
        }

        let param_sec = &fg.sections[decl.ctors.len() + 1];
        if param_sec.binders.is_some() {
            return Err(self.err(line, "the last fold section is the parameter list"));
        }
        let param_tys = TypeSeq::concat(main_binders.iter().map(|b| fi.map_base(&b.ty)));
        if param_sec.terms.len() != param_tys.width() {
            return Err(self.err(
                line,
                format!(
                    "fold needs {} parameter(s) for its main binders, found {}",
                    param_tys.width(),
                    param_sec.terms.len()
                ),
            ));
        }
        let mut params = Vec::new();
        for (p, ty) in param_sec.terms.iter().zip(param_tys.iter()) {
            let want = TypeSeq::single(ty.clone());
            let (t, _) = self.term(scope, prim, p, Some(&want), line)?;
            params.push(t);
        }

        let result = fi.result_ty();
        let t = Term::fold(fi, structures, Term::abs(main_binders, main_body), params);
        self.check(t, result, expected, line, "fold")
    }
}

/// View a section as an abstraction: binders (possibly empty) plus a
/// single body term.
fn section_abs(sec: &SectionAst) -> Option<(&[BinderAst], &TermAst)> {
    match (&sec.binders, sec.terms.as_slice()) {
        (Some(bs), [body]) => Some((bs, body)),
        (None, [body]) => Some((&[], body)),
        _ => None,
    }
}

/// Decompose a constructor pattern: `d(x, …)`, `x :: y`, a bare
/// constructor name, or `0`. Returns the constructor name and the
/// argument variable names.
fn pattern_parts(t: &TermAst) -> Option<(String, Vec<String>)> {
    let var_name = |t: &TermAst| match t {
        TermAst::Var(v) => Some(v.clone()),
        _ => None,
    };
    match t {
        TermAst::Var(name) => Some((name.clone(), vec![])),
        TermAst::Num(0) => Some(("0".into(), vec![])),
        TermAst::Call(name, args) => {
            let vars: Option<Vec<String>> = args.iter().map(var_name).collect();
            Some((name.clone(), vars?))
        }
        TermAst::Infix(op, l, r) => {
            Some((op.clone(), vec![var_name(l)?, var_name(r)?]))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{self, DEFAULT_FUEL};
    use crate::rules;

    const LIST_TYPES: &str = r#"
ctype CNat where
  0 : CNat
  S : CNat -> CNat
with axioms AxCy

ctype CList where
  [] : CList
  :: : CNat, CList -> CList
with axioms AxCy
"#;

    fn with_lists(rest: &str) -> String {
        format!("{}\n{}", LIST_TYPES, rest)
    }

    #[test]
    fn elaborates_the_tail_function_to_a_projected_paired_fold() {
        let src = with_lists(
            "ctail : CList -> CList\nfun ctail where\n  ctail([]) = []\n  ctail(k :: t) = t\n",
        );
        let prog = load(&src).unwrap();
        let info = &prog.funs["ctail"];
        assert!(info.primrec);

        // Expected: (v, w. v) @ fold{CList -> (CList, CList)}(
        //   <[], []>; k, x, y. <y, k :: y>; t;)
        let fi = FoldInst::new(
            "CList",
            TypeSeq(vec![BaseTypeId::new("CList"), BaseTypeId::new("CList")]),
            TypeSeq::single(BaseTypeId::new("CList")),
        );
        let nil = || Term::ctor("CList", "[]", vec![]);
        let expect = Term::at(
            vec![Binder::new("v", "CList"), Binder::new("w", "CList")],
            Term::var("v"),
            Term::fold(
                fi,
                vec![
                    Term::abs(vec![], Term::tuple(vec![nil(), nil()])),
                    Term::abs(
                        vec![
                            Binder::new("k", "CNat"),
                            Binder::new("x", "CList"),
                            Binder::new("y", "CList"),
                        ],
                        Term::tuple(vec![
                            Term::var("y"),
                            Term::ctor("CList", "::", vec![Term::var("k"), Term::var("y")]),
                        ]),
                    ),
                ],
                Term::abs(vec![], Term::var("t")),
                vec![],
            ),
        );
        assert!(
            info.template.alpha_eq(&expect),
            "elaborated:\n  {}\nexpected:\n  {}",
            info.template,
            expect
        );
    }

    #[test]
    fn tail_of_a_cyclic_list_runs_to_the_documented_value() {
        let src = with_lists(
            "ctail : CList -> CList\nfun ctail where\n  ctail([]) = []\n  ctail(k :: t) = t\n\
             \neval ctail(cy(x. 1 :: 2 :: x))\n",
        );
        let prog = load(&src).unwrap();
        let Directive::Eval { term, .. } = &prog.directives[0] else { panic!() };
        let rules = rules::gen_all(&prog.sig);
        let (nf, _) = rewrite::normalize(&prog.sig, &rules, term, DEFAULT_FUEL).unwrap();
        let expect = parse_term(&prog, "2 :: cy(y^CList. 1 :: 2 :: y)").unwrap();
        assert!(nf.alpha_eq(&expect), "normal form: {}", nf);
    }

    #[test]
    fn omitted_unit_and_branch_equations_default_to_the_result_branching() {
        let src = r#"
ctype Names where
  nm : String -> Names
  [] : Names
  + : Names, Names -> Names
with axioms AxCy, AxBr([], +)

ctype FriendGraph where
  name : String -> FriendGraph
  knows : FriendGraph -> FriendGraph
  [] : FriendGraph
  + : FriendGraph, FriendGraph -> FriendGraph
with axioms AxCy, AxBr([], +)

collect : FriendGraph -> Names
fun collect where
  collect(name(p)) = nm(p)
  collect(knows(t)) = collect(t)
"#;
        let prog = load(src).unwrap();
        let info = &prog.funs["collect"];
        // The fold has four structures even though only two equations
        // were written.
        let Term::App { args, .. } = &info.template else { panic!() };
        let (_, structures, _, _) = args[1].fold_parts().unwrap();
        assert_eq!(structures.len(), 4);
        // The unit structure is <[], []>.
        let (bs, body) = structures[2].abs_parts().unwrap();
        assert!(bs.is_empty());
        assert_eq!(body.to_string(), "<[], []>");
    }

    #[test]
    fn infix_ambiguity_is_resolved_by_expectation_or_left_operand() {
        let src = r#"
ctype A where
  u : A
  mk : String -> A
  + : A, A -> A
with axioms AxCy, AxBr(u, +)

ctype B where
  z : B
  + : B, B -> B
with axioms AxCy, AxBr(z, +)

eval mk("x") + mk("y")
eval cy(x^B. x + z)
"#;
        let prog = load(src).unwrap();
        let Directive::Eval { term, .. } = &prog.directives[0] else { panic!() };
        assert!(matches!(
            term,
            Term::App { sym: Symbol::Ctor { ty, .. }, .. } if ty.as_str() == "A"
        ));
        let Directive::Eval { term, .. } = &prog.directives[1] else { panic!() };
        let Term::App { args, .. } = term else { panic!() };
        let (_, body) = args[0].abs_parts().unwrap();
        assert!(matches!(
            body,
            Term::App { sym: Symbol::Ctor { ty, .. }, .. } if ty.as_str() == "B"
        ));
    }

    #[test]
    fn rejects_malformed_programs_with_positions() {
        // AxBr must name declared constructors.
        let e = load("ctype B where\n  u : B\nwith axioms AxCy, AxBr(u, m)").unwrap_err();
        assert!(e.msg.contains("branch"), "{}", e.msg);

        // Duplicate datatype.
        let e = load("ctype A where u : A\nwith axioms AxCy\nctype A where v : A\nwith axioms AxCy")
            .unwrap_err();
        assert!(e.msg.contains("declared twice"), "{}", e.msg);

        // fun without a signature line.
        let e = load(&with_lists("fun sum t = fold (0, k.x.x) t")).unwrap_err();
        assert!(e.msg.contains("missing signature line"), "{}", e.msg);

        // Wrong structure count.
        let e = load(&with_lists("sum : CList -> CNat\nfun sum t = fold (0) t")).unwrap_err();
        assert!(e.msg.contains("structure arguments"), "{}", e.msg);

        // Equation for a constructor that does not exist.
        let e = load(&with_lists(
            "f : CList -> CNat\nfun f where\n  f(cons(k, t)) = 0\n  f([]) = 0\n",
        ))
        .unwrap_err();
        assert!(e.msg.contains("not a constructor"), "{}", e.msg);

        // Missing equation without branching to fall back on.
        let e = load(&with_lists("f : CList -> CNat\nfun f where\n  f([]) = 0\n")).unwrap_err();
        assert!(e.msg.contains("missing an equation"), "{}", e.msg);

        // Unbound variable in a directive.
        let e = load(&with_lists("eval 1 :: rest")).unwrap_err();
        assert!(e.msg.contains("not in scope"), "{}", e.msg);

        // Recursive call applied to a non-pattern variable.
        let e = load(&with_lists(
            "f : CList -> CNat\nfun f where\n  f([]) = 0\n  f(k :: t) = f(k)\n",
        ))
        .unwrap_err();
        assert!(e.msg.contains("not a recursive argument"), "{}", e.msg);
    }

    #[test]
    fn spec_equations_elaborate_with_inlined_calls() {
        let src = with_lists(
            "plus : CNat, CNat -> CNat\nfun plus(m, n) = fold (n, x.S(x)) m\n\
             sum : CList -> CNat\n\
             spec sum([]) = 0\n     sum(k :: t) = plus(k, sum(t))\n\
             fun sum t = fold (0, k.x.plus(k, x)) t\n",
        );
        let prog = load(&src).unwrap();
        assert_eq!(prog.specs.len(), 2);
        let nil_case = &prog.specs[0];
        assert!(nil_case.vars.is_empty());
        // lhs is sum applied to []; inlining makes it a fold term.
        assert!(nil_case.lhs.fold_parts().is_some());
        let cons_case = &prog.specs[1];
        assert_eq!(
            cons_case.vars,
            vec![
                ("k".to_string(), BaseTypeId::new("CNat")),
                ("t".to_string(), BaseTypeId::new("CList"))
            ]
        );
        // Both sides mention the pattern variables freely.
        assert!(cons_case.rhs.free_vars().contains("k"));
        assert!(cons_case.rhs.free_vars().contains("t"));
    }
}
