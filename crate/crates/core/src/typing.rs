//! Syntax-directed type inference for kernel terms.
//!
//! Every term synthesizes a type sequence bottom-up: binders are
//! annotated, so no unification is needed. Abstractions are not terms;
//! they are checked in the argument positions of the symbols that bind
//! (`cy`, `@`, `fold`), each of which fixes its abstraction arity.
//!
//! Checked judgements:
//! - variables and literals: context lookup / primitive type;
//! - constructor applications: declared argument types, result the
//!   owning datatype;
//! - tuples: concatenation of component types; the empty tuple is the
//!   empty sequence;
//! - cycles `cy(x⃗. t)`: body type equals the binder types, which are the
//!   result;
//! - compositions `(y⃗. t) @ s`: the argument's type equals the binder
//!   types, the result is the body's type;
//! - folds: one structure abstraction per constructor of the source
//!   datatype (binder types are the interpreted constructor argument
//!   types, body type the target), a main abstraction whose body has the
//!   declared body type, and one width-1 parameter per interpreted
//!   main-binder slot; the result is the interpreted body type;
//! - metavariable applications: argument types concatenate to the
//!   declared flat argument list, result as declared.

use crate::kernel::{BaseTypeId, Binder, Symbol, Term, TypeSeq};
use crate::signature::Signature;
use std::collections::BTreeMap;

/// Declared arity of a metavariable: flat argument types plus result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaDecl {
    pub args: Vec<BaseTypeId>,
    pub result: TypeSeq,
}

/// Types of the metavariables of a rewrite rule.
pub type MetaContext = BTreeMap<String, MetaDecl>;

/// Types of free variables.
pub type VarContext = BTreeMap<String, BaseTypeId>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("unknown metavariable `{0}`")]
    UnknownMeta(String),
    #[error("literal of undeclared primitive type `{0}`")]
    BadLiteralType(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("`{ty}` has no constructor `{ctor}`")]
    UnknownCtor { ty: String, ctor: String },
    #[error("constructor `{ctor}` expects {want} arguments, got {got}")]
    CtorArity { ctor: String, want: usize, got: usize },
    #[error("in `{context}`: expected type {want}, found {got}")]
    Mismatch { context: String, want: String, got: String },
    #[error("abstraction used as a term")]
    AbsAsTerm,
    #[error("expected an abstraction in `{0}`")]
    ExpectedAbs(String),
    #[error("`{sym}` expects {want} arguments, got {got}")]
    SymbolArity { sym: String, want: usize, got: usize },
    #[error("fold source `{0}` is not a declared datatype")]
    FoldSource(String),
    #[error("fold expects {want} structure/parameter arguments, got {got}")]
    FoldArity { want: usize, got: usize },
    #[error("metavariable `{name}`: argument types {got} do not tile the declared arguments {want}")]
    MetaArgs { name: String, want: String, got: String },
}

fn mismatch(context: impl Into<String>, want: &TypeSeq, got: &TypeSeq) -> TypeError {
    TypeError::Mismatch {
        context: context.into(),
        want: want.to_string(),
        got: got.to_string(),
    }
}

/// Infer the type sequence of a term with no free variables or
/// metavariables in scope.
pub fn infer_closed(sig: &Signature, t: &Term) -> Result<TypeSeq, TypeError> {
    infer(sig, &MetaContext::new(), &VarContext::new(), t)
}

/// Infer the type sequence of a term.
pub fn infer(
    sig: &Signature,
    metas: &MetaContext,
    vars: &VarContext,
    t: &Term,
) -> Result<TypeSeq, TypeError> {
    let mut scope: Vec<Binder> = Vec::new();
    infer_in(sig, metas, vars, &mut scope, t)
}

/// Check that both sides of an equation are well-typed with the same type.
pub fn check_equation(
    sig: &Signature,
    metas: &MetaContext,
    vars: &VarContext,
    lhs: &Term,
    rhs: &Term,
) -> Result<TypeSeq, TypeError> {
    let lt = infer(sig, metas, vars, lhs)?;
    let rt = infer(sig, metas, vars, rhs)?;
    if lt != rt {
        return Err(mismatch("equation right-hand side", &lt, &rt));
    }
    Ok(lt)
}

fn resolve(scope: &[Binder], vars: &VarContext, name: &str) -> Option<BaseTypeId> {
    scope
        .iter()
        .rev()
        .find(|b| b.name == name)
        .map(|b| b.ty.clone())
        .or_else(|| vars.get(name).cloned())
}

fn infer_in(
    sig: &Signature,
    metas: &MetaContext,
    vars: &VarContext,
    scope: &mut Vec<Binder>,
    t: &Term,
) -> Result<TypeSeq, TypeError> {
    match t {
        Term::Var(x) => resolve(scope, vars, x)
            .map(TypeSeq::single)
            .ok_or_else(|| TypeError::UnboundVar(x.clone())),
        Term::Lit { ty, .. } => {
            if sig.is_primitive(ty) {
                Ok(TypeSeq::single(ty.clone()))
            } else {
                Err(TypeError::BadLiteralType(ty.to_string()))
            }
        }
        Term::Abs { .. } => Err(TypeError::AbsAsTerm),
        Term::Meta { name, args } => {
            let decl = metas.get(name).ok_or_else(|| TypeError::UnknownMeta(name.clone()))?;
            let mut flat: Vec<BaseTypeId> = Vec::new();
            for a in args {
                let ty = infer_in(sig, metas, vars, scope, a)?;
                flat.extend(ty.0);
            }
            if flat != decl.args {
                return Err(TypeError::MetaArgs {
                    name: name.clone(),
                    want: TypeSeq(decl.args.clone()).to_string(),
                    got: TypeSeq(flat).to_string(),
                });
            }
            Ok(decl.result.clone())
        }
        Term::App { sym, args } => match sym {
            Symbol::Ctor { ty, name } => {
                let decl = sig
                    .ctor(ty, name)
                    .ok_or_else(|| TypeError::UnknownCtor { ty: ty.to_string(), ctor: name.clone() })?
                    .clone();
                if args.len() != decl.args.len() {
                    return Err(TypeError::CtorArity {
                        ctor: name.clone(),
                        want: decl.args.len(),
                        got: args.len(),
                    });
                }
                for (a, want) in args.iter().zip(&decl.args) {
                    let got = infer_in(sig, metas, vars, scope, a)?;
                    let want_seq = TypeSeq::single(want.clone());
                    if got != want_seq {
                        return Err(mismatch(format!("argument of `{}`", name), &want_seq, &got));
                    }
                }
                Ok(TypeSeq::single(ty.clone()))
            }
            Symbol::Empty => {
                if args.is_empty() {
                    Ok(TypeSeq::unit())
                } else {
                    Err(TypeError::SymbolArity { sym: "<>".into(), want: 0, got: args.len() })
                }
            }
            Symbol::Tuple => {
                let mut comps = Vec::new();
                for a in args {
                    let ty = infer_in(sig, metas, vars, scope, a)?;
                    comps.extend(ty.0);
                }
                Ok(TypeSeq(comps))
            }
            Symbol::Cy => {
                let [arg] = args.as_slice() else {
                    return Err(TypeError::SymbolArity { sym: "cy".into(), want: 1, got: args.len() });
                };
                let (binders, body) =
                    arg.abs_parts().ok_or_else(|| TypeError::ExpectedAbs("cy".into()))?;
                for b in binders {
                    check_declared(sig, &b.ty)?;
                }
                let binder_tys = TypeSeq(binders.iter().map(|b| b.ty.clone()).collect());
                let body_ty = infer_under(sig, metas, vars, scope, binders, body)?;
                if body_ty != binder_tys {
                    return Err(mismatch("cy body", &binder_tys, &body_ty));
                }
                Ok(binder_tys)
            }
            Symbol::At => {
                let [abs, arg] = args.as_slice() else {
                    return Err(TypeError::SymbolArity { sym: "@".into(), want: 2, got: args.len() });
                };
                let (binders, body) =
                    abs.abs_parts().ok_or_else(|| TypeError::ExpectedAbs("@".into()))?;
                let binder_tys = TypeSeq(binders.iter().map(|b| b.ty.clone()).collect());
                let arg_ty = infer_in(sig, metas, vars, scope, arg)?;
                if arg_ty != binder_tys {
                    return Err(mismatch("composition argument", &binder_tys, &arg_ty));
                }
                infer_under(sig, metas, vars, scope, binders, body)
            }
            Symbol::Fold(fi) => {
                let datatype = sig
                    .datatype(&fi.src)
                    .ok_or_else(|| TypeError::FoldSource(fi.src.to_string()))?
                    .clone();
                for ty in fi.tgt.iter().chain(fi.body_ty.iter()) {
                    check_declared(sig, ty)?;
                }
                let (inst, structures, main, params) = t
                    .fold_parts()
                    .ok_or_else(|| TypeError::ExpectedAbs("fold".into()))?;
                debug_assert_eq!(inst, fi);
                if structures.len() != datatype.ctors.len() {
                    return Err(TypeError::FoldArity {
                        want: datatype.ctors.len(),
                        got: structures.len(),
                    });
                }
                for (s, ctor) in structures.iter().zip(&datatype.ctors) {
                    let (binders, body) = s
                        .abs_parts()
                        .ok_or_else(|| TypeError::ExpectedAbs(format!("structure for `{}`", ctor.name)))?;
                    let want = sig.structure_binder_types(fi, ctor);
                    let got = TypeSeq(binders.iter().map(|b| b.ty.clone()).collect());
                    if got != want {
                        return Err(mismatch(
                            format!("structure binders for `{}`", ctor.name),
                            &want,
                            &got,
                        ));
                    }
                    let body_ty = infer_under(sig, metas, vars, scope, binders, body)?;
                    if body_ty != fi.tgt {
                        return Err(mismatch(
                            format!("structure body for `{}`", ctor.name),
                            &fi.tgt,
                            &body_ty,
                        ));
                    }
                }
                let (main_binders, main_body) = main
                    .abs_parts()
                    .ok_or_else(|| TypeError::ExpectedAbs("fold main argument".into()))?;
                for b in main_binders {
                    check_declared(sig, &b.ty)?;
                }
                let body_ty = infer_under(sig, metas, vars, scope, main_binders, main_body)?;
                if body_ty != fi.body_ty {
                    return Err(mismatch("fold body", &fi.body_ty, &body_ty));
                }
                // Parameters: one width-1 term per interpreted binder slot.
                let param_tys =
                    TypeSeq::concat(main_binders.iter().map(|b| fi.map_base(&b.ty)));
                if params.len() != param_tys.width() {
                    return Err(TypeError::FoldArity {
                        want: datatype.ctors.len() + 1 + param_tys.width(),
                        got: datatype.ctors.len() + 1 + params.len(),
                    });
                }
                for (p, want) in params.iter().zip(param_tys.iter()) {
                    let got = infer_in(sig, metas, vars, scope, p)?;
                    let want_seq = TypeSeq::single(want.clone());
                    if got != want_seq {
                        return Err(mismatch("fold parameter", &want_seq, &got));
                    }
                }
                Ok(fi.result_ty())
            }
        },
    }
}

fn infer_under(
    sig: &Signature,
    metas: &MetaContext,
    vars: &VarContext,
    scope: &mut Vec<Binder>,
    binders: &[Binder],
    body: &Term,
) -> Result<TypeSeq, TypeError> {
    let depth = scope.len();
    scope.extend(binders.iter().cloned());
    let out = infer_in(sig, metas, vars, scope, body);
    scope.truncate(depth);
    out
}

fn check_declared(sig: &Signature, ty: &BaseTypeId) -> Result<(), TypeError> {
    if sig.declares(ty) {
        Ok(())
    } else {
        Err(TypeError::UnknownType(ty.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::FoldInst;
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

    #[test]
    fn types_a_cyclic_list() {
        // cy(x. S(S(0)) :: S(0) :: x) : CList
        let sig = fixtures::nat_list();
        let t = Term::cy(
            vec![b("x", "CList")],
            Term::ctor(
                "CList",
                "::",
                vec![nat(2), Term::ctor("CList", "::", vec![nat(1), Term::var("x")])],
            ),
        );
        assert_eq!(infer_closed(&sig, &t).unwrap(), TypeSeq::single("CList".into()));
    }

    #[test]
    fn rejects_cy_body_type_mismatch() {
        let sig = fixtures::nat_list();
        let t = Term::cy(vec![b("x", "CList")], Term::ctor("CNat", "S", vec![nat(0)]));
        assert!(matches!(infer_closed(&sig, &t), Err(TypeError::Mismatch { .. })));
    }

    #[test]
    fn types_fold_and_checks_structures() {
        let sig = fixtures::nat_list();
        // Target CNat, recursion body of type CList: the result is the
        // interpreted body type, CNat.
        let fi = FoldInst::new("CList", TypeSeq::single("CNat".into()), TypeSeq::single("CList".into()));
        let good = Term::fold(
            fi.clone(),
            vec![
                Term::abs(vec![], nat(0)),
                Term::abs(vec![b("k", "CNat"), b("x", "CNat")], Term::ctor("CNat", "S", vec![Term::var("x")])),
            ],
            Term::abs(vec![b("y", "CList")], Term::var("y")),
            vec![Term::var("p")],
        );
        let mut vars = VarContext::new();
        vars.insert("p".to_string(), "CNat".into());
        assert_eq!(
            infer(&sig, &MetaContext::new(), &vars, &good).unwrap(),
            TypeSeq::single("CNat".into())
        );

        // Wrong structure binder types must be rejected.
        let bad = Term::fold(
            fi,
            vec![
                Term::abs(vec![], nat(0)),
                Term::abs(vec![b("k", "CList"), b("x", "CNat")], Term::var("x")),
            ],
            Term::abs(vec![b("y", "CList")], Term::var("y")),
            vec![Term::var("p")],
        );
        assert!(matches!(
            infer(&sig, &MetaContext::new(), &vars, &bad),
            Err(TypeError::Mismatch { .. })
        ));
    }

    #[test]
    fn fold_interprets_main_binders_into_params() {
        // Paired fold CList -> (CNat, CList): a CList main binder expands
        // to two parameter slots.
        let sig = fixtures::nat_list();
        let fi = FoldInst::new(
            "CList",
            TypeSeq(vec!["CNat".into(), "CList".into()]),
            TypeSeq::single("CList".into()),
        );
        let t = Term::fold(
            fi,
            vec![
                Term::abs(vec![], Term::tuple(vec![nat(0), Term::ctor("CList", "nil", vec![])])),
                Term::abs(
                    vec![b("k", "CNat"), b("v", "CNat"), b("w", "CList")],
                    Term::tuple(vec![Term::var("v"), Term::var("w")]),
                ),
            ],
            Term::abs(vec![b("y", "CList")], Term::var("y")),
            vec![Term::var("p1"), Term::var("p2")],
        );
        let mut vars = VarContext::new();
        vars.insert("p1".to_string(), "CNat".into());
        vars.insert("p2".to_string(), "CList".into());
        assert_eq!(
            infer(&sig, &MetaContext::new(), &vars, &t).unwrap(),
            TypeSeq(vec!["CNat".into(), "CList".into()])
        );
    }

    #[test]
    fn types_composition() {
        let sig = fixtures::nat_list();
        let t = Term::at(
            vec![b("v", "CNat"), b("w", "CList")],
            Term::var("v"),
            Term::tuple(vec![nat(1), Term::ctor("CList", "nil", vec![])]),
        );
        assert_eq!(infer_closed(&sig, &t).unwrap(), TypeSeq::single("CNat".into()));
        // Argument width mismatch.
        let bad = Term::at(vec![b("v", "CNat"), b("w", "CList")], Term::var("v"), nat(1));
        assert!(matches!(infer_closed(&sig, &bad), Err(TypeError::Mismatch { .. })));
    }

    #[test]
    fn types_metavariable_applications() {
        let sig = fixtures::nat_list();
        let mut metas = MetaContext::new();
        metas.insert(
            "e".to_string(),
            MetaDecl {
                args: vec!["CNat".into(), "CNat".into()],
                result: TypeSeq::single("CNat".into()),
            },
        );
        let mut vars = VarContext::new();
        vars.insert("a".to_string(), "CNat".into());
        // e[a, a] : CNat — and a width-2 argument tiles both slots.
        let flat = Term::meta("e", vec![Term::var("a"), Term::var("a")]);
        assert_eq!(
            infer(&sig, &metas, &vars, &flat).unwrap(),
            TypeSeq::single("CNat".into())
        );
        let wide = Term::meta("e", vec![Term::tuple(vec![Term::var("a"), Term::var("a")])]);
        assert_eq!(
            infer(&sig, &metas, &vars, &wide).unwrap(),
            TypeSeq::single("CNat".into())
        );
        let bad = Term::meta("e", vec![Term::var("a")]);
        assert!(matches!(infer(&sig, &metas, &vars, &bad), Err(TypeError::MetaArgs { .. })));
    }

    #[test]
    fn literals_require_primitive_types() {
        let sig = fixtures::nat_list();
        assert_eq!(
            infer_closed(&sig, &Term::lit("alice", "String")).unwrap(),
            TypeSeq::single("String".into())
        );
        assert!(matches!(
            infer_closed(&sig, &Term::lit("alice", "CNat")),
            Err(TypeError::BadLiteralType(_))
        ));
    }
}
