//! Datatype signatures: cyclic datatypes, their constructors, and the
//! equational axioms attached to each type.
//!
//! Every declared datatype automatically carries the structural symbols
//! (empty tuple, tupling, cycle former, composition) and the cycle
//! axioms; a datatype may additionally declare branching structure — a
//! unit constructor and a binary branch constructor subject to
//! idempotent-commutative-monoid axioms — which makes its cycles behave
//! like finitely-branching systems.
//!
//! Validation enforced at declaration time:
//! - type, constructor, and primitive names are unique where required;
//! - constructor argument types are declared;
//! - non-recursive arguments precede recursive ones in every constructor
//!   (the normal form the fold machinery assumes);
//! - branching declarations reference a nullary constructor (the unit)
//!   and a binary one of shape `c, c -> c` (the branch).

use crate::kernel::{BaseTypeId, TypeSeq};
use indexmap::IndexMap;
use std::fmt;

/// A constructor declaration `name : args -> ty`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtorDecl {
    pub name: String,
    /// Argument types, one base type per argument; non-recursive
    /// arguments (types other than the owning datatype) come first.
    pub args: Vec<BaseTypeId>,
}

impl CtorDecl {
    pub fn new(name: impl Into<String>, args: Vec<BaseTypeId>) -> Self {
        CtorDecl { name: name.into(), args }
    }

    /// Indices of recursive arguments (those of the owning datatype).
    pub fn recursive_positions(&self, owner: &BaseTypeId) -> Vec<usize> {
        self.args
            .iter()
            .enumerate()
            .filter(|(_, a)| *a == owner)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Branching structure of a datatype: a unit and a binary branch
/// constructor subject to unit, commutativity, idempotence, and
/// degeneracy axioms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branching {
    /// Name of the nullary unit constructor.
    pub unit: String,
    /// Name of the binary branch constructor `c, c -> c`.
    pub branch: String,
}

/// A declared cyclic datatype.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatatypeDecl {
    pub name: BaseTypeId,
    /// Constructors in declaration order (the order structure arguments
    /// of folds follow).
    pub ctors: Vec<CtorDecl>,
    /// Optional branching structure.
    pub branching: Option<Branching>,
}

impl DatatypeDecl {
    pub fn ctor(&self, name: &str) -> Option<&CtorDecl> {
        self.ctors.iter().find(|c| c.name == name)
    }
    pub fn ctor_index(&self, name: &str) -> Option<usize> {
        self.ctors.iter().position(|c| c.name == name)
    }
}

/// Errors raised while building a signature.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SigError {
    #[error("type `{0}` is declared twice")]
    DuplicateType(String),
    #[error("datatype `{ty}` declares constructor `{ctor}` twice")]
    DuplicateCtor { ty: String, ctor: String },
    #[error("constructor `{ctor}` of `{ty}` uses undeclared type `{arg}`")]
    UnknownArgType { ty: String, ctor: String, arg: String },
    #[error("constructor `{ctor}` of `{ty}`: non-recursive arguments must precede recursive ones")]
    ArgOrder { ty: String, ctor: String },
    #[error("datatype `{ty}`: branching unit `{unit}` must be a nullary constructor of `{ty}`")]
    BadUnit { ty: String, unit: String },
    #[error("datatype `{ty}`: branch `{branch}` must be a constructor of shape `{ty}, {ty} -> {ty}`")]
    BadBranch { ty: String, branch: String },
}

/// A collection of datatype declarations plus primitive (literal-carrying)
/// types. Declaration order is preserved and meaningful.
#[derive(Debug, Clone)]
pub struct Signature {
    datatypes: IndexMap<String, DatatypeDecl>,
    primitives: Vec<BaseTypeId>,
}

impl Default for Signature {
    fn default() -> Self {
        Signature::new()
    }
}

impl Signature {
    /// Signature with the built-in primitives (`String`).
    pub fn new() -> Self {
        Signature { datatypes: IndexMap::new(), primitives: vec![BaseTypeId::new("String")] }
    }

    pub fn add_datatype(&mut self, decl: DatatypeDecl) -> Result<(), SigError> {
        let ty = decl.name.clone();
        if self.datatypes.contains_key(ty.as_str()) || self.is_primitive(&ty) {
            return Err(SigError::DuplicateType(ty.0));
        }
        // Constructor argument types may refer to any previously declared
        // type, a primitive, or the datatype itself.
        for (i, c) in decl.ctors.iter().enumerate() {
            if decl.ctors[..i].iter().any(|d| d.name == c.name) {
                return Err(SigError::DuplicateCtor { ty: ty.0.clone(), ctor: c.name.clone() });
            }
            for a in &c.args {
                if *a != ty && !self.declares(a) {
                    return Err(SigError::UnknownArgType {
                        ty: ty.0.clone(),
                        ctor: c.name.clone(),
                        arg: a.0.clone(),
                    });
                }
            }
            // Non-recursive before recursive.
            let mut seen_rec = false;
            for a in &c.args {
                if *a == ty {
                    seen_rec = true;
                } else if seen_rec {
                    return Err(SigError::ArgOrder { ty: ty.0.clone(), ctor: c.name.clone() });
                }
            }
        }
        if let Some(br) = &decl.branching {
            match decl.ctor(&br.unit) {
                Some(u) if u.args.is_empty() => {}
                _ => return Err(SigError::BadUnit { ty: ty.0.clone(), unit: br.unit.clone() }),
            }
            match decl.ctor(&br.branch) {
                Some(b) if b.args.len() == 2 && b.args.iter().all(|a| *a == ty) => {}
                _ => {
                    return Err(SigError::BadBranch { ty: ty.0.clone(), branch: br.branch.clone() })
                }
            }
        }
        self.datatypes.insert(ty.0.clone(), decl);
        Ok(())
    }

    /// Datatypes in declaration order.
    pub fn datatypes(&self) -> impl Iterator<Item = &DatatypeDecl> {
        self.datatypes.values()
    }

    pub fn datatype(&self, ty: &BaseTypeId) -> Option<&DatatypeDecl> {
        self.datatypes.get(ty.as_str())
    }

    pub fn primitives(&self) -> &[BaseTypeId] {
        &self.primitives
    }

    pub fn is_primitive(&self, ty: &BaseTypeId) -> bool {
        self.primitives.contains(ty)
    }

    /// True when the type is a datatype or primitive of this signature.
    pub fn declares(&self, ty: &BaseTypeId) -> bool {
        self.datatype(ty).is_some() || self.is_primitive(ty)
    }

    pub fn ctor(&self, ty: &BaseTypeId, name: &str) -> Option<&CtorDecl> {
        self.datatype(ty).and_then(|d| d.ctor(name))
    }

    /// Branching structure of a datatype, if any.
    pub fn branching(&self, ty: &BaseTypeId) -> Option<&Branching> {
        self.datatype(ty).and_then(|d| d.branching.as_ref())
    }

    /// All datatypes that declare branching structure, in declaration order.
    pub fn branching_datatypes(&self) -> impl Iterator<Item = (&DatatypeDecl, &Branching)> {
        self.datatypes().filter_map(|d| d.branching.as_ref().map(|b| (d, b)))
    }

    /// Datatypes declaring the constructor name (for resolution of
    /// unannotated constructor uses).
    pub fn datatypes_with_ctor(&self, name: &str) -> Vec<&DatatypeDecl> {
        self.datatypes().filter(|d| d.ctor(name).is_some()).collect()
    }

    /// Binder types of the structure argument for constructor `ctor` in a
    /// fold with instance `fi`: the interpretation of each constructor
    /// argument type, flattened.
    pub fn structure_binder_types(
        &self,
        fi: &crate::kernel::FoldInst,
        ctor: &CtorDecl,
    ) -> TypeSeq {
        TypeSeq::concat(ctor.args.iter().map(|a| fi.map_base(a)))
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.datatypes() {
            writeln!(f, "ctype {} {{", d.name)?;
            for c in &d.ctors {
                if c.args.is_empty() {
                    writeln!(f, "  {} : {}", c.name, d.name)?;
                } else {
                    let args: Vec<String> = c.args.iter().map(|a| a.to_string()).collect();
                    writeln!(f, "  {} : {} -> {}", c.name, args.join(", "), d.name)?;
                }
            }
            match &d.branching {
                Some(br) => writeln!(f, "}} with AxCy, AxBr({}, {})", br.unit, br.branch)?,
                None => writeln!(f, "}} with AxCy")?,
            }
        }
        Ok(())
    }
}

/// Convenience builders for the signatures used across tests.
#[doc(hidden)]
pub mod fixtures {
    use super::*;

    /// CNat (zero/successor) and CList (cons-lists of CNat), no branching.
    pub fn nat_list() -> Signature {
        let mut sig = Signature::new();
        sig.add_datatype(DatatypeDecl {
            name: "CNat".into(),
            ctors: vec![CtorDecl::new("0", vec![]), CtorDecl::new("S", vec!["CNat".into()])],
            branching: None,
        })
        .unwrap();
        sig.add_datatype(DatatypeDecl {
            name: "CList".into(),
            ctors: vec![
                CtorDecl::new("nil", vec![]),
                CtorDecl::new("::", vec!["CNat".into(), "CList".into()]),
            ],
            branching: None,
        })
        .unwrap();
        sig
    }

    /// Booleans with AxBr(true, &) and trees with AxBr(nil, +).
    pub fn tree_bool() -> Signature {
        let mut sig = Signature::new();
        sig.add_datatype(DatatypeDecl {
            name: "Bool".into(),
            ctors: vec![
                CtorDecl::new("true", vec![]),
                CtorDecl::new("false", vec![]),
                CtorDecl::new("&", vec!["Bool".into(), "Bool".into()]),
            ],
            branching: Some(Branching { unit: "true".into(), branch: "&".into() }),
        })
        .unwrap();
        sig.add_datatype(DatatypeDecl {
            name: "CTree".into(),
            ctors: vec![
                CtorDecl::new("a", vec!["CTree".into()]),
                CtorDecl::new("nil", vec![]),
                CtorDecl::new("+", vec!["CTree".into(), "CTree".into()]),
            ],
            branching: Some(Branching { unit: "nil".into(), branch: "+".into() }),
        })
        .unwrap();
        sig
    }

    /// Ready-made terms over [`nat_list`] used across test suites.
    pub mod terms {
        use crate::kernel::{Binder, FoldInst, Term, TypeSeq};

        pub fn nat(n: u32) -> Term {
            let mut t = Term::ctor("CNat", "0", vec![]);
            for _ in 0..n {
                t = Term::ctor("CNat", "S", vec![t]);
            }
            t
        }

        pub fn cons(h: Term, t: Term) -> Term {
            Term::ctor("CList", "::", vec![h, t])
        }

        /// `cy(x. v1 :: … :: vn :: x)`.
        pub fn cyclic_list(vals: &[u32]) -> Term {
            let mut body = Term::var("x");
            for v in vals.iter().rev() {
                body = cons(nat(*v), body);
            }
            Term::cy(vec![Binder::new("x", "CList")], body)
        }

        /// `cy(x. S^k(x))`.
        pub fn cyc_s(k: u32) -> Term {
            let mut body = Term::var("x");
            for _ in 0..k {
                body = Term::ctor("CNat", "S", vec![body]);
            }
            Term::cy(vec![Binder::new("x", "CNat")], body)
        }

        /// Addition as a fold over the first argument's structure.
        pub fn plus(m: Term, n: Term) -> Term {
            let fi = FoldInst::new(
                "CNat",
                TypeSeq::single("CNat".into()),
                TypeSeq::single("CNat".into()),
            );
            Term::fold(
                fi,
                vec![
                    Term::abs(vec![], n),
                    Term::abs(
                        vec![Binder::new("w", "CNat")],
                        Term::ctor("CNat", "S", vec![Term::var("w")]),
                    ),
                ],
                Term::abs(vec![], m),
                vec![],
            )
        }

        /// Sum of a list's elements: `fold` with structures `0` and
        /// `(k, v. plus(k, v))`.
        pub fn sum(subject: Term) -> Term {
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
                        vec![Binder::new("k", "CNat"), Binder::new("v", "CNat")],
                        plus(Term::var("k"), Term::var("v")),
                    ),
                ],
                Term::abs(vec![], subject),
                vec![],
            )
        }

        /// Map-successor over a list: structures `nil` and
        /// `(k, s. S(k) :: s)`.
        pub fn mapinc(subject: Term) -> Term {
            let fi = FoldInst::new(
                "CList",
                TypeSeq::single("CList".into()),
                TypeSeq::single("CList".into()),
            );
            Term::fold(
                fi,
                vec![
                    Term::abs(vec![], Term::ctor("CList", "nil", vec![])),
                    Term::abs(
                        vec![Binder::new("k", "CNat"), Binder::new("s", "CList")],
                        cons(Term::ctor("CNat", "S", vec![Term::var("k")]), Term::var("s")),
                    ),
                ],
                Term::abs(vec![], subject),
                vec![],
            )
        }
    }
}
