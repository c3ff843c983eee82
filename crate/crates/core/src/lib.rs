//! Engine for cyclic algebraic datatypes.
//!
//! Terms may contain explicit cycles (`cy`), which denote their infinite
//! unfoldings; equality is bisimilarity of those unfoldings. The engine
//! provides:
//!
//! - a kernel term representation with typed binders, alpha-equivalence,
//!   capture-avoiding substitution, and metavariable substitution
//!   ([`kernel`]);
//! - user-declared cyclic datatypes with optional branching structure
//!   ([`signature`]) and a syntax-directed type checker ([`typing`]);
//! - structured recursion over cyclic data (`fold`), with two generated
//!   first-class rewrite-rule sets — the fold rules and the cycle
//!   simplification rules ([`rules`]) — and a deterministic rewrite engine
//!   with traces ([`rewrite`]);
//! - transition charts and bisimulation checking by partition refinement
//!   ([`bisim`]), and a decision procedure for equations between cyclic
//!   terms built on top of it ([`prover`]);
//! - a termination checker for higher-order rule sets based on
//!   constructor accessibility and a computability closure ([`termcheck`]);
//! - a surface language with datatype declarations, function definitions
//!   (plain folds and primitive recursion), specification blocks, and
//!   directives ([`surface`]), plus a printer whose output re-parses
//!   ([`print`]);
//! - seeded random term generation for property testing ([`gen`]).

pub mod bisim;
pub mod gen;
pub mod kernel;
pub mod print;
pub mod prover;
pub mod rewrite;
pub mod rules;
pub mod signature;
pub mod surface;
pub mod termcheck;
pub mod typing;

pub use kernel::{BaseTypeId, Binder, FoldInst, MetaAssign, MetaSubst, Symbol, Term, TypeSeq};
pub use signature::Signature;
