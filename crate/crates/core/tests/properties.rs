//! Cross-module property tests: kernel substitution laws, printing
//! round-trips over the corpus, specification equations as oracles,
//! congruence of bisimilarity, and termination of normalization on
//! randomly generated terms.

use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use cyc_core::bisim::eq_mod_bisim;
use cyc_core::gen::Gen;
use cyc_core::kernel::{Binder, MetaAssign, MetaSubst, Term};
use cyc_core::rewrite::{normalize, DEFAULT_FUEL};
use cyc_core::rules::gen_all;
use cyc_core::signature::fixtures;
use cyc_core::surface::{load, Program};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus_files() -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "cyc").then(|| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read_to_string(&p).expect("readable corpus file"),
                )
            })
        })
        .collect();
    files.sort();
    assert!(!files.is_empty(), "corpus must not be empty");
    files
}

// ---------------------------------------------------------------------
// Kernel substitution laws (untyped term soup)
// ---------------------------------------------------------------------

/// Force structural width 1: tuples (and compositions returning them)
/// cannot stand for a variable or a one-slot metavariable argument, so
/// wrap anything wider or indeterminate in a constructor.
fn narrow(t: Term) -> Term {
    if t.width() == Some(1) {
        t
    } else {
        Term::ctor("CNat", "S", vec![t])
    }
}

/// Random untyped kernel terms. When `metas`, the terms may apply the
/// metavariables `m1` and `m2` (one argument each).
fn arb_term(metas: bool) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(Term::var),
        Just(Term::ctor("CNat", "0", vec![])),
        Just(Term::lit("lo", "String")),
    ];
    leaf.prop_recursive(4, 24, 3, move |inner| {
        let mut options = vec![
            inner.clone().prop_map(|t| Term::ctor("CNat", "S", vec![t])).boxed(),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Term::ctor("CList", "::", vec![a, b]))
                .boxed(),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Term::tuple(vec![a, b]))
                .boxed(),
            inner
                .clone()
                .prop_map(|t| Term::cy(vec![Binder::new("x", "CNat")], t))
                .boxed(),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Term::at(vec![Binder::new("y", "CNat")], a, b))
                .boxed(),
        ];
        if metas {
            options
                .push(inner.clone().prop_map(|t| Term::meta("m1", vec![narrow(t)])).boxed());
            options.push(inner.prop_map(|t| Term::meta("m2", vec![narrow(t)])).boxed());
        }
        proptest::strategy::Union::new(options)
    })
}

/// Closed assignment bodies for `m1`/`m2`, chosen from a small menu.
fn arb_assign(binder: &'static str) -> impl Strategy<Value = MetaAssign> {
    prop_oneof![
        Just(Term::var(binder)),
        Just(Term::ctor("CNat", "S", vec![Term::var(binder)])),
        Just(Term::cy(
            vec![Binder::new("c", "CList")],
            Term::ctor("CList", "::", vec![Term::var(binder), Term::var("c")]),
        )),
        Just(Term::ctor("CNat", "0", vec![])),
    ]
    .prop_map(move |body| MetaAssign::new(vec![Binder::new(binder, "CNat")], body))
}

proptest! {
    /// Substituting two disjoint metavariable assignments one after the
    /// other equals substituting their union at once.
    #[test]
    fn subst_meta_is_associative_on_disjoint_domains(
        t in arb_term(true),
        a1 in arb_assign("u"),
        a2 in arb_assign("w"),
    ) {
        let theta1: MetaSubst = [("m1".to_string(), a1.clone())].into_iter().collect();
        let theta2: MetaSubst = [("m2".to_string(), a2.clone())].into_iter().collect();
        let combined: MetaSubst =
            [("m1".to_string(), a1), ("m2".to_string(), a2)].into_iter().collect();
        let staged = t.subst_meta(&theta1).unwrap().subst_meta(&theta2).unwrap();
        let at_once = t.subst_meta(&combined).unwrap();
        prop_assert!(
            staged.alpha_eq(&at_once),
            "staged {} differs from combined {}",
            staged,
            at_once
        );
    }

    /// Alpha-equivalence is reflexive and symmetric, and substitution
    /// sends alpha-equal terms to alpha-equal terms.
    #[test]
    fn alpha_equivalence_and_substitution_respect_it(t in arb_term(false), s in arb_term(false)) {
        prop_assert!(t.alpha_eq(&t));
        prop_assert_eq!(t.alpha_eq(&s), s.alpha_eq(&t));

        let variant = rename_binders(&t, 0);
        prop_assert!(t.alpha_eq(&variant), "renamed variant differs: {} vs {}", t, variant);

        let s = narrow(s);
        let map: BTreeMap<String, Term> = [("x".to_string(), s.clone())].into_iter().collect();
        let a = t.subst_vars(&map).unwrap();
        let b = variant.subst_vars(&map).unwrap();
        prop_assert!(a.alpha_eq(&b), "substitution broke alpha: {} vs {}", a, b);
    }

    /// Free variables of a substitution result are bounded by the usual
    /// set equation.
    #[test]
    fn free_vars_of_substitution_are_bounded(t in arb_term(false), s in arb_term(false)) {
        let s = narrow(s);
        let map: BTreeMap<String, Term> = [("x".to_string(), s.clone())].into_iter().collect();
        let out = t.subst_vars(&map).unwrap();
        let mut allowed = t.free_vars();
        allowed.remove("x");
        allowed.extend(s.free_vars());
        for v in out.free_vars() {
            prop_assert!(allowed.contains(&v), "unexpected free variable `{}` in {}", v, out);
        }
    }
}

/// Rename every binder in `t` by appending a fresh numeric suffix,
/// producing an alpha-variant.
fn rename_binders(t: &Term, depth: usize) -> Term {
    match t {
        Term::Var(_) | Term::Lit { .. } => t.clone(),
        Term::Abs { binders, body } => {
            let mut renamed: Vec<Binder> = Vec::new();
            let mut map: BTreeMap<String, Term> = BTreeMap::new();
            for (i, b) in binders.iter().enumerate() {
                let fresh = format!("{}_r{}_{}", b.name, depth, i);
                map.insert(b.name.clone(), Term::var(fresh.clone()));
                renamed.push(Binder::new(fresh, b.ty.clone()));
            }
            let body = rename_binders(body, depth + 1).subst_vars(&map).unwrap();
            Term::Abs { binders: renamed, body: Box::new(body) }
        }
        Term::App { sym, args } => Term::App {
            sym: sym.clone(),
            args: args.iter().map(|a| rename_binders(a, depth + 1)).collect(),
        },
        Term::Meta { name, args } => Term::Meta {
            name: name.clone(),
            args: args.iter().map(|a| rename_binders(a, depth + 1)).collect(),
        },
    }
}

// ---------------------------------------------------------------------
// Printing round-trips over the corpus
// ---------------------------------------------------------------------

#[test]
fn corpus_files_print_to_a_parse_fixpoint() {
    for (name, src) in corpus_files() {
        let file = cyc_core::surface::parse(&src)
            .unwrap_or_else(|e| panic!("{} does not parse: {}", name, e));
        let printed = file.to_string();
        let reparsed = cyc_core::surface::parse(&printed)
            .unwrap_or_else(|e| panic!("printed {} does not parse: {}\n{}", name, e, printed));
        assert_eq!(printed, reparsed.to_string(), "print fixpoint fails for {}", name);

        // The printed program must also elaborate to the same directives.
        let p1 = load(&src).unwrap_or_else(|e| panic!("{} does not load: {}", name, e));
        let p2 = load(&printed)
            .unwrap_or_else(|e| panic!("printed {} does not load: {}", name, e));
        assert_eq!(p1.directives.len(), p2.directives.len(), "{}", name);
    }
}

#[test]
fn every_corpus_directive_term_reprints_and_reparses() {
    for (name, src) in corpus_files() {
        let prog = load(&src).unwrap();
        for d in &prog.directives {
            let terms: Vec<&Term> = match d {
                cyc_core::surface::Directive::Eval { term, .. } => vec![term],
                cyc_core::surface::Directive::Prove { lhs, rhs, .. }
                | cyc_core::surface::Directive::Bisim { lhs, rhs, .. } => vec![lhs, rhs],
                cyc_core::surface::Directive::GsCheck { .. } => vec![],
            };
            for t in terms {
                let printed = t.to_string();
                let back = cyc_core::surface::parse_term(&prog, &printed).unwrap_or_else(|e| {
                    panic!("{}: printed term does not re-elaborate: {}\n{}", name, e, printed)
                });
                assert!(
                    back.alpha_eq(t),
                    "{}: reparse changed the term: {} vs {}",
                    name,
                    back,
                    t
                );
            }
        }
    }
}

// ---------------------------------------------------------------------
// Specification equations as oracles
// ---------------------------------------------------------------------

/// Every `spec` equation in the corpus holds after normalization, for
/// random closed value instantiations of its pattern variables: the
/// equation-style and fold definitions really satisfy their
/// specifications.
#[test]
fn corpus_spec_equations_hold_on_random_values() {
    let mut cases = 0usize;
    for (name, src) in corpus_files() {
        let prog: Program = load(&src).unwrap();
        if prog.specs.is_empty() {
            continue;
        }
        let rules = gen_all(&prog.sig);
        let mut g = Gen::new(&prog.sig, 0xC0FFEE);
        for eq in &prog.specs {
            let runs = if eq.vars.is_empty() { 1 } else { 80 };
            for _ in 0..runs {
                let mut map: BTreeMap<String, Term> = BTreeMap::new();
                for (v, ty) in &eq.vars {
                    map.insert(v.clone(), g.value(ty));
                }
                let lhs = eq.lhs.subst_vars(&map).unwrap();
                let rhs = eq.rhs.subst_vars(&map).unwrap();
                let (ln, _) = normalize(&prog.sig, &rules, &lhs, DEFAULT_FUEL)
                    .unwrap_or_else(|e| panic!("{} spec lhs diverged: {}", name, e));
                let (rn, _) = normalize(&prog.sig, &rules, &rhs, DEFAULT_FUEL)
                    .unwrap_or_else(|e| panic!("{} spec rhs diverged: {}", name, e));
                let res = eq_mod_bisim(&prog.sig, &ln, &rn).unwrap_or_else(|e| {
                    panic!("{} spec sides not chartable: {} / {} ({})", name, ln, rn, e)
                });
                assert!(
                    res.equal,
                    "{}: spec equation for `{}` (line {}) fails at {}:\n  lhs -> {}\n  rhs -> {}",
                    name, eq.fun, eq.line, lhs, ln, rn
                );
                cases += 1;
            }
        }
    }
    assert!(cases >= 300, "expected a substantive number of spec cases, got {}", cases);
}

// ---------------------------------------------------------------------
// Bisimilarity is a congruence under constructors
// ---------------------------------------------------------------------

/// Wrapping bisimilar values with the same constructor preserves the
/// verdict, and wrapping distinguishable values preserves
/// distinguishability under `S` (an injective context).
#[test]
fn bisimilarity_is_a_congruence_under_constructor_wrapping() {
    let sig = fixtures::nat_list();
    let rules = gen_all(&sig);
    let mut g = Gen::new(&sig, 77);
    for i in 0..300 {
        let a = g.value(&"CNat".into());
        let b = if i % 2 == 0 { g.perturb(&a) } else { g.value(&"CNat".into()) };
        let (na, _) = normalize(&sig, &rules, &a, DEFAULT_FUEL).unwrap();
        let (nb, _) = normalize(&sig, &rules, &b, DEFAULT_FUEL).unwrap();
        let plain = eq_mod_bisim(&sig, &na, &nb).unwrap().equal;

        let wrap = |t: &Term| Term::ctor("CNat", "S", vec![t.clone()]);
        let (wa, _) = normalize(&sig, &rules, &wrap(&na), DEFAULT_FUEL).unwrap();
        let (wb, _) = normalize(&sig, &rules, &wrap(&nb), DEFAULT_FUEL).unwrap();
        let wrapped = eq_mod_bisim(&sig, &wa, &wb).unwrap().equal;
        assert_eq!(
            plain, wrapped,
            "constructor wrapping changed the verdict for {} vs {}",
            na, nb
        );
    }
}

// ---------------------------------------------------------------------
// Termination of normalization
// ---------------------------------------------------------------------

/// Normalization terminates within the default fuel on the whole
/// corpus and on ten thousand random well-typed terms.
#[test]
fn normalization_terminates_on_corpus_and_random_terms() {
    // Corpus directives (all of them, both rule sets for eval terms).
    for (name, src) in corpus_files() {
        let prog = load(&src).unwrap();
        let rules = gen_all(&prog.sig);
        for d in &prog.directives {
            let terms: Vec<&Term> = match d {
                cyc_core::surface::Directive::Eval { term, .. } => vec![term],
                cyc_core::surface::Directive::Prove { lhs, rhs, .. }
                | cyc_core::surface::Directive::Bisim { lhs, rhs, .. } => vec![lhs, rhs],
                cyc_core::surface::Directive::GsCheck { .. } => vec![],
            };
            for t in terms {
                normalize(&prog.sig, &rules, t, DEFAULT_FUEL)
                    .unwrap_or_else(|e| panic!("{}: corpus term diverged: {}", name, e));
            }
        }
    }

    // Random well-typed terms over both fixture signatures.
    for (sig, seed) in [(fixtures::nat_list(), 1u64), (fixtures::tree_bool(), 2u64)] {
        let rules = gen_all(&sig);
        let mut g = Gen::new(&sig, seed);
        let tys: Vec<_> = sig.datatypes().map(|d| d.name.clone()).collect();
        for i in 0..5_000 {
            let ty = tys[i % tys.len()].clone();
            let t = g.term(&ty);
            normalize(&sig, &rules, &t, DEFAULT_FUEL)
                .unwrap_or_else(|e| panic!("random term diverged: {} ({})", t, e));
        }
    }
}
