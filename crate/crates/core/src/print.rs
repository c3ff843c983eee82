//! Term printer.
//!
//! Prints kernel terms in the surface syntax, such that printing a
//! ground (metavariable-free) term and re-parsing it yields an
//! alpha-equivalent term:
//!
//! - binders are always type-annotated (`cy(x^CNat. S(x))`);
//! - binary constructors whose names are operator tokens print infix;
//!   `::` binds loosest, all operators are right-associative, and
//!   different operators never mix without parentheses;
//! - folds print in the general form
//!   `fold{Src -> Tgt}(s1; ...; sm; y⃗. body; p1, ..., pk)` — sections are
//!   `;`-separated, the last section is the (possibly empty) parameter
//!   list;
//! - compositions print as `(y⃗. body) @ arg` with an atomic argument;
//! - metavariables print as `name[args]` (bare `name` when nullary);
//!   they appear only in rule displays, which are not re-parsed.

use crate::kernel::{Binder, Symbol, Term};
use std::fmt;
use std::fmt::Write as _;

/// Operator tokens that print infix when used as binary constructors.
const OP_TOKENS: &[&str] = &["::", "+", "|", "&", "\\/", "/\\", "*"];

/// Precedence levels: cons < other operators < atoms.
const PREC_CONS: u8 = 10;
const PREC_OP: u8 = 20;
const PREC_ATOM: u8 = 100;

pub fn is_op_name(name: &str) -> bool {
    OP_TOKENS.contains(&name)
}

/// Render a term to a string in surface syntax.
pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t, 0).expect("string formatting cannot fail");
    s
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&term_to_string(self))
    }
}

fn write_term(f: &mut String, t: &Term, min_prec: u8) -> fmt::Result {
    use fmt::Write;
    match t {
        Term::Var(x) => f.write_str(x),
        Term::Lit { value, .. } => {
            f.write_char('"')?;
            for c in value.chars() {
                match c {
                    '"' => f.write_str("\\\"")?,
                    '\\' => f.write_str("\\\\")?,
                    '\n' => f.write_str("\\n")?,
                    '\t' => f.write_str("\\t")?,
                    _ => f.write_char(c)?,
                }
            }
            f.write_char('"')
        }
        Term::Abs { binders, body } => {
            // Bare abstractions only appear in debug output of sections.
            write_abs_section(f, binders, body)
        }
        Term::Meta { name, args } => {
            f.write_str(name)?;
            if !args.is_empty() {
                f.write_char('[')?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_term(f, a, 0)?;
                }
                f.write_char(']')?;
            }
            Ok(())
        }
        Term::App { sym, args } => match sym {
            Symbol::Ctor { name, .. } if args.len() == 2 && is_op_name(name) => {
                let prec = if name == "::" { PREC_CONS } else { PREC_OP };
                let paren = prec < min_prec;
                if paren {
                    f.write_char('(')?;
                }
                // Collect the right-nested chain of the same operator so
                // `1 :: 2 :: x` prints without parentheses.
                let mut elems: Vec<&Term> = vec![&args[0]];
                let mut rest = &args[1];
                while let Term::App { sym: Symbol::Ctor { name: n2, .. }, args: a2 } = rest {
                    if n2 == name && a2.len() == 2 && is_op_name(n2) {
                        elems.push(&a2[0]);
                        rest = &a2[1];
                    } else {
                        break;
                    }
                }
                elems.push(rest);
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        write!(f, " {} ", name)?;
                    }
                    write_term(f, e, prec + 1)?;
                }
                if paren {
                    f.write_char(')')?;
                }
                Ok(())
            }
            Symbol::Ctor { name, .. } => {
                f.write_str(name)?;
                if !args.is_empty() {
                    f.write_char('(')?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write_term(f, a, 0)?;
                    }
                    f.write_char(')')?;
                }
                Ok(())
            }
            Symbol::Empty => f.write_str("<>"),
            Symbol::Tuple => {
                f.write_char('<')?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_term(f, a, 0)?;
                }
                f.write_char('>')
            }
            Symbol::Cy => {
                f.write_str("cy(")?;
                match args.first() {
                    Some(Term::Abs { binders, body }) => {
                        write_binders(f, binders)?;
                        f.write_str(". ")?;
                        write_term(f, body, 0)?;
                    }
                    _ => f.write_str("?")?,
                }
                f.write_char(')')
            }
            Symbol::At => {
                if let (Some(Term::Abs { binders, body }), Some(arg)) = (args.first(), args.get(1))
                {
                    f.write_char('(')?;
                    write_binders(f, binders)?;
                    f.write_str(". ")?;
                    write_term(f, body, 0)?;
                    f.write_str(") @ ")?;
                    write_term(f, arg, PREC_ATOM)?;
                    Ok(())
                } else {
                    f.write_str("?@?")
                }
            }
            Symbol::Fold(fi) => {
                write!(f, "fold{{{} -> {}}}(", fi.src, fi.tgt)?;
                let Some((_, structures, main, params)) = t.fold_parts() else {
                    return f.write_str("?)");
                };
                for s in structures {
                    if let Term::Abs { binders, body } = s {
                        write_abs_section(f, binders, body)?;
                    }
                    f.write_str("; ")?;
                }
                if let Term::Abs { binders, body } = main {
                    write_abs_section(f, binders, body)?;
                }
                f.write_char(';')?;
                for (i, p) in params.iter().enumerate() {
                    f.write_str(if i == 0 { " " } else { ", " })?;
                    write_term(f, p, 0)?;
                }
                f.write_char(')')
            }
        },
    }
}

fn write_binders(f: &mut String, binders: &[Binder]) -> fmt::Result {
    use fmt::Write;
    for (i, b) in binders.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}^{}", b.name, b.ty)?;
    }
    Ok(())
}

/// A fold/structure section: `binders. body`, or the bare body when the
/// binder list is empty.
fn write_abs_section(f: &mut String, binders: &[Binder], body: &Term) -> fmt::Result {
    if binders.is_empty() {
        write_term(f, body, 0)
    } else {
        write_binders(f, binders)?;
        f.write_str(". ")?;
        write_term(f, body, 0)
    }
}

/// Parenthesize a term unless it is atomic; used by contexts that embed
/// terms into fixed positions of messages.
pub fn atomic(t: &Term) -> String {
    let s = term_to_string(t);
    match t {
        Term::Var(_) | Term::Lit { .. } => s,
        Term::App { sym, args } => match sym {
            Symbol::Empty | Symbol::Tuple | Symbol::Cy => s,
            Symbol::Ctor { name, .. } if !(args.len() == 2 && is_op_name(name)) => s,
            _ => format!("({})", s),
        },
        _ => format!("({})", s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{FoldInst, TypeSeq};

    fn b(name: &str, ty: &str) -> Binder {
        Binder::new(name, ty)
    }

    #[test]
    fn prints_cycles_and_cons_chains() {
        let t = Term::cy(
            vec![b("x", "CList")],
            Term::ctor(
                "CList",
                "::",
                vec![
                    Term::ctor("CNat", "S", vec![Term::ctor("CNat", "0", vec![])]),
                    Term::ctor("CList", "::", vec![Term::var("y"), Term::var("x")]),
                ],
            ),
        );
        assert_eq!(term_to_string(&t), "cy(x^CList. S(0) :: y :: x)");
    }

    #[test]
    fn parenthesizes_mixed_operators() {
        let plus = Term::ctor("CTree", "+", vec![Term::var("a"), Term::var("b")]);
        let t = Term::ctor("CList", "::", vec![Term::var("k"), plus.clone()]);
        // A + under :: needs no parens (it binds tighter)…
        assert_eq!(term_to_string(&t), "k :: a + b");
        // …but a :: under + does.
        let u = Term::ctor(
            "CTree",
            "+",
            vec![Term::ctor("CList", "::", vec![Term::var("k"), Term::var("l")]), Term::var("b")],
        );
        assert_eq!(term_to_string(&u), "(k :: l) + b");
        // Same-operator chains print flat.
        let chain = Term::ctor("CTree", "+", vec![Term::var("a"), plus]);
        assert_eq!(term_to_string(&chain), "a + a + b");
    }

    #[test]
    fn prints_fold_sections() {
        let fi = FoldInst::new("CList", TypeSeq::single("CNat".into()), TypeSeq::single("CNat".into()));
        let t = Term::fold(
            fi,
            vec![
                Term::abs(vec![], Term::ctor("CNat", "0", vec![])),
                Term::abs(
                    vec![b("k", "CNat"), b("x", "CNat")],
                    Term::ctor("CNat", "S", vec![Term::var("x")]),
                ),
            ],
            Term::abs(vec![b("y", "CList")], Term::var("y")),
            vec![Term::var("p")],
        );
        assert_eq!(
            term_to_string(&t),
            "fold{CList -> CNat}(0; k^CNat, x^CNat. S(x); y^CList. y; p)"
        );
    }

    #[test]
    fn prints_composition_and_tuples() {
        let t = Term::at(
            vec![b("v", "CList"), b("w", "CList")],
            Term::var("v"),
            Term::tuple(vec![Term::var("s"), Term::var("t")]),
        );
        assert_eq!(term_to_string(&t), "(v^CList, w^CList. v) @ <s, t>");
        let arg_needs_parens = Term::at(
            vec![b("v", "CNat")],
            Term::var("v"),
            Term::ctor("CNat", "S", vec![Term::var("z")]),
        );
        assert_eq!(term_to_string(&arg_needs_parens), "(v^CNat. v) @ S(z)");
    }

    #[test]
    fn prints_literals_escaped() {
        let t = Term::lit("say \"hi\"", "String");
        assert_eq!(term_to_string(&t), "\"say \\\"hi\\\"\"");
    }
}
