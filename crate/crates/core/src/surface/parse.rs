//! Recursive-descent parser for the surface language.
//!
//! Reports the first syntax error with its 1-based line and column.
//! Operator precedence: `::` binds loosest; the remaining operators
//! share one tighter level and refuse to mix without parentheses; all
//! operators are right-associative.

use super::lex::{lex, Tok, Token};
use super::*;

/// Names that cannot be used for types, constructors, functions,
/// variables or binders.
pub(crate) const KEYWORDS: &[&str] = &[
    "ctype", "where", "with", "axioms", "AxCy", "AxBr", "spec", "fun", "fold", "cy", "eval",
    "prove", "bisim", "gscheck",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parse a complete source file.
pub fn parse(src: &str) -> Result<SourceFile, SurfaceError> {
    let toks = lex(src).map_err(|e| SurfaceError::at(e.line, e.col, e.msg))?;
    let mut p = Parser { toks, pos: 0 };
    let mut items = Vec::new();
    while !p.at_eof() {
        items.push(p.item()?);
    }
    Ok(SourceFile { items })
}

/// Parse a single term (used to re-read printed terms).
pub(crate) fn parse_term_str(src: &str) -> Result<TermAst, SurfaceError> {
    let toks = lex(src).map_err(|e| SurfaceError::at(e.line, e.col, e.msg))?;
    let mut p = Parser { toks, pos: 0 };
    let t = p.term()?;
    if !p.at_eof() {
        return Err(p.err(format!("trailing input after term: {}", p.peek().tok)));
    }
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    // ---- token plumbing ------------------------------------------------

    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().tok, Tok::Eof)
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> SurfaceError {
        let t = self.peek();
        SurfaceError::at(t.line, t.col, msg)
    }

    fn expect(&mut self, want: Tok) -> Result<(), SurfaceError> {
        if self.peek().tok == want {
            self.advance();
            Ok(())
        } else {
            Err(self.err(format!("expected {}, found {}", want, self.peek().tok)))
        }
    }

    /// True iff the next token is the identifier `kw`.
    fn at_word(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_word(&mut self, kw: &str) -> Result<(), SurfaceError> {
        if self.at_word(kw) {
            self.advance();
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`, found {}", kw, self.peek().tok)))
        }
    }

    /// A non-keyword identifier (variables, binders, functions, types).
    fn name(&mut self, what: &str) -> Result<String, SurfaceError> {
        match &self.peek().tok {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            Tok::Ident(s) => Err(self.err(format!("`{}` is a keyword; expected {}", s, what))),
            other => Err(self.err(format!("expected {}, found {}", what, other))),
        }
    }

    /// A constructor name: identifier, operator token, or numeral.
    fn ctor_name(&mut self) -> Result<String, SurfaceError> {
        match &self.peek().tok {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            Tok::Op(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            Tok::Num(n) => {
                let s = n.to_string();
                self.advance();
                Ok(s)
            }
            other => Err(self.err(format!("expected a constructor name, found {}", other))),
        }
    }

    // ---- items ---------------------------------------------------------

    fn item(&mut self) -> Result<Item, SurfaceError> {
        let line = self.peek().line;
        match &self.peek().tok {
            Tok::Ident(s) => match s.as_str() {
                "ctype" => self.ctype(line).map(Item::Ctype),
                "spec" => self.spec(line).map(Item::Spec),
                "fun" => self.fun(line).map(Item::Fun),
                "eval" => {
                    self.advance();
                    let t = self.term()?;
                    Ok(Item::Directive(DirectiveAst { kind: DirectiveKind::Eval(t), line }))
                }
                "prove" => {
                    self.advance();
                    let l = self.term()?;
                    self.expect(Tok::Eq)?;
                    let r = self.term()?;
                    Ok(Item::Directive(DirectiveAst { kind: DirectiveKind::Prove(l, r), line }))
                }
                "bisim" => {
                    self.advance();
                    let l = self.term()?;
                    self.expect(Tok::Tilde)?;
                    let r = self.term()?;
                    Ok(Item::Directive(DirectiveAst { kind: DirectiveKind::Bisim(l, r), line }))
                }
                "gscheck" => {
                    self.advance();
                    Ok(Item::Directive(DirectiveAst { kind: DirectiveKind::GsCheck, line }))
                }
                _ if *self.peek2() == Tok::Colon => self.sig_line(line).map(Item::Sig),
                _ => Err(self.err(format!(
                    "expected an item (ctype, a signature line, fun, spec, or a directive), \
                     found {}",
                    self.peek().tok
                ))),
            },
            _ => Err(self.err(format!(
                "expected an item (ctype, a signature line, fun, spec, or a directive), found {}",
                self.peek().tok
            ))),
        }
    }

    fn ctype(&mut self, line: usize) -> Result<CtypeDecl, SurfaceError> {
        self.expect_word("ctype")?;
        let name = self.name("a type name")?;
        self.expect_word("where")?;
        let mut ctors = Vec::new();
        while !self.at_word("with") {
            if self.at_eof() {
                return Err(self.err("unterminated ctype block: expected `with axioms …`"));
            }
            let cname = self.ctor_name()?;
            self.expect(Tok::Colon)?;
            let mut tys = vec![self.name("a type name")?];
            while self.peek().tok == Tok::Comma {
                self.advance();
                tys.push(self.name("a type name")?);
            }
            let args = if self.peek().tok == Tok::Arrow {
                self.advance();
                let result = self.name("a type name")?;
                if result != name {
                    return Err(self.err(format!(
                        "constructor `{}` must produce `{}`, not `{}`",
                        cname, name, result
                    )));
                }
                tys
            } else {
                // `c : T` declares a nullary constructor of T.
                if tys != [name.clone()] {
                    return Err(self.err(format!(
                        "constructor `{}` must produce `{}`",
                        cname, name
                    )));
                }
                Vec::new()
            };
            ctors.push(CtorSig { name: cname, args });
        }
        self.expect_word("with")?;
        self.expect_word("axioms")?;
        self.expect_word("AxCy")?;
        let branching = if self.peek().tok == Tok::Comma {
            self.advance();
            self.expect_word("AxBr")?;
            self.expect(Tok::LParen)?;
            let unit = self.ctor_name()?;
            self.expect(Tok::Comma)?;
            let branch = self.ctor_name()?;
            self.expect(Tok::RParen)?;
            Some((unit, branch))
        } else {
            None
        };
        Ok(CtypeDecl { name, ctors, branching, line })
    }

    fn sig_line(&mut self, line: usize) -> Result<SigDecl, SurfaceError> {
        let name = self.name("a function name")?;
        self.expect(Tok::Colon)?;
        let mut params = vec![self.name("a type name")?];
        while self.peek().tok == Tok::Comma {
            self.advance();
            params.push(self.name("a type name")?);
        }
        self.expect(Tok::Arrow)?;
        let result = self.type_seq()?;
        Ok(SigDecl { name, params, result, line })
    }

    /// `T` or `(T, …)` (possibly empty parentheses).
    fn type_seq(&mut self) -> Result<Vec<String>, SurfaceError> {
        if self.peek().tok == Tok::LParen {
            self.advance();
            let mut tys = Vec::new();
            if self.peek().tok != Tok::RParen {
                tys.push(self.name("a type name")?);
                while self.peek().tok == Tok::Comma {
                    self.advance();
                    tys.push(self.name("a type name")?);
                }
            }
            self.expect(Tok::RParen)?;
            Ok(tys)
        } else {
            Ok(vec![self.name("a type name")?])
        }
    }

    fn fun(&mut self, line: usize) -> Result<FunDef, SurfaceError> {
        self.expect_word("fun")?;
        let name = self.name("a function name")?;
        if self.at_word("where") {
            self.advance();
            let equations = self.equations(Some(&name))?;
            if equations.is_empty() {
                return Err(self.err(format!("`fun {} where` needs at least one equation", name)));
            }
            return Ok(FunDef { name, body: FunBody::PrimRec { equations }, line });
        }
        let params = if self.peek().tok == Tok::LParen {
            self.advance();
            let mut ps = vec![self.name("a parameter name")?];
            while self.peek().tok == Tok::Comma {
                self.advance();
                ps.push(self.name("a parameter name")?);
            }
            self.expect(Tok::RParen)?;
            ps
        } else {
            vec![self.name("a parameter name")?]
        };
        self.expect(Tok::Eq)?;
        self.expect_word("fold")?;
        self.expect(Tok::LParen)?;
        let mut structures = vec![self.structure()?];
        while self.peek().tok == Tok::Comma {
            self.advance();
            structures.push(self.structure()?);
        }
        self.expect(Tok::RParen)?;
        let subject = self.name("the fold subject (a parameter name)")?;
        Ok(FunDef { name, body: FunBody::PlainFold { params, structures, subject }, line })
    }

    /// One structure argument of a fold: a chain of `x.`/`x^T.` binders
    /// followed by a term.
    fn structure(&mut self) -> Result<StructureAst, SurfaceError> {
        let mut binders = Vec::new();
        loop {
            let save = self.pos;
            if let Tok::Ident(s) = &self.peek().tok {
                if !is_keyword(s) {
                    let name = s.clone();
                    self.advance();
                    let ty = if self.peek().tok == Tok::Caret {
                        self.advance();
                        match self.name("a type name") {
                            Ok(t) => Some(t),
                            Err(_) => {
                                self.pos = save;
                                break;
                            }
                        }
                    } else {
                        None
                    };
                    if self.peek().tok == Tok::Dot {
                        self.advance();
                        binders.push(BinderAst { name, ty });
                        continue;
                    }
                }
            }
            self.pos = save;
            break;
        }
        let body = self.term()?;
        Ok(StructureAst { binders, body })
    }

    /// Equations `f(args) = rhs` while the input keeps providing them.
    /// With `require`, every equation must define that function.
    fn equations(&mut self, require: Option<&str>) -> Result<Vec<EquationAst>, SurfaceError> {
        let mut eqs: Vec<EquationAst> = Vec::new();
        loop {
            let starts_equation = matches!(&self.peek().tok, Tok::Ident(s) if !is_keyword(s))
                && *self.peek2() == Tok::LParen;
            if !starts_equation {
                return Ok(eqs);
            }
            let line = self.peek().line;
            let fun = self.name("a function name")?;
            match (require, eqs.first()) {
                (Some(want), _) if fun != want => {
                    return Err(self.err(format!(
                        "equation defines `{}`, expected `{}`",
                        fun, want
                    )))
                }
                (None, Some(first)) if fun != first.fun => {
                    return Err(self.err(format!(
                        "spec block mixes `{}` and `{}`; use one block per function",
                        first.fun, fun
                    )))
                }
                _ => {}
            }
            self.expect(Tok::LParen)?;
            let mut args = vec![self.term()?];
            while self.peek().tok == Tok::Comma {
                self.advance();
                args.push(self.term()?);
            }
            self.expect(Tok::RParen)?;
            self.expect(Tok::Eq)?;
            let rhs = self.term()?;
            eqs.push(EquationAst { fun, args, rhs, line });
        }
    }

    fn spec(&mut self, line: usize) -> Result<SpecDef, SurfaceError> {
        self.expect_word("spec")?;
        let equations = self.equations(None)?;
        if equations.is_empty() {
            return Err(self.err("`spec` needs at least one equation"));
        }
        Ok(SpecDef { equations, line })
    }

    // ---- terms ---------------------------------------------------------

    fn term(&mut self) -> Result<TermAst, SurfaceError> {
        let lhs = self.infix()?;
        if let Tok::Op(op) = &self.peek().tok {
            if op == "::" {
                self.advance();
                let rhs = self.term()?;
                return Ok(TermAst::Infix("::".into(), Box::new(lhs), Box::new(rhs)));
            }
        }
        Ok(lhs)
    }

    fn infix(&mut self) -> Result<TermAst, SurfaceError> {
        let first = self.atom()?;
        let op = match &self.peek().tok {
            Tok::Op(op) if op != "::" => op.clone(),
            _ => return Ok(first),
        };
        let mut operands = vec![first];
        while let Tok::Op(next) = &self.peek().tok {
            if *next == op {
                self.advance();
                operands.push(self.atom()?);
            } else if next == "::" {
                break;
            } else {
                return Err(self.err(format!(
                    "operators `{}` and `{}` do not mix without parentheses",
                    op, next
                )));
            }
        }
        let mut acc = operands.pop().expect("at least two operands");
        while let Some(l) = operands.pop() {
            acc = TermAst::Infix(op.clone(), Box::new(l), Box::new(acc));
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<TermAst, SurfaceError> {
        match self.peek().tok.clone() {
            Tok::Num(n) => {
                self.advance();
                Ok(TermAst::Num(n))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(TermAst::Str(s))
            }
            Tok::Lt => {
                self.advance();
                let mut comps = Vec::new();
                if self.peek().tok != Tok::Gt {
                    comps.push(self.term()?);
                    while self.peek().tok == Tok::Comma {
                        self.advance();
                        comps.push(self.term()?);
                    }
                }
                self.expect(Tok::Gt)?;
                Ok(TermAst::Tuple(comps))
            }
            Tok::LParen => {
                self.advance();
                if let Some(binders) = self.try_binders_dot()? {
                    let body = self.term()?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::At)?;
                    let arg = self.atom()?;
                    return Ok(TermAst::Compose(binders, Box::new(body), Box::new(arg)));
                }
                let inner = self.term()?;
                self.expect(Tok::RParen)?;
                if self.peek().tok == Tok::At {
                    return Err(self.err(
                        "`@` needs an abstraction on the left: write `(x, y. body) @ arg`",
                    ));
                }
                Ok(inner)
            }
            Tok::Ident(s) if s == "cy" => {
                self.advance();
                self.expect(Tok::LParen)?;
                let binders = self
                    .try_binders_dot()?
                    .ok_or_else(|| self.err("cy needs binders: `cy(x. body)`"))?;
                if binders.is_empty() {
                    return Err(self.err("cy needs at least one binder"));
                }
                let body = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(TermAst::Cy(binders, Box::new(body)))
            }
            Tok::Ident(s) if s == "fold" => {
                self.advance();
                self.fold_general()
            }
            Tok::Ident(s) if is_keyword(&s) => {
                Err(self.err(format!("`{}` is a keyword and cannot appear in a term", s)))
            }
            Tok::Ident(s) => {
                self.advance();
                if self.peek().tok == Tok::LParen {
                    self.advance();
                    let mut args = vec![self.term()?];
                    while self.peek().tok == Tok::Comma {
                        self.advance();
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen)?;
                    Ok(TermAst::Call(s, args))
                } else {
                    Ok(TermAst::Var(s))
                }
            }
            Tok::Op(op) if *self.peek2() == Tok::LParen => {
                // Prefix use of an operator-named constructor: `+(a, b)`.
                self.advance();
                self.advance();
                let mut args = vec![self.term()?];
                while self.peek().tok == Tok::Comma {
                    self.advance();
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen)?;
                Ok(TermAst::Call(op, args))
            }
            other => Err(self.err(format!("expected a term, found {}", other))),
        }
    }

    /// Attempt to parse a comma-separated binder list terminated by `.`;
    /// on failure, restore the position and return `None`. An immediate
    /// `.` denotes an empty binder list.
    fn try_binders_dot(&mut self) -> Result<Option<Vec<BinderAst>>, SurfaceError> {
        let save = self.pos;
        if self.peek().tok == Tok::Dot {
            self.advance();
            return Ok(Some(Vec::new()));
        }
        let mut binders = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Ident(s) if !is_keyword(s) => {
                    let name = s.clone();
                    self.advance();
                    let ty = if self.peek().tok == Tok::Caret {
                        self.advance();
                        match &self.peek().tok {
                            Tok::Ident(t) if !is_keyword(t) => {
                                let t = t.clone();
                                self.advance();
                                Some(t)
                            }
                            _ => {
                                self.pos = save;
                                return Ok(None);
                            }
                        }
                    } else {
                        None
                    };
                    binders.push(BinderAst { name, ty });
                    match self.peek().tok {
                        Tok::Comma => {
                            self.advance();
                        }
                        Tok::Dot => {
                            self.advance();
                            return Ok(Some(binders));
                        }
                        _ => {
                            self.pos = save;
                            return Ok(None);
                        }
                    }
                }
                _ => {
                    self.pos = save;
                    return Ok(None);
                }
            }
        }
    }

    /// The explicit fold form, after the `fold` keyword:
    /// `{Src -> Tgt}(sec; …; sec)`.
    fn fold_general(&mut self) -> Result<TermAst, SurfaceError> {
        self.expect(Tok::LBrace)?;
        let src = self.name("a type name")?;
        self.expect(Tok::Arrow)?;
        let tgt = self.type_seq()?;
        self.expect(Tok::RBrace)?;
        self.expect(Tok::LParen)?;
        let mut sections = vec![self.section()?];
        while self.peek().tok == Tok::Semi {
            self.advance();
            sections.push(self.section()?);
        }
        self.expect(Tok::RParen)?;
        Ok(TermAst::FoldGeneral(FoldGeneralAst { src, tgt, sections }))
    }

    fn section(&mut self) -> Result<SectionAst, SurfaceError> {
        if matches!(self.peek().tok, Tok::Semi | Tok::RParen) {
            return Ok(SectionAst { binders: None, terms: Vec::new() });
        }
        if let Some(binders) = self.try_binders_dot()? {
            if !binders.is_empty() {
                let body = self.term()?;
                return Ok(SectionAst { binders: Some(binders), terms: vec![body] });
            }
            // `(. t)` — an explicit empty binder list.
            let body = self.term()?;
            return Ok(SectionAst { binders: Some(Vec::new()), terms: vec![body] });
        }
        let mut terms = vec![self.term()?];
        while self.peek().tok == Tok::Comma {
            self.advance();
            terms.push(self.term()?);
        }
        Ok(SectionAst { binders: None, terms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(src: &str) -> TermAst {
        parse_term_str(src).unwrap()
    }

    #[test]
    fn parses_operator_precedence_and_chains() {
        // `::` is loosest and right-associative.
        let t = term("1 + 2 :: x :: y");
        let TermAst::Infix(op, l, r) = &t else { panic!("expected ::") };
        assert_eq!(op, "::");
        assert!(matches!(**l, TermAst::Infix(ref o, _, _) if o == "+"));
        assert!(matches!(**r, TermAst::Infix(ref o, _, _) if o == "::"));
        // Mixed tight operators are rejected.
        let e = parse_term_str("a + b & c").unwrap_err();
        assert!(e.msg.contains("do not mix"), "{}", e.msg);
        // Parenthesized mixing is fine.
        term("(a + b) & c");
    }

    #[test]
    fn parses_cycles_compositions_tuples() {
        assert_eq!(
            term("cy(x^CList. 1 :: x)"),
            TermAst::Cy(
                vec![BinderAst { name: "x".into(), ty: Some("CList".into()) }],
                Box::new(TermAst::Infix(
                    "::".into(),
                    Box::new(TermAst::Num(1)),
                    Box::new(TermAst::Var("x".into()))
                ))
            )
        );
        let t = term("(a, b. a + b) @ <s, t>");
        assert!(matches!(t, TermAst::Compose(ref bs, _, _) if bs.len() == 2));
        assert_eq!(term("<>"), TermAst::Tuple(vec![]));
        // A parenthesized term is not a composition.
        assert_eq!(term("(x)"), TermAst::Var("x".into()));
        let e = parse_term_str("(x) @ y").unwrap_err();
        assert!(e.msg.contains("abstraction"), "{}", e.msg);
    }

    #[test]
    fn parses_the_explicit_fold_form() {
        let t = term("fold{CList -> CNat}(0; k^CNat, x^CNat. S(x); y^CList. y; p)");
        let TermAst::FoldGeneral(fg) = t else { panic!("expected fold") };
        assert_eq!(fg.src, "CList");
        assert_eq!(fg.tgt, vec!["CNat".to_string()]);
        assert_eq!(fg.sections.len(), 4);
        assert_eq!(fg.sections[0].binders, None);
        assert_eq!(fg.sections[1].binders.as_ref().map(|b| b.len()), Some(2));
        assert_eq!(fg.sections[3].terms.len(), 1);
        // Empty trailing parameter section, as the printer emits it.
        let t = term("fold{CList -> CNat}(0; k^CNat, x^CNat. S(x); y^CList. y;)");
        let TermAst::FoldGeneral(fg) = t else { panic!("expected fold") };
        assert_eq!(fg.sections.len(), 4);
        assert!(fg.sections[3].terms.is_empty());
    }

    #[test]
    fn parses_fun_forms() {
        let file = parse(concat!(
            "isEmpty : CTree -> Bool\n",
            "fun isEmpty(t) = fold (true, x.false, x.y.x & y) t\n",
        ))
        .unwrap();
        assert_eq!(file.items.len(), 2);
        let Item::Fun(f) = &file.items[1] else { panic!("expected fun") };
        let FunBody::PlainFold { params, structures, subject } = &f.body else {
            panic!("expected a fold definition")
        };
        assert_eq!(params, &["t".to_string()]);
        assert_eq!(subject, "t");
        assert_eq!(structures.len(), 3);
        assert_eq!(structures[0].binders.len(), 0);
        assert_eq!(structures[1].binders.len(), 1);
        assert_eq!(structures[2].binders.len(), 2);

        let file = parse(concat!(
            "ctail : CList -> CList\n",
            "fun ctail where\n",
            "  ctail([]) = []\n",
            "  ctail(k :: t) = t\n",
        ))
        .unwrap();
        let Item::Fun(f) = &file.items[1] else { panic!("expected fun") };
        let FunBody::PrimRec { equations } = &f.body else { panic!("expected equations") };
        assert_eq!(equations.len(), 2);
        assert_eq!(equations[0].args, vec![TermAst::Var("[]".into())]);
    }

    #[test]
    fn parses_ctype_blocks_and_rejects_wrong_results() {
        let file = parse(concat!(
            "ctype CString where\n",
            "  a : CString -> CString\n",
            "  b : CString -> CString\n",
            "  eps : CString\n",
            "  | : CString, CString -> CString\n",
            "with axioms AxCy, AxBr(eps, |)\n",
        ))
        .unwrap();
        let Item::Ctype(d) = &file.items[0] else { panic!("expected ctype") };
        assert_eq!(d.ctors.len(), 4);
        assert_eq!(d.branching, Some(("eps".into(), "|".into())));

        let e = parse("ctype A where mk : B\nwith axioms AxCy").unwrap_err();
        assert!(e.msg.contains("must produce"), "{}", e.msg);
    }

    #[test]
    fn error_positions_are_exact() {
        let e = parse("ctype T where\n  u : T\nwith axiomz AxCy").unwrap_err();
        assert_eq!((e.line, e.col), (3, 6));
        let e = parse_term_str("cy(x. )").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.msg.contains("expected a term"), "{}", e.msg);
    }

    #[test]
    fn spec_blocks_keep_one_function_per_block() {
        let e = parse("spec f(x) = x\n g(y) = y").unwrap_err();
        assert!(e.msg.contains("one block per function"), "{}", e.msg);
    }
}
