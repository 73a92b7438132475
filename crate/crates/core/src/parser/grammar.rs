use crate::lang::{ArithOp, Block, CmpOp, Expr, FunSig, Instr, Program, Sort, SymbolTable, Var};

use super::lexer::{tokenize, Tok};
use super::{ParseError, SourceSpan, NONDET_BASE};

pub(crate) struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    pub(crate) symbols: SymbolTable,
}

type Spanned = (Expr, SourceSpan);

impl Parser {
    pub(crate) fn new(src: &str, symbols: SymbolTable) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            symbols,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].1.end
        }
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<SourceSpan, ParseError> {
        if self.peek() == &tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::syntax(
            format!("expected {wanted}, found {}", self.peek().describe()),
            self.span(),
        )
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let sp = self.bump().1;
                Ok((name, sp))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.peek() == &Tok::Eof
    }

    pub(crate) fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn sort(&mut self) -> Result<Sort, ParseError> {
        match self.peek() {
            Tok::IntSort => {
                self.bump();
                Ok(Sort::Int)
            }
            Tok::BoolSort => {
                self.bump();
                Ok(Sort::Bool)
            }
            _ => Err(self.unexpected("`int` or `bool`")),
        }
    }

    pub(crate) fn program(mut self) -> Result<Program, ParseError> {
        let mut axioms = Vec::new();
        loop {
            match self.peek() {
                Tok::Var => {
                    self.bump();
                    let (name, sp) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let sort = self.sort()?;
                    self.expect(Tok::Semi)?;
                    if !self.symbols.declare_var(&name, sort) {
                        return Err(ParseError::syntax(format!("`{name}` declared twice"), sp));
                    }
                }
                Tok::Fun => {
                    self.bump();
                    let (name, sp) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let mut args = vec![self.sort()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.sort()?);
                    }
                    self.expect(Tok::Arrow)?;
                    let result = self.sort()?;
                    self.expect(Tok::Semi)?;
                    if !self.symbols.declare_fun(&name, FunSig { args, result }) {
                        return Err(ParseError::syntax(format!("`{name}` declared twice"), sp));
                    }
                }
                Tok::Axiom => {
                    self.bump();
                    axioms.push(self.formula()?);
                    self.expect(Tok::Semi)?;
                }
                _ => break,
            }
        }
        let mut body = Vec::new();
        while !self.at_eof() {
            self.stmt(&mut body)?;
        }
        Ok(Program {
            body,
            symbols: self.symbols,
            axioms,
        })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.at_eof() {
                return Err(self.unexpected("`}`"));
            }
            self.stmt(&mut out)?;
        }
        Ok(out)
    }

    fn declared_var(&self, name: &str, sp: SourceSpan) -> Result<Var, ParseError> {
        self.symbols
            .var(name)
            .ok_or_else(|| ParseError::undeclared(name, sp))
    }

    /// Parses one statement, appending it (and any desugaring prelude) to `out`.
    fn stmt(&mut self, out: &mut Block) -> Result<(), ParseError> {
        match self.peek().clone() {
            Tok::Assume => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::Semi)?;
                out.push(Instr::Assume(f));
            }
            Tok::Assert => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::Semi)?;
                out.push(Instr::Assert(f));
            }
            Tok::Havoc => {
                self.bump();
                let (name, sp) = self.ident()?;
                let v = self.declared_var(&name, sp)?;
                self.expect(Tok::Semi)?;
                out.push(Instr::Havoc(v));
            }
            Tok::Ident(name) => {
                let sp = self.bump().1;
                let v = self.declared_var(&name, sp)?;
                self.expect(Tok::Assign)?;
                let (e, esp) = self.expr()?;
                if e.sort() != v.sort {
                    return Err(ParseError::sort(
                        format!("cannot assign a {} term to {} variable `{name}`", e.sort(), v.sort),
                        esp,
                    ));
                }
                self.expect(Tok::Semi)?;
                out.push(Instr::Assign(v, e));
            }
            Tok::If => {
                self.bump();
                let cond = self.cond(out)?;
                let then_branch = self.block()?;
                let else_branch = if self.eat(&Tok::Else) {
                    self.block()?
                } else {
                    Vec::new()
                };
                out.push(Instr::If {
                    cond,
                    then_branch,
                    else_branch,
                });
            }
            Tok::While => {
                self.bump();
                let nondet = self.next_is_star();
                let cond = self.cond(out)?;
                let invariant = if self.eat(&Tok::Invariant) {
                    self.formula()?
                } else {
                    Expr::tt()
                };
                let mut body = self.block()?;
                if nondet {
                    if let Expr::Var(v) = &cond {
                        body.push(Instr::Havoc(v.clone()));
                    }
                }
                out.push(Instr::While {
                    cond,
                    body,
                    invariant,
                });
            }
            _ => return Err(self.unexpected("a statement")),
        }
        Ok(())
    }

    fn next_is_star(&self) -> bool {
        self.peek() == &Tok::LParen
            && matches!(self.toks.get(self.pos + 1), Some((Tok::Star, _)))
    }

    /// `( formula )` or `( * )`; the latter emits a havoc of a fresh boolean into `out`.
    fn cond(&mut self, out: &mut Block) -> Result<Expr, ParseError> {
        if self.next_is_star() {
            self.bump();
            self.bump();
            self.expect(Tok::RParen)?;
            let v = self.symbols.fresh_var(NONDET_BASE, Sort::Bool);
            out.push(Instr::Havoc(v.clone()));
            return Ok(Expr::Var(v));
        }
        self.expect(Tok::LParen)?;
        let f = self.formula()?;
        self.expect(Tok::RParen)?;
        Ok(f)
    }

    pub(crate) fn formula(&mut self) -> Result<Expr, ParseError> {
        let (e, sp) = self.expr()?;
        expect_sort(&e, Sort::Bool, sp)?;
        Ok(e)
    }

    pub(crate) fn expr(&mut self) -> Result<Spanned, ParseError> {
        self.implication()
    }

    fn join(&self, a: SourceSpan, _b: SourceSpan) -> SourceSpan {
        SourceSpan {
            start: a.start,
            end: self.prev_end().max(a.end),
            line: a.line,
            col: a.col,
        }
    }

    fn implication(&mut self) -> Result<Spanned, ParseError> {
        let (lhs, lsp) = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let (rhs, rsp) = self.implication()?;
            expect_sort(&lhs, Sort::Bool, lsp)?;
            expect_sort(&rhs, Sort::Bool, rsp)?;
            let sp = self.join(lsp, rsp);
            return Ok((Expr::Implies(Box::new(lhs), Box::new(rhs)), sp));
        }
        Ok((lhs, lsp))
    }

    fn nary(
        &mut self,
        op: Tok,
        next: fn(&mut Self) -> Result<Spanned, ParseError>,
        build: fn(Vec<Expr>) -> Expr,
    ) -> Result<Spanned, ParseError> {
        let (first, fsp) = next(self)?;
        if self.peek() != &op {
            return Ok((first, fsp));
        }
        expect_sort(&first, Sort::Bool, fsp)?;
        let mut items = vec![first];
        let mut last = fsp;
        while self.eat(&op) {
            let (e, sp) = next(self)?;
            expect_sort(&e, Sort::Bool, sp)?;
            items.push(e);
            last = sp;
        }
        Ok((build(items), self.join(fsp, last)))
    }

    fn disjunction(&mut self) -> Result<Spanned, ParseError> {
        self.nary(Tok::Or, Self::conjunction, Expr::Or)
    }

    fn conjunction(&mut self) -> Result<Spanned, ParseError> {
        self.nary(Tok::And, Self::negation, Expr::And)
    }

    fn negation(&mut self) -> Result<Spanned, ParseError> {
        if self.peek() == &Tok::Not {
            let sp = self.bump().1;
            let (e, esp) = self.negation()?;
            expect_sort(&e, Sort::Bool, esp)?;
            return Ok((Expr::Not(Box::new(e)), self.join(sp, esp)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Spanned, ParseError> {
        let (lhs, lsp) = self.additive()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok((lhs, lsp)),
        };
        self.bump();
        let (rhs, rsp) = self.additive()?;
        let sp = self.join(lsp, rsp);
        if op.is_equality() {
            if lhs.sort() != rhs.sort() {
                return Err(ParseError::sort(
                    format!(
                        "`{}` compares a {} term with a {} term",
                        op.symbol(),
                        lhs.sort(),
                        rhs.sort()
                    ),
                    sp,
                ));
            }
        } else {
            expect_sort(&lhs, Sort::Int, lsp)?;
            expect_sort(&rhs, Sort::Int, rsp)?;
        }
        if matches!(
            self.peek(),
            Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge
        ) {
            return Err(ParseError::syntax(
                "comparisons do not chain; add parentheses",
                self.span(),
            ));
        }
        Ok((Expr::cmp(op, lhs, rhs), sp))
    }

    fn additive(&mut self) -> Result<Spanned, ParseError> {
        let (mut acc, first) = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok((acc, first)),
            };
            self.bump();
            let (rhs, rsp) = self.multiplicative()?;
            expect_sort(&acc, Sort::Int, first)?;
            expect_sort(&rhs, Sort::Int, rsp)?;
            acc = Expr::arith(op, acc, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Spanned, ParseError> {
        let (mut acc, first) = self.unary()?;
        while self.eat(&Tok::Star) {
            let (rhs, rsp) = self.unary()?;
            expect_sort(&acc, Sort::Int, first)?;
            expect_sort(&rhs, Sort::Int, rsp)?;
            acc = Expr::mul(acc, rhs);
        }
        Ok((acc, first))
    }

    fn unary(&mut self) -> Result<Spanned, ParseError> {
        if self.peek() == &Tok::Minus {
            let sp = self.bump().1;
            if let Tok::Int(n) = *self.peek() {
                let lsp = self.bump().1;
                let v = i64::try_from(-(n as i128))
                    .map_err(|_| ParseError::syntax("integer literal out of range", lsp))?;
                return Ok((Expr::int(v), self.join(sp, lsp)));
            }
            let (e, esp) = self.unary()?;
            expect_sort(&e, Sort::Int, esp)?;
            return Ok((Expr::sub(Expr::int(0), e), self.join(sp, esp)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Spanned, ParseError> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                let v = i64::try_from(n)
                    .map_err(|_| ParseError::syntax("integer literal out of range", sp))?;
                Ok((Expr::int(v), sp))
            }
            Tok::True => {
                self.bump();
                Ok((Expr::tt(), sp))
            }
            Tok::False => {
                self.bump();
                Ok((Expr::ff(), sp))
            }
            Tok::LParen => {
                self.bump();
                let (e, _) = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok((e, self.join(sp, sp)))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::LParen {
                    return self.application(name, sp);
                }
                if self.symbols.fun(&name).is_some() {
                    return Err(ParseError::sort(
                        format!("function `{name}` used without arguments"),
                        sp,
                    ));
                }
                let v = self.declared_var(&name, sp)?;
                Ok((Expr::Var(v), sp))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn application(&mut self, name: String, sp: SourceSpan) -> Result<Spanned, ParseError> {
        let sig = self
            .symbols
            .fun(&name)
            .cloned()
            .ok_or_else(|| ParseError::undeclared(&name, sp))?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let whole = self.join(sp, sp);
        if args.len() != sig.args.len() {
            return Err(ParseError::sort(
                format!(
                    "`{name}` expects {} argument(s), got {}",
                    sig.args.len(),
                    args.len()
                ),
                whole,
            ));
        }
        for ((a, asp), want) in args.iter().zip(&sig.args) {
            expect_sort(a, *want, *asp)?;
        }
        Ok((
            Expr::App(name, args.into_iter().map(|(a, _)| a).collect(), sig.result),
            whole,
        ))
    }
}

fn expect_sort(e: &Expr, want: Sort, sp: SourceSpan) -> Result<(), ParseError> {
    if e.sort() == want {
        Ok(())
    } else {
        Err(ParseError::sort(
            format!("expected a {want} term, found a {} term", e.sort()),
            sp,
        ))
    }
}
