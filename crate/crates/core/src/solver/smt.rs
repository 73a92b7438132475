//! SMT-LIB encoding of expressions and a minimal s-expression reader.

use std::fmt::Write;

use crate::lang::{ArithOp, CmpOp, Expr, Sort};

pub fn sort_name(s: Sort) -> &'static str {
    match s {
        Sort::Int => "Int",
        Sort::Bool => "Bool",
    }
}

/// Quoted symbol; every name goes through `|..|` so reserved characters are harmless.
pub fn symbol(name: &str) -> String {
    format!("|{name}|")
}

pub fn encode(e: &Expr) -> String {
    let mut out = String::new();
    write_smt(&mut out, e);
    out
}

fn write_smt(out: &mut String, e: &Expr) {
    match e {
        Expr::BoolLit(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::IntLit(n) if *n < 0 => {
            let _ = write!(out, "(- {})", n.unsigned_abs());
        }
        Expr::IntLit(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Var(v) => out.push_str(&symbol(&v.name)),
        Expr::App(f, args, _) => {
            out.push('(');
            out.push_str(&symbol(f));
            for a in args {
                out.push(' ');
                write_smt(out, a);
            }
            out.push(')');
        }
        Expr::Not(inner) => {
            out.push_str("(not ");
            write_smt(out, inner);
            out.push(')');
        }
        Expr::And(items) | Expr::Or(items) => {
            let (op, unit) = if matches!(e, Expr::And(_)) {
                ("and", "true")
            } else {
                ("or", "false")
            };
            match items.len() {
                0 => out.push_str(unit),
                1 => write_smt(out, &items[0]),
                _ => {
                    out.push('(');
                    out.push_str(op);
                    for item in items {
                        out.push(' ');
                        write_smt(out, item);
                    }
                    out.push(')');
                }
            }
        }
        Expr::Implies(a, b) => binary(out, "=>", a, b),
        Expr::Cmp(CmpOp::Ne, a, b) => binary(out, "distinct", a, b),
        Expr::Cmp(op, a, b) => binary(out, op.symbol(), a, b),
        Expr::Arith(op, a, b) => {
            let name = match op {
                ArithOp::Add => "+",
                ArithOp::Sub => "-",
                ArithOp::Mul => "*",
            };
            binary(out, name, a, b)
        }
    }
}

fn binary(out: &mut String, op: &str, a: &Expr, b: &Expr) {
    let _ = write!(out, "({op} ");
    write_smt(out, a);
    out.push(' ');
    write_smt(out, b);
    out.push(')');
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items) => Some(items),
            Sexp::Atom(_) => None,
        }
    }
}

pub fn parse_sexp(text: &str) -> Option<Sexp> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let s = parse_at(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    (pos == chars.len()).then_some(s)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_at(chars: &[char], pos: &mut usize) -> Option<Sexp> {
    skip_ws(chars, pos);
    match chars.get(*pos)? {
        '(' => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(chars, pos);
                if chars.get(*pos)? == &')' {
                    *pos += 1;
                    return Some(Sexp::List(items));
                }
                items.push(parse_at(chars, pos)?);
            }
        }
        ')' => None,
        '"' => {
            let start = *pos;
            *pos += 1;
            loop {
                match chars.get(*pos)? {
                    '"' if chars.get(*pos + 1) == Some(&'"') => *pos += 2,
                    '"' => {
                        *pos += 1;
                        break;
                    }
                    _ => *pos += 1,
                }
            }
            Some(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
        '|' => {
            let start = *pos;
            *pos += 1;
            while chars.get(*pos)? != &'|' {
                *pos += 1;
            }
            *pos += 1;
            Some(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
        _ => {
            let start = *pos;
            while *pos < chars.len() && !chars[*pos].is_whitespace() && !"()".contains(chars[*pos])
            {
                *pos += 1;
            }
            Some(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
    }
}

/// Splits a byte stream into complete top-level s-expressions.
#[derive(Debug, Default)]
pub struct Framer {
    buf: String,
    depth: usize,
    in_string: bool,
    in_quote: bool,
    started: bool,
}

impl Framer {
    /// Feeds text, returning every s-expression completed by it.
    pub fn feed(&mut self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            if self.in_string {
                self.buf.push(c);
                if c == '"' {
                    if chars.peek() == Some(&'"') {
                        self.buf.push(chars.next().unwrap());
                    } else {
                        self.in_string = false;
                        self.close_atom_if_top(&mut out);
                    }
                }
                continue;
            }
            if self.in_quote {
                self.buf.push(c);
                if c == '|' {
                    self.in_quote = false;
                    self.close_atom_if_top(&mut out);
                }
                continue;
            }
            match c {
                '(' => {
                    self.depth += 1;
                    self.started = true;
                    self.buf.push(c);
                }
                ')' => {
                    self.buf.push(c);
                    self.depth = self.depth.saturating_sub(1);
                    if self.depth == 0 {
                        self.flush(&mut out);
                    }
                }
                '"' => {
                    self.in_string = true;
                    self.started = true;
                    self.buf.push(c);
                }
                '|' => {
                    self.in_quote = true;
                    self.started = true;
                    self.buf.push(c);
                }
                c if c.is_whitespace() => {
                    if self.depth == 0 {
                        self.flush(&mut out);
                    } else {
                        self.buf.push(c);
                    }
                }
                c => {
                    self.started = true;
                    self.buf.push(c);
                }
            }
        }
        out
    }

    fn close_atom_if_top(&mut self, out: &mut Vec<String>) {
        if self.depth == 0 {
            self.flush(out);
        }
    }

    fn flush(&mut self, out: &mut Vec<String>) {
        if self.started {
            out.push(std::mem::take(&mut self.buf).trim().to_string());
        }
        self.buf.clear();
        self.started = false;
    }
}
