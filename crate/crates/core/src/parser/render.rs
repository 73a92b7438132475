use std::fmt::Write;

use crate::lang::{base_name, is_reserved, ArithOp, Expr, Instr, Program, Var};

use super::NONDET_BASE;

const P_IMPLIES: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_NOT: u8 = 4;
const P_CMP: u8 = 5;
const P_ADD: u8 = 6;
const P_MUL: u8 = 7;
const P_ATOM: u8 = 9;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Implies(..) => P_IMPLIES,
        Expr::Or(_) => P_OR,
        Expr::And(_) => P_AND,
        Expr::Not(_) => P_NOT,
        Expr::Cmp(..) => P_CMP,
        Expr::Arith(ArithOp::Mul, ..) => P_MUL,
        Expr::Arith(..) => P_ADD,
        _ => P_ATOM,
    }
}

/// Renders an expression in the concrete syntax, with just enough
/// parentheses for the parser to rebuild the same tree.
pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let p = prec(e);
    let paren = p < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::BoolLit(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::IntLit(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Var(v) => out.push_str(&v.name),
        Expr::App(f, args, _) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push(')');
        }
        Expr::Not(inner) => {
            out.push('!');
            // `!x < y` would parse, but reads badly
            let m = if matches!(**inner, Expr::Cmp(..)) {
                P_ATOM
            } else {
                P_NOT
            };
            write_expr(out, inner, m);
        }
        Expr::And(items) | Expr::Or(items) => {
            let sep = if matches!(e, Expr::And(_)) {
                " && "
            } else {
                " || "
            };
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                write_expr(out, item, p + 1);
            }
        }
        Expr::Implies(a, b) => {
            write_expr(out, a, P_IMPLIES + 1);
            out.push_str(" ==> ");
            write_expr(out, b, P_IMPLIES);
        }
        Expr::Cmp(op, a, b) => {
            write_expr(out, a, P_ADD);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, P_ADD);
        }
        Expr::Arith(op, a, b) => {
            write_expr(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, p + 1);
        }
    }
    if paren {
        out.push(')');
    }
}

/// Removes `true` members from (possibly nested) conjunctions.
pub(crate) fn strip_true(e: &Expr) -> Expr {
    match e {
        Expr::And(items) => {
            let mut kept: Vec<Expr> = items
                .iter()
                .map(strip_true)
                .filter(|x| !x.is_true())
                .collect();
            match kept.len() {
                0 => Expr::tt(),
                1 => kept.pop().unwrap(),
                _ => Expr::And(kept),
            }
        }
        other => other.clone(),
    }
}

/// Renders a whole program: declarations, axioms, then statements.
pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    for v in p.symbols.user_vars() {
        let _ = writeln!(out, "var {}: {};", v.name, v.sort);
    }
    for (name, sig) in p.symbols.funs() {
        let args: Vec<String> = sig.args.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "fun {name}: {} -> {};", args.join(", "), sig.result);
    }
    for ax in &p.axioms {
        let _ = writeln!(out, "axiom {};", render_expr(ax));
    }
    if !out.is_empty() && !p.body.is_empty() {
        out.push('\n');
    }
    write_block(&mut out, &p.body, 0);
    out
}

fn is_nondet(v: &Var) -> bool {
    is_reserved(&v.name) && base_name(&v.name) == NONDET_BASE
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_block(out: &mut String, block: &[Instr], depth: usize) {
    let mut i = 0;
    while i < block.len() {
        if let (Instr::Havoc(h), Some(next)) = (&block[i], block.get(i + 1)) {
            if is_nondet(h) && write_nondet(out, h, next, depth) {
                i += 2;
                continue;
            }
        }
        write_instr(out, &block[i], depth);
        i += 1;
    }
}

/// Folds `havoc b; while (b) { ..; havoc b; }` and `havoc b; if (b) ..` back into `*`.
fn write_nondet(out: &mut String, h: &Var, next: &Instr, depth: usize) -> bool {
    match next {
        Instr::If {
            cond: Expr::Var(c),
            then_branch,
            else_branch,
        } if c == h => {
            write_if(out, "*", then_branch, else_branch, depth);
            true
        }
        Instr::While {
            cond: Expr::Var(c),
            body,
            invariant,
        } if c == h && matches!(body.last(), Some(Instr::Havoc(l)) if l == h) => {
            write_while(out, "*", invariant, &body[..body.len() - 1], depth);
            true
        }
        _ => false,
    }
}

fn write_if(out: &mut String, cond: &str, then_b: &[Instr], else_b: &[Instr], depth: usize) {
    indent(out, depth);
    let _ = writeln!(out, "if ({cond}) {{");
    write_block(out, then_b, depth + 1);
    indent(out, depth);
    if else_b.is_empty() {
        out.push_str("}\n");
    } else {
        out.push_str("} else {\n");
        write_block(out, else_b, depth + 1);
        indent(out, depth);
        out.push_str("}\n");
    }
}

fn write_while(out: &mut String, cond: &str, inv: &Expr, body: &[Instr], depth: usize) {
    indent(out, depth);
    let inv = strip_true(inv);
    if inv.is_true() {
        let _ = writeln!(out, "while ({cond}) {{");
    } else {
        let _ = writeln!(out, "while ({cond}) invariant {} {{", render_expr(&inv));
    }
    write_block(out, body, depth + 1);
    indent(out, depth);
    out.push_str("}\n");
}

fn write_instr(out: &mut String, instr: &Instr, depth: usize) {
    match instr {
        Instr::Assign(v, e) => {
            indent(out, depth);
            let _ = writeln!(out, "{} := {};", v.name, render_expr(e));
        }
        Instr::Havoc(v) => {
            indent(out, depth);
            let _ = writeln!(out, "havoc {};", v.name);
        }
        Instr::Assume(f) => {
            indent(out, depth);
            let _ = writeln!(out, "assume {};", render_expr(f));
        }
        Instr::Assert(f) => {
            indent(out, depth);
            let _ = writeln!(out, "assert {};", render_expr(f));
        }
        Instr::If {
            cond,
            then_branch,
            else_branch,
        } => write_if(out, &render_expr(cond), then_branch, else_branch, depth),
        Instr::While {
            cond,
            body,
            invariant,
        } => write_while(out, &render_expr(cond), invariant, body, depth),
    }
}
