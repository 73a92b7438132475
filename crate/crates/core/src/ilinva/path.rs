use crate::lang::{locations, set_invariant, Block, Expr, Formula, Instr, LangError, Location, Program, loop_at};
use crate::vc::{is_generated, sp_block, wp_block, FreshNames};

/// `block` with every `while` removed, recursively.
pub fn rm_loops(block: &[Instr]) -> Block {
    block
        .iter()
        .filter(|i| !i.is_loop())
        .map(|i| match i {
            Instr::If {
                cond,
                then_branch,
                else_branch,
            } => Instr::If {
                cond: cond.clone(),
                then_branch: rm_loops(then_branch),
                else_branch: rm_loops(else_branch),
            },
            other => other.clone(),
        })
        .collect()
}

/// The loop-free code executed between two locations, loops crossed on the way being
/// dropped. Entering a branch or a loop body contributes the matching `assume`.
pub fn path_extract(p: &Program, from: &Location, to: &Location) -> Result<Block, LangError> {
    if from > to {
        return Err(LangError::InvalidRange {
            from: from.clone(),
            to: to.clone(),
        });
    }
    let all = locations(p);
    for l in [from, to] {
        if !all.contains(l) {
            return Err(LangError::InvalidLocation(l.clone()));
        }
    }
    let mut out = Vec::new();
    walk(&p.body, Some(from.digits()), Some(to.digits()), &mut out);
    Ok(out)
}

fn guard(instr: &Instr, digit: usize) -> Option<Formula> {
    match (instr, digit) {
        (Instr::If { cond, .. }, 2) => Some(Expr::not(cond.clone())),
        (Instr::If { cond, .. } | Instr::While { cond, .. }, 1) => Some(cond.clone()),
        _ => None,
    }
}

/// `None` bounds stand for the start (`from`) or the end (`to`) of `block`.
fn walk(block: &[Instr], from: Option<&[usize]>, to: Option<&[usize]>, out: &mut Block) {
    let mut start = from.map_or(0, |f| f[0]);
    let stop = to.map_or(block.len(), |t| t[0]).min(block.len());
    if let Some(f) = from.filter(|f| f.len() > 2) {
        let inner = block[f[0]].branch(f[1]).expect("valid location");
        if let Some(t) = to.filter(|t| t.len() > 2 && t[..2] == f[..2]) {
            walk(inner, Some(&f[2..]), Some(&t[2..]), out);
            return;
        }
        walk(inner, Some(&f[2..]), None, out);
        start += 1;
    }
    if start < stop {
        out.extend(rm_loops(&block[start..stop]));
    }
    if let Some(t) = to.filter(|t| t.len() > 2) {
        let instr = &block[t[0]];
        if let Some(g) = guard(instr, t[1]) {
            out.push(Instr::Assume(g));
        }
        walk(instr.branch(t[1]).expect("valid location"), None, Some(&t[2..]), out);
    }
}

/// Back-propagates `f` from `l` to an earlier location `lp`.
pub fn backprop(f: &Formula, p: &Program, l: &Location, lp: &Location) -> Result<Formula, LangError> {
    let path = path_extract(p, lp, l)?;
    Ok(wp_block(f, &path, &mut FreshNames::for_program(p)))
}

/// Forward-propagates `f` from `l` to a later location `lp`.
pub fn forwardprop(f: &Formula, p: &Program, l: &Location, lp: &Location) -> Result<Formula, LangError> {
    let path = path_extract(p, l, lp)?;
    Ok(sp_block(f, &path, &mut FreshNames::for_program(p)))
}

/// The conjuncts of `f` that only mention program symbols.
pub fn program_conjuncts(f: &Formula, p: &Program) -> Formula {
    Expr::and(
        f.conjuncts()
            .into_iter()
            .filter(|c| !c.vars().iter().any(|v| is_generated(&p.symbols, &v.name))),
    )
}

/// Adds `xi` to the invariant of the loop at `l`.
pub fn strengthen(p: &Program, l: &Location, xi: Formula) -> Result<Program, LangError> {
    let (_, _, inv) = loop_at(p, l)?;
    let mut parts = inv.conjuncts();
    for c in xi.conjuncts() {
        if !parts.contains(&c) {
            parts.push(c);
        }
    }
    set_invariant(p, l, Expr::and(parts))
}
