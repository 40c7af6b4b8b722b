use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use super::{AffineExpr, Branch, Distribution, Pred, Program, Stmt, StmtKind};
use crate::rational::{fmt_short, Rational};

pub fn print_program(p: &Program) -> String {
    let names: Vec<String> = p.pvars.iter().map(|(n, _)| n.clone()).collect();
    let rnames: Vec<String> = p.rvars.iter().map(|(n, _)| n.clone()).collect();
    let mut out = String::new();
    for (n, v) in &p.pvars {
        out.push_str(&format!("var {n} := {};\n", fmt_short(v)));
    }
    for (n, d) in &p.rvars {
        let body = match d {
            Distribution::Uniform(lo, hi) => format!("uniform({}, {})", fmt_short(lo), fmt_short(hi)),
            Distribution::Discrete(vs) => {
                let items: Vec<String> = vs.iter().map(|(v, q)| format!("{}: {}", fmt_short(v), fmt_short(q))).collect();
                format!("discrete({})", items.join(", "))
            }
        };
        out.push_str(&format!("dist {n} ~ {body};\n"));
    }
    stmt(&mut out, &p.body, &names, &rnames, 0);
    out.push('\n');
    if let Some(a) = &p.final_annotation {
        out.push_str(&format!("@[{}]\n", print_pred(a, &names)));
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn stmt(out: &mut String, s: &Stmt, names: &[String], rnames: &[String], depth: usize) {
    if let Some(a) = &s.annotation {
        indent(out, depth);
        out.push_str(&format!("@[{}]\n", print_pred(a, names)));
    }
    match &s.kind {
        StmtKind::Skip => {
            indent(out, depth);
            out.push_str("skip");
        }
        StmtKind::Assign { var, rhs } => {
            indent(out, depth);
            let mut terms: Vec<(Rational, &str)> = Vec::new();
            for (c, n) in rhs.affine.coeffs.iter().zip(names) {
                terms.push((c.clone(), n));
            }
            for (c, n) in rhs.random.iter().zip(rnames) {
                terms.push((c.clone(), n));
            }
            out.push_str(&format!("{} := {}", names[*var], linear(&terms, &rhs.affine.constant)));
        }
        StmtKind::Seq(ss) => {
            for (i, t) in ss.iter().enumerate() {
                if i > 0 {
                    out.push_str(";\n");
                }
                stmt(out, t, names, rnames, depth);
            }
        }
        StmtKind::If { branch, then_branch, else_branch } => {
            indent(out, depth);
            let b = match branch {
                Branch::Angel => String::from("angel"),
                Branch::Demon => String::from("demon"),
                Branch::Prob(p) => format!("prob({})", fmt_short(p)),
                Branch::Guard(g) => print_pred(g, names),
            };
            out.push_str(&format!("if {b} then\n"));
            stmt(out, then_branch, names, rnames, depth + 1);
            out.push('\n');
            indent(out, depth);
            out.push_str("else\n");
            stmt(out, else_branch, names, rnames, depth + 1);
            out.push('\n');
            indent(out, depth);
            out.push_str("fi");
        }
        StmtKind::While { guard, body } => {
            indent(out, depth);
            out.push_str(&format!("while {} do\n", print_pred(guard, names)));
            stmt(out, body, names, rnames, depth + 1);
            out.push('\n');
            indent(out, depth);
            out.push_str("od");
        }
    }
}

fn linear(terms: &[(Rational, &str)], constant: &Rational) -> String {
    let mut s = String::new();
    for (c, n) in terms {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let body = if mag.is_one() { String::from(*n) } else { format!("{}*{n}", fmt_short(&mag)) };
        if s.is_empty() {
            if c.is_negative() {
                s.push('-');
            }
        } else {
            s.push_str(if c.is_negative() { " - " } else { " + " });
        }
        s.push_str(&body);
    }
    if s.is_empty() {
        return fmt_short(constant);
    }
    if !constant.is_zero() {
        s.push_str(if constant.is_negative() { " - " } else { " + " });
        s.push_str(&fmt_short(&constant.abs()));
    }
    s
}

fn literal(e: &AffineExpr, strict: bool, names: &[String]) -> String {
    let terms: Vec<(Rational, &str)> = e.coeffs.iter().cloned().zip(names.iter().map(String::as_str)).collect();
    let lhs = linear(&terms, &Rational::zero());
    let rhs = fmt_short(&-e.constant.clone());
    format!("{lhs} {} {rhs}", if strict { "<" } else { "<=" })
}

pub fn print_pred(p: &Pred, names: &[String]) -> String {
    match p {
        Pred::True => String::from("true"),
        Pred::False => String::from("false"),
        Pred::Lit(c) => literal(&c.expr, c.strict, names),
        Pred::Or(ps) => ps.iter().map(|q| print_pred(q, names)).collect::<Vec<_>>().join(" || "),
        Pred::And(ps) => ps
            .iter()
            .map(|q| match q {
                Pred::Or(_) => format!("({})", print_pred(q, names)),
                _ => print_pred(q, names),
            })
            .collect::<Vec<_>>()
            .join(" && "),
        Pred::Not(q) => format!("!({})", print_pred(q, names)),
    }
}
