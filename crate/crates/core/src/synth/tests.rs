use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::lang::parse_program;
use crate::rational::{int, ratio};
use crate::sgs::build_sgs;

const Q4: &str = "var x := 0;
x := 0;
while x >= 0 do
  @[x >= 0]
  if prob(0.6) then
    if angel then x := x + 1 else x := x - 1 fi
  else
    if demon then x := x + 1 else x := x - 1 fi
  fi
od
@[x < 0]";

const RW: &str = "var x := 5;
@[x >= -1]
while x >= 0 do
  @[x >= 0]
  if prob(0.3) then @[x >= 0] x := x + 1 else @[x >= 0] x := x - 1 fi
od
@[x < 0]";

fn setup(src: &str) -> (Sgs, Invariant) {
    let sgs = build_sgs(&parse_program(src).unwrap());
    let inv = Invariant::elaborate(&sgs).unwrap();
    (sgs, inv)
}

fn v(id: VarId) -> LinForm {
    LinForm::var(id)
}

fn blocks<'a>(sys: &'a ConstraintSystem, loc: usize, tag: &str) -> Vec<&'a BlockRecord> {
    sys.records.iter().filter(|r| r.loc == loc && r.tag == tag).collect()
}

fn rows(pairs: &[(i64, i64)]) -> Rows {
    pairs.iter().map(|&(a, b)| (vec![int(a)], int(b))).collect()
}

#[test]
fn running_example_blocks() {
    let (sgs, inv) = setup(Q4);
    let sys = build_constraints(&sgs, &inv).unwrap();
    let t = &sys.tmpl;
    let (a, b) = (|i: usize| v(t.a[i][0]), |i: usize| v(t.b[i]));
    let eps = v(t.eps);
    let nonneg_x = rows(&[(-1, 0)]);

    let d0 = blocks(&sys, 0, "decrease");
    assert_eq!(d0.len(), 1);
    assert!(d0[0].rows.is_empty());
    assert_eq!(d0[0].c, vec![-&a(0)]);
    assert_eq!(d0[0].d, &(&b(0) - &b(1)) - &eps);

    let d1 = blocks(&sys, 1, "decrease");
    assert_eq!(d1.len(), 2);
    assert_eq!(d1[0].rows, nonneg_x);
    assert_eq!(d1[0].c, vec![&a(2) - &a(1)]);
    assert_eq!(d1[1].rows, rows(&[(1, 0)]));
    assert_eq!(d1[1].c, vec![&a(9) - &a(1)]);
    assert_eq!(d1[1].d, &(&b(1) - &b(9)) - &eps);

    let d2 = blocks(&sys, 2, "decrease");
    assert_eq!(d2.len(), 1);
    assert_eq!(d2[0].rows, nonneg_x);
    let mut c = &(&a(3) * &ratio(3, 5)) + &(&a(4) * &ratio(2, 5));
    c = &c - &a(2);
    assert_eq!(d2[0].c, vec![c]);
    let d = &(&(&b(2) - &(&b(3) * &ratio(3, 5))) - &(&b(4) * &ratio(2, 5))) - &eps;
    assert_eq!(d2[0].d, d);

    for (i, sign) in [(5, -1), (6, 1), (7, -1), (8, 1)] {
        let r = blocks(&sys, i, "decrease");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].c, vec![&a(1) - &a(i)]);
        assert_eq!(r[0].d, &(&(&b(i) - &b(1)) - &eps) + &(&a(1) * &int(sign)));
    }

    let d4 = blocks(&sys, 4, "decrease");
    let targets: Vec<LinForm> = d4.iter().map(|r| r.c[0].clone()).collect();
    assert_eq!(targets, vec![&a(7) - &a(4), &a(8) - &a(4)]);

    assert_eq!(sys.angelic.len(), 1);
    let g = &sys.angelic[0];
    assert_eq!(g.loc, 3);
    assert_eq!(g.block.h, nonneg_x);
    assert_eq!(g.block.b, vec![vec![&a(3) - &a(5)], vec![&a(3) - &a(6)]]);
    assert_eq!(g.block.c, vec![&(&b(5) - &b(3)) + &eps, &(&b(6) - &b(3)) + &eps]);

    for i in 0..9 {
        let nn = blocks(&sys, i, "nonneg");
        assert_eq!(nn[0].rows, if i < 2 { Vec::new() } else { nonneg_x.clone() });
        assert_eq!(nn[0].c, vec![-&a(i)]);
        assert_eq!(nn[0].d, b(i));
    }
    let up = blocks(&sys, 9, "upper");
    assert_eq!(up[0].rows, rows(&[(1, 0)]));
    assert_eq!(up[0].c, vec![a(9)]);
    assert_eq!(up[0].d, &v(t.k) - &b(9));
    let lo = blocks(&sys, 9, "lower");
    assert_eq!(lo[0].d, &b(9) - &v(t.kprime));
}

#[test]
fn running_example_is_unknown_with_trivial_head_invariant() {
    // nonnegativity on all of R pins the loop head to a constant
    let (sgs, inv) = setup(Q4);
    let (_, out) = synthesize(&sgs, &inv, &SearchOptions::default()).unwrap();
    assert!(matches!(out, Outcome::Unknown { .. }), "{out:?}");
}

#[test]
fn running_example_with_head_invariant_has_a_witness() {
    let (sgs, inv) = setup(&Q4.replace("while", "@[x >= -1] while"));
    let (sys, out) = synthesize(&sgs, &inv, &SearchOptions::default()).unwrap();
    let Outcome::Found { witness, ts } = out else { panic!("{out:?}") };
    assert!(check_lrsm(&sgs, &inv, &witness).unwrap().ok());
    let (w, ub) = optimize_ub(&sys, &sgs, &inv, &ts).unwrap().unwrap();
    assert!(check_lrsm(&sgs, &inv, &w).unwrap().ok());
    assert!(ub >= int(1));
}

#[test]
fn stuck_loop_is_infeasible() {
    let (sgs, inv) = setup("var x := 0; @[x >= 0] while x >= 0 do @[x >= 0] x := x od @[x < 0]");
    let (_, out) = synthesize(&sgs, &inv, &SearchOptions::default()).unwrap();
    assert_eq!(out, Outcome::Infeasible(Refutation::Lp));
}

#[test]
fn random_walk_upper_bound() {
    let (sgs, inv) = setup(RW);
    let sys = build_constraints(&sgs, &inv).unwrap();
    let (w, ub) = optimize_ub(&sys, &sgs, &inv, &[]).unwrap().unwrap();
    assert_eq!(ub, int(46));
    assert_eq!(w.w0(&sgs), int(45));
    assert_eq!(w.upper_bound(&sgs), ub);
    assert!(check_lrsm(&sgs, &inv, &w).unwrap().ok());
    // a tighter bound is infeasible, the optimum itself is not
    assert!(ub_feasible(&sys, &[], &int(46)).unwrap());
    assert!(!ub_feasible(&sys, &[], &ratio(91, 2)).unwrap());
}

#[test]
fn checker_rejects_perturbed_witness() {
    let (sgs, inv) = setup(RW);
    let sys = build_constraints(&sgs, &inv).unwrap();
    let (w, _) = optimize_ub(&sys, &sgs, &inv, &[]).unwrap().unwrap();
    let mut bad = w.clone();
    bad.a[sgs.l_in][0] = &bad.a[sgs.l_in][0] / int(2);
    let rep = check_lrsm(&sgs, &inv, &bad).unwrap();
    assert!(!rep.ok());
    assert!(check_lrsm(&sgs, &inv, &w.scaled(&int(3))).unwrap().ok());
    let mut bad = w.clone();
    bad.b[sgs.l_out] += int(10);
    let rep = check_lrsm(&sgs, &inv, &bad).unwrap();
    assert!(rep.failures().any(|f| f.loc == sgs.l_out && f.condition.contains("<= K")));
    let mut bad = w.clone();
    bad.eps = int(0);
    assert!(!check_lrsm(&sgs, &inv, &bad).unwrap().ok());
}

#[test]
fn difference_bounds_for_the_walk() {
    let (sgs, inv) = setup(RW);
    let mut sys = build_constraints(&sgs, &inv).unwrap();
    build_bound_constraints(&mut sys, &sgs, &inv).unwrap();
    let (lo, hi) = sys.diff.unwrap();
    let obj = &v(hi) - &v(lo);
    let (w, vals) = minimize_ratios(&sys, &[], &[&sys.w0 + &LinForm::zero(), obj]).unwrap().unwrap();
    let (a, b) = w.diff_bounds.clone().unwrap();
    assert_eq!(&vals[0] + int(1), int(46));
    assert!(a < b);
    assert!(check_lrsm(&sgs, &inv, &w).unwrap().ok());
}

#[test]
fn bernstein_needs_increments() {
    let (sgs, inv) = setup("var x := 3; var y := 0; @[x >= 0] while x >= 1 do @[x >= 1] x := x - 1; @[x >= 0] y := x od");
    let mut sys = build_constraints(&sgs, &inv).unwrap();
    assert!(matches!(build_bernstein_constraints(&mut sys, &sgs), Err(Error::Unsupported(_))));
    let (sgs, inv) = setup(RW);
    let mut sys = build_constraints(&sgs, &inv).unwrap();
    build_bernstein_constraints(&mut sys, &sgs).unwrap();
    let (c, m) = sys.bern.unwrap();
    let (w, _) = minimize_ratios(&sys, &[], &[sys.w0.clone(), v(c), v(m)]).unwrap().unwrap();
    let (cv, mv) = w.bernstein.unwrap();
    assert!(cv > int(0) && mv > int(0));
}

#[test]
fn upper_bound_shrinks_with_invariant() {
    // a stronger invariant never makes the optimum worse
    let weak = "var x := 5; while x >= 0 do if prob(0.3) then x := x + 1 else x := x - 1 fi od";
    let (sgs, inv) = setup(weak);
    let sys = build_constraints(&sgs, &inv).unwrap();
    let weak_ub = optimize_ub(&sys, &sgs, &inv, &[]).unwrap();
    let (sgs2, inv2) = setup(RW);
    let sys2 = build_constraints(&sgs2, &inv2).unwrap();
    let (_, strong_ub) = optimize_ub(&sys2, &sgs2, &inv2, &[]).unwrap().unwrap();
    if let Some((_, u)) = weak_ub {
        assert!(strong_ub <= u);
    }
}
