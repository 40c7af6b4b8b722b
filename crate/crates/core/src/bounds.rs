//! Concentration inequalities over a witness, the concentration bound `B` and tail thresholds.
//!
//! Exponents are computed exactly; only the final `exp` is taken in floating point.

use alloc::string::ToString;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::LinForm;
use crate::rational::{self, int, ratio, Rational};
use crate::sgs::{Invariant, Sgs};
use crate::synth::{
    build_bernstein_constraints, build_bound_constraints, build_constraints, max_tail_margin, minimize_ratios,
    solve_system, ConstraintSystem, LrsmWitness, Outcome, SearchOptions,
};

/// `ε(n−1) − W₀`, the distance travelled beyond the initial value after `n` steps.
fn lambda(n: u64, w0: &Rational, eps: &Rational) -> Result<Rational> {
    let l = eps * int(n as i64 - 1) - w0;
    if l.is_negative() {
        let threshold = w0 / eps + int(1);
        return Err(Error::BelowThreshold { n, threshold: rational::fmt_short(&threshold) });
    }
    Ok(l)
}

/// Exponent `−2λ²/((n−1)(b−a)²)`; `None` stands for `−∞`.
pub fn hoeffding_exponent(n: u64, w0: &Rational, eps: &Rational, a_lo: &Rational, b_hi: &Rational) -> Result<Option<Rational>> {
    if b_hi < a_lo {
        return Err(Error::Invalid("difference bounds must satisfy a <= b".to_string()));
    }
    let l = lambda(n, w0, eps)?;
    if l.is_zero() {
        return Ok(Some(Rational::zero()));
    }
    let w = b_hi - a_lo;
    if w.is_zero() {
        return Ok(None);
    }
    Ok(Some(-(int(2) * &l * &l) / (int(n as i64 - 1) * &w * &w)))
}

/// Exponent `−λ²/(2c²(n−1) + ⅔Mλ)`.
pub fn bernstein_exponent(n: u64, w0: &Rational, eps: &Rational, c: &Rational, m: &Rational) -> Result<Option<Rational>> {
    if c.is_negative() || m.is_negative() {
        return Err(Error::Invalid("variance constants must be nonnegative".to_string()));
    }
    let l = lambda(n, w0, eps)?;
    if l.is_zero() {
        return Ok(Some(Rational::zero()));
    }
    let den = int(2) * c * c * int(n as i64 - 1) + ratio(2, 3) * m * &l;
    if den.is_zero() {
        return Ok(None);
    }
    Ok(Some(-(&l * &l) / den))
}

/// Exponent `−λ²/(2(n−1)c²)` for steps bounded by `[−c, c]`.
pub fn azuma_exponent(n: u64, w0: &Rational, eps: &Rational, cbound: &Rational) -> Result<Option<Rational>> {
    hoeffding_exponent(n, w0, eps, &-cbound, cbound)
}

fn exp_of(e: Option<Rational>) -> f64 {
    match e {
        Some(e) => libm::exp(rational::to_f64(&e)).min(1.0),
        None => 0.0,
    }
}

/// Upper bound on `ℙ(T > n)` from steps in `[a_lo, b_hi]`.
pub fn hoeffding_tail(n: u64, w0: &Rational, eps: &Rational, a_lo: &Rational, b_hi: &Rational) -> Result<f64> {
    Ok(exp_of(hoeffding_exponent(n, w0, eps, a_lo, b_hi)?))
}

pub fn bernstein_tail(n: u64, w0: &Rational, eps: &Rational, c: &Rational, m: &Rational) -> Result<f64> {
    Ok(exp_of(bernstein_exponent(n, w0, eps, c, m)?))
}

pub fn azuma_tail(n: u64, w0: &Rational, eps: &Rational, cbound: &Rational) -> Result<f64> {
    Ok(exp_of(azuma_exponent(n, w0, eps, cbound)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailKind {
    Hoeffding,
    Bernstein,
}

impl TailKind {
    pub fn name(self) -> &'static str {
        match self {
            TailKind::Hoeffding => "hoeffding",
            TailKind::Bernstein => "bernstein",
        }
    }
}

/// `ℙ(T > n) <= c1·exp(−c2·n)` for every `n >= valid_from`, and the sharper formula for `n >= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationCertificate {
    pub kind: TailKind,
    pub witness: LrsmWitness,
    pub w0: Rational,
    /// `W₀/ε + 2`.
    pub b: Rational,
    /// `max(B, 2W₀/ε + 2)`, where the exponential form holds.
    pub valid_from: Rational,
    pub c1: f64,
    pub c2: Rational,
}

impl ConcentrationCertificate {
    /// The inequality itself at `n`.
    pub fn tail(&self, n: u64) -> Result<f64> {
        let w = &self.witness;
        match self.kind {
            TailKind::Hoeffding => {
                let (a, b) = w.diff_bounds.as_ref().unwrap();
                hoeffding_tail(n, &self.w0, &w.eps, a, b)
            }
            TailKind::Bernstein => {
                let (c, m) = w.bernstein.as_ref().unwrap();
                bernstein_tail(n, &self.w0, &w.eps, c, m)
            }
        }
    }

    /// `c1·exp(−c2·n)`.
    pub fn exponential(&self, n: u64) -> f64 {
        self.c1 * libm::exp(-rational::to_f64(&self.c2) * n as f64)
    }

    /// `(n, bound)` pairs from `B` up to `to` in `steps` increments.
    pub fn curve(&self, to: u64, steps: u64) -> Vec<(u64, f64)> {
        let start = ceil_u64(&self.b);
        let step = ((to.saturating_sub(start)) / steps.max(1)).max(1);
        let mut out = Vec::new();
        let mut n = start;
        while n <= to {
            if let Ok(v) = self.tail(n) {
                out.push((n, v));
            }
            n += step;
        }
        out
    }
}

pub fn ceil_u64(q: &Rational) -> u64 {
    let c = q.ceil().to_integer();
    u64::try_from(c).unwrap_or(if q.is_negative() { 0 } else { u64::MAX })
}

/// Witness search on an extended system, trying the angelic weights again since the extra rows can
/// rule out the ones found for the plain system.
fn weights(sys: &ConstraintSystem, opts: &SearchOptions) -> Result<Option<Vec<Rational>>> {
    Ok(match solve_system(sys, opts)? {
        Outcome::Found { ts, .. } => Some(ts),
        _ => None,
    })
}

fn certificate(kind: TailKind, w: LrsmWitness, w0_over_eps: Rational, c2: Rational, sgs: &Sgs) -> ConcentrationCertificate {
    let b = &w0_over_eps + int(2);
    let wide = int(2) * &w0_over_eps + int(2);
    let valid_from = if wide > b { wide } else { b.clone() };
    let c1 = libm::exp(rational::to_f64(&c2));
    ConcentrationCertificate { kind, w0: w.w0(sgs), witness: w, b, valid_from, c1, c2 }
}

/// Minimal `B = W₀/ε + 2` over witnesses with difference bounds, then the narrowest `(b−a)/ε` at that `B`.
pub fn concentration_b(sgs: &Sgs, inv: &Invariant, opts: &SearchOptions) -> Result<ConcentrationCertificate> {
    hoeffding_certificate(sgs, inv, opts, false)
}

/// Narrowest `(b−a)/ε` first, then the smallest `B`: the fastest exponential decay rather than the
/// earliest start.
pub fn concentration_narrow(sgs: &Sgs, inv: &Invariant, opts: &SearchOptions) -> Result<ConcentrationCertificate> {
    hoeffding_certificate(sgs, inv, opts, true)
}

fn hoeffding_certificate(sgs: &Sgs, inv: &Invariant, opts: &SearchOptions, width_first: bool) -> Result<ConcentrationCertificate> {
    let mut sys = build_constraints(sgs, inv)?;
    build_bound_constraints(&mut sys, sgs, inv)?;
    let Some(ts) = weights(&sys, opts)? else { return Err(Error::NoBoundedWitness) };
    let (lo, hi) = sys.diff.unwrap();
    let width = &LinForm::var(hi) - &LinForm::var(lo);
    let objectives = if width_first { [width, sys.w0.clone()] } else { [sys.w0.clone(), width] };
    let Some((w, mut vals)) = minimize_ratios(&sys, &ts, &objectives)? else {
        return Err(Error::NoBoundedWitness);
    };
    if width_first {
        vals.swap(0, 1);
    }
    // a zero width means a deterministic decrease; any positive width stays valid
    let width = if vals[1].is_zero() { Rational::one() } else { vals[1].clone() };
    let c2 = Rational::one() / (int(2) * &width * &width);
    Ok(certificate(TailKind::Hoeffding, w, vals[0].clone(), c2, sgs))
}

/// Bernstein variant for incremental programs: minimal `B`, then `c/ε`, then `M/ε`.
pub fn bernstein_certificate(sgs: &Sgs, inv: &Invariant, opts: &SearchOptions) -> Result<ConcentrationCertificate> {
    let mut sys = build_constraints(sgs, inv)?;
    build_bernstein_constraints(&mut sys, sgs)?;
    let Some(ts) = weights(&sys, opts)? else { return Err(Error::NoBoundedWitness) };
    let (c, m) = sys.bern.unwrap();
    let Some((w, vals)) = minimize_ratios(&sys, &ts, &[sys.w0.clone(), LinForm::var(c), LinForm::var(m)])? else {
        return Err(Error::NoBoundedWitness);
    };
    // for n−1 >= 2W₀/ε the exponent is at least ε²(n−1)/(4(2c²+⅔Mε)); here ε = 1 after scaling
    let den = int(24) * &vals[1] * &vals[1] + int(8) * &vals[2];
    let c2 = if den.is_zero() { ratio(1, 2) } else { int(3) / den };
    Ok(certificate(TailKind::Bernstein, w, vals[0].clone(), c2, sgs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdBound {
    /// Upper bound on `ℙ(T > x)`.
    pub bound: f64,
    /// Best `(ε(x−1) − W₀)/(b−a)`, absent when the rows are infeasible.
    pub margin: Option<Rational>,
    pub witness: Option<LrsmWitness>,
}

/// Upper bound `exp(−2M²/(x−1))` on `ℙ(T > x)` with the largest feasible margin `M`.
pub fn thr_upper(sgs: &Sgs, inv: &Invariant, x: u64, opts: &SearchOptions) -> Result<ThresholdBound> {
    if x < 3 {
        return Err(Error::Invalid("threshold needs x >= 3".to_string()));
    }
    let trivial = ThresholdBound { bound: 1.0, margin: None, witness: None };
    let mut sys = build_constraints(sgs, inv)?;
    build_bound_constraints(&mut sys, sgs, inv)?;
    let Some(ts) = weights(&sys, opts)? else { return Ok(trivial) };
    let Some((w, m)) = max_tail_margin(&sys, &ts, &int(x as i64))? else { return Ok(trivial) };
    if !m.is_positive() {
        return Ok(ThresholdBound { bound: 1.0, margin: Some(m), witness: Some(w) });
    }
    let e = -(int(2) * &m * &m) / int(x as i64 - 1);
    Ok(ThresholdBound { bound: exp_of(Some(e)), margin: Some(m), witness: Some(w) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::sgs::build_sgs;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
    }

    #[test]
    fn hoeffding_formula() {
        assert_eq!(hoeffding_tail(11, &int(10), &int(1), &int(-1), &int(1)).unwrap(), 1.0);
        let v = hoeffding_tail(101, &int(10), &int(1), &int(-1), &int(1)).unwrap();
        assert!(close(v, (-40.5f64).exp()), "{v}");
        assert!(matches!(hoeffding_tail(5, &int(10), &int(1), &int(-1), &int(1)), Err(Error::BelowThreshold { .. })));
    }

    #[test]
    fn bernstein_and_azuma_formulas() {
        let v = bernstein_tail(2, &int(0), &int(1), &int(1), &int(0)).unwrap();
        assert!(close(v, (-0.5f64).exp()));
        assert_eq!(bernstein_tail(11, &int(10), &int(1), &int(1), &int(1)).unwrap(), 1.0);
        // one step of size 2 against c = 1
        let v = azuma_tail(2, &int(-1), &int(1), &int(1)).unwrap();
        assert!(close(v, (-2f64).exp()));
    }

    #[test]
    fn hoeffding_decreases_past_the_vertex() {
        let (w0, eps, a, b) = (int(45), int(1), int(-8), int(7));
        let start = 2 * 45 + 1;
        let vals: Vec<f64> = (start..start + 200).map(|n| hoeffding_tail(n, &w0, &eps, &a, &b).unwrap()).collect();
        assert!(vals.windows(2).all(|p| p[1] < p[0]));
    }

    const RW: &str = "var x := 5; @[x >= -1] while x >= 0 do @[x >= 0]
        if prob(0.3) then @[x >= 0] x := x + 1 else @[x >= 0] x := x - 1 fi od @[x < 0]";

    #[test]
    fn walk_certificates() {
        let sgs = build_sgs(&parse_program(RW).unwrap());
        let inv = Invariant::elaborate(&sgs).unwrap();
        let opts = SearchOptions::default();
        let cert = concentration_b(&sgs, &inv, &opts).unwrap();
        assert_eq!(cert.b, int(47));
        assert_eq!(cert.valid_from, int(92));
        for n in [92u64, 150, 400] {
            assert!(cert.tail(n).unwrap() <= cert.exponential(n) * (1.0 + 1e-9));
        }
        let bern = bernstein_certificate(&sgs, &inv, &opts).unwrap();
        assert_eq!(bern.b, int(47));
        assert!(bern.tail(400).unwrap() < 1.0);
        let thr = thr_upper(&sgs, &inv, 200, &opts).unwrap();
        assert!(thr.bound < 1.0 && thr.margin.unwrap().is_positive());
        assert_eq!(thr_upper(&sgs, &inv, 3, &opts).unwrap().bound, 1.0);
    }

    #[test]
    fn unbounded_walk_has_no_certificate() {
        let src = "var x := 5; var y := 10; dist r ~ uniform(-2, 1);
            @[x >= -2 && y >= -3] while x >= 0 && y >= 0 do @[x >= 0 && y >= 0]
            if demon then @[x >= 0 && y >= 0] x := x + r else @[x >= 0 && y >= 0] y := y + r fi od
            @[x < 0 || y < 0]";
        let sgs = build_sgs(&parse_program(src).unwrap());
        let inv = Invariant::elaborate(&sgs).unwrap();
        assert_eq!(concentration_b(&sgs, &inv, &SearchOptions::default()).unwrap_err(), Error::NoBoundedWitness);
    }
}
