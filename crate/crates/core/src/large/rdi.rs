//! Threshold and remainder protocols with reversible dynamic initialization.
//!
//! Agents enter through port states `in:x`, are converted into the binary
//! representation of their coefficient, and values are normalized by
//! merging and splitting powers of two. One output helper moves between `f`
//! and `t`. The reversal transitions undo conversions while inputs are still
//! arriving.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::protocol::{Flavor, Opinion, Protocol, RdiAtom, RdiProtocol, StateIdx, Transition};

/// Binary decomposition of `d` as `(sign, exponent)` pairs, high bits first;
/// `[]` for zero. Fails if `|d| >= 2^(n+1)`.
pub fn bits(d: i64, n: u32) -> Result<Vec<u32>> {
    let m = d.unsigned_abs();
    if n < 63 && m >= 1u64 << (n + 1) {
        return Err(Error::Overflow { value: d, bits: n + 1 });
    }
    Ok((0..=n.min(63)).rev().filter(|i| m >> i & 1 == 1).collect())
}

pub fn port(x: &str) -> String {
    format!("in:{x}")
}

pub fn num(d: i64) -> String {
    match d {
        0 => "0".to_string(),
        d if d > 0 => format!("+2^{}", d.trailing_zeros()),
        d => format!("-2^{}", d.unsigned_abs().trailing_zeros()),
    }
}

pub fn unsigned_num(d: i64) -> String {
    match d {
        0 => "0".to_string(),
        d => format!("2^{}", d.trailing_zeros()),
    }
}

pub fn tagged(q: &str, x: &str) -> String {
    format!("{q}@{x}")
}

pub const F: &str = "f";
pub const T: &str = "t";

/// `rep(d)` as state names.
pub fn canonical_rep(d: i64, n: u32, signed: bool) -> Result<Vec<String>> {
    let name = |v: i64| if signed { num(v) } else { unsigned_num(v) };
    if d == 0 {
        return Ok(vec![name(0)]);
    }
    let sign = d.signum();
    Ok(bits(d, n)?.into_iter().map(|i| name(sign << i)).collect())
}

/// Smallest `n` with `2^n > norm`.
pub fn exponent_for(norm: u64) -> u32 {
    64 - norm.leading_zeros()
}

struct Builder {
    p: Protocol,
    dagger: Vec<Transition>,
    values: BTreeMap<StateIdx, i64>,
}

impl Builder {
    fn state(&mut self, name: &str, value: i64) -> StateIdx {
        let s = self.p.add_state(name);
        self.values.insert(s, value);
        s
    }

    fn ids(&self, names: &[String]) -> Vec<StateIdx> {
        names.iter().map(|s| self.p.state(s).expect("state declared")).collect()
    }

    fn permanent(&mut self, pre: &[String], post: &[String], label: String) {
        let (pre, post) = (self.ids(pre), self.ids(post));
        self.p.add_transition(pre, post, label);
    }

    fn reversal(&mut self, pre: &[String], post: &[String], label: String) {
        let t = Transition { pre: self.ids(pre), post: self.ids(post), label };
        if !t.is_identity() && !self.dagger.contains(&t) {
            self.dagger.push(t);
        }
    }

    fn finish(self, atom: RdiAtom, n: u32) -> RdiProtocol {
        let values = (0..self.p.num_states() as StateIdx).map(|s| self.values[&s]).collect();
        RdiProtocol { protocol: self.p, dagger: self.dagger, atom, values, n }
    }
}

fn coeff_vec(vars: &[String], coeffs: &BTreeMap<String, i64>) -> Result<Vec<i64>> {
    for x in coeffs.keys() {
        if !vars.contains(x) {
            return Err(Error::VariableMismatch(format!("coefficient for undeclared `{x}`")));
        }
    }
    Ok(vars.iter().map(|x| coeffs.get(x).copied().unwrap_or(0)).collect())
}

/// Common skeleton: ports, numerical states (plain and tagged), `f`, `t`,
/// leaders, add/swap/equal/false and the add reversal and reset.
fn skeleton(vars: &[String], a: &[i64], b: i64, n: u32, signed: bool) -> Result<(Builder, Vec<(String, i64)>)> {
    let mut bld = Builder { p: Protocol::new(vars.to_vec(), Flavor::Simple), dagger: Vec::new(), values: BTreeMap::new() };
    let mut numbers: Vec<(String, i64)> = vec![("0".to_string(), 0)];
    for i in 0..=n {
        if signed {
            numbers.push((num(1 << i), 1 << i));
            numbers.push((num(-(1 << i)), -(1 << i)));
        } else {
            numbers.push((unsigned_num(1 << i), 1 << i));
        }
    }
    for (x, ax) in vars.iter().zip(a) {
        let s = bld.state(&port(x), *ax);
        bld.p.set_input(x, s)?;
    }
    for (q, v) in &numbers {
        bld.state(q, *v);
    }
    for x in vars {
        for (q, v) in &numbers {
            bld.state(&tagged(q, x), *v);
        }
    }
    let f = bld.state(F, 0);
    let t = bld.state(T, 0);
    bld.p.set_output(f, Opinion::Zero);
    bld.p.set_output(t, Opinion::One);
    let zero = bld.p.state("0").unwrap();
    bld.p.add_leader(zero, 2 * n);
    bld.p.add_leader(f, 1);

    let zero_name = "0".to_string();
    for (x, ax) in vars.iter().zip(a) {
        let rep = canonical_rep(*ax, n, signed)?;
        let mut pre = vec![port(x)];
        pre.extend(std::iter::repeat_n(zero_name.clone(), rep.len()));
        let mut post = vec![tagged("0", x)];
        post.extend(rep.iter().cloned());
        bld.permanent(&pre, &post, format!("add_{x}"));
        for q in [F, T] {
            let mut rpre = vec![tagged("0", x), q.to_string()];
            rpre.extend(rep.iter().cloned());
            let mut rpost = vec![port(x), F.to_string()];
            rpost.extend(std::iter::repeat_n(zero_name.clone(), rep.len()));
            bld.reversal(&rpre, &rpost, format!("add^-1_{x},{q}"));
        }
    }
    for x in vars {
        for (p, _) in &numbers {
            for (q, _) in &numbers {
                if p != q {
                    bld.permanent(&[p.clone(), tagged(q, x)], &[tagged(p, x), q.clone()], format!("swap_{p},{q}^{x}"));
                }
            }
        }
    }
    let mut pre = canonical_rep(b, n, signed)?;
    let mut post = pre.clone();
    pre.push(F.into());
    post.push(T.into());
    bld.permanent(&pre, &post, "equal".into());
    bld.permanent(&[F.into(), T.into()], &[F.into(), F.into()], "false".into());
    bld.reversal(&[T.into()], &[F.into()], "reset".into());
    Ok((bld, numbers))
}

/// Protocol for `a·v >= b` with `b > 0`.
pub fn build_threshold_rdi(vars: &[String], coeffs: &BTreeMap<String, i64>, b: i64) -> Result<RdiProtocol> {
    if b <= 0 {
        return Err(Error::Precondition(format!("threshold bound must be positive, got {b}")));
    }
    let a = coeff_vec(vars, coeffs)?;
    let norm = a.iter().map(|c| c.unsigned_abs()).chain([b.unsigned_abs()]).max().unwrap();
    let n = exponent_for(norm);
    let (mut bld, _) = skeleton(vars, &a, b, n, true)?;
    for sign in [1i64, -1] {
        let c = if sign > 0 { '+' } else { '-' };
        for i in 0..n {
            bld.permanent(&[num(sign << i), num(sign << i)], &[num(sign << (i + 1)), "0".into()], format!("up_{i}^{c}"));
        }
        for i in 1..=n {
            bld.permanent(&[num(sign << i), "0".into()], &[num(sign << (i - 1)), num(sign << (i - 1))], format!("down_{i}^{c}"));
        }
    }
    for i in 0..=n {
        for q in [F, T] {
            bld.permanent(&[num(1 << i), num(-(1 << i)), q.into()], &["0".into(), "0".into(), F.into()], format!("cancel_{i},{q}"));
            bld.reversal(&["0".into(), "0".into(), q.into()], &[num(1 << i), num(-(1 << i)), F.into()], format!("cancel^-1_{i},{q}"));
        }
    }
    Ok(bld.finish(RdiAtom::Threshold { coeffs: a, bound: b }, n))
}

/// Protocol for `(a·v mod m) >= b` with `0 < b < m` and `0 <= a(x) < m`.
pub fn build_remainder_rdi(vars: &[String], coeffs: &BTreeMap<String, i64>, b: i64, m: i64) -> Result<RdiProtocol> {
    if m < 2 {
        return Err(Error::InvalidModulus(m));
    }
    if !(0 < b && b < m) {
        return Err(Error::Precondition(format!("remainder bound {b} outside 1..{m}")));
    }
    let a = coeff_vec(vars, coeffs)?;
    if a.iter().any(|c| *c < 0 || *c >= m) {
        return Err(Error::Precondition("remainder coefficients must be reduced".into()));
    }
    let norm = a.iter().map(|c| c.unsigned_abs()).chain([b as u64, m as u64]).max().unwrap();
    let n = exponent_for(norm);
    let (mut bld, _) = skeleton(vars, &a, b, n, false)?;
    for i in 0..n {
        bld.permanent(&[unsigned_num(1 << i), unsigned_num(1 << i)], &[unsigned_num(1 << (i + 1)), "0".into()], format!("up_{i}"));
    }
    for i in 1..=n {
        bld.permanent(&[unsigned_num(1 << i), "0".into()], &[unsigned_num(1 << (i - 1)), unsigned_num(1 << (i - 1))], format!("down_{i}"));
    }
    let rep_m = canonical_rep(m, n, false)?;
    let zeros: Vec<String> = vec!["0".into(); rep_m.len()];
    for q in [F, T] {
        let mut pre = rep_m.clone();
        pre.push(q.into());
        let mut post = zeros.clone();
        post.push(F.into());
        bld.permanent(&pre, &post, format!("modulo_{q}"));
        let mut rpre = zeros.clone();
        rpre.push(q.into());
        let mut rpost = rep_m.clone();
        rpost.push(F.into());
        bld.reversal(&rpre, &rpost, format!("modulo^-1_{q}"));
    }
    Ok(bld.finish(RdiAtom::Remainder { coeffs: a, bound: b, modulus: m }, n))
}
