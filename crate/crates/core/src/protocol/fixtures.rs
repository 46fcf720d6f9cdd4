//! Two classic protocols for `x >= 2^n`: a unary one with `2^n + 1` states
//! and a binary one with `n + 1` states.

use super::{Flavor, Opinion, Protocol};

/// Agents hold numbers up to `2^n`; meeting agents sum their values, with
/// overflow flooding everybody to the cap.
pub fn p_n(n: u32) -> Protocol {
    let cap = 1u64 << n;
    let mut p = Protocol::new(vec!["x".into()], Flavor::FullOutput);
    for a in 0..=cap {
        let s = p.add_state(a.to_string());
        p.set_output(s, Opinion::from_bool(a == cap));
    }
    for a in 0..=cap {
        for b in a..=cap {
            let (c, d) = if a + b < cap { (0, a + b) } else { (cap, cap) };
            p.add_transition(vec![a as u32, b as u32], vec![c as u32, d as u32], format!("sum({a},{b})"));
        }
    }
    p.inputs[0] = 1;
    p
}

pub fn pow_name(i: u32) -> String {
    format!("2^{i}")
}

/// Agents hold `0` or a power of two; equal powers merge and `2^n` floods.
pub fn pp_n(n: u32) -> Protocol {
    let mut p = Protocol::new(vec!["x".into()], Flavor::FullOutput);
    let zero = p.add_state("0");
    p.set_output(zero, Opinion::Zero);
    let pows: Vec<u32> = (0..=n).map(|i| p.add_state(pow_name(i))).collect();
    for (i, s) in pows.iter().enumerate() {
        p.set_output(*s, Opinion::from_bool(i as u32 == n));
    }
    for i in 0..n as usize {
        p.add_transition(vec![pows[i], pows[i]], vec![zero, pows[i + 1]], format!("up_{i}"));
    }
    let top = pows[n as usize];
    for a in std::iter::once(zero).chain(pows.iter().copied()) {
        p.add_transition(vec![a, top], vec![top, top], "flood");
    }
    p.inputs[0] = pows[0];
    p
}

/// `x > y` with one helper: an `x` and a `y` cancel into `y_`; the helper
/// sits in `y_` initially and reports whether any unmatched `x` is left.
pub fn helper_toy() -> Protocol {
    let mut p = Protocol::new(vec!["x".into(), "y".into()], Flavor::General);
    let (x, y, xs, ys) = (p.add_state("X"), p.add_state("Y"), p.add_state("x_"), p.add_state("y_"));
    p.set_input("x", x).unwrap();
    p.set_input("y", y).unwrap();
    p.add_leader(ys, 1);
    p.set_output(x, Opinion::One);
    p.set_output(xs, Opinion::One);
    p.set_output(y, Opinion::Zero);
    p.set_output(ys, Opinion::Zero);
    p.add_transition(vec![x, y], vec![ys, ys], "cancel");
    p.add_transition(vec![x, ys], vec![x, xs], "x_wins");
    p.add_transition(vec![y, xs], vec![y, ys], "y_wins");
    p.add_transition(vec![xs, ys], vec![ys, ys], "tie");
    p
}

/// `x > 0` with one leader: the leader starts at `f` and any `t` spreads.
pub fn leader_toy() -> Protocol {
    let mut p = Protocol::new(vec!["x".into(), "y".into()], Flavor::General);
    let (f, t) = (p.add_state("f"), p.add_state("t"));
    p.set_input("x", t).unwrap();
    p.set_input("y", f).unwrap();
    p.add_leader(f, 1);
    p.set_output(f, Opinion::Zero);
    p.set_output(t, Opinion::One);
    p.add_transition(vec![f, t], vec![t, t], "spread");
    p
}
