use std::collections::BTreeMap;

use proptest::prelude::*;

use presburger_pp::formula::{hi_var, lo_var, Formula, Valuation};
use presburger_pp::large::dispatch::sub_state;
use presburger_pp::large::{atom_rdi, build_remainder_rdi, build_threshold_rdi, compile_large, normalize};
use presburger_pp::protocol::fixtures::{p_n, pp_n};
use presburger_pp::protocol::json::{from_json, rdi_from_doc, rdi_to_doc, to_json};
use presburger_pp::protocol::{Opinion, Protocol};
use presburger_pp::small::{greater_sum, halting_boolean_combine, HaltState, Shape};
use presburger_pp::system::Population;
use presburger_pp::verify::{check_computes, explore, inputs_of_size, random_init_sequences, simulate, Outcome, SimulationParams};

fn vars2() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

fn val(x: u64, y: u64) -> Valuation {
    [("x".to_string(), x), ("y".to_string(), y)].into_iter().collect()
}

fn lin(a: i64, b: i64) -> String {
    let op = if b < 0 { '-' } else { '+' };
    format!("{a}*x {op} {}*y", b.abs())
}

fn arb_atom() -> impl Strategy<Value = String> {
    prop_oneof![
        (-3i64..=3, -3i64..=3, -5i64..=5).prop_map(|(a, b, c)| format!("{} > {c}", lin(a, b))),
        (0i64..=5, 0i64..=5, 0i64..=4, 2i64..=5).prop_map(|(a, b, c, m)| format!("{} = {c} (mod {m})", lin(a, b))),
        (0i64..=5, 1i64..=4, 2i64..=5).prop_map(|(a, c, m)| format!("{a}*x >= {c} (mod {m})")),
    ]
}

fn arb_formula() -> impl Strategy<Value = String> {
    arb_atom().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) & ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) | ({b})")),
            inner.prop_map(|a| format!("!({a})")),
        ]
    })
}

/// Configurations along a walk that picks enabled transitions by `choices`.
fn walk(p: &Protocol, v: &Valuation, choices: &[usize]) -> Vec<presburger_pp::protocol::Config<u32>> {
    let mut c = p.initial_config(v).unwrap();
    let mut out = vec![c.clone()];
    for k in choices {
        let ts = p.enabled_transitions(&c);
        if ts.is_empty() {
            break;
        }
        c = p.fire(&c, ts[k % ts.len()]);
        out.push(c.clone());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn evaluate_distributes(f in arb_formula(), g in arb_formula(), x in 0u64..10, y in 0u64..10) {
        let v = val(x, y);
        let (pf, pg) = (Formula::parse(&f).unwrap(), Formula::parse(&g).unwrap());
        let and = Formula::parse(&format!("({f}) & ({g})")).unwrap();
        let or = Formula::parse(&format!("({f}) | ({g})")).unwrap();
        let not = Formula::parse(&format!("!({f})")).unwrap();
        prop_assert_eq!(and.evaluate(&v), pf.evaluate(&v) && pg.evaluate(&v));
        prop_assert_eq!(or.evaluate(&v), pf.evaluate(&v) || pg.evaluate(&v));
        prop_assert_eq!(not.evaluate(&v), !pf.evaluate(&v));
    }

    #[test]
    fn display_parses_back(f in arb_formula(), x in 0u64..8, y in 0u64..8) {
        let phi = Formula::parse(&f).unwrap();
        let again = Formula::parse(&phi.to_string()).unwrap();
        let v = val(x, y);
        prop_assert_eq!(again.evaluate(&v), phi.evaluate(&v));
    }

    #[test]
    fn remainders_normalize_on_small_values(a in 0i64..6, b in 0i64..6, c in 0i64..6, m in 2i64..6) {
        let phi = Formula::parse(&format!("{a}*x + {b}*y = {c} (mod {m})")).unwrap();
        let n = normalize(&phi.node).unwrap();
        for x in 0..(3 * m as u64) {
            for y in 0..(3 * m as u64) {
                prop_assert_eq!(n.evaluate(&val(x, y)), phi.evaluate(&val(x, y)));
            }
        }
    }

    #[test]
    fn agents_are_conserved(n in 0u32..3, x in 2u64..7, choices in prop::collection::vec(0usize..50, 0..40)) {
        for p in [p_n(n), pp_n(n)] {
            let v: Valuation = [("x".to_string(), x)].into_iter().collect();
            for c in walk(&p, &v, &choices) {
                prop_assert_eq!(c.size(), x);
            }
        }
    }

    #[test]
    fn enabled_matches_pre_and_fire_unfires(x in 2u64..6, choices in prop::collection::vec(0usize..50, 0..20)) {
        let p = compile_large(&Formula::parse("x - y > 0").unwrap()).unwrap().two_way;
        let v: Valuation = [("x".to_string(), x), ("y".to_string(), 1)].into_iter().collect();
        for c in walk(&p, &v, &choices) {
            for (t, tr) in p.transitions().iter().enumerate() {
                let ge = tr.pre_ms().items().iter().all(|(s, k)| c.count(s) >= *k);
                prop_assert_eq!(p.enabled(&c, t), ge);
                if ge {
                    let mut d = p.fire(&c, t);
                    d.add(&tr.pre_ms());
                    prop_assert!(d.subtract(&tr.post_ms()));
                    prop_assert_eq!(&d, &c);
                }
            }
        }
    }

    #[test]
    fn threshold_rdi_conserves_value(a in -4i64..=4, b in -4i64..=4, c in 1i64..6, seed in any::<u64>()) {
        let coeffs: BTreeMap<String, i64> = [("x".to_string(), a), ("y".to_string(), b)].into_iter().collect();
        let r = build_threshold_rdi(&vars2(), &coeffs, c).unwrap();
        let rep = random_init_sequences(&r, 40, 30, seed);
        prop_assert_eq!(rep.violations, 0, "{:?}", rep.example);
    }

    #[test]
    fn remainder_rdi_conserves_residue(a in 0i64..5, b in 0i64..5, m in 2i64..6, bound in 1i64..5, seed in any::<u64>()) {
        prop_assume!(bound < m && a < m && b < m);
        let coeffs: BTreeMap<String, i64> = [("x".to_string(), a), ("y".to_string(), b)].into_iter().collect();
        let r = build_remainder_rdi(&vars2(), &coeffs, bound, m).unwrap();
        let rep = random_init_sequences(&r, 40, 30, seed);
        prop_assert_eq!(rep.violations, 0, "{:?}", rep.example);
    }

    #[test]
    fn rdi_documents_round_trip(a in -4i64..=4, c in 1i64..9) {
        let coeffs: BTreeMap<String, i64> = [("x".to_string(), a), ("y".to_string(), 1)].into_iter().collect();
        let r = build_threshold_rdi(&vars2(), &coeffs, c).unwrap();
        let back = rdi_from_doc(&rdi_to_doc(&r)).unwrap();
        prop_assert_eq!(to_json(&back.protocol), to_json(&r.protocol));
        prop_assert_eq!(back.dagger.len(), r.dagger.len());
        prop_assert_eq!(to_json(&from_json(&to_json(&r.full())).unwrap()), to_json(&r.full()));
    }

    #[test]
    fn stabilized_runs_agree_with_the_oracle(n in 0u32..3, x in 2u64..7, seed in any::<u64>()) {
        for p in [p_n(n), pp_n(n)] {
            let v: Valuation = [("x".to_string(), x)].into_iter().collect();
            let expected = x >= 1 << n;
            prop_assert!(check_computes(&p, |_| expected, std::slice::from_ref(&v), 100_000).all_pass());
            let r = simulate(&p, &v, SimulationParams { seed, window: 200, ..Default::default() }).unwrap();
            if let Outcome::Stabilized(b) = r.outcome {
                prop_assert_eq!(b, expected);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// Greater-Sum decides `a·v > c` on its size and never holds both
    /// answers at once.
    #[test]
    fn greater_sum_is_correct_and_halting(a in -3i64..=3, b in -3i64..=3, c in -3i64..=3, i in 2u64..=3) {
        let coeffs: BTreeMap<String, i64> = [("x".to_string(), a), ("y".to_string(), b)].into_iter().collect();
        let p = greater_sum(&vars2(), &coeffs, c, i).unwrap();
        let inputs = inputs_of_size(&vars2(), [i]);
        let r = check_computes(&p, |v: &Valuation| a * v["x"] as i64 + b * v["y"] as i64 > c, &inputs, 500_000);
        prop_assert!(r.all_pass(), "{:?}", r.rows.iter().find(|r| r.detail.is_some()));
        let (f, t) = p.simple_outputs().unwrap();
        for v in &inputs {
            let g = explore(&p, &p.initial_config(v).unwrap(), 500_000);
            let id = |s| g.states.iter().position(|q| *q == s).map(|k| k as u32);
            let (fi, ti) = (id(f), id(t));
            let count = |n: usize, s: Option<u32>| s.map_or(0, |s| g.nodes[n].count(&s));
            for n in 0..g.len() {
                prop_assert!(count(n, fi) == 0 || count(n, ti) == 0);
                for &m in g.successors(n) {
                    prop_assert!(count(m as usize, fi) >= count(n, fi));
                    prop_assert!(count(m as usize, ti) >= count(n, ti));
                }
            }
        }
    }

    /// The tags of a halting combination never change.
    #[test]
    fn tags_are_invariant(c1 in -2i64..=2, c2 in -2i64..=2, x in 0u64..=3, y in 0u64..=3) {
        prop_assume!(x + y == 3);
        let coeffs: BTreeMap<String, i64> = [("x".to_string(), 1), ("y".to_string(), -1)].into_iter().collect();
        let parts = vec![greater_sum(&vars2(), &coeffs, c1, 3).unwrap(), greater_sum(&vars2(), &coeffs, c2, 3).unwrap()];
        let tree = halting_boolean_combine(parts, &Shape::And(Box::new(Shape::Leaf), Box::new(Shape::Not(Box::new(Shape::Leaf))))).unwrap();
        let g = explore(&tree, &tree.initial_config(&val(x, y)).unwrap(), 500_000);
        let tags = |n: usize| {
            let mut ts: Vec<u32> = g.nodes[n]
                .items()
                .iter()
                .flat_map(|(s, k)| {
                    let tag = match &g.states[*s as usize] {
                        HaltState::Run { tag, .. } => *tag,
                        HaltState::Done(_) => u32::MAX - 1,
                    };
                    std::iter::repeat_n(tag, *k as usize)
                })
                .filter(|t| *t != u32::MAX - 1)
                .collect();
            ts.sort();
            ts
        };
        let t0 = tags(0);
        for n in 0..g.len() {
            // agents may finish, but never change their tag
            let tn = tags(n);
            prop_assert!(tn.iter().all(|t| t0.contains(t)));
        }
    }
}

/// `v(x) = k·w(x^hi) + w(x^lo)` in every sub-protocol once no input agent
/// is left undispatched.
#[test]
fn dispatch_relation_holds_on_reachable_configurations() {
    let phi = Formula::parse("x > 1 & x >= 1 (mod 2)").unwrap();
    let b = compile_large(&phi).unwrap();
    let k = b.rdis.len();
    assert_eq!(k, 2);
    let m = b.dispatched.as_ref().unwrap();
    let p = &m.protocol;
    for x in 1..=2u64 {
        let v: Valuation = [("x".to_string(), x)].into_iter().collect();
        let g = explore(p, &p.initial_config(&v).unwrap(), 2_000_000);
        assert!(!g.truncated);
        let port = p.input_of("x").unwrap();
        let mut finished = 0;
        for c in &g.nodes {
            let c = c.map(|s| g.states[*s as usize]);
            if c.count(&port) > 0 {
                continue;
            }
            finished += 1;
            for i in 0..k {
                let w = |var: &str| -> u64 {
                    c.items()
                        .iter()
                        .filter(|(s, _)| {
                            let name = p.state_name(*s);
                            name == sub_state(i, &format!("in:{var}")) || name.starts_with(&sub_state(i, "")) && name.ends_with(&format!("@{var}"))
                        })
                        .map(|(_, n)| *n as u64)
                        .sum()
                };
                assert_eq!(x, k as u64 * w(&hi_var("x")) + w(&lo_var("x")));
            }
        }
        assert!(finished > 0);
    }
}

#[test]
fn explore_is_deterministic() {
    let p = atom_rdi(
        &presburger_pp::formula::Atom::threshold([("x".to_string(), 1)].into_iter().collect(), 1),
        &["x".to_string()],
        1,
    )
    .unwrap()
    .protocol;
    let v: Valuation = [("x".to_string(), 3)].into_iter().collect();
    let a = explore(&p, &p.initial_config(&v).unwrap(), 100_000);
    let b = explore(&p, &p.initial_config(&v).unwrap(), 100_000);
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.states, b.states);
    assert_eq!(a.successors(0), b.successors(0));
    assert!(a.outputs(&p).contains(&Opinion::One));
}
