use presburger_pp::formula::{Formula, Valuation};
use presburger_pp::pipeline::{compile, product_stat, STAGES};
use presburger_pp::small::compile_small;
use presburger_pp::system::{Agents, Population};
use presburger_pp::verify::{check_computes, inputs_of_size, DEFAULT_NODE_CAP};

fn size(v: &Valuation) -> u64 {
    v.values().sum()
}

#[test]
fn every_stage_computes_its_share() {
    let phi = Formula::parse("x > 1").unwrap();
    let c = compile(&phi).unwrap();
    let ell = c.ell as u64;
    let oracle = |v: &Valuation| phi.evaluate(v);

    // stages with helpers are correct on every input
    let all = inputs_of_size(&phi.vars, 0..=3);
    for (name, p) in [("boolean", &c.large.combined), ("2way", &c.large.two_way)] {
        let r = check_computes(p, oracle, &all, DEFAULT_NODE_CAP);
        assert!(r.all_pass(), "{name}: {:?}", r.rows.iter().find(|r| r.detail.is_some()));
    }

    // helpers removed: correct from the cutoff on
    let hf = &c.large.helper_free;
    assert!(hf.leader_states().is_empty());
    let large = inputs_of_size(&phi.vars, ell..=ell + 1);
    let r = check_computes(hf, oracle, &large, DEFAULT_NODE_CAP);
    assert!(r.all_pass(), "{:?}", r.rows.iter().find(|r| r.detail.is_some()));

    // small stage: correct below the cutoff, leaderless
    let small = c.small();
    assert!(small.leader_states().is_empty());
    let below = inputs_of_size(&phi.vars, 2..ell);
    let r = check_computes(small, |v: &Valuation| size(v) >= ell || oracle(v), &below, DEFAULT_NODE_CAP);
    assert!(r.all_pass(), "{:?}", r.rows.iter().find(|r| r.detail.is_some()));
}

#[test]
fn small_stage_handles_two_variables() {
    let phi = Formula::parse("x - y > 0").unwrap();
    let s = compile_small(&phi, 4).unwrap();
    assert!(s.leader_states().is_empty());
    let inputs = inputs_of_size(&phi.vars, 2..=3);
    assert_eq!(inputs.len(), 3 + 4);
    let r = check_computes(&s, |v: &Valuation| size(v) >= 4 || phi.evaluate(v), &inputs, DEFAULT_NODE_CAP);
    assert!(r.all_pass(), "{:?}", r.rows.iter().find(|r| r.detail.is_some()));
}

#[test]
fn stage_stats_are_ordered_and_consistent() {
    let phi = Formula::parse("x - y > 0 | x >= 1 (mod 2)").unwrap();
    let c = compile(&phi).unwrap();
    let names: Vec<&str> = c.stage_stats.iter().map(|s| s.stage.as_str()).collect();
    assert_eq!(names, STAGES);
    let by = |n: &str| c.stage_stats.iter().find(|s| s.stage == n).unwrap();

    let rdis = &c.large.rdis;
    assert_eq!(rdis.len(), 2);
    assert_eq!(by("rdi").states, rdis.iter().map(|r| r.num_states() as u64).sum::<u64>());
    assert_eq!(by("rdi").transitions, rdis.iter().map(|r| r.num_transitions() as u64).sum::<u64>());

    assert_eq!(by("2way").max_width, 2);
    assert_eq!(by("2way").states, c.large.two_way.num_states() as u64);
    assert_eq!(c.ell as u64, by("2way").helpers.max(3));
    assert_eq!(by("helpers-removed").helpers, 0);
    assert_eq!(by("leaderless-small").helpers, 0);
    assert_eq!(by("fixed-size").helpers, 1);
    assert_eq!(*by("product"), product_stat(by("helpers-removed"), by("leaderless-small")));
    let (l, s) = (by("helpers-removed").states, by("leaderless-small").states);
    assert_eq!(by("product").states, 4u64.saturating_mul(l).saturating_mul(s));
}

#[test]
fn two_way_stage_has_width_two_and_keeps_variables() {
    let phi = Formula::parse("x - 2*y > 0 & y >= 1 (mod 3)").unwrap();
    let c = compile(&phi).unwrap();
    assert_eq!(c.large.two_way.max_width(), 2);
    assert_eq!(c.large.two_way.variables, phi.vars);
    assert_eq!(c.small().variables(), &phi.vars[..]);
}
