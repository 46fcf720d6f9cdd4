//! One line per acceptance criterion. Runs without the libtest harness so
//! the lines show up in the test log; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use presburger_pp::cli::{compile_doc, rdi_for, Mode, RdiKind};
use presburger_pp::formula::{Formula, Valuation};
use presburger_pp::large::{build_remainder_rdi, build_threshold_rdi, remove_helpers};
use presburger_pp::pipeline::compile;
use presburger_pp::protocol::convert::{fopp_to_spp, spp_to_fopp};
use presburger_pp::protocol::fixtures::{helper_toy, p_n, pp_n};
use presburger_pp::protocol::Protocol;
use presburger_pp::small::{build_greater_sum_halting, compile_small};
use presburger_pp::verify::{
    check_computes, check_halting, check_rdi, inputs_of_size, random_init_sequences, simulate, Outcome, RdiCheckParams,
    SimulationParams, DEFAULT_NODE_CAP,
};

fn vars(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

fn coeffs(cs: &[(&str, i64)]) -> BTreeMap<String, i64> {
    cs.iter().map(|(x, a)| (x.to_string(), *a)).collect()
}

/// Bits needed for `k`, computed by repeated halving.
fn bits_of(mut k: u64) -> u64 {
    let mut n = 0;
    while k > 0 {
        k /= 2;
        n += 1;
    }
    n
}

struct Line {
    ok: bool,
    detail: String,
}

fn pass(ok: bool, detail: impl Into<String>) -> Line {
    Line { ok, detail: detail.into() }
}

fn c1() -> Line {
    // numbers 0, ±2^0..±2^n plus one tagged copy per variable, the ports,
    // and the two output helpers; remainders only have non-negative powers
    let t_oracle = |x: u64, n: u64| (2 * n + 3) * (x + 1) + x + 2;
    let r_oracle = |x: u64, n: u64| (n + 2) * (x + 1) + x + 2;
    let t = build_threshold_rdi(&vars(&["x"]), &coeffs(&[("x", 1)]), 2).unwrap();
    let r = build_remainder_rdi(&vars(&["x", "y"]), &coeffs(&[("x", 5), ("y", 6)]), 4, 7).unwrap();
    let (tn, rn) = (bits_of(2), bits_of(7));
    let ok = t.num_states() == 17
        && t.helpers() == 5
        && r.num_states() == 19
        && r.helpers() == 7
        && t.num_states() as u64 == t_oracle(1, tn)
        && r.num_states() as u64 == r_oracle(2, rn);
    pass(
        ok,
        format!(
            "threshold x>=2: {} states, {} helpers; remainder 5x+6y>=4 (mod 7): {} states, {} helpers",
            t.num_states(),
            t.helpers(),
            r.num_states(),
            r.helpers()
        ),
    )
}

fn c2() -> Line {
    let sizes: Vec<usize> = (1..=10)
        .map(|n| rdi_for(&Formula::parse(&format!("x > {}", (1u64 << n) - 1)).unwrap(), RdiKind::Threshold).unwrap().num_states())
        .collect();
    let incs: Vec<i64> = sizes.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect();
    let affine = incs.iter().all(|d| *d == incs[0] && *d > 0);
    let unary: Vec<usize> = (1..=10).map(|n| p_n(n).num_states()).collect();
    let unary_ok = (1..=10).all(|n| unary[n - 1] == (1 << n) + 1);
    pass(affine && unary_ok, format!("RDI states {sizes:?} (increment {}); unary P_n {unary:?}", incs[0]))
}

fn c3() -> Line {
    let cases = [
        ("x > 1", RdiKind::Threshold),
        ("x - y > 0", RdiKind::Threshold),
        ("2*x - y > 2", RdiKind::Threshold),
        ("x >= 1 (mod 2)", RdiKind::Remainder),
        ("x >= 2 (mod 3)", RdiKind::Remainder),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (text, kind) in cases {
        let r = rdi_for(&Formula::parse(text).unwrap(), kind).unwrap();
        let params = RdiCheckParams { max_pop: 3, max_depth: usize::MAX, node_cap: DEFAULT_NODE_CAP, samples: 200, seed: 7 };
        let rep = check_rdi(&r, params);
        let good = rep.passed() && !rep.truncated;
        ok &= good;
        parts.push(format!(
            "{text}: {} configs, bound {}/{}, reversible {}/{}, computes {}/{}{}",
            rep.configurations,
            rep.input_bound.checked - rep.input_bound.violations,
            rep.input_bound.checked,
            rep.reversibility.checked - rep.reversibility.violations - rep.reversibility.inconclusive,
            rep.reversibility.checked,
            rep.computation.checked - rep.computation.violations - rep.computation.inconclusive,
            rep.computation.checked,
            if good { "" } else { " FAILED" }
        ));
        if let Some(e) = rep.computation.example.as_ref().or(rep.reversibility.example.as_ref()) {
            parts.push(format!("counterexample {e}"));
        }
    }
    pass(ok, parts.join("; "))
}

fn c4() -> Line {
    let cases = [
        ("threshold x>=2", build_threshold_rdi(&vars(&["x"]), &coeffs(&[("x", 1)]), 2).unwrap()),
        ("threshold 2x-y>=3", build_threshold_rdi(&vars(&["x", "y"]), &coeffs(&[("x", 2), ("y", -1)]), 3).unwrap()),
        ("remainder 5x+6y>=4 (mod 7)", build_remainder_rdi(&vars(&["x", "y"]), &coeffs(&[("x", 5), ("y", 6)]), 4, 7).unwrap()),
        ("remainder x>=2 (mod 3)", build_remainder_rdi(&vars(&["x"]), &coeffs(&[("x", 1)]), 2, 3).unwrap()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, r) in cases {
        let rep = random_init_sequences(&r, 1000, 30, 11);
        ok &= rep.violations == 0 && rep.sequences >= 1000;
        parts.push(format!("{name}: {} sequences, {} steps, {} violations", rep.sequences, rep.steps, rep.violations));
    }
    pass(ok, parts.join("; "))
}

fn c5() -> Line {
    let vs = vars(&["x", "y"]);
    let alpha = [("x".to_string(), 1u64)].into_iter().collect();
    let beta = [("y".to_string(), 1u64)].into_iter().collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for i in [2u64, 3] {
        let p = build_greater_sum_halting(&vs, &alpha, &beta, i).unwrap();
        let inputs = inputs_of_size(&vs, [i]);
        let h = check_halting(&p, &inputs, DEFAULT_NODE_CAP);
        let c = check_computes(&p, |v: &Valuation| v["x"] > v["y"], &inputs, DEFAULT_NODE_CAP);
        ok &= h.all_pass() && c.all_pass();
        parts.push(format!("i={i}: halting {}/{}, computes {}/{}", h.passed, inputs.len(), c.passed, inputs.len()));
    }
    pass(ok, parts.join("; "))
}

fn c6() -> Line {
    let phi = Formula::parse("x > 0").unwrap();
    let s = compile_small(&phi, 3).unwrap();
    let inputs = inputs_of_size(&phi.vars, 2..=4);
    let r = check_computes(&s, |v: &Valuation| v.values().sum::<u64>() >= 3 || phi.evaluate(v), &inputs, DEFAULT_NODE_CAP);
    pass(r.all_pass(), format!("{}/{} inputs pass, {} nodes explored", r.passed, inputs.len(), r.explored_nodes))
}

fn c7() -> Line {
    let toy = helper_toy();
    let hf = remove_helpers(&toy).unwrap();
    let ell = hf.ell() as u64;
    let inputs = inputs_of_size(&toy.variables, 2..=3);
    let r = check_computes(&hf, |v: &Valuation| v.values().sum::<u64>() < ell || v["x"] > v["y"], &inputs, DEFAULT_NODE_CAP);
    pass(r.all_pass() && ell == 1, format!("ℓ = {ell}, {}/{} inputs of size 2..3 pass", r.passed, inputs.len()))
}

fn c8() -> Line {
    let mut ok = true;
    let mut checked = 0;
    for n in 0..=2u32 {
        for (name, p) in [("P", p_n(n)), ("P'", pp_n(n))] {
            let spp = fopp_to_spp(&p).unwrap();
            let back = spp_to_fopp(&spp).unwrap();
            let inputs = inputs_of_size(&p.variables, 2..=5);
            let oracle = |v: &Valuation| v["x"] >= 1 << n;
            let all: [(&str, &Protocol); 3] = [("original", &p), ("spp", &spp), ("fopp", &back)];
            for (stage, q) in all {
                let r = check_computes(q, oracle, &inputs, DEFAULT_NODE_CAP);
                if !r.all_pass() {
                    ok = false;
                    eprintln!("criterion 8: {name}_{n} {stage} fails");
                }
                checked += r.rows.len();
            }
        }
    }
    pass(ok, format!("{checked} verdicts agree across P_n, P'_n for n <= 2 and |v| <= 5"))
}

fn c9() -> Line {
    let phi = Formula::parse("x > 1").unwrap();
    let c = compile(&phi).unwrap();
    let ell = c.ell as u64;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2, ell, ell + 3] {
        let v = phi.valuation(&[n]);
        let expected = phi.evaluate(&v);
        let (mut right, mut wrong) = (0, 0);
        for seed in 0..50 {
            let params = SimulationParams { seed, ..Default::default() };
            match simulate(&c.protocol, &v, params).unwrap().outcome {
                Outcome::Stabilized(b) if b == expected => right += 1,
                Outcome::Stabilized(_) => wrong += 1,
                Outcome::Undecided => {}
            }
        }
        ok &= wrong == 0 && right * 10 >= 50 * 9;
        parts.push(format!("|v|={n}: {right}/50 correct, {wrong} wrong"));
    }
    pass(ok, format!("ℓ = {ell}; {}", parts.join("; ")))
}

fn c10() -> Line {
    let mut ok = true;
    let mut count = 0;
    for text in ["x > 1", "x >= 2", "x >= 1 (mod 2)"] {
        let phi = Formula::parse(text).unwrap();
        ok &= compile(&phi).unwrap().to_json() == compile(&phi).unwrap().to_json();
        count += 1;
    }
    for (text, mode, size) in [
        ("x - y > 0", Mode::Large, None),
        ("2*x - y > 2", Mode::RdiThreshold, None),
        ("5*x + 6*y >= 4 (mod 7)", Mode::RdiRemainder, None),
        ("x - y > 0", Mode::GreaterSum, Some(3)),
        ("x > 0", Mode::Small, Some(3)),
    ] {
        let phi = Formula::parse(text).unwrap();
        let a = serde_json::to_string_pretty(&compile_doc(&phi, mode, size).unwrap()).unwrap();
        let b = serde_json::to_string_pretty(&compile_doc(&phi, mode, size).unwrap()).unwrap();
        ok &= a == b;
        count += 1;
    }
    pass(ok, format!("{count} documents identical across two compilations"))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Line); 10] = [
        (1, "exact RDI sizes", c1),
        (2, "succinct threshold RDI", c2),
        (3, "check_rdi on atoms", c3),
        (4, "RDI invariants", c4),
        (5, "Greater-Sum halting", c5),
        (6, "small-input pipeline", c6),
        (7, "helper removal", c7),
        (8, "output conversions", c8),
        (9, "end-to-end simulation", c9),
        (10, "determinism", c10),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    let mut total = Duration::ZERO;
    for (id, name, f) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let dt = t.elapsed();
        total += dt;
        println!("criterion {id:>2} {name}: {} ({:.1}s) {}", if r.ok { "PASS" } else { "FAIL" }, dt.as_secs_f64(), r.detail);
        failed += usize::from(!r.ok);
    }
    println!("acceptance: {failed} failing, {:.1}s total", total.as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
