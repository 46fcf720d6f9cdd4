//! Exhaustive correctness and halting checks.
//!
//! A fair execution eventually stays inside one bottom SCC and visits all of
//! it, so a protocol stabilizes to `b` from `C` exactly when every
//! configuration of every bottom SCC reachable from `C` has output `b`.

use rayon::prelude::*;
use serde::Serialize;

use super::explore::{explore, ReachGraph};
use crate::formula::Valuation;
use crate::protocol::{Config, Opinion};
use crate::system::Population;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputReport {
    pub input: Valuation,
    pub expected: bool,
    pub verdict: Verdict,
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerificationReport {
    pub rows: Vec<InputReport>,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub explored_nodes: usize,
}

impl VerificationReport {
    pub fn from_rows(rows: Vec<InputReport>) -> Self {
        let mut r = VerificationReport::default();
        for row in rows {
            r.push(row);
        }
        r
    }

    pub fn push(&mut self, row: InputReport) {
        match row.verdict {
            Verdict::Pass => self.passed += 1,
            Verdict::Fail => self.failed += 1,
            Verdict::Inconclusive => self.inconclusive += 1,
        }
        self.explored_nodes += row.nodes;
        self.rows.push(row);
    }

    /// Reports merge associatively.
    pub fn merge(mut self, other: VerificationReport) -> Self {
        for row in other.rows {
            self.push(row);
        }
        self
    }

    pub fn all_pass(&self) -> bool {
        self.failed == 0 && self.inconclusive == 0
    }
}

/// All valuations over `vars` whose total is in `sizes`, in lexicographic
/// order.
pub fn inputs_of_size(vars: &[String], sizes: impl IntoIterator<Item = u64>) -> Vec<Valuation> {
    fn rec(vars: &[String], left: u64, cur: &mut Valuation, out: &mut Vec<Valuation>) {
        match vars {
            [] => {}
            [last] => {
                cur.insert(last.clone(), left);
                out.push(cur.clone());
                cur.remove(last);
            }
            [x, rest @ ..] => {
                for k in 0..=left {
                    cur.insert(x.clone(), k);
                    rec(rest, left - k, cur, out);
                }
                cur.remove(x);
            }
        }
    }
    let mut out = Vec::new();
    for n in sizes {
        rec(vars, n, &mut Valuation::new(), &mut out);
    }
    out
}

fn witness<P: Population + ?Sized>(sys: &P, g: &ReachGraph<P::State>, node: usize) -> Vec<String> {
    g.trace_to(node).iter().map(|r| sys.rule_name(*r)).collect()
}

fn render_config<P: Population + ?Sized>(sys: &P, g: &ReachGraph<P::State>, node: usize) -> String {
    let parts: Vec<String> = g.nodes[node]
        .items()
        .iter()
        .map(|(s, n)| {
            let name = sys.render(&g.states[*s as usize]);
            if *n == 1 {
                name
            } else {
                format!("{n}*{name}")
            }
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// Checks a single input.
pub fn check_input<P: Population + ?Sized>(sys: &P, v: &Valuation, expected: bool, node_cap: usize) -> InputReport {
    match sys.initial_config(v) {
        Ok(c0) => check_config(sys, &c0, v, expected, node_cap),
        Err(e) => InputReport {
            input: v.clone(),
            expected,
            verdict: Verdict::Inconclusive,
            nodes: 0,
            witness: None,
            detail: Some(e.to_string()),
        },
    }
}

/// Checks that every fair execution from `c0` stabilizes to `expected`;
/// `label` is reported as the input.
pub fn check_config<P: Population + ?Sized>(
    sys: &P,
    c0: &Config<P::State>,
    label: &Valuation,
    expected: bool,
    node_cap: usize,
) -> InputReport {
    let g = explore(sys, c0, node_cap);
    let mut row = InputReport { input: label.clone(), expected, verdict: Verdict::Pass, nodes: g.len(), witness: None, detail: None };
    if g.truncated {
        row.verdict = Verdict::Inconclusive;
        row.detail = Some(format!("node cap {} reached", g.node_cap));
        return row;
    }
    let want = Opinion::from_bool(expected);
    let outs = g.outputs(sys);
    let bottom = g.bottom();
    if let Some(bad) = (0..g.len()).find(|n| bottom[*n] && outs[*n] != want) {
        row.verdict = Verdict::Fail;
        row.witness = Some(witness(sys, &g, bad));
        row.detail = Some(format!("bottom configuration {} has output {:?}", render_config(sys, &g, bad), outs[bad]));
    }
    row
}

/// Runs [`check_input`] on every input, in parallel.
pub fn check_computes<P, F>(sys: &P, expected: F, inputs: &[Valuation], node_cap: usize) -> VerificationReport
where
    P: Population + ?Sized,
    F: Fn(&Valuation) -> bool + Sync,
{
    let rows: Vec<InputReport> = inputs.par_iter().map(|v| check_input(sys, v, expected(v), node_cap)).collect();
    VerificationReport::from_rows(rows)
}

/// Checks that the numbers of agents with output 0 and with output 1 never
/// decrease and are never both positive.
pub fn check_halting_input<P: Population + ?Sized>(sys: &P, v: &Valuation, node_cap: usize) -> InputReport {
    let mut row = InputReport { input: v.clone(), expected: false, verdict: Verdict::Pass, nodes: 0, witness: None, detail: None };
    let c0 = match sys.initial_config(v) {
        Ok(c) => c,
        Err(e) => {
            row.verdict = Verdict::Inconclusive;
            row.detail = Some(e.to_string());
            return row;
        }
    };
    let g = explore(sys, &c0, node_cap);
    row.nodes = g.len();
    if g.truncated {
        row.verdict = Verdict::Inconclusive;
        row.detail = Some(format!("node cap {} reached", g.node_cap));
        return row;
    }
    let table: Vec<Opinion> = g.states.iter().map(|s| sys.opinion(s)).collect();
    let occupancy: Vec<(u64, u64)> = g
        .nodes
        .iter()
        .map(|c| {
            let mut z = (0, 0);
            for (s, n) in c.items() {
                match table[*s as usize] {
                    Opinion::Zero => z.0 += *n as u64,
                    Opinion::One => z.1 += *n as u64,
                    Opinion::Bot => {}
                }
            }
            z
        })
        .collect();
    for n in 0..g.len() {
        let (f, t) = occupancy[n];
        if f > 0 && t > 0 {
            row.verdict = Verdict::Fail;
            row.witness = Some(witness(sys, &g, n));
            row.detail = Some(format!("both outputs occupied in {}", render_config(sys, &g, n)));
            return row;
        }
        for (&m, &r) in g.successors(n).iter().zip(g.edge_rules(n)) {
            let (f2, t2) = occupancy[m as usize];
            if f2 < f || t2 < t {
                row.verdict = Verdict::Fail;
                let mut w = witness(sys, &g, n);
                w.push(sys.rule_name(r));
                row.witness = Some(w);
                row.detail = Some(format!("output occupancy drops after {}", render_config(sys, &g, n)));
                return row;
            }
        }
    }
    row
}

pub fn check_halting<P: Population + ?Sized>(sys: &P, inputs: &[Valuation], node_cap: usize) -> VerificationReport {
    let rows: Vec<InputReport> = inputs.par_iter().map(|v| check_halting_input(sys, v, node_cap)).collect();
    VerificationReport::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::fixtures::{p_n, pp_n};
    use crate::protocol::{Flavor, Protocol};

    fn ge_pow(n: u32) -> impl Fn(&Valuation) -> bool {
        move |v| v["x"] >= 1 << n
    }

    #[test]
    fn fixtures_compute_powers() {
        let xs = vec!["x".to_string()];
        for n in 1..=3 {
            let inputs = inputs_of_size(&xs, 2..=6);
            assert!(check_computes(&pp_n(n), ge_pow(n), &inputs, 100_000).all_pass());
            assert!(check_computes(&p_n(n), ge_pow(n), &inputs, 100_000).all_pass());
        }
    }

    #[test]
    fn two_bottoms_fail_with_witness() {
        let mut p = Protocol::new(vec!["x".into()], Flavor::General);
        let a = p.add_state("a");
        let z = p.add_state("z");
        let o = p.add_state("o");
        p.set_output(z, Opinion::Zero);
        p.set_output(o, Opinion::One);
        p.set_input("x", a).unwrap();
        p.add_transition(vec![a, a], vec![z, z], "to0");
        p.add_transition(vec![a, a], vec![o, o], "to1");
        let v: Valuation = [("x".to_string(), 2)].into_iter().collect();
        let r = check_input(&p, &v, true, 100);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witness.unwrap(), vec!["to0".to_string()]);
    }

    #[test]
    fn single_cycle_of_ones_passes() {
        let mut p = Protocol::new(vec!["x".into()], Flavor::General);
        let a = p.add_state("a");
        let b = p.add_state("b");
        p.set_output(a, Opinion::One);
        p.set_output(b, Opinion::One);
        p.set_input("x", a).unwrap();
        p.add_transition(vec![a, a], vec![b, b], "ab");
        p.add_transition(vec![b, b], vec![a, a], "ba");
        let v: Valuation = [("x".to_string(), 2)].into_iter().collect();
        assert_eq!(check_input(&p, &v, true, 100).verdict, Verdict::Pass);
    }

    #[test]
    fn vacuous_halting() {
        let p = pp_n(1);
        let mut q = p.clone();
        q.outputs = vec![Opinion::Bot; q.num_states()];
        let inputs = inputs_of_size(&q.variables, 2..=4);
        assert!(check_halting(&q, &inputs, 1000).all_pass());
    }

    #[test]
    fn enumerates_inputs() {
        let vars = vec!["x".to_string(), "y".to_string()];
        let v = inputs_of_size(&vars, [2]);
        assert_eq!(v.len(), 3);
        assert_eq!(v[0]["x"], 0);
        assert_eq!(v[2]["y"], 0);
    }
}
