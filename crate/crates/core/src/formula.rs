//! Quantifier-free Presburger predicates.
//!
//! Atoms are threshold constraints `a·v > b`, remainder constraints
//! `a·v = b (mod m)` and the internal mod-threshold form `a·v >= b (mod m)`
//! meaning `(a·v mod m) >= b`. Formulas combine atoms with `&`, `|` and `!`.
//! [`Formula::evaluate`] is the arithmetic ground truth that every protocol is
//! checked against.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input assignment; variables that are absent count as zero.
pub type Valuation = BTreeMap<String, u64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomKind {
    Threshold,
    Remainder,
    ModThreshold,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub kind: AtomKind,
    pub coeffs: BTreeMap<String, i64>,
    pub bound: i64,
    /// Zero for threshold atoms.
    pub modulus: i64,
}

impl Atom {
    pub fn threshold(coeffs: BTreeMap<String, i64>, bound: i64) -> Atom {
        Atom { kind: AtomKind::Threshold, coeffs, bound, modulus: 0 }
    }

    pub fn remainder(coeffs: BTreeMap<String, i64>, bound: i64, modulus: i64) -> Result<Atom> {
        if modulus < 2 {
            return Err(Error::InvalidModulus(modulus));
        }
        Ok(Atom { kind: AtomKind::Remainder, coeffs, bound, modulus })
    }

    pub fn mod_threshold(coeffs: BTreeMap<String, i64>, bound: i64, modulus: i64) -> Result<Atom> {
        if modulus < 2 {
            return Err(Error::InvalidModulus(modulus));
        }
        Ok(Atom { kind: AtomKind::ModThreshold, coeffs, bound, modulus })
    }

    /// `a·v` for the given valuation.
    pub fn linear_value(&self, v: &Valuation) -> i128 {
        self.coeffs
            .iter()
            .map(|(x, a)| *a as i128 * v.get(x).copied().unwrap_or(0) as i128)
            .sum()
    }

    pub fn holds(&self, v: &Valuation) -> bool {
        let s = self.linear_value(v);
        let m = self.modulus as i128;
        match self.kind {
            AtomKind::Threshold => s > self.bound as i128,
            AtomKind::Remainder => (s - self.bound as i128).rem_euclid(m) == 0,
            AtomKind::ModThreshold => s.rem_euclid(m) >= self.bound as i128,
        }
    }

    /// Largest absolute constant occurring in the atom.
    pub fn norm(&self) -> u64 {
        let mut n = self.bound.unsigned_abs().max(self.modulus.unsigned_abs());
        for a in self.coeffs.values() {
            n = n.max(a.unsigned_abs());
        }
        n
    }

    pub fn coeff(&self, x: &str) -> i64 {
        self.coeffs.get(x).copied().unwrap_or(0)
    }
}

fn write_lincomb(f: &mut fmt::Formatter<'_>, coeffs: &BTreeMap<String, i64>) -> fmt::Result {
    if coeffs.is_empty() {
        return write!(f, "0");
    }
    for (k, (x, a)) in coeffs.iter().enumerate() {
        let mag = a.unsigned_abs();
        if k == 0 {
            if *a < 0 {
                write!(f, "-")?;
            }
        } else if *a < 0 {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        if mag == 1 {
            write!(f, "{x}")?;
        } else {
            write!(f, "{mag}*{x}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_lincomb(f, &self.coeffs)?;
        match self.kind {
            AtomKind::Threshold => write!(f, " > {}", self.bound),
            AtomKind::Remainder => write!(f, " = {} (mod {})", self.bound, self.modulus),
            AtomKind::ModThreshold => write!(f, " >= {} (mod {})", self.bound, self.modulus),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Atom(Atom),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Not(Box<Node>),
}

impl Node {
    pub fn and(a: Node, b: Node) -> Node {
        Node::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Node, b: Node) -> Node {
        Node::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: Node) -> Node {
        Node::Not(Box::new(a))
    }

    pub fn evaluate(&self, v: &Valuation) -> bool {
        match self {
            Node::Atom(a) => a.holds(v),
            Node::And(a, b) => a.evaluate(v) && b.evaluate(v),
            Node::Or(a, b) => a.evaluate(v) || b.evaluate(v),
            Node::Not(a) => !a.evaluate(v),
        }
    }

    /// Number of boolean connectives.
    pub fn len(&self) -> usize {
        match self {
            Node::Atom(_) => 0,
            Node::And(a, b) | Node::Or(a, b) => 1 + a.len() + b.len(),
            Node::Not(a) => 1 + a.len(),
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Node::Atom(_))
    }

    /// Atoms in left-to-right order, with repetitions.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Node::Atom(a) => out.push(a),
            Node::And(a, b) | Node::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Node::Not(a) => a.collect_atoms(out),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Atom(a) => write!(f, "{a}"),
            Node::And(a, b) => write!(f, "({a} & {b})"),
            Node::Or(a, b) => write!(f, "({a} | {b})"),
            Node::Not(a) => write!(f, "!{}", Paren(a)),
        }
    }
}

struct Paren<'a>(&'a Node);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Node::Atom(a) => write!(f, "({a})"),
            other => write!(f, "{other}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    pub node: Node,
    pub vars: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub norm: u64,
    pub len: usize,
    pub bitlength: u64,
    pub var_count: usize,
    pub atom_count: usize,
}

/// Number of binary digits of `n`, i.e. `ceil(log2(n + 1))`.
pub fn bit_length(n: u64) -> u32 {
    64 - n.leading_zeros()
}

impl Formula {
    pub fn new(node: Node, vars: Vec<String>) -> Formula {
        Formula { node, vars }
    }

    pub fn parse(text: &str) -> Result<Formula> {
        Parser::new(text).formula()
    }

    pub fn evaluate(&self, v: &Valuation) -> bool {
        self.node.evaluate(v)
    }

    pub fn metrics(&self) -> Metrics {
        let atoms = self.node.atoms();
        let norm = atoms.iter().map(|a| a.norm()).max().unwrap_or(0);
        let len = self.node.len();
        Metrics {
            norm,
            len,
            bitlength: len as u64 + bit_length(norm) as u64 + self.vars.len() as u64,
            var_count: self.vars.len(),
            atom_count: atoms.len(),
        }
    }

    /// Valuation from values listed in variable order.
    pub fn valuation(&self, values: &[u64]) -> Valuation {
        self.vars.iter().cloned().zip(values.iter().copied()).collect()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.node)
    }
}

/// A threshold in `>=` form with positive bound.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeAtom {
    pub coeffs: BTreeMap<String, i64>,
    pub bound: i64,
}

impl GeAtom {
    pub fn holds(&self, v: &Valuation) -> bool {
        let s: i128 = self
            .coeffs
            .iter()
            .map(|(x, a)| *a as i128 * v.get(x).copied().unwrap_or(0) as i128)
            .sum();
        s >= self.bound as i128
    }
}

/// Rewrites `a·v > b` as `a·v >= b+1` when `b+1 > 0`, and otherwise as the
/// negation of `-a·v >= -b`.
pub fn normalize_threshold(atom: &Atom) -> Result<(GeAtom, bool)> {
    if atom.kind != AtomKind::Threshold {
        return Err(Error::Precondition(format!("`{atom}` is not a threshold atom")));
    }
    let b1 = atom.bound + 1;
    if b1 > 0 {
        Ok((GeAtom { coeffs: atom.coeffs.clone(), bound: b1 }, false))
    } else {
        let coeffs = atom.coeffs.iter().map(|(x, a)| (x.clone(), -a)).collect();
        Ok((GeAtom { coeffs, bound: -atom.bound }, true))
    }
}

/// Reduces a remainder atom to mod-threshold atoms.
pub fn normalize_remainder(atom: &Atom) -> Result<Node> {
    if atom.kind != AtomKind::Remainder {
        return Err(Error::Precondition(format!("`{atom}` is not a remainder atom")));
    }
    let m = atom.modulus;
    if m < 2 {
        return Err(Error::InvalidModulus(m));
    }
    let coeffs: BTreeMap<String, i64> =
        atom.coeffs.iter().map(|(x, a)| (x.clone(), a.rem_euclid(m))).collect();
    let b = atom.bound.rem_euclid(m);
    let ge = |bound| Atom::mod_threshold(coeffs.clone(), bound, m).map(Node::Atom);
    if b == 0 {
        Ok(Node::not(ge(1)?))
    } else {
        Ok(Node::and(ge(b)?, Node::not(ge(b + 1)?)))
    }
}

/// Variable names used for the high and low parts of `x` after splitting
/// `x = k·hi + lo`.
pub fn hi_var(x: &str) -> String {
    format!("{x}^hi")
}

pub fn lo_var(x: &str) -> String {
    format!("{x}^lo")
}

/// Substitutes `k·x^hi + x^lo` for every variable `x`.
pub fn tilde_transform(atom: &Atom, k: i64) -> Atom {
    let mut coeffs = BTreeMap::new();
    for (x, a) in &atom.coeffs {
        coeffs.insert(hi_var(x), k * a);
        coeffs.insert(lo_var(x), *a);
    }
    Atom { kind: atom.kind, coeffs, bound: atom.bound, modulus: atom.modulus }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vars: Vec<String>,
    lex_error: Option<Error>,
}

impl Parser {
    fn new(text: &str) -> Parser {
        let mut toks = Vec::new();
        let mut lex_error = None;
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            } else if c.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                match text[start..i].parse::<i64>() {
                    Ok(n) => toks.push((Tok::Int(n), start)),
                    Err(_) => {
                        lex_error.get_or_insert(Error::Parse {
                            position: start,
                            message: "integer literal out of range".into(),
                        });
                    }
                }
            } else {
                let sym = match c {
                    '>' if bytes.get(i + 1) == Some(&b'=') => ">=",
                    '>' => ">",
                    '=' => "=",
                    '+' => "+",
                    '-' => "-",
                    '*' => "*",
                    '(' => "(",
                    ')' => ")",
                    '&' => "&",
                    '|' => "|",
                    '!' => "!",
                    _ => {
                        lex_error.get_or_insert(Error::Parse {
                            position: i,
                            message: format!("unexpected character `{c}`"),
                        });
                        i += 1;
                        continue;
                    }
                };
                toks.push((Tok::Sym(sym), i));
                i += sym.len();
            }
        }
        toks.push((Tok::End, text.len()));
        Parser { toks, at: 0, vars: Vec::new(), lex_error }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { position: self.pos(), message: message.into() })
    }

    fn eat(&mut self, sym: &str) -> bool {
        if *self.peek() == Tok::Sym(match_sym(sym)) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.fail(format!("expected `{sym}`"))
        }
    }

    fn formula(mut self) -> Result<Formula> {
        if let Some(e) = self.lex_error.take() {
            return Err(e);
        }
        let node = self.disjunction()?;
        if *self.peek() != Tok::End {
            return self.fail("unexpected trailing input");
        }
        Ok(Formula { node, vars: self.vars })
    }

    fn disjunction(&mut self) -> Result<Node> {
        let mut node = self.conjunction()?;
        while self.eat("|") {
            node = Node::or(node, self.conjunction()?);
        }
        Ok(node)
    }

    fn conjunction(&mut self) -> Result<Node> {
        let mut node = self.term()?;
        while self.eat("&") {
            node = Node::and(node, self.term()?);
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Node> {
        if self.eat("!") {
            return Ok(Node::not(self.term()?));
        }
        if *self.peek() == Tok::Sym("(") {
            self.bump();
            let node = self.disjunction()?;
            self.expect(")")?;
            return Ok(node);
        }
        self.atom()
    }

    fn integer(&mut self) -> Result<i64> {
        let neg = self.eat("-");
        match self.bump() {
            Tok::Int(n) => Ok(if neg { -n } else { n }),
            _ => {
                self.at -= 1;
                self.fail("expected integer")
            }
        }
    }

    fn summand(&mut self, sign: i64, coeffs: &mut BTreeMap<String, i64>) -> Result<()> {
        let mut factor = 1;
        if let Tok::Int(n) = *self.peek() {
            if matches!(self.peek2(), Tok::Ident(_) | Tok::Sym("*")) {
                factor = n;
                self.bump();
                self.eat("*");
            }
        }
        match self.bump() {
            Tok::Ident(x) if x != "mod" => {
                if !self.vars.contains(&x) {
                    self.vars.push(x.clone());
                }
                *coeffs.entry(x).or_insert(0) += sign * factor;
                Ok(())
            }
            _ => {
                self.at -= 1;
                self.fail("expected variable")
            }
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let mut coeffs = BTreeMap::new();
        let sign = if self.eat("-") { -1 } else { 1 };
        self.summand(sign, &mut coeffs)?;
        loop {
            if self.eat("+") {
                self.summand(1, &mut coeffs)?;
            } else if self.eat("-") {
                self.summand(-1, &mut coeffs)?;
            } else {
                break;
            }
        }
        let rel = match self.peek() {
            Tok::Sym(s @ (">" | ">=" | "=")) => *s,
            _ => return self.fail("expected `>`, `>=` or `=`"),
        };
        self.bump();
        let k = self.integer()?;
        let modulus = if *self.peek() == Tok::Sym("(") && *self.peek2() == Tok::Ident("mod".into()) {
            self.bump();
            self.bump();
            let mpos = self.pos();
            let m = self.integer()?;
            self.expect(")")?;
            if m < 2 {
                return Err(Error::Parse { position: mpos, message: format!("modulus must be at least 2, got {m}") });
            }
            Some(m)
        } else {
            None
        };
        let atom = match (rel, modulus) {
            (">", None) => Atom::threshold(coeffs, k),
            (">=", None) => Atom::threshold(coeffs, k - 1),
            (">", Some(m)) => Atom::mod_threshold(coeffs, k + 1, m)?,
            (">=", Some(m)) => Atom::mod_threshold(coeffs, k, m)?,
            ("=", Some(m)) => Atom::remainder(coeffs, k, m)?,
            _ => return self.fail("`=` requires a `(mod m)` suffix"),
        };
        Ok(Node::Atom(atom))
    }
}

fn match_sym(s: &str) -> &'static str {
    match s {
        ">=" => ">=",
        ">" => ">",
        "=" => "=",
        "+" => "+",
        "-" => "-",
        "*" => "*",
        "(" => "(",
        ")" => ")",
        "&" => "&",
        "|" => "|",
        "!" => "!",
        _ => "",
    }
}
