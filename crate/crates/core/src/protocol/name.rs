use std::fmt;

/// Structured state name: a constructor head with integer or nested-name
/// arguments, rendered as `Head(arg,arg,...)`.
///
/// Heads never contain parentheses or commas and never start with a digit or
/// a minus sign, so the rendering is injective.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    pub head: String,
    pub args: Vec<Part>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Int(i64),
    Name(Name),
}

impl Name {
    pub fn atom(head: impl Into<String>) -> Name {
        let head = head.into();
        debug_assert!(valid_head(&head), "bad head {head:?}");
        Name { head, args: Vec::new() }
    }

    pub fn int(mut self, n: i64) -> Name {
        self.args.push(Part::Int(n));
        self
    }

    pub fn name(mut self, n: Name) -> Name {
        self.args.push(Part::Name(n));
        self
    }

    /// Argument that is already rendered (a state name or a variable).
    pub fn raw(mut self, rendered: &str) -> Name {
        self.args.push(Part::Name(Name { head: rendered.to_string(), args: Vec::new() }));
        self
    }
}

pub fn valid_head(h: &str) -> bool {
    !h.is_empty()
        && !h.contains(['(', ')', ','])
        && !h.starts_with(|c: char| c.is_ascii_digit() || c == '-')
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.head)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                match a {
                    Part::Int(n) => write!(f, "{n}")?,
                    Part::Name(n) => write!(f, "{n}")?,
                }
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl From<Name> for String {
    fn from(n: Name) -> String {
        n.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_name() -> impl Strategy<Value = Name> {
        let leaf = "[a-z][a-z0-9_^]{0,3}".prop_map(Name::atom);
        leaf.prop_recursive(3, 16, 3, |inner| {
            ("[A-Z][a-z]{0,2}", prop::collection::vec(prop_oneof![any::<i8>().prop_map(|n| Part::Int(n as i64)), inner.prop_map(Part::Name)], 0..3))
                .prop_map(|(head, args)| Name { head, args })
        })
    }

    proptest! {
        #[test]
        fn rendering_is_injective(a in arb_name(), b in arb_name()) {
            prop_assert_eq!(a == b, a.to_string() == b.to_string());
        }
    }

    #[test]
    fn renders() {
        let n = Name::atom("N").raw("x").int(-4);
        assert_eq!(n.to_string(), "N(x,-4)");
    }
}
