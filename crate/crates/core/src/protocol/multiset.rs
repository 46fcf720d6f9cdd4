use std::fmt;

/// Finite multiset stored as a sorted vector of `(element, count)` pairs with
/// positive counts. Two multisets are equal iff their canonical vectors are.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset<S> {
    items: Vec<(S, u32)>,
}

impl<S> Default for Multiset<S> {
    fn default() -> Self {
        Multiset { items: Vec::new() }
    }
}

impl<S: Ord + Clone> Multiset<S> {
    pub fn new() -> Self {
        Multiset { items: Vec::new() }
    }

    pub fn from_elems<I: IntoIterator<Item = S>>(elems: I) -> Self {
        let mut v: Vec<S> = elems.into_iter().collect();
        v.sort();
        let mut items: Vec<(S, u32)> = Vec::with_capacity(v.len());
        for s in v {
            match items.last_mut() {
                Some((last, n)) if *last == s => *n += 1,
                _ => items.push((s, 1)),
            }
        }
        Multiset { items }
    }

    pub fn from_counts<I: IntoIterator<Item = (S, u32)>>(counts: I) -> Self {
        let mut m = Multiset::new();
        for (s, n) in counts {
            m.insert(s, n);
        }
        m
    }

    pub fn items(&self) -> &[(S, u32)] {
        &self.items
    }

    pub fn len_support(&self) -> usize {
        self.items.len()
    }

    pub fn size(&self) -> u64 {
        self.items.iter().map(|(_, n)| *n as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn count(&self, s: &S) -> u32 {
        match self.items.binary_search_by(|(x, _)| x.cmp(s)) {
            Ok(i) => self.items[i].1,
            Err(_) => 0,
        }
    }

    pub fn support(&self) -> impl Iterator<Item = &S> {
        self.items.iter().map(|(s, _)| s)
    }

    /// Elements with repetition, in sorted order.
    pub fn elems(&self) -> impl Iterator<Item = &S> {
        self.items.iter().flat_map(|(s, n)| std::iter::repeat_n(s, *n as usize))
    }

    pub fn insert(&mut self, s: S, n: u32) {
        if n == 0 {
            return;
        }
        match self.items.binary_search_by(|(x, _)| x.cmp(&s)) {
            Ok(i) => self.items[i].1 += n,
            Err(i) => self.items.insert(i, (s, n)),
        }
    }

    /// Removes `n` copies of `s`; returns false (leaving `self` unchanged) if
    /// fewer than `n` are present.
    pub fn remove(&mut self, s: &S, n: u32) -> bool {
        if n == 0 {
            return true;
        }
        match self.items.binary_search_by(|(x, _)| x.cmp(s)) {
            Ok(i) if self.items[i].1 >= n => {
                self.items[i].1 -= n;
                if self.items[i].1 == 0 {
                    self.items.remove(i);
                }
                true
            }
            _ => false,
        }
    }

    /// `self >= other` pointwise.
    pub fn contains(&self, other: &Multiset<S>) -> bool {
        other.items.iter().all(|(s, n)| self.count(s) >= *n)
    }

    pub fn add(&mut self, other: &Multiset<S>) {
        for (s, n) in &other.items {
            self.insert(s.clone(), *n);
        }
    }

    /// Subtracts `other`; returns false and leaves `self` untouched if
    /// `other` is not contained.
    pub fn subtract(&mut self, other: &Multiset<S>) -> bool {
        if !self.contains(other) {
            return false;
        }
        for (s, n) in &other.items {
            self.remove(s, *n);
        }
        true
    }

    pub fn map<T: Ord + Clone>(&self, mut f: impl FnMut(&S) -> T) -> Multiset<T> {
        Multiset::from_counts(self.items.iter().map(|(s, n)| (f(s), *n)))
    }
}

impl<S: fmt::Debug> fmt::Debug for Multiset<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (s, n)) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if *n == 1 {
                write!(f, "{s:?}")?;
            } else {
                write!(f, "{n}·{s:?}")?;
            }
        }
        f.write_str("}")
    }
}
