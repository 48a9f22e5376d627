use super::value::Value;

/// Anything that maps variable names to values.
pub trait Scope {
    fn lookup(&self, name: &str) -> Option<&Value>;
}

/// Ordered bindings; lookup is right-biased, so a later binding of the same
/// name shadows an earlier one (`σ1 ∘ σ2` looks in σ2 first).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    entries: Vec<(String, Value)>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, v: Value) {
        self.entries.push((name.into(), v));
    }

    /// Overwrite the visible binding of `name`, or add one.
    pub fn set(&mut self, name: &str, v: Value) {
        match self.entries.iter_mut().rev().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = v,
            None => self.entries.push((name.to_string(), v)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.entries.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn compose(mut self, other: Substitution) -> Substitution {
        self.entries.extend(other.entries);
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in binding order, including shadowed ones.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), v))
    }
}

impl FromIterator<(String, Value)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Substitution {
            entries: iter.into_iter().collect(),
        }
    }
}

impl Scope for Substitution {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.get(name)
    }
}

/// `inner` layered over `outer`.
pub struct Layered<'a> {
    pub outer: &'a dyn Scope,
    pub inner: &'a dyn Scope,
}

impl Scope for Layered<'_> {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.inner.lookup(name).or_else(|| self.outer.lookup(name))
    }
}
