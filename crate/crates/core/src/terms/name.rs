use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;


static FRESH: AtomicU64 = AtomicU64::new(0);

/// An endpoint or atom identifier.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Name {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// A name never produced before in this process, rendered `base#n`.
    pub fn fresh(base: &str) -> Name {
        let n = FRESH.fetch_add(1, Ordering::Relaxed);
        Name::new(&format!("{}#{}", strip_suffix(base), n))
    }

    /// A fresh name derived from this one.
    pub fn refresh(&self) -> Name {
        Name::fresh(self.base())
    }

    /// The name without its fresh suffix.
    pub fn base(&self) -> &str {
        strip_suffix(&self.0)
    }

    /// `x` becomes `x'`.
    pub fn primed(&self) -> Name {
        Name::new(&format!("{}'", self.0))
    }
}

fn strip_suffix(s: &str) -> &str {
    match s.rfind('#') {
        Some(i) if i > 0 && s[i + 1..].chars().all(|c| c.is_ascii_digit()) => &s[..i],
        _ => s,
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::new(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_names_are_distinct_and_keep_base() {
        let a = Name::fresh("u");
        let b = Name::fresh("u");
        assert_ne!(a, b);
        assert_eq!(a.base(), "u");
        assert_eq!(a.refresh().base(), "u");
    }

    #[test]
    fn priming_appends_quote() {
        assert_eq!(Name::new("b1").primed().as_str(), "b1'");
        assert_eq!(Name::new("b1'").primed().as_str(), "b1''");
    }
}
