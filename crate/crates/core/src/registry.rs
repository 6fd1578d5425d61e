//! Name-keyed registry of interchangeable strategies.
//!
//! Integrators and control operators are both looked up through a
//! [`Registry`] so that configuration files and the CLI can select them by
//! name at runtime.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Anything that can be stored in a [`Registry`].
pub trait Named {
    fn name(&self) -> &'static str;
}

pub struct Registry<T: ?Sized + Named> {
    kind: &'static str,
    entries: Vec<Arc<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers a strategy, replacing any previous entry with the same name.
    pub fn register(&mut self, entry: Arc<T>) -> &mut Self {
        self.entries.retain(|e| e.name() != entry.name());
        self.entries.push(entry);
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct A;
    struct B;
    trait Thing: Named {}
    impl Named for A {
        fn name(&self) -> &'static str {
            "a"
        }
    }
    impl Named for B {
        fn name(&self) -> &'static str {
            "b"
        }
    }
    impl Thing for A {}
    impl Thing for B {}

    #[test]
    fn lookup_by_name() {
        let mut reg: Registry<dyn Thing> = Registry::new("thing");
        reg.register(Arc::new(A)).register(Arc::new(B));
        assert_eq!(reg.get("b").unwrap().name(), "b");
        assert_eq!(reg.names(), vec!["a", "b"]);
        let err = reg.get("c").err().unwrap();
        assert!(err.to_string().contains("known: a, b"), "{err}");
    }

    #[test]
    fn reregistering_replaces() {
        let mut reg: Registry<dyn Thing> = Registry::new("thing");
        reg.register(Arc::new(A)).register(Arc::new(A));
        assert_eq!(reg.names().len(), 1);
    }
}
