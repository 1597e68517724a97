use std::collections::BTreeMap;
use std::fmt;

use crate::{Error, Result};

/// Builds a boxed strategy from its configuration.
pub type Factory<C, T> = fn(&C) -> Result<Box<T>>;

/// Name-keyed table of strategy factories.
///
/// `C` is the configuration handed to every factory and `T` the (usually
/// unsized) strategy trait the factories produce.
pub struct Registry<C, T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<C, T>>,
}

impl<C, T: ?Sized> Registry<C, T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Adds or replaces the factory registered under `name`.
    pub fn register(&mut self, name: &'static str, factory: Factory<C, T>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn with(mut self, name: &'static str, factory: Factory<C, T>) -> Self {
        self.register(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn create(&self, name: &str, config: &C) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(factory) => factory(config),
            None => Err(Error::Config(format!(
                "unknown {} '{}' (available: {})",
                self.kind,
                name,
                self.names().join(", ")
            ))),
        }
    }
}

impl<C, T: ?Sized> fmt::Debug for Registry<C, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.names())
            .finish()
    }
}
