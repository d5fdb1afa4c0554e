//! Name-keyed registries of strategy trait objects.
//!
//! Every interchangeable algorithm in the crate (P-value definitions, GLM fitting
//! principles, nested-model statistics) implements [`Named`] and is looked up
//! by that name at runtime, e.g. from a CLI flag or a simulation config.

use crate::error::{Error, Result};

pub trait Named {
    /// Registry key; lowercase, as typed on the command line.
    fn name(&self) -> &'static str;
}

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn empty(kind: &'static str) -> Self {
        Self { kind, entries: Vec::new() }
    }

    /// Adds a strategy, replacing any earlier one of the same name.
    pub fn register(&mut self, strategy: Box<T>) -> &mut Self {
        if let Some(slot) = self.entries.iter_mut().find(|e| e.name() == strategy.name()) {
            *slot = strategy;
        } else {
            self.entries.push(strategy);
        }
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy { kind: self.kind, name: name.to_string() })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}
