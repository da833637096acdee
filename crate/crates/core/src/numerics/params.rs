use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;
use std::collections::{BTreeMap, BTreeSet};

/// Named parameters with matching gradient buffers and a trainable mask.
/// BTreeMap keeps every iteration order deterministic.
#[derive(Debug, Clone)]
pub struct ParamSet {
    values: BTreeMap<String, Tensor>,
    grads: BTreeMap<String, Tensor>,
    trainable: BTreeSet<String>,
}

impl ParamSet {
    pub fn new() -> ParamSet {
        ParamSet {
            values: BTreeMap::new(),
            grads: BTreeMap::new(),
            trainable: BTreeSet::new(),
        }
    }

    /// Inserts a fresh parameter, trainable by default.
    pub fn insert(&mut self, name: &str, value: Tensor) -> Result<()> {
        if self.values.contains_key(name) {
            return Err(Error::bad_input("params", format!("duplicate parameter `{name}`")));
        }
        self.grads.insert(name.to_string(), Tensor::zeros(value.shape()));
        self.trainable.insert(name.to_string());
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.values.get(name).ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.values.get_mut(name).ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor> {
        self.grads.get(name).ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_grads(&mut self) {
        for g in self.grads.values_mut() {
            g.data_mut().fill(0.0);
        }
    }

    /// Adds externally computed gradients into the buffers. Unknown names
    /// and shape drift are both errors.
    pub fn accumulate_grads(&mut self, grads: &BTreeMap<String, Tensor>) -> Result<()> {
        for (name, g) in grads {
            let slot = self
                .grads
                .get_mut(name)
                .ok_or_else(|| Error::UnknownParam(name.clone()))?;
            slot.add_assign(g)?;
        }
        Ok(())
    }

    /// Replaces the trainable mask. Every name must exist.
    pub fn set_trainable<'a, I: IntoIterator<Item = &'a str>>(&mut self, names: I) -> Result<()> {
        let mut mask = BTreeSet::new();
        for name in names {
            if !self.values.contains_key(name) {
                return Err(Error::UnknownParam(name.to_string()));
            }
            mask.insert(name.to_string());
        }
        self.trainable = mask;
        Ok(())
    }

    pub fn trainable(&self) -> &BTreeSet<String> {
        &self.trainable
    }

    pub fn is_trainable(&self, name: &str) -> bool {
        self.trainable.contains(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}
