use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{invalid, Result};

/// Which sub-network a parameter set belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Encoder,
    Classifier,
    Discriminator,
}

/// Named parameters of one sub-network.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    role: Role,
    params: BTreeMap<String, Tensor>,
}

pub type ParamGrads = BTreeMap<String, Tensor>;

impl ParamSet {
    pub fn new(role: Role) -> Self {
        Self {
            role,
            params: BTreeMap::new(),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn insert(&mut self, id: impl Into<String>, value: Tensor) -> Result<()> {
        let id = id.into();
        if self.params.contains_key(&id) {
            return invalid(format!(
                "duplicate parameter id `{id}` in {:?} set",
                self.role
            ));
        }
        self.params.insert(id, value);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Tensor> {
        self.params.get(id)
    }

    pub(crate) fn get_mut(&mut self, id: &str) -> Option<&mut Tensor> {
        self.params.get_mut(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.params.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_values(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let mut s = ParamSet::new(Role::Encoder);
        s.insert("w", Tensor::zeros(&[2])).unwrap();
        assert!(s.insert("w", Tensor::zeros(&[3])).is_err());
        assert_eq!(s.num_values(), 2);
        assert_eq!(s.role(), Role::Encoder);
    }
}
