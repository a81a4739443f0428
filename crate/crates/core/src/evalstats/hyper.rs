use serde::{Deserialize, Serialize};

/// One named hyperparameter coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisValue {
    pub name: String,
    pub value: f64,
}

/// An ordered point `θ` of the hyperparameter grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperparamConfig {
    axes: Vec<AxisValue>,
}

impl HyperparamConfig {
    pub fn new(axes: Vec<AxisValue>) -> Self {
        Self { axes }
    }

    /// Builder-style: appends or overwrites `name`.
    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        match self.axes.iter_mut().find(|a| a.name == name) {
            Some(a) => a.value = value,
            None => self.axes.push(AxisValue { name: name.to_string(), value }),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.axes.iter().find(|a| a.name == name).map(|a| a.value)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.axes.iter().map(|a| a.name.as_str())
    }

    pub fn axes(&self) -> &[AxisValue] {
        &self.axes
    }

    /// Values of every axis except `skip`, bit-encoded for use as a grouping key.
    pub(crate) fn key_without(&self, skip: &str) -> Vec<(String, u64)> {
        self.axes
            .iter()
            .filter(|a| a.name != skip)
            .map(|a| (a.name.clone(), a.value.to_bits()))
            .collect()
    }
}
