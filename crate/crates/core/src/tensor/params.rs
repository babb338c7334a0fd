use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng;

pub type Matrix = Array2<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

/// Named parameter tensors. Vectors are stored as `1 x n` matrices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Matrix>,
    index: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a tensor. Panics on a duplicate name.
    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        let id = ParamId(self.values.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.values.push(value);
        id
    }

    /// Registers a tensor drawn uniformly from `[-scale, scale]`.
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        shape: (usize, usize),
        scale: f64,
        rng: &mut R,
    ) -> ParamId {
        let value = Matrix::from_shape_fn(shape, |_| rng.gen_range(-scale..=scale));
        self.add(name, value)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, shape: (usize, usize)) -> ParamId {
        self.add(name, Matrix::zeros(shape))
    }

    pub fn add_ones(&mut self, name: impl Into<String>, shape: (usize, usize)) -> ParamId {
        self.add(name, Matrix::ones(shape))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Matrix)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }
}

/// Gradients with respect to the tensors of a [`ParamStore`].
#[derive(Clone, Debug, Default)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub(crate) fn new(n: usize) -> Self {
        Gradients {
            grads: vec![None; n],
        }
    }

    pub(crate) fn accumulate(&mut self, id: ParamId, g: &Matrix, shape: (usize, usize)) {
        let slot = &mut self.grads[id.0];
        match slot {
            Some(acc) => *acc += g,
            None => {
                debug_assert_eq!(g.dim(), shape);
                *slot = Some(g.clone());
            }
        }
    }

    pub(crate) fn slot_mut(&mut self, id: ParamId, shape: (usize, usize)) -> &mut Matrix {
        self.grads[id.0].get_or_insert_with(|| Matrix::zeros(shape))
    }

    /// Gradient of `id`, or `None` when the tensor did not take part.
    pub fn get(&self, id: ParamId) -> Option<&Matrix> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix)> {
        self.grads
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (ParamId(i), g)))
    }

    /// Adds `other` into `self`.
    pub fn merge(&mut self, other: Gradients) {
        if self.grads.len() < other.grads.len() {
            self.grads.resize(other.grads.len(), None);
        }
        for (slot, g) in self.grads.iter_mut().zip(other.grads) {
            match (slot.as_mut(), g) {
                (Some(acc), Some(g)) => *acc += &g,
                (None, Some(g)) => *slot = Some(g),
                _ => {}
            }
        }
    }
}
