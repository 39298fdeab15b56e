//! Named arrays of doubles: the in-memory form of a checkpoint.

use std::collections::HashMap;

use crate::diffcore::{AdamState, Layer, Mlp, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StateError {
    #[error("missing entry `{0}`")]
    Missing(String),
    #[error("entry `{name}` has shape {got:?}, expected {expected:?}")]
    Shape {
        name: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("entry `{0}` holds an invalid value")]
    Invalid(String),
    #[error("duplicate entry `{0}`")]
    Duplicate(String),
}

/// Ordered collection of named arrays with lookup by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateDict {
    entries: Vec<NamedArray>,
    index: HashMap<String, usize>,
}

impl StateDict {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[NamedArray] {
        &self.entries
    }

    pub fn insert(&mut self, entry: NamedArray) -> Result<(), StateError> {
        if self.index.contains_key(&entry.name) {
            return Err(StateError::Duplicate(entry.name));
        }
        self.index.insert(entry.name.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    /// Adds an entry; names are chosen by the saver and must be unique.
    pub fn put(&mut self, name: impl Into<String>, rows: usize, cols: usize, data: Vec<f64>) {
        debug_assert_eq!(rows * cols, data.len());
        let name = name.into();
        self.insert(NamedArray {
            name: name.clone(),
            rows,
            cols,
            data,
        })
        .unwrap_or_else(|_| panic!("state entry `{name}` saved twice"));
    }

    pub fn put_vec(&mut self, name: impl Into<String>, data: Vec<f64>) {
        let n = data.len();
        self.put(name, 1, n, data);
    }

    pub fn put_scalar(&mut self, name: impl Into<String>, value: f64) {
        self.put(name, 1, 1, vec![value]);
    }

    pub fn get(&self, name: &str) -> Result<&NamedArray, StateError> {
        self.index
            .get(name)
            .map(|&i| &self.entries[i])
            .ok_or_else(|| StateError::Missing(name.to_string()))
    }

    pub fn get_shaped(&self, name: &str, rows: usize, cols: usize) -> Result<&[f64], StateError> {
        let e = self.get(name)?;
        if (e.rows, e.cols) != (rows, cols) {
            return Err(StateError::Shape {
                name: name.to_string(),
                expected: (rows, cols),
                got: (e.rows, e.cols),
            });
        }
        Ok(&e.data)
    }

    pub fn get_vec(&self, name: &str, len: usize) -> Result<&[f64], StateError> {
        self.get_shaped(name, 1, len)
    }

    pub fn get_scalar(&self, name: &str) -> Result<f64, StateError> {
        Ok(self.get_shaped(name, 1, 1)?[0])
    }
}

/// Types whose full state round-trips through a [`StateDict`].
pub trait Persist {
    fn save(&self, prefix: &str, out: &mut StateDict);
    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError>;
}

impl Persist for Mlp {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        for (i, l) in self.layers().iter().enumerate() {
            let (r, c) = l.weight.shape();
            out.put(format!("{prefix}.{i}.weight"), r, c, l.weight.data().to_vec());
            out.put_vec(format!("{prefix}.{i}.bias"), l.bias.data().to_vec());
        }
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        let mut layers: Vec<Layer> = Vec::with_capacity(self.layers().len());
        for (i, l) in self.layers().iter().enumerate() {
            let (r, c) = l.weight.shape();
            let wname = format!("{prefix}.{i}.weight");
            let w = src.get_shaped(&wname, r, c)?;
            let b = src.get_vec(&format!("{prefix}.{i}.bias"), r)?;
            layers.push(Layer {
                weight: Tensor::new(r, c, w.to_vec()).expect("shape checked"),
                bias: Tensor::new(1, r, b.to_vec()).expect("shape checked"),
                activation: l.activation,
            });
        }
        let flat: Vec<f64> = layers
            .iter()
            .flat_map(|l| l.weight.data().iter().chain(l.bias.data()).copied())
            .collect();
        self.set_flat(&flat)
            .map_err(|_| StateError::Invalid(prefix.to_string()))
    }
}

impl Persist for AdamState {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        out.put_vec(format!("{prefix}.m"), self.m.clone());
        out.put_vec(format!("{prefix}.v"), self.v.clone());
        out.put_vec(
            format!("{prefix}.hyper"),
            vec![self.t as f64, self.beta1, self.beta2, self.eps],
        );
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        let n = self.m.len();
        let m = src.get_vec(&format!("{prefix}.m"), n)?.to_vec();
        let v = src.get_vec(&format!("{prefix}.v"), n)?.to_vec();
        let hyper = src.get_vec(&format!("{prefix}.hyper"), 4)?;
        if hyper[0] < 0.0 || v.iter().any(|x| *x < 0.0) {
            return Err(StateError::Invalid(prefix.to_string()));
        }
        self.m = m;
        self.v = v;
        self.t = hyper[0] as u64;
        self.beta1 = hyper[1];
        self.beta2 = hyper[2];
        self.eps = hyper[3];
        Ok(())
    }
}
