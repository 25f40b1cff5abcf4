use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Param {
    value: DenseMatrix,
    grad: DenseMatrix,
    m: DenseMatrix,
    v: DenseMatrix,
}

/// Named parameters with gradient buffers and Adam moments.
///
/// Iteration order is the lexicographic order of names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    params: BTreeMap<String, Param>,
    step: u64,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: DenseMatrix) {
        let (r, c) = value.shape();
        self.params.insert(
            name.into(),
            Param {
                value,
                grad: DenseMatrix::zeros(r, c),
                m: DenseMatrix::zeros(r, c),
                v: DenseMatrix::zeros(r, c),
            },
        );
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.values().map(|p| p.value.data().len()).sum()
    }

    /// Panics on unknown names; parameter names are fixed at construction.
    pub fn get(&self, name: &str) -> &DenseMatrix {
        &self.param(name).value
    }

    pub fn get_mut(&mut self, name: &str) -> &mut DenseMatrix {
        &mut self.param_mut(name).value
    }

    pub fn grad(&self, name: &str) -> &DenseMatrix {
        &self.param(name).grad
    }

    pub fn grad_mut(&mut self, name: &str) -> &mut DenseMatrix {
        &mut self.param_mut(name).grad
    }

    /// Adds `g` into the gradient buffer of `name`.
    pub fn accumulate_grad(&mut self, name: &str, g: &DenseMatrix) -> Result<()> {
        self.param_mut(name).grad.add_assign(g)
    }

    pub fn zero_grads(&mut self) {
        for p in self.params.values_mut() {
            p.grad.fill(0.0);
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Copies parameter values (not gradients or moments) from `other`.
    pub fn copy_values_from(&mut self, other: &ParamSet) {
        for (name, p) in &mut self.params {
            p.value = other.get(name).clone();
        }
    }

    /// One bias-corrected Adam update over every parameter; gradients are cleared afterwards.
    pub fn adam_step(&mut self, cfg: &AdamConfig) -> Result<()> {
        if let Some((name, _)) = self.params.iter().find(|(_, p)| !p.grad.is_finite()) {
            return Err(Error::NonFiniteGradient(name.clone()));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for p in self.params.values_mut() {
            let Param { value, grad, m, v } = p;
            for (((w, &g), mi), vi) in value
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
                *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
            grad.fill(0.0);
        }
        Ok(())
    }

    /// Text checkpoint: one header line `param <name> <rows> <cols>` followed by
    /// `rows` lines of tab-separated values, parameters in name order. Values use
    /// the shortest representation that round-trips exactly.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::from("# poisonlab-params v1\n");
        for (name, p) in &self.params {
            let (r, c) = p.value.shape();
            let _ = writeln!(out, "param {name} {r} {c}");
            for i in 0..r {
                let line: Vec<String> = p.value.row(i).iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&line.join("\t"));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str, source: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            file: source.to_path_buf(),
            line,
            msg,
        };
        let mut set = ParamSet::new();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((ln, line)) = lines.next() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "param" {
                return Err(parse_err(ln + 1, format!("expected `param <name> <rows> <cols>`, got `{line}`")));
            }
            let rows: usize = parts[2].parse().map_err(|e| parse_err(ln + 1, format!("{e}")))?;
            let cols: usize = parts[3].parse().map_err(|e| parse_err(ln + 1, format!("{e}")))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (rln, row) = lines
                    .next()
                    .ok_or_else(|| parse_err(ln + 1, format!("truncated parameter `{}`", parts[1])))?;
                let vals: std::result::Result<Vec<f64>, _> =
                    row.split('\t').filter(|s| !s.is_empty()).map(str::parse).collect();
                let vals = vals.map_err(|e| parse_err(rln + 1, format!("{e}")))?;
                if vals.len() != cols {
                    return Err(parse_err(rln + 1, format!("expected {cols} values, got {}", vals.len())));
                }
                data.extend(vals);
            }
            set.insert(parts[1], DenseMatrix::new(rows, cols, data)?);
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text, path)
    }

    /// Flat coordinate addressing used by the gradient checker.
    pub(crate) fn coordinates(&self) -> Vec<(String, usize)> {
        self.params
            .iter()
            .flat_map(|(n, p)| (0..p.value.data().len()).map(move |i| (n.clone(), i)))
            .collect()
    }

    fn param(&self, name: &str) -> &Param {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
    }

    fn param_mut(&mut self, name: &str) -> &mut Param {
        self.params
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
    }
}
