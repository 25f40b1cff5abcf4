//! The three Q-heads `q = W1·ReLU(W2·[inputs])` (row-vector form `ReLU(x·W2)·W1`).
//!
//! Input layouts, with `d` the embedding width:
//! - q1: `[e(s) (2d) ∥ e(a1) (d)]`
//! - q2: `[e(s) ∥ e(a1) ∥ e(a2)]`
//! - q3: `[e(s) ∥ e(a1) ∥ e(label a3)]`

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, glorot_init_with, DenseMatrix, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Head {
    Q1,
    Q2,
    Q3,
}

impl Head {
    pub const ALL: [Head; 3] = [Head::Q1, Head::Q2, Head::Q3];

    pub fn w2(self) -> &'static str {
        match self {
            Head::Q1 => "q1.w2",
            Head::Q2 => "q2.w2",
            Head::Q3 => "q3.w2",
        }
    }

    pub fn w1(self) -> &'static str {
        match self {
            Head::Q1 => "q1.w1",
            Head::Q2 => "q2.w1",
            Head::Q3 => "q3.w1",
        }
    }

    /// Input width in multiples of `d`.
    pub fn input_blocks(self) -> usize {
        match self {
            Head::Q1 => 3,
            Head::Q2 | Head::Q3 => 4,
        }
    }
}

pub fn init_heads<R: Rng + ?Sized>(params: &mut ParamSet, dim: usize, hidden: usize, rng: &mut R) {
    for head in Head::ALL {
        params.insert(head.w2(), glorot_init_with(head.input_blocks() * dim, hidden, rng));
        params.insert(head.w1(), glorot_init_with(hidden, 1, rng));
    }
}

/// `out += seg · W2[offset .. offset + len(seg)]`
pub(crate) fn add_segment(out: &mut [f64], w2: &DenseMatrix, offset: usize, seg: &[f64]) {
    for (k, &x) in seg.iter().enumerate() {
        if x != 0.0 {
            axpy(out, x, w2.row(offset + k));
        }
    }
}

/// `Σ_j ReLU(pre_j)·W1_j`
pub(crate) fn finish(pre: &[f64], w1: &DenseMatrix) -> f64 {
    pre.iter()
        .zip(w1.data())
        .map(|(&p, &w)| if p > 0.0 { p * w } else { 0.0 })
        .sum()
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// Score of `head` on an explicit input vector.
pub fn head_score(head: Head, input: &[f64], params: &ParamSet) -> Result<f64> {
    let w2 = params.get(head.w2());
    if input.len() != w2.rows() {
        return Err(Error::Shape {
            op: "q-head input",
            left: (1, input.len()),
            right: w2.shape(),
        });
    }
    let mut pre = vec![0.0; w2.cols()];
    add_segment(&mut pre, w2, 0, input);
    Ok(finish(&pre, params.get(head.w1())))
}

/// Accumulates `dq · ∂q/∂θ` into the head's gradient buffers and returns `dq · ∂q/∂input`.
pub fn head_backward(head: Head, input: &[f64], dq: f64, params: &mut ParamSet) -> Result<Vec<f64>> {
    let w2 = params.get(head.w2()).clone();
    let w1 = params.get(head.w1()).clone();
    if input.len() != w2.rows() {
        return Err(Error::Shape {
            op: "q-head input",
            left: (1, input.len()),
            right: w2.shape(),
        });
    }
    let mut g2 = DenseMatrix::zeros(w2.rows(), w2.cols());
    let mut g1 = DenseMatrix::zeros(w1.rows(), 1);
    let d_input = head_backward_into(&w2, &w1, input, dq, &mut g2, &mut g1);
    params.accumulate_grad(head.w2(), &g2)?;
    params.accumulate_grad(head.w1(), &g1)?;
    Ok(d_input)
}

/// Backward pass writing weight gradients into `g2`/`g1`.
pub(crate) fn head_backward_into(
    w2: &DenseMatrix,
    w1: &DenseMatrix,
    input: &[f64],
    dq: f64,
    g2: &mut DenseMatrix,
    g1: &mut DenseMatrix,
) -> Vec<f64> {
    let mut pre = vec![0.0; w2.cols()];
    add_segment(&mut pre, w2, 0, input);
    let d_pre: Vec<f64> = pre
        .iter()
        .zip(w1.data())
        .map(|(&p, &w)| if p > 0.0 { dq * w } else { 0.0 })
        .collect();
    for (g, &p) in g1.data_mut().iter_mut().zip(&pre) {
        if p > 0.0 {
            *g += dq * p;
        }
    }
    for (i, &x) in input.iter().enumerate() {
        if x != 0.0 {
            axpy(g2.row_mut(i), x, &d_pre);
        }
    }
    (0..input.len()).map(|i| dot(w2.row(i), &d_pre)).collect()
}

fn check_width(what: &'static str, v: &[f64], want: usize) -> Result<()> {
    if v.len() != want {
        return Err(Error::Shape {
            op: what,
            left: (1, v.len()),
            right: (1, want),
        });
    }
    Ok(())
}

fn dim_of(params: &ParamSet) -> usize {
    params.get(Head::Q1.w2()).rows() / Head::Q1.input_blocks()
}

pub fn q1_score(state_vec: &[f64], node_vec: &[f64], params: &ParamSet) -> Result<f64> {
    let d = dim_of(params);
    check_width("q1 state vector", state_vec, 2 * d)?;
    check_width("q1 node vector", node_vec, d)?;
    head_score(Head::Q1, &concat(&[state_vec, node_vec]), params)
}

pub fn q2_score(state_vec: &[f64], node1_vec: &[f64], node2_vec: &[f64], params: &ParamSet) -> Result<f64> {
    let d = dim_of(params);
    check_width("q2 state vector", state_vec, 2 * d)?;
    check_width("q2 first node vector", node1_vec, d)?;
    check_width("q2 second node vector", node2_vec, d)?;
    head_score(Head::Q2, &concat(&[state_vec, node1_vec, node2_vec]), params)
}

pub fn q3_score(state_vec: &[f64], node1_vec: &[f64], label_vec: &[f64], params: &ParamSet) -> Result<f64> {
    let d = dim_of(params);
    check_width("q3 state vector", state_vec, 2 * d)?;
    check_width("q3 node vector", node1_vec, d)?;
    check_width("q3 label vector", label_vec, d)?;
    head_score(Head::Q3, &concat(&[state_vec, node1_vec, label_vec]), params)
}
