//! The canonical LSTM cell.
//!
//! Gates use the standard recurrence with sigmoid gate activations and tanh
//! candidate/output squashing:
//!
//! ```text
//! f = sigmoid(x W_f + h R_f + b_f)      i = sigmoid(x W_i + h R_i + b_i)
//! o = sigmoid(x W_o + h R_o + b_o)      g = tanh   (x W_g + h R_g + b_g)
//! c' = f ⊙ c + i ⊙ g                    h' = o ⊙ tanh(c')
//! ```
//!
//! Rows are independent sequences, so one call advances every station at
//! once.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    pub w_f: Tensor,
    pub w_i: Tensor,
    pub w_o: Tensor,
    pub w_g: Tensor,
    pub r_f: Tensor,
    pub r_i: Tensor,
    pub r_o: Tensor,
    pub r_g: Tensor,
    /// 1 x U bias rows.
    pub b_f: Tensor,
    pub b_i: Tensor,
    pub b_o: Tensor,
    pub b_g: Tensor,
}

impl LstmCellParams {
    pub fn input_width(&self) -> usize {
        self.w_f.rows()
    }

    pub fn hidden_width(&self) -> usize {
        self.w_f.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.input_width();
        let u = self.hidden_width();
        let inputs = [&self.w_f, &self.w_i, &self.w_o, &self.w_g];
        let recurrents = [&self.r_f, &self.r_i, &self.r_o, &self.r_g];
        let biases = [&self.b_f, &self.b_i, &self.b_o, &self.b_g];
        if inputs.iter().any(|t| t.shape() != (f, u))
            || recurrents.iter().any(|t| t.shape() != (u, u))
            || biases.iter().any(|t| t.shape() != (1, u))
        {
            return Err(Error::Contract("inconsistent LSTM parameter shapes".into()));
        }
        Ok(())
    }
}

fn gate(
    x: &Tensor,
    h: &Tensor,
    w: &Tensor,
    r: &Tensor,
    b: &Tensor,
    act: ActivationKind,
) -> Result<Tensor> {
    let mut z = x.matmul(w)?.add(&h.matmul(r)?)?;
    // Broadcast the 1 x U bias over rows.
    let u = b.cols();
    for row in 0..z.rows() {
        for col in 0..u {
            z.set(row, col, z.get(row, col) + b.get(0, col));
        }
    }
    Ok(z.map(|v| act.apply(v)))
}

/// Advance the cell one step. `x_t` is N x F, `h` and `c` are N x U; returns
/// the new `(h, c)`.
pub fn lstm_step(
    cell: &LstmCellParams,
    x_t: &Tensor,
    h: &Tensor,
    c: &Tensor,
) -> Result<(Tensor, Tensor)> {
    cell.validate()?;
    let n = x_t.rows();
    let u = cell.hidden_width();
    if x_t.cols() != cell.input_width() || h.shape() != (n, u) || c.shape() != (n, u) {
        return Err(Error::ShapeMismatch {
            op: "lstm_step",
            lhs_rows: x_t.rows(),
            lhs_cols: x_t.cols(),
            rhs_rows: h.rows(),
            rhs_cols: h.cols(),
        });
    }
    let f = gate(
        x_t,
        h,
        &cell.w_f,
        &cell.r_f,
        &cell.b_f,
        ActivationKind::Sigmoid,
    )?;
    let i = gate(
        x_t,
        h,
        &cell.w_i,
        &cell.r_i,
        &cell.b_i,
        ActivationKind::Sigmoid,
    )?;
    let o = gate(
        x_t,
        h,
        &cell.w_o,
        &cell.r_o,
        &cell.b_o,
        ActivationKind::Sigmoid,
    )?;
    let g = gate(
        x_t,
        h,
        &cell.w_g,
        &cell.r_g,
        &cell.b_g,
        ActivationKind::Tanh,
    )?;
    let c_next = f.hadamard(c)?.add(&i.hadamard(&g)?)?;
    let h_next = o.hadamard(&c_next.map(|v| v.tanh()))?;
    Ok((h_next, c_next))
}
