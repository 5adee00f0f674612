//! Layer parameter containers.

use crate::activation::ActivationKind;
use crate::autodiff::{upper_triangle_index, upper_triangle_len};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// The graph filter slot of a convolution layer: either a packed trainable
/// upper triangle (mirrored into a symmetric matrix on every forward pass)
/// or a frozen pre-built matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterParam {
    /// 1 x n(n+1)/2 packed upper triangle; trainable.
    Ddgf { n: usize, theta: Tensor },
    /// Frozen N x N filter; never updated by the optimizer.
    Fixed(Tensor),
}

impl FilterParam {
    pub fn n(&self) -> usize {
        match self {
            FilterParam::Ddgf { n, .. } => *n,
            FilterParam::Fixed(t) => t.rows(),
        }
    }

    /// The filter as a dense symmetric matrix.
    pub fn materialize(&self) -> Result<Tensor> {
        match self {
            FilterParam::Ddgf { n, theta } => materialize_filter(theta, *n),
            FilterParam::Fixed(t) => Ok(t.clone()),
        }
    }
}

/// Mirror a packed upper triangle into a full symmetric matrix. Symmetry is
/// structural: entry (i, j) and (j, i) are the same stored value.
pub fn materialize_filter(theta: &Tensor, n: usize) -> Result<Tensor> {
    let expect = upper_triangle_len(n);
    if theta.rows() != 1 || theta.cols() != expect {
        return Err(Error::Contract(format!(
            "filter parameter must be 1x{expect} for n={n}, got {}x{}",
            theta.rows(),
            theta.cols()
        )));
    }
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = theta.get(0, upper_triangle_index(i, j, n));
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

/// Pack a symmetric matrix back into its upper triangle row.
pub fn pack_upper(matrix: &Tensor) -> Result<Tensor> {
    if matrix.rows() != matrix.cols() {
        return Err(Error::Contract("pack_upper expects a square matrix".into()));
    }
    let n = matrix.rows();
    let mut theta = Tensor::zeros(1, upper_triangle_len(n));
    for i in 0..n {
        for j in i..n {
            theta.set(0, upper_triangle_index(i, j, n), matrix.get(i, j));
        }
    }
    Ok(theta)
}

/// One graph-convolution + feedforward layer: out = act(filter · h · W + b).
#[derive(Debug, Clone, PartialEq)]
pub struct GcnnLayerParams {
    pub filter: FilterParam,
    /// C_in x C_out feedforward weights.
    pub weight: Tensor,
    /// 1 x C_out bias row, broadcast over stations.
    pub bias: Tensor,
    pub activation: ActivationKind,
}

impl GcnnLayerParams {
    pub fn in_width(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_width(&self) -> usize {
        self.weight.cols()
    }
}

/// Final dense projection of the recurrent nets.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weight: Tensor,
    pub bias: Tensor,
}
