use super::gemm::{matmul, matmul_a_bt, matmul_at_b};
use super::Tensor;
use crate::error::{Error, Result};

/// `y[N×U] = x[N×D] · W[D×U] + b[U]`
pub fn dense_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n, d) = input.dims2()?;
    let (wd, u) = weight.dims2()?;
    if wd != d || bias.len() != u {
        return Err(Error::invalid(format!(
            "dense layer {wd}->{u} (bias {}) applied to {d} features",
            bias.len()
        )));
    }
    let mut out = Tensor::zeros(&[n, u]);
    for row in out.data_mut().chunks_exact_mut(u) {
        row.copy_from_slice(bias.data());
    }
    matmul(n, d, u, input.data(), weight.data(), 1.0, out.data_mut());
    Ok(out)
}

pub struct DenseGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

pub fn dense_backward(grad_out: &Tensor, input: &Tensor, weight: &Tensor) -> Result<DenseGrads> {
    let (n, d) = input.dims2()?;
    let (_, u) = weight.dims2()?;
    if grad_out.shape() != [n, u] {
        return Err(Error::invalid("dense gradient shape does not match forward output"));
    }
    let mut g_in = Tensor::zeros(&[n, d]);
    matmul_a_bt(n, u, d, grad_out.data(), weight.data(), 0.0, g_in.data_mut());
    let mut g_w = Tensor::zeros(&[d, u]);
    matmul_at_b(d, n, u, input.data(), grad_out.data(), 0.0, g_w.data_mut());
    let mut g_b = Tensor::zeros(&[u]);
    for row in grad_out.data().chunks_exact(u) {
        for (b, g) in g_b.data_mut().iter_mut().zip(row) {
            *b += g;
        }
    }
    Ok(DenseGrads {
        input: g_in,
        weight: g_w,
        bias: g_b,
    })
}
