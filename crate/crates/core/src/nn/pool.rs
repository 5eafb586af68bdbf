use super::Tensor;
use crate::error::{Error, Result};

/// Output extent of a pooling window sweep; partial windows are dropped.
pub fn pooled_extent(extent: usize, pool: usize, stride: usize) -> usize {
    if extent < pool {
        0
    } else {
        (extent - pool) / stride + 1
    }
}

pub struct Pooled {
    pub output: Tensor,
    /// Flat input index of the maximum behind each output element.
    pub argmax: Vec<usize>,
}

/// Max pooling over NHWC input. Ties resolve to the first position in scan order.
pub fn maxpool_forward(input: &Tensor, pool: (usize, usize), stride: (usize, usize)) -> Result<Pooled> {
    let (n, h, w, c) = input.dims4()?;
    if pool.0 == 0 || pool.1 == 0 || stride.0 == 0 || stride.1 == 0 {
        return Err(Error::invalid("pool and stride extents must be positive"));
    }
    let (oh, ow) = (pooled_extent(h, pool.0, stride.0), pooled_extent(w, pool.1, stride.1));
    if oh == 0 || ow == 0 {
        return Err(Error::invalid(format!(
            "{h}x{w} input is smaller than the {}x{} pool",
            pool.0, pool.1
        )));
    }
    let mut output = Tensor::zeros(&[n, oh, ow, c]);
    let mut argmax = vec![0usize; n * oh * ow * c];
    let x = input.data();
    let out = output.data_mut();
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let o_base = ((b * oh + oy) * ow + ox) * c;
                for ch in 0..c {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for dy in 0..pool.0 {
                        let y = oy * stride.0 + dy;
                        for dx in 0..pool.1 {
                            let xx = ox * stride.1 + dx;
                            let idx = ((b * h + y) * w + xx) * c + ch;
                            if x[idx] > best {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    out[o_base + ch] = best;
                    argmax[o_base + ch] = best_idx;
                }
            }
        }
    }
    Ok(Pooled { output, argmax })
}

/// Routes each output gradient to the input position that won the max.
pub fn maxpool_backward(grad_out: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor> {
    if grad_out.len() != argmax.len() {
        return Err(Error::invalid("pool gradient does not match the recorded argmax"));
    }
    let mut grad = Tensor::zeros(input_shape);
    let g = grad.data_mut();
    for (&idx, &d) in argmax.iter().zip(grad_out.data()) {
        g[idx] += d;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_stays_constant() {
        let input = Tensor::filled(&[2, 9, 7, 3], -0.75);
        let p = maxpool_forward(&input, (3, 3), (3, 3)).unwrap();
        assert_eq!(p.output.shape(), &[2, 3, 2, 3]);
        assert!(p.output.data().iter().all(|&v| v == -0.75));
    }

    #[test]
    fn shape_chain_floor_division() {
        let mut dims = (430usize, 128usize);
        let mut seen = vec![];
        for _ in 0..3 {
            dims = (pooled_extent(dims.0, 3, 3), pooled_extent(dims.1, 3, 3));
            seen.push(dims);
        }
        assert_eq!(seen, vec![(143, 42), (47, 14), (15, 4)]);
    }

    #[test]
    fn backward_routes_to_argmax_only() {
        let data: Vec<f64> = (0..36).map(|i| ((i * 7) % 36) as f64).collect();
        let input = Tensor::from_vec(&[1, 6, 6, 1], data).unwrap();
        let p = maxpool_forward(&input, (3, 3), (3, 3)).unwrap();
        let g = maxpool_backward(&Tensor::filled(&[1, 2, 2, 1], 1.0), &p.argmax, input.shape()).unwrap();
        assert_eq!(g.data().iter().filter(|&&v| v != 0.0).count(), 4);
        for (&idx, &v) in p.argmax.iter().zip(p.output.data()) {
            assert_eq!(input.data()[idx], v);
            assert_eq!(g.data()[idx], 1.0);
        }
    }

    #[test]
    fn too_small_input_rejected() {
        assert!(maxpool_forward(&Tensor::zeros(&[1, 2, 5, 1]), (3, 3), (3, 3)).is_err());
    }
}
