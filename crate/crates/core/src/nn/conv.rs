//! Same-padded, stride-1 2-D convolution (cross-correlation convention) over NHWC tensors.

use super::gemm::{matmul, matmul_a_bt, matmul_at_b};
use super::Tensor;
use crate::error::{Error, Result};

struct Geometry {
    n: usize,
    h: usize,
    w: usize,
    c: usize,
    kh: usize,
    kw: usize,
    f: usize,
}

impl Geometry {
    fn new(input: &Tensor, kernel: &Tensor) -> Result<Self> {
        let (n, h, w, c) = input.dims4()?;
        let (kh, kw, kc, f) = kernel.dims4()?;
        if kc != c {
            return Err(Error::invalid(format!(
                "kernel expects {kc} input channels, input has {c}"
            )));
        }
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(Error::invalid(format!("same padding needs odd kernel sizes, got {kh}x{kw}")));
        }
        Ok(Self { n, h, w, c, kh, kw, f })
    }

    fn patch(&self) -> usize {
        self.kh * self.kw * self.c
    }

    fn pixels(&self) -> usize {
        self.h * self.w
    }
}

/// Unfolds one image `[h, w, c]` into `[h·w, kh·kw·c]` patches with zero padding.
fn im2col(g: &Geometry, image: &[f64], cols: &mut [f64]) {
    let (ph, pw) = ((g.kh / 2) as isize, (g.kw / 2) as isize);
    let patch = g.patch();
    for y in 0..g.h {
        for x in 0..g.w {
            let row = &mut cols[(y * g.w + x) * patch..][..patch];
            for k in 0..g.kh {
                let sy = y as isize + k as isize - ph;
                for l in 0..g.kw {
                    let sx = x as isize + l as isize - pw;
                    let dst = &mut row[(k * g.kw + l) * g.c..][..g.c];
                    if sy < 0 || sx < 0 || sy >= g.h as isize || sx >= g.w as isize {
                        dst.fill(0.0);
                    } else {
                        let src = ((sy as usize) * g.w + sx as usize) * g.c;
                        dst.copy_from_slice(&image[src..src + g.c]);
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the image.
fn col2im(g: &Geometry, cols: &[f64], image: &mut [f64]) {
    let (ph, pw) = ((g.kh / 2) as isize, (g.kw / 2) as isize);
    let patch = g.patch();
    image.fill(0.0);
    for y in 0..g.h {
        for x in 0..g.w {
            let row = &cols[(y * g.w + x) * patch..][..patch];
            for k in 0..g.kh {
                let sy = y as isize + k as isize - ph;
                if sy < 0 || sy >= g.h as isize {
                    continue;
                }
                for l in 0..g.kw {
                    let sx = x as isize + l as isize - pw;
                    if sx < 0 || sx >= g.w as isize {
                        continue;
                    }
                    let dst = ((sy as usize) * g.w + sx as usize) * g.c;
                    let src = &row[(k * g.kw + l) * g.c..][..g.c];
                    for (d, s) in image[dst..dst + g.c].iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
        }
    }
}

/// `out[n,y,x,f] = bias[f] + Σ_{k,l,c} kernel[k,l,c,f] · padded[n, y+k, x+l, c]`.
pub fn conv2d_forward(input: &Tensor, kernel: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let g = Geometry::new(input, kernel)?;
    if bias.len() != g.f {
        return Err(Error::invalid(format!("bias has {} entries for {} filters", bias.len(), g.f)));
    }
    let (pixels, patch) = (g.pixels(), g.patch());
    let mut out = Tensor::zeros(&[g.n, g.h, g.w, g.f]);
    let mut cols = vec![0.0; pixels * patch];
    let image_len = pixels * g.c;
    for (i, out_img) in out.data_mut().chunks_exact_mut(pixels * g.f).enumerate() {
        im2col(&g, &input.data()[i * image_len..(i + 1) * image_len], &mut cols);
        for px in out_img.chunks_exact_mut(g.f) {
            px.copy_from_slice(bias.data());
        }
        matmul(pixels, patch, g.f, &cols, kernel.data(), 1.0, out_img);
    }
    Ok(out)
}

pub struct ConvGrads {
    pub input: Tensor,
    pub kernel: Tensor,
    pub bias: Tensor,
}

pub fn conv2d_backward(grad_out: &Tensor, input: &Tensor, kernel: &Tensor) -> Result<ConvGrads> {
    let g = Geometry::new(input, kernel)?;
    if grad_out.shape() != [g.n, g.h, g.w, g.f] {
        return Err(Error::invalid(format!(
            "output gradient {:?} does not match forward output {:?}",
            grad_out.shape(),
            [g.n, g.h, g.w, g.f]
        )));
    }
    let (pixels, patch) = (g.pixels(), g.patch());
    let mut grad_input = Tensor::zeros(input.shape());
    let mut grad_kernel = Tensor::zeros(kernel.shape());
    let mut grad_bias = Tensor::zeros(&[g.f]);
    let mut cols = vec![0.0; pixels * patch];
    let mut grad_cols = vec![0.0; pixels * patch];
    let image_len = pixels * g.c;
    for i in 0..g.n {
        let image = &input.data()[i * image_len..(i + 1) * image_len];
        let go = &grad_out.data()[i * pixels * g.f..(i + 1) * pixels * g.f];
        im2col(&g, image, &mut cols);
        // dK += colsᵀ · dY
        matmul_at_b(patch, pixels, g.f, &cols, go, 1.0, grad_kernel.data_mut());
        // dCols = dY · Kᵀ
        matmul_a_bt(pixels, g.f, patch, go, kernel.data(), 0.0, &mut grad_cols);
        col2im(&g, &grad_cols, &mut grad_input.data_mut()[i * image_len..(i + 1) * image_len]);
        for px in go.chunks_exact(g.f) {
            for (b, d) in grad_bias.data_mut().iter_mut().zip(px) {
                *b += d;
            }
        }
    }
    Ok(ConvGrads {
        input: grad_input,
        kernel: grad_kernel,
        bias: grad_bias,
    })
}
