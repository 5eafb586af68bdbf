//! Central finite-difference checks for every layer and for a small whole model.

use rand::seq::SliceRandom;
use rand::Rng as _;
use roadaudio::nn::*;
use roadaudio::rng::{rng, Rng};

pub const H: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Relative error is taken against max(|analytic|, |numeric|, FLOOR): gradients far
/// below the difference quotient's own rounding noise are compared absolutely.
const FLOOR: f64 = 1e-6;

pub const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

fn random(shape: &[usize], r: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Max relative error between `analytic` and the central difference of `loss` with
/// respect to every entry of `x`.
fn check(x: &Tensor, analytic: &Tensor, mut loss: impl FnMut(&Tensor) -> f64) -> f64 {
    assert_eq!(x.shape(), analytic.shape());
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let v = x.data()[i];
        probe.data_mut()[i] = v + H;
        let up = loss(&probe);
        probe.data_mut()[i] = v - H;
        let down = loss(&probe);
        probe.data_mut()[i] = v;
        worst = worst.max(rel_err(analytic.data()[i], (up - down) / (2.0 * H)));
    }
    worst
}

/// Worst error over input, kernel and bias for one random conv case.
pub fn conv_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, h, w, c, f) = (r.gen_range(1..3), r.gen_range(3..7), r.gen_range(3..7), r.gen_range(1..4), r.gen_range(1..4));
    let x = random(&[n, h, w, c], &mut r);
    let k = random(&[3, 3, c, f], &mut r);
    let b = random(&[f], &mut r);
    let proj = random(&[n, h, w, f], &mut r);
    let g = conv2d_backward(&proj, &x, &k).unwrap();
    let e1 = check(&x, &g.input, |x| dot(&conv2d_forward(x, &k, &b).unwrap(), &proj));
    let e2 = check(&k, &g.kernel, |k| dot(&conv2d_forward(&x, k, &b).unwrap(), &proj));
    let e3 = check(&b, &g.bias, |b| dot(&conv2d_forward(&x, &k, b).unwrap(), &proj));
    e1.max(e2).max(e3)
}

/// Inputs are a shuffled ladder with spacing far above `H`, so no window has a near tie
/// and the argmax cannot flip under perturbation.
pub fn pool_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, c) = (r.gen_range(1..3), r.gen_range(1..3));
    let (pool, stride) = if seed % 2 == 0 { ((3, 3), (3, 3)) } else { ((2, 3), (2, 2)) };
    let (h, w) = (r.gen_range(pool.0..pool.0 * 3), r.gen_range(pool.1..pool.1 * 3));
    let len = n * h * w * c;
    let mut ladder: Vec<f64> = (0..len).map(|i| i as f64 * 0.01).collect();
    ladder.shuffle(&mut r);
    let x = Tensor::from_vec(&[n, h, w, c], ladder).unwrap();
    let fwd = maxpool_forward(&x, pool, stride).unwrap();
    let proj = random(fwd.output.shape(), &mut r);
    let g = maxpool_backward(&proj, &fwd.argmax, x.shape()).unwrap();
    check(&x, &g, |x| dot(&maxpool_forward(x, pool, stride).unwrap().output, &proj))
}

/// Train-mode batch norm; gradients for input, gamma and beta.
pub fn batchnorm_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, h, w, c) = (r.gen_range(2..4), r.gen_range(1..4), r.gen_range(1..4), r.gen_range(1..4));
    let x = random(&[n, h, w, c], &mut r);
    let mut params = BatchNormParams::new(c);
    params.gamma = random(&[c], &mut r);
    params.beta = random(&[c], &mut r);
    let proj = random(x.shape(), &mut r);
    let (_, cache) = batchnorm_train(&x, &mut params.clone()).unwrap();
    let g = batchnorm_backward(&proj, &cache, &params.gamma).unwrap();
    let run = |x: &Tensor, gamma: &Tensor, beta: &Tensor| {
        let mut p = params.clone();
        p.gamma = gamma.clone();
        p.beta = beta.clone();
        dot(&batchnorm_train(x, &mut p).unwrap().0, &proj)
    };
    let e1 = check(&x, &g.input, |x| run(x, &params.gamma, &params.beta));
    let e2 = check(&params.gamma, &g.gamma, |gm| run(&x, gm, &params.beta));
    let e3 = check(&params.beta, &g.beta, |bt| run(&x, &params.gamma, bt));
    e1.max(e2).max(e3)
}

pub fn dense_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, d, u) = (r.gen_range(1..5), r.gen_range(2..7), r.gen_range(1..5));
    let x = random(&[n, d], &mut r);
    let wt = random(&[d, u], &mut r);
    let b = random(&[u], &mut r);
    let proj = random(&[n, u], &mut r);
    let g = dense_backward(&proj, &x, &wt).unwrap();
    let e1 = check(&x, &g.input, |x| dot(&dense_forward(x, &wt, &b).unwrap(), &proj));
    let e2 = check(&wt, &g.weight, |wt| dot(&dense_forward(&x, wt, &b).unwrap(), &proj));
    let e3 = check(&b, &g.bias, |b| dot(&dense_forward(&x, &wt, b).unwrap(), &proj));
    e1.max(e2).max(e3)
}

/// Fused softmax + cross-entropy gradient with respect to the logits.
pub fn softmax_ce_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, k) = (r.gen_range(1..6), r.gen_range(2..7));
    let mut logits = random(&[n, k], &mut r);
    logits.data_mut().iter_mut().for_each(|v| *v *= 3.0);
    let labels: Vec<usize> = (0..n).map(|_| r.gen_range(0..k)).collect();
    let (_, _, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
    check(&logits, &grad, |z| cross_entropy(&softmax(z).unwrap(), &labels).unwrap())
}

/// A small stack through every layer type, checked end to end against the training loss.
pub fn model_case(seed: u64) -> f64 {
    let spec = ModelSpec {
        layers: vec![
            LayerSpec::Conv2d { filters: 3, kernel: [3, 3], relu: true },
            LayerSpec::MaxPool { pool: [2, 2], stride: [2, 2] },
            LayerSpec::BatchNorm,
            LayerSpec::Conv2d { filters: 2, kernel: [3, 3], relu: false },
            LayerSpec::Flatten,
            LayerSpec::Dense { units: 4, activation: Activation::Relu },
            LayerSpec::Dense { units: 3, activation: Activation::Softmax },
        ],
    };
    let mut r = rng(seed);
    let mut model = Model::new(spec, [6, 6, 2], &mut r).unwrap();
    let x = random(&[3, 6, 6, 2], &mut r);
    let labels: Vec<usize> = (0..3).map(|_| r.gen_range(0..3)).collect();
    let loss = |m: &mut Model| {
        let logits = m.forward(&x, Mode::Train).unwrap();
        m.clear_caches();
        softmax_cross_entropy(&logits, &labels).unwrap().0
    };

    model.zero_grads();
    let logits = model.forward(&x, Mode::Train).unwrap();
    let (_, _, g) = softmax_cross_entropy(&logits, &labels).unwrap();
    model.backward(&g).unwrap();
    let analytic: Vec<(String, Tensor)> =
        model.params_mut().into_iter().map(|p| (p.name, p.grad.clone())).collect();

    let mut worst: f64 = 0.0;
    for (pi, (_, grad)) in analytic.iter().enumerate() {
        for i in 0..grad.len() {
            let orig = model.params_mut()[pi].value.data()[i];
            model.params_mut()[pi].value.data_mut()[i] = orig + H;
            let up = loss(&mut model);
            model.params_mut()[pi].value.data_mut()[i] = orig - H;
            let down = loss(&mut model);
            model.params_mut()[pi].value.data_mut()[i] = orig;
            worst = worst.max(rel_err(grad.data()[i], (up - down) / (2.0 * H)));
        }
    }
    worst
}

pub type Case = fn(u64) -> f64;

pub const CASES: [(&str, Case); 6] = [
    ("conv2d", conv_case),
    ("maxpool", pool_case),
    ("batchnorm", batchnorm_case),
    ("dense", dense_case),
    ("softmax+ce", softmax_ce_case),
    ("model", model_case),
];

/// Worst error per layer over all seeds.
pub fn run_all() -> Vec<(&'static str, f64)> {
    CASES
        .iter()
        .map(|(name, case)| (*name, SEEDS.iter().map(|&s| case(s)).fold(0.0, f64::max)))
        .collect()
}
