//! Two-stage convolutional regressor over GASF images.
//!
//! conv 3x3 -> ReLU -> max-pool 2 -> conv 3x3 -> ReLU -> max-pool 2 ->
//! dense -> ReLU -> dense -> logistic. Convolutions are "valid" (no
//! padding) and pooling floors odd sizes. All parameters live in one flat
//! vector so the optimiser and the model file treat them uniformly.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const IN_CHANNELS: usize = 3;
const K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    /// Image side length.
    pub width: usize,
    pub conv1: usize,
    pub conv2: usize,
    pub hidden: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture { width: super::DEFAULT_WIDTH, conv1: 8, conv2: 16, hidden: 32 }
    }
}

struct Dims {
    s1: usize,
    q1: usize,
    s2: usize,
    flat: usize,
}

impl Architecture {
    fn dims(&self) -> Dims {
        let s1 = self.width - (K - 1);
        let q1 = s1 / 2;
        let s2 = q1 - (K - 1);
        let q2 = s2 / 2;
        Dims { s1, q1, s2, flat: self.conv2 * q2 * q2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 10 {
            return Err(Error::BadWidth(self.width));
        }
        if self.conv1 == 0 || self.conv2 == 0 || self.hidden == 0 {
            return Err(Error::InvalidParam { name: "architecture".into(), reason: "layer sizes must be positive".into() });
        }
        Ok(())
    }

    /// Flattened size feeding the first dense layer.
    pub fn flat_features(&self) -> usize {
        self.dims().flat
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).total
    }
}

/// Offsets of each parameter block in the flat vector.
#[derive(Clone, Copy)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    w4: usize,
    b4: usize,
    total: usize,
}

impl Layout {
    fn new(a: &Architecture) -> Self {
        let d = a.dims();
        let w1 = 0;
        let b1 = w1 + a.conv1 * IN_CHANNELS * K * K;
        let w2 = b1 + a.conv1;
        let b2 = w2 + a.conv2 * a.conv1 * K * K;
        let w3 = b2 + a.conv2;
        let b3 = w3 + a.hidden * d.flat;
        let w4 = b3 + a.hidden;
        let b4 = w4 + a.hidden;
        Layout { w1, b1, w2, b2, w3, b3, w4, b4, total: b4 + 1 }
    }
}

/// Activations kept from a forward pass for the backward pass.
pub struct Workspace {
    a1: Vec<f64>,
    m1: Vec<f64>,
    i1: Vec<usize>,
    a2: Vec<f64>,
    m2: Vec<f64>,
    i2: Vec<usize>,
    h: Vec<f64>,
    y: f64,
    d_a1: Vec<f64>,
    d_m1: Vec<f64>,
    d_a2: Vec<f64>,
    d_m2: Vec<f64>,
    d_h: Vec<f64>,
}

impl Workspace {
    pub fn new(a: &Architecture) -> Self {
        let d = a.dims();
        let n1 = a.conv1 * d.s1 * d.s1;
        let p1 = a.conv1 * d.q1 * d.q1;
        let n2 = a.conv2 * d.s2 * d.s2;
        Workspace {
            a1: vec![0.0; n1],
            m1: vec![0.0; p1],
            i1: vec![0; p1],
            a2: vec![0.0; n2],
            m2: vec![0.0; d.flat],
            i2: vec![0; d.flat],
            h: vec![0.0; a.hidden],
            y: 0.0,
            d_a1: vec![0.0; n1],
            d_m1: vec![0.0; p1],
            d_a2: vec![0.0; n2],
            d_m2: vec![0.0; d.flat],
            d_h: vec![0.0; a.hidden],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub arch: Architecture,
    pub params: Vec<f64>,
}

impl Network {
    /// He-initialised weights, zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let l = Layout::new(&arch);
        let d = arch.dims();
        let mut params = vec![0.0; l.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |from: usize, to: usize, fan_in: usize| {
            let n = Normal::new(0.0, libm::sqrt(2.0 / fan_in as f64)).unwrap();
            for p in &mut params[from..to] {
                *p = n.sample(&mut rng);
            }
        };
        fill(l.w1, l.b1, IN_CHANNELS * K * K);
        fill(l.w2, l.b2, arch.conv1 * K * K);
        fill(l.w3, l.b3, d.flat);
        fill(l.w4, l.b4, arch.hidden);
        Ok(Network { arch, params })
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        let want = arch.param_count();
        if params.len() != want {
            return Err(Error::LengthMismatch { expected: want, found: params.len() });
        }
        Ok(Network { arch, params })
    }

    /// Output in `[0, 1]` for one channel-major image.
    pub fn predict(&self, image: &[f64]) -> f64 {
        let mut ws = Workspace::new(&self.arch);
        forward(&self.arch, &self.params, image, &mut ws)
    }
}

fn check_image(a: &Architecture, image: &[f64]) {
    assert_eq!(image.len(), IN_CHANNELS * a.width * a.width, "image does not match architecture");
}

/// Valid 3x3 convolution, `input` is `cin x n x n`, `out` is `cout x (n-2) x (n-2)`.
fn conv_forward(input: &[f64], cin: usize, n: usize, w: &[f64], b: &[f64], out: &mut [f64]) {
    let s = n - (K - 1);
    let cout = b.len();
    for oc in 0..cout {
        let o = &mut out[oc * s * s..(oc + 1) * s * s];
        o.fill(b[oc]);
        for ic in 0..cin {
            let inp = &input[ic * n * n..(ic + 1) * n * n];
            for di in 0..K {
                for dj in 0..K {
                    let wv = w[((oc * cin + ic) * K + di) * K + dj];
                    for i in 0..s {
                        let src = &inp[(i + di) * n + dj..(i + di) * n + dj + s];
                        let dst = &mut o[i * s..(i + 1) * s];
                        for (d, v) in dst.iter_mut().zip(src) {
                            *d += wv * v;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates weight, bias and (optionally) input gradients of a valid conv.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    cin: usize,
    n: usize,
    w: &[f64],
    d_out: &[f64],
    cout: usize,
    gw: &mut [f64],
    gb: &mut [f64],
    mut d_in: Option<&mut [f64]>,
) {
    let s = n - (K - 1);
    for oc in 0..cout {
        let g = &d_out[oc * s * s..(oc + 1) * s * s];
        gb[oc] += g.iter().sum::<f64>();
        for ic in 0..cin {
            let inp = &input[ic * n * n..(ic + 1) * n * n];
            for di in 0..K {
                for dj in 0..K {
                    let widx = ((oc * cin + ic) * K + di) * K + dj;
                    let mut acc = 0.0;
                    for i in 0..s {
                        let src = &inp[(i + di) * n + dj..(i + di) * n + dj + s];
                        acc += g[i * s..(i + 1) * s].iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                    }
                    gw[widx] += acc;
                    if let Some(d_in) = d_in.as_deref_mut() {
                        let wv = w[widx];
                        let di_plane = &mut d_in[ic * n * n..(ic + 1) * n * n];
                        for i in 0..s {
                            let dst = &mut di_plane[(i + di) * n + dj..(i + di) * n + dj + s];
                            for (d, v) in dst.iter_mut().zip(&g[i * s..(i + 1) * s]) {
                                *d += wv * v;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// ReLU fused with 2x2 max-pooling; records the winning pre-activation index.
fn relu_pool(a: &[f64], c: usize, s: usize, out: &mut [f64], idx: &mut [usize]) {
    let q = s / 2;
    for ch in 0..c {
        for i in 0..q {
            for j in 0..q {
                let mut best = usize::MAX;
                let mut bv = f64::NEG_INFINITY;
                for (di, dj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let k = (ch * s + 2 * i + di) * s + 2 * j + dj;
                    if a[k] > bv {
                        bv = a[k];
                        best = k;
                    }
                }
                let o = (ch * q + i) * q + j;
                out[o] = bv.max(0.0);
                idx[o] = best;
            }
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

pub(crate) fn forward(a: &Architecture, p: &[f64], image: &[f64], ws: &mut Workspace) -> f64 {
    check_image(a, image);
    let l = Layout::new(a);
    let d = a.dims();
    conv_forward(image, IN_CHANNELS, a.width, &p[l.w1..l.b1], &p[l.b1..l.w2], &mut ws.a1);
    relu_pool(&ws.a1, a.conv1, d.s1, &mut ws.m1, &mut ws.i1);
    conv_forward(&ws.m1, a.conv1, d.q1, &p[l.w2..l.b2], &p[l.b2..l.w3], &mut ws.a2);
    relu_pool(&ws.a2, a.conv2, d.s2, &mut ws.m2, &mut ws.i2);
    let w3 = &p[l.w3..l.b3];
    for (k, h) in ws.h.iter_mut().enumerate() {
        let row = &w3[k * d.flat..(k + 1) * d.flat];
        let z = p[l.b3 + k] + row.iter().zip(&ws.m2).map(|(w, v)| w * v).sum::<f64>();
        *h = z.max(0.0);
    }
    let z = p[l.b4] + p[l.w4..l.b4].iter().zip(&ws.h).map(|(w, v)| w * v).sum::<f64>();
    ws.y = sigmoid(z);
    ws.y
}

/// Adds `d loss / d params` to `grad` given `d loss / d output` for the
/// image last passed to [`forward`] with this workspace.
pub(crate) fn backward(a: &Architecture, p: &[f64], image: &[f64], ws: &mut Workspace, d_y: f64, grad: &mut [f64]) {
    let l = Layout::new(a);
    let d = a.dims();
    let dz = d_y * ws.y * (1.0 - ws.y);
    grad[l.b4] += dz;
    for k in 0..a.hidden {
        grad[l.w4 + k] += dz * ws.h[k];
        ws.d_h[k] = if ws.h[k] > 0.0 { dz * p[l.w4 + k] } else { 0.0 };
    }
    ws.d_m2.fill(0.0);
    for k in 0..a.hidden {
        let g = ws.d_h[k];
        if g == 0.0 {
            continue;
        }
        grad[l.b3 + k] += g;
        let row = l.w3 + k * d.flat;
        for f in 0..d.flat {
            grad[row + f] += g * ws.m2[f];
            ws.d_m2[f] += g * p[row + f];
        }
    }
    ws.d_a2.fill(0.0);
    for (o, &k) in ws.i2.iter().enumerate() {
        if ws.a2[k] > 0.0 {
            ws.d_a2[k] += ws.d_m2[o];
        }
    }
    ws.d_m1.fill(0.0);
    {
        let (head, tail) = grad.split_at_mut(l.b2);
        conv_backward(
            &ws.m1,
            a.conv1,
            d.q1,
            &p[l.w2..l.b2],
            &ws.d_a2,
            a.conv2,
            &mut head[l.w2..l.b2],
            &mut tail[..a.conv2],
            Some(&mut ws.d_m1),
        );
    }
    ws.d_a1.fill(0.0);
    for (o, &k) in ws.i1.iter().enumerate() {
        if ws.a1[k] > 0.0 {
            ws.d_a1[k] += ws.d_m1[o];
        }
    }
    let (head, tail) = grad.split_at_mut(l.b1);
    conv_backward(image, IN_CHANNELS, a.width, &p[l.w1..l.b1], &ws.d_a1, a.conv1, &mut head[l.w1..l.b1], &mut tail[..a.conv1], None);
}

/// Mean squared error over a batch and its gradient.
pub fn loss_and_gradient(net: &Network, images: &[&[f64]], targets: &[f64]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; net.params.len()];
    let mut ws = Workspace::new(&net.arch);
    let loss = batch_gradient(&net.arch, &net.params, images, targets, &mut ws, &mut grad);
    (loss, grad)
}

pub(crate) fn batch_gradient(
    a: &Architecture,
    p: &[f64],
    images: &[&[f64]],
    targets: &[f64],
    ws: &mut Workspace,
    grad: &mut [f64],
) -> f64 {
    let m = images.len() as f64;
    let mut loss = 0.0;
    for (img, &s) in images.iter().zip(targets) {
        let y = forward(a, p, img, ws);
        loss += (y - s) * (y - s);
        backward(a, p, img, ws, 2.0 * (y - s) / m, grad);
    }
    loss / m
}

pub fn loss(net: &Network, images: &[&[f64]], targets: &[f64]) -> f64 {
    let mut ws = Workspace::new(&net.arch);
    let m = images.len() as f64;
    images
        .iter()
        .zip(targets)
        .map(|(img, s)| {
            let y = forward(&net.arch, &net.params, img, &mut ws);
            (y - s) * (y - s)
        })
        .sum::<f64>()
        / m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small() -> Architecture {
        Architecture { width: 12, conv1: 3, conv2: 4, hidden: 5 }
    }

    fn images(a: &Architecture, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| (0..3 * a.width * a.width).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn default_layout_sizes() {
        let a = Architecture::default();
        assert_eq!(a.flat_features(), 16 * 6 * 6);
        let want = 8 * 27 + 8 + 16 * 72 + 16 + 32 * 576 + 32 + 32 + 1;
        assert_eq!(a.param_count(), want);
        let net = Network::init(a, 1).unwrap();
        assert_eq!(net.params.len(), want);
    }

    #[test]
    fn output_in_unit_interval_and_deterministic() {
        let a = Architecture::default();
        let net = Network::init(a, 3).unwrap();
        for img in images(&a, 4, 5) {
            let y = net.predict(&img);
            assert!((0.0..=1.0).contains(&y));
            assert_eq!(y, net.predict(&img));
        }
        assert_eq!(net, Network::init(a, 3).unwrap());
    }

    #[test]
    fn gradient_matches_central_differences() {
        for a in [small(), Architecture::default()] {
            let mut net = Network::init(a, 17).unwrap();
            // push the output away from saturation so every block carries gradient
            let imgs = images(&a, 4, 23);
            let refs: Vec<&[f64]> = imgs.iter().map(|v| v.as_slice()).collect();
            let targets = [1.0, 0.0, 0.3, 0.6];
            let (_, grad) = loss_and_gradient(&net, &refs, &targets);
            let l = Layout::new(&a);
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut probe: Vec<usize> = (l.w1..l.w3).collect();
            probe.extend((0..200).map(|_| rng.random_range(l.w3..l.total)));
            let h = 1e-5;
            let mut checked = 0;
            for &i in &probe {
                let orig = net.params[i];
                net.params[i] = orig + h;
                let up = loss(&net, &refs, &targets);
                net.params[i] = orig - h;
                let down = loss(&net, &refs, &targets);
                net.params[i] = orig;
                let fd = (up - down) / (2.0 * h);
                let scale = fd.abs().max(grad[i].abs());
                if scale < 1e-7 {
                    continue;
                }
                let rel = (fd - grad[i]).abs() / scale;
                assert!(rel < 1e-3, "param {i}: analytic {} vs numeric {fd} (rel {rel})", grad[i]);
                checked += 1;
            }
            assert!(checked > probe.len() / 2, "only {checked} parameters carried gradient");
        }
    }

    #[test]
    fn rejects_tiny_width() {
        let a = Architecture { width: 8, ..Architecture::default() };
        assert_eq!(Network::init(a, 0), Err(Error::BadWidth(8)));
        assert!(Network::from_params(Architecture::default(), vec![0.0; 3]).is_err());
    }
}
