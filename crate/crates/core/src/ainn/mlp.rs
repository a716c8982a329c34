//! The `[2, H, H, 1]` tanh perceptron with exact input Laplacian and
//! parameter gradients of both the output and the Helmholtz residual.
//!
//! Parameters live in one flat vector laid out as
//! `W1 (H×2) | b1 (H) | W2 (H×H) | b2 (H) | w3 (H) | b3 (1)`, row-major.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AinnError;

/// Network parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    hidden: usize,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    h: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

impl Layout {
    fn new(h: usize) -> Self {
        let w1 = 0;
        let b1 = w1 + 2 * h;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + h;
        Self {
            h,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            len: b3 + 1,
        }
    }
}

/// Number of parameters of a `[2, H, H, 1]` network.
pub fn parameter_count(hidden: usize) -> usize {
    Layout::new(hidden).len
}

/// Hidden width `⌈k r⌉`.
pub fn hidden_width(k: f64, r: f64) -> Result<usize, AinnError> {
    let kr = k * r;
    if !(kr > 0.0 && kr.is_finite()) {
        return Err(AinnError::NonPositiveKr(kr));
    }
    Ok(kr.ceil() as usize)
}

impl MlpParams {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden,
            params: vec![0.0; parameter_count(hidden)],
        }
    }

    pub fn from_flat(hidden: usize, params: Vec<f64>) -> Result<Self, AinnError> {
        if hidden == 0 || params.len() != parameter_count(hidden) {
            return Err(AinnError::ShapeMismatch {
                expected: parameter_count(hidden.max(1)),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(AinnError::NonFiniteParameters);
        }
        Ok(Self { hidden, params })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn layer_sizes(&self) -> [usize; 4] {
        [2, self.hidden, self.hidden, 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.params
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    fn layout(&self) -> Layout {
        Layout::new(self.hidden)
    }
}

/// Width `⌈kr⌉`, weights uniform in `±1/√fan_in`, zero biases.
pub fn init_network(k: f64, r: f64, seed: u64) -> Result<MlpParams, AinnError> {
    let h = hidden_width(k, r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = Layout::new(h);
    let mut net = MlpParams::zeros(h);
    let p = &mut net.params;
    let mut fill = |range: std::ops::Range<usize>, fan_in: usize| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for v in &mut p[range] {
            *v = rng.gen_range(-bound..=bound);
        }
    };
    fill(l.w1..l.b1, 2);
    fill(l.w2..l.b2, h);
    fill(l.w3..l.b3, h);
    Ok(net)
}

/// Per-point intermediates and adjoints, reused across points. The
/// second-derivative terms enter only through their sum over both input
/// dimensions, so they are stored summed.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    s1: Vec<f64>,
    d1: Vec<f64>,
    dd1: Vec<f64>,
    ddd1: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
    qs: Vec<f64>,
    a2: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    t3: Vec<f64>,
    vx: Vec<f64>,
    vy: Vec<f64>,
    ws: Vec<f64>,
    l2: Vec<f64>,
    s1_bar: Vec<f64>,
    gx_bar: Vec<f64>,
    gy_bar: Vec<f64>,
    q_bar: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(h: usize) -> Self {
        let z = || vec![0.0; h];
        Self {
            s1: z(),
            d1: z(),
            dd1: z(),
            ddd1: z(),
            gx: z(),
            gy: z(),
            qs: z(),
            a2: z(),
            t1: z(),
            t2: z(),
            t3: z(),
            vx: z(),
            vy: z(),
            ws: z(),
            l2: z(),
            s1_bar: z(),
            gx_bar: z(),
            gy_bar: z(),
            q_bar: z(),
        }
    }
}

/// tanh and its first three derivatives.
#[inline]
fn tanh_derivatives(z: f64) -> (f64, f64, f64, f64) {
    let t = z.tanh();
    let d1 = 1.0 - t * t;
    (t, d1, -2.0 * t * d1, d1 * (6.0 * t * t - 2.0))
}

/// Forward pass keeping what the output gradient needs. Returns the output.
fn forward_plain(net: &MlpParams, x: f64, y: f64, s: &mut Scratch) -> f64 {
    let l = net.layout();
    let p = &net.params;
    let h = l.h;
    let (s1, d1) = (&mut s.s1[..h], &mut s.d1[..h]);
    for i in 0..h {
        let t = (p[l.w1 + 2 * i] * x + p[l.w1 + 2 * i + 1] * y + p[l.b1 + i]).tanh();
        s1[i] = t;
        d1[i] = 1.0 - t * t;
    }
    let mut out = p[l.b3];
    for j in 0..h {
        let row = &p[l.w2 + j * h..l.w2 + (j + 1) * h];
        let z: f64 = row.iter().zip(s1.iter()).map(|(a, b)| a * b).sum::<f64>() + p[l.b2 + j];
        let t = z.tanh();
        s.a2[j] = t;
        s.t1[j] = 1.0 - t * t;
        out += p[l.w3 + j] * t;
    }
    out
}

/// Forward pass with input second derivatives. Returns `(output, laplacian)`.
fn forward_with_laplacian(net: &MlpParams, x: f64, y: f64, s: &mut Scratch) -> (f64, f64) {
    let l = net.layout();
    let p = &net.params;
    let h = l.h;
    for i in 0..h {
        let u0 = p[l.w1 + 2 * i];
        let u1 = p[l.w1 + 2 * i + 1];
        let (t, d1, dd1, ddd1) = tanh_derivatives(u0 * x + u1 * y + p[l.b1 + i]);
        s.s1[i] = t;
        s.d1[i] = d1;
        s.dd1[i] = dd1;
        s.ddd1[i] = ddd1;
        s.gx[i] = d1 * u0;
        s.gy[i] = d1 * u1;
        s.qs[i] = dd1 * (u0 * u0 + u1 * u1);
    }
    let (s1, gx, gy, qs) = (&s.s1[..h], &s.gx[..h], &s.gy[..h], &s.qs[..h]);
    let mut out = p[l.b3];
    let mut lap = 0.0;
    for j in 0..h {
        let row = &p[l.w2 + j * h..l.w2 + (j + 1) * h];
        let mut z = p[l.b2 + j];
        let (mut vx, mut vy, mut ws) = (0.0, 0.0, 0.0);
        for i in 0..h {
            let a = row[i];
            z += a * s1[i];
            vx += a * gx[i];
            vy += a * gy[i];
            ws += a * qs[i];
        }
        let (t, t1, t2, t3) = tanh_derivatives(z);
        s.a2[j] = t;
        s.t1[j] = t1;
        s.t2[j] = t2;
        s.t3[j] = t3;
        s.vx[j] = vx;
        s.vy[j] = vy;
        s.ws[j] = ws;
        let l2 = t2 * (vx * vx + vy * vy) + t1 * ws;
        s.l2[j] = l2;
        out += p[l.w3 + j] * t;
        lap += p[l.w3 + j] * l2;
    }
    (out, lap)
}

/// Network output at `(x, y)`.
pub fn forward(net: &MlpParams, x: f64, y: f64) -> f64 {
    let mut s = Scratch::new(net.hidden);
    forward_plain(net, x, y, &mut s)
}

/// `∂²out/∂x² + ∂²out/∂y²`, evaluated in closed form.
pub fn laplacian(net: &MlpParams, x: f64, y: f64) -> f64 {
    let mut s = Scratch::new(net.hidden);
    forward_with_laplacian(net, x, y, &mut s).1
}

/// Adds `adjoint(out) · ∂out/∂θ` to `grad` and returns the output.
pub(crate) fn output_gradient(
    net: &MlpParams,
    x: f64,
    y: f64,
    s: &mut Scratch,
    adjoint: impl FnOnce(f64) -> f64,
    grad: &mut [f64],
) -> f64 {
    let out = forward_plain(net, x, y, s);
    let rho = adjoint(out);
    let l = net.layout();
    let p = &net.params;
    let h = l.h;
    grad[l.b3] += rho;
    let s1 = &s.s1[..h];
    let s1_bar = &mut s.s1_bar[..h];
    s1_bar.fill(0.0);
    for j in 0..h {
        grad[l.w3 + j] += rho * s.a2[j];
        let z2_bar = rho * p[l.w3 + j] * s.t1[j];
        grad[l.b2 + j] += z2_bar;
        let row = l.w2 + j * h;
        let prow = &p[row..row + h];
        let grow = &mut grad[row..row + h];
        for i in 0..h {
            grow[i] += z2_bar * s1[i];
            s1_bar[i] += prow[i] * z2_bar;
        }
    }
    for i in 0..h {
        let z1_bar = s1_bar[i] * s.d1[i];
        grad[l.b1 + i] += z1_bar;
        grad[l.w1 + 2 * i] += z1_bar * x;
        grad[l.w1 + 2 * i + 1] += z1_bar * y;
    }
    out
}

/// Evaluates the Helmholtz residual `r = lap/k² + out` at `(x, y)`, then
/// adds `adjoint(r) · ∂r/∂θ` to `grad`. Returns `r`.
pub(crate) fn residual_gradient(
    net: &MlpParams,
    x: f64,
    y: f64,
    inv_k2: f64,
    s: &mut Scratch,
    adjoint: impl FnOnce(f64) -> f64,
    grad: &mut [f64],
) -> f64 {
    let (out, lap) = forward_with_laplacian(net, x, y, s);
    let r = lap * inv_k2 + out;
    let rho = adjoint(r);
    let l = net.layout();
    let p = &net.params;
    let h = l.h;

    grad[l.b3] += rho;
    let (s1, gx, gy, qs) = (&s.s1[..h], &s.gx[..h], &s.gy[..h], &s.qs[..h]);
    let s1_bar = &mut s.s1_bar[..h];
    let gx_bar = &mut s.gx_bar[..h];
    let gy_bar = &mut s.gy_bar[..h];
    let q_bar = &mut s.q_bar[..h];
    s1_bar.fill(0.0);
    gx_bar.fill(0.0);
    gy_bar.fill(0.0);
    q_bar.fill(0.0);
    for j in 0..h {
        let w3 = p[l.w3 + j];
        let (t1, t2) = (s.t1[j], s.t2[j]);
        grad[l.w3 + j] += rho * (s.a2[j] + inv_k2 * s.l2[j]);
        let a2_bar = rho * w3;
        let l2_bar = a2_bar * inv_k2;
        let (vx, vy) = (s.vx[j], s.vy[j]);
        let t2_bar = l2_bar * (vx * vx + vy * vy);
        let t1_bar = l2_bar * s.ws[j];
        let vx_bar = 2.0 * l2_bar * t2 * vx;
        let vy_bar = 2.0 * l2_bar * t2 * vy;
        let w_bar = l2_bar * t1;
        let z2_bar = a2_bar * t1 + t1_bar * t2 + t2_bar * s.t3[j];
        grad[l.b2 + j] += z2_bar;
        let row = l.w2 + j * h;
        let prow = &p[row..row + h];
        let grow = &mut grad[row..row + h];
        for i in 0..h {
            let a = prow[i];
            grow[i] += z2_bar * s1[i] + vx_bar * gx[i] + vy_bar * gy[i] + w_bar * qs[i];
            s1_bar[i] += a * z2_bar;
            gx_bar[i] += a * vx_bar;
            gy_bar[i] += a * vy_bar;
            q_bar[i] += a * w_bar;
        }
    }
    for i in 0..h {
        let (u0, u1) = (p[l.w1 + 2 * i], p[l.w1 + 2 * i + 1]);
        let (d1, dd1) = (s.d1[i], s.dd1[i]);
        let d1_bar = gx_bar[i] * u0 + gy_bar[i] * u1;
        let dd1_bar = q_bar[i] * (u0 * u0 + u1 * u1);
        let z1_bar = s1_bar[i] * d1 + d1_bar * dd1 + dd1_bar * s.ddd1[i];
        grad[l.b1 + i] += z1_bar;
        let q2 = 2.0 * q_bar[i] * dd1;
        grad[l.w1 + 2 * i] += z1_bar * x + gx_bar[i] * d1 + q2 * u0;
        grad[l.w1 + 2 * i + 1] += z1_bar * y + gy_bar[i] * d1 + q2 * u1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    // straightforward matrix arithmetic, kept separate from the production path
    fn oracle_forward(net: &MlpParams, x: f64, y: f64) -> f64 {
        let h = net.hidden();
        let p = net.as_slice();
        let w1: Vec<Vec<f64>> = (0..h).map(|i| vec![p[2 * i], p[2 * i + 1]]).collect();
        let b1 = &p[2 * h..3 * h];
        let w2: Vec<&[f64]> = (0..h).map(|j| &p[3 * h + j * h..3 * h + (j + 1) * h]).collect();
        let b2 = &p[3 * h + h * h..4 * h + h * h];
        let w3 = &p[4 * h + h * h..5 * h + h * h];
        let b3 = p[5 * h + h * h];
        let a1: Vec<f64> = (0..h).map(|i| (w1[i][0] * x + w1[i][1] * y + b1[i]).tanh()).collect();
        let a2: Vec<f64> = (0..h)
            .map(|j| (w2[j].iter().zip(&a1).map(|(a, b)| a * b).sum::<f64>() + b2[j]).tanh())
            .collect();
        w3.iter().zip(&a2).map(|(a, b)| a * b).sum::<f64>() + b3
    }

    fn random_net(seed: u64, h: usize, scale: f64) -> MlpParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..parameter_count(h)).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        MlpParams::from_flat(h, params).unwrap()
    }

    #[test]
    fn width_follows_ceiling() {
        assert_eq!(init_network(2.4, 1.0, 0).unwrap().hidden(), 3);
        assert_eq!(init_network(9.0, 1.0, 0).unwrap().hidden(), 9);
        assert_eq!(init_network(20.0, 0.12, 0).unwrap().layer_sizes(), [2, 3, 3, 1]);
        assert!(matches!(init_network(0.0, 0.12, 0), Err(AinnError::NonPositiveKr(_))));
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_network(20.0, 0.12, 42).unwrap();
        let b = init_network(20.0, 0.12, 42).unwrap();
        let c = init_network(20.0, 0.12, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let l = Layout::new(3);
        let p = a.as_slice();
        assert!(p[l.w1..l.b1].iter().all(|v| v.abs() <= 1.0 / 2f64.sqrt()));
        assert!(p[l.w2..l.b2].iter().all(|v| v.abs() <= 1.0 / 3f64.sqrt()));
        assert!(p[l.b1..l.w2].iter().chain(&p[l.b2..l.w3]).all(|v| *v == 0.0));
        assert_eq!(p[l.b3], 0.0);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpParams::zeros(4);
        assert_eq!(forward(&net, 0.3, -0.7), 0.0);
        assert_eq!(laplacian(&net, 0.3, -0.7), 0.0);
    }

    #[test]
    fn forward_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..100 {
            let h = 1 + case % 9;
            let net = random_net(case as u64, h, 2.0);
            let (x, y) = (rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
            assert!((forward(&net, x, y) - oracle_forward(&net, x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn network_is_not_translation_invariant() {
        let net = random_net(3, 4, 1.0);
        assert_ne!(forward(&net, 0.1, 0.05), forward(&net, 0.15, 0.05));
    }

    fn fd_laplacian(net: &MlpParams, x: f64, y: f64, step: f64) -> f64 {
        let f = |a: f64, b: f64| oracle_forward(net, a, b);
        let c = f(x, y);
        (f(x + step, y) - 2.0 * c + f(x - step, y) + f(x, y + step) - 2.0 * c + f(x, y - step)) / (step * step)
    }

    // fourth-order central stencil; keeps roundoff well below the tolerance
    fn fd4_laplacian(net: &MlpParams, x: f64, y: f64, step: f64) -> f64 {
        let f = |a: f64, b: f64| oracle_forward(net, a, b);
        let c = f(x, y);
        let axis = |fp1: f64, fm1: f64, fp2: f64, fm2: f64| (-fp2 + 16.0 * fp1 - 30.0 * c + 16.0 * fm1 - fm2) / 12.0;
        let dxx = axis(f(x + step, y), f(x - step, y), f(x + 2.0 * step, y), f(x - 2.0 * step, y));
        let dyy = axis(f(x, y + step), f(x, y - step), f(x, y + 2.0 * step), f(x, y - 2.0 * step));
        (dxx + dyy) / (step * step)
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..100u64 {
            let h = 1 + (case as usize) % 8;
            let net = random_net(100 + case, h, 1.5);
            let (x, y) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let exact = laplacian(&net, x, y);
            let fd = fd4_laplacian(&net, x, y, 1e-3);
            let scale = exact.abs().max(1e-3);
            assert!((exact - fd).abs() / scale < 1e-5, "case {case}: {exact} vs {fd}");
        }
    }

    #[test]
    fn nearly_linear_network_has_tiny_laplacian() {
        let net = random_net(5, 3, 1e-3);
        let exact = laplacian(&net, 0.1, 0.02);
        assert!(exact.abs() < 1e-10);
        assert!((exact - fd_laplacian(&net, 0.1, 0.02, 1e-4)).abs() < 1e-8);
    }

    #[test]
    fn shape_checks() {
        assert!(MlpParams::from_flat(2, vec![0.0; 5]).is_err());
        assert!(MlpParams::from_flat(1, vec![f64::NAN; parameter_count(1)]).is_err());
        assert_eq!(parameter_count(3), 3 * 3 + 5 * 3 + 1);
    }
}
