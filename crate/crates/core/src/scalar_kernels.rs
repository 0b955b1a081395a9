//! Heat kernel, Laplace fundamental solution, and the two Poisson kernels,
//! with analytic derivatives. Dimensions n = 2 and n = 3.

use crate::error::{ensure_finite, Error, Result};

pub const MAX_HEAT_ORDER: usize = 6;

/// A point of the closed half-space, x = (x', x_n) with x_n >= 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfSpacePoint {
    coords: [f64; 3],
    dim: usize,
}

impl HalfSpacePoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::ContractViolation(format!("dimension {dim} not in {{2,3}}")));
        }
        ensure_finite(coords, "half-space point")?;
        if coords[dim - 1] < 0.0 {
            return Err(Error::Domain(format!("normal coordinate {} < 0", coords[dim - 1])));
        }
        let mut c = [0.0f64; 3];
        c[..dim].copy_from_slice(coords);
        Ok(HalfSpacePoint { coords: c, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    /// Tangential part x'.
    pub fn prime(&self) -> &[f64] {
        &self.coords[..self.dim - 1]
    }

    /// Normal coordinate x_n.
    pub fn normal(&self) -> f64 {
        self.coords[self.dim - 1]
    }

    /// Reflection x* = (x', -x_n). Leaves the half-space, so it is returned
    /// as a raw vector.
    pub fn star(&self) -> [f64; 3] {
        let mut c = self.coords;
        c[self.dim - 1] = -c[self.dim - 1];
        c
    }

    pub fn is_boundary(&self) -> bool {
        self.normal() == 0.0
    }
}

/// Derivative orders: tangential multi-indices on x' and y', normal orders
/// k (d/dx_n) and q (d/dy_n), time order m.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DerivSpec {
    pub alpha_x: [usize; 2],
    pub k: usize,
    pub beta_y: [usize; 2],
    pub q: usize,
    pub m: usize,
}

impl DerivSpec {
    pub fn none() -> Self {
        DerivSpec::default()
    }

    pub fn x(alpha: [usize; 2], k: usize) -> Self {
        DerivSpec { alpha_x: alpha, k, ..Default::default() }
    }

    pub fn time(m: usize) -> Self {
        DerivSpec { m, ..Default::default() }
    }

    /// Tangential order l = |alpha| + |beta|.
    pub fn l(&self) -> usize {
        self.alpha_x[0] + self.alpha_x[1] + self.beta_y[0] + self.beta_y[1]
    }

    /// Total order |alpha| + k + |beta| + q + 2m.
    pub fn total_order(&self) -> usize {
        self.l() + self.k + self.q + 2 * self.m
    }

    /// Spatial multi-index on x (alpha_x plus k on the normal slot).
    pub fn x_multi(&self, n: usize) -> [usize; 3] {
        let mut a = [0usize; 3];
        a[..n - 1].copy_from_slice(&self.alpha_x[..n - 1]);
        a[n - 1] = self.k;
        a
    }

    /// Spatial multi-index on y (beta_y plus q on the normal slot).
    pub fn y_multi(&self, n: usize) -> [usize; 3] {
        let mut b = [0usize; 3];
        b[..n - 1].copy_from_slice(&self.beta_y[..n - 1]);
        b[n - 1] = self.q;
        b
    }
}

// ---------------------------------------------------------------------------
// Heat kernel
// ---------------------------------------------------------------------------

fn hermite(k: usize, z: f64) -> f64 {
    // Physicists' Hermite polynomials, H_{k+1} = 2 z H_k - 2 k H_{k-1}.
    let mut h0 = 1.0;
    if k == 0 {
        return h0;
    }
    let mut h1 = 2.0 * z;
    for j in 1..k {
        let h2 = 2.0 * z * h1 - 2.0 * (j as f64) * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Value of Gamma(x, t) = (4 pi t)^{-n/2} exp(-|x|^2/(4t)) for t > 0, else 0.
pub fn heat_kernel_value(x: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * std::f64::consts::PI * t).powf(-0.5 * n) * (-r2 / (4.0 * t)).exp()
}

/// Pure spatial derivative of the heat kernel via the Hermite product rule.
fn heat_spatial_deriv(x: &[f64], t: f64, alpha: &[usize]) -> f64 {
    let g = heat_kernel_value(x, t);
    if g == 0.0 {
        return 0.0;
    }
    let s = 2.0 * t.sqrt();
    let mut factor = 1.0;
    for (xi, &a) in x.iter().zip(alpha) {
        if a > 0 {
            factor *= (-1.0f64 / s).powi(a as i32) * hermite(a, xi / s);
        }
    }
    g * factor
}

/// Derivative d_t^m d_x^alpha Gamma(x, t). Time derivatives are converted
/// to spatial ones through the heat equation, d_t Gamma = Laplace Gamma.
pub fn heat_kernel_deriv(x: &[f64], t: f64, alpha: &[usize], m: usize) -> Result<f64> {
    ensure_finite(x, "heat kernel point")?;
    if !t.is_finite() {
        return Err(Error::NonFiniteInput("heat kernel time".into()));
    }
    let order: usize = alpha.iter().sum::<usize>() + 2 * m;
    if order > MAX_HEAT_ORDER {
        return Err(Error::UnsupportedOrder { requested: order, max: MAX_HEAT_ORDER });
    }
    if t == 0.0 && order > 0 {
        return Err(Error::Domain("heat kernel derivative at t = 0".into()));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let n = x.len();
    Ok(laplacian_expansion(n, m, &mut |extra: &[usize]| {
        let mut a = [0usize; 3];
        for i in 0..n {
            a[i] = alpha[i] + extra[i];
        }
        heat_spatial_deriv(x, t, &a[..n])
    }))
}

/// Sum over the multinomial expansion of Laplace^m applied to a spatial
/// derivative evaluator: Laplace^m = sum_{|k|=m} m!/(k!) d^{2k}.
fn laplacian_expansion(n: usize, m: usize, eval: &mut dyn FnMut(&[usize]) -> f64) -> f64 {
    if m == 0 {
        return eval(&[0, 0, 0][..n]);
    }
    let mut total = 0.0;
    let mut k = [0usize; 3];
    // Iterate k over compositions of m into n parts.
    fn rec(
        axis: usize,
        rem: usize,
        n: usize,
        k: &mut [usize; 3],
        total: &mut f64,
        m: usize,
        eval: &mut dyn FnMut(&[usize]) -> f64,
    ) {
        if axis == n - 1 {
            k[axis] = rem;
            let mut coeff = factorial(m);
            for &ki in k[..n].iter() {
                coeff /= factorial(ki);
            }
            let extra: [usize; 3] = [2 * k[0], 2 * k[1], 2 * k[2]];
            *total += coeff as f64 * eval(&extra[..n]);
            return;
        }
        for j in 0..=rem {
            k[axis] = j;
            rec(axis + 1, rem - j, n, k, total, m, eval);
        }
    }
    rec(0, m, n, &mut k, &mut total, m, eval);
    total
}

fn factorial(k: usize) -> usize {
    (1..=k).product::<usize>().max(1)
}

/// d_t^m d^alpha of the heat kernel, spec'd via [`DerivSpec`] on x and t.
pub fn heat_kernel(x: &[f64], t: f64, d: &DerivSpec) -> Result<f64> {
    let n = x.len();
    let a = d.x_multi(n);
    heat_kernel_deriv(x, t, &a[..n], d.m)
}

// ---------------------------------------------------------------------------
// Radial derivative machinery
// ---------------------------------------------------------------------------

/// Mixed partial of a radial function from its ladder values
/// h_m = ((1/r) d/dr)^m f, m = 0..=p where p = |counts|.
///
/// d^nu f = sum_j h_{p-j} * sum over ways to pair 2j of the nu-indices
/// axis-wise, each unpaired index contributing a factor x_a.
pub(crate) fn radial_mixed_partial(counts: &[usize], x: &[f64], h: &[f64]) -> f64 {
    let p: usize = counts.iter().sum();
    debug_assert!(h.len() > p);
    let n = counts.len();
    let jmax = p / 2;
    let mut total = 0.0;
    // Iterate over per-axis pair counts j_a with 2 j_a <= c_a.
    let mut ja = [0usize; 3];
    fn pair_count(c: usize, j: usize) -> f64 {
        // c! / (j! (c-2j)! 2^j)
        (factorial(c) as f64) / ((factorial(j) * factorial(c - 2 * j)) as f64 * 2f64.powi(j as i32))
    }
    fn rec(
        axis: usize,
        n: usize,
        counts: &[usize],
        x: &[f64],
        ja: &mut [usize; 3],
        coeff: f64,
        monom: f64,
        jsum: usize,
        jmax: usize,
        p: usize,
        h: &[f64],
        total: &mut f64,
    ) {
        if axis == n {
            if jsum <= jmax {
                *total += coeff * monom * h[p - jsum];
            }
            return;
        }
        let c = counts[axis];
        for j in 0..=(c / 2) {
            ja[axis] = j;
            let pw = c - 2 * j;
            let mono = if pw == 0 { 1.0 } else { x[axis].powi(pw as i32) };
            rec(axis + 1, n, counts, x, ja, coeff * pair_count(c, j), monom * mono, jsum + j, jmax, p, h, total);
        }
    }
    rec(0, n, counts, x, &mut ja, 1.0, 1.0, 0, jmax, p, h, &mut total);
    total
}

// ---------------------------------------------------------------------------
// Fundamental solution of -Laplace
// ---------------------------------------------------------------------------

pub const MAX_E_ORDER: usize = 6;

/// Ladder h_m = ((1/r) d/dr)^m E for the fundamental solution.
/// n = 3: E = 1/(4 pi r); n = 2: E = -(1/2 pi) log r.
pub(crate) fn e_ladder(r: f64, n: usize, max_m: usize) -> [f64; 7] {
    let mut h = [0.0f64; 7];
    match n {
        3 => {
            let c = 1.0 / (4.0 * std::f64::consts::PI);
            // e_m = (-1)^m (2m-1)!! c r^{-(2m+1)}
            let inv_r2 = 1.0 / (r * r);
            let mut cur = c / r;
            h[0] = cur;
            for m in 1..=max_m {
                cur *= -((2 * m - 1) as f64) * inv_r2;
                h[m] = cur;
            }
        }
        2 => {
            let c = 1.0 / (2.0 * std::f64::consts::PI);
            h[0] = -c * r.ln();
            // e_m = (-1)^m 2^{m-1} (m-1)! c r^{-2m},  m >= 1
            let inv_r2 = 1.0 / (r * r);
            let mut cur = -c * inv_r2;
            if max_m >= 1 {
                h[1] = cur;
            }
            for m in 2..=max_m {
                cur *= -((2 * (m - 1)) as f64) * inv_r2;
                h[m] = cur;
            }
        }
        _ => unreachable!("dimension checked by callers"),
    }
    h
}

/// E(x) or a mixed partial d^alpha E(x), analytic radial differentiation.
pub fn laplace_fundamental(x: &[f64], alpha: &[usize]) -> Result<f64> {
    ensure_finite(x, "laplace fundamental point")?;
    let n = x.len();
    if !(n == 2 || n == 3) {
        return Err(Error::ContractViolation(format!("dimension {n} not in {{2,3}}")));
    }
    let p: usize = alpha.iter().sum();
    if p > MAX_E_ORDER {
        return Err(Error::UnsupportedOrder { requested: p, max: MAX_E_ORDER });
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        return Err(Error::Singularity("E evaluated at the origin".into()));
    }
    let h = e_ladder(r2.sqrt(), n, p);
    Ok(radial_mixed_partial(alpha, x, &h))
}

/// Convenience: gradient component d_i E(x).
pub fn grad_e(x: &[f64], i: usize) -> Result<f64> {
    let mut alpha = [0usize; 3];
    alpha[i] = 1;
    laplace_fundamental(x, &alpha[..x.len()])
}

// ---------------------------------------------------------------------------
// Poisson kernels
// ---------------------------------------------------------------------------

/// Poisson kernel of -Laplace in the half-space: P_0(x) = -2 d_n E(x).
pub fn poisson_kernel_laplace(x: &HalfSpacePoint) -> Result<f64> {
    let n = x.dim();
    Ok(-2.0 * grad_e(x.coords(), n - 1)?)
}

/// Poisson kernel for d_t - Laplace: P(x, xi', t) = -2 d_n Gamma(x - xi', t).
/// Returns 0 for t <= 0.
pub fn poisson_kernel_heat(x: &HalfSpacePoint, xi_prime: &[f64], t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let n = x.dim();
    let mut v = [0.0f64; 3];
    for i in 0..n - 1 {
        v[i] = x.coords()[i] - xi_prime[i];
    }
    v[n - 1] = x.normal();
    let mut alpha = [0usize; 3];
    alpha[n - 1] = 1;
    Ok(-2.0 * heat_kernel_deriv(&v[..n], t, &alpha[..n], 0)?)
}
