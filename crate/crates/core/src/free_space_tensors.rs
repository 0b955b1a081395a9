//! Oseen tensor S_ij (fundamental solution of the nonstationary Stokes
//! system in R^n) through a closed-form radial auxiliary.
//!
//! With Phi(x, t) = int Gamma(x - z, t) E(z) dz one has Laplace Phi = -Gamma
//! and, radially, Phi'(r) = -a_n gamma(n/2, r^2/4t) r^{1-n}. All mixed
//! partials reduce to the ladder h_m = ((1/r) d/dr)^m Phi, which in turn
//! reduces to derivatives of g(u) = gamma(n/2, u) u^{-n/2} at u = r^2/(4t).

use crate::error::{ensure_finite, Error, Result};
use crate::scalar_kernels::{heat_kernel_deriv, heat_kernel_value, radial_mixed_partial, DerivSpec};
use crate::special::{gamma_p, ln_gamma};

/// Highest supported mixed-partial order on Gamma_ij / S_ij.
pub const MAX_OSEEN_ORDER: usize = 4;

/// Radial auxiliary at (r, t): phi1 = Phi'(r)/r and phi2 = Phi''(r).
#[derive(Clone, Copy, Debug)]
pub struct RadialAux {
    pub r: f64,
    pub t: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub n: usize,
}

impl RadialAux {
    /// Residual of the radial Laplacian identity phi2 + (n-1) phi1 + Gamma = 0.
    pub fn laplacian_residual(&self) -> f64 {
        let mut x = [0.0f64; 3];
        x[0] = self.r;
        self.phi2 + (self.n as f64 - 1.0) * self.phi1 + heat_kernel_value(&x[..self.n], self.t)
    }
}

/// Derivatives of g(u) = gamma(a, u) u^{-a}, orders 0..=jmax.
/// Series for small u; the recurrence u g' = e^{-u} - a g otherwise.
fn g_derivs(a: f64, u: f64, jmax: usize) -> [f64; 6] {
    let mut g = [0.0f64; 6];
    if u <= 1.5 {
        // g^{(j)}(u) = (-1)^j sum_k (-u)^k / (k! (a + j + k))
        for (j, gj) in g.iter_mut().enumerate().take(jmax + 1) {
            let mut term = 1.0f64;
            let mut sum = 1.0 / (a + j as f64);
            for k in 1..60 {
                term *= -u / k as f64;
                let add = term / (a + j as f64 + k as f64);
                sum += add;
                if add.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            *gj = if j % 2 == 0 { sum } else { -sum };
        }
    } else {
        let gamma_a = ln_gamma(a).exp();
        g[0] = gamma_a * gamma_p(a, u) * u.powf(-a);
        let eu = (-u).exp();
        for j in 1..=jmax {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            g[j] = (sign * eu - (a + j as f64 - 1.0) * g[j - 1]) / u;
        }
    }
    g
}

/// Ladder h_m = ((1/r) d/dr)^m Phi for m = 1..=max_m (h[0] is unused and
/// set to NaN; Phi itself never enters the tensor formulas).
fn phi_ladder(r: f64, t: f64, n: usize, max_m: usize) -> [f64; 7] {
    let a = n as f64 / 2.0;
    let u = r * r / (4.0 * t);
    let g = g_derivs(a, u, max_m.saturating_sub(1));
    let gamma0 = (4.0 * std::f64::consts::PI * t).powf(-a);
    let mut h = [f64::NAN; 7];
    for m in 1..=max_m {
        h[m] = -0.5 * gamma0 * (2.0 * t).powi(1 - m as i32) * g[m - 1];
    }
    h
}

/// Closed-form radial auxiliary. Smooth limits at r -> 0.
pub fn radial_aux(r: f64, t: f64, n: usize) -> Result<RadialAux> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("radial_aux requires t > 0, got {t}")));
    }
    if r < 0.0 || !r.is_finite() {
        return Err(Error::NonFiniteInput("radial_aux radius".into()));
    }
    let h = phi_ladder(r, t, n, 2);
    let phi1 = h[1];
    let phi2 = h[1] + r * r * h[2];
    Ok(RadialAux { r, t, phi1, phi2, n })
}

/// Mixed partial d^alpha Gamma_ij(x, t) plus m_t time derivatives.
/// Gamma_ij = d_i d_j Phi; time derivatives use d_t Phi = -Gamma, so
/// d_t Gamma_ij = -d_i d_j Gamma (a pure heat-kernel derivative).
pub(crate) fn gamma_ij_deriv(x: &[f64], t: f64, i: usize, j: usize, alpha: &[usize], m_t: usize) -> Result<f64> {
    let n = x.len();
    let p: usize = alpha.iter().sum();
    if p > MAX_OSEEN_ORDER {
        return Err(Error::UnsupportedOrder { requested: p, max: MAX_OSEEN_ORDER });
    }
    if !(t > 0.0) {
        return Err(Error::Domain("Gamma_ij requires t > 0".into()));
    }
    if m_t > 0 {
        // d_t^m Gamma_ij = -Laplace^{m-1} d_i d_j Gamma
        let mut a = [0usize; 3];
        a[..n].copy_from_slice(alpha);
        a[i] += 1;
        a[j] += 1;
        let mut lap = |extra: &[usize]| -> Result<f64> {
            let mut b = a;
            for (bi, e) in b[..n].iter_mut().zip(extra) {
                *bi += e;
            }
            heat_kernel_deriv(x, t, &b[..n], 0)
        };
        // expand Laplace^{m-1}
        return laplace_pow(n, m_t - 1, &mut lap).map(|v| -v);
    }
    let mut counts = [0usize; 3];
    counts[..n].copy_from_slice(alpha);
    counts[i] += 1;
    counts[j] += 1;
    let total = p + 2;
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = phi_ladder(r, t, n, total);
    // radial_mixed_partial indexes h[0..=total]; h[0] is never touched since
    // every term of a (p+2)-th partial carries at least one ladder step.
    Ok(radial_mixed_partial(&counts[..n], x, &h))
}

fn laplace_pow(n: usize, m: usize, eval: &mut dyn FnMut(&[usize]) -> Result<f64>) -> Result<f64> {
    if m == 0 {
        return eval(&[0, 0, 0][..n]);
    }
    // Laplace^m = sum over compositions, small m only (m <= 2 in practice).
    let mut total = 0.0;
    let mut err: Option<Error> = None;
    let mut k = [0usize; 3];
    fn fact(k: usize) -> usize {
        (1..=k).product::<usize>().max(1)
    }
    fn rec(
        axis: usize,
        rem: usize,
        n: usize,
        m: usize,
        k: &mut [usize; 3],
        total: &mut f64,
        err: &mut Option<Error>,
        eval: &mut dyn FnMut(&[usize]) -> Result<f64>,
    ) {
        if err.is_some() {
            return;
        }
        if axis == n - 1 {
            k[axis] = rem;
            let mut coeff = fact(m) as f64;
            for &ki in k[..n].iter() {
                coeff /= fact(ki) as f64;
            }
            let extra = [2 * k[0], 2 * k[1], 2 * k[2]];
            match eval(&extra[..n]) {
                Ok(v) => *total += coeff * v,
                Err(e) => *err = Some(e),
            }
            return;
        }
        for j in 0..=rem {
            k[axis] = j;
            rec(axis + 1, rem - j, n, m, k, total, err, eval);
        }
    }
    rec(0, m, n, m, &mut k, &mut total, &mut err, eval);
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Gamma_ij(x, t) and derivatives per the request's [`DerivSpec`]
/// interpreted on x and t.
pub fn oseen_gamma_ij(x: &[f64], t: f64, i: usize, j: usize, d: &DerivSpec) -> Result<f64> {
    ensure_finite(x, "oseen point")?;
    let n = x.len();
    if (x.iter().all(|&v| v == 0.0)) && t == 0.0 {
        return Err(Error::Singularity("Oseen tensor at (0, 0)".into()));
    }
    let a = d.x_multi(n);
    gamma_ij_deriv(x, t, i, j, &a[..n], d.m)
}

/// Oseen tensor S_ij = delta_ij Gamma + Gamma_ij, with derivatives.
pub fn oseen_tensor(x: &[f64], t: f64, i: usize, j: usize, d: &DerivSpec) -> Result<f64> {
    ensure_finite(x, "oseen point")?;
    let n = x.len();
    if (x.iter().all(|&v| v == 0.0)) && t == 0.0 {
        return Err(Error::Singularity("Oseen tensor at (0, 0)".into()));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let a = d.x_multi(n);
    let mut v = gamma_ij_deriv(x, t, i, j, &a[..n], d.m)?;
    if i == j {
        v += heat_kernel_deriv(x, t, &a[..n], d.m)?;
    }
    Ok(v)
}

/// Oseen pressure: s_j(x, t) = -d_j E(x) delta(t); returns the coefficient
/// of the delta(t) atom.
pub fn oseen_pressure(x: &[f64], j: usize) -> Result<f64> {
    crate::scalar_kernels::grad_e(x, j).map(|v| -v)
}

/// Parity sign epsilon_j = 1 - 2 delta_{jn} (1-based on the normal slot:
/// j is a 0-based index, the normal direction is n-1).
pub fn epsilon(j: usize, n: usize) -> f64 {
    if j == n - 1 {
        -1.0
    } else {
        1.0
    }
}
