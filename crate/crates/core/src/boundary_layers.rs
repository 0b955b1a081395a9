//! Half-space auxiliaries A and B and the Golovkin tensor (Poisson kernel
//! of the half-space Stokes problem), plus the boundary-value solve.
//!
//! A(x,t) = int_Si Gamma(z',0,t) E(x-z') dz'
//! B(x,t) = int_Si Gamma(x-z',t) E(z',0) dz'
//! K_ij(x,t) = -2 d_ij d_n Gamma(x,t)
//!             - 4 d_j int_{Si x [0,x_n]} d_n Gamma(z,t) d_i E(x-z) dz
//!             - 2 d_nj d_i E(x) delta(t)
//!
//! The delta(t) atoms are never smeared numerically: they are carried
//! symbolically in [`KernelValue`] and consumed exactly as t-slice integrals
//! by time convolutions.

use crate::error::{Error, Result};
use crate::quadrature::{
    integrate_layer, integrate_tangential, integrate_time, QuadResult, QuadSpec, SingularityMark,
    TailPolicy,
};
use crate::scalar_kernels::{heat_kernel_deriv, laplace_fundamental, DerivSpec, HalfSpacePoint};

/// Kernel value split into a regular part (for t > 0) and the coefficient
/// of a delta(t) atom, with the quadrature error of the regular part.
#[derive(Clone, Copy, Debug, Default)]
pub struct KernelValue {
    pub regular: f64,
    pub delta_coeff: f64,
    pub has_delta: bool,
    pub error: f64,
}

pub(crate) fn gaussian_tail(sqrt_t: f64, centers: Vec<[f64; 2]>) -> TailPolicy {
    TailPolicy::Gaussian { c: 2.0, sqrt_t, centers }
}

fn e_point_mark(n: usize, location: &[f64], scale: f64) -> SingularityMark {
    SingularityMark::power(location.to_vec(), (n - 1) as f64, scale.max(1e-6))
}

// ---------------------------------------------------------------------------
// A and B
// ---------------------------------------------------------------------------

/// d_x^alpha d_t^m A(x, t) for x off the boundary plane (x_n != 0).
/// Spatial derivatives land on E, time derivatives on Gamma.
pub fn a_function_deriv(x: &[f64], t: f64, alpha: &[usize], m: usize, spec: &QuadSpec) -> Result<QuadResult> {
    let n = x.len();
    if !(t > 0.0) {
        return Err(Error::Domain("A(x,t) requires t > 0".into()));
    }
    if x[n - 1] == 0.0 {
        return Err(Error::Singularity("A derivative on the boundary plane".into()));
    }
    let xn = x[n - 1];
    let f = |zp: &[f64]| {
        let mut zfull = [0.0f64; 3];
        zfull[..n - 1].copy_from_slice(zp);
        let g = heat_kernel_deriv(&zfull[..n], t, &[0, 0, 0][..n], m).unwrap_or(f64::NAN);
        let mut d = [0.0f64; 3];
        for i in 0..n - 1 {
            d[i] = x[i] - zp[i];
        }
        d[n - 1] = xn;
        let e = laplace_fundamental(&d[..n], alpha).unwrap_or(f64::NAN);
        g * e
    };
    let mut spec = spec.clone();
    spec.tail = gaussian_tail(t.sqrt(), vec![[0.0, 0.0]]);
    // The E factor is peaked (scale |x_n|) around z' = x'.
    let marks = [e_point_mark(n, &x[..n - 1], xn.abs())];
    integrate_tangential(n, f, &spec, &marks)
}

/// A(x, t) with derivatives taken from the x/t part of a [`DerivSpec`].
pub fn a_function(x: &HalfSpacePoint, t: f64, d: &DerivSpec) -> Result<QuadResult> {
    let n = x.dim();
    let spec = QuadSpec::nested(gaussian_tail(t.max(1e-12).sqrt(), vec![[0.0, 0.0]]));
    a_function_deriv(x.coords(), t, &d.x_multi(n)[..n], d.m, &spec)
}

/// d_x^alpha d_t^m B(x, t); all derivatives land on Gamma, so any order up
/// to the heat-kernel cap is analytic. Defined for all x (x_n of any sign).
pub fn b_function_deriv(x: &[f64], t: f64, alpha: &[usize], m: usize, spec: &QuadSpec) -> Result<QuadResult> {
    let n = x.len();
    if !(t > 0.0) {
        return Err(Error::Domain("B(x,t) requires t > 0".into()));
    }
    let f = |zp: &[f64]| {
        let mut d = [0.0f64; 3];
        for i in 0..n - 1 {
            d[i] = x[i] - zp[i];
        }
        d[n - 1] = x[n - 1];
        let g = heat_kernel_deriv(&d[..n], t, alpha, m).unwrap_or(f64::NAN);
        let mut z0 = [0.0f64; 3];
        z0[..n - 1].copy_from_slice(zp);
        let e = laplace_fundamental(&z0[..n], &[0, 0, 0][..n]).unwrap_or(f64::NAN);
        g * e
    };
    let mut spec = spec.clone();
    let mut center = [0.0f64; 2];
    center[..n - 1].copy_from_slice(&x[..n - 1]);
    spec.tail = gaussian_tail(t.sqrt(), vec![center, [0.0, 0.0]]);
    let marks = if n == 2 {
        vec![SingularityMark::log(vec![0.0], 0.3)]
    } else {
        vec![SingularityMark::power(vec![0.0, 0.0], 1.0, 0.3)]
    };
    integrate_tangential(n, f, &spec, &marks)
}

pub fn b_function(x: &[f64], t: f64, d: &DerivSpec) -> Result<QuadResult> {
    let n = x.len();
    let spec = QuadSpec::nested(gaussian_tail(t.max(1e-12).sqrt(), vec![[0.0, 0.0]]));
    b_function_deriv(x, t, &d.x_multi(n)[..n], d.m, &spec)
}

// ---------------------------------------------------------------------------
// Golovkin tensor
// ---------------------------------------------------------------------------

/// Regular (t > 0) part of the Golovkin tensor K_ij at an interior point.
///
/// After the change of variables w = x - z the normal derivative for j = n
/// acts only on the Gamma slot: the Leibniz slice at w_n = x_n carries
/// d_n Gamma((x'-w', 0), t) = 0 (odd in the normal coordinate), so for all j
///   K~_ij(x,t) = -2 d_ij d_n Gamma(x,t)
///                - 4 int_{Si x [0,x_n]} (d_j d_n Gamma)(x-w,t) d_i E(w) dw,
/// with the integrand singularity fixed at the corner w = 0.
pub fn golovkin_regular(x: &[f64], t: f64, i: usize, j: usize, spec: &QuadSpec) -> Result<QuadResult> {
    let n = x.len();
    if !(t > 0.0) {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let xn = x[n - 1];
    if xn <= 0.0 {
        return Err(Error::Domain("Golovkin tensor needs x_n > 0".into()));
    }
    let nd = n - 1;
    let mut lead_alpha = [0usize; 3];
    lead_alpha[nd] = 1;
    let mut value = 0.0;
    if i == j {
        value += -2.0 * heat_kernel_deriv(x, t, &lead_alpha[..n], 0)?;
    }

    let mut galpha = [0usize; 3];
    galpha[j] += 1;
    galpha[nd] += 1;
    let layer_f = |w: &[f64]| {
        let mut d = [0.0f64; 3];
        for a in 0..n {
            d[a] = x[a] - w[a];
        }
        let g = heat_kernel_deriv(&d[..n], t, &galpha[..n], 0).unwrap_or(f64::NAN);
        let mut ea = [0usize; 3];
        ea[i] = 1;
        let e = laplace_fundamental(w, &ea[..n]).unwrap_or(f64::NAN);
        g * e
    };
    let mut lspec = spec.clone();
    let mut center = [0.0f64; 2];
    center[..nd].copy_from_slice(&x[..nd]);
    lspec.tail = gaussian_tail(t.sqrt(), vec![center, [0.0, 0.0]]);
    let corner = SingularityMark::power(vec![0.0; n], (n - 1) as f64, xn.min(t.sqrt()));
    let q = integrate_layer(n, layer_f, xn, &lspec, &[corner])?;
    value += -4.0 * q.value;
    Ok(QuadResult { value, error: 4.0 * q.error })
}

/// Golovkin tensor K_ij(x, t): regular part for t > 0 plus the coefficient
/// of the delta(t) atom, -2 delta_nj d_i E(x).
pub fn golovkin_tensor(x: &HalfSpacePoint, t: f64, i: usize, j: usize) -> Result<KernelValue> {
    let n = x.dim();
    let spec = QuadSpec::nested(gaussian_tail(t.abs().max(1e-12).sqrt(), vec![[0.0, 0.0]]));
    let regular = if t > 0.0 {
        golovkin_regular(x.coords(), t, i, j, &spec)?
    } else {
        QuadResult { value: 0.0, error: 0.0 }
    };
    let delta_coeff = if j == n - 1 {
        -2.0 * crate::scalar_kernels::grad_e(x.coords(), i)?
    } else {
        0.0
    };
    Ok(KernelValue {
        regular: regular.value,
        delta_coeff,
        has_delta: j == n - 1,
        error: regular.error,
    })
}

// ---------------------------------------------------------------------------
// Boundary-value solve
// ---------------------------------------------------------------------------

/// Boundary data phi on Si x (0, T): component j at (xi', s), zero for
/// s < 0, with a declared tangential decay class. `window` is the tangential
/// radius beyond which phi-weighted potentials are negligible at tolerance.
pub struct BoundaryData<'a> {
    pub phi: &'a (dyn Fn(usize, &[f64], f64) -> f64 + Sync),
    pub tail: TailPolicy,
    pub window: f64,
}

/// Space-time heat-layer potential sum Psi(v, t) =
/// sum_j int_0^t int_Si (d_j d_n Gamma)(v - xi', t - s) phi_j(xi', s) dxi' ds.
///
/// Evaluated in the integrated-by-parts form that is stable down to the
/// plane v_n = 0: tangential derivatives move onto phi, and d_n^2 Gamma is
/// exchanged via the heat equation (d_n^2 = d_t - Lap') followed by parts
/// in s. Requires phi C^1 in s with phi(., 0) = 0 and C^2 in xi'
/// (derivatives taken by central differences on the data).
fn layer_potential_sum(data: &BoundaryData, v: &[f64], t: f64, spec: &QuadSpec) -> f64 {
    let n = v.len();
    let nd = n - 1;
    // Far cutoff: the Gamma factor localizes xi' near v'; past the data
    // window plus the diffusion radius the potential is below tolerance.
    let reach = data.window + crate::quadrature::gaussian_truncation_radius(0.0, 2.0, t.sqrt(), spec.abs_tol);
    let dist2: f64 = v[..nd].iter().map(|c| c * c).sum();
    if dist2.sqrt() > reach + v[nd].abs() {
        return 0.0;
    }
    let dh = 1e-3;
    let div_tan_at = |xip: &[f64], s: f64| {
        let mut div_tan = 0.0;
        for j in 0..nd {
            let mut xp = [0.0f64; 2];
            xp[..nd].copy_from_slice(xip);
            xp[j] += dh;
            let mut xm = [0.0f64; 2];
            xm[..nd].copy_from_slice(xip);
            xm[j] -= dh;
            div_tan += ((data.phi)(j, &xp[..nd], s) - (data.phi)(j, &xm[..nd], s)) / (2.0 * dh);
        }
        div_tan
    };
    // On the plane v_n = 0 the Poisson-type tangential part attains its
    // boundary value -1/2 sum_j d_j phi_j(v', t) instead of the (identically
    // zero) integrand value.
    let attainment = if v[nd] == 0.0 { -0.5 * div_tan_at(&v[..nd], t) } else { 0.0 };
    let time_f = |s: f64| {
        let tau = t - s;
        if tau <= 0.0 {
            return 0.0;
        }
        let f = |xip: &[f64]| {
            let mut d = [0.0f64; 3];
            for a in 0..nd {
                d[a] = v[a] - xip[a];
            }
            d[nd] = v[nd];
            let mut total = 0.0;
            // Tangential components: int d_n Gamma (d_j phi_j).
            let mut na = [0usize; 3];
            na[nd] = 1;
            let div_tan = if v[nd] == 0.0 { 0.0 } else { div_tan_at(xip, s) };
            if div_tan != 0.0 {
                total += heat_kernel_deriv(&d[..n], tau, &na[..n], 0).unwrap_or(f64::NAN) * div_tan;
            }
            // Normal component: int Gamma (d_s phi_n - Lap' phi_n).
            let p0 = (data.phi)(nd, xip, s);
            let ps = ((data.phi)(nd, xip, s + dh) - (data.phi)(nd, xip, (s - dh).max(0.0)))
                / (dh + (s - (s - dh).max(0.0)));
            let mut lap = 0.0;
            for a in 0..nd {
                let mut xp = [0.0f64; 2];
                xp[..nd].copy_from_slice(xip);
                xp[a] += dh;
                let mut xm = [0.0f64; 2];
                xm[..nd].copy_from_slice(xip);
                xm[a] -= dh;
                lap += ((data.phi)(nd, &xp[..nd], s) - 2.0 * p0 + (data.phi)(nd, &xm[..nd], s)) / (dh * dh);
            }
            let w = ps - lap;
            if w != 0.0 {
                total += heat_kernel_deriv(&d[..n], tau, &[0, 0, 0][..n], 0).unwrap_or(f64::NAN) * w;
            }
            total
        };
        let mut xspec = spec.clone();
        xspec.tail = match &data.tail {
            TailPolicy::Algebraic { p } => TailPolicy::Algebraic { p: *p },
            TailPolicy::Gaussian { c: cc, sqrt_t, centers } => {
                let mut cs = centers.clone();
                let mut c = [0.0f64; 2];
                c[..nd].copy_from_slice(&v[..nd]);
                cs.push(c);
                TailPolicy::Gaussian { c: *cc, sqrt_t: sqrt_t.max(tau.sqrt()), centers: cs }
            }
        };
        integrate_tangential(n, f, &xspec, &[]).map(|q| q.value).unwrap_or(f64::NAN)
    };
    let tmarks = [SingularityMark::gaussian_endpoint(vec![t])];
    attainment + integrate_time(time_f, t, &tmarks, spec).map(|q| q.value).unwrap_or(f64::NAN)
}

/// Heat-Poisson evolution of one boundary component:
/// U_i(x,t) = -2 int_0^t int_Si d_n Gamma(x - xi', t - s) phi_i(xi', s).
fn poisson_evolution(data: &BoundaryData, i: usize, x: &[f64], t: f64, spec: &QuadSpec) -> f64 {
    let n = x.len();
    let nd = n - 1;
    let time_f = |s: f64| {
        let tau = t - s;
        if tau <= 0.0 {
            return 0.0;
        }
        let f = |xip: &[f64]| {
            let pj = (data.phi)(i, xip, s);
            if pj == 0.0 {
                return 0.0;
            }
            let mut d = [0.0f64; 3];
            for a in 0..nd {
                d[a] = x[a] - xip[a];
            }
            d[nd] = x[nd];
            let mut ga = [0usize; 3];
            ga[nd] = 1;
            -2.0 * heat_kernel_deriv(&d[..n], tau, &ga[..n], 0).unwrap_or(f64::NAN) * pj
        };
        let mut xspec = spec.clone();
        xspec.tail = data.tail.clone();
        integrate_tangential(n, f, &xspec, &[]).map(|q| q.value).unwrap_or(f64::NAN)
    };
    let tmarks = [SingularityMark::power(vec![t], 0.5, (0.05 * t).max(1e-3))];
    integrate_time(time_f, t, &tmarks, spec).map(|q| q.value).unwrap_or(0.0)
}

/// Velocity of the half-space Stokes boundary-value problem by space-time
/// convolution with the Golovkin tensor: the delta(t) part of K_in becomes
/// an exact t-slice integral, and the layer term is evaluated as
/// -4 int_{Si x [0, x_n]} d_i E(w) Psi(x - w, t) dw over the cached
/// potential Psi.
pub fn golovkin_solve_boundary(
    data: &BoundaryData,
    x: &HalfSpacePoint,
    t: f64,
    spec: &QuadSpec,
) -> Result<Vec<f64>> {
    let n = x.dim();
    if t <= 0.0 {
        return Ok(vec![0.0; n]);
    }
    let nd = n - 1;
    let xn = x.normal();
    let pspec = QuadSpec {
        rel_tol: spec.rel_tol.max(1e-9),
        abs_tol: spec.abs_tol,
        max_subdiv: spec.max_subdiv,
        tail: spec.tail.clone(),
    };

    // Cached potential for the layer term (n = 2 path; n = 3 falls back to
    // direct evaluation of the potential inside the quadrature).
    let dbg = std::env::var("STOKES_HALF_DEBUG_SOLVE").is_ok();
    if dbg {
        eprintln!("solve: entering, n={n} xn={xn}");
    }
    let t_build = std::time::Instant::now();
    let table = if n == 2 && xn > 0.0 {
        // Span the whole far-cutoff radius of the potential so that layer
        // tail nodes never fall back to direct evaluation.
        let reach = data.window
            + crate::quadrature::gaussian_truncation_radius(0.0, 2.0, t.sqrt(), pspec.abs_tol);
        let w = reach + x.coords()[0].abs() + xn + 1.0;
        let dv = 0.22 * t.sqrt().min(1.0);
        let nx = ((2.0 * w / dv).ceil() as usize).clamp(48, 640);
        let nz = ((xn / (0.6 * dv)).ceil() as usize).clamp(8, 160);
        if dbg {
            eprintln!("solve: table {nx} x {nz}");
        }
        Some(crate::interp::Table2::build(-w, w, nx, 0.0, xn, nz.max(4), |vx, vz| {
            layer_potential_sum(data, &[vx, vz], t, &pspec)
        }))
    } else {
        None
    };
    if dbg {
        eprintln!("table built in {:?}", t_build.elapsed());
    }
    let psi = |v: &[f64]| -> f64 {
        if let Some(tb) = &table {
            if v[0] >= tb.x0 && v[0] <= tb.x0 + tb.dx * (tb.nx - 1) as f64 {
                return tb.eval(v[0], v[1]);
            }
        }
        layer_potential_sum(data, v, t, &pspec)
    };

    let mut out = vec![0.0; n];
    for i in 0..n {
        // Instantaneous term: -2 int d_i E(x - xi') phi_n(xi', t) dxi'.
        let slice_f = |xip: &[f64]| {
            let pn = (data.phi)(nd, xip, t);
            if pn == 0.0 {
                return 0.0;
            }
            let mut d = [0.0f64; 3];
            for a in 0..nd {
                d[a] = x.coords()[a] - xip[a];
            }
            d[nd] = xn;
            let mut ea = [0usize; 3];
            ea[i] = 1;
            laplace_fundamental(&d[..n], &ea[..n]).unwrap_or(f64::NAN) * pn
        };
        let mut sspec = spec.clone();
        sspec.tail = data.tail.clone();
        let t_s = std::time::Instant::now();
        let q = integrate_tangential(n, slice_f, &sspec, &[])?;
        out[i] = -2.0 * q.value;
        if dbg { eprintln!("i={i} slice = {:.6e} in {:?}", out[i], t_s.elapsed()); }

        // Local heat-Poisson term.
        let t_p = std::time::Instant::now();
        let pois = poisson_evolution(data, i, x.coords(), t, spec);
        out[i] += pois;
        if dbg { eprintln!("i={i} poisson = {pois:.6e} in {:?}", t_p.elapsed()); }

        // Layer term over the cached potential.
        let layer_f = |w: &[f64]| {
            let mut ea = [0usize; 3];
            ea[i] = 1;
            let e = laplace_fundamental(w, &ea[..n]).unwrap_or(f64::NAN);
            let mut v = [0.0f64; 3];
            for a in 0..n {
                v[a] = x.coords()[a] - w[a];
            }
            e * psi(&v[..n])
        };
        let mut lspec = spec.clone();
        lspec.tail = TailPolicy::Algebraic { p: (n - 1) as f64 + 1.0 };
        let corner = SingularityMark::power(vec![0.0; n], (n - 1) as f64, xn.min(t.sqrt()));
        let t_l = std::time::Instant::now();
        let q = integrate_layer(n, layer_f, xn, &lspec, &[corner])?;
        if dbg { eprintln!("i={i} layer = {:.6e} in {:?}", -4.0 * q.value, t_l.elapsed()); }
        out[i] += -4.0 * q.value;
    }
    Ok(out)
}
