use stokes_half::quadrature::*;
use stokes_half::scalar_kernels::*;

// L_i(x, t) = int_{Si x [0, x_n]} d_n Gamma(x - w, t) d_i E(w) dw
fn l_i(x: &[f64], t: f64, i: usize, spec: &QuadSpec) -> f64 {
    let n = x.len();
    let nd = n - 1;
    let f = |w: &[f64]| {
        let mut d = [0.0f64; 3];
        for a in 0..n {
            d[a] = x[a] - w[a];
        }
        let mut na = [0usize; 3];
        na[nd] = 1;
        let g = heat_kernel_deriv(&d[..n], t, &na[..n], 0).unwrap_or(f64::NAN);
        let mut ea = [0usize; 3];
        ea[i] = 1;
        g * laplace_fundamental(w, &ea[..n]).unwrap_or(f64::NAN)
    };
    let corner = SingularityMark::power(vec![0.0; n], (n - 1) as f64, x[nd].min(t.sqrt()));
    integrate_layer(n, f, x[nd], spec, &[corner]).unwrap().value
}

// My analytic layer: int (d_j d_n Gamma)(x-w) d_i E(w) dw over the same layer.
fn dj_l_i(x: &[f64], t: f64, i: usize, j: usize, spec: &QuadSpec) -> f64 {
    let n = x.len();
    let nd = n - 1;
    let f = |w: &[f64]| {
        let mut d = [0.0f64; 3];
        for a in 0..n {
            d[a] = x[a] - w[a];
        }
        let mut ga = [0usize; 3];
        ga[j] += 1;
        ga[nd] += 1;
        let g = heat_kernel_deriv(&d[..n], t, &ga[..n], 0).unwrap_or(f64::NAN);
        let mut ea = [0usize; 3];
        ea[i] = 1;
        g * laplace_fundamental(w, &ea[..n]).unwrap_or(f64::NAN)
    };
    let corner = SingularityMark::power(vec![0.0; n], (n - 1) as f64, x[nd].min(t.sqrt()));
    integrate_layer(n, f, x[nd], spec, &[corner]).unwrap().value
}

fn main() {
    let spec = QuadSpec {
        rel_tol: 1e-8,
        abs_tol: 1e-12,
        max_subdiv: 4000,
        tail: TailPolicy::Gaussian { c: 2.0, sqrt_t: 0.6f64.sqrt(), centers: vec![[0.3, 0.0], [0.0, 0.0]] },
    };
    let x = [0.3f64, 0.8];
    let t = 0.6f64;
    let h = 1e-3;
    for (i, j) in [(0usize, 0usize), (0, 1), (1, 1), (1, 0)] {
        let mut xp = x;
        xp[j] += h;
        let mut xm = x;
        xm[j] -= h;
        let fd = (l_i(&xp, t, i, &spec) - l_i(&xm, t, i, &spec)) / (2.0 * h);
        let analytic = dj_l_i(&x, t, i, j, &spec);
        println!("i={i} j={j}: FD d_j L = {fd:.8e}, layer-analytic = {analytic:.8e}, rel diff {:.2e}",
                 (fd - analytic).abs() / analytic.abs().max(1e-12));
    }
}
