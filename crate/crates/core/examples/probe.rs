use std::time::Instant;
use stokes_half::boundary_layers::*;
use stokes_half::quadrature::*;
use stokes_half::scalar_kernels::HalfSpacePoint;

fn main() {
    let eta = |s: f64| if s <= 0.0 { 0.0 } else { s * s / (1.0 + s * s) };
    let phi = move |j: usize, xi: &[f64], s: f64| {
        let g = 1.0 + xi[0] * xi[0];
        match j {
            0 => eta(s) * xi[0] / g,
            _ => eta(s) / g,
        }
    };
    // Direct double convolution with golovkin_regular as ground truth for
    // the history term (slow; loose tolerance).
    let x = [0.4f64, 0.7];
    let t = 0.9f64;
    let kspec = QuadSpec { rel_tol: 3e-3, abs_tol: 3e-5, max_subdiv: 400, tail: TailPolicy::Algebraic { p: 2.0 } };
    for i in 0..2usize {
        let t0 = Instant::now();
        let mut hist = 0.0;
        for j in 0..2usize {
            let time_f = |s: f64| {
                let tau = t - s;
                if tau <= 0.0 {
                    return 0.0;
                }
                let f = |xip: &[f64]| {
                    let p = phi(j, xip, s);
                    if p == 0.0 {
                        return 0.0;
                    }
                    let arg = [x[0] - xip[0], x[1]];
                    golovkin_regular(&arg, tau, i, j, &kspec).map(|q| q.value).unwrap_or(f64::NAN) * p
                };
                integrate_tangential(2, f, &kspec, &[]).map(|q| q.value).unwrap_or(f64::NAN)
            };
            let tm = [SingularityMark::power(vec![t], 0.5, 0.05)];
            hist += integrate_time(time_f, t, &tm, &kspec).unwrap().value;
        }
        println!("i={i}: direct history = {hist:.6e} in {:?}", t0.elapsed());
    }

    // And the table route for comparison.
    let data = BoundaryData { phi: &phi, tail: TailPolicy::Algebraic { p: 2.0 }, window: 8.0 };
    let hx = HalfSpacePoint::new(&x).unwrap();
    let spec = QuadSpec { rel_tol: 1e-3, abs_tol: 1e-5, max_subdiv: 600, tail: TailPolicy::Algebraic { p: 2.0 } };
    let t0 = Instant::now();
    let v = golovkin_solve_boundary(&data, &hx, t, &spec).unwrap();
    println!("table route v = {v:?} in {:?}", t0.elapsed());
    let den = 0.4f64 * 0.4 + 1.7f64 * 1.7;
    println!("exact = {:?}", [eta(t) * 0.4 / den, eta(t) * 1.7 / den]);
}
