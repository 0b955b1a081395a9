//! Uniform-grid tables with bicubic (Catmull-Rom) interpolation, used to
//! cache smooth convolution fields inside nested quadratures.

/// Scalar field sampled on a uniform 2-D grid over [x0, x0+(nx-1)dx] x
/// [y0, y0+(ny-1)dy].
#[derive(Clone, Debug)]
pub struct Table2 {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

fn catmull_rom(p: [f64; 4], u: f64) -> f64 {
    let a = -0.5 * p[0] + 1.5 * p[1] - 1.5 * p[2] + 0.5 * p[3];
    let b = p[0] - 2.5 * p[1] + 2.0 * p[2] - 0.5 * p[3];
    let c = -0.5 * p[0] + 0.5 * p[2];
    ((a * u + b) * u + c) * u + p[1]
}

impl Table2 {
    pub fn build(
        x0: f64,
        x1: f64,
        nx: usize,
        y0: f64,
        y1: f64,
        ny: usize,
        f: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Table2 {
        assert!(nx >= 4 && ny >= 4);
        let dx = (x1 - x0) / (nx - 1) as f64;
        let dy = (y1 - y0) / (ny - 1) as f64;
        let mut values = vec![0.0; nx * ny];
        // Row-parallel fill; rayon is already a dependency of the sweeps.
        use rayon::prelude::*;
        values
            .par_chunks_mut(nx)
            .enumerate()
            .for_each(|(jy, row)| {
                let y = y0 + jy as f64 * dy;
                for (jx, v) in row.iter_mut().enumerate() {
                    *v = f(x0 + jx as f64 * dx, y);
                }
            });
        Table2 { x0, y0, dx, dy, nx, ny, values }
    }

    #[inline]
    fn at(&self, ix: i64, iy: i64) -> f64 {
        let ix = ix.clamp(0, self.nx as i64 - 1) as usize;
        let iy = iy.clamp(0, self.ny as i64 - 1) as usize;
        self.values[iy * self.nx + ix]
    }

    /// Bicubic interpolation; clamps to the boundary outside the grid.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let fx = (x - self.x0) / self.dx;
        let fy = (y - self.y0) / self.dy;
        let ix = fx.floor() as i64;
        let iy = fy.floor() as i64;
        let ux = fx - ix as f64;
        let uy = fy - iy as f64;
        let mut col = [0.0f64; 4];
        for (k, c) in col.iter_mut().enumerate() {
            let row = iy - 1 + k as i64;
            *c = catmull_rom(
                [self.at(ix - 1, row), self.at(ix, row), self.at(ix + 1, row), self.at(ix + 2, row)],
                ux,
            );
        }
        catmull_rom(col, uy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bicubic_reproduces_smooth_function() {
        let f = |x: f64, y: f64| (x * 0.8).sin() * (-0.3 * y * y).exp() + 0.1 * x * y;
        let t = Table2::build(-2.0, 2.0, 41, -1.0, 3.0, 41, f);
        let mut worst = 0.0f64;
        for k in 0..200 {
            let x = -1.9 + 3.8 * (k as f64 / 199.0);
            let y = -0.9 + 3.7 * ((k * 7 % 200) as f64 / 199.0);
            worst = worst.max((t.eval(x, y) - f(x, y)).abs());
        }
        assert!(worst < 2e-5, "bicubic error {worst}");
    }
}
