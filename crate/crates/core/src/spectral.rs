//! Periodic 2D FFTs on node arrays and the shifted-Laplacian preconditioner.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// In-place 2D FFT over an `nx * ny` row-major array (x fastest).
pub(crate) struct Fft2 {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
    col: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(nx);
        let ix = planner.plan_fft_inverse(nx);
        let fy = planner.plan_fft_forward(ny);
        let iy = planner.plan_fft_inverse(ny);
        let len = [&fx, &ix, &fy, &iy].iter().map(|f| f.get_inplace_scratch_len()).max().unwrap_or(0);
        Self { nx, ny, fx, ix, fy, iy, col: vec![Complex64::default(); ny], scratch: vec![Complex64::default(); len] }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    fn run(&mut self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.len());
        let (px, py) = if inverse { (&self.ix, &self.iy) } else { (&self.fx, &self.fy) };
        px.process_with_scratch(data, &mut self.scratch);
        for i in 0..self.nx {
            for j in 0..self.ny {
                self.col[j] = data[j * self.nx + i];
            }
            py.process_with_scratch(&mut self.col, &mut self.scratch);
            for j in 0..self.ny {
                data[j * self.nx + i] = self.col[j];
            }
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// Unnormalized inverse; divide by `len()` to undo `forward`.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.run(data, true);
    }
}

/// Eigenvalues of the periodic 5-point Laplacian, `-(4/h^2)(sin^2(pi k/nx) + sin^2(pi l/ny))`.
pub(crate) fn laplacian_symbol(nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let sx: Vec<f64> = (0..nx).map(|k| (PI * k as f64 / nx as f64).sin().powi(2)).collect();
    let sy: Vec<f64> = (0..ny).map(|l| (PI * l as f64 / ny as f64).sin().powi(2)).collect();
    let mut out = Vec::with_capacity(nx * ny);
    for l in 0..ny {
        for k in 0..nx {
            out.push(-4.0 / (h * h) * (sx[k] + sy[l]));
        }
    }
    out
}

/// `(1 - Delta_h)^{-1}` with periodic wrap on the node box of a grid.
///
/// Used as the metric for descent: on a non-periodic grid the box wraps
/// through exterior and frozen nodes, which only changes the metric, not
/// the critical points.
pub(crate) struct Preconditioner {
    fft: Fft2,
    mult: Vec<f64>,
    buf: Vec<Complex64>,
}

impl Preconditioner {
    pub fn new(nx: usize, ny: usize, h: f64) -> Self {
        let n = (nx * ny) as f64;
        let mult = laplacian_symbol(nx, ny, h).into_iter().map(|l| 1.0 / ((1.0 - l) * n)).collect();
        Self { fft: Fft2::new(nx, ny), mult, buf: vec![Complex64::default(); nx * ny] }
    }

    /// Applies the operator to each of the `width` interleaved components of `x`.
    pub fn apply(&mut self, x: &[f64], width: usize, out: &mut [f64]) {
        let n = self.buf.len();
        assert_eq!(x.len(), n * width);
        match width {
            1 => {
                for (b, v) in self.buf.iter_mut().zip(x) {
                    *b = Complex64::new(*v, 0.0);
                }
            }
            // two real fields packed into one complex transform; the symbol is real and even
            2 => {
                for (k, b) in self.buf.iter_mut().enumerate() {
                    *b = Complex64::new(x[2 * k], x[2 * k + 1]);
                }
            }
            _ => unreachable!("width is 1 or 2"),
        }
        self.fft.forward(&mut self.buf);
        for (b, m) in self.buf.iter_mut().zip(&self.mult) {
            *b *= m;
        }
        self.fft.inverse(&mut self.buf);
        match width {
            1 => {
                for (o, b) in out.iter_mut().zip(&self.buf) {
                    *o = b.re;
                }
            }
            _ => {
                for (k, b) in self.buf.iter().enumerate() {
                    out[2 * k] = b.re;
                    out[2 * k + 1] = b.im;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_round_trip() {
        let (nx, ny) = (12, 10);
        let mut f = Fft2::new(nx, ny);
        let orig: Vec<Complex64> = (0..nx * ny).map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64).cos())).collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        f.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a / (nx * ny) as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn preconditioner_inverts_shifted_laplacian() {
        let (nx, ny, h) = (16, 12, 0.1);
        let mut p = Preconditioner::new(nx, ny, h);
        let x: Vec<f64> = (0..nx * ny).map(|k| ((k * 7919) % 101) as f64 / 101.0).collect();
        let mut y = vec![0.0; nx * ny];
        p.apply(&x, 1, &mut y);
        // (1 - Delta) y should reproduce x
        for j in 0..ny {
            for i in 0..nx {
                let at = |a: usize, b: usize| y[(b % ny) * nx + (a % nx)];
                let lap = (at(i + 1, j) + at(i + nx - 1, j) + at(i, j + 1) + at(i, j + ny - 1) - 4.0 * at(i, j)) / (h * h);
                assert!((at(i, j) - lap - x[j * nx + i]).abs() < 1e-10);
            }
        }
        let x2: Vec<f64> = x.iter().flat_map(|v| [*v, 2.0 * v]).collect();
        let mut y2 = vec![0.0; 2 * nx * ny];
        p.apply(&x2, 2, &mut y2);
        for k in 0..nx * ny {
            assert!((y2[2 * k] - y[k]).abs() < 1e-12 && (y2[2 * k + 1] - 2.0 * y[k]).abs() < 1e-12);
        }
    }
}
