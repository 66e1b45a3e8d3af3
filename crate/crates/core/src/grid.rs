//! Complex fields on uniform periodic 3D grids and the FFT plumbing behind
//! every spectral operation.

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Lap3dError, Result};

/// Complex scalar field sampled at `origin + (i h₁, j h₂, k h₃)`, row-major
/// with the last index fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub values: Vec<Complex64>,
}

impl GridField {
    pub fn zeros(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Lap3dError::InvalidInput("grid dimensions must be positive".into()));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Lap3dError::InvalidInput("grid spacing must be positive".into()));
        }
        Ok(Self { dims, spacing, origin, values: vec![Complex64::new(0.0, 0.0); dims[0] * dims[1] * dims[2]] })
    }

    /// Cube `[-L/2, L/2)³` with `n` points per axis.
    pub fn centered_cube(n: usize, length: f64) -> Result<Self> {
        let h = length / n as f64;
        Self::zeros([n; 3], [h; 3], [-0.5 * length; 3])
    }

    pub fn from_fn<F>(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3], f: F) -> Result<Self>
    where
        F: Fn(&Vector3<f64>) -> Complex64 + Sync,
    {
        let mut g = Self::zeros(dims, spacing, origin)?;
        g.fill_with(f);
        Ok(g)
    }

    pub fn fill_with<F>(&mut self, f: F)
    where
        F: Fn(&Vector3<f64>) -> Complex64 + Sync,
    {
        let (dims, spacing, origin) = (self.dims, self.spacing, self.origin);
        self.values.par_chunks_mut(dims[2]).enumerate().for_each(|(row, chunk)| {
            let (i, j) = (row / dims[1], row % dims[1]);
            for (k, v) in chunk.iter_mut().enumerate() {
                let x = Vector3::new(
                    origin[0] + i as f64 * spacing[0],
                    origin[1] + j as f64 * spacing[1],
                    origin[2] + k as f64 * spacing[2],
                );
                *v = f(&x);
            }
        });
    }

    /// Same geometry, values replaced.
    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self { dims: self.dims, spacing: self.spacing, origin: self.origin, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        let i = idx / (self.dims[1] * self.dims[2]);
        [i, j, k]
    }

    pub fn point(&self, idx: usize) -> Vector3<f64> {
        let [i, j, k] = self.unravel(idx);
        Vector3::new(
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        )
    }

    /// Physical side lengths of the periodic box.
    pub fn extent(&self) -> [f64; 3] {
        [
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        ]
    }

    /// Frequency spacing `2π / (n h)` per axis.
    pub fn frequency_spacing(&self) -> [f64; 3] {
        let e = self.extent();
        [2.0 * std::f64::consts::PI / e[0], 2.0 * std::f64::consts::PI / e[1], 2.0 * std::f64::consts::PI / e[2]]
    }

    /// Nyquist frequency `π / h` per axis.
    pub fn band_limit(&self) -> [f64; 3] {
        [
            std::f64::consts::PI / self.spacing[0],
            std::f64::consts::PI / self.spacing[1],
            std::f64::consts::PI / self.spacing[2],
        ]
    }

    /// Wave vector attached to DFT index `idx` (FFT ordering).
    pub fn wavevector(&self, idx: usize) -> Vector3<f64> {
        let ijk = self.unravel(idx);
        let d = self.frequency_spacing();
        Vector3::new(
            signed_index(ijk[0], self.dims[0]) as f64 * d[0],
            signed_index(ijk[1], self.dims[1]) as f64 * d[1],
            signed_index(ijk[2], self.dims[2]) as f64 * d[2],
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.with_values(self.values.iter().map(|v| v * a).collect())
    }

    pub fn conj(&self) -> Self {
        self.with_values(self.values.iter().map(|v| v.conj()).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect()))
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Lap3dError::InvalidInput(format!(
                "grid dimensions differ: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// Periodic shift by whole cells.
    pub fn roll(&self, shift: [isize; 3]) -> Self {
        let d = self.dims;
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for i in 0..d[0] {
            let ii = (i as isize + shift[0]).rem_euclid(d[0] as isize) as usize;
            for j in 0..d[1] {
                let jj = (j as isize + shift[1]).rem_euclid(d[1] as isize) as usize;
                for k in 0..d[2] {
                    let kk = (k as isize + shift[2]).rem_euclid(d[2] as isize) as usize;
                    out[(ii * d[1] + jj) * d[2] + kk] = self.values[(i * d[1] + j) * d[2] + k];
                }
            }
        }
        self.with_values(out)
    }

    /// Unnormalized forward DFT of the values.
    pub fn dft(&self) -> Vec<Complex64> {
        let mut v = self.values.clone();
        fft3(&mut v, self.dims, false);
        v
    }

    /// Inverse of [`GridField::dft`]: values from DFT coefficients.
    pub fn from_dft(&self, mut coeffs: Vec<Complex64>) -> Self {
        fft3(&mut coeffs, self.dims, true);
        self.with_values(coeffs)
    }

    /// FFT, multiply coefficient `k` by `m(ξ_k)`, inverse FFT.
    pub fn apply_multiplier<M>(&self, m: M) -> Self
    where
        M: Fn(&Vector3<f64>) -> Complex64 + Sync,
    {
        let mut c = self.dft();
        c.par_iter_mut().enumerate().for_each(|(idx, v)| *v *= m(&self.wavevector(idx)));
        self.from_dft(c)
    }

    /// Continuous Fourier transform `∫ e^{-ix·ξ} f(x) dx` at the DFT wave
    /// vectors, phase-referenced to the box centre (`f̂(ξ) e^{i c·ξ}`), which
    /// is smooth in ξ for fields localised near the centre.
    pub fn centered_spectrum(&self) -> Vec<Complex64> {
        let mut c = self.dft();
        let vol = self.cell_volume();
        let e = self.extent();
        let shift = [
            self.origin[0] + 0.5 * e[0],
            self.origin[1] + 0.5 * e[1],
            self.origin[2] + 0.5 * e[2],
        ];
        c.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let xi = self.wavevector(idx);
            // e^{-i o·ξ} from the origin, e^{+i c·ξ} from the reference
            let phase = (shift[0] - self.origin[0]) * xi.x
                + (shift[1] - self.origin[1]) * xi.y
                + (shift[2] - self.origin[2]) * xi.z;
            *v *= Complex64::from_polar(vol, phase);
        });
        c
    }

    /// Box centre used by [`GridField::centered_spectrum`].
    pub fn center(&self) -> Vector3<f64> {
        let e = self.extent();
        Vector3::new(
            self.origin[0] + 0.5 * e[0],
            self.origin[1] + 0.5 * e[1],
            self.origin[2] + 0.5 * e[2],
        )
    }

    /// Raw little-endian complex64 bytes (interleaved re, im as f32).
    pub fn to_complex64_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len() * 8);
        for v in &self.values {
            out.extend_from_slice(&(v.re as f32).to_le_bytes());
            out.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
        out
    }

    pub fn from_complex64_bytes(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3], bytes: &[u8]) -> Result<Self> {
        let n = dims[0] * dims[1] * dims[2];
        if bytes.len() != 8 * n {
            return Err(Lap3dError::InvalidInput(format!(
                "expected {} bytes for {:?}, found {}",
                8 * n,
                dims,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        let mut g = Self::zeros(dims, spacing, origin)?;
        g.values = values;
        Ok(g)
    }
}

/// DFT index to signed frequency index in `[-n/2, n/2)`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// In-place 3D FFT over a row-major array. The inverse is normalized by 1/N.
pub fn fft3(data: &mut [Complex64], dims: [usize; 3], inverse: bool) {
    let [n1, n2, n3] = dims;
    assert_eq!(data.len(), n1 * n2 * n3);
    let mut planner = FftPlanner::<f64>::new();
    let plan = |n: usize, planner: &mut FftPlanner<f64>| {
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };

    let f3 = plan(n3, &mut planner);
    data.par_chunks_mut(n3).for_each(|row| f3.process(row));

    let f2 = plan(n2, &mut planner);
    data.par_chunks_mut(n2 * n3).for_each(|slab| {
        let mut line = vec![Complex64::new(0.0, 0.0); n2];
        for k in 0..n3 {
            for j in 0..n2 {
                line[j] = slab[j * n3 + k];
            }
            f2.process(&mut line);
            for j in 0..n2 {
                slab[j * n3 + k] = line[j];
            }
        }
    });

    if n1 > 1 {
        let f1 = plan(n1, &mut planner);
        let plane = n2 * n3;
        // transpose so that axis 0 is contiguous, transform, transpose back
        let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
        t.par_chunks_mut(n1).enumerate().for_each(|(jk, line)| {
            for i in 0..n1 {
                line[i] = data[i * plane + jk];
            }
            f1.process(line);
        });
        data.par_chunks_mut(plane).enumerate().for_each(|(i, slab)| {
            for jk in 0..plane {
                slab[jk] = t[jk * n1 + i];
            }
        });
    }

    if inverse {
        let s = 1.0 / (n1 * n2 * n3) as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }
}
