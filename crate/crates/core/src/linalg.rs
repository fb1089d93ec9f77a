//! Small dense complex matrices for gate algebra.


use serde::{Deserialize, Serialize};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub use num_complex::Complex64 as C64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "matrix must be square");
            data.extend_from_slice(r);
        }
        CMatrix { dim, data }
    }

    pub fn from_vec(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        CMatrix { dim, data }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = e;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut m = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    m.data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        m
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|r| (0..n).map(|c| self.data[r * n + c] * v[c]).sum())
            .collect()
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (a, b) = (self.dim, other.dim);
        let n = a * b;
        let mut m = Self::zeros(n);
        for i in 0..a {
            for j in 0..a {
                let x = self.data[i * a + j];
                for k in 0..b {
                    for l in 0..b {
                        m.data[(i * b + k) * n + j * b + l] = x * other.data[k * b + l];
                    }
                }
            }
        }
        m
    }

    /// Largest entry of |U U† − 1|.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.matmul(&self.dagger());
        let id = Self::identity(self.dim);
        p.data
            .iter()
            .zip(id.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }
}

/// 2x2 single-qubit matrix stored as `[[a, b], [c, d]]`.
pub type Mat2 = [[C64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    m
}

pub fn mat2_identity() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

/// Propagator `exp(-i (ax σx + ay σy + az σz) dt)` for a traceless 2x2 Hamiltonian.
pub fn su2_step(ax: f64, ay: f64, az: f64, dt: f64) -> Mat2 {
    let norm = (ax * ax + ay * ay + az * az).sqrt();
    if norm * dt == 0.0 {
        return mat2_identity();
    }
    let (s, c) = (norm * dt).sin_cos();
    let (nx, ny, nz) = (ax / norm, ay / norm, az / norm);
    [
        [C64::new(c, -s * nz), C64::new(-s * ny, -s * nx)],
        [C64::new(s * ny, -s * nx), C64::new(c, s * nz)],
    ]
}
