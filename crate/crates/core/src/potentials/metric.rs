use serde::Serialize;

/// The kinetic metric of the reduced three-body problem.
///
/// A 2×2 block acting on ℝ³ ⊕ ℝ³ by tensoring with the identity, so that
/// `M (u, v) = (m00 u + m01 v, m10 u + m11 v)` with `u, v ∈ ℝ^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricMatrix {
    pub block: [[f64; 2]; 2],
    pub block_squared: [[f64; 2]; 2],
    /// Determinant of the full action (block determinant cubed for k = 3).
    pub det_m: f64,
    /// Dimension of each of the two factors (3 for the physical problem).
    pub factor_dim: usize,
}

/// The metric of the three-body problem.
pub fn metric_matrix() -> MetricMatrix {
    let s3 = 3f64.sqrt();
    let c = 1.0 / (2.0 * 2f64.sqrt());
    MetricMatrix::from_block(
        [
            [c * (s3 + 1.0), c * (s3 - 1.0)],
            [c * (s3 - 1.0), c * (s3 + 1.0)],
        ],
        3,
    )
}

impl MetricMatrix {
    pub fn from_block(block: [[f64; 2]; 2], factor_dim: usize) -> Self {
        let block_squared = mul2(block, block);
        let det = block[0][0] * block[1][1] - block[0][1] * block[1][0];
        Self {
            block,
            block_squared,
            det_m: det.powi(factor_dim as i32),
            factor_dim,
        }
    }

    /// Same block acting on ℝ^k ⊕ ℝ^k.
    pub fn with_factor_dim(self, factor_dim: usize) -> Self {
        Self::from_block(self.block, factor_dim)
    }

    pub fn identity(factor_dim: usize) -> Self {
        Self::from_block([[1.0, 0.0], [0.0, 1.0]], factor_dim)
    }

    pub fn dim(&self) -> usize {
        2 * self.factor_dim
    }

    pub fn is_identity(&self) -> bool {
        self.block == [[1.0, 0.0], [0.0, 1.0]]
    }

    /// Eigenvalues of the 2×2 block in increasing order.
    pub fn block_eigenvalues(&self) -> [f64; 2] {
        eig2(self.block)
    }

    /// Largest and smallest singular values of the full action.
    pub fn singular_range(&self) -> (f64, f64) {
        let e = eig2(mul2(transpose2(self.block), self.block));
        (e[1].sqrt(), e[0].sqrt())
    }

    pub fn inverse_block(&self) -> [[f64; 2]; 2] {
        inv2(self.block)
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        apply_block(self.block, self.factor_dim, y)
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        apply_block(self.inverse_block(), self.factor_dim, x)
    }

    /// Dense 2k×2k matrix of the full action.
    pub fn full_matrix(&self) -> nalgebra::DMatrix<f64> {
        let k = self.factor_dim;
        nalgebra::DMatrix::from_fn(2 * k, 2 * k, |i, j| {
            if i % k == j % k {
                self.block[i / k][j / k]
            } else {
                0.0
            }
        })
    }
}

pub(crate) fn apply_block(b: [[f64; 2]; 2], k: usize, y: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), 2 * k);
    let mut out = vec![0.0; 2 * k];
    for i in 0..k {
        out[i] = b[0][0] * y[i] + b[0][1] * y[k + i];
        out[k + i] = b[1][0] * y[i] + b[1][1] * y[k + i];
    }
    out
}

pub(crate) fn mul2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn transpose2(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub(crate) fn inv2(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

/// Eigenvalues of a 2×2 matrix with real spectrum, increasing.
fn eig2(a: [[f64; 2]; 2]) -> [f64; 2] {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    [0.5 * tr - disc, 0.5 * tr + disc]
}
