//! Symmetric block-tridiagonal solver with 2x2 blocks (one block per grid node,
//! components ordered `(v, p)`).

pub(crate) type Block = [[f64; 2]; 2];

fn mul(a: &Block, b: &Block) -> Block {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mul_vec(a: &Block, x: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

fn transpose(a: &Block) -> Block {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn inverse(a: &Block) -> Option<Block> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

/// Factorized `A` where `A[j][j] = diag[j]`, `A[j][j+1] = upper[j]`,
/// `A[j+1][j] = upper[j]^T`.
#[derive(Debug, Clone)]
pub(crate) struct BlockTridiag {
    upper: Vec<Block>,
    lower_factor: Vec<Block>,
    pivot_inv: Vec<Block>,
}

impl BlockTridiag {
    pub(crate) fn factor(diag: &[Block], upper: &[Block]) -> Option<Self> {
        let n = diag.len();
        assert_eq!(upper.len() + 1, n.max(1));
        let mut lower_factor = vec![[[0.0; 2]; 2]; n];
        let mut pivot_inv = Vec::with_capacity(n);
        let mut pivot = diag[0];
        pivot_inv.push(inverse(&pivot)?);
        for j in 1..n {
            let l = mul(&transpose(&upper[j - 1]), &pivot_inv[j - 1]);
            let lu = mul(&l, &upper[j - 1]);
            pivot = diag[j];
            for r in 0..2 {
                for c in 0..2 {
                    pivot[r][c] -= lu[r][c];
                }
            }
            lower_factor[j] = l;
            pivot_inv.push(inverse(&pivot)?);
        }
        Some(Self {
            upper: upper.to_vec(),
            lower_factor,
            pivot_inv,
        })
    }

    pub(crate) fn solve(&self, rhs: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = self.pivot_inv.len();
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for j in 1..n {
            let ly = mul_vec(&self.lower_factor[j], y[j - 1]);
            y[j] = [y[j][0] - ly[0], y[j][1] - ly[1]];
        }
        let mut x = vec![[0.0; 2]; n];
        x[n - 1] = mul_vec(&self.pivot_inv[n - 1], y[n - 1]);
        for j in (0..n - 1).rev() {
            let ux = mul_vec(&self.upper[j], x[j + 1]);
            x[j] = mul_vec(&self.pivot_inv[j], [y[j][0] - ux[0], y[j][1] - ux[1]]);
        }
        x
    }
}

/// Factorized symmetric tridiagonal matrix with scalar entries.
#[derive(Debug, Clone)]
pub(crate) struct Tridiag {
    upper: Vec<f64>,
    lower_factor: Vec<f64>,
    pivot: Vec<f64>,
}

impl Tridiag {
    pub(crate) fn factor(diag: &[f64], upper: &[f64]) -> Option<Self> {
        let n = diag.len();
        let mut pivot = Vec::with_capacity(n);
        let mut lower_factor = vec![0.0; n];
        pivot.push(diag[0]);
        for j in 1..n {
            let l = upper[j - 1] / pivot[j - 1];
            lower_factor[j] = l;
            pivot.push(diag[j] - l * upper[j - 1]);
        }
        if pivot.iter().any(|&d| d == 0.0 || !d.is_finite()) {
            return None;
        }
        Some(Self {
            upper: upper.to_vec(),
            lower_factor,
            pivot,
        })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.pivot.len();
        let mut y = rhs.to_vec();
        for j in 1..n {
            y[j] -= self.lower_factor[j] * y[j - 1];
        }
        y[n - 1] /= self.pivot[n - 1];
        for j in (0..n - 1).rev() {
            y[j] = (y[j] - self.upper[j] * y[j + 1]) / self.pivot[j];
        }
        y
    }
}
