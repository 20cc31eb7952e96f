use crate::matrix::{Matrix, C64, ZERO};

/// Plane rotation `G = [[c, s], [-conj(s), c]]` with real `c >= 0`.
#[derive(Clone, Copy, Debug)]
pub struct Givens {
    pub c: f64,
    pub s: C64,
}

impl Givens {
    /// Rotation with `G [a; b] = [r; 0]`. Returns the rotation and `r`.
    pub fn zeroing(a: C64, b: C64) -> (Givens, C64) {
        if b == ZERO {
            return (Givens { c: 1.0, s: ZERO }, a);
        }
        let na = a.norm();
        let nb = b.norm();
        if na == 0.0 {
            return (Givens { c: 0.0, s: b.conj() / nb }, C64::new(nb, 0.0));
        }
        let r = na.hypot(nb);
        let phase = a / na;
        let g = Givens { c: na / r, s: phase * b.conj() / r };
        (g, phase * r)
    }

    #[inline]
    pub fn apply(&self, x: C64, y: C64) -> (C64, C64) {
        (self.c * x + self.s * y, -self.s.conj() * x + self.c * y)
    }

    /// Applies `G` to rows `i` and `k` over columns `c0..`.
    pub fn rotate_rows(&self, m: &mut Matrix, i: usize, k: usize, c0: usize) {
        for j in c0..m.cols() {
            let (x, y) = self.apply(m[(i, j)], m[(k, j)]);
            m[(i, j)] = x;
            m[(k, j)] = y;
        }
    }

    /// Right-multiplies columns `i` and `k` by `G^H` over rows `0..r1`.
    pub fn rotate_cols_adjoint(&self, m: &mut Matrix, i: usize, k: usize, r1: usize) {
        for r in 0..r1 {
            let x = m[(r, i)];
            let y = m[(r, k)];
            m[(r, i)] = self.c * x + self.s.conj() * y;
            m[(r, k)] = -self.s * x + self.c * y;
        }
    }
}
