//! Dense polynomials with complex coefficients, stored in ascending degree.

use crate::error::{JcfError, Result};
use crate::matrix::{norm2, Matrix, C64, ONE, ZERO};
use crate::numeric::schur_form;

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    /// Takes coefficients in ascending degree. Trailing exact zeros are dropped.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().expect("nonempty") == ZERO {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Polynomial { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![ONE] }
    }

    /// `prod (t - z_i)^{m_i}`.
    pub fn from_roots(roots: &[C64], multiplicities: &[usize]) -> Self {
        let mut p = Polynomial::one();
        for (z, &m) in roots.iter().zip(multiplicities) {
            for _ in 0..m {
                p = p.mul(&Polynomial { coeffs: vec![-z, ONE] });
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> C64 {
        *self.coeffs.last().expect("nonempty")
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == ONE
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> Result<Self> {
        let lead = self.leading();
        if lead == ZERO {
            return Err(JcfError::DegenerateLeading);
        }
        Ok(Polynomial { coeffs: self.coeffs.iter().map(|c| c / lead).collect() })
    }

    pub fn eval(&self, t: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Polynomial { coeffs: vec![ZERO] };
        }
        Polynomial::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        Polynomial::new(convolve(&self.coeffs, &other.coeffs))
    }

    /// 2-norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        norm2(&self.coeffs)
    }

    /// `||self - other||_2` over coefficient vectors padded to equal length.
    pub fn distance(&self, other: &Polynomial) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Polynomial, k: usize| p.coeffs.get(k).copied().unwrap_or(ZERO);
        let diff: Vec<C64> = (0..len).map(|k| get(self, k) - get(other, k)).collect();
        norm2(&diff)
    }

    /// Roots as the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let p = self.monic()?;
        let d = p.degree();
        match d {
            0 => Ok(Vec::new()),
            1 => Ok(vec![-p.coeffs[0]]),
            _ => {
                let comp = Matrix::from_fn(d, d, |i, j| {
                    if i == 0 {
                        -p.coeffs[d - 1 - j]
                    } else if i == j + 1 {
                        ONE
                    } else {
                        ZERO
                    }
                });
                Ok(schur_form(&comp)?.eigenvalues())
            }
        }
    }
}

pub fn convolve(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Matrix of multiplication by `f` acting on coefficient vectors of degree `k`:
/// `(deg f + k + 1) x (k + 1)`.
pub fn convolution_matrix(f: &[C64], k: usize) -> Matrix {
    let rows = f.len() + k;
    let mut m = Matrix::zeros(rows, k + 1);
    for j in 0..=k {
        for (i, &c) in f.iter().enumerate() {
            m[(i + j, j)] = c;
        }
    }
    m
}
