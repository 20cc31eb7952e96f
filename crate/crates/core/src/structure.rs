//! Partitions describing Jordan structure: Segre and Weyr characteristics.

use std::cmp::Ordering;

use crate::error::{JcfError, Result};
use crate::matrix::{Matrix, C64};
use crate::numeric::svd::singular_values;

/// Checks that `p` is a partition: positive and non-increasing.
pub fn validate_partition(p: &[usize]) -> Result<()> {
    if p.iter().any(|&x| x == 0) {
        return Err(JcfError::InvalidPartition(format!("{p:?} has a zero part")));
    }
    if p.windows(2).any(|w| w[0] < w[1]) {
        return Err(JcfError::InvalidPartition(format!("{p:?} is not non-increasing")));
    }
    Ok(())
}

/// Conjugate partition `l_j = #{i : k_i >= j}`. Maps Segre to Weyr and back.
pub fn conjugate_partition(p: &[usize]) -> Result<Vec<usize>> {
    validate_partition(p)?;
    let len = p.first().copied().unwrap_or(0);
    Ok((1..=len).map(|j| p.iter().take_while(|&&k| k >= j).count()).collect())
}

/// Offsets `mu_0 = 0, mu_l = m_1 + ... + m_l`.
pub fn prefix_sums(p: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(p.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &x in p {
        acc += x;
        out.push(acc);
    }
    out
}

/// Codimension of the bundle of matrices sharing the given Segre
/// characteristics, one list per distinct eigenvalue.
pub fn bundle_codimension(segres: &[Vec<usize>]) -> Result<usize> {
    let mut total = 0usize;
    for s in segres {
        validate_partition(s)?;
        if s.is_empty() {
            return Err(JcfError::InvalidPartition("empty Segre characteristic".into()));
        }
        let weighted: usize = s.iter().enumerate().map(|(j, &n)| (2 * j + 1) * n).sum();
        total += weighted - 1;
    }
    Ok(total)
}

/// Index pairs `(i, j)`, zero-based, with `i < j` inside the same Weyr
/// block. These select the auxiliary equations that fix the unitary freedom
/// within each block of a staircase eigentriplet.
pub fn phi_index_set(weyr: &[usize]) -> Result<Vec<(usize, usize)>> {
    validate_partition(weyr)?;
    let mu = prefix_sums(weyr);
    let mut out = Vec::new();
    for l in 1..mu.len() {
        for i in mu[l - 1]..mu[l] {
            for j in i + 1..mu[l] {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Block index of each position in the staircase pattern of `weyr`.
pub fn block_of_index(weyr: &[usize]) -> Vec<usize> {
    weyr.iter().enumerate().flat_map(|(b, &m)| std::iter::repeat_n(b, m)).collect()
}

/// Weyr characteristic of `lambda` from the numerical nullities of the powers
/// of `A - lambda I`. A singular value of `M^j = M^{j-1} M` counts as zero
/// when it is at most `tol * ||M^{j-1}||_2 * ||M||_2`, the scale of the
/// rounding error in forming the product.
pub fn weyr_from_nullities(a: &Matrix, lambda: C64, tol: f64) -> Result<Vec<usize>> {
    if a.rows() == 0 {
        return Err(JcfError::Empty);
    }
    if !a.is_square() {
        return Err(JcfError::Dimension(format!("expected square matrix, got {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let m = a.shifted(lambda);
    let norm = singular_values(&m)[0];
    let mut scale = norm;
    let mut power = m.clone();
    let mut prev_nullity = 0usize;
    let mut weyr: Vec<usize> = Vec::new();
    for _ in 0..n {
        let s = singular_values(&power);
        let threshold = tol * scale;
        let nullity = s.iter().filter(|&&x| x <= threshold).count();
        let step = nullity.saturating_sub(prev_nullity);
        if nullity < prev_nullity {
            return Err(JcfError::InvalidPartition("nullities of powers decrease".into()));
        }
        if step == 0 {
            break;
        }
        if let Some(&last) = weyr.last() {
            if step > last {
                return Err(JcfError::InvalidPartition(format!(
                    "nullity increments {weyr:?} followed by {step} are not non-increasing"
                )));
            }
        }
        weyr.push(step);
        prev_nullity = nullity;
        if nullity == n {
            break;
        }
        scale = s[0] * norm;
        power = power.matmul(&m);
    }
    Ok(weyr)
}

/// Dominance order by prefix sums: `Some(Greater)` when `a` dominates `b`,
/// `None` when the partitions are incomparable.
pub fn dominance(a: &[usize], b: &[usize]) -> Result<Option<Ordering>> {
    validate_partition(a)?;
    validate_partition(b)?;
    let sa: usize = a.iter().sum();
    let sb: usize = b.iter().sum();
    if sa != sb {
        return Err(JcfError::InvalidPartition(format!("{a:?} and {b:?} partition different integers")));
    }
    let len = a.len().max(b.len());
    let (mut pa, mut pb) = (0usize, 0usize);
    let (mut ge, mut le) = (true, true);
    for k in 0..len {
        pa += a.get(k).copied().unwrap_or(0);
        pb += b.get(k).copied().unwrap_or(0);
        ge &= pa >= pb;
        le &= pa <= pb;
    }
    Ok(match (ge, le) {
        (true, true) => Some(Ordering::Equal),
        (true, false) => Some(Ordering::Greater),
        (false, true) => Some(Ordering::Less),
        (false, false) => None,
    })
}

/// One distinct eigenvalue with its Segre characteristic.
#[derive(Clone, Debug, PartialEq)]
pub struct JordanEntry {
    pub eigenvalue: C64,
    pub segre: Vec<usize>,
}

impl JordanEntry {
    pub fn multiplicity(&self) -> usize {
        self.segre.iter().sum()
    }

    pub fn weyr(&self) -> Vec<usize> {
        conjugate_partition(&self.segre).expect("validated on construction")
    }
}

/// Complete Jordan structure: distinct eigenvalues with Segre characteristics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JordanStructure {
    pub entries: Vec<JordanEntry>,
}

impl JordanStructure {
    pub fn new(entries: Vec<(C64, Vec<usize>)>) -> Result<Self> {
        for (_, s) in &entries {
            validate_partition(s)?;
            if s.is_empty() {
                return Err(JcfError::InvalidPartition("empty Segre characteristic".into()));
            }
        }
        Ok(JordanStructure {
            entries: entries.into_iter().map(|(eigenvalue, segre)| JordanEntry { eigenvalue, segre }).collect(),
        })
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(JordanEntry::multiplicity).sum()
    }

    pub fn codimension(&self) -> usize {
        let segres: Vec<Vec<usize>> = self.entries.iter().map(|e| e.segre.clone()).collect();
        bundle_codimension(&segres).expect("validated on construction")
    }

    /// Entries whose Segre characteristic is not `{1}`.
    pub fn multiple(&self) -> impl Iterator<Item = &JordanEntry> {
        self.entries.iter().filter(|e| e.segre != [1])
    }

    /// Same Segre characteristics at eigenvalues matched within `tol * (1 + |lambda|)`.
    pub fn matches(&self, other: &JordanStructure, tol: f64) -> bool {
        if self.entries.len() != other.entries.len() {
            return false;
        }
        let mut used = vec![false; other.entries.len()];
        for e in &self.entries {
            let found = other.entries.iter().enumerate().position(|(k, o)| {
                !used[k] && o.segre == e.segre && (o.eigenvalue - e.eigenvalue).norm() <= tol * (1.0 + e.eigenvalue.norm())
            });
            match found {
                Some(k) => used[k] = true,
                None => return false,
            }
        }
        true
    }
}
