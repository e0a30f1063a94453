use crate::error::{precondition, Error, Result};

/// Bosonic basis of n particles on L sites.
///
/// A state is the nondecreasing tuple of occupied sites i₀ ≤ … ≤ i_{n−1}.
/// With c_k = i_k + k strictly increasing, the rank Σ C(c_k, k+1) enumerates
/// the tuples in colexicographic order without gaps.
#[derive(Debug, Clone)]
pub struct SymmetricBasis {
    pub n: usize,
    pub sites: usize,
    pub dim: usize,
    /// binom[m][k] = C(m, k) for m < sites + n, k ≤ n.
    binom: Vec<Vec<usize>>,
}

impl SymmetricBasis {
    pub fn new(sites: usize, n: usize) -> Result<Self> {
        if sites == 0 || n == 0 {
            return precondition("basis needs at least one site and one particle");
        }
        let rows = sites + n;
        let mut binom = vec![vec![0usize; n + 2]; rows + 1];
        for row in binom.iter_mut() {
            row[0] = 1;
        }
        for m in 1..=rows {
            for k in 1..=n + 1 {
                let v = binom[m - 1][k - 1].checked_add(binom[m - 1][k]);
                binom[m][k] =
                    v.ok_or_else(|| Error::InvalidInput("basis dimension overflows".into()))?;
            }
        }
        let dim = binom[sites + n - 1][n];
        Ok(Self {
            n,
            sites,
            dim,
            binom,
        })
    }

    /// C(L + n − 1, n).
    pub fn dimension(sites: usize, n: usize) -> f64 {
        crate::quadrature::binomial((sites + n - 1) as u64, n as u64)
    }

    pub fn rank(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.n);
        tuple
            .iter()
            .enumerate()
            .map(|(k, &i)| self.binom[i + k][k + 1])
            .sum()
    }

    pub fn unrank(&self, mut index: usize, tuple: &mut [usize]) {
        debug_assert!(index < self.dim);
        for k in (0..self.n).rev() {
            // largest c with C(c, k+1) ≤ index
            let (mut lo, mut hi) = (k, self.sites + k - 1);
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if self.binom[mid][k + 1] <= index {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            index -= self.binom[lo][k + 1];
            tuple[k] = lo - k;
        }
    }

    /// Advances to the successor in rank order; false after the last state.
    pub fn advance(&self, tuple: &mut [usize]) -> bool {
        let n = self.n;
        for k in 0..n {
            let bound = if k + 1 < n {
                tuple[k + 1]
            } else {
                self.sites - 1
            };
            if tuple[k] < bound {
                tuple[k] += 1;
                for t in tuple.iter_mut().take(k) {
                    *t = 0;
                }
                return true;
            }
        }
        false
    }

    /// (site, count) pairs of a tuple.
    pub fn occupations(tuple: &[usize]) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &i in tuple {
            match out.last_mut() {
                Some((s, c)) if *s == i => *c += 1,
                _ => out.push((i, 1)),
            }
        }
        out
    }

    /// Occupation numbers of every site.
    pub fn occupation_vector(&self, index: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.n];
        self.unrank(index, &mut tuple);
        let mut occ = vec![0; self.sites];
        for i in tuple {
            occ[i] += 1;
        }
        occ
    }

    /// Inverse of `occupation_vector`.
    pub fn index_of_occupation(&self, occ: &[usize]) -> Result<usize> {
        if occ.len() != self.sites || occ.iter().sum::<usize>() != self.n {
            return precondition("occupation vector does not match the basis");
        }
        let tuple: Vec<usize> = occ
            .iter()
            .enumerate()
            .flat_map(|(s, &c)| std::iter::repeat_n(s, c))
            .collect();
        Ok(self.rank(&tuple))
    }
}

/// √(n!/Π n_a!) for each state: the coefficients of the constant function.
pub fn constant_state(basis: &SymmetricBasis) -> Vec<f64> {
    let mut tuple = vec![0; basis.n];
    let mut out = Vec::with_capacity(basis.dim);
    let ln_fact = |m: usize| (1..=m).map(|j| (j as f64).ln()).sum::<f64>();
    let ln_n = ln_fact(basis.n);
    for idx in 0..basis.dim {
        if idx > 0 {
            basis.advance(&mut tuple);
        }
        let s: f64 = SymmetricBasis::occupations(&tuple)
            .iter()
            .map(|&(_, c)| ln_fact(c))
            .sum();
        out.push((0.5 * (ln_n - s)).exp());
    }
    out
}
