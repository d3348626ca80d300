use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linear::C64;

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Truncated multi-mode Fock basis.
///
/// States are listed in tensor-product order (mode 0 most significant). With
/// `max_excitations` set, only states with total photon number at or below the
/// cap are kept; this is exact for number-conserving dynamics with lowering-only
/// jumps.
#[derive(Clone, Debug)]
pub struct FockSpace {
    dims: Vec<usize>,
    max_excitations: Option<usize>,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockSpace {
    pub fn new(dims: Vec<usize>, max_excitations: Option<usize>, dim_cap: usize) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2 || d > 255) {
            return Err(Error::Domain(format!("mode dimensions {dims:?} must lie in 2..=255")));
        }
        let full: usize = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
        if max_excitations.is_none() && full > dim_cap {
            return Err(Error::FockTooLarge { dim: full, cap: dim_cap });
        }
        let mut states = Vec::new();
        let mut cur = vec![0u8; dims.len()];
        enumerate(&dims, max_excitations.unwrap_or(usize::MAX), 0, 0, &mut cur, &mut states, dim_cap)?;
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { dims, max_excitations, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn max_excitations(&self) -> Option<usize> {
        self.max_excitations
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Lowering operator of `mode`.
    pub fn lowering(&self, mode: usize) -> Sparse {
        let mut trip = Vec::new();
        for (j, s) in self.states.iter().enumerate() {
            let n = s[mode];
            if n > 0 {
                let mut t = s.clone();
                t[mode] -= 1;
                if let Some(i) = self.index_of(&t) {
                    trip.push((i, j, C64::from((n as f64).sqrt())));
                }
            }
        }
        Sparse::from_triplets(self.dim(), trip)
    }

    pub fn number(&self, mode: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[mode] as f64).collect()
    }

    pub fn total_number(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.iter().map(|&n| n as f64).sum()).collect()
    }

    /// Reduced density matrix of one mode (dimension d_mode).
    pub fn partial_trace(&self, rho: &DMatrix<C64>, mode: usize) -> DMatrix<C64> {
        let d = self.dims[mode];
        let mut out = DMatrix::zeros(d, d);
        let mut groups: HashMap<Vec<u8>, Vec<usize>> = HashMap::new();
        for (i, s) in self.states.iter().enumerate() {
            let mut rest = s.clone();
            rest[mode] = 0;
            groups.entry(rest).or_default().push(i);
        }
        for members in groups.values() {
            for &i in members {
                for &j in members {
                    out[(self.states[i][mode] as usize, self.states[j][mode] as usize)] += rho[(i, j)];
                }
            }
        }
        out
    }

    /// Embeds a state given per basis occupation into this space.
    pub fn ket(&self, amps: &[(Vec<u8>, C64)]) -> Result<Vec<C64>> {
        let mut v = vec![C64::from(0.0); self.dim()];
        for (occ, a) in amps {
            let i = self
                .index_of(occ)
                .ok_or_else(|| Error::Domain(format!("occupation {occ:?} outside the truncated space")))?;
            v[i] += *a;
        }
        Ok(v)
    }
}

fn enumerate(
    dims: &[usize],
    cap: usize,
    mode: usize,
    used: usize,
    cur: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
    dim_cap: usize,
) -> Result<()> {
    if mode == dims.len() {
        if out.len() == dim_cap {
            return Err(Error::FockTooLarge { dim: dim_cap + 1, cap: dim_cap });
        }
        out.push(cur.clone());
        return Ok(());
    }
    for n in 0..dims[mode] {
        if used + n > cap {
            break;
        }
        cur[mode] = n as u8;
        enumerate(dims, cap, mode + 1, used + n, cur, out, dim_cap)?;
    }
    cur[mode] = 0;
    Ok(())
}

/// Row-compressed sparse complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Sparse {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Sparse {
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut s = Self { n, row_ptr, cols, vals };
        s.prune();
        s
    }

    fn prune(&mut self) {
        let keep: Vec<bool> = self.vals.iter().map(|v| *v != C64::from(0.0)).collect();
        if keep.iter().all(|&k| k) {
            return;
        }
        let mut trip = Vec::new();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if keep[k] {
                    trip.push((i, self.cols[k], self.vals[k]));
                }
            }
        }
        *self = Self::from_triplets(self.n, trip);
    }

    pub fn zero(n: usize) -> Self {
        Self::from_triplets(n, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, C64::from(1.0))).collect())
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, C64::from(v))).collect())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k])))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.n, self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect())
    }

    pub fn scale(&self, a: C64) -> Self {
        Self::from_triplets(self.n, self.triplets().map(|(i, j, v)| (i, j, v * a)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_triplets(self.n, self.triplets().chain(other.triplets()).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut trip = Vec::new();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let m = self.cols[k];
                for l in other.row_ptr[m]..other.row_ptr[m + 1] {
                    trip.push((i, other.cols[l], self.vals[k] * other.vals[l]));
                }
            }
        }
        Self::from_triplets(self.n, trip)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// out += a · self · x
    pub fn mul_dense_into(&self, a: C64, x: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let cols = x.ncols();
        for c in 0..cols {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.n {
                let mut acc = C64::from(0.0);
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * xc[self.cols[k]];
                }
                oc[i] += a * acc;
            }
        }
    }

    pub fn mul_dense(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.n, x.ncols());
        self.mul_dense_into(C64::from(1.0), x, &mut out);
        out
    }
}
