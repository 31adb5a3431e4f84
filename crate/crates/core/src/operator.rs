//! Operators on the `t`-fold tensor space `(C^d)^⊗t`, stored dense or as
//! sorted coordinate triples.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::budget;
use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(DMatrix<C64>),
    /// Sorted by `(row, col)`, no duplicate coordinates.
    Coo(Vec<(usize, usize, C64)>),
}

/// A square complex matrix acting on `(C^d)^⊗t`, `dim == d^t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    d: usize,
    t: usize,
    dim: usize,
    storage: Storage,
}

fn checked_dim(d: usize, t: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::Domain("local dimension must be positive".into()));
    }
    budget::tensor_dim(d, t)
}

impl Operator {
    pub fn dense(d: usize, t: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = checked_dim(d, t)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected {dim}x{dim} for d={d}, t={t}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            d,
            t,
            dim,
            storage: Storage::Dense(matrix),
        })
    }

    /// Wraps a `d×d` matrix as a single-copy operator.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        let d = matrix.nrows();
        Self::dense(d, 1, matrix)
    }

    /// Coordinate form; duplicate coordinates are summed and exact zeros dropped.
    pub fn coo(d: usize, t: usize, mut entries: Vec<(usize, usize, C64)>) -> Result<Self> {
        let dim = checked_dim(d, t)?;
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::Dimension(format!(
                "entry ({r},{c}) outside a {dim}x{dim} operator"
            )));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != ZERO);
        Ok(Self {
            d,
            t,
            dim,
            storage: Storage::Coo(merged),
        })
    }

    pub fn identity(d: usize, t: usize) -> Result<Self> {
        let dim = checked_dim(d, t)?;
        Self::coo(d, t, (0..dim).map(|i| (i, i, ONE)).collect())
    }

    pub fn zeros(d: usize, t: usize) -> Result<Self> {
        Self::coo(d, t, Vec::new())
    }

    /// `|ψ⟩⟨ψ|^⊗t` for a single-copy state vector.
    pub fn pure_tensor_power(psi: &[C64], t: usize) -> Result<Self> {
        let d = psi.len();
        let dim = checked_dim(d, t)?;
        budget::check_dense(dim)?;
        let mut v = vec![ONE];
        for _ in 0..t {
            v = v.iter().flat_map(|&a| psi.iter().map(move |&b| a * b)).collect();
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| v[i] * v[j].conj());
        Self::dense(d, t, m)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Coo(_))
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.iter().filter(|v| **v != ZERO).count(),
            Storage::Coo(e) => e.len(),
        }
    }

    /// Dense copy of the matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        match &self.storage {
            Storage::Dense(m) => Ok(m.clone()),
            Storage::Coo(entries) => {
                budget::check_dense(self.dim)?;
                let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
                for &(r, c, v) in entries {
                    m[(r, c)] = v;
                }
                Ok(m)
            }
        }
    }

    pub fn to_dense(&self) -> Result<Self> {
        Ok(Self {
            storage: Storage::Dense(self.to_matrix()?),
            ..self.clone()
        })
    }

    pub fn to_coo(&self) -> Self {
        match &self.storage {
            Storage::Coo(_) => self.clone(),
            Storage::Dense(m) => {
                let mut entries = Vec::new();
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        let v = m[(r, c)];
                        if v != ZERO {
                            entries.push((r, c, v));
                        }
                    }
                }
                Self {
                    storage: Storage::Coo(entries),
                    ..self.clone()
                }
            }
        }
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> Vec<(usize, usize, C64)> {
        match self.to_coo().storage {
            Storage::Coo(e) => e,
            Storage::Dense(_) => unreachable!(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(row, col)],
            Storage::Coo(e) => e
                .binary_search_by_key(&(row, col), |&(r, c, _)| (r, c))
                .map(|i| e[i].2)
                .unwrap_or(ZERO),
        }
    }

    fn check_same_space(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim || self.d != other.d || self.t != other.t {
            return Err(Error::Dimension(format!(
                "operators on different spaces: (d={}, t={}) vs (d={}, t={})",
                self.d, self.t, other.d, other.t
            )));
        }
        Ok(())
    }

    pub fn trace(&self) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m.trace(),
            Storage::Coo(e) => e.iter().filter(|x| x.0 == x.1).map(|x| x.2).sum(),
        }
    }

    /// `Tr[self · other]`.
    pub fn trace_product(&self, other: &Operator) -> Result<C64> {
        self.check_same_space(other)?;
        Ok(match (&self.storage, &other.storage) {
            (Storage::Coo(a), Storage::Dense(b)) => a.iter().map(|&(r, c, v)| v * b[(c, r)]).sum(),
            (Storage::Dense(_), Storage::Coo(_)) => return other.trace_product(self),
            (Storage::Dense(a), Storage::Dense(b)) => {
                let mut acc = ZERO;
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        acc += a[(r, c)] * b[(c, r)];
                    }
                }
                acc
            }
            (Storage::Coo(a), Storage::Coo(b)) => {
                let lookup: HashMap<(usize, usize), C64> =
                    b.iter().map(|&(r, c, v)| ((r, c), v)).collect();
                a.iter()
                    .filter_map(|&(r, c, v)| lookup.get(&(c, r)).map(|w| v * w))
                    .sum()
            }
        })
    }

    /// Matrix product. Sparse times sparse stays sparse; anything else is dense.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other)?;
        match (&self.storage, &other.storage) {
            (Storage::Coo(a), Storage::Coo(b)) => {
                let mut rows: HashMap<usize, Vec<(usize, C64)>> = HashMap::new();
                for &(r, c, v) in b {
                    rows.entry(r).or_default().push((c, v));
                }
                let mut out = Vec::new();
                for &(r, k, v) in a {
                    if let Some(row) = rows.get(&k) {
                        out.extend(row.iter().map(|&(c, w)| (r, c, v * w)));
                    }
                }
                Operator::coo(self.d, self.t, out)
            }
            _ => {
                let m = self.to_matrix()? * other.to_matrix()?;
                Operator::dense(self.d, self.t, m)
            }
        }
    }

    pub fn adjoint(&self) -> Operator {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.adjoint()),
            Storage::Coo(e) => {
                let mut t: Vec<_> = e.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
                t.sort_by_key(|&(r, c, _)| (r, c));
                Storage::Coo(t)
            }
        };
        Operator {
            storage,
            ..self.clone()
        }
    }

    pub fn scale(&self, factor: C64) -> Operator {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m * factor),
            Storage::Coo(e) => Storage::Coo(e.iter().map(|&(r, c, v)| (r, c, v * factor)).collect()),
        };
        Operator {
            storage,
            ..self.clone()
        }
    }

    /// `self + factor·other`, dense unless both are sparse.
    pub fn add_scaled(&self, other: &Operator, factor: C64) -> Result<Operator> {
        self.check_same_space(other)?;
        match (&self.storage, &other.storage) {
            (Storage::Coo(a), Storage::Coo(b)) => {
                let mut e = a.clone();
                e.extend(b.iter().map(|&(r, c, v)| (r, c, v * factor)));
                Operator::coo(self.d, self.t, e)
            }
            _ => {
                let mut m = self.to_matrix()?;
                match &other.storage {
                    Storage::Dense(b) => m += b * factor,
                    Storage::Coo(b) => {
                        for &(r, c, v) in b {
                            m[(r, c)] += v * factor;
                        }
                    }
                }
                Operator::dense(self.d, self.t, m)
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        // fold from +0.0: an empty f64 sum is −0.0
        match &self.storage {
            Storage::Dense(m) => m.iter().fold(0.0, |acc, v| acc + v.norm_sqr()).sqrt(),
            Storage::Coo(e) => e.iter().fold(0.0, |acc, x| acc + x.2.norm_sqr()).sqrt(),
        }
    }

    /// `‖self − other‖_F`.
    pub fn frobenius_distance(&self, other: &Operator) -> Result<f64> {
        Ok(self.add_scaled(other, -ONE)?.frobenius_norm())
    }

    /// `‖self − self†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.add_scaled(&self.adjoint(), -ONE)
            .map(|o| o.frobenius_norm())
            .unwrap_or(f64::INFINITY)
    }

    pub fn dump(&self) -> OperatorDump {
        let (format, data) = match &self.storage {
            Storage::Dense(m) => {
                let mut data = Vec::with_capacity(self.dim * self.dim);
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        data.push(vec![m[(r, c)].re, m[(r, c)].im]);
                    }
                }
                ("dense", data)
            }
            Storage::Coo(e) => (
                "coo",
                e.iter()
                    .map(|&(r, c, v)| vec![r as f64, c as f64, v.re, v.im])
                    .collect(),
            ),
        };
        OperatorDump {
            d: self.d,
            t: self.t,
            dim: self.dim,
            format: format.into(),
            data,
        }
    }

    pub fn from_dump(dump: &OperatorDump) -> Result<Operator> {
        let dim = checked_dim(dump.d, dump.t)?;
        if dim != dump.dim {
            return Err(Error::Parse(format!(
                "dim {} does not equal d^t = {dim}",
                dump.dim
            )));
        }
        match dump.format.as_str() {
            "dense" => {
                if dump.data.len() != dim * dim || dump.data.iter().any(|x| x.len() != 2) {
                    return Err(Error::Parse("dense data must hold dim² [re, im] pairs".into()));
                }
                let m = DMatrix::from_fn(dim, dim, |r, c| {
                    let x = &dump.data[r * dim + c];
                    C64::new(x[0], x[1])
                });
                Operator::dense(dump.d, dump.t, m)
            }
            "coo" => {
                let mut entries = Vec::with_capacity(dump.data.len());
                for x in &dump.data {
                    if x.len() != 4 || x[0] < 0.0 || x[1] < 0.0 || x[0].fract() != 0.0 || x[1].fract() != 0.0
                    {
                        return Err(Error::Parse(format!("bad coo entry {x:?}")));
                    }
                    entries.push((x[0] as usize, x[1] as usize, C64::new(x[2], x[3])));
                }
                Operator::coo(dump.d, dump.t, entries)
            }
            other => Err(Error::Parse(format!("unknown operator format {other:?}"))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.dump()).expect("operator dump serializes")
    }

    pub fn from_json(text: &str) -> Result<Operator> {
        let dump: OperatorDump =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Operator::from_dump(&dump)
    }
}

/// JSON interchange form of an [`Operator`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDump {
    pub d: usize,
    pub t: usize,
    pub dim: usize,
    pub format: String,
    pub data: Vec<Vec<f64>>,
}

/// `(U^⊗t) X` for `X` with `d^t` rows and any number of columns.
pub fn apply_tensor_power(u: &DMatrix<C64>, x: &DMatrix<C64>, t: usize) -> DMatrix<C64> {
    let d = u.nrows();
    let mut out = x.clone();
    let mut buf = vec![ZERO; d];
    for mode in 0..t {
        let stride = d.pow((t - 1 - mode) as u32);
        let outer = x.nrows() / (stride * d);
        for col in 0..x.ncols() {
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * d * stride + inner;
                    for (a, slot) in buf.iter_mut().enumerate() {
                        let mut acc = ZERO;
                        for b in 0..d {
                            acc += u[(a, b)] * out[(base + b * stride, col)];
                        }
                        *slot = acc;
                    }
                    for (a, v) in buf.iter().enumerate() {
                        out[(base + a * stride, col)] = *v;
                    }
                }
            }
        }
    }
    out
}

/// `U^⊗t X (U†)^⊗t` without forming the tensor power.
pub fn conjugate_by_tensor_power(u: &DMatrix<C64>, x: &DMatrix<C64>, t: usize) -> DMatrix<C64> {
    let left = apply_tensor_power(u, x, t);
    apply_tensor_power(u, &left.adjoint(), t).adjoint()
}

/// Kronecker product of dense matrices.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `‖A − B‖_F` for dense matrices of equal shape.
pub fn frobenius_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn dense_and_sparse_agree() {
        let sparse = Operator::coo(2, 2, vec![(0, 1, c(2.0)), (3, 2, C64::new(0.0, 1.0)), (0, 1, c(1.0))]).unwrap();
        let dense = sparse.to_dense().unwrap();
        assert_eq!(sparse.get(0, 1), c(3.0));
        assert_eq!(dense.get(3, 2), C64::new(0.0, 1.0));
        assert!(sparse.frobenius_distance(&dense).unwrap() < 1e-12);
        assert_eq!(dense.to_coo(), sparse);
    }

    #[test]
    fn dimension_checks() {
        assert!(matches!(
            Operator::dense(2, 2, DMatrix::from_element(3, 3, ZERO)),
            Err(Error::Dimension(_))
        ));
        assert!(Operator::coo(2, 1, vec![(2, 0, ONE)]).is_err());
        let a = Operator::identity(2, 2).unwrap();
        let b = Operator::identity(4, 1).unwrap();
        assert!(a.trace_product(&b).is_err());
    }

    #[test]
    fn trace_product_all_storage_combinations() {
        let a = Operator::coo(2, 1, vec![(0, 1, c(2.0)), (1, 0, c(3.0))]).unwrap();
        let b = Operator::coo(2, 1, vec![(1, 0, c(5.0)), (0, 1, c(7.0)), (0, 0, c(1.0))]).unwrap();
        let expected = c(2.0 * 5.0 + 3.0 * 7.0);
        let (ad, bd) = (a.to_dense().unwrap(), b.to_dense().unwrap());
        for (x, y) in [(&a, &b), (&ad, &b), (&a, &bd), (&ad, &bd)] {
            assert_eq!(x.trace_product(y).unwrap(), expected);
        }
        assert_eq!(a.matmul(&b).unwrap().trace(), expected);
    }

    #[test]
    fn json_round_trip_both_formats() {
        let sparse = Operator::coo(2, 1, vec![(0, 1, C64::new(0.1, -0.3))]).unwrap();
        for op in [sparse.clone(), sparse.to_dense().unwrap()] {
            let text = op.to_json();
            assert_eq!(Operator::from_json(&text).unwrap(), op);
        }
        assert!(Operator::from_json(r#"{"d":2,"t":1,"dim":3,"format":"coo","data":[]}"#).is_err());
        assert!(Operator::from_json(r#"{"d":2,"t":1,"dim":2,"format":"csr","data":[]}"#).is_err());
    }

    #[test]
    fn tensor_power_conjugation_matches_kron() {
        let u = DMatrix::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, (i as f64) - 0.5 * j as f64));
        let x = DMatrix::from_fn(8, 8, |i, j| C64::new((i * 8 + j) as f64 * 0.01, (i as f64 - j as f64) * 0.1));
        let u3 = kron(&kron(&u, &u), &u);
        let direct = &u3 * &x * u3.adjoint();
        let fast = conjugate_by_tensor_power(&u, &x, 3);
        assert!(frobenius_distance(&direct, &fast) < 1e-10);
    }

    #[test]
    fn pure_tensor_power_trace() {
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let op = Operator::pure_tensor_power(&psi, 3).unwrap();
        assert!((op.trace() - ONE).norm() < 1e-12);
        assert!(op.hermiticity_defect() < 1e-12);
    }
}
