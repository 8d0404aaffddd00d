//! Monomial dictionaries and EDMDc design assembly.

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Polynomial dictionary of all monomials with total degree in `1..=degree`.
///
/// Terms are in graded-lexicographic order, so the first `n_x` entries of a
/// lifted vector are the state coordinates themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    pub n_x: usize,
    pub degree: usize,
    pub terms: Vec<Vec<u32>>,
}

impl Dictionary {
    pub fn polynomial(n_x: usize, degree: usize) -> Result<Self> {
        if n_x == 0 || degree == 0 {
            return Err(Error::usage("dictionary needs n_x >= 1 and degree >= 1"));
        }
        let mut terms = Vec::new();
        for total in 1..=degree as u32 {
            let mut level = Vec::new();
            compositions(n_x, total, &mut Vec::with_capacity(n_x), &mut level);
            terms.extend(level);
        }
        Ok(Self { n_x, degree, terms })
    }

    pub fn d_psi(&self) -> usize {
        self.terms.len()
    }

    pub fn term_degree(&self, j: usize) -> u32 {
        self.terms[j].iter().sum()
    }

    pub fn lift(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_x {
            return Err(Error::Dimension {
                expected: self.n_x,
                got: x.len(),
                context: "lift",
            });
        }
        Ok(self.lift_unchecked(x))
    }

    pub(crate) fn lift_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.terms.len());
        self.lift_into(x, &mut out);
        out
    }

    pub(crate) fn lift_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.terms.iter().map(|t| {
            t.iter()
                .zip(x)
                .map(|(&e, &xi)| xi.powi(e as i32))
                .product::<f64>()
        }));
    }

    /// Human-readable term names such as `x0^2*x1`.
    pub fn term_names(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|t| {
                t.iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| {
                        if e == 1 {
                            format!("x{i}")
                        } else {
                            format!("x{i}^{e}")
                        }
                    })
                    .collect::<Vec<_>>()
                    .join("*")
            })
            .collect()
    }
}

// Exponent vectors of length `n` summing to `total`, lexicographically descending.
fn compositions(n: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == n {
        let mut t = prefix.clone();
        t.push(total);
        out.push(t);
        return;
    }
    for e in (0..=total).rev() {
        prefix.push(e);
        compositions(n, total - e, prefix, out);
        prefix.pop();
    }
}

/// `Phi = [Psi, U]` and the next-step target `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedDesign {
    pub psi: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub d_psi: usize,
    pub n_u: usize,
}

impl LiftedDesign {
    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn p(&self) -> usize {
        self.phi.ncols()
    }
}

pub fn build_design(dataset: &Dataset, dict: &Dictionary) -> Result<LiftedDesign> {
    if dataset.is_empty() {
        return Err(Error::usage("cannot build a design from an empty dataset"));
    }
    if dataset.n_x != dict.n_x {
        return Err(Error::Dimension {
            expected: dict.n_x,
            got: dataset.n_x,
            context: "dataset state dimension vs dictionary",
        });
    }
    if !dataset.is_finite() {
        return Err(Error::usage("dataset contains nonfinite entries"));
    }
    let n = dataset.len();
    let d = dict.d_psi();
    let m = dataset.n_u;
    let mut psi = DMatrix::zeros(n, d);
    let mut y = DMatrix::zeros(n, d);
    let mut u = DMatrix::zeros(n, m);
    let mut buf = Vec::with_capacity(d);
    for k in 0..n {
        dict.lift_into(&dataset.states[k], &mut buf);
        psi.row_mut(k)
            .iter_mut()
            .zip(&buf)
            .for_each(|(a, b)| *a = *b);
        dict.lift_into(&dataset.next_states[k], &mut buf);
        y.row_mut(k).iter_mut().zip(&buf).for_each(|(a, b)| *a = *b);
        for j in 0..m {
            u[(k, j)] = dataset.inputs[k][j];
        }
    }
    let mut phi = DMatrix::zeros(n, d + m);
    phi.columns_mut(0, d).copy_from(&psi);
    phi.columns_mut(d, m).copy_from(&u);
    Ok(LiftedDesign {
        psi,
        u,
        phi,
        y,
        d_psi: d,
        n_u: m,
    })
}
