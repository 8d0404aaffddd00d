//! Stacked `(x_k, u_k, x_{k+1})` transition triples.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::systems::Trajectory;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub n_x: usize,
    pub n_u: usize,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub next_states: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(n_x: usize, n_u: usize) -> Self {
        Self {
            n_x,
            n_u,
            ..Default::default()
        }
    }

    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let n_x = traj.states[0].len();
        let n_u = traj.inputs.first().map_or(0, Vec::len);
        let mut d = Self::new(n_x, n_u);
        d.extend_trajectory(traj);
        d
    }

    pub fn extend_trajectory(&mut self, traj: &Trajectory) {
        for k in 0..traj.len() {
            self.push(
                traj.states[k].clone(),
                traj.inputs[k].clone(),
                traj.states[k + 1].clone(),
            );
        }
    }

    pub fn push(&mut self, x: Vec<f64>, u: Vec<f64>, x_next: Vec<f64>) {
        debug_assert_eq!(x.len(), self.n_x);
        debug_assert_eq!(u.len(), self.n_u);
        debug_assert_eq!(x_next.len(), self.n_x);
        self.states.push(x);
        self.inputs.push(u);
        self.next_states.push(x_next);
    }

    pub fn append(&mut self, other: &Dataset) {
        self.states.extend(other.states.iter().cloned());
        self.inputs.extend(other.inputs.iter().cloned());
        self.next_states.extend(other.next_states.iter().cloned());
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.states
            .iter()
            .chain(&self.inputs)
            .chain(&self.next_states)
            .all(|r| r.iter().all(|v| v.is_finite()))
    }

    pub fn state_matrix(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.states, self.n_x)
    }

    pub fn input_matrix(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.inputs, self.n_u)
    }

    /// Reads a dataset CSV with header columns `x0..`, `u0..`, `xn0..`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = rdr.headers().map_err(csv_err)?.clone();
        let cols = |prefix: &str| -> Vec<usize> {
            let mut idx: Vec<(usize, usize)> = header
                .iter()
                .enumerate()
                .filter_map(|(i, h)| {
                    h.strip_prefix(prefix)
                        .and_then(|rest| rest.parse::<usize>().ok())
                        .map(|k| (k, i))
                })
                .collect();
            idx.sort();
            idx.into_iter().map(|(_, i)| i).collect()
        };
        let xs = cols("x");
        let us = cols("u");
        let xns = cols("xn");
        if xs.is_empty() || xs.len() != xns.len() {
            return Err(Error::usage(format!(
                "{}: expected matching x<i> and xn<i> columns",
                path.display()
            )));
        }
        let mut d = Dataset::new(xs.len(), us.len());
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let parse = |idx: &[usize]| -> Result<Vec<f64>> {
                idx.iter()
                    .map(|&i| {
                        rec[i].trim().parse::<f64>().map_err(|e| {
                            Error::usage(format!(
                                "{}: bad number {:?}: {e}",
                                path.display(),
                                &rec[i]
                            ))
                        })
                    })
                    .collect()
            };
            d.push(parse(&xs)?, parse(&us)?, parse(&xns)?);
        }
        Ok(d)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<String> = (0..self.n_x).map(|i| format!("x{i}")).collect();
        header.extend((0..self.n_u).map(|i| format!("u{i}")));
        header.extend((0..self.n_x).map(|i| format!("xn{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for k in 0..self.len() {
            let row: Vec<String> = self.states[k]
                .iter()
                .chain(&self.inputs[k])
                .chain(&self.next_states[k])
                .map(|v| format!("{v:e}"))
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}
