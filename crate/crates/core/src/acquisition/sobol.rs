//! Gray-code Sobol sequence with Joe-Kuo direction numbers and an optional digital shift.

use crate::error::{Error, Result};

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2..=6; dimension 1 is van der Corput.
const JOE_KUO: [(u32, u32, &[u32]); 5] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
];

pub const MAX_DIM: usize = JOE_KUO.len() + 1;

#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    shift: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_shift(vec![0; dim])
    }

    /// Sequence XOR-ed with a fixed per-dimension shift (random digital shift).
    pub fn with_shift(shift: Vec<u32>) -> Result<Self> {
        let dim = shift.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::usage(format!(
                "sobol dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        let mut directions = Vec::with_capacity(dim);
        let mut v = [0u32; BITS];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = 1 << (BITS - 1 - i);
        }
        directions.push(v);
        for &(s, a, m) in JOE_KUO.iter().take(dim - 1) {
            let s = s as usize;
            let mut v = [0u32; BITS];
            for i in 0..s.min(BITS) {
                v[i] = m[i] << (BITS - 1 - i);
            }
            for i in s..BITS {
                let mut x = v[i - s] ^ (v[i - s] >> s);
                for k in 1..s {
                    if (a >> (s - 1 - k)) & 1 == 1 {
                        x ^= v[i - k];
                    }
                }
                v[i] = x;
            }
            directions.push(v);
        }
        Ok(Self {
            directions,
            state: vec![0; dim],
            shift,
            index: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// Next point in `[0, 1)^dim`; the first unshifted point is the origin.
    pub fn next_point(&mut self) -> Vec<f64> {
        let out = self
            .state
            .iter()
            .zip(&self.shift)
            .map(|(x, s)| (x ^ s) as f64 / (1u64 << BITS) as f64)
            .collect();
        let c = (!self.index).trailing_zeros() as usize;
        if c < BITS {
            for (x, v) in self.state.iter_mut().zip(&self.directions) {
                *x ^= v[c];
            }
        }
        self.index += 1;
        out
    }
}
