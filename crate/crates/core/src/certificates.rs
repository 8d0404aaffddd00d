//! Multilayer data-quality certificates.
//!
//! State-space terms (directional coverage, non-clustering, radial coverage)
//! act on whitened states; the spectral terms act on active standardized
//! matrices of the states, the lifted features and the full regressor.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dataset::{rows_to_matrix, Dataset};
use crate::error::{Error, Layer, Result};
use crate::lifting::{build_design, Dictionary};
use crate::standardize::{standardize, StandardizedDesign, Thresholds};

const RHO_CALIBRATION_SAMPLES: usize = 4096;
const RHO_CALIBRATION_SEED: u64 = 0x5eed_0f_f1e1d;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificateConfig {
    /// Angular resolutions in radians.
    pub resolutions: Vec<f64>,
    /// Reference direction counts, one per resolution.
    pub target_counts: Vec<usize>,
    /// Ball radii in whitened units.
    pub scales: Vec<f64>,
    /// Reference dimension; `None` uses the state dimension.
    pub reference_dim: Option<usize>,
    /// Reference density; `None` calibrates it on a uniform ball sample.
    pub rho_max: Option<f64>,
    pub radial_bins: usize,
    pub tau_state: f64,
    pub tau_lift: f64,
    pub tau_reg: f64,
    pub eps: f64,
    pub thresholds: Thresholds,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            resolutions: vec![PI / 2.0, PI / 4.0, PI / 8.0],
            target_counts: vec![4, 8, 16],
            scales: vec![0.25, 0.5, 1.0],
            reference_dim: None,
            rho_max: None,
            radial_bins: 10,
            tau_state: 0.20,
            tau_lift: 0.05,
            tau_reg: 0.05,
            eps: 1e-9,
            thresholds: Thresholds::default(),
        }
    }
}

impl CertificateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() || self.scales.is_empty() {
            return Err(Error::Config(
                "resolutions and scales must be nonempty".into(),
            ));
        }
        if self.resolutions.len() != self.target_counts.len() {
            return Err(Error::Config(
                "one target count per resolution required".into(),
            ));
        }
        if self.target_counts.contains(&0) || self.radial_bins == 0 {
            return Err(Error::Config(
                "target counts and radial_bins must be positive".into(),
            ));
        }
        if !(self.eps > 0.0) || self.scales.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Config("eps and scales must be positive".into()));
        }
        Ok(())
    }

    pub fn reference_dim_for(&self, n_x: usize) -> usize {
        self.reference_dim.unwrap_or(n_x)
    }

    /// Returns a copy with `rho_max` fixed for states of dimension `n_x`.
    pub fn calibrated(&self, n_x: usize) -> Self {
        let mut out = self.clone();
        if out.rho_max.is_none() {
            out.rho_max = Some(calibrate_rho_max(
                n_x,
                &self.scales,
                self.reference_dim_for(n_x),
                self.eps,
            ));
        }
        out
    }

    fn rho_max_for(&self, n_x: usize) -> f64 {
        self.rho_max.unwrap_or_else(|| {
            calibrate_rho_max(n_x, &self.scales, self.reference_dim_for(n_x), self.eps)
        })
    }

    /// Finest resolution, used for directional novelty.
    pub fn finest_resolution(&self) -> f64 {
        self.resolutions
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn smallest_scale(&self) -> f64 {
        self.scales.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Peak density of a whitened uniform-ball sample over the configured scales.
pub fn calibrate_rho_max(dim: usize, scales: &[f64], s: usize, eps: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(RHO_CALIBRATION_SEED ^ dim as u64);
    let unif = Uniform::new(0.0f64, 1.0).expect("valid range");
    let rows: Vec<Vec<f64>> = (0..RHO_CALIBRATION_SAMPLES)
        .map(|_| {
            let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = unif.sample(&mut rng).powf(1.0 / dim as f64);
            g.iter().map(|v| v / norm * r).collect()
        })
        .collect();
    let xw = whiten_states(&rows_to_matrix(&rows, dim), eps).apply_rows(&rows);
    density_profile(&xw, scales, s, eps)
        .into_iter()
        .fold(0.0, f64::max)
}

/// Affine whitening map `x -> W (x - mean)` with `W = Sigma^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    pub mean: Vec<f64>,
    pub transform: DMatrix<f64>,
    /// Set when the covariance was singular and an eps ridge was added.
    pub ridged: bool,
}

impl Whitening {
    pub fn identity(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            transform: DMatrix::identity(n, n),
            ridged: false,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let c = DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(a, m)| a - m));
        (&self.transform * c).iter().copied().collect()
    }

    /// Applies the linear part only (for displacements).
    pub fn apply_linear(&self, v: &[f64]) -> Vec<f64> {
        (&self.transform * DVector::from_column_slice(v))
            .iter()
            .copied()
            .collect()
    }

    pub fn apply_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

/// Estimates a whitening map from the rows of `x` (population covariance).
pub fn whiten_states(x: &DMatrix<f64>, eps: f64) -> Whitening {
    let (n, d) = x.shape();
    if n == 0 {
        return Whitening::identity(d);
    }
    let nf = n as f64;
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).sum() / nf).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let mut cov = centered.tr_mul(&centered) / nf;
    let eig = SymmetricEigen::new(cov.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let lmin = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let ridged = n < d + 1 || !(lmin > eps * lmax.max(1.0));
    if ridged {
        cov += DMatrix::identity(d, d) * eps;
    }
    let eig = SymmetricEigen::new(cov);
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(eps).sqrt()));
    let transform = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    Whitening {
        mean,
        transform,
        ridged,
    }
}

fn unit(v: &[f64], eps: f64) -> Option<Vec<f64>> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (norm > eps).then(|| v.iter().map(|a| a / norm).collect())
}

pub(crate) fn angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0).acos()
}

/// Whitened unit displacement directions, skipping zero displacements.
pub fn displacement_directions(dataset: &Dataset, w: &Whitening, eps: f64) -> Vec<Vec<f64>> {
    dataset
        .states
        .iter()
        .zip(&dataset.next_states)
        .filter_map(|(x, xn)| {
            let disp: Vec<f64> = xn.iter().zip(x).map(|(a, b)| a - b).collect();
            unit(&w.apply_linear(&disp), eps)
        })
        .collect()
}

/// First-accept greedy scan: keeps a direction when its angle to every kept
/// direction exceeds `delta`.
pub fn greedy_direction_set(dirs: &[Vec<f64>], delta: f64) -> Vec<Vec<f64>> {
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    extend_direction_set(&mut accepted, dirs, delta);
    accepted
}

pub(crate) fn extend_direction_set(accepted: &mut Vec<Vec<f64>>, dirs: &[Vec<f64>], delta: f64) {
    for d in dirs {
        if accepted.iter().all(|a| angle(a, d) > delta) {
            accepted.push(d.clone());
        }
    }
}

/// `min_l min(M_l / M*_l, 1)` over the configured resolutions.
pub fn directional_coverage_of(dirs: &[Vec<f64>], cfg: &CertificateConfig) -> f64 {
    if dirs.is_empty() {
        return 0.0;
    }
    cfg.resolutions
        .iter()
        .zip(&cfg.target_counts)
        .map(|(&delta, &target)| {
            let m = greedy_direction_set(dirs, delta).len();
            (m as f64 / target as f64).min(1.0)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn directional_coverage(dataset: &Dataset, cfg: &CertificateConfig) -> f64 {
    let w = whiten_states(&dataset.state_matrix(), cfg.eps);
    directional_coverage_of(&displacement_directions(dataset, &w, cfg.eps), cfg)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `rho(r)` for each scale: peak empirical ball mass over `r^s + eps`.
pub fn density_profile(xw: &[Vec<f64>], scales: &[f64], s: usize, eps: f64) -> Vec<f64> {
    let n = xw.len();
    if n == 0 {
        return vec![0.0; scales.len()];
    }
    let r2: Vec<f64> = scales.iter().map(|r| r * r).collect();
    let mut counts = vec![vec![1usize; n]; scales.len()];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist2(&xw[i], &xw[j]);
            for (k, &rr) in r2.iter().enumerate() {
                if d <= rr {
                    counts[k][i] += 1;
                    counts[k][j] += 1;
                }
            }
        }
    }
    scales
        .iter()
        .zip(&counts)
        .map(|(&r, c)| {
            let peak = *c.iter().max().expect("n > 0") as f64 / n as f64;
            peak / (r.powi(s as i32) + eps)
        })
        .collect()
}

/// Multiscale non-clustering, clipped to `[0, 1]`.
pub fn frostman_noncluster(xw: &[Vec<f64>], cfg: &CertificateConfig) -> f64 {
    let Some(dim) = xw.first().map(Vec::len) else {
        return 0.0;
    };
    let rho_max = cfg.rho_max_for(dim);
    density_profile(xw, &cfg.scales, cfg.reference_dim_for(dim), cfg.eps)
        .into_iter()
        .map(|rho| rho_max / rho)
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0)
}

/// Occupied fraction of equal-width radius shells up to the 95th-percentile radius.
pub fn radial_coverage(xw: &[Vec<f64>], cfg: &CertificateConfig) -> f64 {
    if xw.is_empty() {
        return 0.0;
    }
    let bins = cfg.radial_bins;
    let mut radii: Vec<f64> = xw
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    radii.sort_by(f64::total_cmp);
    let r95 = percentile_sorted(&radii, 0.95);
    if !(r95 > 0.0) {
        return 1.0 / bins as f64;
    }
    let width = r95 / bins as f64;
    let mut occupied = vec![false; bins];
    for &r in &radii {
        if r <= r95 * (1.0 + 1e-12) {
            let b = ((r / width) as usize).min(bins - 1);
            occupied[b] = true;
        }
    }
    occupied.iter().filter(|&&o| o).count() as f64 / bins as f64
}

/// Linear-interpolation percentile of sorted data.
pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Spectral summary of `(1/N) Zbar^T Zbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isotropy {
    pub min: f64,
    pub max: f64,
    /// Log-determinant with eigenvalues floored at the numerical-zero level.
    pub logdet: f64,
    pub cond: f64,
}

pub fn isotropy(z: &StandardizedDesign) -> Result<Isotropy> {
    if z.active_dim == 0 {
        return Err(Error::degenerate(Layer::Regression, "no active columns"));
    }
    let ev = z.gram_spectrum();
    let min = ev[0].max(0.0);
    let max = *ev.last().expect("nonempty");
    let floor = numerical_zero(max, ev.len());
    let logdet = ev.iter().map(|&l| l.max(floor).ln()).sum();
    Ok(Isotropy {
        min,
        max,
        logdet,
        cond: max / min.max(floor),
    })
}

/// Eigenvalues below this are indistinguishable from zero for a Gram with top eigenvalue `lmax`.
pub(crate) fn numerical_zero(lmax: f64, p: usize) -> f64 {
    (p.max(1) as f64 * f64::EPSILON * lmax).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub n_samples: usize,
    pub c_dir: f64,
    pub c_fr: f64,
    pub c_rad: f64,
    pub c_state: f64,
    pub c_lift: f64,
    pub c_reg: f64,
    pub state_iso: f64,
    pub lift_iso: f64,
    pub regression_iso: f64,
    pub c_gpe: f64,
    pub active_dim: usize,
    pub active_rank: usize,
    pub state_active_dim: usize,
    pub lift_active_dim: usize,
    pub lift_active_rank: usize,
    pub sigma_min_bar_phi: f64,
    pub regression_logdet: f64,
    pub regression_cond: f64,
    pub whitening_ridged: bool,
}

/// Composite term names in the order they enter the minimum.
pub const COMPOSITE_TERMS: [&str; 6] = [
    "c_dir",
    "c_fr",
    "c_rad",
    "state_iso",
    "lift_iso",
    "regression_iso",
];

impl CertificateReport {
    pub fn composite_terms(&self) -> [f64; 6] {
        [
            self.c_dir,
            self.c_fr,
            self.c_rad,
            self.state_iso,
            self.lift_iso,
            self.regression_iso,
        ]
    }

    /// Name of the composite term attaining the minimum (first in order on ties).
    pub fn bottleneck_term(&self) -> &'static str {
        let t = self.composite_terms();
        let i = (0..6).fold(0, |best, i| if t[i] < t[best] { i } else { best });
        COMPOSITE_TERMS[i]
    }

    /// Earliest spectral layer attaining the smallest normalized isotropy.
    ///
    /// Degeneracy propagates downstream, so on ties the upstream layer is named.
    pub fn bottleneck_layer(&self) -> Layer {
        let vals = [
            (Layer::State, self.state_iso),
            (Layer::Lifted, self.lift_iso),
            (Layer::Regression, self.regression_iso),
        ];
        vals.iter()
            .fold(vals[0], |best, &v| if v.1 < best.1 { v } else { best })
            .0
    }

    pub fn is_finite(&self) -> bool {
        [
            self.c_dir,
            self.c_fr,
            self.c_rad,
            self.c_state,
            self.c_lift,
            self.c_reg,
            self.state_iso,
            self.lift_iso,
            self.regression_iso,
            self.c_gpe,
            self.sigma_min_bar_phi,
            self.regression_logdet,
            self.regression_cond,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

pub fn full_report(
    dataset: &Dataset,
    dict: &Dictionary,
    cfg: &CertificateConfig,
) -> Result<CertificateReport> {
    cfg.validate()?;
    let design = build_design(dataset, dict)?;
    let n = design.n();
    let th = &cfg.thresholds;

    let x = dataset.state_matrix();
    let state = standardize(&x, th).map_err(|e| e.in_layer(Layer::State))?;
    let lifted = standardize(&design.psi, th).map_err(|e| e.in_layer(Layer::Lifted))?;
    let regression = standardize(&design.phi, th).map_err(|e| e.in_layer(Layer::Regression))?;

    let c_state = isotropy(&state)?.min;
    let c_lift = isotropy(&lifted)?.min;
    let reg = isotropy(&regression)?;
    let c_reg = reg.min;

    let w = whiten_states(&x, cfg.eps);
    let xw = w.apply_rows(&dataset.states);
    let c_dir = directional_coverage_of(&displacement_directions(dataset, &w, cfg.eps), cfg);
    let c_fr = frostman_noncluster(&xw, cfg);
    let c_rad = radial_coverage(&xw, cfg);

    let state_iso = c_state / cfg.tau_state;
    let lift_iso = c_lift / cfg.tau_lift;
    let regression_iso = c_reg / cfg.tau_reg;
    let c_gpe = [c_dir, c_fr, c_rad, state_iso, lift_iso, regression_iso]
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    // Fewer rows than active columns leaves a zero singular value out of the SVD.
    let sigma_min_bar_phi = if regression.active_dim > n {
        0.0
    } else {
        regression.singular_values.last().copied().unwrap_or(0.0)
    };

    Ok(CertificateReport {
        n_samples: n,
        c_dir,
        c_fr,
        c_rad,
        c_state,
        c_lift,
        c_reg,
        state_iso,
        lift_iso,
        regression_iso,
        c_gpe,
        active_dim: regression.active_dim,
        active_rank: regression.active_rank,
        state_active_dim: state.active_dim,
        lift_active_dim: lifted.active_dim,
        lift_active_rank: lifted.active_rank,
        sigma_min_bar_phi,
        regression_logdet: reg.logdet,
        regression_cond: reg.cond,
        whitening_ridged: w.ridged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{normalized_gram, sym_min_eigenvalue};
    use rand::Rng;

    fn cfg() -> CertificateConfig {
        CertificateConfig::default()
    }

    fn dirs_from_degrees(deg: &[f64]) -> Vec<Vec<f64>> {
        deg.iter()
            .map(|d| {
                let r = d.to_radians();
                vec![r.cos(), r.sin()]
            })
            .collect()
    }

    fn cov(rows: &[Vec<f64>]) -> DMatrix<f64> {
        let m = rows_to_matrix(rows, rows[0].len());
        let n = m.nrows() as f64;
        let mean = m.row_mean();
        let c = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - mean[j]);
        c.tr_mul(&c) / n
    }

    #[test]
    fn whitening_of_white_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| (0..2).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let w = whiten_states(&rows_to_matrix(&rows, 2), 1e-9);
        assert!(!w.ridged);
        let c = cov(&w.apply_rows(&rows));
        assert!((c - DMatrix::identity(2, 2)).amax() < 1e-8);
        // the map itself is near identity for an already white sample
        assert!((&w.transform - DMatrix::identity(2, 2)).amax() < 0.05);
    }

    #[test]
    fn whitening_is_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| (0..2).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, -0.5, 0.2]);
        let mapped: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let v = &a * DVector::from_column_slice(r);
                vec![v[0] + 4.0, v[1] - 7.0]
            })
            .collect();
        let w = whiten_states(&rows_to_matrix(&mapped, 2), 1e-9);
        let out = w.apply_rows(&mapped);
        assert!((cov(&out) - DMatrix::identity(2, 2)).amax() < 1e-8);
    }

    #[test]
    fn whitening_line_data_takes_ridge_path() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let w = whiten_states(&rows_to_matrix(&rows, 2), 1e-9);
        assert!(w.ridged);
        assert!(w.apply_rows(&rows).iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn greedy_direction_counts() {
        let four = dirs_from_degrees(&[0.0, 90.0, 180.0, 270.0]);
        assert_eq!(greedy_direction_set(&four, 80f64.to_radians()).len(), 4);
        assert_eq!(greedy_direction_set(&four, 100f64.to_radians()).len(), 2);
        let same = dirs_from_degrees(&[30.0; 6]);
        for delta in cfg().resolutions {
            assert_eq!(greedy_direction_set(&same, delta).len(), 1);
        }
        let c = CertificateConfig {
            resolutions: vec![80f64.to_radians()],
            target_counts: vec![4],
            ..cfg()
        };
        assert_eq!(directional_coverage_of(&four, &c), 1.0);
        assert_eq!(directional_coverage_of(&[], &c), 0.0);
    }

    #[test]
    fn zero_displacements_give_zero_coverage() {
        let mut ds = Dataset::new(2, 1);
        for x in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]] {
            ds.push(x.to_vec(), vec![0.0], x.to_vec());
        }
        assert_eq!(directional_coverage(&ds, &cfg()), 0.0);
    }

    #[test]
    fn single_point_density_is_closed_form() {
        let c = cfg().calibrated(2);
        let rho = density_profile(&[vec![0.3, 0.1]], &c.scales, 2, c.eps);
        for (r, v) in c.scales.iter().zip(&rho) {
            assert!((v - 1.0 / (r * r + c.eps)).abs() < 1e-12);
        }
        let expect = c
            .scales
            .iter()
            .map(|r| c.rho_max.unwrap() * (r * r + c.eps))
            .fold(f64::INFINITY, f64::min)
            .clamp(0.0, 1.0);
        assert_eq!(frostman_noncluster(&[vec![0.3, 0.1]], &c), expect);
    }

    #[test]
    fn identical_points_peak_at_smallest_scale() {
        let c = cfg().calibrated(2);
        let pts = vec![vec![0.5, 0.5]; 30];
        let rho = density_profile(&pts, &c.scales, 2, c.eps);
        let rmin = (0..rho.len()).fold(0, |b, i| if rho[i] > rho[b] { i } else { b });
        assert_eq!(c.scales[rmin], c.smallest_scale());
    }

    #[test]
    fn grid_beats_cluster_on_noncluster() {
        let c = cfg().calibrated(2);
        let grid: Vec<Vec<f64>> = (0..100)
            .map(|k| vec![(k % 10) as f64, (k / 10) as f64])
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut cluster: Vec<Vec<f64>> = (0..99)
            .map(|_| vec![rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01)])
            .collect();
        cluster.push(vec![5.0, 5.0]);
        let gw = whiten_states(&rows_to_matrix(&grid, 2), c.eps).apply_rows(&grid);
        let cw = whiten_states(&rows_to_matrix(&cluster, 2), c.eps).apply_rows(&cluster);
        let (g, k) = (frostman_noncluster(&gw, &c), frostman_noncluster(&cw, &c));
        assert!(g > k, "grid {g} cluster {k}");
    }

    #[test]
    fn uniform_ball_scores_one() {
        let c = cfg().calibrated(3);
        let mut rng = ChaCha8Rng::seed_from_u64(RHO_CALIBRATION_SEED ^ 3);
        let unif = Uniform::new(0.0f64, 1.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..RHO_CALIBRATION_SAMPLES)
            .map(|_| {
                let g: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                let r = unif.sample(&mut rng).powf(1.0 / 3.0);
                g.iter().map(|v| v / n * r).collect()
            })
            .collect();
        let xw = whiten_states(&rows_to_matrix(&rows, 3), c.eps).apply_rows(&rows);
        assert!((frostman_noncluster(&xw, &c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_coverage_cases() {
        let c = cfg();
        let ring: Vec<Vec<f64>> = (0..40)
            .map(|k| {
                let t = k as f64 * 0.3;
                vec![2.0 * t.cos(), 2.0 * t.sin()]
            })
            .collect();
        assert_eq!(radial_coverage(&ring, &c), 0.1);
        // two points per shell centre plus a far pair above the percentile
        let mut rows: Vec<Vec<f64>> = (0..10)
            .flat_map(|b| {
                let r = (b as f64 + 0.5) / 10.0;
                vec![vec![r, 0.0], vec![0.0, r]]
            })
            .collect();
        rows.push(vec![1.0, 0.0]);
        rows.push(vec![0.0, 1.0]);
        assert_eq!(radial_coverage(&rows, &c), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let uni: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![rng.random_range(0.0..3.0), 0.0])
            .collect();
        assert_eq!(radial_coverage(&uni, &c), 1.0);
    }

    #[test]
    fn isotropy_cases() {
        let th = Thresholds::default();
        let m = DMatrix::from_fn(30, 2, |i, _| (i as f64).sin());
        let z = standardize(&m, &th).unwrap();
        assert!(isotropy(&z).unwrap().min <= 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = DMatrix::from_fn(20_000, 10, |_, _| StandardNormal.sample(&mut rng));
        let z = standardize(&g, &th).unwrap();
        let iso = isotropy(&z).unwrap();
        assert!((0.9..=1.1).contains(&iso.min), "{}", iso.min);
        // SVD route agrees with the explicit Gram eigen-decomposition
        let direct = sym_min_eigenvalue(&normalized_gram(&z.zbar));
        assert!((iso.min - direct).abs() < 1e-12);
    }

    #[test]
    fn cross_set_full_lifted_gram_is_singular() {
        let pts = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let dict = Dictionary::polynomial(2, 2).unwrap();
        let psi = DMatrix::from_fn(4, 5, |i, j| dict.lift(&pts[i]).unwrap()[j]);
        let n = 4.0;
        let mean = psi.row_mean();
        let centered = DMatrix::from_fn(4, 5, |i, j| psi[(i, j)] - mean[j]);
        assert!(sym_min_eigenvalue(&(centered.tr_mul(&centered) / n)).abs() <= 1e-12);
    }

    fn cross_dataset() -> Dataset {
        let mut ds = Dataset::new(2, 1);
        for x in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            ds.push(x.to_vec(), vec![0.0], x.to_vec());
        }
        ds
    }

    #[test]
    fn cross_set_report_blames_lifted_layer() {
        let dict = Dictionary::polynomial(2, 2).unwrap();
        let r = full_report(&cross_dataset(), &dict, &cfg()).unwrap();
        assert!((r.c_state - 1.0).abs() < 1e-12);
        assert_eq!(r.lift_active_dim, 4);
        assert!(r.c_lift <= 1e-12);
        assert_eq!(r.bottleneck_layer(), Layer::Lifted);
        assert!(r.is_finite());
    }

    #[test]
    fn layers_are_screened_separately() {
        // x1 * x2 vanishes on the axes, so only the lifted layer loses a column
        let mut ds = Dataset::new(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..40 {
            let t: f64 = rng.random_range(-2.0..2.0);
            let x = if k % 2 == 0 {
                vec![t, 0.0]
            } else {
                vec![0.0, t]
            };
            let xn = vec![x[0] * 0.9, x[1] * 0.9];
            ds.push(x, vec![rng.random_range(-1.0..1.0)], xn);
        }
        let dict = Dictionary::polynomial(2, 2).unwrap();
        let r = full_report(&ds, &dict, &cfg()).unwrap();
        assert_eq!(r.state_active_dim, 2);
        assert_eq!(r.lift_active_dim, 4);
        assert_eq!(r.active_dim, 5);
        assert!(r.c_gpe <= r.regression_iso && r.c_gpe <= r.state_iso);
    }

    #[test]
    fn zero_variance_column_does_not_change_isotropy() {
        let th = Thresholds::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = DMatrix::from_fn(50, 3, |_, _| rng.random_range(-1.0..1.0));
        let mut wider = DMatrix::from_element(50, 4, 2.5);
        wider.columns_mut(0, 3).copy_from(&m);
        let a = isotropy(&standardize(&m, &th).unwrap()).unwrap().min;
        let b = isotropy(&standardize(&wider, &th).unwrap()).unwrap().min;
        assert!((a - b).abs() < 1e-14);
    }
}
