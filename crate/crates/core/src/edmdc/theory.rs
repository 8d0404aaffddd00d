//! Numerical checks of the regression-identifiability statements.
//!
//! Every check takes an active standardized design `Phibar` (N x p) directly
//! and compares two independently computed sides.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::certificates::numerical_zero;
use crate::error::{Error, Layer, Result};
use crate::linalg::{normalized_gram, pinv, singular_values, sym_eigenvalues};
use crate::standardize::StandardizedDesign;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryName {
    Identity,
    Fisher,
    RidgeBound,
    LsRisk,
    PopulationGap,
    Schur,
}

impl TheoryName {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoryName::Identity => "identity",
            TheoryName::Fisher => "fisher",
            TheoryName::RidgeBound => "ridge_bound",
            TheoryName::LsRisk => "ls_risk",
            TheoryName::PopulationGap => "population_gap",
            TheoryName::Schur => "schur",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryCheck {
    pub name: TheoryName,
    pub lhs: f64,
    pub rhs: f64,
    /// Signed slack in the direction of the claim; negative means violated before tolerance.
    pub margin: f64,
    pub satisfied: bool,
}

/// `lambda_min((1/N) Phibar^T Phibar)` from an explicit Gram eigen-decomposition.
pub fn c_reg_eigen(phi_bar: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(&normalized_gram(phi_bar))
        .first()
        .copied()
        .unwrap_or(0.0)
}

/// `sigma_min(Phibar)` by SVD against `sqrt(N C_reg)` by Gram eigenvalues.
pub fn check_identity(phi_bar: &DMatrix<f64>) -> TheoryCheck {
    let (n, p) = phi_bar.shape();
    let sv = singular_values(phi_bar);
    let lhs = if p > n {
        0.0
    } else {
        sv.last().copied().unwrap_or(0.0)
    };
    let ev = sym_eigenvalues(&normalized_gram(phi_bar));
    let lmax = ev.last().copied().unwrap_or(0.0);
    // the Gram route cannot resolve eigenvalues below its rounding floor
    let floor = numerical_zero(lmax, p);
    let lmin = ev.first().copied().unwrap_or(0.0);
    let rhs = if lmin > floor {
        (n as f64 * lmin).sqrt()
    } else {
        0.0
    };
    let gap = (lhs - rhs).abs();
    let tol = 1e-9 * lhs.max(rhs) + (n as f64 * floor).sqrt();
    TheoryCheck {
        name: TheoryName::Identity,
        lhs,
        rhs,
        margin: -gap,
        satisfied: gap <= tol,
    }
}

/// `lambda_min(Sigma_e^{-1} kron Phibar^T Phibar) >= N C_reg / lambda_max(Sigma_e)`.
///
/// The left side is the smallest eigenvalue of the explicitly formed Kronecker product.
pub fn check_fisher(phi_bar: &DMatrix<f64>, sigma_e: &DMatrix<f64>) -> Result<TheoryCheck> {
    let q = sigma_e.nrows();
    if !sigma_e.is_square()
        || (sigma_e - sigma_e.transpose()).amax() > 1e-12 * sigma_e.amax().max(1.0)
    {
        return Err(Error::usage("Sigma_e must be square and symmetric"));
    }
    let sigma_inv = sigma_e
        .clone()
        .cholesky()
        .ok_or_else(|| Error::usage("Sigma_e must be positive definite"))?
        .inverse();
    let gram = phi_bar.tr_mul(phi_bar);
    let p = gram.nrows();
    let mut info = DMatrix::zeros(q * p, q * p);
    for a in 0..q {
        for b in 0..q {
            info.view_mut((a * p, b * p), (p, p))
                .copy_from(&(&gram * sigma_inv[(a, b)]));
        }
    }
    let ev = sym_eigenvalues(&info);
    let lhs = ev[0];
    let n = phi_bar.nrows() as f64;
    let sigma_max = *sym_eigenvalues(sigma_e).last().expect("q >= 1");
    let rhs = n * c_reg_eigen(phi_bar) / sigma_max;
    let margin = lhs - rhs;
    let tol = 1e-9 * lhs.abs().max(rhs.abs()) + numerical_zero(*ev.last().unwrap(), q * p);
    Ok(TheoryCheck {
        name: TheoryName::Fisher,
        lhs,
        rhs,
        margin,
        satisfied: margin >= -tol,
    })
}

fn solve_ridge(phi_bar: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let p = phi_bar.ncols();
    let g = phi_bar.tr_mul(phi_bar) + DMatrix::identity(p, p) * lambda;
    let rhs = phi_bar.tr_mul(y);
    match g.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => pinv(&g, 1e-14) * rhs,
    }
}

/// Ridge error bound around the projection target of `y_clean`.
///
/// `K*` is the least-squares coefficient of `y_clean` on `phi_bar`, so
/// `y_clean = Phibar K* + R` with `Phibar^T R = 0`; the ridge estimate is
/// computed from `y_clean + noise`.
pub fn check_ridge_bound(
    phi_bar: &DMatrix<f64>,
    y_clean: &DMatrix<f64>,
    noise: &DMatrix<f64>,
    lambda: f64,
) -> Result<TheoryCheck> {
    if y_clean.shape() != noise.shape() || y_clean.nrows() != phi_bar.nrows() {
        return Err(Error::usage("Y and E must both be N x q"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::usage("lambda must be nonnegative"));
    }
    let n = phi_bar.nrows() as f64;
    let c_reg = c_reg_eigen(phi_bar);
    if lambda == 0.0 && !(c_reg > 0.0) {
        return Err(Error::degenerate(
            Layer::Regression,
            "ridge bound with lambda = 0 needs C_reg > 0",
        ));
    }
    let k_star = pinv(phi_bar, 1e-12) * y_clean;
    let k_hat = solve_ridge(phi_bar, &(y_clean + noise), lambda);
    let lhs = (&k_hat - &k_star).norm();
    let rhs = (phi_bar.tr_mul(noise).norm() + lambda * k_star.norm()) / (n * c_reg + lambda);
    Ok(TheoryCheck {
        name: TheoryName::RidgeBound,
        lhs,
        rhs,
        margin: rhs - lhs,
        satisfied: lhs <= rhs + 1e-9,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsRiskCheck {
    pub check: TheoryCheck,
    /// Standard error of the Monte Carlo mean.
    pub std_err: f64,
    /// `sigma^2 q tr((Phibar^T Phibar)^{-1})`.
    pub exact_risk: f64,
}

/// Monte Carlo least-squares risk against `sigma^2 q p / (N C_reg)`.
pub fn check_ls_risk(
    phi_bar: &DMatrix<f64>,
    sigma: f64,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<LsRiskCheck> {
    if trials < 1000 {
        return Err(Error::usage("ls risk check needs at least 1000 trials"));
    }
    if q == 0 || !(sigma >= 0.0) {
        return Err(Error::usage("q >= 1 and sigma >= 0 required"));
    }
    let (n, p) = phi_bar.shape();
    let sv = singular_values(phi_bar);
    if p > n || sv.last().copied().unwrap_or(0.0) <= 1e-8 * sv[0] {
        return Err(Error::degenerate(
            Layer::Regression,
            "ls risk needs a full-rank design",
        ));
    }
    let gram = phi_bar.tr_mul(phi_bar);
    let gram_inv = gram.clone().cholesky().expect("full rank").inverse();
    let hat = &gram_inv * phi_bar.transpose();
    let c_reg = c_reg_eigen(phi_bar);
    let bound = sigma * sigma * (q * p) as f64 / (n as f64 * c_reg);
    let exact_risk = sigma * sigma * q as f64 * gram_inv.trace();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let e = DMatrix::from_fn(n, q, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
        samples.push((&hat * e).norm_squared());
    }
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let std_err = (var / trials as f64).sqrt();
    let slack = bound * (1.0 + 3.0 / (trials as f64).sqrt());
    Ok(LsRiskCheck {
        check: TheoryCheck {
            name: TheoryName::LsRisk,
            lhs: mean,
            rhs: bound,
            margin: bound - mean,
            satisfied: mean <= slack,
        },
        std_err,
        exact_risk,
    })
}

/// Scaled-sphere mixture regressor with `E[xi xi^T] = mu I` and `|xi| <= radius`.
///
/// A draw is `radius * s` with probability `mu p / radius^2` and zero otherwise,
/// where `s` is uniform on the unit sphere.
#[derive(Debug, Clone, Copy)]
pub struct SphereMixture {
    pub p: usize,
    pub mu: f64,
    pub radius: f64,
}

impl SphereMixture {
    pub fn new(p: usize, mu: f64, radius: f64) -> Result<Self> {
        if p == 0 || !(mu > 0.0) || !(radius * radius >= mu * p as f64 * (1.0 - 1e-12)) {
            return Err(Error::usage(
                "sphere mixture needs p >= 1, mu > 0 and radius^2 >= mu p",
            ));
        }
        Ok(Self { p, mu, radius })
    }

    fn hit_probability(&self) -> f64 {
        (self.mu * self.p as f64 / (self.radius * self.radius)).min(1.0)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let hit = rng.random::<f64>() < self.hit_probability();
        let g: Vec<f64> = (0..self.p).map(|_| rng.sample(StandardNormal)).collect();
        if !hit {
            return vec![0.0; self.p];
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        g.iter().map(|v| self.radius * v / norm).collect()
    }
}

/// `lambda_min((1/N) sum xi xi^T)` with population (known, zero) mean and unit scale.
pub fn population_isotropy(samples: &[Vec<f64>]) -> f64 {
    let p = samples.first().map_or(0, Vec::len);
    let mut g = DMatrix::zeros(p, p);
    for s in samples {
        for i in 0..p {
            for j in 0..=i {
                g[(i, j)] += s[i] * s[j];
            }
        }
    }
    let g = DMatrix::from_fn(p, p, |i, j| if i >= j { g[(i, j)] } else { g[(j, i)] })
        / samples.len() as f64;
    sym_eigenvalues(&g).first().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGapCurve {
    /// `(N, frequency of C_reg >= mu/2)` per requested sample size.
    pub points: Vec<(usize, f64)>,
    /// Requires frequency >= 0.95 at the largest N.
    pub check: TheoryCheck,
}

pub fn check_population_gap(
    dist: &SphereMixture,
    n_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<PopulationGapCurve> {
    if n_list.is_empty() || trials == 0 {
        return Err(Error::usage("population gap needs sample sizes and trials"));
    }
    let points: Vec<(usize, f64)> = n_list
        .iter()
        .map(|&n| {
            let hits = (0..trials)
                .into_par_iter()
                .filter(|&t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((n as u64) << 32) | t as u64);
                    let samples: Vec<Vec<f64>> = (0..n).map(|_| dist.sample(&mut rng)).collect();
                    population_isotropy(&samples) >= dist.mu / 2.0
                })
                .count();
            (n, hits as f64 / trials as f64)
        })
        .collect();
    let &(_, freq) = points.iter().max_by_key(|(n, _)| *n).expect("nonempty");
    Ok(PopulationGapCurve {
        points,
        check: TheoryCheck {
            name: TheoryName::PopulationGap,
            lhs: freq,
            rhs: 0.95,
            margin: freq - 0.95,
            satisfied: freq >= 0.95,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchurDiagnostics {
    /// Normalized Gram of the active lifted columns.
    pub lifted_gram: DMatrix<f64>,
    /// Input residual covariance after projecting on the lifted columns.
    pub input_residual: DMatrix<f64>,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub c_reg: f64,
    /// Set when the lifted Gram was singular and a pseudoinverse was used.
    pub pinv_used: bool,
}

impl SchurDiagnostics {
    /// Interlacing direction `C_reg <= min(alpha_hat, beta_hat)`.
    pub fn interlacing_check(&self) -> TheoryCheck {
        let rhs = self.alpha_hat.min(self.beta_hat);
        let tol = 1e-10 * rhs.abs().max(1.0);
        TheoryCheck {
            name: TheoryName::Schur,
            lhs: self.c_reg,
            rhs,
            margin: rhs - self.c_reg,
            satisfied: self.c_reg <= rhs + tol,
        }
    }
}

/// Schur complement of the input block in the standardized regression Gram.
pub fn schur_input_residual(design: &StandardizedDesign, d_psi: usize) -> Result<SchurDiagnostics> {
    let active = design.active_indices();
    let lifted: Vec<usize> = (0..active.len()).filter(|&k| active[k] < d_psi).collect();
    let input: Vec<usize> = (0..active.len()).filter(|&k| active[k] >= d_psi).collect();
    if lifted.is_empty() || input.is_empty() {
        return Err(Error::degenerate(
            Layer::Regression,
            "schur diagnostics need active lifted and input columns",
        ));
    }
    let g = normalized_gram(&design.zbar);
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| g[(rows[i], cols[j])])
    };
    let a = pick(&lifted, &lifted);
    let c = pick(&lifted, &input);
    let uu = pick(&input, &input);
    let (a_inv, pinv_used) = match a.clone().cholesky() {
        Some(ch) if sym_eigenvalues(&a)[0] > numerical_zero(a.amax(), a.nrows()) => {
            (ch.inverse(), false)
        }
        _ => (pinv(&a, 1e-10), true),
    };
    let s = &uu - c.transpose() * a_inv * &c;
    let alpha_hat = sym_eigenvalues(&a)[0];
    let beta_hat = sym_eigenvalues(&s)[0];
    Ok(SchurDiagnostics {
        lifted_gram: a,
        input_residual: s,
        alpha_hat,
        beta_hat,
        c_reg: sym_eigenvalues(&g)[0],
        pinv_used,
    })
}

/// Writes `name,lhs,rhs,margin,satisfied` rows.
pub fn write_theory_checks(path: &Path, checks: &[TheoryCheck]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["name", "lhs", "rhs", "margin", "satisfied"])
        .map_err(csv_err)?;
    for c in checks {
        w.write_record([
            c.name.as_str().to_string(),
            crate::harness::tables::fmt_float(c.lhs),
            crate::harness::tables::fmt_float(c.rhs),
            crate::harness::tables::fmt_float(c.margin),
            c.satisfied.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standardize::{standardize, Thresholds};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn gaussian(r: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| r.sample(StandardNormal))
    }

    fn standardized(r: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        standardize(&gaussian(r, n, p), &Thresholds::default())
            .unwrap()
            .zbar
    }

    /// Centered design with `Phibar^T Phibar = N I`.
    fn orthonormal_design(r: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        let z = standardized(r, n, p);
        let q = z.qr().q();
        q * (n as f64).sqrt()
    }

    fn random_spd(r: &mut ChaCha8Rng, q: usize) -> DMatrix<f64> {
        let a = gaussian(r, q, q);
        &a * a.transpose() + DMatrix::identity(q, q) * 0.1
    }

    #[test]
    fn identity_holds_on_random_designs() {
        let mut r = rng(1);
        for _ in 0..20 {
            let c = check_identity(&standardized(&mut r, 100, 8));
            assert!(c.satisfied, "{c:?}");
            assert!((c.lhs - c.rhs).abs() <= 1e-9 * c.lhs);
        }
    }

    #[test]
    fn identity_rank_deficient_both_zero() {
        let mut r = rng(2);
        let mut m = gaussian(&mut r, 50, 4);
        let c0 = m.column(1).clone_owned();
        m.set_column(3, &c0);
        let z = standardize(&m, &Thresholds::default()).unwrap().zbar;
        let c = check_identity(&z);
        assert!(c.satisfied);
        assert!(c.lhs <= 1e-10 && c.rhs <= 1e-10, "{c:?}");
    }

    #[test]
    fn identity_on_single_row_fails_upstream() {
        assert!(standardize(&DMatrix::from_element(1, 3, 1.0), &Thresholds::default()).is_err());
    }

    #[test]
    fn fisher_is_tight_for_isotropic_noise() {
        let mut r = rng(3);
        let z = standardized(&mut r, 80, 5);
        let sigma2 = 0.7;
        let c = check_fisher(&z, &(DMatrix::identity(3, 3) * sigma2)).unwrap();
        assert!(c.satisfied);
        let expect = 80.0 * c_reg_eigen(&z) / sigma2;
        assert!((c.lhs - expect).abs() <= 1e-9 * expect);
        assert!((c.lhs - c.rhs).abs() <= 1e-9 * c.rhs);
    }

    #[test]
    fn fisher_with_anisotropic_noise() {
        let mut r = rng(4);
        let z = standardized(&mut r, 60, 4);
        let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]));
        let c = check_fisher(&z, &sigma).unwrap();
        // lambda_min(Sigma^-1) = 1/4, so the Kronecker minimum is lambda_min(G) / 4
        let g_min = sym_eigenvalues(&z.tr_mul(&z))[0];
        assert!((c.lhs - g_min / 4.0).abs() <= 1e-9 * c.lhs);
        assert!(c.satisfied);
    }

    #[test]
    fn fisher_random_spd_sweep() {
        let mut r = rng(5);
        for _ in 0..100 {
            let z = standardized(&mut r, 40, 4);
            let q = r.random_range(1..4);
            let c = check_fisher(&z, &random_spd(&mut r, q)).unwrap();
            assert!(c.satisfied, "{c:?}");
        }
    }

    #[test]
    fn ridge_bound_noiseless_least_squares_is_exact() {
        let mut r = rng(6);
        let z = standardized(&mut r, 50, 4);
        let y = &z * gaussian(&mut r, 4, 2);
        let c = check_ridge_bound(&z, &y, &DMatrix::zeros(50, 2), 0.0).unwrap();
        assert!(c.lhs <= 1e-12 && c.rhs == 0.0 && c.satisfied);
    }

    #[test]
    fn ridge_bound_pure_shrinkage_on_diagonal_design() {
        // orthogonal columns with norms^2 g_i: Khat_i = g_i/(g_i + lambda) K*_i
        let g = [4.0, 9.0, 16.0];
        let mut z = DMatrix::zeros(6, 3);
        for (i, gi) in g.iter().enumerate() {
            let v = (gi / 2.0f64).sqrt();
            z[(2 * i, i)] = v;
            z[(2 * i + 1, i)] = -v;
        }
        let k_star = DMatrix::from_row_slice(3, 1, &[1.0, -2.0, 0.5]);
        let y = &z * &k_star;
        let lambda = 3.0;
        let c = check_ridge_bound(&z, &y, &DMatrix::zeros(6, 1), lambda).unwrap();
        let closed: f64 = (0..3)
            .map(|i| (lambda / (g[i] + lambda) * k_star[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((c.lhs - closed).abs() < 1e-12);
        let n_creg = 4.0;
        assert!((c.rhs - lambda * k_star.norm() / (n_creg + lambda)).abs() < 1e-12);
        assert!(c.satisfied);
    }

    #[test]
    fn ridge_bound_random_sweep_never_violated() {
        let mut r = rng(7);
        for t in 0..100 {
            let z = standardized(&mut r, 40, 5);
            let y = gaussian(&mut r, 40, 3);
            let e = gaussian(&mut r, 40, 3) * 0.3;
            let lambda = if t % 4 == 0 {
                0.0
            } else {
                r.random_range(0.0..20.0)
            };
            let c = check_ridge_bound(&z, &y, &e, lambda).unwrap();
            assert!(c.satisfied, "{c:?}");
        }
    }

    #[test]
    fn ls_risk_orthonormal_design_matches_closed_form() {
        let mut r = rng(8);
        let z = orthonormal_design(&mut r, 100, 5);
        assert!((z.tr_mul(&z) - DMatrix::identity(5, 5) * 100.0).amax() < 1e-9);
        let res = check_ls_risk(&z, 0.5, 3, 5000, 11).unwrap();
        let closed = 0.25 * 3.0 * 5.0 / 100.0;
        assert!((res.exact_risk - closed).abs() < 1e-12);
        assert!((res.check.rhs - closed).abs() < 1e-9);
        assert!((res.check.lhs - closed).abs() <= 5.0 * res.std_err);
        assert!(res.check.satisfied);
    }

    #[test]
    fn ls_risk_zero_noise_and_ill_conditioning() {
        let mut r = rng(9);
        let z = standardized(&mut r, 60, 4);
        let res = check_ls_risk(&z, 0.0, 2, 1000, 1).unwrap();
        assert_eq!(res.check.lhs, 0.0);

        // two nearly collinear columns push C_reg down to about 1e-3
        let mut m = gaussian(&mut r, 200, 3);
        let col = m.column(0) + m.column(2) * 0.045;
        m.set_column(2, &col);
        let z = standardize(&m, &Thresholds::default()).unwrap().zbar;
        let c = c_reg_eigen(&z);
        assert!(c > 1e-4 && c < 1e-2, "c_reg {c}");
        let res = check_ls_risk(&z, 1.0, 2, 2000, 2).unwrap();
        assert!(res.check.satisfied, "{:?}", res.check);
        assert!(check_ls_risk(&z, 1.0, 2, 10, 2).is_err());
    }

    #[test]
    fn population_gap_curve() {
        let p = 6;
        let dist = SphereMixture::new(p, 1.0 / p as f64, 1.0).unwrap();
        let big = (200.0 * p as f64 * (p as f64).ln()).ceil() as usize;
        let curve = check_population_gap(&dist, &[p, big], 200, 3).unwrap();
        assert!(curve.points[0].1 <= 0.5);
        assert!(curve.points[1].1 >= 0.95);
        assert!(curve.check.satisfied);
    }

    #[test]
    fn repeated_point_has_zero_population_isotropy() {
        let samples = vec![vec![0.3, -0.2, 0.9]; 100];
        assert!(population_isotropy(&samples).abs() < 1e-15);
    }

    #[test]
    fn sphere_mixture_second_moment() {
        let d = SphereMixture::new(4, 0.1, 1.0).unwrap();
        let mut r = rng(10);
        let samples: Vec<Vec<f64>> = (0..40_000).map(|_| d.sample(&mut r)).collect();
        let ev = {
            let m = DMatrix::from_fn(samples.len(), 4, |i, j| samples[i][j]);
            sym_eigenvalues(&(m.tr_mul(&m) / samples.len() as f64))
        };
        assert!(ev.iter().all(|&l| (l - 0.1).abs() < 0.01), "{ev:?}");
        assert!(samples
            .iter()
            .all(|s| s.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12));
        assert!(SphereMixture::new(4, 1.0, 1.0).is_err());
    }

    fn schur_for(m: &DMatrix<f64>, d_psi: usize) -> SchurDiagnostics {
        let s = standardize(m, &Thresholds::default()).unwrap();
        schur_input_residual(&s, d_psi).unwrap()
    }

    #[test]
    fn independent_input_keeps_full_conditional_excitation() {
        let mut r = rng(11);
        let m = gaussian(&mut r, 20_000, 4);
        let d = schur_for(&m, 3);
        assert!((d.beta_hat - 1.0).abs() < 0.01, "{}", d.beta_hat);
    }

    #[test]
    fn input_copying_a_feature_has_no_conditional_excitation() {
        let mut r = rng(12);
        let mut m = gaussian(&mut r, 300, 4);
        let c = m.column(1).clone_owned();
        m.set_column(3, &c);
        let d = schur_for(&m, 3);
        assert!(d.beta_hat <= 1e-10, "{}", d.beta_hat);
    }

    #[test]
    fn regression_isotropy_interlaces_below_both_blocks() {
        let mut r = rng(13);
        for _ in 0..50 {
            let mut m = gaussian(&mut r, 80, 5);
            // correlate the input with the lifted block
            let mix = m.column(0) * r.random_range(-1.0..1.0) + m.column(4);
            m.set_column(4, &mix);
            let d = schur_for(&m, 4);
            assert!(d.interlacing_check().satisfied, "{d:?}");
        }
    }
}
