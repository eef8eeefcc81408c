//! Network autocorrelation (spatial lag) model `Y = ρWY + Xβ + ε`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::graph::ContactNetwork;
use crate::linalg::{inverse_spd, ols};
use crate::rng::{stream, Domain};
use crate::stats::normal_two_sided;

/// Largest network accepted by the dense eigen-decomposition in profile ML.
pub const PROFILE_ML_MAX_NODES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    #[default]
    RawAdjacency,
    RowNormalized,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::RawAdjacency => "raw_adjacency",
            WeightMode::RowNormalized => "row_normalized",
        }
    }
}

impl std::str::FromStr for WeightMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw_adjacency" | "raw" => Ok(WeightMode::RawAdjacency),
            "row_normalized" | "normalized" => Ok(WeightMode::RowNormalized),
            other => Err(Error::Config(format!("unknown weight mode `{other}`"))),
        }
    }
}

/// Sparse non-negative weights supported on the network's edges.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    mode: WeightMode,
    rows: Vec<Vec<(u32, f64)>>,
    isolated: Vec<usize>,
}

pub fn build_weight_matrix(network: &ContactNetwork, mode: WeightMode) -> WeightMatrix {
    let n = network.node_count();
    let mut rows = Vec::with_capacity(n);
    let mut isolated = Vec::new();
    for i in 0..n {
        let nb = network.neighbors(i);
        if nb.is_empty() {
            isolated.push(i);
        }
        let w = match mode {
            WeightMode::RawAdjacency => 1.0,
            WeightMode::RowNormalized => 1.0 / nb.len().max(1) as f64,
        };
        rows.push(nb.iter().map(|&j| (j, w)).collect());
    }
    if !isolated.is_empty() {
        log::warn!("{} isolated node(s) have an all-zero weight row", isolated.len());
    }
    WeightMatrix { mode, rows, isolated }
}

impl WeightMatrix {
    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|(k, _)| *k as usize == j)
            .map_or(0.0, |e| e.1)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect()
    }

    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, w)| w * v[j as usize]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, w) in r {
                m[(i, j as usize)] = w;
            }
        }
        m
    }

    /// Spectral radius by power iteration on `W + I` (a non-negative matrix
    /// with the same Perron vector and no periodicity).
    pub fn spectral_radius(&self) -> f64 {
        let n = self.n();
        if n == 0 || self.rows.iter().all(|r| r.is_empty()) {
            return 0.0;
        }
        if self.mode == WeightMode::RowNormalized {
            return 1.0;
        }
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = 0.0;
        for _ in 0..10_000 {
            let mut w = self.mul(&v);
            for (a, b) in w.iter_mut().zip(&v) {
                *a += b;
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            for a in w.iter_mut() {
                *a /= norm;
            }
            let delta = (norm - lambda).abs();
            lambda = norm;
            v = w;
            if delta < 1e-12 * lambda {
                break;
            }
        }
        lambda - 1.0
    }

    /// Real eigenvalues, ascending, with eigenvectors of the symmetric matrix
    /// similar to `W` (`W` itself for raw adjacency, `D^-1/2 A D^-1/2` when
    /// row-normalized).
    pub fn symmetric_eigen(&self) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
        let n = self.n();
        if n > PROFILE_ML_MAX_NODES {
            return Err(Error::Size(format!(
                "dense eigen-decomposition of {n} nodes exceeds {PROFILE_ML_MAX_NODES}; a sparse log-determinant is not available"
            )));
        }
        let mut s = DMatrix::zeros(n, n);
        let deg: Vec<f64> = self.rows.iter().map(|r| r.len() as f64).collect();
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, w) in r {
                let j = j as usize;
                s[(i, j)] = match self.mode {
                    WeightMode::RawAdjacency => w,
                    WeightMode::RowNormalized => 1.0 / (deg[i] * deg[j]).sqrt(),
                };
            }
        }
        Ok(SymmetricEigen::new(s))
    }
}

/// Outcome of [`simulate_autocorrelation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub y: Vec<f64>,
    /// The single noise draw `ε`.
    pub noise: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_delta: f64,
    /// Spectral radius of `ρW`.
    pub spectral_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub noise_sd: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    /// Iterate even when the spectral radius of `ρW` is at least one.
    pub force: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            noise_sd: 1.0,
            seed: 0,
            max_iters: 10_000,
            tol: 1e-12,
            force: false,
        }
    }
}

/// Iterate `Y ← ρWY + Xβ + ε` from `Y = Xβ + ε`, with `ε` drawn once.
pub fn simulate_autocorrelation(
    w: &WeightMatrix,
    rho: f64,
    x: &DMatrix<f64>,
    beta: &[f64],
    opts: &SimulationOptions,
) -> Result<SimulationRun> {
    let n = w.n();
    if x.nrows() != n || x.ncols() != beta.len() {
        return Err(Error::Input("covariate matrix does not match W and β".into()));
    }
    if !(opts.noise_sd >= 0.0) {
        return Err(Error::Config("noise_sd must be non-negative".into()));
    }
    let radius = rho.abs() * w.spectral_radius();
    if radius >= 1.0 && !opts.force {
        return Err(Error::NonConvergence(format!(
            "spectral radius of ρW is {radius:.6}; the iteration need not converge"
        )));
    }
    let normal = Normal::new(0.0, opts.noise_sd).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = stream(opts.seed, Domain::Noise, 0);
    let xb = x * DVector::from_column_slice(beta);
    let noise: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let base: Vec<f64> = (0..n).map(|i| xb[i] + noise[i]).collect();
    let start_norm = base.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let mut y = base.clone();
    let mut iterations = 0;
    let mut max_delta = f64::INFINITY;
    while iterations < opts.max_iters {
        iterations += 1;
        let wy = w.mul(&y);
        let mut delta: f64 = 0.0;
        let mut norm: f64 = 0.0;
        for i in 0..n {
            let next = rho * wy[i] + base[i];
            delta = delta.max((next - y[i]).abs());
            norm = norm.max(next.abs());
            y[i] = next;
        }
        max_delta = delta;
        if !norm.is_finite() || norm > 1e12 * start_norm {
            return Err(Error::NonConvergence(format!(
                "outcome diverged after {iterations} iterations (spectral radius of ρW ≈ {radius:.6})"
            )));
        }
        if delta < opts.tol {
            break;
        }
    }
    Ok(SimulationRun {
        y,
        noise,
        iterations,
        converged: max_delta < opts.tol,
        max_delta,
        spectral_radius: radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutocorrMethod {
    #[default]
    LagCovariateLeastSquares,
    ProfileMl,
}

impl AutocorrMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AutocorrMethod::LagCovariateLeastSquares => "lag_covariate_least_squares",
            AutocorrMethod::ProfileMl => "profile_ml",
        }
    }
}

impl std::str::FromStr for AutocorrMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lag_covariate_least_squares" | "lag_ls" | "ls" => Ok(AutocorrMethod::LagCovariateLeastSquares),
            "profile_ml" | "ml" => Ok(AutocorrMethod::ProfileMl),
            other => Err(Error::Config(format!("unknown autocorrelation method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrTerm {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrFit {
    pub method: AutocorrMethod,
    pub weight_mode: WeightMode,
    pub n: usize,
    pub rho: f64,
    pub rho_std_error: f64,
    pub rho_p_value: f64,
    /// `rho` first, then one row per covariate column.
    pub terms: Vec<AutocorrTerm>,
    /// Host-factor coefficients are adjusted for the lag term and are not
    /// read as effects.
    pub beta_interpretable: bool,
    pub sigma2: f64,
    pub converged: bool,
    pub log_likelihood: Option<f64>,
    /// Open interval searched for `rho` by profile ML.
    pub rho_bounds: Option<[f64; 2]>,
}

impl AutocorrFit {
    pub fn beta(&self) -> Vec<f64> {
        self.terms[1..].iter().map(|t| t.estimate).collect()
    }
}

fn check_binary(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Type("autocorrelation outcome must be coded 0/1".into()));
    }
    Ok(())
}

/// Restrict network, outcome and weights to the design rows.
fn align(network: &ContactNetwork, y: &[f64], design: &Design, mode: WeightMode) -> Result<(WeightMatrix, DVector<f64>)> {
    if y.len() != network.node_count() {
        return Err(Error::Input("outcome length does not match the network".into()));
    }
    if design.rows.iter().any(|&r| r >= network.node_count()) {
        return Err(Error::Input("design row outside the network".into()));
    }
    let sub = network.induced(&design.rows);
    let yy = DVector::from_iterator(design.n(), design.rows.iter().map(|&r| y[r]));
    Ok((build_weight_matrix(&sub, mode), yy))
}

/// Fit on the subgraph induced by the design's complete cases. `y` is indexed
/// by network node.
pub fn fit_autocorrelation(
    network: &ContactNetwork,
    y: &[f64],
    design: &Design,
    mode: WeightMode,
    method: AutocorrMethod,
) -> Result<AutocorrFit> {
    check_binary(y)?;
    let (w, yy) = align(network, y, design, mode)?;
    match method {
        AutocorrMethod::LagCovariateLeastSquares => lag_least_squares(&w, &yy, design),
        AutocorrMethod::ProfileMl => ProfileMl::new(w)?.fit(&yy, design),
    }
}

fn terms(names: &[String], est: &[f64], se: &[f64]) -> Vec<AutocorrTerm> {
    names
        .iter()
        .zip(est.iter().zip(se))
        .map(|(n, (&b, &s))| AutocorrTerm {
            name: n.clone(),
            estimate: b,
            std_error: s,
            p_value: normal_two_sided(b / s),
        })
        .collect()
}

/// OLS of `y` on `[Wy, X]` with HC1 standard errors.
pub fn lag_least_squares(w: &WeightMatrix, y: &DVector<f64>, design: &Design) -> Result<AutocorrFit> {
    let n = y.len();
    let p = design.x.ncols();
    if n <= p + 1 {
        return Err(Error::Undefined("too few observations for the lag regression".into()));
    }
    let wy = w.mul(y.as_slice());
    let z = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { wy[i] } else { design.x[(i, j - 1)] });
    let mut names = vec!["rho".to_string()];
    names.extend(design.names.iter().cloned());
    crate::linalg::rank_guard(&z, &names)?;
    let fit = ols(y, &z)?;
    let cov = fit.hc1_covariance(&z);
    let est: Vec<f64> = fit.beta.iter().copied().collect();
    let se: Vec<f64> = (0..=p).map(|j| cov[(j, j)].sqrt()).collect();
    let t = terms(&names, &est, &se);
    Ok(AutocorrFit {
        method: AutocorrMethod::LagCovariateLeastSquares,
        weight_mode: w.mode(),
        n,
        rho: est[0],
        rho_std_error: se[0],
        rho_p_value: t[0].p_value,
        terms: t,
        beta_interpretable: false,
        sigma2: fit.residuals.norm_squared() / (n - p - 1) as f64,
        converged: true,
        log_likelihood: None,
        rho_bounds: None,
    })
}

/// `β(ρ)`: OLS of `y − ρWy` on `X`.
pub fn fixed_rho_beta(w: &WeightMatrix, y: &DVector<f64>, x: &DMatrix<f64>, rho: f64) -> Result<DVector<f64>> {
    let wy = DVector::from_vec(w.mul(y.as_slice()));
    Ok(ols(&(y - wy * rho), x)?.beta)
}

/// `log det(I − ρW)` from the eigenvalues of `W`.
pub fn log_det(eigenvalues: &[f64], rho: f64) -> f64 {
    eigenvalues.iter().map(|&l| (1.0 - rho * l).ln()).sum()
}

/// Maximum-likelihood spatial-lag estimation with the eigen-decomposition of
/// `W` computed once and reused across outcomes.
#[derive(Debug, Clone)]
pub struct ProfileMl {
    w: WeightMatrix,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
    /// `D^{1/2}` for row-normalized weights (1 for isolated nodes).
    sqrt_deg: Vec<f64>,
}

const GOLDEN_TOL: f64 = 1e-10;
/// Fraction of the admissible interval kept clear of each singular endpoint.
const BOUND_MARGIN: f64 = 1e-6;

impl ProfileMl {
    pub fn new(w: WeightMatrix) -> Result<Self> {
        let eigen = w.symmetric_eigen()?;
        let sqrt_deg = (0..w.n()).map(|i| (w.row(i).len().max(1) as f64).sqrt()).collect();
        Ok(ProfileMl { w, eigen, sqrt_deg })
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.w
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.eigen.eigenvalues.as_slice()
    }

    /// Open interval `(1/λ_min, 1/λ_max)` on which `I − ρW` is non-singular.
    pub fn rho_bounds(&self) -> Result<(f64, f64)> {
        let ev = self.eigenvalues();
        let lmin = ev.iter().copied().fold(f64::INFINITY, f64::min);
        let lmax = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lmin < 0.0 && lmax > 0.0) {
            return Err(Error::Undefined("weight matrix has no edges; ρ is not identified".into()));
        }
        Ok((1.0 / lmin, 1.0 / lmax))
    }

    /// Concentrated log-likelihood at `rho`, given residuals of `y` and `Wy` on `X`.
    fn concentrated(&self, e0: &DVector<f64>, el: &DVector<f64>, rho: f64) -> f64 {
        let n = e0.len() as f64;
        let s2 = (e0 - el * rho).norm_squared() / n;
        -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + 1.0) - 0.5 * n * s2.ln() + log_det(self.eigenvalues(), rho)
    }

    pub fn profile_log_likelihood(&self, y: &DVector<f64>, x: &DMatrix<f64>, rho: f64) -> Result<f64> {
        let (e0, el) = self.residual_pair(y, x)?;
        Ok(self.concentrated(&e0, &el, rho))
    }

    fn residual_pair(&self, y: &DVector<f64>, x: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let wy = DVector::from_vec(self.w.mul(y.as_slice()));
        Ok((ols(y, x)?.residuals, ols(&wy, x)?.residuals))
    }

    /// `G = W(I − ρW)⁻¹` as a dense matrix.
    fn g_matrix(&self, rho: f64) -> DMatrix<f64> {
        let q = &self.eigen.eigenvectors;
        let g: Vec<f64> = self.eigenvalues().iter().map(|&l| l / (1.0 - rho * l)).collect();
        let mut left = q.clone();
        for (j, gj) in g.iter().enumerate() {
            left.column_mut(j).scale_mut(*gj);
        }
        let mut m = left * q.transpose();
        if self.w.mode() == WeightMode::RowNormalized {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    m[(i, j)] *= self.sqrt_deg[j] / self.sqrt_deg[i];
                }
            }
        }
        m
    }

    pub fn fit(&self, y: &DVector<f64>, design: &Design) -> Result<AutocorrFit> {
        let x = &design.x;
        let n = y.len();
        let p = x.ncols();
        if n != self.w.n() || x.nrows() != n {
            return Err(Error::Input("outcome, design and weights disagree in size".into()));
        }
        crate::linalg::rank_guard(x, &design.names)?;
        let (lo, hi) = self.rho_bounds()?;
        let span = hi - lo;
        let (mut a, mut b) = (lo + BOUND_MARGIN * span, hi - BOUND_MARGIN * span);
        let (e0, el) = self.residual_pair(y, x)?;
        let f = |r: f64| self.concentrated(&e0, &el, r);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        let mut iterations = 0;
        while (b - a) > GOLDEN_TOL * (1.0 + a.abs() + b.abs()) && iterations < 500 {
            iterations += 1;
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = f(d);
            }
        }
        let rho = 0.5 * (a + b);
        let converged = (b - a) <= GOLDEN_TOL * (1.0 + a.abs() + b.abs());
        let wy = DVector::from_vec(self.w.mul(y.as_slice()));
        let beta = ols(&(y - &wy * rho), x)?.beta;
        let resid = y - &wy * rho - x * &beta;
        let sigma2 = resid.norm_squared() / n as f64;

        // Information matrix for (β, ρ, σ²).
        let g = self.g_matrix(rho);
        let gxb = &g * (x * &beta);
        let tr_g = g.trace();
        let tr_gg = (&g * &g).trace();
        let tr_gtg = g.norm_squared();
        let k = p + 2;
        let mut info = DMatrix::zeros(k, k);
        let xtx = x.transpose() * x;
        for i in 0..p {
            for j in 0..p {
                info[(i, j)] = xtx[(i, j)] / sigma2;
            }
        }
        let xgxb = x.transpose() * &gxb;
        for i in 0..p {
            info[(i, p)] = xgxb[i] / sigma2;
            info[(p, i)] = xgxb[i] / sigma2;
        }
        info[(p, p)] = tr_gg + tr_gtg + gxb.norm_squared() / sigma2;
        info[(p, p + 1)] = tr_g / sigma2;
        info[(p + 1, p)] = tr_g / sigma2;
        info[(p + 1, p + 1)] = n as f64 / (2.0 * sigma2 * sigma2);
        let cov = inverse_spd(&info)
            .ok_or_else(|| Error::Numeric("information matrix is not positive definite".into()))?;

        let mut names = vec!["rho".to_string()];
        names.extend(design.names.iter().cloned());
        let mut est = vec![rho];
        est.extend(beta.iter().copied());
        let mut se = vec![cov[(p, p)].sqrt()];
        se.extend((0..p).map(|j| cov[(j, j)].sqrt()));
        let t = terms(&names, &est, &se);
        Ok(AutocorrFit {
            method: AutocorrMethod::ProfileMl,
            weight_mode: self.w.mode(),
            n,
            rho,
            rho_std_error: se[0],
            rho_p_value: t[0].p_value,
            terms: t,
            beta_interpretable: false,
            sigma2,
            converged,
            log_likelihood: Some(f(rho)),
            rho_bounds: Some([lo, hi]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Layer;

    fn path3() -> ContactNetwork {
        ContactNetwork::from_edges(3, Layer::Overall, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn row_normalized_path() {
        let w = build_weight_matrix(&path3(), WeightMode::RowNormalized);
        assert_eq!((w.get(1, 0), w.get(1, 1), w.get(1, 2)), (0.5, 0.0, 0.5));
        assert_eq!(w.row_sums(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn raw_triangle_symmetric() {
        let net = ContactNetwork::from_edges(3, Layer::Overall, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let w = build_weight_matrix(&net, WeightMode::RawAdjacency).to_dense();
        assert_eq!(w, w.transpose());
        assert_eq!(w.diagonal().sum(), 0.0);
        assert_eq!(w.sum(), 6.0);
    }

    #[test]
    fn two_node_fixed_point() {
        let net = ContactNetwork::from_edges(2, Layer::Overall, [(0, 1)]).unwrap();
        let w = build_weight_matrix(&net, WeightMode::RawAdjacency);
        let x = DMatrix::from_element(2, 1, 1.0);
        let run = simulate_autocorrelation(&w, 0.5, &x, &[1.0], &SimulationOptions { noise_sd: 0.0, ..Default::default() }).unwrap();
        assert!((run.y[0] - 2.0).abs() < 1e-10 && (run.y[1] - 2.0).abs() < 1e-10);
        assert!((run.spectral_radius - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rho_zero_single_iteration() {
        let w = build_weight_matrix(&path3(), WeightMode::RawAdjacency);
        let x = DMatrix::from_element(3, 1, 1.0);
        let run = simulate_autocorrelation(&w, 0.0, &x, &[2.0], &SimulationOptions { noise_sd: 1.0, seed: 4, ..Default::default() }).unwrap();
        assert_eq!(run.iterations, 1);
        let empty = build_weight_matrix(&ContactNetwork::empty(3, Layer::Overall), WeightMode::RawAdjacency);
        let run = simulate_autocorrelation(&empty, 0.3, &x, &[2.0], &SimulationOptions::default()).unwrap();
        assert_eq!(run.iterations, 1);
    }

    #[test]
    fn explosive_rho_rejected() {
        let w = build_weight_matrix(&path3(), WeightMode::RawAdjacency);
        let x = DMatrix::from_element(3, 1, 1.0);
        assert!(matches!(
            simulate_autocorrelation(&w, 1.0, &x, &[1.0], &SimulationOptions::default()),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn log_det_matches_dense_determinant() {
        let net = ContactNetwork::from_edges(5, Layer::Overall, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        for mode in [WeightMode::RawAdjacency, WeightMode::RowNormalized] {
            let w = build_weight_matrix(&net, mode);
            let ml = ProfileMl::new(w.clone()).unwrap();
            let rho = 0.2;
            let dense = DMatrix::identity(5, 5) - w.to_dense() * rho;
            assert!((log_det(ml.eigenvalues(), rho) - dense.determinant().ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn profile_ml_matches_grid_search() {
        let edges: Vec<(usize, usize)> = (0..12).map(|i| (i, (i + 1) % 12)).chain([(0, 6), (3, 9), (2, 7)]).collect();
        let net = ContactNetwork::from_edges(12, Layer::Overall, edges).unwrap();
        let w = build_weight_matrix(&net, WeightMode::RowNormalized);
        let x = DMatrix::from_fn(12, 2, |i, j| if j == 0 { 1.0 } else { (i % 4) as f64 });
        let run = simulate_autocorrelation(&w, 0.4, &x, &[1.0, -0.5], &SimulationOptions { noise_sd: 0.7, seed: 3, ..Default::default() }).unwrap();
        let y = DVector::from_vec(run.y);
        let design = Design { names: vec!["(intercept)".into(), "x".into()], x: x.clone(), rows: (0..12).collect() };
        let ml = ProfileMl::new(w).unwrap();
        let fit = ml.fit(&y, &design).unwrap();
        let (lo, hi) = ml.rho_bounds().unwrap();
        let steps = 20_000;
        let step = (hi - lo) / steps as f64;
        let (best_rho, best_ll) = (1..steps)
            .map(|k| lo + k as f64 * step)
            .map(|r| (r, ml.profile_log_likelihood(&y, &x, r).unwrap()))
            .fold((f64::NAN, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        assert!((fit.rho - best_rho).abs() <= step);
        assert!(ml.profile_log_likelihood(&y, &x, fit.rho).unwrap() >= best_ll - 1e-9);
    }

    #[test]
    fn non_binary_outcome_rejected() {
        let net = path3();
        let d = Design { names: vec!["(intercept)".into()], x: DMatrix::from_element(3, 1, 1.0), rows: vec![0, 1, 2] };
        assert!(matches!(
            fit_autocorrelation(&net, &[0.0, 0.5, 1.0], &d, WeightMode::RawAdjacency, AutocorrMethod::LagCovariateLeastSquares),
            Err(Error::Type(_))
        ));
    }
}
