//! CMA-ES with cumulative step-size adaptation and rank-one plus rank-mu covariance updates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{finish, uniform_point, OptimizerConfig, OptimizerError, Stop, UnitSpace};
use crate::problems::Budgeted;

const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CmaStats {
    pub generations: usize,
    pub restarts: usize,
    /// Smallest covariance eigenvalue observed after any update.
    pub min_eigenvalue: f64,
}

/// Sampling and update state of one CMA-ES instance in the unit cube.
#[derive(Debug, Clone)]
pub struct CmaEs {
    dim: usize,
    lambda: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
    mean: DVector<f64>,
    sigma: f64,
    pc: DVector<f64>,
    ps: DVector<f64>,
    cov: DMatrix<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    generation: usize,
}

impl CmaEs {
    pub fn default_lambda(dim: usize) -> usize {
        4 + (3.0 * (dim as f64).ln()).floor() as usize
    }

    pub fn new(mean: Vec<f64>, sigma: f64, lambda: usize) -> Self {
        let n = mean.len();
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            dim: n,
            lambda,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
            mean: DVector::from_vec(mean),
            sigma,
            pc: DVector::zeros(n),
            ps: DVector::zeros(n),
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            generation: 0,
        }
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// One candidate inside the unit cube: resampled up to 100 times, then projected.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = DVector::zeros(self.dim);
        for _ in 0..MAX_RESAMPLES {
            let z = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            x = &self.mean + self.sigma * (&self.basis * self.scales.component_mul(&z));
            if x.iter().all(|v| (0.0..=1.0).contains(v)) {
                return x.data.into();
            }
        }
        x.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }

    /// Updates the distribution from a full generation. Returns the smallest covariance
    /// eigenvalue after the update.
    pub fn tell(&mut self, points: &[Vec<f64>], fitness: &[f64]) -> f64 {
        let n = self.dim as f64;
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
        let old = self.mean.clone();
        let steps: Vec<DVector<f64>> = order[..self.weights.len()]
            .iter()
            .map(|&i| (DVector::from_column_slice(&points[i]) - &old) / self.sigma)
            .collect();
        let shift = steps.iter().zip(&self.weights).fold(DVector::zeros(self.dim), |acc, (y, w)| acc + *w * y);
        self.mean = &old + self.sigma * &shift;

        // C^{-1/2} y = B D^{-1} B^T y
        let inv_sqrt = &self.basis * DMatrix::from_diagonal(&self.scales.map(|d| 1.0 / d)) * self.basis.transpose();
        self.ps = (1.0 - self.cs) * &self.ps + (self.cs * (2.0 - self.cs) * self.mueff).sqrt() * (&inv_sqrt * &shift);
        self.generation += 1;
        let ps_norm = self.ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - self.cs).powi(2 * self.generation as i32)).sqrt() / self.chi_n
            < 1.4 + 2.0 / (n + 1.0);
        let hsig_f = if hsig { 1.0 } else { 0.0 };
        self.pc = (1.0 - self.cc) * &self.pc + hsig_f * (self.cc * (2.0 - self.cc) * self.mueff).sqrt() * &shift;

        let rank_one = &self.pc * self.pc.transpose();
        let rank_mu = steps.iter().zip(&self.weights).fold(DMatrix::zeros(self.dim, self.dim), |acc, (y, w)| acc + *w * (y * y.transpose()));
        let keep = 1.0 - self.c1 - self.cmu;
        let correction = (1.0 - hsig_f) * self.cc * (2.0 - self.cc);
        self.cov = keep * &self.cov + self.c1 * (rank_one + correction * &self.cov) + self.cmu * rank_mu;
        self.cov = 0.5 * (&self.cov + self.cov.transpose());

        self.sigma *= ((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0)).exp();

        let eig = SymmetricEigen::new(self.cov.clone());
        let min_eig = eig.eigenvalues.min();
        self.scales = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
        self.basis = eig.eigenvectors;
        min_eig
    }

    /// True when the search distribution has collapsed or degenerated.
    pub fn stagnated(&self) -> bool {
        let max_d = self.scales.max();
        let min_d = self.scales.min();
        !(self.sigma * max_d > 1e-16) || !(max_d / min_d < 1e7) || !self.sigma.is_finite()
    }
}

fn cma_loop(space: &mut UnitSpace, cfg: &OptimizerConfig, rng: &mut ChaCha8Rng, stats: &mut CmaStats) -> Result<(), Stop> {
    let d = space.dim();
    let lambda = cfg.population_size.unwrap_or_else(|| CmaEs::default_lambda(d));
    let mut es = CmaEs::new(vec![0.5; d], cfg.sigma0, lambda);
    loop {
        let points: Vec<Vec<f64>> = (0..lambda).map(|_| es.sample(rng)).collect();
        let mut fitness = Vec::with_capacity(lambda);
        for p in &points {
            fitness.push(space.eval(p)?);
        }
        let min_eig = es.tell(&points, &fitness);
        stats.min_eigenvalue = if stats.generations == 0 { min_eig } else { stats.min_eigenvalue.min(min_eig) };
        stats.generations += 1;
        if es.stagnated() {
            stats.restarts += 1;
            es = CmaEs::new(uniform_point(d, rng), cfg.sigma0, lambda);
        }
    }
}

/// CMA-ES with the mean starting at the box center, restarted when the distribution collapses.
pub fn run_cmaes(f: &mut Budgeted, cfg: &OptimizerConfig) -> Result<CmaStats, OptimizerError> {
    cfg.validate()?;
    let mut rng = cfg.rng();
    let mut stats = CmaStats::default();
    let mut space = UnitSpace::new(f);
    finish(cma_loop(&mut space, cfg, &mut rng, &mut stats))?;
    Ok(stats)
}
