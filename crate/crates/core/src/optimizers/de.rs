//! Differential evolution (rand/1/bin), its quasi-oppositional variant and the DE-then-BFGS
//! hybrid.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::bfgs::bfgs_from;
use super::{finish, uniform_point, OptimizerConfig, OptimizerError, Stop, UnitSpace};
use crate::problems::Budgeted;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QodeStats {
    pub init_candidates: usize,
    pub init_survivors: usize,
    pub jumps: usize,
    pub generations: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QndeStats {
    /// Evaluations spent in the DE phase.
    pub de_evaluations: usize,
    /// Best DE point (objective coordinates), which is also where BFGS starts.
    pub de_best: Vec<f64>,
    pub de_best_fitness: f64,
    pub bfgs_start: Vec<f64>,
    pub bfgs_restarts: usize,
}

/// Quasi-opposite of `x` in the box: uniform between the box center and `lb + ub - x`.
pub fn quasi_opposite<R: Rng + ?Sized>(x: &[f64], lb: &[f64], ub: &[f64], rng: &mut R) -> Vec<f64> {
    x.iter()
        .zip(lb.iter().zip(ub))
        .map(|(&x, (&l, &u))| {
            let c = 0.5 * (l + u);
            let opp = l + u - x;
            let (a, b) = if c <= opp { (c, opp) } else { (opp, c) };
            a + (b - a) * rng.random::<f64>()
        })
        .collect()
}

fn reflect(v: f64) -> f64 {
    let mut v = v;
    if v < 0.0 {
        v = -v;
    }
    if v > 1.0 {
        v = 2.0 - v;
    }
    v.clamp(0.0, 1.0)
}

struct Population {
    x: Vec<Vec<f64>>,
    f: Vec<f64>,
}

impl Population {
    fn best(&self) -> usize {
        (0..self.f.len()).min_by(|&a, &b| self.f[a].total_cmp(&self.f[b])).unwrap_or(0)
    }

    /// Keeps the `n` best of `self` and `other` (stable, earlier entries win ties).
    fn merge_best(&mut self, other: Population, n: usize) {
        let mut all: Vec<(Vec<f64>, f64)> =
            self.x.drain(..).zip(self.f.drain(..)).chain(other.x.into_iter().zip(other.f)).collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1));
        all.truncate(n);
        for (x, f) in all {
            self.x.push(x);
            self.f.push(f);
        }
    }
}

fn evaluate_all(space: &mut UnitSpace, points: Vec<Vec<f64>>) -> Result<Population, Stop> {
    let mut f = Vec::with_capacity(points.len());
    for p in &points {
        f.push(space.eval(p)?);
    }
    Ok(Population { x: points, f })
}

fn distinct_others(rng: &mut ChaCha8Rng, np: usize, exclude: usize) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    for k in 0..3 {
        loop {
            let r = rng.random_range(0..np);
            if r != exclude && !picked[..k].contains(&r) {
                picked[k] = r;
                break;
            }
        }
    }
    picked
}

/// One rand/1/bin sweep over the population. A trial replaces its target as soon as it is
/// not worse, so later trials in the same sweep already see the update.
fn de_generation(space: &mut UnitSpace, pop: &mut Population, cfg: &OptimizerConfig, rng: &mut ChaCha8Rng) -> Result<(), Stop> {
    let np = pop.x.len();
    let d = space.dim();
    for i in 0..np {
        let [r1, r2, r3] = distinct_others(rng, np, i);
        let forced = rng.random_range(0..d);
        let trial: Vec<f64> = (0..d)
            .map(|j| {
                if j == forced || rng.random::<f64>() < cfg.de_cr {
                    reflect(pop.x[r1][j] + cfg.de_f * (pop.x[r2][j] - pop.x[r3][j]))
                } else {
                    pop.x[i][j]
                }
            })
            .collect();
        let ft = space.eval(&trial)?;
        if ft <= pop.f[i] {
            pop.x[i] = trial;
            pop.f[i] = ft;
        }
    }
    Ok(())
}

fn check_budget(f: &Budgeted, required: usize) -> Result<(), OptimizerError> {
    if f.remaining() < required {
        return Err(OptimizerError::BudgetTooSmall { budget: f.remaining(), required });
    }
    Ok(())
}

fn de_phase(space: &mut UnitSpace, cfg: &OptimizerConfig, rng: &mut ChaCha8Rng, pop: &mut Option<Population>) -> Result<(), Stop> {
    let np = cfg.de_population(space.dim());
    let init: Vec<Vec<f64>> = (0..np).map(|_| uniform_point(space.dim(), rng)).collect();
    let p = pop.insert(evaluate_all(space, init)?);
    loop {
        de_generation(space, p, cfg, rng)?;
    }
}

/// Classic DE until the budget is spent.
pub fn run_de(f: &mut Budgeted, cfg: &OptimizerConfig) -> Result<(), OptimizerError> {
    cfg.validate()?;
    check_budget(f, cfg.de_population(f.dim()))?;
    let mut rng = cfg.rng();
    let mut space = UnitSpace::new(f);
    finish(de_phase(&mut space, cfg, &mut rng, &mut None))
}

fn quasi_opposite_population(pop: &[Vec<f64>], lb: &[f64], ub: &[f64], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    pop.iter().map(|x| quasi_opposite(x, lb, ub, rng)).collect()
}

fn qode_loop(space: &mut UnitSpace, cfg: &OptimizerConfig, rng: &mut ChaCha8Rng, stats: &mut QodeStats) -> Result<(), Stop> {
    let d = space.dim();
    let np = cfg.de_population(d);
    let (zeros, ones) = (vec![0.0; d], vec![1.0; d]);
    let init: Vec<Vec<f64>> = (0..np).map(|_| uniform_point(d, rng)).collect();
    let opposite = quasi_opposite_population(&init, &zeros, &ones, rng);
    let mut pop = evaluate_all(space, init)?;
    let opp = evaluate_all(space, opposite)?;
    stats.init_candidates = pop.x.len() + opp.x.len();
    pop.merge_best(opp, np);
    stats.init_survivors = pop.x.len();
    loop {
        if rng.random::<f64>() < cfg.jumping_rate {
            // Jumping uses the current per-coordinate population extent as the box.
            let lo: Vec<f64> = (0..d).map(|j| pop.x.iter().map(|x| x[j]).fold(f64::INFINITY, f64::min)).collect();
            let hi: Vec<f64> = (0..d).map(|j| pop.x.iter().map(|x| x[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
            let candidates = quasi_opposite_population(&pop.x, &lo, &hi, rng);
            stats.jumps += 1;
            let evaluated = evaluate_all(space, candidates)?;
            pop.merge_best(evaluated, np);
        } else {
            de_generation(space, &mut pop, cfg, rng)?;
        }
        stats.generations += 1;
    }
}

/// DE with quasi-oppositional initialization and generation jumping.
pub fn run_qode(f: &mut Budgeted, cfg: &OptimizerConfig) -> Result<QodeStats, OptimizerError> {
    cfg.validate()?;
    check_budget(f, 2 * cfg.de_population(f.dim()))?;
    let mut rng = cfg.rng();
    let mut stats = QodeStats::default();
    let mut space = UnitSpace::new(f);
    finish(qode_loop(&mut space, cfg, &mut rng, &mut stats))?;
    Ok(stats)
}

/// DE for `hybrid_split` of the budget, then BFGS with restarts from the DE best.
pub fn run_qnde(f: &mut Budgeted, cfg: &OptimizerConfig) -> Result<QndeStats, OptimizerError> {
    cfg.validate()?;
    let np = cfg.de_population(f.dim());
    let split = ((f.remaining() as f64 * cfg.hybrid_split).floor() as usize).max(np);
    check_budget(f, split)?;
    let mut rng = cfg.rng();
    let mut stats = QndeStats::default();
    let start_used = f.used();
    let mut space = UnitSpace::new(f);
    space.set_limit(start_used + split);
    let mut pop = None;
    finish(de_phase(&mut space, cfg, &mut rng, &mut pop))?;
    let pop = pop.expect("DE phase evaluates its initial population");
    let best = pop.best();
    stats.de_evaluations = split;
    stats.de_best = space.to_real(&pop.x[best]);
    stats.de_best_fitness = pop.f[best];
    space.set_limit(usize::MAX);
    let mut start = pop.x[best].clone();
    stats.bfgs_start = space.to_real(&start);
    let r = (|| loop {
        bfgs_from(&mut space, start.clone())?;
        stats.bfgs_restarts += 1;
        start = uniform_point(space.dim(), &mut rng);
    })();
    finish(r)?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{optimize, OptimizerKind};
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn quasi_opposite_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let q = quasi_opposite(&[0.3], &[0.0], &[1.0], &mut rng)[0];
            assert!((0.5..=0.7).contains(&q));
            assert_eq!(quasi_opposite(&[0.5], &[0.0], &[1.0], &mut rng), vec![0.5]);
            let q = quasi_opposite(&[9.0], &[2.0], &[10.0], &mut rng)[0];
            assert!((3.0..=6.0).contains(&q));
        }
    }

    /// Kolmogorov-Smirnov statistic against U(0.5, 0.7), compared with the asymptotic 1%
    /// critical value 1.628 / sqrt(n).
    #[test]
    fn quasi_opposite_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n).map(|_| quasi_opposite(&[0.3], &[0.0], &[1.0], &mut rng)[0]).collect();
        draws.sort_by(f64::total_cmp);
        let mut d_max: f64 = 0.0;
        for (i, &v) in draws.iter().enumerate() {
            let cdf = ((v - 0.5) / 0.2).clamp(0.0, 1.0);
            d_max = d_max.max((cdf - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - cdf).abs());
        }
        assert!(d_max < 1.628 / (n as f64).sqrt(), "KS statistic {d_max}");
    }

    #[test]
    fn reflection_stays_in_unit_interval() {
        for v in [-3.0, -0.2, 0.0, 0.4, 1.0, 1.3, 2.5, 7.0] {
            assert!((0.0..=1.0).contains(&reflect(v)));
        }
        assert!((reflect(-0.2) - 0.2).abs() < 1e-15);
        assert!((reflect(1.3) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn de_sphere_five_dims() {
        let obj = sphere(5);
        // Small populations occasionally stagnate, so this is a success count.
        let hits = (0..10)
            .filter(|&seed| {
                let cfg = OptimizerConfig::new(OptimizerKind::De, seed).with_population(20);
                optimize(&obj, 5000, &cfg, "sphere").unwrap().best_fitness < 1e-6
            })
            .count();
        assert!(hits >= 8, "{hits}/10");
    }

    #[test]
    fn degenerate_operators_only_copy() {
        use crate::problems::{Bounds, FnObjective};
        use std::sync::Mutex;
        let seen = Mutex::new(Vec::<Vec<f64>>::new());
        let obj = FnObjective::new(Bounds::uniform(3, -5.0, 5.0), |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            x.iter().map(|v| v * v).sum()
        });
        let cfg = OptimizerConfig { de_f: 0.0, de_cr: 0.0, ..OptimizerConfig::new(OptimizerKind::De, 5) };
        let mut f = Budgeted::new(&obj, 400, "t");
        run_de(&mut f, &cfg).unwrap();
        let np = cfg.de_population(3);
        let pts = seen.lock().unwrap();
        // Each trial coordinate is copied from some member, so no new coordinate value ever
        // appears after initialization.
        for p in pts.iter().skip(np) {
            for (j, v) in p.iter().enumerate() {
                assert!(pts[..np].iter().any(|q| q[j] == *v));
            }
        }
        for w in f.trajectory().evaluations().windows(2) {
            assert!(w[1].best_so_far <= w[0].best_so_far);
        }
    }

    #[test]
    fn de_rejects_small_budget() {
        let obj = sphere(2);
        let mut f = Budgeted::new(&obj, 10, "t");
        assert!(matches!(run_de(&mut f, &OptimizerConfig::default()), Err(OptimizerError::BudgetTooSmall { .. })));
        let mut f = Budgeted::new(&obj, 30, "t");
        assert!(matches!(run_qode(&mut f, &OptimizerConfig::default()), Err(OptimizerError::BudgetTooSmall { .. })));
    }

    #[test]
    fn qode_keeps_population_size_survivors() {
        let obj = sphere(6);
        for seed in 0..10 {
            let cfg = OptimizerConfig::new(OptimizerKind::Qode, seed);
            let mut f = Budgeted::new(&obj, 2000, "t");
            let stats = run_qode(&mut f, &cfg).unwrap();
            assert_eq!(stats.init_candidates, 2 * cfg.de_population(6));
            assert_eq!(stats.init_survivors, cfg.de_population(6));
            assert!(stats.jumps > 0 && stats.jumps < stats.generations);
            assert_eq!(f.used(), 2000);
        }
    }

    #[test]
    fn qode_converges_on_sphere() {
        let obj = sphere(5);
        let cfg = OptimizerConfig::new(OptimizerKind::Qode, 9).with_population(20);
        assert!(optimize(&obj, 5000, &cfg, "t").unwrap().best_fitness < 1e-6);
    }

    #[test]
    fn qnde_phase_two_starts_at_phase_one_best() {
        let obj = sphere(4);
        let cfg = OptimizerConfig::new(OptimizerKind::Qnde, 4);
        let mut f = Budgeted::new(&obj, 1000, "t");
        let stats = run_qnde(&mut f, &cfg).unwrap();
        assert_eq!(stats.de_evaluations, 750);
        assert_eq!(stats.bfgs_start, stats.de_best);
        assert_eq!(f.used(), 1000);
        let t = f.trajectory().evaluations();
        assert_eq!(t[749].best_so_far, stats.de_best_fitness);
        // The first BFGS evaluation re-evaluates the start point.
        assert_eq!(t[750].raw, stats.de_best_fitness);
    }

    #[test]
    fn qnde_beats_de_on_sphere() {
        let obj = sphere(10);
        let wins = (0..20)
            .filter(|&seed| {
                let de = optimize(&obj, 2000, &OptimizerConfig::new(OptimizerKind::De, seed), "t").unwrap();
                let qn = optimize(&obj, 2000, &OptimizerConfig::new(OptimizerKind::Qnde, seed), "t").unwrap();
                qn.best_fitness <= de.best_fitness
            })
            .count();
        assert!(wins >= 15, "{wins}/20");
    }
}
