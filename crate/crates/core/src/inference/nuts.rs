//! Multinomial No-U-Turn sampler with a diagonal metric.
//!
//! Trajectories double in a random direction until the generalised no-U-turn
//! criterion fails on the whole tree or on any of its merged subtrees. States
//! are selected with weights `exp(-H)`: progressively biased towards the new
//! subtree at the top level and uniformly within subtrees.

use rand::Rng;
use rand_distr::StandardNormal;

use super::adapt::{DualAveraging, WindowedMetric};
use super::{ChainStats, LogDensity, SamplerConfig};
use crate::error::{Error, Result};
use crate::special::log_add_exp;

const MAX_DELTA_H: f64 = 1000.0;
const INIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone)]
struct State {
    q: Vec<f64>,
    p: Vec<f64>,
    grad: Vec<f64>,
    lp: f64,
}

pub(crate) struct ChainOutput {
    pub values: Vec<f64>,
    pub divergent: Vec<bool>,
    pub tree_depth: Vec<u8>,
    pub accept_stat: Vec<f64>,
    pub stats: ChainStats,
}

struct Hamiltonian<'a, T: LogDensity> {
    target: &'a T,
    inv_metric: Vec<f64>,
}

impl<T: LogDensity> Hamiltonian<'_, T> {
    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p
            .iter()
            .zip(&self.inv_metric)
            .map(|(a, m)| a * a * m)
            .sum::<f64>()
    }

    fn energy(&self, z: &State) -> f64 {
        let h = -z.lp + self.kinetic(&z.p);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn p_sharp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.inv_metric).map(|(a, m)| a * m).collect()
    }

    fn update_potential(&self, z: &mut State) {
        z.lp = match self.target.log_density_grad(&z.q, &mut z.grad) {
            Ok(v) if v.is_finite() && z.grad.iter().all(|g| g.is_finite()) => v,
            _ => f64::NEG_INFINITY,
        };
    }

    fn leapfrog(&self, z: &mut State, eps: f64) {
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += 0.5 * eps * g;
        }
        for ((q, p), m) in z.q.iter_mut().zip(&z.p).zip(&self.inv_metric) {
            *q += eps * m * p;
        }
        self.update_potential(z);
        if z.lp == f64::NEG_INFINITY {
            return;
        }
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += 0.5 * eps * g;
        }
    }

    fn sample_momentum<R: Rng + ?Sized>(&self, z: &mut State, rng: &mut R) {
        for (p, m) in z.p.iter_mut().zip(&self.inv_metric) {
            let n: f64 = rng.sample(StandardNormal);
            *p = n / m.sqrt();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

/// Outputs of a subtree build, mirroring the trajectory endpoints.
struct Subtree {
    propose: State,
    p_sharp_beg: Vec<f64>,
    p_sharp_end: Vec<f64>,
    p_beg: Vec<f64>,
    p_end: Vec<f64>,
    rho: Vec<f64>,
    log_sum_weight: f64,
}

struct Transition<'h, 'a, T: LogDensity, R: Rng + ?Sized> {
    ham: &'h Hamiltonian<'a, T>,
    rng: &'h mut R,
    eps: f64,
    h0: f64,
    n_leapfrog: u64,
    sum_metro_prob: f64,
    divergent: bool,
}

impl<T: LogDensity, R: Rng + ?Sized> Transition<'_, '_, T, R> {
    /// Extends the trajectory from `z` by `2^depth` leapfrog steps in
    /// direction `sign`. Returns `None` on divergence or a U-turn.
    fn build_tree(&mut self, depth: usize, z: &mut State, sign: f64) -> Option<Subtree> {
        if depth == 0 {
            self.ham.leapfrog(z, sign * self.eps);
            self.n_leapfrog += 1;
            let h = self.ham.energy(z);
            if !(h - self.h0 <= MAX_DELTA_H) {
                self.divergent = true;
            }
            let log_w = self.h0 - h;
            self.sum_metro_prob += if log_w > 0.0 { 1.0 } else { log_w.exp() };
            if self.divergent {
                return None;
            }
            let ps = self.ham.p_sharp(&z.p);
            return Some(Subtree {
                propose: z.clone(),
                p_sharp_beg: ps.clone(),
                p_sharp_end: ps,
                p_beg: z.p.clone(),
                p_end: z.p.clone(),
                rho: z.p.clone(),
                log_sum_weight: log_w,
            });
        }
        let init = self.build_tree(depth - 1, z, sign)?;
        let fin = self.build_tree(depth - 1, z, sign)?;

        let log_sum_weight = log_add_exp(init.log_sum_weight, fin.log_sum_weight);
        let accept = (fin.log_sum_weight - log_sum_weight).exp();
        let take_final = self.rng.random::<f64>() < accept;
        let rho = add(&init.rho, &fin.rho);

        let mut persist = no_u_turn(&init.p_sharp_beg, &fin.p_sharp_end, &rho);
        let rho_ext = add(&init.rho, &fin.p_beg);
        persist &= no_u_turn(&init.p_sharp_beg, &fin.p_sharp_beg, &rho_ext);
        let rho_ext = add(&fin.rho, &init.p_end);
        persist &= no_u_turn(&init.p_sharp_end, &fin.p_sharp_end, &rho_ext);
        if !persist {
            return None;
        }
        Some(Subtree {
            propose: if take_final { fin.propose } else { init.propose },
            p_sharp_beg: init.p_sharp_beg,
            p_sharp_end: fin.p_sharp_end,
            p_beg: init.p_beg,
            p_end: fin.p_end,
            rho,
            log_sum_weight,
        })
    }
}

struct TransitionResult {
    state: State,
    accept_stat: f64,
    depth: usize,
    divergent: bool,
    n_leapfrog: u64,
}

fn transition<T: LogDensity, R: Rng + ?Sized>(
    ham: &Hamiltonian<'_, T>,
    current: &State,
    eps: f64,
    max_depth: usize,
    rng: &mut R,
) -> TransitionResult {
    let mut z = current.clone();
    ham.sample_momentum(&mut z, rng);
    let h0 = ham.energy(&z);

    let mut z_fwd = z.clone();
    let mut z_bck = z.clone();
    let mut sample = z.clone();
    let ps0 = ham.p_sharp(&z.p);
    // Outermost momenta of the whole trajectory.
    let (mut p_sharp_fwd_fwd, mut p_sharp_bck_bck) = (ps0.clone(), ps0);
    let (mut p_fwd_fwd, mut p_bck_bck) = (z.p.clone(), z.p.clone());
    let mut rho = z.p.clone();
    let mut log_sum_weight = 0.0;
    let mut depth = 0;

    let mut tr = Transition {
        ham,
        rng,
        eps,
        h0,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        divergent: false,
    };

    while depth < max_depth {
        let forward = tr.rng.random::<f64>() > 0.5;
        // Inner momenta where the old trajectory meets the new subtree.
        let (rho_fwd, rho_bck, subtree);
        let (p_sharp_fwd_bck, p_sharp_bck_fwd, p_fwd_bck, p_bck_fwd);
        if forward {
            let Some(t) = tr.build_tree(depth, &mut z_fwd, 1.0) else {
                break;
            };
            // The old trajectory becomes the backward side; its forward end
            // is the old forward-most state.
            p_sharp_bck_fwd = p_sharp_fwd_fwd.clone();
            p_bck_fwd = p_fwd_fwd.clone();
            rho_bck = rho.clone();
            p_sharp_fwd_bck = t.p_sharp_beg.clone();
            p_sharp_fwd_fwd = t.p_sharp_end.clone();
            p_fwd_bck = t.p_beg.clone();
            p_fwd_fwd = t.p_end.clone();
            rho_fwd = t.rho.clone();
            subtree = t;
        } else {
            let Some(t) = tr.build_tree(depth, &mut z_bck, -1.0) else {
                break;
            };
            p_sharp_fwd_bck = p_sharp_bck_bck.clone();
            p_fwd_bck = p_bck_bck.clone();
            rho_fwd = rho.clone();
            p_sharp_bck_fwd = t.p_sharp_beg.clone();
            p_sharp_bck_bck = t.p_sharp_end.clone();
            p_bck_fwd = t.p_beg.clone();
            p_bck_bck = t.p_end.clone();
            rho_bck = t.rho.clone();
            subtree = t;
        }
        depth += 1;

        if subtree.log_sum_weight > log_sum_weight {
            sample = subtree.propose;
        } else {
            let accept = (subtree.log_sum_weight - log_sum_weight).exp();
            if tr.rng.random::<f64>() < accept {
                sample = subtree.propose;
            }
        }
        log_sum_weight = log_add_exp(log_sum_weight, subtree.log_sum_weight);

        rho = add(&rho_bck, &rho_fwd);
        let mut persist = no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho);
        let rho_ext = add(&rho_bck, &p_fwd_bck);
        persist &= no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_bck, &rho_ext);
        let rho_ext = add(&rho_fwd, &p_bck_fwd);
        persist &= no_u_turn(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &rho_ext);
        if !persist {
            break;
        }
    }
    let n = tr.n_leapfrog.max(1);
    TransitionResult {
        accept_stat: tr.sum_metro_prob / n as f64,
        divergent: tr.divergent,
        n_leapfrog: tr.n_leapfrog,
        depth,
        state: sample,
    }
}

fn initialize<T: LogDensity, R: Rng + ?Sized>(
    ham: &Hamiltonian<'_, T>,
    dim: usize,
    scale: f64,
    rng: &mut R,
) -> Result<State> {
    for _ in 0..INIT_ATTEMPTS {
        let q: Vec<f64> = (0..dim)
            .map(|_| {
                if scale > 0.0 {
                    rng.random_range(-scale..scale)
                } else {
                    0.0
                }
            })
            .collect();
        let mut z = State {
            q,
            p: vec![0.0; dim],
            grad: vec![0.0; dim],
            lp: 0.0,
        };
        ham.update_potential(&mut z);
        if z.lp.is_finite() {
            return Ok(z);
        }
    }
    Err(Error::Initialization(INIT_ATTEMPTS))
}

/// Doubles or halves `eps` until a single leapfrog step crosses an
/// acceptance probability of 0.8.
fn init_step_size<T: LogDensity, R: Rng + ?Sized>(
    ham: &Hamiltonian<'_, T>,
    z0: &State,
    mut eps: f64,
    rng: &mut R,
) -> f64 {
    let threshold = 0.8f64.ln();
    let trial = |eps: f64, rng: &mut R| -> f64 {
        let mut z = z0.clone();
        ham.sample_momentum(&mut z, rng);
        let h0 = ham.energy(&z);
        ham.leapfrog(&mut z, eps);
        let h = ham.energy(&z);
        h0 - h
    };
    let delta = trial(eps, rng);
    let direction = if delta > threshold { 1 } else { -1 };
    for _ in 0..100 {
        let delta = trial(eps, rng);
        if direction == 1 && !(delta > threshold) {
            break;
        }
        if direction == -1 && !(delta < threshold) {
            break;
        }
        eps = if direction == 1 { 2.0 * eps } else { 0.5 * eps };
        if !(1e-12..=1e7).contains(&eps) {
            eps = eps.clamp(1e-12, 1e7);
            break;
        }
    }
    eps
}

pub(crate) fn run_chain<T: LogDensity, R: Rng + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    let dim = target.dim();
    let mut ham = Hamiltonian {
        target,
        inv_metric: vec![1.0; dim],
    };
    let mut z = initialize(&ham, dim, config.init_scale, rng)?;
    let mut eps = init_step_size(&ham, &z, 1.0, rng);
    let mut step = DualAveraging::new(config.target_accept);
    step.restart(eps);
    let mut metric = WindowedMetric::new(dim, config.warmup);

    for _ in 0..config.warmup {
        let tr = transition(&ham, &z, eps, config.max_depth, rng);
        z = tr.state;
        eps = step.learn(tr.accept_stat);
        let mut inv = ham.inv_metric.clone();
        if metric.learn(&mut inv, &z.q) {
            ham.inv_metric = inv;
            eps = init_step_size(&ham, &z, eps, rng);
            step.restart(eps);
        }
    }
    if config.warmup > 0 {
        eps = step.final_step_size();
    }

    let n = config.draws;
    let mut out = ChainOutput {
        values: Vec::with_capacity(n * dim),
        divergent: Vec::with_capacity(n),
        tree_depth: Vec::with_capacity(n),
        accept_stat: Vec::with_capacity(n),
        stats: ChainStats {
            step_size: eps,
            inv_metric: Vec::new(),
            mean_accept: 0.0,
            divergences: 0,
            max_depth_hits: 0,
            leapfrog_steps: 0,
        },
    };
    for _ in 0..n {
        let tr = transition(&ham, &z, eps, config.max_depth, rng);
        z = tr.state;
        out.values.extend_from_slice(&z.q);
        out.divergent.push(tr.divergent);
        out.tree_depth.push(tr.depth as u8);
        out.accept_stat.push(tr.accept_stat);
        out.stats.divergences += tr.divergent as usize;
        out.stats.max_depth_hits += (tr.depth >= config.max_depth) as usize;
        out.stats.leapfrog_steps += tr.n_leapfrog;
    }
    out.stats.mean_accept = out.accept_stat.iter().sum::<f64>() / n as f64;
    out.stats.inv_metric = ham.inv_metric;
    Ok(out)
}
