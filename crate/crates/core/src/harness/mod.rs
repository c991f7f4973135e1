//! Experiment orchestration: configuration, task runners and reports.

pub mod config;
pub mod report;

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, RngCore};

pub use config::{parse_config, parse_config_with, ConfigSpec, ExperimentConfig, Task, Tolerances};
pub use report::{emit_csv, emit_json, Assertion, RunReport, TaskResult, TaskStatus};

use crate::chain::ChainPartition;
use crate::concentration::{laplace_bound_check, tail_report, tci_dual_lower};
use crate::curvature::{beta_critical, contraction_coefficient, tci_curvature_bound, ContractionOptions};
use crate::dobrushin::{eta_diamond, eta_empirical, eta_from_maxdiv, tci_markov_bound, verify_tci_empirical, TciOptions};
use crate::ensembles::{
    best_shell_energy, ensemble_equivalence, entropy_w1_lower, microcanonical_equivalence_bound,
};
use crate::error::{Error, Result};
use crate::linalg::random::{random_density, random_hermitian, stream_rng};
use crate::linalg::{c64, CMatrix, DensityState, HermitianOp, RegisterShape};
use crate::recovery::{chain_recovery_bounds, recoverability_gap, recovery_distance};
use crate::states::{energy, entropy_continuity_gap, gibbs, match_energy, microcanonical, GibbsState};
use crate::w1::{lip_const, lip_const_with, w1_distance, LipOptions, W1Options};

/// Demo configurations shipped with the crate.
pub const DEMOS: [(&str, &str); 3] = [
    ("product-qubits", include_str!("../../configs/product-qubits.json")),
    ("ising-chain-3", include_str!("../../configs/ising-chain-3.json")),
    ("ising-ring-3", include_str!("../../configs/ising-ring-3.json")),
];

pub fn demo_config(name: &str) -> Option<&'static str> {
    DEMOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Command-line overrides and execution switches.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tol_quadrature: Option<f64>,
    pub parallel_trials: bool,
}

impl ExperimentConfig {
    pub fn apply(&mut self, opts: &RunOptions) {
        if let Some(s) = opts.seed {
            self.spec.seed = s;
        }
        if let Some(t) = opts.trials {
            self.spec.trials = t;
        }
        if let Some(q) = opts.tol_quadrature {
            self.spec.tolerances.quadrature = q;
        }
    }
}

struct Ctx<'a> {
    omega: GibbsState,
    tol: &'a Tolerances,
    trials: usize,
    seed: u64,
    parallel: bool,
    constants: OnceCell<BTreeMap<String, f64>>,
}

#[derive(Default)]
struct Output {
    values: BTreeMap<String, f64>,
    assertions: Vec<Assertion>,
}

impl Output {
    fn value(&mut self, k: impl Into<String>, v: f64) {
        self.values.insert(k.into(), v);
    }

    fn check(&mut self, name: &str, lhs: f64, rhs: f64, slack: f64) {
        self.assertions.push(Assertion::new(name, lhs, rhs, slack));
    }

    fn worst(&mut self, name: &str, pairs: Vec<(f64, f64)>, slack: f64) {
        if let Some(a) = Assertion::worst(name, pairs, slack) {
            self.assertions.push(a);
        }
    }
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.omega.state.shape().num_sites()
    }

    fn shape(&self) -> &RegisterShape {
        self.omega.state.shape()
    }

    fn w1_opts(&self) -> W1Options {
        W1Options { gap_tol: self.tol.w1_gap, ..W1Options::default() }
    }

    fn tci_opts(&self) -> TciOptions {
        TciOptions { slack: self.tol.slack, parallel: self.parallel, w1: self.w1_opts(), ..TciOptions::default() }
    }

    fn contraction_opts(&self) -> ContractionOptions {
        ContractionOptions { tol: self.tol.quadrature, seed: self.seed, parallel: self.parallel, ..ContractionOptions::default() }
    }

    fn random_state(&self, stream: u64) -> DensityState {
        let mut rng = stream_rng(self.seed, stream);
        random_density(self.shape(), self.shape().dim(), &mut rng)
    }

    /// Sound TCI constants `C(ω)` whose hypotheses hold here.
    fn constants(&self) -> &BTreeMap<String, f64> {
        self.constants.get_or_init(|| {
            let mut out = BTreeMap::new();
            let h = &self.omega.hamiltonian;
            if h.locality() <= 1 {
                out.insert("product".into(), self.n() as f64 / 2.0);
            }
            if self.omega.commuting && self.n() > 1 {
                let p = ChainPartition::sites(self.shape());
                if let Ok(e) = eta_diamond(&self.omega.state, &p, self.tol.quadrature) {
                    if let Ok(c) = tci_markov_bound(&p, e.eta) {
                        out.insert("markov".into(), c);
                    }
                }
                let opts = ContractionOptions { restarts: 1, sweeps: 1, ..self.contraction_opts() };
                if let Ok(k) = contraction_coefficient(&self.omega, &opts) {
                    if let Ok(c) = tci_curvature_bound(self.n(), h.degree(), 1.0 - k.upper) {
                        out.insert("curvature".into(), c);
                    }
                }
            }
            out
        })
    }

    fn best_constant(&self) -> Result<(String, f64)> {
        self.constants()
            .iter()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, v)| (k.clone(), *v))
            .ok_or_else(|| Error::ConditionNotMet("no certified TCI constant applies to this state".into()))
    }
}

fn task_w1(ctx: &Ctx, out: &mut Output) -> Result<()> {
    let n = ctx.n() as f64;
    let (mut bracket, mut lower, mut upper, mut gaps) = (vec![], vec![], vec![], vec![]);
    for t in 0..ctx.trials {
        let rho = ctx.random_state(2 * t as u64);
        let sigma = ctx.random_state(2 * t as u64 + 1);
        let c = w1_distance(&rho, &sigma, &ctx.w1_opts())?;
        let tn = (rho.op() - sigma.op()).trace_norm();
        bracket.push((c.value_lower, c.value_upper));
        lower.push((0.5 * tn, c.value_upper));
        upper.push((c.value_lower, n * tn));
        gaps.push(c.gap);
    }
    out.value("max_gap", gaps.iter().copied().fold(0.0, f64::max));
    out.worst("w1.lower_le_upper", bracket, 1e-8);
    out.worst("w1.half_trace_norm_le_w1", lower, ctx.tol.slack);
    out.worst("w1.w1_le_n_trace_norm", upper, ctx.tol.slack);
    Ok(())
}

fn task_lipschitz(ctx: &Ctx, out: &mut Output) -> Result<()> {
    let h = ctx.omega.hamiltonian.matrix();
    let b = lip_const_with(h, &LipOptions::default());
    out.value("hamiltonian_lower", b.lower);
    out.value("hamiltonian_upper", b.upper);
    out.check("lipschitz.hamiltonian_bracket", b.lower, b.upper, 1e-12);
    let mut rng = stream_rng(ctx.seed, 0);
    let (mut brackets, mut halves) = (vec![], vec![]);
    for _ in 0..ctx.trials.min(5) {
        let x = random_hermitian(ctx.shape(), &mut rng);
        let coarse = lip_const(&x);
        brackets.push((coarse.lower, coarse.upper));
        halves.push((coarse.upper, 2.0 * coarse.lower));
    }
    out.worst("lipschitz.random_bracket", brackets, 1e-12);
    out.worst("lipschitz.upper_le_twice_lower", halves, 1e-12);
    Ok(())
}

fn task_recovery(ctx: &Ctx, out: &mut Output) -> Result<()> {
    let sites = ctx.shape().sites().to_vec();
    if sites.len() < 2 {
        return Err(Error::ConditionNotMet("recovery needs at least two sites".into()));
    }
    let (a, b) = sites.split_at(sites.len() - 1);
    let w = &ctx.omega.state;
    let tol = ctx.tol.quadrature;
    let fixed = recovery_distance(w, w, a, b, tol)?;
    out.value("fixed_point_error", fixed);
    out.check("recovery.fixed_point", fixed, 0.0, 10.0 * tol);
    let p = ChainPartition::sites(ctx.shape());
    let (mut pinsker, mut chain1, mut chain2) = (vec![], vec![], vec![]);
    for t in 0..ctx.trials {
        let rho = ctx.random_state(t as u64);
        let (drop, rhs) = recoverability_gap(&rho, w, a, b, tol)?;
        pinsker.push((rhs, drop));
        let c = chain_recovery_bounds(&rho, w, &p, tol)?;
        chain1.push((c.bound1, c.rel_entropy));
        chain2.push((c.bound2, c.bound2_rhs));
    }
    out.worst("recovery.pinsker", pinsker, 10.0 * tol);
    out.worst("recovery.chain_entropy", chain1, 10.0 * tol);
    out.worst("recovery.chain_exponential", chain2, 10.0 * tol);
    Ok(())
}

fn task_dobrushin(ctx: &Ctx, out: &mut Output) -> Result<()> {
    if !ctx.omega.commuting {
        return Err(Error::NonCommuting);
    }
    let w = &ctx.omega.state;
    let p = ChainPartition::sites(ctx.shape());
    let tol = ctx.tol.quadrature;
    let eta = eta_diamond(w, &p, tol)?;
    out.value("eta_diamond", eta.eta);
    out.check("dobrushin.eta_lt_one", eta.eta, 1.0, 0.0);
    let lower = eta_empirical(w, &p, ctx.trials, ctx.seed, tol)?;
    out.value("eta_empirical", lower.eta);
    out.check("dobrushin.empirical_le_diamond", lower.eta, eta.eta, 1e-6);
    if let Ok(m) = eta_from_maxdiv(w, &p) {
        out.value("eta_maxdiv", m.eta);
        out.value("maxdiv_a", m.a.unwrap_or(f64::NAN));
        out.check("dobrushin.empirical_le_maxdiv", lower.eta, m.eta, 1e-6);
    }
    let c = tci_markov_bound(&p, eta.eta)?;
    out.value("markov_constant", c);
    let r = verify_tci_empirical(w, c, ctx.trials, ctx.seed, &ctx.tci_opts())?;
    out.value("max_ratio_upper", r.max_ratio_upper);
    out.value("max_ratio_lower", r.max_ratio_lower);
    out.check("dobrushin.tci_markov", r.max_ratio_upper, c, r.slack);
    Ok(())
}

fn task_curvature(ctx: &Ctx, out: &mut Output) -> Result<()> {
    let h = &ctx.omega.hamiltonian;
    if let Ok(bc) = beta_critical(h.degree(), ctx.shape().local_dim(), h.max_term_norm()) {
        out.value("beta_critical", bc.beta_c);
    }
    let k = contraction_coefficient(&ctx.omega, &ctx.contraction_opts())?;
    out.value("contraction_lower", k.lower);
    out.value("contraction_upper", k.upper);
    out.check("curvature.sampled_le_upper", k.lower, k.upper, 1e-6);
    if ctx.omega.beta == 0.0 {
        let n = ctx.n() as f64;
        out.check("curvature.infinite_temperature", (k.upper - (1.0 - 1.0 / n)).abs(), 0.0, 1e-6);
    }
    let kappa = 1.0 - k.upper;
    out.value("kappa", kappa);
    let c = tci_curvature_bound(ctx.n(), h.degree(), kappa)?;
    out.value("curvature_constant", c);
    let r = verify_tci_empirical(&ctx.omega.state, c, ctx.trials, ctx.seed, &ctx.tci_opts())?;
    out.value("max_ratio_upper", r.max_ratio_upper);
    out.check("curvature.tci", r.max_ratio_upper, c, r.slack);
    Ok(())
}

fn task_tci(ctx: &Ctx, out: &mut Output) -> Result<()> {
    let dual = tci_dual_lower(&ctx.omega.state, 20, ctx.seed)?;
    out.value("dual_lower", dual.value);
    for (k, v) in ctx.constants() {
        out.value(format!("bound_{k}"), *v);
        out.check(&format!("tci.dual_le_{k}"), dual.value, *v, 1e-3);
    }
    if let Ok((name, c)) = ctx.best_constant() {
        let r = verify_tci_empirical(&ctx.omega.state, c, ctx.trials, ctx.seed, &ctx.tci_opts())?;
        out.value("max_ratio_upper", r.max_ratio_upper);
        out.value("max_ratio_lower", r.max_ratio_lower);
        out.check(&format!("tci.empirical_{name}"), r.max_ratio_upper, c, r.slack);
    }
    Ok(())
}

/// Diagonal `diag(1, …, −1)`-type observable scaled to unit norm on one site.
fn local_z(site: usize, d: usize) -> Result<HermitianOp> {
    let m = CMatrix::from_fn(d, d, |i, j| if i == j { c64(1.0 - 2.0 * i as f64 / (d - 1) as f64, 0.0) } else { c64(0.0, 0.0) });
    HermitianOp::new(RegisterShape::new(vec![site], d)?, m)
}

/// Random diagonal observable in the eigenbasis of `H`, so it commutes with ω.
fn random_commuting(omega: &GibbsState, seed: u64) -> Result<HermitianOp> {
    let e = omega.hamiltonian.matrix().eig();
    let mut rng = stream_rng(seed, 0);
    let mut v = e.vectors.clone();
    for mut col in v.column_iter_mut() {
        col *= c64(rng.random_range(-1.0..1.0), 0.0);
    }
    HermitianOp::new(omega.state.shape().clone(), v * e.vectors.adjoint())
}

fn task_concentration(ctx: &Ctx, out: &mut Output) -> Result<()> {
    let (name, c) = ctx.best_constant()?;
    out.value(format!("constant_{name}"), c);
    let shape = ctx.shape();
    let d = shape.local_dim();
    let w = &ctx.omega.state;
    let mut observables: Vec<(String, HermitianOp)> = Vec::new();
    let mut total = HermitianOp::zeros(shape.clone());
    for &v in shape.sites() {
        let z = local_z(v, d)?.extend_to(shape)?;
        total = total.try_add(&z)?;
        observables.push((format!("z{v}"), z));
    }
    observables.push(("sum_z".into(), total));
    observables.push(("random_commuting".into(), random_commuting(&ctx.omega, ctx.seed)?));
    for (label, o) in &observables {
        let spread = o.eig().max() - o.eig().min();
        let grid: Vec<f64> = (0..20).map(|k| spread * k as f64 / 19.0).collect();
        let rep = tail_report(o, w, c, &grid)?;
        out.value(format!("lipschitz_{label}"), rep.lipschitz_used);
        let pairs = rep.exact_tail.iter().copied().zip(rep.gauss_bound.iter().copied()).collect();
        out.worst(&format!("concentration.tail_{label}"), pairs, 1e-12);
        if rep.commuting {
            let mean = w.op().inner(o);
            let centered = o.try_sub(&HermitianOp::identity(shape.clone()).scale(mean))?;
            let mut laplace = vec![];
            for &t in &[0.1, 0.5, 1.0, 2.0] {
                laplace.push(laplace_bound_check(&centered.scale(t), w, c)?);
            }
            out.worst(&format!("concentration.laplace_{label}"), laplace, 1e-12);
        }
    }
    Ok(())
}

fn task_ensembles(ctx: &Ctx, out: &mut Output) -> Result<()> {
    let (name, c_total) = ctx.best_constant()?;
    let n = ctx.n() as f64;
    let c = c_total / n;
    out.value(format!("constant_per_site_{name}"), c);
    let g = &ctx.omega;
    let mut shells = vec![];
    for &delta in &[0.25, 0.5, 1.0, 2.0, 4.0] {
        let e = best_shell_energy(g, delta)?;
        let m = microcanonical_equivalence_bound(g, e, delta, c)?;
        out.value(format!("shell_exact_{delta}"), m.exact);
        out.value(format!("shell_bound_{delta}"), m.bound);
        shells.push((m.exact, m.bound));
    }
    out.worst("ensembles.shell_entropy", shells, 1e-9);
    let h = g.hamiltonian.matrix();
    let e = best_shell_energy(g, 0.5)?;
    let micro = microcanonical(&g.hamiltonian, e, 0.5)?;
    let (rho, _) = match_energy(&micro, h, energy(&g.state, h))?;
    let b = ensemble_equivalence(&rho, g, c)?;
    let w = w1_distance(&rho, &g.state, &ctx.w1_opts())?;
    out.value("entropy_gap", b.entropy_gap);
    out.value("w1_upper", w.value_upper);
    out.check("ensembles.w1_per_site", w.value_upper / n, b.w1_per_site_bound, ctx.tol.slack + w.gap / n);
    out.check("ensembles.marginal", b.marginal_distance, b.marginal_bound, ctx.tol.slack);
    out.check("ensembles.marginal_chain", b.marginal_distance, 2.0 / n * w.value_upper, ctx.tol.slack);
    out.check("ensembles.entropy_lower", entropy_w1_lower(&rho, &g.state), w.value_upper, ctx.tol.slack);
    let mut continuity = vec![];
    for t in 0..ctx.trials {
        let r = ctx.random_state(2 * t as u64);
        let s = ctx.random_state(2 * t as u64 + 1);
        let cert = w1_distance(&r, &s, &ctx.w1_opts())?;
        continuity.push(entropy_continuity_gap(&r, &s, cert.value_upper)?);
    }
    out.worst("ensembles.entropy_continuity", continuity, ctx.tol.slack);
    Ok(())
}

fn run_task(task: Task, ctx: &Ctx) -> Result<Output> {
    let mut out = Output::default();
    match task {
        Task::W1 => task_w1(ctx, &mut out),
        Task::Lipschitz => task_lipschitz(ctx, &mut out),
        Task::Recovery => task_recovery(ctx, &mut out),
        Task::Dobrushin => task_dobrushin(ctx, &mut out),
        Task::Curvature => task_curvature(ctx, &mut out),
        Task::Tci => task_tci(ctx, &mut out),
        Task::Concentration => task_concentration(ctx, &mut out),
        Task::Ensembles => task_ensembles(ctx, &mut out),
    }?;
    Ok(out)
}

fn task_index(task: Task) -> u64 {
    task as u64
}

/// Runs every task at every inverse temperature. Task failures are
/// recorded in the report and do not stop the run.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> RunReport {
    let mut cfg = cfg.clone();
    cfg.apply(opts);
    let spec = &cfg.spec;
    let mut results = Vec::new();
    for (bi, &beta) in cfg.betas.iter().enumerate() {
        let omega = match gibbs(&cfg.hamiltonian, beta) {
            Ok(g) => g,
            Err(e) => {
                for &task in &spec.tasks {
                    results.push(TaskResult {
                        task,
                        beta,
                        status: TaskStatus::Error,
                        message: Some(e.to_string()),
                        values: BTreeMap::new(),
                        assertions: vec![],
                        elapsed: Default::default(),
                    });
                }
                continue;
            }
        };
        let mut ctx = Ctx {
            omega,
            tol: &spec.tolerances,
            trials: spec.trials,
            seed: 0,
            parallel: opts.parallel_trials,
            constants: OnceCell::new(),
        };
        for &task in &spec.tasks {
            ctx.seed = stream_rng(spec.seed, (bi as u64) << 8 | task_index(task)).next_u64();
            let start = Instant::now();
            let res = run_task(task, &ctx);
            let elapsed = start.elapsed();
            let (status, message, out) = match res {
                Ok(o) => (TaskStatus::Ok, None, o),
                Err(e @ (Error::ConditionNotMet(_) | Error::NonCommuting)) => {
                    (TaskStatus::Skipped, Some(e.to_string()), Output::default())
                }
                Err(e) => (TaskStatus::Error, Some(e.to_string()), Output::default()),
            };
            results.push(TaskResult { task, beta, status, message, values: out.values, assertions: out.assertions, elapsed });
        }
    }
    let pass = results.iter().all(TaskResult::passed);
    RunReport { version: env!("CARGO_PKG_VERSION").to_string(), config: cfg.spec.clone(), results, pass }
}
