//! The main optimisation loop: one individual per lifetime, followed by peak
//! distinction, local search, peak-region simulation and a restart.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{BenchmarkFunction, FunctionId};
use crate::distinct::{classify, fir, sfd, PdmParams, Verdict};
use crate::error::{LadeError, Result};
use crate::explore::{generate_offspring, select_step, Individual, LifeStatus, PepParams};
use crate::history::{HistoryArchive, Recorder};
use crate::metrics::{BenchLabeler, TruthLabeler};
use crate::refine::{mean_shift, run_local_search, LspSign, LssParams};
use crate::region::{enlargement_factor, simulation_distance, PeakRegion};
use crate::reinit::{
    divide, pords_check, pords_reinit, random_reinit, sdp_draw, sds_reinit, select_subspace,
    PotentialRegion, ReinitParams, Restart, RestartKind,
};
use crate::space::Objective;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    pub disable_prss: bool,
    pub disable_pords: bool,
    pub disable_sds: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub pep: PepParams,
    pub pdm: PdmParams,
    pub lss: LssParams,
    pub reinit: ReinitParams,
    pub ablation: Ablation,
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        self.pep.validate()?;
        self.pdm.validate()?;
        self.lss.validate()?;
        if !(self.reinit.sdp_exponent.is_finite() && self.reinit.taboo_min_edge >= 0.0) {
            return Err(LadeError::InvalidParameter(
                "invalid reinit parameters".into(),
            ));
        }
        Ok(())
    }

    /// Sets one parameter from its textual `key=value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| LadeError::InvalidParameter(format!("{key}: cannot parse {v:?}")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v.trim().to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(LadeError::InvalidParameter(format!(
                    "{key}: expected a boolean"
                ))),
            }
        }
        match key.trim() {
            "F" | "scale_factor" => self.pep.scale_factor = num(key, value)?,
            "CR" | "crossover_rate" => self.pep.crossover_rate = num(key, value)?,
            "m_cg" | "max_stagnation" => self.pep.max_stagnation = num(key, value)?,
            "lt" | "lifetime" => self.pep.lifetime = num(key, value)?,
            "retry_cap" => self.pep.retry_cap = num(key, value)?,
            "lambda" => self.pdm.lambda = num(key, value)?,
            "random_hill_valley" => self.pdm.random_hill_valley = flag(key, value)?,
            "sigma_init" => self.lss.sigma_init = num(key, value)?,
            "sigma_term" => self.lss.sigma_term = num(key, value)?,
            "dt" | "descent_threshold" => self.lss.descent_threshold = num(key, value)?,
            "bandwidth" => self.lss.bandwidth = num(key, value)?,
            "removal_threshold" => self.lss.removal_threshold = num(key, value)?,
            "lsp_theta" => self.lss.lsp_theta = num(key, value)?,
            "lsp_sign" => {
                self.lss.lsp_sign = match value.trim() {
                    "prose" | "prose-consistent" => LspSign::ProseConsistent,
                    "printed" | "as-printed" => LspSign::AsPrinted,
                    v => {
                        return Err(LadeError::InvalidParameter(format!(
                            "lsp_sign: expected prose or printed, got {v:?}"
                        )))
                    }
                }
            }
            "prune_gap_floor" => self.lss.prune_gap_floor = num(key, value)?,
            "sdp_exponent" => self.reinit.sdp_exponent = num(key, value)?,
            "taboo_min_edge" => self.reinit.taboo_min_edge = num(key, value)?,
            "disable_prss" => self.ablation.disable_prss = flag(key, value)?,
            "disable_pords" => self.ablation.disable_pords = flag(key, value)?,
            "disable_sds" => self.ablation.disable_sds = flag(key, value)?,
            other => {
                return Err(LadeError::InvalidParameter(format!(
                    "unknown parameter {other:?}"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub function: FunctionId,
    pub accuracy: f64,
    pub seed: u64,
    /// Overrides the function's default FE budget.
    pub budget: Option<usize>,
    pub settings: Settings,
}

impl RunConfig {
    pub fn new(function: FunctionId, seed: u64) -> Self {
        RunConfig {
            function,
            accuracy: 1e-4,
            seed,
            budget: None,
            settings: Settings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.accuracy > 0.0) {
            return Err(LadeError::InvalidParameter(
                "accuracy must be positive".into(),
            ));
        }
        if self.budget == Some(0) {
            return Err(LadeError::InvalidParameter(
                "budget must be at least 1".into(),
            ));
        }
        self.settings.validate()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounters {
    pub lifetimes: usize,
    pub retry_cap_hits: usize,
    pub pords_activations: usize,
    pub sds_activations: usize,
    pub random_restarts: usize,
    pub fgr_demotions: usize,
    pub cluster_demotions: usize,
    pub salvaged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundPeak {
    /// Raw (problem-space) coordinates.
    pub position: Vec<f64>,
    pub fitness: f64,
    pub is_global: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctionEntry {
    pub lifetime: usize,
    pub verdict: Verdict,
    pub sfd: f64,
    pub fir: f64,
    /// Label implied by the verdict: new global, or a match to a global peak.
    pub predicted_global: bool,
    /// Ground-truth label when an oracle is available.
    pub truly_global: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdsEvent {
    pub lifetime: usize,
    pub leaves: usize,
    pub gpnum: Vec<usize>,
    pub chosen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    /// Global peaks (GP) at the end of the run.
    pub found: Vec<FoundPeak>,
    /// Every peak located (P), global or not.
    pub peaks: Vec<FoundPeak>,
    pub fe_used: usize,
    pub budget: usize,
    pub distinction_log: Vec<DistinctionEntry>,
    pub counters: EventCounters,
}

/// Full output of a run, including the evaluation archive.
#[derive(Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub archive: HistoryArchive,
    pub sds_events: Vec<SdsEvent>,
}

/// Runs one benchmark configuration.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    run_traced(config).map(|o| o.report)
}

pub fn run_traced(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let f = BenchmarkFunction::get(config.function);
    let labeler = BenchLabeler::new(config.function);
    let budget = config.budget.unwrap_or(f.budget);
    Ok(optimize(
        f,
        budget,
        &config.settings,
        config.seed,
        Some(&labeler),
    ))
}

/// Maximises `problem` with `budget` evaluations.
pub fn optimize<P: Objective + ?Sized>(
    problem: &P,
    budget: usize,
    settings: &Settings,
    seed: u64,
    labeler: Option<&dyn TruthLabeler>,
) -> RunOutput {
    let mut state = RunState::new(problem, budget, settings, seed, labeler);
    state.run();
    state.finish()
}

struct RunState<'a, P: Objective + ?Sized> {
    problem: &'a P,
    settings: &'a Settings,
    labeler: Option<&'a dyn TruthLabeler>,
    dim: usize,
    sd: f64,
    mu: f64,
    rng: ChaCha8Rng,
    archive: HistoryArchive,
    peaks: Vec<PeakRegion>,
    potentials: Vec<PotentialRegion>,
    /// Potential region the current lifetime started in, if any.
    active_potential: Option<usize>,
    lifetime: usize,
    seed: u64,
    log: Vec<DistinctionEntry>,
    counters: EventCounters,
    sds_events: Vec<SdsEvent>,
}

impl<'a, P: Objective + ?Sized> RunState<'a, P> {
    fn new(
        problem: &'a P,
        budget: usize,
        settings: &'a Settings,
        seed: u64,
        labeler: Option<&'a dyn TruthLabeler>,
    ) -> Self {
        let dim = problem.space().dim();
        let sd = simulation_distance(dim);
        RunState {
            problem,
            settings,
            labeler,
            dim,
            sd,
            mu: enlargement_factor(dim),
            rng: ChaCha8Rng::seed_from_u64(seed),
            archive: HistoryArchive::new(dim, budget, sd),
            peaks: Vec::new(),
            potentials: Vec::new(),
            active_potential: None,
            lifetime: 0,
            seed,
            log: Vec::new(),
            counters: EventCounters::default(),
            sds_events: Vec::new(),
        }
    }

    fn recorder(&mut self, generation: usize) -> Recorder<'_, P> {
        let mut r = Recorder::new(self.problem, &mut self.archive, self.lifetime);
        r.generation = generation;
        r
    }

    fn start(&mut self, restart: Restart) -> Option<Individual> {
        let (fitness, idx) = self.recorder(0).evaluate_indexed(&restart.position).ok()?;
        let mut ind = Individual::new(restart.position, fitness, idx, self.lifetime);
        ind.range = restart.range;
        ind.restriction = restart.restriction;
        ind.taboo_enabled = restart.taboo_enabled;
        ind.por_flag = restart.por_flag;
        match restart.kind {
            RestartKind::Random => self.counters.random_restarts += 1,
            RestartKind::Pords => self.counters.pords_activations += 1,
            RestartKind::Sds => self.counters.sds_activations += 1,
        }
        Some(ind)
    }

    fn run(&mut self) {
        let first = random_reinit(self.dim, &mut self.rng);
        let Some(mut ind) = self.start(first) else {
            return;
        };
        // the initial placement is not a restart decision
        self.counters.random_restarts = 0;
        while let Some(next) = self.lifetime_step(&mut ind) {
            ind = next;
        }
    }

    /// Runs one lifetime to completion and returns the next individual, or
    /// `None` once the budget is spent.
    fn lifetime_step(&mut self, ind: &mut Individual) -> Option<Individual> {
        let pep = &self.settings.pep;
        loop {
            let off = generate_offspring(ind, pep, &self.peaks, &mut self.rng);
            if off.retry_cap_hit {
                self.counters.retry_cap_hits += 1;
            }
            let generation = ind.generation() + 1;
            let Ok((fu, idx)) = self.recorder(generation).evaluate_indexed(&off.point) else {
                self.salvage(ind);
                return None;
            };
            if select_step(ind, off.point, fu, idx, pep) == LifeStatus::Exhausted {
                break;
            }
        }
        self.counters.lifetimes += 1;

        let settings = self.settings;
        let mut rec = Recorder::new(self.problem, &mut self.archive, self.lifetime);
        let verdict = classify(
            ind,
            &self.peaks,
            &settings.pdm,
            settings.pep.max_stagnation,
            self.sd,
            &mut rec,
            &mut self.rng,
        )
        .ok()?;

        let located = match verdict.verdict {
            Verdict::NewGlobal | Verdict::NewLocal => {
                let global = verdict.verdict == Verdict::NewGlobal;
                self.peaks.push(PeakRegion::new(
                    ind.position.clone(),
                    ind.eval_index,
                    ind.fitness,
                    global,
                    settings.lss.sigma_init,
                    self.lifetime,
                ));
                self.peaks.len() - 1
            }
            Verdict::Found => verdict
                .nearest_region
                .expect("found verdict names a region"),
        };
        let predicted_global = match verdict.verdict {
            Verdict::NewGlobal => true,
            Verdict::NewLocal => false,
            Verdict::Found => self.peaks[located].is_global,
        };
        self.log.push(DistinctionEntry {
            lifetime: self.lifetime,
            verdict: verdict.verdict,
            sfd: verdict.sfd,
            fir: verdict.fir,
            predicted_global,
            truly_global: self.labeler.map(|l| l.is_global(&ind.position)),
        });
        if verdict.verdict == Verdict::NewGlobal {
            if let Some(p) = self.active_potential.take() {
                self.potentials[p].resolved = true;
            }
        }

        let mut rec = Recorder::new(self.problem, &mut self.archive, self.lifetime);
        let lss = run_local_search(&mut self.peaks, &settings.lss, &mut rec, &mut self.rng).ok()?;
        self.counters.fgr_demotions += lss.demoted.len();
        self.counters.cluster_demotions += lss.pruned.len();

        if !settings.ablation.disable_prss {
            self.peaks[located].simulate(&self.archive, self.sd, self.mu);
        }

        let restart = self.choose_restart(ind, located);
        self.lifetime += 1;
        self.start(restart)
    }

    /// Budget ran out mid-lifetime: keep the individual as a new global peak
    /// when the fitness test alone says so, without spending FEs.
    fn salvage(&mut self, ind: &Individual) {
        let s = sfd(self.best_fitness(), ind.fitness, self.settings.pdm.lambda);
        let f = fir(&ind.trajectory, self.settings.pep.max_stagnation, self.dim);
        if s < f {
            self.peaks.push(PeakRegion::new(
                ind.position.clone(),
                ind.eval_index,
                ind.fitness,
                true,
                self.settings.lss.sigma_init,
                self.lifetime,
            ));
            self.counters.salvaged += 1;
        }
    }

    fn best_fitness(&self) -> f64 {
        self.archive.best().map_or(f64::NEG_INFINITY, |r| r.fitness)
    }

    fn choose_restart(&mut self, ind: &Individual, located: usize) -> Restart {
        self.active_potential = None;
        let settings = self.settings;
        if !settings.ablation.disable_pords && !ind.por_flag {
            if let Some(region) = self.potential_region(located) {
                let existing = self
                    .potentials
                    .iter()
                    .position(|p| p.same_as(&region, settings.lss.bandwidth));
                let slot = match existing {
                    Some(i) if self.potentials[i].resolved => None,
                    Some(i) => {
                        self.potentials[i] = region;
                        Some(i)
                    }
                    None => {
                        self.potentials.push(region);
                        Some(self.potentials.len() - 1)
                    }
                };
                if let Some(i) = slot {
                    self.active_potential = Some(i);
                    return pords_reinit(&self.potentials[i], self.sd / 10.0);
                }
            }
        }
        let gp: Vec<&[f64]> = self
            .peaks
            .iter()
            .filter(|p| p.is_global)
            .map(|p| p.solution.coords())
            .collect();
        if !settings.ablation.disable_sds
            && sdp_draw(gp.len(), settings.reinit.sdp_exponent, &mut self.rng)
        {
            let tree = divide(&gp, self.dim);
            let chosen = select_subspace(&tree, &mut self.rng);
            self.sds_events.push(SdsEvent {
                lifetime: self.lifetime,
                leaves: tree.len(),
                gpnum: tree.gpnum.clone(),
                chosen,
            });
            return sds_reinit(&tree.leaves[chosen], &settings.reinit, &mut self.rng);
        }
        random_reinit(self.dim, &mut self.rng)
    }

    /// Potential optimal region around the cluster holding `located`.
    fn potential_region(&self, located: usize) -> Option<PotentialRegion> {
        if self.peaks.len() < 2 || !self.peaks.iter().any(|p| p.ls.lsum >= 1) {
            return None;
        }
        let points: Vec<&[f64]> = self.peaks.iter().map(|p| p.solution.coords()).collect();
        let clusters = mean_shift(&points, self.settings.lss.bandwidth);
        let label = clusters.labels[located];
        let members: Vec<usize> = (0..self.peaks.len())
            .filter(|&i| clusters.labels[i] == label)
            .collect();
        let f_worst = self.archive.worst().map_or(f64::INFINITY, |r| r.fitness);
        pords_check(
            &members,
            &self.peaks,
            self.best_fitness(),
            f_worst,
            self.settings.lss.removal_threshold,
        )
    }

    fn finish(self) -> RunOutput {
        let space = self.problem.space();
        let to_found = |p: &PeakRegion| FoundPeak {
            position: space.from_unit_unchecked(&p.solution),
            fitness: p.fitness,
            is_global: p.is_global,
        };
        let report = RunReport {
            seed: self.seed,
            found: self
                .peaks
                .iter()
                .filter(|p| p.is_global)
                .map(to_found)
                .collect(),
            peaks: self.peaks.iter().map(to_found).collect(),
            fe_used: self.archive.budget().used,
            budget: self.archive.budget().max,
            distinction_log: self.log,
            counters: self.counters,
        };
        RunOutput {
            report,
            archive: self.archive,
            sds_events: self.sds_events,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_budget_gives_empty_report() {
        let mut cfg = RunConfig::new(FunctionId::F2, 1);
        cfg.budget = Some(1);
        let r = run(&cfg).unwrap();
        assert_eq!(r.fe_used, 1);
        assert!(r.found.is_empty());
        assert!(r.distinction_log.is_empty());
    }

    #[test]
    fn budget_is_spent_exactly() {
        let mut cfg = RunConfig::new(FunctionId::F2, 3);
        cfg.budget = Some(5000);
        let r = run(&cfg).unwrap();
        assert_eq!(r.fe_used, 5000);
        assert!(r.counters.lifetimes > 0);
    }

    #[test]
    fn reruns_are_identical() {
        let mut cfg = RunConfig::new(FunctionId::F6, 17);
        cfg.budget = Some(20_000);
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    }

    #[test]
    fn all_ablations_still_terminate() {
        let mut cfg = RunConfig::new(FunctionId::F4, 5);
        cfg.budget = Some(10_000);
        cfg.settings.ablation = Ablation {
            disable_prss: true,
            disable_pords: true,
            disable_sds: true,
        };
        let r = run(&cfg).unwrap();
        assert_eq!(r.fe_used, 10_000);
        assert_eq!(r.counters.pords_activations + r.counters.sds_activations, 0);
    }

    #[test]
    fn settings_parse_and_reject() {
        let mut s = Settings::default();
        s.set("F", "0.7").unwrap();
        s.set("lsp_sign", "printed").unwrap();
        s.set("disable_sds", "true").unwrap();
        assert_eq!(s.pep.scale_factor, 0.7);
        assert_eq!(s.lss.lsp_sign, LspSign::AsPrinted);
        assert!(s.ablation.disable_sds);
        assert!(s.set("nope", "1").is_err());
        assert!(s.set("m_cg", "x").is_err());
        s.set("CR", "1.5").unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = RunConfig::new(FunctionId::F1, 0);
        cfg.accuracy = 0.0;
        assert!(run(&cfg).is_err());
    }
}
