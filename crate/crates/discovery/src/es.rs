//! The generation loop: query, extract, evaluate, select.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use photonopt_core::parallel::{map_slice, Parallelism};

use crate::candidate::CandidateAlgorithm;
use crate::evaluate::Evaluator;
use crate::extract::{declared_name, extract_code};
use crate::llm::LlmClient;
use crate::mutation::{FastMutation, QuotaRule};
use crate::prompts::PromptBundle;
use crate::select::{rank_order, select_parents};
use crate::DiscoveryError;

#[derive(Debug, Clone, PartialEq)]
pub struct EsConfig {
    pub mu: usize,
    pub lambda: usize,
    pub plus: bool,
    /// Archive size at which the loop stops, initial candidates included.
    pub total_candidates: usize,
    pub runs_per_candidate: usize,
    pub seed: u64,
    pub mutation: FastMutation,
    pub quota_rule: QuotaRule,
    /// Extra LLM attempts after a failed request.
    pub llm_retries: usize,
    /// When set, every initial slot uses this program instead of a task-prompt query.
    pub seed_candidate: Option<String>,
    pub parallelism: Parallelism,
}

impl EsConfig {
    pub fn new(mu: usize, lambda: usize, plus: bool) -> Self {
        Self {
            mu,
            lambda,
            plus,
            total_candidates: 100,
            runs_per_candidate: 3,
            seed: 0,
            mutation: FastMutation::default(),
            quota_rule: QuotaRule::default(),
            llm_retries: 3,
            seed_candidate: None,
            parallelism: Parallelism::default(),
        }
    }

    /// "(1+1)" or "(2,10)".
    pub fn label(&self) -> String {
        format!("({}{}{})", self.mu, if self.plus { '+' } else { ',' }, self.lambda)
    }

    pub fn validate(&self) -> Result<(), DiscoveryError> {
        let bad = |m: String| Err(DiscoveryError::Config(m));
        if self.mu == 0 || self.lambda == 0 {
            return bad(format!("mu and lambda must be at least 1, got {}", self.label()));
        }
        if !self.plus && self.lambda < self.mu {
            return bad(format!("comma strategy needs lambda >= mu, got {}", self.label()));
        }
        if self.total_candidates < self.mu + self.lambda {
            return bad(format!("total_candidates {} is below mu + lambda = {}", self.total_candidates, self.mu + self.lambda));
        }
        if self.runs_per_candidate == 0 {
            return bad("runs_per_candidate must be at least 1".into());
        }
        self.mutation.validate().map_err(DiscoveryError::Config)
    }

    pub fn eval_seeds(&self) -> Vec<u64> {
        (0..self.runs_per_candidate as u64).map(|r| self.seed.wrapping_add(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub offspring: Vec<usize>,
    /// Parent ids after selection, best first.
    pub parents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptRecord {
    pub candidate_id: usize,
    pub prompt: String,
    pub response: Result<String, String>,
    pub attempts: usize,
}

#[derive(Debug, Clone)]
pub struct DiscoveryResult {
    pub config: EsConfig,
    /// Every candidate in creation order; `archive[i].id == i`.
    pub archive: Vec<CandidateAlgorithm>,
    pub generations: Vec<GenerationRecord>,
    pub prompts: Vec<PromptRecord>,
}

impl DiscoveryResult {
    pub fn final_parents(&self) -> Vec<&CandidateAlgorithm> {
        self.generations.last().map(|g| g.parents.iter().map(|&i| &self.archive[i]).collect()).unwrap_or_default()
    }

    pub fn best(&self) -> Option<&CandidateAlgorithm> {
        self.archive.iter().min_by(|a, b| rank_order(a, b))
    }

    pub fn failed_count(&self) -> usize {
        self.archive.iter().filter(|c| !c.is_evaluated()).count()
    }
}

struct Draft {
    candidate: CandidateAlgorithm,
    needs_eval: bool,
}

fn query(llm: &mut dyn LlmClient, prompt: &str, retries: usize) -> (Result<String, String>, usize) {
    let mut last = String::new();
    for attempt in 1..=retries + 1 {
        match llm.complete(prompt) {
            Ok(r) => return (Ok(r), attempt),
            Err(e) => last = e.to_string(),
        }
    }
    (Err(last), retries + 1)
}

fn draft_from_response(id: usize, generation: usize, response: &Result<String, String>, attempts: usize) -> Draft {
    match response {
        Err(e) => {
            let mut c = CandidateAlgorithm::new(id, generation, "LlmFailure", "", "");
            c.error = Some(format!("LLM request failed after {attempts} attempts: {e}"));
            Draft { candidate: c, needs_eval: false }
        }
        Ok(text) => match extract_code(text) {
            Ok(x) => Draft { candidate: CandidateAlgorithm::new(id, generation, x.name, x.description, x.source), needs_eval: true },
            Err(e) => {
                let mut c = CandidateAlgorithm::new(id, generation, "Unparsed", "", text.clone());
                c.error = Some(format!("could not extract code: {e}"));
                Draft { candidate: c, needs_eval: false }
            }
        },
    }
}

fn evaluate_drafts(drafts: Vec<Draft>, evaluator: &dyn Evaluator, cfg: &EsConfig) -> Vec<CandidateAlgorithm> {
    let seeds = cfg.eval_seeds();
    map_slice(&drafts, cfg.parallelism, |d| {
        let mut c = d.candidate.clone();
        if d.needs_eval {
            let report = evaluator.evaluate(c.id, &c.name, &c.source, &seeds);
            c.scores = report.scores();
            c.error = report.error;
        }
        c
    })
}

/// Evolves candidate programs until the archive holds `cfg.total_candidates` members.
/// LLM, extraction and evaluation failures become failed candidates; only an invalid
/// configuration is reported as an error.
pub fn run_discovery(
    cfg: &EsConfig,
    prompts: &PromptBundle,
    llm: &mut dyn LlmClient,
    evaluator: &dyn Evaluator,
    mut on_candidate: impl FnMut(&CandidateAlgorithm),
) -> Result<DiscoveryResult, DiscoveryError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut archive: Vec<CandidateAlgorithm> = Vec::with_capacity(cfg.total_candidates);
    let mut records = Vec::new();
    let mut prompt_log = Vec::new();

    let mut drafts = Vec::with_capacity(cfg.mu);
    for id in 0..cfg.mu {
        match &cfg.seed_candidate {
            Some(source) => {
                let name = declared_name(source).unwrap_or_else(|| "SeedCandidate".into());
                let c = CandidateAlgorithm::new(id, 0, name, "seed candidate", source.clone());
                drafts.push(Draft { candidate: c, needs_eval: true });
            }
            None => {
                let prompt = prompts.initial_prompt();
                let (response, attempts) = query(llm, &prompt, cfg.llm_retries);
                drafts.push(draft_from_response(id, 0, &response, attempts));
                prompt_log.push(PromptRecord { candidate_id: id, prompt, response, attempts });
            }
        }
    }
    let initial = evaluate_drafts(drafts, evaluator, cfg);
    initial.iter().for_each(&mut on_candidate);
    archive.extend(initial.iter().cloned());
    let mut parents = select_parents(&[], &initial, cfg.mu, false);
    records.push(GenerationRecord { generation: 0, offspring: initial.iter().map(|c| c.id).collect(), parents: parents.iter().map(|c| c.id).collect() });

    let mut generation = 0;
    while archive.len() < cfg.total_candidates {
        generation += 1;
        let n = cfg.lambda.min(cfg.total_candidates - archive.len());
        // Failed parents are only chosen when no parent has scores.
        let eligible: Vec<&CandidateAlgorithm> = {
            let ok: Vec<&CandidateAlgorithm> = parents.iter().filter(|p| p.is_evaluated()).collect();
            if ok.is_empty() {
                parents.iter().collect()
            } else {
                ok
            }
        };
        let mut drafts = Vec::with_capacity(n);
        for k in 0..n {
            let id = archive.len() + k;
            let parent = eligible[rng.random_range(0..eligible.len())];
            let x = cfg.mutation.sample(&mut rng);
            let prompt = prompts.offspring_prompt(parent, x, cfg.quota_rule);
            let (response, attempts) = query(llm, &prompt, cfg.llm_retries);
            let mut d = draft_from_response(id, generation, &response, attempts);
            d.candidate.parent_id = Some(parent.id);
            d.candidate.parent_name = Some(parent.name.clone());
            d.candidate.mutation_rate = Some(x);
            drafts.push(d);
            prompt_log.push(PromptRecord { candidate_id: id, prompt, response, attempts });
        }
        let offspring = evaluate_drafts(drafts, evaluator, cfg);
        offspring.iter().for_each(&mut on_candidate);
        archive.extend(offspring.iter().cloned());

        let mut next = select_parents(&parents, &offspring, cfg.mu, cfg.plus);
        // A short final comma generation keeps the best old parents in the empty slots.
        if next.len() < cfg.mu {
            let mut old = parents.clone();
            old.sort_by(rank_order);
            next.extend(old.into_iter().take(cfg.mu - next.len()));
        }
        parents = next;
        records.push(GenerationRecord {
            generation,
            offspring: offspring.iter().map(|c| c.id).collect(),
            parents: parents.iter().map(|c| c.id).collect(),
        });
    }

    Ok(DiscoveryResult { config: cfg.clone(), archive, generations: records, prompts: prompt_log })
}
