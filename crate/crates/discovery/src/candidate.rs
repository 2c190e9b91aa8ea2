use photonopt_core::metrics::RunStats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub aocc_mean: f64,
    pub aocc_std: f64,
    pub y_best_mean: f64,
    pub y_best_std: f64,
}

impl From<RunStats> for Scores {
    fn from(s: RunStats) -> Self {
        Self { aocc_mean: s.aocc_mean, aocc_std: s.aocc_std, y_best_mean: s.y_best_mean, y_best_std: s.y_best_std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateStatus {
    Evaluated,
    Failed,
}

impl CandidateStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateStatus::Evaluated => "evaluated",
            CandidateStatus::Failed => "failed",
        }
    }
}

/// One generated program together with its scores and lineage.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAlgorithm {
    /// Creation order within a discovery run, starting at 0.
    pub id: usize,
    pub generation: usize,
    pub name: String,
    pub description: String,
    pub source: String,
    pub parent_id: Option<usize>,
    pub parent_name: Option<String>,
    pub mutation_rate: Option<u32>,
    /// Scores of the completed runs; a failed candidate may still carry partial scores.
    pub scores: Option<Scores>,
    /// Error text fed back to the LLM; set for every failed candidate.
    pub error: Option<String>,
}

impl CandidateAlgorithm {
    pub fn new(id: usize, generation: usize, name: impl Into<String>, description: impl Into<String>, source: impl Into<String>) -> Self {
        Self {
            id,
            generation,
            name: name.into(),
            description: description.into(),
            source: source.into(),
            parent_id: None,
            parent_name: None,
            mutation_rate: None,
            scores: None,
            error: None,
        }
    }

    pub fn status(&self) -> CandidateStatus {
        if self.error.is_none() && self.scores.is_some() {
            CandidateStatus::Evaluated
        } else {
            CandidateStatus::Failed
        }
    }

    pub fn is_evaluated(&self) -> bool {
        self.status() == CandidateStatus::Evaluated
    }

    pub fn line_count(&self) -> usize {
        self.source.lines().count()
    }

    /// AOCC mean if evaluated.
    pub fn aocc(&self) -> Option<f64> {
        self.is_evaluated().then(|| self.scores.map(|s| s.aocc_mean)).flatten()
    }
}
