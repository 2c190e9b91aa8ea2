//! (mu + lambda) and (mu, lambda) survivor selection.

use std::cmp::Ordering;

use crate::candidate::CandidateAlgorithm;

/// Ranking order: evaluated before failed, higher AOCC, lower mean best fitness, earlier id.
pub fn rank_order(a: &CandidateAlgorithm, b: &CandidateAlgorithm) -> Ordering {
    match (a.is_evaluated(), b.is_evaluated()) {
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        _ => {}
    }
    if let (Some(sa), Some(sb), true) = (a.scores, b.scores, a.is_evaluated()) {
        let by_score = sb.aocc_mean.total_cmp(&sa.aocc_mean).then(sa.y_best_mean.total_cmp(&sb.y_best_mean));
        if by_score != Ordering::Equal {
            return by_score;
        }
    }
    a.id.cmp(&b.id)
}

/// Best `mu` of parents and offspring (plus) or of offspring alone (comma). When a comma pool
/// has fewer evaluated members than `mu`, failed offspring fill the remaining slots.
pub fn select_parents(parents: &[CandidateAlgorithm], offspring: &[CandidateAlgorithm], mu: usize, plus: bool) -> Vec<CandidateAlgorithm> {
    let mut pool: Vec<&CandidateAlgorithm> = if plus { parents.iter().chain(offspring).collect() } else { offspring.iter().collect() };
    pool.sort_by(|a, b| rank_order(a, b));
    pool.into_iter().take(mu).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidate::Scores;

    fn cand(id: usize, aocc: f64, y: f64) -> CandidateAlgorithm {
        let mut c = CandidateAlgorithm::new(id, 0, format!("C{id}"), "", "");
        c.scores = Some(Scores { aocc_mean: aocc, aocc_std: 0.0, y_best_mean: y, y_best_std: 0.0 });
        c
    }

    fn failed(id: usize) -> CandidateAlgorithm {
        let mut c = CandidateAlgorithm::new(id, 0, format!("F{id}"), "", "");
        c.error = Some("x".into());
        c
    }

    fn ids(v: &[CandidateAlgorithm]) -> Vec<usize> {
        v.iter().map(|c| c.id).collect()
    }

    #[test]
    fn plus_is_elitist() {
        let out = select_parents(&[cand(0, 0.6, 0.1)], &[cand(1, 0.5, 0.1)], 1, true);
        assert_eq!(ids(&out), [0]);
    }

    #[test]
    fn comma_replaces() {
        let out = select_parents(&[cand(0, 0.6, 0.1)], &[cand(1, 0.5, 0.1)], 1, false);
        assert_eq!(ids(&out), [1]);
    }

    #[test]
    fn ties_by_y_then_id() {
        let out = select_parents(&[cand(0, 0.5, 0.2)], &[cand(1, 0.5, 0.1), cand(2, 0.5, 0.1), cand(3, 0.4, 0.0)], 3, true);
        assert_eq!(ids(&out), [1, 2, 0]);
    }

    #[test]
    fn failed_rank_last_and_fill_comma() {
        let out = select_parents(&[cand(0, 0.9, 0.0)], &[failed(1), cand(2, 0.1, 0.9), failed(3)], 2, true);
        assert_eq!(ids(&out), [0, 2]);
        let out = select_parents(&[cand(0, 0.9, 0.0)], &[failed(3), cand(2, 0.1, 0.9), failed(1)], 3, false);
        assert_eq!(ids(&out), [2, 1, 3]);
    }

    #[test]
    fn partial_scores_do_not_lift_a_failed_candidate() {
        let mut f = cand(0, 0.99, 0.0);
        f.error = Some("crashed on run 2".into());
        let out = select_parents(&[], &[f, cand(1, 0.1, 0.5)], 1, false);
        assert_eq!(ids(&out), [1]);
    }
}
