/// Graded gain: 3 -> 7, 2 -> 3, anything else -> 0.
pub fn gain(grade: u8) -> f64 {
    match grade {
        3 => 7.0,
        2 => 3.0,
        _ => 0.0,
    }
}

fn dcg(grades: &[u8], k: usize) -> f64 {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(r, &g)| gain(g) / ((r + 2) as f64).log2())
        .sum()
}

/// NDCG at `k` of grades listed in ranked order; the ideal ordering is a
/// re-sort of the same grades. 0 when nothing is relevant.
pub fn ndcg_at_k(ranked_grades: &[u8], k: usize) -> f64 {
    let mut ideal = ranked_grades.to_vec();
    ideal.sort_unstable_by(|a, b| gain(*b).total_cmp(&gain(*a)));
    let idcg = dcg(&ideal, k);
    if idcg <= 0.0 {
        return 0.0;
    }
    dcg(ranked_grades, k) / idcg
}

/// Share of relevant (grade >= 2) items that appear in the top `k`.
pub fn recall_at_k(ranked_grades: &[u8], k: usize) -> f64 {
    let relevant = ranked_grades.iter().filter(|&&g| g >= 2).count();
    if relevant == 0 {
        return 0.0;
    }
    let hit = ranked_grades.iter().take(k).filter(|&&g| g >= 2).count();
    hit as f64 / relevant as f64
}

/// The reported metrics, in table order.
pub const METRICS: [&str; 4] = ["NDCG@3", "NDCG@10", "R@3", "R@10"];

pub fn metric_vector(ranked_grades: &[u8]) -> [f64; 4] {
    [
        ndcg_at_k(ranked_grades, 3),
        ndcg_at_k(ranked_grades, 10),
        recall_at_k(ranked_grades, 3),
        recall_at_k(ranked_grades, 10),
    ]
}
