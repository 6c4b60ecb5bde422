/// Share of exact matches; 0 for empty input.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// Per-class F1 averaged with class support as weights.
pub fn weighted_f1(pred: &[usize], truth: &[usize], classes: usize) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for c in 0..classes {
        let support = truth.iter().filter(|&&t| t == c).count();
        if support == 0 {
            continue;
        }
        let tp = pred.iter().zip(truth).filter(|(&p, &t)| p == c && t == c).count() as f64;
        let fp = pred.iter().zip(truth).filter(|(&p, &t)| p == c && t != c).count() as f64;
        let fn_ = support as f64 - tp;
        let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
        total += f1 * support as f64;
    }
    total / truth.len() as f64
}
