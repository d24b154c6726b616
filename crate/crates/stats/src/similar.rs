use crate::StatsError;

/// The `k` universes with estimates closest to that of `uid`, nearest first;
/// equal distances are ordered by uid.
pub fn similar_universes(uid: usize, estimates: &[(usize, f64)], k: usize) -> Result<Vec<usize>, StatsError> {
    let &(_, target) = estimates
        .iter()
        .find(|(u, _)| *u == uid)
        .ok_or(StatsError::UnknownUniverse(uid))?;
    let mut others: Vec<(f64, usize)> = estimates
        .iter()
        .filter(|(u, _)| *u != uid)
        .map(|&(u, e)| ((e - target).abs(), u))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(others.into_iter().take(k).map(|(_, u)| u).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let e = [(1, 1.0), (2, 2.0), (3, 3.0), (4, 10.0)];
        assert!(similar_universes(2, &e, 0).unwrap().is_empty());
        assert_eq!(similar_universes(2, &e, 2).unwrap(), vec![1, 3]);
        let dup = [(5, 1.0), (3, 1.0), (1, 0.0)];
        assert_eq!(similar_universes(1, &dup, 2).unwrap(), vec![3, 5]);
        assert_eq!(similar_universes(9, &e, 1), Err(StatsError::UnknownUniverse(9)));
    }
}
