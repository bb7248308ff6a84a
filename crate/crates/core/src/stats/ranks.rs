use super::{check_finite, StatsError, StatsResult};

/// Average ranks (1-based), ties sharing the mean of the positions they span.
pub fn midranks(values: &[f64]) -> StatsResult<Vec<f64>> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    check_finite(values)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    Ok(ranks)
}

/// Sizes of the groups of equal values (singletons included).
pub fn tie_group_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        sizes.push(j - i);
        i = j;
    }
    sizes
}

/// `sum(t^3 - t)` over tie groups.
pub(crate) fn tie_cubes(values: &[f64]) -> f64 {
    tie_group_sizes(values)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(midranks(&[10.0, 20.0, 30.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(midranks(&[5.0, 5.0, 7.0]).unwrap(), vec![1.5, 1.5, 3.0]);
        assert_eq!(midranks(&[4.0; 4]).unwrap(), vec![2.5; 4]);
        assert_eq!(midranks(&[3.0, 1.0, 2.0]).unwrap(), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn errors() {
        assert_eq!(midranks(&[]), Err(StatsError::EmptyInput));
        assert_eq!(midranks(&[1.0, f64::NAN]), Err(StatsError::NonFinite));
    }

    #[test]
    fn tie_groups() {
        assert_eq!(tie_group_sizes(&[1.0, 2.0, 2.0, 3.0, 3.0, 3.0]), vec![1, 2, 3]);
        assert_eq!(tie_cubes(&[1.0, 1.0, 2.0]), 6.0);
    }

    proptest! {
        #[test]
        fn rank_sum_identity(v in prop::collection::vec(0u8..6, 1..40)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let n = v.len() as f64;
            let s: f64 = midranks(&v).unwrap().iter().sum();
            prop_assert!((s - n * (n + 1.0) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn monotone_invariance(v in prop::collection::vec(-50i32..50, 1..30)) {
            let a: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let b: Vec<f64> = v.iter().map(|&x| (x as f64 / 10.0).exp()).collect();
            prop_assert_eq!(midranks(&a).unwrap(), midranks(&b).unwrap());
        }
    }
}
