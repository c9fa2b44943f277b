//! Small combinatorial helpers shared by the analytic modules.

/// Binomial coefficient C(n, k), exact for the dimensions this crate allows
/// (n <= 64 stays far below u128 overflow).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        // Exact at every step: c * (n - k + i) is divisible by i.
        c = c * (n - k + i) as u128 / i as u128;
    }
    c as f64
}

/// Bitmask with the given index set.
pub(crate) fn mask_of(indices: &[usize]) -> u32 {
    indices.iter().fold(0u32, |m, &i| m | (1 << i))
}

/// Indices of the set bits, ascending.
pub(crate) fn indices_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

/// Walks the size-m subsets of `items` in lexicographic order and returns the
/// first one satisfying the predicate, or None.
pub(crate) fn first_combination_where(
    items: &[usize],
    m: usize,
    mut pred: impl FnMut(&[usize]) -> bool,
) -> Option<Vec<usize>> {
    let n = items.len();
    if m == 0 || m > n {
        return None;
    }
    let mut pos: Vec<usize> = (0..m).collect();
    let mut subset = vec![0usize; m];
    loop {
        for (j, &p) in pos.iter().enumerate() {
            subset[j] = items[p];
        }
        if pred(&subset) {
            return Some(subset);
        }
        // Advance to the next combination.
        let mut i = m;
        while i > 0 && pos[i - 1] == n - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return None;
        }
        pos[i - 1] += 1;
        for j in i..m {
            pos[j] = pos[j - 1] + 1;
        }
    }
}
