//! Small helpers for working on probability simplices.

/// Number of lattice points `{c in N^k : sum c = r}`, as a float to avoid overflow.
pub fn composition_count(k: usize, r: usize) -> f64 {
    if k == 0 {
        return if r == 0 { 1.0 } else { 0.0 };
    }
    // C(r + k - 1, k - 1)
    let n = r + k - 1;
    let m = (k - 1).min(r);
    let mut acc = 1.0;
    for i in 0..m {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Largest resolution `r <= cap` whose lattice on a `k`-simplex has at most `budget` points.
pub fn resolution_for_budget(k: usize, budget: usize, cap: usize) -> usize {
    if k <= 1 {
        return 1;
    }
    let mut r = 1;
    while r < cap && composition_count(k, r + 1) <= budget as f64 {
        r += 1;
    }
    r
}

/// Calls `f` on every composition of `r` into `k` nonnegative parts, in
/// lexicographically decreasing order of the first part.
pub fn for_each_composition(k: usize, r: usize, mut f: impl FnMut(&[u32])) {
    if k == 0 {
        return;
    }
    let r = r as u32;
    let mut parts = vec![0u32; k];
    parts[0] = r;
    loop {
        f(&parts);
        // Find the rightmost non-last position holding mass, move one unit right.
        let mut i = k - 1;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if parts[i] > 0 {
                break;
            }
            if i == 0 {
                return;
            }
        }
        parts[i] -= 1;
        let tail = parts[k - 1];
        parts[k - 1] = 0;
        parts[i + 1] = tail + 1;
    }
}

/// Euclidean projection onto the probability simplex, in place.
pub fn project_to_simplex(v: &mut [f64]) {
    let n = v.len();
    if n == 0 {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Rescales a nonnegative vector to sum to one. Leaves an all-zero vector untouched.
pub fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}
