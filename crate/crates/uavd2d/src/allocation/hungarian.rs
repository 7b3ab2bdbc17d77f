//! Maximum-weight bipartite matching (Kuhn–Munkres with potentials).

/// Maximum-total-weight one-to-one assignment of rows to columns.
///
/// `weights[r][c]` is `None` when the pair cannot be assigned; present
/// weights must be non-negative. Returns the column of each row (`None` if
/// unmatched). The matrix is padded to square with zero-weight dummies, so
/// leaving a row unmatched is always allowed.
pub fn hungarian_max(weights: &[Vec<Option<f64>>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.iter().map(Vec::len).max().unwrap_or(0);
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let cost = |r: usize, c: usize| -> f64 {
        if r < rows {
            weights[r].get(c).copied().flatten().map_or(0.0, |w| -w)
        } else {
            0.0
        }
    };

    // 1-based arrays; p[c] is the row matched to column c.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for r in 1..=n {
        p[0] = r;
        let mut c0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[c0] = true;
            let r0 = p[c0];
            let mut delta = inf;
            let mut c1 = 0;
            for c in 1..=n {
                if used[c] {
                    continue;
                }
                let cur = cost(r0 - 1, c - 1) - u[r0] - v[c];
                if cur < minv[c] {
                    minv[c] = cur;
                    way[c] = c0;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    c1 = c;
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[p[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            c0 = c1;
            if p[c0] == 0 {
                break;
            }
        }
        loop {
            let c1 = way[c0];
            p[c0] = p[c1];
            c0 = c1;
            if c0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![None; rows];
    for c in 1..=n {
        let r = p[c];
        if r >= 1 && r <= rows && c <= cols && weights[r - 1].get(c - 1).copied().flatten().is_some() {
            out[r - 1] = Some(c - 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(w: &[Vec<Option<f64>>], a: &[Option<usize>]) -> f64 {
        a.iter().enumerate().filter_map(|(r, c)| c.and_then(|c| w[r][c])).sum()
    }

    #[test]
    fn two_by_two() {
        let w = vec![vec![Some(1.0), Some(2.0)], vec![Some(3.0), Some(1.0)]];
        let a = hungarian_max(&w);
        assert_eq!(a, vec![Some(1), Some(0)]);
        assert_eq!(total(&w, &a), 5.0);
    }

    #[test]
    fn diagonal_only() {
        let w: Vec<Vec<Option<f64>>> =
            (0..4).map(|r| (0..4).map(|c| (r == c).then_some(1.0 + r as f64)).collect()).collect();
        assert_eq!(hungarian_max(&w), vec![Some(0), Some(1), Some(2), Some(3)]);
    }

    #[test]
    fn rectangular_and_absent() {
        assert!(hungarian_max(&[]).is_empty());
        let w = vec![vec![None, None], vec![None, Some(2.0)], vec![Some(1.0), Some(5.0)]];
        let a = hungarian_max(&w);
        assert_eq!(a[0], None);
        assert_eq!(total(&w, &a), 5.0);
        let wide = vec![vec![Some(1.0), Some(4.0), Some(2.0)]];
        assert_eq!(hungarian_max(&wide), vec![Some(1)]);
    }
}
