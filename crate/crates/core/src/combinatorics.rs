//! Set partitions as restricted growth strings.

/// Calls `visit` with every restricted growth string of length `n` using exactly
/// `m` labels (`m = 0` visits every string). Returns `false` if `visit` asked to stop.
pub fn for_each_rgs<F: FnMut(&[usize]) -> bool>(n: usize, m: usize, mut visit: F) -> bool {
    let mut a = vec![0usize; n];
    fn rec<F: FnMut(&[usize]) -> bool>(
        a: &mut Vec<usize>,
        i: usize,
        used: usize,
        m: usize,
        visit: &mut F,
    ) -> bool {
        let n = a.len();
        if i == n {
            if m == 0 || used == m {
                return visit(a);
            }
            return true;
        }
        if m > 0 && used + (n - i) < m {
            return true;
        }
        let top = if m == 0 { used + 1 } else { (used + 1).min(m) };
        for label in 0..top {
            a[i] = label;
            let next_used = used.max(label + 1);
            if !rec(a, i + 1, next_used, m, visit) {
                return false;
            }
        }
        true
    }
    if n == 0 {
        return if m == 0 { visit(&a) } else { true };
    }
    rec(&mut a, 0, 0, m, &mut visit)
}

/// All set partitions of `items`, blocks in order of first element.
pub fn set_partitions<T: Clone>(items: &[T]) -> Vec<Vec<Vec<T>>> {
    let mut out = Vec::new();
    for_each_rgs(items.len(), 0, |rgs| {
        let blocks = rgs.iter().copied().max().map_or(0, |x| x + 1);
        let mut p = vec![Vec::new(); blocks];
        for (item, &b) in items.iter().zip(rgs) {
            p[b].push(item.clone());
        }
        out.push(p);
        true
    });
    out
}
