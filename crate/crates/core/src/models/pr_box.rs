//! Popescu–Rohrlich box: outputs with `a ⊕ b = x·y` and uniform marginals.

/// `r` is the box's internal uniform bit.
pub fn pr_box(x: bool, y: bool, r: bool) -> (bool, bool) {
    (r, r ^ (x & y))
}

/// `±1` correlation at inputs `(x, y)`, averaged exactly over the internal bit.
pub fn pr_box_correlation(x: bool, y: bool) -> f64 {
    let total: i32 = [false, true]
        .into_iter()
        .map(|r| {
            let (a, b) = pr_box(x, y, r);
            if a ^ b {
                -1
            } else {
                1
            }
        })
        .sum();
    total as f64 / 2.0
}
