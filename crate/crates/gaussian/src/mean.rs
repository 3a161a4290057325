/// `m_0..m_k` by the recursion `m_{j+1} = (a + κ b) m_j + c`, `m_0 = 0`.
pub fn mean_sequence(a: f64, b: f64, c: f64, kappa: usize, k: usize) -> Vec<f64> {
    let g = a + kappa as f64 * b;
    let mut m = Vec::with_capacity(k + 1);
    m.push(0.0);
    for j in 0..k {
        m.push(g * m[j] + c);
    }
    m
}

/// Closed form `c (g^k - 1)/(g - 1)` with `g = a + κ b`; `None` when `g` is 1
/// to working precision.
pub fn mean_closed_form(a: f64, b: f64, c: f64, kappa: usize, k: usize) -> Option<f64> {
    let g = a + kappa as f64 * b;
    if (g - 1.0).abs() <= 1e-9 {
        return None;
    }
    Some(c * (g.powi(k as i32) - 1.0) / (g - 1.0))
}
