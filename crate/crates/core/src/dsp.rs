// Small numeric helpers shared across modules.

use num_complex::Complex64;

/// Full linear convolution, length `a.len() + b.len() - 1`.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    // iterate over the shorter operand in the inner loop
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    for (j, &s) in short.iter().enumerate() {
        if s == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (o, &l) in out[j..j + long.len()].iter_mut().zip(long) {
            *o += l * s;
        }
    }
    out
}

/// Inner product `sum a[i] * conj(b[i])`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}
