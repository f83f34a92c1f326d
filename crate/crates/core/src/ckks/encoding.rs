//! Canonical-embedding encoder: real slot vectors <-> scaled integer
//! polynomials, via the "special" FFT over the orbit of 5 in `Z_{2N}^*`.
//!
//! Slot `j` is the evaluation at `zeta^{5^j}` with `zeta = exp(i*pi/N)`, so the
//! automorphism `X -> X^{5^k}` rotates slots left by `k`.

use num_complex::Complex64;

#[derive(Debug)]
pub struct Encoder {
    n: usize,
    rot_group: Vec<usize>,
    ksi_pows: Vec<Complex64>,
}

impl Encoder {
    pub fn new(n: usize) -> Self {
        let m = 2 * n;
        let slots = n / 2;
        let mut rot_group = Vec::with_capacity(slots);
        let mut g = 1usize;
        for _ in 0..slots {
            rot_group.push(g);
            g = g * 5 % m;
        }
        let ksi_pows = (0..=m)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        Self {
            n,
            rot_group,
            ksi_pows,
        }
    }

    pub fn slots(&self) -> usize {
        self.n / 2
    }

    /// Galois element realizing a left rotation by `step` slots.
    pub fn galois_element(&self, step: i64) -> usize {
        let slots = self.slots() as i64;
        let k = step.rem_euclid(slots) as usize;
        self.rot_group[k]
    }

    fn bit_reverse(vals: &mut [Complex64]) {
        let n = vals.len();
        let mut j = 0;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j ^= bit;
            if i < j {
                vals.swap(i, j);
            }
        }
    }

    /// Slot values -> coefficient-side complex vector.
    fn special_ifft(&self, vals: &mut [Complex64]) {
        let size = vals.len();
        let m = 2 * self.n;
        let mut len = size;
        while len >= 1 {
            let lenh = len >> 1;
            let lenq = len << 2;
            let gap = m / lenq;
            for i in (0..size).step_by(len.max(1)) {
                for j in 0..lenh {
                    let idx = (lenq - (self.rot_group[j] % lenq)) * gap;
                    let u = vals[i + j] + vals[i + j + lenh];
                    let v = (vals[i + j] - vals[i + j + lenh]) * self.ksi_pows[idx];
                    vals[i + j] = u;
                    vals[i + j + lenh] = v;
                }
            }
            if len == 1 {
                break;
            }
            len >>= 1;
        }
        Self::bit_reverse(vals);
        let inv = 1.0 / size as f64;
        for v in vals.iter_mut() {
            *v *= inv;
        }
    }

    /// Coefficient-side complex vector -> slot values.
    fn special_fft(&self, vals: &mut [Complex64]) {
        let size = vals.len();
        let m = 2 * self.n;
        Self::bit_reverse(vals);
        let mut len = 2;
        while len <= size {
            let lenh = len >> 1;
            let lenq = len << 2;
            let gap = m / lenq;
            for i in (0..size).step_by(len) {
                for j in 0..lenh {
                    let idx = (self.rot_group[j] % lenq) * gap;
                    let u = vals[i + j];
                    let v = vals[i + j + lenh] * self.ksi_pows[idx];
                    vals[i + j] = u + v;
                    vals[i + j + lenh] = u - v;
                }
            }
            len <<= 1;
        }
    }

    /// Scaled integer coefficients for `values` (zero-padded to all slots),
    /// rounded half away from zero.
    pub fn encode_coeffs(&self, values: &[f64], scale: f64) -> Vec<i128> {
        let slots = self.slots();
        debug_assert!(values.len() <= slots);
        let mut u: Vec<Complex64> = values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(slots)
            .collect();
        self.special_ifft(&mut u);
        let mut coeffs = vec![0i128; self.n];
        for (i, c) in u.iter().enumerate() {
            coeffs[i] = (c.re * scale).round() as i128;
            coeffs[i + slots] = (c.im * scale).round() as i128;
        }
        coeffs
    }

    /// Inverse of `encode_coeffs` for centered real coefficients.
    pub fn decode_coeffs(&self, coeffs: &[f64], scale: f64) -> Vec<f64> {
        let slots = self.slots();
        let mut u: Vec<Complex64> = (0..slots)
            .map(|i| Complex64::new(coeffs[i] / scale, coeffs[i + slots] / scale))
            .collect();
        self.special_fft(&mut u);
        u.into_iter().map(|c| c.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation of m(X) at zeta^{5^j}: the embedding by definition.
    fn naive_embedding(coeffs: &[f64], n: usize) -> Vec<Complex64> {
        let m = 2 * n;
        let mut g = 1usize;
        let mut out = Vec::new();
        for _ in 0..n / 2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &c) in coeffs.iter().enumerate() {
                let e = (g * k) % m;
                let angle = std::f64::consts::PI * e as f64 / n as f64;
                acc += Complex64::new(angle.cos(), angle.sin()) * c;
            }
            out.push(acc);
            g = g * 5 % m;
        }
        out
    }

    #[test]
    fn special_fft_matches_naive_embedding() {
        let n = 32;
        let enc = Encoder::new(n);
        let coeffs: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let fast = enc.decode_coeffs(&coeffs, 1.0);
        let slow = naive_embedding(&coeffs, n);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b.re).abs() < 1e-9, "{a} vs {}", b.re);
        }
    }

    #[test]
    fn encode_then_naive_embedding_recovers_values() {
        let n = 64;
        let enc = Encoder::new(n);
        let values: Vec<f64> = (0..n / 2).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let scale = 2f64.powi(30);
        let coeffs: Vec<f64> = enc
            .encode_coeffs(&values, scale)
            .into_iter()
            .map(|c| c as f64 / scale)
            .collect();
        let slots = naive_embedding(&coeffs, n);
        for (v, s) in values.iter().zip(&slots) {
            assert!((v - s.re).abs() < 1e-7);
            assert!(s.im.abs() < 1e-7);
        }
    }

    #[test]
    fn zero_and_constant_vectors() {
        let n = 1024;
        let enc = Encoder::new(n);
        assert!(enc
            .encode_coeffs(&[], 2f64.powi(30))
            .iter()
            .all(|&c| c == 0));
        let scale = 2f64.powi(30);
        let c = enc.encode_coeffs(&vec![2.5; n / 2], scale);
        assert_eq!(c[0], (2.5 * scale) as i128);
        assert!(c[1..].iter().all(|&x| x == 0));
    }

    #[test]
    fn rotation_group_generates_distinct_elements() {
        let enc = Encoder::new(64);
        let mut seen: Vec<usize> = (0..32).map(|k| enc.galois_element(k)).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 32);
        assert_eq!(enc.galois_element(-1), enc.galois_element(31));
    }
}
