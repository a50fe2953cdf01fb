//! Test oracles that share no code with the engine: f64 reference
//! implementations of every differentiable op, a central-difference
//! gradient estimator, a throwaway xorshift generator for inputs, and a
//! random program generator for the front end.

pub mod programs;
pub mod reference;

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Agreement within `rel` relative error or `abs` absolute error,
/// element by element. Returns the worst offender on failure.
pub fn grads_agree(analytic: &[f32], numeric: &[f64], rel: f64, abs: f64) -> Result<(), String> {
    if analytic.len() != numeric.len() {
        return Err(format!(
            "length mismatch: {} vs {}",
            analytic.len(),
            numeric.len()
        ));
    }
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let a = a as f64;
        let diff = (a - n).abs();
        let scale = a.abs().max(n.abs());
        if diff > abs && diff > rel * scale {
            return Err(format!(
                "element {i}: analytic {a:.6e} vs numeric {n:.6e} (diff {diff:.3e})"
            ));
        }
    }
    Ok(())
}

/// Step and tolerances used by every gradient check.
pub const FD_STEP: f64 = 1e-3;
pub const FD_REL: f64 = 1e-3;
pub const FD_ABS: f64 = 1e-4;

/// xorshift64* for generating test inputs.
pub struct Xorshift(u64);

impl Xorshift {
    pub fn new(seed: u64) -> Self {
        Xorshift(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// `n` values in [lo, hi), rounded through f32 so the engine sees the
    /// same numbers as the oracle.
    pub fn vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi) as f32 as f64).collect()
    }

    /// Like [`Xorshift::vec`] but keeps every value at least `gap` away
    /// from zero, for ops with a kink there.
    pub fn vec_away_from_zero(&mut self, n: usize, lo: f64, hi: f64, gap: f64) -> Vec<f64> {
        (0..n)
            .map(|_| loop {
                let v = self.uniform(lo, hi) as f32 as f64;
                if v.abs() >= gap {
                    break v;
                }
            })
            .collect()
    }
}

pub fn to_f32(x: &[f64]) -> Vec<f32> {
    x.iter().map(|&v| v as f32).collect()
}

pub fn to_f64(x: &[f32]) -> Vec<f64> {
    x.iter().map(|&v| v as f64).collect()
}
