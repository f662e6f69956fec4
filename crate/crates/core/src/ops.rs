//! Arithmetic hooks for counting the operations of a metric evaluation.
//!
//! Metric code is written against [`Arith`]; [`Plain`] compiles to the bare
//! operations and [`OpCount`] tallies them.

pub trait Arith {
    fn mul(&mut self, a: f64, b: f64) -> f64;
    fn add(&mut self, a: f64, b: f64) -> f64;
    fn exp(&mut self, x: f64) -> f64;
    /// `ln(1 + x)`, counted as a single logarithm.
    fn ln_1p(&mut self, x: f64) -> f64;
}

/// Uninstrumented arithmetic.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plain;

impl Arith for Plain {
    #[inline(always)]
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }
    #[inline(always)]
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    #[inline(always)]
    fn exp(&mut self, x: f64) -> f64 {
        x.exp()
    }
    #[inline(always)]
    fn ln_1p(&mut self, x: f64) -> f64 {
        x.ln_1p()
    }
}

/// Multiplication, addition and transcendental (ln/exp) tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub multiplications: u64,
    pub additions: u64,
    pub transcendentals: u64,
}

impl Arith for OpCount {
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        self.multiplications += 1;
        a * b
    }
    fn add(&mut self, a: f64, b: f64) -> f64 {
        self.additions += 1;
        a + b
    }
    fn exp(&mut self, x: f64) -> f64 {
        self.transcendentals += 1;
        x.exp()
    }
    fn ln_1p(&mut self, x: f64) -> f64 {
        self.transcendentals += 1;
        x.ln_1p()
    }
}
