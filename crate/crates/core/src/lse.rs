//! Streaming log-sum-exp accumulator.

/// Running value of `log Σ exp(x_i)`, kept as a shifted sum so that very large
/// or very small exponents neither overflow nor flush to zero.
///
/// Accumulators form a commutative monoid under [`LogSumExp::merge`];
/// [`LogSumExp::default`] is the identity (`log 0 = -inf`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x == f64::INFINITY || self.max == f64::INFINITY {
            self.max = f64::INFINITY;
            self.scaled = 1.0;
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn merge(mut self, other: LogSumExp) -> LogSumExp {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max == f64::NEG_INFINITY {
            return other;
        }
        if self.max == f64::INFINITY || other.max == f64::INFINITY {
            self.max = f64::INFINITY;
            self.scaled = 1.0;
            return self;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
        self
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY || self.max == f64::INFINITY {
            self.max
        } else {
            self.max + self.scaled.ln()
        }
    }
}

impl FromIterator<f64> for LogSumExp {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = LogSumExp::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// `log(exp(a) + exp(b))`.
pub fn log_add(a: f64, b: f64) -> f64 {
    [a, b].into_iter().collect::<LogSumExp>().value()
}
