//! Composite Gauss–Legendre panels and Richardson extrapolation.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

/// Gauss–Legendre rule on `[-1, 1]` applied panel by panel.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pairs: Vec<(f64, f64)>,
}

impl PanelRule {
    pub fn new(nodes_per_panel: usize) -> Self {
        let degree = NonZeroUsize::new(nodes_per_panel.max(1)).unwrap();
        let rule = GaussLegendre::new(degree);
        Self {
            pairs: rule.as_node_weight_pairs().to_vec(),
        }
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.pairs.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    /// Integral of `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for i in 0..panels {
            let lo = a + width * i as f64;
            let hi = if i + 1 == panels { b } else { lo + width };
            total += self.mapped(lo, hi).map(|(x, w)| w * f(x)).sum::<f64>();
        }
        total
    }

    /// Integral of a complex integrand over `[a, b]` with panels of width at most `max_width`.
    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(
        &self,
        a: f64,
        b: f64,
        max_width: f64,
        mut f: F,
    ) -> Complex64 {
        if b <= a {
            return Complex64::new(0.0, 0.0);
        }
        let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
        let width = (b - a) / panels as f64;
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..panels {
            let lo = a + width * i as f64;
            let hi = if i + 1 == panels { b } else { lo + width };
            for (x, w) in self.mapped(lo, hi) {
                total += f(x) * w;
            }
        }
        total
    }
}

/// Richardson extrapolation of a sequence computed at step sizes `h, h/2, h/4, …`
/// assuming an error expansion in integer powers of `h`.
///
/// Returns the extrapolated value and the magnitude of the last correction.
pub fn richardson(seq: &[Complex64]) -> (Complex64, f64) {
    assert!(!seq.is_empty(), "richardson needs at least one term");
    let mut row: Vec<Complex64> = seq.to_vec();
    let mut last_change = f64::INFINITY;
    let mut factor = 1.0;
    while row.len() > 1 {
        factor *= 2.0;
        let next: Vec<Complex64> = row
            .windows(2)
            .map(|w| (w[1] * factor - w[0]) / (factor - 1.0))
            .collect();
        if next.len() == 1 {
            last_change = (next[0] - row[row.len() - 1]).norm();
        }
        row = next;
    }
    if seq.len() == 1 {
        last_change = f64::INFINITY;
    }
    (row[0], last_change)
}
