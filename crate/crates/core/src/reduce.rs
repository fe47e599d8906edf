use rayon::prelude::*;

/// How per-row partial sums are combined.
///
/// `Ordered` evaluates rows in parallel but adds the partials sequentially in
/// row order, so results are bit-identical for any thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Ordered,
    Unordered,
}

impl Reduction {
    pub fn sum_rows<F>(self, rows: &[usize], row: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        match self {
            Reduction::Ordered => {
                let partials: Vec<f64> = rows.par_iter().map(|&i| row(i)).collect();
                partials.iter().sum()
            }
            Reduction::Unordered => rows.par_iter().map(|&i| row(i)).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_matches_sequential_sum_bitwise() {
        let rows: Vec<usize> = (0..10_000).collect();
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3_f64.powi((i % 7) as i32);
        let sequential: f64 = rows.iter().map(|&i| f(i)).sum();
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let got = pool.install(|| Reduction::Ordered.sum_rows(&rows, f));
            assert_eq!(got.to_bits(), sequential.to_bits());
        }
        let unordered = Reduction::Unordered.sum_rows(&rows, f);
        assert!((unordered - sequential).abs() < 1e-12);
    }
}
