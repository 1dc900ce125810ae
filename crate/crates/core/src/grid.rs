//! Uniform output time grid shared by every transient series.

/// A uniform time grid `t_k = k * dt` for `k = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    dt: f64,
    n_points: usize,
}

impl UniformGrid {
    /// Grid covering `[0, t_end]` with spacing `dt_out`; the number of points
    /// is `floor(t_end / dt_out) + 1`.
    pub fn from_span(t_end: f64, dt_out: f64) -> Self {
        assert!(t_end > 0.0 && dt_out > 0.0 && dt_out < t_end);
        let n_steps = (t_end / dt_out).floor() as usize;
        UniformGrid {
            dt: dt_out,
            n_points: n_steps + 1,
        }
    }

    pub fn with_points(dt: f64, n_points: usize) -> Self {
        assert!(dt > 0.0 && n_points >= 2);
        UniformGrid { dt, n_points }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_points - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.time(k)).collect()
    }

    /// Checks that a sampled time column is this grid within a relative jitter.
    pub fn matches(&self, times: &[f64], rel_jitter: f64) -> bool {
        if times.len() != self.n_points {
            return false;
        }
        let scale = self.dt.abs().max(1e-300);
        times
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - self.time(k)).abs() <= rel_jitter * scale.max(t.abs()))
    }

    /// Infers a uniform grid from a time column, rejecting non-uniform spacing.
    pub fn infer(times: &[f64], rel_jitter: f64) -> Option<Self> {
        if times.len() < 2 {
            return None;
        }
        let dt = times[1] - times[0];
        if dt <= 0.0 {
            return None;
        }
        let grid = UniformGrid {
            dt,
            n_points: times.len(),
        };
        // offset grids (t0 != 0) are not used anywhere in the pipeline
        if times[0].abs() > rel_jitter * dt {
            return None;
        }
        if grid.matches(times, rel_jitter) {
            Some(grid)
        } else {
            None
        }
    }
}

/// Cumulative trapezoid integral of `values` on a uniform grid.
pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Trapezoid integral over the whole series.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    dt * (0.5 * values[0] + interior + 0.5 * values[values.len() - 1])
}
