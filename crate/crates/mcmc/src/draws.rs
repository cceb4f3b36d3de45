//! Containers for posterior draws and run diagnostics.

/// Row-major draw matrix: `n_draws` rows, one column per endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub n_draws: usize,
    pub endpoints: usize,
    pub data: Vec<f64>,
}

impl Draws {
    pub fn zeros(n_draws: usize, endpoints: usize) -> Self {
        Self {
            n_draws,
            endpoints,
            data: vec![0.0; n_draws * endpoints],
        }
    }

    pub fn from_rows(endpoints: usize, rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut data = Vec::new();
        let mut n_draws = 0;
        for row in rows {
            assert_eq!(row.len(), endpoints, "row length differs from endpoint count");
            data.extend_from_slice(&row);
            n_draws += 1;
        }
        Self {
            n_draws,
            endpoints,
            data,
        }
    }

    pub fn get(&self, draw: usize, endpoint: usize) -> f64 {
        self.data[draw * self.endpoints + endpoint]
    }

    pub fn set(&mut self, draw: usize, endpoint: usize, value: f64) {
        self.data[draw * self.endpoints + endpoint] = value;
    }

    /// All draws of one endpoint, in draw order.
    pub fn column(&self, endpoint: usize) -> Vec<f64> {
        (0..self.n_draws).map(|t| self.get(t, endpoint)).collect()
    }

    /// True when every entry lies strictly inside (0, 1).
    pub fn all_in_unit_interval(&self) -> bool {
        self.data.iter().all(|&v| v > 0.0 && v < 1.0)
    }
}

/// Convergence and mixing summaries for one hierarchical run.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Potential scale reduction factor per current-control endpoint.
    pub rhat: Vec<f64>,
    /// Post-adaptation acceptance rate per (unit, endpoint), flattened
    /// unit-major, averaged over chains.
    pub acceptance: Vec<f64>,
    /// Smallest eigenvalue seen across all kept covariance draws.
    pub min_sigma_eigenvalue: f64,
    /// How many times the run restarted with a longer burn-in.
    pub restarts: u32,
}

/// Kept control draws from the hierarchical model plus diagnostics.
#[derive(Debug, Clone)]
pub struct ControlPosterior {
    /// `ψ` draws for the current control arm, one column per endpoint.
    pub draws: Draws,
    pub diagnostics: Diagnostics,
}

/// Paired control and treatment draws for the current trial.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub control: Draws,
    pub treatment: Draws,
    pub diagnostics: Diagnostics,
}

impl PosteriorDraws {
    /// Paired-draw invariant: equal draw counts and endpoint counts.
    pub fn is_paired(&self) -> bool {
        self.control.n_draws == self.treatment.n_draws
            && self.control.endpoints == self.treatment.endpoints
    }
}
