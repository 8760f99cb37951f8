use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Mdp;
use crate::error::{Error, Result};

/// Moves in a gridworld; the discriminant is the action index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Left = 0,
    Right = 1,
    Up = 2,
    Down = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Left, Action::Right, Action::Up, Action::Down];

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Left => (0, -1),
            Action::Right => (0, 1),
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
        }
    }
}

/// `N x N` grid (or `height x N` when `height` is set) partitioned into
/// `n x n` macrocells, each carrying one one-hot feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridworldSpec {
    pub grid_size: usize,
    pub macrocell_size: usize,
    #[serde(default)]
    pub action_noise: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_weights: Option<Vec<f64>>,
    /// Number of rows; defaults to `grid_size`. `height = 1` gives a chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
}

impl GridworldSpec {
    pub fn square(grid_size: usize, macrocell_size: usize, gamma: f64) -> Self {
        GridworldSpec {
            grid_size,
            macrocell_size,
            action_noise: 0.0,
            gamma,
            reward_weights: None,
            height: None,
        }
    }

    /// The five-cell chain with actions restricted to left/right by the walls.
    pub fn chain(length: usize, gamma: f64) -> Self {
        GridworldSpec {
            grid_size: length,
            macrocell_size: 1,
            action_noise: 0.0,
            gamma,
            reward_weights: None,
            height: Some(1),
        }
    }

    pub fn height(&self) -> usize {
        self.height.unwrap_or(self.grid_size)
    }

    pub fn macrocells_per_row(&self) -> usize {
        self.grid_size / self.macrocell_size
    }

    pub fn n_features(&self) -> usize {
        self.macrocells_per_row() * (self.height() / self.macrocell_size)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, width, height) = (self.macrocell_size, self.grid_size, self.height());
        if width == 0 || height == 0 || n == 0 {
            return Err(Error::InvalidGridworld("sizes must be positive".into()));
        }
        // a chain is only divided along its length
        if width % n != 0 || (height > 1 && height % n != 0) || (height == 1 && n != 1) {
            return Err(Error::InvalidGridworld(format!(
                "macrocell size {n} does not divide grid {height}x{width}"
            )));
        }
        if !(0.0..=1.0).contains(&self.action_noise) {
            return Err(Error::InvalidGridworld(format!("action noise {} outside [0, 1]", self.action_noise)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidGridworld(format!("discount {} outside (0, 1)", self.gamma)));
        }
        if let Some(w) = &self.reward_weights {
            if w.len() != self.n_features() {
                return Err(Error::DimensionMismatch { expected: self.n_features(), got: w.len() });
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::NotUnitNorm(norm));
            }
        }
        Ok(())
    }
}

/// Builds the gridworld MDP. States are numbered row-major from the top-left
/// cell, macrocell features likewise. Off-grid moves are disallowed; with
/// action noise `p` the executed move is replaced, with probability `p`, by a
/// uniformly chosen allowed move.
pub fn build_gridworld(spec: &GridworldSpec) -> Result<Mdp> {
    spec.validate()?;
    let (width, height, n) = (spec.grid_size, spec.height(), spec.macrocell_size);
    let n_states = width * height;
    let n_actions = Action::ALL.len();
    let k = spec.n_features();
    let cells_per_row = spec.macrocells_per_row();

    let target = |r: usize, c: usize, a: Action| -> Option<usize> {
        let (dr, dc) = a.delta();
        let nr = r as isize + dr;
        let nc = c as isize + dc;
        (nr >= 0 && nc >= 0 && (nr as usize) < height && (nc as usize) < width)
            .then(|| nr as usize * width + nc as usize)
    };

    let mut transitions = Vec::with_capacity(n_states * n_actions);
    let mut allowed = Vec::with_capacity(n_states * n_actions);
    let mut features = DMatrix::zeros(n_states, k);
    for r in 0..height {
        for c in 0..width {
            let s = r * width + c;
            features[(s, (r / n) * cells_per_row + c / n)] = 1.0;
            let moves: Vec<Option<usize>> = Action::ALL.iter().map(|&a| target(r, c, a)).collect();
            let legal: Vec<usize> = moves.iter().flatten().copied().collect();
            for intended in &moves {
                let Some(intended) = *intended else {
                    transitions.push(Vec::new());
                    allowed.push(false);
                    continue;
                };
                let mut probs: Vec<(usize, f64)> = Vec::with_capacity(legal.len());
                let mut add = |t: usize, p: f64| {
                    if p == 0.0 {
                        return;
                    }
                    match probs.iter_mut().find(|(u, _)| *u == t) {
                        Some(entry) => entry.1 += p,
                        None => probs.push((t, p)),
                    }
                };
                add(intended, 1.0 - spec.action_noise);
                for &t in &legal {
                    add(t, spec.action_noise / legal.len() as f64);
                }
                transitions.push(probs);
                allowed.push(true);
            }
        }
    }
    let initial = DVector::from_element(n_states, 1.0 / n_states as f64);
    Mdp::new(n_states, n_actions, transitions, allowed, initial, spec.gamma, features)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_has_two_usable_actions() {
        let mdp = build_gridworld(&GridworldSpec::chain(5, 0.9)).unwrap();
        assert_eq!(mdp.n_states(), 5);
        assert_eq!(mdp.n_features(), 5);
        assert_eq!(mdp.allowed_actions(0).collect::<Vec<_>>(), vec![1]);
        assert_eq!(mdp.allowed_actions(2).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(mdp.allowed_actions(4).collect::<Vec<_>>(), vec![0]);
        assert_eq!(mdp.successors(2, 1), &[(3, 1.0)]);
    }

    #[test]
    fn small_grid_features_are_macrocell_one_hot() {
        let mdp = build_gridworld(&GridworldSpec::square(4, 2, 0.9)).unwrap();
        assert_eq!(mdp.n_states(), 16);
        assert_eq!(mdp.n_features(), 4);
        assert_eq!(mdp.features().row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0]);
        // cell (1, 2) lies in macrocell 1, cell (3, 3) in macrocell 3
        assert_eq!(mdp.features()[(6, 1)], 1.0);
        assert_eq!(mdp.features()[(15, 3)], 1.0);
        for s in 0..16 {
            assert_eq!(mdp.features().row(s).sum(), 1.0);
        }
        assert!(!mdp.is_allowed(0, Action::Up as usize));
        assert!(!mdp.is_allowed(0, Action::Left as usize));
        assert!(mdp.is_allowed(5, Action::Up as usize));
    }

    #[test]
    fn ten_by_ten_grid_has_hundred_features() {
        let spec = GridworldSpec::square(20, 2, 0.9);
        assert_eq!(spec.n_features(), 100);
        assert_eq!(build_gridworld(&spec).unwrap().n_features(), 100);
    }

    #[test]
    fn rejects_non_dividing_macrocells() {
        assert!(build_gridworld(&GridworldSpec::square(5, 2, 0.9)).is_err());
        let mut spec = GridworldSpec::square(4, 2, 0.9);
        spec.reward_weights = Some(vec![1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(build_gridworld(&spec), Err(Error::NotUnitNorm(_))));
    }

    #[test]
    fn noise_spreads_over_legal_moves() {
        let mut spec = GridworldSpec::square(3, 1, 0.9);
        spec.action_noise = 0.4;
        let mdp = build_gridworld(&spec).unwrap();
        // corner state 0: legal moves right (1) and down (3)
        let succ = mdp.successors(0, Action::Right as usize);
        let p = |t: usize| succ.iter().find(|(u, _)| *u == t).map_or(0.0, |e| e.1);
        assert!((p(1) - 0.8).abs() < 1e-15);
        assert!((p(3) - 0.2).abs() < 1e-15);
    }
}
