//! Slippery grid world.
//!
//! Cells are numbered row-major with row 0 at the top. Actions move east,
//! west, north or south. With probability `p_error` the chosen direction is
//! replaced by one drawn uniformly from all four. Moves off the grid leave
//! the agent in place. Every step costs `step_reward` plus the penalty of the
//! cell entered; entering the goal pays `goal_reward` instead and ends the
//! episode.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{MdpBuilder, TabularMdp, TableReward};

pub const EAST: usize = 0;
pub const WEST: usize = 1;
pub const NORTH: usize = 2;
pub const SOUTH: usize = 3;
pub const N_DIRECTIONS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyCell {
    pub cell: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridWorldConfig {
    pub width: usize,
    pub height: usize,
    pub start_cell: usize,
    pub goal_cell: usize,
    pub step_reward: f64,
    pub goal_reward: f64,
    pub penalty_cells: Vec<PenaltyCell>,
    pub p_error: f64,
    /// Truncation length for sampled episodes.
    pub max_steps: usize,
}

impl Default for GridWorldConfig {
    /// 4×4 grid, start bottom-left, goal top-right, a −20 cell one step off the
    /// diagonal and −6 cells next to the start of the two edge routes.
    fn default() -> Self {
        Self {
            width: 4,
            height: 4,
            start_cell: 12,
            goal_cell: 3,
            step_reward: -1.0,
            goal_reward: 1.0,
            penalty_cells: vec![
                PenaltyCell { cell: 10, reward: -20.0 },
                PenaltyCell { cell: 1, reward: -6.0 },
                PenaltyCell { cell: 4, reward: -6.0 },
            ],
            p_error: 0.5,
            max_steps: 500,
        }
    }
}

impl GridWorldConfig {
    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn row_col(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    pub fn chebyshev_distance(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.row_col(a);
        let (rb, cb) = self.row_col(b);
        ra.abs_diff(rb).max(ca.abs_diff(cb))
    }

    /// Cell reached by moving `dir` from `cell`, staying put at walls.
    pub fn neighbour(&self, cell: usize, dir: usize) -> usize {
        let (r, c) = self.row_col(cell);
        let (r, c) = match dir {
            EAST if c + 1 < self.width => (r, c + 1),
            WEST if c > 0 => (r, c - 1),
            NORTH if r > 0 => (r - 1, c),
            SOUTH if r + 1 < self.height => (r + 1, c),
            _ => (r, c),
        };
        r * self.width + c
    }

    /// Cells with the most severe penalty.
    pub fn worst_cells(&self) -> Vec<usize> {
        let worst = self.penalty_cells.iter().map(|p| p.reward).fold(f64::INFINITY, f64::min);
        self.penalty_cells.iter().filter(|p| p.reward == worst).map(|p| p.cell).collect()
    }

    /// Reward for entering `cell`.
    pub fn entry_reward(&self, cell: usize) -> f64 {
        if cell == self.goal_cell {
            return self.goal_reward;
        }
        self.step_reward
            + self.penalty_cells.iter().filter(|p| p.cell == cell).map(|p| p.reward).sum::<f64>()
    }

    fn kernel(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.n_cells();
        (0..n)
            .map(|s| {
                (0..N_DIRECTIONS)
                    .map(|a| {
                        let mut row = vec![0.0; n];
                        if s == self.goal_cell {
                            row[s] = 1.0;
                            return row;
                        }
                        row[self.neighbour(s, a)] += 1.0 - self.p_error;
                        for d in 0..N_DIRECTIONS {
                            row[self.neighbour(s, d)] += self.p_error / N_DIRECTIONS as f64;
                        }
                        row
                    })
                    .collect()
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_cells();
        if n == 0 {
            return Err(Error::Validation("grid must have positive width and height".into()));
        }
        if self.start_cell >= n || self.goal_cell >= n {
            return Err(Error::Validation("start or goal cell outside the grid".into()));
        }
        if !(0.0..=1.0).contains(&self.p_error) {
            return Err(Error::Validation(format!("p_error {} outside [0, 1]", self.p_error)));
        }
        if self.max_steps == 0 {
            return Err(Error::Validation("max_steps must be positive".into()));
        }
        if let Some(p) = self.penalty_cells.iter().find(|p| p.cell >= n || p.cell == self.goal_cell)
        {
            return Err(Error::Validation(format!("penalty cell {} is invalid", p.cell)));
        }
        let mut seen = vec![false; n];
        seen[self.start_cell] = true;
        let mut queue = VecDeque::from([self.start_cell]);
        while let Some(s) = queue.pop_front() {
            if s == self.goal_cell {
                continue;
            }
            for d in 0..N_DIRECTIONS {
                let t = self.neighbour(s, d);
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        if let Some(c) = seen.iter().position(|v| !v) {
            return Err(Error::Validation(format!("cell {c} is unreachable from the start")));
        }
        Ok(())
    }

    pub fn build_mdp(&self) -> Result<TabularMdp> {
        self.validate()?;
        let n = self.n_cells();
        let mut values = Vec::with_capacity(n * N_DIRECTIONS * n);
        for s in 0..n {
            for _ in 0..N_DIRECTIONS {
                for next in 0..n {
                    values.push(if s == self.goal_cell { 0.0 } else { self.entry_reward(next) });
                }
            }
        }
        let reward = TableReward::new(n, N_DIRECTIONS, values)?;
        MdpBuilder::new(self.kernel(), Arc::new(reward))
            .start_state(self.start_cell)
            .terminal(vec![self.goal_cell])
            .build()
    }
}
