//! Tower of Hanoi with three pegs.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{TerminationCause, Transition};

pub const ACTION_LABELS: [&str; 6] = [
    "move disk from A to B",
    "move disk from A to C",
    "move disk from B to A",
    "move disk from B to C",
    "move disk from C to A",
    "move disk from C to B",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Peg {
    A,
    B,
    C,
}

impl Peg {
    pub const ALL: [Peg; 3] = [Peg::A, Peg::B, Peg::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> char {
        match self {
            Peg::A => 'A',
            Peg::B => 'B',
            Peg::C => 'C',
        }
    }

    pub fn from_label(c: char) -> Option<Peg> {
        match c {
            'A' => Some(Peg::A),
            'B' => Some(Peg::B),
            'C' => Some(Peg::C),
            _ => None,
        }
    }

    /// The peg that is neither `self` nor `other`.
    pub fn third(self, other: Peg) -> Peg {
        Peg::ALL
            .into_iter()
            .find(|p| *p != self && *p != other)
            .expect("three pegs")
    }
}

impl fmt::Display for Peg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub from: Peg,
    pub to: Peg,
}

impl Move {
    pub fn new(from: Peg, to: Peg) -> Self {
        Self { from, to }
    }

    /// 1-based index into [`ACTION_LABELS`].
    pub fn action_index(self) -> usize {
        let to_slot = |from: Peg, to: Peg| {
            Peg::ALL
                .into_iter()
                .filter(|p| *p != from)
                .position(|p| p == to)
                .expect("distinct pegs")
        };
        self.from.index() * 2 + to_slot(self.from, self.to) + 1
    }

    pub fn from_action_index(index: usize) -> Option<Move> {
        if !(1..=6).contains(&index) {
            return None;
        }
        let from = Peg::ALL[(index - 1) / 2];
        let to = Peg::ALL
            .into_iter()
            .filter(|p| *p != from)
            .nth((index - 1) % 2)?;
        Some(Move { from, to })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IllegalMove {
    #[error("source peg is empty")]
    EmptySource,
    #[error("cannot place a larger disk on a smaller one")]
    LargerOnSmaller,
    #[error("source and destination are the same peg")]
    SamePeg,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid Hanoi state: {0}")]
pub struct InvalidHanoiState(pub String);

/// Pegs hold disk ids bottom-first; disk 0 is the smallest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HanoiState {
    pegs: [Vec<u8>; 3],
    goal: Peg,
}

impl HanoiState {
    /// All `n_disks` disks on peg A, goal peg C.
    pub fn initial(n_disks: u8) -> Self {
        Self {
            pegs: [(0..n_disks).rev().collect(), Vec::new(), Vec::new()],
            goal: Peg::C,
        }
    }

    pub fn from_pegs(pegs: [Vec<u8>; 3], goal: Peg) -> Result<Self, InvalidHanoiState> {
        let state = Self { pegs, goal };
        state.check()?;
        Ok(state)
    }

    fn check(&self) -> Result<(), InvalidHanoiState> {
        let n = self.n_disks();
        let mut seen = vec![false; n];
        for (peg, stack) in Peg::ALL.iter().zip(&self.pegs) {
            for window in stack.windows(2) {
                if window[0] <= window[1] {
                    return Err(InvalidHanoiState(format!(
                        "peg {peg} is not strictly decreasing from bottom to top"
                    )));
                }
            }
            for &disk in stack {
                let slot = seen.get_mut(disk as usize).ok_or_else(|| {
                    InvalidHanoiState(format!("disk {disk} out of range for {n} disks"))
                })?;
                if *slot {
                    return Err(InvalidHanoiState(format!("disk {disk} appears twice")));
                }
                *slot = true;
            }
        }
        Ok(())
    }

    pub fn n_disks(&self) -> usize {
        self.pegs.iter().map(Vec::len).sum()
    }

    pub fn goal(&self) -> Peg {
        self.goal
    }

    pub fn peg(&self, peg: Peg) -> &[u8] {
        &self.pegs[peg.index()]
    }

    pub fn pegs(&self) -> &[Vec<u8>; 3] {
        &self.pegs
    }

    pub fn top(&self, peg: Peg) -> Option<u8> {
        self.pegs[peg.index()].last().copied()
    }

    pub fn peg_of(&self, disk: u8) -> Option<Peg> {
        Peg::ALL
            .into_iter()
            .find(|p| self.pegs[p.index()].contains(&disk))
    }

    pub fn is_solved(&self) -> bool {
        self.pegs[self.goal.index()].len() == self.n_disks()
    }

    /// Number of disks correctly seated on the goal peg, counted from the
    /// largest disk upward.
    pub fn disks_in_place(&self) -> usize {
        let n = self.n_disks();
        self.pegs[self.goal.index()]
            .iter()
            .enumerate()
            .take_while(|(i, &disk)| disk as usize == n - 1 - i)
            .count()
    }

    /// Partial-credit score in `[0, 1]`.
    pub fn progress(&self) -> f64 {
        let n = self.n_disks();
        if n == 0 {
            return 1.0;
        }
        self.disks_in_place() as f64 / n as f64
    }

    pub fn apply(&self, mv: Move) -> Result<HanoiState, IllegalMove> {
        if mv.from == mv.to {
            return Err(IllegalMove::SamePeg);
        }
        let disk = self.top(mv.from).ok_or(IllegalMove::EmptySource)?;
        if let Some(under) = self.top(mv.to) {
            if under < disk {
                return Err(IllegalMove::LargerOnSmaller);
            }
        }
        let mut next = self.clone();
        next.pegs[mv.from.index()].pop();
        next.pegs[mv.to.index()].push(disk);
        Ok(next)
    }

    pub(crate) fn step_action(&mut self, action_index: usize) -> Transition {
        let mv = Move::from_action_index(action_index).expect("index checked by Env");
        match self.apply(mv) {
            Ok(next) => {
                let before = self.disks_in_place() as f64;
                let after = next.disks_in_place() as f64;
                let n = self.n_disks() as f64;
                *self = next;
                Transition {
                    reward: (after - before) / n,
                    cause: if self.is_solved() {
                        TerminationCause::GoalReached
                    } else {
                        TerminationCause::None
                    },
                }
            }
            // An illegal attempt costs the timestep and nothing else.
            Err(_) => Transition {
                reward: 0.0,
                cause: TerminationCause::None,
            },
        }
    }

    /// Every legal arrangement of `n_disks` disks (3^n states).
    pub fn enumerate(n_disks: u8, goal: Peg) -> Vec<HanoiState> {
        let total = 3usize.pow(n_disks as u32);
        (0..total)
            .map(|mut code| {
                let mut pegs: [Vec<u8>; 3] = Default::default();
                let mut placement = Vec::with_capacity(n_disks as usize);
                for _ in 0..n_disks {
                    placement.push(code % 3);
                    code /= 3;
                }
                // Push largest first so each stack is bottom-first.
                for disk in (0..n_disks).rev() {
                    pegs[placement[disk as usize]].push(disk);
                }
                HanoiState { pegs, goal }
            })
            .collect()
    }
}

/// Next move of the recursive solution from any legal state, or `None` when
/// the state is already solved. Following it from any state reaches the goal
/// in the minimum number of moves.
pub fn optimal_move(state: &HanoiState) -> Option<Move> {
    fn next(state: &HanoiState, disk: u8, target: Peg) -> Option<Move> {
        let at = state.peg_of(disk).expect("every disk is on a peg");
        if at == target {
            return if disk == 0 {
                None
            } else {
                next(state, disk - 1, target)
            };
        }
        let spare = at.third(target);
        let smaller_parked = (0..disk).all(|d| state.peg_of(d) == Some(spare));
        if smaller_parked {
            Some(Move::new(at, target))
        } else {
            next(state, disk - 1, spare)
        }
    }
    let n = state.n_disks();
    if n == 0 || state.is_solved() {
        return None;
    }
    next(state, (n - 1) as u8, state.goal())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(a: &[u8], b: &[u8], c: &[u8]) -> HanoiState {
        HanoiState::from_pegs([a.to_vec(), b.to_vec(), c.to_vec()], Peg::C).unwrap()
    }

    #[test]
    fn smallest_disk_moves_to_c() {
        let next = HanoiState::initial(3)
            .apply(Move::new(Peg::A, Peg::C))
            .unwrap();
        assert_eq!(next, st(&[2, 1], &[], &[0]));
    }

    #[test]
    fn illegal_moves_report_reason() {
        let s = st(&[2, 1], &[], &[0]);
        assert_eq!(
            s.apply(Move::new(Peg::A, Peg::C)),
            Err(IllegalMove::LargerOnSmaller)
        );
        assert_eq!(
            s.apply(Move::new(Peg::B, Peg::A)),
            Err(IllegalMove::EmptySource)
        );
        assert_eq!(s.apply(Move::new(Peg::A, Peg::A)), Err(IllegalMove::SamePeg));
    }

    #[test]
    fn action_indices_round_trip() {
        for i in 1..=6 {
            let mv = Move::from_action_index(i).unwrap();
            assert_eq!(mv.action_index(), i);
            assert_eq!(
                ACTION_LABELS[i - 1],
                format!("move disk from {} to {}", mv.from, mv.to)
            );
        }
        assert!(Move::from_action_index(0).is_none());
        assert!(Move::from_action_index(7).is_none());
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(HanoiState::from_pegs([vec![1, 2], vec![0], vec![]], Peg::C).is_err());
        assert!(HanoiState::from_pegs([vec![2, 1], vec![1], vec![]], Peg::C).is_err());
        assert!(HanoiState::from_pegs([vec![3, 1], vec![0], vec![]], Peg::C).is_err());
    }

    #[test]
    fn enumeration_covers_27_distinct_states() {
        let all = HanoiState::enumerate(3, Peg::C);
        assert_eq!(all.len(), 27);
        for (i, s) in all.iter().enumerate() {
            s.check().unwrap();
            assert!(all[..i].iter().all(|t| t != s));
        }
    }

    #[test]
    fn partial_credit_counts_from_largest_disk() {
        assert_eq!(st(&[1, 0], &[], &[2]).progress(), 1.0 / 3.0);
        assert_eq!(st(&[2, 1], &[], &[0]).progress(), 0.0);
        assert_eq!(st(&[0], &[], &[2, 1]).progress(), 2.0 / 3.0);
        assert_eq!(st(&[], &[], &[2, 1, 0]).progress(), 1.0);
    }

    #[test]
    fn optimal_policy_first_move_and_solved_signal() {
        assert_eq!(
            optimal_move(&HanoiState::initial(3)),
            Some(Move::new(Peg::A, Peg::C))
        );
        assert_eq!(optimal_move(&st(&[], &[], &[2, 1, 0])), None);
    }

    #[test]
    fn optimal_policy_solves_in_two_to_the_n_minus_one() {
        for n in 1..=6u8 {
            let mut s = HanoiState::initial(n);
            let mut moves = 0;
            while let Some(mv) = optimal_move(&s) {
                s = s.apply(mv).unwrap();
                moves += 1;
            }
            assert!(s.is_solved());
            assert_eq!(moves, (1 << n) - 1);
        }
    }
}
