//! Depth-first enumeration of every valid completion of a uniform tree.

use std::collections::VecDeque;

use crate::grammar::RuleId;
use crate::program::Program;
use crate::solver::{Solver, SolverError, StateToken, Stats};
use crate::tree::{NodeId, ProgramTree};

#[derive(Debug)]
struct Frame {
    hole: NodeId,
    values: Vec<RuleId>,
    next: usize,
    token: StateToken,
}

#[derive(Debug)]
pub struct UniformSolver {
    solver: Solver,
    base: Option<StateToken>,
    stack: Vec<Frame>,
    started: bool,
    exhausted: bool,
}

impl UniformSolver {
    /// Takes over a solver whose tree is uniform. Its local constraints are
    /// kept; a deferred solver gets its constraints posted here.
    pub fn new(mut solver: Solver) -> Result<Self, SolverError> {
        if !solver.tree().is_uniform() {
            return Err(SolverError::NotUniform);
        }
        solver.activate();
        let base = solver.save_state();
        Ok(UniformSolver {
            solver,
            base: Some(base),
            stack: Vec::new(),
            started: false,
            exhausted: false,
        })
    }

    pub fn tree(&self) -> &ProgramTree {
        self.solver.tree()
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    pub fn take_stats(&mut self) -> Stats {
        self.solver.take_stats()
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Number of nodes of every completion.
    pub fn program_size(&self) -> usize {
        self.solver.tree().size()
    }

    /// Moves to the next valid assignment; false once exhausted, after which
    /// the tree is back to its state at construction.
    pub fn advance(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        if !self.started {
            self.started = true;
            if self.solver.is_feasible() && self.descend() {
                return true;
            }
        }
        while let Some(frame) = self.stack.last_mut() {
            let hole = frame.hole;
            self.solver.load_state(frame.token).expect("frames restore in LIFO order");
            if frame.next == frame.values.len() {
                self.stack.pop();
                continue;
            }
            let v = frame.values[frame.next];
            frame.next += 1;
            frame.token = self.solver.save_state();
            self.solver.remove_all_but(hole, &[v]).expect("decision holes are open");
            if self.solver.is_feasible() && self.descend() {
                return true;
            }
        }
        self.exhausted = true;
        if let Some(base) = self.base.take() {
            self.solver.load_state(base).expect("base token is the oldest");
        }
        false
    }

    pub fn next_solution(&mut self) -> Option<Program> {
        if self.advance() {
            Some(self.solver.tree().to_program().expect("assignment is complete"))
        } else {
            None
        }
    }

    /// Exhausts the solver, returning the number of solutions left.
    pub fn count_remaining(&mut self) -> u64 {
        let mut n = 0;
        while self.advance() {
            n += 1;
        }
        n
    }

    // Fixes holes to their smallest value until the tree is complete.
    fn descend(&mut self) -> bool {
        loop {
            if !self.solver.is_feasible() {
                return false;
            }
            let Some(hole) = self.pick_hole() else {
                return true;
            };
            let values = self.solver.tree().domain(hole).sorted();
            let token = self.solver.save_state();
            self.stack.push(Frame {
                hole,
                values: values.clone(),
                next: 1,
                token,
            });
            self.solver.remove_all_but(hole, &[values[0]]).expect("decision holes are open");
        }
    }

    // Shallowest, then leftmost, hole with more than one value.
    fn pick_hole(&self) -> Option<NodeId> {
        let t = self.solver.tree();
        let mut queue = VecDeque::from([t.root()]);
        while let Some(n) = queue.pop_front() {
            if t.domain(n).len() > 1 {
                return Some(n);
            }
            queue.extend(t.children(n).iter().copied());
        }
        None
    }
}

impl Iterator for UniformSolver {
    type Item = Program;

    fn next(&mut self) -> Option<Program> {
        self.next_solution()
    }
}
