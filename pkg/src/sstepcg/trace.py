"""Per-iteration solve records shared by all solver variants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CgCoefficients:
    """The alpha/beta sequences of a CG run (all positive while healthy)."""

    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)

    def append(self, alpha, beta):
        self.alphas.append(float(alpha))
        self.betas.append(float(beta))

    def __len__(self):
        return len(self.alphas)


@dataclass
class SolveTrace:
    """One record per global iteration plus outer-loop bookkeeping.

    Residual columns are relative to ||b||; resid_gap is the absolute norm
    of (b - A x_i) - r_i. c_values holds the per-iteration error-ratio
    estimate, lambda_min/lambda_max the running Ritz estimates.
    """

    true_resid: list = field(default_factory=list)
    upd_resid: list = field(default_factory=list)
    resid_gap: list = field(default_factory=list)
    outer_marks: list = field(default_factory=list)
    s_schedule: list = field(default_factory=list)
    c_values: list = field(default_factory=list)
    psi: list = field(default_factory=list)
    lambda_min: list = field(default_factory=list)
    lambda_max: list = field(default_factory=list)
    converged: bool = False
    stagnated: bool = False
    diverged: bool = False
    total_iters: int = 0
    total_outer: int = 0
    outer_records: list = field(default_factory=list)

    def record_iteration(self, true_rel, upd_rel, gap, c_val, lmin, lmax, psi=float("nan")):
        self.true_resid.append(float(true_rel))
        self.upd_resid.append(float(upd_rel))
        self.resid_gap.append(float(gap))
        self.c_values.append(float(c_val))
        self.lambda_min.append(float(lmin))
        self.lambda_max.append(float(lmax))
        self.psi.append(float(psi))
        self.total_iters += 1

    def mark_outer(self, s_k):
        """Record the start of an outer loop spanning the next s_k iterations."""
        self.outer_marks.append(self.total_iters)
        self.s_schedule.append(int(s_k))
        self.total_outer += 1

    @property
    def final_true_resid(self):
        return self.true_resid[-1] if self.true_resid else np.inf

    @property
    def min_true_resid(self):
        return min(self.true_resid) if self.true_resid else np.inf

    def check_consistency(self):
        n = self.total_iters
        assert len(self.true_resid) == n
        assert len(self.upd_resid) == n
        assert len(self.resid_gap) == n
        assert len(self.c_values) == n
        assert all(b > a for a, b in zip(self.outer_marks, self.outer_marks[1:]))
        assert len(self.outer_marks) == self.total_outer == len(self.s_schedule)


# Shared run-control defaults.
STAGNATION_WINDOW = 200
DIVERGENCE_LIMIT = 1e5
