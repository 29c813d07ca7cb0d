"""Split a run into basis identification (Stage I) and local convergence (Stage II)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NeverStabilized
from .lp_core import OptimalCertificate
from .solver import SolveTrace, support_of


@dataclass
class StageSplit:
    stage1_iters: int
    stage2_iters: int
    boundary: int | None  # index into the checked iterates; None if never stable
    stabilized: bool
    support_history: list = field(default_factory=list, repr=False)

    @property
    def total(self) -> int:
        return self.stage1_iters + self.stage2_iters


def stage_boundary(supports, counts, theta) -> StageSplit:
    """Earliest iterate from which the support equals ``theta`` for good.

    ``supports[i]`` is the support at the i-th checked iterate and
    ``counts[i]`` the cumulative OnePDHG count when it was produced; the last
    count is the run total.
    """
    theta = frozenset(int(i) for i in theta)
    sets = [frozenset(int(i) for i in s) for s in supports]
    total = int(counts[-1]) if len(counts) else 0
    if not sets or sets[-1] != theta:
        split = StageSplit(total, 0, None, False, sets)
        raise NeverStabilized(
            f"support at termination has {len(sets[-1]) if sets else 0} entries and differs from the basis",
            split=split,
        )
    p = len(sets) - 1
    while p > 0 and sets[p - 1] == theta:
        p -= 1
    stage1 = int(counts[p])
    return StageSplit(stage1, total - stage1, p, True, sets)


def detect_stages(trace: SolveTrace, cert: OptimalCertificate, inner: bool = False) -> StageSplit:
    """Stage split on outer iterates ``z^{n,0}`` (n >= 1), or on every inner iterate."""
    if inner:
        if not trace.inner:
            raise ValueError("inner-iterate stage detection needs a full trace")
        supports = [support_of(rec.x) for rec in trace.inner]
        counts = np.arange(1, len(trace.inner) + 1)
        return stage_boundary(supports, counts, cert.basis)
    supports = [support_of(x) for x in trace.outer_x[1:]]
    counts = trace.cumulative_counts()[1:]
    if trace.pending:
        # an unfinished last loop counts towards the total but has no iterate
        counts = np.append(counts, counts[-1] + trace.pending if counts.size else trace.pending)
        supports.append(supports[-1] if supports else [])
    return stage_boundary(supports, counts, cert.basis)
