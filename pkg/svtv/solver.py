"""Base class for optimization solvers."""

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from numpy.typing import ArrayLike

from .problem import Problem


class Status(Enum):
    """Optimization solver status."""

    RUNNING = "running"
    OPTIMAL = "optimal"
    PDG = "pdg"
    REL_CHANGE = "rel_change"
    ITER_LIMIT = "max_iter"
    ERROR = "error"


TRACE_COLUMNS = ["iter", "objective", "fit", "reg", "pdg", "rel_change", "wall_ms"]


@dataclass
class SolverTrace:
    """Per-iteration diagnostics of a solve.

    Attributes
    ----------
    records : list
        One dict per completed iteration with keys `iter`, `objective`,
        `fit`, `reg`, `pdg`, `rel_change`, `wall_ms` and, when a reference
        image was given, `re`.
    termination : Status
        Why the solver stopped.
    """

    records: list = field(default_factory=list)
    termination: Status = Status.RUNNING

    def __len__(self):
        return len(self.records)

    def column(self, key: str) -> list:
        return [record[key] for record in self.records]

    def write_csv(self, path, with_time: bool = True) -> None:
        columns = TRACE_COLUMNS if with_time else TRACE_COLUMNS[:-1]
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for record in self.records:
                writer.writerow([_format(record[c]) for c in columns])


def _format(value) -> str:
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


@dataclass
class Result:
    """Optimization solver result.

    Attributes
    ----------
    status : Status
        The solver status.
    solution : ArrayLike
        The solution.
    objective_value : float
        The objective value.
    solve_time : float
        The solve time.
    iterations : int
        The number of iterations.
    trace : SolverTrace
        The solver trace.
    """

    status: Status
    solution: ArrayLike
    objective_value: float
    solve_time: float
    iterations: int
    trace: SolverTrace

    def __repr__(self):
        s = "\n".join(
            [
                "Result",
                f"  status: {self.status}",
                f"  value : {self.objective_value}",
                f"  time  : {self.solve_time}",
                f"  iter  : {self.iterations}",
            ]
        )
        return s


class Solver(ABC):
    """Base class for optimization solvers."""

    @abstractmethod
    def solve(self, problem: Problem) -> Result:
        """
        Solve an optimization problem.

        Parameters
        ----------
        problem : Problem
            The optimization problem to solve.

        Returns
        -------
        Result
            The solver result.
        """
        pass
