"""
Lifespan scans: observed escape time from the ball of radius 2*delta in the
|.|_{s1,R} norm against the predicted T_good, over a grid of (eps, s1).
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import config
from exceptions import AdmissibilityError, ConfigError
from lab import gen_initial_data, t_good, with_horizon
from nls_solver import NormSet, integrate

logger = logging.getLogger(__name__)

CELL_STATUSES = ('escaped', 'no_escape', 'infeasible', 'numeric_abort')
LIFESPAN_COLUMNS = ('index', 'eps', 's1', 's', 't_good', 'horizon', 'status', 'escape_time',
                    'delta', 'radius', 'tail_fraction_max', 'tail_flag', 'passed', 'note')


@dataclass
class LifespanCell:
    index: int
    eps: float
    s1: float
    s: float
    t_good: float
    horizon: float
    status: str
    escape_time: Optional[float] = None
    delta: Optional[float] = None
    radius: Optional[float] = None
    tail_fraction_max: float = 0.0
    tail_flag: bool = False
    note: str = ''

    @property
    def feasible(self):
        return self.status != 'infeasible'

    @property
    def passed(self):
        """Escape, if any, happens no earlier than T_good."""
        if self.status == 'escaped':
            return self.escape_time >= self.t_good
        return self.status == 'no_escape'

    @property
    def observed(self):
        """Escape time, or inf when the run reached its horizon inside the ball."""
        return self.escape_time if self.status == 'escaped' else math.inf

    def to_row(self):
        row = asdict(self)
        row['passed'] = int(self.passed) if self.feasible else ''
        row['tail_flag'] = int(self.tail_flag)
        row['escape_time'] = '' if self.escape_time is None else repr(self.escape_time)
        return row


@dataclass
class LifespanTable:
    cells: list

    @property
    def feasible_cells(self):
        return [c for c in self.cells if c.feasible]

    @property
    def passed(self):
        """Every feasible cell passes; a table without feasible cells does not."""
        feasible = self.feasible_cells
        return bool(feasible) and all(c.passed for c in feasible)

    @property
    def aborted(self):
        return any(c.status == 'numeric_abort' for c in self.cells)

    def monotone_in_s1(self):
        """Observed escape time is nondecreasing in s1 at every fixed eps."""
        by_eps = {}
        for cell in self.feasible_cells:
            by_eps.setdefault(cell.eps, []).append(cell)
        for cells in by_eps.values():
            cells.sort(key=lambda c: c.s1)
            times = [c.observed for c in cells]
            if any(later < earlier for earlier, later in zip(times, times[1:])):
                return False
        return True

    def to_csv(self, path):
        with open(str(path), 'w', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=list(LIFESPAN_COLUMNS))
            writer.writeheader()
            for cell in self.cells:
                writer.writerow(cell.to_row())
        return path


def cell_config(cfg, eps, s1):
    """cfg at (eps, s1), raising s to s1 + 1 when needed."""
    return cfg.with_overrides(eps=eps, s1=s1, s=max(cfg.s, s1 + 1))


def run_cell(cfg, eps, s1, horizon_factor, index=0):
    """
    Integrate admissible data at (eps, s1) up to horizon_factor*T_good.

    Returns:
        LifespanCell: Observed escape time or 'no_escape'; 'infeasible' when no
        admissible data exist at these parameters
    """
    try:
        cell_cfg = cell_config(cfg, eps, s1)
        clock = t_good(cell_cfg)
        cell_cfg = with_horizon(cell_cfg, horizon_factor)
        u0, report = gen_initial_data(cell_cfg.data, cell_cfg, strict=True)
    except (AdmissibilityError, ConfigError) as exc:
        logger.warning("cell eps=%g s1=%g is infeasible: %s", eps, s1, exc)
        s = max(cfg.s, s1 + 1)
        return LifespanCell(index, eps, s1, s, math.nan, math.nan, 'infeasible', note=str(exc))

    radius = 2.0 * report.delta
    norms = NormSet(cell_cfg.s0, cell_cfg.s1, cell_cfg.s, cell_cfg.R, cutoff=cell_cfg.cutoff)
    traj = integrate(u0, cell_cfg.solver, norms, escape_radius=radius)

    tail = float(max(traj.column('tail_fraction'), default=0.0))
    flagged = tail > config.TAIL_MASS_LIMIT
    if flagged:
        logger.warning("cell eps=%g s1=%g: tail mass fraction %.3e above %.0e; truncation may "
                       "bias the escape time", eps, s1, tail, config.TAIL_MASS_LIMIT)
    status = {'escaped': 'escaped', 'completed': 'no_escape'}.get(traj.status, traj.status)
    cell = LifespanCell(index, eps, s1, cell_cfg.s, clock, cell_cfg.solver.t_end, status,
                        escape_time=traj.escape_time, delta=report.delta, radius=radius,
                        tail_fraction_max=tail, tail_flag=flagged)
    logger.info("cell eps=%g s1=%g: %s (T_good=%.4g, escape=%s)", eps, s1, status, clock,
                traj.escape_time)
    return cell


def lifespan_scan(cfg, eps_values=None, s1_values=None, horizon_factor=None, threads=1):
    """
    Scan escape times over the (eps, s1) grid.

    Cells run independently, in parallel when threads > 1, and are returned
    in grid order (eps outer, s1 inner).

    Args:
        cfg (ExperimentConfig): Base configuration
        eps_values (tuple): Smallness levels, default cfg.lifespan.eps_values
        s1_values (tuple): Low regularities, default cfg.lifespan.s1_values
        horizon_factor (float): Horizon in units of T_good, default cfg.lifespan.horizon_factor
        threads (int): Worker threads

    Returns:
        LifespanTable: One cell per grid point
    """
    settings = cfg.lifespan
    eps_values = settings.eps_values if eps_values is None else tuple(eps_values)
    s1_values = settings.s1_values if s1_values is None else tuple(s1_values)
    horizon_factor = settings.horizon_factor if horizon_factor is None else horizon_factor
    grid = [(eps, s1) for eps in eps_values for s1 in s1_values]
    logger.info("lifespan scan over %d cells with horizon %g T_good", len(grid), horizon_factor)

    def work(item):
        index, (eps, s1) = item
        return run_cell(cfg, eps, s1, horizon_factor, index)

    if threads <= 1:
        cells = [work(item) for item in enumerate(grid)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(work, enumerate(grid)))
    table = LifespanTable(cells)
    if not table.passed:
        logger.warning("lifespan scan has cells escaping before T_good or no feasible cell")
    return table
