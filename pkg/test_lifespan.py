"""
Tests for lifespan scans.
"""

import csv
import math
import os
import sys
import tempfile
import unittest
from unittest.mock import patch

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from lab import ExperimentConfig, LifespanSettings
from lifespan import LIFESPAN_COLUMNS, LifespanCell, LifespanTable, cell_config, lifespan_scan, run_cell


def cell(index, eps, s1, status, escape_time=None, t_good=1.0):
    return LifespanCell(index, eps, s1, s1 + 1, t_good, 2 * t_good, status, escape_time=escape_time)


class TestLifespanCell(unittest.TestCase):
    """Test the LifespanCell class."""

    def test_pass_rule(self):
        """Test escapes before T_good fail and late or absent escapes pass."""
        self.assertTrue(cell(0, 0.1, 3, 'escaped', escape_time=1.5).passed)
        self.assertTrue(cell(0, 0.1, 3, 'escaped', escape_time=1.0).passed)
        self.assertFalse(cell(0, 0.1, 3, 'escaped', escape_time=0.5).passed)
        self.assertTrue(cell(0, 0.1, 3, 'no_escape').passed)
        self.assertFalse(cell(0, 0.1, 3, 'numeric_abort').passed)

    def test_observed_time(self):
        """Test a run without escape reports an infinite escape time."""
        self.assertEqual(cell(0, 0.1, 3, 'no_escape').observed, math.inf)
        self.assertEqual(cell(0, 0.1, 3, 'escaped', escape_time=0.7).observed, 0.7)

    def test_row(self):
        """Test the CSV row of an infeasible cell."""
        row = LifespanCell(0, 0.1, 3, 4, math.nan, math.nan, 'infeasible').to_row()
        self.assertEqual(row['passed'], '')
        self.assertEqual(row['escape_time'], '')
        self.assertEqual(set(row), set(LIFESPAN_COLUMNS))


class TestLifespanTable(unittest.TestCase):
    """Test the LifespanTable class."""

    def test_passed_needs_feasible_cells(self):
        """Test an all-infeasible table does not pass."""
        table = LifespanTable([cell(0, 0.1, 3, 'infeasible')])
        self.assertFalse(table.passed)
        table = LifespanTable([cell(0, 0.1, 3, 'infeasible'), cell(1, 0.1, 4, 'no_escape')])
        self.assertTrue(table.passed)
        self.assertEqual(len(table.feasible_cells), 1)

    def test_aborted(self):
        """Test a numeric abort is visible on the table."""
        table = LifespanTable([cell(0, 0.1, 3, 'numeric_abort'), cell(1, 0.1, 4, 'no_escape')])
        self.assertTrue(table.aborted)
        self.assertFalse(table.passed)

    def test_monotone_in_s1(self):
        """Test the escape time ordering along s1 at fixed eps."""
        good = LifespanTable([
            cell(0, 0.1, 3, 'escaped', escape_time=1.2),
            cell(1, 0.1, 4, 'escaped', escape_time=1.5),
            cell(2, 0.1, 5, 'no_escape'),
            cell(3, 0.05, 3, 'escaped', escape_time=9.0),
        ])
        self.assertTrue(good.monotone_in_s1())
        bad = LifespanTable([
            cell(0, 0.1, 3, 'no_escape'),
            cell(1, 0.1, 4, 'escaped', escape_time=1.5),
        ])
        self.assertFalse(bad.monotone_in_s1())

    def test_csv(self):
        """Test the table CSV has one row per cell."""
        table = LifespanTable([cell(0, 0.1, 3, 'escaped', escape_time=1.25),
                               cell(1, 0.1, 4, 'no_escape')])
        with tempfile.TemporaryDirectory() as tmp:
            path = table.to_csv(os.path.join(tmp, 'lifespan.csv'))
            with open(path, newline='') as f:
                rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[0]['escape_time'], '1.25')
        self.assertEqual(rows[1]['passed'], '1')


class TestScan(unittest.TestCase):
    """Test run_cell and lifespan_scan."""

    def setUp(self):
        """Set up test fixtures."""
        self.cfg = ExperimentConfig(K=16, lifespan=LifespanSettings(
            eps_values=(0.1,), s1_values=(3.0,), horizon_factor=1.0, steps_per_t_good=40))

    def test_cell_config_raises_s(self):
        """Test s follows s1 + 1 when s1 grows."""
        self.assertEqual(cell_config(self.cfg, 0.05, 5.0).s, 6.0)
        self.assertEqual(cell_config(self.cfg, 0.05, 3.0).s, 4.0)

    def test_admissible_cell_survives(self):
        """Test small admissible data stay in the ball up to T_good."""
        result = run_cell(self.cfg, 0.1, 3.0, 1.0)
        self.assertEqual(result.status, 'no_escape')
        self.assertTrue(result.passed)
        self.assertAlmostEqual(result.t_good, 0.006103515625)
        self.assertAlmostEqual(result.radius, 2.0 * result.delta)
        self.assertAlmostEqual(result.horizon, result.t_good)

    def test_inadmissible_cell(self):
        """Test data violating the smallness conditions mark the cell infeasible."""
        cfg = self.cfg.with_overrides(**{'data.j_min': 1})
        result = run_cell(cfg, 0.1, 3.0, 1.0)
        self.assertEqual(result.status, 'infeasible')
        self.assertFalse(result.feasible)
        self.assertTrue(result.note)
        invalid = run_cell(self.cfg, 0.1, 1.5, 1.0)
        self.assertEqual(invalid.status, 'infeasible')

    @patch('lifespan.run_cell')
    def test_scan_grid_order(self, mock_run_cell):
        """Test cells come back eps-major in grid order, with or without threads."""
        mock_run_cell.side_effect = lambda cfg, eps, s1, factor, index: cell(index, eps, s1, 'no_escape')
        for threads in (1, 3):
            table = lifespan_scan(self.cfg, eps_values=(0.05, 0.1), s1_values=(3.0, 4.0),
                                  horizon_factor=2.0, threads=threads)
            self.assertEqual([(c.eps, c.s1) for c in table.cells],
                             [(0.05, 3.0), (0.05, 4.0), (0.1, 3.0), (0.1, 4.0)])
            self.assertEqual([c.index for c in table.cells], [0, 1, 2, 3])
            self.assertTrue(table.passed)
        self.assertEqual(mock_run_cell.call_args[0][3], 2.0)

    @patch('lifespan.run_cell')
    def test_scan_defaults_from_settings(self, mock_run_cell):
        """Test the grid comes from the lifespan settings by default."""
        mock_run_cell.side_effect = lambda cfg, eps, s1, factor, index: cell(index, eps, s1, 'no_escape')
        table = lifespan_scan(self.cfg)
        self.assertEqual(len(table.cells), 1)
        mock_run_cell.assert_called_once_with(self.cfg, 0.1, 3.0, 1.0, 0)


if __name__ == '__main__':
    unittest.main()
