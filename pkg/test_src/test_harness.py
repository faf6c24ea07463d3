import csv
import json
import math
import tempfile
from pathlib import Path
from unittest import TestCase

from tamd_mix.em import EmConfig
from tamd_mix.error import ContractViolation, SpecError
from tamd_mix.harness.experiment import (DgpGrid, ExperimentSpec, RunRecord, find_row, replication_seed,
                                         run_experiment, summarize)
from tamd_mix.harness.presets import PRESETS, preset
from tamd_mix.harness.results import RESULT_COLUMNS, format_value, write_plot_data, write_summary_csv
from tamd_mix.harness.spec_file import load_experiment, parse_dgp, parse_experiment, parse_fit_config
from tamd_mix.simgen import DgpKind, DgpSpec, InitScheme
from tamd_mix.tamd import FitterConfig

SWEEP = """
# two sizes, two separations
name = demo
kind = well_specified
n = [100, 200]
d = 2
k = 2
delta = [1.0, 2.5]   # mean distance
methods = [tamd]
replications = 3
penalty.lambda_n = default
penalty.lambda_wt = 0.5
fitter.max_iters = 50
em.restarts = 2
record_timing = true
"""


def _small_spec(output_dir: str, **changes) -> ExperimentSpec:
    spec = ExperimentSpec(
        name="small",
        dgp=DgpGrid(n=(120,), d=(2,), k_true=(2,), separation_delta=(3.0,)),
        replications=2,
        fitter=FitterConfig(max_iters=30),
        em=EmConfig(max_iters=30),
        heldout_n=200,
        hellinger_draws=200,
        output_dir=output_dir,
    )
    return spec.copy(**changes)


def _record(replication: int, mean_mse: float, error: str = "") -> RunRecord:
    return RunRecord(kind="well_specified", n=100, d=2, k=2, delta=1.0, kappa=1.0, eps=0.0, method="tamd",
                     replication=replication, seed=0, success=not error, mean_mse=mean_mse, error=error)


class TestSpecFile(TestCase):

    def test_sweep(self):
        spec = parse_experiment(SWEEP)
        self.assertEqual("demo", spec.name)
        self.assertEqual((100, 200), spec.dgp.n)
        self.assertEqual((2,), spec.dgp.d)
        self.assertEqual((1.0, 2.5), spec.dgp.separation_delta)
        self.assertEqual(("tamd",), spec.methods)
        self.assertEqual(3, spec.replications)
        self.assertIsNone(spec.fitter.penalty.lambda_n)
        self.assertEqual(0.5, spec.fitter.penalty.lambda_wt)
        self.assertEqual(50, spec.fitter.max_iters)
        self.assertEqual(2, spec.em.restarts)
        self.assertTrue(spec.record_timing)
        self.assertEqual(4, len(spec.dgp.cells()))

    def test_rejected(self):
        bad = [
            "",
            "# only a comment",
            "bogus = 1",
            "n =",
            "just words",
            "n = 10\nn = 20",
            "replications = [1, 2]",
            "kind = no_such_kind",
            "penalty.lambda_zz = 1",
            "penalty.lambda_wt = -1",
            "replications = many",
            "methods = [tamd, tamd]",
        ]
        for text in bad:
            with self.assertRaises(SpecError, msg=text):
                parse_experiment(text)

    def test_example_specs(self):
        paths = sorted((Path(__file__).parent.parent / "specs").glob("*.spec"))
        self.assertTrue(paths)
        for path in paths:
            self.assertTrue(load_experiment(path).dgp.cells(), path.name)

    def test_penalty_sweep_spec(self):
        spec = load_experiment(Path(__file__).parent.parent / "specs" / "penalty_sweep.spec")
        self.assertEqual(0.25, spec.fitter.penalty.lambda_wt)
        self.assertEqual(1.0, spec.fitter.penalty.lambda_sc)
        self.assertEqual([5.0, 40.0], [cell.condition_kappa for cell in spec.dgp.cells()])

    def test_infeasible_cell(self):
        spec = parse_experiment("d = 1\nk = 3")
        with self.assertRaises(SpecError):
            spec.dgp.cells()

    def test_fit_config(self):
        fitter, em = parse_fit_config("penalty.lambda_n = 0.2\nfitter.max_iters = 10\nem.safeguard = 1e-9")
        self.assertEqual(0.2, fitter.penalty.lambda_n)
        self.assertEqual(10, fitter.max_iters)
        self.assertEqual(1e-9, em.safeguard)
        with self.assertRaises(SpecError):
            parse_fit_config("name = x")

    def test_dgp(self):
        spec = parse_dgp("kind = contaminated\neps = 0.1\nn = 50\nseed = 9")
        self.assertEqual(DgpSpec(DgpKind.CONTAMINATED, n=50, contamination_eps=0.1, seed=9), spec)
        with self.assertRaises(SpecError):
            parse_dgp("kind = well_specified\neps = 0.1")


class TestGrid(TestCase):

    def test_cell_order(self):
        grid = DgpGrid(d=(2, 3), separation_delta=(1.0, 2.0))
        cells = [(c.d, c.separation_delta) for c in grid.cells()]
        self.assertEqual([(2, 1.0), (2, 2.0), (3, 1.0), (3, 2.0)], cells)

    def test_sizes_follow_dimension(self):
        grid = DgpGrid(kinds=(DgpKind.HIGH_DIM,), d=(10, 20), n_over_d=(2.0, 5.0))
        self.assertEqual([20, 50, 40, 100], [c.n for c in grid.cells()])

    def test_empty_field(self):
        with self.assertRaises(SpecError):
            DgpGrid(d=())

    def test_stress_presets(self):
        table1 = preset("table1").spec
        self.assertEqual(InitScheme.PERTURBED_TRUTH, table1.init_scheme)
        self.assertGreater(table1.init_noise, 1.0)
        self.assertEqual(1, table1.em.restarts)
        robustness = preset("robustness").spec.fitter.penalty
        self.assertGreater(robustness.lambda_sc * robustness.beta, 0)
        self.assertIsNone(robustness.lambda_n)

    def test_presets_are_feasible(self):
        for name in PRESETS:
            for full in (False, True):
                chosen = preset(name, full)
                self.assertTrue(chosen.spec.dgp.cells())
                self.assertIn(chosen.plot_x, RESULT_COLUMNS)
        with self.assertRaises(SpecError):
            preset("no-such-preset")


class TestSeeds(TestCase):

    def test_replication_seed(self):
        cell = DgpSpec(n=100, d=2, k_true=2)
        self.assertEqual(replication_seed(1, cell, 0), replication_seed(1, cell, 0))
        self.assertNotEqual(replication_seed(1, cell, 0), replication_seed(1, cell, 1))
        self.assertNotEqual(replication_seed(1, cell, 0), replication_seed(2, cell, 0))
        self.assertNotEqual(replication_seed(1, cell, 0), replication_seed(1, cell.copy(n=101), 0))
        self.assertLess(replication_seed(1, cell, 0), 2 ** 64)


class TestRunExperiment(TestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def _results(self, name: str) -> list[str]:
        return (self.root / name / "results.csv").read_text().splitlines()

    def test_records_and_outputs(self):
        records = run_experiment(_small_spec(str(self.root / "a")))
        self.assertEqual(4, len(records))
        self.assertEqual(["tamd", "em", "tamd", "em"], [r.method for r in records])
        self.assertEqual(records[0].seed, records[1].seed)
        self.assertNotEqual(records[0].seed, records[2].seed)
        for record in records:
            self.assertEqual("", record.error)
            self.assertTrue(0.0 < record.truth_separation < 1.0)

        lines = self._results("a")
        self.assertEqual(",".join(RESULT_COLUMNS), lines[0])
        self.assertEqual(5, len(lines))
        rows = list(csv.DictReader(lines))
        self.assertEqual({""}, {row["wall_time_s"] for row in rows})
        self.assertIn(rows[0]["success"], ("true", "false"))

        manifest = json.loads((self.root / "a" / "manifest.json").read_text())
        self.assertEqual("tamd-mix", manifest["software"])
        self.assertEqual(1, len(manifest["cells"]))
        self.assertEqual(4, len(json.loads((self.root / "a" / "results.json").read_text())))

    def test_deterministic(self):
        run_experiment(_small_spec(str(self.root / "a")))
        run_experiment(_small_spec(str(self.root / "b")))
        self.assertEqual(self._results("a"), self._results("b"))

    def test_pool_width_does_not_change_results(self):
        grid = DgpGrid(n=(100,), d=(2,), k_true=(2,), separation_delta=(2.0, 3.0))
        run_experiment(_small_spec(str(self.root / "serial"), dgp=grid))
        run_experiment(_small_spec(str(self.root / "pooled"), dgp=grid, threads=8))
        self.assertEqual(self._results("serial"), self._results("pooled"))

    def test_cells_are_independent(self):
        both = DgpGrid(n=(100,), d=(2,), k_true=(2,), separation_delta=(2.0, 3.0))
        one = DgpGrid(n=(100,), d=(2,), k_true=(2,), separation_delta=(3.0,))
        run_experiment(_small_spec(str(self.root / "both"), dgp=both))
        run_experiment(_small_spec(str(self.root / "one"), dgp=one))
        delta_index = RESULT_COLUMNS.index("delta")
        kept = [line for line in self._results("both")[1:] if line.split(",")[delta_index] == "3.0"]
        self.assertEqual(self._results("one")[1:], kept)

    def test_perturbed_truth_without_writing(self):
        spec = _small_spec(str(self.root / "unused"), methods=("tamd",), replications=1,
                           init_scheme=InitScheme.PERTURBED_TRUTH, init_noise=0.0)
        records = run_experiment(spec, write=False)
        self.assertEqual(1, len(records))
        self.assertFalse((self.root / "unused").exists())

    def test_invalid_spec(self):
        with self.assertRaises(SpecError):
            ExperimentSpec(methods=("tamd", "kmeans"))
        with self.assertRaises(SpecError):
            ExperimentSpec(replications=0)


class TestSummary(TestCase):

    def test_mean_and_standard_error(self):
        records = [_record(0, 1.0), _record(1, 2.0), _record(2, 4.0), _record(3, math.nan, error="Boom: x")]
        rows = summarize(records, metrics=("mean_mse", "success"))
        self.assertEqual(1, len(rows))
        row = rows[0]
        self.assertEqual(4, row.replications)
        self.assertEqual(1, row.errors)
        mean, se = row.stats["mean_mse"]
        self.assertAlmostEqual(7.0 / 3.0, mean, places=12)
        self.assertAlmostEqual(math.sqrt(7.0) / 3.0, se, places=12)
        self.assertEqual((1.0, 0.0), row.stats["success"])
        self.assertIs(row, find_row(rows, "tamd", delta=1.0))

    def test_single_replication(self):
        mean, se = summarize([_record(0, 2.0)], metrics=("mean_mse",))[0].stats["mean_mse"]
        self.assertEqual(2.0, mean)
        self.assertTrue(math.isnan(se))

    def test_empty(self):
        with self.assertRaises(ContractViolation):
            summarize([])

    def test_written_tables(self):
        rows = summarize([_record(0, 1.0), _record(1, 3.0)])
        with tempfile.TemporaryDirectory() as directory:
            summary_path, plot_path = Path(directory) / "summary.csv", Path(directory) / "plot_data.csv"
            write_summary_csv(rows, summary_path)
            write_plot_data(rows, "delta", plot_path)
            summary = list(csv.DictReader(summary_path.read_text().splitlines()))
            plot = list(csv.DictReader(plot_path.read_text().splitlines()))
            with self.assertRaises(ContractViolation):
                write_plot_data(rows, "colour", plot_path)
        self.assertEqual("2.0", summary[0]["mean_mse_mean"])
        self.assertNotIn("wall_time_s_mean", summary[0])
        mse = [line for line in plot if line["metric"] == "mean_mse"]
        self.assertEqual([{"method": "tamd", "delta": "1.0", "metric": "mean_mse", "mean": "2.0", "se": "1.0"}], mse)

    def test_format_value(self):
        self.assertEqual("", format_value(None))
        self.assertEqual("true", format_value(True))
        self.assertEqual("0.1", format_value(0.1))
        self.assertEqual("3", format_value(3))
        self.assertEqual("nan", format_value(math.nan))
