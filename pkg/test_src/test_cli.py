import tempfile
from pathlib import Path
from unittest import TestCase

from click.testing import CliRunner

from tamd_mix.cli import commands, main
from tamd_mix.data_file import read_data
from tamd_mix.model_file import read_model

SMALL_SPEC = """
name = cli-small
n = 100
d = 2
k = 2
delta = 3.0
replications = 1
heldout_n = 100
hellinger_draws = 100
fitter.max_iters = 20
em.max_iters = 20
"""


class TestCli(TestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def _path(self, name: str) -> str:
        return str(self.root / name)

    def _simulate(self) -> str:
        data = self._path("data.csv")
        code = main(["simulate", "--n", "150", "--d", "2", "--k", "2", "--delta", "3", "--seed", "3",
                     "--out", data, "--truth", self._path("truth.json"), "--quiet"])
        self.assertEqual(0, code)
        return data

    def test_help(self):
        self.assertEqual(0, main(["--help"]))

    def test_unknown_command(self):
        self.assertEqual(1, main(["no-such-command"]))

    def test_unknown_option(self):
        self.assertEqual(1, main(["gradcheck", "--bogus"]))

    def test_simulate(self):
        data, labels = read_data(self._simulate())
        self.assertEqual((150, 2), data.shape)
        self.assertEqual({0, 1}, set(labels.tolist()))
        self.assertEqual(2, read_model(self._path("truth.json")).n_components)

    def test_simulate_infeasible(self):
        self.assertEqual(1, main(["simulate", "--d", "1", "--k", "3", "--out", self._path("data.csv")]))

    def test_fit_both_methods(self):
        data = self._simulate()
        for method in ("tamd", "em"):
            model = self._path(f"{method}.json")
            self.assertEqual(0, main(["fit", data, "--k", "2", "--method", method, "--out", model, "--quiet"]))
            theta = read_model(model)
            self.assertEqual(2, theta.n_components)
            self.assertEqual(2, theta.dim)

    def test_fit_with_config(self):
        data = self._simulate()
        config = self.root / "fit.cfg"
        config.write_text("penalty.lambda_wt = 0.5\nfitter.max_iters = 5\n")
        self.assertEqual(0, main(["fit", data, "--k", "2", "--config", str(config), "--out", self._path("m.json")]))
        config.write_text("colour = blue\n")
        self.assertEqual(1, main(["fit", data, "--k", "2", "--config", str(config), "--out", self._path("m.json")]))

    def test_fit_missing_data(self):
        self.assertEqual(1, main(["fit", self._path("missing.csv"), "--k", "2"]))

    def test_benchmark(self):
        spec = self.root / "small.spec"
        spec.write_text(SMALL_SPEC)
        out = self._path("bench")
        self.assertEqual(0, main(["benchmark", str(spec), "--out", out, "--quiet"]))
        for name in ("results.csv", "results.json", "manifest.json", "summary.csv"):
            self.assertTrue((Path(out) / name).exists(), name)

    def test_benchmark_empty_spec(self):
        spec = self.root / "empty.spec"
        spec.write_text("")
        self.assertEqual(1, main(["benchmark", str(spec)]))
        self.assertEqual(1, main(["benchmark", self._path("missing.spec")]))

    def test_reproduce_unknown_preset(self):
        self.assertEqual(1, main(["reproduce", "no-such-preset"]))

    def test_gradcheck_passes(self):
        result = CliRunner().invoke(commands, ["gradcheck", "--configs", "3", "--seed", "5"])
        self.assertEqual(0, result.exit_code, result.output)
        self.assertIn("Configuration 3", result.output)
        self.assertIn("PASS: all 3 configurations", result.output)

    def test_gradcheck_failure_code(self):
        self.assertEqual(2, main(["gradcheck", "--configs", "2", "--tolerance", "1e-30", "--quiet"]))
