"""Flat `key = value` experiment and config files.

    # comment
    name = degeneracy
    kind = well_specified
    d = [2, 5]
    delta = [1.0, 2.0]
    penalty.lambda_wt = 0.5
    fitter.max_iters = 200

One entry per line; `[a, b]` is a list; dotted keys address the nested fitter, penalty and em configs.
"""
import re
from os import PathLike
from typing import Callable, Optional

from ..em import EmConfig
from ..error import SpecError
from ..simgen import DgpSpec
from ..tamd import FitterConfig
from .experiment import DgpGrid, ExperimentSpec

_LINE = re.compile(r"^(?P<key>[A-Za-z_][\w.]*)\s*=\s*(?P<value>.*)$")
_LIST = re.compile(r"^\[(?P<items>.*)\]$")

_DEFAULT_WORDS = ("default", "auto", "none")


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text}")


def _optional_float(text: str) -> Optional[float]:
    return None if text.lower() in _DEFAULT_WORDS else float(text)


def _int(text: str) -> int:
    return int(text.replace("_", ""))


# key -> (field, converter, is_list)
_GRID_KEYS: dict[str, tuple[str, Callable, bool]] = {
    "kind": ("kinds", str, True),
    "kinds": ("kinds", str, True),
    "n": ("n", _int, True),
    "n_over_d": ("n_over_d", float, True),
    "d": ("d", _int, True),
    "k": ("k_true", _int, True),
    "k_true": ("k_true", _int, True),
    "delta": ("separation_delta", float, True),
    "kappa": ("condition_kappa", float, True),
    "eps": ("contamination_eps", float, True),
}
_SPEC_KEYS: dict[str, tuple[str, Callable, bool]] = {
    "name": ("name", str, False),
    "methods": ("methods", str, True),
    "replications": ("replications", _int, False),
    "base_seed": ("base_seed", _int, False),
    "heldout_n": ("heldout_n", _int, False),
    "output_dir": ("output_dir", str, False),
    "init_scheme": ("init_scheme", str, False),
    "init_noise": ("init_noise", float, False),
    "hellinger_draws": ("hellinger_draws", _int, False),
    "record_timing": ("record_timing", _bool, False),
    "threads": ("threads", _int, False),
}
_PENALTY_KEYS = {"lambda_n": _optional_float, "lambda_wt": float, "lambda_sc": float, "alpha": float, "beta": float,
                 "jitter": float}
_FITTER_KEYS = {"max_iters": _int, "convergence_tol": float, "backtrack_factor": float, "backtrack_max_steps": _int,
                "monotonicity_tol": float}
_EM_KEYS = {"max_iters": _int, "convergence_tol": float, "restarts": _int, "degeneracy_det_threshold": float,
            "safeguard": float, "init_scheme": str}
_DGP_KEYS = {"kind": str, "n": _int, "d": _int, "k": _int, "k_true": _int, "delta": float, "kappa": float,
             "eps": float, "seed": _int}
_DGP_FIELDS = {"k": "k_true", "delta": "separation_delta", "kappa": "condition_kappa", "eps": "contamination_eps"}


def parse_entries(text: str) -> list[tuple[int, str, str | list[str]]]:
    """(line number, key, raw value or list of raw items) for every entry, in file order."""
    entries = []
    seen = set()
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        search = _LINE.search(line)
        if not search:
            raise SpecError(f"Malformed input on line {number}: {line}")
        key, value = search.group("key"), search.group("value").strip()
        if key in seen:
            raise SpecError(f"Duplicate key {key} on line {number}")
        seen.add(key)
        items = _LIST.search(value)
        if items:
            raw = [item.strip() for item in items.group("items").split(",") if item.strip()]
            entries.append((number, key, raw))
        elif not value:
            raise SpecError(f"Missing value for {key} on line {number}")
        else:
            entries.append((number, key, value))
    return entries


def _convert(number: int, key: str, raw, converter: Callable, is_list: bool):
    try:
        if isinstance(raw, list):
            if not is_list:
                raise SpecError(f"{key} on line {number} takes a single value")
            return [converter(item) for item in raw]
        value = converter(raw)
        return [value] if is_list else value
    except ValueError as e:
        raise SpecError(f"Bad value for {key} on line {number}: {e}") from None


def _build(factory: Callable, values: dict, what: str):
    try:
        return factory(**values)
    except ValueError as e:
        raise SpecError(f"Invalid {what}: {e}") from None


def _nested(entries, prefixes: dict[str, dict[str, Callable]]) -> tuple[dict[str, dict], list]:
    nested = {prefix: {} for prefix in prefixes}
    rest = []
    for number, key, raw in entries:
        prefix, _, name = key.partition(".")
        if name and prefix in prefixes:
            converters = prefixes[prefix]
            if name not in converters:
                raise SpecError(f"Unknown key {key} on line {number}")
            nested[prefix][name] = _convert(number, key, raw, converters[name], False)
        else:
            rest.append((number, key, raw))
    return nested, rest


def fitter_and_em(nested: dict[str, dict], base_fitter=FitterConfig(), base_em=EmConfig()):
    penalty = _build(base_fitter.penalty.copy, nested.get("penalty", {}), "penalty config")
    fitter = _build(base_fitter.copy, dict(nested.get("fitter", {}), penalty=penalty), "fitter config")
    em = _build(base_em.copy, nested.get("em", {}), "em config")
    return fitter, em


def parse_experiment(text: str) -> ExperimentSpec:
    entries = parse_entries(text)
    if not entries:
        raise SpecError("Experiment spec is empty")
    nested, rest = _nested(entries, {"penalty": _PENALTY_KEYS, "fitter": _FITTER_KEYS, "em": _EM_KEYS})
    grid, spec = {}, {}
    for number, key, raw in rest:
        if key in _GRID_KEYS:
            name, converter, is_list = _GRID_KEYS[key]
            grid[name] = _convert(number, key, raw, converter, is_list)
        elif key in _SPEC_KEYS:
            name, converter, is_list = _SPEC_KEYS[key]
            spec[name] = _convert(number, key, raw, converter, is_list)
        else:
            raise SpecError(f"Unknown key {key} on line {number}")
    fitter, em = fitter_and_em(nested)
    return _build(ExperimentSpec, dict(spec, dgp=_build(DgpGrid, grid, "grid"), fitter=fitter, em=em),
                  "experiment spec")


def parse_fit_config(text: str, base: FitterConfig = FitterConfig()) -> tuple[FitterConfig, EmConfig]:
    """Only penalty.*, fitter.* and em.* keys are allowed."""
    nested, rest = _nested(parse_entries(text), {"penalty": _PENALTY_KEYS, "fitter": _FITTER_KEYS, "em": _EM_KEYS})
    for number, key, _ in rest:
        raise SpecError(f"Unknown key {key} on line {number}")
    return fitter_and_em(nested, base)


def parse_dgp(text: str, base: DgpSpec = DgpSpec()) -> DgpSpec:
    values = {}
    for number, key, raw in parse_entries(text):
        if key not in _DGP_KEYS:
            raise SpecError(f"Unknown key {key} on line {number}")
        values[_DGP_FIELDS.get(key, key)] = _convert(number, key, raw, _DGP_KEYS[key], False)
    return base.copy(**values)


def read_text(path: PathLike | str) -> str:
    try:
        with open(path, "r") as file:
            return file.read()
    except OSError as e:
        raise SpecError(f"Cannot read {path}: {e.strerror}") from None


def load_experiment(path: PathLike | str) -> ExperimentSpec:
    return parse_experiment(read_text(path))

