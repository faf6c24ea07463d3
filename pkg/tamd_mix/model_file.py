"""Model JSON reading and writing.

Shape: {"weights": [...], "components": [{"mean": [...], "covariance": [[...], ...]}, ...]} with dense
row-major covariances. Numbers pass through their 17-significant-digit form, so they read back exactly.
"""
import json
import os
from io import TextIOWrapper
from os import PathLike
from pathlib import Path

import numpy as np

from .affinity import MixtureParams
from .error import ContractViolation, DegenerateCovariance
from .gaussmath import GaussianComponent, cholesky


def format_number(value: float) -> str:
    return f"{float(value):.16e}"


def _numbers(values) -> list:
    return [float(format_number(v)) for v in values]


def model_to_json(theta: MixtureParams) -> dict:
    return {
        "weights": _numbers(theta.weights),
        "components": [{"mean": _numbers(comp.mean), "covariance": [_numbers(row) for row in comp.covariance.dense]}
                       for comp in theta.components],
    }


def write_model(theta: MixtureParams, file: [TextIOWrapper | PathLike | str], make_dirs: bool = True):
    if isinstance(file, PathLike) or type(file) == str:
        if make_dirs:
            os.makedirs(Path(file).parent, exist_ok=True)
        with open(file, "w") as fileIO:
            write_model(theta, fileIO)
        return
    file.write(json.dumps(model_to_json(theta), indent=4))
    file.write("\n")


def model_from_json(document) -> MixtureParams:
    try:
        weights = np.asarray(document["weights"], dtype=float)
        means = [np.asarray(c["mean"], dtype=float) for c in document["components"]]
        covariances = [np.asarray(c["covariance"], dtype=float) for c in document["components"]]
    except (KeyError, TypeError, ValueError) as e:
        raise ContractViolation(f"Malformed model document: {e}") from e
    components = []
    for k, (mean, covariance) in enumerate(zip(means, covariances)):
        if covariance.ndim != 2:
            raise ContractViolation(f"Component {k} covariance is not a matrix")
        try:
            components.append(GaussianComponent(mean, cholesky(covariance, escalate=False)))
        except DegenerateCovariance as e:
            raise ContractViolation(f"Component {k} covariance is not positive definite") from e
    return MixtureParams(weights, tuple(components))


def read_model(file: [TextIOWrapper | PathLike | str]) -> MixtureParams:
    if isinstance(file, PathLike) or type(file) == str:
        with open(file, "r") as fileIO:
            return read_model(fileIO)
    try:
        document = json.load(file)
    except json.JSONDecodeError as e:
        raise ContractViolation(f"Model file is not valid JSON: {e}") from e
    return model_from_json(document)
