"""Smoke test of the ssiss_py extension module.

Builds the module with cargo unless SSISS_PY_LIB points at a built library,
then checks a few values against independent Python computations.
"""

import importlib.machinery
import importlib.util
import json
import math
import os
import pathlib
import subprocess
import sys

import pytest
from scipy import integrate, special

ROOT = pathlib.Path(__file__).resolve().parent.parent


def _library_path():
    env = os.environ.get("SSISS_PY_LIB")
    if env:
        return pathlib.Path(env)
    subprocess.run(
        ["cargo", "build", "--release", "-p", "ssiss-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    suffix = {"darwin": "dylib", "win32": "dll"}.get(sys.platform, "so")
    prefix = "" if sys.platform == "win32" else "lib"
    return ROOT / "target" / "release" / f"{prefix}ssiss_py.{suffix}"


@pytest.fixture(scope="module")
def ssiss_py():
    path = _library_path()
    loader = importlib.machinery.ExtensionFileLoader("ssiss_py", str(path))
    spec = importlib.util.spec_from_file_location("ssiss_py", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def test_gaussian_integral_matches_scipy(ssiss_py):
    want, _ = integrate.quad(lambda x: x**5 * math.exp(-(((x - 0.7) / 1.3) ** 2)), -30, 30, epsabs=0, epsrel=1e-13)
    assert ssiss_py.gaussian_integral(5, 0.7, 1.3) == pytest.approx(want, rel=1e-11)


def test_tail_bound_dominates_the_tail(ssiss_py):
    for y in [0.0, 0.5, 1.0, 2.0, 4.0]:
        assert ssiss_py.erfc_tail_bound(y) >= 0.5 * math.sqrt(math.pi) * special.erfc(y)


def test_smooth_step(ssiss_py):
    assert ssiss_py.smooth_step(0.3, 0.3) == pytest.approx(0.5 * special.erfc(-1.0), rel=1e-15)


def test_bad_input_raises(ssiss_py):
    with pytest.raises(ValueError):
        ssiss_py.gaussian_integral(2, 0.0, -1.0)


def test_run_experiment(ssiss_py):
    text = (ROOT / "configs" / "selective-excite.toml").read_text()
    report = json.loads(ssiss_py.run_experiment("selective-excite", text))
    assert report["verdict"] == "PASS"
