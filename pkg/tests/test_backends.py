"""Both kernel backends give the same answers through the public solvers."""

import os
import subprocess
import sys

import freebound

SCRIPT = """
import numpy as np
from freebound import BACKEND
from freebound.gradientflow import gf_evolve
from freebound.biharmonic import BihProblem, bih_evolve, ramp_ic
from freebound.linalg import cell_centers
from freebound.presets import quadratic
tr = gf_evolve(quadratic(cell_centers(48)), 2e-3, 0.06, 1 / 48)
p = BihProblem.from_spacing(1 / 16, 0.1)
b = bih_evolve(ramp_ic(p.x), p, 1.0)
np.save({path!r}, np.concatenate([tr.snapshots.ravel(), b.snapshots.ravel()]))
print(BACKEND)
"""


def _run(path, pure):
    env = dict(os.environ)
    env.pop("FREEBOUND_PURE_PYTHON", None)
    if pure:
        env["FREEBOUND_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT.format(path=str(path))], env=env,
                         capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_fallback_selected_by_env(tmp_path):
    assert _run(tmp_path / "p.npy", pure=True) == "python"


def test_backends_agree(tmp_path):
    import numpy as np

    name = _run(tmp_path / "c.npy", pure=False)
    _run(tmp_path / "p.npy", pure=True)
    assert name == freebound.BACKEND
    np.testing.assert_allclose(np.load(tmp_path / "c.npy"), np.load(tmp_path / "p.npy"),
                               rtol=0, atol=1e-12)
