"""Agreement between the compiled contact kernel and its pure-Python twin."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from hardpair._kernel import _ref

try:
    from hardpair._kernel import _fast
except ImportError:
    _fast = None

needs_compiled = pytest.mark.skipif(_fast is None, reason="extension not built")


@needs_compiled
def test_backends_agree_on_random_poses():
    rng = np.random.default_rng(51)
    worst = 0.0
    for theta, psi in rng.uniform(0.0, 2.0 * math.pi, (200, 2)):
        r_ref = _ref.ellipse_contact(2.0, 1.0, theta, psi)
        r_fast = _fast.ellipse_contact(2.0, 1.0, theta, psi)
        assert r_ref[4] and r_fast[4]
        worst = max(worst, max(abs(x - y) for x, y in zip(r_ref[:4], r_fast[:4])))
    assert worst < 1e-12


@needs_compiled
def test_backends_agree_warm_started():
    r0 = _fast.ellipse_contact(2.0, 1.0, 0.7, 1.9)
    for impl in (_ref, _fast):
        r = impl.ellipse_contact(2.0, 1.0, 0.71, 1.91, r0[1], r0[2], r0[0], True)
        assert r[4]
    a = _ref.ellipse_contact(2.0, 1.0, 0.71, 1.91, r0[1], r0[2], r0[0], True)
    b = _fast.ellipse_contact(2.0, 1.0, 0.71, 1.91, r0[1], r0[2], r0[0], True)
    assert abs(a[0] - b[0]) < 1e-12


def test_fallback_env_selects_reference_backend():
    code = "import hardpair; print(hardpair.BACKEND)"
    env = dict(os.environ, HARDPAIR_FORCE_FALLBACK="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "fallback"


def test_fallback_full_pipeline_matches(tmp_path):
    # run one simulation under the forced fallback and compare final states
    code = """
import json
import numpy as np
from hardpair.bodies import make_ellipse
from hardpair.scattering import ScatteringFamily
from hardpair.dynamics import make_state, simulate
ell = make_ellipse(2.0, 1.0)
Z0 = make_state([0.0, 0.0, 4.2, 0.3, 0.4, 1.9],
                [0.5, 0.0, -0.45, 0.05, 0.3, -0.2])
tr = simulate(ell, Z0, ScatteringFamily.reflection(), 8.0)
print(json.dumps({"X": tr.final.X.tolist(), "V": tr.final.V.tolist(),
                  "n": tr.n_events()}))
"""
    import json

    outs = []
    for force in ("0", "1"):
        env = dict(os.environ, HARDPAIR_FORCE_FALLBACK=force)
        r = subprocess.run([sys.executable, "-c", code], env=env,
                           capture_output=True, text=True, check=True)
        outs.append(json.loads(r.stdout))
    assert outs[0]["n"] == outs[1]["n"]
    assert np.max(np.abs(np.array(outs[0]["X"]) - np.array(outs[1]["X"]))) < 1e-9
    assert np.max(np.abs(np.array(outs[0]["V"]) - np.array(outs[1]["V"]))) < 1e-9
