import os
import subprocess
import sys

import numpy as np

from peellab._accel import backend_name

SNIPPET = (
    "import numpy as np\n"
    "from peellab import peel, PointSet\n"
    "from peellab._accel import backend_name\n"
    "X = np.random.default_rng(3).random((500, 2))\n"
    "print(backend_name(), ','.join(map(str, peel(PointSet(X)).labels)))\n"
)


def _run(disable):
    env = dict(os.environ)
    env.pop("PEELLAB_DISABLE_NUMBA", None)
    if disable:
        env["PEELLAB_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def test_env_flag_selects_numpy_and_labels_agree():
    name_on, labels_on = _run(False)
    name_off, labels_off = _run(True)
    assert name_off == "numpy"
    assert name_on == backend_name()
    assert labels_on == labels_off


def test_numpy_convex_position_batch_agrees():
    from peellab import _kernels, _kernels2d_np
    pts = np.random.default_rng(0).random((400, 6, 2))
    a = _kernels.convex_position_batch(pts)
    b = _kernels.convex_position_batch(pts, backend=_kernels2d_np)
    assert np.array_equal(np.asarray(a), np.asarray(b))
