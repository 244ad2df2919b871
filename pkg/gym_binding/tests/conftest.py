import json
import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def server(tmp_path_factory):
    """One hydrosim server subprocess for the whole test session; the
    binding only ever talks to it over the wire protocol. The server runs
    in a scratch cwd so relative session dirs stay out of the repo."""
    proc = subprocess.Popen(
        [sys.executable, "-m", "hydrosim.cli", "serve", "--port", "0"],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        cwd=tmp_path_factory.mktemp("server_cwd"),
    )
    line = proc.stdout.readline().strip()
    if "serving on" not in line:
        proc.kill()
        raise RuntimeError(f"server failed to start: {line!r} / {proc.stderr.read()[:500]}")
    host, port = line.rsplit(" ", 1)[1].rsplit(":", 1)
    yield host, int(port)
    proc.terminate()
    proc.wait(timeout=10)


@pytest.fixture()
def short_scenario(tmp_path):
    cfg = {
        "pipe_waypoints": [[0, 0, 9.7], [5, 0, 9.7]],
        "pipe_radius": 0.3,
        "seafloor_depth": 10.0,
        "initial_pose": [0, 0, 7.7, 0, 0, 0],
        "altitude_above_pipe": 2.0,
        "max_steps": 3,
        "seed": 0,
    }
    path = tmp_path / "short.json"
    path.write_text(json.dumps(cfg))
    return str(path)
