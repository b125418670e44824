"""Full-stack check: the dashboard's scripted twin against a live service.

Runs the built frontend bundle under node, pointed at a real ``serve``
process on a synthetic dataset. The script drains a 20-draw batch by
confirming or correcting every unit from the dataset's labeled column, then
prints its final view of the session. The test holds that view against an
offline recomputation from the persisted state, so the numbers on screen are
the library's numbers, bit for bit.
"""

import json
import shutil
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from screencount.cli import main as cli_main

FRONTEND = Path(__file__).resolve().parent.parent / "frontend"
SCRIPTED = FRONTEND / "dist" / "scripted.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not SCRIPTED.exists(),
    reason="needs node and a built frontend (cd frontend && npm run build)",
)


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture
def service(tmp_path):
    csv = tmp_path / "survey.csv"
    spec = tmp_path / "regions.json"
    code = cli_main(["synth", "--out", str(csv), "--regions-out", str(spec),
                     "--size", "60", "--amplitude", "12.0", "--baseline", "0.4",
                     "--noise", "0.35", "--split", "3", "--data-seed", "5"])
    assert code == 0
    state = tmp_path / "state"
    port = free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "screencount.cli", "serve",
         "--data", str(csv), "--regions", str(spec),
         "--port", str(port), "--state-dir", str(state)],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)
    base = f"http://127.0.0.1:{port}"
    try:
        deadline = time.monotonic() + 15.0
        while True:
            try:
                if httpx.get(f"{base}/datasets", timeout=1.0).status_code == 200:
                    break
            except httpx.HTTPError:
                pass
            if proc.poll() is not None or time.monotonic() > deadline:
                pytest.fail(f"service did not come up: {proc.stdout.read()}")
            time.sleep(0.1)
        yield base, csv, spec, state
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


def test_scripted_session_matches_offline_recompute(service, capsys):
    base, csv, spec, state = service
    run = subprocess.run(["node", str(SCRIPTED), base, str(csv), "20"],
                         capture_output=True, text=True, timeout=60)
    assert run.returncode == 0, run.stderr
    out = json.loads(run.stdout)

    assert out["drawCount"] == 20
    assert out["submissions"] >= 1
    assert out["confirmed"] + out["corrected"] == out["submissions"]

    # Every submission advanced the labeled prefix, so each region's series
    # gained exactly one point per label: no stale refreshes, no gaps.
    for region, length in out["seriesLengths"].items():
        assert length == out["submissions"], region

    # The numbers the dashboard ends on are exactly what the CLI recomputes
    # from the persisted session state.
    code = cli_main(["estimate", out["sessionId"], "--data", str(csv),
                     "--regions", str(spec), "--state-dir", str(state)])
    assert code == 0
    recomputed = json.loads(capsys.readouterr().out)
    assert out["estimates"] == recomputed

    # The service agrees the script labeled every unit it claims to have.
    record = httpx.get(f"{base}/sessions/{out['sessionId']}").json()
    assert len(record["labels"]) == out["submissions"]
    assert set(record["draws"]) == set(record["labels"])
