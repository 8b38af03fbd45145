import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def snapshot_files(tmp_path_factory):
    """Synthetic snapshot generated through the simulator CLI."""
    directory = tmp_path_factory.mktemp("net")
    snapshot = directory / "snapshot.csv"
    merchants = directory / "merchants.txt"
    subprocess.run(
        [
            sys.executable, "-m", "feesim.cli", "synth",
            "--output", str(snapshot), "--merchants-output", str(merchants),
        ],
        check=True,
        capture_output=True,
    )
    return str(snapshot), str(merchants)


@pytest.fixture(scope="session")
def server_command(snapshot_files):
    def command(node="97851", episode_length=5, extra=()):
        return [
            sys.executable, "-m", "feesim.cli", "serve", "--stdio",
            "--snapshot", snapshot_files[0],
            "--merchants", snapshot_files[1],
            "--node", node,
            "--episode-length", str(episode_length),
            *extra,
        ]

    return command
