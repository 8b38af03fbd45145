import subprocess
import sys

import numpy as np
import pytest

from feesim_client import Box, DimensionError, ProtocolError, RemoteEnv


@pytest.fixture()
def env(server_command):
    remote = RemoteEnv(command=server_command())
    yield remote
    remote.close()


class TestHandshake:
    def test_hello_caches_shape(self, env):
        assert env.k == 6
        assert env.fee_rate_upper == 1000.0
        assert env.base_fee_upper == 10000.0
        assert env.episode_length == 5

    def test_spaces(self, env):
        assert env.action_space.shape == (12,)
        assert env.observation_space.shape == (12,)
        assert env.action_space.high[0] == 1000.0
        assert env.action_space.high[-1] == 10000.0

    def test_requires_exactly_one_transport(self):
        with pytest.raises(ValueError):
            RemoteEnv()
        with pytest.raises(ValueError):
            RemoteEnv(command=["x"], address="127.0.0.1:1")


class TestResetStep:
    def test_reset_returns_length_2k_ints(self, env):
        obs = env.reset(seed=3)
        assert obs.shape == (12,)
        assert obs.dtype == np.int64
        assert (obs[6:] == 0).all()

    def test_same_seed_same_reset(self, env):
        assert np.array_equal(env.reset(seed=9), env.reset(seed=9))

    def test_zero_action_zero_reward(self, env):
        env.reset(seed=1)
        obs, reward, done, info = env.step(np.zeros(12))
        assert reward == 0
        assert done is False
        assert info["settled"] + info["failed"] == 30

    def test_done_at_episode_end(self, env):
        env.reset(seed=1)
        flags = [env.step(np.zeros(12))[2] for _ in range(5)]
        assert flags == [False, False, False, False, True]

    def test_wrong_dimension_raises_before_sending(self, env):
        env.reset(seed=1)
        with pytest.raises(DimensionError):
            env.step(np.zeros(11))

    def test_step_before_reset_is_protocol_error(self, server_command):
        remote = RemoteEnv(command=server_command())
        try:
            with pytest.raises(ProtocolError):
                remote.step(np.zeros(12))
        finally:
            remote.close()

    def test_spec_echo(self, env):
        config = env.spec()
        assert config["node_index"] == "97851"
        assert config["episode_length"] == 5

    def test_use_after_close_raises(self, server_command):
        remote = RemoteEnv(command=server_command())
        remote.close()
        with pytest.raises(ProtocolError):
            remote.reset(seed=0)

    def test_close_is_idempotent(self, server_command):
        remote = RemoteEnv(command=server_command())
        remote.close()
        remote.close()


class TestTCPTransport:
    def test_reset_step_over_socket(self, snapshot_files):
        proc = subprocess.Popen(
            [
                sys.executable, "-m", "feesim.cli", "serve",
                "--listen", "127.0.0.1:39231",
                "--snapshot", snapshot_files[0],
                "--merchants", snapshot_files[1],
                "--node", "97851", "--episode-length", "3",
            ],
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            assert "listening" in proc.stdout.readline()
            with RemoteEnv(address="127.0.0.1:39231") as remote:
                obs = remote.reset(seed=4)
                assert obs.shape == (12,)
                _, reward, done, _ = remote.step(np.zeros(12))
                assert reward == 0 and done is False
        finally:
            proc.terminate()
            proc.wait(timeout=10)


class TestBox:
    def test_contains(self):
        box = Box(low=np.zeros(2), high=np.array([1.0, 2.0]))
        assert box.contains([0.5, 2.0])
        assert not box.contains([1.5, 0.0])
        assert not box.contains([0.5])

    def test_sample_in_bounds(self):
        box = Box(low=np.zeros(3), high=np.array([1.0, 10.0, 100.0]))
        rng = np.random.default_rng(0)
        for _ in range(50):
            assert box.contains(box.sample(rng))

    def test_invalid_bounds_rejected(self):
        with pytest.raises(ValueError):
            Box(low=np.ones(2), high=np.zeros(2))
