"""
Tests for seeded synthesis, binary formats, PGM export and atomic writes

Run with: pytest tests/test_datagen.py -v
"""
import os
import struct
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from datagen import rng
from datagen.formats import (
    DATASET_HEADER_SIZE,
    FLAG_TEST_POOL,
    Dataset,
    decode_checkpoint,
    decode_dataset,
    encode_checkpoint,
    encode_dataset,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
    save_dataset,
)
from datagen.pgm import MAXVAL, format_pgm, side_by_side, to_gray, write_pgm
from datagen.synth import (
    default_noise_sigma,
    make_labeled,
    make_observed,
    make_test,
    sample_elements,
)
from infrastructure.errors import (
    ArchitectureMismatchError,
    BadMagicError,
    ChecksumError,
    ContractError,
    DataError,
    DimensionError,
    TruncatedFileError,
    VersionMismatchError,
)
from infrastructure.retry_utils import atomic_write_text, calculate_backoff_delay, with_retry
from model import MlpArchitecture, init
from physics import PhysicsConstants, SensorImage, render
from training.optimizer import Adam


def small_physics() -> PhysicsConstants:
    return PhysicsConstants(width=16, height=12, n_samples=64)


# =============================================================================
# Random streams
# =============================================================================

class TestRandomStreams:

    def test_same_stream_same_draws(self):
        a = rng.uniform_rows(5, "labeled", 10, 3)
        b = rng.uniform_rows(5, "labeled", 10, 3)
        assert np.array_equal(a, b)

    def test_prefix_consistent(self):
        big = rng.uniform_rows(5, "labeled", 50, 3)
        small = rng.uniform_rows(5, "labeled", 7, 3)
        assert np.array_equal(big[:7], small)

    def test_streams_and_seeds_independent(self):
        a = rng.uniform_rows(5, rng.LABELED, 4, 3)
        assert not np.array_equal(a, rng.uniform_rows(5, rng.OBSERVED, 4, 3))
        assert not np.array_equal(a, rng.uniform_rows(6, rng.LABELED, 4, 3))

    def test_key_is_two_words(self):
        key = rng.stream_key(0, "x")
        assert key.dtype == np.uint64 and key.shape == (2,)

    def test_permutation(self):
        p = rng.permutation(1, "shuffle/epoch0", 20)
        assert sorted(p.tolist()) == list(range(20))
        assert np.array_equal(p, rng.permutation(1, "shuffle/epoch0", 20))


# =============================================================================
# Synthesis
# =============================================================================

class TestSynthesis:

    def test_prior_ranges_and_mean(self):
        elements = sample_elements(0, 10_000, 0.95)
        e = np.array([x.e for x in elements])
        angles = np.array([[x.i, x.omega] for x in elements])
        assert e.min() >= 0.0 and e.max() < 0.95
        assert angles.min() >= 0.0 and angles.max() < 2 * np.pi
        assert e.mean() == pytest.approx(0.475, rel=0.02)

    def test_pools_prefix_consistent(self):
        physics = small_physics()
        big = make_observed(3, 6, physics, noise_sigma=1e-4)
        small = make_observed(3, 3, physics, noise_sigma=1e-4)
        for a, b in zip(big[:3], small):
            assert a.x_hidden == b.x_hidden
            assert np.array_equal(a.y.pixels, b.y.pixels)

    def test_pools_use_separate_namespaces(self):
        physics = small_physics()
        labeled = make_labeled(0, 2, physics)
        observed = make_observed(0, 2, physics, 0.0)
        test = make_test(0, 2, physics, 0.0)
        keys = {s.x.key() for s in labeled} | {s.x_hidden.key() for s in observed} | {s.x_hidden.key() for s in test}
        assert len(keys) == 6

    def test_labeled_is_noise_free(self):
        physics = small_physics()
        for s in make_labeled(1, 3, physics):
            assert np.array_equal(s.y.pixels, render(s.x, physics).pixels)

    def test_noise_level(self):
        physics = PhysicsConstants(width=32, height=32)
        sigma = 1e-4
        residuals = []
        for s in make_observed(2, 20, physics, noise_sigma=sigma):
            clean = render(s.x_hidden, physics).pixels
            keep = clean > 5 * sigma
            residuals.append((s.y.pixels - clean)[keep])
        residuals = np.concatenate(residuals)
        assert residuals.size > 1000
        assert residuals.std() == pytest.approx(sigma, rel=0.05)
        assert abs(residuals.mean()) < 0.1 * sigma

    def test_observations_non_negative(self):
        physics = small_physics()
        for s in make_observed(4, 3, physics, noise_sigma=1e-2):
            assert s.y.pixels.min() >= 0.0

    def test_default_noise_sigma(self):
        physics = small_physics()
        sigma = default_noise_sigma(physics)
        assert sigma > 0.0
        assert sigma == default_noise_sigma(physics)

    def test_negative_noise_rejected(self):
        with pytest.raises(ContractError):
            make_observed(0, 1, small_physics(), noise_sigma=-1.0)


# =============================================================================
# Dataset files
# =============================================================================

class TestDatasetFormat:

    def setup_method(self):
        physics = small_physics()
        self.dataset = Dataset(
            width=physics.width,
            height=physics.height,
            labeled=make_labeled(0, 3, physics),
            observed=make_observed(0, 2, physics, 1e-4),
        )
        self.raw = encode_dataset(self.dataset)

    def test_round_trip(self, tmp_path):
        path = save_dataset(str(tmp_path / "data" / "d.spnd"), self.dataset)
        loaded = load_dataset(path)
        assert (loaded.width, loaded.height, loaded.flags) == (16, 12, 0)
        assert [s.x for s in loaded.labeled] == [s.x for s in self.dataset.labeled]
        for a, b in zip(loaded.observed, self.dataset.observed):
            assert a.x_hidden == b.x_hidden
            assert np.allclose(a.y.pixels, b.y.pixels, rtol=1e-6, atol=0.0)
        print("✅ Dataset round trip (f64 parameters, f32 images)")

    def test_empty_dataset_is_header_plus_crc(self):
        raw = encode_dataset(Dataset(width=64, height=64, flags=FLAG_TEST_POOL))
        assert len(raw) == DATASET_HEADER_SIZE + 4 == 44
        assert decode_dataset(raw).flags == FLAG_TEST_POOL

    def test_truncated(self):
        with pytest.raises(TruncatedFileError):
            decode_dataset(self.raw[:20])
        with pytest.raises(TruncatedFileError):
            decode_dataset(self.raw[:-1])

    def test_bad_magic(self):
        with pytest.raises(BadMagicError):
            decode_dataset(b"XXXX" + self.raw[4:])

    def test_version(self):
        with pytest.raises(VersionMismatchError):
            decode_dataset(self.raw[:4] + struct.pack("<I", 2) + self.raw[8:])

    def test_corrupt_payload(self):
        raw = bytearray(self.raw)
        raw[DATASET_HEADER_SIZE + 5] ^= 0xFF
        with pytest.raises(ChecksumError):
            decode_dataset(bytes(raw))

    def test_trailing_bytes(self):
        with pytest.raises(DataError):
            decode_dataset(self.raw + b"\x00")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_dataset(str(tmp_path / "nope.spnd"))


# =============================================================================
# Checkpoints
# =============================================================================

class TestCheckpointFormat:

    def setup_method(self):
        self.arch = MlpArchitecture(input_dim=12, hidden_dims=[5, 4])
        self.params = init(self.arch, seed=2, e_max=0.9)

    def test_round_trip_without_state(self, tmp_path):
        path = save_checkpoint(str(tmp_path / "model.spnc"), self.params)
        params, state = load_checkpoint(path, expected_arch=self.arch)
        assert state is None
        assert params.arch == self.arch
        assert params.e_max == 0.9
        assert all(np.array_equal(a, b) for a, b in zip(params.arrays(), self.params.arrays()))

    def test_round_trip_with_state(self):
        opt = Adam(self.params.arrays())
        opt.step([np.ones_like(a) for a in self.params.arrays()])
        params, state = decode_checkpoint(encode_checkpoint(self.params, opt.state))
        assert state.step == 1
        assert all(np.array_equal(a, b) for a, b in zip(state.m, opt.state.m))
        assert all(np.array_equal(a, b) for a, b in zip(state.v, opt.state.v))
        Adam(params.arrays(), state=state)

    def test_architecture_mismatch(self):
        raw = encode_checkpoint(self.params)
        with pytest.raises(ArchitectureMismatchError):
            decode_checkpoint(raw, expected_arch=MlpArchitecture(input_dim=12, hidden_dims=[5, 5]))

    def test_checkpoint_errors(self):
        raw = encode_checkpoint(self.params)
        with pytest.raises(BadMagicError):
            decode_checkpoint(b"SPND" + raw[4:])
        with pytest.raises(TruncatedFileError):
            decode_checkpoint(raw[:-9])
        corrupt = bytearray(raw)
        corrupt[-10] ^= 0x01
        with pytest.raises(ChecksumError):
            decode_checkpoint(bytes(corrupt))


# =============================================================================
# PGM
# =============================================================================

class TestPgm:

    def test_zero_image(self):
        assert np.all(to_gray(np.zeros((3, 4))) == 0)

    def test_scaling(self):
        gray = to_gray(np.array([[0.0, 0.5], [1.0, 0.25]]))
        assert gray.tolist() == [[0, 32768], [MAXVAL, 16384]]

    def test_format(self):
        text = format_pgm(np.array([[1, 2, 3], [4, 5, 6]]))
        assert text == "P2\n3 2\n65535\n1 2 3\n4 5 6\n"

    def test_write(self, tmp_path):
        image = SensorImage(2, 1, np.array([0.0, 2.0]))
        path = write_pgm(image, str(tmp_path / "img.pgm"))
        with open(path) as f:
            assert f.read() == "P2\n2 1\n65535\n0 65535\n"

    def test_side_by_side(self, tmp_path):
        obs = SensorImage(3, 2, np.array([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]))
        recon = SensorImage(3, 2, np.array([0.0, 0.0, 0.0, 0.5, 0.0, 0.0]))
        path = side_by_side(obs, recon, str(tmp_path / "pair.pgm"))
        lines = open(path).read().splitlines()
        assert lines[1] == "8 2"
        assert lines[3].split() == ["0", "65535", "0", "65535", "65535", "0", "0", "0"]
        assert lines[4].split() == ["0", "0", "0", "65535", "65535", "32768", "0", "0"]

    def test_side_by_side_size_mismatch(self, tmp_path):
        with pytest.raises(DimensionError):
            side_by_side(SensorImage.zeros(2, 2), SensorImage.zeros(3, 2), str(tmp_path / "x.pgm"))


# =============================================================================
# Atomic writes / retry
# =============================================================================

class TestAtomicWrites:

    def test_backoff(self):
        assert calculate_backoff_delay(0, 0.05, 1.0) == 0.05
        assert calculate_backoff_delay(2, 0.05, 1.0) == 0.2
        assert calculate_backoff_delay(10, 0.05, 1.0) == 1.0

    def test_retry_then_succeed(self):
        calls = []

        @with_retry(max_retries=3, base_delay=0.0)
        def flaky():
            calls.append(1)
            if len(calls) < 3:
                raise OSError("busy")
            return "ok"

        assert flaky() == "ok"
        assert len(calls) == 3

    def test_retry_exhausted(self):
        @with_retry(max_retries=2, base_delay=0.0)
        def broken():
            raise OSError("gone")

        with pytest.raises(OSError):
            broken()

    def test_no_temporary_left_behind(self, tmp_path):
        path = atomic_write_text(str(tmp_path / "sub" / "a.txt"), "hello")
        assert open(path).read() == "hello"
        assert os.listdir(tmp_path / "sub") == ["a.txt"]
