"""Tests for the toy benchmark of synthetic domains, real cameras and target cameras."""

import pytest

from synth.benchmark import (
    REAL_FIRST_IDENTITY,
    TARGET_FIRST_IDENTITY,
    build_benchmark,
    derive_seed,
    read_benchmark,
    write_benchmark,
)
from synth.manifest import Origin
from utils.config import DataConfig
from utils.errors import ValidationError


@pytest.fixture(scope="module")
def data():
    """A tiny benchmark layout."""
    return DataConfig(
        identities=3,
        illuminations=2,
        samples_per_identity=1,
        height=16,
        width=16,
        real_identities=2,
        real_cameras=1,
        real_samples_per_identity=1,
        target_identities=3,
        target_cameras=2,
        target_samples_per_identity=2,
    )


@pytest.fixture(scope="module")
def benchmark(data):
    """The benchmark for seed 0."""
    return build_benchmark(data, seed=0)


def test_collection_sizes(benchmark):
    """Test the number of domains and images in each collection."""
    assert [len(m) for m in benchmark.synthetic] == [3, 3]
    assert [len(m) for m in benchmark.real] == [2]
    assert [len(m) for m in benchmark.target] == [6, 6]
    assert [m.name for m in benchmark.target] == ["target-cam0", "target-cam1"]


def test_identity_sets_disjoint(benchmark):
    """Test that synthetic, real and target identities never overlap and target cameras share theirs."""
    synthetic = set().union(*(m.identity_ids for m in benchmark.synthetic))
    real = benchmark.real[0].identity_ids
    cam0, cam1 = (m.identity_ids for m in benchmark.target)

    assert synthetic == {0, 1, 2}
    assert real == {REAL_FIRST_IDENTITY, REAL_FIRST_IDENTITY + 1}
    assert cam0 == cam1 == set(range(TARGET_FIRST_IDENTITY, TARGET_FIRST_IDENTITY + 3))


def test_domains_distinct(benchmark):
    """Test that every collection has its own domain ids and origin."""
    domains = [m.single_domain_id() for m in benchmark.synthetic + benchmark.real + benchmark.target]

    assert len(set(domains)) == len(domains)
    assert all(m.origins == {Origin.SYNTHETIC} for m in benchmark.synthetic)
    assert all(m.origins == {Origin.REAL} for m in benchmark.real + benchmark.target)


def test_no_real_cameras(data):
    """Test that real cameras can be switched off."""
    without = DataConfig(**{**data.__dict__, "real_cameras": 0})

    assert build_benchmark(without, seed=0).real == []


def test_benchmark_deterministic(data, benchmark):
    """Test that the same seed reproduces the benchmark."""
    again = build_benchmark(data, seed=0)

    assert again.synthetic == benchmark.synthetic
    assert again.target == benchmark.target


def test_write_then_read(tmp_path, benchmark):
    """Test that the written layout reads back with the catalog."""
    write_benchmark(benchmark, tmp_path)
    loaded = read_benchmark(tmp_path)

    assert loaded.synthetic == benchmark.synthetic
    assert loaded.real == benchmark.real
    assert loaded.target == benchmark.target
    assert loaded.illuminations == benchmark.illuminations


def test_read_rejects_other_directories(tmp_path):
    """Test that a directory without the benchmark layout is rejected."""
    with pytest.raises(ValidationError, match="not a benchmark directory"):
        read_benchmark(tmp_path)


def test_derive_seed():
    """Test that purposes and seeds give independent but reproducible seeds."""
    assert derive_seed(0, "identities") == derive_seed(0, "identities")
    assert derive_seed(0, "identities") != derive_seed(0, "illuminations")
    assert derive_seed(0, "identities") != derive_seed(1, "identities")
