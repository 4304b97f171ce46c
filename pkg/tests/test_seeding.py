import numpy as np
import pytest

from iterlearn.seeding import SEED_MASK, derive_seed, make_rng, map_ordered, worker_count


def test_pure():
    assert derive_seed(42, 3, "mc") == derive_seed(42, 3, "mc")


def test_stream_separation():
    assert derive_seed(42, 3, "mc") != derive_seed(42, 3, "mcx")
    assert derive_seed(42, 3, "linreg") != derive_seed(42, 3, "gaussian-chained")


def test_range():
    for base in (0, 1, SEED_MASK):
        assert 0 <= derive_seed(base, 0, "s") <= SEED_MASK


@pytest.mark.slow
def test_replicate_collision_scan():
    rng = np.random.default_rng(123)
    seeds = rng.integers(0, 2**63, size=10**6, dtype=np.int64).tolist()
    zero = [derive_seed(s, 0, "mc") for s in seeds]
    one = [derive_seed(s, 1, "mc") for s in seeds]
    assert all(a != b for a, b in zip(zero, one))
    assert len(set(zero) | set(one)) == 2 * len(set(seeds))


def test_avalanche():
    base = derive_seed(1000, 7, "mc")
    flips = [bin(base ^ derive_seed(1000 ^ (1 << k), 7, "mc")).count("1") for k in range(64)]
    assert 20 < np.mean(flips) < 44


def test_make_rng_reproducible():
    assert np.array_equal(make_rng(1, 2, "x").random(5), make_rng(1, 2, "x").random(5))


def test_worker_count(monkeypatch):
    monkeypatch.setenv("ITERLEARN_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("ITERLEARN_THREADS", "junk")
    assert worker_count(default=0) == 0
    monkeypatch.delenv("ITERLEARN_THREADS")
    assert worker_count() == 0


@pytest.mark.parametrize("workers", [0, 1, 4])
def test_map_ordered(workers):
    assert map_ordered(lambda x: x * x, range(20), workers) == [x * x for x in range(20)]
