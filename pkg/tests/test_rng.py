import numpy as np

from chebylab.rng import stream


def test_streams_are_reproducible_and_independent():
    a = stream(3, "harness/cond_v/0").uniform(size=5)
    np.testing.assert_array_equal(a, stream(3, "harness/cond_v/0").uniform(size=5))
    assert not np.array_equal(a, stream(3, "harness/cond_v/1").uniform(size=5))
    assert not np.array_equal(a, stream(4, "harness/cond_v/0").uniform(size=5))
