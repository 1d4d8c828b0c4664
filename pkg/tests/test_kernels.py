import numpy as np
import pytest

from primecoupling import kernels
from primecoupling._kernels_py import smallest_prime_factors as spf_py
from primecoupling.couplings import growth_model
from primecoupling.samplers import RandomSource

needs_ext = pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")


@needs_ext
def test_spf_backends_agree():
    assert np.array_equal(kernels.compiled.smallest_prime_factors(10**5), spf_py(10**5))


@needs_ext
@pytest.mark.parametrize("n", [1, 10, 100, 1000])
def test_feller_backends_agree(n):
    a = kernels.feller_batch(RandomSource(3).generator(), 2000, n, 1000 * n, backend="cython")
    b = kernels.feller_batch(RandomSource(3).generator(), 2000, n, 1000 * n, backend="python")
    assert np.array_equal(a, b)


@needs_ext
@pytest.mark.parametrize("mode,variant", [("simulate", "kq"), ("simulate", "p"),
                                          ("exact_uniform", "kq")])
def test_grow_backends_agree(small_tables, mode, variant):
    m = growth_model(300, small_tables, mode=mode, variant=variant)
    a = m.batch(3000, RandomSource(5).generator(), backend="cython")
    b = m.batch(3000, RandomSource(5).generator(), backend="python")
    for x, y in zip((a.J, a.P0, a.N, a.indel), (b.J, b.P0, b.N, b.indel)):
        assert np.array_equal(x, y)


def test_single_trial_matches_batch(small_tables):
    m = growth_model(300, small_tables, mode="exact_uniform")
    g1 = RandomSource(11).generator()
    singles = [m.sample(g1) for _ in range(50)]
    b = m.batch(50, RandomSource(11).generator(), backend="python")
    assert [s.N for s in singles] == list(b.N)
    assert [s.indel_count for s in singles] == list(b.indel)


def test_backend_selection():
    assert kernels.get_backend("python") is kernels.pure
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
    assert kernels.BACKEND in ("cython", "python")
